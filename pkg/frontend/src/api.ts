import type {
  ErrorEnvelope,
  ModelInfo,
  PredictRequest,
  PredictResponse,
} from "./types.js";

/** Service-side rejection, carrying the field the error is scoped to. */
export class ApiError extends Error {
  code: string;
  field: string | null;
  status: number;

  constructor(status: number, envelope: ErrorEnvelope) {
    super(envelope.message);
    this.status = status;
    this.code = envelope.code;
    this.field = envelope.field;
  }
}

async function raiseEnvelope(resp: Response): Promise<never> {
  let envelope: ErrorEnvelope = {
    code: "http_error",
    field: null,
    message: `unexpected status ${resp.status}`,
  };
  try {
    const body = await resp.json();
    if (body && typeof body === "object" && "error" in body) {
      envelope = body.error as ErrorEnvelope;
    }
  } catch {
    // non-JSON body; keep the generic envelope
  }
  throw new ApiError(resp.status, envelope);
}

export class ApiClient {
  constructor(private base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  async health(): Promise<boolean> {
    const resp = await fetch(this.url("/api/health"));
    return resp.ok;
  }

  async modelInfo(): Promise<ModelInfo> {
    const resp = await fetch(this.url("/api/model/info"));
    if (!resp.ok) await raiseEnvelope(resp);
    return (await resp.json()) as ModelInfo;
  }

  async predict(req: PredictRequest): Promise<PredictResponse> {
    const resp = await fetch(this.url("/api/predict"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
    if (!resp.ok) await raiseEnvelope(resp);
    return (await resp.json()) as PredictResponse;
  }

  /** Upload a CSV body; the response echoes every input column and
   * appends score, label, and a per-row error column. */
  async predictBatch(csvText: string): Promise<string> {
    const resp = await fetch(this.url("/api/predict/batch"), {
      method: "POST",
      headers: { "Content-Type": "text/csv" },
      body: csvText,
    });
    if (!resp.ok) await raiseEnvelope(resp);
    return await resp.text();
  }
}
