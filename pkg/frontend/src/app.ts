import { ApiClient, ApiError } from "./api.js";
import { parseCsvRecords } from "./csv.js";
import {
  renderBatchTable,
  renderComparison,
  renderModelInfo,
  renderScoreCard,
} from "./render.js";
import type { PinnedEntry, PredictRequest } from "./types.js";

function replaceChildren(host: HTMLElement, node?: HTMLElement): void {
  host.textContent = "";
  if (node) host.appendChild(node);
}

function readRequest(form: HTMLFormElement): PredictRequest {
  const value = (name: string): string => {
    const field = form.elements.namedItem(name) as
      | HTMLInputElement
      | HTMLTextAreaElement;
    return field.value;
  };
  return {
    heavy_chain: value("heavy_chain").trim(),
    light_chain: value("light_chain").trim(),
    antigen: value("antigen").trim(),
    linker_smiles: value("linker_smiles").trim(),
    payload_smiles: value("payload_smiles").trim(),
    dar: Number(value("dar")),
  };
}

export class App {
  private pins: PinnedEntry[] = [];
  private lastResult: PinnedEntry | null = null;
  private pending: Promise<void> = Promise.resolve();

  constructor(
    private doc: Document,
    private api: ApiClient,
  ) {}

  /** Wait for the most recently started request/render cycle. */
  flush(): Promise<void> {
    return this.pending;
  }

  start(): void {
    this.pending = this.loadInfo();
    this.bindForm();
    this.bindPin();
    this.bindBatch();
  }

  private byId<T extends HTMLElement>(id: string): T {
    const node = this.doc.getElementById(id);
    if (!node) throw new Error(`missing #${id} in page markup`);
    return node as T;
  }

  private async loadInfo(): Promise<void> {
    const host = this.byId<HTMLElement>("model-info");
    try {
      const info = await this.api.modelInfo();
      replaceChildren(host, renderModelInfo(info));
    } catch (err) {
      host.textContent =
        err instanceof ApiError && err.code === "model_not_loaded"
          ? "no model loaded"
          : "service unavailable";
    }
  }

  private clearFieldErrors(form: HTMLFormElement): void {
    for (const node of Array.from(form.querySelectorAll(".field-error"))) {
      node.classList.remove("field-error");
    }
    const box = this.byId<HTMLElement>("form-error");
    box.hidden = true;
    box.textContent = "";
  }

  private showError(form: HTMLFormElement, err: unknown): void {
    const box = this.byId<HTMLElement>("form-error");
    box.hidden = false;
    if (err instanceof ApiError) {
      box.textContent = err.field
        ? `${err.field}: ${err.message}`
        : err.message;
      if (err.field) {
        const input = form.elements.namedItem(err.field);
        if (input instanceof HTMLElement) input.classList.add("field-error");
      }
    } else {
      box.textContent = "request failed";
    }
  }

  private bindForm(): void {
    const form = this.byId<HTMLFormElement>("predict-form");
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      this.pending = (async () => {
        this.clearFieldErrors(form);
        const request = readRequest(form);
        const card = this.byId<HTMLElement>("score-card");
        try {
          const response = await this.api.predict(request);
          this.lastResult = { request, response };
          replaceChildren(card, renderScoreCard(response));
          this.byId<HTMLButtonElement>("pin-button").hidden = false;
        } catch (err) {
          this.lastResult = null;
          this.byId<HTMLButtonElement>("pin-button").hidden = true;
          replaceChildren(card);
          this.showError(form, err);
        }
      })();
    });
  }

  private bindPin(): void {
    this.byId<HTMLButtonElement>("pin-button").addEventListener(
      "click",
      () => {
        if (!this.lastResult) return;
        this.pins = [...this.pins, this.lastResult].slice(-2);
        this.renderPins();
      },
    );
  }

  private renderPins(): void {
    const host = this.byId<HTMLElement>("comparison");
    const hint = this.byId<HTMLElement>("compare-hint");
    if (this.pins.length < 2) {
      hint.textContent =
        this.pins.length === 0
          ? "Pin two predictions to compare them."
          : "One prediction pinned; pin a second one.";
      replaceChildren(host);
      return;
    }
    hint.textContent = "";
    replaceChildren(host, renderComparison(this.pins[0], this.pins[1]));
  }

  private bindBatch(): void {
    const input = this.byId<HTMLInputElement>("batch-file");
    input.addEventListener("change", () => {
      const file = input.files && input.files[0];
      if (!file) return;
      this.pending = (async () => {
        const host = this.byId<HTMLElement>("batch-result");
        try {
          const body = await file.text();
          const out = await this.api.predictBatch(body);
          replaceChildren(host, renderBatchTable(parseCsvRecords(out)));
        } catch (err) {
          host.textContent =
            err instanceof ApiError ? err.message : "upload failed";
        }
      })();
    });
  }
}

export function initApp(doc: Document, api: ApiClient): App {
  const app = new App(doc, api);
  app.start();
  return app;
}
