/** Wire types for the prediction service. */

export interface PredictRequest {
  heavy_chain: string;
  light_chain: string;
  antigen: string;
  linker_smiles: string;
  payload_smiles: string;
  dar: number;
}

export interface PredictResponse {
  score: number;
  label: string;
  model_version: string;
  warnings: string[];
}

export interface ModelInfo {
  version: string;
  input_dim: number;
  hidden_dim: number;
  trained_at: string | null;
  components: string[];
  metrics: { best_val_auc: number | null; epochs: number };
}

export interface ErrorEnvelope {
  code: string;
  field: string | null;
  message: string;
}

/** A prediction the user pinned for side-by-side comparison. */
export interface PinnedEntry {
  request: PredictRequest;
  response: PredictResponse;
}

export const COMPONENT_FIELDS = [
  "heavy_chain",
  "light_chain",
  "antigen",
  "linker_smiles",
  "payload_smiles",
  "dar",
] as const;

export type ComponentField = (typeof COMPONENT_FIELDS)[number];
