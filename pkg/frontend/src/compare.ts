import {
  COMPONENT_FIELDS,
  type ComponentField,
  type PredictRequest,
} from "./types.js";

/** Fields whose values differ between two conjugates, in layout order.
 * Sequences and SMILES compare as trimmed strings, DAR numerically. */
export function changedComponents(
  a: PredictRequest,
  b: PredictRequest,
): ComponentField[] {
  return COMPONENT_FIELDS.filter((field) => {
    if (field === "dar") return a.dar !== b.dar;
    return String(a[field]).trim() !== String(b[field]).trim();
  });
}
