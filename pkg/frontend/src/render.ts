import { changedComponents } from "./compare.js";
import {
  COMPONENT_FIELDS,
  type ModelInfo,
  type PinnedEntry,
  type PredictResponse,
} from "./types.js";

const FIELD_TITLES: Record<string, string> = {
  heavy_chain: "Heavy chain",
  light_chain: "Light chain",
  antigen: "Antigen",
  linker_smiles: "Linker SMILES",
  payload_smiles: "Payload SMILES",
  dar: "DAR",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function truncate(value: string, max = 28): string {
  const v = value.trim();
  return v.length <= max ? v : v.slice(0, max - 1) + "…";
}

export function renderModelInfo(info: ModelInfo): HTMLElement {
  const auc = info.metrics.best_val_auc;
  const parts = [
    `model ${info.version}`,
    `${info.components.join(" + ")} → ${info.input_dim} features`,
    auc === null ? "val AUC n/a" : `val AUC ${auc.toFixed(3)}`,
  ];
  return el("span", "model-info", parts.join(" · "));
}

export function renderScoreCard(resp: PredictResponse): HTMLElement {
  const card = el("div", "card score-card");
  card.appendChild(el("div", "score", resp.score.toFixed(4)));
  card.appendChild(
    el("div", `label ${resp.label.toLowerCase()}`, resp.label),
  );
  card.appendChild(el("div", "version", resp.model_version));
  if (resp.warnings.length > 0) {
    const list = el("ul", "warnings");
    for (const w of resp.warnings) list.appendChild(el("li", undefined, w));
    card.appendChild(list);
  }
  return card;
}

const BATCH_DISPLAY_COLUMNS = ["id", "score", "label", "error"];

export function renderBatchTable(rows: Record<string, string>[]): HTMLElement {
  const table = el("table", "batch-table");
  const thead = el("thead");
  const headRow = el("tr");
  for (const name of BATCH_DISPLAY_COLUMNS) {
    headRow.appendChild(el("th", undefined, name));
  }
  thead.appendChild(headRow);
  table.appendChild(thead);

  const tbody = el("tbody");
  for (const row of rows) {
    const tr = el("tr", row["error"] ? "row-error" : undefined);
    for (const name of BATCH_DISPLAY_COLUMNS) {
      tr.appendChild(el("td", `col-${name}`, row[name] ?? ""));
    }
    tbody.appendChild(tr);
  }
  table.appendChild(tbody);
  return table;
}

/** Side-by-side view of two pinned predictions; rows for components
 * whose content differs carry the `changed` class, all others do not. */
export function renderComparison(a: PinnedEntry, b: PinnedEntry): HTMLElement {
  const changed = new Set<string>(changedComponents(a.request, b.request));
  const panel = el("div", "comparison-panel");
  panel.appendChild(
    el(
      "p",
      "diff-summary",
      changed.size === 0
        ? "identical conjugates"
        : `${changed.size} component${changed.size === 1 ? "" : "s"} differ`,
    ),
  );

  const table = el("table", "comparison-table");
  const head = el("tr");
  head.appendChild(el("th", undefined, "component"));
  head.appendChild(el("th", undefined, "A"));
  head.appendChild(el("th", undefined, "B"));
  const thead = el("thead");
  thead.appendChild(head);
  table.appendChild(thead);

  const tbody = el("tbody");
  for (const field of COMPONENT_FIELDS) {
    const tr = el("tr", changed.has(field) ? "changed" : undefined);
    tr.dataset.field = field;
    tr.appendChild(el("th", undefined, FIELD_TITLES[field]));
    tr.appendChild(el("td", undefined, truncate(String(a.request[field]))));
    tr.appendChild(el("td", undefined, truncate(String(b.request[field]))));
    tbody.appendChild(tr);
  }
  const scoreRow = el("tr", "scores");
  scoreRow.appendChild(el("th", undefined, "score"));
  scoreRow.appendChild(el("td", undefined, a.response.score.toFixed(4)));
  scoreRow.appendChild(el("td", undefined, b.response.score.toFixed(4)));
  tbody.appendChild(scoreRow);
  table.appendChild(tbody);
  panel.appendChild(table);
  return panel;
}
