"""Result tables for experiment runs: delimited output, markdown, figures."""

from __future__ import annotations

import csv
import dataclasses
import pathlib

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .metrics import MetricReport, mean_std


@dataclasses.dataclass(frozen=True)
class ResultEntry:
    model: str
    run: str
    report: MetricReport


class ResultTable:
    """Per-(model, run) metric rows with aggregation across runs."""

    def __init__(self) -> None:
        self.entries: list[ResultEntry] = []

    def add(self, model: str, run: str, report: MetricReport) -> None:
        self.entries.append(ResultEntry(model, run, report))

    def models(self) -> list[str]:
        seen: list[str] = []
        for e in self.entries:
            if e.model not in seen:
                seen.append(e.model)
        return seen

    def runs(self, model: str) -> list[ResultEntry]:
        return [e for e in self.entries if e.model == model]

    def aggregate(self, model: str) -> dict:
        """(mean, std) per metric over this model's runs; None-valued runs
        are skipped per metric. Metrics with no defined value map to None."""
        out: dict = {}
        for name in MetricReport.FIELDS:
            values = [
                getattr(e.report, name)
                for e in self.runs(model)
                if getattr(e.report, name) is not None
            ]
            out[name] = mean_std(values) if values else None
        return out

    def write_csv(self, path) -> None:
        path = pathlib.Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model", "run", *MetricReport.FIELDS])
            for e in self.entries:
                row = [e.model, e.run]
                for name in MetricReport.FIELDS:
                    value = getattr(e.report, name)
                    row.append("" if value is None else f"{value:.6f}")
                writer.writerow(row)

    def to_markdown(self) -> str:
        header = "| model | " + " | ".join(MetricReport.FIELDS) + " |"
        rule = "|---" * (len(MetricReport.FIELDS) + 1) + "|"
        lines = [header, rule]
        for model in self.models():
            agg = self.aggregate(model)
            cells = [model]
            for name in MetricReport.FIELDS:
                pair = agg[name]
                if pair is None:
                    cells.append("n/a")
                else:
                    mean, std = pair
                    cells.append(f"{mean:.3f} ± {std:.3f}")
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"

    def write_markdown(self, path) -> None:
        pathlib.Path(path).write_text(self.to_markdown())


#: Metrics drawn in the default comparison figure.
FIGURE_METRICS = ("acc", "ba", "mcc", "auc")


def render_metric_bars(table: ResultTable, path, metrics=FIGURE_METRICS) -> None:
    """Grouped bar chart of aggregated metrics, one group per model,
    std across runs as error bars."""
    models = table.models()
    if not models:
        raise ValueError("empty result table")
    fig, ax = plt.subplots(figsize=(1.8 + 1.4 * len(models), 4.0))
    width = 0.8 / len(metrics)
    for j, name in enumerate(metrics):
        xs, means, stds = [], [], []
        for i, model in enumerate(models):
            pair = table.aggregate(model).get(name)
            if pair is None:
                continue
            xs.append(i + (j - (len(metrics) - 1) / 2) * width)
            means.append(pair[0])
            stds.append(pair[1])
        if xs:
            ax.bar(xs, means, width=width, yerr=stds, capsize=3, label=name)
    ax.set_xticks(range(len(models)))
    ax.set_xticklabels(models, rotation=20, ha="right")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_history(history, path) -> None:
    """Training-loss and validation-AUC curves for one run."""
    if not history:
        raise ValueError("empty history")
    epochs = [row["epoch"] for row in history]
    losses = [row["train_loss"] for row in history]
    aucs = [row["val_auc"] for row in history]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(epochs, losses, color="tab:red", label="train loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss", color="tab:red")
    twin = ax.twinx()
    twin.plot(epochs, aucs, color="tab:blue", label="val AUC")
    twin.set_ylabel("val AUC", color="tab:blue")
    twin.set_ylim(0.0, 1.05)
    best = [row["epoch"] for row in history if row.get("is_best")]
    if best:
        twin.axvline(best[-1], color="tab:blue", linestyle=":", linewidth=1)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
