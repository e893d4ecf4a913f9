"""Evaluation drivers: multi-seed benchmark, k-fold cross-validation,
component ablations, fingerprint baselines, and external-set scoring.

Every driver is deterministic given its plan: splits, fold assignment,
weight init, shuffling, and bootstrap draws all derive from plan seeds.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import pathlib

import numpy as np

from .baselines import LogisticRegressionGD, RandomForest
from .chem import (
    NonPositiveScore,
    ecfp4,
    harmonic_mean_similarity,
    maccs_fingerprint,
    morgan_fingerprint,
    parse_smiles,
    sequence_identity,
    tanimoto,
)
from .curation import AdcRecord, Label, LabeledAdc, TooFewRecords, read_dataset, split_dataset
from .embeddings import (
    COMPONENT_TAGS,
    DarScaler,
    EmbeddingKind,
    EmbeddingStore,
    MissingEmbedding,
    _check_ablation,
    fallback_featurizer,
    fit_dar_scaler,
    fuse,
    load_store,
    scale_dar,
)
from .errors import AdcpredError
from .metrics import MetricReport, score_report
from .model import ArrayDataset, Checkpoint, TrainConfig, forward_batch, train
from .checkpoint import save_checkpoint
from .report import ResultTable, render_history, render_metric_bars


class PlanError(AdcpredError):
    """Invalid or inconsistent experiment plan."""


#: Variant list mirroring the component ablation study: the full model,
#: then each fusion input removed in turn (both antibody chains together).
DEFAULT_ABLATIONS: tuple[frozenset, ...] = (
    frozenset(),
    frozenset({"antigen"}),
    frozenset({"heavy", "light"}),
    frozenset({"linker"}),
    frozenset({"payload"}),
    frozenset({"dar"}),
)

BASELINE_KINDS = ("lr", "rf")

FINGERPRINT_KINDS = ("ecfp4", "maccs", "morgan")


def _check_ablation_set(ablation) -> frozenset:
    tags = frozenset(ablation)
    _check_ablation(tags)
    if ("heavy" in tags) != ("light" in tags):
        raise PlanError("heavy and light chains must be ablated together")
    return tags


@dataclasses.dataclass
class ExperimentPlan:
    """Declarative description of one evaluation campaign."""

    dataset: str
    embeddings: str | None = None
    use_fallback_features: bool = False
    seeds: tuple = (0, 1, 2)
    cutoff_nM: float = 100.0
    ablations: tuple = DEFAULT_ABLATIONS
    baselines: tuple = ()
    fingerprint: str = "ecfp4"
    k_folds: int | None = None
    train: TrainConfig = dataclasses.field(default_factory=TrainConfig)

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise PlanError("seeds must be non-empty")
        self.ablations = tuple(_check_ablation_set(a) for a in self.ablations)
        self.baselines = tuple(str(b).lower() for b in self.baselines)
        for b in self.baselines:
            if b not in BASELINE_KINDS:
                raise PlanError(f"unknown baseline kind {b!r}")
        if self.fingerprint not in FINGERPRINT_KINDS:
            raise PlanError(f"unknown fingerprint kind {self.fingerprint!r}")
        if self.k_folds is not None and self.k_folds < 2:
            raise PlanError("k_folds must be >= 2")
        if not (self.cutoff_nM > 0 and math.isfinite(self.cutoff_nM)):
            raise PlanError("cutoff_nM must be positive and finite")

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "embeddings": self.embeddings,
            "use_fallback_features": self.use_fallback_features,
            "seeds": list(self.seeds),
            "cutoff_nM": self.cutoff_nM,
            "ablations": [sorted(a) for a in self.ablations],
            "baselines": list(self.baselines),
            "fingerprint": self.fingerprint,
            "k_folds": self.k_folds,
            "train": self.train.as_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise PlanError(f"unknown plan fields: {sorted(unknown)}")
        if "dataset" not in d:
            raise PlanError("plan requires a dataset path")
        kwargs = dict(d)
        if "train" in kwargs and isinstance(kwargs["train"], dict):
            try:
                kwargs["train"] = TrainConfig(**kwargs["train"])
            except (TypeError, ValueError) as exc:
                raise PlanError(f"bad train config: {exc}") from None
        return cls(**kwargs)


def load_plan(path) -> ExperimentPlan:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise PlanError(f"cannot read plan {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise PlanError("plan file must hold a JSON object")
    return ExperimentPlan.from_dict(raw)


def save_plan(plan: ExperimentPlan, path) -> None:
    pathlib.Path(path).write_text(json.dumps(plan.to_dict(), indent=2) + "\n")


# ---------------------------------------------------------------------------
# Feature assembly

_KIND_BY_TAG = {
    "linker": EmbeddingKind.MOLECULE,
    "payload": EmbeddingKind.MOLECULE,
    "heavy": EmbeddingKind.PROTEIN,
    "light": EmbeddingKind.PROTEIN,
    "antigen": EmbeddingKind.PROTEIN,
}

_FIELD_BY_TAG = {
    "linker": "linker_smiles",
    "payload": "payload_smiles",
    "heavy": "heavy_chain",
    "light": "light_chain",
    "antigen": "antigen",
}


def component_vector(record: AdcRecord, tag: str, store: EmbeddingStore | None,
                     use_fallback: bool = False) -> np.ndarray:
    """Embedding for one content component of one record."""
    kind = _KIND_BY_TAG[tag]
    content = getattr(record, _FIELD_BY_TAG[tag])
    if use_fallback:
        return fallback_featurizer(kind, content)
    if store is None:
        raise MissingEmbedding(
            f"record {record.id}: no store given for {tag} (enable fallback features?)"
        )
    try:
        return store.vector(kind, content)
    except MissingEmbedding:
        raise MissingEmbedding(f"record {record.id}: missing {tag} embedding") from None


def collect_components(records, store: EmbeddingStore | None,
                       use_fallback: bool = False) -> list:
    """Per-record tag -> vector maps for the five content components."""
    out = []
    for record in records:
        out.append({
            tag: component_vector(record, tag, store, use_fallback)
            for tag in _KIND_BY_TAG
        })
    return out


def fuse_matrix(components: list, dars, scaler: DarScaler,
                ablation=frozenset()) -> tuple[np.ndarray, tuple]:
    """Stack fused per-record vectors; returns (matrix, component layout)."""
    rows = []
    layout = ()
    for vecs, dar in zip(components, dars):
        fused = fuse(
            vecs["linker"], vecs["payload"], vecs["heavy"], vecs["light"],
            vecs["antigen"], scale_dar(scaler, dar), ablation=ablation,
        )
        rows.append(fused.x)
        layout = fused.layout
    return np.stack(rows), layout


def _labels_array(items) -> np.ndarray:
    return np.array(
        [1.0 if it.label is Label.POSITIVE else 0.0 for it in items],
        dtype=np.float64,
    )


def _load_assets(plan: ExperimentPlan):
    items = read_dataset(plan.dataset)
    store = None
    if plan.embeddings and not plan.use_fallback_features:
        store = load_store(plan.embeddings)
    components = collect_components(
        [it.record for it in items], store, plan.use_fallback_features
    )
    dars = [it.record.dar for it in items]
    return items, components, dars, _labels_array(items)


# ---------------------------------------------------------------------------
# Split bookkeeping

def split_hash(split) -> str:
    payload = json.dumps(
        {"train": split.train, "val": split.val, "test": split.test},
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def _persist_split(out_dir: pathlib.Path, split) -> None:
    """Write splits/<seed>.json; if present already (another model in the
    same campaign), require the identical index assignment."""
    digest = split_hash(split)
    path = out_dir / "splits" / f"{split.seed}.json"
    if path.exists():
        existing = json.loads(path.read_text())
        if existing.get("sha256") != digest:
            raise PlanError(
                f"split mismatch for seed {split.seed}: models in one campaign "
                "must share splits"
            )
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({
        "seed": split.seed,
        "train": split.train,
        "val": split.val,
        "test": split.test,
        "sha256": digest,
    }, indent=2) + "\n")


def _prepare_out(out_dir) -> pathlib.Path | None:
    if out_dir is None:
        return None
    out = pathlib.Path(out_dir)
    (out / "figures").mkdir(parents=True, exist_ok=True)
    return out


def _finish_table(table: ResultTable, out: pathlib.Path | None) -> None:
    if out is None:
        return
    table.write_csv(out / "results.csv")
    table.write_markdown(out / "results.md")
    render_metric_bars(table, out / "figures" / "metrics.png")


# ---------------------------------------------------------------------------
# Drivers

def _train_on_split(components, dars, labels, split, config: TrainConfig,
                    ablation=frozenset()):
    """Fit scaler on the training rows, fuse, train, score the test rows."""
    scaler = fit_dar_scaler([dars[i] for i in split.train])
    x, layout = fuse_matrix(components, dars, scaler, ablation)
    train_set = ArrayDataset(x[split.train], labels[split.train])
    val_set = ArrayDataset(x[split.val], labels[split.val])
    ckpt, history = train(train_set, val_set, config, layout=layout,
                          dar_scaler=scaler)
    scores = forward_batch(ckpt.model, x[split.test])
    report = score_report(scores, labels[split.test])
    return ckpt, history, report


def run_benchmark(plan: ExperimentPlan, out_dir=None,
                  model_name: str = "adcnet") -> ResultTable:
    """Train/evaluate once per seed on fresh 8:1:1 splits; aggregate."""
    items, components, dars, labels = _load_assets(plan)
    out = _prepare_out(out_dir)
    table = ResultTable()
    for seed in plan.seeds:
        split = split_dataset(len(items), seed)
        config = dataclasses.replace(plan.train, seed=seed)
        ckpt, history, report = _train_on_split(
            components, dars, labels, split, config
        )
        run = f"seed{seed}"
        table.add(model_name, run, report)
        if out is not None:
            _persist_split(out, split)
            (out / "checkpoints").mkdir(exist_ok=True)
            save_checkpoint(ckpt, out / "checkpoints" / f"{model_name}-{run}.adcn")
            render_history(history, out / "figures" / f"history-{model_name}-{run}.png")
    _finish_table(table, out)
    return table


def shuffle_labels(items, seed: int) -> list:
    """Label-permuted copy of a dataset (negative-control runs)."""
    perm = np.random.default_rng(seed).permutation(len(items))
    return [
        LabeledAdc(record=items[i].record, label=items[int(j)].label)
        for i, j in enumerate(perm)
    ]


def variant_name(ablation) -> str:
    if not ablation:
        return "full"
    if ablation == frozenset({"heavy", "light"}):
        return "wo-antibody"
    return "wo-" + "+".join(sorted(ablation))


def run_ablations(plan: ExperimentPlan, out_dir=None,
                  include_control: bool = False) -> ResultTable:
    """One model per fusion variant under identical seeds, splits, and
    config; optionally a label-shuffled control of the full model."""
    if not plan.ablations:
        raise PlanError("ablation list must be non-empty")
    items, components, dars, labels = _load_assets(plan)
    out = _prepare_out(out_dir)
    table = ResultTable()
    variants = [(variant_name(a), a, labels) for a in plan.ablations]
    if include_control:
        shuffled = _labels_array(shuffle_labels(items, plan.seeds[0]))
        variants.append(("shuffled-control", frozenset(), shuffled))
    for name, ablation, y in variants:
        for seed in plan.seeds:
            split = split_dataset(len(items), seed)
            config = dataclasses.replace(plan.train, seed=seed)
            ckpt, history, report = _train_on_split(
                components, dars, y, split, config, ablation
            )
            run = f"seed{seed}"
            table.add(name, run, report)
            if out is not None:
                _persist_split(out, split)
                (out / "checkpoints").mkdir(exist_ok=True)
                save_checkpoint(ckpt, out / "checkpoints" / f"{name}-{run}.adcn")
    _finish_table(table, out)
    return table


def fold_assignment(n: int, k: int, seed: int) -> list:
    """Seeded partition into k folds with sizes differing by at most 1."""
    if k < 2:
        raise PlanError("k_folds must be >= 2")
    if n < k:
        raise TooFewRecords(f"cannot make {k} folds from {n} records")
    perm = np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, k)
    folds, start = [], 0
    for f in range(k):
        size = base + (1 if f < extra else 0)
        folds.append([int(i) for i in perm[start : start + size]])
        start += size
    return folds


def cross_validate(plan: ExperimentPlan, out_dir=None,
                   model_name: str = "adcnet-cv") -> ResultTable:
    """k-fold protocol: each fold once as the held-out evaluation split;
    early stopping monitors a seeded 10% carve-out of the training folds."""
    if plan.k_folds is None:
        raise PlanError("plan has no k_folds set")
    items, components, dars, labels = _load_assets(plan)
    k = plan.k_folds
    seed = plan.seeds[0]
    folds = fold_assignment(len(items), k, seed)
    out = _prepare_out(out_dir)
    table = ResultTable()
    for f, test_idx in enumerate(folds):
        rest = [i for g, fold in enumerate(folds) if g != f for i in fold]
        carve_rng = np.random.default_rng((seed, f))
        carve_perm = carve_rng.permutation(len(rest))
        n_val = max(1, int(math.floor(0.1 * len(rest))))
        val_idx = [rest[int(i)] for i in carve_perm[:n_val]]
        train_idx = [rest[int(i)] for i in carve_perm[n_val:]]

        scaler = fit_dar_scaler([dars[i] for i in train_idx])
        x, layout = fuse_matrix(components, dars, scaler)
        config = dataclasses.replace(plan.train, seed=seed)
        train_set = ArrayDataset(x[train_idx], labels[train_idx])
        val_set = ArrayDataset(x[val_idx], labels[val_idx])
        ckpt, history = train(train_set, val_set, config, layout=layout,
                              dar_scaler=scaler)
        scores = forward_batch(ckpt.model, x[test_idx])
        report = score_report(scores, labels[test_idx])
        run = f"fold{f}"
        table.add(model_name, run, report)
        if out is not None:
            (out / "checkpoints").mkdir(exist_ok=True)
            save_checkpoint(ckpt, out / "checkpoints" / f"{model_name}-{run}.adcn")
            render_history(history, out / "figures" / f"history-{model_name}-{run}.png")
    if out is not None:
        (out / "splits").mkdir(exist_ok=True)
        (out / "splits" / "folds.json").write_text(json.dumps({
            "seed": seed, "k": k, "folds": folds,
        }, indent=2) + "\n")
    _finish_table(table, out)
    return table


# ---------------------------------------------------------------------------
# Fingerprint baselines

_FP_BY_NAME = {
    "ecfp4": ecfp4,
    "maccs": maccs_fingerprint,
    "morgan": morgan_fingerprint,
}


def _fingerprint_array(smiles: str, fingerprint: str, cache: dict) -> np.ndarray:
    key = (fingerprint, smiles)
    hit = cache.get(key)
    if hit is not None:
        return hit
    fp = _FP_BY_NAME[fingerprint](parse_smiles(smiles))
    vec = np.zeros(fp.kind.length, dtype=np.float64)
    for i in fp.indices():
        vec[i] = 1.0
    cache[key] = vec
    return vec


def baseline_features(records, components, dars, scaler: DarScaler,
                      fingerprint: str, cache: dict | None = None) -> np.ndarray:
    """fp(linker) + fp(payload) + the three protein embeddings + scaled DAR."""
    if cache is None:
        cache = {}
    rows = []
    for record, vecs, dar in zip(records, components, dars):
        rows.append(np.concatenate([
            _fingerprint_array(record.linker_smiles, fingerprint, cache),
            _fingerprint_array(record.payload_smiles, fingerprint, cache),
            vecs["heavy"], vecs["light"], vecs["antigen"],
            [scale_dar(scaler, dar)],
        ]))
    return np.stack(rows)


def run_baseline(kind: str, plan: ExperimentPlan, fingerprint: str | None = None,
                 out_dir=None) -> ResultTable:
    """LR or RF on fingerprint+embedding features, same splits as the MLP."""
    kind = kind.lower()
    if kind not in BASELINE_KINDS:
        raise PlanError(f"unknown baseline kind {kind!r}")
    fingerprint = fingerprint or plan.fingerprint
    if fingerprint not in FINGERPRINT_KINDS:
        raise PlanError(f"unknown fingerprint kind {fingerprint!r}")
    items, components, dars, labels = _load_assets(plan)
    records = [it.record for it in items]
    out = _prepare_out(out_dir)
    table = ResultTable()
    name = f"{kind}-{fingerprint}"
    cache: dict = {}
    for seed in plan.seeds:
        split = split_dataset(len(items), seed)
        scaler = fit_dar_scaler([dars[i] for i in split.train])
        x = baseline_features(records, components, dars, scaler, fingerprint, cache)
        if kind == "lr":
            clf = LogisticRegressionGD()
        else:
            clf = RandomForest(seed=seed)
        clf.fit(x[split.train], labels[split.train])
        scores = clf.predict_proba(x[split.test])
        report = score_report(scores, labels[split.test])
        table.add(name, f"seed{seed}", report)
        if out is not None:
            _persist_split(out, split)
    _finish_table(table, out)
    return table


# ---------------------------------------------------------------------------
# External-set scoring

@dataclasses.dataclass(frozen=True)
class ExternalScore:
    record_id: str
    score: float
    label: Label
    similarity: float


def _max_seq_identity(content: str, pool) -> float:
    return max(sequence_identity(content, other) for other in pool)


def _max_tanimoto(smiles: str, pool_fps, cache: dict):
    fp = cache.get(smiles)
    if fp is None:
        fp = ecfp4(parse_smiles(smiles))
        cache[smiles] = fp
    return max(tanimoto(fp, other) for other in pool_fps)


def score_external(external, reference, checkpoint: Checkpoint,
                   store: EmbeddingStore | None = None,
                   use_fallback: bool = False, out_path=None) -> list:
    """Score unseen records and report how close each sits to the corpus.

    Similarity is the harmonic mean of the five per-component maxima
    against the reference: sequence identity for the proteins, best
    2048-bit circular-fingerprint Tanimoto for linker and payload. Any
    fully novel component (max 0) drives the harmonic mean to 0.
    """
    if checkpoint.dar_scaler is None:
        raise PlanError("checkpoint carries no DAR scaler")
    if checkpoint.layout is None:
        raise PlanError("checkpoint carries no component layout")
    ablation = frozenset(COMPONENT_TAGS) - {tag for tag, _, _ in checkpoint.layout}

    ref_records = [it.record for it in reference]
    pools = {
        tag: [getattr(r, _FIELD_BY_TAG[tag]) for r in ref_records]
        for tag in ("heavy", "light", "antigen")
    }
    fp_cache: dict = {}
    ref_fps = {
        tag: [
            fp_cache.setdefault(s, ecfp4(parse_smiles(s)))
            for s in (getattr(r, _FIELD_BY_TAG[tag]) for r in ref_records)
        ]
        for tag in ("linker", "payload")
    }

    results = []
    for record in external:
        vecs = {
            tag: component_vector(record, tag, store, use_fallback)
            for tag in _KIND_BY_TAG
        }
        fused = fuse(
            vecs["linker"], vecs["payload"], vecs["heavy"], vecs["light"],
            vecs["antigen"], scale_dar(checkpoint.dar_scaler, record.dar),
            ablation=ablation,
        )
        score = float(forward_batch(checkpoint.model, fused.x[None, :])[0])
        label = Label.POSITIVE if score >= 0.5 else Label.NEGATIVE

        sims = [
            _max_seq_identity(record.heavy_chain, pools["heavy"]),
            _max_seq_identity(record.light_chain, pools["light"]),
            _max_seq_identity(record.antigen, pools["antigen"]),
            _max_tanimoto(record.linker_smiles, ref_fps["linker"], fp_cache),
            _max_tanimoto(record.payload_smiles, ref_fps["payload"], fp_cache),
        ]
        try:
            similarity = harmonic_mean_similarity(sims)
        except NonPositiveScore:
            similarity = 0.0
        results.append(ExternalScore(record.id, score, label, similarity))

    if out_path is not None:
        with open(out_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "score", "label", "similarity"])
            for r in results:
                writer.writerow([
                    r.record_id, f"{r.score:.6f}", r.label.value,
                    f"{r.similarity:.6f}",
                ])
    return results
