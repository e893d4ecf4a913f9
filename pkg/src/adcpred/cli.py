"""Command-line entry point wiring the pipeline end to end.

Exit codes: 0 success, 1 domain error, 2 usage error. Diagnostics go to
standard error; data goes to files or standard output.
"""

from __future__ import annotations

import dataclasses
import json
import pathlib
import sys

import click

from . import __version__
from .checkpoint import FORMAT_VERSION, load_checkpoint
from .chem import (
    ecfp4,
    maccs_fingerprint,
    molecular_weight,
    morgan_fingerprint,
    murcko_scaffold,
    parse_smiles,
)
from .curation import (
    AdcRecord,
    CurationReport,
    Label,
    curate,
    read_dataset,
    read_records_csv,
    split_dataset,
    write_dataset,
)
from .embeddings import COMPONENT_TAGS, EmbeddingStore, load_store, merge_into
from .errors import AdcpredError
from .experiments import (
    ExperimentPlan,
    collect_components,
    cross_validate,
    fuse_matrix,
    load_plan,
    run_ablations,
    run_baseline,
    run_benchmark,
    score_external,
)
from .metrics import score_report
from .model import (
    ArrayDataset,
    SEARCH_SPACE_DEFAULT,
    forward_batch,
    hyperparameter_search,
)
from .service import (
    BATCH_COLUMNS,
    ModelRuntime,
    PredictRequest,
    ServiceConfig,
    load_service_config,
    predict_one,
    run_server,
    runtime_from_files,
)

_FP_FUNCS = {"ecfp4": ecfp4, "maccs": maccs_fingerprint, "morgan": morgan_fingerprint}


def _require_file(path: str, flag: str) -> pathlib.Path:
    p = pathlib.Path(path)
    if not p.is_file():
        raise click.UsageError(f"{flag}: {path} does not exist; pass an existing file")
    return p


def _labels_array(items):
    import numpy as np

    return np.array([1.0 if it.label is Label.POSITIVE else 0.0 for it in items])


def _runtime_from_flags(checkpoint: str, embeddings: str | None,
                        fallback: bool) -> ModelRuntime:
    _require_file(checkpoint, "--checkpoint")
    store = None
    if embeddings:
        _require_file(embeddings, "--embeddings")
        store = load_store(embeddings)
    providers = {}
    if fallback:
        providers = {"protein": "fallback", "molecule": "fallback"}
    return runtime_from_files(checkpoint, store, providers)


@click.group()
@click.version_option(
    __version__, message=f"%(prog)s %(version)s (checkpoint format v{FORMAT_VERSION})"
)
def cli():
    """Activity prediction for antibody-drug conjugates."""


def main():
    try:
        cli(standalone_mode=True)
    except AdcpredError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


# ---------------------------------------------------------------------------
# Data preparation

@cli.command("curate")
@click.option("--in", "in_path", required=True, help="raw measurement CSV")
@click.option("--out", "out_path", required=True, help="curated JSONL dataset")
@click.option("--cutoff-nm", default=100.0, show_default=True,
              help="activity cutoff in nM (1000 for the relaxed labeling)")
@click.option("--report", "report_path", default=None, help="drop log JSON")
def curate_cmd(in_path, out_path, cutoff_nm, report_path):
    """Filter, dedup, and label a raw export."""
    _require_file(in_path, "--in")
    report = CurationReport()
    raw = read_records_csv(in_path, report)
    items = curate(raw, cutoff_nM=cutoff_nm, report=report)
    write_dataset(items, out_path)
    if report_path:
        pathlib.Path(report_path).write_text(json.dumps({
            "kept": report.kept,
            "drops": [{"id": rid, "reason": reason} for rid, reason in report.drops],
            "notes": report.notes,
        }, indent=2) + "\n")
    click.echo(f"kept {report.kept}, dropped {len(report.drops)}", err=True)


@cli.command()
@click.option("--in", "in_path", default=None,
              help="file with one SMILES per line (default: read arguments)")
@click.option("--kind", type=click.Choice(sorted(_FP_FUNCS)), default="ecfp4",
              show_default=True)
@click.option("--out", "out_path", default=None, help="JSONL output (default stdout)")
@click.argument("smiles", nargs=-1)
def featurize(in_path, kind, out_path, smiles):
    """Fingerprint small molecules and report weight and scaffold size."""
    inputs = list(smiles)
    if in_path:
        _require_file(in_path, "--in")
        with open(in_path, encoding="utf-8") as fh:
            inputs.extend(line.strip() for line in fh if line.strip())
    if not inputs:
        raise click.UsageError("no SMILES given; pass arguments or --in FILE")
    rows = []
    for text in inputs:
        graph = parse_smiles(text)
        fp = _FP_FUNCS[kind](graph)
        scaffold = murcko_scaffold(graph)
        rows.append({
            "smiles": text,
            "kind": fp.kind.value,
            "bits": fp.to_hex(),
            "popcount": fp.popcount(),
            "mol_weight": round(molecular_weight(graph), 4),
            "scaffold_atoms": len(scaffold.atoms),
            "scaffold_rings": len(scaffold.rings),
        })
    payload = "".join(json.dumps(r) + "\n" for r in rows)
    if out_path:
        pathlib.Path(out_path).write_text(payload)
    else:
        click.echo(payload, nl=False)


@cli.command("embed-import")
@click.option("--store", "store_path", required=True,
              help="store file to create or extend")
@click.argument("inputs", nargs=-1, required=True)
def embed_import(store_path, inputs):
    """Merge embedding JSONL files into a store."""
    store = EmbeddingStore()
    if pathlib.Path(store_path).is_file():
        store = load_store(store_path)
    before = len(store)
    for path in inputs:
        _require_file(path, "INPUTS")
        merge_into(store, path)
    store.save(store_path)
    click.echo(f"{len(store)} embeddings ({len(store) - before} new)", err=True)


# ---------------------------------------------------------------------------
# Training and evaluation

def _plan_from(plan_path) -> ExperimentPlan:
    _require_file(plan_path, "--plan")
    return load_plan(plan_path)


@cli.command()
@click.option("--plan", "plan_path", required=True, help="experiment plan JSON")
@click.option("--out", "out_path", required=True, help="output directory")
def train(plan_path, out_path):
    """Multi-seed train/evaluate run; writes results, splits, checkpoints."""
    table = run_benchmark(_plan_from(plan_path), out_dir=out_path)
    click.echo(table.to_markdown(), nl=False)


@cli.command()
@click.option("--checkpoint", required=True)
@click.option("--dataset", required=True, help="curated JSONL dataset")
@click.option("--embeddings", default=None)
@click.option("--fallback", is_flag=True, help="use the deterministic pseudo-embedder")
@click.option("--seed", default=0, show_default=True,
              help="split seed; scores the held-out test part")
@click.option("--full", is_flag=True, help="score every record instead of a split")
def evaluate(checkpoint, dataset, embeddings, fallback, seed, full):
    """Score a dataset with a trained checkpoint and print metrics JSON."""
    _require_file(checkpoint, "--checkpoint")
    _require_file(dataset, "--dataset")
    ckpt = load_checkpoint(checkpoint)
    if ckpt.dar_scaler is None or ckpt.layout is None:
        raise AdcpredError("checkpoint lacks scaler or layout")
    store = None
    if embeddings:
        _require_file(embeddings, "--embeddings")
        store = load_store(embeddings)
    items = read_dataset(dataset)
    components = collect_components([it.record for it in items], store, fallback)
    dars = [it.record.dar for it in items]
    ablation = frozenset(COMPONENT_TAGS) - {tag for tag, _, _ in ckpt.layout}
    x, _ = fuse_matrix(components, dars, ckpt.dar_scaler, ablation)
    y = _labels_array(items)
    if not full:
        split = split_dataset(len(items), seed)
        x, y = x[split.test], y[split.test]
    scores = forward_batch(ckpt.model, x)
    report = score_report(scores, y)
    click.echo(json.dumps({"n": int(len(y)), **report.as_dict()}, indent=2))


@cli.command("cross-validate")
@click.option("--plan", "plan_path", required=True)
@click.option("--out", "out_path", required=True)
def cross_validate_cmd(plan_path, out_path):
    """k-fold protocol over the whole corpus."""
    table = cross_validate(_plan_from(plan_path), out_dir=out_path)
    click.echo(table.to_markdown(), nl=False)


@cli.command()
@click.option("--plan", "plan_path", required=True)
@click.option("--out", "out_path", required=True)
@click.option("--control/--no-control", default=True, show_default=True,
              help="add a label-shuffled control run")
def ablate(plan_path, out_path, control):
    """Train every fusion variant in the plan under identical splits."""
    table = run_ablations(_plan_from(plan_path), out_dir=out_path,
                          include_control=control)
    click.echo(table.to_markdown(), nl=False)


@cli.command()
@click.option("--plan", "plan_path", required=True)
@click.option("--kind", type=click.Choice(["lr", "rf"]), required=True)
@click.option("--fingerprint", type=click.Choice(sorted(_FP_FUNCS)), default=None,
              help="defaults to the plan's fingerprint")
@click.option("--out", "out_path", required=True)
def baseline(plan_path, kind, fingerprint, out_path):
    """Fingerprint + embedding baseline on the same splits."""
    table = run_baseline(kind, _plan_from(plan_path), fingerprint=fingerprint,
                         out_dir=out_path)
    click.echo(table.to_markdown(), nl=False)


@cli.command()
@click.option("--plan", "plan_path", required=True)
@click.option("--trials", default=20, show_default=True)
@click.option("--out", "out_path", default=None, help="JSON output (default stdout)")
def hpo(plan_path, trials, out_path):
    """Random search over the training hyperparameter space."""
    plan = _plan_from(plan_path)
    items = read_dataset(plan.dataset)
    store = None
    if plan.embeddings and not plan.use_fallback_features:
        store = load_store(plan.embeddings)
    components = collect_components([it.record for it in items], store,
                                    plan.use_fallback_features)
    dars = [it.record.dar for it in items]
    from .embeddings import fit_dar_scaler

    split = split_dataset(len(items), plan.seeds[0])
    scaler = fit_dar_scaler([dars[i] for i in split.train])
    x, _ = fuse_matrix(components, dars, scaler)
    y = _labels_array(items)
    result = hyperparameter_search(
        ArrayDataset(x[split.train], y[split.train]),
        ArrayDataset(x[split.val], y[split.val]),
        space=SEARCH_SPACE_DEFAULT,
        n_trials=trials,
        seeds=plan.seeds,
        base=plan.train,
        master_seed=plan.seeds[0],
    )
    payload = json.dumps({
        "best_config": result.best_config.as_dict(),
        "trials": result.trials,
    }, indent=2)
    if out_path:
        pathlib.Path(out_path).write_text(payload + "\n")
    else:
        click.echo(payload)


# ---------------------------------------------------------------------------
# Scoring

@cli.command("score-external")
@click.option("--checkpoint", required=True)
@click.option("--reference", required=True, help="curated JSONL corpus")
@click.option("--in", "in_path", required=True,
              help=f"CSV with columns {','.join(BATCH_COLUMNS)}")
@click.option("--out", "out_path", required=True, help="scored CSV")
@click.option("--embeddings", default=None)
@click.option("--fallback", is_flag=True)
def score_external_cmd(checkpoint, reference, in_path, out_path, embeddings, fallback):
    """Score unseen conjugates and report corpus similarity per record."""
    import csv as csv_mod

    _require_file(checkpoint, "--checkpoint")
    _require_file(reference, "--reference")
    _require_file(in_path, "--in")
    ckpt = load_checkpoint(checkpoint)
    store = None
    if embeddings:
        _require_file(embeddings, "--embeddings")
        store = load_store(embeddings)
    externals = []
    with open(in_path, newline="", encoding="utf-8") as fh:
        reader = csv_mod.DictReader(fh)
        missing = [c for c in BATCH_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise AdcpredError(f"--in is missing columns: {', '.join(missing)}")
        for row in reader:
            externals.append(AdcRecord(
                id=row["id"],
                heavy_chain=row["heavy_chain"],
                light_chain=row["light_chain"],
                antigen=row["antigen"],
                linker_smiles=row["linker_smiles"],
                payload_smiles=row["payload_smiles"],
                dar=float(row["dar"]),
            ))
    results = score_external(externals, read_dataset(reference), ckpt,
                             store=store, use_fallback=fallback,
                             out_path=out_path)
    click.echo(f"scored {len(results)} records", err=True)


@cli.command()
@click.option("--checkpoint", required=True)
@click.option("--embeddings", default=None)
@click.option("--fallback", is_flag=True)
@click.option("--json", "json_text", default=None,
              help="request JSON inline (default: read standard input)")
def predict(checkpoint, embeddings, fallback, json_text):
    """Score one conjugate; prints the response JSON."""
    runtime = _runtime_from_flags(checkpoint, embeddings, fallback)
    if json_text is None:
        json_text = sys.stdin.read()
    try:
        body = json.loads(json_text)
        request = PredictRequest(**body)
    except (ValueError, TypeError) as exc:
        raise AdcpredError(f"bad request JSON: {exc}") from None
    response = predict_one(request, runtime)
    click.echo(response.model_dump_json(indent=2))


@cli.command()
@click.option("--config", "config_path", default=None, help="service config JSON")
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
@click.option("--checkpoint", default=None)
@click.option("--embeddings", default=None)
@click.option("--static-dir", default=None)
@click.option("--fallback", is_flag=True,
              help="serve with the deterministic pseudo-embedder")
def serve(config_path, host, port, checkpoint, embeddings, static_dir, fallback):
    """Run the HTTP prediction service."""
    if config_path:
        _require_file(config_path, "--config")
    config = load_service_config(config_path)
    overrides = {
        "host": host, "port": port, "checkpoint": checkpoint,
        "embeddings": embeddings, "static_dir": static_dir,
    }
    for key, value in overrides.items():
        if value is not None:
            config = dataclasses.replace(config, **{key: value})
    if fallback:
        config.providers = dict(config.providers,
                                protein="fallback", molecule="fallback")
    run_server(config)


if __name__ == "__main__":
    main()
