"""HTTP prediction service: single and batch scoring over a loaded
checkpoint, with pluggable embedding providers and static UI serving.

The model, store, and scaler are loaded once at startup and treated as
immutable; provider lookups go through a runtime cache so repeated
content never hits a provider twice.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import pathlib
import shlex
import subprocess
import urllib.request
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, field_validator

from .checkpoint import load_checkpoint
from .chem import ParseError, parse_smiles
from .curation import Label
from .embeddings import (
    COMPONENT_TAGS,
    EmbeddingKind,
    EmbeddingRecord,
    EmbeddingStore,
    MissingEmbedding,
    content_key,
    fallback_featurizer,
    fuse,
    load_store,
    scale_dar,
)
from .errors import AdcpredError
from .model import Checkpoint, forward_batch

BATCH_COLUMNS = (
    "id", "heavy_chain", "light_chain", "antigen",
    "linker_smiles", "payload_smiles", "dar",
)

SCORE_THRESHOLD = 0.5


class InvalidSmiles(AdcpredError):
    def __init__(self, field_name: str, offset: int, reason: str):
        super().__init__(f"{field_name}: {reason} (offset {offset})")
        self.field = field_name
        self.offset = offset
        self.reason = reason


class ModelNotLoaded(AdcpredError):
    pass


class MalformedCsv(AdcpredError):
    pass


class ProviderError(AdcpredError):
    pass


# ---------------------------------------------------------------------------
# Configuration

CONFIG_KEYS = (
    "host", "port", "checkpoint", "embeddings", "static_dir",
    "providers", "dar_reference",
)

_ENV_SIMPLE = {
    "ADCPRED_HOST": "host",
    "ADCPRED_PORT": "port",
    "ADCPRED_CHECKPOINT": "checkpoint",
    "ADCPRED_EMBEDDINGS": "embeddings",
    "ADCPRED_STATIC_DIR": "static_dir",
    "ADCPRED_DAR_REFERENCE": "dar_reference",
}


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    checkpoint: str | None = None
    embeddings: str | None = None
    static_dir: str | None = None
    #: per-kind embedding source for content absent from the store:
    #: "fallback", "cmd:<command line>", or an http(s) URL.
    providers: dict = field(default_factory=dict)
    #: optional JSON file mapping antibody name to [low, high] DAR range;
    #: served verbatim, empty unless the user supplies one.
    dar_reference: str | None = None


def load_service_config(path=None, env=None) -> ServiceConfig:
    """JSON config file merged with ADCPRED_* environment overrides."""
    env = os.environ if env is None else env
    values: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise AdcpredError("service config must be a JSON object")
        unknown = set(raw) - set(CONFIG_KEYS)
        if unknown:
            raise AdcpredError(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    for name, key in _ENV_SIMPLE.items():
        if env.get(name):
            values[key] = env[name]
    providers = dict(values.get("providers") or {})
    for kind in ("protein", "molecule"):
        override = env.get(f"ADCPRED_PROVIDER_{kind.upper()}")
        if override:
            providers[kind] = override
    values["providers"] = providers
    if "port" in values:
        values["port"] = int(values["port"])
    return ServiceConfig(**values)


# ---------------------------------------------------------------------------
# Embedding resolution

def _provider_lookup(spec: str, kind: EmbeddingKind, content: str) -> np.ndarray:
    """Ask an external provider for one vector.

    Providers speak the embedding JSON-line schema: they receive
    {"kind", "content"} and answer {"key", "kind", "dim", "values"}.
    "fallback" uses the built-in deterministic pseudo-embedder.
    """
    kind_name = "protein" if kind is EmbeddingKind.PROTEIN else "molecule"
    if spec == "fallback":
        return fallback_featurizer(kind, content)
    request_body = json.dumps({"kind": kind_name, "content": content})
    if spec.startswith("cmd:"):
        argv = shlex.split(spec[4:])
        try:
            proc = subprocess.run(
                argv, input=request_body.encode(), capture_output=True,
                timeout=60, check=True,
            )
        except (OSError, subprocess.SubprocessError) as exc:
            raise ProviderError(f"provider command failed: {exc}") from None
        payload = proc.stdout
    elif spec.startswith("http://") or spec.startswith("https://"):
        req = urllib.request.Request(
            spec, data=request_body.encode(),
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(req, timeout=60) as resp:
                payload = resp.read()
        except OSError as exc:
            raise ProviderError(f"provider endpoint failed: {exc}") from None
    else:
        raise ProviderError(f"bad provider spec {spec!r}")
    try:
        answer = json.loads(payload)
        values = np.asarray(answer["values"], dtype=np.float64)
    except (ValueError, KeyError, TypeError) as exc:
        raise ProviderError(f"bad provider reply: {exc}") from None
    # route the reply through EmbeddingRecord so dim/finite checks apply
    record = EmbeddingRecord(
        key=content_key(kind, content), kind=kind, dim=kind.dim, values=values
    )
    return record.values


class ModelRuntime:
    """Checkpoint + embedding sources, loaded once and shared read-only."""

    def __init__(self, checkpoint: Checkpoint, store: EmbeddingStore | None = None,
                 providers: dict | None = None, version: str = "unversioned",
                 trained_at: str | None = None):
        if checkpoint.dar_scaler is None:
            raise AdcpredError("checkpoint carries no DAR scaler")
        if checkpoint.layout is None:
            raise AdcpredError("checkpoint carries no component layout")
        self.checkpoint = checkpoint
        self.store = store
        self.providers = dict(providers or {})
        self.version = version
        self.trained_at = trained_at
        self.ablation = frozenset(COMPONENT_TAGS) - {
            tag for tag, _, _ in checkpoint.layout
        }
        self._cache: dict[str, np.ndarray] = {}

    def resolve(self, kind: EmbeddingKind, content: str,
                component: str) -> tuple[np.ndarray, str | None]:
        """Store lookup first, then the configured provider; returns the
        vector and an optional warning describing a non-store source."""
        key = content_key(kind, content)
        cached = self._cache.get(key)
        if cached is not None:
            return cached, None
        if self.store is not None:
            try:
                return self.store.vector(kind, content), None
            except MissingEmbedding:
                pass
        kind_name = "protein" if kind is EmbeddingKind.PROTEIN else "molecule"
        spec = self.providers.get(kind_name)
        if spec is None:
            raise MissingEmbedding(component)
        vec = _provider_lookup(spec, kind, content)
        self._cache[key] = vec
        return vec, f"{component}: embedding computed by {kind_name} provider"


def runtime_from_files(checkpoint_path, store: EmbeddingStore | None = None,
                       providers: dict | None = None) -> ModelRuntime:
    """Load a checkpoint and stamp the runtime with a content-derived
    version string and the file's modification time."""
    path = pathlib.Path(checkpoint_path)
    if not path.exists():
        raise ModelNotLoaded(f"checkpoint not found: {path}")
    ckpt = load_checkpoint(path)
    digest = hashlib.sha256(path.read_bytes()).hexdigest()[:12]
    trained_at = datetime.fromtimestamp(
        path.stat().st_mtime, tz=timezone.utc
    ).isoformat(timespec="seconds")
    return ModelRuntime(
        ckpt, store, providers,
        version=f"adcn{ckpt.version}-{digest}", trained_at=trained_at,
    )


def load_runtime(config: ServiceConfig) -> ModelRuntime:
    if not config.checkpoint:
        raise ModelNotLoaded("no checkpoint configured")
    store = load_store(config.embeddings) if config.embeddings else None
    return runtime_from_files(config.checkpoint, store, config.providers)


# ---------------------------------------------------------------------------
# Prediction

class PredictRequest(BaseModel):
    heavy_chain: str
    light_chain: str
    antigen: str
    linker_smiles: str
    payload_smiles: str
    dar: float

    @field_validator("heavy_chain", "light_chain", "antigen",
                     "linker_smiles", "payload_smiles")
    @classmethod
    def _non_empty(cls, v: str, info):
        if not v or not v.strip():
            raise ValueError("must be non-empty")
        return v

    @field_validator("dar")
    @classmethod
    def _dar_range(cls, v: float):
        if not (v >= 0 and math.isfinite(v)):
            raise ValueError("dar must be finite and >= 0")
        return v


class PredictResponse(BaseModel):
    score: float
    label: str
    model_version: str
    warnings: list[str] = []


_SMILES_FIELDS = ("linker_smiles", "payload_smiles")


def predict_one(req: PredictRequest, runtime: ModelRuntime) -> PredictResponse:
    """Validate, resolve embeddings, fuse, and run the forward pass."""
    for field_name in _SMILES_FIELDS:
        text = getattr(req, field_name)
        try:
            parse_smiles(text)
        except ParseError as exc:
            raise InvalidSmiles(field_name, exc.offset, exc.reason) from None

    warnings: list[str] = []
    vecs = {}
    for component, kind, attr in (
        ("linker", EmbeddingKind.MOLECULE, "linker_smiles"),
        ("payload", EmbeddingKind.MOLECULE, "payload_smiles"),
        ("heavy", EmbeddingKind.PROTEIN, "heavy_chain"),
        ("light", EmbeddingKind.PROTEIN, "light_chain"),
        ("antigen", EmbeddingKind.PROTEIN, "antigen"),
    ):
        vec, note = runtime.resolve(kind, getattr(req, attr), component)
        vecs[component] = vec
        if note:
            warnings.append(note)

    scaler = runtime.checkpoint.dar_scaler
    dar_scaled = scale_dar(scaler, req.dar)
    if abs(dar_scaled) > 1.0:
        warnings.append("dar: outside the training range")
    fused = fuse(
        vecs["linker"], vecs["payload"], vecs["heavy"], vecs["light"],
        vecs["antigen"], dar_scaled, ablation=runtime.ablation,
    )
    score = float(forward_batch(runtime.checkpoint.model, fused.x[None, :])[0])
    label = Label.POSITIVE if score >= SCORE_THRESHOLD else Label.NEGATIVE
    return PredictResponse(
        score=score, label=label.value.capitalize(),
        model_version=runtime.version, warnings=warnings,
    )


def predict_batch(text: str, runtime: ModelRuntime) -> str:
    """CSV in, CSV out: input columns plus score,label,error, one output
    row per input row; failures stay in-band in the error column."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise MalformedCsv("empty body: expected a CSV header")
    missing = [c for c in BATCH_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise MalformedCsv(f"missing columns: {', '.join(missing)}")
    for reserved in ("score", "label", "error"):
        if reserved in reader.fieldnames:
            raise MalformedCsv(f"reserved column in input: {reserved}")

    out = io.StringIO()
    writer = csv.DictWriter(
        out, fieldnames=[*reader.fieldnames, "score", "label", "error"]
    )
    writer.writeheader()
    for row in reader:
        if None in row:
            row.pop(None)  # extra unheadered cells; keep the row scoreable
        result = dict(row)
        result.update({"score": "", "label": "", "error": ""})
        try:
            dar_text = (row.get("dar") or "").strip()
            request = PredictRequest(
                heavy_chain=row.get("heavy_chain") or "",
                light_chain=row.get("light_chain") or "",
                antigen=row.get("antigen") or "",
                linker_smiles=row.get("linker_smiles") or "",
                payload_smiles=row.get("payload_smiles") or "",
                dar=float(dar_text) if dar_text else float("nan"),
            )
            response = predict_one(request, runtime)
            result["score"] = f"{response.score:.6f}"
            result["label"] = response.label
        except (AdcpredError, ValueError) as exc:
            result["error"] = _row_error_text(exc)
        writer.writerow(result)
    return out.getvalue()


def _row_error_text(exc: Exception) -> str:
    if isinstance(exc, InvalidSmiles):
        return f"invalid_smiles:{exc.field}@{exc.offset}"
    if isinstance(exc, MissingEmbedding):
        return f"missing_embedding:{exc}"
    # pydantic wraps validator failures in ValueError subclasses
    return str(exc).splitlines()[0][:200]


# ---------------------------------------------------------------------------
# FastAPI wiring

def _error_json(status: int, code: str, message: str,
                field_name: str | None = None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"code": code, "field": field_name, "message": message}},
    )


def create_app(config: ServiceConfig | None = None,
               runtime: ModelRuntime | None = None) -> FastAPI:
    """Build the application; a missing checkpoint keeps /api/health
    alive and turns prediction routes into model_not_loaded errors."""
    config = config or ServiceConfig()
    app = FastAPI(title="adcpred", docs_url=None, redoc_url=None)

    if runtime is None and config.checkpoint:
        runtime = load_runtime(config)
    app.state.runtime = runtime
    app.state.config = config

    dar_table = {}
    if config.dar_reference:
        with open(config.dar_reference, encoding="utf-8") as fh:
            dar_table = json.load(fh)

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = [str(p) for p in first.get("loc", []) if p != "body"]
        return _error_json(422, "validation", first.get("msg", "invalid request"),
                           ".".join(loc) or None)

    @app.exception_handler(AdcpredError)
    async def _domain_handler(request: Request, exc: AdcpredError):
        if isinstance(exc, InvalidSmiles):
            return _error_json(422, "invalid_smiles", str(exc), exc.field)
        if isinstance(exc, MissingEmbedding):
            return _error_json(422, "missing_embedding", str(exc), str(exc))
        if isinstance(exc, ModelNotLoaded):
            return _error_json(503, "model_not_loaded", str(exc))
        if isinstance(exc, MalformedCsv):
            return _error_json(400, "malformed_csv", str(exc))
        return _error_json(500, "internal", str(exc))

    def _require_runtime() -> ModelRuntime:
        if app.state.runtime is None:
            raise ModelNotLoaded("no checkpoint configured")
        return app.state.runtime

    @app.get("/api/health")
    async def health():
        return {"status": "ok"}

    @app.get("/api/model/info")
    async def model_info():
        rt = _require_runtime()
        ckpt = rt.checkpoint
        return {
            "version": rt.version,
            "input_dim": int(ckpt.model.hidden.weights.shape[1]),
            "hidden_dim": int(ckpt.model.hidden.weights.shape[0]),
            "trained_at": rt.trained_at,
            "components": [tag for tag, _, _ in ckpt.layout],
            "metrics": {
                "best_val_auc": ckpt.best_val_auc,
                "epochs": len(ckpt.history),
            },
        }

    @app.get("/api/dar/reference")
    async def dar_reference():
        return dar_table

    @app.post("/api/predict")
    async def predict(req: PredictRequest):
        return predict_one(req, _require_runtime())

    @app.post("/api/predict/batch")
    async def predict_batch_route(request: Request):
        body = await request.body()
        try:
            text = body.decode("utf-8")
        except UnicodeDecodeError:
            raise MalformedCsv("body is not valid UTF-8") from None
        result = predict_batch(text, _require_runtime())
        return Response(content=result, media_type="text/csv")

    if config.static_dir and pathlib.Path(config.static_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.static_dir, html=True),
                  name="ui")

    return app


def run_server(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port)
