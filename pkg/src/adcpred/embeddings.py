"""Storage and assembly of pre-computed feature vectors.

Protein and molecule embeddings are produced by external models and
arrive as JSON-lines files keyed by a content hash. This module loads
them, standardizes the drug-antibody ratio, and concatenates the five
component vectors plus DAR into the single fused input vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import hashlib

import numpy as np

from .errors import AdcpredError


class EmptyContent(AdcpredError):
    pass


class FormatError(AdcpredError):
    def __init__(self, line: int, reason: str):
        self.line = line
        super().__init__(f"line {line}: {reason}")


class DimensionMismatch(AdcpredError):
    pass


class ConflictingDuplicate(AdcpredError):
    pass


class DegenerateColumn(AdcpredError):
    pass


class MissingEmbedding(AdcpredError):
    pass


class EmbeddingKind(Enum):
    PROTEIN = "protein"
    MOLECULE = "molecule"

    @property
    def dim(self) -> int:
        return 1280 if self is EmbeddingKind.PROTEIN else 256


def normalize_content(kind: EmbeddingKind, content: str) -> str:
    """Protein sequences are case- and whitespace-insensitive; molecule
    strings keep interior characters as written."""
    if kind is EmbeddingKind.PROTEIN:
        return "".join(content.split()).upper()
    return content.strip()


def content_key(kind: EmbeddingKind, content: str) -> str:
    normalized = normalize_content(kind, content)
    if not normalized:
        raise EmptyContent("cannot key empty content")
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EmbeddingRecord:
    key: str
    kind: EmbeddingKind
    dim: int
    values: np.ndarray

    def __post_init__(self):
        if len(self.key) != 64 or any(c not in "0123456789abcdef" for c in self.key):
            raise FormatError(0, f"key {self.key!r} is not 64 lowercase hex chars")
        if self.dim != self.values.shape[0]:
            raise DimensionMismatch(
                f"{self.key}: dim {self.dim} != len(values) {self.values.shape[0]}"
            )
        if self.dim != self.kind.dim:
            raise DimensionMismatch(
                f"{self.key}: {self.kind.value} requires dim {self.kind.dim}, got {self.dim}"
            )
        if not np.all(np.isfinite(self.values)):
            raise FormatError(0, f"{self.key}: non-finite values")
        self.values.setflags(write=False)


class EmbeddingStore:
    """Immutable-after-load map of content key to embedding record."""

    def __init__(self):
        self._records: dict[str, EmbeddingRecord] = {}

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key: str) -> bool:
        return key in self._records

    def __iter__(self):
        return iter(self._records.values())

    def add(self, record: EmbeddingRecord):
        existing = self._records.get(record.key)
        if existing is not None:
            if existing.kind is not record.kind or not np.array_equal(
                existing.values, record.values
            ):
                raise ConflictingDuplicate(record.key)
            return
        self._records[record.key] = record

    def get(self, key: str) -> EmbeddingRecord:
        record = self._records.get(key)
        if record is None:
            raise MissingEmbedding(key)
        return record

    def vector(self, kind: EmbeddingKind, content: str) -> np.ndarray:
        return self.get(content_key(kind, content)).values

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for record in self._records.values():
                fh.write(json.dumps({
                    "key": record.key,
                    "kind": record.kind.value,
                    "dim": record.dim,
                    "values": [float(v) for v in record.values],
                }) + "\n")


def load_store(path) -> EmbeddingStore:
    """Read a JSON-lines embedding file.

    Duplicate keys with identical vectors are collapsed; with different
    vectors they are an error. Malformed lines report their 1-based
    line number.
    """
    store = EmbeddingStore()
    merge_into(store, path)
    return store


def merge_into(store: EmbeddingStore, path):
    with open(Path(path), "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(lineno, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(raw, dict):
                raise FormatError(lineno, "record is not an object")
            missing = {"key", "kind", "dim", "values"} - raw.keys()
            if missing:
                raise FormatError(lineno, f"missing fields: {sorted(missing)}")
            try:
                kind = EmbeddingKind(raw["kind"])
            except ValueError:
                raise FormatError(lineno, f"unknown kind {raw['kind']!r}") from None
            try:
                values = np.asarray(raw["values"], dtype=np.float64)
            except (TypeError, ValueError):
                raise FormatError(lineno, "values is not a numeric array") from None
            if values.ndim != 1:
                raise FormatError(lineno, "values is not a flat array")
            if not isinstance(raw["key"], str):
                raise FormatError(lineno, "key is not a string")
            try:
                record = EmbeddingRecord(
                    key=raw["key"], kind=kind, dim=int(raw["dim"]), values=values
                )
            except FormatError as exc:
                raise FormatError(lineno, str(exc)) from None
            store.add(record)
    return store


@dataclass(frozen=True)
class DarScaler:
    mean: float
    std: float
    z_max: float

    def __post_init__(self):
        if self.std <= 0:
            raise DegenerateColumn(f"std must be positive, got {self.std}")


def fit_dar_scaler(training_dars) -> DarScaler:
    """Mean / population-std standardization fitted on the training split."""
    values = np.asarray(list(training_dars), dtype=np.float64)
    if values.size < 2 or np.all(values == values[0]):
        raise DegenerateColumn("need at least 2 distinct DAR values to fit")
    mean = float(values.mean())
    std = float(values.std())  # population (ddof=0)
    z_max = float(np.max(np.abs((values - mean) / std)))
    return DarScaler(mean=mean, std=std, z_max=z_max)


def scale_dar(scaler: DarScaler, dar: float) -> float:
    """Standardize, then divide by the largest training |z| so the
    training column spans exactly [-1, 1]. Unseen values may exceed it."""
    z = (dar - scaler.mean) / scaler.std
    return z / max(1.0, abs(scaler.z_max))


# Fixed fusion layout: (component tag, dimension).
COMPONENTS: tuple[tuple[str, int], ...] = (
    ("linker", 256),
    ("payload", 256),
    ("heavy", 1280),
    ("light", 1280),
    ("antigen", 1280),
    ("dar", 1),
)

COMPONENT_TAGS = tuple(tag for tag, _ in COMPONENTS)

FULL_DIM = sum(dim for _, dim in COMPONENTS)  # 4353


def fused_dim(ablation=frozenset()) -> int:
    _check_ablation(ablation)
    return sum(dim for tag, dim in COMPONENTS if tag not in ablation)


@dataclass(frozen=True)
class FusedFeature:
    x: np.ndarray
    layout: tuple[tuple[str, int, int], ...] = field(default=())  # (tag, offset, dim)

    def component(self, tag: str) -> np.ndarray:
        for name, offset, dim in self.layout:
            if name == tag:
                return self.x[offset : offset + dim]
        raise KeyError(tag)


def _check_ablation(ablation):
    unknown = set(ablation) - set(COMPONENT_TAGS)
    if unknown:
        raise ValueError(f"unknown component tags: {sorted(unknown)}")


def fuse(linker_vec, payload_vec, heavy_vec, light_vec, antigen_vec,
         dar_scaled: float, ablation=frozenset()) -> FusedFeature:
    """Concatenate the component vectors in fixed order, skipping any
    ablated components and recording each survivor's offset."""
    _check_ablation(ablation)
    inputs = {
        "linker": linker_vec,
        "payload": payload_vec,
        "heavy": heavy_vec,
        "light": light_vec,
        "antigen": antigen_vec,
        "dar": np.asarray([dar_scaled], dtype=np.float64),
    }
    parts = []
    layout = []
    offset = 0
    for tag, dim in COMPONENTS:
        if tag in ablation:
            continue
        vec = np.asarray(inputs[tag], dtype=np.float64).reshape(-1)
        if vec.shape[0] != dim:
            raise DimensionMismatch(f"{tag}: expected {dim}, got {vec.shape[0]}")
        parts.append(vec)
        layout.append((tag, offset, dim))
        offset += dim
    return FusedFeature(x=np.concatenate(parts), layout=tuple(layout))


def fallback_featurizer(kind: EmbeddingKind, content: str, dim: int | None = None) -> np.ndarray:
    """Deterministic pseudo-embedding for tests and offline fixtures.

    NOT a scientific embedding: it draws uniform [-1, 1] values from a
    counter-based generator keyed by the content hash, so equal content
    always produces the same vector.
    """
    key = content_key(kind, content)
    if dim is None:
        dim = kind.dim
    bit_generator = np.random.Philox(key=int(key[:32], 16))
    rng = np.random.Generator(bit_generator)
    return rng.uniform(-1.0, 1.0, size=dim)
