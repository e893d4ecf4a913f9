"""Dataset curation: unit normalization, labeling, dedup, and splits.

Raw conjugate records come in as one-measurement-per-row CSV exports.
This module pools measurements per record, converts molar bioactivity
units to nM, applies the clinical-status / 100 nM labeling rule,
collapses duplicates, and produces seeded 8:1:1 splits.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AdcpredError

CANONICAL_AMINO_ACIDS = frozenset("ACDEFGHIKLMNPQRSTVWYX")

DEFAULT_CUTOFF_NM = 100.0

# Scale factors from each molar unit to nM.
_TO_NM = {
    "pM": 1e-3,
    "nM": 1.0,
    "uM": 1e3,
    "mM": 1e6,
}


class MeasurementKind(enum.Enum):
    IC50 = "IC50"
    EC50 = "EC50"
    GI50 = "GI50"


class Unit(enum.Enum):
    PM = "pM"
    NM = "nM"
    UM = "uM"
    MM = "mM"
    UG_PER_ML = "ug_per_mL"


class Qualifier(enum.Enum):
    EXACT = "exact"
    GREATER_THAN = "greater_than"
    LESS_THAN = "less_than"


class Status(enum.Enum):
    MARKETED = "marketed"
    PHASE3 = "phase3"
    PHASE2 = "phase2"
    PHASE1 = "phase1"
    INVESTIGATIONAL = "investigational"
    OTHER = "other"


class Label(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


#: Statuses that force a positive label regardless of measured activity.
CLINICAL_STATUSES = frozenset(
    {Status.MARKETED, Status.PHASE1, Status.PHASE2, Status.PHASE3}
)


class MassConcentrationUnit(AdcpredError):
    """ug/mL cannot be converted to nM without the conjugate molar mass."""


class Unlabelable(AdcpredError):
    """No clinical status and no usable activity value."""


class TooFewRecords(AdcpredError):
    pass


@dataclass(frozen=True)
class BioactivityMeasurement:
    kind: MeasurementKind
    value: float
    unit: Unit
    qualifier: Qualifier = Qualifier.EXACT

    def __post_init__(self):
        if not (self.value > 0 and math.isfinite(self.value)):
            raise ValueError(f"measurement value must be positive, got {self.value}")


@dataclass(frozen=True)
class AdcRecord:
    """One conjugate: five component descriptions, DAR, status, measurements.

    Fields may be empty/None at ingest time; `curate` drops records that
    do not satisfy the completeness and validity requirements.
    """

    id: str
    heavy_chain: str
    light_chain: str
    antigen: str
    linker_smiles: str
    payload_smiles: str
    dar: float | None
    status: Status = Status.OTHER
    measurements: tuple[BioactivityMeasurement, ...] = ()


@dataclass(frozen=True)
class LabeledAdc:
    record: AdcRecord
    label: Label
    activity_nM: float | None = None


@dataclass(frozen=True)
class DatasetSplit:
    train: list[int]
    val: list[int]
    test: list[int]
    seed: int


@dataclass
class CurationReport:
    """Per-record drop log plus summary counts."""

    kept: int = 0
    drops: list[tuple[str, str]] = field(default_factory=list)  # (record id, reason)
    notes: list[str] = field(default_factory=list)

    def drop(self, record_id: str, reason: str):
        self.drops.append((record_id, reason))

    def to_text(self) -> str:
        lines = [f"kept: {self.kept}", f"dropped: {len(self.drops)}"]
        for rid, reason in self.drops:
            lines.append(f"drop\t{rid}\t{reason}")
        for note in self.notes:
            lines.append(f"note\t{note}")
        return "\n".join(lines) + "\n"


def convert_to_nanomolar(value: float, unit: Unit) -> float:
    """Express a molar-concentration value in nM.

    Raises MassConcentrationUnit for ug/mL so callers can exclude the
    measurement instead of guessing a molar mass.
    """
    if unit is Unit.UG_PER_ML:
        raise MassConcentrationUnit(
            "ug/mL requires the conjugate molar mass; measurement excluded"
        )
    if value <= 0:
        raise ValueError(f"value must be positive, got {value}")
    return value * _TO_NM[unit.value]


def convert_from_nanomolar(value_nm: float, unit: Unit) -> float:
    """Inverse of convert_to_nanomolar, for round-trip checks."""
    if unit is Unit.UG_PER_ML:
        raise MassConcentrationUnit("ug/mL is not a molar unit")
    return value_nm / _TO_NM[unit.value]


def aggregate_activity(
    measurements: list[BioactivityMeasurement] | tuple[BioactivityMeasurement, ...],
) -> float | None:
    """Minimum convertible exact measurement in nM, or None if nothing usable.

    Qualified ('>'/'<') entries and mass-concentration entries are dropped.
    """
    best = None
    for m in measurements:
        if m.qualifier is not Qualifier.EXACT:
            continue
        try:
            nm = convert_to_nanomolar(m.value, m.unit)
        except MassConcentrationUnit:
            continue
        if best is None or nm < best:
            best = nm
    return best


def assign_label(record: AdcRecord, cutoff_nM: float = DEFAULT_CUTOFF_NM) -> LabeledAdc:
    """Clinical/marketed records are positive; otherwise threshold on activity.

    Raises Unlabelable when the record has neither a clinical status nor a
    usable activity value.
    """
    activity = aggregate_activity(record.measurements)
    if record.status in CLINICAL_STATUSES:
        return LabeledAdc(record=record, label=Label.POSITIVE, activity_nM=activity)
    if activity is None:
        raise Unlabelable(
            f"record {record.id!r}: status {record.status.value} and no usable activity"
        )
    label = Label.POSITIVE if activity <= cutoff_nM else Label.NEGATIVE
    return LabeledAdc(record=record, label=label, activity_nM=activity)


def normalize_record(record: AdcRecord) -> AdcRecord:
    """Trim whitespace everywhere; uppercase the protein sequences."""
    return replace(
        record,
        id=record.id.strip(),
        heavy_chain=record.heavy_chain.strip().upper(),
        light_chain=record.light_chain.strip().upper(),
        antigen=record.antigen.strip().upper(),
        linker_smiles=record.linker_smiles.strip(),
        payload_smiles=record.payload_smiles.strip(),
    )


def dedup_key(record: AdcRecord) -> tuple:
    """Identity of a conjugate: the five normalized components plus DAR
    rounded to 2 decimals."""
    r = normalize_record(record)
    return (
        r.heavy_chain,
        r.light_chain,
        r.antigen,
        r.linker_smiles,
        r.payload_smiles,
        round(r.dar, 2) if r.dar is not None else None,
    )


def _validity_problem(record: AdcRecord) -> str | None:
    if not (
        record.heavy_chain
        and record.light_chain
        and record.antigen
        and record.linker_smiles
        and record.payload_smiles
    ):
        return "incomplete"
    if record.dar is None:
        return "incomplete"
    if not (record.dar >= 0 and math.isfinite(record.dar)):
        return "invalid_dar"
    for seq in (record.heavy_chain, record.light_chain, record.antigen):
        if not set(seq) <= CANONICAL_AMINO_ACIDS:
            return "invalid_sequence"
    return None


def curate(
    raw: list[AdcRecord],
    cutoff_nM: float = DEFAULT_CUTOFF_NM,
    report: CurationReport | None = None,
) -> list[LabeledAdc]:
    """Filter, dedup, and label raw records.

    Incomplete or invalid records are dropped with a reason; duplicates
    (per dedup_key) collapse to one record pooling all measurements;
    unlabelable survivors are dropped. Per-record failures land in the
    report, never raise.
    """
    if report is None:
        report = CurationReport()

    merged: dict[tuple, AdcRecord] = {}
    for record in raw:
        record = normalize_record(record)
        problem = _validity_problem(record)
        if problem is not None:
            report.drop(record.id, problem)
            continue
        key = dedup_key(record)
        if key in merged:
            kept = merged[key]
            pooled = kept.measurements + tuple(
                m for m in record.measurements if m not in kept.measurements
            )
            merged[key] = replace(kept, measurements=pooled)
            report.drop(record.id, f"duplicate_of:{kept.id}")
        else:
            merged[key] = record

    labeled = []
    for record in merged.values():
        try:
            labeled.append(assign_label(record, cutoff_nM=cutoff_nM))
        except Unlabelable:
            report.drop(record.id, "unlabelable")
    report.kept = len(labeled)
    return labeled


def split_dataset(n: int, seed: int) -> DatasetSplit:
    """Seeded uniform permutation of 0..n-1 partitioned 8:1:1.

    |train| = floor(0.8 n), |val| = floor(0.1 n), |test| = remainder.
    """
    if n < 10:
        raise TooFewRecords(f"need at least 10 records to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(0.8 * n))
    n_val = int(math.floor(0.1 * n))
    return DatasetSplit(
        train=[int(i) for i in perm[:n_train]],
        val=[int(i) for i in perm[n_train : n_train + n_val]],
        test=[int(i) for i in perm[n_train + n_val :]],
        seed=seed,
    )


# ---------------------------------------------------------------------------
# CSV ingest (one measurement per row; repeated ids pool measurements)

CSV_COLUMNS = [
    "id",
    "heavy_chain",
    "light_chain",
    "antigen",
    "linker_smiles",
    "payload_smiles",
    "dar",
    "status",
    "activity_kind",
    "activity_value",
    "activity_unit",
    "activity_qualifier",
]

_STATUS_ALIASES = {
    "marketed": Status.MARKETED,
    "approved": Status.MARKETED,
    "phase1": Status.PHASE1,
    "phasei": Status.PHASE1,
    "phase2": Status.PHASE2,
    "phaseii": Status.PHASE2,
    "phase3": Status.PHASE3,
    "phaseiii": Status.PHASE3,
    "investigational": Status.INVESTIGATIONAL,
    "other": Status.OTHER,
}

_UNIT_ALIASES = {
    "pm": Unit.PM,
    "nm": Unit.NM,
    "um": Unit.UM,
    "µm": Unit.UM,
    "mm": Unit.MM,
    "ug/ml": Unit.UG_PER_ML,
    "µg/ml": Unit.UG_PER_ML,
    "ug_per_ml": Unit.UG_PER_ML,
}

_QUALIFIER_ALIASES = {
    "": Qualifier.EXACT,
    "=": Qualifier.EXACT,
    "exact": Qualifier.EXACT,
    ">": Qualifier.GREATER_THAN,
    "greater_than": Qualifier.GREATER_THAN,
    "<": Qualifier.LESS_THAN,
    "less_than": Qualifier.LESS_THAN,
}


def parse_status(text: str) -> Status:
    """Map a free-text status to the enum; unknown strings become OTHER
    (OTHER never labels positive on its own, so this is the safe default)."""
    key = "".join(text.lower().split()).replace("_", "").replace("-", "")
    return _STATUS_ALIASES.get(key, Status.OTHER)


def _parse_measurement(row: dict) -> BioactivityMeasurement | None:
    value_text = (row.get("activity_value") or "").strip()
    if not value_text:
        return None
    kind_text = (row.get("activity_kind") or "").strip().upper()
    unit_text = (row.get("activity_unit") or "").strip().lower()
    qual_text = (row.get("activity_qualifier") or "").strip().lower()
    kind = MeasurementKind(kind_text)  # raises ValueError on unknown kind
    unit = _UNIT_ALIASES[unit_text]
    qualifier = _QUALIFIER_ALIASES[qual_text]
    return BioactivityMeasurement(kind=kind, value=float(value_text), unit=unit, qualifier=qualifier)


def read_records_csv(path, report: CurationReport | None = None) -> list[AdcRecord]:
    """Read the raw CSV export. Rows sharing an id pool their measurements;
    the first row of an id supplies the structural fields."""
    records: dict[str, AdcRecord] = {}
    order: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise AdcpredError(f"CSV is missing columns: {', '.join(missing)}")
        for lineno, row in enumerate(reader, start=2):
            rid = (row.get("id") or "").strip()
            if not rid:
                if report is not None:
                    report.notes.append(f"line {lineno}: blank id, row skipped")
                continue
            if rid not in records:
                dar_text = (row.get("dar") or "").strip()
                try:
                    dar = float(dar_text) if dar_text else None
                except ValueError:
                    dar = float("nan")
                records[rid] = AdcRecord(
                    id=rid,
                    heavy_chain=row.get("heavy_chain") or "",
                    light_chain=row.get("light_chain") or "",
                    antigen=row.get("antigen") or "",
                    linker_smiles=row.get("linker_smiles") or "",
                    payload_smiles=row.get("payload_smiles") or "",
                    dar=dar,
                    status=parse_status(row.get("status") or ""),
                )
                order.append(rid)
            try:
                measurement = _parse_measurement(row)
            except (KeyError, ValueError) as exc:
                if report is not None:
                    report.notes.append(f"line {lineno}: bad measurement ({exc})")
                continue
            if measurement is not None:
                rec = records[rid]
                records[rid] = replace(rec, measurements=rec.measurements + (measurement,))
    return [records[rid] for rid in order]


# ---------------------------------------------------------------------------
# JSON-lines dataset file

def labeled_to_dict(item: LabeledAdc) -> dict:
    r = item.record
    return {
        "id": r.id,
        "heavy_chain": r.heavy_chain,
        "light_chain": r.light_chain,
        "antigen": r.antigen,
        "linker_smiles": r.linker_smiles,
        "payload_smiles": r.payload_smiles,
        "dar": r.dar,
        "status": r.status.value,
        "measurements": [
            {
                "kind": m.kind.value,
                "value": m.value,
                "unit": m.unit.value,
                "qualifier": m.qualifier.value,
            }
            for m in r.measurements
        ],
        "label": item.label.value,
        "activity_nM": item.activity_nM,
    }


def labeled_from_dict(d: dict) -> LabeledAdc:
    record = AdcRecord(
        id=d["id"],
        heavy_chain=d["heavy_chain"],
        light_chain=d["light_chain"],
        antigen=d["antigen"],
        linker_smiles=d["linker_smiles"],
        payload_smiles=d["payload_smiles"],
        dar=d["dar"],
        status=Status(d["status"]),
        measurements=tuple(
            BioactivityMeasurement(
                kind=MeasurementKind(m["kind"]),
                value=m["value"],
                unit=Unit(m["unit"]),
                qualifier=Qualifier(m["qualifier"]),
            )
            for m in d.get("measurements", [])
        ),
    )
    return LabeledAdc(
        record=record,
        label=Label(d["label"]),
        activity_nM=d.get("activity_nM"),
    )


def write_dataset(items: list[LabeledAdc], path):
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(labeled_to_dict(item)) + "\n")


def read_dataset(path) -> list[LabeledAdc]:
    items = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                items.append(labeled_from_dict(json.loads(line)))
    return items
