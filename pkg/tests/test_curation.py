import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adcpred.curation import (
    AdcRecord,
    BioactivityMeasurement,
    CurationReport,
    Label,
    LabeledAdc,
    MassConcentrationUnit,
    MeasurementKind,
    Qualifier,
    Status,
    TooFewRecords,
    Unit,
    Unlabelable,
    aggregate_activity,
    assign_label,
    convert_from_nanomolar,
    convert_to_nanomolar,
    curate,
    dedup_key,
    normalize_record,
    parse_status,
    read_dataset,
    read_records_csv,
    split_dataset,
    write_dataset,
)

HEAVY = "EVQLVESGGGLVQPGGSLRLSCAAS"
LIGHT = "DIQMTQSPSSLSASVGDRVTITC"
ANTIGEN = "MELAALCRWGLLLALLPPGAAST"


def meas(value, unit=Unit.NM, kind=MeasurementKind.IC50, qualifier=Qualifier.EXACT):
    return BioactivityMeasurement(kind=kind, value=value, unit=unit,
                                  qualifier=qualifier)


def rec(rid, status=Status.OTHER, measurements=(), **overrides):
    fields = dict(
        id=rid, heavy_chain=HEAVY, light_chain=LIGHT, antigen=ANTIGEN,
        linker_smiles="CCO", payload_smiles="c1ccccc1", dar=4.0,
        status=status, measurements=tuple(measurements),
    )
    fields.update(overrides)
    return AdcRecord(**fields)


# ---------------------------------------------------------------------------
# Unit conversion

def test_conversion_table():
    assert convert_to_nanomolar(1.0, Unit.NM) == 1.0
    assert convert_to_nanomolar(1.0, Unit.UM) == 1e3
    assert convert_to_nanomolar(1.0, Unit.MM) == 1e6
    assert convert_to_nanomolar(1.0, Unit.PM) == 1e-3
    assert convert_to_nanomolar(0.2, Unit.UM) == pytest.approx(200.0)


def test_mass_unit_refuses_conversion():
    with pytest.raises(MassConcentrationUnit):
        convert_to_nanomolar(1.0, Unit.UG_PER_ML)
    with pytest.raises(MassConcentrationUnit):
        convert_from_nanomolar(1.0, Unit.UG_PER_ML)


@given(
    value=st.floats(min_value=1e-6, max_value=1e6,
                    allow_nan=False, allow_infinity=False),
    unit=st.sampled_from([Unit.PM, Unit.NM, Unit.UM, Unit.MM]),
)
def test_conversion_roundtrip(value, unit):
    nm = convert_to_nanomolar(value, unit)
    assert convert_from_nanomolar(nm, unit) == pytest.approx(value, rel=1e-12)


def test_nonpositive_value_rejected():
    with pytest.raises(ValueError):
        convert_to_nanomolar(0.0, Unit.NM)
    with pytest.raises(ValueError):
        BioactivityMeasurement(MeasurementKind.IC50, -5.0, Unit.NM)


# ---------------------------------------------------------------------------
# Aggregation

def test_aggregate_takes_minimum_in_nm():
    value = aggregate_activity([
        meas(500.0), meas(0.3, Unit.UM), meas(80.0),
    ])
    assert value == pytest.approx(80.0)


def test_aggregate_drops_qualified_and_mass_entries():
    value = aggregate_activity([
        meas(1.0, qualifier=Qualifier.LESS_THAN),
        meas(2.0, qualifier=Qualifier.GREATER_THAN),
        meas(3.0, Unit.UG_PER_ML),
        meas(150.0),
    ])
    assert value == pytest.approx(150.0)


def test_aggregate_nothing_usable():
    assert aggregate_activity([]) is None
    assert aggregate_activity([meas(1.0, qualifier=Qualifier.LESS_THAN)]) is None


# ---------------------------------------------------------------------------
# Labeling: hand-labeled fixture, including the 150 nM negative and
# 0.05 nM positive reference cases

# distinct DARs keep dedup from collapsing the shared component strings
FIXTURE = [
    (rec("F01", Status.MARKETED, dar=1.0), Label.POSITIVE),
    (rec("F02", Status.PHASE1, [meas(1e6)], dar=2.0), Label.POSITIVE),
    (rec("F03", Status.PHASE2, dar=3.0), Label.POSITIVE),
    (rec("F04", Status.PHASE3, [meas(5000.0)], dar=4.0), Label.POSITIVE),
    (rec("F05", Status.INVESTIGATIONAL, [meas(150.0)], dar=5.0), Label.NEGATIVE),
    (rec("F06", Status.OTHER, [meas(0.05)], dar=6.0), Label.POSITIVE),
    (rec("F07", Status.INVESTIGATIONAL, [meas(100.0, kind=MeasurementKind.EC50)],
         dar=7.0), Label.POSITIVE),
    (rec("F08", Status.INVESTIGATIONAL, [meas(100.1, kind=MeasurementKind.GI50)],
         dar=8.0), Label.NEGATIVE),
    (rec("F09", Status.OTHER, [meas(0.2, Unit.UM)], dar=1.5), Label.NEGATIVE),
    (rec("F10", Status.OTHER, [meas(50000.0, Unit.PM)], dar=2.5), Label.POSITIVE),
    (rec("F11", Status.OTHER, [meas(1.0, Unit.MM)], dar=3.5), Label.NEGATIVE),
    (rec("F12", Status.OTHER, [meas(500.0), meas(80.0)], dar=4.5), Label.POSITIVE),
    (rec("F13", Status.OTHER,
         [meas(10.0, qualifier=Qualifier.GREATER_THAN), meas(150.0)], dar=5.5),
     Label.NEGATIVE),
    (rec("F14", Status.INVESTIGATIONAL, [meas(99.9), meas(3.0, Unit.UG_PER_ML)],
         dar=6.5), Label.POSITIVE),
]


@pytest.mark.parametrize("record,expected", FIXTURE, ids=[r.id for r, _ in FIXTURE])
def test_fixture_labels(record, expected):
    assert assign_label(record).label is expected


def test_unlabelable_without_status_or_activity():
    with pytest.raises(Unlabelable):
        assign_label(rec("U1"))
    with pytest.raises(Unlabelable):
        assign_label(rec("U2", measurements=[meas(1.0, qualifier=Qualifier.LESS_THAN)]))


def test_relaxed_cutoff_flips_mid_range_records():
    borderline = rec("V1", Status.OTHER, [meas(150.0)])
    assert assign_label(borderline, cutoff_nM=100.0).label is Label.NEGATIVE
    assert assign_label(borderline, cutoff_nM=1000.0).label is Label.POSITIVE
    hot = rec("V2", Status.OTHER, [meas(0.05)])
    assert assign_label(hot, cutoff_nM=1000.0).label is Label.POSITIVE


def test_activity_recorded_on_label():
    item = assign_label(rec("A1", Status.MARKETED, [meas(42.0)]))
    assert item.activity_nM == pytest.approx(42.0)
    assert assign_label(rec("A2", Status.MARKETED)).activity_nM is None


# ---------------------------------------------------------------------------
# Curation pipeline

def test_curate_full_fixture():
    raw = [r for r, _ in FIXTURE]
    raw.append(rec("D01", Status.OTHER, [meas(0.07)], dar=6.0))  # dup of F06
    raw.append(rec("D02", antigen=""))  # incomplete
    raw.append(rec("D03", dar=-1.0))
    raw.append(rec("D04", heavy_chain="EVQZ"))  # Z is not canonical
    raw.append(rec("D05", dar=9.9))  # unlabelable survivor

    report = CurationReport()
    labeled = curate(raw, report=report)

    assert report.kept == len(labeled) == len(FIXTURE)
    by_id = {item.record.id: item.label for item in labeled}
    for record, expected in FIXTURE:
        assert by_id[record.id] is expected

    reasons = dict(report.drops)
    assert reasons["D01"] == "duplicate_of:F06"
    assert reasons["D02"] == "incomplete"
    assert reasons["D03"] == "invalid_dar"
    assert reasons["D04"] == "invalid_sequence"
    assert reasons["D05"] == "unlabelable"


def test_duplicates_pool_measurements():
    # second copy carries the only activity below cutoff
    a = rec("P1", Status.OTHER, [meas(500.0)])
    b = rec("P2", Status.OTHER, [meas(5.0)])
    labeled = curate([a, b])
    assert len(labeled) == 1
    assert labeled[0].label is Label.POSITIVE
    assert labeled[0].activity_nM == pytest.approx(5.0)


def test_normalize_and_dedup_key():
    a = rec("N1", heavy_chain="  evqlv ", dar=4.001)
    b = rec("N2", heavy_chain="EVQLV", dar=3.999)
    assert normalize_record(a).heavy_chain == "EVQLV"
    assert dedup_key(a) == dedup_key(b)  # dar rounds to 4.0 both sides
    c = rec("N3", dar=4.006)
    assert dedup_key(a) != dedup_key(c)


def test_parse_status_aliases():
    assert parse_status("Phase III") is Status.PHASE3
    assert parse_status("phase-1") is Status.PHASE1
    assert parse_status("MARKETED") is Status.MARKETED
    assert parse_status("weird text") is Status.OTHER


# ---------------------------------------------------------------------------
# Splits

def test_split_sizes_reference_corpus():
    split = split_dataset(435, seed=0)
    assert (len(split.train), len(split.val), len(split.test)) == (348, 43, 44)


def test_split_matches_seeded_permutation():
    split = split_dataset(435, seed=3)
    perm = np.random.default_rng(3).permutation(435)
    assert split.train == [int(i) for i in perm[:348]]
    assert split.val == [int(i) for i in perm[348:391]]
    assert split.test == [int(i) for i in perm[391:]]


def test_split_deterministic_and_seed_sensitive():
    assert split_dataset(435, seed=1) == split_dataset(435, seed=1)
    assert split_dataset(435, seed=1) != split_dataset(435, seed=2)


def test_split_too_small():
    with pytest.raises(TooFewRecords):
        split_dataset(9, seed=0)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(min_value=10, max_value=1500),
       seed=st.integers(min_value=0, max_value=2**31 - 1))
def test_split_partition_property(n, seed):
    split = split_dataset(n, seed)
    assert len(split.train) == math.floor(0.8 * n)
    assert len(split.val) == math.floor(0.1 * n)
    combined = split.train + split.val + split.test
    assert sorted(combined) == list(range(n))


# ---------------------------------------------------------------------------
# File formats

def test_csv_ingest_pools_and_reports(tmp_path):
    path = tmp_path / "raw.csv"
    columns = ["id", "heavy_chain", "light_chain", "antigen", "linker_smiles",
               "payload_smiles", "dar", "status", "activity_kind",
               "activity_value", "activity_unit", "activity_qualifier"]
    rows = [
        dict(zip(columns, ["X1", HEAVY, LIGHT, ANTIGEN, "CCO", "CC", "4", "other",
                           "IC50", "500", "nM", ""])),
        dict(zip(columns, ["X1", "", "", "", "", "", "", "",
                           "EC50", "2", "uM", "<"])),
        dict(zip(columns, ["", HEAVY, LIGHT, ANTIGEN, "CCO", "CC", "4", "other",
                           "IC50", "1", "nM", ""])),
        dict(zip(columns, ["X2", HEAVY, LIGHT, ANTIGEN, "CCO", "CC", "4", "other",
                           "BAD50", "1", "nM", ""])),
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)

    report = CurationReport()
    records = read_records_csv(path, report)
    assert [r.id for r in records] == ["X1", "X2"]
    assert len(records[0].measurements) == 2  # pooled across rows
    assert records[0].measurements[1].qualifier is Qualifier.LESS_THAN
    assert any("blank id" in note for note in report.notes)
    assert any("bad measurement" in note for note in report.notes)
    assert records[1].measurements == ()


def test_csv_missing_columns(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("id,dar\na,1\n")
    with pytest.raises(Exception, match="missing columns"):
        read_records_csv(path)


def test_dataset_roundtrip(tmp_path):
    items = [assign_label(r) for r, _ in FIXTURE[:6]]
    path = tmp_path / "ds.jsonl"
    write_dataset(items, path)
    loaded = read_dataset(path)
    assert loaded == items
