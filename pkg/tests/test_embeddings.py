import hashlib
import json

import numpy as np
import pytest

from adcpred.embeddings import (
    COMPONENT_TAGS,
    COMPONENTS,
    FULL_DIM,
    ConflictingDuplicate,
    DegenerateColumn,
    DimensionMismatch,
    EmbeddingKind,
    EmbeddingRecord,
    EmbeddingStore,
    EmptyContent,
    FormatError,
    MissingEmbedding,
    content_key,
    fallback_featurizer,
    fit_dar_scaler,
    fuse,
    fused_dim,
    load_store,
    merge_into,
    normalize_content,
    scale_dar,
)


def make_record(seed: int, kind=EmbeddingKind.PROTEIN) -> EmbeddingRecord:
    rng = np.random.default_rng(seed)
    values = rng.normal(size=kind.dim)
    key = hashlib.sha256(f"rec-{seed}".encode()).hexdigest()
    return EmbeddingRecord(key=key, kind=kind, dim=kind.dim, values=values)


# -- content normalization ----------------------------------------------

def test_protein_normalization_is_case_and_space_insensitive():
    a = normalize_content(EmbeddingKind.PROTEIN, " mKv \nLq ")
    assert a == "MKVLQ"
    assert content_key(EmbeddingKind.PROTEIN, "mkvlq") == \
        content_key(EmbeddingKind.PROTEIN, "  MKV LQ  ")


def test_molecule_normalization_keeps_case():
    assert normalize_content(EmbeddingKind.MOLECULE, " CCO ") == "CCO"
    assert content_key(EmbeddingKind.MOLECULE, "CCO") != \
        content_key(EmbeddingKind.MOLECULE, "cco")


def test_content_key_is_sha256_of_normalized():
    expected = hashlib.sha256(b"CCO").hexdigest()
    assert content_key(EmbeddingKind.MOLECULE, " CCO ") == expected


def test_empty_content_rejected():
    with pytest.raises(EmptyContent):
        content_key(EmbeddingKind.PROTEIN, "   ")


# -- record validation ---------------------------------------------------

def test_record_validates_key_format():
    with pytest.raises(FormatError):
        EmbeddingRecord(key="nothex", kind=EmbeddingKind.PROTEIN,
                        dim=1280, values=np.zeros(1280))


def test_record_validates_dim_against_values():
    key = "0" * 64
    with pytest.raises(DimensionMismatch):
        EmbeddingRecord(key=key, kind=EmbeddingKind.PROTEIN,
                        dim=1280, values=np.zeros(100))
    with pytest.raises(DimensionMismatch):
        EmbeddingRecord(key=key, kind=EmbeddingKind.MOLECULE,
                        dim=1280, values=np.zeros(1280))


def test_record_rejects_non_finite():
    values = np.zeros(256)
    values[3] = np.nan
    with pytest.raises(FormatError):
        EmbeddingRecord(key="0" * 64, kind=EmbeddingKind.MOLECULE,
                        dim=256, values=values)


def test_record_values_become_readonly():
    rec = make_record(1)
    with pytest.raises(ValueError):
        rec.values[0] = 99.0


def test_kind_dims():
    assert EmbeddingKind.PROTEIN.dim == 1280
    assert EmbeddingKind.MOLECULE.dim == 256


# -- store ----------------------------------------------------------------

def test_store_add_get_contains():
    store = EmbeddingStore()
    rec = make_record(2)
    store.add(rec)
    assert len(store) == 1
    assert rec.key in store
    assert store.get(rec.key) is rec


def test_store_identical_duplicate_collapses():
    store = EmbeddingStore()
    rec = make_record(3)
    store.add(rec)
    store.add(make_record(3))
    assert len(store) == 1


def test_store_conflicting_duplicate_raises():
    store = EmbeddingStore()
    rec = make_record(4)
    store.add(rec)
    other = EmbeddingRecord(key=rec.key, kind=rec.kind, dim=rec.dim,
                            values=rec.values + 1.0)
    with pytest.raises(ConflictingDuplicate):
        store.add(other)


def test_store_missing_key():
    with pytest.raises(MissingEmbedding):
        EmbeddingStore().get("f" * 64)


def test_store_vector_by_content():
    store = EmbeddingStore()
    vec = fallback_featurizer(EmbeddingKind.MOLECULE, "CCO")
    key = content_key(EmbeddingKind.MOLECULE, "CCO")
    store.add(EmbeddingRecord(key=key, kind=EmbeddingKind.MOLECULE,
                              dim=256, values=vec))
    assert np.array_equal(store.vector(EmbeddingKind.MOLECULE, "CCO"), vec)


def test_save_load_roundtrip(tmp_path):
    store = EmbeddingStore()
    for seed in range(3):
        store.add(make_record(seed))
    store.add(make_record(10, EmbeddingKind.MOLECULE))
    path = tmp_path / "emb.jsonl"
    store.save(path)
    loaded = load_store(path)
    assert len(loaded) == 4
    for rec in store:
        got = loaded.get(rec.key)
        assert got.kind is rec.kind
        assert np.array_equal(got.values, rec.values)


def test_load_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.jsonl"
    good = make_record(5)
    path.write_text(json.dumps({
        "key": good.key, "kind": "protein", "dim": 1280,
        "values": [0.0] * 1280,
    }) + "\n{not json\n")
    with pytest.raises(FormatError) as exc:
        load_store(path)
    assert exc.value.line == 2


@pytest.mark.parametrize("mutate,reason", [
    (lambda d: d.pop("values"), "missing"),
    (lambda d: d.update(kind="video"), "kind"),
    (lambda d: d.update(values="zzz"), "numeric"),
    (lambda d: d.update(values=[[1.0]]), "flat"),
    (lambda d: d.update(key=123), "string"),
])
def test_load_rejects_malformed_records(tmp_path, mutate, reason):
    raw = {"key": "a" * 64, "kind": "molecule", "dim": 256,
           "values": [0.1] * 256}
    mutate(raw)
    path = tmp_path / "one.jsonl"
    path.write_text(json.dumps(raw) + "\n")
    with pytest.raises(FormatError) as exc:
        load_store(path)
    assert exc.value.line == 1
    assert reason in str(exc.value)


def test_merge_into_accumulates(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    s1, s2 = EmbeddingStore(), EmbeddingStore()
    s1.add(make_record(6))
    s2.add(make_record(7))
    s1.save(a)
    s2.save(b)
    merged = EmbeddingStore()
    merge_into(merged, a)
    merge_into(merged, b)
    assert len(merged) == 2


def test_merge_skips_blank_lines(tmp_path):
    store = EmbeddingStore()
    store.add(make_record(8))
    path = tmp_path / "gaps.jsonl"
    store.save(path)
    path.write_text("\n" + path.read_text() + "\n\n")
    assert len(load_store(path)) == 1


# -- DAR scaling ----------------------------------------------------------

def test_dar_scaler_oracle():
    # values [2, 4, 6]: mean 4, population std sqrt(8/3) = 1.63299...,
    # z of the extremes = 2/1.63299 = 1.22474...
    scaler = fit_dar_scaler([2.0, 4.0, 6.0])
    assert scaler.mean == 4.0
    assert scaler.std == pytest.approx(1.6329931618554521)
    assert scaler.z_max == pytest.approx(1.2247448713915892)
    assert scale_dar(scaler, 6.0) == pytest.approx(1.0)
    assert scale_dar(scaler, 2.0) == pytest.approx(-1.0)
    assert scale_dar(scaler, 4.0) == 0.0


def test_scaled_training_values_stay_in_unit_band():
    rng = np.random.default_rng(11)
    dars = rng.uniform(1, 8, size=40)
    scaler = fit_dar_scaler(dars)
    scaled = [scale_dar(scaler, d) for d in dars]
    assert max(abs(s) for s in scaled) == pytest.approx(1.0)
    assert all(-1.0 - 1e-12 <= s <= 1.0 + 1e-12 for s in scaled)


def test_unseen_dar_can_exceed_band():
    scaler = fit_dar_scaler([2.0, 4.0, 6.0])
    assert scale_dar(scaler, 60.0) > 1.0


def test_degenerate_dar_column():
    with pytest.raises(DegenerateColumn):
        fit_dar_scaler([4.0, 4.0, 4.0])
    with pytest.raises(DegenerateColumn):
        fit_dar_scaler([4.0])


def test_small_z_max_does_not_inflate():
    # if all training z's are tiny, dividing by max(1, z_max) keeps scale
    scaler = fit_dar_scaler([3.9, 4.0, 4.1])
    assert scaler.z_max <= 1.5
    z = (4.1 - scaler.mean) / scaler.std
    assert scale_dar(scaler, 4.1) == pytest.approx(z / max(1.0, scaler.z_max))


# -- fusion ----------------------------------------------------------------

def vecs():
    rng = np.random.default_rng(21)
    return {
        "linker": rng.normal(size=256),
        "payload": rng.normal(size=256),
        "heavy": rng.normal(size=1280),
        "light": rng.normal(size=1280),
        "antigen": rng.normal(size=1280),
    }


def test_full_dim_constant():
    assert FULL_DIM == 4353
    assert COMPONENT_TAGS == ("linker", "payload", "heavy", "light", "antigen", "dar")
    assert dict(COMPONENTS)["heavy"] == 1280


ABLATION_DIMS = [
    (frozenset(), 4353),
    (frozenset({"antigen"}), 3073),
    (frozenset({"heavy", "light"}), 1793),
    (frozenset({"linker"}), 4097),
    (frozenset({"payload"}), 4097),
    (frozenset({"dar"}), 4352),
]


@pytest.mark.parametrize("ablation,dim", ABLATION_DIMS,
                         ids=["-".join(sorted(a)) or "full" for a, _ in ABLATION_DIMS])
def test_fused_dim_table(ablation, dim):
    assert fused_dim(ablation) == dim
    v = vecs()
    fused = fuse(v["linker"], v["payload"], v["heavy"], v["light"],
                 v["antigen"], 0.25, ablation=ablation)
    assert fused.x.shape == (dim,)


def test_fuse_layout_and_component_slices():
    v = vecs()
    fused = fuse(v["linker"], v["payload"], v["heavy"], v["light"],
                 v["antigen"], 0.25)
    assert [t for t, _, _ in fused.layout] == list(COMPONENT_TAGS)
    offsets = [off for _, off, _ in fused.layout]
    assert offsets == [0, 256, 512, 1792, 3072, 4352]
    assert np.array_equal(fused.component("payload"), v["payload"])
    assert fused.component("dar")[0] == 0.25
    with pytest.raises(KeyError):
        fused.component("nope")


def test_fuse_ablated_layout_shifts():
    v = vecs()
    fused = fuse(v["linker"], v["payload"], v["heavy"], v["light"],
                 v["antigen"], 0.0, ablation=frozenset({"heavy", "light"}))
    tags = [t for t, _, _ in fused.layout]
    assert tags == ["linker", "payload", "antigen", "dar"]
    assert np.array_equal(fused.component("antigen"), v["antigen"])
    with pytest.raises(KeyError):
        fused.component("heavy")


def test_fuse_rejects_wrong_dims():
    v = vecs()
    with pytest.raises(DimensionMismatch):
        fuse(np.zeros(10), v["payload"], v["heavy"], v["light"], v["antigen"], 0.0)


def test_fuse_rejects_unknown_ablation_tag():
    v = vecs()
    with pytest.raises(ValueError):
        fuse(v["linker"], v["payload"], v["heavy"], v["light"], v["antigen"],
             0.0, ablation=frozenset({"warhead"}))
    with pytest.raises(ValueError):
        fused_dim(frozenset({"warhead"}))


# -- fallback featurizer ----------------------------------------------------

def test_fallback_is_deterministic_and_content_keyed():
    a = fallback_featurizer(EmbeddingKind.MOLECULE, "CCO")
    b = fallback_featurizer(EmbeddingKind.MOLECULE, " CCO ")
    c = fallback_featurizer(EmbeddingKind.MOLECULE, "CCC")
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.shape == (256,)


def test_fallback_protein_dim_and_bounds():
    v = fallback_featurizer(EmbeddingKind.PROTEIN, "MKVLQ")
    assert v.shape == (1280,)
    assert np.all(np.abs(v) <= 1.0)
    w = fallback_featurizer(EmbeddingKind.PROTEIN, "mkvlq")
    assert np.array_equal(v, w)


def test_fallback_dim_override():
    v = fallback_featurizer(EmbeddingKind.MOLECULE, "CCO", dim=16)
    assert v.shape == (16,)
