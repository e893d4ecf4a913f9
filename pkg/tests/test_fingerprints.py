import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adcpred.chem import (
    Fingerprint,
    FingerprintKind,
    KindMismatch,
    ecfp4,
    morgan_fingerprint,
    parse_smiles,
    tanimoto,
)


def fp(smiles: str) -> Fingerprint:
    return ecfp4(parse_smiles(smiles))


def test_single_atom_lights_exactly_one_bit():
    assert fp("C").popcount() == 1
    assert fp("[NH4+]").popcount() == 1
    assert fp("O").popcount() == 1


def test_methane_and_ethane_differ():
    assert fp("C") != fp("CC")


def test_atom_numbering_does_not_matter():
    # same molecule written from either end
    assert fp("CCO") == fp("OCC")
    assert fp("CC(=O)O") == fp("OC(C)=O")
    assert fp("c1ccc(O)cc1") == fp("Oc1ccccc1")


def test_distinct_molecules_distinct_prints():
    mols = ["CCO", "CCC", "c1ccccc1", "CC(=O)O", "CCN", "C1CC1"]
    prints = [fp(m) for m in mols]
    assert len({p.bits for p in prints}) == len(mols)


def test_determinism_across_calls():
    a = fp("COc1ccc2[nH]cc(CCN)c2c1")
    b = fp("COc1ccc2[nH]cc(CCN)c2c1")
    assert a.bits == b.bits


def test_radius_zero_counts_atom_types():
    # ethane: both carbons share (element, degree, charge, H, ring) -> 1 bit
    g = parse_smiles("CC")
    assert morgan_fingerprint(g, radius=0).popcount() == 1
    # ethanol: CH3, CH2, OH are three distinct radius-0 environments
    g = parse_smiles("CCO")
    assert morgan_fingerprint(g, radius=0).popcount() == 3


def test_larger_radius_adds_bits():
    g = parse_smiles("CCCCCO")
    p0 = morgan_fingerprint(g, radius=0).popcount()
    p1 = morgan_fingerprint(g, radius=1).popcount()
    p2 = morgan_fingerprint(g, radius=2).popcount()
    assert p0 < p1 <= p2


def test_width_selection():
    g = parse_smiles("CCO")
    assert morgan_fingerprint(g, nbits=1024).kind is FingerprintKind.MORGAN1024
    assert morgan_fingerprint(g, nbits=2048).kind is FingerprintKind.ECFP4_2048
    with pytest.raises(ValueError):
        morgan_fingerprint(g, nbits=512)
    with pytest.raises(ValueError):
        morgan_fingerprint(g, radius=-1)


def test_tanimoto_identical_is_one():
    a = fp("CC(=O)Oc1ccccc1C(=O)O")
    assert tanimoto(a, a) == 1.0


def test_tanimoto_hand_computed():
    a = Fingerprint.from_indices(FingerprintKind.MORGAN1024, [0, 1, 2, 3])
    b = Fingerprint.from_indices(FingerprintKind.MORGAN1024, [2, 3, 4, 5])
    assert tanimoto(a, b) == pytest.approx(2 / 6)


def test_tanimoto_both_empty_is_one():
    z = Fingerprint(FingerprintKind.MORGAN1024, 0)
    assert tanimoto(z, z) == 1.0


def test_tanimoto_kind_mismatch():
    a = Fingerprint(FingerprintKind.MORGAN1024, 1)
    b = Fingerprint(FingerprintKind.ECFP4_2048, 1)
    with pytest.raises(KindMismatch):
        tanimoto(a, b)


bitsets = st.sets(st.integers(min_value=0, max_value=1023), max_size=40)


@settings(max_examples=200, deadline=None)
@given(bitsets, bitsets)
def test_tanimoto_properties(xs, ys):
    a = Fingerprint.from_indices(FingerprintKind.MORGAN1024, xs)
    b = Fingerprint.from_indices(FingerprintKind.MORGAN1024, ys)
    s = tanimoto(a, b)
    assert 0.0 <= s <= 1.0
    assert s == tanimoto(b, a)
    assert tanimoto(a, a) == 1.0
    if xs and ys and not (xs & ys):
        assert s == 0.0


def test_hex_roundtrip():
    p = fp("c1ccc2ccccc2c1")
    q = Fingerprint.from_hex(p.kind, p.to_hex())
    assert q == p
    assert len(p.to_hex()) == 512  # 2048 bits / 4


def test_indices_roundtrip():
    p = fp("CCOC(=O)C")
    q = Fingerprint.from_indices(p.kind, p.indices())
    assert q == p
    assert p.popcount() == len(p.indices())


def test_bit_accessors():
    p = Fingerprint.from_indices(FingerprintKind.MACCS166, [0, 165])
    assert p.get(0) and p.get(165) and not p.get(80)
    with pytest.raises(IndexError):
        p.get(166)
    with pytest.raises(ValueError):
        Fingerprint.from_indices(FingerprintKind.MACCS166, [166])
    with pytest.raises(ValueError):
        Fingerprint(FingerprintKind.MACCS166, 1 << 166)


def test_kind_lengths():
    assert FingerprintKind.MACCS166.length == 166
    assert FingerprintKind.MORGAN1024.length == 1024
    assert FingerprintKind.ECFP4_2048.length == 2048
    assert len(Fingerprint(FingerprintKind.MORGAN1024, 0)) == 1024
