import pytest

from adcpred.chem import SmartsError, compile_smarts, parse_smiles


def count(pattern: str, smiles: str, more_than=None) -> int:
    return compile_smarts(pattern).count_unique(parse_smiles(smiles), more_than=more_than)


def hit(pattern: str, smiles: str) -> bool:
    return compile_smarts(pattern).matches(parse_smiles(smiles))


# (pattern, smiles, expected match) frozen by hand against the pattern grammar
PRIMITIVE_ORACLE = [
    ("*", "C", True),
    ("A", "C", True),
    ("A", "c1ccccc1", False),
    ("a", "c1ccccc1", True),
    ("a", "C1CCCCC1", False),
    ("C", "c1ccccc1", False),  # bare aliphatic C never matches aromatic
    ("c", "c1ccccc1", True),
    ("[#6]", "c1ccccc1", True),  # atomic number ignores aromaticity
    ("[#6]", "CC", True),
    ("[#7]", "CC", False),
    ("[CH3]", "CC", True),
    ("[CH2]", "CC", False),
    ("[OH]", "CCO", True),
    ("[O-]", "CC(=O)[O-]", True),
    ("[O-]", "CC(=O)O", False),
    ("[N+]", "[NH4+]", True),
    ("[D2]", "CCC", True),  # middle carbon has two heavy neighbors
    ("[D3]", "CCC", False),
    ("[X4]", "C", True),  # connections count hydrogens
    ("[X4]", "C=C", False),
    ("[R]", "C1CC1", True),
    ("[R]", "CCC", False),
    ("[R0]", "C1CC1C", True),  # the exocyclic methyl
    ("[R2]", "c1ccc2ccccc2c1", True),  # fusion atoms sit in two rings
    ("[R2]", "c1ccccc1", False),
]


@pytest.mark.parametrize("pattern,smiles,expected", PRIMITIVE_ORACLE,
                         ids=[f"{p}~{s}" for p, s, _ in PRIMITIVE_ORACLE])
def test_primitives(pattern, smiles, expected):
    assert hit(pattern, smiles) is expected


def test_two_letter_bracket_elements():
    assert hit("[Fe]", "[Fe]")
    assert not hit("[Fe]", "F")
    # Hf must not be read as hydrogen-count-then-fluorine
    assert hit("[Hf]", "[Hf]")
    assert not hit("[Hf]", "FC")


def test_logical_connectives():
    # negation binds tightest
    assert hit("[!C]", "CCO")  # the oxygen
    assert not hit("[!C]", "CC")
    # & is AND
    assert hit("[C&R]", "C1CC1")
    assert not hit("[C&R]", "CC")
    # , is OR and binds looser than &
    assert hit("[C,N]", "N")
    assert hit("[C,N]", "C")
    assert not hit("[C,N]", "O")
    # ; is lowest-precedence AND: [C,N;R] == (C or N) and R
    assert hit("[C,N;R]", "C1CC1")
    assert hit("[C,N;R]", "N1CC1")
    assert hit("[C,N;R]", "O1CC1")  # ring carbons qualify
    assert not hit("[C,N;R]", "CN")
    assert not hit("[O,S;R]", "C1CC1")


def test_recursive_pattern():
    # carbon directly bonded to a hydroxyl oxygen
    pat = "[C&$(CO)]"
    assert hit(pat, "CCO")
    assert not hit(pat, "CC")
    # carbonyl carbon via recursion
    assert count("[$(C=O)]", "CC(=O)OC(=O)C") == 2


def test_bond_expressions():
    assert hit("C=O", "CC(=O)O")
    assert not hit("C#N", "CC(=O)O")
    assert hit("C~O", "CC(=O)O")
    assert hit("c:c", "c1ccccc1")
    assert not hit("c:c", "C=C")
    # default (omitted) bond is single-or-aromatic
    assert hit("cc", "c1ccccc1")
    assert hit("CC", "CC")
    assert not hit("CO", "C=O")
    # ring-membership bond
    assert hit("C@C", "C1CC1")
    assert not hit("C@C", "CC")
    assert hit("C!@C", "CC")
    assert not hit("C!@C", "C1CC1")


def test_branches_and_ring_closures():
    assert hit("C(F)(F)F", "FC(F)(F)C")
    assert not hit("C(F)(F)F", "FC(F)C")
    assert hit("C1CCCCC1", "C1CCCCC1")
    assert not hit("C1CCCCC1", "C1CCCC1")
    assert hit("c1ccccc1", "Cc1ccccc1")


def test_count_unique_dedupes_symmetric_embeddings():
    # benzene: 6 aromatic CH atoms, each counted once despite automorphisms
    assert count("[cH]", "c1ccccc1") == 6
    # each aromatic bond would embed twice (both directions); unique sets -> 6
    assert count("cc", "c1ccccc1") == 6
    # hexane has 5 C-C bonds
    assert count("CC", "CCCCCC") == 5
    # methyl groups on toluene vs xylene
    assert count("[CH3]", "Cc1ccccc1") == 1
    assert count("[CH3]", "Cc1ccccc1C") == 2


def test_count_unique_more_than_short_circuits():
    # stops as soon as the count exceeds the threshold
    assert count("[cH]", "c1ccccc1", more_than=2) == 3
    assert count("[cH]", "c1ccccc1", more_than=0) == 1


def test_aromatic_nitrogen_cases():
    assert hit("[nH]", "c1cc[nH]c1")
    assert not hit("[nH]", "c1ccncc1")
    assert hit("n", "c1ccncc1")
    assert not hit("n", "C1CCNCC1")


MALFORMED = ["", "  ", "[C", "C(", ")C", "[Qq]", "[$(]", "C1CC", "[]"]


@pytest.mark.parametrize("pattern", MALFORMED, ids=[repr(p) for p in MALFORMED])
def test_malformed_patterns(pattern):
    with pytest.raises(SmartsError):
        compile_smarts(pattern)


def test_compile_is_cached_and_reusable():
    p = compile_smarts("[OH]")
    assert p.count_unique(parse_smiles("OCCO")) == 2
    assert p.count_unique(parse_smiles("CCCC")) == 0
    assert compile_smarts("[OH]") is p  # lru cache returns the same object
