"""Molecular graphs, fingerprints, descriptors, and similarity."""

from .graph import (
    Atom,
    Bond,
    BondOrder,
    BondStereo,
    Chirality,
    GraphError,
    MolecularGraph,
)
from .smiles import ParseError, parse_smiles
from .fingerprints import (
    Fingerprint,
    FingerprintKind,
    KindMismatch,
    ecfp4,
    morgan_fingerprint,
    tanimoto,
)
from .maccs import maccs_fingerprint
from .descriptors import molecular_weight, murcko_scaffold
from .similarity import (
    EmptyList,
    EmptySequence,
    NonPositiveScore,
    harmonic_mean_similarity,
    sequence_identity,
)
from .smarts import SmartsError, SmartsPattern, compile_smarts

__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "BondStereo",
    "Chirality",
    "GraphError",
    "MolecularGraph",
    "ParseError",
    "parse_smiles",
    "Fingerprint",
    "FingerprintKind",
    "KindMismatch",
    "ecfp4",
    "morgan_fingerprint",
    "tanimoto",
    "maccs_fingerprint",
    "molecular_weight",
    "murcko_scaffold",
    "EmptyList",
    "EmptySequence",
    "NonPositiveScore",
    "harmonic_mean_similarity",
    "sequence_identity",
    "SmartsError",
    "SmartsPattern",
    "compile_smarts",
]
