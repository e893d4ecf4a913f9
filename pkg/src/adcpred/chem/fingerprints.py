"""Hashed circular fingerprints and bit-vector similarity.

The Morgan hashing here is deliberately self-contained: identifiers are
derived with a keyed blake2b digest so that equal inputs give identical
bits across processes and platforms. Bit-for-bit parity with other
toolkits is a non-goal; determinism and the atom-environment semantics
are the contract.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

from ..errors import AdcpredError
from .graph import BondOrder, MolecularGraph


class KindMismatch(AdcpredError):
    """Tanimoto between fingerprints of different kinds."""


class FingerprintKind(Enum):
    MACCS166 = "maccs166"
    MORGAN1024 = "morgan1024"
    ECFP4_2048 = "ecfp4_2048"

    @property
    def length(self) -> int:
        return {"maccs166": 166, "morgan1024": 1024, "ecfp4_2048": 2048}[self.value]


@dataclass(frozen=True)
class Fingerprint:
    kind: FingerprintKind
    bits: int  # bitmask, bit i == 1 << i

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.kind.length:
            raise ValueError(f"bits out of range for {self.kind.value}")

    def __len__(self) -> int:
        return self.kind.length

    def popcount(self) -> int:
        return self.bits.bit_count()

    def get(self, i: int) -> bool:
        if not 0 <= i < self.kind.length:
            raise IndexError(i)
        return bool(self.bits >> i & 1)

    def indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.kind.length) if self.bits >> i & 1)

    def to_hex(self) -> str:
        width = (self.kind.length + 3) // 4
        return format(self.bits, f"0{width}x")

    @classmethod
    def from_hex(cls, kind: FingerprintKind, s: str) -> "Fingerprint":
        return cls(kind=kind, bits=int(s, 16))

    @classmethod
    def from_indices(cls, kind: FingerprintKind, indices) -> "Fingerprint":
        bits = 0
        for i in indices:
            if not 0 <= i < kind.length:
                raise ValueError(f"bit index {i} out of range")
            bits |= 1 << i
        return cls(kind=kind, bits=bits)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|a AND b| / |a OR b|; 1.0 when both vectors are all-zero."""
    if a.kind is not b.kind:
        raise KindMismatch(f"{a.kind.value} vs {b.kind.value}")
    union = (a.bits | b.bits).bit_count()
    if union == 0:
        return 1.0
    return (a.bits & b.bits).bit_count() / union


_ORDER_CODE = {
    BondOrder.SINGLE: 1,
    BondOrder.DOUBLE: 2,
    BondOrder.TRIPLE: 3,
    BondOrder.AROMATIC: 4,
}


def _stable_hash(payload: tuple) -> int:
    digest = hashlib.blake2b(repr(payload).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def morgan_fingerprint(g: MolecularGraph, radius: int = 2,
                       nbits: int = 1024) -> Fingerprint:
    """Circular fingerprint over iteratively hashed atom environments.

    The radius-0 identifier hashes (element, degree, charge, total H,
    ring flag). Each iteration rehashes an atom id together with the
    sorted (bond code, neighbor id) list. An atom stops updating once
    its environment stops growing, and an environment's identifier is
    emitted only the first time that atom set appears (ties broken by
    smallest id), so single-atom graphs light exactly one bit.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if nbits == 1024:
        kind = FingerprintKind.MORGAN1024
    elif nbits == 2048:
        kind = FingerprintKind.ECFP4_2048
    else:
        raise ValueError("supported widths are 1024 and 2048 bits")

    n = len(g.atoms)
    ring_atoms = g.ring_atoms
    ids = []
    envs = []
    for i, atom in enumerate(g.atoms):
        ids.append(_stable_hash((
            "atom", atom.element, g.degree(i), atom.formal_charge,
            atom.hydrogens, i in ring_atoms,
        )))
        envs.append(frozenset((i,)))

    bits = 0
    seen_envs = set()
    for i in range(n):
        bits |= 1 << (ids[i] % nbits)
        seen_envs.add(envs[i])

    for r in range(1, radius + 1):
        next_ids = list(ids)
        next_envs = list(envs)
        candidates: dict[frozenset, int] = {}
        for i in range(n):
            grown = envs[i]
            neigh = []
            for j in g.neighbors(i):
                bond = g.bond_between(i, j)
                neigh.append((_ORDER_CODE[bond.order], ids[j]))
                grown = grown | envs[j]
            if grown == envs[i]:
                continue
            new_id = _stable_hash(("iter", r, ids[i], tuple(sorted(neigh))))
            next_ids[i] = new_id
            next_envs[i] = grown
            prev = candidates.get(grown)
            if prev is None or new_id < prev:
                candidates[grown] = new_id
        for env, ident in candidates.items():
            if env not in seen_envs:
                bits |= 1 << (ident % nbits)
                seen_envs.add(env)
        ids, envs = next_ids, next_envs

    return Fingerprint(kind=kind, bits=bits)


def ecfp4(g: MolecularGraph) -> Fingerprint:
    """Diameter-4 circular fingerprint (radius 2) folded to 2048 bits."""
    return morgan_fingerprint(g, radius=2, nbits=2048)
