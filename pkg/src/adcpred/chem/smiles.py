"""Isomeric SMILES parser.

Supports branches, ring closures (including %nn), bracket atoms with
isotope / chirality / H-count / charge / atom class, aromatic lowercase
atoms, the bond symbols ``- = # : / \\``, wildcard ``*``, and
dot-separated fragments.

Aromaticity is taken as written (lowercase atoms, ``:`` bonds, and the
default bond between two aromatic atoms); there is no perception pass.
Implicit hydrogens are inferred for organic-subset atoms from the
standard valence sets; bracket atoms carry their explicit H count and
are exempt from valence checking, since charges and hypervalent
species alter the rules.
"""

from __future__ import annotations

import math

from ..errors import AdcpredError
from .graph import Atom, Bond, BondOrder, BondStereo, Chirality, MolecularGraph
from .elements import ATOMIC_NUMBERS

ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_ORGANIC = {"b", "c", "n", "o", "p", "s"}
AROMATIC_BRACKET = {"b", "c", "n", "o", "p", "s", "se", "as", "te"}

# Standard valence sets used for implicit-H inference and valence checks.
VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

_BOND_SYMBOLS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
}


class ParseError(AdcpredError):
    """SMILES rejection with the byte offset of the offending token."""

    def __init__(self, offset: int, reason: str):
        self.offset = offset
        self.reason = reason
        super().__init__(f"offset {offset}: {reason}")


class _PendingAtom:
    __slots__ = (
        "element", "aromatic", "charge", "isotope", "explicit_h",
        "chirality", "bracket", "offset",
    )

    def __init__(self, element, aromatic, offset, bracket=False,
                 charge=0, isotope=None, explicit_h=0, chirality=None):
        self.element = element
        self.aromatic = aromatic
        self.charge = charge
        self.isotope = isotope
        self.explicit_h = explicit_h
        self.chirality = chirality
        self.bracket = bracket
        self.offset = offset


def parse_smiles(s: str) -> MolecularGraph:
    """Parse a SMILES string into a MolecularGraph.

    Raises ParseError (with byte offset) on malformed input: unbalanced
    parentheses, unmatched ring closures, unknown elements, conflicting
    ring-bond orders, and valence violations.
    """
    if not s or not s.strip():
        raise ParseError(0, "empty SMILES")
    s = s.strip()

    atoms: list[_PendingAtom] = []
    bonds: list[tuple[int, int, BondOrder | None, BondStereo | None, int]] = []
    anchor: int | None = None
    pending_bond: str | None = None
    pending_offset = 0
    branch_stack: list[tuple[int | None, int]] = []
    ring_open: dict[int, tuple[int, str | None, int]] = {}

    def add_atom(atom: _PendingAtom):
        nonlocal anchor, pending_bond
        idx = len(atoms)
        atoms.append(atom)
        if anchor is not None:
            bonds.append(
                (anchor, idx, *_resolve_bond_for(pending_bond, anchor, idx), pending_offset)
            )
        elif pending_bond is not None:
            raise ParseError(pending_offset, "bond symbol with no preceding atom")
        pending_bond = None
        anchor = idx

    def close_ring(number: int, offset: int):
        nonlocal pending_bond
        if anchor is None:
            raise ParseError(offset, "ring-closure digit before any atom")
        if number in ring_open:
            other, other_bond, _ = ring_open.pop(number)
            if other == anchor:
                raise ParseError(offset, f"ring-closure {number} bonds an atom to itself")
            symbol = _merge_ring_bond(pending_bond, other_bond, offset, number)
            bonds.append((other, anchor, *_resolve_bond_for(symbol, other, anchor), offset))
        else:
            ring_open[number] = (anchor, pending_bond, offset)
        pending_bond = None

    def _resolve_bond_for(symbol: str | None, a: int, b: int):
        if symbol is None:
            both_aromatic = atoms[a].aromatic and atoms[b].aromatic
            return (BondOrder.AROMATIC if both_aromatic else BondOrder.SINGLE), None
        if symbol == "/":
            return BondOrder.SINGLE, BondStereo.UP
        if symbol == "\\":
            return BondOrder.SINGLE, BondStereo.DOWN
        return _BOND_SYMBOLS[symbol], None

    i = 0
    n = len(s)
    while i < n:
        ch = s[i]
        if ch == "[":
            atom, i = _parse_bracket(s, i)
            add_atom(atom)
            continue
        if ch.isalpha() or ch == "*":
            atom, i = _parse_bare_atom(s, i)
            add_atom(atom)
            continue
        if ch in "-=#:/\\":
            if pending_bond is not None:
                raise ParseError(i, "two consecutive bond symbols")
            if anchor is None and not ring_open:
                raise ParseError(i, "bond symbol with no preceding atom")
            pending_bond = ch
            pending_offset = i
            i += 1
            continue
        if ch == "(":
            if anchor is None:
                raise ParseError(i, "branch opened before any atom")
            branch_stack.append((anchor, i))
            i += 1
            continue
        if ch == ")":
            if not branch_stack:
                raise ParseError(i, "unbalanced ')': no open branch")
            if pending_bond is not None:
                raise ParseError(pending_offset, "dangling bond symbol before ')'")
            anchor, _ = branch_stack.pop()
            i += 1
            continue
        if ch.isdigit():
            close_ring(int(ch), i)
            i += 1
            continue
        if ch == "%":
            if i + 2 >= n or not (s[i + 1].isdigit() and s[i + 2].isdigit()):
                raise ParseError(i, "'%' must be followed by two digits")
            close_ring(int(s[i + 1 : i + 3]), i)
            i += 3
            continue
        if ch == ".":
            if pending_bond is not None:
                raise ParseError(pending_offset, "bond symbol before '.'")
            anchor = None
            i += 1
            continue
        raise ParseError(i, f"unexpected character {ch!r}")

    if branch_stack:
        raise ParseError(branch_stack[-1][1], "unbalanced '(': branch never closed")
    if pending_bond is not None:
        raise ParseError(pending_offset, "dangling bond symbol at end of input")
    if ring_open:
        number, (_, _, offset) = min(ring_open.items(), key=lambda kv: kv[1][2])
        raise ParseError(offset, f"unmatched ring-closure {number}")
    if not atoms:
        raise ParseError(0, "no atoms in SMILES")

    return _build_graph(atoms, bonds)


def _parse_bare_atom(s: str, i: int) -> tuple[_PendingAtom, int]:
    # Two-letter organic subset first (Cl, Br).
    if s[i : i + 2] in ("Cl", "Br"):
        return _PendingAtom(s[i : i + 2], aromatic=False, offset=i), i + 2
    ch = s[i]
    if ch == "*":
        return _PendingAtom("*", aromatic=False, offset=i), i + 1
    if ch in AROMATIC_ORGANIC:
        return _PendingAtom(ch.upper(), aromatic=True, offset=i), i + 1
    if ch in ORGANIC_SUBSET:
        return _PendingAtom(ch, aromatic=False, offset=i), i + 1
    raise ParseError(i, f"unknown element or symbol {ch!r} outside brackets")


def _parse_bracket(s: str, start: int) -> tuple[_PendingAtom, int]:
    end = s.find("]", start)
    if end == -1:
        raise ParseError(start, "unclosed bracket atom")
    body = s[start + 1 : end]
    pos = 0

    isotope = None
    while pos < len(body) and body[pos].isdigit():
        isotope = (isotope or 0) * 10 + int(body[pos])
        pos += 1

    if pos >= len(body):
        raise ParseError(start + 1 + pos, "bracket atom missing element symbol")
    element, aromatic, pos = _parse_bracket_symbol(body, pos, start)

    chirality = None
    if pos < len(body) and body[pos] == "@":
        if body[pos : pos + 2] == "@@":
            chirality = Chirality.CW
            pos += 2
        else:
            chirality = Chirality.CCW
            pos += 1
        if pos < len(body) and body[pos].isalpha() and body[pos] not in "H":
            raise ParseError(start + 1 + pos, "unsupported chirality descriptor")

    explicit_h = 0
    if pos < len(body) and body[pos] == "H":
        pos += 1
        if pos < len(body) and body[pos].isdigit():
            explicit_h = int(body[pos])
            pos += 1
        else:
            explicit_h = 1

    charge = 0
    if pos < len(body) and body[pos] in "+-":
        sign = 1 if body[pos] == "+" else -1
        symbol = body[pos]
        pos += 1
        if pos < len(body) and body[pos].isdigit():
            magnitude = 0
            while pos < len(body) and body[pos].isdigit():
                magnitude = magnitude * 10 + int(body[pos])
                pos += 1
            charge = sign * magnitude
        else:
            magnitude = 1
            while pos < len(body) and body[pos] == symbol:
                magnitude += 1
                pos += 1
            charge = sign * magnitude

    if pos < len(body) and body[pos] == ":":
        pos += 1
        if pos >= len(body) or not body[pos].isdigit():
            raise ParseError(start + 1 + pos, "atom class ':' needs digits")
        while pos < len(body) and body[pos].isdigit():
            pos += 1  # atom-class number is accepted and discarded

    if pos != len(body):
        raise ParseError(start + 1 + pos, f"unexpected {body[pos]!r} in bracket atom")

    return (
        _PendingAtom(
            element,
            aromatic,
            offset=start,
            bracket=True,
            charge=charge,
            isotope=isotope,
            explicit_h=explicit_h,
            chirality=chirality,
        ),
        end + 1,
    )


def _parse_bracket_symbol(body: str, pos: int, start: int) -> tuple[str, bool, int]:
    if body[pos] == "*":
        return "*", False, pos + 1
    two = body[pos : pos + 2]
    if len(two) == 2 and two.islower() and two in AROMATIC_BRACKET:
        return two.capitalize(), True, pos + 2
    if body[pos].islower():
        if body[pos] in AROMATIC_BRACKET:
            return body[pos].upper(), True, pos + 1
        raise ParseError(start + 1 + pos, f"unknown aromatic element {body[pos]!r}")
    if two in ATOMIC_NUMBERS and len(two) == 2 and two[1].islower():
        return two, False, pos + 2
    one = body[pos]
    if one in ATOMIC_NUMBERS:
        return one, False, pos + 1
    raise ParseError(start + 1 + pos, f"unknown element {two!r}")


def _merge_ring_bond(a: str | None, b: str | None, offset: int, number: int) -> str | None:
    if a is not None and b is not None and a != b:
        raise ParseError(offset, f"conflicting bond orders on ring-closure {number}")
    return a if a is not None else b


def _build_graph(pending: list[_PendingAtom],
                 raw_bonds: list[tuple]) -> MolecularGraph:
    bond_sum = [0.0] * len(pending)
    seen_keys = set()
    bonds = []
    for a, b, order, stereo, offset in raw_bonds:
        key = (min(a, b), max(a, b))
        if key in seen_keys:
            raise ParseError(offset, f"duplicate bond between atoms {a} and {b}")
        seen_keys.add(key)
        if order is BondOrder.AROMATIC and not (pending[a].aromatic and pending[b].aromatic):
            raise ParseError(offset, "aromatic bond between non-aromatic atoms")
        bonds.append(Bond(a=a, b=b, order=order, stereo=stereo))
        bond_sum[a] += order.valence
        bond_sum[b] += order.valence

    atoms = []
    for idx, p in enumerate(pending):
        hydrogens = p.explicit_h
        if not p.bracket and p.element in VALENCES:
            hydrogens = _implicit_hydrogens(p, bond_sum[idx])
        atoms.append(
            Atom(
                element=p.element,
                formal_charge=p.charge,
                isotope=p.isotope,
                aromatic=p.aromatic,
                explicit_h=p.explicit_h,
                hydrogens=hydrogens,
                chirality=p.chirality,
            )
        )
    return MolecularGraph(atoms=atoms, bonds=bonds)


def _implicit_hydrogens(p: _PendingAtom, bond_sum: float) -> int:
    valences = VALENCES[p.element]
    ceil_sum = math.ceil(bond_sum)
    for v in valences:
        if v >= ceil_sum:
            return v - ceil_sum
    # Aromatic counting is fuzzy at fused-ring junctions (e.g. three
    # aromatic bonds sum to 4.5); tolerate as zero-H when the floor fits.
    if math.floor(bond_sum) <= max(valences):
        return 0
    raise ParseError(
        p.offset,
        f"valence violation: {p.element} with bond order total {bond_sum:g}",
    )
