"""Molecular graph model with ring perception.

Atoms and bonds are immutable after construction. Ring perception keeps
a smallest-set-of-smallest-rings style basis (one shortest independent
cycle per chord of a spanning forest), which is what the fingerprint
and scaffold code need.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from ..errors import AdcpredError


class BondOrder(enum.Enum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self) -> float:
        """Contribution to an atom's bonded valence; aromatic counts 1.5."""
        return 1.5 if self is BondOrder.AROMATIC else float(self.value)


class Chirality(enum.Enum):
    CCW = "@"
    CW = "@@"


class BondStereo(enum.Enum):
    UP = "/"
    DOWN = "\\"
    CIS = "cis"
    TRANS = "trans"


@dataclass(frozen=True)
class Atom:
    element: str
    formal_charge: int = 0
    isotope: int | None = None
    aromatic: bool = False
    explicit_h: int = 0
    hydrogens: int = 0  # total H: explicit for bracket atoms, inferred otherwise
    chirality: Chirality | None = None


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE
    stereo: BondStereo | None = None

    def other(self, idx: int) -> int:
        return self.b if idx == self.a else self.a

    @property
    def key(self) -> tuple[int, int]:
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)


class GraphError(AdcpredError):
    pass


@dataclass
class MolecularGraph:
    atoms: list[Atom]
    bonds: list[Bond]
    rings: list[list[int]] = field(default_factory=list)

    _adjacency: list[list[int]] | None = None
    _ring_atoms: frozenset[int] | None = None
    _ring_bonds: frozenset[tuple[int, int]] | None = None

    def __post_init__(self):
        self._validate()
        if not self.rings:
            self.rings = _perceive_rings(self)

    def _validate(self):
        n = len(self.atoms)
        seen = set()
        for bond in self.bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise GraphError(f"bond {bond.a}-{bond.b} references a missing atom")
            if bond.a == bond.b:
                raise GraphError(f"self-bond on atom {bond.a}")
            if bond.key in seen:
                raise GraphError(f"duplicate bond {bond.key}")
            seen.add(bond.key)
            if bond.order is BondOrder.AROMATIC:
                if not (self.atoms[bond.a].aromatic and self.atoms[bond.b].aromatic):
                    raise GraphError(
                        f"aromatic bond {bond.key} joins a non-aromatic atom"
                    )

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def adjacency(self) -> list[list[int]]:
        """Neighbor bond indices per atom."""
        if self._adjacency is None:
            adj: list[list[int]] = [[] for _ in self.atoms]
            for i, bond in enumerate(self.bonds):
                adj[bond.a].append(i)
                adj[bond.b].append(i)
            self._adjacency = adj
        return self._adjacency

    def neighbors(self, idx: int) -> list[int]:
        return [self.bonds[bi].other(idx) for bi in self.adjacency[idx]]

    def degree(self, idx: int) -> int:
        return len(self.adjacency[idx])

    def bond_between(self, a: int, b: int) -> Bond | None:
        for bi in self.adjacency[a]:
            if self.bonds[bi].other(a) == b:
                return self.bonds[bi]
        return None

    @property
    def ring_bonds(self) -> frozenset[tuple[int, int]]:
        """Bond keys that sit on some cycle (i.e. are not bridges)."""
        if self._ring_bonds is None:
            bridges = _find_bridges(self)
            self._ring_bonds = frozenset(
                b.key for b in self.bonds if b.key not in bridges
            )
        return self._ring_bonds

    @property
    def ring_atoms(self) -> frozenset[int]:
        if self._ring_atoms is None:
            members = set()
            for a, b in self.ring_bonds:
                members.add(a)
                members.add(b)
            self._ring_atoms = frozenset(members)
        return self._ring_atoms

    def in_ring(self, idx: int) -> bool:
        return idx in self.ring_atoms

    def components(self) -> list[list[int]]:
        """Connected components as sorted atom-index lists."""
        seen = [False] * len(self.atoms)
        out = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            queue = deque([start])
            seen[start] = True
            comp = []
            while queue:
                cur = queue.popleft()
                comp.append(cur)
                for nb in self.neighbors(cur):
                    if not seen[nb]:
                        seen[nb] = True
                        queue.append(nb)
            out.append(sorted(comp))
        return out

    def aromatic_ring_count(self) -> int:
        count = 0
        for ring in self.rings:
            closed = ring + [ring[0]]
            if all(
                (b := self.bond_between(closed[i], closed[i + 1])) is not None
                and b.order is BondOrder.AROMATIC
                for i in range(len(ring))
            ):
                count += 1
        return count


def _find_bridges(g: MolecularGraph) -> set[tuple[int, int]]:
    """Tarjan bridge finding, iterative to survive long chains."""
    n = len(g.atoms)
    disc = [-1] * n
    low = [0] * n
    bridges: set[tuple[int, int]] = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        stack: list[tuple[int, int, int]] = [(root, -1, 0)]  # atom, parent bond, edge pos
        while stack:
            node, parent_bond, pos = stack.pop()
            if pos == 0:
                disc[node] = low[node] = timer
                timer += 1
            incident = g.adjacency[node]
            if pos < len(incident):
                stack.append((node, parent_bond, pos + 1))
                bi = incident[pos]
                if bi == parent_bond:
                    continue
                nb = g.bonds[bi].other(node)
                if disc[nb] == -1:
                    stack.append((nb, bi, 0))
                else:
                    low[node] = min(low[node], disc[nb])
            else:
                if parent_bond != -1:
                    parent = g.bonds[parent_bond].other(node)
                    low[parent] = min(low[parent], low[node])
                    if low[node] > disc[parent]:
                        bridges.add(g.bonds[parent_bond].key)
    return bridges


def _shortest_cycle_through(g: MolecularGraph, bond: Bond) -> list[int] | None:
    """Shortest path between the bond endpoints avoiding the bond itself,
    closed into a cycle. BFS, deterministic tie-breaking by atom index."""
    start, goal = bond.a, bond.b
    prev: dict[int, int] = {start: -1}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur == goal:
            break
        for bi in g.adjacency[cur]:
            edge = g.bonds[bi]
            if edge.key == bond.key:
                continue
            nb = edge.other(cur)
            if nb not in prev:
                prev[nb] = cur
                queue.append(nb)
    if goal not in prev:
        return None
    path = [goal]
    while path[-1] != start:
        path.append(prev[path[-1]])
    return path


def _perceive_rings(g: MolecularGraph) -> list[list[int]]:
    """SSSR-style basis: candidate shortest cycles per edge, then a greedy
    GF(2)-independent selection of cyclomatic-number many, smallest first."""
    n_cycles = len(g.bonds) - len(g.atoms) + len(g.components())
    if n_cycles <= 0:
        return []

    bond_pos = {bond.key: i for i, bond in enumerate(g.bonds)}
    candidates: dict[frozenset, list[int]] = {}
    for bond in g.bonds:
        cycle = _shortest_cycle_through(g, bond)
        if cycle is None:
            continue
        edge_set = frozenset(
            bond_pos[(min(a, b), max(a, b))]
            for a, b in zip(cycle, cycle[1:] + [cycle[0]])
        )
        if edge_set not in candidates:
            candidates[edge_set] = cycle

    ordered = sorted(candidates.items(), key=lambda kv: (len(kv[1]), sorted(kv[1])))
    basis: dict[int, int] = {}  # pivot bit -> reduced edge-incidence vector
    rings: list[list[int]] = []
    for edge_set, cycle in ordered:
        vec = 0
        for ei in edge_set:
            vec |= 1 << ei
        while vec:
            pivot = vec & -vec
            if pivot not in basis:
                break
            vec ^= basis[pivot]
        if vec:
            basis[vec & -vec] = vec
            rings.append(cycle)
            if len(rings) == n_cycles:
                break
    return rings
