"""Molecular weight and framework extraction."""

from __future__ import annotations

import math

from .elements import ATOMIC_WEIGHTS, HYDROGEN_WEIGHT
from .graph import Atom, Bond, MolecularGraph
from .smiles import VALENCES


def molecular_weight(g: MolecularGraph) -> float:
    """Sum of atomic weights plus attached hydrogens, in g/mol.

    Isotope-labelled atoms contribute their mass number (the integral
    isotopic mass is a close stand-in for the exact one); wildcard
    atoms contribute nothing.
    """
    total = 0.0
    for atom in g.atoms:
        if atom.isotope is not None:
            total += float(atom.isotope)
        else:
            total += ATOMIC_WEIGHTS.get(atom.element, 0.0)
        total += atom.hydrogens * HYDROGEN_WEIGHT
    return total


def murcko_scaffold(g: MolecularGraph) -> MolecularGraph:
    """Ring systems plus the linkers that join them.

    Degree-1 atoms are deleted repeatedly until none remain, which
    leaves exactly the rings and the paths between them. Acyclic
    molecules reduce to the empty graph. Implicit hydrogen counts on
    surviving unbracketed atoms are refreshed to cover the bonds that
    were removed.
    """
    keep = [True] * len(g.atoms)
    degree = [g.degree(i) for i in range(len(g.atoms))]
    queue = [i for i, d in enumerate(degree) if d <= 1]
    while queue:
        i = queue.pop()
        if not keep[i]:
            continue
        if degree[i] > 1:
            continue
        keep[i] = False
        for j in g.neighbors(i):
            if keep[j]:
                degree[j] -= 1
                if degree[j] <= 1:
                    queue.append(j)

    index = {}
    atoms: list[Atom] = []
    for i, flag in enumerate(keep):
        if flag:
            index[i] = len(atoms)
            atoms.append(g.atoms[i])

    bonds = []
    bond_sum = [0.0] * len(atoms)
    for bond in g.bonds:
        if keep[bond.a] and keep[bond.b]:
            a, b = index[bond.a], index[bond.b]
            bonds.append(Bond(a=a, b=b, order=bond.order, stereo=bond.stereo))
            bond_sum[a] += bond.order.valence
            bond_sum[b] += bond.order.valence

    for i, atom in enumerate(atoms):
        if atom.explicit_h == 0 and atom.formal_charge == 0 and atom.element in VALENCES:
            atoms[i] = Atom(
                element=atom.element,
                formal_charge=atom.formal_charge,
                isotope=atom.isotope,
                aromatic=atom.aromatic,
                explicit_h=atom.explicit_h,
                hydrogens=_refreshed_h(atom.element, bond_sum[i]),
                chirality=atom.chirality,
            )
    return MolecularGraph(atoms=atoms, bonds=bonds)


def _refreshed_h(element: str, bond_sum: float) -> int:
    ceil_sum = math.ceil(bond_sum)
    for v in VALENCES[element]:
        if v >= ceil_sum:
            return v - ceil_sum
    return 0
