"""Small structural-pattern engine (a SMARTS subset).

Supports exactly what the structural-key table needs:

  atoms     * A a, bare organic-subset symbols (aliphatic upper /
            aromatic lower), brackets with primitives #n, element
            symbols, Hn, Dn, Xn, Rn / R / R0, charges, $() recursion,
            ! negation and the , ; & connectives with standard
            precedence (! over & over , over ;)
  bonds     ~ - = # : @ / \\ with ! , ; & connectives; an omitted bond
            means single-or-aromatic
  topology  branches and single-digit ring closures

Matching is injective backtracking over the molecule graph; duplicate
embeddings that cover the same atom set are counted once.
"""

from __future__ import annotations

from functools import lru_cache

from ..errors import AdcpredError
from .elements import ATOMIC_NUMBERS
from .graph import Bond, BondOrder, MolecularGraph

_BARE_ALIPHATIC = {"B", "C", "N", "O", "P", "S", "F", "I"}
_BARE_AROMATIC = {"b", "c", "n", "o", "p", "s"}
_BRACKET_AROMATIC = {"b", "c", "n", "o", "p", "s", "se", "as", "te"}


class SmartsError(AdcpredError):
    """Malformed pattern string."""


class _Ctx:
    """Per-molecule lookups shared by all predicates during a match."""

    __slots__ = ("g", "ring_counts", "ring_atoms", "ring_bond_keys")

    def __init__(self, g: MolecularGraph):
        self.g = g
        counts = [0] * len(g.atoms)
        for ring in g.rings:
            for a in ring:
                counts[a] += 1
        self.ring_counts = counts
        self.ring_atoms = g.ring_atoms
        self.ring_bond_keys = g.ring_bonds


# Atom predicates take (_Ctx, atom_index); bond predicates (_Ctx, Bond).

def _p_true(ctx, i):
    return True


def _p_aromatic(ctx, i):
    return ctx.g.atoms[i].aromatic


def _p_aliphatic(ctx, i):
    return not ctx.g.atoms[i].aromatic


def _element(symbol, aromatic: bool | None):
    def pred(ctx, i):
        atom = ctx.g.atoms[i]
        if atom.element != symbol:
            return False
        return aromatic is None or atom.aromatic == aromatic
    return pred


def _atomic_number(z):
    def pred(ctx, i):
        return ATOMIC_NUMBERS.get(ctx.g.atoms[i].element) == z
    return pred


def _hydrogen_count(n):
    def pred(ctx, i):
        return ctx.g.atoms[i].hydrogens == n
    return pred


def _charge(n):
    def pred(ctx, i):
        return ctx.g.atoms[i].formal_charge == n
    return pred


def _degree(n):
    def pred(ctx, i):
        return ctx.g.degree(i) == n
    return pred


def _connections(n):
    def pred(ctx, i):
        return ctx.g.degree(i) + ctx.g.atoms[i].hydrogens == n
    return pred


def _in_ring(ctx, i):
    return i in ctx.ring_atoms


def _ring_count(n):
    if n == 0:
        return lambda ctx, i: i not in ctx.ring_atoms
    return lambda ctx, i: ctx.ring_counts[i] == n


def _negate(pred):
    return lambda ctx, i: not pred(ctx, i)


def _conj(preds):
    if len(preds) == 1:
        return preds[0]
    return lambda ctx, i: all(p(ctx, i) for p in preds)


def _disj(preds):
    if len(preds) == 1:
        return preds[0]
    return lambda ctx, i: any(p(ctx, i) for p in preds)


def _recursive(pattern):
    return lambda ctx, i: pattern._matches_rooted(ctx, i)


def _b_any(ctx, bond):
    return True


def _b_order(order):
    return lambda ctx, bond: bond.order is order


def _b_ring(ctx, bond):
    return bond.key in ctx.ring_bond_keys


def _b_default(ctx, bond):
    return bond.order is BondOrder.SINGLE or bond.order is BondOrder.AROMATIC


def _b_negate(pred):
    return lambda ctx, bond: not pred(ctx, bond)


def _b_conj(preds):
    if len(preds) == 1:
        return preds[0]
    return lambda ctx, bond: all(p(ctx, bond) for p in preds)


def _b_disj(preds):
    if len(preds) == 1:
        return preds[0]
    return lambda ctx, bond: any(p(ctx, bond) for p in preds)


class SmartsPattern:
    """Compiled connected pattern; match with .matches or .count_unique."""

    def __init__(self, smarts: str):
        if not smarts or not smarts.strip():
            raise SmartsError("empty pattern")
        self.smarts = smarts.strip()
        self.atom_preds: list = []
        # for atom k > 0: list of (earlier atom index, bond pred)
        self.back_edges: list[list[tuple[int, object]]] = []
        self._parse(self.smarts)

    # -- public API ----------------------------------------------------

    def matches(self, g: MolecularGraph) -> bool:
        return self._exists(_Ctx(g))

    def count_unique(self, g: MolecularGraph, more_than: int | None = None) -> int:
        """Distinct matched atom sets; stops early once count > more_than."""
        ctx = _Ctx(g)
        found: set[frozenset] = set()
        for mapping in self._embeddings(ctx):
            found.add(frozenset(mapping))
            if more_than is not None and len(found) > more_than:
                break
        return len(found)

    # -- matching ------------------------------------------------------

    def _exists(self, ctx: _Ctx) -> bool:
        for _ in self._embeddings(ctx):
            return True
        return False

    def _matches_rooted(self, ctx: _Ctx, root: int) -> bool:
        for _ in self._embeddings(ctx, root=root):
            return True
        return False

    def _embeddings(self, ctx: _Ctx, root: int | None = None):
        n_pattern = len(self.atom_preds)
        g = ctx.g
        mapping = [-1] * n_pattern
        used = [False] * len(g.atoms)

        first_candidates = range(len(g.atoms)) if root is None else (root,)

        def extend(k):
            if k == n_pattern:
                yield tuple(mapping)
                return
            pred = self.atom_preds[k]
            edges = self.back_edges[k]
            anchor, first_bond = edges[0]
            for cand in g.neighbors(mapping[anchor]):
                if used[cand] or not pred(ctx, cand):
                    continue
                bond = g.bond_between(mapping[anchor], cand)
                if not first_bond(ctx, bond):
                    continue
                ok = True
                for other, bpred in edges[1:]:
                    b = g.bond_between(mapping[other], cand)
                    if b is None or not bpred(ctx, b):
                        ok = False
                        break
                if not ok:
                    continue
                mapping[k] = cand
                used[cand] = True
                yield from extend(k + 1)
                used[cand] = False
                mapping[k] = -1

        pred0 = self.atom_preds[0]
        for start in first_candidates:
            if not pred0(ctx, start):
                continue
            mapping[0] = start
            used[start] = True
            yield from extend(1)
            used[start] = False
            mapping[0] = -1

    # -- parsing -------------------------------------------------------

    def _parse(self, s: str):
        anchor: int | None = None
        pending: object | None = None
        branch_stack: list[int] = []
        ring_open: dict[int, tuple[int, object | None]] = {}
        i, n = 0, len(s)

        def add_atom(pred):
            nonlocal anchor, pending
            idx = len(self.atom_preds)
            self.atom_preds.append(pred)
            if idx == 0:
                if pending is not None:
                    raise SmartsError("bond before first atom")
                self.back_edges.append([])
            else:
                if anchor is None:
                    raise SmartsError("disconnected pattern (after '.')")
                self.back_edges.append([(anchor, pending or _b_default)])
            pending = None
            anchor = idx

        while i < n:
            ch = s[i]
            if ch == "[":
                pred, i = self._parse_bracket(s, i)
                add_atom(pred)
                continue
            if ch == "*":
                add_atom(_p_true)
                i += 1
                continue
            if ch == "A":
                add_atom(_p_aliphatic)
                i += 1
                continue
            if ch == "a":
                add_atom(_p_aromatic)
                i += 1
                continue
            if s[i : i + 2] in ("Cl", "Br"):
                add_atom(_element(s[i : i + 2], aromatic=False))
                i += 2
                continue
            if ch in _BARE_ALIPHATIC:
                add_atom(_element(ch, aromatic=False))
                i += 1
                continue
            if ch in _BARE_AROMATIC:
                add_atom(_element(ch.upper(), aromatic=True))
                i += 1
                continue
            if ch in "~-=#:@/\\!,;&":
                pred, i = self._parse_bond_expr(s, i)
                if pending is not None:
                    raise SmartsError("two bond expressions in a row")
                pending = pred
                continue
            if ch == "(":
                if anchor is None:
                    raise SmartsError("branch before first atom")
                branch_stack.append(anchor)
                i += 1
                continue
            if ch == ")":
                if not branch_stack:
                    raise SmartsError("unbalanced ')'")
                anchor = branch_stack.pop()
                i += 1
                continue
            if ch.isdigit():
                number = int(ch)
                if anchor is None:
                    raise SmartsError("ring closure before first atom")
                if number in ring_open:
                    other, obond = ring_open.pop(number)
                    if other == anchor:
                        raise SmartsError("ring closure to the same atom")
                    if pending is not None and obond is not None:
                        raise SmartsError("ring-closure bond given at both ends")
                    bond = pending if pending is not None else (obond or _b_default)
                    self.back_edges[max(anchor, other)].append((min(anchor, other), bond))
                else:
                    ring_open[number] = (anchor, pending)
                pending = None
                i += 1
                continue
            raise SmartsError(f"unexpected {ch!r} in pattern")

        if branch_stack:
            raise SmartsError("unbalanced '('")
        if ring_open:
            raise SmartsError("unmatched ring closure in pattern")
        if pending is not None:
            raise SmartsError("dangling bond at end of pattern")
        if not self.atom_preds:
            raise SmartsError("pattern has no atoms")
        for k in range(1, len(self.atom_preds)):
            if not self.back_edges[k]:
                raise SmartsError("pattern must be connected")

    def _parse_bond_expr(self, s: str, i: int):
        groups: list[list] = [[]]  # ','-separated inside one ';' level
        semi: list = []

        def close_comma_level():
            if any(not g for g in groups):
                raise SmartsError("empty bond term")
            semi.append(_b_disj([_b_conj(g) for g in groups]))
            groups.clear()
            groups.append([])

        while i < len(s):
            ch = s[i]
            negate = False
            if ch == "!":
                negate = True
                i += 1
                if i >= len(s):
                    raise SmartsError("dangling '!'")
                ch = s[i]
            if ch == "~":
                prim = _b_any
            elif ch == "-" or ch == "/" or ch == "\\":
                prim = _b_order(BondOrder.SINGLE)
            elif ch == "=":
                prim = _b_order(BondOrder.DOUBLE)
            elif ch == "#":
                prim = _b_order(BondOrder.TRIPLE)
            elif ch == ":":
                prim = _b_order(BondOrder.AROMATIC)
            elif ch == "@":
                prim = _b_ring
            else:
                if negate:
                    raise SmartsError(f"'!' before non-bond {ch!r}")
                break
            groups[-1].append(_b_negate(prim) if negate else prim)
            i += 1
            if i < len(s) and s[i] in ",;&":
                if s[i] == ",":
                    groups.append([])
                elif s[i] == ";":
                    close_comma_level()
                i += 1
        close_comma_level()
        return _b_conj(semi), i

    def _parse_bracket(self, s: str, start: int):
        end = _matching_bracket(s, start)
        body = s[start + 1 : end]
        pred, pos = self._parse_atom_expr(body, 0)
        if pos != len(body):
            raise SmartsError(f"unexpected {body[pos]!r} in [{body}]")
        return pred, end + 1

    def _parse_atom_expr(self, body: str, pos: int):
        semi_terms = []
        comma_terms = []
        amp_terms = []

        def flush_amp():
            if not amp_terms:
                raise SmartsError(f"empty atom term in [{body}]")
            comma_terms.append(_conj(list(amp_terms)))
            amp_terms.clear()

        def flush_comma():
            flush_amp()
            semi_terms.append(_disj(list(comma_terms)))
            comma_terms.clear()

        while pos < len(body):
            ch = body[pos]
            if ch == ";":
                flush_comma()
                pos += 1
                continue
            if ch == ",":
                flush_amp()
                pos += 1
                continue
            if ch == "&":
                pos += 1
                continue
            pred, pos = self._parse_primitive(body, pos)
            amp_terms.append(pred)
        flush_comma()
        return _conj(semi_terms), pos

    def _parse_primitive(self, body: str, pos: int):
        ch = body[pos]
        if ch == "!":
            pred, pos = self._parse_primitive(body, pos + 1)
            return _negate(pred), pos
        if ch == "$":
            if pos + 1 >= len(body) or body[pos + 1] != "(":
                raise SmartsError("'$' must be followed by '(...)'")
            depth, j = 1, pos + 2
            while j < len(body) and depth:
                if body[j] == "(":
                    depth += 1
                elif body[j] == ")":
                    depth -= 1
                j += 1
            if depth:
                raise SmartsError("unbalanced '$(' in pattern")
            inner = compile_smarts(body[pos + 2 : j - 1])
            return _recursive(inner), j
        if ch == "#":
            number, pos = _read_int(body, pos + 1)
            if number is None:
                raise SmartsError("'#' needs an atomic number")
            return _atomic_number(number), pos
        if ch == "*":
            return _p_true, pos + 1
        if ch in "+-":
            sign = 1 if ch == "+" else -1
            number, npos = _read_int(body, pos + 1)
            if number is not None:
                return _charge(sign * number), npos
            magnitude = 1
            pos += 1
            while pos < len(body) and body[pos] == ch:
                magnitude += 1
                pos += 1
            return _charge(sign * magnitude), pos
        # Two-letter element symbols take precedence over the one-letter
        # primitives, so [Ra] is radium and [Hf] hafnium, never R / H.
        two = body[pos : pos + 2]
        if len(two) == 2 and two.islower() and two in _BRACKET_AROMATIC:
            return _element(two.capitalize(), aromatic=True), pos + 2
        if len(two) == 2 and two[0].isupper() and two[1].islower() and two in ATOMIC_NUMBERS:
            return _element(two, aromatic=False), pos + 2
        if ch == "R":
            number, pos = _read_int(body, pos + 1)
            return (_in_ring if number is None else _ring_count(number)), pos
        if ch == "D":
            number, pos = _read_int(body, pos + 1)
            return _degree(1 if number is None else number), pos
        if ch == "X":
            number, pos = _read_int(body, pos + 1)
            return _connections(1 if number is None else number), pos
        if ch == "A":
            return _p_aliphatic, pos + 1
        if ch == "a":
            return _p_aromatic, pos + 1
        if ch == "H":
            number, pos = _read_int(body, pos + 1)
            return _hydrogen_count(1 if number is None else number), pos
        if ch.islower():
            if ch in _BRACKET_AROMATIC:
                return _element(ch.upper(), aromatic=True), pos + 1
            raise SmartsError(f"unknown aromatic symbol {ch!r}")
        if ch in ATOMIC_NUMBERS:
            return _element(ch, aromatic=False), pos + 1
        raise SmartsError(f"unknown primitive {ch!r} in [{body}]")


def _read_int(s: str, pos: int) -> tuple[int | None, int]:
    if pos >= len(s) or not s[pos].isdigit():
        return None, pos
    value = 0
    while pos < len(s) and s[pos].isdigit():
        value = value * 10 + int(s[pos])
        pos += 1
    return value, pos


def _matching_bracket(s: str, start: int) -> int:
    # '$(...)' bodies may contain nested brackets
    depth_sq, depth_par = 0, 0
    for j in range(start, len(s)):
        if s[j] == "[":
            depth_sq += 1
        elif s[j] == "]":
            depth_sq -= 1
            if depth_sq == 0 and depth_par == 0:
                return j
        elif s[j] == "(":
            depth_par += 1
        elif s[j] == ")":
            depth_par -= 1
    raise SmartsError("unclosed '[' in pattern")


@lru_cache(maxsize=1024)
def compile_smarts(smarts: str) -> SmartsPattern:
    return SmartsPattern(smarts)
