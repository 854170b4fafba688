"""Brute-force oracles: exhaustive counting/enumeration of tilings and of
weighted perfect matchings on the smallest torus.

Everything here is exact (arbitrary-precision integers, `fractions.Fraction`
for rational weights) and deliberately small-scale; the closed forms in
`torus` and `thermo` are validated against these numbers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Sequence, Tuple

from .errors import CapExceeded
from .lattice import Cell, Domino, Region, Tiling

DEFAULT_COUNT_CAP = 64
DEFAULT_ENUM_CAP = 100_000


@dataclass(frozen=True)
class MatchingStats:
    """Per-class edge counts of one perfect matching."""

    N_a: int
    N_b: int
    N_c: int
    N_d: int

    @property
    def total(self) -> int:
        return self.N_a + self.N_b + self.N_c + self.N_d


@dataclass(frozen=True)
class TorusGraph:
    """The quotient graph Z^2 / 2nZ^2: 4n^2 vertices, 8n^2 edges."""

    n: int

    def __post_init__(self):
        if self.n < 2 or self.n % 2 != 0:
            raise ValueError("torus size n must be even and >= 2")

    @property
    def side(self) -> int:
        return 2 * self.n


def count_tilings(region: Region, cap: int = DEFAULT_COUNT_CAP) -> int:
    """Exact tiling count by broken-profile dynamic programming.

    Scans cells in (y, x) order; the DP state is the set of cells ahead of
    the scan that are already covered (by a domino placed earlier).
    """
    if region.area > cap:
        raise CapExceeded(f"{region.area} cells exceeds the counting cap {cap}")
    cells = sorted(region.cells, key=lambda c: (c[1], c[0]))
    in_region = region.cells
    states: Dict[frozenset, int] = {frozenset(): 1}
    for cell in cells:
        x, y = cell
        new_states: Dict[frozenset, int] = {}

        def add(state, n):
            new_states[state] = new_states.get(state, 0) + n

        for pending, n in states.items():
            if cell in pending:
                add(pending - {cell}, n)
                continue
            right = (x + 1, y)
            if right in in_region and right not in pending:
                add(pending | {right}, n)
            up = (x, y + 1)
            if up in in_region and up not in pending:
                add(pending | {up}, n)
        states = new_states
        if not states:
            return 0
    return states.get(frozenset(), 0)


def enumerate_tilings(region: Region, limit: int = DEFAULT_ENUM_CAP) -> Iterator[Tiling]:
    """Yield every tiling exactly once, in a deterministic order
    (first uncovered cell is paired horizontally before vertically)."""
    cells = sorted(region.cells, key=lambda c: (c[1], c[0]))
    order = {c: i for i, c in enumerate(cells)}
    in_region = region.cells
    emitted = 0
    chosen: List[Domino] = []
    covered = set()

    def first_free(start: int) -> int:
        i = start
        while i < len(cells) and cells[i] in covered:
            i += 1
        return i

    def rec(start: int):
        nonlocal emitted
        i = first_free(start)
        if i == len(cells):
            emitted += 1
            if emitted > limit:
                raise CapExceeded(f"more than {limit} tilings")
            yield Tiling(chosen)
            return
        cell = cells[i]
        x, y = cell
        for partner in ((x + 1, y), (x, y + 1)):
            if partner in in_region and partner not in covered:
                covered.add(cell)
                covered.add(partner)
                chosen.append(Domino(cell, partner))
                yield from rec(i + 1)
                chosen.pop()
                covered.discard(cell)
                covered.discard(partner)

    yield from rec(0)


# ---------------------------------------------------------------------------
# torus oracle (n = 2 only)
# ---------------------------------------------------------------------------


def torus_edge_class(u: Tuple[int, int], v: Tuple[int, int], side: int) -> str:
    """Edge class on Z^2/(side Z)^2; u must be the left/lower endpoint."""
    horizontal = (u[0] + 1) % side == v[0] and u[1] == v[1]
    even = (u[0] + u[1]) % 2 == 0
    if horizontal:
        return "a" if even else "b"
    return "c" if even else "d"


def torus_edges(t: TorusGraph) -> List[Tuple[Tuple[int, int], Tuple[int, int], str]]:
    side = t.side
    edges = []
    for x in range(side):
        for y in range(side):
            u = (x, y)
            r = ((x + 1) % side, y)
            up = (x, (y + 1) % side)
            edges.append((u, r, torus_edge_class(u, r, side)))
            edges.append((u, up, torus_edge_class(u, up, side)))
    return edges


def torus_matchings(t: TorusGraph, cap_n: int = 2) -> Iterator[List[Tuple[Tuple[int, int], Tuple[int, int], str]]]:
    """All perfect matchings of the torus graph, as lists of classed edges."""
    if t.n > cap_n:
        raise CapExceeded(f"torus oracle only runs at n <= {cap_n}")
    side = t.side
    verts = [(x, y) for y in range(side) for x in range(side)]
    index = {v: i for i, v in enumerate(verts)}
    nbrs: List[List[Tuple[int, Tuple[Tuple[int, int], Tuple[int, int], str]]]] = [
        [] for _ in verts
    ]
    for u, v, cls in torus_edges(t):
        nbrs[index[u]].append((index[v], (u, v, cls)))
        nbrs[index[v]].append((index[u], (u, v, cls)))

    nv = len(verts)
    matched = [False] * nv
    chosen: List[Tuple[Tuple[int, int], Tuple[int, int], str]] = []

    def rec(lo: int):
        i = lo
        while i < nv and matched[i]:
            i += 1
        if i == nv:
            yield list(chosen)
            return
        matched[i] = True
        for j, edge in nbrs[i]:
            if not matched[j]:
                matched[j] = True
                chosen.append(edge)
                yield from rec(i + 1)
                chosen.pop()
                matched[j] = False
        matched[i] = False

    yield from rec(0)


def matching_stats(matching: Sequence[Tuple[Tuple[int, int], Tuple[int, int], str]]) -> MatchingStats:
    counts = {"a": 0, "b": 0, "c": 0, "d": 0}
    for _, _, cls in matching:
        counts[cls] += 1
    return MatchingStats(counts["a"], counts["b"], counts["c"], counts["d"])


def _exactify(w):
    if isinstance(w, (int, Fraction)):
        return Fraction(w)
    if isinstance(w, float) and w == int(w):
        return Fraction(int(w))
    return None


def torus_weighted_sum(t: TorusGraph, weights: Sequence) -> object:
    """Sum over perfect matchings of a^{N_a} b^{N_b} c^{N_c} d^{N_d}.

    With rational weights the result is an exact Fraction; otherwise a float
    accumulated with compensated summation.
    """
    a, b, c, d = weights
    exact = [_exactify(w) for w in (a, b, c, d)]
    if all(e is not None for e in exact):
        wa, wb, wc, wd = exact
        total = Fraction(0)
        for m in torus_matchings(t):
            s = matching_stats(m)
            total += wa**s.N_a * wb**s.N_b * wc**s.N_c * wd**s.N_d
        return total
    wa, wb, wc, wd = (float(x) for x in (a, b, c, d))
    total = 0.0
    comp = 0.0
    for m in torus_matchings(t):
        s = matching_stats(m)
        term = wa**s.N_a * wb**s.N_b * wc**s.N_c * wd**s.N_d
        y = term - comp
        tmp = total + y
        comp = (tmp - total) - y
        total = tmp
    return total
