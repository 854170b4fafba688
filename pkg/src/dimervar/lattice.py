"""Lattice regions, dominos, height functions and the bijection between them.

Conventions (fixed once, used everywhere):

* a cell (x, y) is the unit square [x, x+1] x [y, y+1]; it is *white* when
  x + y is even, black otherwise;
* a horizontal domino is class 'a' (north-going) when its left cell is
  white, 'b' (south-going) otherwise; a vertical domino is class 'c'
  (east-going) when its lower cell is white, 'd' (west-going) otherwise;
* walking a directed lattice edge with a black cell on the left, the height
  steps +1 when the edge does not bisect a domino and -3 when it does;
  with a white cell on the left the steps are -1 / +3.

Heights are pinned by a base vertex on the region boundary, so tilings and
height functions are in bijection.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Tuple

import numpy as np

from .errors import (
    BaseMismatch,
    InvalidHeight,
    NotExtendable,
    RegionError,
)

Cell = Tuple[int, int]
Vertex = Tuple[int, int]

# unit steps in the order E, N, W, S
_STEPS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def cell_is_white(cell: Cell) -> bool:
    return (cell[0] + cell[1]) % 2 == 0


def left_cell(u: Vertex, v: Vertex) -> Cell:
    """Cell on the left of the directed unit edge u -> v."""
    dx, dy = v[0] - u[0], v[1] - u[1]
    if (dx, dy) == (1, 0):
        return (u[0], u[1])
    if (dx, dy) == (0, 1):
        return (u[0] - 1, u[1])
    if (dx, dy) == (-1, 0):
        return (u[0] - 1, u[1] - 1)
    if (dx, dy) == (0, -1):
        return (u[0], u[1] - 1)
    raise ValueError(f"not a unit edge: {u} -> {v}")


def edge_cells(u: Vertex, v: Vertex) -> Tuple[Cell, Cell]:
    """The two cells flanking the undirected edge u-v."""
    return left_cell(u, v), left_cell(v, u)


@dataclass(frozen=True)
class Domino:
    """Two adjacent cells.  Cells are stored in sorted order."""

    cell1: Cell
    cell2: Cell

    def __post_init__(self):
        c1, c2 = sorted((tuple(self.cell1), tuple(self.cell2)))
        object.__setattr__(self, "cell1", c1)
        object.__setattr__(self, "cell2", c2)
        dx = abs(c1[0] - c2[0])
        dy = abs(c1[1] - c2[1])
        if dx + dy != 1:
            raise RegionError(f"cells not adjacent: {c1}, {c2}")

    @property
    def horizontal(self) -> bool:
        return self.cell1[1] == self.cell2[1]

    @property
    def orientation_class(self) -> str:
        """'a'/'b' for horizontal (by left-cell color), 'c'/'d' for vertical."""
        if self.horizontal:
            return "a" if cell_is_white(self.cell1) else "b"
        return "c" if cell_is_white(self.cell1) else "d"

    def cells(self) -> Tuple[Cell, Cell]:
        return self.cell1, self.cell2


@dataclass(frozen=True)
class Tiling:
    dominos: FrozenSet[Domino]

    def __init__(self, dominos: Iterable[Domino]):
        object.__setattr__(self, "dominos", frozenset(dominos))

    def class_counts(self) -> Dict[str, int]:
        counts = {"a": 0, "b": 0, "c": 0, "d": 0}
        for d in self.dominos:
            counts[d.orientation_class] += 1
        return counts

    def canonical(self) -> Tuple[Tuple[Cell, Cell], ...]:
        """Deterministic hashable form, for comparing sampled tilings."""
        return tuple(sorted(d.cells() for d in self.dominos))


class Region:
    """A finite, edge-connected, simply connected set of cells with a based
    boundary vertex fixing the additive height constant."""

    def __init__(self, cells: Iterable[Cell], base_vertex: Vertex, base_height: int = 0):
        self.cells: FrozenSet[Cell] = frozenset((int(x), int(y)) for x, y in cells)
        self.base_vertex: Vertex = (int(base_vertex[0]), int(base_vertex[1]))
        self.base_height = int(base_height)
        if not self.cells:
            raise RegionError("region has no cells")
        self._validate_connected()
        self._validate_simply_connected()

        verts = set()
        for (x, y) in self.cells:
            verts.update(((x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)))
        self.vertices: FrozenSet[Vertex] = frozenset(verts)

        # boundary vertex: at least one of its four surrounding cells is missing
        self.boundary_vertices: FrozenSet[Vertex] = frozenset(
            v for v in verts if any(c not in self.cells for c in self._corner_cells(v))
        )
        if self.base_vertex not in self.boundary_vertices:
            raise RegionError("base vertex must lie on the region boundary")

        # adjacency through edges contained in the region
        adj: Dict[Vertex, List[Vertex]] = {v: [] for v in verts}
        for v in verts:
            for dx, dy in _STEPS:
                u = (v[0] + dx, v[1] + dy)
                if u in verts and self._edge_in_region(v, u):
                    adj[v].append(u)
        self.adjacency = adj
        self._forced_boundary = None
        self._index_cache = None

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def _corner_cells(v: Vertex) -> Tuple[Cell, Cell, Cell, Cell]:
        x, y = v
        return ((x, y), (x - 1, y), (x, y - 1), (x - 1, y - 1))

    def _edge_in_region(self, u: Vertex, v: Vertex) -> bool:
        c1, c2 = edge_cells(u, v)
        return c1 in self.cells or c2 in self.cells

    def is_boundary_edge(self, u: Vertex, v: Vertex) -> bool:
        c1, c2 = edge_cells(u, v)
        return (c1 in self.cells) != (c2 in self.cells)

    def _validate_connected(self):
        start = next(iter(self.cells))
        seen = {start}
        stack = [start]
        while stack:
            x, y = stack.pop()
            for dx, dy in _STEPS:
                c = (x + dx, y + dy)
                if c in self.cells and c not in seen:
                    seen.add(c)
                    stack.append(c)
        if len(seen) != len(self.cells):
            raise RegionError("cells are not edge-connected")

    def _validate_simply_connected(self):
        # flood-fill the complement inside an inflated bounding box; a hole
        # shows up as a second complement component
        xs = [c[0] for c in self.cells]
        ys = [c[1] for c in self.cells]
        x0, x1 = min(xs) - 1, max(xs) + 1
        y0, y1 = min(ys) - 1, max(ys) + 1
        start = (x0, y0)
        seen = {start}
        stack = [start]
        while stack:
            x, y = stack.pop()
            for dx, dy in _STEPS:
                c = (x + dx, y + dy)
                if x0 <= c[0] <= x1 and y0 <= c[1] <= y1 and c not in self.cells and c not in seen:
                    seen.add(c)
                    stack.append(c)
        total_box = (x1 - x0 + 1) * (y1 - y0 + 1)
        if len(seen) != total_box - len(self.cells):
            raise RegionError("region is not simply connected")

    # -- derived structure -----------------------------------------------------

    def forced_boundary_heights(self) -> Dict[Vertex, int]:
        """Boundary heights are forced on a simply connected region: every
        boundary edge steps by exactly +-1 (sign from the left-cell color).
        Raises NotExtendable when the walk is inconsistent (odd regions)."""
        if self._forced_boundary is not None:
            return dict(self._forced_boundary)
        heights = {self.base_vertex: self.base_height}
        stack = [self.base_vertex]
        while stack:
            u = stack.pop()
            hu = heights[u]
            for v in self.adjacency[u]:
                if not self.is_boundary_edge(u, v):
                    continue
                hv = hu + (1 if not cell_is_white(left_cell(u, v)) else -1)
                if v in heights:
                    if heights[v] != hv:
                        raise NotExtendable("boundary height walk is inconsistent")
                else:
                    heights[v] = hv
                    stack.append(v)
        if set(heights) != set(self.boundary_vertices):
            raise NotExtendable("boundary is not connected through boundary edges")
        self._forced_boundary = heights
        return dict(heights)

    def index(self) -> "RegionIndex":
        if self._index_cache is None:
            self._index_cache = RegionIndex(self)
        return self._index_cache

    # -- generic ---------------------------------------------------------------

    @property
    def area(self) -> int:
        return len(self.cells)

    def __eq__(self, other):
        return (
            isinstance(other, Region)
            and self.cells == other.cells
            and self.base_vertex == other.base_vertex
            and self.base_height == other.base_height
        )

    def __hash__(self):
        return hash((self.cells, self.base_vertex, self.base_height))

    def __repr__(self):
        return f"Region({len(self.cells)} cells, base={self.base_vertex}@{self.base_height})"


@dataclass
class RegionIndex:
    """Flat array view of a region used by the chain kernels."""

    region: Region = field(repr=False)
    verts: List[Vertex] = field(init=False)
    vid: Dict[Vertex, int] = field(init=False)
    nbr4: np.ndarray = field(init=False)      # (V, 4) int32; row = self for boundary
    interior: np.ndarray = field(init=False)  # int32 ids of interior vertices

    def __post_init__(self):
        self.verts = sorted(self.region.vertices)
        self.vid = {v: i for i, v in enumerate(self.verts)}
        nv = len(self.verts)
        self.nbr4 = np.empty((nv, 4), dtype=np.int32)
        interior = []
        for i, v in enumerate(self.verts):
            if v in self.region.boundary_vertices:
                self.nbr4[i, :] = i
            else:
                # interior vertices always have exactly four region neighbors
                for k, (dx, dy) in enumerate(_STEPS):
                    self.nbr4[i, k] = self.vid[(v[0] + dx, v[1] + dy)]
                interior.append(i)
        self.interior = np.asarray(interior, dtype=np.int32)

    def heights_to_array(self, h: "HeightFunction") -> np.ndarray:
        arr = np.empty(len(self.verts), dtype=np.int32)
        for v, i in self.vid.items():
            arr[i] = h.values[v]
        return arr

    def array_to_heights(self, arr: np.ndarray) -> "HeightFunction":
        values = {v: int(arr[i]) for v, i in self.vid.items()}
        return HeightFunction(self.region, values)


class HeightFunction:
    """Integer heights on the region's lattice vertices."""

    def __init__(self, region: Region, values: Dict[Vertex, int], validate: bool = False):
        self.region = region
        self.values = {(int(x), int(y)): int(h) for (x, y), h in values.items()}
        if validate:
            self.validate()

    def validate(self):
        region = self.region
        if set(self.values) != set(region.vertices):
            raise InvalidHeight("heights must cover exactly the region vertices")
        if self.values[region.base_vertex] != region.base_height:
            raise InvalidHeight("base height mismatch")
        for u, nbrs in region.adjacency.items():
            hu = self.values[u]
            for v in nbrs:
                d = self.values[v] - hu
                if cell_is_white(left_cell(u, v)):
                    if d not in (-1, 3):
                        raise InvalidHeight(f"bad step {d} on edge {u}->{v}")
                else:
                    if d not in (1, -3):
                        raise InvalidHeight(f"bad step {d} on edge {u}->{v}")
                if region.is_boundary_edge(u, v) and abs(d) != 1:
                    raise InvalidHeight(f"boundary edge {u}->{v} steps by {d}")

    def __getitem__(self, v: Vertex) -> int:
        return self.values[v]

    def __eq__(self, other):
        return isinstance(other, HeightFunction) and self.values == other.values

    def __hash__(self):
        return hash(frozenset(self.values.items()))

    def __le__(self, other: "HeightFunction") -> bool:
        return all(h <= other.values[v] for v, h in self.values.items())

    def __repr__(self):
        return f"HeightFunction({len(self.values)} vertices)"


# ---------------------------------------------------------------------------
# tiling <-> height bijection
# ---------------------------------------------------------------------------


def _step(u: Vertex, v: Vertex, crossing: bool) -> int:
    if cell_is_white(left_cell(u, v)):
        return 3 if crossing else -1
    return -3 if crossing else 1


def tiling_to_height(region: Region, tiling: Tiling) -> HeightFunction:
    """Height function of a tiling, pinned at the region's base vertex."""
    cell_owner: Dict[Cell, Domino] = {}
    for dom in tiling.dominos:
        for c in dom.cells():
            if c in cell_owner:
                raise InvalidHeight(f"cell {c} covered twice")
            if c not in region.cells:
                raise InvalidHeight(f"domino cell {c} outside region")
            cell_owner[c] = dom
    if len(cell_owner) != len(region.cells):
        raise InvalidHeight("tiling does not cover the region")

    def crossing(u: Vertex, v: Vertex) -> bool:
        c1, c2 = edge_cells(u, v)
        return c1 in cell_owner and c2 in cell_owner and cell_owner[c1] is cell_owner[c2]

    heights = {region.base_vertex: region.base_height}
    stack = [region.base_vertex]
    while stack:
        u = stack.pop()
        hu = heights[u]
        for v in region.adjacency[u]:
            if v not in heights:
                heights[v] = hu + _step(u, v, crossing(u, v))
                stack.append(v)
    return HeightFunction(region, heights)


def height_to_tiling(region: Region, h: HeightFunction) -> Tiling:
    """Dominos are the cell pairs whose shared edge has height gap 3."""
    h.validate()
    dominos = []
    covered: Dict[Cell, int] = {}
    for cell in region.cells:
        x, y = cell
        for nb in ((x + 1, y), (x, y + 1)):
            if nb not in region.cells:
                continue
            if nb[0] == x + 1:
                u, v = (x + 1, y), (x + 1, y + 1)  # shared vertical edge
            else:
                u, v = (x, y + 1), (x + 1, y + 1)  # shared horizontal edge
            if abs(h.values[u] - h.values[v]) == 3:
                dominos.append(Domino(cell, nb))
                covered[cell] = covered.get(cell, 0) + 1
                covered[nb] = covered.get(nb, 0) + 1
    if len(covered) != len(region.cells) or any(n != 1 for n in covered.values()):
        raise InvalidHeight("height function does not induce a perfect tiling")
    return Tiling(dominos)


# ---------------------------------------------------------------------------
# lattice structure
# ---------------------------------------------------------------------------


def _check_same_base(h1: HeightFunction, h2: HeightFunction):
    if h1.region.cells != h2.region.cells:
        raise BaseMismatch("height functions live on different regions")
    b1 = h1.values[h1.region.base_vertex]
    b2 = h2.values[h2.region.base_vertex]
    if (b1 - b2) % 4 != 0:
        raise BaseMismatch(f"base heights differ mod 4: {b1} vs {b2}")


def meet(h1: HeightFunction, h2: HeightFunction) -> HeightFunction:
    _check_same_base(h1, h2)
    values = {v: min(h, h2.values[v]) for v, h in h1.values.items()}
    return HeightFunction(h1.region, values, validate=True)


def join(h1: HeightFunction, h2: HeightFunction) -> HeightFunction:
    _check_same_base(h1, h2)
    values = {v: max(h, h2.values[v]) for v, h in h1.values.items()}
    return HeightFunction(h1.region, values, validate=True)


# ---------------------------------------------------------------------------
# Fournier extensions
# ---------------------------------------------------------------------------


def min_max_extensions(region: Region, boundary: Dict[Vertex, int]):
    """Minimal and maximal complete extensions of boundary heights.

    H_max(v) = min over increasing paths w->v of b(w) + length; an increasing
    edge has a black cell on its left.  H_min is the mirror image over
    decreasing (white-left) edges.  Computed by multi-source Dijkstra
    relaxation; raises NotExtendable when the data admits no extension.
    """
    boundary = {(int(x), int(y)): int(h) for (x, y), h in boundary.items()}
    if set(boundary) != set(region.boundary_vertices):
        raise NotExtendable("boundary heights must cover exactly the boundary vertices")
    if boundary[region.base_vertex] != region.base_height:
        raise NotExtendable("boundary heights disagree with the base height")

    def relax(sign: int) -> Dict[Vertex, int]:
        # sign=+1: minimize b(w)+len over black-left edges (H_max)
        # sign=-1: maximize b(w)-len over white-left edges (H_min)
        dist = {v: sign * boundary[v] for v in boundary}
        heap = [(d, v) for v, d in dist.items()]
        heapq.heapify(heap)
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist.get(u, float("inf")):
                continue
            for v in region.adjacency[u]:
                white = cell_is_white(left_cell(u, v))
                if (sign == 1 and white) or (sign == -1 and not white):
                    continue
                nd = d + 1
                if nd < dist.get(v, float("inf")):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        if set(dist) != set(region.vertices):
            raise NotExtendable("some vertex unreachable by monotone paths")
        return {v: sign * d for v, d in dist.items()}

    try:
        hmax = relax(+1)
        hmin = relax(-1)
        for v in region.boundary_vertices:
            if hmax[v] != boundary[v] or hmin[v] != boundary[v]:
                raise NotExtendable("relaxation moved a boundary value")
        if any(hmin[v] > hmax[v] for v in region.vertices):
            raise NotExtendable("lower envelope exceeds upper envelope")
        lo = HeightFunction(region, hmin, validate=True)
        hi = HeightFunction(region, hmax, validate=True)
    except InvalidHeight as exc:
        raise NotExtendable(f"no complete extension: {exc}") from exc
    return lo, hi


def tileable(region: Region) -> bool:
    """True iff the region admits at least one tiling: the forced boundary
    walk must close up and the Fournier extensions must exist."""
    try:
        boundary = region.forced_boundary_heights()
        min_max_extensions(region, boundary)
        return True
    except NotExtendable:
        return False


def normalize_height(h: HeightFunction, n: float) -> Dict[Tuple[float, float], float]:
    """Rescale to the unit of the variational problem: coordinates and
    values divided by n."""
    if n <= 0:
        raise ValueError("scale must be positive")
    return {(x / n, y / n): v / n for (x, y), v in h.values.items()}


# ---------------------------------------------------------------------------
# stock regions
# ---------------------------------------------------------------------------


def rectangle(width: int, height: int, base_height: int = 0) -> Region:
    cells = [(x, y) for x in range(width) for y in range(height)]
    return Region(cells, base_vertex=(0, 0), base_height=base_height)


def aztec_diamond(order: int, base_height: int = 0) -> Region:
    """Cells (x, y) with |x + 1/2| + |y + 1/2| <= order, based at the west corner."""
    n = int(order)
    if n < 1:
        raise RegionError("order must be >= 1")
    cells = [
        (x, y)
        for x in range(-n, n)
        for y in range(-n, n)
        if abs(x + 0.5) + abs(y + 0.5) <= n
    ]
    return Region(cells, base_vertex=(-n, 0), base_height=base_height)


def aztec_boundary_heights(order: int, base_height: int = 0) -> Dict[Vertex, int]:
    """Boundary heights of the order-n Aztec diamond without building the
    region (cheap at any order): BFS over boundary edges with the forced
    +-1 steps, from the west corner."""
    n = int(order)

    def in_region(c: Cell) -> bool:
        return abs(c[0] + 0.5) + abs(c[1] + 0.5) <= n

    def on_boundary(v: Vertex) -> bool:
        x, y = v
        flags = [in_region(c) for c in ((x, y), (x - 1, y), (x, y - 1), (x - 1, y - 1))]
        return any(flags) and not all(flags)

    start: Vertex = (-n, 0)
    heights = {start: int(base_height)}
    stack = [start]
    while stack:
        u = stack.pop()
        hu = heights[u]
        for dx, dy in _STEPS:
            v = (u[0] + dx, u[1] + dy)
            c1, c2 = edge_cells(u, v)
            if in_region(c1) == in_region(c2):
                continue
            if v in heights:
                continue
            if not on_boundary(v):
                continue
            heights[v] = hu + (1 if not cell_is_white(left_cell(u, v)) else -1)
            stack.append(v)
    return heights


# ---------------------------------------------------------------------------
# JSON round-trips
# ---------------------------------------------------------------------------


def region_to_json(region: Region) -> str:
    return json.dumps(
        {
            "cells": sorted([list(c) for c in region.cells]),
            "base_vertex": list(region.base_vertex),
            "base_height": region.base_height,
        }
    )


def region_from_json(text: str) -> Region:
    data = json.loads(text)
    try:
        return Region(
            [tuple(c) for c in data["cells"]],
            base_vertex=tuple(data["base_vertex"]),
            base_height=data.get("base_height", 0),
        )
    except (KeyError, TypeError) as exc:
        raise RegionError(f"malformed region JSON: {exc}") from exc


def height_to_json(h: HeightFunction) -> str:
    return json.dumps({"vertices": sorted([x, y, v] for (x, y), v in h.values.items())})


def height_from_json(region: Region, text: str) -> HeightFunction:
    data = json.loads(text)
    values = {(x, y): v for x, y, v in data["vertices"]}
    return HeightFunction(region, values, validate=True)


def tiling_to_json(tiling: Tiling) -> str:
    return json.dumps({"dominos": sorted([list(d.cell1), list(d.cell2)] for d in tiling.dominos)})


def tiling_from_json(text: str) -> Tiling:
    data = json.loads(text)
    return Tiling(Domino(tuple(c1), tuple(c2)) for c1, c2 in data["dominos"])
