"""Limit-shape solver: maximize the entropy functional over discrete
2-Lipschitz height fields with prescribed boundary values.

The field lives on a square grid; the sup-norm Lipschitz constraint is
exactly the set of king-move difference bounds |f(u) - f(v)| <= 2 delta,
which also confines every cell tilt to the closed diamond |s|+|t| <= 2.
Maximization is monotone projected ascent (gradient of the per-cell
entropy, then exact alternating projection onto the difference bounds),
optionally warm-started through a cascade of coarser grids.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .errors import InfeasibleBoundary, InputError, NonConvergence
from .lattice import aztec_boundary_heights
from .thermo import ENT_MAX, _ent_tilt_arrays, _tilt_probs_arrays, ent_gradient

_KING = ((1, 0), (0, 1), (1, 1), (1, -1))


# ---------------------------------------------------------------------------
# continuous geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContinuousRegion:
    """Region bounded by a simple closed polygon, counterclockwise."""

    polygon: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        poly = tuple((float(x), float(y)) for x, y in self.polygon)
        object.__setattr__(self, "polygon", poly)
        if len(poly) < 3:
            raise InputError("polygon needs at least 3 vertices")
        if self._signed_area() <= 0:
            raise InputError("polygon must be counterclockwise")
        if self._self_intersects():
            raise InputError("polygon must be simple")

    def _signed_area(self) -> float:
        s = 0.0
        for (x1, y1), (x2, y2) in zip(self.polygon, self._rolled()):
            s += x1 * y2 - x2 * y1
        return 0.5 * s

    def _rolled(self):
        return self.polygon[1:] + self.polygon[:1]

    def _self_intersects(self) -> bool:
        segs = list(zip(self.polygon, self._rolled()))
        n = len(segs)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                if _segments_cross(segs[i], segs[j]):
                    return True
        return False

    @property
    def bbox(self):
        xs = [p[0] for p in self.polygon]
        ys = [p[1] for p in self.polygon]
        return min(xs), min(ys), max(xs), max(ys)

    def contains(self, px: np.ndarray, py: np.ndarray) -> np.ndarray:
        """Ray-casting point-in-polygon, vectorized; boundary counts inside."""
        px = np.asarray(px, dtype=float)
        py = np.asarray(py, dtype=float)
        inside = np.zeros(px.shape, dtype=bool)
        for (x1, y1), (x2, y2) in zip(self.polygon, self._rolled()):
            crosses = (y1 > py) != (y2 > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                xcut = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (px < xcut)
        near = self.boundary_distance(px, py) <= 1e-12
        return inside | near

    def boundary_distance(self, px, py) -> np.ndarray:
        px = np.asarray(px, dtype=float)
        py = np.asarray(py, dtype=float)
        best = np.full(px.shape, np.inf)
        for (x1, y1), (x2, y2) in zip(self.polygon, self._rolled()):
            best = np.minimum(best, _point_segment_distance(px, py, x1, y1, x2, y2))
        return best

    def project(self, px: float, py: float) -> Tuple[float, float, float]:
        """Nearest boundary point and its arclength coordinate."""
        best = (np.inf, 0.0, 0.0, 0.0)
        s0 = 0.0
        for (x1, y1), (x2, y2) in zip(self.polygon, self._rolled()):
            seg = math.hypot(x2 - x1, y2 - y1)
            t = 0.0
            if seg > 0:
                t = ((px - x1) * (x2 - x1) + (py - y1) * (y2 - y1)) / seg**2
                t = min(1.0, max(0.0, t))
            qx, qy = x1 + t * (x2 - x1), y1 + t * (y2 - y1)
            d = math.hypot(px - qx, py - qy)
            if d < best[0]:
                best = (d, qx, qy, s0 + t * seg)
            s0 += seg
        return best[1], best[2], best[3]

    @property
    def perimeter(self) -> float:
        return sum(
            math.hypot(x2 - x1, y2 - y1)
            for (x1, y1), (x2, y2) in zip(self.polygon, self._rolled())
        )


def _segments_cross(s1, s2) -> bool:
    (p1, p2), (p3, p4) = s1, s2

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _point_segment_distance(px, py, x1, y1, x2, y2):
    dx, dy = x2 - x1, y2 - y1
    denom = dx * dx + dy * dy
    if denom == 0:
        return np.hypot(px - x1, py - y1)
    t = np.clip(((px - x1) * dx + (py - y1) * dy) / denom, 0.0, 1.0)
    return np.hypot(px - (x1 + t * dx), py - (y1 + t * dy))


class BoundaryData:
    """Sampled heights on the region boundary, interpolated by arclength."""

    def __init__(self, region: ContinuousRegion, samples: Sequence[Tuple[float, float, float]]):
        self.region = region
        if len(samples) < 1:
            raise InputError("need at least one boundary sample")
        pts = []
        for x, y, h in samples:
            _, _, s = region.project(float(x), float(y))
            pts.append((s, float(h), float(x), float(y)))
        pts.sort()
        self._arcs = np.array([p[0] for p in pts])
        self._heights = np.array([p[1] for p in pts])
        self.samples = [(p[2], p[3], p[1]) for p in pts]
        self._check_lipschitz()

    def _check_lipschitz(self, tol: float = 1e-9):
        xs = np.array([s[0] for s in self.samples])
        ys = np.array([s[1] for s in self.samples])
        hs = np.array([s[2] for s in self.samples])
        # pairwise sup-norm chords; geodesics inside the region are no
        # shorter, so violations found here are genuine
        dx = np.abs(xs[:, None] - xs[None, :])
        dy = np.abs(ys[:, None] - ys[None, :])
        dsup = np.maximum(dx, dy)
        dh = np.abs(hs[:, None] - hs[None, :])
        bad = dh > 2.0 * dsup + tol
        if bad.any():
            i, j = np.unravel_index(np.argmax(dh - 2 * dsup), bad.shape)
            raise InfeasibleBoundary(
                f"samples {i} and {j} differ by {dh[i, j]:.4f} over sup distance {dsup[i, j]:.4f}"
            )

    def value_at(self, px: float, py: float) -> float:
        _, _, s = self.region.project(px, py)
        arcs, heights = self._arcs, self._heights
        if len(arcs) == 1:
            return float(heights[0])
        L = self.region.perimeter
        k = np.searchsorted(arcs, s)
        lo = (k - 1) % len(arcs)
        hi = k % len(arcs)
        s_lo, s_hi = arcs[lo], arcs[hi]
        gap = (s_hi - s_lo) % L
        if gap == 0:
            return float(heights[lo])
        t = ((s - s_lo) % L) / gap
        return float((1 - t) * heights[lo] + t * heights[hi])


# ---------------------------------------------------------------------------
# discrete field
# ---------------------------------------------------------------------------


@dataclass
class DiscreteField:
    region: ContinuousRegion
    boundary: BoundaryData
    delta: float
    x0: float
    y0: float
    values: np.ndarray          # (nx, ny)
    mask: np.ndarray            # node belongs to the closed region
    interior: np.ndarray        # node free to move
    repair: float = 0.0         # largest boundary clamp adjustment
    _pairs: Optional[list] = dc_field(default=None, repr=False)

    @property
    def shape(self):
        return self.values.shape

    def node_xy(self):
        nx, ny = self.values.shape
        xs = self.x0 + self.delta * np.arange(nx)
        ys = self.y0 + self.delta * np.arange(ny)
        return xs, ys

    def cell_mask(self) -> np.ndarray:
        m = self.mask
        return m[:-1, :-1] & m[1:, :-1] & m[:-1, 1:] & m[1:, 1:]

    def copy(self) -> "DiscreteField":
        return DiscreteField(
            self.region, self.boundary, self.delta, self.x0, self.y0,
            self.values.copy(), self.mask, self.interior, self.repair, self._pairs,
        )

    def constraint_slices(self):
        """Eight half-classes of king-move constraints as 2D slice pairs;
        within each class the pairs touch disjoint nodes, so vectorized
        simultaneous updates are exact."""
        if self._pairs is not None:
            return self._pairs
        nx, ny = self.values.shape

        def spec(slA, slB):
            mA = self.mask[slA]
            mB = self.mask[slB]
            iA = self.interior[slA]
            iB = self.interior[slB]
            present = mA & mB
            movable = present & (iA | iB)
            wa = np.where(iA, np.where(iB, 0.5, 1.0), 0.0)
            wb = np.where(iB, np.where(iA, 0.5, 1.0), 0.0)
            return (slA, slB, present, movable, wa, wb)

        specs = []
        for p in (0, 1):
            specs.append(spec((slice(p, nx - 1, 2), slice(None)),
                              (slice(p + 1, nx, 2), slice(None))))
            specs.append(spec((slice(None), slice(p, ny - 1, 2)),
                              (slice(None), slice(p + 1, ny, 2))))
            specs.append(spec((slice(p, nx - 1, 2), slice(0, ny - 1)),
                              (slice(p + 1, nx, 2), slice(1, ny))))
            specs.append(spec((slice(p, nx - 1, 2), slice(1, ny)),
                              (slice(p + 1, nx, 2), slice(0, ny - 1))))
        self._pairs = specs
        return specs

    def to_json(self, ent: Optional[float] = None, residual_norm: Optional[float] = None) -> str:
        xs, ys = self.node_xy()
        nodes = []
        nx, ny = self.shape
        for i in range(nx):
            for j in range(ny):
                if self.mask[i, j]:
                    nodes.append([float(xs[i]), float(ys[j]), float(self.values[i, j])])
        payload = {"delta": self.delta, "nodes": nodes}
        if ent is not None:
            payload["ent"] = ent
        if residual_norm is not None:
            payload["residual_norm"] = residual_norm
        return json.dumps(payload)


@dataclass
class SolveReport:
    ent: float
    iterations: int
    grad_norm: float
    residual_norm: float
    field: DiscreteField

    def __post_init__(self):
        if not (-1e-9 <= self.ent <= ENT_MAX + 1e-9):
            raise NonConvergence(f"entropy {self.ent} outside [0, 2G/pi]")


@dataclass
class SolveConfig:
    max_iter: int = 200_000
    rel_tol: float = 1e-10
    stall_iters: int = 30
    step0: float = 1.0
    tilt_clip: float = 2.0 - 1e-9
    max_sweeps: int = 500
    polish_rounds: int = 12
    grad_tol: float = 1e-12   # stop polishing once max free-node |g| drops below
    newton_margin: float = 0.02  # keep Newton away from near-extremal cells
    raise_on_cap: bool = False


# ---------------------------------------------------------------------------
# discretization
# ---------------------------------------------------------------------------


def discretize(
    region: ContinuousRegion,
    boundary_data: BoundaryData,
    delta: float,
    origin: Optional[Tuple[float, float]] = None,
) -> DiscreteField:
    """Grid nodes inside the region; boundary nodes clamped to interpolated
    data (with a minimal Lipschitz repair); interior initialized to the
    average of the upper and lower Lipschitz envelopes."""
    if delta <= 0:
        raise InputError("delta must be positive")
    bx0, by0, bx1, by1 = region.bbox
    if origin is None:
        origin = (bx0, by0)
    x0, y0 = origin
    nx = int(math.floor((bx1 - x0) / delta + 1e-9)) + 1
    ny = int(math.floor((by1 - y0) / delta + 1e-9)) + 1
    xs = x0 + delta * np.arange(nx)
    ys = y0 + delta * np.arange(ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    mask = region.contains(X, Y)

    inner = np.zeros_like(mask)
    inner[1:-1, 1:-1] = (
        mask[1:-1, 1:-1]
        & mask[2:, 1:-1] & mask[:-2, 1:-1] & mask[1:-1, 2:] & mask[1:-1, :-2]
        & mask[2:, 2:] & mask[2:, :-2] & mask[:-2, 2:] & mask[:-2, :-2]
    )
    boundary_nodes = mask & ~inner

    clamped = np.zeros((nx, ny))
    bidx = np.argwhere(boundary_nodes)
    for i, j in bidx:
        clamped[i, j] = boundary_data.value_at(X[i, j], Y[i, j])

    repair = _repair_boundary(clamped, boundary_nodes, delta)
    if repair > 6 * delta:
        raise InfeasibleBoundary(
            f"boundary clamp needed a repair of {repair:.3g} (> 6 delta)"
        )

    hi = _envelope(clamped, mask, boundary_nodes, delta, upper=True)
    lo = _envelope(clamped, mask, boundary_nodes, delta, upper=False)
    if not (np.all(np.isfinite(hi[mask])) and np.all(np.isfinite(lo[mask]))):
        raise InfeasibleBoundary("some region nodes are unreachable from the boundary")
    if np.any(lo[mask] > hi[mask] + 1e-9):
        raise InfeasibleBoundary("Lipschitz envelopes cross; no feasible field")
    values = np.zeros((nx, ny))
    values[mask] = 0.5 * (hi[mask] + lo[mask])
    values[boundary_nodes] = clamped[boundary_nodes]

    field = DiscreteField(region, boundary_data, delta, x0, y0, values, mask, inner, repair)
    _project(field)
    return field


def _repair_boundary(values, boundary_nodes, delta) -> float:
    """Largest downward adjustment needed to make clamped boundary values
    mutually king-Lipschitz (projection onto the polygon can stretch
    distances near corners)."""
    v = values.copy()
    nx, ny = v.shape
    moved = 0.0
    for _ in range(4 * (nx + ny)):
        changed = False
        for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1), (-1, 0), (0, -1), (-1, -1), (-1, 1)):
            src = np.roll(np.where(boundary_nodes, v, np.inf), (di, dj), axis=(0, 1))
            if di > 0:
                src[:di, :] = np.inf
            if di < 0:
                src[di:, :] = np.inf
            if dj > 0:
                src[:, :dj] = np.inf
            if dj < 0:
                src[:, dj:] = np.inf
            cap = src + 2 * delta
            lowered = boundary_nodes & (v > cap)
            if lowered.any():
                v[lowered] = np.nextafter(cap[lowered], -np.inf)
                changed = True
        if not changed:
            break
    moved = float(np.max(np.where(boundary_nodes, values - v, 0.0), initial=0.0))
    values[boundary_nodes] = v[boundary_nodes]
    return moved


def _envelope(values, mask, boundary_nodes, delta, upper: bool):
    """McShane envelope over the king graph: the largest (resp. smallest)
    2-Lipschitz function matching the boundary clamp."""
    big = np.inf if upper else -np.inf
    env = np.where(boundary_nodes, values, big)
    pad = big
    nx, ny = env.shape
    for _ in range(2 * (nx + ny)):
        prev = env
        best = env.copy()
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)):
            shifted = np.full_like(env, pad)
            s_src = (slice(max(0, -di), min(nx, nx - di)), slice(max(0, -dj), min(ny, ny - dj)))
            s_dst = (slice(max(0, di), min(nx, nx + di)), slice(max(0, dj), min(ny, ny + dj)))
            shifted[s_dst] = env[s_src]
            if upper:
                best = np.minimum(best, shifted + 2 * delta)
            else:
                best = np.maximum(best, shifted - 2 * delta)
        env = np.where(boundary_nodes, values, np.where(mask, best, pad))
        if np.array_equal(env, prev):
            break
    return env


# ---------------------------------------------------------------------------
# projection onto the king-move Lipschitz bounds
# ---------------------------------------------------------------------------


def _project(field: DiscreteField, max_sweeps: int = 500, omega: float = 1.6):
    """Over-relaxed alternating pairwise projection; terminates with every
    constraint satisfied as floats compare (<= bound, no tolerance).  Bulk
    sweeps shrink violations geometrically; a final assignment-and-nudge
    phase clears the last few ulps exactly."""
    v = field.values
    bound = 2.0 * field.delta
    specs = field.constraint_slices()
    tiny = 1e-12 * bound
    for _ in range(max_sweeps):
        worst = 0.0
        for slA, slB, present, movable, wa, wb in specs:
            A = v[slA]
            B = v[slB]
            diff = A - B
            sel = movable & (diff > bound)
            if sel.any():
                shift = omega * (diff[sel] - bound)
                worst = max(worst, float(shift.max()))
                A[sel] -= shift * wa[sel]
                B[sel] += shift * wb[sel]
            sel = movable & (diff < -bound)
            if sel.any():
                shift = omega * (-bound - diff[sel])
                worst = max(worst, float(shift.max()))
                A[sel] += shift * wa[sel]
                B[sel] -= shift * wb[sel]
        if worst <= tiny:
            break
    # exact cleanup: assign the bound, then trim leftover rounding by ulps
    for _ in range(128):
        dirty = False
        for slA, slB, present, movable, wa, wb in specs:
            A = v[slA]
            B = v[slB]
            for sign in (1.0, -1.0):
                diff = (A - B) if sign > 0 else (B - A)
                sel = movable & (diff > bound)
                if not sel.any():
                    continue
                dirty = True
                H, L = (A, B) if sign > 0 else (B, A)
                whi = (wa if sign > 0 else wb)
                wlo = (wb if sign > 0 else wa)
                both = sel & (whi > 0) & (wlo > 0)
                mid = 0.5 * (H[both] + L[both])
                H[both] = mid + field.delta
                L[both] = mid - field.delta
                only_hi = sel & (whi > 0) & ~(wlo > 0)
                H[only_hi] = np.nextafter(L[only_hi] + bound, -np.inf)
                only_lo = sel & (wlo > 0) & ~(whi > 0)
                L[only_lo] = np.nextafter(H[only_lo] - bound, np.inf)
                still = sel & (H - L > bound)
                shrink = still & (whi > 0)
                H[shrink] = np.nextafter(H[shrink], -np.inf)
                grow = still & ~(whi > 0)
                L[grow] = np.nextafter(L[grow], np.inf)
        if not dirty:
            break


def lipschitz_violation(field: DiscreteField) -> float:
    """Largest (signed) violation of the king difference bounds over all
    in-region node pairs; <= 0 means exactly feasible."""
    v = field.values
    bound = 2.0 * field.delta
    worst = -np.inf
    for slA, slB, present, _, _, _ in field.constraint_slices():
        if present.any():
            diff = np.abs(v[slA][present] - v[slB][present])
            worst = max(worst, float(diff.max() - bound))
    return worst


# ---------------------------------------------------------------------------
# objective and gradient
# ---------------------------------------------------------------------------


def _cell_corner_indices(field: DiscreteField):
    nx, ny = field.shape
    idx = np.arange(nx * ny).reshape(nx, ny)
    cm = field.cell_mask()
    LL = idx[:-1, :-1][cm]
    LR = idx[1:, :-1][cm]
    UL = idx[:-1, 1:][cm]
    UR = idx[1:, 1:][cm]
    return LL, LR, UL, UR


def _tilts_flat(field: DiscreteField, corners=None):
    v = field.values.ravel()
    if corners is None:
        corners = _cell_corner_indices(field)
    LL, LR, UL, UR = corners
    inv = 1.0 / (2.0 * field.delta)
    s = (v[LR] - v[LL] + v[UR] - v[UL]) * inv
    t = (v[UL] - v[LL] + v[UR] - v[LR]) * inv
    return s, t


def _clip_tilts(s, t, radius):
    r = np.abs(s) + np.abs(t)
    scale = np.where(r > radius, radius / np.maximum(r, 1e-300), 1.0)
    return s * scale, t * scale


def evaluate_Ent(field: DiscreteField) -> float:
    """Mean local entropy over cells: the per-dimer entropy functional.
    The predicted tiling count of a lattice region realizing this shape at
    scale n is exp(#dominos * Ent)."""
    s, t = _tilts_flat(field)
    if s.size == 0:
        raise InputError("field has no complete cells")
    s, t = _clip_tilts(s, t, 2.0)
    return float(np.mean(_ent_tilt_arrays(s, t)))


def _hourglass(field: DiscreteField, corners):
    # the corner-difference tilt stencil is blind to the checkerboard
    # mode; this mixed second difference detects exactly that mode
    v = field.values.ravel()
    LL, LR, UL, UR = corners
    return v[LL] - v[LR] - v[UL] + v[UR]


def _objective(field: DiscreteField, corners) -> float:
    s, t = _tilts_flat(field, corners)
    s, t = _clip_tilts(s, t, 2.0)
    z = _hourglass(field, corners)
    return float(np.sum(_ent_tilt_arrays(s, t)) * field.delta**2 - 0.25 * np.sum(z * z))


def _gradient(field: DiscreteField, corners, clip) -> np.ndarray:
    LL, LR, UL, UR = corners
    s, t = _tilts_flat(field, corners)
    s, t = _clip_tilts(s, t, clip)
    gs, gt = ent_gradient(s, t)
    z = _hourglass(field, corners)
    coeff = 0.5 * field.delta  # delta^2 * d(tilt)/d(value)
    n = field.values.size
    gz = 0.5 * z
    g = (
        np.bincount(LL, weights=(-gs - gt) * coeff - gz, minlength=n)
        + np.bincount(LR, weights=(gs - gt) * coeff + gz, minlength=n)
        + np.bincount(UL, weights=(-gs + gt) * coeff + gz, minlength=n)
        + np.bincount(UR, weights=(gs + gt) * coeff - gz, minlength=n)
    )
    g[~field.interior.ravel()] = 0.0
    return g


def _precondition(field: DiscreteField, corners, clip) -> np.ndarray:
    """Magnitude of the objective's diagonal curvature per node, with the
    tilt argument clipped well inside the diamond so near-frozen nodes are
    not paralyzed by the curvature blowup; dividing the gradient by it
    equalizes step scales between stiff and soft regions."""
    LL, LR, UL, UR = corners
    s, t = _tilts_flat(field, corners)
    s, t = _clip_tilts(s, t, min(clip, 1.90))
    pa, pb, _, _ = _tilt_probs_arrays(s, t)
    pa = np.clip(pa, 1e-9, 1 - 1e-9)
    pb = np.clip(pb, 1e-9, 1 - 1e-9)
    sin_ab = np.maximum(np.sin(np.pi * (pa + pb)), 1e-9)
    denom = 32.0 * sin_ab * np.sin(np.pi * pa) * np.sin(np.pi * pb)
    cos_sum_sq = (np.cos(np.pi * s / 2) + np.cos(np.pi * t / 2)) ** 2 / 2.0
    h_tt = np.pi * (np.sin(np.pi * s / 2) ** 2 + cos_sum_sq) / denom
    h_ss = np.pi * (np.sin(np.pi * t / 2) ** 2 + cos_sum_sq) / denom
    h_st = np.pi * np.abs(np.sin(np.pi * s / 2) * np.sin(np.pi * t / 2)) / denom
    curv = 0.25 * (h_ss + h_tt + 2 * h_st) + 0.5
    n = field.values.size
    P = (
        np.bincount(LL, weights=curv, minlength=n)
        + np.bincount(LR, weights=curv, minlength=n)
        + np.bincount(UL, weights=curv, minlength=n)
        + np.bincount(UR, weights=curv, minlength=n)
    )
    return np.maximum(P, 1e-12)


def maximize_entropy(field: DiscreteField, config: Optional[SolveConfig] = None) -> SolveReport:
    """Monotone projected ascent with momentum on the discretized entropy
    functional.  Accelerated (FISTA-style) extrapolation drives the slow
    long-wavelength modes; every accepted iterate strictly improves the
    objective, and every iterate is exactly Lipschitz-feasible.  The
    objective is strictly concave, so the maximizer is unique."""
    cfg = config or SolveConfig()
    x = field.copy()
    _project(x, cfg.max_sweeps)
    corners = _cell_corner_indices(x)
    if corners[0].size == 0:
        raise InputError("field has no complete cells")
    fx = _objective(x, corners)
    x_prev_vals = x.values.ravel().copy()
    y = x.copy()
    tk = 1.0
    alpha = cfg.step0
    stall = 0
    iterations = 0
    gnorm = 0.0
    gain = np.inf
    precond = None
    for iterations in range(1, cfg.max_iter + 1):
        if precond is None or iterations % 20 == 0:
            precond = _precondition(x, corners, cfg.tilt_clip)
        g = _gradient(y, corners, cfg.tilt_clip)
        gnorm = float(np.max(np.abs(g)))
        if gnorm == 0.0:
            break
        fy = _objective(y, corners)
        step = g / precond
        # backtrack until the concave upper model majorizes at z
        for _ in range(60):
            z = y.copy()
            z.values.ravel()[:] += alpha * step
            _project(z, cfg.max_sweeps)
            fz = _objective(z, corners)
            dz = z.values.ravel() - y.values.ravel()
            model = fy + float(g @ dz) - float(dz @ (precond * dz)) / (2.0 * alpha)
            if fz >= model - 1e-15 * (abs(fy) + 1.0):
                break
            alpha *= 0.5
            if alpha < 1e-16:
                break
        tk1 = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        if fz > fx:
            gain = fz - fx
            x_prev_vals = x.values.ravel().copy()
            x, fx = z, fz
            restart = False
        else:
            gain = 0.0
            x_prev_vals = x.values.ravel().copy()
            restart = True
        # momentum extrapolation through the proximal point (MFISTA);
        # y may be mildly infeasible, which only the clipped gradient sees
        y = x.copy()
        if restart:
            tk1 = 1.0
        else:
            y.values.ravel()[:] = (
                x.values.ravel()
                + (tk / tk1) * (z.values.ravel() - x.values.ravel())
                + ((tk - 1.0) / tk1) * (x.values.ravel() - x_prev_vals)
            )
        tk = tk1
        alpha = min(alpha * 1.2, 4.0)
        if gain <= cfg.rel_tol * (abs(fx) + 1e-30):
            stall += 1
            if stall >= cfg.stall_iters:
                break
        else:
            stall = 0
    else:
        if cfg.raise_on_cap:
            raise NonConvergence(
                f"no convergence in {cfg.max_iter} iterations (last gain {gain:.3e})"
            )
    # Newton polish: momentum converges the objective but the residual
    # diagnostics need pointwise stationarity on nodes away from the
    # active Lipschitz constraints; a few sparse Newton solves on the
    # free-node set deliver it at machine precision
    x, fx, gnorm = _newton_polish(x, fx, corners, cfg)
    ent = evaluate_Ent(x)
    _, res_norm = pde_residual(x)
    return SolveReport(ent, iterations, gnorm, res_norm, x)


def _newton_polish(x, fx, corners, cfg: SolveConfig):
    gnorm = 0.0
    for _ in range(cfg.polish_rounds):
        free = _free_nodes(x, cfg.newton_margin)
        if not free.any():
            break
        g = _gradient(x, corners, cfg.tilt_clip)
        g = np.where(free, g, 0.0)
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= cfg.grad_tol:
            break
        H = _hessian_matrix(x, corners)
        idx = np.flatnonzero(free)
        Hff = H[idx][:, idx].tocsc()
        try:
            d = spsolve(-Hff, g[idx])
        except RuntimeError:
            break
        if not np.all(np.isfinite(d)):
            break
        step = np.zeros_like(g)
        step[idx] = d
        accepted = False
        alpha = 1.0
        for _ in range(30):
            trial = x.copy()
            trial.values.ravel()[:] += alpha * step
            _project(trial, cfg.max_sweeps)
            ft = _objective(trial, corners)
            if ft >= fx:
                x, fx = trial, ft
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
    return x, fx, gnorm


def _hessian_matrix(field: DiscreteField, corners) -> sparse.csr_matrix:
    """Sparse Hessian of the objective (entropy + hourglass control) in
    the node values, assembled from per-cell closed forms."""
    LL, LR, UL, UR = corners
    s, t = _tilts_flat(field, corners)
    s, t = _clip_tilts(s, t, 2.0 - 1e-7)
    pa, pb, _, _ = _tilt_probs_arrays(s, t)
    pa = np.clip(pa, 1e-12, 1 - 1e-12)
    pb = np.clip(pb, 1e-12, 1 - 1e-12)
    sin_ab = np.maximum(np.sin(np.pi * (pa + pb)), 1e-12)
    denom = 32.0 * sin_ab * np.sin(np.pi * pa) * np.sin(np.pi * pb)
    cos_sum_sq = (np.cos(np.pi * s / 2) + np.cos(np.pi * t / 2)) ** 2 / 2.0
    h_tt = -np.pi * (np.sin(np.pi * s / 2) ** 2 + cos_sum_sq) / denom
    h_ss = -np.pi * (np.sin(np.pi * t / 2) ** 2 + cos_sum_sq) / denom
    h_st = -np.pi * np.sin(np.pi * s / 2) * np.sin(np.pi * t / 2) / denom

    d = field.delta
    # d(tilt)/d(value) per corner, order (LL, LR, UL, UR)
    sa = np.array([-1.0, 1.0, -1.0, 1.0]) / (2 * d)
    sb = np.array([-1.0, -1.0, 1.0, 1.0]) / (2 * d)
    hour = np.array([1.0, -1.0, -1.0, 1.0])
    nodes = np.stack([LL, LR, UL, UR])
    ncell = LL.size
    rows = []
    cols = []
    vals = []
    for p in range(4):
        for q in range(4):
            block = d * d * (
                h_ss * sa[p] * sa[q]
                + h_st * (sa[p] * sb[q] + sb[p] * sa[q])
                + h_tt * sb[p] * sb[q]
            ) - 0.5 * hour[p] * hour[q]
            rows.append(nodes[p])
            cols.append(nodes[q])
            vals.append(block)
    n = field.values.size
    H = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return H.tocsr()


def _free_nodes(field: DiscreteField, margin: float = 0.0) -> np.ndarray:
    """Interior nodes none of whose king constraints is (nearly) tight.

    With a positive margin, nodes touching cells within that tilt margin
    of extremal are also excluded: near the frozen interface the entropy
    is effectively non-smooth and quadratic models break down there."""
    bound = 2.0 * field.delta
    slack = 1e-9 * bound
    tight = np.zeros(field.shape, dtype=bool)
    v = field.values
    for slA, slB, present, _, _, _ in field.constraint_slices():
        hit = present & (np.abs(v[slA] - v[slB]) >= bound - slack)
        tight[slA] |= hit
        tight[slB] |= hit
    if margin > 0.0:
        s, t = _tilts_flat(field)
        hot_cells = np.abs(s) + np.abs(t) >= 2.0 - margin
        cm = field.cell_mask()
        hot = np.zeros(field.shape, dtype=bool)
        grid = np.zeros(cm.shape, dtype=bool)
        grid[cm] = hot_cells
        hot[:-1, :-1] |= grid
        hot[1:, :-1] |= grid
        hot[:-1, 1:] |= grid
        hot[1:, 1:] |= grid
        tight |= hot
    return (field.interior & ~tight).ravel()


def solve(
    region: ContinuousRegion,
    boundary_data: BoundaryData,
    delta: float,
    config: Optional[SolveConfig] = None,
    levels: int = 4,
) -> SolveReport:
    """Cascadic driver: solve on coarser grids first and refine, which
    removes the long-wavelength error modes plain ascent damps slowly."""
    cfg = config or SolveConfig()
    deltas = [delta * 2**k for k in range(levels, -1, -1)]
    prev = None
    report = None
    for d in deltas:
        fld = discretize(region, boundary_data, d)
        if prev is not None:
            _prolong(prev, fld)
            _project(fld, cfg.max_sweeps)
        report = maximize_entropy(fld, cfg)
        prev = report.field
    return report


def _prolong(coarse: DiscreteField, fine: DiscreteField):
    """Bilinear injection of a coarse solution into a finer grid sharing
    the same origin (delta ratio 2)."""
    ratio = coarse.delta / fine.delta
    if abs(ratio - 2.0) > 1e-9:
        return
    cv = np.where(coarse.mask, coarse.values, np.nan)
    nx, ny = fine.shape
    cnx, cny = coarse.shape
    for i in range(nx):
        ci, ri = divmod(i, 2)
        for j in range(ny):
            if not fine.interior[i, j]:
                continue
            cj, rj = divmod(j, 2)
            pts = []
            for di in range(2 if ri else 1):
                for dj in range(2 if rj else 1):
                    ii, jj = ci + di, cj + dj
                    if ii < cnx and jj < cny and not np.isnan(cv[ii, jj]):
                        pts.append(cv[ii, jj])
            if pts:
                fine.values[i, j] = float(np.mean(pts))


# ---------------------------------------------------------------------------
# diagnostics on a solved field
# ---------------------------------------------------------------------------


def tilt_field(field: DiscreteField):
    """Per-cell tilt arrays (s, t) and the matching cell-center coordinates."""
    cm = field.cell_mask()
    s2 = np.full(cm.shape, np.nan)
    t2 = np.full(cm.shape, np.nan)
    s, t = _tilts_flat(field)
    s2[cm] = s
    t2[cm] = t
    xs, ys = field.node_xy()
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    return s2, t2, cx, cy


def predicted_probabilities(field: DiscreteField):
    """Per-cell edge-class probabilities from the local tilt; frozen cells
    come out as (near-)indicator vectors automatically."""
    s2, t2, cx, cy = tilt_field(field)
    cm = field.cell_mask()
    s, t = _clip_tilts(s2[cm], t2[cm], 2.0)
    pa, pb, pc, pd = _tilt_probs_arrays(s, t)
    out = np.full(cm.shape + (4,), np.nan)
    out[cm] = np.stack([pa, pb, pc, pd], axis=-1)
    return out, cx, cy


def pde_residual(field: DiscreteField, margin: float = 0.05, within=None):
    """Second-difference residual of the limit-shape PDE on the subdomain
    of non-extremal tilt (|s|+|t| < 2 - margin).  Returns the residual
    array (NaN outside the subdomain) and its RMS norm.  `within(x, y)`
    optionally restricts the norm to a fixed subregion, e.g. a disk well
    inside the arctic circle for mesh-refinement studies."""
    v = field.values
    d = field.delta
    nx, ny = v.shape
    ok = np.zeros((nx, ny), dtype=bool)
    ok[1:-1, 1:-1] = field.interior[1:-1, 1:-1]
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            ok[1:-1, 1:-1] &= field.mask[1 + di: nx - 1 + di, 1 + dj: ny - 1 + dj]
    if within is not None:
        xs, ys = field.node_xy()
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        ok &= within(X, Y)
    res = np.full((nx, ny), np.nan)
    if not ok.any():
        return res, 0.0
    I, J = np.nonzero(ok)
    fxx = (v[I + 1, J] - 2 * v[I, J] + v[I - 1, J]) / d**2
    fyy = (v[I, J + 1] - 2 * v[I, J] + v[I, J - 1]) / d**2
    fxy = (v[I + 1, J + 1] - v[I + 1, J - 1] - v[I - 1, J + 1] + v[I - 1, J - 1]) / (4 * d**2)
    s = (v[I + 1, J] - v[I - 1, J]) / (2 * d)
    t = (v[I, J + 1] - v[I, J - 1]) / (2 * d)
    keep = np.abs(s) + np.abs(t) < 2.0 - margin
    if not keep.any():
        return res, 0.0
    s, t = _clip_tilts(s[keep], t[keep], 2.0 - 1e-9)
    D = 0.5 * (np.cos(np.pi * s / 2) - np.cos(np.pi * t / 2))
    A_xx = 2.0 * (1.0 - D * D) - np.sin(np.pi * s / 2) ** 2
    A_xy = 2.0 * np.sin(np.pi * s / 2) * np.sin(np.pi * t / 2)
    A_yy = 2.0 * (1.0 - D * D) - np.sin(np.pi * t / 2) ** 2
    r = A_xx * fxx[keep] + A_xy * fxy[keep] + A_yy * fyy[keep]
    res[I[keep], J[keep]] = r
    return res, float(np.sqrt(np.mean(r**2)))


# ---------------------------------------------------------------------------
# stock problems
# ---------------------------------------------------------------------------


def square_problem(tilt: Tuple[float, float] = (0.0, 0.0)):
    """Unit square with planar boundary heights of the given tilt."""
    region = ContinuousRegion(((0, 0), (1, 0), (1, 1), (0, 1)))
    s, t = tilt
    samples = []
    for u in np.linspace(0, 1, 33):
        for (x, y) in ((u, 0.0), (u, 1.0), (0.0, u), (1.0, u)):
            samples.append((x, y, s * x + t * y))
    return region, BoundaryData(region, samples)


def aztec_problem(order: int = 48):
    """Normalized Aztec diamond with boundary heights taken from the
    lattice diamond of the given order (sawtooth of amplitude 1/order
    around the asymptotic data)."""
    region = ContinuousRegion(((1, 0), (0, 1), (-1, 0), (0, -1)))
    heights = aztec_boundary_heights(order)
    samples = [(x / order, y / order, h / order) for (x, y), h in heights.items()]
    return region, BoundaryData(region, samples)


def field_from_json(text: str, region: ContinuousRegion, boundary: BoundaryData) -> DiscreteField:
    data = json.loads(text)
    delta = float(data["delta"])
    nodes = data["nodes"]
    xs = sorted({x for x, _, _ in nodes})
    ys = sorted({y for _, y, _ in nodes})
    x0, y0 = xs[0], ys[0]
    fld = discretize(region, boundary, delta, origin=(x0, y0))
    xg, yg = fld.node_xy()
    xi = {round(x, 9): i for i, x in enumerate(xg)}
    yi = {round(y, 9): j for j, y in enumerate(yg)}
    for x, y, h in nodes:
        i = xi.get(round(x, 9))
        j = yi.get(round(y, 9))
        if i is not None and j is not None and fld.mask[i, j]:
            fld.values[i, j] = h
    return fld
