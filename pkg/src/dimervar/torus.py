"""Exact finite-size Kasteleyn algebra on the 2n x 2n torus.

The partition function is a signed combination of four products over
roots of unity,

    Z_n = (-P1 + P2 + P3 + P4) / 2,

where each P is a product of values of the spectral function F over a
(possibly half-shifted) n x n grid of phases.  Products are accumulated
as (log magnitude, sign) pairs so the algebra works far beyond floating
range; values are only exponentiated when they fit.

Sign of P1: the product of the four real grid terms F(0,0), F(0,pi),
F(pi,0), F(pi,pi) (all other terms pair off into complex-conjugate
pairs).  Equivalently P1 > 0 exactly when one activity exceeds the sum
of the other three, P1 < 0 when every activity is below the sum of the
others, and P1 = 0 on the transition locus.  This is calibrated against
exact weighted enumeration of the 4x4 torus.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DegenerateWeights, NumericOverflow
from .thermo import EdgeProbabilities, as_weights

MAX_N = 512


def _phase_grids(n: int, shift_theta: bool, shift_phi: bool):
    j = np.arange(n)
    theta = (2 * np.pi * j + (np.pi if shift_theta else 0.0)) / n
    phi = (2 * np.pi * j + (np.pi if shift_phi else 0.0)) / n
    return theta, phi


def _F_grid(theta, phi, w):
    a, b, c, d = w
    et = np.exp(1j * theta)[:, None]
    ep = np.exp(1j * phi)[None, :]
    return a * a / et + 2 * a * b + b * b * et + c * c / ep + 2 * c * d + d * d * ep


# grid shift patterns for P1..P4: (shift_theta, shift_phi)
_SHIFTS = ((False, False), (False, True), (True, False), (True, True))


@dataclass(frozen=True)
class PartitionComponents:
    """The four signed square roots of det A_i, in log-magnitude form.

    `log_abs[k]` and `sign[k]` describe P_{k+1}; sign 0 marks an exact
    zero (the a=b, c=d symmetric locus kills P1).
    """

    n: int
    weights: Tuple[float, float, float, float]
    log_abs: Tuple[float, float, float, float]
    sign: Tuple[int, int, int, int]

    def component(self, k: int) -> float:
        """P_k as a float (k in 1..4); raises NumericOverflow if too large."""
        la = self.log_abs[k - 1]
        if self.sign[k - 1] == 0:
            return 0.0
        if la > 700.0:
            raise NumericOverflow(f"|P{k}| = exp({la:.1f}) exceeds float range")
        return self.sign[k - 1] * float(np.exp(la))

    @property
    def P1(self) -> float:
        return self.component(1)

    @property
    def P2(self) -> float:
        return self.component(2)

    @property
    def P3(self) -> float:
        return self.component(3)

    @property
    def P4(self) -> float:
        return self.component(4)

    def log_Z(self) -> float:
        """log Z_n by a stable signed log-sum-exp of (-P1+P2+P3+P4)/2."""
        signs = np.array([-self.sign[0], self.sign[1], self.sign[2], self.sign[3]])
        logs = np.array(self.log_abs)
        live = signs != 0
        if not np.any(live):
            raise DegenerateWeights("all Kasteleyn products vanish")
        m = logs[live].max()
        acc = float(np.sum(signs[live] * np.exp(logs[live] - m)))
        if acc <= 0:
            raise DegenerateWeights("partition function vanished")
        return float(m + np.log(acc / 2.0))

    def Z(self) -> float:
        lz = self.log_Z()
        if lz > 700.0:
            raise NumericOverflow(f"Z_n = exp({lz:.1f}) exceeds float range; use log_Z")
        return float(np.exp(lz))


def _validate_n(n: int):
    if n < 2 or n % 2 != 0:
        raise DegenerateWeights(f"n must be even and >= 2, got {n}")
    if n > MAX_N:
        raise NumericOverflow(f"n = {n} exceeds the accumulation cap {MAX_N}")


def partition_components(n: int, w) -> PartitionComponents:
    wt = as_weights(w)
    _validate_n(n)
    scale = max(wt)
    u = tuple(x / scale for x in wt)
    log_abs = []
    signs = []
    for k, (st, sp) in enumerate(_SHIFTS):
        theta, phi = _phase_grids(n, st, sp)
        vals = _F_grid(theta, phi, u)
        mags = np.abs(vals)
        if np.any(mags == 0.0):
            log_abs.append(-np.inf)
            signs.append(0)
            continue
        la = float(np.sum(np.log(mags)))
        if k == 0:
            # only the plain grid hits the four real phase points; all other
            # terms cancel in conjugate pairs
            sign = 1
            for tv in (1.0, -1.0):
                for pv in (1.0, -1.0):
                    val = (
                        u[0] ** 2 / tv + 2 * u[0] * u[1] + u[1] ** 2 * tv
                        + u[2] ** 2 / pv + 2 * u[2] * u[3] + u[3] ** 2 * pv
                    )
                    if val < 0:
                        sign = -sign
        else:
            sign = 1
        log_abs.append(la + 2 * n * n * np.log(scale))
        signs.append(sign)
    return PartitionComponents(n, wt, tuple(log_abs), tuple(signs))


def torus_partition(n: int, w, log: bool = False) -> float:
    """Z_n(a, b, c, d), the weighted matching count of the 2n x 2n torus."""
    comps = partition_components(n, w)
    return comps.log_Z() if log else comps.Z()


# ---------------------------------------------------------------------------
# finite-n edge probabilities
# ---------------------------------------------------------------------------


def _numerator_grid(which: str, theta, phi, w):
    a, b, c, d = w
    et = np.exp(1j * theta)[:, None]
    ep = np.exp(1j * phi)[None, :]
    one = np.ones((theta.size, phi.size))
    if which == "a":
        return 2 * (b + a / et) * one
    if which == "b":
        return 2 * (a + b * et) * one
    if which == "c":
        return 2 * (d + c / ep) * one
    if which == "d":
        return 2 * (c + d * ep) * one
    raise ValueError(which)


def edge_probability_finite(n: int, w) -> EdgeProbabilities:
    """Inclusion probability of one edge of each class at finite n:
    p_x(n) = (x / 2n^2) d/dx log( -P1 + P2 + P3 + P4 ), with each
    derivative dP/dx evaluated as P times a logarithmic-derivative sum.
    Components with P = 0 drop out (their derivative vanishes too)."""
    wt = as_weights(w)
    _validate_n(n)
    scale = max(wt)
    u = tuple(x / scale for x in wt)
    comps = partition_components(n, wt)
    signed = np.array([-comps.sign[0], comps.sign[1], comps.sign[2], comps.sign[3]], dtype=float)
    logs = np.array(comps.log_abs)
    live = signed != 0
    m = logs[live].max()
    weights_r = np.where(live, signed * np.exp(np.where(live, logs - m, 0.0)), 0.0)
    denom = weights_r.sum()
    if denom <= 0:
        raise DegenerateWeights("Z_n vanished")

    probs = {}
    for which, x in zip("abcd", u):
        if x == 0.0:
            probs[which] = 0.0
            continue
        num = 0.0
        for k, (st, sp) in enumerate(_SHIFTS):
            if not live[k]:
                continue
            theta, phi = _phase_grids(n, st, sp)
            vals = _F_grid(theta, phi, u)
            ratio = _numerator_grid(which, theta, phi, u) / vals
            s = complex(ratio.sum())
            num += weights_r[k] * s.real
        probs[which] = x * num / (2 * n * n * denom)
    return EdgeProbabilities(probs["a"], probs["b"], probs["c"], probs["d"])


# ---------------------------------------------------------------------------
# dense 16x16 Kasteleyn matrices (n = 2 verification)
# ---------------------------------------------------------------------------


def dense_kasteleyn_check(w) -> Tuple[float, float, float, float]:
    """Builds the four 16x16 Kasteleyn matrices of the 4x4 torus directly
    (vertical edges multiplied by i; wrap edges flipped per variant) and
    returns their determinants, which must equal P_k^2."""
    wt = as_weights(w)
    n = 2
    side = 2 * n
    verts = [(x, y) for y in range(side) for x in range(side)]
    index = {v: i for i, v in enumerate(verts)}

    def weight_of(u, v):
        even = (u[0] + u[1]) % 2 == 0
        horizontal = u[1] == v[1]
        if horizontal:
            return wt[0] if even else wt[1]
        return wt[2] if even else wt[3]

    dets = []
    for variant in range(4):
        flip_vertical = variant in (1, 3)
        flip_horizontal = variant in (2, 3)
        A = np.zeros((16, 16), dtype=complex)
        for x in range(side):
            for y in range(side):
                u = (x, y)
                r = ((x + 1) % side, y)
                t = (x, (y + 1) % side)
                wh = weight_of(u, r)
                if flip_horizontal and x == side - 1:
                    wh = -wh
                A[index[u], index[r]] += wh
                A[index[r], index[u]] += wh
                wv = 1j * weight_of(u, t)
                if flip_vertical and y == side - 1:
                    wv = -wv
                A[index[u], index[t]] += wv
                A[index[t], index[u]] += wv
        det = np.linalg.det(A)
        dets.append(float(det.real))
    return tuple(dets)
