"""Adaptive tensor-panel quadrature on the torus of phases [0,2pi)^2.

Built for integrands of the Kasteleyn kind: smooth except at isolated
zeros of the spectral function, where they behave like log|F| or N/F.
Each singular point is isolated in a square cell centered on it; the cell
is peeled into dyadic frames down to a floor scale and the innermost
square is evaluated with an analytic local model supplied by the caller.
Frames and bulk panels alike go through error-driven panel splitting, so
sharp near-critical ridges get resolved wherever they appear.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from .errors import QuadratureFailure

TWO_PI = 2.0 * np.pi

_GL_CACHE = {}


def _gl(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _panel_gl(f, x0, x1, y0, y1, order):
    nodes, weights = _gl(order)
    xs = 0.5 * (x1 - x0) * nodes + 0.5 * (x0 + x1)
    ys = 0.5 * (y1 - y0) * nodes + 0.5 * (y0 + y1)
    vals = f(xs[:, None], ys[None, :])
    w2 = weights[:, None] * weights[None, :]
    return 0.25 * (x1 - x0) * (y1 - y0) * np.sum(vals * w2)


@dataclass
class SingularPoint:
    """A zero of the spectral function together with its local model.

    `center_rule(h)` must return the integral of the integrand over the
    square of half-side h centered at the point, from the local expansion.
    """

    x: float
    y: float
    center_rule: Callable[[float], complex]


def angular_integral(g: Callable[[np.ndarray], np.ndarray]) -> complex:
    """Adaptive integral over one angular period of g, split at odd
    multiples of pi/4 where the square-boundary radius has kinks."""
    total = 0.0 + 0.0j
    for k in range(4):
        a0 = (2 * k - 1) * np.pi / 4
        a1 = (2 * k + 1) * np.pi / 4
        re = quad(lambda t: np.real(g(np.asarray(t))), a0, a1,
                  epsabs=1e-14, epsrel=1e-10, limit=300)[0]
        im = quad(lambda t: np.imag(g(np.asarray(t))), a0, a1,
                  epsabs=1e-14, epsrel=1e-10, limit=300)[0]
        total += re + 1j * im
    return total


def square_radius(alpha: np.ndarray, h: float) -> np.ndarray:
    """Distance from the center of a square of half-side h to its boundary."""
    return h / np.maximum(np.abs(np.cos(alpha)), np.abs(np.sin(alpha)))


def _frames(cx, cy, rho_out, rho_in):
    """Four rectangles tiling square(rho_out) minus square(rho_in)."""
    return [
        (cx - rho_out, cx - rho_in, cy - rho_out, cy + rho_out),
        (cx + rho_in, cx + rho_out, cy - rho_out, cy + rho_out),
        (cx - rho_in, cx + rho_in, cy - rho_out, cy - rho_in),
        (cx - rho_in, cx + rho_in, cy + rho_in, cy + rho_out),
    ]


def _axis_breaks(lo: float, hi: float, coords: Sequence[float], radii: Sequence[float]):
    pts = [lo, hi]
    for c, r in zip(coords, radii):
        pts.extend((c - r, c + r))
    return sorted(set(pts))


def integrate_torus(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    singular: Sequence[SingularPoint] = (),
    tol: float = 1e-9,
    min_panel: float = 1e-6,
    max_panels: int = 400_000,
) -> complex:
    """Integrate f over one period square; f must be 2pi-periodic in both
    arguments and vectorized over meshgrids."""
    if singular:
        u0 = singular[0].x - np.pi
        v0 = singular[0].y - np.pi
    else:
        u0 = v0 = 0.0
    pts = [
        SingularPoint(u0 + (p.x - u0) % TWO_PI, v0 + (p.y - v0) % TWO_PI, p.center_rule)
        for p in singular
    ]

    def sep(vals, lo, hi):
        out = []
        for v in vals:
            gaps = [abs(v - w) for w in vals if abs(v - w) > 1e-10]
            out.append(min(gaps + [v - lo, hi - v, 0.7]))
        return out

    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    radii = [
        max(min(a, b) / 2.0, 8 * min_panel)
        for a, b in zip(sep(xs, u0, u0 + TWO_PI), sep(ys, v0, v0 + TWO_PI))
    ]

    xbreaks = _axis_breaks(u0, u0 + TWO_PI, xs, radii)
    ybreaks = _axis_breaks(v0, v0 + TWO_PI, ys, radii)

    cell_of = {}
    for p, r in zip(pts, radii):
        i = int(np.searchsorted(xbreaks, p.x - r / 2)) - 1
        j = int(np.searchsorted(ybreaks, p.y - r / 2)) - 1
        cell_of[(i, j)] = (p, r)

    total = 0.0j
    stack: List[Tuple[float, float, float, float]] = []
    for i in range(len(xbreaks) - 1):
        for j in range(len(ybreaks) - 1):
            if (i, j) in cell_of:
                p, r = cell_of[(i, j)]
                rho = r
                while rho > min_panel:
                    nxt = max(rho / 2.0, min_panel)
                    stack.extend(_frames(p.x, p.y, rho, nxt))
                    rho = nxt
                total += p.center_rule(rho)
            else:
                stack.append((xbreaks[i], xbreaks[i + 1], ybreaks[j], ybreaks[j + 1]))

    area = TWO_PI * TWO_PI
    floor = tol / 50_000.0
    processed = 0
    while stack:
        x0, x1, y0, y1 = stack.pop()
        processed += 1
        if processed > max_panels:
            raise QuadratureFailure(
                f"panel budget {max_panels} exhausted; "
                f"finest panel ~{x1 - x0:.2e}, {len(stack)} panels pending"
            )
        coarse = _panel_gl(f, x0, x1, y0, y1, 8)
        fine = _panel_gl(f, x0, x1, y0, y1, 16)
        err = abs(fine - coarse)
        ok = err <= max(tol * (x1 - x0) * (y1 - y0) / area, 1e-12 * abs(fine), floor)
        if ok or min(x1 - x0, y1 - y0) < min_panel:
            total += fine
        else:
            xm = 0.5 * (x0 + x1)
            ym = 0.5 * (y0 + y1)
            stack.extend(
                [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]
            )
    return total


# ---------------------------------------------------------------------------
# analytic center rules for the innermost square around a zero of F
# ---------------------------------------------------------------------------


def log_center_rule(grad, hess=None):
    """Rule for integrands log|F| near a zero of F.

    Simple zero: F ~ C1 x + C2 y with (C1, C2) = grad.  Double zero: pass
    hess = (F_tt, F_tp, F_pp) and F ~ the half Hessian form.
    """
    if hess is None:
        C1, C2 = grad

        def rule(h):
            def g(alpha):
                R = square_radius(alpha, h)
                mag = np.abs(C1 * np.cos(alpha) + C2 * np.sin(alpha))
                return 0.5 * R**2 * ((np.log(R) - 0.5) + np.log(mag))

            return angular_integral(g)

        return rule

    Ftt, Ftp, Fpp = hess

    def rule(h):
        def g(alpha):
            c, s = np.cos(alpha), np.sin(alpha)
            mag = np.abs(0.5 * (Ftt * c * c + 2 * Ftp * c * s + Fpp * s * s))
            R = square_radius(alpha, h)
            return 0.5 * R**2 * (2.0 * (np.log(R) - 0.5) + np.log(mag))

        return angular_integral(g)

    return rule


def inverse_center_rule(numerator, grad=None, hess=None, num_grad=None):
    """Rule for integrands N/F near a zero of F.

    Simple zero: N(p) times the integral of 1/(C1 x + C2 y).  Double zero
    (requires N(p) = 0; pass num_grad): (N_t x + N_p y) over the quadratic.
    """
    if hess is None:
        C1, C2 = grad
        n0 = numerator

        def rule(h):
            def g(alpha):
                R = square_radius(alpha, h)
                return n0 * R / (C1 * np.cos(alpha) + C2 * np.sin(alpha))

            return angular_integral(g)

        return rule

    Ftt, Ftp, Fpp = hess
    Nt, Np = num_grad

    def rule(h):
        def g(alpha):
            c, s = np.cos(alpha), np.sin(alpha)
            quadform = 0.5 * (Ftt * c * c + 2 * Ftp * c * s + Fpp * s * s)
            R = square_radius(alpha, h)
            return (Nt * c + Np * s) * R / quadform

        return angular_integral(g)

    return rule
