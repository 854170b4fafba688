"""Pure-Python twin of the compiled chain kernel.

Selected automatically when the extension is not built.  Consumes the
same raw 64-bit words and produces bitwise identical trajectories; the
benchmark in benchmarks/bench_chain.py compares the two.
"""

from __future__ import annotations

import numpy as np

_MASK32 = 0xFFFFFFFF


def _move(h, nbr4, v, up):
    hv = h[v]
    n = nbr4[v]
    if up:
        if h[n[0]] > hv and h[n[1]] > hv and h[n[2]] > hv and h[n[3]] > hv:
            h[v] = hv + 4
    else:
        if h[n[0]] < hv and h[n[1]] < hv and h[n[2]] < hv and h[n[3]] < hv:
            h[v] = hv - 4


def _pick(u, n_int):
    return (((u >> 32) & _MASK32) * n_int) >> 32


def run_single(heights, nbr4, interior, raw):
    n_int = len(interior)
    if n_int == 0:
        return
    for u in raw.tolist():
        v = interior[_pick(u, n_int)]
        _move(heights, nbr4, v, u & 1)


def run_pair(top, bot, nbr4, interior, raw):
    n_int = len(interior)
    if n_int == 0:
        return
    for u in raw.tolist():
        v = interior[_pick(u, n_int)]
        _move(top, nbr4, v, u & 1)
        _move(bot, nbr4, v, u & 1)


def agreement(top, bot):
    return int(np.max(top - bot, initial=0))
