"""Exact uniform sampling of tilings by monotone coupling from the past,
plus empirical statistics for comparison with the variational prediction.

The chain flips height values by +-4 at random interior vertices (the
2x2 domino rotation in height coordinates).  The move kernel is
symmetric, so the uniform distribution is stationary; monotonicity of
the coupled update makes CFTP from the extremal Fournier extensions an
exact sampler.  Randomness is a counter-based Philox stream keyed by
(seed, sample index), so every sample is reproducible independently of
thread count or platform.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.random import Philox

from .errors import NonCoalescence, NotExtendable
from .lattice import (
    HeightFunction,
    Region,
    Tiling,
    height_to_tiling,
    min_max_extensions,
)

try:
    from . import _chain as _kernel

    BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on the build
    from . import _chain_py as _kernel

    BACKEND = "python"

RNG_NAME = "philox4x64"
EPOCH_CAP = 1 << 30
_BLOCK = 1 << 16


def backend() -> str:
    """'compiled' when the Cython kernel is importable, else 'python'."""
    return BACKEND


def raw_words(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    """Words [start, start+count) of the Philox stream keyed (seed, stream).

    Counter-based random access: the generator is advanced in whole
    4-word blocks, then the partial block is trimmed.
    """
    bg = Philox(key=np.array([seed % (1 << 64), stream % (1 << 64)], dtype=np.uint64))
    lo4 = start // 4
    if lo4:
        bg.advance(lo4)
    skip = start - 4 * lo4
    return bg.random_raw(count + skip)[skip:]


@dataclass
class ChainState:
    """One chain: heights plus the bookkeeping to continue its stream."""

    region: Region
    heights: np.ndarray
    seed: int
    stream: int = 0
    steps: int = 0

    def height_function(self) -> HeightFunction:
        return self.region.index().array_to_heights(self.heights)

    def copy(self) -> "ChainState":
        return ChainState(self.region, self.heights.copy(), self.seed, self.stream, self.steps)


def initial_state(region: Region, seed: int, which: str = "min") -> ChainState:
    lo, hi = _extremes(region)
    idx = region.index()
    h = idx.heights_to_array(lo if which == "min" else hi)
    return ChainState(region, h, seed)


def _extremes(region: Region):
    boundary = region.forced_boundary_heights()
    return min_max_extensions(region, boundary)


def _word_for(idx, v: int, direction_up: bool) -> np.ndarray:
    """A raw word whose multiply-shift reduction picks interior slot v."""
    n_int = len(idx.interior)
    pos = int(np.searchsorted(idx.interior, v))
    hi32 = (pos * (1 << 32) + (1 << 31)) // n_int  # midpoint of the slot
    assert ((hi32 * n_int) >> 32) == pos
    return np.array([(hi32 << 32) | (1 if direction_up else 0)], dtype=np.uint64)


def glauber_step(state: ChainState, vertex, direction_up: bool) -> ChainState:
    """One proposed rotation at `vertex`; returns the new state (the move
    applies only when the vertex is a strict local extremum)."""
    idx = state.region.index()
    out = state.copy()
    v = idx.vid[tuple(vertex)]
    if v not in set(idx.interior.tolist()):
        return out
    _kernel.run_single(out.heights, idx.nbr4, idx.interior, _word_for(idx, v, direction_up))
    out.steps += 1
    return out


def advance(state: ChainState, steps: int) -> ChainState:
    """Run the chain forward `steps` moves using its own stream."""
    out = state.copy()
    idx = state.region.index()
    done = 0
    while done < steps:
        block = min(_BLOCK, steps - done)
        raw = raw_words(state.seed, state.stream, out.steps, block)
        _kernel.run_single(out.heights, idx.nbr4, idx.interior, raw)
        out.steps += block
        done += block
    return out


def cftp_sample(
    region: Region,
    seed: int,
    stream: int = 0,
    start_epoch: int = 256,
    epoch_cap: int = EPOCH_CAP,
) -> Tiling:
    """Exactly uniform tiling by monotone coupling from the past.

    Coupled chains start from the minimal and maximal height functions at
    time -T and share randomness; word j of the stream is the move at
    time -(j+1), so doubling T reuses all previously drawn moves.  The
    result depends only on (region, seed, stream), not on the epoch
    schedule: any coalescing epoch yields the unique state determined by
    the infinite past.
    """
    return _cftp(region, seed, stream, start_epoch, epoch_cap)[0]


def _cftp(region, seed, stream, start_epoch, epoch_cap=EPOCH_CAP):
    idx = region.index()
    try:
        lo, hi = _extremes(region)
    except NotExtendable as exc:
        raise NotExtendable(f"region is not tileable: {exc}") from exc
    lo_arr = idx.heights_to_array(lo)
    hi_arr = idx.heights_to_array(hi)
    if np.array_equal(lo_arr, hi_arr):
        return height_to_tiling(region, lo), 0

    T = max(4, start_epoch)
    while T <= epoch_cap:
        top = hi_arr.copy()
        bot = lo_arr.copy()
        pos = T
        coupled = True
        while pos > 0:
            block = min(_BLOCK, pos)
            raw = raw_words(seed, stream, pos - block, block)[::-1].copy()
            if coupled:
                _kernel.run_pair(top, bot, idx.nbr4, idx.interior, raw)
                # once coalesced the chains stay equal; drop to one chain
                if _kernel.agreement(top, bot) == 0:
                    coupled = False
            else:
                _kernel.run_single(top, idx.nbr4, idx.interior, raw)
            pos -= block
        if not coupled or _kernel.agreement(top, bot) == 0:
            return height_to_tiling(region, idx.array_to_heights(top)), T
        T *= 2
    raise NonCoalescence(f"no coalescence within {epoch_cap} steps")


def sample_tilings(
    region: Region,
    seed: int,
    count: int,
    threads: int = 1,
    start_epoch: Optional[int] = None,
) -> List[Tiling]:
    """Independent exact samples; sample i uses stream (seed, i), so the
    result does not depend on the thread count.  Unless given, the epoch
    to start doubling from is calibrated once on the first sample."""
    if count <= 0:
        return []
    region.index()
    _extremes(region)
    if start_epoch is None:
        start_epoch = max(256, 8 * len(region.cells))

    first, T0 = _cftp(region, seed, 0, start_epoch)
    # start later samples near the coalescence scale seen on the first one
    warm = max(start_epoch, T0 // 2)

    def one(i: int) -> Tiling:
        return cftp_sample(region, seed, stream=i, start_epoch=warm)

    if threads <= 1:
        return [first] + [one(i) for i in range(1, count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return [first] + list(pool.map(one, range(1, count)))


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------


@dataclass
class DensityMap:
    """Windowed empirical frequencies of the four domino classes."""

    window: int
    x0: int
    y0: int
    counts: np.ndarray  # (wx, wy, 4)

    def frequencies(self) -> np.ndarray:
        tot = self.counts.sum(axis=2, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(tot > 0, self.counts / tot, np.nan)

    def window_at(self, x: float, y: float) -> np.ndarray:
        i = int((x - self.x0) // self.window)
        j = int((y - self.y0) // self.window)
        tot = self.counts[i, j].sum()
        if tot == 0:
            return np.full(4, np.nan)
        return self.counts[i, j] / tot


_CLS = {"a": 0, "b": 1, "c": 2, "d": 3}


def measure_densities(region: Region, tilings: Iterable[Tiling], window: int) -> DensityMap:
    if window < 2:
        raise ValueError("window must be >= 2")
    xs = [c[0] for c in region.cells]
    ys = [c[1] for c in region.cells]
    x0, y0 = min(xs), min(ys)
    wx = (max(xs) - x0) // window + 1
    wy = (max(ys) - y0) // window + 1
    counts = np.zeros((wx, wy, 4), dtype=np.int64)
    got = 0
    for tiling in tilings:
        got += 1
        for dom in tiling.dominos:
            cx, cy = dom.cell1
            counts[(cx - x0) // window, (cy - y0) // window, _CLS[dom.orientation_class]] += 1
    if got == 0:
        raise ValueError("need at least one tiling")
    return DensityMap(window, x0, y0, counts)


def height_moments(region: Region, tilings: Sequence[Tiling]):
    """Per-vertex sample mean and variance of the height functions."""
    if not tilings:
        raise ValueError("need at least one tiling")
    idx = region.index()
    from .lattice import tiling_to_height

    acc = np.zeros(len(idx.verts))
    acc2 = np.zeros(len(idx.verts))
    for tiling in tilings:
        h = idx.heights_to_array(tiling_to_height(region, tiling)).astype(float)
        acc += h
        acc2 += h * h
    n = len(tilings)
    mean = acc / n
    var = np.maximum(acc2 / n - mean**2, 0.0)
    mean_map: Dict[Tuple[int, int], float] = {v: mean[i] for v, i in idx.vid.items()}
    var_map: Dict[Tuple[int, int], float] = {v: var[i] for v, i in idx.vid.items()}
    return mean_map, var_map
