from collections import Counter

import numpy as np
import pytest
from scipy import stats

from dimervar import sampler
from dimervar.counting import count_tilings, enumerate_tilings
from dimervar.errors import NotExtendable
from dimervar.lattice import (
    Region,
    aztec_diamond,
    join,
    meet,
    min_max_extensions,
    rectangle,
    tiling_to_height,
)
from dimervar.sampler import (
    ChainState,
    cftp_sample,
    glauber_step,
    height_moments,
    initial_state,
    measure_densities,
    raw_words,
    sample_tilings,
)


def test_backend_available():
    assert sampler.backend() in ("compiled", "python")


def test_raw_words_random_access():
    full = raw_words(9, 4, 0, 64)
    part = raw_words(9, 4, 17, 12)
    assert np.array_equal(full[17:29], part)
    other = raw_words(9, 5, 0, 64)
    assert not np.array_equal(full, other)


def test_glauber_step_involution():
    region = rectangle(2, 2)
    s0 = initial_state(region, seed=0, which="min")
    center = (1, 1)
    up = glauber_step(s0, center, True)
    assert not np.array_equal(up.heights, s0.heights)
    down = glauber_step(up, center, False)
    assert np.array_equal(down.heights, s0.heights)
    # moving at a non-extremal vertex (or re-raising a maximum) is a no-op
    again = glauber_step(up, center, True)
    assert np.array_equal(again.heights, up.heights)
    # the 2x2 square's two tilings are one move apart
    lo, hi = min_max_extensions(region, region.forced_boundary_heights())
    assert up.height_function() == hi


def test_chain_preserves_validity():
    region = aztec_diamond(3)
    state = initial_state(region, seed=5)
    state = sampler.advance(state, 2000)
    state.height_function().validate()


def test_monotone_coupling():
    # if h1 <= h2, one coupled step preserves the order (the CFTP core)
    region = rectangle(4, 4)
    idx = region.index()
    heights = [
        idx.heights_to_array(tiling_to_height(region, t))
        for t in enumerate_tilings(region)
    ]
    rng = np.random.default_rng(0)
    words = raw_words(3, 0, 0, 100_000)
    n = len(heights)
    for k in range(100_000):
        i, j = rng.integers(0, n, size=2)
        lo = np.minimum(heights[i], heights[j])  # meet is a height function
        hi = np.maximum(heights[i], heights[j])
        word = words[k: k + 1]
        lo2, hi2 = lo.copy(), hi.copy()
        sampler._kernel.run_single(lo2, idx.nbr4, idx.interior, word)
        sampler._kernel.run_single(hi2, idx.nbr4, idx.interior, word)
        assert np.all(lo2 <= hi2)


def test_cftp_determinism():
    region = rectangle(4, 4)
    a = cftp_sample(region, seed=123, stream=7)
    b = cftp_sample(region, seed=123, stream=7)
    assert a.canonical() == b.canonical()
    c = cftp_sample(region, seed=124, stream=7)
    d = cftp_sample(region, seed=123, stream=8)
    assert len({a.canonical(), c.canonical(), d.canonical()}) > 1
    # thread-count independence
    seq = [t.canonical() for t in sample_tilings(region, seed=9, count=8, threads=1)]
    par = [t.canonical() for t in sample_tilings(region, seed=9, count=8, threads=4)]
    assert seq == par


def test_cftp_epoch_schedule_irrelevant():
    region = rectangle(4, 4)
    a = cftp_sample(region, seed=5, stream=1, start_epoch=4)
    b = cftp_sample(region, seed=5, stream=1, start_epoch=4096)
    assert a.canonical() == b.canonical()


def test_cftp_not_tileable():
    with pytest.raises(NotExtendable):
        cftp_sample(Region([(0, 0)], (0, 0)), seed=0)


def test_cftp_unique_tiling_region():
    region = rectangle(2, 1)
    t = cftp_sample(region, seed=0)
    assert len(t.dominos) == 1


def test_cftp_two_by_two_frequencies():
    region = rectangle(2, 2)
    counts = Counter(
        cftp_sample(region, seed=77, stream=i).canonical() for i in range(2000)
    )
    assert len(counts) == 2
    # each within 3 sigma of 1000 (sigma ~ 22.4)
    for v in counts.values():
        assert abs(v - 1000) < 3 * np.sqrt(2000 * 0.25)


def test_cftp_uniform_4x4_chisquare():
    region = rectangle(4, 4)
    support = {t.canonical() for t in enumerate_tilings(region)}
    assert len(support) == 36
    n = 7200
    counts = Counter(t.canonical() for t in sample_tilings(region, seed=2024, count=n))
    assert set(counts) <= support
    observed = np.array([counts.get(t, 0) for t in sorted(support)])
    chi2 = ((observed - n / 36) ** 2 / (n / 36)).sum()
    p = stats.chi2.sf(chi2, df=35)
    assert p > 0.001


def test_densities_and_moments():
    region = aztec_diamond(6)
    tilings = sample_tilings(region, seed=31, count=30)
    dm = measure_densities(region, tilings, window=4)
    freq = dm.frequencies()
    valid = ~np.isnan(freq[..., 0])
    assert np.allclose(freq[valid].sum(axis=-1), 1.0)
    center = dm.window_at(0.0, 0.0)
    assert center.sum() == pytest.approx(1.0)
    mean, var = height_moments(region, tilings)
    for v in region.boundary_vertices:
        assert var[v] == 0.0
    assert max(var.values()) > 0
    with pytest.raises(ValueError):
        measure_densities(region, tilings, window=1)


def test_kernel_twins_agree():
    # compiled and pure-Python kernels follow identical trajectories
    from dimervar import _chain_py

    region = aztec_diamond(3)
    idx = region.index()
    lo, hi = sampler._extremes(region)
    a = idx.heights_to_array(lo)
    b = a.copy()
    raw = raw_words(11, 0, 0, 4000)
    sampler._kernel.run_single(a, idx.nbr4, idx.interior, raw)
    _chain_py.run_single(b, idx.nbr4, idx.interior, raw)
    assert np.array_equal(a, b)
    t1 = idx.heights_to_array(hi)
    b1 = t1.copy()
    t2 = idx.heights_to_array(lo)
    b2 = t2.copy()
    sampler._kernel.run_pair(t1, t2, idx.nbr4, idx.interior, raw)
    _chain_py.run_pair(b1, b2, idx.nbr4, idx.interior, raw)
    assert np.array_equal(t1, b1) and np.array_equal(t2, b2)
