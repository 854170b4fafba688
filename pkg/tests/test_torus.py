from fractions import Fraction

import numpy as np
import pytest

from dimervar.counting import TorusGraph, torus_weighted_sum
from dimervar.errors import DegenerateWeights, NumericOverflow
from dimervar.thermo import log_Z, probs_from_weights
from dimervar.torus import (
    dense_kasteleyn_check,
    edge_probability_finite,
    partition_components,
    torus_partition,
)

T2 = TorusGraph(2)


def random_rational_weights(rng):
    w = tuple(Fraction(int(rng.integers(0, 9)), int(rng.integers(1, 5))) for _ in range(4))
    return w if max(w) > 0 else (Fraction(1), *w[1:])


def test_uniform_anchor():
    assert torus_partition(2, (1, 1, 1, 1)) == pytest.approx(272, rel=1e-12)


def test_all_a_matching():
    assert torus_partition(2, (1, 0, 0, 0)) == pytest.approx(1.0, rel=1e-12)


def test_oracle_equality_random_rationals():
    rng = np.random.default_rng(12345)
    for _ in range(50):
        w = random_rational_weights(rng)
        exact = float(torus_weighted_sum(T2, w))
        approx = torus_partition(2, tuple(float(x) for x in w))
        assert approx == pytest.approx(exact, rel=1e-9)


def test_p1_vanishes_on_symmetric_locus():
    comps = partition_components(2, (1, 1, 1, 1))
    assert comps.sign[0] == 0 and comps.P1 == 0.0
    comps = partition_components(4, (2, 2, 0.7, 0.7))
    assert comps.P1 == 0.0


def test_sign_rule_tracks_dominance():
    # P1 > 0 exactly when one activity exceeds the sum of the others;
    # the paper words the rule with the opposite polarity, but the raw
    # fixed-term product (and agreement with enumeration) decides it
    rng = np.random.default_rng(99)
    for _ in range(100):
        w = rng.uniform(0.05, 3.0, size=4)
        comps = partition_components(2, tuple(w))
        dominant = any(2 * x > w.sum() for x in w)
        if comps.sign[0] != 0:
            assert (comps.sign[0] > 0) == dominant


def test_homogeneity():
    w = (1.3, 0.7, 0.4, 2.0)
    lam = 1.7
    n = 4
    z1 = torus_partition(n, w, log=True)
    z2 = torus_partition(n, tuple(lam * x for x in w), log=True)
    assert z2 == pytest.approx(z1 + 2 * n * n * np.log(lam), rel=1e-12)


def test_component_bounds():
    # Z >= P_l (indeed >= |P_l|, the Pfaffian triangle inequality) for
    # each l, and Z <= 2 max |P_l|.  The 3/2 upper constant quoted with
    # the inverted P1 sign convention fails once P1 < 0 subcritically.
    rng = np.random.default_rng(5)
    for _ in range(20):
        w = tuple(rng.uniform(0.1, 2.0, size=4))
        comps = partition_components(2, w)
        z = comps.Z()
        ps = [comps.component(k) for k in range(1, 5)]
        for p in ps:
            assert z >= abs(p) - 1e-9 * abs(z)
        assert z <= 2.0 * max(abs(p) for p in ps) + 1e-9 * abs(z)


def test_symmetries_at_finite_n():
    w = (1.3, 0.7, 0.4, 2.0)
    z = torus_partition(2, w)
    assert torus_partition(2, (0.7, 1.3, 0.4, 2.0)) == pytest.approx(z, rel=1e-12)
    assert torus_partition(2, (1.3, 0.7, 2.0, 0.4)) == pytest.approx(z, rel=1e-12)
    assert torus_partition(2, (0.4, 2.0, 1.3, 0.7)) == pytest.approx(z, rel=1e-12)


def test_monotonicity_in_weights():
    base = (1.0, 0.8, 1.2, 0.6)
    z0 = torus_partition(4, base)
    for k in range(4):
        w = list(base)
        w[k] += 0.3
        assert torus_partition(4, tuple(w)) > z0


def test_dense_kasteleyn():
    rng = np.random.default_rng(17)
    for w in [(1, 1, 1, 1), (2, 1, 1, 1), tuple(rng.uniform(0.2, 2, 4)), (1, 0, 1, 1)]:
        comps = partition_components(2, w)
        dets = dense_kasteleyn_check(w)
        for k in range(4):
            assert dets[k] >= -1e-8 * max(1.0, abs(dets[k]))
            p2 = comps.component(k + 1) ** 2
            assert dets[k] == pytest.approx(p2, rel=1e-8, abs=1e-8)


def test_finite_probabilities_uniform():
    p = edge_probability_finite(2, (1, 1, 1, 1))
    assert p.astuple() == pytest.approx((0.25, 0.25, 0.25, 0.25), abs=1e-12)


def test_finite_probabilities_sum_to_one():
    rng = np.random.default_rng(3)
    for n in (2, 4, 8):
        w = tuple(rng.uniform(0.1, 2.0, size=4))
        p = edge_probability_finite(n, w)
        assert p.total == pytest.approx(1.0, abs=1e-10)


def test_finite_probability_converges():
    p = edge_probability_finite(64, (2, 1, 1, 1))
    assert abs(p.p_a - 0.5) < 0.02
    limit = probs_from_weights((2, 1, 1, 1))
    for got, want in zip(p.astuple(), limit.astuple()):
        assert abs(got - want) < 0.02


def test_finite_probability_monotone_in_a():
    p1 = edge_probability_finite(8, (1.0, 1, 1, 1))
    p2 = edge_probability_finite(8, (1.5, 1, 1, 1))
    p3 = edge_probability_finite(8, (2.5, 1, 1, 1))
    assert p1.p_a < p2.p_a < p3.p_a


def test_finite_n_free_energy_converges():
    # Cauchy-style: the n=64 value is closer to the limit than n=32
    for w in [(1, 1, 1, 1), (2, 1, 1, 1), (1.5, 0.7, 1.0, 2.0)]:
        lim = log_Z(w)
        f32 = torus_partition(32, w, log=True) / (2 * 32 * 32)
        f64 = torus_partition(64, w, log=True) / (2 * 64 * 64)
        assert abs(f64 - lim) < abs(f32 - lim) + 1e-12
        assert abs(f64 - lim) < 1e-2


def test_caps_and_errors():
    with pytest.raises(NumericOverflow):
        partition_components(1024, (1, 1, 1, 1))
    with pytest.raises(DegenerateWeights):
        torus_partition(3, (1, 1, 1, 1))
    comps = partition_components(64, (3, 1, 1, 1))
    with pytest.raises(NumericOverflow):
        comps.component(2)
    assert np.isfinite(comps.log_Z())
