import numpy as np
import pytest

from dimervar.counting import TorusGraph, matching_stats, torus_matchings
from dimervar.errors import DegenerateWeights, InputError, TiltOutOfRange
from dimervar.lattice import Domino
from dimervar.thermo import (
    CATALAN,
    ENT_MAX,
    EdgeProbabilities,
    Tilt,
    WeightVector,
    config_probability,
    coupling_P,
    edge_probability_integral,
    ent_from_tilt,
    ent_from_weights,
    ent_gradient,
    hessian,
    lobachevsky,
    lobachevsky_series,
    log_Z,
    pde_coefficients,
    probs_from_tilt,
    probs_from_weights,
    singularity,
    spectral_F,
    spectral_residual,
    weights_from_tilt,
)


def interior_tilt_grid(n=41, radius=2.0):
    vals = np.linspace(-radius, radius, n)
    return [(s, t) for s in vals for t in vals if abs(s) + abs(t) < 2.0 - 1e-9]


# ---------------------------------------------------------------------------
# Lobachevsky
# ---------------------------------------------------------------------------


def test_lobachevsky_special_values():
    assert lobachevsky(0.0) == 0.0
    assert lobachevsky(np.pi / 2) == pytest.approx(0.0, abs=1e-15)
    assert lobachevsky(np.pi) == pytest.approx(0.0, abs=1e-15)
    # L(pi/4) = (pi/4)(2G/pi) / ... : 2G/pi = (4/pi) L(pi/4)
    assert (4 / np.pi) * lobachevsky(np.pi / 4) == pytest.approx(2 * CATALAN / np.pi, abs=1e-12)


def test_lobachevsky_periodic_odd():
    xs = np.linspace(-2, 2, 23)
    for x in xs:
        assert lobachevsky(x + np.pi) == pytest.approx(lobachevsky(x), abs=1e-13)
        assert lobachevsky(-x) == pytest.approx(-lobachevsky(x), abs=1e-13)


def test_lobachevsky_series_agrees():
    for x in np.linspace(0.05, np.pi - 0.05, 17):
        assert lobachevsky_series(x) == pytest.approx(lobachevsky(x), abs=1e-12)


def test_lobachevsky_vectorized():
    xs = np.linspace(0, np.pi, 101)
    vec = lobachevsky(xs)
    for x, v in zip(xs, vec):
        assert v == pytest.approx(lobachevsky(float(x)), abs=1e-15)


# ---------------------------------------------------------------------------
# coordinate conversions
# ---------------------------------------------------------------------------


def test_probs_from_tilt_examples():
    assert probs_from_tilt((0, 0)).astuple() == pytest.approx((0.25,) * 4, abs=1e-15)
    assert probs_from_tilt((0, 2)).astuple() == pytest.approx((1, 0, 0, 0), abs=1e-15)
    p = probs_from_tilt((1, 0))
    assert p.astuple() == pytest.approx((1 / 6, 1 / 6, 1 / 12, 7 / 12), abs=1e-12)
    assert p.total == pytest.approx(1.0, abs=1e-12)
    # sinsin relation
    assert np.sin(np.pi * p.p_a) * np.sin(np.pi * p.p_b) == pytest.approx(
        np.sin(np.pi * p.p_c) * np.sin(np.pi * p.p_d), abs=1e-10
    )
    with pytest.raises(TiltOutOfRange):
        probs_from_tilt((1.5, 1.5))


def test_tilt_recovery():
    # 2(p_a - p_b) = t and 2(p_d - p_c) = s, to 1e-10
    for s, t in interior_tilt_grid():
        p = probs_from_tilt((s, t))
        assert 2 * (p.p_a - p.p_b) == pytest.approx(t, abs=1e-10)
        assert 2 * (p.p_d - p.p_c) == pytest.approx(s, abs=1e-10)
        assert p.total == pytest.approx(1.0, abs=1e-10)
        assert all(0 <= q <= 1 for q in p.astuple())


def test_weights_from_tilt():
    w = weights_from_tilt((0, 0))
    assert w.astuple() == pytest.approx((np.sqrt(2) / 2,) * 4, abs=1e-15)
    w = weights_from_tilt((1, 0))
    assert w.a == pytest.approx(0.5, abs=1e-12)
    assert w.b == pytest.approx(0.5, abs=1e-12)
    assert w.c == pytest.approx(np.sin(np.pi / 12), abs=1e-12)
    assert w.d == pytest.approx(np.sin(7 * np.pi / 12), abs=1e-12)
    with pytest.raises(TiltOutOfRange):
        weights_from_tilt((2, 0))


def test_weights_satisfy_conditional_uniformity():
    for s, t in interior_tilt_grid():
        w = weights_from_tilt((s, t))
        assert abs(w.a * w.b - w.c * w.d) < 1e-10
        assert w.conditionally_uniform


def test_probs_weights_roundtrip():
    # probs_from_weights(weights_from_tilt) reproduces probs_from_tilt to 1e-8
    for s, t in interior_tilt_grid():
        p1 = probs_from_tilt((s, t))
        p2 = probs_from_weights(weights_from_tilt((s, t)))
        for a, b in zip(p1.astuple(), p2.astuple()):
            assert a == pytest.approx(b, abs=1e-8)


def test_probs_from_weights_examples():
    assert probs_from_weights((1, 1, 1, 1)).astuple() == pytest.approx((0.25,) * 4, abs=1e-14)
    assert probs_from_weights((3, 1, 1, 1)).astuple() == (1, 0, 0, 0)
    p = probs_from_weights((2, 1, 1, 1))
    assert p.p_a == pytest.approx(0.5, abs=1e-14)
    assert p.astuple()[1:] == pytest.approx((1 / 6,) * 3, abs=1e-12)
    # dominance with zeros, and the two-gon degeneration
    assert probs_from_weights((2, 0, 0, 0)).astuple() == (1, 0, 0, 0)
    assert probs_from_weights((1, 1, 0, 0)).astuple() == (0.5, 0.5, 0, 0)
    assert probs_from_weights((0, 0, 2, 2)).astuple() == (0, 0, 0.5, 0.5)
    # lozenge: one zero weight keeps a valid triangle
    p = probs_from_weights((1, 1, 1, 0))
    assert p.p_d == 0.0
    assert p.total == pytest.approx(1.0, abs=1e-12)


def test_probs_major_arc_branch():
    # close to dominance the major arc goes to the largest edge
    p = probs_from_weights((2.9, 1, 1, 1))
    assert p.p_a > 0.5
    assert p.total == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(DegenerateWeights):
        probs_from_weights((0, 0, 0, 0.0))


def test_scaling_invariance():
    p1 = probs_from_weights((2, 1, 1, 1))
    p2 = probs_from_weights((4, 2, 2, 2))
    assert p1.astuple() == pytest.approx(p2.astuple(), abs=1e-14)


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------


def test_ent_center_and_extremal():
    assert ent_from_tilt((0, 0)) == pytest.approx(2 * CATALAN / np.pi, abs=1e-9)
    assert ent_from_tilt((0, 0)) == pytest.approx(0.5831218080, abs=1e-9)
    for tilt in [(2, 0), (-2, 0), (0, 2), (0, -2)]:
        assert ent_from_tilt(tilt) == 0.0
    # diagonal boundary points vanish up to roundoff of L(pi/2)
    assert ent_from_tilt((1, 1)) == pytest.approx(0.0, abs=1e-15)


def test_ent_from_weights_example():
    want = 3 / np.pi * lobachevsky(np.pi / 6)
    assert ent_from_weights((2, 1, 1, 1)) == pytest.approx(want, abs=1e-12)


def test_ent_agreement_between_entry_points():
    for s, t in [(0.3, 0.4), (-1.0, 0.5), (0.0, 1.2)]:
        w = weights_from_tilt((s, t))
        assert ent_from_weights(w) == pytest.approx(ent_from_tilt((s, t)), abs=1e-10)


def test_ent_maximum_at_origin():
    for s, t in interior_tilt_grid(21):
        assert ent_from_tilt((s, t)) <= ENT_MAX + 1e-12


def test_ent_symmetric_under_permutations():
    from itertools import permutations

    w = (1.4, 0.6, 1.0, 0.8)
    base = ent_from_weights(w)
    for perm in permutations(range(4)):
        assert ent_from_weights(tuple(w[i] for i in perm)) == pytest.approx(base, abs=1e-6)


def test_entropy_consistency_with_free_energy():
    # ent(w) = log Z(w) - sum p_x log x
    rng = np.random.default_rng(21)
    for _ in range(25):
        w = tuple(rng.uniform(0.2, 2.5, size=4))
        p = probs_from_weights(w)
        legendre = log_Z(w) - sum(
            q * np.log(x) for q, x in zip(p.astuple(), w) if q > 0
        )
        assert ent_from_weights(w) == pytest.approx(legendre, abs=1e-6)


def test_gradient_identity():
    # closed-form gradient vs finite differences of ent, to 1e-6
    for s, t in interior_tilt_grid(13, radius=1.6):
        gs, gt = ent_gradient(s, t)
        h = 1e-6
        fd_s = (ent_from_tilt((s + h, t)) - ent_from_tilt((s - h, t))) / (2 * h)
        fd_t = (ent_from_tilt((s, t + h)) - ent_from_tilt((s, t - h))) / (2 * h)
        assert gs == pytest.approx(fd_s, abs=1e-6)
        assert gt == pytest.approx(fd_t, abs=1e-6)


# ---------------------------------------------------------------------------
# Hessian and PDE coefficients
# ---------------------------------------------------------------------------


def test_hessian_origin():
    h = hessian((0, 0))
    assert h.ent_ss == pytest.approx(-np.pi / 8, abs=1e-8)
    assert h.ent_tt == pytest.approx(-np.pi / 8, abs=1e-8)
    assert h.ent_st == pytest.approx(0.0, abs=1e-15)


def test_hessian_negative_definite_random():
    rng = np.random.default_rng(11)
    count = 0
    while count < 1000:
        s, t = rng.uniform(-2, 2, size=2)
        if abs(s) + abs(t) >= 1.999:
            continue
        count += 1
        h = hessian((s, t))
        assert h.negative_definite


def test_hessian_matches_finite_differences():
    for s, t in [(0.0, 0.0), (0.5, 0.3), (-0.8, 0.9), (1.2, -0.4), (0.1, 1.5)]:
        h = hessian((s, t))
        step = 1e-4
        f = ent_from_tilt
        fd_ss = (f((s + step, t)) - 2 * f((s, t)) + f((s - step, t))) / step**2
        fd_tt = (f((s, t + step)) - 2 * f((s, t)) + f((s, t - step))) / step**2
        fd_st = (
            f((s + step, t + step))
            - f((s + step, t - step))
            - f((s - step, t + step))
            + f((s - step, t - step))
        ) / (4 * step**2)
        assert h.ent_ss == pytest.approx(fd_ss, abs=1e-5)
        assert h.ent_tt == pytest.approx(fd_tt, abs=1e-5)
        assert h.ent_st == pytest.approx(fd_st, abs=1e-5)
    with pytest.raises(TiltOutOfRange):
        hessian((2, 0))


def test_pde_coefficients():
    c = pde_coefficients((0, 0))
    assert (c.A_xx, c.A_xy, c.A_yy) == pytest.approx((2, 0, 2), abs=1e-15)
    c = pde_coefficients((1, 1))
    assert (c.A_xx, c.A_xy, c.A_yy, c.D) == pytest.approx((1, 2, 1, 0), abs=1e-12)


def test_pde_ellipticity_matches_hessian():
    for s, t in interior_tilt_grid(15, radius=1.8):
        c = pde_coefficients((s, t))
        h = hessian((s, t))
        assert (c.A_xx * c.A_yy - (c.A_xy / 2) ** 2 > 0) == (h.determinant > 0)


# ---------------------------------------------------------------------------
# spectral point and free energy
# ---------------------------------------------------------------------------


def test_singularity_examples():
    sp = singularity((1, 1, 1, 1))
    assert (sp.theta0, sp.phi0) == pytest.approx((np.pi, np.pi), abs=1e-12)
    sp = singularity((3, 1, 1, 1))
    assert sp.theta0 == pytest.approx(np.pi, abs=1e-12)
    sp = singularity((2, 1, 1, 1))
    assert sp.theta0 == pytest.approx(np.pi, abs=1e-12)
    assert sp.phi0 == pytest.approx(2 * np.pi / 3, abs=1e-12)
    assert spectral_residual((2, 1, 1, 1)) < 1e-8


def test_singularity_residual_random():
    rng = np.random.default_rng(31)
    for _ in range(20):
        w = tuple(rng.uniform(0.3, 1.5, size=4))
        if any(2 * x >= sum(w) for x in w):
            continue
        assert spectral_residual(w) < 1e-8


def test_log_Z_uniform():
    assert log_Z((1, 1, 1, 1)) == pytest.approx(2 * CATALAN / np.pi, abs=1e-9)
    assert log_Z((1, 1, 1, 1), method="2d") == pytest.approx(2 * CATALAN / np.pi, abs=1e-6)


def test_log_Z_homogeneous():
    w = (1.2, 0.5, 0.8, 1.9)
    assert log_Z(tuple(3 * x for x in w)) == pytest.approx(log_Z(w) + np.log(3), abs=1e-10)


def test_log_Z_routes_agree():
    weights = [
        (1, 1, 1, 1),
        (2, 1, 1, 1),
        (5, 1, 1, 1),
        (1.3, 0.4, 0.9, 1.7),
        (1, 1, 2, 2),
        (1, 0, 1, 1),
        (2.9, 1, 1, 1),
    ]
    for w in weights:
        assert log_Z(w, "1d") == pytest.approx(log_Z(w, "2d"), abs=1e-6)


def test_log_Z_lozenge_and_frozen():
    # fully frozen: only the heaviest brickwork survives
    assert log_Z((2, 0, 0, 0)) == pytest.approx(np.log(2), abs=1e-9)
    assert log_Z((2, 1, 0, 0)) == pytest.approx(np.log(2), abs=1e-9)
    assert log_Z((0, 0, 3, 1)) == pytest.approx(np.log(3), abs=1e-9)


def test_edge_probability_integral_matches_closed_form():
    for w in [(1, 1, 1, 1), (2, 1, 1, 1), (1.3, 0.4, 0.9, 1.7), (4, 1, 1, 1)]:
        p = probs_from_weights(w)
        for which, want in zip("abcd", p.astuple()):
            got = edge_probability_integral(w, which)
            assert got == pytest.approx(want, abs=1e-6)


# ---------------------------------------------------------------------------
# coupling kernel
# ---------------------------------------------------------------------------


def test_coupling_parity_precondition():
    with pytest.raises(InputError):
        coupling_P(2, 0, (1, 1, 1, 1))


def test_coupling_uniform_values():
    P10 = coupling_P(1, 0, (1, 1, 1, 1))
    assert P10.real == pytest.approx(0.25, abs=1e-8)
    assert abs(P10.imag) < 1e-10
    # conjugation symmetry makes the mirrored displacement real and equal
    Pm10 = coupling_P(-1, 0, (1, 1, 1, 1))
    assert Pm10.real == pytest.approx(P10.real, abs=1e-8)
    assert abs(Pm10.imag) < 1e-10


def test_coupling_gives_edge_probability():
    for w in [(1, 1, 1, 1), (2, 1, 1, 1)]:
        p = probs_from_weights(w)
        assert w[0] * coupling_P(1, 0, w).real == pytest.approx(p.p_a, abs=1e-6)


def test_coupling_decay():
    vals = [abs(coupling_P(2 * k + 1, 0, (1, 1, 1, 1))) for k in (0, 1, 2, 3)]
    assert vals[0] > vals[1] > vals[3]


def test_config_probability_single_domino():
    dom = Domino((0, 0), (1, 0))  # an a-domino
    assert config_probability([dom], (1, 1, 1, 1)) == pytest.approx(0.25, abs=1e-6)
    assert config_probability([], (1, 1, 1, 1)) == 1.0


def test_config_probability_overlap_rejected():
    from dimervar.errors import ConfigOverlap

    with pytest.raises(ConfigOverlap):
        config_probability([Domino((0, 0), (1, 0)), Domino((1, 0), (2, 0))], (1, 1, 1, 1))


def test_config_probability_wieland_variant_matches():
    doms = [Domino((0, 0), (1, 0)), Domino((4, 0), (5, 0))]
    w = (1, 1, 1, 1)
    std = config_probability(doms, w)
    wie = config_probability(doms, w, variant="wieland")
    assert std == pytest.approx(wie, abs=1e-8)
    with pytest.raises(InputError):
        config_probability(doms, (2, 1, 1, 1), variant="wieland")


def test_config_probability_vs_torus_frequency():
    # two parallel a-dominos at horizontal distance 2, against the exact
    # weighted fraction on the 4x4 torus (finite-size tolerance 0.05)
    doms = [Domino((0, 0), (1, 0)), Domino((2, 0), (3, 0))]
    pred = config_probability(doms, (1, 1, 1, 1))
    t2 = TorusGraph(2)
    hits = 0
    total = 0
    want = {((0, 0), (1, 0)), ((2, 0), (3, 0))}
    for m in torus_matchings(t2):
        total += 1
        edges = {(u, v) for u, v, _ in m}
        if want <= edges:
            hits += 1
    assert pred == pytest.approx(hits / total, abs=0.05)


def test_weightvector_validation():
    with pytest.raises(InputError):
        WeightVector(-1, 1, 1, 1)
    with pytest.raises(DegenerateWeights):
        WeightVector(0, 0, 0, 0)
    assert WeightVector(1, 2, 2, 1).conditionally_uniform
    assert not WeightVector(2, 2, 1, 1).conditionally_uniform
    with pytest.raises(TiltOutOfRange):
        Tilt(1.5, 0.6)
