from fractions import Fraction

import numpy as np
import pytest

from dimervar.counting import (
    CapExceeded,
    MatchingStats,
    TorusGraph,
    count_tilings,
    enumerate_tilings,
    matching_stats,
    torus_matchings,
    torus_weighted_sum,
)
from dimervar.lattice import Region, aztec_diamond, rectangle


def test_known_counts():
    assert count_tilings(rectangle(2, 2)) == 2
    assert count_tilings(rectangle(2, 3)) == 3
    assert count_tilings(rectangle(4, 4)) == 36
    assert count_tilings(rectangle(6, 6)) == 6728
    assert count_tilings(rectangle(8, 8)) == 12988816
    assert count_tilings(rectangle(3, 3)) == 0


def test_aztec_diamond_counts():
    # 2^(n(n+1)/2)
    for n in (1, 2, 3, 4):
        assert count_tilings(aztec_diamond(n)) == 2 ** (n * (n + 1) // 2)


def test_two_by_n_fibonacci():
    # F(n) = F(n-1) + F(n-2), F(1) = 1, F(2) = 2
    fib = [1, 1]
    for n in range(1, 17):
        fib.append(fib[-1] + fib[-2])
        if 2 * n <= 32:
            assert count_tilings(rectangle(2, n)) == fib[n]


def test_count_matches_enumeration():
    for region in (rectangle(2, 4), rectangle(4, 4), aztec_diamond(2)):
        assert count_tilings(region) == sum(1 for _ in enumerate_tilings(region))


def test_enumeration_deterministic_and_distinct():
    region = rectangle(4, 4)
    first = [t.canonical() for t in enumerate_tilings(region)]
    second = [t.canonical() for t in enumerate_tilings(region)]
    assert first == second
    assert len(set(first)) == 36


def test_enumeration_2x2():
    tilings = {t.canonical() for t in enumerate_tilings(rectangle(2, 2))}
    horizontal = ((((0, 0), (1, 0))), (((0, 1), (1, 1))))
    vertical = ((((0, 0), (0, 1))), (((1, 0), (1, 1))))
    assert tilings == {horizontal, vertical}


def test_dihedral_invariance():
    base = [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1), (1, 2), (2, 2)]
    n0 = count_tilings(Region(base, (0, 0)))

    def transform(f):
        cells = [f(x, y) for x, y in base]
        xs = min(c[0] for c in cells)
        ys = min(c[1] for c in cells)
        cells = [(x - xs, y - ys) for x, y in cells]
        return Region(cells, sorted(cells)[0])

    for f in (
        lambda x, y: (-x, y),
        lambda x, y: (x, -y),
        lambda x, y: (y, x),
        lambda x, y: (-y, x),
        lambda x, y: (-x, -y),
        lambda x, y: (y, -x),
        lambda x, y: (-y, -x),
    ):
        assert count_tilings(transform(f)) == n0


def test_caps():
    with pytest.raises(CapExceeded):
        count_tilings(rectangle(10, 10))
    with pytest.raises(CapExceeded):
        list(enumerate_tilings(rectangle(6, 6), limit=100))
    with pytest.raises(CapExceeded):
        list(torus_matchings(TorusGraph(4)))


def test_torus_matching_count():
    t2 = TorusGraph(2)
    matchings = list(torus_matchings(t2))
    assert len(matchings) == 272
    for m in matchings[:10]:
        stats = matching_stats(m)
        assert stats.total == 2 * 2 * 2  # 2n^2 edges per matching
    assert torus_weighted_sum(t2, (1, 1, 1, 1)) == 272


def test_torus_weighted_values():
    t2 = TorusGraph(2)
    assert torus_weighted_sum(t2, (1, 0, 0, 0)) == 1
    a, b = Fraction(2), Fraction(3)
    assert torus_weighted_sum(t2, (a, b, 0, 0)) == (a * a + b * b) ** 4
    assert torus_weighted_sum(t2, (0, 0, a, b)) == (a * a + b * b) ** 4
    exact = torus_weighted_sum(t2, (Fraction(1, 2), 1, 2, Fraction(3, 2)))
    assert isinstance(exact, Fraction)
    approx = torus_weighted_sum(t2, (0.5, 1.0, 2.0, 1.5000000001))
    assert isinstance(approx, float)
    assert abs(approx - float(exact)) < 1e-6 * float(exact)


def test_torus_graph_validation():
    with pytest.raises(ValueError):
        TorusGraph(3)
    with pytest.raises(ValueError):
        TorusGraph(0)
