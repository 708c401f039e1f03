import random
from fractions import Fraction

import pytest

from pidpp import (
    MatrixTuple,
    SquareMatrix,
    count_k_matchings_brute,
    count_matchings_brute,
    det,
    edpp_brute,
    map_brute,
    mixed_discriminant_brute,
    permanent,
    scalar,
    subset_masses,
    z_m_brute,
    z_mk_brute,
)
from pidpp.errors import CapExceededError, DimensionMismatchError, NegativeMinorError
from pidpp.exact import ONE
from pidpp.graphs import BipartiteGraphSpec

from conftest import random_psd, random_rational_matrix


def test_z_m_examples():
    i2 = SquareMatrix.identity(2)
    j2 = SquareMatrix.ones(2)
    assert z_m_brute([i2, i2]) == 4
    assert z_m_brute([j2, j2]) == 3


def test_z_1_closed_form():
    rng = random.Random(31)
    for _ in range(20):
        n = rng.randint(1, 7)
        m = random_rational_matrix(n, rng)
        assert z_m_brute([m]) == det(m.add(SquareMatrix.identity(n)))


def test_z_mk_examples():
    i4 = SquareMatrix.identity(4)
    assert z_mk_brute([i4], 2) == 6
    assert z_mk_brute([i4], 0) == 1
    rng = random.Random(5)
    for _ in range(8):
        n = rng.randint(1, 6)
        mats = [random_rational_matrix(n, rng) for _ in range(rng.randint(1, 2))]
        total = z_mk_brute(mats, 0)
        for k in range(1, n + 1):
            total = total + z_mk_brute(mats, k)
        assert total == z_m_brute(mats)


def test_z_m_cap():
    with pytest.raises(CapExceededError):
        z_m_brute([SquareMatrix.identity(3)], cap=2)


def test_z_m_parallel_matches_serial():
    rng = random.Random(12)
    mats = [random_rational_matrix(5, rng) for _ in range(2)]
    serial = z_m_brute(mats)
    assert z_m_brute(mats, workers=2) == serial
    assert z_m_brute(mats, workers=3) == serial


def test_edpp_integer_and_fractional():
    i2 = SquareMatrix.identity(2)
    interval = edpp_brute(i2, Fraction(3, 2))
    assert interval.lo == interval.hi == 4
    a = random_rational_matrix(4, random.Random(77))
    assert edpp_brute(a, 2) == z_m_brute([a, a])
    interval = edpp_brute(SquareMatrix.diagonal([4, 9]), Fraction(1, 2))
    assert interval.lo == interval.hi == 12
    with pytest.raises(NegativeMinorError):
        edpp_brute(SquareMatrix.diagonal([-2, 1]), Fraction(1, 2))


def test_edpp_interval_width():
    m = SquareMatrix.diagonal([2, 3, 5])
    interval = edpp_brute(m, Fraction(3, 2), rel_eps=Fraction(1, 2**40))
    assert interval.hi - interval.lo <= interval.lo / 2**40
    assert interval.lo <= interval.hi


def test_map_brute_tie_breaks():
    sub, val = map_brute(SquareMatrix.diagonal([2, scalar(1, 2)]))
    assert (sub, val) == (frozenset({0}), 2)
    sub, val = map_brute(SquareMatrix.identity(4))
    assert sub == frozenset() and val == 1
    sub, val = map_brute(SquareMatrix.identity(2).scale(2))
    assert sub == frozenset({0, 1}) and val == 4


def test_subset_masses_cover_everything():
    rng = random.Random(6)
    mats = [random_psd(4, 2, rng), random_psd(4, 3, rng)]
    masses = list(subset_masses(MatrixTuple.of(mats)))
    assert len(masses) == 16
    assert sum((sm.mass for sm in masses), scalar(0)) == z_m_brute(mats)
    assert all(sm.mass >= 0 for sm in masses)  # PSD inputs are P0


def test_mixed_discriminant():
    a = SquareMatrix([[1, 2], [3, 4]])
    k = [SquareMatrix.diagonal([1, 2]), SquareMatrix.diagonal([3, 4])]
    assert mixed_discriminant_brute(k) == permanent(a)
    m = 4
    assert mixed_discriminant_brute([SquareMatrix.identity(m)] * m) == 24
    assert mixed_discriminant_brute([SquareMatrix([[scalar(7, 2)]])]) == scalar(7, 2)
    with pytest.raises(DimensionMismatchError):
        mixed_discriminant_brute([SquareMatrix.identity(3)] * 2)


def test_mixed_discriminant_matches_permanent_random():
    rng = random.Random(40)
    for _ in range(6):
        m = rng.randint(1, 4)
        a = random_rational_matrix(m, rng)
        k = [SquareMatrix.diagonal([a[i, j] for j in range(m)]) for i in range(m)]
        assert mixed_discriminant_brute(k) == permanent(a)


def test_matchings():
    single = BipartiteGraphSpec(nx=1, ny=1, edges=((0, 0),))
    assert count_matchings_brute(single) == 2
    p3 = BipartiteGraphSpec(nx=2, ny=1, edges=((0, 0), (1, 0)))
    assert count_matchings_brute(p3) == 3
    c4 = BipartiteGraphSpec(nx=2, ny=2, edges=((0, 0), (0, 1), (1, 1), (1, 0)))
    assert count_matchings_brute(c4) == 7
    assert count_k_matchings_brute(c4, 0) == 1
    assert count_k_matchings_brute(c4, 1) == 4
    assert count_k_matchings_brute(c4, 2) == 2
    with pytest.raises(CapExceededError):
        big = BipartiteGraphSpec(
            nx=5, ny=5, edges=tuple((x, y) for x in range(5) for y in range(5))
        )
        count_matchings_brute(big, cap=20)


def test_matrix_tuple_validation():
    with pytest.raises(DimensionMismatchError):
        MatrixTuple.of([SquareMatrix.identity(2), SquareMatrix.identity(3)])
    with pytest.raises(DimensionMismatchError):
        MatrixTuple(matrices=())
    t = MatrixTuple.of(SquareMatrix.identity(2))
    assert t.m == 1 and t.n == 2
