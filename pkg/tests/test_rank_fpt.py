import random
from itertools import combinations

import pytest

from pidpp import SquareMatrix, scalar, shared_subset_sum, z_m_brute, zm_rank
from pidpp.errors import (
    BudgetExceededError,
    IndexRangeError,
    NotPositiveSemidefiniteError,
)
from pidpp.exact import ONE, ZERO

from conftest import random_psd


def brute_shared_sum(slices, perms):
    s = len(perms[0])
    n = len(slices[0])
    total = ZERO
    for subset in combinations(range(n), s):
        term = ONE
        for level, o in enumerate(subset):
            for grid, perm in zip(slices, perms):
                term = term * grid[o][perm[level]]
        total = total + term
    return total


def test_shared_subset_sum_degenerate():
    assert shared_subset_sum([], []) == 1
    grid = [[scalar(1)] for _ in range(5)]
    assert shared_subset_sum([grid], [()]) == 1  # s = 0
    assert shared_subset_sum([grid], [(0,)]) == 5  # each singleton contributes 1
    with pytest.raises(IndexRangeError):
        shared_subset_sum([grid[:1]], [(0, 0)])  # s > n


def test_shared_subset_sum_matches_enumeration():
    rng = random.Random(55)
    for _ in range(15):
        n = rng.randint(2, 5)
        s = rng.randint(1, min(3, n))
        count = rng.randint(1, 3)
        slices = [
            [[scalar(rng.randint(-3, 3)) for _ in range(s)] for _ in range(n)]
            for _ in range(count)
        ]
        perms = []
        for _ in range(count):
            perm = list(range(s))
            rng.shuffle(perm)
            perms.append(tuple(perm))
        assert shared_subset_sum(slices, perms) == brute_shared_sum(slices, perms)


def test_shared_subset_sum_first_level_is_row_product():
    # With s = 1 the table's single level must equal the sum of row products.
    rng = random.Random(9)
    n = 6
    grids = [[[scalar(rng.randint(-2, 2))] for _ in range(n)] for _ in range(2)]
    want = ZERO
    for o in range(n):
        want = want + grids[0][o][0] * grids[1][o][0]
    assert shared_subset_sum(grids, [(0,), (0,)]) == want


def test_zm_rank_examples():
    j3 = SquareMatrix.ones(3)
    assert zm_rank([j3, j3]) == 4
    i2 = SquareMatrix.identity(2)
    assert zm_rank([i2, i2]) == 4


def test_zm_rank_matches_brute():
    rng = random.Random(202)
    for _ in range(25):
        n = rng.randint(1, 8)
        m = rng.randint(1, 3)
        r = rng.randint(1, 3) if m < 3 else rng.randint(1, 2)
        mats = [random_psd(n, r, rng) for _ in range(m)]
        assert zm_rank(mats) == z_m_brute(mats)


def test_zm_rank_invariant_under_relabeling():
    rng = random.Random(88)
    n = 6
    mats = [random_psd(n, 2, rng) for _ in range(2)]
    perm = list(range(n))
    rng.shuffle(perm)
    relabeled = [
        SquareMatrix([[m[perm[i], perm[j]] for j in range(n)] for i in range(n)])
        for m in mats
    ]
    assert zm_rank(mats) == zm_rank(relabeled)


def test_zm_rank_rejects_non_psd_and_budget():
    with pytest.raises(NotPositiveSemidefiniteError):
        zm_rank([SquareMatrix.diagonal([1, -1])])
    big = random_psd(12, 6, random.Random(3))
    with pytest.raises(BudgetExceededError):
        zm_rank([big] * 3, budget=10_000)
