"""Rank-parameterized exact normalizer.

The normalizer of a product process over PSD matrices of small rank
expands, via Cauchy-Binet, into a sum over per-matrix column subsets and
permutation pairs of a shared-subset quantity; that inner quantity is a
dynamic program over rows, so the exponential blow-up is confined to the
rank, never the order.
"""

from __future__ import annotations

from itertools import combinations, permutations
from math import comb, factorial
from typing import Sequence

from .brute import MatrixTuple
from .errors import BudgetExceededError, IndexRangeError
from .exact import ExactScalar, ONE, ZERO
from .matrix import low_rank_factor, rank

DEFAULT_RANK_BUDGET = 20_000_000


def _sign(perm: Sequence[int]) -> int:
    inv = 0
    for a in range(len(perm)):
        pa = perm[a]
        for b in range(a + 1, len(perm)):
            if pa > perm[b]:
                inv += 1
    return -1 if inv & 1 else 1


def shared_subset_sum(slices: Sequence, perms: Sequence) -> ExactScalar:
    """Sum over ascending row subsets of per-level entry products.

    ``slices[f]`` is a grid with n rows and ``perms[f]`` a length-s column
    selector fixing which column of slice f feeds row position l.  The
    value is ``sum over ascending (o_1..o_s) of prod_l prod_f
    slices[f][o_l][perms[f][l]]``, computed by a table over (level, last
    row) whose recurrence sums the previous level over smaller rows.
    """
    if len(slices) != len(perms):
        raise IndexRangeError("one permutation per slice required")
    if not slices:
        return ONE
    s = len(perms[0])
    if any(len(p) != s for p in perms):
        raise IndexRangeError("permutation lengths differ")
    if s == 0:
        return ONE
    n = len(slices[0])
    if any(len(grid) != n for grid in slices):
        raise IndexRangeError("slice row counts differ")
    if s > n:
        raise IndexRangeError(f"subset size {s} exceeds row count {n}")

    def row_factor(level: int, o: int) -> ExactScalar:
        value = ONE
        for grid, perm in zip(slices, perms):
            value = value * grid[o][perm[level]]
            if value == 0:
                return ZERO
        return value

    prev = [row_factor(0, o) for o in range(n)]
    for level in range(1, s):
        running = ZERO
        cur = [ZERO] * n
        for o in range(n):
            if o > 0:
                running = running + prev[o - 1]
            if running != 0:
                f = row_factor(level, o)
                if f != 0:
                    cur[o] = running * f
        prev = cur
    total = ZERO
    for v in prev:
        total = total + v
    return total


def estimate_rank_work(ranks: Sequence[int], n: int) -> int:
    """Iteration-count estimate guarding the FPT blow-up."""
    smax = min(ranks) if ranks else 0
    total = 0
    for s in range(smax + 1):
        combos = 1
        for r in ranks:
            combos *= comb(r, s) * factorial(s) ** 2
        total += combos * max(1, s * n)
    return total


def zm_rank(
    tuple_, budget: int = DEFAULT_RANK_BUDGET
) -> ExactScalar:
    """Exact normalizer for PSD matrices, parameterized by maximum rank.

    Each matrix is split as U V^T from its pivoted LDL; the normalizer is
    then the signed sum over subset sizes, per-matrix column subsets, and
    permutation pairs of :func:`shared_subset_sum`.  Non-PSD input fails in
    the factorization; oversized rank/matrix-count combinations fail the
    work budget instead of hanging.
    """
    T = MatrixTuple.of(tuple_)
    n = T.n
    ranks = [rank(mat) for mat in T.matrices]
    work = estimate_rank_work(ranks, n)
    if work > budget:
        raise BudgetExceededError(
            f"rank algorithm needs ~{work} iterations "
            f"(ranks {ranks}, m={T.m}), budget {budget}"
        )
    factors = [low_rank_factor(mat, r) for mat, r in zip(T.matrices, ranks)]

    # Per matrix, precompute the n-by-r^2 grid of products U[o][c1]*V[o][c2]
    # so each permutation pair reads one combined column per level.
    combined = []
    for fac, r in zip(factors, ranks):
        grid = [
            [fac.left[o][c1] * fac.right[o][c2] for c1 in range(r) for c2 in range(r)]
            for o in range(n)
        ]
        combined.append(grid)

    smax = min(ranks) if ranks else 0
    total = ONE  # the empty subset contributes 1 (s = 0 term)
    for s in range(1, smax + 1):
        perm_pool = list(permutations(range(s)))
        signs = {p: _sign(p) for p in perm_pool}
        column_sets = [list(combinations(range(r), s)) for r in ranks]

        def matrix_choices(i: int):
            r = ranks[i]
            for cols in column_sets[i]:
                for sigma in perm_pool:
                    for tau in perm_pool:
                        key = tuple(
                            cols[sigma[level]] * r + cols[tau[level]]
                            for level in range(s)
                        )
                        yield signs[sigma] * signs[tau], key

        choices = [list(matrix_choices(i)) for i in range(T.m)]

        def accumulate(i: int, sign: int, keys: list) -> ExactScalar:
            if i == T.m:
                value = shared_subset_sum(combined, keys)
                return value if sign > 0 else -value
            acc = ZERO
            for sgn_i, key in choices[i]:
                keys.append(key)
                acc = acc + accumulate(i + 1, sign * sgn_i, keys)
                keys.pop()
            return acc

        total = total + accumulate(0, 1, [])
    return total
