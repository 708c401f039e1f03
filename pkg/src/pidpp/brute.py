"""Exponential-time reference implementations.

Everything here enumerates subsets outright and serves as ground truth for
the parameterized algorithms.  The routines are deliberately simple; the
only concessions are a subset cap (default 22, ~4M subsets) and grouping
of repeated matrices so exponentiated processes pay one determinant per
subset instead of m.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations
from typing import Sequence, Union

from .errors import (
    CapExceededError,
    DimensionMismatchError,
    IndexRangeError,
    NegativeMinorError,
)
from .exact import (
    ExactScalar,
    ONE,
    ZERO,
    as_scalar,
    denominator,
    iroot_floor,
    numerator,
    scalar,
)
from .graphs import BipartiteGraphSpec
from .matrix import SquareMatrix, det
from . import matrix as _matrix

DEFAULT_BRUTE_CAP = 22


@dataclass(frozen=True)
class MatrixTuple:
    """An ordered tuple of m same-order square matrices."""

    matrices: tuple

    def __post_init__(self):
        if not self.matrices:
            raise DimensionMismatchError("a matrix tuple needs at least one matrix")
        n = self.matrices[0].n
        if any(m.n != n for m in self.matrices):
            raise DimensionMismatchError("matrix orders differ within tuple")

    @classmethod
    def of(cls, matrices) -> "MatrixTuple":
        if isinstance(matrices, MatrixTuple):
            return matrices
        if isinstance(matrices, SquareMatrix):
            return cls(matrices=(matrices,))
        return cls(matrices=tuple(matrices))

    @property
    def n(self) -> int:
        return self.matrices[0].n

    @property
    def m(self) -> int:
        return len(self.matrices)


@dataclass(frozen=True)
class SubsetMass:
    """A subset together with its unnormalized product-of-minors mass."""

    subset: frozenset
    mass: ExactScalar


def _check_cap(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise CapExceededError(f"{what}: order {n} exceeds brute cap {cap}")


def _grouped(matrices: Sequence[SquareMatrix]):
    """Distinct matrices with multiplicities, preserving first-seen order."""
    groups = []
    index = {}
    for mat in matrices:
        key = id(mat)
        if key in index:
            groups[index[key]][1] += 1
            continue
        # Content-level dedup catches equal copies built separately.
        for pos, (other, _) in enumerate(groups):
            if other == mat:
                index[key] = pos
                groups[pos][1] += 1
                break
        else:
            index[key] = len(groups)
            groups.append([mat, 1])
    return [(mat, mult) for mat, mult in groups]


def _mass_of_subset(groups, subset) -> ExactScalar:
    mass = ONE
    for mat, mult in groups:
        d = _matrix.principal_minor(mat, subset)
        if d == 0:
            return ZERO
        mass = mass * d**mult
    return mass


def subset_masses(tuple_: MatrixTuple, cap: int = DEFAULT_BRUTE_CAP):
    """Yield every subset with its mass (the measure's unnormalized weights)."""
    T = MatrixTuple.of(tuple_)
    _check_cap(T.n, cap, "subset_masses")
    groups = _grouped(T.matrices)
    items = list(range(T.n))
    for size in range(T.n + 1):
        for combo in combinations(items, size):
            yield SubsetMass(
                subset=frozenset(combo), mass=_mass_of_subset(groups, combo)
            )


def z_m_brute(
    tuple_: Union[MatrixTuple, Sequence[SquareMatrix]],
    cap: int = DEFAULT_BRUTE_CAP,
    workers: int = 1,
) -> ExactScalar:
    """Normalizer of the product process: sum of products of principal minors."""
    T = MatrixTuple.of(tuple_)
    _check_cap(T.n, cap, "z_m_brute")
    groups = _grouped(T.matrices)
    if workers > 1:
        return _z_m_parallel(T, groups, workers)
    total = ZERO
    n = T.n
    for mask in range(1 << n):
        subset = [i for i in range(n) if mask >> i & 1]
        total = total + _mass_of_subset(groups, subset)
    return total


def _z_m_chunk(args):
    rows_list, mults, n, lo, hi = args
    groups = [(SquareMatrix(rows), mult) for rows, mult in zip(rows_list, mults)]
    total = ZERO
    for mask in range(lo, hi):
        subset = [i for i in range(n) if mask >> i & 1]
        total = total + _mass_of_subset(groups, subset)
    return total


def _z_m_parallel(T: MatrixTuple, groups, workers: int) -> ExactScalar:
    from concurrent.futures import ProcessPoolExecutor

    n = T.n
    size = 1 << n
    chunk = max(1, size // (workers * 4))
    bounds = list(range(0, size, chunk)) + [size]
    rows_list = [mat.rows for mat, _ in groups]
    mults = [mult for _, mult in groups]
    jobs = [
        (rows_list, mults, n, bounds[i], bounds[i + 1])
        for i in range(len(bounds) - 1)
    ]
    total = ZERO
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # Ordered accumulation keeps the result bit-identical for any worker count.
        for part in pool.map(_z_m_chunk, jobs):
            total = total + part
    return total


def z_mk_brute(
    tuple_: Union[MatrixTuple, Sequence[SquareMatrix]],
    k: int,
    cap: int = DEFAULT_BRUTE_CAP,
) -> ExactScalar:
    """Fixed-size normalizer: the mass restricted to subsets of size k."""
    T = MatrixTuple.of(tuple_)
    n = T.n
    if not 0 <= k <= n:
        raise IndexRangeError(f"k={k} outside [0, {n}]")
    _check_cap(n, cap, "z_mk_brute")
    groups = _grouped(T.matrices)
    total = ZERO
    for combo in combinations(range(n), k):
        total = total + _mass_of_subset(groups, combo)
    return total


@dataclass(frozen=True)
class ExactInterval:
    """A rational interval [lo, hi] certified to contain a real value."""

    lo: ExactScalar
    hi: ExactScalar

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def width(self) -> ExactScalar:
        return self.hi - self.lo


def _rational_root_interval(q: ExactScalar, root: int, scale_bits: int):
    """Bracket q**(1/root) for nonnegative rational q; exact when possible."""
    if q == 0:
        return ZERO, ZERO, True
    p_, q_ = numerator(q), denominator(q)
    rn, exact_n = iroot_floor(p_, root)
    rd, exact_d = iroot_floor(q_, root)
    if exact_n and exact_d:
        v = scalar(int(rn), int(rd))
        return v, v, True
    T = 1 << scale_bits
    shifted = p_ * T**root
    lo_int, _ = iroot_floor(shifted // q_, root)
    hi_int, _ = iroot_floor(shifted // q_ + 1, root)
    return scalar(int(lo_int), T), scalar(int(hi_int) + 1, T), False


def edpp_brute(
    matrix: SquareMatrix,
    p: Union[int, Fraction],
    cap: int = DEFAULT_BRUTE_CAP,
    rel_eps: Fraction = Fraction(1, 2**64),
):
    """Exponentiated normalizer: sum of p-th powers of principal minors.

    Integer exponents give an exact scalar.  Fractional exponents give an
    :class:`ExactInterval` of relative width at most ``rel_eps``; a negative
    minor makes the fractional power undefined and raises.
    """
    _check_cap(matrix.n, cap, "edpp_brute")
    p = Fraction(p)
    if p.denominator == 1:
        power = int(p)
        total = ZERO
        for mask in range(1 << matrix.n):
            subset = [i for i in range(matrix.n) if mask >> i & 1]
            d = _matrix.principal_minor(matrix, subset)
            total = total + d**power
        return total
    a, b = p.numerator, p.denominator
    minors = []
    for mask in range(1 << matrix.n):
        subset = [i for i in range(matrix.n) if mask >> i & 1]
        d = _matrix.principal_minor(matrix, subset)
        if d < 0:
            raise NegativeMinorError(
                f"fractional exponent on negative minor {d} at subset {subset}"
            )
        minors.append(d)
    scale_bits = 80
    while True:
        lo_total, hi_total = ZERO, ZERO
        for d in minors:
            lo, hi, _ = _rational_root_interval(d**a, b, scale_bits)
            lo_total = lo_total + lo
            hi_total = hi_total + hi
        limit = as_scalar(rel_eps.numerator) / rel_eps.denominator
        reference = lo_total if lo_total > 1 else ONE
        if hi_total - lo_total <= limit * reference:
            return ExactInterval(lo=lo_total, hi=hi_total)
        scale_bits *= 2


def map_brute(matrix: SquareMatrix, cap: int = DEFAULT_BRUTE_CAP):
    """Subset with the maximum principal minor.

    Ties go to the smallest subset: fewest elements first, then
    lexicographically smallest index tuple.
    """
    _check_cap(matrix.n, cap, "map_brute")
    n = matrix.n
    best_subset = ()
    best_value = ONE
    for size in range(1, n + 1):
        for combo in combinations(range(n), size):
            value = _matrix.principal_minor(matrix, combo)
            if value > best_value:
                best_value = value
                best_subset = combo
    return frozenset(best_subset), best_value


def mixed_discriminant_brute(
    matrices: Sequence[SquareMatrix], cap: int = 8
) -> ExactScalar:
    """Mixed discriminant of m order-m matrices.

    Evaluated as the sum over permutations of determinants of column-mixed
    matrices: column j is taken from the sigma(j)-th input.
    """
    m = len(matrices)
    if m == 0:
        raise DimensionMismatchError("need at least one matrix")
    if any(mat.n != m for mat in matrices):
        raise DimensionMismatchError("mixed discriminant needs m matrices of order m")
    if m > cap:
        raise CapExceededError(f"mixed discriminant: m={m} exceeds cap {cap}")
    total = ZERO
    for sigma in permutations(range(m)):
        mixed = [
            [matrices[sigma[j]].rows[i][j] for j in range(m)] for i in range(m)
        ]
        total = total + det(SquareMatrix(mixed))
    return total


def _matching_size_counts(graph: BipartiteGraphSpec, cap: int = 22):
    edges = graph.edges
    if len(edges) > cap:
        raise CapExceededError(f"matchings: |E|={len(edges)} exceeds cap {cap}")
    left_bit = [1 << x for x, _ in edges]
    right_bit = [1 << y for _, y in edges]
    counts = [0] * (len(edges) + 1)

    def walk(idx: int, used_left: int, used_right: int, size: int) -> None:
        if idx == len(edges):
            counts[size] += 1
            return
        walk(idx + 1, used_left, used_right, size)
        if not (used_left & left_bit[idx]) and not (used_right & right_bit[idx]):
            walk(idx + 1, used_left | left_bit[idx], used_right | right_bit[idx], size + 1)

    walk(0, 0, 0, 0)
    return counts


def count_matchings_brute(graph: BipartiteGraphSpec, cap: int = 22) -> int:
    """Number of matchings of any size, the empty matching included."""
    return sum(_matching_size_counts(graph, cap))


def count_k_matchings_brute(graph: BipartiteGraphSpec, k: int, cap: int = 22) -> int:
    """Number of matchings using exactly k edges."""
    counts = _matching_size_counts(graph, cap)
    if not 0 <= k <= len(graph.edges):
        return 0
    return counts[k]
