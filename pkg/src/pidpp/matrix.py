"""Dense square matrices over the rationals and the exact kernels on them.

Matrices are immutable after construction; indices are 0-based throughout
the library (file formats are 1-based, see :func:`parse_matrix_text`).
Determinants and ranks run fraction-free (Bareiss) on an integer lift of
the rows, which keeps every intermediate value polynomially bounded in the
input size.  The empty principal minor is 1 by convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import permutations
from typing import Iterable, Sequence

from .errors import (
    CapExceededError,
    DimensionMismatchError,
    FormatError,
    IndexRangeError,
    NonSymmetricError,
    NotPositiveSemidefiniteError,
    RankExceededError,
    SingularMatrixError,
)
from .exact import (
    ExactScalar,
    ONE,
    ZERO,
    as_scalar,
    denominator,
    format_scalar,
    integer,
    isqrt_ceil,
    numerator,
    parse_scalar,
    scalar,
)


class SquareMatrix:
    """An n-by-n grid of exact rationals, immutable, hashable by content."""

    __slots__ = ("n", "rows", "_hash", "_symmetric")

    def __init__(self, rows: Sequence[Sequence]):
        rows = tuple(tuple(as_scalar(x) for x in row) for row in rows)
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise DimensionMismatchError("matrix rows must all have length n")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "_hash", None)
        object.__setattr__(self, "_symmetric", None)

    def __setattr__(self, name, value):
        raise AttributeError("SquareMatrix is immutable")

    # -- construction helpers ------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "SquareMatrix":
        return cls([[ONE if i == j else ZERO for j in range(n)] for i in range(n)])

    @classmethod
    def zero(cls, n: int) -> "SquareMatrix":
        return cls([[ZERO] * n for _ in range(n)])

    @classmethod
    def ones(cls, n: int) -> "SquareMatrix":
        return cls([[ONE] * n for _ in range(n)])

    @classmethod
    def diagonal(cls, entries: Sequence) -> "SquareMatrix":
        entries = [as_scalar(x) for x in entries]
        n = len(entries)
        return cls(
            [[entries[i] if i == j else ZERO for j in range(n)] for i in range(n)]
        )

    # -- basic protocol ------------------------------------------------------

    def __getitem__(self, idx) -> ExactScalar:
        i, j = idx
        return self.rows[i][j]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SquareMatrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = hash(self.rows)
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self) -> str:
        body = "; ".join(
            " ".join(format_scalar(x) for x in row) for row in self.rows
        )
        return f"SquareMatrix({self.n}: {body})"

    # -- structure -----------------------------------------------------------

    @property
    def is_symmetric(self) -> bool:
        cached = self._symmetric
        if cached is None:
            rows = self.rows
            cached = all(
                rows[i][j] == rows[j][i]
                for i in range(self.n)
                for j in range(i + 1, self.n)
            )
            object.__setattr__(self, "_symmetric", cached)
        return cached

    def submatrix(self, subset: Iterable[int]) -> "SquareMatrix":
        """Principal submatrix with retained indices in ascending order."""
        idx = sorted(set(subset))
        if idx and (idx[0] < 0 or idx[-1] >= self.n):
            raise IndexRangeError(f"subset {idx} out of range for order {self.n}")
        return SquareMatrix([[self.rows[i][j] for j in idx] for i in idx])

    def scale(self, factor) -> "SquareMatrix":
        c = as_scalar(factor)
        return SquareMatrix([[c * x for x in row] for row in self.rows])

    def add(self, other: "SquareMatrix") -> "SquareMatrix":
        if self.n != other.n:
            raise DimensionMismatchError("matrix orders differ")
        return SquareMatrix(
            [
                [self.rows[i][j] + other.rows[i][j] for j in range(self.n)]
                for i in range(self.n)
            ]
        )

    def hadamard(self, other: "SquareMatrix") -> "SquareMatrix":
        if self.n != other.n:
            raise DimensionMismatchError("matrix orders differ")
        return SquareMatrix(
            [
                [self.rows[i][j] * other.rows[i][j] for j in range(self.n)]
                for i in range(self.n)
            ]
        )

    def transpose(self) -> "SquareMatrix":
        return SquareMatrix(
            [[self.rows[j][i] for j in range(self.n)] for i in range(self.n)]
        )

    def max_abs_entry(self) -> ExactScalar:
        best = ZERO
        for row in self.rows:
            for x in row:
                a = -x if x < 0 else x
                if a > best:
                    best = a
        return best


@dataclass(frozen=True)
class LowRankFactorization:
    """Rectangular factors with ``left @ right.T`` equal to the source."""

    left: tuple  # n rows, r columns
    right: tuple  # n rows, r columns
    rank_bound: int

    def reconstruct(self) -> SquareMatrix:
        n = len(self.left)
        r = self.rank_bound
        return SquareMatrix(
            [
                [
                    sum(
                        (self.left[i][k] * self.right[j][k] for k in range(r)),
                        ZERO,
                    )
                    for j in range(n)
                ]
                for i in range(n)
            ]
        )


@dataclass(frozen=True)
class SparsityGraph:
    """Undirected graph on [n] recording off-diagonal nonzero positions."""

    n: int
    edges: frozenset  # frozenset of (i, j) pairs with i < j

    def neighbors(self, v: int) -> set:
        out = set()
        for i, j in self.edges:
            if i == v:
                out.add(j)
            elif j == v:
                out.add(i)
        return out

    def adjacency(self) -> list:
        adj = [set() for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj


# -- integer lifting ---------------------------------------------------------


def _lift_rows(rows):
    """Scale each row to integers; return (integer rows, row denominators)."""
    lifted = []
    denoms = []
    for row in rows:
        d = 1
        for x in row:
            dx = denominator(x)
            if dx != 1:
                g = _gcd(d, dx)
                d = d // g * dx
        denoms.append(d)
        lifted.append([integer(numerator(x) * (d // denominator(x))) for x in row])
    return lifted, denoms


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


# -- determinant, permanent, rank ---------------------------------------------


def det(matrix: SquareMatrix) -> ExactScalar:
    """Exact determinant via fraction-free (Bareiss) elimination."""
    n = matrix.n
    if n == 0:
        return ONE
    work, denoms = _lift_rows(matrix.rows)
    sign = 1
    prev = integer(1)
    for k in range(n - 1):
        if work[k][k] == 0:
            for r in range(k + 1, n):
                if work[r][k] != 0:
                    work[k], work[r] = work[r], work[k]
                    sign = -sign
                    break
            else:
                return ZERO
        pivot = work[k][k]
        for i in range(k + 1, n):
            row_i = work[i]
            row_k = work[k]
            factor = row_i[k]
            for j in range(k + 1, n):
                row_i[j] = (pivot * row_i[j] - factor * row_k[j]) // prev
            row_i[k] = integer(0)
        prev = pivot
    value = scalar(int(work[n - 1][n - 1]))
    if sign < 0:
        value = -value
    for d in denoms:
        if d != 1:
            value = value / d
    return value


def det_permutation_sum(matrix: SquareMatrix) -> ExactScalar:
    """Reference determinant: the signed sum over all permutations."""
    n = matrix.n
    rows = matrix.rows
    total = ZERO
    for perm in permutations(range(n)):
        term = ONE
        for i, j in enumerate(perm):
            term = term * rows[i][j]
            if term == 0:
                break
        if term == 0:
            continue
        inv = sum(
            1
            for a in range(n)
            for b in range(a + 1, n)
            if perm[a] > perm[b]
        )
        total = total - term if inv & 1 else total + term
    return total


def principal_minor(matrix: SquareMatrix, subset: Iterable[int]) -> ExactScalar:
    """det of the principal submatrix on ``subset`` (1 for the empty set)."""
    idx = sorted(set(subset))
    if not idx:
        return ONE
    if idx[0] < 0 or idx[-1] >= matrix.n:
        raise IndexRangeError(f"subset {idx} out of range for order {matrix.n}")
    return det(matrix.submatrix(idx))


DEFAULT_PERMANENT_CAP = 12


def permanent(matrix: SquareMatrix, cap: int = DEFAULT_PERMANENT_CAP) -> ExactScalar:
    """Exact permanent by Ryser's inclusion-exclusion formula."""
    n = matrix.n
    if n == 0:
        return ONE
    if n > cap:
        raise CapExceededError(f"permanent: order {n} exceeds cap {cap}")
    rows = matrix.rows
    total = ZERO
    # Gray-code walk over column subsets, keeping running row sums.
    sums = [ZERO] * n
    prev_mask = 0
    for g in range(1, 1 << n):
        mask = g ^ (g >> 1)
        changed = mask ^ prev_mask
        j = changed.bit_length() - 1
        if mask & changed:
            for i in range(n):
                sums[i] = sums[i] + rows[i][j]
        else:
            for i in range(n):
                sums[i] = sums[i] - rows[i][j]
        prev_mask = mask
        term = ONE
        for i in range(n):
            term = term * sums[i]
            if term == 0:
                break
        if term == 0:
            continue
        k = mask.bit_count()
        if (n - k) & 1:
            total = total - term
        else:
            total = total + term
    return total


def rank(matrix: SquareMatrix) -> int:
    """Exact rank over the rationals (fraction-free row echelon)."""
    n = matrix.n
    if n == 0:
        return 0
    work, _ = _lift_rows(matrix.rows)
    r = 0
    prev = integer(1)
    for col in range(n):
        pivot_row = None
        for i in range(r, n):
            if work[i][col] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        work[r], work[pivot_row] = work[pivot_row], work[r]
        pivot = work[r][col]
        for i in range(r + 1, n):
            factor = work[i][col]
            row_i = work[i]
            row_r = work[r]
            for j in range(col + 1, n):
                row_i[j] = (pivot * row_i[j] - factor * row_r[j]) // prev
            row_i[col] = integer(0)
        prev = pivot
        r += 1
        if r == n:
            break
    return r


# -- symmetric factorizations --------------------------------------------------


def ldl_factor(matrix: SquareMatrix):
    """Pivoted LDL^T of a symmetric PSD matrix.

    Returns ``(perm, lower, diag)`` with ``P M P^T = L D L^T`` exactly,
    where ``perm`` maps new positions to original indices
    (``(P M P^T)[i][j] == M[perm[i]][perm[j]]``), ``lower`` is unit lower
    triangular, and ``diag`` holds the nonnegative pivots with every
    nonzero pivot preceding the zeros.  Raises on non-symmetric input and
    on any certificate of indefiniteness.
    """
    if not matrix.is_symmetric:
        raise NonSymmetricError("LDL requires a symmetric matrix")
    n = matrix.n
    work = [list(row) for row in matrix.rows]
    perm = list(range(n))
    lower = [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]
    diag = [ZERO] * n

    def swap(a: int, b: int) -> None:
        if a == b:
            return
        perm[a], perm[b] = perm[b], perm[a]
        work[a], work[b] = work[b], work[a]
        for row in work:
            row[a], row[b] = row[b], row[a]
        for row in lower:
            row[a], row[b] = row[b], row[a]
        lower[a], lower[b] = lower[b], lower[a]

    for k in range(n):
        pivot_at = None
        for j in range(k, n):
            if work[j][j] != 0:
                pivot_at = j
                break
        if pivot_at is None:
            # Zero diagonal block: PSD forces the whole block to vanish.
            for i in range(k, n):
                for j in range(k, n):
                    if work[i][j] != 0:
                        raise NotPositiveSemidefiniteError(
                            "zero diagonal with nonzero residual entry"
                        )
            break
        swap(k, pivot_at)
        pivot = work[k][k]
        if pivot < 0:
            raise NotPositiveSemidefiniteError(f"negative pivot {pivot}")
        diag[k] = pivot
        for i in range(k + 1, n):
            factor = work[i][k] / pivot
            lower[i][k] = factor
            if factor == 0:
                continue
            for j in range(k + 1, i + 1):
                work[i][j] = work[i][j] - factor * work[k][j]
                work[j][i] = work[i][j]
        # The eliminated column is conceptually zero from here on.
        for i in range(k + 1, n):
            work[i][k] = ZERO
            work[k][i] = ZERO

    return tuple(perm), tuple(tuple(r) for r in lower), tuple(diag)


def low_rank_factor(matrix: SquareMatrix, rank_bound: int) -> LowRankFactorization:
    """Width-``rank_bound`` factorization ``M = U V^T`` of a PSD matrix.

    The factors come from the pivoted LDL: U takes the pivot-scaled columns
    of L, V the raw ones, both mapped back through the permutation.
    """
    perm, lower, diag = ldl_factor(matrix)
    n = matrix.n
    actual = sum(1 for d in diag if d != 0)
    if actual > rank_bound:
        raise RankExceededError(
            f"matrix rank {actual} exceeds requested bound {rank_bound}"
        )
    left = [[ZERO] * rank_bound for _ in range(n)]
    right = [[ZERO] * rank_bound for _ in range(n)]
    for new_i in range(n):
        orig = perm[new_i]
        for j in range(actual):
            right[orig][j] = lower[new_i][j]
            left[orig][j] = lower[new_i][j] * diag[j]
    return LowRankFactorization(
        left=tuple(tuple(r) for r in left),
        right=tuple(tuple(r) for r in right),
        rank_bound=rank_bound,
    )


def is_positive_semidefinite(matrix: SquareMatrix) -> bool:
    """Lazy PSD check: attempt the pivoted LDL and report success."""
    try:
        ldl_factor(matrix)
    except (NonSymmetricError, NotPositiveSemidefiniteError):
        return False
    return True


# -- bounds and structural helpers ---------------------------------------------


def hadamard_upper_bound(matrices: Sequence[SquareMatrix]):
    """Certified range ``(1, bound)`` enclosing the product normalizer.

    Hadamard's inequality bounds every principal minor of size s by
    ``(M sqrt(s))^s`` with M the largest absolute entry; the bound below is
    ``2^n`` times the m-th power of an exact rational upper bound of the
    worst size, so it dominates the sum over all subsets for P0 inputs.
    The lower certificate is 1 (the empty subset always contributes 1).
    """
    if not matrices:
        raise DimensionMismatchError("need at least one matrix")
    n = matrices[0].n
    if any(m.n != n for m in matrices):
        raise DimensionMismatchError("matrix orders differ")
    m = len(matrices)
    biggest = ZERO
    for mat in matrices:
        a = mat.max_abs_entry()
        if a > biggest:
            biggest = a
    per_minor = ONE  # covers s = 0
    power = ONE
    for s in range(1, n + 1):
        power = power * biggest
        candidate = power * isqrt_ceil(s**s)
        if candidate > per_minor:
            per_minor = candidate
    bound = scalar(2**n) * per_minor**m
    return ONE, bound


def block_diag_power(matrices: Sequence[SquareMatrix], t: int) -> list:
    """Replace each matrix by a block-diagonal stack of ``t`` copies."""
    if t < 1:
        raise IndexRangeError("t must be at least 1")
    out = []
    for mat in matrices:
        n = mat.n
        big = [[ZERO] * (n * t) for _ in range(n * t)]
        for b in range(t):
            off = b * n
            for i in range(n):
                row = mat.rows[i]
                for j in range(n):
                    big[off + i][off + j] = row[j]
        out.append(SquareMatrix(big))
    return out


def sparsity_union(matrices: Sequence[SquareMatrix]) -> SparsityGraph:
    """Graph on [n] with an edge wherever any matrix is off-diagonally nonzero."""
    if not matrices:
        raise DimensionMismatchError("need at least one matrix")
    n = matrices[0].n
    if any(m.n != n for m in matrices):
        raise DimensionMismatchError("matrix orders differ")
    edges = set()
    for mat in matrices:
        rows = mat.rows
        for i in range(n):
            for j in range(i + 1, n):
                if rows[i][j] != 0 or rows[j][i] != 0:
                    edges.add((i, j))
    return SparsityGraph(n=n, edges=frozenset(edges))


def inverse(matrix: SquareMatrix) -> SquareMatrix:
    """Exact inverse by Gauss-Jordan elimination (raises if singular)."""
    n = matrix.n
    work = [list(row) + [ONE if i == j else ZERO for j in range(n)]
            for i, row in enumerate(matrix.rows)]
    for col in range(n):
        pivot_row = None
        for i in range(col, n):
            if work[i][col] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            raise SingularMatrixError("matrix is singular")
        work[col], work[pivot_row] = work[pivot_row], work[col]
        pivot = work[col][col]
        work[col] = [x / pivot for x in work[col]]
        for i in range(n):
            if i == col:
                continue
            factor = work[i][col]
            if factor == 0:
                continue
            row_i = work[i]
            row_c = work[col]
            for j in range(2 * n):
                row_i[j] = row_i[j] - factor * row_c[j]
    return SquareMatrix([row[n:] for row in work])


# -- text and JSON formats ------------------------------------------------------


def parse_matrix_text(text: str) -> SquareMatrix:
    """Parse the shared matrix text format.

    First non-comment line is the order n, followed by n whitespace-
    separated rows; entries are integer or ``p/q`` literals and ``#``
    starts a comment line.
    """
    lines = [
        line.strip()
        for line in text.splitlines()
        if line.strip() and not line.strip().startswith("#")
    ]
    if not lines:
        raise FormatError("empty matrix text")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise FormatError(f"bad order line {lines[0]!r}") from exc
    if len(lines) != n + 1:
        raise FormatError(f"expected {n} rows, found {len(lines) - 1}")
    rows = []
    for line in lines[1:]:
        tokens = line.split()
        if len(tokens) != n:
            raise FormatError(f"row {line!r} does not have {n} entries")
        try:
            rows.append([parse_scalar(tok) for tok in tokens])
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"bad entry in row {line!r}") from exc
    return SquareMatrix(rows)


def format_matrix_text(matrix: SquareMatrix) -> str:
    lines = [str(matrix.n)]
    for row in matrix.rows:
        lines.append(" ".join(format_scalar(x) for x in row))
    return "\n".join(lines) + "\n"


def matrix_to_json_dict(matrix: SquareMatrix) -> dict:
    return {
        "n": matrix.n,
        "entries": [[format_scalar(x) for x in row] for row in matrix.rows],
    }


def matrix_from_json_dict(payload: dict) -> SquareMatrix:
    try:
        n = int(payload["n"])
        entries = payload["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError("matrix JSON needs integer 'n' and 'entries'") from exc
    if len(entries) != n or any(len(row) != n for row in entries):
        raise FormatError("matrix JSON entries are not an n-by-n grid")
    try:
        rows = [[parse_scalar(str(x)) for x in row] for row in entries]
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError("bad entry in matrix JSON") from exc
    return SquareMatrix(rows)


def load_matrix(path: str) -> SquareMatrix:
    """Load a matrix from a text-format or JSON-format file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return matrix_from_json_dict(json.loads(text))
    return parse_matrix_text(text)
