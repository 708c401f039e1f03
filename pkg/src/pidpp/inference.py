"""Inference on top of a normalizer oracle.

Conditioning, exact sampling, fixed-size normalizers, fractional-exponent
approximation, and randomized MAP inference all reduce to polynomially
many normalizer evaluations on structurally dominated tuples (masked or
scaled copies of the inputs), so one oracle bound to the base tuple serves
every derived call.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .brute import DEFAULT_BRUTE_CAP, MatrixTuple, z_m_brute
from .errors import (
    IndexRangeError,
    InterpolationError,
    ProbabilityRangeError,
    StrategySelectionError,
    ZeroMassError,
)
from .exact import ExactScalar, ONE, ZERO, as_scalar, iroot_floor, scalar
from .matrix import (
    SquareMatrix,
    is_positive_semidefinite,
    principal_minor,
    rank,
    sparsity_union,
)
from .rank_fpt import DEFAULT_RANK_BUDGET, zm_rank
from .treedecomp import decompose, make_nice
from .treewidth_fpt import DEFAULT_TW_BUDGET, zm_treewidth

DEFAULT_SEED = 271828
DIRECT_CONDITIONAL_CAP = 16


# -- exact polynomial interpolation -------------------------------------------------


@dataclass(frozen=True)
class UnivariatePolynomial:
    """Coefficient list, lowest degree first; length fixes a degree bound."""

    coeffs: tuple

    @property
    def degree_bound(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, x) -> ExactScalar:
        x = as_scalar(x)
        acc = ZERO
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    __call__ = evaluate


def interpolate(points: Sequence, degree_bound: int) -> UnivariatePolynomial:
    """The unique polynomial of degree <= bound through the first bound+1 points.

    Newton's divided differences over exact rationals; extra points beyond
    bound+1 are ignored (the caller vouches for their consistency).
    """
    if degree_bound < 0:
        raise InterpolationError("degree bound must be nonnegative")
    needed = degree_bound + 1
    if len(points) < needed:
        raise InterpolationError(
            f"need {needed} points for degree {degree_bound}, got {len(points)}"
        )
    xs = [as_scalar(x) for x, _ in points[:needed]]
    ys = [as_scalar(y) for _, y in points[:needed]]
    if len(set(xs)) != len(xs):
        raise InterpolationError("duplicate abscissae")
    table = list(ys)
    newton = [table[0]]
    for level in range(1, needed):
        for i in range(needed - level):
            table[i] = (table[i + 1] - table[i]) / (xs[i + level] - xs[i])
        newton.append(table[0])
    coeffs = [ZERO] * needed
    basis = [ONE]
    for i, c in enumerate(newton):
        for j, b in enumerate(basis):
            coeffs[j] = coeffs[j] + c * b
        if i + 1 < needed:
            # basis *= (x - xs[i])
            nxt = [ZERO] * (len(basis) + 1)
            for j, b in enumerate(basis):
                nxt[j] = nxt[j] - xs[i] * b
                nxt[j + 1] = nxt[j + 1] + b
            basis = nxt
    return UnivariatePolynomial(coeffs=tuple(coeffs))


# -- normalizer oracle ----------------------------------------------------------------


@dataclass
class BoundOracle:
    """An oracle resolved against a base tuple; reusable for dominated tuples."""

    base: MatrixTuple
    strategy: str
    brute_cap: int
    rank_budget: int
    tw_budget: int
    workers: int
    nice: Optional[object] = None
    width: Optional[int] = None
    max_rank: Optional[int] = None
    calls: int = 0

    def value(self, tuple_) -> ExactScalar:
        T = MatrixTuple.of(tuple_)
        self.calls += 1
        if self.strategy == "brute":
            return z_m_brute(T, cap=self.brute_cap, workers=self.workers)
        if self.strategy == "rank":
            return zm_rank(T, budget=self.rank_budget)
        if self.strategy == "treewidth":
            from .errors import UncoveredEntryError

            try:
                return zm_treewidth(T, self.nice, budget=self.tw_budget)
            except UncoveredEntryError:
                # The tuple escaped the base sparsity pattern: rebuild.
                nice = make_nice(decompose(sparsity_union(T.matrices)))
                return zm_treewidth(T, nice, budget=self.tw_budget)
        raise StrategySelectionError(f"unknown strategy {self.strategy!r}")


@dataclass
class NormalizerOracle:
    """Strategy selector for exact normalizer computation.

    ``auto`` picks: brute force when the order is at most ``auto_brute_n``;
    the rank algorithm when all matrices are PSD with rank at most
    ``rank_limit``; the treewidth algorithm when the heuristic
    decomposition width is at most ``width_limit``; otherwise it refuses
    with guidance.
    """

    strategy: str = "auto"
    brute_cap: int = DEFAULT_BRUTE_CAP
    auto_brute_n: int = 16
    rank_limit: int = 6
    width_limit: int = 8
    rank_budget: int = DEFAULT_RANK_BUDGET
    tw_budget: int = DEFAULT_TW_BUDGET
    workers: int = 1

    def bind(self, tuple_) -> BoundOracle:
        T = MatrixTuple.of(tuple_)
        strategy = self.strategy
        width = None
        max_rank = None
        nice = None
        if strategy == "auto":
            if T.n <= self.auto_brute_n:
                strategy = "brute"
            else:
                ranks = [rank(mat) for mat in T.matrices]
                max_rank = max(ranks, default=0)
                if max_rank <= self.rank_limit and all(
                    is_positive_semidefinite(mat) for mat in T.matrices
                ):
                    strategy = "rank"
                else:
                    decomposition = decompose(sparsity_union(T.matrices))
                    if decomposition.width <= self.width_limit:
                        strategy = "treewidth"
                        nice = make_nice(decomposition)
                        width = nice.width
                    else:
                        raise StrategySelectionError(
                            f"no applicable strategy: n={T.n} > {self.auto_brute_n}, "
                            f"max rank {max_rank} > {self.rank_limit}, heuristic "
                            f"width {decomposition.width} > {self.width_limit}; "
                            "raise the caps or choose a strategy explicitly"
                        )
        if strategy == "treewidth" and nice is None:
            decomposition = decompose(sparsity_union(T.matrices))
            nice = make_nice(decomposition)
            width = nice.width
        if strategy == "rank" and max_rank is None:
            max_rank = max((rank(mat) for mat in T.matrices), default=0)
        if strategy not in ("brute", "rank", "treewidth"):
            raise StrategySelectionError(f"unknown strategy {strategy!r}")
        return BoundOracle(
            base=T,
            strategy=strategy,
            brute_cap=self.brute_cap,
            rank_budget=self.rank_budget,
            tw_budget=self.tw_budget,
            workers=self.workers,
            nice=nice,
            width=width,
            max_rank=max_rank,
        )


def _resolve(oracle, tuple_) -> BoundOracle:
    if oracle is None:
        oracle = NormalizerOracle()
    if isinstance(oracle, BoundOracle):
        return oracle
    return oracle.bind(tuple_)


# -- conditioning ------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionState:
    """Disjoint committed-in / committed-out subsets of the ground set."""

    committed_in: frozenset
    committed_out: frozenset

    def __post_init__(self):
        if self.committed_in & self.committed_out:
            raise IndexRangeError("committed-in and committed-out sets overlap")


def mask_matrix(n: int, committed_in, committed_out, x) -> SquareMatrix:
    """The conditioning mask: free 1, committed-in rows/cols x (x^2 inside),
    committed-out rows/cols 0."""
    x = as_scalar(x)
    xx = x * x
    inset = set(committed_in)
    outset = set(committed_out)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            if i in outset or j in outset:
                row.append(ZERO)
            elif i in inset and j in inset:
                row.append(xx)
            elif i in inset or j in inset:
                row.append(x)
            else:
                row.append(ONE)
        rows.append(row)
    return SquareMatrix(rows)


def _interpolated_constrained_sum(
    T: MatrixTuple, committed_in, committed_out, bound: BoundOracle
) -> ExactScalar:
    """Mass of subsets containing committed_in and avoiding committed_out.

    Masks the first matrix, evaluates the normalizer at 2n+1 abscissae, and
    reads off the top surviving coefficient (degree twice the committed-in
    size).
    """
    n = T.n
    points = []
    for x in range(1, 2 * n + 2):
        mask = mask_matrix(n, committed_in, committed_out, x)
        masked = (T.matrices[0].hadamard(mask),) + T.matrices[1:]
        points.append((scalar(x), bound.value(MatrixTuple(matrices=masked))))
    poly = interpolate(points, 2 * n)
    return poly.coeffs[2 * len(set(committed_in))]


class SubsetMassTable:
    """All 2^n subset masses of a tuple, for direct conditioning at small n."""

    def __init__(self, tuple_, cap: int = DIRECT_CONDITIONAL_CAP):
        T = MatrixTuple.of(tuple_)
        if T.n > cap:
            raise IndexRangeError(
                f"direct conditioning capped at {cap} elements, got {T.n}"
            )
        self.n = T.n
        groups = []
        for mat in T.matrices:
            for pos, (other, _) in enumerate(groups):
                if other == mat:
                    groups[pos][1] += 1
                    break
            else:
                groups.append([mat, 1])
        masses = [ONE] * (1 << T.n)
        for mat, mult in groups:
            for mask in range(1 << T.n):
                if masses[mask] == 0:
                    continue
                subset = [i for i in range(T.n) if mask >> i & 1]
                d = principal_minor(mat, subset)
                masses[mask] = masses[mask] * d**mult if d != 0 else ZERO
        self.masses = masses

    def constrained_sum(self, committed_in, committed_out) -> ExactScalar:
        y_mask = 0
        for i in committed_in:
            y_mask |= 1 << i
        n_mask = 0
        for i in committed_out:
            n_mask |= 1 << i
        total = ZERO
        for mask, mass in enumerate(self.masses):
            if mask & y_mask == y_mask and not mask & n_mask and mass != 0:
                total = total + mass
        return total

    def total(self) -> ExactScalar:
        acc = ZERO
        for mass in self.masses:
            acc = acc + mass
        return acc


def conditional_probability(
    tuple_,
    state: ConditionState,
    element: int,
    oracle=None,
    method: str = "interpolation",
) -> ExactScalar:
    """Probability the sample contains ``element`` given the committed sets.

    The default route masks the first matrix and interpolates the
    normalizer polynomial; ``method="direct"`` sums precomputed subset
    masses instead (small orders only).  Both are exact and agree.
    """
    T = MatrixTuple.of(tuple_)
    y, nset = state.committed_in, state.committed_out
    if element in y or element in nset:
        raise IndexRangeError(f"element {element} already committed")
    if not 0 <= element < T.n:
        raise IndexRangeError(f"element {element} outside ground set")
    if method == "direct":
        table = SubsetMassTable(T)
        num = table.constrained_sum(y | {element}, nset)
        den = table.constrained_sum(y, nset)
    elif method == "interpolation":
        bound = _resolve(oracle, T)
        num = _interpolated_constrained_sum(T, y | {element}, nset, bound)
        den = _interpolated_constrained_sum(T, y, nset, bound)
    else:
        raise IndexRangeError(f"unknown conditioning method {method!r}")
    if den == 0:
        raise ZeroMassError(
            f"conditioning event (in={sorted(y)}, out={sorted(nset)}) has zero mass"
        )
    p = num / den
    if p < 0 or p > 1:
        raise ProbabilityRangeError(
            f"conditional probability {p} outside [0, 1]; input is not P0"
        )
    return p


# -- sampling ------------------------------------------------------------------------------


class Sampler:
    """Sequential exact sampler with memoized conditional probabilities.

    Elements are decided in ascending order; each inclusion probability is
    an exact rational, and the Bernoulli draw pulls a uniform integer below
    the denominator from the per-draw seeded generator, so a draw is a
    deterministic function of the seed alone.  The memo is shared across
    draws (the probabilities are pure functions of the committed sets).
    """

    def __init__(self, tuple_, oracle=None, method: str = "auto"):
        self.T = MatrixTuple.of(tuple_)
        self.bound = _resolve(oracle, self.T)
        if method == "auto":
            method = (
                "direct"
                if self.bound.strategy == "brute" and self.T.n <= DIRECT_CONDITIONAL_CAP
                else "interpolation"
            )
        self.method = method
        self._table = SubsetMassTable(self.T) if method == "direct" else None
        self._memo: dict = {}

    def include_probability(self, committed_in, committed_out, element) -> ExactScalar:
        y_mask = 0
        for i in committed_in:
            y_mask |= 1 << i
        n_mask = 0
        for i in committed_out:
            n_mask |= 1 << i
        key = (y_mask, n_mask, element)
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        state = ConditionState(
            committed_in=frozenset(committed_in),
            committed_out=frozenset(committed_out),
        )
        if self.method == "direct":
            num = self._table.constrained_sum(
                set(committed_in) | {element}, committed_out
            )
            den = self._table.constrained_sum(committed_in, committed_out)
            if den == 0:
                raise ZeroMassError("conditioning event has zero mass")
            p = num / den
            if p < 0 or p > 1:
                raise ProbabilityRangeError(
                    f"conditional probability {p} outside [0, 1]; input is not P0"
                )
        else:
            p = conditional_probability(
                self.T, state, element, self.bound, method="interpolation"
            )
        self._memo[key] = p
        return p

    def draw(self, seed: int) -> frozenset:
        rng = random.Random(seed)
        chosen: set = set()
        rejected: set = set()
        for element in range(self.T.n):
            p = self.include_probability(chosen, rejected, element)
            num, den = p.numerator, p.denominator
            if rng.randrange(int(den)) < int(num):
                chosen.add(element)
            else:
                rejected.add(element)
        return frozenset(chosen)

    def subset_probability(self, subset) -> ExactScalar:
        """Exact probability of drawing ``subset``, by telescoping."""
        target = set(subset)
        chosen: set = set()
        rejected: set = set()
        prob = ONE
        for element in range(self.T.n):
            p = self.include_probability(chosen, rejected, element)
            if element in target:
                prob = prob * p
                chosen.add(element)
            else:
                prob = prob * (ONE - p)
                rejected.add(element)
            if prob == 0:
                return ZERO
        return prob


def sample(tuple_, oracle=None, seed: int = DEFAULT_SEED, method: str = "auto") -> frozenset:
    """One exact draw from the product process (ascending-element chain)."""
    return Sampler(tuple_, oracle, method=method).draw(seed)


# -- fixed-size normalizers -------------------------------------------------------------------


def z_mk_all(tuple_, oracle=None) -> list:
    """All fixed-size normalizers at once.

    Scaling the first matrix by x turns the normalizer into a degree-n
    polynomial whose k-th coefficient is the size-k normalizer; n+1 oracle
    calls at x = 1..n+1 recover every coefficient exactly.
    """
    T = MatrixTuple.of(tuple_)
    bound = _resolve(oracle, T)
    n = T.n
    points = []
    for x in range(1, n + 2):
        scaled = (T.matrices[0].scale(x),) + T.matrices[1:]
        points.append((scalar(x), bound.value(MatrixTuple(matrices=scaled))))
    poly = interpolate(points, n)
    return list(poly.coeffs)


# -- fractional-exponent approximation ----------------------------------------------------------


@dataclass(frozen=True)
class EdppEstimate:
    """A certified bracket for an exponentiated normalizer.

    For exact (integer-exponent) results ``lo == hi``.  Otherwise the
    interval is guaranteed to sit inside
    ``[true value, 2**(n/(2p-1)) * true value]``.
    """

    lo: ExactScalar
    hi: ExactScalar
    exponent: Fraction
    branch: str
    exact: bool
    guarantee_log2: Fraction  # log2 of the proven approximation factor


def _root_upper_bound(value: ExactScalar, root: int, rel_slack: Fraction) -> ExactScalar:
    """Rational r with value**(1/root) <= r <= value**(1/root) * (1 + slack).

    Assumes value >= 1.
    """
    if root == 1:
        return value
    k = 2 + max(0, rel_slack.denominator.bit_length() - rel_slack.numerator.bit_length() + 1)
    T = 1 << k
    p_, q_ = value.numerator, value.denominator
    shifted = int(p_) * T**root
    base_int, _ = iroot_floor(shifted // int(q_) + 1, root)
    return scalar(int(base_int) + 1, T)


def edpp_fractional(matrix: SquareMatrix, p, oracle=None) -> EdppEstimate:
    """Certified approximation of the exponentiated normalizer, exponent > 1.

    Integer exponents route to the exact oracle (that many copies of the
    matrix); fractional exponents interpolate between the floor and
    ceiling integer normalizers, choosing the branch with the better
    proven factor, which overall stays within ``2**(n/(2p-1))``.
    """
    p = Fraction(p)
    if p <= 1:
        raise IndexRangeError(f"exponent must exceed 1, got {p}")
    n = matrix.n
    guarantee = Fraction(n) / (2 * p - 1)
    if p.denominator == 1:
        copies = MatrixTuple(matrices=(matrix,) * int(p))
        value = _resolve(oracle, copies).value(copies)
        return EdppEstimate(
            lo=value, hi=value, exponent=p, branch="integer", exact=True,
            guarantee_log2=Fraction(0),
        )
    floor_p = p.numerator // p.denominator
    ceil_p = floor_p + 1
    lam = Fraction(ceil_p) - p
    lam_star = Fraction(floor_p + 1, 2 * floor_p + 1)
    floor_tuple = MatrixTuple(matrices=(matrix,) * floor_p)
    bound = _resolve(oracle, floor_tuple)
    z_floor = bound.value(floor_tuple)
    z_ceil = bound.value(MatrixTuple(matrices=(matrix,) * ceil_p))
    if z_floor < 1 or z_ceil < 1:
        raise ProbabilityRangeError(
            "integer normalizer below 1; input is not P0"
        )
    alpha_log2 = (Fraction(1, 1) / (2 * p - 1) - Fraction(1, 2 * floor_p + 1)) * n
    # 2**t - 1 >= (2/3) t for t >= 0, so this slack stays below alpha.
    slack = min(Fraction(2, 3) * alpha_log2, Fraction(1)) if alpha_log2 > 0 else Fraction(0)
    if slack == 0:
        slack = Fraction(1, 2**20)
    if lam > lam_star:
        exponent = p / floor_p  # estimate (Z^floor)**(p/floor)
        radicand = z_floor ** exponent.numerator
        value = _root_upper_bound(radicand, exponent.denominator, slack)
        branch = "floor"
    else:
        exponent = p / ceil_p
        shift = (1 - exponent) * n  # power-of-two prefactor folded into the root
        common = math.lcm(exponent.denominator, shift.denominator)
        radicand = (
            scalar(2) ** int(shift * common)
        ) * z_ceil ** int(exponent * common)
        value = _root_upper_bound(radicand, common, slack)
        branch = "ceil"
    return EdppEstimate(
        lo=value, hi=value, exponent=p, branch=branch, exact=False,
        guarantee_log2=guarantee,
    )


# -- approximate MAP inference -------------------------------------------------------------------


@dataclass(frozen=True)
class MapCertificate:
    """What the randomized MAP draw promises and how it was produced."""

    order: int
    exponent: int
    trials: int
    factor_log2: float  # log2 of the claimed approximation factor, sqrt(n)
    failure_log2: float  # log2 of the per-trial failure probability bound, -n


def map_inference(
    matrix: SquareMatrix, oracle=None, seed: int = DEFAULT_SEED, trials: int = 1
):
    """Randomized approximate MAP: best of ``trials`` draws from a sharpened
    process.

    Each draw samples the exponentiated process with exponent
    ``ceil(2 sqrt(n))`` (that many copies of the matrix), which concentrates
    mass near the maximizer; a single draw already achieves a
    ``2**sqrt(n)`` factor with failure probability at most ``2**-n``.
    """
    if trials < 1:
        raise IndexRangeError("trials must be at least 1")
    n = matrix.n
    if n == 0:
        return frozenset(), ONE, MapCertificate(0, 0, trials, 0.0, 0.0)
    p = math.isqrt(4 * n)
    if p * p < 4 * n:
        p += 1
    copies = MatrixTuple(matrices=(matrix,) * p)
    sampler = Sampler(copies, oracle)
    rng = random.Random(seed)
    best_subset: Optional[frozenset] = None
    best_value = None
    for _ in range(trials):
        draw_seed = rng.randrange(1 << 62)
        subset = sampler.draw(draw_seed)
        value = principal_minor(matrix, subset)
        if best_value is None or value > best_value:
            best_subset, best_value = subset, value
    certificate = MapCertificate(
        order=n,
        exponent=p,
        trials=trials,
        factor_log2=math.sqrt(n),
        failure_log2=-float(n),
    )
    return best_subset, best_value, certificate
