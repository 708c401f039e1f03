"""Treewidth-parameterized exact normalizer.

The normalizer of a product process is a signed sum over per-matrix
bijections between equal-size subsets.  On a nice tree decomposition the
bijections crossing a bag are grouped into *configurations*
``(O1, O2, F1, F2, tau, nu)``: the bag elements still open on each side,
the subsets of those already matched into the settled region, the fixed
partial bijection inside the bag, and the inversion parity of the whole
bijection under the node's ordering.  Tables keyed by m-tuples of
configurations are pushed bottom-up through leaf / introduce / forget /
join nodes; the root retains only all-empty configurations and their
parities, whose signed sum is the normalizer.

Tables are sparse: zero entries are never stored, and every update pushes
existing entries forward instead of pulling over the full configuration
space.  The subset-size index is tracked exactly on request; by default it
collapses to its parity, which is all the sign bookkeeping consumes, and
the root total is unchanged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations, permutations
from math import comb, factorial
from typing import Iterator, NamedTuple, Optional, Sequence

from .brute import MatrixTuple
from .errors import (
    BudgetExceededError,
    DimensionMismatchError,
    IndexRangeError,
    UncoveredEntryError,
)
from .exact import ExactScalar, ONE, ZERO
from .matrix import SquareMatrix, sparsity_union
from .treedecomp import NiceTreeDecomposition

logger = logging.getLogger(__name__)

DEFAULT_TW_BUDGET = 80_000_000


class Configuration(NamedTuple):
    """DP state of the bijections crossing one bag, for one matrix.

    ``o1``/``o2`` are the open bag elements on the domain/image side,
    ``f1``/``f2`` the subsets of those matched into the settled region,
    ``tau`` the fixed bijection ``o1 - f1 -> o2 - f2`` as sorted pairs, and
    ``nu`` the inversion parity.  All sets are sorted tuples, so a
    configuration is hashable and canonical.
    """

    o1: tuple
    o2: tuple
    f1: tuple
    f2: tuple
    tau: tuple
    nu: int


EMPTY_CONFIG_EVEN = Configuration((), (), (), (), (), 0)


def _config(o1, o2, f1, f2, tau, nu) -> Configuration:
    return Configuration(
        tuple(sorted(o1)),
        tuple(sorted(o2)),
        tuple(sorted(f1)),
        tuple(sorted(f2)),
        tuple(sorted(tau)),
        nu & 1,
    )


def enumerate_configurations(bag: Sequence[int]) -> Iterator[Configuration]:
    """Every valid configuration over ``bag``, each exactly once.

    Deterministic order: by |O1|, then O1, O2, |F1|, F1, F2, the partial
    bijection, and parity last.
    """
    elements = sorted(bag)
    b = len(elements)
    for k in range(b + 1):
        for o1 in combinations(elements, k):
            for o2 in combinations(elements, k):
                for j in range(k + 1):
                    for f1 in combinations(o1, j):
                        rest1 = [x for x in o1 if x not in f1]
                        for f2 in combinations(o2, j):
                            rest2 = [x for x in o2 if x not in f2]
                            for image in permutations(rest2):
                                tau = tuple(zip(rest1, image))
                                for nu in (0, 1):
                                    yield _config(o1, o2, f1, f2, tau, nu)


def configuration_count(bag_size: int) -> int:
    """Closed-form count of configurations over a bag of the given size."""
    total = 0
    for k in range(bag_size + 1):
        per_pair = sum(
            comb(k, j) ** 2 * factorial(k - j) for j in range(k + 1)
        )
        total += comb(bag_size, k) ** 2 * per_pair
    return total * 2


@dataclass(frozen=True)
class ParityDelta:
    """A 0/1 inversion-parity correction plus how it was derived."""

    value: int
    provenance: str


def _bubble_delta(from_tail, to_tail, o1set, o2set) -> int:
    """Parity shift from reordering the bag tail, one adjacent swap at a time.

    Each swap of consecutive bag elements (a, b) flips the parity exactly
    when one of the two open sets contains both of them and the other does
    not.
    """
    target_rank = {v: i for i, v in enumerate(to_tail)}
    work = [target_rank[v] for v in from_tail]
    labels = list(from_tail)
    delta = 0
    changed = True
    while changed:
        changed = False
        for i in range(len(work) - 1):
            if work[i] > work[i + 1]:
                a, b = labels[i], labels[i + 1]
                both1 = a in o1set and b in o1set
                both2 = a in o2set and b in o2set
                if both1 != both2:
                    delta ^= 1
                work[i], work[i + 1] = work[i + 1], work[i]
                labels[i], labels[i + 1] = labels[i + 1], labels[i]
                changed = True
    return delta


def reorder_delta(
    config: Configuration, from_ordering: Sequence[int], to_ordering: Sequence[int]
) -> ParityDelta:
    """Parity correction between two orderings of the same vertex set.

    Both orderings must agree on a common settled prefix and permute only a
    trailing bag zone containing the configuration's open sets; the result
    is the mod-2 difference of inversion numbers for every bijection
    consistent with the configuration.
    """
    if len(from_ordering) != len(to_ordering) or set(from_ordering) != set(
        to_ordering
    ):
        raise IndexRangeError("orderings must cover the same elements")
    prefix = 0
    while (
        prefix < len(from_ordering)
        and from_ordering[prefix] == to_ordering[prefix]
    ):
        prefix += 1
    from_tail = tuple(from_ordering[prefix:])
    to_tail = tuple(to_ordering[prefix:])
    if set(from_tail) != set(to_tail):
        raise IndexRangeError("orderings do not differ by a tail permutation")
    touched = set(from_tail)
    if not (set(config.o1) | set(config.o2)) <= (touched | set(from_ordering[:prefix])):
        raise IndexRangeError("configuration mentions unknown elements")
    swaps = _bubble_delta(from_tail, to_tail, set(config.o1), set(config.o2))
    return ParityDelta(value=swaps, provenance=f"bubble over {len(from_tail)} tail elements")


# -- dynamic programming tables ---------------------------------------------------


class _WorkMeter:
    """Counts produced table entries; trips the budget before a hang."""

    __slots__ = ("remaining", "budget")

    def __init__(self, budget: int):
        self.remaining = budget
        self.budget = budget

    def charge(self, amount: int) -> None:
        self.remaining -= amount
        if self.remaining < 0:
            raise BudgetExceededError(
                f"treewidth DP exceeded its work budget of {self.budget} "
                "produced table entries; the configuration space is too "
                "dense for this width and matrix count"
            )


@dataclass
class DPTable:
    """Sparse per-node table: size index -> configuration tuple -> value.

    ``exact_sizes`` distinguishes whether the size index is the true
    settled-subset size or just its parity.
    """

    node: int
    exact_sizes: bool
    entries: dict = field(default_factory=dict)

    def bump(self, skey: int, key: tuple, value: ExactScalar) -> None:
        if value == 0:
            return
        by_key = self.entries.setdefault(skey, {})
        cur = by_key.get(key)
        total = value if cur is None else cur + value
        if total == 0:
            if cur is not None:
                del by_key[key]
        else:
            by_key[key] = total

    def live_keys(self) -> int:
        return sum(len(d) for d in self.entries.values())

    def max_entry_bits(self) -> int:
        bits = 0
        for by_key in self.entries.values():
            for v in by_key.values():
                b = v.numerator.bit_length() + v.denominator.bit_length()
                if b > bits:
                    bits = b
        return bits


def _leaf_table(node: int, m: int, exact_sizes: bool) -> DPTable:
    table = DPTable(node=node, exact_sizes=exact_sizes)
    for parities in _all_parities(m):
        key = tuple(
            Configuration((), (), (), (), (), nu) for nu in parities
        )
        if all(nu == 0 for nu in parities):
            table.bump(0, key, ONE)
    return table


def _all_parities(m: int):
    for mask in range(1 << m):
        yield tuple(mask >> i & 1 for i in range(m))


def _intro_extensions(config: Configuration, mat: SquareMatrix, v: int,
                      child_bag: tuple, rank: dict):
    """All parent configurations one introduce step above ``config``.

    Yields (parent configuration, entry factor); parents with a zero
    factor or with the new vertex in a settled-matched set are never
    produced (their table entries vanish).
    """
    rows = mat.rows
    o1, o2 = config.o1, config.o2
    o1set, o2set = set(o1), set(o2)
    nu = config.nu
    out = [(config, ONE)]  # the new vertex stays outside both open sets

    def gt_count(tup, x):
        rx = rank[x]
        return sum(1 for y in tup if rank[y] > rx)

    # v open on the domain side only, matched to w inside the bag
    for w in child_bag:
        if w in o2set:
            continue
        f = rows[v][w]
        if f == 0:
            continue
        delta = gt_count(o2, w)
        out.append(
            (
                _config(o1 + (v,), o2 + (w,), config.f1, config.f2,
                        config.tau + ((v, w),), nu + delta),
                f,
            )
        )
    # v open on the image side only, matched from u inside the bag
    for u in child_bag:
        if u in o1set:
            continue
        f = rows[u][v]
        if f == 0:
            continue
        delta = gt_count(o1, u)
        out.append(
            (
                _config(o1 + (u,), o2 + (v,), config.f1, config.f2,
                        config.tau + ((u, v),), nu + delta),
                f,
            )
        )
    # v open on both sides as a fixed point
    f = rows[v][v]
    if f != 0:
        out.append(
            (
                _config(o1 + (v,), o2 + (v,), config.f1, config.f2,
                        config.tau + ((v, v),), nu),
                f,
            )
        )
    # v open on both sides inside a longer cycle: v -> w and u -> v
    for w in child_bag:
        if w in o2set:
            continue
        fw = rows[v][w]
        if fw == 0:
            continue
        for u in child_bag:
            if u in o1set:
                continue
            fu = rows[u][v]
            if fu == 0:
                continue
            delta = gt_count(o2, w) + gt_count(o1, u) + 1
            out.append(
                (
                    _config(o1 + (v, u), o2 + (w, v), config.f1, config.f2,
                            config.tau + ((v, w), (u, v)), nu + delta),
                    fw * fu,
                )
            )
    return out


def introduce_update(
    child: DPTable,
    v: int,
    matrices: Sequence[SquareMatrix],
    child_bag: tuple,
    node: int,
    meter: Optional[_WorkMeter] = None,
) -> DPTable:
    """Table for an introduce node from its child's table."""
    parent_bag = child_bag + (v,)
    rank = {u: i for i, u in enumerate(parent_bag)}
    m = len(matrices)
    ext_cache = [dict() for _ in range(m)]
    out = DPTable(node=node, exact_sizes=child.exact_sizes)
    for skey, by_key in child.entries.items():
        for key, value in by_key.items():
            option_lists = []
            fanout = 1
            for i in range(m):
                cached = ext_cache[i].get(key[i])
                if cached is None:
                    cached = _intro_extensions(
                        key[i], matrices[i], v, child_bag, rank
                    )
                    ext_cache[i][key[i]] = cached
                option_lists.append(cached)
                fanout *= len(cached)
            if meter is not None:
                meter.charge(fanout)
            # Cartesian product over per-matrix extensions.
            stack = [(0, value, ())]
            while stack:
                i, acc, prefix = stack.pop()
                if i == m:
                    out.bump(skey, prefix, acc)
                    continue
                for cfg, factor in option_lists[i]:
                    stack.append((i + 1, acc * factor, prefix + (cfg,)))
    return out


def _forget_map(config: Configuration, v: int, child_bag: tuple):
    """Configuration one forget step above, or None when impossible.

    Returns (kind, new configuration) with kind "skip" when the vertex is
    open on exactly one side (no settled subset can absorb it), "stay"
    when it is open on neither side, and "absorb" when it joins the
    settled subset.
    """
    in1 = v in config.o1
    in2 = v in config.o2
    delta = 0
    o1set, o2set = set(config.o1), set(config.o2)
    if in1 and in2:
        for b in child_bag:
            if b == v:
                break
            if (b in o1set) != (b in o2set):
                delta ^= 1
    if not in1 and not in2:
        return "stay", config._replace(nu=(config.nu + delta) & 1)
    if in1 != in2:
        return "skip", None
    tau_of = dict(config.tau)
    tau_inv = {w: u for u, w in config.tau}
    f1, f2 = set(config.f1), set(config.f2)
    if v in f1 and v in f2:
        f1.discard(v)
        f2.discard(v)
        tau = config.tau
    elif v not in f1 and v in f2:
        f2.discard(v)
        f2.add(tau_of[v])
        tau = tuple(p for p in config.tau if p[0] != v)
    elif v in f1 and v not in f2:
        f1.discard(v)
        f1.add(tau_inv[v])
        tau = tuple(p for p in config.tau if p[1] != v)
    else:
        if tau_of[v] == v:
            tau = tuple(p for p in config.tau if p != (v, v))
        else:
            f1.add(tau_inv[v])
            f2.add(tau_of[v])
            tau = tuple(p for p in config.tau if p[0] != v and p[1] != v)
    new = _config(
        [x for x in config.o1 if x != v],
        [x for x in config.o2 if x != v],
        f1,
        f2,
        tau,
        config.nu + delta,
    )
    return "absorb", new


def forget_update(
    child: DPTable,
    v: int,
    child_bag: tuple,
    node: int,
    meter: Optional[_WorkMeter] = None,
) -> DPTable:
    """Table for a forget node from its child's table.

    Keys where the vertex is open on both sides of every matrix fold into
    the settled subset (size index up one); keys where it is open nowhere
    pass through; mixed keys match no shared subset and vanish.
    """
    m = None
    fmap_cache: dict = {}
    out = DPTable(node=node, exact_sizes=child.exact_sizes)
    for skey, by_key in child.entries.items():
        if meter is not None:
            meter.charge(len(by_key))
        for key, value in by_key.items():
            if m is None:
                m = len(key)
            kinds_new = []
            for cfg in key:
                cached = fmap_cache.get(cfg)
                if cached is None:
                    cached = _forget_map(cfg, v, child_bag)
                    fmap_cache[cfg] = cached
                kinds_new.append(cached)
            if all(kind == "stay" for kind, _ in kinds_new):
                out.bump(skey, tuple(cfg for _, cfg in kinds_new), value)
            elif all(kind == "absorb" for kind, _ in kinds_new):
                new_skey = skey + 1 if child.exact_sizes else (skey + 1) & 1
                out.bump(new_skey, tuple(cfg for _, cfg in kinds_new), value)
    return out


def _tau_product(mat: SquareMatrix, tau: tuple) -> ExactScalar:
    value = ONE
    for u, w in tau:
        value = value * mat.rows[u][w]
        if value == 0:
            return ZERO
    return value


def _bag_inversions(tau: tuple, rank: dict) -> int:
    pairs = sorted(tau, key=lambda p: rank[p[0]])
    inv = 0
    for a in range(len(pairs)):
        ra = rank[pairs[a][1]]
        for b in range(a + 1, len(pairs)):
            if ra > rank[pairs[b][1]]:
                inv += 1
    return inv


def _cross_inversions(left: tuple, right: tuple, rank: dict) -> int:
    count = 0
    for p in left:
        rp = rank[p]
        for q in right:
            if rp > rank[q]:
                count += 1
    return count


def join_update(
    left: DPTable,
    right: DPTable,
    matrices: Sequence[SquareMatrix],
    left_bag: tuple,
    right_bag: tuple,
    node: int,
    meter: Optional[_WorkMeter] = None,
) -> DPTable:
    """Table for a join node from its two children's tables.

    Compatible key pairs share the open-minus-settled sets and the fixed
    bijection per matrix, with disjoint settled-matched sets; the joined
    parity folds in the right child's reorder correction, the fixed
    bijection's own inversions (counted once on each side, so subtracted),
    the parity of the right subset size times the left settled-matched
    sizes, and the cross inversions between settled-matched sets.
    """
    m = len(matrices)
    rank = {u: i for i, u in enumerate(left_bag)}
    out = DPTable(node=node, exact_sizes=left.exact_sizes)

    def signature(cfg: Configuration):
        open1 = tuple(sorted(set(cfg.o1) - set(cfg.f1)))
        open2 = tuple(sorted(set(cfg.o2) - set(cfg.f2)))
        return (open1, open2, cfg.tau)

    right_delta_cache: dict = {}

    def right_delta(cfg: Configuration) -> int:
        key = (cfg.o1, cfg.o2)
        cached = right_delta_cache.get(key)
        if cached is None:
            cached = _bubble_delta(right_bag, left_bag, set(cfg.o1), set(cfg.o2))
            right_delta_cache[key] = cached
        return cached

    buckets: dict = {}
    for skey, by_key in right.entries.items():
        for key, value in by_key.items():
            sig = tuple(signature(cfg) for cfg in key)
            buckets.setdefault(sig, []).append((skey, key, value))

    tau_inv_cache: dict = {}
    for skey_l, by_key_l in left.entries.items():
        for key_l, value_l in by_key_l.items():
            sig = tuple(signature(cfg) for cfg in key_l)
            matches = buckets.get(sig)
            if not matches:
                continue
            if meter is not None:
                meter.charge(len(matches))
            for skey_r, key_r, value_r in matches:
                joined = []
                ok = True
                for i in range(m):
                    cl, cr = key_l[i], key_r[i]
                    f1l, f1r = set(cl.f1), set(cr.f1)
                    f2l, f2r = set(cl.f2), set(cr.f2)
                    if f1l & f1r or f2l & f2r:
                        ok = False
                        break
                    tau = cl.tau
                    inv_tau = tau_inv_cache.get(tau)
                    if inv_tau is None:
                        inv_tau = _bag_inversions(tau, rank)
                        tau_inv_cache[tau] = inv_tau
                    nu = (
                        cl.nu
                        + cr.nu
                        + right_delta(cr)
                        + inv_tau
                        + skey_r * (len(cl.f1) + len(cl.f2))
                        + _cross_inversions(cl.f1, cr.f1, rank)
                        + _cross_inversions(cl.f2, cr.f2, rank)
                    )
                    joined.append(
                        _config(
                            set(cl.o1) | set(cr.o1),
                            set(cl.o2) | set(cr.o2),
                            f1l | f1r,
                            f2l | f2r,
                            tau,
                            nu,
                        )
                    )
                if not ok:
                    continue
                new_skey = (
                    skey_l + skey_r
                    if left.exact_sizes
                    else (skey_l + skey_r) & 1
                )
                out.bump(new_skey, tuple(joined), value_l * value_r)
    # Settle the double-counted fixed-bijection weight per matrix.
    for by_key in out.entries.values():
        for key in list(by_key.keys()):
            divisor = ONE
            for i in range(m):
                divisor = divisor * _tau_product(matrices[i], key[i].tau)
            if divisor != ONE:
                by_key[key] = by_key[key] / divisor
    return out


# -- driver ------------------------------------------------------------------------


def estimate_treewidth_work(
    nice: NiceTreeDecomposition, m: int, exact_sizes: bool
) -> int:
    """Worst-case (dense) table-slot estimate; live tables are usually far
    smaller, so this is diagnostic, not a gate."""
    size_classes = nice.n + 1 if exact_sizes else 2
    total = 0
    for node in nice.nodes:
        total += configuration_count(len(node.bag)) ** m * size_classes
    return total


def run_treewidth_dp(
    tuple_,
    nice: NiceTreeDecomposition,
    exact_sizes: bool = False,
    budget: int = DEFAULT_TW_BUDGET,
    keep_tables: bool = False,
):
    """Run the full bottom-up DP; return the root table (and all tables).

    Raises :class:`UncoveredEntryError` if some off-diagonal nonzero of the
    input is not inside any bag, and :class:`BudgetExceededError` as soon
    as the number of produced table entries exceeds ``budget`` (the
    configuration blow-up shows up as live keys, so this converts a hang
    into a typed error part-way).
    """
    T = MatrixTuple.of(tuple_)
    if nice.n != T.n:
        raise DimensionMismatchError(
            f"decomposition is over {nice.n} vertices, matrices over {T.n}"
        )
    union = sparsity_union(T.matrices)
    bags = [set(node.bag) for node in nice.nodes]
    for u, v in union.edges:
        if not any(u in bag and v in bag for bag in bags):
            raise UncoveredEntryError(
                f"nonzero entry ({u}, {v}) not covered by any bag"
            )
    meter = _WorkMeter(budget)
    tables: dict = {}
    kept: dict = {}
    trace = logger.isEnabledFor(logging.DEBUG)
    for node_id in nice.postorder():
        node = nice.nodes[node_id]
        if node.kind == "leaf":
            table = _leaf_table(node_id, T.m, exact_sizes)
        elif node.kind == "introduce":
            child_id = node.children[0]
            table = introduce_update(
                tables.pop(child_id),
                node.vertex,
                T.matrices,
                nice.nodes[child_id].bag,
                node_id,
                meter,
            )
        elif node.kind == "forget":
            child_id = node.children[0]
            table = forget_update(
                tables.pop(child_id),
                node.vertex,
                nice.nodes[child_id].bag,
                node_id,
                meter,
            )
        else:
            left_id, right_id = node.children
            table = join_update(
                tables.pop(left_id),
                tables.pop(right_id),
                T.matrices,
                nice.nodes[left_id].bag,
                nice.nodes[right_id].bag,
                node_id,
                meter,
            )
        tables[node_id] = table
        if keep_tables:
            kept[node_id] = table
        if trace:
            logger.debug(
                "node %d kind=%s bag=%s live=%d max_bits=%d",
                node_id,
                node.kind,
                node.bag,
                table.live_keys(),
                table.max_entry_bits(),
            )
    root_table = tables[nice.root]
    return (root_table, kept) if keep_tables else (root_table, None)


def _assemble(root_table: DPTable, m: int, signed: bool) -> ExactScalar:
    total = ZERO
    for by_key in root_table.entries.values():
        for key, value in by_key.items():
            if any(cfg.o1 or cfg.o2 for cfg in key):
                continue
            parity = sum(cfg.nu for cfg in key) & 1
            if signed and parity:
                total = total - value
            else:
                total = total + value
    return total


def zm_treewidth(
    tuple_,
    nice: NiceTreeDecomposition,
    exact_sizes: bool = False,
    budget: int = DEFAULT_TW_BUDGET,
) -> ExactScalar:
    """Exact product-process normalizer on a nice tree decomposition."""
    T = MatrixTuple.of(tuple_)
    root_table, _ = run_treewidth_dp(
        T, nice, exact_sizes=exact_sizes, budget=budget
    )
    return _assemble(root_table, T.m, signed=True)


def permanental_sum(
    tuple_,
    nice: NiceTreeDecomposition,
    allow_conjectured: bool = False,
    exact_sizes: bool = False,
    budget: int = DEFAULT_TW_BUDGET,
) -> ExactScalar:
    """Sum over subsets of products of principal-submatrix permanents.

    The unsigned root assembly is established for two matrices; for m != 2
    it is only conjectured, so that case must be opted into explicitly.
    """
    T = MatrixTuple.of(tuple_)
    if T.m != 2 and not allow_conjectured:
        raise IndexRangeError(
            "permanental sum is established for exactly two matrices; "
            "pass allow_conjectured=True to evaluate other counts"
        )
    root_table, _ = run_treewidth_dp(
        T, nice, exact_sizes=exact_sizes, budget=budget
    )
    return _assemble(root_table, T.m, signed=False)
