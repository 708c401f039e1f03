"""Acceptance suite: one test per criterion, each printing a pass line.

Run ``pytest -s tests/test_acceptance.py`` to see the per-criterion lines.
Every check is exact unless the criterion itself is statistical, and the
statistical ones are seeded, so the whole suite is deterministic.
"""

import math
import random
import time
from fractions import Fraction
from itertools import combinations, permutations

from pidpp import (
    ConditionState,
    MatrixTuple,
    Sampler,
    SquareMatrix,
    banded_random,
    block_diag_power,
    count_k_matchings_brute,
    count_matchings_brute,
    decompose,
    det,
    edpp_brute,
    edpp_fractional,
    gram_random,
    hadamard_upper_bound,
    hamiltonian_gadget,
    make_nice,
    map_brute,
    map_inference,
    matching_matrices,
    permanent,
    permanental_sum,
    sparsity_union,
    subset_masses,
    z_m_brute,
    z_mk_all,
    z_mk_brute,
    zm_rank,
    zm_treewidth,
)
from pidpp.exact import ONE, ZERO, iroot_floor, scalar
from pidpp.graphs import BipartiteGraphSpec, DirectedGraphSpec
from pidpp.treewidth_fpt import (
    Configuration,
    enumerate_configurations,
    run_treewidth_dp,
)

from conftest import (
    band_edges,
    block_edges,
    random_pattern_matrix,
    random_psd,
    random_rational_matrix,
    random_tree_edges,
)


def _pass(number: int, text: str) -> None:
    print(f"[criterion {number:>2}] PASS  {text}")


def nice_for(mats):
    g = sparsity_union(mats)
    return make_nice(decompose(g), g)


def test_criterion_01_closed_form():
    rng = random.Random(10_001)
    for trial in range(200):
        n = rng.randint(1, 10)
        m = random_rational_matrix(n, rng)
        assert z_m_brute([m]) == det(m.add(SquareMatrix.identity(n)))
    _pass(1, "one-matrix normalizer equals det(A + I) on 200 random matrices")


def test_criterion_02_rank_fpt_oracle_equivalence():
    rng = random.Random(10_002)
    for trial in range(100):
        n = rng.randint(1, 10)
        m = rng.randint(1, 3)
        r = rng.randint(1, 3)
        mats = [random_psd(n, r, rng) for _ in range(m)]
        assert zm_rank(mats) == z_m_brute(mats)
    _pass(2, "rank algorithm equals brute force on 100 PSD tuples (exact)")


def test_criterion_03_treewidth_fpt_oracle_equivalence():
    rng = random.Random(10_003)
    styles = ["band", "block", "tree", "band2"]
    for trial in range(100):
        n = rng.randint(1, 10)
        m = rng.randint(1, 3)
        style = styles[trial % len(styles)]
        if style == "band":
            edges = band_edges(n, 1)
        elif style == "band2":
            edges = band_edges(n, 2)
        elif style == "block":
            edges = block_edges(n, rng)
        else:
            edges = random_tree_edges(n, rng) if n > 1 else []
        mats = [random_pattern_matrix(n, edges, rng) for _ in range(m)]
        assert zm_treewidth(mats, nice_for(mats)) == z_m_brute(mats)
    _pass(3, "treewidth algorithm equals brute force on 100 sparse tuples (exact)")


def _all_bijections(domain, image):
    domain = sorted(domain)
    for target in permutations(sorted(image)):
        yield dict(zip(domain, target))


def _inversions(sigma, ordering):
    position = {v: i for i, v in enumerate(ordering)}
    items = sorted(sigma, key=position.get)
    count = 0
    for a in range(len(items)):
        for b in range(a + 1, len(items)):
            if position[sigma[items[a]]] > position[sigma[items[b]]]:
                count += 1
    return count


def _config_of(sigma, settled, ordering):
    s = set(settled)
    o1 = set(sigma) - s
    o2 = set(sigma.values()) - s
    f1 = {u for u in o1 if sigma[u] in s}
    f2 = {sigma[u] for u in s} & o2
    tau = tuple(sorted((u, sigma[u]) for u in o1 - f1))
    return Configuration(
        tuple(sorted(o1)), tuple(sorted(o2)), tuple(sorted(f1)),
        tuple(sorted(f2)), tau, _inversions(sigma, ordering) & 1,
    )


def _consistent(sigma, settled, ordering, config):
    if set(sigma) != set(settled) | set(config.o1):
        return False
    if set(sigma.values()) != set(settled) | set(config.o2):
        return False
    return _config_of(sigma, settled, ordering) == config


def test_criterion_04_configuration_partition():
    # Part 1: every bijection over (settled subset, bag-open sets) is
    # consistent with exactly one enumerated configuration.
    for bag_size in range(4):
        for free_size in range(0, 7 - bag_size):
            free = list(range(free_size))
            bag = list(range(free_size, free_size + bag_size))
            ordering = free + bag
            configs = list(enumerate_configurations(bag))
            total_bijections = 0
            hits_total = 0
            for s_size in range(free_size + 1):
                for settled in combinations(free, s_size):
                    for k in range(bag_size + 1):
                        for o1 in combinations(bag, k):
                            for o2 in combinations(bag, k):
                                for sigma in _all_bijections(
                                    set(settled) | set(o1),
                                    set(settled) | set(o2),
                                ):
                                    total_bijections += 1
                                    assigned = _config_of(sigma, settled, ordering)
                                    assert assigned in set(configs)
                                    hits = sum(
                                        1
                                        for c in configs
                                        if c.o1 == assigned.o1
                                        and c.o2 == assigned.o2
                                        and _consistent(sigma, settled, ordering, c)
                                    )
                                    assert hits == 1
                                    hits_total += hits
            assert hits_total == total_bijections

    # Part 2: stored table entries equal the definitional sums.
    rng = random.Random(10_004)
    checked = 0
    for _ in range(3):
        n = rng.randint(2, 5)
        m = rng.randint(1, 2)
        mats = [random_pattern_matrix(n, band_edges(n, 1), rng) for _ in range(m)]
        ntd = nice_for(mats)
        _, tables = run_treewidth_dp(mats, ntd, exact_sizes=True, keep_tables=True)
        for node_id, table in tables.items():
            node = ntd.nodes[node_id]
            ordering = list(node.settled) + list(node.bag)
            for skey, by_key in table.entries.items():
                for key, value in by_key.items():
                    want = ZERO
                    for settled in combinations(node.settled, skey):
                        term = ONE
                        for i in range(m):
                            upsilon = ZERO
                            domain_open = set(key[i].o1)
                            image_open = set(key[i].o2)
                            for sigma in _all_bijections(
                                set(settled) | domain_open,
                                set(settled) | image_open,
                            ):
                                if _config_of(sigma, settled, ordering) != key[i]:
                                    continue
                                prod = ONE
                                for u, w in sigma.items():
                                    prod = prod * mats[i][u, w]
                                upsilon = upsilon + prod
                            term = term * upsilon
                            if term == 0:
                                break
                        want = want + term
                    assert want == value
                    checked += 1
    assert checked > 0
    _pass(4, "configuration partition and table semantics verified exhaustively")


def test_criterion_05_fixed_size_normalizers():
    rng = random.Random(10_005)
    for trial in range(50):
        n = rng.randint(1, 8)
        m = rng.randint(1, 2)
        edges = band_edges(n, rng.randint(0, 2))
        mats = [random_pattern_matrix(n, edges, rng) for _ in range(m)]
        values = z_mk_all(mats)
        for k in range(n + 1):
            assert values[k] == z_mk_brute(mats, k)
    for trial in range(15):
        nx, ny = rng.randint(1, 3), rng.randint(1, 3)
        pool = [(x, y) for x in range(nx) for y in range(ny)]
        rng.shuffle(pool)
        edges = tuple(pool[: rng.randint(1, min(8, len(pool)))])
        h = BipartiteGraphSpec(nx=nx, ny=ny, edges=edges)
        a, b = matching_matrices(h)
        for k in range(len(edges) + 1):
            assert z_mk_brute([a, b], k) == count_k_matchings_brute(h, k)
    _pass(5, "fixed-size normalizers match brute force and k-matching counts")


def test_criterion_06_matching_identity():
    rng = random.Random(10_006)
    for trial in range(50):
        nx, ny = rng.randint(1, 4), rng.randint(1, 4)
        pool = [(x, y) for x in range(nx) for y in range(ny)]
        rng.shuffle(pool)
        edges = tuple(pool[: rng.randint(1, min(8, len(pool)))])
        h = BipartiteGraphSpec(nx=nx, ny=ny, edges=edges)
        a, b = matching_matrices(h)
        assert z_m_brute([a, b]) == count_matchings_brute(h)
    _pass(6, "two-matrix normalizer counts matchings on 50 bipartite graphs")


def _has_hamiltonian_path(graph: DirectedGraphSpec) -> bool:
    if graph.n <= 1:
        return True
    succ = {}
    for u, v in graph.edges:
        succ.setdefault(u, set()).add(v)
    # Held-Karp over subsets.
    n = graph.n
    reach = [[False] * n for _ in range(1 << n)]
    for v in range(n):
        reach[1 << v][v] = True
    for mask in range(1 << n):
        for v in range(n):
            if not reach[mask][v]:
                continue
            for w in succ.get(v, ()):
                if not mask >> w & 1:
                    reach[mask | (1 << w)][w] = True
    return any(reach[(1 << n) - 1][v] for v in range(n))


def _tournaments(n):
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    for mask in range(1 << len(pairs)):
        yield DirectedGraphSpec(
            n=n,
            edges=tuple(
                (u, v) if mask >> i & 1 else (v, u)
                for i, (u, v) in enumerate(pairs)
            ),
        )


def test_criterion_07_hamiltonicity_gadget():
    checked = 0
    for n in range(2, 6):
        for graph in _tournaments(n):
            a, b, c = hamiltonian_gadget(graph)
            positive = z_mk_brute([a, b, c], n - 1) > 0
            assert positive == _has_hamiltonian_path(graph)
            checked += 1
    rng = random.Random(10_007)
    attempts = 0
    while attempts < 40:
        n = rng.randint(2, 5)
        edges = set()
        for u in range(n):
            for v in range(n):
                if u != v and rng.random() < 0.45:
                    edges.add((u, v))
        graph = DirectedGraphSpec(n=n, edges=tuple(sorted(edges)))
        undirected = {(min(u, v), max(u, v)) for u, v in edges}
        adj = {i: set() for i in range(n)}
        for u, v in undirected:
            adj[u].add(v)
            adj[v].add(u)
        seen, stack = {0}, [0]
        while stack:
            cur = stack.pop()
            for nxt in adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if len(seen) != n:
            continue  # the gadget needs a connected underlying graph
        attempts += 1
        a, b, c = hamiltonian_gadget(graph)
        positive = z_mk_brute([a, b, c], n - 1) > 0
        assert positive == _has_hamiltonian_path(graph)
        checked += 1
    _pass(7, f"gadget sign decided Hamiltonicity on {checked} digraphs "
             "(all tournaments n<=5 included)")


def test_criterion_08_amplification_identity():
    rng = random.Random(10_008)
    for n in (2, 3, 4):
        for m in (1, 2):
            mats = [random_rational_matrix(n, rng, num_range=3) for _ in range(m)]
            base = z_m_brute(mats)
            for t in (2, 3):
                assert z_m_brute(block_diag_power(mats, t)) == base**t
    _pass(8, "block-diagonal stacking raises the normalizer to the t-th power")


def test_criterion_09_sampling_correctness():
    rng = random.Random(10_009)
    draws_per_tuple = 100_000
    tuples = []
    while len(tuples) < 10:
        n = rng.randint(2, 5)
        m = rng.randint(1, 2)
        mats = [random_psd(n, rng.randint(1, n), rng) for _ in range(m)]
        if z_m_brute(mats) == 1:
            continue  # degenerate mass concentrated on the empty set
        tuples.append(mats)
    worst_tv = 0.0
    for index, mats in enumerate(tuples):
        T = MatrixTuple.of(mats)
        z = z_m_brute(T)
        exact = {sm.subset: sm.mass / z for sm in subset_masses(T)}
        sampler = Sampler(T, method="interpolation")
        # telescoped exact probabilities equal brute masses / Z, exactly
        for subset, probability in exact.items():
            assert sampler.subset_probability(subset) == probability
        counts = {}
        for draw_index in range(draws_per_tuple):
            drawn = sampler.draw(1_000_000 * index + draw_index)
            counts[drawn] = counts.get(drawn, 0) + 1
        tv = 0.5 * sum(
            abs(float(exact.get(subset, ZERO)) - counts.get(subset, 0) / draws_per_tuple)
            for subset in set(exact) | set(counts)
        )
        worst_tv = max(worst_tv, tv)
        assert tv < 0.02
    _pass(9, f"10 x 100000 seeded draws, worst TV {worst_tv:.4f} < 0.02; "
             "telescoped probabilities exact")


def _pow2_lower(exponent: Fraction, bits: int = 80):
    """Rational lower bound on 2**exponent (exponent >= 0)."""
    a, b = exponent.numerator, exponent.denominator
    root, exact = iroot_floor((1 << a) << (b * bits), b)
    return scalar(int(root), 1 << bits)


def test_criterion_10_fractional_edpp_guarantee():
    rng = random.Random(10_010)
    exponents = [Fraction(5, 4), Fraction(3, 2), Fraction(5, 2), Fraction(15, 4)]
    for trial in range(20):
        n = rng.randint(2, 8)
        matrix = random_psd(n, rng.randint(1, n), rng)
        for p in exponents:
            estimate = edpp_fractional(matrix, p)
            truth = edpp_brute(matrix, p)
            # interval sits inside [Z^p, 2^(n/(2p-1)) Z^p], certified via
            # sound rational bounds from the interval brute oracle
            assert estimate.lo >= truth.lo
            assert estimate.lo <= estimate.hi
            factor_lower = _pow2_lower(Fraction(n) / (2 * p - 1))
            assert estimate.hi <= factor_lower * truth.lo
    _pass(10, "fractional exponent estimates stayed inside the proven factor "
              "for 20 matrices x 4 exponents")


def test_criterion_11_map_guarantee():
    rng = random.Random(10_011)
    sizes = [6, 7, 8, 9, 10, 11, 12] * 3
    matrices = []
    for index in range(20):
        n = sizes[index]
        matrices.append(banded_random(n, rng.randint(1, 2), seed=20_000 + index))
    runs = 200
    for matrix in matrices:
        n = matrix.n
        _, opt = map_brute(matrix)
        threshold_log2 = -math.sqrt(n)
        successes = 0
        for seed in range(runs):
            _, value, _ = map_inference(matrix, seed=seed)
            if value == opt:
                successes += 1
                continue
            if value > 0:
                ratio_log2 = math.log2(float(value / opt))
                if ratio_log2 >= threshold_log2 - 1e-12:
                    successes += 1
        assert successes >= int(0.95 * runs), (n, successes)
    _pass(11, "single-draw MAP met the 2^-sqrt(n) factor in >= 95% of "
              "200 runs on each of 20 matrices")


def test_criterion_12_permanental_sum():
    rng = random.Random(10_012)
    for trial in range(50):
        n = 5
        edges = band_edges(n, rng.randint(1, 2))
        a = random_pattern_matrix(n, edges, rng)
        b = random_pattern_matrix(n, edges, rng)
        want = ZERO
        for mask in range(1 << n):
            s = [i for i in range(n) if mask >> i & 1]
            want = want + permanent(a.submatrix(s)) * permanent(b.submatrix(s))
        assert permanental_sum([a, b], nice_for([a, b])) == want
    _pass(12, "unsigned assembly matches brute permanental sums on 50 pairs")


def test_criterion_13_performance_banded_100():
    a = banded_random(100, 2, seed=13_001)
    b = banded_random(100, 2, seed=13_002)
    g = sparsity_union([a, b])
    started = time.monotonic()
    ntd = make_nice(decompose(g), g)
    value = zm_treewidth([a, b], ntd)
    elapsed = time.monotonic() - started
    assert elapsed < 600.0, f"took {elapsed:.1f}s"
    # internal audits: the normalizer is symmetric in the matrices, at
    # least 1 (PSD inputs), and within the Hadamard upper bound
    swapped = zm_treewidth([b, a], ntd)
    assert swapped == value
    assert value >= 1
    _, bound = hadamard_upper_bound([a, b])
    assert value <= bound
    _pass(13, f"bandwidth-2 pair at order 100 finished in {elapsed:.1f}s < 600s")


def test_criterion_14_hadamard_bound():
    rng = random.Random(10_014)
    for trial in range(30):
        n = rng.randint(1, 8)
        m = rng.randint(1, 3)
        mats = []
        for _ in range(m):
            if rng.random() < 0.5:
                mats.append(random_psd(n, rng.randint(1, n), rng))
            else:
                mats.append(banded_random(n, rng.randint(0, n - 1) if n > 1 else 0,
                                          seed=rng.randrange(1 << 30)))
        lo, hi = hadamard_upper_bound(mats)
        value = z_m_brute(mats)
        assert lo == 1
        assert 1 <= value <= hi
    _pass(14, "normalizer sits in [1, Hadamard bound] on 30 P0 tuples")
