import random
from itertools import permutations

import pytest

from pidpp import (
    SquareMatrix,
    banded_random,
    count_k_matchings_brute,
    count_matchings_brute,
    decompose,
    gram_random,
    hamiltonian_gadget,
    ldl_factor,
    matching_matrices,
    partition_matrix,
    principal_minor,
    sparsity_union,
    z_m_brute,
    z_mk_brute,
)
from pidpp.errors import DisconnectedGraphError, FormatError, IndexRangeError
from pidpp.exact import ONE, ZERO
from pidpp.graphs import (
    BipartiteGraphSpec,
    DirectedGraphSpec,
    format_bipartite_text,
    format_digraph_text,
    parse_bipartite_text,
    parse_digraph_text,
)


def random_bipartite(rng, max_side=3, max_edges=7):
    nx, ny = rng.randint(1, max_side), rng.randint(1, max_side)
    pool = [(x, y) for x in range(nx) for y in range(ny)]
    rng.shuffle(pool)
    edges = tuple(pool[: rng.randint(1, min(max_edges, len(pool)))])
    return BipartiteGraphSpec(nx=nx, ny=ny, edges=edges)


def has_hamiltonian_path(graph: DirectedGraphSpec) -> bool:
    succ = {}
    for u, v in graph.edges:
        succ.setdefault(u, set()).add(v)
    for order in permutations(range(graph.n)):
        if all(order[i + 1] in succ.get(order[i], ()) for i in range(graph.n - 1)):
            return True
    return graph.n <= 1


def test_matching_matrices_examples():
    single = BipartiteGraphSpec(nx=1, ny=1, edges=((0, 0),))
    a, b = matching_matrices(single)
    assert a == SquareMatrix([[1]]) and b == SquareMatrix([[1]])
    assert z_m_brute([a, b]) == 2
    p3 = BipartiteGraphSpec(nx=2, ny=1, edges=((0, 0), (1, 0)))
    a, b = matching_matrices(p3)
    assert z_m_brute([a, b]) == 3 == count_matchings_brute(p3)


def test_matching_matrices_random():
    rng = random.Random(61)
    for _ in range(20):
        h = random_bipartite(rng)
        a, b = matching_matrices(h)
        assert z_m_brute([a, b]) == count_matchings_brute(h)
        for k in range(len(h.edges) + 1):
            assert z_mk_brute([a, b], k) == count_k_matchings_brute(h, k)
        # block-diagonal with all-ones blocks: treewidth <= max degree - 1
        union = sparsity_union([a])
        degree = max(
            (sum(1 for e in h.edges if e[0] == x) for x in range(h.nx)), default=1
        )
        assert decompose(union).width <= max(degree - 1, 0)


def test_hamiltonian_gadget_examples():
    path3 = DirectedGraphSpec(n=3, edges=((0, 1), (1, 2)))
    a, b, c = hamiltonian_gadget(path3)
    assert z_mk_brute([a, b, c], 2) > 0
    star = DirectedGraphSpec(n=4, edges=((0, 1), (0, 2), (0, 3)))
    a, b, c = hamiltonian_gadget(star)
    assert z_mk_brute([a, b, c], 3) == 0
    lonely = DirectedGraphSpec(n=3, edges=((0, 1),))
    with pytest.raises(DisconnectedGraphError):
        hamiltonian_gadget(lonely)


def test_hamiltonian_gadget_random_tournaments():
    rng = random.Random(17)
    for _ in range(15):
        n = rng.randint(2, 4)
        edges = []
        for u in range(n):
            for v in range(u + 1, n):
                edges.append((u, v) if rng.random() < 0.5 else (v, u))
        g = DirectedGraphSpec(n=n, edges=tuple(edges))
        a, b, c = hamiltonian_gadget(g)
        positive = z_mk_brute([a, b, c], n - 1) > 0
        assert positive == has_hamiltonian_path(g)


def test_gadget_kernel_minors_are_probabilities():
    rng = random.Random(23)
    for _ in range(8):
        n = rng.randint(2, 4)
        edges = {(u, u + 1) for u in range(n - 1)}
        for _ in range(rng.randint(0, 3)):
            u, v = rng.randrange(n), rng.randrange(n)
            if u != v and (u, v) not in edges:
                edges.add((u, v))
        g = DirectedGraphSpec(n=n, edges=tuple(sorted(edges)))
        _, _, c = hamiltonian_gadget(g)
        for mask in range(1 << len(g.edges)):
            s = [i for i in range(len(g.edges)) if mask >> i & 1]
            d = principal_minor(c, s)
            assert 0 <= d <= 1


def test_partition_matrix():
    assert partition_matrix([[0], [1], [2]]) == SquareMatrix.identity(3)
    assert partition_matrix([[0, 1, 2]]) == SquareMatrix.ones(3)
    b = partition_matrix([[0, 1], [2, 3]])
    for mask in range(16):
        s = [i for i in range(4) if mask >> i & 1]
        groups_hit = [i // 2 for i in s]
        expected = ONE if len(set(groups_hit)) == len(s) else ZERO
        assert principal_minor(b, s) == expected
    with pytest.raises(FormatError):
        partition_matrix([[0, 1], [1, 2]])


def test_partition_minors_always_zero_one():
    rng = random.Random(3)
    for _ in range(5):
        n = rng.randint(2, 8)
        order = list(range(n))
        rng.shuffle(order)
        groups = []
        at = 0
        while at < n:
            size = rng.randint(1, 3)
            groups.append(order[at:at + size])
            at += size
        b = partition_matrix(groups)
        for mask in range(1 << n):
            s = [i for i in range(n) if mask >> i & 1]
            assert principal_minor(b, s) in (ZERO, ONE)


def test_banded_random():
    m = banded_random(20, 2, seed=9)
    assert all(
        m[i, j] == 0 for i in range(20) for j in range(20) if abs(i - j) > 2
    )
    assert decompose(sparsity_union([m])).width <= 4
    ldl_factor(m)  # PSD by construction
    assert banded_random(20, 2, seed=9) == m  # byte-identical per seed
    assert banded_random(20, 2, seed=10) != m
    diag = banded_random(6, 0, seed=1)
    assert decompose(sparsity_union([diag])).width <= 1
    narrow = banded_random(10, 3, rank=2, seed=5)
    assert all(
        narrow[i, j] == 0 for i in range(10) for j in range(10) if abs(i - j) > 3
    )
    with pytest.raises(IndexRangeError):
        banded_random(4, 4)
    with pytest.raises(IndexRangeError):
        banded_random(6, 1, rank=5)


def test_gram_random_rank():
    from pidpp import rank

    m = gram_random(7, 2, seed=12)
    assert rank(m) <= 2
    ldl_factor(m)


def test_graph_text_round_trips():
    g = DirectedGraphSpec(n=4, edges=((0, 1), (2, 3), (3, 0)))
    assert parse_digraph_text(format_digraph_text(g)) == g
    h = BipartiteGraphSpec(nx=2, ny=3, edges=((0, 2), (1, 0)))
    assert parse_bipartite_text(format_bipartite_text(h)) == h
    with pytest.raises(FormatError):
        parse_digraph_text("2\n1 2\n")
    with pytest.raises(FormatError):
        parse_bipartite_text("")
