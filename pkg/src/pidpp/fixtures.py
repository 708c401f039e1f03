"""Structured instance generators.

These build the matrix encodings used throughout the test suite and the
benchmarks: bipartite matchings as a two-matrix product, Hamiltonian paths
as a three-matrix fixed-size positivity question, partition constraints as
0/1 principal minors, and seeded random matrices with banded sparsity or
bounded Gram rank.
"""

from __future__ import annotations

import random
from typing import Optional, Sequence

from .errors import DisconnectedGraphError, FormatError, IndexRangeError
from .exact import ONE, ZERO, scalar
from .graphs import BipartiteGraphSpec, DirectedGraphSpec
from .matrix import SquareMatrix, inverse


def matching_matrices(graph: BipartiteGraphSpec):
    """Two 0/1 matrices over the edge set whose product process counts matchings.

    Entry (i, j) of the first matrix is 1 when edges i and j share a left
    vertex (diagonal included), of the second when they share a right
    vertex.  A subset of edges has product-of-minors 1 exactly when it is
    a matching, so the normalizer counts matchings and the size-k
    normalizer counts k-matchings.
    """
    edges = graph.edges
    m = len(edges)
    a_rows = [
        [ONE if edges[i][0] == edges[j][0] else ZERO for j in range(m)]
        for i in range(m)
    ]
    b_rows = [
        [ONE if edges[i][1] == edges[j][1] else ZERO for j in range(m)]
        for i in range(m)
    ]
    return SquareMatrix(a_rows), SquareMatrix(b_rows)


def _laplacian(n: int, undirected_edges) -> SquareMatrix:
    rows = [[ZERO] * n for _ in range(n)]
    for u, v in undirected_edges:
        rows[u][u] = rows[u][u] + ONE
        rows[v][v] = rows[v][v] + ONE
        rows[u][v] = rows[u][v] - ONE
        rows[v][u] = rows[v][u] - ONE
    return SquareMatrix(rows)


def _is_connected(n: int, undirected_edges) -> bool:
    if n == 0:
        return True
    adj = [[] for _ in range(n)]
    for u, v in undirected_edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = {0}
    stack = [0]
    while stack:
        cur = stack.pop()
        for nxt in adj[cur]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == n


def hamiltonian_gadget(graph: DirectedGraphSpec):
    """Three PSD matrices over the edge set detecting Hamiltonian paths.

    The first two mark edge pairs sharing a head (resp. a tail), so their
    minors select unions of simple paths and cycles.  The third is the
    spanning-tree marginal kernel ``M pinv(L) M^T`` (incidence matrix times
    the Laplacian pseudoinverse), whose minor on an edge set is the
    probability a uniform random spanning tree contains it; it kills every
    cycle.  On subsets of size n-1 the three minors are simultaneously
    positive exactly for Hamiltonian paths.
    """
    n = graph.n
    edges = graph.edges
    m = len(edges)
    if not _is_connected(n, edges):
        raise DisconnectedGraphError(
            "the spanning-tree kernel needs a connected underlying graph"
        )
    share_head = [
        [ONE if edges[i][1] == edges[j][1] else ZERO for j in range(m)]
        for i in range(m)
    ]
    share_tail = [
        [ONE if edges[i][0] == edges[j][0] else ZERO for j in range(m)]
        for i in range(m)
    ]
    lap = _laplacian(n, edges)
    nth = scalar(1, n)
    shifted = SquareMatrix(
        [
            [lap.rows[i][j] + nth for j in range(n)]
            for i in range(n)
        ]
    )
    pinv = inverse(shifted)
    pinv = SquareMatrix(
        [
            [pinv.rows[i][j] - nth for j in range(n)]
            for i in range(n)
        ]
    )
    # Incidence rows: +1 at the tail, -1 at the head.
    kernel = [[ZERO] * m for _ in range(m)]
    for i, (ui, vi) in enumerate(edges):
        for j, (uj, vj) in enumerate(edges):
            kernel[i][j] = (
                pinv.rows[ui][uj]
                - pinv.rows[ui][vj]
                - pinv.rows[vi][uj]
                + pinv.rows[vi][vj]
            )
    return SquareMatrix(share_head), SquareMatrix(share_tail), SquareMatrix(kernel)


def partition_matrix(groups: Sequence[Sequence[int]]) -> SquareMatrix:
    """0/1 same-group indicator matrix of a partition of 0..n-1.

    Principal minors are 1 on partial transversals (at most one element
    per group) and 0 otherwise.
    """
    flat = [v for group in groups for v in group]
    n = len(flat)
    if sorted(flat) != list(range(n)):
        raise FormatError("groups must partition 0..n-1 without overlap")
    label = {}
    for g, group in enumerate(groups):
        for v in group:
            label[v] = g
    return SquareMatrix(
        [
            [ONE if label[i] == label[j] else ZERO for j in range(n)]
            for i in range(n)
        ]
    )


def banded_random(
    n: int,
    bandwidth: int,
    rank: Optional[int] = None,
    seed: int = 0,
    entry_range: int = 3,
) -> SquareMatrix:
    """Seeded random integer PSD matrix with zero entries beyond the band.

    Built as the Gram matrix of vectors supported on sliding coordinate
    windows, so entries vanish whenever the windows are disjoint
    (|i - j| > bandwidth).  ``rank`` narrows the window (it must not
    exceed bandwidth + 1), capping how many coordinates each vector uses.
    """
    if bandwidth >= n:
        raise IndexRangeError(f"bandwidth {bandwidth} must be below order {n}")
    if bandwidth < 0:
        raise IndexRangeError("bandwidth must be nonnegative")
    window = bandwidth + 1
    if rank is not None:
        if not 1 <= rank <= window:
            raise IndexRangeError(
                f"rank cap must lie in [1, bandwidth + 1] = [1, {window}]"
            )
        window = rank
    rng = random.Random(seed)
    vectors = []
    for i in range(n):
        coords = {}
        for offset in range(window):
            value = rng.randint(-entry_range, entry_range)
            if value == 0:
                value = 1
            coords[i + offset] = value
        vectors.append(coords)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            dot = 0
            vi, vj = vectors[i], vectors[j]
            if len(vj) < len(vi):
                vi, vj = vj, vi
            for col, val in vi.items():
                other = vj.get(col)
                if other is not None:
                    dot += val * other
            row.append(scalar(dot))
        rows.append(row)
    return SquareMatrix(rows)


def gram_random(n: int, dim: int, seed: int = 0, entry_range: int = 3) -> SquareMatrix:
    """Seeded random integer PSD Gram matrix of n vectors in dim coordinates."""
    rng = random.Random(seed)
    vectors = [
        [rng.randint(-entry_range, entry_range) for _ in range(dim)] for _ in range(n)
    ]
    return SquareMatrix(
        [
            [scalar(sum(a * b for a, b in zip(vectors[i], vectors[j])))
             for j in range(n)]
            for i in range(n)
        ]
    )
