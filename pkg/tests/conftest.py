"""Shared generators for the test suite.

Everything is seeded: a test that fails once fails every time.
"""

from __future__ import annotations

import random

from pidpp import SquareMatrix, scalar


def random_rational_matrix(n, rng, num_range=6, den_range=4, zero_chance=0.15):
    rows = []
    for _ in range(n):
        row = []
        for _ in range(n):
            if rng.random() < zero_chance:
                row.append(scalar(0))
            else:
                row.append(scalar(rng.randint(-num_range, num_range),
                                  rng.randint(1, den_range)))
        rows.append(row)
    return SquareMatrix(rows)


def random_integer_matrix(n, rng, lo=-3, hi=3, zero_chance=0.2):
    rows = []
    for _ in range(n):
        row = []
        for _ in range(n):
            if rng.random() < zero_chance:
                row.append(scalar(0))
            else:
                row.append(scalar(rng.randint(lo, hi)))
        rows.append(row)
    return SquareMatrix(rows)


def random_psd(n, dim, rng):
    """Random integer Gram matrix of n vectors with dim coordinates."""
    vectors = [[rng.randint(-3, 3) for _ in range(dim)] for _ in range(n)]
    return SquareMatrix(
        [
            [scalar(sum(a * b for a, b in zip(vectors[i], vectors[j])))
             for j in range(n)]
            for i in range(n)
        ]
    )


def random_pattern_matrix(n, allowed_edges, rng, lo=-3, hi=3,
                          density=0.75, diag_chance=0.9):
    """Random matrix whose off-diagonal support stays inside allowed_edges."""
    rows = [[scalar(0)] * n for _ in range(n)]
    for i in range(n):
        if rng.random() < diag_chance:
            rows[i][i] = scalar(rng.randint(lo, hi))
    for i, j in allowed_edges:
        if rng.random() < density:
            rows[i][j] = scalar(rng.randint(lo, hi))
        if rng.random() < density:
            rows[j][i] = scalar(rng.randint(lo, hi))
    return SquareMatrix(rows)


def band_edges(n, bandwidth):
    return [
        (i, j)
        for i in range(n)
        for j in range(i + 1, min(n, i + bandwidth + 1))
    ]


def block_edges(n, rng, max_block=3):
    """Edges of a random partition of range(n) into cliques."""
    vertices = list(range(n))
    rng.shuffle(vertices)
    edges = []
    at = 0
    while at < n:
        size = rng.randint(1, max_block)
        block = vertices[at:at + size]
        for a in range(len(block)):
            for b in range(a + 1, len(block)):
                edges.append((min(block[a], block[b]), max(block[a], block[b])))
        at += size
    return edges


def random_tree_edges(n, rng):
    return [(rng.randrange(v), v) for v in range(1, n)]
