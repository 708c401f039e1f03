"""Directed and bipartite graph inputs for the fixture generators.

File format: the first line is ``n m`` for digraphs or ``nL nR m`` for
bipartite graphs, followed by one ``u v`` edge per line, all 1-based.
``#`` starts a comment line.  In memory everything is 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import FormatError, IndexRangeError


@dataclass(frozen=True)
class DirectedGraphSpec:
    """A simple directed graph on vertices 0..n-1."""

    n: int
    edges: tuple  # tuple of (tail, head) pairs, 0-based

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise IndexRangeError(f"edge ({u},{v}) out of range")
            if (u, v) in seen:
                raise FormatError(f"duplicate edge ({u},{v})")
            seen.add((u, v))


@dataclass(frozen=True)
class BipartiteGraphSpec:
    """A bipartite graph with left part X (size nx) and right part Y (size ny)."""

    nx: int
    ny: int
    edges: tuple  # tuple of (x, y) pairs, 0-based within each side

    def __post_init__(self):
        seen = set()
        for x, y in self.edges:
            if not (0 <= x < self.nx and 0 <= y < self.ny):
                raise IndexRangeError(f"edge ({x},{y}) out of range")
            if (x, y) in seen:
                raise FormatError(f"duplicate edge ({x},{y})")
            seen.add((x, y))


def _data_lines(text: str) -> list:
    return [
        line.strip()
        for line in text.splitlines()
        if line.strip() and not line.strip().startswith("#")
    ]


def parse_digraph_text(text: str) -> DirectedGraphSpec:
    lines = _data_lines(text)
    if not lines:
        raise FormatError("empty graph text")
    header = lines[0].split()
    if len(header) != 2:
        raise FormatError(f"digraph header must be 'n m', got {lines[0]!r}")
    n, m = int(header[0]), int(header[1])
    if len(lines) != m + 1:
        raise FormatError(f"expected {m} edges, found {len(lines) - 1}")
    edges = []
    for line in lines[1:]:
        u, v = (int(tok) for tok in line.split())
        edges.append((u - 1, v - 1))
    return DirectedGraphSpec(n=n, edges=tuple(edges))


def parse_bipartite_text(text: str) -> BipartiteGraphSpec:
    lines = _data_lines(text)
    if not lines:
        raise FormatError("empty graph text")
    header = lines[0].split()
    if len(header) != 3:
        raise FormatError(f"bipartite header must be 'nL nR m', got {lines[0]!r}")
    nx, ny, m = (int(tok) for tok in header)
    if len(lines) != m + 1:
        raise FormatError(f"expected {m} edges, found {len(lines) - 1}")
    edges = []
    for line in lines[1:]:
        x, y = (int(tok) for tok in line.split())
        edges.append((x - 1, y - 1))
    return BipartiteGraphSpec(nx=nx, ny=ny, edges=tuple(edges))


def format_digraph_text(graph: DirectedGraphSpec) -> str:
    lines = [f"{graph.n} {len(graph.edges)}"]
    lines.extend(f"{u + 1} {v + 1}" for u, v in graph.edges)
    return "\n".join(lines) + "\n"


def format_bipartite_text(graph: BipartiteGraphSpec) -> str:
    lines = [f"{graph.nx} {graph.ny} {len(graph.edges)}"]
    lines.extend(f"{x + 1} {y + 1}" for x, y in graph.edges)
    return "\n".join(lines) + "\n"
