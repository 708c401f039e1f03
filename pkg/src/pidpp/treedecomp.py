"""Tree decompositions: construction, validation, and the nice form.

The heuristic builder eliminates vertices greedily by minimum fill-in,
which is deterministic and good enough at desk scale; the exact builder
searches elimination orders with memoization and is capped at 20 vertices.
Downstream dynamic programming only needs validity, never optimality.

A nice decomposition is rooted, has empty root and leaf bags, and types
every node as leaf / introduce / forget / join.  Each node also carries an
ordering of its cumulative vertex set, split as (settled, bag): settled
vertices come first and keep their order forever; introduced vertices
append to the bag; forgotten vertices move to the end of the settled part.
A join adopts its left child's bag order, so only right children ever need
reordering corrections in the DP.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import (
    CapExceededError,
    FormatError,
    InvalidDecompositionError,
)
from .matrix import SparsityGraph

EXACT_MODE_CAP = 20


@dataclass(frozen=True)
class TreeDecomposition:
    """Bags indexed by node id plus an undirected tree on the node ids."""

    n: int
    bags: tuple  # tuple of frozensets, index = node id
    tree_edges: frozenset  # frozenset of (a, b) node-id pairs, a < b

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=1) - 1

    def node_neighbors(self, node: int) -> list:
        out = []
        for a, b in sorted(self.tree_edges):
            if a == node:
                out.append(b)
            elif b == node:
                out.append(a)
        return sorted(out)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violation: Optional[str] = None
    detail: Optional[str] = None


@dataclass
class NiceNode:
    kind: str  # "leaf" | "introduce" | "forget" | "join"
    bag: tuple  # bag in its ordering (introduction order)
    vertex: Optional[int]  # introduced/forgotten vertex, None otherwise
    children: tuple  # child node ids
    settled: tuple = ()  # vertices below the bag in the node ordering


@dataclass
class NiceTreeDecomposition:
    """Rooted, binary, typed decomposition with per-node orderings."""

    n: int
    nodes: list  # list of NiceNode, index = node id
    root: int

    @property
    def width(self) -> int:
        return max((len(node.bag) for node in self.nodes), default=1) - 1

    def cumulative(self, node_id: int) -> tuple:
        node = self.nodes[node_id]
        return node.settled + node.bag

    def postorder(self) -> list:
        order, stack = [], [(self.root, False)]
        while stack:
            node_id, expanded = stack.pop()
            if expanded:
                order.append(node_id)
                continue
            stack.append((node_id, True))
            for child in self.nodes[node_id].children:
                stack.append((child, False))
        return order


# -- construction ---------------------------------------------------------------


def _fill_cost(adj, v) -> int:
    neigh = list(adj[v])
    cost = 0
    for i in range(len(neigh)):
        for j in range(i + 1, len(neigh)):
            if neigh[j] not in adj[neigh[i]]:
                cost += 1
    return cost


def _min_fill_order(graph: SparsityGraph) -> list:
    adj = graph.adjacency()
    alive = set(range(graph.n))
    order = []
    while alive:
        best = min(alive, key=lambda v: (_fill_cost(adj, v), v))
        order.append(best)
        neigh = list(adj[best])
        for i in range(len(neigh)):
            for j in range(i + 1, len(neigh)):
                adj[neigh[i]].add(neigh[j])
                adj[neigh[j]].add(neigh[i])
        for u in neigh:
            adj[u].discard(best)
        adj[best] = set()
        alive.discard(best)
    return order


def _exact_order(graph: SparsityGraph) -> list:
    """Optimal-width elimination order by memoized search over subsets."""
    n = graph.n
    if n > EXACT_MODE_CAP:
        raise CapExceededError(
            f"exact decomposition capped at {EXACT_MODE_CAP} vertices, got {n}"
        )
    base = [frozenset(graph.neighbors(v)) for v in range(n)]
    full = (1 << n) - 1

    def elim_degree(v: int, gone: int) -> int:
        # Neighbors of v in the graph with `gone` eliminated: vertices
        # reachable from v through eliminated vertices only.
        seen = 1 << v
        stack = [v]
        out = 0
        while stack:
            u = stack.pop()
            for w in base[u]:
                bit = 1 << w
                if seen & bit:
                    continue
                seen |= bit
                if gone >> w & 1:
                    stack.append(w)
                else:
                    out += 1
        return out

    from functools import lru_cache

    @lru_cache(maxsize=None)
    def best_width(gone: int) -> int:
        if gone == full:
            return -1
        best = n + 1
        for v in range(n):
            if gone >> v & 1:
                continue
            d = elim_degree(v, gone)
            if d >= best:
                continue
            rest = best_width(gone | (1 << v))
            best = min(best, max(d, rest))
        return best

    order = []
    gone = 0
    while gone != full:
        target = best_width(gone)
        for v in range(n):
            if gone >> v & 1:
                continue
            d = elim_degree(v, gone)
            if d <= target and max(d, best_width(gone | (1 << v))) == target:
                order.append(v)
                gone |= 1 << v
                break
    return order


def _decomposition_from_order(graph: SparsityGraph, order: list) -> TreeDecomposition:
    n = graph.n
    adj = graph.adjacency()
    position = {v: i for i, v in enumerate(order)}
    bags = []
    for v in order:
        bag = {v} | set(adj[v])
        bags.append(frozenset(bag))
        neigh = list(adj[v])
        for i in range(len(neigh)):
            for j in range(i + 1, len(neigh)):
                adj[neigh[i]].add(neigh[j])
                adj[neigh[j]].add(neigh[i])
        for u in neigh:
            adj[u].discard(v)
        adj[v] = set()
    edges = set()
    for idx, v in enumerate(order):
        later = [u for u in bags[idx] if u != v and position[u] > idx]
        if later:
            parent = min(later, key=lambda u: position[u])
            edges.add(tuple(sorted((idx, position[parent]))))
    if n == 0:
        return TreeDecomposition(n=0, bags=(frozenset(),), tree_edges=frozenset())
    # Connect any remaining forest components (isolated vertices etc.).
    parent_of = list(range(len(bags)))

    def find(x):
        while parent_of[x] != x:
            parent_of[x] = parent_of[parent_of[x]]
            x = parent_of[x]
        return x

    for a, b in edges:
        parent_of[find(a)] = find(b)
    for idx in range(1, len(bags)):
        if find(idx) != find(0):
            edges.add(tuple(sorted((idx - 1, idx))))
            parent_of[find(idx)] = find(idx - 1)
    return TreeDecomposition(n=n, bags=tuple(bags), tree_edges=frozenset(edges))


def decompose(graph: SparsityGraph, mode: str = "heuristic") -> TreeDecomposition:
    """Build a valid tree decomposition of the sparsity graph.

    ``heuristic`` eliminates greedily by minimum fill-in; ``exact`` finds
    an optimal-width elimination order (capped at 20 vertices).
    """
    if mode == "heuristic":
        order = _min_fill_order(graph)
    elif mode == "exact":
        order = _exact_order(graph)
    else:
        raise FormatError(f"unknown decomposition mode {mode!r}")
    return _decomposition_from_order(graph, order)


# -- validation -------------------------------------------------------------------


def validate(graph: SparsityGraph, decomposition: TreeDecomposition) -> ValidationReport:
    """Check the three defining conditions, reporting the first violation."""
    bags = decomposition.bags
    covered = set()
    for bag in bags:
        covered |= bag
    missing = set(range(graph.n)) - covered
    if missing:
        return ValidationReport(
            ok=False, violation="vertex uncovered", detail=f"vertices {sorted(missing)}"
        )
    for u, v in sorted(graph.edges):
        if not any(u in bag and v in bag for bag in bags):
            return ValidationReport(
                ok=False, violation="edge uncovered", detail=f"edge ({u}, {v})"
            )
    # Connectivity of each vertex's occurrence set in the tree.
    adj = {i: [] for i in range(len(bags))}
    for a, b in decomposition.tree_edges:
        adj[a].append(b)
        adj[b].append(a)
    for v in range(graph.n):
        holders = [i for i, bag in enumerate(bags) if v in bag]
        if not holders:
            continue
        seen = {holders[0]}
        stack = [holders[0]]
        holder_set = set(holders)
        while stack:
            cur = stack.pop()
            for nxt in adj[cur]:
                if nxt in holder_set and nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if seen != holder_set:
            return ValidationReport(
                ok=False,
                violation="subtree disconnected",
                detail=f"vertex {v} occurs in components {sorted(seen)} vs {sorted(holder_set)}",
            )
    return ValidationReport(ok=True)


# -- nice form --------------------------------------------------------------------


class _NiceBuilder:
    def __init__(self, n: int):
        self.n = n
        self.nodes: list = []

    def add(self, kind, bag, vertex, children, settled) -> int:
        self.nodes.append(
            NiceNode(
                kind=kind,
                bag=tuple(bag),
                vertex=vertex,
                children=tuple(children),
                settled=tuple(settled),
            )
        )
        return len(self.nodes) - 1

    def leaf(self) -> int:
        return self.add("leaf", (), None, (), ())

    def introduce(self, child: int, v: int) -> int:
        node = self.nodes[child]
        return self.add("introduce", node.bag + (v,), v, (child,), node.settled)

    def forget(self, child: int, v: int) -> int:
        node = self.nodes[child]
        bag = tuple(u for u in node.bag if u != v)
        return self.add("forget", bag, v, (child,), node.settled + (v,))

    def join(self, left: int, right: int) -> int:
        lnode, rnode = self.nodes[left], self.nodes[right]
        if set(lnode.bag) != set(rnode.bag):
            raise InvalidDecompositionError("join children have different bags")
        return self.add(
            "join", lnode.bag, None, (left, right), lnode.settled + rnode.settled
        )

    def chain_to_bag(self, node_id: int, target: Iterable[int]) -> int:
        """Forget everything outside ``target``, then introduce the rest."""
        target = set(target)
        current = set(self.nodes[node_id].bag)
        for v in sorted(current - target):
            node_id = self.forget(node_id, v)
        for v in sorted(target - current):
            node_id = self.introduce(node_id, v)
        return node_id


def make_nice(
    decomposition: TreeDecomposition, graph: Optional[SparsityGraph] = None
) -> NiceTreeDecomposition:
    """Transform a valid decomposition into an equivalent nice one.

    Width is preserved exactly; joins are binary; the node count stays
    within O(width * n).  When ``graph`` is given the input is validated
    first.
    """
    if graph is not None:
        report = validate(graph, decomposition)
        if not report.ok:
            raise InvalidDecompositionError(f"{report.violation}: {report.detail}")
    bags = decomposition.bags
    builder = _NiceBuilder(decomposition.n)
    adj = {i: decomposition.node_neighbors(i) for i in range(len(bags))}
    root_bag_node = 0

    def build(node: int, parent: Optional[int]) -> int:
        children = [c for c in adj[node] if c != parent]
        if not children:
            start = builder.leaf()
            return builder.chain_to_bag(start, bags[node])
        arms = []
        for child in children:
            sub = build(child, node)
            arms.append(builder.chain_to_bag(sub, bags[node]))
        while len(arms) > 1:
            merged = builder.join(arms[0], arms[1])
            arms = [merged] + arms[2:]
        return arms[0]

    top = build(root_bag_node, None)
    root = builder.chain_to_bag(top, ())
    if builder.nodes[root].kind != "forget":
        # Empty-bag input tree: materialize an explicit empty root.
        if builder.nodes[root].kind != "leaf":
            raise InvalidDecompositionError("root construction failed")
    return NiceTreeDecomposition(n=decomposition.n, nodes=builder.nodes, root=root)


def check_nice(nice: NiceTreeDecomposition) -> ValidationReport:
    """Structural self-check of a nice decomposition's invariants."""
    nodes = nice.nodes
    root = nice.root
    if nodes[root].bag:
        return ValidationReport(ok=False, violation="root bag not empty")
    seen_union: set = set()
    for node_id in nice.postorder():
        node = nodes[node_id]
        bag = set(node.bag)
        kids = node.children
        if node.kind == "leaf":
            if bag or kids:
                return ValidationReport(ok=False, violation="bad leaf", detail=str(node_id))
        elif node.kind == "introduce":
            child = nodes[kids[0]]
            if set(child.bag) | {node.vertex} != bag or node.vertex in child.bag:
                return ValidationReport(ok=False, violation="bad introduce", detail=str(node_id))
        elif node.kind == "forget":
            child = nodes[kids[0]]
            if set(child.bag) - {node.vertex} != bag or node.vertex not in child.bag:
                return ValidationReport(ok=False, violation="bad forget", detail=str(node_id))
        elif node.kind == "join":
            left, right = (nodes[k] for k in kids)
            if set(left.bag) != bag or set(right.bag) != bag:
                return ValidationReport(ok=False, violation="bad join", detail=str(node_id))
        else:
            return ValidationReport(ok=False, violation="unknown kind", detail=node.kind)
        cumulative = set(node.settled) | bag
        for k in kids:
            child_cumulative = set(nodes[k].settled) | set(nodes[k].bag)
            if not child_cumulative <= cumulative:
                return ValidationReport(ok=False, violation="cumulative not monotone")
        seen_union |= cumulative
    if seen_union != set(range(nice.n)):
        return ValidationReport(
            ok=False,
            violation="cumulative root set incomplete",
            detail=f"{sorted(seen_union)} vs n={nice.n}",
        )
    return ValidationReport(ok=True)


def to_plain(nice: NiceTreeDecomposition) -> TreeDecomposition:
    """Forget the node types, keeping bags and tree shape."""
    edges = set()
    for node_id, node in enumerate(nice.nodes):
        for child in node.children:
            edges.add(tuple(sorted((node_id, child))))
    return TreeDecomposition(
        n=nice.n,
        bags=tuple(frozenset(node.bag) for node in nice.nodes),
        tree_edges=frozenset(edges),
    )


# -- serialization ------------------------------------------------------------------


def format_decomposition(nice: NiceTreeDecomposition) -> str:
    """One line per node: ``id kind parent bag-members...`` (1-based vertices)."""
    parent = [-1] * len(nice.nodes)
    for node_id, node in enumerate(nice.nodes):
        for child in node.children:
            parent[child] = node_id
    lines = [f"# n={nice.n} root={nice.root}"]
    for node_id, node in enumerate(nice.nodes):
        members = " ".join(str(v + 1) for v in node.bag)
        lines.append(f"{node_id} {node.kind} {parent[node_id]} {members}".rstrip())
    return "\n".join(lines) + "\n"


def parse_decomposition(text: str) -> NiceTreeDecomposition:
    header = None
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if header is None:
                header = line
            continue
        rows.append(line.split())
    if header is None or "n=" not in header:
        raise FormatError("decomposition text needs a '# n=... root=...' header")
    fields = dict(
        part.split("=") for part in header[1:].split() if "=" in part
    )
    n = int(fields["n"])
    root = int(fields["root"])
    nodes: list = [None] * len(rows)
    children = {i: [] for i in range(len(rows))}
    parents = {}
    for row in rows:
        node_id, kind, parent = int(row[0]), row[1], int(row[2])
        bag = tuple(int(tok) - 1 for tok in row[3:])
        nodes[node_id] = (kind, bag)
        parents[node_id] = parent
        if parent >= 0:
            children[parent].append(node_id)
    builder_nodes = []
    for node_id, (kind, bag) in enumerate(nodes):
        vertex = None
        kids = tuple(children[node_id])
        builder_nodes.append(
            NiceNode(kind=kind, bag=bag, vertex=vertex, children=kids, settled=())
        )
    # Recover vertices and settled sets bottom-up.
    nice = NiceTreeDecomposition(n=n, nodes=builder_nodes, root=root)
    for node_id in nice.postorder():
        node = builder_nodes[node_id]
        if node.kind == "introduce":
            child = builder_nodes[node.children[0]]
            extra = set(node.bag) - set(child.bag)
            node.vertex = extra.pop() if extra else None
            node.settled = child.settled
        elif node.kind == "forget":
            child = builder_nodes[node.children[0]]
            extra = set(child.bag) - set(node.bag)
            node.vertex = extra.pop() if extra else None
            node.settled = child.settled + ((node.vertex,) if node.vertex is not None else ())
        elif node.kind == "join":
            left, right = (builder_nodes[k] for k in node.children)
            node.settled = left.settled + right.settled
    return nice
