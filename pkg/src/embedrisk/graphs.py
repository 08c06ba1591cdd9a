"""Undirected graphs, hop distances, couple labels and star packings.

Vertices are integers 0..n-1.  A "couple" is an unordered pair {u, v},
stored canonically as a tuple (u, v) with u < v.  Hop distances between
disconnected vertices are kept as an integer sentinel internally and
surfaced as math.inf, never as a large finite float, so threshold logic
on distances stays exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Graph",
    "DistanceMatrix",
    "StarPacking",
    "GraphSizeError",
    "DegenerateThresholdError",
    "all_couples",
    "couple_index_map",
    "complete_ary_tree",
    "path_graph",
    "star_graph",
    "random_tree",
    "all_pairs_distances",
    "true_label",
    "edge_labels",
    "max_disjoint_star_packing",
    "sphere_packing_number",
    "euclidean_plane_vmin_lower_bound",
    "read_edge_list",
    "write_edge_list",
    "tree_center",
]

UNREACHED = -1

# Packing number of the n-dimensional unit sphere at unit distance; only the
# planar value is wired because only 2-d Euclidean comparisons use it.
_SPHERE_PACKING = {2: 5}

DEFAULT_SIMILARITY_THRESHOLD = 1.5


class GraphSizeError(ValueError):
    """A requested graph would be too large to materialize."""


class DegenerateThresholdError(ValueError):
    """A dissimilarity equals the similarity threshold exactly."""


def all_couples(n: int) -> list[tuple[int, int]]:
    """All two-element vertex subsets of range(n) in canonical order."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def couple_index_map(n: int) -> dict[tuple[int, int], int]:
    return {c: k for k, c in enumerate(all_couples(n))}


def _canonical(u: int, v: int) -> tuple[int, int]:
    if u == v:
        raise ValueError(f"self-loop at vertex {u}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph on vertices 0..vertex_count-1."""

    vertex_count: int
    edges: frozenset[tuple[int, int]]
    _adj: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValueError("vertex_count must be positive")
        adj: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for (u, v) in self.edges:
            if not (0 <= u < v < self.vertex_count):
                raise ValueError(f"bad edge ({u}, {v})")
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))

    @staticmethod
    def from_edges(n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        return Graph(n, frozenset(_canonical(u, v) for u, v in edges))

    def adjacency(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def couple_count(self) -> int:
        n = self.vertex_count
        return n * (n - 1) // 2

    def has_edge(self, u: int, v: int) -> bool:
        return _canonical(u, v) in self.edges

    def is_forest(self) -> bool:
        return _forest_roots(self) is not None

    def is_tree(self) -> bool:
        return self.edge_count == self.vertex_count - 1 and self.is_forest()


def _forest_roots(g: Graph) -> list[int] | None:
    """Roots of a spanning forest, or None if the graph has a cycle."""
    seen = [False] * g.vertex_count
    roots = []
    for s in range(g.vertex_count):
        if seen[s]:
            continue
        roots.append(s)
        seen[s] = True
        stack = [(s, -1)]
        while stack:
            v, parent = stack.pop()
            for w in g.adjacency(v):
                if w == parent:
                    continue
                if seen[w]:
                    return None
                seen[w] = True
                stack.append((w, v))
    return roots


@dataclass(frozen=True)
class DistanceMatrix:
    """Exact hop counts for every vertex pair; UNREACHED marks no path."""

    hops: np.ndarray  # (n, n) int array, -1 where unreachable

    def value(self, i: int, j: int) -> float:
        h = int(self.hops[i, j])
        return math.inf if h == UNREACHED else float(h)

    @property
    def n(self) -> int:
        return self.hops.shape[0]


def complete_ary_tree(arity: int, levels: int, max_vertices: int = 2**26) -> Graph:
    """Rooted tree with `levels` levels, every internal vertex having `arity`
    children.  Level 1 is the root alone, so the vertex count is
    sum of arity**k for k in 0..levels-1."""
    if arity < 1 or levels < 1:
        raise ValueError("arity and levels must be >= 1")
    if arity == 1:
        count = levels
    else:
        count = (arity**levels - 1) // (arity - 1)
    if count > max_vertices:
        raise GraphSizeError(f"tree would have {count} vertices (limit {max_vertices})")
    edges = []
    next_id = 1
    frontier = [0]
    for _ in range(levels - 1):
        new_frontier = []
        for parent in frontier:
            for _ in range(arity):
                edges.append((parent, next_id))
                new_frontier.append(next_id)
                next_id += 1
        frontier = new_frontier
    return Graph.from_edges(count, edges)


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(leaves: int) -> Graph:
    """K_{1,leaves}: vertex 0 joined to `leaves` leaf vertices."""
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def random_tree(n: int, rng: np.random.Generator) -> Graph:
    """Uniform random labeled tree via a random Pruefer sequence."""
    if n == 1:
        return Graph(1, frozenset())
    if n == 2:
        return Graph.from_edges(2, [(0, 1)])
    prufer = rng.integers(0, n, size=n - 2)
    degree = np.ones(n, dtype=int)
    for v in prufer:
        degree[v] += 1
    edges = []
    import heapq

    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    for v in prufer:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, int(v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, int(v))
    u = heapq.heappop(leaves)
    w = heapq.heappop(leaves)
    edges.append((u, w))
    return Graph.from_edges(n, edges)


def all_pairs_distances(g: Graph) -> DistanceMatrix:
    """BFS hop counts from every source."""
    n = g.vertex_count
    hops = np.full((n, n), UNREACHED, dtype=np.int64)
    for s in range(n):
        hops[s, s] = 0
        queue = [s]
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            dv = hops[s, v]
            for w in g.adjacency(v):
                if hops[s, w] == UNREACHED:
                    hops[s, w] = dv + 1
                    queue.append(w)
    return DistanceMatrix(hops)


def true_label(
    dm: DistanceMatrix,
    couple: tuple[int, int],
    tau: float = DEFAULT_SIMILARITY_THRESHOLD,
) -> int:
    """+1 when the couple is similar (dissimilarity below tau), else -1.

    This is the single source of label truth in the package: +1 always
    means similar, and with the default tau an edge of the graph.
    """
    u, v = _canonical(*couple)
    d = dm.value(u, v)
    if d == tau:
        raise DegenerateThresholdError(f"d({u},{v}) == tau == {tau}")
    return 1 if d < tau else -1


def edge_labels(g: Graph, tau: float = DEFAULT_SIMILARITY_THRESHOLD) -> np.ndarray:
    """Labels over all_couples(n) in canonical order."""
    dm = all_pairs_distances(g)
    return np.array([true_label(dm, c, tau) for c in all_couples(g.vertex_count)], dtype=int)


def sphere_packing_number(dim: int) -> int:
    """Packing number of the dim-dimensional unit sphere at unit distance."""
    try:
        return _SPHERE_PACKING[dim]
    except KeyError:
        raise NotImplementedError(f"packing number not wired for dimension {dim}")


# ----------------------------------------------------------------------
# Maximum vertex-disjoint star packing
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class StarPacking:
    count: int
    exact: bool
    method: str


def max_disjoint_star_packing(g: Graph, k: int, exhaustive_limit: int = 40) -> StarPacking:
    """Maximum number of vertex-disjoint K_{1,k} stars (a center plus k of
    its neighbors) in g.

    Exact via dynamic programming on forests of any size and via
    branch-and-bound otherwise up to `exhaustive_limit` vertices; larger
    non-forests get a greedy lower bound flagged as inexact.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    roots = _forest_roots(g)
    if roots is not None:
        return StarPacking(_star_packing_forest(g, k, roots), True, "tree-dp")
    if g.vertex_count <= exhaustive_limit:
        return StarPacking(_star_packing_exhaustive(g, k), True, "branch-and-bound")
    return StarPacking(_star_packing_greedy(g, k), False, "greedy-lower-bound")


def _star_packing_forest(g: Graph, k: int, roots: list[int]) -> int:
    total = 0
    for root in roots:
        free, used, _ = _tree_dp(g, k, root)
        total += max(free, used)
    return total


def _tree_dp(g: Graph, k: int, root: int) -> tuple[int, int, int]:
    """Returns (free, used, reserve) for the subtree at `root`.

    free     best count with the vertex in no star (parent may take it
             as a leaf),
    used     best count with the vertex inside a star contained in its
             subtree,
    reserve  best count with the vertex set up as a center whose star
             will take the parent as its k-th leaf; that star is counted
             by the parent, and k-1 children are already consumed.
    """
    NEG = -(10**9)
    order = []
    parent = {root: -1}
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        for w in g.adjacency(v):
            if w != parent[v]:
                parent[w] = v
                stack.append(w)
    free_ = {}
    used_ = {}
    reserve_ = {}
    children: dict[int, list[int]] = {v: [] for v in order}
    for v in order:
        if parent[v] != -1:
            children[parent[v]].append(v)
    for v in reversed(order):
        ch = children[v]
        base = 0
        costs = []  # penalty for demanding a child stay free (leaf duty)
        best_complete = NEG  # take one child's reserved star, v as its leaf
        for c in ch:
            b = max(free_[c], used_[c])
            base += b
            costs.append(b - free_[c])
            if reserve_[c] > NEG:
                best_complete = max(best_complete, reserve_[c] + 1 - b)
        costs.sort()
        free_[v] = base
        used = NEG
        if len(ch) >= k:
            used = max(used, base - sum(costs[:k]) + 1)
        if best_complete > NEG:
            used = max(used, base + best_complete)
        used_[v] = used
        reserve_[v] = base - sum(costs[: k - 1]) if len(ch) >= k - 1 else NEG
    return free_[root], used_[root], reserve_[root]


def _star_packing_greedy(g: Graph, k: int) -> int:
    used = bytearray(g.vertex_count)
    count = 0
    # low-degree centers first: they have the fewest alternatives
    for v in sorted(range(g.vertex_count), key=g.degree):
        if used[v]:
            continue
        nbrs = [u for u in g.adjacency(v) if not used[u]]
        if len(nbrs) >= k:
            used[v] = 1
            for u in nbrs[:k]:
                used[u] = 1
            count += 1
    return count


def _star_packing_exhaustive(g: Graph, k: int) -> int:
    n = g.vertex_count
    used = bytearray(n)
    best = _star_packing_greedy(g, k)

    def upper_bound(count: int) -> int:
        nfree = n - sum(used)
        return count + nfree // (k + 1)

    def rec(start: int, count: int) -> None:
        nonlocal best
        if count > best:
            best = count
        if upper_bound(count) <= best:
            return
        for v in range(start, n):
            if used[v]:
                continue
            nbrs = [u for u in g.adjacency(v) if not used[u]]
            if len(nbrs) < k:
                continue
            for leaves in combinations(nbrs, k):
                used[v] = 1
                for u in leaves:
                    used[u] = 1
                rec(v + 1, count + 1)
                used[v] = 0
                for u in leaves:
                    used[u] = 0

    rec(0, 0)
    return best


def euclidean_plane_vmin_lower_bound(g: Graph) -> StarPacking:
    """Lower bound on the margin-violation count forced on any embedding of
    g into a ball of the Euclidean plane: the number of vertex-disjoint
    stars with sphere_packing_number(2) + 1 = 6 leaves."""
    return max_disjoint_star_packing(g, sphere_packing_number(2) + 1)


# ----------------------------------------------------------------------
# Tree helpers and file I/O
# ----------------------------------------------------------------------


def tree_center(g: Graph) -> int:
    """A center vertex of a tree (minimizes eccentricity; lowest id on ties)."""
    if not g.is_tree():
        raise ValueError("tree_center needs a tree")
    n = g.vertex_count
    if n == 1:
        return 0
    degree = [g.degree(v) for v in range(n)]
    layer = [v for v in range(n) if degree[v] == 1]
    removed = [False] * n
    remaining = n
    while remaining > 2:
        nxt = []
        for v in layer:
            removed[v] = True
            remaining -= 1
            for w in g.adjacency(v):
                if not removed[w]:
                    degree[w] -= 1
                    if degree[w] == 1:
                        nxt.append(w)
        layer = nxt
    return min(v for v in range(n) if not removed[v])


def write_edge_list(g: Graph, path) -> None:
    """Edge-list text format: one `u v` pair per line, `#` comments."""
    with open(path, "w") as fh:
        fh.write(f"# vertices {g.vertex_count}\n")
        for (u, v) in sorted(g.edges):
            fh.write(f"{u} {v}\n")


def read_edge_list(path) -> Graph:
    edges = []
    declared_n = None
    max_v = -1
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# vertices"):
                declared_n = int(line.split()[-1])
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"bad edge line: {line!r}")
            u, v = int(parts[0]), int(parts[1])
            edges.append((u, v))
            max_v = max(max_v, u, v)
    n = declared_n if declared_n is not None else max_v + 1
    return Graph.from_edges(n, edges)
