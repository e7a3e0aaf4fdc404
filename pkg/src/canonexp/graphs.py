"""Labeled simple graphs: exhaustive enumeration and structural classification.

Everything here works on small vertex sets (hard cap 8): enumeration of all
graphs / trees, connectivity and 2-connectivity tests, articulation points,
block decomposition, and the signed sum over connected spanning subgraphs
that feeds the cluster coefficients.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from fractions import Fraction

MAX_VERTICES = 8


class SizeLimitError(ValueError):
    """Exhaustive enumeration requested beyond the supported size cap."""


def _norm_edge(a, b):
    a, b = int(a), int(b)
    if a == b:
        raise ValueError("self-loops are not allowed: (%d, %d)" % (a, b))
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class LabeledGraph:
    """Simple undirected graph on positive integer labels.

    ``vertices`` is a frozenset of labels, ``edges`` a frozenset of sorted
    (i, j) tuples.  Instances are immutable and hashable.
    """

    vertices: frozenset
    edges: frozenset

    def __post_init__(self):
        for v in self.vertices:
            if not isinstance(v, int) or v < 1:
                raise ValueError("vertex labels must be positive integers, got %r" % (v,))
        for e in self.edges:
            a, b = e
            if (a, b) != _norm_edge(a, b):
                raise ValueError("edge %r is not a sorted pair" % (e,))
            if a not in self.vertices or b not in self.vertices:
                raise ValueError("edge %r has an endpoint outside the vertex set" % (e,))

    @classmethod
    def of(cls, vertices, edges=()):
        vs = frozenset(int(v) for v in vertices)
        es = frozenset(_norm_edge(a, b) for (a, b) in edges)
        return cls(vs, es)

    @property
    def support(self):
        return self.vertices

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    def neighbors(self, v):
        return frozenset(b if a == v else a for (a, b) in self.edges if v in (a, b))

    def adjacency(self):
        adj = {v: set() for v in self.vertices}
        for (a, b) in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def induced(self, subset):
        sub = frozenset(subset)
        if not sub <= self.vertices:
            raise ValueError("subset is not contained in the vertex set")
        return LabeledGraph(sub, frozenset(e for e in self.edges if e[0] in sub and e[1] in sub))

    def remove_vertex(self, v):
        if v not in self.vertices:
            raise ValueError("vertex %r not in graph" % (v,))
        return self.induced(self.vertices - {v})

    def union(self, other):
        return LabeledGraph(self.vertices | other.vertices, self.edges | other.edges)

    def is_tree(self):
        return is_connected(self) and self.n_edges == self.n_vertices - 1

    def sorted_vertices(self):
        return sorted(self.vertices)

    def sorted_edges(self):
        return sorted(self.edges)


def is_connected(g: LabeledGraph) -> bool:
    """True iff every pair of vertices is joined by an edge path."""
    if not g.vertices:
        raise ValueError("connectivity is undefined for the empty graph")
    adj = g.adjacency()
    start = next(iter(g.vertices))
    seen = {start}
    stack = [start]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(g.vertices)


def articulation_points(g: LabeledGraph) -> frozenset:
    """Vertices whose removal disconnects g, by remove-and-test."""
    if not is_connected(g):
        raise ValueError("articulation points are defined for connected graphs only")
    if g.n_vertices < 2:
        raise ValueError("need at least 2 vertices")
    out = set()
    for v in g.vertices:
        h = g.remove_vertex(v)
        if h.vertices and not is_connected(h):
            out.add(v)
    return frozenset(out)


def is_two_connected(g: LabeledGraph) -> bool:
    """2-connected in the removal sense: the single edge K2 qualifies."""
    if g.n_vertices < 2 or not is_connected(g):
        return False
    for v in g.vertices:
        h = g.remove_vertex(v)
        if h.vertices and not is_connected(h):
            return False
    return True


def _check_cap(n, lo=1):
    n = int(n)
    if not lo <= n <= MAX_VERTICES:
        raise SizeLimitError("vertex count %d outside supported range [%d, %d]" % (n, lo, MAX_VERTICES))
    return n


def enumerate_graphs(n):
    """Yield every labeled simple graph on {1..n}, in a fixed order."""
    n = _check_cap(n)
    verts = frozenset(range(1, n + 1))
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    for mask in range(1 << len(pairs)):
        edges = frozenset(pairs[i] for i in range(len(pairs)) if mask >> i & 1)
        yield LabeledGraph(verts, edges)


def enumerate_connected(n):
    for g in enumerate_graphs(n):
        if is_connected(g):
            yield g


def enumerate_two_connected(n):
    _check_cap(n, lo=2)
    for g in enumerate_graphs(n):
        if is_two_connected(g):
            yield g


def count_connected(n) -> int:
    _check_cap(n)
    return sum(1 for _ in enumerate_connected(n))


def count_two_connected(n) -> int:
    _check_cap(n, lo=2)
    return sum(1 for _ in enumerate_two_connected(n))


def enumerate_trees(n):
    """Yield every labeled tree on {1..n} via Pruefer sequences (n^(n-2) total)."""
    n = _check_cap(n)
    verts = frozenset(range(1, n + 1))
    if n == 1:
        yield LabeledGraph(verts, frozenset())
        return
    if n == 2:
        yield LabeledGraph(verts, frozenset({(1, 2)}))
        return
    for seq in itertools.product(range(1, n + 1), repeat=n - 2):
        deg = [1] * (n + 1)
        for s in seq:
            deg[s] += 1
        heap = [v for v in range(1, n + 1) if deg[v] == 1]
        heapq.heapify(heap)
        edges = []
        for s in seq:
            leaf = heapq.heappop(heap)
            edges.append(_norm_edge(leaf, s))
            deg[s] -= 1
            if deg[s] == 1:
                heapq.heappush(heap, s)
        u = heapq.heappop(heap)
        v = heapq.heappop(heap)
        edges.append(_norm_edge(u, v))
        yield LabeledGraph(verts, frozenset(edges))


@dataclass(frozen=True)
class BlockTree:
    """Block decomposition: maximal 2-connected blocks glued at cut vertices."""

    blocks: tuple
    cut_vertices: frozenset
    incidence: tuple  # (block_index, cut_vertex) pairs

    def reunion(self) -> LabeledGraph:
        out = self.blocks[0]
        for b in self.blocks[1:]:
            out = out.union(b)
        return out


def block_decomposition(g: LabeledGraph) -> BlockTree:
    """Decompose a connected graph into its maximal 2-connected blocks."""
    if not is_connected(g):
        raise ValueError("block decomposition requires a connected graph")
    if g.n_edges == 0:
        b = (g,)
        return BlockTree(b, frozenset(), ())
    adj = {v: sorted(g.neighbors(v)) for v in g.vertices}
    disc, low = {}, {}
    edge_stack = []
    blocks = []
    counter = itertools.count()

    def dfs(u, parent):
        disc[u] = low[u] = next(counter)
        for w in adj[u]:
            if w == parent:
                continue
            if w not in disc:
                edge_stack.append(_norm_edge(u, w))
                dfs(w, u)
                low[u] = min(low[u], low[w])
                if low[w] >= disc[u]:
                    comp = []
                    while True:
                        e = edge_stack.pop()
                        comp.append(e)
                        if e == _norm_edge(u, w):
                            break
                    blocks.append(comp)
            elif disc[w] < disc[u]:
                edge_stack.append(_norm_edge(u, w))
                low[u] = min(low[u], disc[w])

    root = min(g.vertices)
    dfs(root, None)
    block_graphs = []
    for comp in blocks:
        vs = frozenset(v for e in comp for v in e)
        block_graphs.append(LabeledGraph(vs, frozenset(comp)))
    block_graphs.sort(key=lambda b: (b.sorted_vertices(), b.sorted_edges()))
    membership = {}
    for i, b in enumerate(block_graphs):
        for v in b.vertices:
            membership.setdefault(v, []).append(i)
    cuts = frozenset(v for v, bs in membership.items() if len(bs) >= 2)
    incidence = tuple(sorted((i, v) for v in cuts for i in membership[v]))
    return BlockTree(tuple(block_graphs), cuts, incidence)


def _adjacency_bitmasks(g: LabeledGraph):
    verts = g.sorted_vertices()
    idx = {v: i for i, v in enumerate(verts)}
    adj = [0] * len(verts)
    for (a, b) in g.edges:
        adj[idx[a]] |= 1 << idx[b]
        adj[idx[b]] |= 1 << idx[a]
    return adj


def signed_sum_adjacency(adj) -> int:
    """Sum of (-1)^edges over connected spanning subgraphs, from bitmask adjacency.

    Uses the subset (Moebius) recursion: with T(U) = 1 iff U induces no edge,
    C(W) = T(W) - sum over proper W1 < W containing the lowest bit of W of
    C(W1) * T(W \\ W1).
    """
    n = len(adj)
    size = 1 << n
    T = [1] * size
    for u in range(size):
        m = u
        while m:
            i = (m & -m).bit_length() - 1
            if adj[i] & u:
                T[u] = 0
                break
            m &= m - 1
    C = [0] * size
    for w in range(1, size):
        lowest = w & -w
        total = T[w]
        rest = w & ~lowest
        sub = rest
        # proper subsets w1 of w containing `lowest`
        while True:
            w1 = sub | lowest
            if w1 != w:
                comp = w & ~w1
                if T[comp]:
                    total -= C[w1]
            if sub == 0:
                break
            sub = (sub - 1) & rest
        C[w] = total
    return C[size - 1]


def signed_connected_spanning_sum(g: LabeledGraph) -> int:
    """Sum over connected spanning subgraphs H of g of (-1)^{|E(H)|}.

    Returns 0 when g is disconnected (no connected spanning subgraph).
    """
    if g.n_vertices > MAX_VERTICES:
        raise SizeLimitError("graph has %d vertices, cap is %d" % (g.n_vertices, MAX_VERTICES))
    if g.n_vertices == 0:
        raise ValueError("empty graph")
    return signed_sum_adjacency(_adjacency_bitmasks(g))


def signed_sum_bruteforce(g: LabeledGraph) -> int:
    """Independent oracle: direct enumeration of all edge subsets."""
    edges = g.sorted_edges()
    if len(edges) > 20:
        raise SizeLimitError("brute force capped at 20 edges, got %d" % len(edges))
    if g.n_vertices == 1:
        return 1  # the single empty subgraph
    total = 0
    for r in range(len(edges) + 1):
        for combo in itertools.combinations(edges, r):
            covered = set(v for e in combo for v in e)
            if covered != set(g.vertices):
                continue
            if is_connected(LabeledGraph(g.vertices, frozenset(combo))):
                total += (-1) ** r
    return total


def canonical_form(g: LabeledGraph):
    """Canonical edge tuple under label permutation; key for isomorphism memoisation."""
    verts = g.sorted_vertices()
    k = len(verts)
    if k > MAX_VERTICES:
        raise SizeLimitError("canonical form capped at %d vertices" % MAX_VERTICES)
    base = {v: i for i, v in enumerate(verts)}
    edges0 = [(base[a], base[b]) for (a, b) in g.edges]
    best = None
    for perm in itertools.permutations(range(k)):
        relab = tuple(sorted(tuple(sorted((perm[a], perm[b]))) for (a, b) in edges0))
        if best is None or relab < best:
            best = relab
    return (k, best)


def graph_to_text(g: LabeledGraph) -> str:
    """Canonical one-line text form: sorted vertices, then sorted 'i-j' edges."""
    vs = ",".join(str(v) for v in g.sorted_vertices())
    es = ",".join("%d-%d" % e for e in g.sorted_edges())
    return vs + ";" + es


def graph_from_text(line: str) -> LabeledGraph:
    vs_part, _, es_part = line.strip().partition(";")
    verts = [int(t) for t in vs_part.split(",") if t]
    edges = []
    for tok in es_part.split(","):
        if tok:
            a, _, b = tok.partition("-")
            edges.append((int(a), int(b)))
    return LabeledGraph.of(verts, edges)


def ursell_from_graph(g: LabeledGraph, index_factorial: int) -> Fraction:
    return Fraction(signed_connected_spanning_sum(g), index_factorial)
