"""Graph machinery for the cluster-derivative bounds: connected partitions,
exact-n proper colorings, spanning-tree counts, and the combinatorial
estimate chain tying them together.  All counts are exact Python integers
(Fractions where a 1/n shows up)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .model import DualInteractionGraph

PARTITION_NODE_CAP = 10
ESTIMATE_WEIGHT_CAP = 7


@dataclass(frozen=True)
class SimpleGraph:
    n: int
    edges: frozenset

    def __post_init__(self):
        es = set()
        for a, b in self.edges:
            if a == b:
                raise ValueError("no self loops")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError("edge endpoint out of range")
            es.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(es))

    def degree(self, v: int) -> int:
        return sum(1 for a, b in self.edges if v in (a, b))

    def adjacency(self) -> list:
        adj = [set() for _ in range(self.n)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def is_connected_subset(self, nodes) -> bool:
        nodes = set(nodes)
        if not nodes:
            return False
        adj = self.adjacency()
        seen = {next(iter(nodes))}
        stack = list(seen)
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w in nodes and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen == nodes

    def is_connected(self) -> bool:
        return self.is_connected_subset(range(self.n))


@dataclass(frozen=True)
class Cluster:
    """Multiset of Hamiltonian-term indices."""

    multiplicities: tuple  # sorted tuple of (term index, mu >= 1)

    def __post_init__(self):
        mu = tuple(sorted((int(a), int(m)) for a, m in self.multiplicities))
        if any(m < 1 for _, m in mu):
            raise ValueError("multiplicities must be >= 1")
        object.__setattr__(self, "multiplicities", mu)

    @property
    def weight(self) -> int:
        return sum(m for _, m in self.multiplicities)

    @property
    def factorial(self) -> int:
        out = 1
        for _, m in self.multiplicities:
            out *= math.factorial(m)
        return out

    @property
    def support(self) -> frozenset:
        return frozenset(a for a, _ in self.multiplicities)

    def exponent_key(self) -> tuple:
        return self.multiplicities


def interaction_graph_of_cluster(w: Cluster, g: DualInteractionGraph) -> SimpleGraph:
    """One node per multiset copy; edges between copies whose terms share
    support.  Copies of the same term always overlap with themselves."""
    nodes = []
    for a, m in w.multiplicities:
        nodes.extend([a] * m)
    edges = set()
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            if nodes[i] == nodes[j] or g.supports[nodes[i]] & g.supports[nodes[j]]:
                edges.add((i, j))
    return SimpleGraph(len(nodes), frozenset(edges))


def enumerate_set_partitions(items):
    """All set partitions of a list, as lists of lists."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in enumerate_set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def enumerate_connected_partitions(g: SimpleGraph):
    """Partitions of the nodes into blocks each inducing a connected subgraph."""
    if g.n > PARTITION_NODE_CAP:
        raise ValueError(f"{g.n} nodes exceed partition cap {PARTITION_NODE_CAP}")
    out = []
    for part in enumerate_set_partitions(range(g.n)):
        if all(g.is_connected_subset(b) for b in part):
            out.append([frozenset(b) for b in part])
    return out


def quotient_graph(g: SimpleGraph, blocks) -> SimpleGraph:
    """Blocks as nodes; edge where any cross edge of g connects two blocks."""
    idx = {}
    for i, b in enumerate(blocks):
        for v in b:
            idx[v] = i
    edges = set()
    for a, b in g.edges:
        if idx[a] != idx[b]:
            edges.add((min(idx[a], idx[b]), max(idx[a], idx[b])))
    return SimpleGraph(len(blocks), frozenset(edges))


@lru_cache(maxsize=None)
def _chromatic_poly(n: int, edges: frozenset) -> tuple:
    """Coefficients (low order first) of the chromatic polynomial, by
    deletion-contraction; exact integers."""
    if not edges:
        out = [0] * (n + 1)
        out[n] = 1
        return tuple(out)
    a, b = next(iter(sorted(edges)))
    deleted = frozenset(e for e in edges if e != (a, b))
    # contract b into a and relabel nodes above b down by one
    def relabel(v):
        if v == b:
            return a
        return v - 1 if v > b else v
    contracted = set()
    for u, v in edges:
        uu, vv = relabel(u), relabel(v)
        if uu != vv:
            contracted.add((min(uu, vv), max(uu, vv)))
    p_del = _chromatic_poly(n, deleted)
    p_con = _chromatic_poly(n - 1, frozenset(contracted))
    out = list(p_del)
    for i, c in enumerate(p_con):
        out[i] -= c
    return tuple(out)


def chromatic_polynomial(g: SimpleGraph, x: int) -> int:
    coeffs = _chromatic_poly(g.n, g.edges)
    return sum(c * x**i for i, c in enumerate(coeffs))


def chi_star(n: int, g: SimpleGraph) -> int:
    """Proper colorings using exactly n colors (inclusion-exclusion over
    the chromatic polynomial)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return sum(
        (-1) ** (n - j) * math.comb(n, j) * chromatic_polynomial(g, j)
        for j in range(n + 1)
    )


def spanning_tree_count(g: SimpleGraph) -> int:
    """Matrix-Tree theorem with exact integer (Bareiss) determinant."""
    if g.n == 1:
        return 1
    if not g.is_connected():
        return 0
    lap = [[0] * g.n for _ in range(g.n)]
    for a, b in g.edges:
        lap[a][a] += 1
        lap[b][b] += 1
        lap[a][b] -= 1
        lap[b][a] -= 1
    m = [row[:-1] for row in lap[:-1]]
    n = len(m)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for r in range(k + 1, n):
                if m[r][k] != 0:
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[-1][-1]


def coloring_weight(g: SimpleGraph) -> Fraction:
    """sum_{n=1}^{|V|} (-1)^{n-1}/n chi*(n, g) -- the scalar multiplying the
    derivative product of one connected partition block structure in the
    logarithm's cluster derivative."""
    return sum(
        (Fraction((-1) ** (n - 1), n)) * chi_star(n, g) for n in range(1, g.n + 1)
    )


def estimate_chain(w: Cluster, g: DualInteractionGraph) -> dict:
    """The combinatorial estimate chain for one cluster:

        sum_B |sum_n (-1)^n/n chi*(n, Gra(B))|
            <= 2^{|W|-1} tau(Gra(W))
            <= 2^{|W|-1} prod_a max(deg a, 1)
            <= W! (2e(1+d))^{|W|+1}

    Left and middle quantities exact; the final comparison is float.
    The degree product gets max(.,1) so the single-node graph (tau = 1)
    does not break the chain.
    """
    if w.weight > ESTIMATE_WEIGHT_CAP:
        raise ValueError(f"weight {w.weight} exceeds cap {ESTIMATE_WEIGHT_CAP}")
    graph = interaction_graph_of_cluster(w, g)
    left = Fraction(0)
    for blocks in enumerate_connected_partitions(graph):
        q = quotient_graph(graph, blocks)
        left += abs(coloring_weight(q))
    tau = spanning_tree_count(graph)
    mid1 = 2 ** (w.weight - 1) * tau
    degprod = 1
    for v in range(graph.n):
        degprod *= max(graph.degree(v), 1)
    mid2 = 2 ** (w.weight - 1) * degprod
    right = w.factorial * (2 * math.e * (1 + g.degree)) ** (w.weight + 1)
    return {
        "weight": w.weight,
        "left": left,
        "tree_bound": mid1,
        "degree_bound": mid2,
        "final_bound": right,
        "ok": left <= mid1 <= mid2 and float(mid2) <= right,
    }


def verify_combinatorial_estimate(w: Cluster, g: DualInteractionGraph) -> dict:
    rep = estimate_chain(w, g)
    rep["terms"] = [a for a, _ in w.multiplicities]
    rep["multiplicities"] = [m for _, m in w.multiplicities]
    return rep


def brute_force_chi_star(n: int, g: SimpleGraph) -> int:
    """Exhaustive oracle: count colorings of V with colors 0..n-1 that use
    every color and make adjacent nodes differ."""
    count = 0
    for col in itertools.product(range(n), repeat=g.n):
        if len(set(col)) != n:
            continue
        if all(col[a] != col[b] for a, b in g.edges):
            count += 1
    return count
