"""Labeled graphs, cutsize, and the reductions from trees and general graphs to a line.

Vertices are numbered ``1..n``. Labels are small non-negative integers.
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

Edge = Tuple[int, int]


class GraphError(ValueError):
    """Raised for malformed graphs or inputs a graph routine cannot handle."""


def _norm_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass
class LabeledGraph:
    n: int
    edges: List[Edge]
    labels: Optional[Dict[int, int]] = None

    def __post_init__(self) -> None:
        if self.n < 0:
            raise GraphError("vertex count must be non-negative")
        seen = set()
        normed = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise GraphError(f"edge ({u}, {v}) has endpoint outside 1..{self.n}")
            e = _norm_edge(u, v)
            if e in seen:
                raise GraphError(f"duplicate edge {e}")
            seen.add(e)
            normed.append(e)
        self.edges = normed
        if self.labels is not None:
            self.labels = {int(v): int(y) for v, y in self.labels.items()}
            missing = [v for v in range(1, self.n + 1) if v not in self.labels]
            if missing:
                raise GraphError(f"vertices without label: {missing[:5]}")

    def adjacency(self) -> Dict[int, List[int]]:
        adj: Dict[int, List[int]] = {v: [] for v in range(1, self.n + 1)}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        adj = self.adjacency()
        seen = {1}
        stack = [1]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n

    def is_tree(self) -> bool:
        return len(self.edges) == max(self.n - 1, 0) and self.is_connected()

    def is_line(self) -> bool:
        """True when the edges are exactly ``(i, i+1)`` for ``i = 1..n-1``."""
        return set(self.edges) == {(i, i + 1) for i in range(1, self.n)}

    @property
    def num_labels(self) -> int:
        if not self.labels:
            return 0
        return max(self.labels.values()) + 1


@dataclass
class PathInstance:
    """A line graph on positions ``1..length`` produced by a reduction.

    ``origin_map`` sends each original vertex to the position where a
    context for that vertex is presented to the line algorithm.
    """

    length: int
    position_label: Dict[int, int]
    origin_map: Dict[int, int]
    walk: List[int] = field(default_factory=list)

    def as_graph(self) -> LabeledGraph:
        return line_graph(self.length, [self.position_label[p] for p in range(1, self.length + 1)])


def line_graph(n: int, labels: Optional[Sequence[int]] = None) -> LabeledGraph:
    lab = None if labels is None else {i + 1: int(y) for i, y in enumerate(labels)}
    return LabeledGraph(n, [(i, i + 1) for i in range(1, n)], lab)


def cutsize(g: LabeledGraph) -> int:
    if g.labels is None:
        raise GraphError("unlabeled graph")
    y = g.labels
    return sum(1 for u, v in g.edges if y[u] != y[v])


def observable_cutsize(g: LabeledGraph, observed: Iterable[int]) -> int:
    """Smallest cutsize over labelings that agree with ``g.labels`` on ``observed``.

    Works on trees (a line is a tree). On a tree the minimum is obtained by a
    leaf-to-root dynamic program over the allowed labels of each vertex.
    """
    if not g.is_tree():
        raise GraphError("requires tree or line")
    obs = set(int(v) for v in observed)
    if obs and g.labels is None:
        raise GraphError("unlabeled graph")
    labels = g.labels or {}
    missing = [v for v in obs if v not in labels]
    if missing:
        raise GraphError(f"observed vertices without label: {missing[:5]}")
    if g.n == 0:
        return 0
    # unobserved vertices only ever need a label already used by an observed one
    palette = sorted({labels[v] for v in obs}) or [0]
    adj = g.adjacency()
    order, parent = _dfs_preorder(adj, 1)
    cost: Dict[int, Dict[int, int]] = {}
    for u in reversed(order):
        allowed = [labels[u]] if u in obs else palette
        row = {}
        for a in allowed:
            total = 0
            for c in adj[u]:
                if c == parent[u]:
                    continue
                child = cost[c]
                total += min(child.get(a, np.inf), min(child.values()) + 1)
            row[a] = int(total)
        cost[u] = row
    return int(min(cost[1].values()))


def _dfs_preorder(adj: Dict[int, List[int]], root: int) -> Tuple[List[int], Dict[int, int]]:
    parent = {root: 0}
    order = []
    stack = [root]
    while stack:
        u = stack.pop()
        order.append(u)
        for w in adj[u]:
            if w not in parent:
                parent[w] = u
                stack.append(w)
    return order, parent


def dfs_child_order(tree: LabeledGraph, vertex: int, parent: Optional[int] = None) -> List[int]:
    """Children of ``vertex`` in ascending id order.

    With the tree rooted at 1 the parent is found by search unless given.
    """
    adj = tree.adjacency()
    if parent is None and vertex != 1:
        _, parents = _dfs_preorder(adj, 1)
        parent = parents.get(vertex)
    return sorted(w for w in adj[vertex] if w != parent)


def euler_spine(g: LabeledGraph) -> PathInstance:
    """Doubled-edge depth-first walk from vertex 1.

    Each tree edge is walked down once and back once, so consecutive walk
    positions always correspond to a tree edge and the line's cutsize is at
    most twice the tree's.
    """
    if g.labels is None:
        raise GraphError("unlabeled graph")
    if not g.is_tree():
        raise GraphError("not a tree")
    if g.n == 0:
        return PathInstance(0, {}, {}, [])
    adj = {v: sorted(ws) for v, ws in g.adjacency().items()}
    walk = [1]
    # iterative DFS: (vertex, parent, next child index)
    stack: List[List[int]] = [[1, 0, 0]]
    while stack:
        top = stack[-1]
        u, par, i = top
        kids = adj[u]
        while i < len(kids) and kids[i] == par:
            i += 1
        if i < len(kids):
            top[2] = i + 1
            c = kids[i]
            walk.append(c)
            stack.append([c, u, 0])
        else:
            stack.pop()
            if stack:
                walk.append(stack[-1][0])
    position_label = {p: g.labels[v] for p, v in enumerate(walk, start=1)}
    origin: Dict[int, int] = {}
    for p, v in enumerate(walk, start=1):
        origin.setdefault(v, p)
    return PathInstance(len(walk), position_label, origin, walk)


def line_instance(g: LabeledGraph) -> PathInstance:
    """Identity reduction for a graph that already is the line ``1-2-...-n``."""
    if not g.is_line():
        raise GraphError("not a line graph")
    labels = g.labels or {v: 0 for v in range(1, g.n + 1)}
    return PathInstance(g.n, dict(labels), {v: v for v in range(1, g.n + 1)},
                        list(range(1, g.n + 1)))


def wilson_ust(g: LabeledGraph, rng: np.random.Generator) -> LabeledGraph:
    """Uniform spanning tree by loop-erased random walks (Wilson's algorithm)."""
    if not g.is_connected():
        raise GraphError("graph not connected")
    n = g.n
    if n <= 1:
        return LabeledGraph(n, [], None if g.labels is None else dict(g.labels))
    adj = g.adjacency()
    for v in adj:
        adj[v].sort()
    in_tree = [False] * (n + 1)
    nxt = [0] * (n + 1)
    root = 1
    in_tree[root] = True
    for start in range(1, n + 1):
        u = start
        while not in_tree[u]:
            nbrs = adj[u]
            # overwriting nxt[u] on revisits erases the loop
            nxt[u] = nbrs[int(rng.integers(len(nbrs)))]
            u = nxt[u]
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            u = nxt[u]
    edges = [_norm_edge(v, nxt[v]) for v in range(1, n + 1) if v != root]
    edges.sort()
    return LabeledGraph(n, edges, None if g.labels is None else dict(g.labels))


def spanning_trees(g: LabeledGraph) -> List[Tuple[Edge, ...]]:
    """Enumerate all spanning trees of a small graph (brute force)."""
    out = []
    for combo in itertools.combinations(sorted(g.edges), g.n - 1):
        if LabeledGraph(g.n, list(combo)).is_connected():
            out.append(tuple(combo))
    return out


# --- synthetic instances ---------------------------------------------------

def block_labels(n: int, f: int) -> List[int]:
    """Labels for ``n`` line positions split into ``f + 1`` near-equal blocks."""
    if not 0 <= f < max(n, 1):
        raise GraphError(f"cannot place {f} cuts on a line of {n}")
    bounds = np.linspace(0, n, f + 2).round().astype(int)
    labels = []
    for b in range(f + 1):
        labels.extend([b] * int(bounds[b + 1] - bounds[b]))
    return labels


def random_tree(n: int, rng: np.random.Generator) -> LabeledGraph:
    """Random recursive tree: vertex ``v`` attaches to a uniform earlier vertex."""
    edges = [(int(rng.integers(1, v)), v) for v in range(2, n + 1)]
    return LabeledGraph(n, edges)


def gnp_connected(n: int, p: float, rng: np.random.Generator, max_tries: int = 1000) -> LabeledGraph:
    """Erdos-Renyi G(n, p), resampled until connected."""
    pairs = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)]
    for _ in range(max_tries):
        keep = rng.random(len(pairs)) < p
        g = LabeledGraph(n, [e for e, k in zip(pairs, keep) if k])
        if g.is_connected():
            return g
    raise GraphError(f"no connected G({n}, {p}) sample in {max_tries} tries")


def with_labels(g: LabeledGraph, labels: Sequence[int]) -> LabeledGraph:
    if len(labels) != g.n:
        raise GraphError(f"expected {g.n} labels, got {len(labels)}")
    return LabeledGraph(g.n, list(g.edges), {v: int(y) for v, y in zip(range(1, g.n + 1), labels)})


# --- file format -----------------------------------------------------------

def _content_lines(text: str) -> List[str]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def parse_graph(text: str) -> LabeledGraph:
    """Parse ``n m L``, then ``m`` edge lines, then ``n`` ``vertex label`` lines."""
    lines = _content_lines(text)
    if not lines:
        raise GraphError("empty graph file")
    try:
        n, m, n_labels = (int(x) for x in lines[0].split())
        edges = [tuple(int(x) for x in lines[1 + i].split()) for i in range(m)]
        label_lines = lines[1 + m:1 + m + n]
        labels = {}
        for line in label_lines:
            v, y = (int(x) for x in line.split())
            labels[v] = y
    except (ValueError, IndexError) as exc:
        raise GraphError(f"malformed graph file: {exc}") from exc
    if len(label_lines) != n and n_labels > 0:
        raise GraphError(f"expected {n} label lines, got {len(label_lines)}")
    if any(len(e) != 2 for e in edges):
        raise GraphError("edge lines must have two vertices")
    if labels and any(not 0 <= y < n_labels for y in labels.values()):
        raise GraphError(f"label ids must lie in 0..{n_labels - 1}")
    return LabeledGraph(n, [tuple(e) for e in edges], labels or None)


def format_graph(g: LabeledGraph) -> str:
    n_labels = g.num_labels
    out = [f"{g.n} {len(g.edges)} {n_labels}"]
    out += [f"{u} {v}" for u, v in g.edges]
    if g.labels is not None:
        out += [f"{v} {g.labels[v]}" for v in range(1, g.n + 1)]
    return "\n".join(out) + "\n"


def read_graph(path: str | Path) -> LabeledGraph:
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def write_graph(g: LabeledGraph, path: str | Path) -> None:
    Path(path).write_text(format_graph(g), encoding="utf-8")


def label_ids(raw: Sequence[str]) -> Tuple[List[int], Dict[str, int]]:
    """Map arbitrary label names to dense ids in order of first appearance."""
    ids: Dict[str, int] = defaultdict(lambda: len(ids))
    return [ids[str(x)] for x in raw], dict(ids)
