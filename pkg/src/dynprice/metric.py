"""Metric spaces and the matching primitives built on them.

Four spaces are provided:

* ``RealLine``      -- the continuous real line, points are plain numbers.
* ``WeightedLine``  -- m vertices at strictly increasing coordinates.
* ``TreeMetric``    -- a weighted tree; points may sit inside edges.
* ``MatrixMetric``  -- an explicit symmetric distance matrix.

All spaces are immutable after construction.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Any, NamedTuple, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

TOL = 1e-9


class MetricError(ValueError):
    """Invalid metric construction or query."""


class RealLine:
    kind = "line"

    def distance(self, u, v):
        return abs(u - v)

    def on_path(self, a, p, b, tol=TOL):
        lo, hi = (a, b) if a <= b else (b, a)
        return lo - tol <= p <= hi + tol

    def toward(self, p, q, t):
        """Point at distance ``t`` from ``p`` on the way to ``q``."""
        if q >= p:
            return min(p + t, q)
        return max(p - t, q)

    def __eq__(self, other):
        return isinstance(other, RealLine)

    def __hash__(self):
        return hash("RealLine")

    def __repr__(self):
        return "RealLine()"


class WeightedLine:
    """Vertices ``0..m-1`` placed at strictly increasing coordinates."""

    kind = "weighted-line"

    def __init__(self, coords: Sequence[float]):
        c = np.asarray(coords, dtype=float)
        if c.ndim != 1 or len(c) == 0:
            raise MetricError("weighted line needs a non-empty 1-d coordinate list")
        if np.any(np.diff(c) <= 0):
            raise MetricError("weighted-line coordinates must be strictly increasing")
        self.coords = c
        self.coords.flags.writeable = False

    @classmethod
    def from_gaps(cls, gaps: Sequence[float], start: float = 0.0) -> "WeightedLine":
        return cls(np.concatenate([[start], start + np.cumsum(gaps)]))

    @property
    def m(self) -> int:
        return len(self.coords)

    @property
    def vertices(self) -> range:
        return range(self.m)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.coords)

    def _check(self, v):
        if not (isinstance(v, (int, np.integer)) and 0 <= v < self.m):
            raise MetricError(f"unknown vertex {v!r}")

    def distance(self, u, v) -> float:
        self._check(u)
        self._check(v)
        return float(abs(self.coords[u] - self.coords[v]))

    def __repr__(self):
        return f"WeightedLine(m={self.m})"


class TreePoint(NamedTuple):
    """A point ``h`` units above ``vertex`` on the edge to its parent."""

    vertex: int
    h: float = 0.0


class TreeMetric:
    """Weighted tree with continuous edges.

    Points are ``TreePoint(v, h)``: distance ``h`` from ``v`` towards its parent
    (root 0 has no parent edge, so only ``h == 0`` is valid there).  Plain vertex
    ids are accepted wherever a point is expected.
    """

    kind = "tree"

    def __init__(self, n: int, edges: Sequence[tuple[int, int, float]], root: int = 0):
        if n <= 0:
            raise MetricError("tree needs at least one vertex")
        if len(edges) != n - 1:
            raise MetricError(f"a tree on {n} vertices has {n - 1} edges, got {len(edges)}")
        adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for u, v, w in edges:
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise MetricError(f"bad edge ({u}, {v})")
            if w <= 0:
                raise MetricError(f"edge ({u}, {v}) has non-positive weight {w}")
            adj[u].append((v, float(w)))
            adj[v].append((u, float(w)))
        parent = [-1] * n
        pweight = [0.0] * n
        depth = [0.0] * n
        level = [0] * n
        seen = [False] * n
        seen[root] = True
        order = [root]
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v, w in sorted(adj[u]):
                if not seen[v]:
                    seen[v] = True
                    parent[v], pweight[v] = u, w
                    depth[v] = depth[u] + w
                    level[v] = level[u] + 1
                    order.append(v)
                    queue.append(v)
        if not all(seen):
            raise MetricError("edges do not form a connected tree")
        self.n = n
        self.root = root
        self.edges = tuple((int(u), int(v), float(w)) for u, v, w in edges)
        self.parent = tuple(parent)
        self.pweight = tuple(pweight)
        self.depth = tuple(depth)
        self.level = tuple(level)

    @property
    def vertices(self) -> range:
        return range(self.n)

    def point(self, p) -> TreePoint:
        if isinstance(p, TreePoint):
            v, h = p
        elif isinstance(p, (int, np.integer)):
            v, h = int(p), 0.0
        else:
            raise MetricError(f"not a tree point: {p!r}")
        if not 0 <= v < self.n:
            raise MetricError(f"unknown vertex {v!r}")
        if v == self.root and h != 0:
            raise MetricError("root has no parent edge")
        if h < 0 or (v != self.root and h > self.pweight[v]):
            raise MetricError(f"offset {h} outside edge above {v}")
        return self._normalize(v, h)

    def _normalize(self, v: int, h: float) -> TreePoint:
        # canonical form: a point exactly at a parent vertex is that vertex
        while v != self.root and h >= self.pweight[v] - 1e-12:
            h -= self.pweight[v]
            v = self.parent[v]
            h = max(h, 0.0)
        if h <= 1e-12:
            h = 0.0
        return TreePoint(v, h)

    def _pdepth(self, p: TreePoint) -> float:
        return self.depth[p.vertex] - p.h

    def _lca(self, a: int, b: int) -> int:
        while self.level[a] > self.level[b]:
            a = self.parent[a]
        while self.level[b] > self.level[a]:
            b = self.parent[b]
        while a != b:
            a, b = self.parent[a], self.parent[b]
        return a

    def _is_ancestor(self, a: int, b: int) -> bool:
        while self.level[b] > self.level[a]:
            b = self.parent[b]
        return a == b

    def distance(self, u, v) -> float:
        p, q = self.point(u), self.point(v)
        a, b = p.vertex, q.vertex
        if a == b:
            return abs(p.h - q.h)
        if self._is_ancestor(a, b) or self._is_ancestor(b, a):
            return abs(self._pdepth(p) - self._pdepth(q))
        return self._pdepth(p) + self._pdepth(q) - 2 * self.depth[self._lca(a, b)]

    def on_path(self, a, p, b, tol=TOL) -> bool:
        return self.distance(a, p) + self.distance(p, b) <= self.distance(a, b) + tol

    def _on_chain(self, v: int, target_depth: float) -> TreePoint:
        # point at the given depth on the root path of vertex v
        while v != self.root and self.depth[self.parent[v]] >= target_depth:
            v = self.parent[v]
        return self._normalize(v, self.depth[v] - target_depth)

    def toward(self, p, q, t: float) -> TreePoint:
        """Point at distance ``t`` from ``p`` on the path to ``q`` (clamped at ``q``)."""
        p, q = self.point(p), self.point(q)
        total = self.distance(p, q)
        if t >= total:
            return q
        if t <= 0:
            return p
        top = (self._pdepth(p) + self._pdepth(q) - total) / 2
        up = self._pdepth(p) - top
        if t <= up:
            return self._on_chain(p.vertex, self._pdepth(p) - t)
        return self._on_chain(q.vertex, top + (t - up))

    def __repr__(self):
        return f"TreeMetric(n={self.n})"


class MatrixMetric:
    """Explicit metric on states ``0..m-1``.

    Entries may be any real numbers, including ``fractions.Fraction`` for
    exact arithmetic.  The triangle inequality is checked on construction.
    """

    kind = "matrix"

    def __init__(self, d: Sequence[Sequence[Any]], tol: float = TOL):
        rows = [tuple(r) for r in d]
        m = len(rows)
        if m == 0 or any(len(r) != m for r in rows):
            raise MetricError("distance matrix must be square and non-empty")
        for i in range(m):
            if rows[i][i] != 0:
                raise MetricError(f"d({i},{i}) = {rows[i][i]} is not zero")
            for j in range(m):
                if rows[i][j] < 0:
                    raise MetricError(f"d({i},{j}) is negative")
                if rows[i][j] != rows[j][i]:
                    raise MetricError(f"d({i},{j}) != d({j},{i})")
        arr = np.array([[float(x) for x in r] for r in rows])
        # O(m^3) check, vectorised over the middle index
        for k in range(m):
            viol = arr > arr[:, [k]] + arr[[k], :] + tol
            if viol.any():
                i, j = map(int, np.argwhere(viol)[0])
                raise MetricError(f"triangle inequality fails: d({i},{j}) > d({i},{k}) + d({k},{j})")
        self.d = tuple(rows)
        self.array = arr
        self.array.flags.writeable = False

    @property
    def m(self) -> int:
        return len(self.d)

    @property
    def vertices(self) -> range:
        return range(self.m)

    def distance(self, u, v):
        if not (isinstance(u, (int, np.integer)) and 0 <= u < self.m):
            raise MetricError(f"unknown vertex {u!r}")
        if not (isinstance(v, (int, np.integer)) and 0 <= v < self.m):
            raise MetricError(f"unknown vertex {v!r}")
        return self.d[u][v]

    def __repr__(self):
        return f"MatrixMetric(m={self.m})"


def metric_closure(w: np.ndarray) -> np.ndarray:
    """Shortest-path closure of a symmetric non-negative weight matrix."""
    from scipy.sparse.csgraph import shortest_path

    return shortest_path(np.asarray(w, dtype=float), method="FW", directed=False)


def distance(space, u, v):
    return space.distance(u, v)


# -- matchings ----------------------------------------------------------------


@dataclass(frozen=True)
class Matching:
    """Perfect matching; ``perm[i]`` is the index in Y matched to ``X[i]``."""

    X: tuple
    Y: tuple
    perm: tuple[int, ...]
    cost: float

    @property
    def pairs(self) -> list[tuple]:
        return [(self.X[i], self.Y[j]) for i, j in enumerate(self.perm)]

    def partner(self, i: int):
        return self.Y[self.perm[i]]


def _check_sizes(X, Y):
    if len(X) != len(Y):
        raise MetricError(f"matching needs |X| == |Y| (got {len(X)} and {len(Y)})")


def _cost(X, Y, perm, space) -> float:
    return sum(space.distance(X[i], Y[j]) for i, j in enumerate(perm))


def canonical_matching(X: Sequence[float], Y: Sequence[float]) -> Matching:
    """Match the i-th smallest of X to the i-th smallest of Y."""
    _check_sizes(X, Y)
    xs = sorted(range(len(X)), key=lambda i: (X[i], i))
    ys = sorted(range(len(Y)), key=lambda j: (Y[j], j))
    perm = [0] * len(X)
    for i, j in zip(xs, ys):
        perm[i] = j
    cost = sum(abs(X[i] - Y[j]) for i, j in zip(xs, ys))
    return Matching(tuple(X), tuple(Y), tuple(perm), cost)


def min_cost_matching_oracle(X: Sequence, Y: Sequence, space=None, brute_limit: int = 8) -> Matching:
    """Minimum-cost perfect matching.

    Up to ``brute_limit`` points per side every permutation is enumerated and
    the lexicographically first optimum is returned; beyond that the
    Hungarian method (scipy) is used.
    """
    _check_sizes(X, Y)
    space = space or RealLine()
    n = len(X)
    if n == 0:
        return Matching((), (), (), 0.0)
    if n <= brute_limit:
        best, best_perm = None, None
        for perm in itertools.permutations(range(n)):
            c = _cost(X, Y, perm, space)
            if best is None or c < best - 1e-12:
                best, best_perm = c, perm
        return Matching(tuple(X), tuple(Y), tuple(best_perm), best)
    cost = np.array([[float(space.distance(x, y)) for y in Y] for x in X])
    rows, cols = linear_sum_assignment(cost)
    perm = [0] * n
    for i, j in zip(rows, cols):
        perm[i] = int(j)
    return Matching(tuple(X), tuple(Y), tuple(perm), float(cost[rows, cols].sum()))


def r_local_matching(X: Sequence, Y: Sequence, r, space=None, *, r_index: int | None = None) -> Matching:
    """Minimum-cost matching in which ``r`` (a member of X) gets an adjacent partner.

    On the line the canonical matching is the starting point (giving the
    r-canonical matching); on trees the oracle's optimum is.  One rematch step
    then moves r onto the Y-point closest to it on the path to its partner.
    """
    _check_sizes(X, Y)
    space = space or RealLine()
    if r_index is None:
        try:
            r_index = next(i for i, x in enumerate(X) if x == r)
        except StopIteration:
            raise MetricError(f"r={r!r} is not a member of X") from None
    elif not 0 <= r_index < len(X) or X[r_index] != r:
        raise MetricError(f"X[{r_index}] is not r={r!r}")
    line = isinstance(space, RealLine)
    base = canonical_matching(X, Y) if line else min_cost_matching_oracle(X, Y, space)
    perm = list(base.perm)
    j = perm[r_index]
    y = Y[j]
    dy = space.distance(r, y)
    if line:
        yorder = sorted(range(len(Y)), key=lambda k: (Y[k], k))
        rank = {k: pos for pos, k in enumerate(yorder)}
    best = None
    for k, yk in enumerate(Y):
        if k == j:
            continue
        dk = space.distance(r, yk)
        if dk < dy - TOL and space.on_path(y, yk, r):
            key = (dk, abs(rank[k] - rank[j])) if line else (dk, k)
            if best is None or key < best[0]:
                best = (key, k)
    if best is not None:
        k = best[1]
        x_other = perm.index(k)
        perm[r_index], perm[x_other] = k, j
    return Matching(tuple(X), tuple(Y), tuple(perm), _cost(X, Y, perm, space))


def is_adjacent(space, r, y, others, tol=TOL) -> bool:
    """True when no point of ``others`` lies on the path from r to y (other than at y)."""
    for o in others:
        if space.distance(o, y) <= tol:
            continue
        if space.on_path(r, o, y, tol):
            return False
    return True


# -- traversal sequences ------------------------------------------------------


def traversal_distance(tau: Sequence[int], space, l: int, l2: int):
    """Sum of d(tau_j, tau_{j+1}) between two 1-based indices of ``tau``."""
    lo, hi = min(l, l2), max(l, l2)
    if lo < 1 or hi > len(tau):
        raise IndexError(f"traversal index out of materialised range 1..{len(tau)}")
    return sum((space.distance(tau[j - 1], tau[j]) for j in range(lo, hi)), 0)
