"""Metrical task systems: fractional traversal, follow-the-traversal, and pricing.

States are dense ids ``0..m-1``; traversal indices are 1-based.  Arithmetic
is generic so that ``fractions.Fraction`` inputs stay exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree

from .agents import Trace, TraceRow, argmin_set, decide
from .metric import MatrixMetric, MetricError

# fraction below which a task counts as fully processed (float inputs only)
DONE_TOL = 1e-12


def default_traversal(d: MatrixMetric, s0: int = 0) -> tuple[int, ...]:
    """One period of the doubled Euler tour of a minimum spanning tree, from ``s0``."""
    m = d.m
    if m == 1:
        return (s0,)
    mst = minimum_spanning_tree(d.array).toarray()
    adj = [[] for _ in range(m)]
    for u, v in zip(*np.nonzero(mst)):
        adj[u].append(int(v))
        adj[v].append(int(u))
    tour: list[int] = []

    def walk(u, parent):
        tour.append(u)
        for v in sorted(adj[u]):
            if v != parent:
                walk(v, u)
                tour.append(u)

    walk(s0, -1)
    return tuple(tour[:-1])


class Traversal:
    """Periodic traversal sequence with lazily extended prefix distances."""

    def __init__(self, d: MatrixMetric, period: Sequence[int]):
        period = tuple(int(s) for s in period)
        if not period:
            raise ValueError("empty traversal period")
        if any(not 0 <= s < d.m for s in period):
            raise MetricError("traversal mentions an unknown state")
        if set(period) != set(range(d.m)):
            raise ValueError("every state must appear in one traversal period")
        if d.m > 1:
            for a, b in zip(period, period[1:] + period[:1]):
                if not d.distance(a, b) > 0:
                    raise ValueError(f"consecutive traversal states {a},{b} need positive distance")
        self.d = d
        self.period = period
        self._prefix = [0]  # _prefix[j-1] = delta(1, j)

    def __getitem__(self, j: int) -> int:
        if j < 1:
            raise IndexError("traversal indices start at 1")
        return self.period[(j - 1) % len(self.period)]

    def _extend(self, j: int):
        while len(self._prefix) < j:
            k = len(self._prefix)  # next index is k+1, gap between k and k+1
            self._prefix.append(self._prefix[-1] + self.gap(k))

    def gap(self, j: int):
        """d(tau_j, tau_{j+1})."""
        return self.d.distance(self[j], self[j + 1])

    def delta(self, l: int, l2: int):
        lo, hi = min(l, l2), max(l, l2)
        self._extend(hi)
        return self._prefix[hi - 1] - self._prefix[lo - 1]

    def first_at_or_after(self, s: int, j: int) -> int:
        """m(s): the first index >= j whose state is s."""
        p = len(self.period)
        for k in range(j, j + p):
            if self[k] == s:
                return k
        raise ValueError(f"state {s} not in traversal")

    def materialize(self, n: int) -> list[int]:
        return [self[j] for j in range(1, n + 1)]


@dataclass
class TaskSystem:
    d: MatrixMetric
    s0: int = 0
    period: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.period is None:
            self.period = default_traversal(self.d, self.s0)
        if self.period[0] != self.s0:
            raise ValueError("traversal must start at the initial state")
        self.tau = Traversal(self.d, self.period)

    @property
    def m(self) -> int:
        return self.d.m


def _check_task(task, m):
    if len(task) != m:
        raise ValueError(f"task has {len(task)} entries, expected {m}")
    if any(w < 0 for w in task):
        raise ValueError("task costs must be non-negative")


class TraversalCursor:
    """State of the fractional traversal algorithm."""

    def __init__(self, system: TaskSystem):
        self.system = system
        self.j = 1
        self.rho = 0
        self.t = [1]
        self.fractions: list[list[tuple[int, object]]] = []
        self.work = 0
        self.moves = 0

    def clone(self) -> "TraversalCursor":
        c = TraversalCursor.__new__(TraversalCursor)
        c.system = self.system
        c.j, c.rho, c.t = self.j, self.rho, list(self.t)
        c.fractions = list(self.fractions)
        c.work, c.moves = self.work, self.moves
        return c

    @property
    def cost(self):
        return self.work + self.moves

    def step(self, task: Sequence) -> list[tuple[int, object]]:
        """Process one task; returns ``(index, fraction)`` records."""
        tau = self.system.tau
        _check_task(task, self.system.m)
        remaining = 1
        records = []
        start_moves = self.moves
        while remaining > (DONE_TOL if isinstance(remaining, float) else 0):
            w = task[tau[self.j]]
            gap = tau.gap(self.j) if self.system.m > 1 else 0
            if gap == 0:
                # single-state system: nowhere to go
                lam, advance = remaining, False
            elif w == 0:
                lam, advance = remaining, False
            else:
                cap = (gap - self.rho) / w
                lam, advance = (cap, True) if cap <= remaining else (remaining, False)
            records.append((self.j, lam))
            remaining -= lam
            self.work += lam * w
            if advance:
                self.moves += gap
                self.j += 1
                self.rho = 0
            else:
                self.rho += lam * w
        self.t.append(self.j)
        self.fractions.append(records)
        self._last_cost = (self.moves - start_moves) + sum(l * task[tau[j]] for j, l in records)
        return records

    @property
    def last_cost(self):
        return self._last_cost


def traversal_step(cursor: TraversalCursor, task) -> list[tuple[int, object]]:
    return cursor.step(task)


def run_traversal(system: TaskSystem, tasks) -> TraversalCursor:
    c = TraversalCursor(system)
    for w in tasks:
        c.step(w)
    return c


def case_label(l_prev: int, t_prev: int, l_new: int, t_new: int) -> int:
    """Which of the nine position orderings of the 2-approximation proof applies."""
    if l_prev <= t_prev:
        if l_new <= t_prev:
            return 1
        if l_new <= t_new:
            return 2
        return 3
    if t_new <= l_new <= l_prev:
        return 4
    if t_new <= l_prev < l_new:
        return 5
    if l_new < t_new <= l_prev:
        return 6
    if l_new < l_prev < t_new:
        return 7
    if l_prev <= l_new < t_new:
        return 8
    if l_prev <= t_new <= l_new:
        return 9
    raise AssertionError(f"unclassified ordering {(l_prev, t_prev, l_new, t_new)}")


def c_tilde(system: TaskSystem, ell: int, t: int, task) -> dict[int, object]:
    """c~ restricted to first occurrences m(s), keyed by state."""
    tau = system.tau
    jmin, jmax = min(ell, t), max(ell, t)
    out = {}
    for s in range(system.m):
        ms = tau.first_at_or_after(s, jmin)
        out[s] = task[s] if ms <= jmax else task[s] + tau.delta(jmax, ms)
    return out


@dataclass
class FollowState:
    system: TaskSystem
    ell: list[int] = field(default_factory=lambda: [1])
    cursor: TraversalCursor = None
    cost: object = 0
    cases: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.cursor is None:
            self.cursor = TraversalCursor(self.system)

    @property
    def state(self) -> int:
        return self.system.tau[self.ell[-1]]


def follow_step(st: FollowState, task) -> int:
    """Follow-the-traversal on one task; returns the new index ell_i."""
    system, tau = st.system, st.system.tau
    _check_task(task, system.m)
    l_prev, t_prev = st.ell[-1], st.cursor.t[-1]
    ct = c_tilde(system, l_prev, t_prev, task)
    jmin = min(l_prev, t_prev)
    best = min(ct.values())
    cands = [tau.first_at_or_after(s, jmin) for s, c in ct.items() if c == best]
    l_new = min(cands)
    prev_state = tau[l_prev]
    st.cost += system.d.distance(prev_state, tau[l_new]) + task[tau[l_new]]
    st.ell.append(l_new)
    st.cursor.step(task)
    st.cases.append(case_label(l_prev, t_prev, l_new, st.cursor.t[-1]))
    return l_new


def raw_prices(system: TaskSystem, ell: int, t: int, prev_state: int) -> dict[int, object]:
    tau = system.tau
    jmin, jmax = min(ell, t), max(ell, t)
    out = {}
    for s in range(system.m):
        ms = tau.first_at_or_after(s, jmin)
        p = -system.d.distance(prev_state, s)
        if ms > jmax:
            p += tau.delta(jmax, ms)
        out[s] = p
    return out


def mts_prices(st: FollowState, prev_state: int | None = None, normalize: bool = True) -> dict[int, object]:
    """Posted surcharges for the next agent given the simulated follower state."""
    if prev_state is None:
        prev_state = st.state
    p = raw_prices(st.system, st.ell[-1], st.cursor.t[-1], prev_state)
    if normalize:
        shift = min(p.values())
        p = {s: v - shift for s, v in p.items()}
    return p


def imaginary_task(chosen: int, work, prices: dict, prev_state: int, d: MatrixMetric) -> list:
    """Coordinate-wise smallest task consistent with the observed choice."""
    if work < 0:
        raise ValueError("observed work must be non-negative")
    paid = work + d.distance(prev_state, chosen) + prices[chosen]
    out = []
    for j in range(d.m):
        if j == chosen:
            out.append(work)
        else:
            v = paid - d.distance(prev_state, j) - prices[j]
            out.append(v if v > 0 else 0 * v)
    return out


def mts_agent_options(prices: dict, prev_state: int, task, d: MatrixMetric) -> dict[int, object]:
    return {s: task[s] + d.distance(prev_state, s) + prices[s] for s in range(d.m)}


def mts_offline_opt(tasks, d: MatrixMetric, s0: int = 0) -> float:
    """Exact offline optimum by dynamic programming over (task, state)."""
    D = d.array
    m = d.m
    best = np.full(m, np.inf)
    best[s0] = 0.0
    for w in tasks:
        w = np.asarray(w, dtype=float)
        best = (best[:, None] + D).min(axis=0) + w
    return float(best.min()) if len(tasks) else 0.0


@dataclass
class MtsRun:
    trace: Trace
    follow: FollowState
    fidelity_failures: list = field(default_factory=list)
    imaginary: list = field(default_factory=list)


def run_priced_agents(system: TaskSystem, tasks, policy="first", rng=None, tol=1e-9, callback=None) -> MtsRun:
    """Selfish agents facing the follow-the-traversal pricing scheme.

    The scheme only sees each agent's state and the work done there; it
    rebuilds an imaginary task and advances its simulated follower with it.
    Each step is checked: the chosen state's first occurrence must minimise
    c~ under the imaginary task.
    """
    st = FollowState(system)
    trace = Trace()
    run = MtsRun(trace, st)
    prev = system.s0
    tau = system.tau
    for i, w in enumerate(tasks):
        prices = mts_prices(st, prev)
        opts = mts_agent_options(prices, prev, w, system.d)
        s = decide(opts, policy, tol=tol, rng=rng, callback=callback)
        cost = system.d.distance(prev, s) + w[s]
        trace.record(TraceRow(i, opts, prices, s, cost))
        wt = imaginary_task(s, w[s], prices, prev, system.d)
        run.imaginary.append(wt)
        l_prev, t_prev = st.ell[-1], st.cursor.t[-1]
        ct = c_tilde(system, l_prev, t_prev, wt)
        if s not in argmin_set(ct, tol):
            run.fidelity_failures.append((i, s, ct))
        l_new = tau.first_at_or_after(s, min(l_prev, t_prev))
        st.cost += cost
        st.ell.append(l_new)
        st.cursor.step(wt)
        st.cases.append(case_label(l_prev, t_prev, l_new, st.cursor.t[-1]))
        prev = s
    return run


def run_free_agents(system: TaskSystem, tasks, policy="first", rng=None) -> Trace:
    """Greedy agents with no surcharges."""
    trace = Trace()
    prev = system.s0
    zero = {s: 0 for s in range(system.m)}
    for i, w in enumerate(tasks):
        opts = mts_agent_options(zero, prev, w, system.d)
        s = decide(opts, policy, rng=rng)
        cost = system.d.distance(prev, s) + w[s]
        trace.record(TraceRow(i, opts, zero, s, cost))
        prev = s
    return trace
