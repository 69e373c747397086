"""Online metric matching ("parking") on weighted lines.

A line is a sorted list of vertices.  Slot vertices can be parked in; goal
points that are not slots become extra vertices that are never vacant, so a
goal is always either a vacant slot or part of a block.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .agents import Trace, TraceRow, decide
from .metric import WeightedLine


class CapacityError(ValueError):
    """No vacant slot left."""


class UnsupportedInstance(ValueError):
    """Instance outside the supported block geometry."""


class InvariantViolation(RuntimeError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


@dataclass(frozen=True)
class ParkingInstance:
    line: WeightedLine
    is_slot: tuple
    goals: tuple  # vertex ids, in arrival order

    def __post_init__(self):
        if len(self.is_slot) != self.line.m:
            raise ValueError("slot mask must cover every vertex")
        if len(self.goals) > self.n_slots:
            raise ValueError("more cars than slots")
        for g in self.goals:
            if not 0 <= g < self.line.m:
                raise ValueError(f"goal {g} is not a vertex")

    @classmethod
    def from_points(cls, slots: Sequence[float], goals: Sequence[float]) -> "ParkingInstance":
        """Build from slot coordinates and goal coordinates; extra goal points join the line."""
        slots = [float(s) for s in slots]
        if len(set(slots)) != len(slots):
            raise ValueError("duplicate slot coordinates")
        pts = sorted(set(slots) | {float(g) for g in goals})
        index = {x: i for i, x in enumerate(pts)}
        slot_set = set(slots)
        return cls(WeightedLine(pts), tuple(x in slot_set for x in pts), tuple(index[float(g)] for g in goals))

    @property
    def coords(self) -> np.ndarray:
        return self.line.coords

    @property
    def n(self) -> int:
        return len(self.goals)

    @property
    def slots(self) -> list[int]:
        return [v for v, s in enumerate(self.is_slot) if s]

    @property
    def n_slots(self) -> int:
        return sum(self.is_slot)

    def min_gap(self) -> float:
        return float(self.line.gaps.min()) if self.line.m > 1 else 1.0


@dataclass
class ParkingState:
    instance: ParkingInstance
    occupied: np.ndarray = None

    def __post_init__(self):
        if self.occupied is None:
            self.occupied = np.zeros(self.instance.line.m, dtype=bool)

    def copy(self) -> "ParkingState":
        return ParkingState(self.instance, self.occupied.copy())

    def is_vacant(self, v: int) -> bool:
        return bool(self.instance.is_slot[v] and not self.occupied[v])

    @property
    def vacant(self) -> list[int]:
        return [v for v in range(self.instance.line.m) if self.is_vacant(v)]

    def park(self, v: int):
        if not self.is_vacant(v):
            raise ValueError(f"vertex {v} is not a vacant slot")
        self.occupied[v] = True

    def nearest_vacant(self, g: int) -> tuple[int | None, int | None]:
        """Nearest vacant slot strictly left and strictly right of ``g``."""
        m = self.instance.line.m
        left = next((v for v in range(g - 1, -1, -1) if self.is_vacant(v)), None)
        right = next((v for v in range(g + 1, m) if self.is_vacant(v)), None)
        return left, right


@dataclass(frozen=True)
class Block:
    first: int
    last: int
    L: int | None
    R: int | None
    d: float | None

    @property
    def vertices(self) -> range:
        return range(self.first, self.last + 1)

    @property
    def closed(self) -> bool:
        return self.L is not None and self.R is not None


@dataclass(frozen=True)
class BlockStructure:
    blocks: tuple

    def __len__(self):
        return len(self.blocks)

    def block_of(self, v: int) -> int | None:
        for j, b in enumerate(self.blocks):
            if b.first <= v <= b.last:
                return j
        return None


def blocks(state: ParkingState, allow_open: bool = False) -> BlockStructure:
    """Maximal runs of non-vacant vertices with their vacant boundary slots."""
    inst = state.instance
    m = inst.line.m
    c = inst.coords
    out = []
    v = 0
    while v < m:
        if state.is_vacant(v):
            v += 1
            continue
        first = v
        while v < m and not state.is_vacant(v):
            v += 1
        last = v - 1
        L = first - 1 if first > 0 else None
        R = last + 1 if last < m - 1 else None
        if L is None and R is None:
            raise CapacityError("no vacant slot")
        if (L is None or R is None) and not allow_open:
            raise UnsupportedInstance(f"block {first}..{last} touches the end of the line")
        d = float(c[R] - c[L]) if L is not None and R is not None else None
        out.append(Block(first, last, L, R, d))
    return BlockStructure(tuple(out))


def strict_margin(inst: ParkingInstance) -> float:
    return 1e-9 * inst.min_gap()


def harmonic_step(state: ParkingState, goal: int, rng, dist: Callable | None = None) -> int:
    """Park at the goal if vacant, else at the nearest vacant slot left with probability d_r/(d_l+d_r)."""
    if state.is_vacant(goal):
        return goal
    L, R = state.nearest_vacant(goal)
    if L is None and R is None:
        raise CapacityError("no vacant slot")
    p = harmonic_p_left(state, goal, L, R, dist)
    return L if rng.random() < p else R


def harmonic_p_left(state, goal, L, R, dist=None) -> float:
    dist = dist or state.instance.line.distance
    dl = dist(goal, L) if L is not None else math.inf
    dr = dist(goal, R) if R is not None else math.inf
    if math.isinf(dl) and math.isinf(dr):
        raise CapacityError(f"no reachable vacant slot for goal {goal}")
    if math.isinf(dl):
        return 0.0
    if math.isinf(dr):
        return 1.0
    return dr / (dl + dr)


def greedy_step(state: ParkingState, goal: int) -> int:
    """Nearest vacant slot; ties go right."""
    if state.is_vacant(goal):
        return goal
    L, R = state.nearest_vacant(goal)
    if L is None and R is None:
        raise CapacityError("no vacant slot")
    if L is None:
        return R
    if R is None:
        return L
    d = state.instance.line.distance
    return L if d(goal, L) < d(goal, R) else R


# -- prices ------------------------------------------------------------------------


@dataclass
class SlotPrices:
    prices: dict  # vacant vertex -> price
    draws: list  # one q per closed block, in block order
    structure: BlockStructure

    def difference(self, j: int) -> float:
        """P(L) - P(R) for block j."""
        b = self.structure.blocks[j]
        return self.prices[b.L] - self.prices[b.R]


def _prefix_prices(state: ParkingState, st: BlockStructure, draws, right_of: bool) -> dict:
    """P(v) = sum of q_j over closed blocks to the right of v (or to the left, if ``right_of``)."""
    m = state.instance.line.m
    closed = [(b, q) for b, q in zip((b for b in st.blocks if b.closed), draws)]
    acc = np.zeros(m)
    for b, q in closed:
        if right_of:
            acc[b.last + 1:] += q
        else:
            acc[: b.first] += q
    raw = {v: float(acc[v]) for v in state.vacant}
    shift = min(raw.values())
    return {v: p - shift for v, p in raw.items()}


def _uniform_draw(d: float, margin: float, rng) -> float:
    while True:
        q = float(rng.uniform(-d, d))
        if abs(q) <= d - margin:
            return q


def harmonic_prices(state: ParkingState, rng, margin: float | None = None) -> SlotPrices:
    """Fresh uniform differences per closed block, accumulated as prefix sums."""
    margin = strict_margin(state.instance) if margin is None else margin
    st = blocks(state, allow_open=True)
    draws = [_uniform_draw(b.d, margin, rng) for b in st.blocks if b.closed]
    return SlotPrices(_prefix_prices(state, st, draws, right_of=False), draws, st)


def check_payment_conditions(state: ParkingState, sp: SlotPrices, margin: float = 0.0, tol: float = 1e-9) -> list:
    """Violations of the two payment conditions (empty list when both hold)."""
    bad = []
    closed = [b for b in sp.structure.blocks if b.closed]
    for b, q in zip(closed, sp.draws):
        diff = sp.prices[b.L] - sp.prices[b.R]
        if abs(diff - q) > tol:
            bad.append(("difference", b, diff, q))
    vac = state.vacant
    d = state.instance.line.distance
    for u, v in zip(vac, vac[1:]):
        if abs(sp.prices[u] - sp.prices[v]) > d(u, v) - margin + tol * 1e-3:
            bad.append(("neighbour", u, v, sp.prices[u] - sp.prices[v]))
    for v, p in sp.prices.items():
        if p < -tol:
            bad.append(("negative", v, p))
    return bad


def _bellman_ford_longest(n: int, edges: list[tuple[int, int, float]]) -> np.ndarray | None:
    """Least x >= 0 with x[b] >= x[a] + w for every edge (a, b, w); None on a positive cycle."""
    x = np.zeros(n)
    for _ in range(n + 1):
        changed = False
        for a, b, w in edges:
            if x[a] + w > x[b] + 1e-15:
                x[b] = x[a] + w
                changed = True
        if not changed:
            return x
    return None


def min_sum_prices(state: ParkingState, draws: Sequence[float], margin: float | None = None) -> SlotPrices:
    """Componentwise least prices meeting both payment conditions for fixed draws."""
    margin = strict_margin(state.instance) if margin is None else margin
    st = blocks(state, allow_open=True)
    closed = [b for b in st.blocks if b.closed]
    if len(draws) != len(closed):
        raise ValueError("one draw per closed block")
    vac = state.vacant
    idx = {v: i for i, v in enumerate(vac)}
    q_at = {b.L: q for b, q in zip(closed, draws)}
    d = state.instance.line.distance
    for attempt in range(2):
        edges = []
        for u, v in zip(vac, vac[1:]):
            a, b = idx[u], idx[v]
            lim = d(u, v) - margin
            # x_a - x_b <= lim and x_b - x_a <= lim
            edges.append((a, b, -lim))
            edges.append((b, a, -lim))
            if u in q_at:
                q = q_at[u]  # x_a - x_b = q
                edges.append((b, a, q))
                edges.append((a, b, -q))
        x = _bellman_ford_longest(len(vac), edges)
        if x is not None:
            return SlotPrices({v: float(x[idx[v]]) for v in vac}, list(draws), st)
        margin /= 2
    raise InvariantViolation("price constraints infeasible", (state.occupied.copy(), list(draws)))


# -- monotone algorithms -------------------------------------------------------------


@dataclass(frozen=True)
class MonotoneCdf:
    """Distribution of P(R) - P(L) for one block.

    ``breaks``/``values`` give the step CDF: ``values[i]`` on
    ``(breaks[i-1], breaks[i]]``.  Samples are drawn from atoms placed
    just above each breakpoint (strictly before the next vertex), so every
    agent in the block goes left with exactly its prescribed probability
    and |q| < d stays strict.
    """

    d: float
    breaks: tuple
    values: tuple
    atoms: tuple
    masses: tuple

    def __call__(self, x: float) -> float:
        if x <= -self.d:
            return 0.0
        for b, v in zip(self.breaks, self.values):
            if x <= b:
                return v
        return 1.0

    def sample(self, rng) -> float:
        return float(self.atoms[rng.choice(len(self.atoms), p=self.masses)])


def monotone_cdf(p_left: dict, block: Block, inst: ParkingInstance) -> MonotoneCdf:
    c = inst.coords
    cL, cR = c[block.L], c[block.R]
    dj = float(cR - cL)
    verts = sorted(p_left, key=lambda v: c[v])
    for v in verts:
        if not block.first <= v <= block.last:
            raise ValueError(f"vertex {v} is not in the block")
    delta = {v: float((c[v] - cL) - (cR - c[v])) for v in verts}
    for a, b in zip(verts, verts[1:]):
        if p_left[b] > p_left[a]:
            raise ValueError(f"p_left increases from vertex {a} to {b}: not monotone", (a, b))
    for v in verts:
        if not 0.0 <= p_left[v] <= 1.0:
            raise ValueError(f"p_left[{v}] is not a probability")
    reps = [v for i, v in enumerate(verts) if i == len(verts) - 1 or p_left[verts[i + 1]] != p_left[v]]
    breaks = tuple(delta[v] for v in reps)
    ps = [p_left[v] for v in reps]
    values = tuple(1.0 - p for p in ps)
    all_d = sorted(delta.values())
    after = {}
    for v in reps:
        nxt = next((x for x in all_d if x > delta[v]), dj)
        after[v] = (delta[v] + nxt) / 2
    atoms = [(-dj + all_d[0]) / 2] + [after[v] for v in reps]
    masses = [1.0 - ps[0]] + [ps[i] - (ps[i + 1] if i + 1 < len(ps) else 0.0) for i in range(len(ps))]
    keep = [(a, m) for a, m in zip(atoms, masses) if m > 0]
    atoms, masses = zip(*keep)
    masses = np.asarray(masses) / sum(masses)
    return MonotoneCdf(dj, breaks, values, tuple(atoms), tuple(masses))


def monotone_prices(cdfs: Sequence[MonotoneCdf], state: ParkingState, rng) -> SlotPrices:
    """Sample q_j = P(R) - P(L) per closed block; P(v) sums q_j over blocks left of v."""
    st = blocks(state, allow_open=True)
    closed = [b for b in st.blocks if b.closed]
    if len(cdfs) != len(closed):
        raise ValueError("one CDF per closed block")
    draws = [f.sample(rng) for f in cdfs]
    return SlotPrices(_prefix_prices(state, st, draws, right_of=True), draws, st)


def harmonic_table(state: ParkingState, block: Block, dist=None) -> dict:
    """Left probabilities of the harmonic rule for every vertex of a block."""
    return {v: harmonic_p_left(state, v, block.L, block.R, dist) for v in block.vertices}


# -- prior-based metric transform ----------------------------------------------------------


@dataclass(frozen=True)
class TransformedLine:
    """Line metric after cutting long edges and flooring short ones."""

    coords: np.ndarray
    component: np.ndarray
    cut: tuple
    floor: float

    def distance(self, u: int, v: int) -> float:
        if self.component[u] != self.component[v]:
            return math.inf
        return float(abs(self.coords[u] - self.coords[v]))

    def aspect_ratio(self) -> float:
        gaps = [g for i, g in enumerate(np.diff(self.coords)) if i not in self.cut]
        if not gaps:
            return 1.0
        span = 0.0
        for comp in np.unique(self.component):
            idx = np.flatnonzero(self.component == comp)
            span = max(span, float(self.coords[idx[-1]] - self.coords[idx[0]]))
        return span / min(gaps)


def transform_metric(line: WeightedLine, Z: float, c: float, n: int) -> TransformedLine:
    if Z <= 0 or c <= 1:
        raise ValueError("need Z > 0 and c > 1")
    floor = Z / (2 * c * n * n)
    gaps = line.gaps
    cut = tuple(i for i, g in enumerate(gaps) if g >= Z)
    new = np.where(gaps < floor, floor, gaps)
    new[list(cut)] = 0.0
    coords = np.concatenate([[0.0], np.cumsum(new)])
    comp = np.zeros(line.m, dtype=int)
    for i in range(1, line.m):
        comp[i] = comp[i - 1] + (1 if (i - 1) in cut else 0)
    return TransformedLine(coords, comp, cut, floor)


# -- offline oracle -----------------------------------------------------------------


def matching_offline_opt(inst: ParkingInstance, k: int | None = None, dist=None) -> float:
    """Exact minimum-cost assignment of the first ``k`` goals to distinct slots."""
    goals = inst.goals[: inst.n if k is None else k]
    if not goals:
        return 0.0
    dist = dist or inst.line.distance
    slots = inst.slots
    C = np.array([[dist(g, s) for s in slots] for g in goals], dtype=float)
    big = np.isinf(C)
    if big.any():
        C[big] = 1e300
    rows, cols = linear_sum_assignment(C)
    total = float(C[rows, cols].sum())
    return math.inf if total >= 1e300 else total


def matching_brute_force(inst: ParkingInstance, dist=None) -> float:
    dist = dist or inst.line.distance
    best = math.inf
    for perm in itertools.permutations(inst.slots, inst.n):
        best = min(best, sum(dist(g, s) for g, s in zip(inst.goals, perm)))
    return best


def adversarial_instance(n: int, eps: float) -> ParkingInstance:
    """Greedy cascade: slots at 0 and powers of two, goals just right of each slot."""
    if n < 2 or not 0 < eps < 0.5:
        raise ValueError("need n >= 2 and 0 < eps < 1/2")
    slots = [0.0] + [2.0 ** i for i in range(n)]
    goals = [1.0] + [2.0 ** (i - 2) + eps for i in range(2, n + 1)]
    return ParkingInstance.from_points(slots, goals)


# -- runs --------------------------------------------------------------------------------


@dataclass
class ParkingRun:
    trace: Trace
    state: ParkingState
    prices: list = field(default_factory=list)

    @property
    def cost(self) -> float:
        return self.trace.total


def _run(inst: ParkingInstance, chooser) -> ParkingRun:
    state = ParkingState(inst)
    trace = Trace()
    d = inst.line.distance
    run = ParkingRun(trace, state)
    for i, g in enumerate(inst.goals):
        v, opts, prices = chooser(state, g)
        trace.record(TraceRow(i, opts, prices, v, d(g, v)))
        state.park(v)
    return run


def run_greedy(inst: ParkingInstance) -> ParkingRun:
    return _run(inst, lambda st, g: (greedy_step(st, g), {}, {}))


def run_harmonic(inst: ParkingInstance, rng) -> ParkingRun:
    return _run(inst, lambda st, g: (harmonic_step(st, g, rng), {}, {}))


def _priced_choice(state, g, sp: SlotPrices, policy, rng):
    d = state.instance.line.distance
    opts = {v: d(g, v) + p for v, p in sp.prices.items()}
    return decide(opts, policy, tol=0.0, rng=rng), opts, sp.prices


def run_harmonic_priced(inst: ParkingInstance, rng, policy="first", lp: bool = False, audit=None) -> ParkingRun:
    """Selfish drivers facing harmonic prices (optionally re-solved for minimum sum)."""

    def choose(state, g):
        sp = harmonic_prices(state, rng)
        if lp:
            sp = min_sum_prices(state, sp.draws)
        if audit is not None:
            audit(state, sp)
        return _priced_choice(state, g, sp, policy, rng)

    return _run(inst, choose)


def run_monotone_priced(inst: ParkingInstance, table: Callable, rng, policy="first") -> ParkingRun:
    """Selfish drivers facing CDF prices built from ``table(state, block) -> p_left``."""

    def choose(state, g):
        st = blocks(state, allow_open=True)
        cdfs = [monotone_cdf(table(state, b), b, inst) for b in st.blocks if b.closed]
        sp = monotone_prices(cdfs, state, rng)
        return _priced_choice(state, g, sp, policy, rng)

    return _run(inst, choose)


def prior_table(tl: TransformedLine):
    """Harmonic probabilities measured in the transformed metric."""

    def table(state, block):
        # Vertices of a full component see no vacancy on either side; no
        # future goal lies there, so they copy their left neighbour.
        out, prev = {}, 1.0
        for v in block.vertices:
            try:
                prev = harmonic_p_left(state, v, block.L, block.R, tl.distance)
            except CapacityError:
                pass
            out[v] = prev
        return out

    return table


def run_prior_priced(inst: ParkingInstance, Z: float, c: float, rng, policy="first") -> ParkingRun:
    tl = transform_metric(inst.line, Z, c, inst.n)
    return run_monotone_priced(inst, prior_table(tl), rng, policy)


def run_harmonic_transformed(inst: ParkingInstance, tl: TransformedLine, rng) -> ParkingRun:
    """The harmonic algorithm itself on the transformed metric (cost reported in d)."""
    return _run(inst, lambda st, g: (harmonic_step(st, g, rng, tl.distance), {}, {}))


def planted_prior_instance(n: int, rng, c: float = 2.0):
    """Clustered weighted line with known OPT and an estimate Z in [OPT, c*OPT].

    Clusters hold at most n+1 slots and sit far apart; empty single-slot
    clusters bound the line on both ends.  Intra-cluster gaps span several
    orders of magnitude so the transform has something to do.  Fewer
    clusters than cars means some cluster receives two cars, and one of its
    goals is duplicated so that OPT > 0.
    Returns ``(instance, Z, opt)``.
    """
    if n < 2:
        raise ValueError("need at least two cars")
    K = int(rng.integers(1, min(3, n - 1) + 1))
    counts = rng.multinomial(n, np.ones(K) / K)
    busiest = int(np.argmax(counts))
    coords, goals = [0.0], []
    x, far = 0.0, 1e7
    for k, cnt in enumerate(counts):
        cnt = int(cnt)
        size = min(n + 1, cnt + int(rng.integers(1, 3)))
        x += far
        start = len(coords)
        for s in range(size):
            if s:
                x += float(10 ** rng.uniform(-3, 1))
            coords.append(x)
        if cnt:
            picks = [int(v) for v in rng.integers(start, start + size, cnt)]
            if k == busiest:
                picks[1] = picks[0]
            goals.extend(picks)
    coords.append(x + far)
    goals = [goals[i] for i in rng.permutation(len(goals))]
    inst = ParkingInstance(WeightedLine(coords), (True,) * len(coords), tuple(goals))
    opt = matching_offline_opt(inst)
    Z = float(rng.uniform(opt, c * opt))
    return inst, Z, opt
