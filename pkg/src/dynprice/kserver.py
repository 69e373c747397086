"""k-server on line and tree metrics.

Double Coverage (DC) is made lazy by matching its configuration against the
real one after every request; the lazy algorithm is local and, on the line,
monotone, which is what lets server prices steer selfish agents into copying
it.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Sequence

from .agents import Trace, TraceRow, decide
from .metric import TOL, RealLine, TreeMetric, TreePoint, canonical_matching, r_local_matching


class InvariantViolation(RuntimeError):
    """An internal guarantee failed; carries a witness."""

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


@dataclass(frozen=True)
class ServerConfig:
    positions: tuple
    travel: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(self.positions))
        if self.travel is None:
            object.__setattr__(self, "travel", (0.0,) * len(self.positions))
        if len(self.travel) != len(self.positions):
            raise ValueError("one travel entry per server")
        if any(t < 0 for t in self.travel):
            raise ValueError("travel must be non-negative")

    @property
    def k(self) -> int:
        return len(self.positions)

    def move(self, sid: int, to, space) -> "ServerConfig":
        dist = space.distance(self.positions[sid], to)
        pos = list(self.positions)
        tr = list(self.travel)
        pos[sid] = to
        tr[sid] += dist
        return ServerConfig(tuple(pos), tuple(tr))

    def order(self) -> list[int]:
        """Server ids left to right (line only); coincident servers by id."""
        return sorted(range(self.k), key=lambda i: (self.positions[i], i))


@dataclass(frozen=True)
class VirtualPair:
    virtual: ServerConfig
    real: ServerConfig

    def __post_init__(self):
        if self.virtual.k != self.real.k:
            raise ValueError("virtual and real configurations differ in size")


@dataclass(frozen=True)
class DcResult:
    config: ServerConfig
    moved: tuple
    served: int

    @property
    def cost(self) -> float:
        return sum(self.moved)


def _at(space, a, b) -> bool:
    return space.distance(a, b) <= TOL


def _dc_line(config: ServerConfig, r) -> DcResult:
    pos = config.positions
    k = config.k
    moved = [0.0] * k
    order = config.order()
    for i in order:
        if abs(pos[i] - r) <= TOL:
            return DcResult(config, tuple(moved), i)
    left = [i for i in order if pos[i] < r]
    right = [i for i in order if pos[i] > r]
    sl = left[-1] if left else None
    sr = right[0] if right else None
    space = RealLine()
    if sr is None:
        return DcResult(config.move(sl, r, space), _one(k, sl, r - pos[sl]), sl)
    if sl is None:
        return DcResult(config.move(sr, r, space), _one(k, sr, pos[sr] - r), sr)
    dl, dr = r - pos[sl], pos[sr] - r
    t = min(dl, dr)
    new = config
    if dl <= dr:
        new = new.move(sl, r, space)
        new = new.move(sr, r if dl == dr else pos[sr] - t, space)
        served = sl
    else:
        new = new.move(sr, r, space)
        new = new.move(sl, pos[sl] + t, space)
        served = sr
    moved[sl] = moved[sr] = t
    return DcResult(new, tuple(moved), served)


def _one(k, i, dist):
    m = [0.0] * k
    m[i] = dist
    return tuple(m)


def _adjacent_ids(space, pos, r) -> list[int]:
    """Servers with no other server on their path to r; coincident servers yield the lowest id."""
    out = []
    k = len(pos)
    for s in range(k):
        ok = True
        for o in range(k):
            if o == s:
                continue
            if _at(space, pos[o], pos[s]):
                if o < s:
                    ok = False
                    break
                continue
            if space.on_path(pos[s], pos[o], r):
                ok = False
                break
        if ok:
            out.append(s)
    return out


def _dc_general(config: ServerConfig, r, space) -> DcResult:
    """Event-driven DC: adjacent servers approach r at unit speed until one arrives."""
    pos = list(config.positions)
    k = len(pos)
    moved = [0.0] * k
    for i in range(k):
        if _at(space, pos[i], r):
            return DcResult(config, tuple(moved), i)
    for _ in range(4 * k + 4):
        active = _adjacent_ids(space, pos, r)
        dist = {s: space.distance(pos[s], r) for s in active}
        t = min(dist.values())
        for a in active:
            for b in active:
                if a == b:
                    continue
                # time for a to reach the point where its path to r joins b's
                ta = (dist[a] + space.distance(pos[a], pos[b]) - dist[b]) / 2
                if TOL < ta < t:
                    t = ta
        for s in active:
            pos[s] = space.toward(pos[s], r, t)
            moved[s] += t
        arrived = [s for s in active if space.distance(pos[s], r) <= TOL]
        if arrived:
            served = min(arrived)
            pos[served] = r if not isinstance(space, TreeMetric) else space.point(r)
            travel = tuple(a + b for a, b in zip(config.travel, moved))
            return DcResult(ServerConfig(tuple(pos), travel), tuple(moved), served)
    raise InvariantViolation("DC on tree did not converge", (config, r))


def dc_step(config: ServerConfig, r, space=None) -> DcResult:
    space = space or RealLine()
    if isinstance(space, RealLine):
        return _dc_line(config, r)
    return _dc_general(config, space.point(r), space)


@dataclass(frozen=True)
class LazyResult:
    pair: VirtualPair
    served: int
    cost: float
    virtual_cost: float


def lazy_step(pair: VirtualPair, r, space=None) -> LazyResult:
    """Advance DC, then move the real server matched to r in an r-local matching."""
    space = space or RealLine()
    if isinstance(space, TreeMetric):
        r = space.point(r)
    dc = dc_step(pair.virtual, r, space)
    X, Y = dc.config.positions, pair.real.positions
    M = r_local_matching(X, Y, X[dc.served], space, r_index=dc.served)
    j = M.perm[dc.served]
    cost = space.distance(Y[j], r)
    return LazyResult(VirtualPair(dc.config, pair.real.move(j, r, space)), j, cost, dc.cost)


def potential(pair: VirtualPair, space=None) -> float:
    """Minimum-cost matching between virtual and real servers."""
    space = space or RealLine()
    if isinstance(space, RealLine):
        return canonical_matching(pair.virtual.positions, pair.real.positions).cost
    from .metric import min_cost_matching_oracle

    return min_cost_matching_oracle(pair.virtual.positions, pair.real.positions, space).cost


def served_by(pair: VirtualPair, r, space=None) -> int:
    """Which real server the lazy algorithm would send to a hypothetical request."""
    return lazy_step(pair, r, space).served


# -- regions and prices ---------------------------------------------------------


@dataclass(frozen=True)
class Threshold:
    a: int
    b: int
    point: object


@dataclass(frozen=True)
class RegionMap:
    """Region adjacency (a tree over server ids) with one threshold per edge."""

    servers: tuple
    thresholds: tuple  # of Threshold
    line: bool = True
    contacts: tuple = ()  # redundant region contacts (trees only)

    def owner(self, r) -> int:
        """Region owner on the line; the threshold itself belongs to the left region."""
        if not self.line:
            raise NotImplementedError("owner lookup by thresholds is line-only")
        for th in self.thresholds:
            if r <= th.point + 0.0:
                return th.a
        return self.servers[-1]


def _bisect(pred, lo: float, hi: float, tol: float) -> float:
    """Largest x in [lo, hi] with pred(x) true, assuming pred is true then false."""
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _snap(x: float, candidates, tol: float) -> float:
    best = min(candidates, key=lambda c: abs(c - x))
    return best if abs(best - x) <= 2 * tol else x


def regions(pair: VirtualPair, space=None, rel_tol: float = 1e-9) -> RegionMap:
    """Locate region thresholds by bisection over cloned hypothetical requests."""
    space = space or RealLine()
    if not isinstance(space, RealLine):
        return _regions_tree(pair, space, rel_tol)
    real = pair.real
    order = real.order()
    pos = real.positions
    vpos = sorted(pair.virtual.positions)
    mids = [(a + b) / 2 for a, b in zip(vpos, vpos[1:])]
    ths = []
    for i in range(len(order) - 1):
        a, b = order[i], order[i + 1]
        lo, hi = pos[a], pos[b]
        left = set(order[: i + 1])

        def pred(x, left=left):
            return served_by(pair, x, space) in left

        if hi - lo <= TOL:
            v = lo
        elif not pred(lo):
            raise InvariantViolation("request at a server is not served by it", (pair, lo))
        elif pred(hi):
            v = hi
        else:
            tol = rel_tol * (hi - lo)
            v = _bisect(pred, lo, hi, tol)
            v = _snap(v, mids + vpos + [lo, hi], tol)
            if pred(v + 4 * tol) and v + 4 * tol < hi:
                raise InvariantViolation("served index is not monotone in the request", (pair, v))
        ths.append(Threshold(a, b, v))
    return RegionMap(tuple(order), tuple(ths), line=True)


def _regions_tree(pair: VirtualPair, space: TreeMetric, rel_tol: float) -> RegionMap:
    pos = pair.real.positions
    k = len(pos)
    reps = {}
    for s in range(k):
        twin = next((o for o in range(s) if _at(space, pos[o], pos[s])), None)
        reps[s] = s if twin is None else reps[twin]
    ids = [s for s in range(k) if reps[s] == s]
    cand = []
    for x in range(len(ids)):
        for y in range(x + 1, len(ids)):
            a, b = ids[x], ids[y]
            D = space.distance(pos[a], pos[b])
            tol = rel_tol * D

            def reach(src, dst, who):
                def pred(t):
                    return reps[served_by(pair, space.toward(pos[src], pos[dst], t), space)] == who

                if not pred(0.0):
                    raise InvariantViolation("request at a server is not served by it", (pair, src))
                return _bisect(pred, 0.0, D, tol) if not pred(D) else D

            ta = reach(a, b, a)
            tb = reach(b, a, b)
            if ta + tb >= D - 4 * tol:
                cand.append(Threshold(a, b, space.toward(pos[a], pos[b], ta)))
    # several regions can touch at one point; a spanning tree of contacts fixes all prices
    root = {s: s for s in ids}

    def find(s):
        while root[s] != s:
            s = root[s]
        return s

    ths, extra = [], []
    for th in cand:
        ra, rb = find(th.a), find(th.b)
        if ra == rb:
            extra.append(th)
        else:
            root[ra] = rb
            ths.append(th)
    if len(ths) != len(ids) - 1:
        raise InvariantViolation("regions are not connected", (pair, cand))
    # coincident duplicates share their twin's region boundary at distance zero
    for s in range(k):
        if reps[s] != s:
            ths.append(Threshold(reps[s], s, pos[s]))
    return RegionMap(tuple(range(k)), tuple(ths), line=False, contacts=tuple(extra))


def server_prices(rmap: RegionMap, config: ServerConfig, space=None) -> dict[int, float]:
    """Solve P(a) + d(a, v) = P(b) + d(b, v) over the region tree, breadth first."""
    space = space or RealLine()
    pos = config.positions
    adj: dict[int, list] = {s: [] for s in rmap.servers}
    for th in rmap.thresholds:
        adj[th.a].append((th.b, th.point))
        adj[th.b].append((th.a, th.point))
    start = rmap.servers[0]
    price = {start: 0.0}
    queue = deque([start])
    while queue:
        a = queue.popleft()
        for b, v in adj[a]:
            want = price[a] + space.distance(pos[a], v) - space.distance(pos[b], v)
            if b in price:
                if abs(price[b] - want) > 1e-9:
                    raise InvariantViolation("inconsistent threshold equations", (a, b, v))
                continue
            price[b] = want
            queue.append(b)
    if len(price) != config.k:
        raise InvariantViolation("region graph is disconnected", rmap)
    shift = min(price.values())
    return {s: price[s] - shift for s in sorted(price)}


def perturb_thresholds(rmap: RegionMap, config: ServerConfig, eps: float, space=None) -> RegionMap:
    """Move thresholds that sit on a server by ``eps`` towards the other server."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    space = space or RealLine()
    pos = config.positions
    out = []
    for th in rmap.thresholds:
        pa, pb = pos[th.a], pos[th.b]
        D = space.distance(pa, pb)
        v = th.point
        if D > 2 * eps:
            if space.distance(v, pa) <= TOL:
                v = space.toward(pa, pb, eps)
            elif space.distance(v, pb) <= TOL:
                v = space.toward(pb, pa, eps)
        out.append(replace(th, point=v))
    return replace(rmap, thresholds=tuple(out))


def initial_eps(config: ServerConfig, space=None, factor: float = 1e-6) -> float:
    space = space or RealLine()
    pos = config.positions
    gaps = [space.distance(a, b) for i, a in enumerate(pos) for b in pos[i + 1:]]
    gaps = [g for g in gaps if g > TOL]
    return factor * (min(gaps) if gaps else 1.0)


def eps_schedule(eps0: float, i: int) -> float:
    return eps0 * 2.0 ** (-i)


def balance2_prices(config: ServerConfig) -> dict[int, float]:
    if config.k != 2:
        raise ValueError("Balance2 pricing is defined for exactly two servers")
    return {s: t / 2 for s, t in enumerate(config.travel)}


def kserver_agent_options(prices: dict, config: ServerConfig, r, space=None) -> dict[int, float]:
    space = space or RealLine()
    return {s: space.distance(r, p) + prices[s] for s, p in enumerate(config.positions)}


# -- runs ------------------------------------------------------------------------


def run_dc(initial: ServerConfig, requests, space=None) -> float:
    cfg, total = initial, 0.0
    for r in requests:
        res = dc_step(cfg, r, space)
        cfg, total = res.config, total + res.cost
    return total


@dataclass
class LazyRun:
    cost: float = 0.0
    virtual_cost: float = 0.0
    served: list = field(default_factory=list)
    pairs: list = field(default_factory=list)


def run_lazy(initial: ServerConfig, requests, space=None) -> LazyRun:
    pair = VirtualPair(initial, initial)
    run = LazyRun(pairs=[pair])
    for r in requests:
        res = lazy_step(pair, r, space)
        pair = res.pair
        run.cost += res.cost
        run.virtual_cost += res.virtual_cost
        run.served.append(res.served)
        run.pairs.append(pair)
    return run


@dataclass
class AgentRun:
    trace: Trace
    pair: VirtualPair
    dc_cost: float
    eps_total: float


def run_priced_agents(initial: ServerConfig, requests, space=None, policy="first", rng=None,
                      callback=None, eps0: float | None = None) -> AgentRun:
    """Selfish agents facing threshold prices derived from lazy DC."""
    space = space or RealLine()
    eps0 = initial_eps(initial, space) if eps0 is None else eps0
    pair = VirtualPair(initial, initial)
    trace = Trace()
    dc_cost = 0.0
    eps_total = 0.0
    for i, r in enumerate(requests):
        if isinstance(space, TreeMetric):
            r = space.point(r)
        eps = eps_schedule(eps0, i)
        eps_total += 2 * eps
        rmap = perturb_thresholds(regions(pair, space), pair.real, eps, space)
        prices = server_prices(rmap, pair.real, space)
        opts = kserver_agent_options(prices, pair.real, r, space)
        # exact comparison: perturbed thresholds separate servers by ~eps, below any fixed tolerance
        s = decide(opts, policy, tol=0.0, rng=rng, callback=callback)
        cost = space.distance(pair.real.positions[s], r)
        trace.record(TraceRow(i, opts, prices, s, cost))
        dc = dc_step(pair.virtual, r, space)
        dc_cost += dc.cost
        pair = VirtualPair(dc.config, pair.real.move(s, r, space))
    return AgentRun(trace, pair, dc_cost, eps_total)


def run_balance2(initial: ServerConfig, requests, space=None) -> Trace:
    """Balance2 decision rule applied directly."""
    space = space or RealLine()
    cfg, trace = initial, Trace()
    for i, r in enumerate(requests):
        score = {s: space.distance(r, p) + cfg.travel[s] / 2 for s, p in enumerate(cfg.positions)}
        s = min(score, key=lambda k: (score[k], k))
        trace.record(TraceRow(i, score, {}, s, space.distance(cfg.positions[s], r)))
        cfg = cfg.move(s, r, space)
    return trace


def run_balance2_agents(initial: ServerConfig, requests, space=None, policy="first", rng=None) -> Trace:
    space = space or RealLine()
    cfg, trace = initial, Trace()
    for i, r in enumerate(requests):
        prices = balance2_prices(cfg)
        opts = kserver_agent_options(prices, cfg, r, space)
        s = decide(opts, policy, tol=0.0, rng=rng)
        trace.record(TraceRow(i, opts, prices, s, space.distance(cfg.positions[s], r)))
        cfg = cfg.move(s, r, space)
    return trace


def run_free_agents(initial: ServerConfig, requests, space=None, policy="first", rng=None) -> Trace:
    space = space or RealLine()
    cfg, trace = initial, Trace()
    zero = {s: 0.0 for s in range(initial.k)}
    for i, r in enumerate(requests):
        opts = kserver_agent_options(zero, cfg, r, space)
        s = decide(opts, policy, rng=rng)
        trace.record(TraceRow(i, opts, zero, s, space.distance(cfg.positions[s], r)))
        cfg = cfg.move(s, r, space)
    return trace


def _key(p):
    return (p.vertex, p.h) if isinstance(p, TreePoint) else p


def kserver_offline_opt(requests: Sequence, initial: ServerConfig, space=None, max_states: int = 200_000) -> float:
    """Exact optimum by DP over server multisets; only lazy moves are needed."""
    space = space or RealLine()
    if isinstance(space, TreeMetric):
        requests = [space.point(r) for r in requests]
        start = tuple(sorted((space.point(p) for p in initial.positions), key=_key))
    else:
        start = tuple(sorted(initial.positions))
    layer = {start: 0.0}
    for r in requests:
        nxt: dict[tuple, float] = {}
        for cfg, c in layer.items():
            for i in range(len(cfg)):
                if i and cfg[i] == cfg[i - 1]:
                    continue
                new = tuple(sorted(cfg[:i] + (r,) + cfg[i + 1:], key=_key))
                nc = c + space.distance(cfg[i], r)
                if nc < nxt.get(new, math.inf):
                    nxt[new] = nc
        layer = nxt
        if len(layer) > max_states:
            raise ValueError(f"offline k-server DP exceeded {max_states} states")
    return min(layer.values())
