"""Property suites shared by ``verify`` and the acceptance tests.

Each suite takes a seed and a ``scale`` (fraction of the full trial count)
and returns a ``SuiteResult``; the first failing instance is kept as the
witness.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from . import kserver as ks
from . import mts
from . import parking as pk
from .agents import argmin_set, decide
from .generators import (
    _random_task, build_kserver, build_mts, build_parking, gen_kserver_line, gen_mts_uniform, gen_parking_random,
)
from .metric import (
    MatrixMetric, RealLine, TreeMetric, WeightedLine, canonical_matching, is_adjacent, min_cost_matching_oracle,
    r_local_matching,
)


@dataclass
class SuiteResult:
    name: str
    passed: bool = True
    stats: dict = field(default_factory=dict)
    witness: object = None
    notes: list = field(default_factory=list)

    def fail(self, why: str, witness=None):
        if self.passed:
            self.witness = {"reason": why, "instance": witness}
        self.passed = False
        self.notes.append(why)

    def summary(self) -> str:
        items = " ".join(f"{k}={_fmt(v)}" for k, v in self.stats.items())
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} {items}".rstrip()


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _n(full: int, scale: float, floor: int = 1) -> int:
    return max(floor, int(round(full * scale)))


# -- mts ------------------------------------------------------------------------------


WORKED_D = [[0, 2, 3], [2, 0, 4], [3, 4, 0]]
WORKED_TAU = (0, 1, 0, 2)
WORKED_TASKS = [[3, 6, 3], [1, 3, 4], [10, 10, 10]]
WORKED_FRACTIONS = [
    [(1, Fraction(2, 3)), (2, Fraction(1, 3))],
    [(3, Fraction(1))],
    [(3, Fraction(1, 5)), (4, Fraction(3, 10)), (5, Fraction(1, 5)), (6, Fraction(1, 5)), (7, Fraction(1, 10))],
]


def worked_system() -> mts.TaskSystem:
    return mts.TaskSystem(MatrixMetric(WORKED_D), 0, WORKED_TAU)


def worked_trace():
    """Run the worked example in exact arithmetic; returns (fractions per task, rho after each)."""
    cur = mts.TraversalCursor(worked_system())
    fr, rhos = [], []
    for w in WORKED_TASKS:
        fr.append(cur.step([Fraction(x) for x in w]))
        rhos.append(cur.rho)
    return fr, rhos, cur


def suite_golden(seed=0, scale=1.0) -> SuiteResult:
    res = SuiteResult("golden-trace")
    fr, rhos, cur = worked_trace()
    if fr != WORKED_FRACTIONS:
        res.fail("fractions differ", fr)
    if rhos != [0, 1, 1]:
        res.fail("residuals differ", rhos)
    res.stats["t"] = cur.t
    return res


def _clone_follow(st: mts.FollowState) -> mts.FollowState:
    return mts.FollowState(st.system, list(st.ell), st.cursor.clone(), st.cost, list(st.cases))


def _escape_task(st, rng):
    """Zero cost at a state outside the current superstate, a moderate cost everywhere else."""
    tau = st.system.tau
    l, t = st.ell[-1], st.cursor.t[-1]
    lo, hi = min(l, t), max(l, t)
    inside = {tau[j] for j in range(lo, hi + 1)}
    out = [s for s in range(st.system.m) if s not in inside]
    if not out:
        return None
    s = out[int(rng.integers(len(out)))]
    reach = int(tau.delta(hi, tau.first_at_or_after(s, lo)))
    span = int(tau.delta(lo, hi))
    w = [reach + 1 + int(rng.integers(2 * span + 2))] * st.system.m
    w[s] = 0
    return w


# A star (arms 10, 1, 1) on which the follower first leaps ahead of a stalled
# traversal, then leaps again while the traversal stays behind.
LEAP_DOC = {"d": [[0, 10, 1, 1], [10, 0, 11, 11], [1, 11, 0, 2], [1, 11, 2, 0]], "s0": 0,
            "tasks": [[22, 15, 0, 22], [3, 3, 3, 0]]}


def _follow_checked(system, tasks, res, witness, cases):
    """Run follow-the-traversal, checking the 2x bound and the work bookkeeping after each task."""
    st = mts.FollowState(system)
    for w in tasks:
        mts.follow_step(st, w)
        cur = st.cursor
        book = system.tau.delta(1, cur.j) + cur.rho
        if abs(cur.work - book) > 1e-9 * max(1.0, abs(book)):
            res.fail("traversal work bookkeeping", witness)
    cases.update(st.cases)
    if st.cost > 2 * st.cursor.cost + 1e-9:
        res.fail("follow cost exceeds twice the traversal cost", witness)
    return st


def suite_mts_follow(seed=0, scale=1.0) -> SuiteResult:
    res = SuiteResult("mts-follow-2x")
    trials = _n(1000, scale)
    cases: Counter = Counter()
    system, tasks = build_mts(LEAP_DOC)
    _follow_checked(system, tasks, res, LEAP_DOC, cases)
    worst = 0.0
    for k in range(trials):
        rng = _rng(seed, k)
        m, n = int(rng.integers(2, 7)), int(rng.integers(1, 21))
        doc = gen_mts_uniform(rng, m, n, shape=("random", "star")[k % 2])
        system, _ = build_mts(doc)
        st = mts.FollowState(system)
        chosen = []
        # steer: among a few candidate tasks, keep the one producing the rarest ordering so far
        for w in doc["tasks"]:
            cands = [w] + [_random_task(rng, m, 16) for _ in range(3)]
            cands += [e for e in (_escape_task(st, rng) for _ in range(3)) if e]
            best = None
            for c in cands:
                probe = _clone_follow(st)
                mts.follow_step(probe, c)
                key = cases[probe.cases[-1]]
                if best is None or key < best[0]:
                    best = (key, c)
            mts.follow_step(st, best[1])
            cases[st.cases[-1]] += 1
            chosen.append(best[1])
        witness = dict(doc, tasks=chosen)
        final = _follow_checked(system, chosen, res, witness, Counter())
        if final.cursor.cost > 0:
            worst = max(worst, final.cost / final.cursor.cost)
    missing = [c for c in range(1, 10) if not cases[c]]
    if missing:
        res.fail(f"orderings never observed: {missing}")
    res.stats.update(trials=trials, cases=dict(sorted(cases.items())), worst_ratio=worst)
    return res


def suite_mts_pricing(seed=0, scale=1.0) -> SuiteResult:
    res = SuiteResult("mts-pricing")
    trials = _n(400, scale)
    worst = 0.0
    policies = ("first", "last", "random")
    for k in range(trials):
        rng = _rng(seed, k)
        m, n = int(rng.integers(2, 7)), int(rng.integers(1, 21))
        doc = gen_mts_uniform(rng, m, n, shape=("random", "star")[k % 2])
        system, tasks = build_mts(doc)
        run = mts.run_priced_agents(system, tasks, policy=policies[k % 3], rng=rng)
        if run.fidelity_failures:
            res.fail("agent choice outside the follower's argmin", doc)
        prev = system.s0
        for w, wt, row in zip(tasks, run.imaginary, run.trace.rows):
            s = row.choice
            if wt[s] != w[s] or any(a > b + 1e-9 for a, b in zip(wt, w)):
                res.fail("imaginary task not dominated by the real one", doc)
            # the chosen state is optimal for the agent under the imaginary task as well
            paid = wt[s] + system.d.distance(prev, s) + row.prices[s]
            for j in range(m):
                if paid > wt[j] + system.d.distance(prev, j) + row.prices[j] + 1e-9:
                    res.fail("imaginary task inconsistent with the observed choice", doc)
            prev = s
        opt = mts.mts_offline_opt(tasks, system.d, system.s0)
        r = run.trace.total / opt if opt > 0 else (1.0 if run.trace.total == 0 else math.inf)
        worst = max(worst, r / (16 * (m - 1)))
        if r > 16 * (m - 1) + 1e-9:
            res.fail("price of anarchy above 16(m-1)", doc)
    res.stats.update(trials=trials, worst_ratio_over_bound=worst)
    return res


def suite_mts_monotone(seed=0, scale=1.0) -> SuiteResult:
    res = SuiteResult("mts-monotone-work")
    trials = _n(1000, scale)
    for k in range(trials):
        rng = _rng(seed, k)
        m, n = int(rng.integers(1, 6)), int(rng.integers(1, 16))
        doc = gen_mts_uniform(rng, m, n)
        system, tasks = build_mts(doc)
        lower = [[int(x * u) for x, u in zip(w, rng.uniform(0, 1, m))] for w in tasks]
        a = mts.run_traversal(system, tasks)
        b = mts.run_traversal(system, lower)
        tau = system.tau
        if b.work > a.work + 1e-9 or tau.delta(1, b.t[-1]) > tau.delta(1, a.t[-1]) + 1e-9:
            res.fail("traversal not monotone in the task costs", dict(doc, lower=lower))
    res.stats["trials"] = trials
    return res


# -- matching ----------------------------------------------------------------------------


def random_tree(rng, nv: int, wmax: int = 6) -> TreeMetric:
    return TreeMetric(nv, [(i, int(rng.integers(0, i)), int(rng.integers(1, wmax + 1))) for i in range(1, nv)])


def suite_matching(seed=0, scale=1.0) -> SuiteResult:
    res = SuiteResult("matching")
    trials = _n(500, scale)
    line = RealLine()
    for k in range(trials):
        rng = _rng(seed, k)
        size = int(rng.integers(1, 8))
        X = [int(x) for x in rng.integers(0, 30, size)]
        Y = [int(y) for y in rng.integers(0, 30, size)]
        oracle = min_cost_matching_oracle(X, Y, line).cost
        if canonical_matching(X, Y).cost != oracle:
            res.fail("canonical matching not optimal", (X, Y))
        i = int(rng.integers(size))
        M = r_local_matching(X, Y, X[i], line, r_index=i)
        if M.cost != oracle or not is_adjacent(line, X[i], M.partner(i), Y):
            res.fail("r-local matching on the line", (X, Y, i))
        tree = random_tree(rng, int(rng.integers(2, 9)))
        TX = [tree.point(int(v)) for v in rng.integers(0, tree.n, size)]
        TY = [tree.point(int(v)) for v in rng.integers(0, tree.n, size)]
        oracle = min_cost_matching_oracle(TX, TY, tree).cost
        M = r_local_matching(TX, TY, TX[i], tree, r_index=i)
        if abs(M.cost - oracle) > 1e-9 or not is_adjacent(tree, TX[i], M.partner(i), TY):
            res.fail("r-local matching on a tree", (tree.edges, TX, TY, i))
    res.stats["trials"] = trials
    return res


# -- k-server ---------------------------------------------------------------------------


def _line_trial(rng):
    k, n = int(rng.integers(1, 5)), int(rng.integers(1, 13))
    return gen_kserver_line(rng, k, n, span=40)


def suite_kserver_lazy(seed=0, scale=1.0) -> SuiteResult:
    res = SuiteResult("kserver-lazy")
    trials = _n(1000, scale)
    line = RealLine()
    grid_checks = 0
    for k in range(trials):
        rng = _rng(seed, k)
        doc = _line_trial(rng)
        _, init, reqs = build_kserver(doc)
        pair = ks.VirtualPair(init, init)
        lazy_total = dc_total = 0.0
        probe = int(rng.integers(len(reqs)))
        for i, r in enumerate(reqs):
            if i == probe:
                grid_checks += 1
                if not _monotone_on_grid(pair):
                    res.fail("served server not monotone in the request", dict(doc, step=i))
            phi0 = ks.potential(pair, line)
            step = ks.lazy_step(pair, r, line)
            phi1 = ks.potential(step.pair, line)
            if step.cost + (phi1 - phi0) > step.virtual_cost + 1e-9:
                res.fail("potential inequality violated", dict(doc, step=i))
            lazy_total += step.cost
            dc_total += step.virtual_cost
            pair = step.pair
        if lazy_total > dc_total + 1e-9:
            res.fail("lazy DC costlier than DC", doc)
    res.stats.update(trials=trials, grids=grid_checks)
    return res


def _monotone_on_grid(pair, points: int = 200) -> bool:
    pos = pair.real.positions
    lo, hi = min(pos) - 1, max(pos) + 1
    rank = {s: i for i, s in enumerate(pair.real.order())}
    last = -1
    for r in np.linspace(lo, hi, points):
        idx = rank[ks.served_by(pair, float(r))]
        if idx < last:
            return False
        last = idx
    return True


def suite_kserver_pricing(seed=0, scale=1.0, grid: int = 40) -> SuiteResult:
    res = SuiteResult("kserver-pricing")
    trials = _n(300, scale)
    line = RealLine()
    worst = 0.0
    policies = ("first", "last")
    for k in range(trials):
        rng = _rng(seed, k)
        doc = _line_trial(rng)
        _, init, reqs = build_kserver(doc)
        eps0 = ks.initial_eps(init)
        pair = ks.VirtualPair(init, init)
        # grid fidelity at every step of the agents' run
        run = ks.run_priced_agents(init, reqs, line, policy=policies[k % 2], eps0=eps0)
        for i, r in enumerate(reqs):
            eps = ks.eps_schedule(eps0, i)
            rmap = ks.perturb_thresholds(ks.regions(pair), pair.real, eps)
            prices = ks.server_prices(rmap, pair.real)
            pos = pair.real.positions
            cuts = [th.point for th in rmap.thresholds]
            for x in np.linspace(min(pos) - 1, max(pos) + 1, grid):
                x = float(x)
                # perturbation separates neighbours by about 2 eps, far below the default tolerance
                best = argmin_set(ks.kserver_agent_options(prices, pair.real, x), eps / 4)
                # coincident servers are interchangeable, so compare positions
                where = {pos[s] for s in best}
                # the price equations make both neighbours tie exactly at a threshold; elsewhere the minimiser is unique
                on_cut = any(abs(x - c) <= eps for c in cuts)
                if pos[rmap.owner(x)] not in where or (len(where) > 1 and not on_cut):
                    res.fail("agent argmin differs from region owner", dict(doc, step=i, x=x))
                    break
            s = run.trace.rows[i].choice
            dc = ks.dc_step(pair.virtual, r)
            pair = ks.VirtualPair(dc.config, pair.real.move(s, r, line))
        dc_cost = ks.run_dc(init, reqs)
        if run.trace.total > dc_cost + 1e-3:
            res.fail("agents costlier than DC", doc)
        opt = ks.kserver_offline_opt(reqs, init)
        if opt > 0:
            worst = max(worst, run.trace.total / opt / init.k)
        elif run.trace.total > 1e-9:
            res.fail("positive cost with zero optimum", doc)
        if opt > 0 and run.trace.total / opt > init.k + 0.25:
            res.fail("price of anarchy above k + 0.25", doc)
    res.stats.update(trials=trials, worst_ratio_over_k=worst)
    return res


def suite_kserver_tree(seed=0, scale=1.0) -> SuiteResult:
    res = SuiteResult("kserver-tree")
    trials = _n(60, scale)
    for k in range(trials):
        rng = _rng(seed, k)
        tree = random_tree(rng, int(rng.integers(2, 9)), 5)
        init = ks.ServerConfig(tuple(tree.point(int(v)) for v in rng.integers(0, tree.n, int(rng.integers(1, 4)))))
        reqs = [int(v) for v in rng.integers(0, tree.n, int(rng.integers(1, 8)))]
        lazy = ks.run_lazy(init, reqs, tree)
        if lazy.cost > lazy.virtual_cost + 1e-9:
            res.fail("lazy DC costlier than DC on a tree", (tree.edges, init.positions, reqs))
        run = ks.run_priced_agents(init, reqs, tree, policy="last")
        if run.trace.total > run.dc_cost + 1e-3:
            res.fail("tree agents costlier than DC", (tree.edges, init.positions, reqs))
    res.stats["trials"] = trials
    return res


def suite_balance2(seed=0, scale=1.0) -> SuiteResult:
    res = SuiteResult("balance2")
    trials = _n(200, scale)
    for k in range(trials):
        rng = _rng(seed, k)
        doc = gen_kserver_line(rng, 2, int(rng.integers(1, 15)))
        space, init, reqs = build_kserver(doc)
        a = ks.run_balance2(init, reqs, space)
        b = ks.run_balance2_agents(init, reqs, space)
        if a.choices != b.choices:
            res.fail("Balance2 agents deviate from the rule", doc)
    res.stats["trials"] = trials
    return res


# -- parking ----------------------------------------------------------------------------


def two_sided_block_state():
    """Block {3} between vacant slots 1 and 7: an agent with goal 3 has d_l = 2, d_r = 4."""
    inst = pk.ParkingInstance.from_points([0, 1, 3, 7, 8], [3, 3])
    st = pk.ParkingState(inst)
    st.park(2)
    return st, 2, 1, 3


def suite_parking_harmonic(seed=0, scale=1.0) -> SuiteResult:
    res = SuiteResult("parking-harmonic")
    N = _n(10_000, scale, 100)
    rng = _rng(seed, 0)
    st, goal, L, R = two_sided_block_state()
    hits, draws = 0, []
    margin = pk.strict_margin(st.instance)
    for _ in range(N):
        sp = pk.harmonic_prices(st, rng)
        if pk.check_payment_conditions(st, sp, margin):
            res.fail("payment conditions violated", st.occupied.tolist())
        draws.append(sp.draws[0])
        choice = decide({v: st.instance.line.distance(goal, v) + p for v, p in sp.prices.items()}, "first", tol=0.0)
        if choice not in (L, R):
            res.fail("agent left the block boundary", sp.prices)
        hits += choice == L
    freq = hits / N
    d = st.instance.line.distance(L, R)
    ks_stat = float(stats.kstest(draws, stats.uniform(loc=-d, scale=2 * d).cdf).statistic)
    if abs(freq - 2 / 3) > 0.02:
        res.fail(f"left frequency {freq:.4f} not within 2/3 +- 0.02")
    if ks_stat >= 0.02:
        res.fail(f"draw distribution deviates from uniform (D={ks_stat:.4f})")
    # condition 2 (and 1) along whole priced runs on random instances
    runs = _n(200, scale, 5)
    for k in range(runs):
        r2 = _rng(seed, 1, k)
        doc = gen_parking_random(r2, 12, 8)
        inst = build_parking(doc)
        bad = []

        def audit(state, sp):
            if pk.check_payment_conditions(state, sp, pk.strict_margin(inst)):
                bad.append(state.occupied.tolist())

        pk.run_harmonic_priced(inst, r2, audit=audit)
        if bad:
            res.fail("payment conditions violated during a run", doc)
    res.stats.update(samples=N, left_freq=freq, ks=ks_stat, runs=runs)
    return res


def suite_parking_gap(seed=0, scale=1.0, n: int = 10, eps: float = 1e-6) -> SuiteResult:
    res = SuiteResult("parking-gap")
    inst = pk.adversarial_instance(n, eps)
    opt = pk.matching_offline_opt(inst)
    greedy = pk.run_greedy(inst).cost
    runs = _n(100, scale, 10)
    costs = [pk.run_harmonic_priced(inst, _rng(seed, k)).cost for k in range(runs)]
    mean = float(np.mean(costs))
    if greedy / opt < 400:
        res.fail(f"greedy ratio {greedy / opt:.1f} below 400")
    if mean > 3 * n:
        res.fail(f"harmonic mean cost {mean:.2f} above {3 * n}")
    res.stats.update(greedy=greedy, opt=opt, greedy_ratio=greedy / opt, harmonic_mean=mean, runs=runs)
    return res


def suite_parking_prior(seed=0, scale=1.0, n: int = 8, c: float = 2.0) -> SuiteResult:
    res = SuiteResult("parking-prior")
    trials = _n(40, scale, 5)
    reps = 20
    ratios = []
    bound = 4 * (math.log2(n) + 1)
    for k in range(trials):
        rng = _rng(seed, k)
        inst, Z, opt = pk.planted_prior_instance(n, rng, c)
        tl = pk.transform_metric(inst.line, Z, c, n)
        witness = {"coords": inst.coords.tolist(), "goals": list(inst.goals), "Z": Z}
        if tl.aspect_ratio() > 2 * c * n ** 3:
            res.fail("aspect ratio above 2cn^3", witness)
        opt2 = pk.matching_offline_opt(inst, dist=tl.distance)
        if opt2 > 1.5 * opt + 1e-9:
            res.fail("transformed optimum above 1.5 OPT", witness)
        costs = []
        for j in range(reps):
            run = pk.run_prior_priced(inst, Z, c, _rng(seed, k, j))
            for g, v in zip(inst.goals, run.trace.choices):
                if tl.component[g] != tl.component[v]:
                    res.fail("a car crossed a removed edge", witness)
            costs.append(run.cost)
        ratios.append(float(np.mean(costs)) / opt)
    mean = float(np.mean(ratios))
    if mean > bound:
        res.fail(f"mean ratio {mean:.3f} above {bound:.3f}")
    res.stats.update(trials=trials, mean_ratio=mean, max_ratio=max(ratios), bound=bound)
    return res


def monotone_example():
    """Block at 2, 5, 7 between vacant slots 0 and 10 with left probabilities 0.8, 0.8, 0.3."""
    inst = pk.ParkingInstance(WeightedLine([0, 2, 5, 7, 10]), (True, False, False, False, True), ())
    st = pk.ParkingState(inst)
    block = pk.blocks(st).blocks[0]
    return st, block, {1: 0.8, 2: 0.8, 3: 0.3}


def suite_parking_monotone(seed=0, scale=1.0) -> SuiteResult:
    res = SuiteResult("parking-monotone")
    N = _n(10_000, scale, 100)
    st, block, table = monotone_example()
    inst = st.instance
    F = pk.monotone_cdf(table, block, inst)
    vals = [F(x) for x in np.linspace(-F.d - 1, F.d + 1, 401)]
    if any(b < a for a, b in zip(vals, vals[1:])) or F(-F.d) != 0.0 or F(F.d + 1e-12) != 1.0:
        res.fail("CDF not a valid step CDF", F)
    if not math.isclose(F(-6.0), 0.2):
        res.fail("F(-6) should equal 0.2", F)
    rng = _rng(seed, 0)
    counts = Counter()
    for _ in range(N):
        sp = pk.monotone_prices([F], st, rng)
        for v in block.vertices:
            opts = {u: inst.line.distance(v, u) + p for u, p in sp.prices.items()}
            counts[v] += decide(opts, "first", tol=0.0) == block.L
    worst = 0.0
    for v, p in table.items():
        sigma = math.sqrt(p * (1 - p) / N) or 1.0 / N
        z = abs(counts[v] / N - p) / sigma
        worst = max(worst, z)
        if z > 3:
            res.fail(f"vertex {v}: left frequency {counts[v] / N:.4f} vs {p}")
    res.stats.update(samples=N, worst_z=worst, freq={v: counts[v] / N for v in table})
    return res


def random_occupancy(rng, m: int = 14):
    gaps = rng.uniform(0.2, 4.0, m - 1)
    inst = pk.ParkingInstance.from_points(np.concatenate([[0.0], np.cumsum(gaps)]), [])
    st = pk.ParkingState(inst)
    for v in range(1, m - 1):
        if rng.random() < 0.45:
            st.park(v)
    return st


def suite_parking_lp(seed=0, scale=1.0) -> SuiteResult:
    res = SuiteResult("parking-lp")
    trials = _n(200, scale)
    saved = 0.0
    for k in range(trials):
        rng = _rng(seed, k)
        st = random_occupancy(rng, int(rng.integers(4, 16)))
        margin = pk.strict_margin(st.instance)
        obs = pk.harmonic_prices(st, rng, margin)
        lp = pk.min_sum_prices(st, obs.draws, margin)
        if pk.check_payment_conditions(st, lp, margin):
            res.fail("LP prices infeasible", st.occupied.tolist())
        a, b = sum(lp.prices.values()), sum(obs.prices.values())
        if a > b + 1e-9 or any(lp.prices[v] > obs.prices[v] + 1e-9 for v in lp.prices):
            res.fail("LP prices exceed the prefix-sum prices", st.occupied.tolist())
        saved += b - a
    res.stats.update(trials=trials, mean_saving=saved / trials)
    return res


def suite_determinism(seed=0, scale=1.0) -> SuiteResult:
    from .harness import Scenario, run

    res = SuiteResult("determinism")
    docs = [
        {"name": "mts", "family": "mts", "algorithm": "follow", "pricing": "scheme1", "seed": seed,
         "trials": 12, "instance": {"generator": "uniform", "params": {"m": 4, "n": 8}}},
        {"name": "ks", "family": "kserver", "algorithm": "dc", "pricing": "threshold", "seed": seed,
         "trials": 12, "instance": {"generator": "line", "params": {"k": 3, "n": 8}}},
        {"name": "park", "family": "parking", "algorithm": "harmonic", "pricing": "harmonic", "seed": seed,
         "trials": 12, "tie_policy": "random", "instance": {"generator": "random", "params": {"m": 12, "n": 8}}},
        {"name": "gap", "family": "parking", "algorithm": "harmonic", "pricing": "none", "seed": seed,
         "trials": 12, "instance": {"generator": "adversarial", "params": {"n": 8}, "shared": True}},
    ]
    for doc in docs:
        sc = Scenario.from_dict(doc)
        a = run(sc, jobs=1).to_csv()
        b = run(sc, jobs=1).to_csv()
        c = run(sc, jobs=4).to_csv()
        if not a == b == c:
            res.fail(f"scenario {doc['name']} not reproducible", doc)
    res.stats["scenarios"] = len(docs)
    return res


SUITES = {
    "golden-trace": suite_golden,
    "mts-follow-2x": suite_mts_follow,
    "mts-pricing": suite_mts_pricing,
    "mts-monotone-work": suite_mts_monotone,
    "matching": suite_matching,
    "kserver-lazy": suite_kserver_lazy,
    "kserver-pricing": suite_kserver_pricing,
    "kserver-tree": suite_kserver_tree,
    "balance2": suite_balance2,
    "parking-harmonic": suite_parking_harmonic,
    "parking-gap": suite_parking_gap,
    "parking-prior": suite_parking_prior,
    "parking-monotone": suite_parking_monotone,
    "parking-lp": suite_parking_lp,
    "determinism": suite_determinism,
}
