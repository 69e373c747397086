import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynprice import parking as pk
from dynprice.metric import WeightedLine
from dynprice.properties import two_sided_block_state, monotone_example, random_occupancy


def unit_state(m, occupied):
    inst = pk.ParkingInstance(WeightedLine(range(m)), (True,) * m, ())
    s = pk.ParkingState(inst)
    for v in occupied:
        s.park(v)
    return s


def test_blocks_examples():
    b = pk.blocks(unit_state(7, [2, 3])).blocks
    assert len(b) == 1 and (b[0].L, b[0].R, b[0].d) == (1, 4, 3)
    assert len(pk.blocks(unit_state(7, []))) == 0
    b = pk.blocks(unit_state(7, [1, 4])).blocks
    assert [(x.L, x.R) for x in b] == [(0, 2), (3, 5)]


def test_blocks_touching_the_end():
    s = unit_state(4, [0])
    with pytest.raises(pk.UnsupportedInstance):
        pk.blocks(s)
    assert not pk.blocks(s, allow_open=True).blocks[0].closed


def test_harmonic_step_examples():
    s, goal, L, R = two_sided_block_state()
    assert s.nearest_vacant(goal) == (L, R)
    assert pk.harmonic_p_left(s, goal, L, R) == pytest.approx(2 / 3)
    rng = np.random.default_rng(0)
    assert pk.harmonic_step(unit_state(5, [2]), 3, rng) == 3
    right_full = unit_state(5, [3, 4])
    assert all(pk.harmonic_step(right_full, 4, rng) == 2 for _ in range(20))


def test_harmonic_probability_via_uniform_cdf():
    # d(v, L) = 2 and d_j = 6: F(d_j - 4) = (2 + 6) / 12
    s = unit_state(7, [1, 2, 3, 4, 5])
    assert pk.harmonic_p_left(s, 2, 0, 6) == pytest.approx((2 + 6) / 12)


def test_greedy_examples():
    assert pk.greedy_step(unit_state(5, [1]), 3) == 3
    inst = pk.ParkingInstance.from_points([0, 1, 3, 4], [])
    s = pk.ParkingState(inst)
    s.park(1)
    s.park(2)
    # goal at 1 (index 1): nearest left at 0 (distance 1), right at 4 (distance 3)
    assert pk.greedy_step(s, 1) == 0
    assert pk.greedy_step(unit_state(5, [2]), 2) == 3  # equidistant goes right


def test_harmonic_prices_examples():
    s = unit_state(3, [1])
    sp = pk.harmonic_prices(s, np.random.default_rng(1))
    assert sp.difference(0) == pytest.approx(sp.draws[0], abs=1e-12)
    sp = pk.harmonic_prices(unit_state(4, []), np.random.default_rng(1))
    assert set(sp.prices.values()) == {0.0}


def test_min_sum_examples():
    s = unit_state(3, [1])
    assert pk.min_sum_prices(s, [1.0]).prices == {0: 1.0, 2: 0.0}
    s = unit_state(9, [1, 4, 5])
    assert set(pk.min_sum_prices(s, [0.0, 0.0]).prices.values()) == {0.0}
    with pytest.raises(ValueError):
        pk.min_sum_prices(s, [0.0])


def test_transform_example():
    line = WeightedLine([0, 1, 151, 161])
    tl = pk.transform_metric(line, 100, 2, 4)
    assert tl.floor == 1.5625
    assert tl.cut == (1,)
    assert tl.distance(0, 1) == 1.5625
    assert math.isinf(tl.distance(1, 2))
    assert tl.distance(2, 3) == 10
    same = pk.transform_metric(WeightedLine([0, 2, 5]), 10, 2, 2)
    assert list(same.coords) == [0, 2, 5]
    with pytest.raises(ValueError):
        pk.transform_metric(line, 100, 1, 4)


def test_monotone_cdf_example():
    state, b, table = monotone_example()
    f = pk.monotone_cdf(table, b, state.instance)
    assert f(-6) == pytest.approx(0.2)
    assert f(-10) == 0.0 and f(10) == 1.0


def test_monotone_cdf_harmonic_is_uniform_at_breaks():
    s = unit_state(8, [2, 3, 4, 5])
    b = pk.blocks(s).blocks[0]
    f = pk.monotone_cdf(pk.harmonic_table(s, b), b, s.instance)
    for x in f.breaks:
        assert f(x) == pytest.approx((x + b.d) / (2 * b.d))


def test_monotone_cdf_single_vertex_always_left():
    s = unit_state(3, [1])
    b = pk.blocks(s).blocks[0]
    f = pk.monotone_cdf({1: 1.0}, b, s.instance)
    assert f(-1.5) == 0.0 and f(0.0) == 0.0
    rng = np.random.default_rng(0)
    assert all(q > 0.0 for q in (f.sample(rng) for _ in range(50)))


def test_monotone_cdf_rejects_increasing_table():
    s = unit_state(5, [1, 2, 3])
    b = pk.blocks(s).blocks[0]
    with pytest.raises(ValueError):
        pk.monotone_cdf({1: 0.2, 2: 0.5, 3: 0.1}, b, s.instance)


def test_monotone_pricing_frequency():
    state, b, table = monotone_example()
    rng = np.random.default_rng(11)
    cdfs = [pk.monotone_cdf(table, b, state.instance)]
    goal = 1
    n, left = 10_000, 0
    for _ in range(n):
        sp = pk.monotone_prices(cdfs, state, rng)
        v, _, _ = pk._priced_choice(state, goal, sp, "first", rng)
        left += v == b.L
    assert abs(left / n - table[goal]) <= 3 * math.sqrt(0.8 * 0.2 / n)


def test_matching_opt_examples():
    inst = pk.ParkingInstance.from_points([0, 1, 2, 3], [1, 3])
    assert pk.matching_offline_opt(inst) == 0
    inst = pk.ParkingInstance.from_points([0, 5], [1.5])
    assert pk.matching_offline_opt(inst) == 1.5
    eps = 1e-3
    adv = pk.adversarial_instance(4, eps)
    assert pk.matching_offline_opt(adv) == pytest.approx(1 + 3 * eps)
    assert pk.matching_brute_force(adv) == pytest.approx(pk.matching_offline_opt(adv))


def test_greedy_cascade_cost():
    for n in (2, 5, 10):
        inst = pk.adversarial_instance(n, 1e-6)
        assert pk.run_greedy(inst).cost == pytest.approx(2 ** (n - 1) - 1, abs=n * 1e-5)
    inst = pk.adversarial_instance(10, 1e-6)
    assert pk.run_greedy(inst).cost / pk.matching_offline_opt(inst) >= 400


def test_capacity_errors():
    with pytest.raises(ValueError):
        pk.ParkingInstance.from_points([0], [0, 0])
    s = unit_state(2, [0, 1])
    with pytest.raises(pk.CapacityError):
        pk.greedy_step(s, 0)


seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.integers(3, 14))
def test_payment_conditions_hold(seed, m):
    rng = np.random.default_rng(seed)
    s = random_occupancy(rng, m)
    margin = pk.strict_margin(s.instance)
    sp = pk.harmonic_prices(s, rng, margin)
    assert pk.check_payment_conditions(s, sp, margin) == []


@given(seeds, st.integers(3, 14))
def test_priced_argmin_is_goal_or_boundary(seed, m):
    rng = np.random.default_rng(seed)
    s = random_occupancy(rng, m)
    sp = pk.harmonic_prices(s, rng)
    d = s.instance.line.distance
    for g in range(m):
        opts = {v: d(g, v) + p for v, p in sp.prices.items()}
        best = min(opts.values())
        arg = {v for v, x in opts.items() if x == best}
        if s.is_vacant(g):
            assert arg == {g}
        else:
            assert arg <= set(v for v in s.nearest_vacant(g) if v is not None)


@given(seeds, st.integers(3, 14))
def test_min_sum_feasible_and_below_prefix(seed, m):
    rng = np.random.default_rng(seed)
    s = random_occupancy(rng, m)
    margin = pk.strict_margin(s.instance)
    obs = pk.harmonic_prices(s, rng, margin)
    lp = pk.min_sum_prices(s, obs.draws, margin)
    assert pk.check_payment_conditions(s, lp, margin) == []
    assert all(lp.prices[v] <= obs.prices[v] + 1e-9 for v in lp.prices)


@given(seeds, st.integers(2, 9))
def test_transform_aspect_ratio(seed, n):
    rng = np.random.default_rng(seed)
    inst, Z, opt = pk.planted_prior_instance(n, rng)
    c = 2.0
    tl = pk.transform_metric(inst.line, Z, c, n)
    assert tl.aspect_ratio() <= 2 * c * n ** 3
    assert pk.matching_offline_opt(inst, dist=tl.distance) <= 1.5 * opt + 1e-9
    run = pk.run_prior_priced(inst, Z, c, rng)
    assert all(tl.component[g] == tl.component[v] for g, v in zip(inst.goals, run.trace.choices))


@given(seeds, st.integers(2, 9))
def test_monotone_cdf_nondecreasing(seed, size):
    rng = np.random.default_rng(seed)
    s = unit_state(size + 2, range(1, size + 1))
    b = pk.blocks(s).blocks[0]
    ps = sorted(rng.uniform(0, 1, size), reverse=True)
    f = pk.monotone_cdf(dict(zip(b.vertices, ps)), b, s.instance)
    xs = np.linspace(-b.d, b.d, 101)
    vals = [f(x) for x in xs]
    assert vals == sorted(vals) and 0 <= vals[0] and vals[-1] <= 1
    assert all(abs(a) < b.d for a in f.atoms)
    assert sum(f.masses) == pytest.approx(1.0)


@given(seeds, st.integers(3, 12))
def test_min_sum_matches_linprog(seed, m):
    from scipy.optimize import linprog

    rng = np.random.default_rng(seed)
    s = random_occupancy(rng, m)
    margin = pk.strict_margin(s.instance)
    draws = pk.harmonic_prices(s, rng, margin).draws
    ours = pk.min_sum_prices(s, draws, margin)
    vac = s.vacant
    idx = {v: i for i, v in enumerate(vac)}
    d = s.instance.line.distance
    q_at = {b.L: q for b, q in zip((b for b in ours.structure.blocks if b.closed), draws)}
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for u, v in zip(vac, vac[1:]):
        row = np.zeros(len(vac))
        row[idx[u]], row[idx[v]] = 1, -1
        A_ub += [row, -row]
        b_ub += [d(u, v) - margin] * 2
        if u in q_at:
            A_eq.append(row)
            b_eq.append(q_at[u])
    lp = linprog(np.ones(len(vac)), A_ub=A_ub or None, b_ub=b_ub or None, A_eq=A_eq or None,
                 b_eq=b_eq or None, bounds=(0, None), method="highs")
    assert lp.status == 0
    assert sum(ours.prices.values()) == pytest.approx(lp.fun, abs=1e-6)
