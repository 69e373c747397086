import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynprice import kserver as ks
from dynprice.metric import RealLine, TreeMetric

LINE = RealLine()


def cfg(*xs):
    return ks.ServerConfig(tuple(float(x) for x in xs))


def test_dc_examples():
    r = ks.dc_step(cfg(0, 10), 4)
    assert sorted(r.config.positions) == [4, 6] and r.served == 0 and r.cost == 8
    r = ks.dc_step(cfg(5), 2)
    assert r.config.positions == (2,) and r.cost == 3
    r = ks.dc_step(cfg(0, 10), 5)
    assert r.config.positions == (5, 5) and r.cost == 10


def test_lazy_examples():
    pair = ks.VirtualPair(cfg(2, 8), cfg(0, 10))
    res = ks.lazy_step(pair, 4)
    assert sorted(res.pair.virtual.positions) == [4, 6]
    assert res.served == 0 and res.cost == 4
    pair = ks.VirtualPair(cfg(3, 9), cfg(3, 9))
    assert ks.lazy_step(pair, 9).cost == 0


def test_regions_examples():
    rm = ks.regions(ks.VirtualPair(cfg(6, 8), cfg(0, 10)))
    assert rm.thresholds[0].point == pytest.approx(7, abs=1e-6)
    rm = ks.regions(ks.VirtualPair(cfg(0, 10), cfg(0, 10)))
    assert rm.thresholds[0].point == pytest.approx(5, abs=1e-6)
    rm = ks.regions(ks.VirtualPair(cfg(4), cfg(4)))
    assert rm.thresholds == () and rm.owner(100) == 0


def test_server_prices_examples():
    c = cfg(0, 10)
    p = ks.server_prices(ks.RegionMap((0, 1), (ks.Threshold(0, 1, 7.0),)), c)
    assert p[0] - p[1] == -4
    p = ks.server_prices(ks.RegionMap((0, 1), (ks.Threshold(0, 1, 5.0),)), c)
    assert p[0] == p[1] == 0
    c3 = cfg(0, 4, 10)
    p = ks.server_prices(ks.RegionMap((0, 1, 2), (ks.Threshold(0, 1, 2.0), ks.Threshold(1, 2, 7.0))), c3)
    assert p == {0: 0, 1: 0, 2: 0}


def test_perturb_examples():
    c = cfg(0, 10)
    rm = ks.RegionMap((0, 1), (ks.Threshold(0, 1, 0.0),))
    assert ks.perturb_thresholds(rm, c, 1e-3).thresholds[0].point == pytest.approx(1e-3)
    rm = ks.RegionMap((0, 1), (ks.Threshold(0, 1, 10.0),))
    assert ks.perturb_thresholds(rm, c, 1e-3).thresholds[0].point == pytest.approx(10 - 1e-3)
    rm = ks.RegionMap((0, 1), (ks.Threshold(0, 1, 6.0),))
    assert ks.perturb_thresholds(rm, c, 1e-3) == rm
    assert ks.eps_schedule(1.0, 3) == 0.125
    with pytest.raises(ValueError):
        ks.perturb_thresholds(rm, c, 0)


def test_balance2_prices_examples():
    assert ks.balance2_prices(ks.ServerConfig((0.0, 0.0), (6.0, 2.0))) == {0: 3, 1: 1}
    c = cfg(0, 10)
    assert ks.balance2_prices(c) == {0: 0, 1: 0}
    assert ks.balance2_prices(c.move(0, 4, LINE)) == {0: 2, 1: 0}
    with pytest.raises(ValueError):
        ks.balance2_prices(cfg(1, 2, 3))


def test_offline_opt_examples():
    assert ks.kserver_offline_opt([1, 2, 3], cfg(0, 10)) == 3
    assert ks.kserver_offline_opt([], cfg(0, 10)) == 0
    assert ks.kserver_offline_opt([10, 0], cfg(0, 10)) == 0


def test_agent_options_examples():
    c = cfg(0, 10)
    assert ks.kserver_agent_options({0: 0, 1: 0}, c, 4) == {0: 4, 1: 6}
    prices = ks.server_prices(ks.RegionMap((0, 1), (ks.Threshold(0, 1, 7.0),)), c)
    opts = ks.kserver_agent_options(prices, c, 8)
    assert opts == {0: 8, 1: 6}
    tie = ks.kserver_agent_options(prices, c, 7)
    assert tie[0] == tie[1]


def test_server_config_validation():
    with pytest.raises(ValueError):
        ks.ServerConfig((0.0, 1.0), (0.0,))
    with pytest.raises(ValueError):
        ks.VirtualPair(cfg(0), cfg(0, 1))


def test_offline_opt_budget():
    with pytest.raises(ValueError):
        ks.kserver_offline_opt(list(range(30)), cfg(*range(4)), max_states=10)


def test_tree_dc_matches_line_dc_on_path():
    n = 12
    path = TreeMetric(n, [(i, i - 1, 1) for i in range(1, n)])
    rng = np.random.default_rng(5)
    for _ in range(30):
        init = [int(v) for v in rng.integers(0, n, 3)]
        reqs = [int(v) for v in rng.integers(0, n, 8)]
        line = ks.run_dc(cfg(*init), reqs)
        tree = ks.run_dc(ks.ServerConfig(tuple(path.point(v) for v in init)), reqs, path)
        assert tree == pytest.approx(line)


instances = st.tuples(
    st.lists(st.integers(0, 30), min_size=1, max_size=4),
    st.lists(st.integers(0, 30), min_size=1, max_size=10),
)


@given(instances)
def test_potential_inequality_and_lazy_cost(inst):
    init, reqs = inst
    pair = ks.VirtualPair(cfg(*init), cfg(*init))
    lazy = dc = 0.0
    for r in reqs:
        phi0 = ks.potential(pair)
        res = ks.lazy_step(pair, r)
        assert res.cost + ks.potential(res.pair) - phi0 <= res.virtual_cost + 1e-9
        lazy += res.cost
        dc += res.virtual_cost
        pair = res.pair
    assert lazy <= dc + 1e-9


@given(instances)
def test_served_index_monotone(inst):
    init, reqs = inst
    pair = ks.VirtualPair(cfg(*init), cfg(*init))
    for r in reqs:
        pair = ks.lazy_step(pair, r).pair
    pos = pair.real.positions
    rank = {s: i for i, s in enumerate(pair.real.order())}
    lo, hi = min(pos), max(pos)
    seen = [rank[ks.served_by(pair, x)] for x in np.linspace(lo, hi, 60)]
    # coincident servers are interchangeable; compare positions of served servers
    xs = [pos[pair.real.order()[i]] for i in seen]
    assert xs == sorted(xs)


@given(instances, st.sampled_from(["first", "last"]))
def test_priced_agents_follow_dc(inst, pol):
    init, reqs = inst
    run = ks.run_priced_agents(cfg(*init), reqs, policy=pol)
    assert run.trace.total <= run.dc_cost + 1e-3
    opt = ks.kserver_offline_opt(reqs, cfg(*init))
    if opt > 0:
        assert run.trace.total / opt <= len(init) + 0.25


@given(st.lists(st.integers(0, 30), min_size=2, max_size=2), st.lists(st.integers(0, 30), max_size=12))
def test_balance2_agents_reproduce_rule(init, reqs):
    a = ks.run_balance2_agents(cfg(*init), reqs)
    b = ks.run_balance2(cfg(*init), reqs)
    assert a.choices == b.choices and a.total == b.total
