import numpy as np
import pytest
import yaml

from dynprice import harness, properties
from dynprice.generators import ConfigError, build, generate
from dynprice.metric import MatrixMetric
from dynprice.parking import matching_offline_opt, run_greedy
from dynprice.properties import SuiteResult


def doc(**kw):
    base = {"name": "t", "family": "kserver", "algorithm": "dc", "pricing": "threshold", "seed": 5, "trials": 6,
            "instance": {"generator": "line", "params": {"k": 3, "n": 8}}}
    base.update(kw)
    return base


@pytest.mark.parametrize("bad,path", [
    ({"family": "poker"}, "scenario.family"),
    ({"pricing": "balance2"}, "scenario.pricing"),
    ({"seed": -1}, "scenario.seed"),
    ({"seed": "abc"}, "scenario.seed"),
    ({"trials": 0}, "scenario.trials"),
    ({"tie_policy": "sideways"}, "scenario.tie_policy"),
    ({"colour": "red"}, "scenario.colour"),
    ({"instance": {"generator": "nope"}}, "scenario.instance.generator"),
    ({"instance": {"generator": "line", "doc": {}}}, "scenario.instance"),
    ({"instance": {"generator": "line", "params": [1, 2]}}, "scenario.instance.params"),
])
def test_config_errors_name_the_field(bad, path):
    with pytest.raises(ConfigError) as e:
        harness.Scenario.from_dict(doc(**bad))
    assert e.value.path == path


def test_missing_required_field():
    d = doc()
    del d["seed"]
    with pytest.raises(ConfigError) as e:
        harness.Scenario.from_dict(d)
    assert e.value.path == "scenario.seed"


def test_bad_generator_params():
    sc = harness.Scenario.from_dict(doc(instance={"generator": "line", "params": {"bogus": 1}}))
    with pytest.raises(ConfigError):
        harness.run(sc)


def test_generate_is_deterministic():
    a = generate("mts", "uniform", {"m": 4}, np.random.default_rng(3))
    b = generate("mts", "uniform", {"m": 4}, np.random.default_rng(3))
    assert a == b
    MatrixMetric(a["d"])  # symmetric, zero diagonal, triangle inequality
    assert harness.gen_instance("kserver", "tree", {}, 9) == harness.gen_instance("kserver", "tree", {}, 9)
    with pytest.raises(ConfigError):
        generate("mts", "nope", {}, np.random.default_rng(0))


def test_adversarial_generator_validated():
    inst = build("parking", generate("parking", "adversarial", {"n": 10, "eps": 1e-6}, None))
    assert run_greedy(inst).cost / matching_offline_opt(inst) >= 400


def test_csv_shape_and_determinism():
    sc = harness.Scenario.from_dict(doc())
    a = harness.run(sc, jobs=1).to_csv()
    b = harness.run(sc, jobs=3).to_csv()
    assert a == b
    lines = a.splitlines()
    assert lines[0] == "trial,family,algorithm,pricing,cost,opt,ratio,seed"
    assert [ln.split(",")[0] for ln in lines[1:]] == [str(k) for k in range(6)]
    assert "\t" in harness.run(sc).to_csv("tsv")


def test_trial_reproducible_alone():
    sc = harness.Scenario.from_dict(doc(family="parking", algorithm="harmonic", pricing="harmonic",
                                        instance={"generator": "random", "params": {"m": 10, "n": 6}}))
    rep = harness.run(sc)
    alone = harness.run_trial(sc, 4)
    assert (alone.cost, alone.opt) == (rep.trials[4].cost, rep.trials[4].opt)


def test_shared_instance_computes_one_opt():
    sc = harness.Scenario.from_dict(doc(family="parking", algorithm="harmonic", pricing="none", trials=5,
                                        instance={"generator": "adversarial", "params": {"n": 6}, "shared": True}))
    rep = harness.run(sc)
    assert len({t.opt for t in rep.trials}) == 1
    assert len({t.cost for t in rep.trials}) > 1


@pytest.mark.parametrize("family,algo,pricing,gen,params", [
    ("mts", "follow", "scheme1", "uniform", {"m": 3, "n": 6}),
    ("mts", "follow", "none", "uniform", {"m": 3, "n": 6}),
    ("mts", "traversal", "none", "uniform", {"m": 3, "n": 6}),
    ("mts", "greedy", "none", "uniform", {"m": 3, "n": 6}),
    ("kserver", "dc", "none", "line", {"k": 2, "n": 6}),
    ("kserver", "lazy", "none", "tree", {"k": 2, "n": 6}),
    ("kserver", "balance2", "balance2", "line", {"k": 2, "n": 6}),
    ("kserver", "balance2", "none", "line", {"k": 2, "n": 6}),
    ("kserver", "greedy", "none", "line", {"k": 2, "n": 6}),
    ("parking", "greedy", "none", "random", {"m": 8, "n": 5}),
    ("parking", "harmonic", "lp", "random", {"m": 8, "n": 5}),
    ("parking", "harmonic", "prior", "prior", {"n": 5}),
])
def test_every_combination_runs(family, algo, pricing, gen, params):
    sc = harness.Scenario.from_dict(doc(family=family, algorithm=algo, pricing=pricing, trials=3,
                                        instance={"generator": gen, "params": params}))
    rep = harness.run(sc)
    assert rep.ok
    assert all(t.cost >= t.opt - 1e-9 for t in rep.trials)


def test_scenario_file_and_instance_path(tmp_path):
    inst = tmp_path / "inst.yaml"
    inst.write_text(harness.dump_yaml(harness.gen_instance("parking", "adversarial", {"n": 5}, 0)))
    sc_file = tmp_path / "sc.yaml"
    sc_file.write_text(yaml.safe_dump({"name": "p", "family": "parking", "algorithm": "greedy", "pricing": "none",
                                       "seed": 0, "instance": {"path": "inst.yaml"}}))
    sc = harness.Scenario.load(sc_file)
    assert sc.shared and harness.run(sc).trials[0].ratio > 5
    with pytest.raises(ConfigError):
        harness.Scenario.load(tmp_path / "missing.yaml")
    (tmp_path / "bad.yaml").write_text("family: [unclosed")
    with pytest.raises(ConfigError):
        harness.Scenario.load(tmp_path / "bad.yaml")


def test_verify_lines_and_witness(tmp_path, monkeypatch):
    lines, ok, _ = harness.verify(["golden-trace"], witness_dir=tmp_path)
    assert ok and lines == ["SUITE golden-trace PASS witness=-"]

    def broken(seed=0, scale=1.0):
        r = SuiteResult("broken")
        r.fail("synthetic failure", {"slots": [0, 1], "goals": [np.int64(1)]})
        return r

    monkeypatch.setitem(properties.SUITES, "broken", broken)
    lines, ok, _ = harness.verify(["broken"], witness_dir=tmp_path)
    assert not ok
    path = tmp_path / "broken.yaml"
    assert lines == [f"SUITE broken FAIL witness={path}"]
    assert yaml.safe_load(path.read_text()) is not None
    with pytest.raises(ConfigError):
        harness.verify(["no-such-suite"])
