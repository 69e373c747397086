"""Scenario files, seeded trial execution, reports.

A scenario is a YAML mapping::

    name: gap10
    family: parking              # mts | kserver | parking
    algorithm: greedy
    pricing: none
    seed: 7
    trials: 20
    tie_policy: first            # first | last | random
    instance:
      generator: adversarial     # or `doc: {...}` inline, or `path: file.yaml`
      params: {n: 10, eps: 1.0e-6}
      shared: true               # one instance for all trials (default: per trial)
    output:
      csv: out/gap10.csv

Trial k draws from ``SeedSequence(seed, spawn_key=(k,))`` (instance from
child 0, agent randomness from child 1), so any trial can be rerun alone.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import kserver as ks
from . import mts
from . import parking as pk
from .agents import TIE_POLICIES, PoaSummary, empirical_poa, ratio
from .generators import GENERATORS, ConfigError, build, generate

FAMILIES = ("mts", "kserver", "parking")
COMBOS = {
    "mts": {("follow", "none"), ("follow", "scheme1"), ("traversal", "none"), ("greedy", "none")},
    "kserver": {("dc", "none"), ("lazy", "none"), ("dc", "threshold"), ("balance2", "none"),
                ("balance2", "balance2"), ("greedy", "none")},
    "parking": {("greedy", "none"), ("harmonic", "none"), ("harmonic", "harmonic"), ("harmonic", "lp"),
                ("harmonic", "prior")},
}
CSV_HEADER = ["trial", "family", "algorithm", "pricing", "cost", "opt", "ratio", "seed"]


@dataclass(frozen=True)
class Scenario:
    name: str
    family: str
    algorithm: str
    pricing: str
    seed: int
    trials: int = 1
    tie_policy: str = "first"
    jobs: int = 1
    generator: str | None = None
    params: dict = field(default_factory=dict)
    doc: dict | None = None
    shared: bool = False
    csv: str | None = None

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "Scenario":
        if not isinstance(d, dict):
            raise ConfigError("scenario", "expected a mapping")
        known = {"name", "family", "algorithm", "pricing", "seed", "trials", "tie_policy", "jobs", "instance", "output"}
        for key in d:
            if key not in known:
                raise ConfigError(f"scenario.{key}", "unknown field")
        for key in ("family", "algorithm", "pricing", "seed", "instance"):
            if key not in d:
                raise ConfigError(f"scenario.{key}", "required field missing")
        family = d["family"]
        if family not in FAMILIES:
            raise ConfigError("scenario.family", f"expected one of {FAMILIES}")
        algo, pricing = str(d["algorithm"]), str(d["pricing"])
        if (algo, pricing) not in COMBOS[family]:
            raise ConfigError("scenario.pricing", f"{algo}/{pricing} is not available for {family}; "
                                                  f"choose from {sorted(COMBOS[family])}")
        seed = d["seed"]
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError("scenario.seed", "must be a non-negative integer")
        trials = d.get("trials", 1)
        if not isinstance(trials, int) or trials < 1:
            raise ConfigError("scenario.trials", "must be a positive integer")
        tie = d.get("tie_policy", "first")
        if tie not in TIE_POLICIES or tie == "adversarial":
            raise ConfigError("scenario.tie_policy", "expected first, last or random")
        inst = d["instance"]
        if not isinstance(inst, dict):
            raise ConfigError("scenario.instance", "expected a mapping")
        gen, params, doc = inst.get("generator"), inst.get("params") or {}, inst.get("doc")
        if "path" in inst:
            p = Path(inst["path"])
            if base is not None and not p.is_absolute():
                p = base / p
            try:
                loaded = yaml.safe_load(p.read_text())
            except OSError as e:
                raise ConfigError("scenario.instance.path", f"cannot read {p}: {e.strerror}") from None
            doc = loaded.get("instance", loaded)
        if (gen is None) == (doc is None):
            raise ConfigError("scenario.instance", "give exactly one of generator, doc or path")
        if gen is not None and (family, gen) not in GENERATORS:
            known = sorted(g for f, g in GENERATORS if f == family)
            raise ConfigError("scenario.instance.generator", f"unknown {family} generator {gen!r}; known: {known}")
        if not isinstance(params, dict):
            raise ConfigError("scenario.instance.params", "expected a mapping")
        out = d.get("output") or {}
        return cls(
            name=str(d.get("name", "scenario")), family=family, algorithm=algo, pricing=pricing, seed=seed,
            trials=trials, tie_policy=tie, jobs=int(d.get("jobs", 1)), generator=gen, params=dict(params),
            doc=doc, shared=bool(inst.get("shared", doc is not None)), csv=out.get("csv"),
        )

    @classmethod
    def load(cls, path) -> "Scenario":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigError("scenario", f"cannot read {path}: {e.strerror}") from None
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError("scenario", f"{path} is not valid YAML: {e}") from None
        return cls.from_dict(data, path.parent)

    def with_overrides(self, **kw) -> "Scenario":
        d = {k: v for k, v in kw.items() if v is not None}
        if "tie_policy" in d and d["tie_policy"] not in ("first", "last", "random"):
            raise ConfigError("scenario.tie_policy", "expected first, last or random")
        return Scenario(**{**self.__dict__, **d})


@dataclass
class TrialResult:
    trial: int
    cost: float
    opt: float
    checks: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return ratio(self.cost, self.opt)


@dataclass
class RunReport:
    scenario: Scenario
    trials: list

    @property
    def summary(self) -> PoaSummary:
        return empirical_poa([t.cost for t in self.trials], [t.opt for t in self.trials])

    @property
    def checks(self) -> dict:
        out: dict = {}
        for t in self.trials:
            for k, v in t.checks.items():
                out[k] = out.get(k, True) and bool(v)
        return out

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_csv(self, fmt: str = "csv") -> str:
        if fmt not in ("csv", "tsv"):
            raise ConfigError("format", "expected csv or tsv")
        buf = io.StringIO()
        w = csv.writer(buf, delimiter="," if fmt == "csv" else "\t", lineterminator="\n")
        w.writerow(CSV_HEADER)
        sc = self.scenario
        for t in self.trials:
            w.writerow([t.trial, sc.family, sc.algorithm, sc.pricing, repr(float(t.cost)), repr(float(t.opt)),
                        repr(float(t.ratio)), sc.seed])
        return buf.getvalue()

    def summary_text(self) -> str:
        s = self.summary
        lines = [f"scenario {self.scenario.name}: {self.scenario.family} {self.scenario.algorithm}/"
                 f"{self.scenario.pricing}, {len(self.trials)} trials, seed {self.scenario.seed}",
                 f"ratio max={s.max:.6g} mean={s.mean:.6g} std={s.std:.6g}"]
        for k, v in sorted(self.checks.items()):
            lines.append(f"check {k}: {'PASS' if v else 'FAIL'}")
        return "\n".join(lines)


def trial_rngs(seed: int, k: int):
    ss = np.random.SeedSequence(seed, spawn_key=(k,))
    a, b = ss.spawn(2)
    return np.random.default_rng(a), np.random.default_rng(b)


def instance_doc(sc: Scenario, k: int) -> dict:
    if sc.doc is not None:
        return sc.doc
    if sc.shared:
        return generate(sc.family, sc.generator, sc.params, np.random.default_rng(np.random.SeedSequence(sc.seed)))
    return generate(sc.family, sc.generator, sc.params, trial_rngs(sc.seed, k)[0])


def offline_opt(sc: Scenario, doc: dict) -> float:
    obj = build(sc.family, doc)
    if sc.family == "mts":
        system, tasks = obj
        return mts.mts_offline_opt(tasks, system.d, system.s0)
    if sc.family == "kserver":
        space, init, reqs = obj
        return ks.kserver_offline_opt(reqs, init, space)
    return pk.matching_offline_opt(obj)


def _run_mts(sc, doc, rng):
    system, tasks = build("mts", doc)
    if sc.algorithm == "traversal":
        return mts.run_traversal(system, tasks).cost, {}
    if sc.algorithm == "greedy":
        return mts.run_free_agents(system, tasks, sc.tie_policy, rng).total, {}
    if sc.pricing == "none":
        st = mts.FollowState(system)
        for w in tasks:
            mts.follow_step(st, w)
        return st.cost, {"follow_within_2x_traversal": st.cost <= 2 * st.cursor.cost + 1e-9}
    run = mts.run_priced_agents(system, tasks, sc.tie_policy, rng)
    return run.trace.total, {"fidelity": not run.fidelity_failures}


def _run_kserver(sc, doc, rng):
    space, init, reqs = build("kserver", doc)
    if sc.algorithm == "dc" and sc.pricing == "none":
        return ks.run_dc(init, reqs, space), {}
    if sc.algorithm == "lazy":
        lz = ks.run_lazy(init, reqs, space)
        return lz.cost, {"lazy_within_dc": lz.cost <= lz.virtual_cost + 1e-9}
    if sc.algorithm == "dc":
        run = ks.run_priced_agents(init, reqs, space, sc.tie_policy, rng)
        return run.trace.total, {"agents_within_dc": run.trace.total <= run.dc_cost + 1e-3}
    if sc.algorithm == "balance2":
        if sc.pricing == "none":
            return ks.run_balance2(init, reqs, space).total, {}
        a = ks.run_balance2_agents(init, reqs, space, sc.tie_policy, rng)
        b = ks.run_balance2(init, reqs, space)
        return a.total, {"balance2_reproduced": a.choices == b.choices}
    return ks.run_free_agents(init, reqs, space, sc.tie_policy, rng).total, {}


def _run_parking(sc, doc, rng):
    inst = build("parking", doc)
    if sc.algorithm == "greedy":
        return pk.run_greedy(inst).cost, {}
    if sc.pricing == "none":
        return pk.run_harmonic(inst, rng).cost, {}
    if sc.pricing == "prior":
        if "z" not in doc:
            raise ConfigError("instance.z", "prior pricing needs an OPT estimate z")
        c = float(doc.get("c", 2.0))
        tl = pk.transform_metric(inst.line, float(doc["z"]), c, inst.n)
        run = pk.run_prior_priced(inst, float(doc["z"]), c, rng, sc.tie_policy)
        stays = all(tl.component[g] == tl.component[v] for g, v in zip(inst.goals, run.trace.choices))
        return run.cost, {"no_removed_edge_crossed": stays}
    bad = []
    margin = pk.strict_margin(inst)

    def audit(state, sp):
        if pk.check_payment_conditions(state, sp, margin):
            bad.append(1)

    run = pk.run_harmonic_priced(inst, rng, sc.tie_policy, lp=sc.pricing == "lp", audit=audit)
    return run.cost, {"payment_conditions": not bad}


RUNNERS = {"mts": _run_mts, "kserver": _run_kserver, "parking": _run_parking}


def run_trial(sc: Scenario, k: int, shared_opt: float | None = None) -> TrialResult:
    doc = instance_doc(sc, k)
    _, rng = trial_rngs(sc.seed, k)
    cost, checks = RUNNERS[sc.family](sc, doc, rng)
    opt = shared_opt if shared_opt is not None else offline_opt(sc, doc)
    return TrialResult(k, float(cost), float(opt), checks)


def _run_trial_args(args):
    return run_trial(*args)


def run(sc: Scenario, jobs: int | None = None) -> RunReport:
    """Execute every trial; results are ordered by trial index regardless of ``jobs``."""
    jobs = jobs or sc.jobs
    shared_opt = offline_opt(sc, instance_doc(sc, 0)) if (sc.shared or sc.doc is not None) else None
    work = [(sc, k, shared_opt) for k in range(sc.trials)]
    if jobs > 1 and sc.trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_trial_args, work))
    else:
        results = [run_trial(*w) for w in work]
    results.sort(key=lambda t: t.trial)
    return RunReport(sc, results)


def write_report(report: RunReport, path, fmt: str = "csv"):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.to_csv(fmt))


def gen_instance(family: str, name: str, params: dict, seed: int) -> dict:
    doc = generate(family, name, params, np.random.default_rng(np.random.SeedSequence(seed)))
    return {"family": family, "generator": name, "params": params, "seed": seed, "instance": doc}


def dump_yaml(obj) -> str:
    return yaml.safe_dump(_plain(obj), sort_keys=False)


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    if isinstance(x, (str, int, float, bool)) or x is None:
        return x
    return repr(x)


def verify(names, seed: int = 0, scale: float = 1.0, witness_dir="witnesses"):
    """Run property suites; returns ``(lines, all_passed, results)``."""
    from .properties import SUITES

    if names in (None, "all") or names == ["all"]:
        names = list(SUITES)
    lines, results, ok = [], [], True
    for name in names:
        if name not in SUITES:
            raise ConfigError("suite", f"unknown suite {name!r}; known: {sorted(SUITES)}")
        res = SUITES[name](seed, scale)
        results.append(res)
        where = "-"
        if not res.passed:
            ok = False
            d = Path(witness_dir)
            d.mkdir(parents=True, exist_ok=True)
            p = d / f"{name}.yaml"
            p.write_text(dump_yaml(res.witness))
            where = str(p)
        lines.append(f"SUITE {name} {'PASS' if res.passed else 'FAIL'} witness={where}")
    return lines, ok, results
