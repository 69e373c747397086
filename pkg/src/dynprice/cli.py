"""Command-line front end: run, gen, verify, poa, demo."""
from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import harness
from .generators import ConfigError

SCENARIO_KEYS = {"name", "family", "algorithm", "pricing", "trials", "tie_policy", "generator", "shared"}
DEMOS = ("appendix-a1", "parking-gap")


def parse_inline(tokens) -> dict:
    """``key=value`` tokens; values are read as YAML scalars (so 10 is an int, 1e-6 a float)."""
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ConfigError("argv", f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = yaml.safe_load(v) if v else ""
    return out


def _scenario(args) -> harness.Scenario:
    target = args.scenario
    if len(target) == 1 and "=" not in target[0]:
        sc = harness.Scenario.load(target[0])
    else:
        kv = parse_inline(target)
        doc = {k: kv.pop(k) for k in list(kv) if k in SCENARIO_KEYS - {"generator", "shared"}}
        if "generator" not in kv:
            raise ConfigError("scenario.instance.generator", "inline scenarios need generator=<name>")
        doc["instance"] = {"generator": kv.pop("generator"), "shared": bool(kv.pop("shared", True)), "params": kv}
        doc.setdefault("name", "inline")
        doc["seed"] = args.seed if args.seed is not None else 0
        sc = harness.Scenario.from_dict(doc)
    return sc.with_overrides(seed=args.seed, trials=args.trials, tie_policy=args.tie_policy, jobs=args.jobs)


def cmd_run(args) -> int:
    sc = _scenario(args)
    report = harness.run(sc)
    out = args.out or sc.csv
    text = report.to_csv(args.format)
    if out:
        harness.write_report(report, out, args.format)
        print(report.summary_text())
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)
    return 0 if report.ok else 1


def cmd_poa(args) -> int:
    report = harness.run(_scenario(args))
    print(report.summary_text())
    if args.out:
        harness.write_report(report, args.out, args.format)
    return 0 if report.ok else 1


def cmd_gen(args) -> int:
    params = parse_inline(args.params)
    seed = args.seed if args.seed is not None else 0
    text = harness.dump_yaml(harness.gen_instance(args.family, args.generator, params, seed))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_verify(args) -> int:
    names = args.suites or ["all"]
    seed = args.seed if args.seed is not None else 0
    lines, ok, _ = harness.verify(names, seed=seed, scale=args.scale, witness_dir=args.witness_dir)
    for line in lines:
        print(line)
    return 0 if ok else 1


def _common_denominator(fracs):
    den = 1
    for f in fracs:
        den = math.lcm(den, f.denominator)
    return [f"{f.numerator * (den // f.denominator)}/{den}" if den > 1 else str(f.numerator) for f in fracs]


def demo_worked_example() -> int:
    from .properties import WORKED_D, WORKED_TASKS, WORKED_TAU, worked_system
    from . import mts

    system = worked_system()
    print(f"metric d = {WORKED_D}")
    print(f"traversal tau = {', '.join(str(s) for s in WORKED_TAU)} (repeating, 0-based states)")
    cur = mts.TraversalCursor(system)
    st = mts.FollowState(system)
    all_fr = []
    for i, w in enumerate(WORKED_TASKS, 1):
        rec = cur.step([Fraction(x) for x in w])
        mts.follow_step(st, w)
        shown = _common_denominator([lam for _, lam in rec])
        all_fr.append(", ".join(shown))
        parts = " ".join(f"lambda[{j}]={s}" for (j, _), s in zip(rec, shown))
        print(f"task {i} w={tuple(w)}: {parts}; t={cur.t[-1]} rho={cur.rho}; follow at position {st.ell[-1]}")
    print(f"fractions {'; '.join(all_fr)}")
    print(f"final rho = {cur.rho}")
    print(f"traversal cost = {cur.cost}; follow-the-traversal cost = {st.cost}")
    return 0


def demo_parking_gap(params: dict, seed: int, trials: int) -> int:
    from . import parking as pk

    n = int(params.get("n", 10))
    eps = float(params.get("eps", 1e-6))
    inst = pk.adversarial_instance(n, eps)
    opt = pk.matching_offline_opt(inst)
    greedy = pk.run_greedy(inst).cost
    plain, priced = [], []
    for k in range(trials):
        a, b = [np.random.default_rng(s) for s in np.random.SeedSequence(seed, spawn_key=(k,)).spawn(2)]
        plain.append(pk.run_harmonic(inst, a).cost)
        priced.append(pk.run_harmonic_priced(inst, b).cost)
    print(f"adversarial instance n={n} eps={eps:g}")
    print(f"OPT = {opt:.6f}")
    print(f"greedy (free parking) cost = {greedy:.6f} ratio = {greedy / opt:.3f}")
    print(f"harmonic algorithm mean cost over {trials} runs = {np.mean(plain):.6f}")
    print(f"harmonic pricing mean cost over {trials} runs = {np.mean(priced):.6f} (3n = {3 * n})")
    return 0


def cmd_demo(args) -> int:
    if args.name not in DEMOS:
        raise ConfigError("demo", f"unknown demo {args.name!r}; choose from {DEMOS}")
    if args.name == "appendix-a1":
        return demo_worked_example()
    return demo_parking_gap(parse_inline(args.params), args.seed or 0, args.trials or 100)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="root seed; overrides the scenario (default: scenario value, else 0)")
    common.add_argument("--trials", type=int, default=None, help="trial count override (default: scenario value)")
    common.add_argument("--out", default=None, help="output path (default: scenario output.csv, else stdout)")
    common.add_argument("--tie-policy", choices=("first", "last", "random"), default=None,
                        help="agent tie breaking (default: scenario value, else first)")
    common.add_argument("--jobs", type=int, default=None, help="maximum concurrent trials (default 1)")
    common.add_argument("--format", choices=("csv", "tsv"), default="csv", help="report format (default csv)")

    p = argparse.ArgumentParser(prog="dynprice", description="Posted-price simulators for online problems.")
    sub = p.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", parents=[common], help="run a scenario and write the per-trial CSV")
    r.add_argument("scenario", nargs="+", help="scenario YAML path, or inline key=value pairs")
    r.set_defaults(fn=cmd_run)

    q = sub.add_parser("poa", parents=[common], help="run a scenario and print the ratio summary")
    q.add_argument("scenario", nargs="+", help="scenario YAML path, or inline key=value pairs")
    q.set_defaults(fn=cmd_poa)

    g = sub.add_parser("gen", parents=[common], help="write an instance file")
    g.add_argument("family", choices=harness.FAMILIES)
    g.add_argument("generator")
    g.add_argument("params", nargs="*", help="generator parameters as key=value")
    g.set_defaults(fn=cmd_gen)

    v = sub.add_parser("verify", parents=[common], help="run property suites (default: all)")
    v.add_argument("suites", nargs="*")
    v.add_argument("--scale", type=float, default=1.0, help="fraction of the full trial counts (default 1.0)")
    v.add_argument("--witness-dir", default="witnesses", help="where failing witnesses are written")
    v.set_defaults(fn=cmd_verify)

    d = sub.add_parser("demo", parents=[common], help="appendix-a1 or parking-gap [n=10]")
    d.add_argument("name")
    d.add_argument("params", nargs="*")
    d.set_defaults(fn=cmd_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e.filename or ''}: {e.strerror}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
