"""Instance generators.

Every generator returns a plain document (lists, numbers, strings) that can
be written to a scenario or instance file; ``build`` turns a document into
the domain objects the simulators use.
"""
from __future__ import annotations

import numpy as np

from .kserver import ServerConfig
from .metric import MatrixMetric, RealLine, TreeMetric, metric_closure
from .mts import TaskSystem
from .parking import ParkingInstance, adversarial_instance, matching_offline_opt, planted_prior_instance


class ConfigError(ValueError):
    """Bad scenario or generator configuration; ``path`` names the offending field."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


def _num(x):
    x = float(x)
    return int(x) if x.is_integer() else x


# -- mts --------------------------------------------------------------------------


def _random_task(rng, m, wmax):
    kind = rng.integers(6)
    if kind == 0:
        return [int(w) for w in rng.integers(0, wmax + 1, m)]
    if kind == 1:  # one expensive state, rest free
        w = [0] * m
        w[int(rng.integers(m))] = int(rng.integers(1, wmax + 1))
        return w
    if kind == 2:  # one free state, rest expensive
        w = [int(v) for v in rng.integers(wmax // 2, wmax + 1, m)]
        w[int(rng.integers(m))] = 0
        return w
    if kind == 3:
        return [int(w) for w in rng.integers(0, 3, m)]
    if kind == 4:  # one cheap but not free state, heavy elsewhere; lets the traversal overtake
        w = [2 * wmax] * m
        w[int(rng.integers(m))] = int(rng.integers(1, 4))
        return w
    return [wmax] * m


def gen_mts_uniform(rng, m: int = 4, n: int = 10, wmax: int = 16, dmax: int = 10, shape: str = "random") -> dict:
    """Random integer metric and a mixed task sequence.

    ``shape="random"`` takes the shortest-path closure of random weights;
    ``shape="star"`` puts state 0 at the hub with arms of random length.
    """
    if m < 1:
        raise ConfigError("params.m", "need m >= 1")
    if shape == "random":
        w = rng.integers(1, dmax + 1, (m, m))
        w = np.triu(w, 1)
        w = w + w.T
        d = metric_closure(w)
    elif shape == "star":
        arms = np.concatenate([[0], rng.integers(1, dmax + 1, m - 1)])
        d = arms[:, None] + arms[None, :]
        np.fill_diagonal(d, 0)
    else:
        raise ConfigError("params.shape", f"unknown metric shape {shape!r}")
    tasks = [_random_task(rng, m, wmax) for _ in range(n)]
    return {"d": [[_num(x) for x in row] for row in d], "s0": 0, "tasks": tasks}


def build_mts(doc: dict):
    d = MatrixMetric(doc["d"])
    system = TaskSystem(d, int(doc.get("s0", 0)), tuple(doc["period"]) if doc.get("period") else None)
    return system, [list(t) for t in doc["tasks"]]


# -- kserver ------------------------------------------------------------------------


def gen_kserver_line(rng, k: int = 3, n: int = 10, span: int = 40) -> dict:
    return {
        "space": {"kind": "line"},
        "initial": [int(x) for x in rng.integers(0, span + 1, k)],
        "requests": [int(x) for x in rng.integers(0, span + 1, n)],
    }


def gen_kserver_tree(rng, k: int = 3, n: int = 8, vertices: int = 8, wmax: int = 5) -> dict:
    edges = [[i, int(rng.integers(0, i)), int(rng.integers(1, wmax + 1))] for i in range(1, vertices)]
    return {
        "space": {"kind": "tree", "n": vertices, "edges": edges},
        "initial": [int(v) for v in rng.integers(0, vertices, k)],
        "requests": [int(v) for v in rng.integers(0, vertices, n)],
    }


def build_space(doc: dict):
    kind = doc.get("kind", "line")
    if kind == "line":
        return RealLine()
    if kind == "tree":
        return TreeMetric(int(doc["n"]), [tuple(e) for e in doc["edges"]], int(doc.get("root", 0)))
    raise ConfigError("instance.space.kind", f"unknown space {kind!r}")


def build_kserver(doc: dict):
    space = build_space(doc.get("space", {"kind": "line"}))
    if isinstance(space, TreeMetric):
        initial = ServerConfig(tuple(space.point(int(v)) for v in doc["initial"]))
        requests = [int(r) for r in doc["requests"]]
    else:
        initial = ServerConfig(tuple(float(x) for x in doc["initial"]))
        requests = [float(r) for r in doc["requests"]]
    return space, initial, requests


# -- parking --------------------------------------------------------------------------


def gen_parking_random(rng, m: int = 10, n: int = 6, gap_lo: float = 0.5, gap_hi: float = 5.0) -> dict:
    """Random slot gaps; goals on slots; vacant sentinels guaranteed at both ends."""
    if n > m - 2:
        raise ConfigError("params.n", "need n <= m - 2 so both end slots can stay free")
    gaps = rng.uniform(gap_lo, gap_hi, m - 1)
    slots = np.concatenate([[0.0], np.cumsum(gaps)])
    goals = rng.integers(1, m - 1, n)
    return {"slots": [float(x) for x in slots], "goals": [float(slots[g]) for g in goals]}


def gen_parking_adversarial(rng=None, n: int = 10, eps: float = 1e-6) -> dict:
    inst = adversarial_instance(int(n), float(eps))
    c = inst.coords
    return {"slots": [float(c[v]) for v in inst.slots], "goals": [float(c[g]) for g in inst.goals]}


def gen_parking_prior(rng, n: int = 6, c: float = 2.0) -> dict:
    inst, Z, opt = planted_prior_instance(int(n), rng, float(c))
    co = inst.coords
    return {"slots": [float(x) for x in co], "goals": [float(co[g]) for g in inst.goals],
            "z": Z, "c": float(c), "opt": opt}


def build_parking(doc: dict) -> ParkingInstance:
    return ParkingInstance.from_points(doc["slots"], doc["goals"])


GENERATORS = {
    ("mts", "uniform"): gen_mts_uniform,
    ("kserver", "line"): gen_kserver_line,
    ("kserver", "tree"): gen_kserver_tree,
    ("parking", "random"): gen_parking_random,
    ("parking", "adversarial"): gen_parking_adversarial,
    ("parking", "prior"): gen_parking_prior,
}

BUILDERS = {"mts": build_mts, "kserver": build_kserver, "parking": build_parking}


def generate(family: str, name: str, params: dict | None, rng) -> dict:
    try:
        fn = GENERATORS[(family, name)]
    except KeyError:
        known = sorted(f"{f}/{g}" for f, g in GENERATORS)
        raise ConfigError("instance.generator", f"unknown generator {family}/{name}; known: {known}") from None
    try:
        return fn(rng, **(params or {}))
    except TypeError as e:
        raise ConfigError("instance.params", str(e)) from None


def build(family: str, doc: dict):
    try:
        return BUILDERS[family](doc)
    except KeyError as e:
        raise ConfigError(f"instance.{e.args[0]}", "missing field") from None


def parking_opt(inst: ParkingInstance) -> float:
    return matching_offline_opt(inst)
