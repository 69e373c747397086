"""Selfish agents: disutility minimisation, tie-breaking, traces, PoA statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Mapping, Sequence

import numpy as np

TIE_POLICIES = ("first", "last", "random", "adversarial")
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class DecisionProblem:
    disutility: Mapping[Hashable, float]

    def __post_init__(self):
        if not self.disutility:
            raise ValueError("decision problem has no options")
        for o, v in self.disutility.items():
            if not math.isfinite(float(v)):
                raise ValueError(f"option {o!r} has non-finite disutility {v}")

    @property
    def options(self) -> list:
        return list(self.disutility)


@dataclass(frozen=True)
class TieBreakPolicy:
    kind: str = "first"
    callback: Callable[[list], Any] | None = None

    def __post_init__(self):
        if self.kind not in TIE_POLICIES:
            raise ValueError(f"unknown tie policy {self.kind!r}; choose from {TIE_POLICIES}")
        if self.kind == "adversarial" and self.callback is None:
            raise ValueError("adversarial tie policy needs a callback")


def argmin_set(disutility: Mapping, tol: float = DEFAULT_TOL) -> list:
    """Options whose disutility is within ``tol`` of the minimum, in option order."""
    best = min(disutility.values())
    return [o for o, v in disutility.items() if v <= best + tol]


def decide(problem, policy="first", tol: float = DEFAULT_TOL, rng=None, callback=None):
    """Pick a disutility minimiser; ties are resolved by ``policy``.

    ``problem`` is a ``DecisionProblem`` or a plain option -> disutility mapping.
    ``policy`` is a ``TieBreakPolicy`` or its kind string.
    """
    if not isinstance(problem, DecisionProblem):
        problem = DecisionProblem(problem)
    if isinstance(policy, str):
        policy = TieBreakPolicy(policy, callback)
    ties = argmin_set(problem.disutility, tol)
    if len(ties) == 1 or policy.kind == "first":
        return ties[0]
    if policy.kind == "last":
        return ties[-1]
    if policy.kind == "random":
        if rng is None:
            raise ValueError("random tie policy needs an rng")
        return ties[int(rng.integers(len(ties)))]
    choice = policy.callback(ties)
    if choice not in ties:
        raise ValueError(f"adversarial callback returned {choice!r}, not in argmin set {ties}")
    return choice


@dataclass
class TraceRow:
    arrival: int
    disutilities: Mapping
    prices: Mapping
    choice: Any
    cost: float


@dataclass
class Trace:
    rows: list[TraceRow] = field(default_factory=list)
    total: float = 0.0

    def record(self, row: TraceRow):
        self.rows.append(row)
        self.total += row.cost

    @property
    def choices(self) -> list:
        return [r.choice for r in self.rows]

    def reconcile(self) -> bool:
        return math.isclose(self.total, sum(r.cost for r in self.rows), rel_tol=1e-12, abs_tol=1e-12)


@dataclass(frozen=True)
class PoaSummary:
    ratios: tuple[float, ...]
    max: float
    mean: float
    std: float


def ratio(cost: float, opt: float, tol: float = 1e-12) -> float:
    if opt <= tol:
        return 1.0 if cost <= tol else math.inf
    return cost / opt


def empirical_poa(costs: Sequence, opts: Sequence[float]) -> PoaSummary:
    """Per-instance cost/OPT ratios.

    An entry of ``costs`` may itself be a sequence of costs from repeated
    randomised runs of one instance; its mean is used (expected cost over OPT).
    """
    if len(costs) != len(opts):
        raise ValueError("need one OPT per instance")
    if not costs:
        raise ValueError("no instances")
    rs = []
    for c, o in zip(costs, opts):
        if isinstance(c, (Sequence, np.ndarray)):
            c = float(np.mean(c))
        if o < 0:
            raise ValueError("OPT must be non-negative")
        rs.append(ratio(c, o))
    arr = np.asarray(rs)
    finite = np.isfinite(arr).all()
    return PoaSummary(
        tuple(rs),
        float(arr.max()),
        float(arr.mean()) if finite else math.inf,
        float(arr.std()) if finite else math.nan,
    )
