"""Acceptance criteria 1-13, each at its stated scale and tolerance.

Every test prints one ``CRITERION n name: PASS|FAIL stats`` line (shown even
when output capture is on) and then asserts the outcome.
"""
import time

import pytest

from dynprice.properties import SUITES

CRITERIA = [
    (1, "golden-trace", "golden fractional traversal trace, exact"),
    (2, "mts-follow-2x", "follow <= 2 x traversal, all nine orderings seen"),
    (3, "mts-pricing", "pricing fidelity and ratio <= 16(m-1)"),
    (4, "mts-monotone-work", "traversal work monotone in task costs"),
    (5, "matching", "canonical and r-local matchings optimal"),
    (6, "kserver-lazy", "potential inequality, lazy <= DC, monotone serving"),
    (7, "kserver-pricing", "threshold prices reproduce lazy DC, ratio <= k + 0.25"),
    (8, "parking-harmonic", "left frequency 2/3 +- 0.02, KS < 0.02, condition 2"),
    (9, "parking-gap", "greedy/OPT >= 400, harmonic mean <= 3n"),
    (10, "parking-prior", "aspect ratio, 1.5 OPT, mean ratio <= 4(log2 n + 1)"),
    (11, "parking-monotone", "per-vertex frequency within 3 sigma, valid CDF"),
    (12, "parking-lp", "least prices feasible and no larger than prefix sums"),
    (13, "determinism", "byte-identical CSV, serial and concurrent"),
]


@pytest.mark.parametrize("number,suite,what", CRITERIA, ids=[f"c{n:02d}-{s}" for n, s, _ in CRITERIA])
def test_criterion(number, suite, what, capsys):
    t0 = time.perf_counter()
    res = SUITES[suite](seed=0, scale=1.0)
    dt = time.perf_counter() - t0
    status = "PASS" if res.passed else "FAIL"
    line = f"CRITERION {number} {suite}: {status} ({what}) {res.summary().split(' ', 2)[-1]} [{dt:.1f}s]"
    with capsys.disabled():
        print("\n" + line)
    assert res.passed, res.witness
