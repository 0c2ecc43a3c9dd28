"""Acceptance criteria 1-10.

Each test prints one ``criterion N: PASS|FAIL`` line with the measured numbers
and then asserts.  Run standalone with ``python3 tests/test_acceptance.py`` to
get only the summary lines.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import arc_distortion, monotone_perturbed_arc, random_space  # noqa: E402
from metric_props.arcs import ArcSample, check_obtuse, retraction_expansion, slice_batch  # noqa: E402
from metric_props.constructions import (  # noqa: E402
    euclidean_interval, i_space, max_product, random_ultrametric, triode_bar_indices, triode_path,
    triode_rho,
)
from metric_props.core import FiniteMetricSpace, validate_metric  # noqa: E402
from metric_props.embeddings import PointMap, distortion  # noqa: E402
from metric_props.properties import (  # noqa: E402
    check_de_groot, check_nagata, check_ultrametric,
)
from metric_props.search import (  # noqa: E402
    TRIODE_REFERENCE, AnnealConfig, anneal_extension, separation_experiment, triode_extension_problem,
)


def _report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    capman = getattr(_report, "capsys", None)
    if capman is not None:
        with capman.disabled():
            print("\n" + line)
    else:
        print(line)


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    _report.capsys = capsys
    yield
    _report.capsys = None


def _timed(fn, *args):
    t = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t


# --- 1 ---------------------------------------------------------------------------------

def criterion_1():
    E = euclidean_interval(-1, 1, 101)
    brute, tb = _timed(check_nagata, E, 1, "brute")
    fast, tf = _timed(check_nagata, E, 1, "fast")
    ok = brute.holds and fast.holds and tb < 10 and tf < 0.5
    return ok, f"NP[1] brute={brute.holds} ({tb:.2f}s < 10s), fast={fast.holds} ({tf:.3f}s < 0.5s)"


# --- 2 ---------------------------------------------------------------------------------

def criterion_2():
    m = 21
    R = triode_rho(m)
    valid = validate_metric(R.dist) == []
    np1 = check_nagata(R, 1).holds
    f = PointMap(euclidean_interval(-1, 1, 2 * m + 1), R, triode_bar_indices(m))
    dist = distortion(f)
    ok = valid and np1 and abs(dist - 2.0) <= 1e-12 and R.size == 64
    return ok, f"valid={valid}, NP[1]={np1}, Dist={dist!r} (|Dist-2| <= 1e-12), size={R.size}"


# --- 3 ---------------------------------------------------------------------------------

def criterion_3():
    bad = []
    for m in range(2, 11):
        T = triode_path(m)
        for strategy in ("brute", "fast"):
            rep = check_de_groot(T, 1, strategy)
            if rep.holds or not rep.witness.verify(T) or rep.witness.center != 0:
                bad.append((m, strategy))
    return not bad, f"m=2..10, both strategies: violation found, verified, center=junction; failures={bad}"


# --- 4 ---------------------------------------------------------------------------------

def _random_np1_space(rng) -> FiniteMetricSpace:
    """Size <= 12; line subsets, ultrametrics, or rejection-sampled planar sets."""
    while True:
        m = int(rng.integers(3, 13))
        family = rng.integers(3)
        if family == 0:
            t = np.sort(rng.uniform(-1, 1, m))
            X = FiniteMetricSpace(np.abs(t[:, None] - t[None, :]))
        elif family == 1:
            X = random_ultrametric(m, int(rng.integers(2**31)))
        else:
            m = int(rng.integers(3, 8))
            p = rng.uniform(0, 1, (m, 2))
            X = FiniteMetricSpace(np.linalg.norm(p[:, None] - p[None], axis=-1))
        if check_nagata(X, 1, "brute").holds:
            return X


def criterion_4():
    rng = np.random.default_rng(4)
    t = time.perf_counter()
    failures = 0
    for _ in range(100):
        X = _random_np1_space(rng)
        U = random_ultrametric(int(rng.integers(1, 6)), int(rng.integers(2**31)))
        if not check_nagata(max_product(X, U), 1, "brute").holds:
            failures += 1
    elapsed = time.perf_counter() - t
    ok = failures == 0 and elapsed < 60
    return ok, f"100 products, failures={failures}, {elapsed:.1f}s < 60s"


# --- 5 ---------------------------------------------------------------------------------

def criterion_5():
    rng = np.random.default_rng(5)
    disagree = 0
    counts = {True: 0, False: 0}
    for k in range(200):
        m = int(rng.integers(3, 21))
        X = random_ultrametric(m, k) if k % 2 == 0 else random_space(m, rng)
        u = check_ultrametric(X).holds
        g = check_de_groot(X, 0).holds
        n = check_nagata(X, 0).holds
        disagree += not (u == g == n)
        counts[u] += 1
    ok = disagree == 0
    return ok, f"200 spaces, disagreements={disagree}, ultrametric={counts[True]}, not={counts[False]}"


# --- 6 ---------------------------------------------------------------------------------

def criterion_6():
    host = i_space(0.1, 81)
    order = list(range(0, host.size, 2))
    arc = ArcSample.from_order(host, order, host.coords[order, 0])
    step = 2 / 80
    reports = [r for r in slice_batch(host, arc, "gp1-interval") if r.in_V]
    one = all(len(r.components) == 1 for r in reports)
    length = max(abs(r.component_lengths[0] - 2 * r.level) for r in reports)
    resid = max(r.formula_residual for r in reports)
    expansion = retraction_expansion(host, reports)
    ok = bool(reports) and one and length <= step and resid <= step and expansion <= 1e-12
    return ok, (f"{len(reports)} points in V, one component={one}, max |len-2D|={length:.3g}, "
                f"max residual={resid:.3g} (<= {step}), retraction expansion={expansion:.3g}")


# --- 7 ---------------------------------------------------------------------------------

def criterion_7():
    rows = []
    ok = True
    for seed in range(1, 6):
        rep, t = _timed(separation_experiment, 7 / 96, 11 / 96, 1 / 64, 33, seed)
        good = (not rep.gp1_holds) and rep.witness is not None and rep.witness.verify(rep.host) and t < 30
        ok &= good
        rows.append(f"seed {seed}: gp1={rep.gp1_holds} verified={rep.witness_verified} {t:.2f}s")
    return ok, "; ".join(rows)


# --- 8 ---------------------------------------------------------------------------------

def criterion_8():
    euclid_bad = [m for m in range(3, 65)
                  if not check_obtuse(ArcSample.from_order(euclidean_interval(0, 1, m), range(m))).holds]
    rng = np.random.default_rng(8)
    tested, failed, top = 0, 0, 0.0
    while tested < 200:
        arc = monotone_perturbed_arc(rng)
        D = arc_distortion(arc)
        if D > 1.95:
            continue
        tested += 1
        top = max(top, D)
        failed += not check_obtuse(arc).holds
    ok = not euclid_bad and failed == 0
    return ok, (f"euclidean m=3..64 failures={euclid_bad}; {tested} monotone arcs "
                f"(max Dist {top:.4f} <= 1.95) failures={failed}")


# --- 9 ---------------------------------------------------------------------------------

def criterion_9():
    rng = np.random.default_rng(9)
    mismatches = []
    holds = {"de_groot": 0, "nagata": 0}
    for k in range(500):
        X = random_space(int(rng.integers(4, 61)), rng)
        for kind in ("de_groot", "nagata"):
            fast = check_de_groot(X, 1, "fast") if kind == "de_groot" else check_nagata(X, 1, "fast")
            brute = check_de_groot(X, 1, "brute") if kind == "de_groot" else check_nagata(X, 1, "brute")
            if fast.holds != brute.holds:
                mismatches.append((k, kind))
            holds[kind] += brute.holds
    ok = not mismatches
    return ok, (f"500 spaces (m <= 60), mismatches={mismatches}, GP[1] holds on {holds['de_groot']}, "
                f"NP[1] holds on {holds['nagata']}")


# --- 10 --------------------------------------------------------------------------------

def criterion_10():
    rho = anneal_extension(triode_extension_problem(5, 2.0, "rho"), AnnealConfig(seed=0, steps=50_000))
    first = rho.violations == 0 and rho.steps == 0
    problem = triode_extension_problem(5)
    runs = [anneal_extension(problem, AnnealConfig(seed=s, steps=50_000)) for s in range(5)]
    reached = [r.seed for r in runs if r.objective == 0]
    cited = all(r.reference == TRIODE_REFERENCE for r in runs if r.violations > 0)
    no_proof = all(r.exploratory and "infeasible" not in r.status for r in runs)
    ok = first and not reached and cited and no_proof
    return ok, (f"delta=2 rho start: violations={rho.violations} at step {rho.steps}; "
                f"Euclidean-frozen: seeds reaching 0 = {reached}, "
                f"min violations per seed = {[r.violations for r in runs]}, cites reference={cited}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("n", range(1, 11))
def test_criterion(n):
    ok, detail = CRITERIA[n - 1]()
    _report(n, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    results = []
    for n, fn in enumerate(CRITERIA, start=1):
        ok, detail = fn()
        _report(n, ok, detail)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
