"""Shared generators and nested-loop oracles for the test suite."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from metric_props.arcs import ArcSample
from metric_props.constructions import random_ultrametric
from metric_props.core import FiniteMetricSpace, shortest_path_completion


# --- oracles: plain nested loops, written straight from the definitions ----------------------

def oracle_holds(space: FiniteMetricSpace, kind: str, n: int = 1) -> bool:
    d = space.dist
    m = space.size
    tol = 1e-12 * space.diameter
    for c in range(m):
        others = [i for i in range(m) if i != c]
        for tup in itertools.combinations(others, n + 2):
            pairs = list(itertools.combinations(tup, 2))
            if kind == "de_groot":
                rmax = max(d[c, p] for p in tup)
                if all(d[p, q] > rmax + tol for p, q in pairs):
                    return False
            else:
                if all(d[p, q] > max(d[c, p], d[c, q]) + tol for p, q in pairs):
                    return False
    return True


def oracle_ultrametric(space: FiniteMetricSpace) -> bool:
    d = space.dist
    tol = 1e-12 * space.diameter
    m = space.size
    return all(d[i, j] <= max(d[i, k], d[k, j]) + tol
               for i in range(m) for j in range(m) for k in range(m))


def oracle_count(space: FiniteMetricSpace, kind: str, n: int = 1) -> int:
    d = space.dist
    m = space.size
    tol = 1e-12 * space.diameter
    count = 0
    for c in range(m):
        others = [i for i in range(m) if i != c]
        for tup in itertools.combinations(others, n + 2):
            pairs = list(itertools.combinations(tup, 2))
            if kind == "de_groot":
                rmax = max(d[c, p] for p in tup)
                bad = all(d[p, q] > rmax + tol for p, q in pairs)
            else:
                bad = all(d[p, q] > max(d[c, p], d[c, q]) + tol for p, q in pairs)
            count += bad
    return count


# --- random spaces ---------------------------------------------------------------------

def random_line_subset(m: int, rng) -> FiniteMetricSpace:
    t = np.sort(rng.uniform(-1, 1, size=m))
    return FiniteMetricSpace(np.abs(t[:, None] - t[None, :]))


def random_planar(m: int, rng) -> FiniteMetricSpace:
    p = rng.uniform(0, 1, size=(m, 2))
    return FiniteMetricSpace(np.linalg.norm(p[:, None] - p[None, :], axis=-1))


def random_integer_metric(m: int, rng) -> FiniteMetricSpace:
    """Shortest paths over small integer weights: many exact ties."""
    w = rng.integers(1, 4, size=(m, m)).astype(float)
    w = np.triu(w, 1)
    return shortest_path_completion(w + w.T)


def random_generic(m: int, rng) -> FiniteMetricSpace:
    raw = rng.uniform(0.5, 1.0, size=(m, m))
    raw = np.triu(raw, 1)
    return shortest_path_completion(raw + raw.T)


def random_space(m: int, rng) -> FiniteMetricSpace:
    """One of several families, chosen so that both outcomes of GP[1]/NP[1] occur."""
    family = rng.integers(5)
    if family == 0:
        return random_line_subset(m, rng)
    if family == 1:
        return random_planar(m, rng)
    if family == 2:
        return random_integer_metric(m, rng)
    if family == 3:
        return random_ultrametric(m, int(rng.integers(2**31)))
    return random_generic(m, rng)


# --- arcs ------------------------------------------------------------------------------------

def monotone_perturbed_arc(rng, length: int | None = None, max_slope: float = 1.7,
                           jitter: float = 0.3) -> ArcSample:
    """Planar arc sampled at uniform parameters with strictly increasing x.

    x steps are ``1 + U(-jitter, jitter)``, y steps ``U(-s, s)`` with a random
    slope bound ``s <= max_slope``.
    """
    L = int(rng.integers(6, 40)) if length is None else length
    s = rng.uniform(0.0, max_slope)
    dx = 1.0 + rng.uniform(-jitter, jitter, size=L - 1)
    dy = rng.uniform(-s, s, size=L - 1)
    pts = np.column_stack([np.concatenate([[0.0], np.cumsum(dx)]),
                           np.concatenate([[0.0], np.cumsum(dy)])])
    host = FiniteMetricSpace(np.linalg.norm(pts[:, None] - pts[None, :], axis=-1))
    return ArcSample.from_order(host, range(L), np.arange(L, dtype=float))


def arc_distortion(arc: ArcSample) -> float:
    iu, ju = np.triu_indices(len(arc), 1)
    r = arc.dist[iu, ju] / np.abs(arc.params[iu] - arc.params[ju])
    return float(r.max() / r.min())


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
