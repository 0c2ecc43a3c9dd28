"""Numerical experiments over the metric cone.

Simulated annealing looks for completions of partially frozen metrics that
satisfy GP[n] / NP[n]; the separation experiment glues two grid copies of the
two-level space ``[-1, 1] x {0, a}`` at a small sup-distance and checks GP[1].

Negative annealing outcomes are reported as "no feasible point found", never
as infeasibility: every run here is exploratory evidence.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .constructions import euclidean_interval, i_space, triode_bar_indices, triode_path, triode_rho, triode_arm_indices
from .core import FiniteMetricSpace, floyd_warshall, load_space, save_space, shortest_path_completion
from .embeddings import PointMap, map_sup_distance
from .errors import InfeasibleError, ParameterError
from .properties import ViolationWitness, check_de_groot, count_violations, normalize_kind, violation_margin

TRIODE_REFERENCE = ("known result: the Euclidean metric on [-1,1] admits no admissible GP[1] "
                    "extension to the triode (a statement about the continuum; finite runs are evidence only)")

DEFAULT_PENALTY = 10.0


# --- objective ------------------------------------------------------------------

def _tuple_table(m: int, n: int) -> np.ndarray | None:
    """All (center, x1 < ... < x_{n+2}) index rows for small spaces, else None."""
    s = n + 2
    count = m * math.comb(m - 1, s) if m > s else 0
    if count == 0 or count > 2_000_000:
        return None
    rows = []
    for c in range(m):
        others = [i for i in range(m) if i != c]
        for tup in itertools.combinations(others, s):
            rows.append((c,) + tup)
    return np.array(rows, dtype=np.int64)


class ViolationObjective:
    """Hinge objective for a fixed space size and target, with precomputed tuple indices."""

    def __init__(self, m: int, kind: str, n: int = 1, penalty_weight: float = DEFAULT_PENALTY):
        kind = normalize_kind(kind)
        if kind == "ultrametric":
            kind, n = "nagata", 0
        self.m, self.kind, self.n = m, kind, n
        self.penalty_weight = penalty_weight
        self.table = _tuple_table(m, n)
        if self.table is not None:
            s = n + 2
            pairs = list(itertools.combinations(range(1, s + 1), 2))
            t = self.table
            # flat indices into the raveled matrix, one column per pair / radius
            self._pair_idx = [t[:, p] * m + t[:, q] for p, q in pairs]
            self._rad_idx = [t[:, 0] * m + t[:, p] for p in range(1, s + 1)]
            self._pair_rads = [(t[:, 0] * m + t[:, p], t[:, 0] * m + t[:, q]) for p, q in pairs]

    def margins(self, dist: np.ndarray) -> np.ndarray:
        """Per-tuple violation margin (positive = violating) for the precomputed table."""
        flat = np.ascontiguousarray(dist).ravel()
        if self.kind == "de_groot":
            gap = functools.reduce(np.minimum, [flat[i] for i in self._pair_idx])
            return gap - functools.reduce(np.maximum, [flat[i] for i in self._rad_idx])
        return functools.reduce(np.minimum, [flat[i] - np.maximum(flat[a], flat[b])
                                             for i, (a, b) in zip(self._pair_idx, self._pair_rads)])

    def hinge(self, dist: np.ndarray) -> float:
        tol = 1e-12 * float(dist.max())
        if self.table is None:
            space = FiniteMetricSpace(dist, check=False)
            return violation_margin(space, self.kind, self.n)
        mg = self.margins(dist)
        return float(mg[mg > tol].sum())

    def __call__(self, dist: np.ndarray) -> float:
        return self.hinge(dist) + self.penalty_weight * triangle_penalty(dist)


def triangle_penalty(dist: np.ndarray, tol: float = 1e-9) -> float:
    """Sum over pairs i<j and k of the triangle excess d(i,j) - d(i,k) - d(k,j) beyond tol."""
    d = np.asarray(dist, dtype=float)
    m = d.shape[0]
    tol = tol * max(1.0, float(np.abs(d).max()))
    # ex[i, j, k] = d(i,j) - d(i,k) - d(k,j), zeroed where k is i or j
    ex = d[:, :, None] - d[:, None, :] - d.T[None, :, :]
    idx = np.arange(m)
    ex[idx, :, idx] = 0.0
    ex[:, idx, idx] = 0.0
    iu = np.triu(np.ones((m, m), dtype=bool), 1)
    sel = ex[iu]
    return float(sel[sel > tol].sum())


def violation_objective(space, target, penalty_weight: float = DEFAULT_PENALTY) -> float:
    """Hinge sum of violation margins plus ``penalty_weight`` times the triangle excess.

    ``target`` is ``(kind, n)``; ``space`` may be a FiniteMetricSpace or a raw matrix.
    Zero exactly when the property holds and the matrix is a metric.
    """
    dist = space.dist if isinstance(space, FiniteMetricSpace) else np.asarray(space, dtype=float)
    kind, n = target
    return ViolationObjective(dist.shape[0], kind, n, penalty_weight)(dist)


# --- problems and results ----------------------------------------------------------

@dataclass
class ExtensionProblem:
    """Extend ``base`` (indices ``0..|A|-1``) to ``total_size`` points.

    ``fixed_mask`` marks frozen entries (default: the base block).  With a
    ``distortion_bound`` the base block may move as long as the identity from
    ``base`` has distortion at most the bound.  ``initial`` optionally gives a
    full starting matrix.
    """

    base: FiniteMetricSpace
    total_size: int
    target: tuple[str, int] = ("de_groot", 1)
    fixed_mask: np.ndarray | None = None
    distortion_bound: float | None = None
    initial: np.ndarray | None = None
    reference: str | None = None

    def __post_init__(self):
        a = self.base.size
        if self.total_size < a:
            raise ParameterError("total_size must be at least the base size")
        kind, n = self.target
        self.target = (normalize_kind(kind), int(n))
        if self.fixed_mask is None:
            mask = np.zeros((self.total_size, self.total_size), dtype=bool)
            mask[:a, :a] = True
        else:
            mask = np.asarray(self.fixed_mask, dtype=bool)
            if mask.shape != (self.total_size, self.total_size):
                raise ParameterError("fixed_mask has the wrong shape")
            mask = mask | mask.T
        np.fill_diagonal(mask, True)
        self.fixed_mask = mask
        if self.distortion_bound is not None and self.distortion_bound < 1:
            raise ParameterError("distortion bound must be at least 1")

    @property
    def free_mask(self) -> np.ndarray:
        return ~self.fixed_mask

    def to_dict(self, base_ref: str = "base.json") -> dict:
        return {"base": base_ref, "total_size": self.total_size,
                "fixed_mask": rle_encode(self.fixed_mask), "distortion_bound": self.distortion_bound,
                "target": {"kind": self.target[0], "n": self.target[1]}}


def rle_encode(mask: np.ndarray) -> list[int]:
    """Run lengths of the row-major flattened mask, starting with a run of False."""
    flat = np.asarray(mask, dtype=bool).ravel()
    runs, current, length = [], False, 0
    for v in flat:
        if v == current:
            length += 1
        else:
            runs.append(length)
            current, length = v, 1
    runs.append(length)
    return runs


def rle_decode(runs, size: int) -> np.ndarray:
    flat = np.zeros(size * size, dtype=bool)
    pos, value = 0, False
    for r in runs:
        flat[pos:pos + r] = value
        pos += r
        value = not value
    if pos != size * size:
        raise ParameterError(f"run lengths cover {pos} cells, expected {size * size}")
    return flat.reshape(size, size)


def load_problem(path) -> ExtensionProblem:
    path = Path(path)
    obj = json.loads(path.read_text(encoding="utf-8"))
    base = load_space(path.parent / obj["base"])
    total = int(obj["total_size"])
    mask = rle_decode(obj["fixed_mask"], total) if obj.get("fixed_mask") is not None else None
    target = obj.get("target", {"kind": "de_groot", "n": 1})
    return ExtensionProblem(base, total, (target["kind"], int(target["n"])), mask,
                            obj.get("distortion_bound"))


def save_problem(problem: ExtensionProblem, path, base_name: str = "base.json") -> None:
    path = Path(path)
    save_space(problem.base, path.parent / base_name)
    path.write_text(json.dumps(problem.to_dict(base_name), sort_keys=True) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class AnnealConfig:
    seed: int
    steps: int = 10_000
    t0: float | None = None
    decay: float = 0.95
    decay_every: int = 1000
    move_size: float = 0.1
    trace_every: int = 100
    penalty_weight: float = DEFAULT_PENALTY


@dataclass
class SearchResult:
    best: FiniteMetricSpace
    violations: int
    objective: float
    objective_trace: list[tuple[int, float]]
    achieved_distortion: float
    seed: int
    steps: int
    accepted: int = 0
    rejected_frozen: int = 0
    status: str = ""
    reference: str | None = None
    exploratory: bool = True

    def to_dict(self) -> dict:
        return {
            "violations": self.violations, "objective": self.objective,
            "achieved_distortion": self.achieved_distortion, "seed": self.seed,
            "steps": self.steps, "accepted": self.accepted,
            "rejected_frozen": self.rejected_frozen, "status": self.status,
            "reference": self.reference, "exploratory": self.exploratory,
            "size": self.best.size,
        }

    def trace_csv(self) -> str:
        return "step,objective\n" + "".join(f"{s},{o!r}\n" for s, o in self.objective_trace)


def _initial_state(problem: ExtensionProblem) -> np.ndarray:
    m, a = problem.total_size, problem.base.size
    if problem.initial is not None:
        init = np.array(problem.initial, dtype=float)
        if init.shape != (m, m):
            raise ParameterError("initial matrix has the wrong shape")
        if problem.distortion_bound is None:
            init[:a, :a] = problem.base.dist
    else:
        init = np.full((m, m), max(problem.base.diameter, 1.0))
        init[:a, :a] = problem.base.dist
    np.fill_diagonal(init, 0.0)
    closed = floyd_warshall(init)
    if problem.distortion_bound is None:
        fixed = problem.fixed_mask
        if np.any(closed[fixed] < init[fixed] - 1e-9 * max(1.0, init.max())):
            raise InfeasibleError("frozen entries cannot be completed to a metric")
    return closed


def _base_distortion(problem: ExtensionProblem, dist: np.ndarray) -> float:
    a = problem.base.size
    if a < 2:
        return 1.0
    iu, ju = np.triu_indices(a, 1)
    ratio = dist[:a, :a][iu, ju] / problem.base.dist[iu, ju]
    return float(ratio.max() / ratio.min())


def _propose(dist: np.ndarray, i: int, j: int, w: float) -> np.ndarray:
    """Metric closure after setting entry (i, j) to w, for a closed ``dist``."""
    old = dist[i, j]
    if w < old:
        via = np.minimum(dist[:, i, None] + w + dist[None, j, :],
                         dist[:, j, None] + w + dist[None, i, :])
        return np.minimum(dist, via)
    others = np.ones(dist.shape[0], dtype=bool)
    others[[i, j]] = False
    cap = float((dist[i, others] + dist[others, j]).min()) if others.any() else w
    new = dist.copy()
    new[i, j] = new[j, i] = min(w, cap)
    return new


def anneal_extension(problem: ExtensionProblem, config: AnnealConfig) -> SearchResult:
    """Metropolis search over single-entry log-normal moves, repaired onto the metric cone.

    Deterministic for a fixed problem and config.  Moves that would change a
    frozen entry (or, with a distortion bound, push the base distortion over
    the bound) are rejected.
    """
    rng = np.random.default_rng(config.seed)
    kind, n = problem.target
    objective = ViolationObjective(problem.total_size, kind, n, config.penalty_weight)
    state = _initial_state(problem)
    fixed = problem.fixed_mask
    bound = problem.distortion_bound
    movable = np.triu(~fixed if bound is None else ~np.eye(problem.total_size, dtype=bool), 1)
    if bound is not None:
        movable |= np.triu(fixed, 1) & ~np.eye(problem.total_size, dtype=bool)
        if _base_distortion(problem, state) > bound * (1 + 1e-12):
            raise InfeasibleError("initial state already exceeds the distortion bound")
    cells = np.argwhere(movable)
    current = objective(state)
    best, best_obj = state, current
    t0 = config.t0 if config.t0 is not None else current
    trace = [(0, current)]
    accepted = rejected_frozen = 0
    step = 0
    if current > 0 and len(cells):
        for step in range(1, config.steps + 1):
            i, j = cells[rng.integers(len(cells))]
            w = state[i, j] * math.exp(config.move_size * rng.standard_normal())
            cand = _propose(state, int(i), int(j), w)
            if bound is None:
                if not np.array_equal(cand[fixed], state[fixed]):
                    rejected_frozen += 1
                    continue
            else:
                if _base_distortion(problem, cand) > bound * (1 + 1e-12):
                    rejected_frozen += 1
                    continue
                rest = fixed.copy()
                rest[:problem.base.size, :problem.base.size] = False
                if not np.array_equal(cand[rest], state[rest]):
                    rejected_frozen += 1
                    continue
            value = objective(cand)
            temp = t0 * config.decay ** (step / config.decay_every)
            delta = value - current
            if delta <= 0 or (temp > 0 and rng.random() < math.exp(-delta / temp)):
                state, current = cand, value
                accepted += 1
                if current < best_obj:
                    best, best_obj = state, current
            if step % config.trace_every == 0:
                trace.append((step, current))
            if best_obj == 0:
                break
        if trace[-1][0] != step:
            trace.append((step, current))

    best_space = FiniteMetricSpace(best, check=False)
    violations = count_violations(best_space, kind, n)
    status = "feasible point found" if violations == 0 and best_obj == 0 else "no feasible point found"
    return SearchResult(
        best=best_space, violations=violations, objective=float(best_obj), objective_trace=trace,
        achieved_distortion=_base_distortion(problem, best), seed=config.seed, steps=step,
        accepted=accepted, rejected_frozen=rejected_frozen, status=status,
        reference=problem.reference if violations > 0 else None,
    )


def _anneal_job(args):
    problem, config = args
    return anneal_extension(problem, config)


def anneal_many(problem: ExtensionProblem, config: AnnealConfig, seeds, threads: int = 1):
    """Independent chains over ``seeds``; returns (best result, all results)."""
    jobs = [(problem, AnnealConfig(**{**asdict(config), "seed": int(s)})) for s in seeds]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_anneal_job, jobs))
    else:
        results = [_anneal_job(j) for j in jobs]
    best = min(results, key=lambda r: (r.objective, r.seed))
    return best, results


def triode_extension_problem(m: int = 5, distortion_bound: float | None = None,
                             init: str = "path", target=("de_groot", 1)) -> ExtensionProblem:
    """Extend the Euclidean bar grid of the triode by its upper arm.

    Point order: the bar from -1 to 1 (the base), then the upper arm outward.
    ``init`` chooses the starting metric: the intrinsic path metric or ρ.
    """
    perm = triode_bar_indices(m) + triode_arm_indices(m, "up")[1:]
    if init == "path":
        src = triode_path(m)
    elif init == "rho":
        src = triode_rho(m)
    else:
        raise ParameterError(f"unknown initialization {init!r}")
    sel = np.asarray(perm)
    initial = src.dist[np.ix_(sel, sel)]
    base = euclidean_interval(-1.0, 1.0, 2 * m + 1)
    reference = TRIODE_REFERENCE if distortion_bound is None else None
    return ExtensionProblem(base, len(perm), target, None, distortion_bound, initial, reference)


# --- separation experiment ------------------------------------------------------------

@dataclass
class SeparationExperimentReport:
    a: float
    b: float
    eps: float
    m: int
    seed: int | None
    gp1_holds: bool
    witness: ViolationWitness | None
    witness_verified: bool | None
    sup_distance: float
    copies_isometric: bool
    max_frozen_shrink: float
    assertion_applicable: bool
    host: FiniteMetricSpace = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "a": self.a, "b": self.b, "eps": self.eps, "m": self.m, "seed": self.seed,
            "gp1_holds": self.gp1_holds,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "witness_verified": self.witness_verified, "sup_distance": self.sup_distance,
            "copies_isometric": self.copies_isometric, "max_frozen_shrink": self.max_frozen_shrink,
            "assertion_applicable": self.assertion_applicable,
        }


def separation_host(a: float, b: float, eps: float, m: int, seed=None):
    """Glue grid copies of the two-level spaces at heights ``a`` and ``b``.

    Copy ``a`` occupies indices ``0..2m-1`` and copy ``b`` the next ``2m``, both
    in the point order of :func:`i_space`.  Intra-copy distances and the
    cross distances between corresponding points are fixed; the latter are
    ``eps`` or, with a seed, uniform in ``[eps/2, eps]``.  Everything else is
    completed by shortest paths.  Returns ``(host, frozen partial matrix)``.
    """
    A, B = i_space(a, m), i_space(b, m)
    k = A.size
    partial = np.full((2 * k, 2 * k), np.nan)
    partial[:k, :k] = A.dist
    partial[k:, k:] = B.dist
    if seed is None:
        links = np.full(k, float(eps))
    else:
        links = np.random.default_rng(seed).uniform(eps / 2, eps, size=k)
    idx = np.arange(k)
    partial[idx, k + idx] = links
    partial[k + idx, idx] = links
    labels = [f"a{s}" for s in A.labels] + [f"b{s}" for s in B.labels]
    return shortest_path_completion(partial, labels=labels), partial


def separation_experiment(a: float, b: float, eps: float, m: int = 33, seed=None,
                          strategy: str = "fast") -> SeparationExperimentReport:
    lo, hi = 1.0 / 16.0, 1.0 / 8.0
    for name, v in (("a", a), ("b", b)):
        if not lo < v < hi:
            raise ParameterError(f"{name}={v} must lie strictly between 1/16 and 1/8")
    if a == b:
        raise ParameterError("a and b must differ")
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if m < 2:
        raise ParameterError(f"need m >= 2, got {m}")
    host, partial = separation_host(a, b, eps, m, seed)
    k = 2 * m
    known = ~np.isnan(partial)
    shrink = float(np.max(np.where(known, partial - host.dist, 0.0)))
    domain = i_space(1.0, m)
    f_a = PointMap(domain, host, tuple(range(k)))
    f_b = PointMap(domain, host, tuple(range(k, 2 * k)))
    report = check_de_groot(host, 1, strategy)
    witness = report.witness
    return SeparationExperimentReport(
        a=a, b=b, eps=eps, m=m, seed=seed, gp1_holds=report.holds, witness=witness,
        witness_verified=None if witness is None else witness.verify(host),
        sup_distance=map_sup_distance(f_a, f_b),
        copies_isometric=shrink <= 1e-12,
        max_frozen_shrink=shrink,
        assertion_applicable=eps < 1.0 / 32.0,
        host=host,
    )
