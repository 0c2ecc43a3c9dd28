"""Discretized arcs inside a host space: obtuseness, slices, separation and an openness surrogate.

Two modes share the machinery:

``gp1-interval``
    the arc is isometric to a real interval and the host is expected to be
    GP[1]; the neighbourhood is ``d(x, I) < d(x, {a, b}) / 3``.
``np1-obtuse``
    the arc is obtuse and the host is expected to be NP[1]; the
    neighbourhood is ``d(x, I) < d(x, {a, b})``.

All length and diameter assertions carry one parameter grid step of slack.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import FiniteMetricSpace
from .errors import ParameterError, PreconditionError
from .properties import ViolationWitness

MODES = ("gp1-interval", "np1-obtuse")


def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ParameterError(f"unknown mode {mode!r}; expected one of {MODES}")
    return mode


def _default_tol(host: FiniteMetricSpace) -> float:
    return 1e-9 * max(host.diameter, 1e-300)


@dataclass(frozen=True, eq=False)
class ArcSample:
    """Host indices ``order`` traced along an arc with increasing parameters ``params``."""

    host: FiniteMetricSpace
    order: tuple[int, ...]
    params: np.ndarray

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        params = np.array(self.params, dtype=float, copy=True)
        if len(order) < 2:
            raise ParameterError("an arc needs at least two points")
        if len(set(order)) != len(order):
            raise ParameterError("arc points must be distinct")
        if any(not 0 <= i < self.host.size for i in order):
            raise ParameterError("arc index out of host range")
        if params.shape != (len(order),):
            raise ParameterError("need one parameter per arc point")
        if np.any(np.diff(params) <= 0):
            raise ParameterError("arc parameters must be strictly increasing")
        params.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "params", params)

    @classmethod
    def from_order(cls, host: FiniteMetricSpace, order: Sequence[int],
                   params: Sequence[float] | None = None) -> "ArcSample":
        """Build an arc; parameters default to cumulative host distance along ``order``."""
        order = [int(i) for i in order]
        if params is None:
            steps = host.dist[order[:-1], order[1:]]
            params = np.concatenate([[0.0], np.cumsum(steps)])
        return cls(host, tuple(order), np.asarray(params, dtype=float))

    def __len__(self) -> int:
        return len(self.order)

    @property
    def endpoints(self) -> tuple[int, int]:
        return self.order[0], self.order[-1]

    @property
    def grid_step(self) -> float:
        return float(np.diff(self.params).max())

    @functools.cached_property
    def dist(self) -> np.ndarray:
        """Host distances between arc points, in arc order."""
        sel = np.asarray(self.order)
        return self.host.dist[np.ix_(sel, sel)]

    def isometry_defect(self) -> float:
        """Largest ``| |t - t'| - d(t, t') |`` over arc pairs."""
        return float(np.abs(np.abs(self.params[:, None] - self.params[None, :]) - self.dist).max())

    def is_isometric(self, tol: float | None = None) -> bool:
        return self.isometry_defect() <= (_default_tol(self.host) if tol is None else tol)


# --- obtuseness ------------------------------------------------------------------

@dataclass
class ObtuseReport:
    holds: bool
    condition: int | None = None
    subarc: tuple[int, int] | None = None
    z: int | None = None

    def to_dict(self) -> dict:
        return {"holds": self.holds, "failed_condition": self.condition,
                "subarc": None if self.subarc is None else list(self.subarc), "z": self.z}


def check_obtuse(arc: ArcSample, tol: float | None = None) -> ObtuseReport:
    """Both obtuseness conditions over all contiguous subarcs of at least three points.

    Positions in the report are arc positions (indices into ``arc.order``).

    Condition 1 only needs the three-point subarcs: shrinking a subarc around
    an interior point ``z`` removes candidate pairs, so if some subarc fails at
    ``z`` the subarc ``(z-1, z, z+1)`` fails too, and there the only pair not
    involving ``z`` is its two neighbours.
    """
    L = len(arc)
    if L < 3:
        raise ParameterError("obtuseness needs an arc with at least 3 points")
    d = arc.dist
    if tol is None:
        tol = 1e-12 * float(d.max())
    z = np.arange(1, L - 1)
    bad = ~(d[z - 1, z + 1] > np.maximum(d[z, z - 1], d[z, z + 1]) + tol)
    if bad.any():
        zz = int(z[np.argmax(bad)])
        return ObtuseReport(False, 1, (zz - 1, zz + 1), zz)

    for s in range(L - 2):
        e = np.arange(s + 2, L)[:, None]
        zz = np.arange(s + 1, L - 1)[None, :]
        inside = zz < e
        ok = d[s, e] > np.maximum(d[zz, s], d[zz, e]) + tol
        good = (ok & inside).any(axis=1)
        if not good.all():
            ee = int(e[np.argmin(good), 0])
            return ObtuseReport(False, 2, (s, ee), None)
    return ObtuseReport(True)


# --- slices -----------------------------------------------------------------------

def _runs(positions: np.ndarray) -> list[tuple[int, int]]:
    if positions.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(positions) > 1)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [positions.size - 1]])
    return [(int(positions[a]), int(positions[b])) for a, b in zip(starts, ends)]


@dataclass
class SliceReport:
    """Nearest-point structure of an off-arc point ``x``.

    ``level_set`` and ``components`` hold arc positions; ``components`` are
    maximal runs ``(first, last)`` of consecutive positions.  ``checks`` holds
    the slice conclusions evaluated when ``x`` is in the neighbourhood and the
    mode's precondition on the arc holds.
    """

    point: int
    mode: str
    level: float
    in_V: bool
    level_set: list[int]
    components: list[tuple[int, int]]
    component_lengths: list[float]
    component_diameters: list[float]
    retraction: float | None
    formula_residual: float | None
    grid_step: float
    precondition_ok: bool
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def asserted(self) -> bool:
        return self.in_V and self.precondition_ok

    @property
    def conclusion_holds(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "point": self.point, "mode": self.mode, "level": self.level, "in_V": self.in_V,
            "level_set": self.level_set, "components": [list(c) for c in self.components],
            "component_lengths": self.component_lengths,
            "component_diameters": self.component_diameters,
            "retraction": self.retraction, "formula_residual": self.formula_residual,
            "grid_step": self.grid_step, "precondition_ok": self.precondition_ok,
            "checks": self.checks,
        }


def _same_host(host: FiniteMetricSpace, arc: ArcSample) -> None:
    if host is not arc.host and not np.array_equal(host.dist, arc.host.dist):
        raise ParameterError("arc does not live in the given host")


def levels(host: FiniteMetricSpace, arc: ArcSample) -> tuple[np.ndarray, np.ndarray]:
    """Distance of every host point to the arc and to its endpoints."""
    sel = np.asarray(arc.order)
    a, b = arc.endpoints
    return host.dist[:, sel].min(axis=1), np.minimum(host.dist[:, a], host.dist[:, b])


def neighbourhood(host: FiniteMetricSpace, arc: ArcSample, mode: str,
                  tol: float | None = None) -> np.ndarray:
    """Boolean mask of V; strict with tolerance on the shrinking side."""
    _check_mode(mode)
    tol = _default_tol(host) if tol is None else tol
    level, ends = levels(host, arc)
    factor = 1.0 / 3.0 if mode == "gp1-interval" else 1.0
    return level < factor * ends - tol


@functools.lru_cache(maxsize=64)
def _precondition_cached(arc: ArcSample, mode: str, tol: float) -> bool:
    if mode == "gp1-interval":
        return arc.is_isometric(tol)
    return check_obtuse(arc).holds


def arc_precondition(arc: ArcSample, mode: str, tol: float | None = None) -> bool:
    """Isometry to an interval (gp1-interval) or obtuseness (np1-obtuse)."""
    _check_mode(mode)
    tol = _default_tol(arc.host) if tol is None else tol
    return _precondition_cached(arc, mode, tol)


def slice_analysis(host: FiniteMetricSpace, arc: ArcSample, x: int, mode: str = "gp1-interval",
                   tol: float | None = None) -> SliceReport:
    _check_mode(mode)
    _same_host(host, arc)
    if x in arc.order:
        raise ParameterError(f"point {x} lies on the arc")
    tol = _default_tol(host) if tol is None else tol
    dx = host.dist[x, np.asarray(arc.order)]
    D = float(dx.min())
    in_V = bool(neighbourhood(host, arc, mode, tol)[x])
    level_set = np.flatnonzero(dx <= D + tol)
    comps = _runs(level_set)
    params = arc.params
    lengths = [float(params[e] - params[s]) for s, e in comps]
    diameters = [float(arc.dist[s:e + 1, s:e + 1].max()) for s, e in comps]
    step = arc.grid_step
    pre_ok = arc_precondition(arc, mode, tol)

    retraction = residual = None
    if mode == "gp1-interval" and len(comps) == 1:
        s, e = comps[0]
        retraction = float((params[s] + params[e]) / 2)
        predicted = np.maximum(np.abs(params - retraction), D)
        residual = float(np.abs(dx - predicted).max())

    checks: dict[str, bool] = {}
    if in_V and pre_ok:
        if mode == "gp1-interval":
            checks["single_component"] = len(comps) == 1
            checks["length_2D"] = len(comps) == 1 and abs(lengths[0] - 2 * D) <= step + tol
            checks["formula"] = residual is not None and residual <= step + tol
        else:
            checks["long_components"] = all(dm > D - step for dm in diameters)
    return SliceReport(int(x), mode, D, in_V, level_set.tolist(), comps, lengths, diameters,
                       retraction, residual, step, pre_ok, checks)


def slice_batch(host: FiniteMetricSpace, arc: ArcSample, mode: str = "gp1-interval",
                tol: float | None = None, only_V: bool = True) -> list[SliceReport]:
    """Slice reports for every off-arc point (in V only, by default)."""
    on_arc = set(arc.order)
    mask = neighbourhood(host, arc, mode, tol)
    return [slice_analysis(host, arc, x, mode, tol) for x in range(host.size)
            if x not in on_arc and (mask[x] or not only_V)]


def retraction_expansion(host: FiniteMetricSpace, reports: Sequence[SliceReport]) -> float:
    """Largest ``|r(x) - r(y)| - d(x, y)`` over report pairs (<= 0 means non-expanding)."""
    pts = [(r.point, r.retraction) for r in reports if r.retraction is not None]
    if len(pts) < 2:
        return -np.inf
    idx = np.array([p for p, _ in pts])
    r = np.array([v for _, v in pts])
    gap = np.abs(r[:, None] - r[None, :]) - host.dist[np.ix_(idx, idx)]
    np.fill_diagonal(gap, -np.inf)
    return float(gap.max())


# --- separation -----------------------------------------------------------------

@dataclass
class SeparationReport:
    holds: bool
    x: int
    y: int
    level_x: float
    level_y: float
    distance: float
    quadruple: ViolationWitness | None = None
    witness_verified: bool | None = None

    def to_dict(self) -> dict:
        return {
            "holds": self.holds, "x": self.x, "y": self.y, "level_x": self.level_x,
            "level_y": self.level_y, "distance": self.distance,
            "quadruple": None if self.quadruple is None else self.quadruple.to_dict(),
            "witness_verified": self.witness_verified,
        }


def _pick_side(params, rx, lo, hi, target, side):
    """Arc position on one side of rx whose offset lies strictly in (lo, hi), nearest target."""
    off = params - rx
    if side < 0:
        ok = (off < 0) & (-off > lo) & (-off < hi)
    else:
        ok = (off > 0) & (off > lo) & (off < hi)
    if not ok.any():
        return None
    pos = np.flatnonzero(ok)
    return int(pos[np.argmin(np.abs(np.abs(off[pos]) - target))])


def separation_check(host: FiniteMetricSpace, arc: ArcSample, x: int, y: int,
                     mode: str = "gp1-interval", tol: float | None = None) -> SeparationReport:
    """``d(x, y) >= max(d(x, I), d(y, I))`` for V-points at different levels.

    On failure, rebuilds the quadruple that contradicts GP[1] (gp1-interval:
    the retraction point of the lower point shifted by ``±a`` with ``a``
    strictly between ``max(D_x, d(x, y))`` and ``D_y``) or NP[1] (np1-obtuse:
    the two farthest points of the lower point's level set), and re-verifies it.
    """
    _check_mode(mode)
    _same_host(host, arc)
    tol = _default_tol(host) if tol is None else tol
    V = neighbourhood(host, arc, mode, tol)
    for p in (x, y):
        if p in arc.order:
            raise PreconditionError(f"point {p} lies on the arc")
        if not V[p]:
            raise PreconditionError(f"point {p} is not in the neighbourhood V")
    level, _ = levels(host, arc)
    Dx, Dy = float(level[x]), float(level[y])
    if abs(Dx - Dy) <= tol:
        raise PreconditionError("the two points sit at the same level")
    dxy = float(host.dist[x, y])
    holds = dxy >= max(Dx, Dy) - tol
    report = SeparationReport(holds, int(x), int(y), Dx, Dy, dxy)
    if holds:
        return report

    low, high = (x, y) if Dx < Dy else (y, x)
    D_low, D_high = min(Dx, Dy), max(Dx, Dy)
    s = slice_analysis(host, arc, low, mode, tol)
    if mode == "gp1-interval":
        if s.retraction is None:
            return report
        lo, hi = max(D_low, dxy), D_high
        target = (lo + hi) / 2
        left = _pick_side(arc.params, s.retraction, lo, hi, target, -1)
        right = _pick_side(arc.params, s.retraction, lo, hi, target, +1)
        if left is None or right is None:
            return report
        pts = (arc.order[left], arc.order[right], high)
        witness = ViolationWitness.build(host, "de_groot", low, pts)
    else:
        lvl = np.asarray(s.level_set)
        if lvl.size < 2:
            return report
        sub = arc.dist[np.ix_(lvl, lvl)]
        i, j = np.unravel_index(int(np.argmax(sub)), sub.shape)
        pts = (arc.order[lvl[i]], arc.order[lvl[j]], high)
        witness = ViolationWitness.build(host, "nagata", low, pts)
    report.quadruple = witness
    report.witness_verified = witness.verify(host)
    return report


# --- openness surrogate -------------------------------------------------------------

@dataclass
class OpennessReport:
    locally_flat: bool
    offenders: list[tuple[int, int]]
    eps: float
    v_size: int
    precondition_ok: bool

    def to_dict(self) -> dict:
        return {"locally_flat": self.locally_flat, "offenders": [list(e) for e in self.offenders],
                "eps": self.eps, "v_size": self.v_size, "precondition_ok": self.precondition_ok}


def openness_probe(host: FiniteMetricSpace, arc: ArcSample, eps: float | None = None,
                   mode: str = "gp1-interval", tol: float | None = None) -> OpennessReport:
    """Edges of the eps-neighbourhood graph on V that join different levels too closely.

    An edge ``{u, v}`` with ``d(u, v) < eps`` offends when the levels differ
    and ``d(u, v) < max(level u, level v)``.  ``eps`` defaults to 2.5 grid steps.
    """
    _check_mode(mode)
    _same_host(host, arc)
    tol = _default_tol(host) if tol is None else tol
    if eps is None:
        eps = 2.5 * arc.grid_step
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    V = np.flatnonzero(neighbourhood(host, arc, mode, tol))
    level, _ = levels(host, arc)
    d = host.dist[np.ix_(V, V)]
    lv = level[V]
    close = (d < eps) & np.triu(np.ones_like(d, dtype=bool), 1)
    offend = close & (d < np.maximum(lv[:, None], lv[None, :]) - tol) \
        & (np.abs(lv[:, None] - lv[None, :]) > tol)
    offenders = [(int(V[i]), int(V[j])) for i, j in np.argwhere(offend)]
    return OpennessReport(not offenders, offenders, float(eps), int(V.size),
                          arc_precondition(arc, mode, tol))
