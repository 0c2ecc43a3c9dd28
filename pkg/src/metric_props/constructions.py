"""Concrete spaces: Euclidean grids, triode metrics, max-products, ultrametric samplers."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import FiniteMetricSpace, max_size, shortest_path_completion
from .errors import CapacityError, ParameterError
from .properties import check_ultrametric


def _grid(a: float, b: float, m: int) -> np.ndarray:
    # a + (b-a)*k/(m-1) is exact for dyadic and many decimal grids, unlike linspace
    t = a + (b - a) * np.arange(m) / (m - 1)
    t[-1] = b
    return t


def euclidean_interval(a: float, b: float, m: int) -> FiniteMetricSpace:
    """``m`` equally spaced points of ``[a, b]`` with the absolute-difference metric."""
    if m < 2:
        raise ParameterError(f"need m >= 2 grid points, got {m}")
    if not a < b:
        raise ParameterError(f"need a < b, got a={a}, b={b}")
    t = _grid(a, b, m)
    coords = np.column_stack([t, np.zeros(m)])
    return FiniteMetricSpace(np.abs(t[:, None] - t[None, :]),
                             [f"{v:g}" for v in t], coords)


def two_point_space(a: float) -> FiniteMetricSpace:
    if not a > 0:
        raise ParameterError(f"distance must be positive, got {a}")
    return FiniteMetricSpace([[0.0, a], [a, 0.0]], ["0", f"{a:g}"])


def equilateral_with_centroid(side: float = 1.0) -> FiniteMetricSpace:
    """Vertices of an equilateral triangle plus its centroid (last index)."""
    h = side * np.sqrt(3) / 2
    pts = np.array([[0.0, 0.0], [side, 0.0], [side / 2, h], [side / 2, h / 3]])
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    return FiniteMetricSpace(dist, ["A", "B", "C", "O"], pts)


# --- triode -----------------------------------------------------------------
#
# Point order shared by both triode metrics: index 0 is the junction, then the
# left arm -1/m, ..., -1, the right arm 1/m, ..., 1 and the upper arm
# i/m, ..., i.  Junction first makes it the first center scanned.

def triode_points(m: int) -> np.ndarray:
    """Complex coordinates of the ``3m + 1`` grid points of ``[-1, 1] ∪ [0, i]``."""
    if m < 2:
        raise ParameterError(f"need m >= 2 points per arm, got {m}")
    # arms reuse the bar grid so the bar restriction is bit-identical to euclidean_interval
    t = _grid(-1.0, 1.0, 2 * m + 1)
    left, right = t[m - 1::-1], t[m + 1:]
    return np.concatenate([[0.0 + 0j], left + 0j, right + 0j, 1j * right])


def triode_bar_indices(m: int) -> list[int]:
    """Indices of the bar ``[-1, 1]`` ordered from -1 to 1."""
    left = list(range(m, 0, -1))
    right = list(range(m + 1, 2 * m + 1))
    return left + [0] + right


def triode_arm_indices(m: int, arm: str) -> list[int]:
    """Junction followed by one arm ('left', 'right' or 'up'), moving outward."""
    start = {"left": 1, "right": m + 1, "up": 2 * m + 1}[arm]
    return [0] + list(range(start, start + m))


def _triode_space(z: np.ndarray, dist: np.ndarray) -> FiniteMetricSpace:
    labels = [f"{w.real:g}" if w.imag == 0 else f"{w.imag:g}i" for w in z]
    return FiniteMetricSpace(dist, labels, np.column_stack([z.real, z.imag]))


def triode_rho(m: int) -> FiniteMetricSpace:
    """The triode with the two-branch metric ρ.

    Same sign of the real part: Euclidean distance.  Otherwise: the largest of
    ``|Re z|, |Re z'|, Im z, Im z'``.  Points with zero real part (junction and
    upper arm) form their own sign class.
    """
    z = triode_points(m)
    sign = np.sign(z.real)
    same = sign[:, None] == sign[None, :]
    euclid = np.abs(z[:, None] - z[None, :])
    size = np.maximum(np.abs(z.real), z.imag)
    cross = np.maximum(size[:, None], size[None, :])
    dist = np.where(same, euclid, cross)
    np.fill_diagonal(dist, 0.0)
    return _triode_space(z, dist)


def triode_path(m: int) -> FiniteMetricSpace:
    """The triode with its intrinsic (shortest path inside T) metric."""
    z = triode_points(m)
    arm = np.concatenate([[-1], np.repeat([0, 1, 2], m)])
    same = (arm[:, None] == arm[None, :]) | (arm[:, None] < 0) | (arm[None, :] < 0)
    r = np.abs(z)
    dist = np.where(same, np.abs(z[:, None] - z[None, :]), r[:, None] + r[None, :])
    np.fill_diagonal(dist, 0.0)
    return _triode_space(z, dist)


# --- products -------------------------------------------------------------------

def max_product(X: FiniteMetricSpace, Y: FiniteMetricSpace) -> FiniteMetricSpace:
    """Product with the max-metric; point ``(i, j)`` has index ``i * |Y| + j``."""
    size = X.size * Y.size
    if size > max_size():
        raise CapacityError(f"product of size {size} exceeds the size cap {max_size()}")
    dist = np.maximum(X.dist[:, None, :, None], Y.dist[None, :, None, :]).reshape(size, size)
    labels = [f"({X.label(i)},{Y.label(j)})" for i in range(X.size) for j in range(Y.size)]
    return FiniteMetricSpace(dist, labels, check=False)


def i_space(a: float, m: int) -> FiniteMetricSpace:
    """Two copies of the ``[-1, 1]`` grid at heights 0 and ``a`` under the max-metric.

    Index ``2 * k + level`` holds grid point ``k`` at height ``level * a``.
    """
    if not a > 0:
        raise ParameterError(f"level gap must be positive, got {a}")
    if m < 2:
        raise ParameterError(f"need m >= 2 grid points, got {m}")
    base = max_product(euclidean_interval(-1.0, 1.0, m), two_point_space(a))
    t = _grid(-1.0, 1.0, m)
    coords = np.column_stack([np.repeat(t, 2), np.tile([0.0, a], m)])
    labels = [f"({x:g},{y:g})" for x, y in coords]
    return FiniteMetricSpace(base.dist, labels, coords, check=False)


# --- ultrametric samplers ---------------------------------------------------------

def lm_functions(group_order: int, levels: Sequence[float], m: int, seed=None) -> np.ndarray:
    """``m`` distinct random maps levels -> Z/group_order, as an (m, len(levels)) array.

    Column ``j`` corresponds to ``sorted(levels)[j]``.
    """
    if group_order < 2:
        raise ParameterError(f"group order must be at least 2, got {group_order}")
    lv = np.asarray(levels, dtype=float)
    if lv.size == 0 or np.any(lv <= 0) or len(np.unique(lv)) != lv.size:
        raise ParameterError("levels must be distinct positive numbers")
    capacity = float(group_order) ** lv.size
    if m > capacity:
        raise CapacityError(f"only {capacity:g} distinct functions exist, asked for {m}")
    if m < 1:
        raise ParameterError("need m >= 1")
    rng = np.random.default_rng(seed)
    seen: set[tuple[int, ...]] = set()
    rows = []
    while len(rows) < m:
        f = tuple(int(v) for v in rng.integers(0, group_order, size=lv.size))
        if f in seen:
            continue
        seen.add(f)
        rows.append(f)
    return np.array(rows, dtype=np.int64)


def lm_distance(values: np.ndarray, levels: Sequence[float]) -> np.ndarray:
    """Largest level at which two maps differ (0 where they agree everywhere)."""
    lv = np.sort(np.asarray(levels, dtype=float))
    differ = values[:, None, :] != values[None, :, :]
    return np.where(differ, lv[None, None, :], 0.0).max(axis=-1)


def lm_translate(values: np.ndarray, shift: np.ndarray, group_order: int) -> np.ndarray:
    return (values + shift[None, :]) % group_order


def lm_sample(group_order: int, levels: Sequence[float], m: int, seed=None) -> FiniteMetricSpace:
    values = lm_functions(group_order, levels, m, seed)
    labels = ["f[" + ",".join(str(v) for v in row) + "]" for row in values]
    return FiniteMetricSpace(lm_distance(values, levels), labels)


def ultrametric_extend(A: FiniteMetricSpace, extra: int, D: float) -> FiniteMetricSpace:
    """Append ``extra`` points at distance ``D`` from every other point."""
    if extra < 1:
        raise ParameterError(f"extra must be >= 1, got {extra}")
    if not check_ultrametric(A).holds:
        raise ParameterError("base space is not an ultrametric")
    if not D > 0 or D < A.diameter:
        raise ParameterError(f"D={D} must be positive and at least the diameter {A.diameter}")
    m = A.size + extra
    dist = np.full((m, m), float(D))
    dist[:A.size, :A.size] = A.dist
    np.fill_diagonal(dist, 0.0)
    labels = None
    if A.labels is not None:
        labels = list(A.labels) + [f"new{k}" for k in range(extra)]
    return FiniteMetricSpace(dist, labels)


def random_ultrametric(m: int, seed=None) -> FiniteMetricSpace:
    """Ultrametric from a random binary merge tree with strictly increasing heights in (0, 1]."""
    if m < 1:
        raise ParameterError(f"need m >= 1, got {m}")
    rng = np.random.default_rng(seed)
    heights = np.cumsum(rng.uniform(0.05, 1.0, size=max(m - 1, 0)))
    if heights.size:
        heights /= heights[-1]
    clusters = [[i] for i in range(m)]
    dist = np.zeros((m, m))
    for h in heights:
        a, b = sorted(rng.choice(len(clusters), size=2, replace=False))
        left, right = clusters[a], clusters[b]
        dist[np.ix_(left, right)] = h
        dist[np.ix_(right, left)] = h
        clusters[a] = left + right
        del clusters[b]
    return FiniteMetricSpace(dist)


def random_metric(m: int, seed=None) -> FiniteMetricSpace:
    """Random symmetric positive entries pulled onto the metric cone by shortest paths."""
    if m < 1:
        raise ParameterError(f"need m >= 1, got {m}")
    rng = np.random.default_rng(seed)
    raw = rng.uniform(0.1, 1.0, size=(m, m))
    raw = np.triu(raw, 1)
    raw = raw + raw.T
    return shortest_path_completion(raw)
