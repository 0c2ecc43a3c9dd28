"""Ultrametric, de Groot GP[n] and Nagata NP[n] checks with explicit witnesses.

Tuples are of distinct points.  A tuple ``(x1, ..., x_{n+2})`` around a center
``x0`` violates GP[n] when every pair among the ``x_i`` is farther apart than
the largest radius ``d(x0, x_k)``; it violates NP[n] when every pair is
farther apart than the larger of its own two radii.  Both comparisons carry a
slack of ``1e-12 * diameter`` on the violating side.

Two strategies are provided.  ``brute`` enumerates every tuple (vectorized in
blocks of three trailing indices, so ``n >= 2`` loops over prefixes); ``fast``
reduces NP[1] to triangle detection in a per-center "far pair" graph and GP[1]
to a threshold sweep over the candidate max-radius point.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .core import FiniteMetricSpace
from .errors import OracleMismatchError, ParameterError

TOL_CHECK_REL = 1e-12

KINDS = ("ultrametric", "de_groot", "nagata")
STRATEGIES = ("brute", "fast", "both")
_ALIASES = {"gp": "de_groot", "np": "nagata", "um": "ultrametric"}

# elements per vectorized block
_BLOCK = 1 << 22


def normalize_kind(kind: str) -> str:
    kind = _ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ParameterError(f"unknown property kind {kind!r}; expected one of {KINDS}")
    return kind


def tol_check(space: FiniteMetricSpace) -> float:
    return TOL_CHECK_REL * space.diameter


@dataclass(frozen=True)
class PropertyQuery:
    kind: str
    n: int = 1
    strategy: str = "fast"

    def __post_init__(self):
        object.__setattr__(self, "kind", normalize_kind(self.kind))
        if self.kind == "ultrametric":
            object.__setattr__(self, "n", 0)
        if self.n < 0:
            raise ParameterError(f"n must be non-negative, got {self.n}")
        if self.strategy not in STRATEGIES:
            raise ParameterError(f"unknown strategy {self.strategy!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "strategy": self.strategy}


@dataclass(frozen=True)
class ViolationWitness:
    kind: str
    center: int
    points: tuple[int, ...]
    radii: tuple[float, ...]
    min_pairwise: float

    @classmethod
    def build(cls, space: FiniteMetricSpace, kind: str, center: int, points) -> "ViolationWitness":
        points = tuple(int(p) for p in points)
        d = space.dist
        radii = tuple(float(d[center, p]) for p in points)
        pairs = [float(d[p, q]) for p, q in itertools.combinations(points, 2)]
        return cls(normalize_kind(kind), int(center), points, radii, min(pairs))

    def verify(self, space: FiniteMetricSpace, slack: float = 0.0) -> bool:
        """Re-check the violation against ``space`` with exact stored distances."""
        d = space.dist
        pts = self.points
        idx = (self.center,) + pts
        if len(set(idx)) != len(idx) or not all(0 <= i < space.size for i in idx):
            return False
        if self.kind == "de_groot":
            bound = max(d[self.center, p] for p in pts)
            return all(d[p, q] > bound + slack for p, q in itertools.combinations(pts, 2))
        return all(d[p, q] > max(d[self.center, p], d[self.center, q]) + slack
                   for p, q in itertools.combinations(pts, 2))

    def to_dict(self) -> dict:
        return {"center": self.center, "tuple": list(self.points),
                "radii": list(self.radii), "min_pairwise": self.min_pairwise}

    def describe(self, space: FiniteMetricSpace) -> str:
        lab = space.label
        lines = [f"center {lab(self.center)}"]
        for p, r in zip(self.points, self.radii):
            lines.append(f"  d({lab(self.center)}, {lab(p)}) = {r:.12g}")
        for p, q in itertools.combinations(self.points, 2):
            lines.append(f"  d({lab(p)}, {lab(q)}) = {space.dist[p, q]:.12g}")
        return "\n".join(lines)


@dataclass
class PropertyReport:
    query: PropertyQuery
    holds: bool
    witness: ViolationWitness | None = None
    tuples_examined: int = 0
    elapsed: float = 0.0
    degraded: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "query": self.query.to_dict(),
            "holds": self.holds,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "tuples_examined": int(self.tuples_examined),
            "elapsed_ms": 1000.0 * self.elapsed,
            "degraded": self.degraded,
        }


# --- brute-force enumeration -------------------------------------------------

def _center_tables(dist: np.ndarray, c: int, kind: str):
    others = np.delete(np.arange(dist.shape[0]), c)
    pair = dist[np.ix_(others, others)]
    radius = dist[c, others]
    if kind == "nagata":
        # per-pair margin against the larger of the pair's own radii
        pair = pair - np.maximum(radius[:, None], radius[None, :])
    return others, pair, radius


def _iter_blocks(L: int, s: int):
    """Yield (prefix, i-range) covering all s-subsets of range(L) in lexicographic order.

    The trailing min(s, 3) positions are handled as one dense block per
    i-chunk; the prefix (length s - 3 when s > 3) is looped explicitly.
    """
    tail = min(s, 3)
    for prefix in itertools.combinations(range(L), s - tail):
        start = prefix[-1] + 1 if prefix else 0
        if L - start < tail:
            continue
        width = max(1, _BLOCK // max(1, (L - start) ** (tail - 1)))
        for i0 in range(start, L - tail + 1, width):
            yield prefix, start, i0, min(i0 + width, L - tail + 1)


def _block_margin(pair, radius, kind, prefix, start, i0, i1, s):
    """Margins of all s-tuples (prefix, i, j[, k]) with i in [i0, i1), increasing order.

    Returns (margin, valid, index grids); margin > tol marks a violating tuple.
    """
    L = pair.shape[0]
    pre = list(prefix)
    if pre:
        pre_arr = np.asarray(pre)
        pre_pair = pair[np.ix_(pre_arr, pre_arr)]
        pre_min = pre_pair[np.triu_indices(len(pre), 1)].min() if len(pre) > 1 else np.inf
        link = pair[pre_arr].min(axis=0)
        pre_r = radius[pre_arr].max()
    else:
        pre_min, link, pre_r = np.inf, None, -np.inf

    if s == 2:
        I = np.arange(i0, i1)[:, None]
        J = np.arange(start, L)[None, :]
        valid = J > I
        m = pair[I, J]
        if kind == "de_groot":
            m = m - np.maximum(radius[I], radius[J])
        return m, valid, (I, J)

    I = np.arange(i0, i1)[:, None, None]
    J = np.arange(start, L)[None, :, None]
    K = np.arange(start, L)[None, None, :]
    valid = (J > I) & (K > J)
    m = np.minimum(np.minimum(pair[I, J], pair[I, K]), pair[J, K])
    if link is not None:
        m = np.minimum(m, np.minimum(np.minimum(link[I], link[J]), link[K]))
    m = np.minimum(m, pre_min)
    if kind == "de_groot":
        rmax = np.maximum(np.maximum(radius[I], radius[J]), radius[K])
        m = m - np.maximum(rmax, pre_r)
    return m, valid, (I, J, K)


def _scan(space: FiniteMetricSpace, kind: str, n: int, mode: str):
    """Brute-force scan.  mode: 'first' -> (witness|None, examined), 'count', 'hinge'."""
    dist = space.dist
    m = space.size
    s = n + 2
    tol = tol_check(space)
    examined = 0
    total = 0.0
    if m < s + 1:
        return (None, 0) if mode == "first" else 0
    for c in range(m):
        others, pair, radius = _center_tables(dist, c, kind)
        L = len(others)
        for prefix, start, i0, i1 in _iter_blocks(L, s):
            margin, valid, grids = _block_margin(pair, radius, kind, prefix, start, i0, i1, s)
            bad = valid & (margin > tol)
            examined += int(valid.sum())
            if mode == "first":
                if bad.any():
                    hit = np.argwhere(bad)[0]
                    # each grid is an arange along its own axis
                    pos = list(prefix) + [int(g.flat[0]) + int(hit[a]) for a, g in enumerate(grids)]
                    witness = ViolationWitness.build(space, kind, c, others[pos])
                    return witness, examined
            elif mode == "count":
                total += int(bad.sum())
            else:
                total += float(margin[bad].sum())
    if mode == "first":
        return None, examined
    return int(total) if mode == "count" else total


# --- fast paths ----------------------------------------------------------------

def _fast_np1(space: FiniteMetricSpace):
    dist = space.dist
    tol = tol_check(space)
    examined = 0
    for c in range(space.size):
        others, margin, _ = _center_tables(dist, c, "nagata")
        far = margin > tol
        np.fill_diagonal(far, False)
        eu, ev = np.nonzero(np.triu(far, 1))
        if len(eu) == 0:
            continue
        bits = np.packbits(far, axis=1)
        step = max(1, _BLOCK // max(1, bits.shape[1]))
        for e0 in range(0, len(eu), step):
            u, v = eu[e0:e0 + step], ev[e0:e0 + step]
            common = (bits[u] & bits[v]).any(axis=1)
            examined += len(u) * far.shape[0]
            if common.any():
                e = int(np.argmax(common))
                w = int(np.flatnonzero(far[u[e]] & far[v[e]])[0])
                pts = sorted(int(others[p]) for p in (u[e], v[e], w))
                return ViolationWitness.build(space, "nagata", c, pts), examined
    return None, examined


def _fast_gp1(space: FiniteMetricSpace):
    dist = space.dist
    tol = tol_check(space)
    examined = 0
    for c in range(space.size):
        others, pair, radius = _center_tables(dist, c, "de_groot")
        for w in np.argsort(radius, kind="stable"):
            thr = radius[w] + tol
            cand = (radius <= radius[w]) & (pair[w] > thr)
            cand[w] = False
            idx = np.flatnonzero(cand)
            if len(idx) < 2:
                continue
            sub = pair[np.ix_(idx, idx)] > thr
            examined += len(idx) * (len(idx) - 1) // 2
            if sub.any():
                p, q = np.argwhere(np.triu(sub, 1))[0]
                pts = sorted(int(others[t]) for t in (idx[p], idx[q], w))
                return ViolationWitness.build(space, "de_groot", c, pts), examined
    return None, examined


def _fast_n0(space: FiniteMetricSpace, kind: str):
    # all centers at once; GP[0] and NP[0] coincide as tuple conditions
    dist = space.dist
    m = space.size
    tol = tol_check(space)
    chunk = max(1, _BLOCK // (m * m))
    for c0 in range(0, m, chunk):
        C = np.arange(c0, min(c0 + chunk, m))[:, None, None]
        r = dist[C.ravel()]
        bad = dist[None, :, :] > np.maximum(r[:, :, None], r[:, None, :]) + tol
        idx = np.arange(m)
        bad &= (idx[None, :, None] < idx[None, None, :])
        bad &= (idx[None, :, None] != C) & (idx[None, None, :] != C)
        if bad.any():
            h = np.argwhere(bad)[0]
            return ViolationWitness.build(space, kind, int(C.ravel()[h[0]]), (h[1], h[2])), 0
    return None, m * (m - 1) * (m - 2) // 2


# --- public checks -------------------------------------------------------------

def _run(space: FiniteMetricSpace, query: PropertyQuery) -> PropertyReport:
    t0 = time.perf_counter()
    n, kind = query.n, query.kind
    degraded = False
    if space.size < n + 3:
        return PropertyReport(query, True, None, 0, time.perf_counter() - t0,
                              notes=["vacuous: fewer than n+3 points"])
    strategy = query.strategy
    if strategy == "fast" and n >= 2:
        strategy, degraded = "brute", True
    if strategy == "brute":
        witness, examined = _scan(space, kind, n, "first")
    elif n == 0:
        witness, examined = _fast_n0(space, kind)
    elif kind == "nagata":
        witness, examined = _fast_np1(space)
    else:
        witness, examined = _fast_gp1(space)
    return PropertyReport(query, witness is None, witness, examined,
                          time.perf_counter() - t0, degraded=degraded)


def _check(space: FiniteMetricSpace, kind: str, n: int, strategy: str) -> PropertyReport:
    query = PropertyQuery(kind, n, strategy)
    if strategy != "both":
        return _run(space, query)
    brute = _run(space, PropertyQuery(kind, n, "brute"))
    fast = _run(space, PropertyQuery(kind, n, "fast"))
    if brute.holds != fast.holds:
        raise OracleMismatchError(
            f"{kind}[{n}]: brute says holds={brute.holds}, fast says holds={fast.holds}")
    return PropertyReport(query, fast.holds, fast.witness or brute.witness,
                          brute.tuples_examined + fast.tuples_examined,
                          brute.elapsed + fast.elapsed, degraded=fast.degraded)


def check_de_groot(space: FiniteMetricSpace, n: int = 1, strategy: str = "fast") -> PropertyReport:
    if n < 0:
        raise ParameterError(f"n must be non-negative, got {n}")
    return _check(space, "de_groot", n, strategy)


def check_nagata(space: FiniteMetricSpace, n: int = 1, strategy: str = "fast",
                 cross_check: bool = False) -> PropertyReport:
    """NP[n] check.  With ``cross_check`` a holding result is confirmed against GP[n]."""
    if n < 0:
        raise ParameterError(f"n must be non-negative, got {n}")
    report = _check(space, "nagata", n, strategy)
    if cross_check and report.holds:
        gp = _check(space, "de_groot", n, strategy)
        if not gp.holds:
            raise OracleMismatchError(f"NP[{n}] holds but GP[{n}] fails: {gp.witness}")
        report.notes.append(f"cross-check: GP[{n}] holds")
    return report


def check_ultrametric(space: FiniteMetricSpace) -> PropertyReport:
    """Strong triangle inequality via the isosceles characterization.

    Every triangle must have its two largest sides equal (within tolerance);
    when the largest side strictly exceeds the second one, the opposite vertex
    is the violating center.
    """
    t0 = time.perf_counter()
    query = PropertyQuery("ultrametric", 0, "brute")
    d = space.dist
    m = space.size
    tol = tol_check(space)
    examined = 0
    for i in range(m - 2):
        J = np.arange(i + 1, m)[:, None]
        K = np.arange(i + 1, m)[None, :]
        valid = K > J
        a = np.broadcast_to(d[i, J], valid.shape)   # side i-j, opposite k
        b = np.broadcast_to(d[i, K], valid.shape)   # side i-k, opposite j
        c = d[J, K]                                  # side j-k, opposite i
        sides = np.stack([c, b, a])                  # indexed by opposite vertex: i, j, k
        order = np.sort(sides, axis=0)
        bad = valid & (order[2] - order[1] > tol)
        examined += int(valid.sum())
        if bad.any():
            jj, kk = np.argwhere(bad)[0]
            j, k = i + 1 + int(jj), i + 1 + int(kk)
            opposite = int(np.argmax(sides[:, jj, kk]))
            center = (i, j, k)[opposite]
            pair = tuple(p for p in (i, j, k) if p != center)
            witness = ViolationWitness.build(space, "ultrametric", center, pair)
            return PropertyReport(query, False, witness, examined, time.perf_counter() - t0)
    return PropertyReport(query, True, None, examined, time.perf_counter() - t0)


def check(space: FiniteMetricSpace, kind: str, n: int = 1, strategy: str = "fast") -> PropertyReport:
    kind = normalize_kind(kind)
    if kind == "ultrametric":
        return check_ultrametric(space)
    if kind == "de_groot":
        return check_de_groot(space, n, strategy)
    return check_nagata(space, n, strategy)


def count_violations(space: FiniteMetricSpace, kind: str, n: int = 1) -> int:
    """Number of violating (center, unordered tuple) pairs; 0 iff the property holds."""
    kind = normalize_kind(kind)
    if n < 0:
        raise ParameterError(f"n must be non-negative, got {n}")
    if kind == "ultrametric":
        kind, n = "nagata", 0
    return _scan(space, kind, n, "count")


def violation_margin(space: FiniteMetricSpace, kind: str, n: int = 1) -> float:
    """Sum over violating tuples of the amount by which they violate."""
    kind = normalize_kind(kind)
    if kind == "ultrametric":
        kind, n = "nagata", 0
    return _scan(space, kind, n, "hinge")
