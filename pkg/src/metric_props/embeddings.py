"""Injective maps between finite metric spaces: Lipschitz constants, distortion, isometry search."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import FiniteMetricSpace
from .errors import ParameterError


@dataclass(frozen=True, eq=False)
class PointMap:
    """Map sending domain point ``i`` to codomain point ``image[i]``."""

    domain: FiniteMetricSpace
    codomain: FiniteMetricSpace
    image: tuple[int, ...]

    def __post_init__(self):
        image = tuple(int(i) for i in self.image)
        if len(image) != self.domain.size:
            raise ParameterError(f"image has {len(image)} entries for a domain of size {self.domain.size}")
        if len(set(image)) != len(image):
            raise ParameterError("map is not injective")
        if any(not 0 <= i < self.codomain.size for i in image):
            raise ParameterError("image index out of codomain range")
        object.__setattr__(self, "image", image)

    @classmethod
    def identity(cls, domain: FiniteMetricSpace, codomain: FiniteMetricSpace,
                 indices: Sequence[int] | None = None) -> "PointMap":
        return cls(domain, codomain, tuple(range(domain.size)) if indices is None else tuple(indices))

    def pulled_back(self) -> np.ndarray:
        """Codomain distances between images, indexed by domain points."""
        sel = np.asarray(self.image)
        return self.codomain.dist[np.ix_(sel, sel)]

    def compose(self, inner: "PointMap") -> "PointMap":
        """``self ∘ inner``."""
        return PointMap(inner.domain, self.codomain, tuple(self.image[i] for i in inner.image))

    def to_dict(self, domain_ref: str = "domain", codomain_ref: str = "codomain") -> dict:
        return {"domain": domain_ref, "codomain": codomain_ref, "image": list(self.image)}


def _ratios(f: PointMap):
    iu, ju = np.triu_indices(f.domain.size, 1)
    ratios = f.pulled_back()[iu, ju] / f.domain.dist[iu, ju]
    return ratios, iu, ju


def lipschitz_constant(f: PointMap) -> float | None:
    """Largest distance ratio over pairs; ``None`` when the domain has at most one point."""
    if f.domain.size < 2:
        return None
    return float(_ratios(f)[0].max())


def inverse_lipschitz_constant(f: PointMap) -> float | None:
    if f.domain.size < 2:
        return None
    return float(1.0 / _ratios(f)[0].min())


def distortion(f: PointMap) -> float:
    """Product of the forward and inverse Lipschitz constants (1 for tiny domains)."""
    if f.domain.size < 2:
        return 1.0
    ratios = _ratios(f)[0]
    return float(ratios.max() / ratios.min())


def distortion_summary(f: PointMap, tol: float = 1e-9) -> dict:
    """Lipschitz constants, distortion, similarity flag and the extremal pairs."""
    if f.domain.size < 2:
        return {"lipschitz": None, "inverse_lipschitz": None, "distortion": 1.0,
                "similarity": True, "ratio": None, "argmax_pair": None, "argmin_pair": None}
    ratios, iu, ju = _ratios(f)
    hi, lo = int(np.argmax(ratios)), int(np.argmin(ratios))
    similar, ratio = is_similarity(f, tol)
    return {
        "lipschitz": float(ratios[hi]),
        "inverse_lipschitz": float(1.0 / ratios[lo]),
        "distortion": float(ratios[hi] / ratios[lo]),
        "similarity": similar,
        "ratio": ratio,
        "argmax_pair": [int(iu[hi]), int(ju[hi])],
        "argmin_pair": [int(iu[lo]), int(ju[lo])],
    }


def is_similarity(f: PointMap, tol: float = 1e-9) -> tuple[bool, float | None]:
    """Whether all distance ratios agree to relative ``tol``; returns the common ratio."""
    if f.domain.size < 2:
        return True, None
    ratios = _ratios(f)[0]
    hi, lo = float(ratios.max()), float(ratios.min())
    return (hi - lo) <= tol * hi, hi


def map_sup_distance(f: PointMap, g: PointMap) -> float:
    """``max_t d(f(t), g(t))`` for maps sharing domain and codomain."""
    if f.domain.size != g.domain.size or not np.array_equal(f.domain.dist, g.domain.dist):
        raise ParameterError("maps have different domains")
    if f.codomain.size != g.codomain.size or not np.array_equal(f.codomain.dist, g.codomain.dist):
        raise ParameterError("maps have different codomains")
    return float(f.codomain.dist[np.asarray(f.image), np.asarray(g.image)].max())


def find_isometric_embedding(A: FiniteMetricSpace, X: FiniteMetricSpace,
                             tol: float | None = None) -> PointMap | None:
    """Exhaustive backtracking search for a distance-preserving injection ``A -> X``.

    Domain points are placed most-constrained first (largest distance sum);
    each placement filters the candidate sets of all unplaced points, and the
    search backtracks as soon as one becomes empty.  Returns the first map in
    lexicographic order of the search tree, or ``None``.
    """
    if A.size > X.size:
        return None
    if tol is None:
        tol = 1e-9 * max(X.diameter, A.diameter)
    order = np.argsort(-A.dist.sum(axis=1), kind="stable")
    m = A.size
    cand = np.ones((m, X.size), dtype=bool)
    image = np.full(m, -1)

    def place(depth: int, cand: np.ndarray) -> bool:
        if depth == m:
            return True
        u = order[depth]
        for x in np.flatnonzero(cand[u]):
            image[u] = x
            nxt = cand & (np.abs(X.dist[x][None, :] - A.dist[u][:, None]) <= tol)
            nxt[:, x] = False
            rest = order[depth + 1:]
            if rest.size and not nxt[rest].any(axis=1).all():
                continue
            if place(depth + 1, nxt):
                return True
        image[u] = -1
        return False

    if not place(0, cand):
        return None
    return PointMap(A, X, tuple(int(i) for i in image))


def load_map(path, domain: FiniteMetricSpace, codomain: FiniteMetricSpace) -> PointMap:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if isinstance(obj, list):
        image = obj
    else:
        image = obj.get("image")
    if image is None:
        raise ParameterError('map file needs an "image" list')
    return PointMap(domain, codomain, tuple(image))


def save_map(f: PointMap, path, domain_ref: str = "domain", codomain_ref: str = "codomain") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(f.to_dict(domain_ref, codomain_ref), fh, sort_keys=True)
        fh.write("\n")
