"""scikit-learn style wrappers around the functional API.

Inputs are distance matrices (array-likes) or FiniteMetricSpace instances.
Hyperparameters live in ``__init__`` so ``get_params``/``set_params``/``clone``
work as usual; fitted state ends in an underscore.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import TOL_METRIC, FiniteMetricSpace, shortest_path_completion, validate_metric
from .errors import ShapeError, ValidationError
from .properties import check, count_violations, normalize_kind, violation_margin
from .search import AnnealConfig, ExtensionProblem, anneal_extension


def check_distance_matrix(X, *, allow_nan: bool = False, metric: bool = True,
                          tol_metric: float = TOL_METRIC) -> np.ndarray:
    """Return ``X`` as a float square matrix, raising on bad shape or metric defects.

    With ``allow_nan`` unknown entries (NaN) are allowed and the metric axioms
    are not checked.
    """
    if isinstance(X, FiniteMetricSpace):
        return X.dist
    arr = np.ma.filled(np.ma.asarray(X, dtype=float), np.nan) if np.ma.isMaskedArray(X) \
        else np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ShapeError("empty matrix")
    if allow_nan:
        if np.isinf(arr).any():
            raise ValidationError("matrix has infinite entries", [])
        return arr
    if not np.isfinite(arr).all():
        raise ValidationError("matrix has non-finite entries", [])
    if metric:
        defects = validate_metric(arr, tol_metric)
        if defects:
            raise ValidationError("not a metric", defects)
    return arr


def _as_space(X) -> FiniteMetricSpace:
    if isinstance(X, FiniteMetricSpace):
        return X
    return FiniteMetricSpace(check_distance_matrix(X), check=False)


class PropertyChecker(BaseEstimator):
    """Decide ultrametric / GP[n] / NP[n] for the fitted space.

    After ``fit``: ``holds_``, ``witness_``, ``report_``.  ``score`` returns
    minus the hinge violation margin, so larger is better and 0 means the
    property holds.
    """

    def __init__(self, kind: str = "nagata", n: int = 1, strategy: str = "fast"):
        self.kind = kind
        self.n = n
        self.strategy = strategy

    def fit(self, X, y=None):
        space = _as_space(X)
        self.report_ = check(space, self.kind, self.n, self.strategy)
        self.holds_ = self.report_.holds
        self.witness_ = self.report_.witness
        self.n_points_ = space.size
        return self

    def count_violations(self, X) -> int:
        return count_violations(_as_space(X), normalize_kind(self.kind), self.n)

    def score(self, X, y=None) -> float:
        return -violation_margin(_as_space(X), normalize_kind(self.kind), self.n)


class MetricCompleter(TransformerMixin, BaseEstimator):
    """Fill unknown (NaN) entries by shortest paths through the known ones."""

    def __init__(self, allow_pseudometric: bool = False):
        self.allow_pseudometric = allow_pseudometric

    def fit(self, X, y=None):
        arr = check_distance_matrix(X, allow_nan=True)
        self.n_points_ = arr.shape[0]
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "n_points_")
        arr = check_distance_matrix(X, allow_nan=True)
        if arr.shape[0] != self.n_points_:
            raise ShapeError(f"fitted on {self.n_points_} points, got {arr.shape[0]}")
        return shortest_path_completion(arr, self.allow_pseudometric).dist


class ExtensionAnnealer(BaseEstimator):
    """Anneal an extension of the fitted base metric to ``total_size`` points.

    After ``fit``: ``result_`` (the SearchResult), ``best_`` (distance matrix)
    and ``violations_``.
    """

    def __init__(self, total_size: int = 8, kind: str = "de_groot", n: int = 1,
                 distortion_bound: float | None = None, seed: int = 0, steps: int = 10_000,
                 move_size: float = 0.1):
        self.total_size = total_size
        self.kind = kind
        self.n = n
        self.distortion_bound = distortion_bound
        self.seed = seed
        self.steps = steps
        self.move_size = move_size

    def fit(self, X, y=None, initial=None):
        base = _as_space(X)
        problem = ExtensionProblem(base, self.total_size, (self.kind, self.n),
                                   distortion_bound=self.distortion_bound, initial=initial)
        config = AnnealConfig(seed=self.seed, steps=self.steps, move_size=self.move_size)
        self.result_ = anneal_extension(problem, config)
        self.best_ = self.result_.best.dist
        self.violations_ = self.result_.violations
        return self
