"""Finite metric spaces: validation, transformations, completion and file I/O."""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    CapacityError,
    CompletionError,
    ParameterError,
    ParseError,
    ShapeError,
    ValidationError,
)

TOL_METRIC = 1e-9
DEFAULT_MAX_SIZE = 4096

DEFECT_KINDS = ("asymmetry", "negative", "nonzero-diagonal", "zero-offdiagonal", "triangle")


def max_size() -> int:
    """Size cap for dense spaces; ``METRIC_PROPS_MAX_SIZE`` overrides the default."""
    raw = os.environ.get("METRIC_PROPS_MAX_SIZE")
    if raw is None:
        return DEFAULT_MAX_SIZE
    try:
        value = int(raw)
    except ValueError:
        raise ParameterError(f"METRIC_PROPS_MAX_SIZE must be an integer, got {raw!r}") from None
    if value < 1:
        raise ParameterError("METRIC_PROPS_MAX_SIZE must be positive")
    return value


@dataclass(frozen=True)
class MetricDefect:
    kind: str
    indices: tuple[int, ...]
    magnitude: float

    def to_dict(self) -> dict:
        return {"kind": self.kind, "indices": list(self.indices), "magnitude": self.magnitude}


def _effective_tol(arr: np.ndarray, tol: float) -> float:
    # tol is stated for unit-scale spaces
    scale = float(np.max(np.abs(arr))) if arr.size else 0.0
    return tol * max(1.0, scale)


def _as_square(raw) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"distance matrix must be square, got shape {arr.shape}")
    return arr


def _triangle_excess(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For each pair (i, j): max over k of d(i,j) - d(i,k) - d(k,j), and the argmax k."""
    m = arr.shape[0]
    best = np.full((m, m), -np.inf)
    arg = np.full((m, m), -1, dtype=np.int64)
    for k in range(m):
        excess = arr - arr[:, k, None] - arr[None, k, :]
        excess[k, :] = -np.inf
        excess[:, k] = -np.inf
        better = excess > best
        best = np.where(better, excess, best)
        arg = np.where(better, k, arg)
    return best, arg


def validate_metric(raw, tol_metric: float = TOL_METRIC) -> list[MetricDefect]:
    """Check the metric axioms on a square matrix.

    Returns one :class:`MetricDefect` per defect class present (the worst
    instance, ties broken by the lexicographically smallest index tuple), or an
    empty list when ``raw`` is a metric within ``tol_metric`` (scaled by the
    largest absolute entry when that exceeds 1).
    """
    arr = _as_square(raw)
    if not np.all(np.isfinite(arr)):
        raise ParameterError("distance matrix contains non-finite entries")
    m = arr.shape[0]
    tol = _effective_tol(arr, tol_metric)
    defects: list[MetricDefect] = []
    iu, ju = np.triu_indices(m, k=1)

    asym = np.abs(arr[iu, ju] - arr[ju, iu])
    if asym.size and asym.max() > tol:
        p = int(np.argmax(asym))
        defects.append(MetricDefect("asymmetry", (int(iu[p]), int(ju[p])), float(asym[p])))

    offdiag = ~np.eye(m, dtype=bool)
    if m > 1 and arr[offdiag].min() < -tol:
        # row-major argmin gives the smallest index pair among ties
        masked = np.where(offdiag, arr, np.inf)
        i, j = np.unravel_index(int(np.argmin(masked)), masked.shape)
        defects.append(MetricDefect("negative", (int(i), int(j)), float(-arr[i, j])))

    diag = np.abs(np.diag(arr))
    if diag.size and diag.max() > tol:
        i = int(np.argmax(diag))
        defects.append(MetricDefect("nonzero-diagonal", (i, i), float(diag[i])))

    zero = np.abs(arr[iu, ju]) <= tol
    if zero.any():
        p = int(np.argmax(zero))
        # a missing positive distance has no intrinsic size; report the matrix scale
        scale = max(1.0, float(np.max(np.abs(arr))))
        defects.append(MetricDefect("zero-offdiagonal", (int(iu[p]), int(ju[p])), scale))

    if m >= 3:
        excess, arg = _triangle_excess(arr)
        upper = np.where(np.triu(np.ones((m, m), dtype=bool), k=1), excess, -np.inf)
        worst = upper.max()
        if worst > tol:
            i, j = np.unravel_index(int(np.argmax(upper)), upper.shape)
            defects.append(MetricDefect("triangle", (int(i), int(j), int(arg[i, j])), float(worst)))
    return defects


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Dense symmetric distance matrix with optional point labels and planar coordinates.

    The matrix is copied and made read-only; construction validates it unless
    ``check=False`` (used internally for outputs of validity-preserving
    operations).
    """

    dist: np.ndarray
    labels: tuple[str, ...] | None = None
    coords: np.ndarray | None = None
    allow_pseudometric: bool = field(default=False, repr=False)
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        arr = np.array(_as_square(self.dist), dtype=float, copy=True)
        if arr.shape[0] < 1:
            raise ShapeError("a metric space needs at least one point")
        if arr.shape[0] > max_size():
            raise CapacityError(f"space of size {arr.shape[0]} exceeds the size cap {max_size()}")
        arr.setflags(write=False)
        object.__setattr__(self, "dist", arr)
        m = arr.shape[0]
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != m:
                raise ShapeError(f"expected {m} labels, got {len(labels)}")
            object.__setattr__(self, "labels", labels)
        if self.coords is not None:
            coords = np.array(self.coords, dtype=float, copy=True)
            if coords.shape != (m, 2):
                raise ShapeError(f"coords must have shape ({m}, 2), got {coords.shape}")
            coords.setflags(write=False)
            object.__setattr__(self, "coords", coords)
        if self.check:
            defects = validate_metric(arr)
            if self.allow_pseudometric:
                defects = [d for d in defects if d.kind != "zero-offdiagonal"]
            if defects:
                kinds = ", ".join(d.kind for d in defects)
                raise ValidationError(f"not a metric: {kinds}", defects)

    @property
    def size(self) -> int:
        return self.dist.shape[0]

    def __len__(self) -> int:
        return self.size

    @property
    def diameter(self) -> float:
        return float(self.dist.max())

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteMetricSpace):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.dist, other.dist)

    __hash__ = None


def scale_metric(space: FiniteMetricSpace, c: float) -> FiniteMetricSpace:
    if not (np.isfinite(c) and c > 0):
        raise ParameterError(f"scale factor must be positive, got {c}")
    coords = None if space.coords is None else space.coords * c
    return FiniteMetricSpace(space.dist * c, space.labels, coords,
                             allow_pseudometric=space.allow_pseudometric, check=False)


def restrict(space: FiniteMetricSpace, indices: Sequence[int]) -> FiniteMetricSpace:
    idx = [int(i) for i in indices]
    if not idx:
        raise ParameterError("cannot restrict to an empty index set")
    if len(set(idx)) != len(idx):
        raise ParameterError("restriction indices must be distinct")
    bad = [i for i in idx if not 0 <= i < space.size]
    if bad:
        raise ParameterError(f"indices out of range: {bad}")
    sel = np.asarray(idx)
    labels = None if space.labels is None else [space.labels[i] for i in idx]
    coords = None if space.coords is None else space.coords[sel]
    return FiniteMetricSpace(space.dist[np.ix_(sel, sel)], labels, coords,
                             allow_pseudometric=space.allow_pseudometric, check=False)


def floyd_warshall(weights: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths on a dense matrix with ``inf`` for missing edges.

    Entries are only replaced by strictly shorter paths (beyond a few ulps of
    the matrix scale), so a matrix that already is a metric comes back
    unchanged and repeated application is idempotent.
    """
    dist = np.array(weights, dtype=float, copy=True)
    finite = dist[np.isfinite(dist)]
    scale = float(finite.max()) if finite.size else 0.0
    slack = 8 * np.finfo(float).eps * max(scale, 1.0)
    for k in range(dist.shape[0]):
        via = dist[:, k, None] + dist[None, k, :]
        np.copyto(dist, via, where=via < dist - slack)
    return dist


def shortest_path_completion(partial, allow_pseudometric: bool = False,
                             labels=None, coords=None) -> FiniteMetricSpace:
    """Complete a partially known distance matrix by shortest paths.

    Unknown entries are ``nan`` (``None`` in nested lists converts to ``nan``),
    or masked entries of a :class:`numpy.ma.MaskedArray`.  A known entry may be
    given on one side of the diagonal only.
    """
    if isinstance(partial, np.ma.MaskedArray):
        arr = np.ma.filled(partial.astype(float), np.nan)
    else:
        arr = np.array(partial, dtype=float)
    arr = _as_square(arr)
    known = ~np.isnan(arr)
    both = known & known.T
    if both.any() and not np.allclose(arr[both], arr.T[both], rtol=0, atol=_effective_tol(np.nan_to_num(arr), TOL_METRIC)):
        raise ParameterError("known entries are not symmetric")
    arr = np.where(known, arr, arr.T)
    known = known | known.T
    np.fill_diagonal(arr, 0.0)
    np.fill_diagonal(known, True)
    if np.any(arr[known] < 0):
        raise ParameterError("known entries must be non-negative")
    if np.any(np.isinf(arr[known])):
        raise ParameterError("known entries must be finite")

    adjacency = known.copy()
    np.fill_diagonal(adjacency, False)
    n_comp, comp_labels = connected_components(csr_matrix(adjacency), directed=False)
    if n_comp > 1:
        components = [np.flatnonzero(comp_labels == c).tolist() for c in range(n_comp)]
        raise CompletionError(f"known-entry graph has {n_comp} components: {components}", components)

    weights = np.where(known, arr, np.inf)
    return FiniteMetricSpace(floyd_warshall(weights), labels, coords,
                             allow_pseudometric=allow_pseudometric)


# --- serialization ---------------------------------------------------------

def _fmt17(x: float) -> str:
    return format(float(x), ".17g")


def dumps_json(space: FiniteMetricSpace) -> str:
    """Canonical JSON text: sorted keys, reals printed with 17 significant digits."""
    parts = []
    if space.coords is not None:
        rows = ", ".join("[" + ", ".join(_fmt17(v) for v in row) + "]" for row in space.coords)
        parts.append(f'"coords": [{rows}]')
    rows = ",\n    ".join("[" + ", ".join(_fmt17(v) for v in row) + "]" for row in space.dist)
    parts.append(f'"dist": [\n    {rows}\n  ]')
    parts.append(f'"labels": {json.dumps(list(space.labels)) if space.labels is not None else "null"}')
    parts.append(f'"size": {space.size}')
    return "{\n  " + ",\n  ".join(parts) + "\n}\n"


def loads_json(text: str) -> FiniteMetricSpace:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, field=exc.colno) from None
    if not isinstance(obj, dict) or "dist" not in obj:
        raise ParseError('expected an object with a "dist" matrix')
    dist = obj["dist"]
    if not isinstance(dist, list) or not all(isinstance(r, list) for r in dist):
        raise ParseError('"dist" must be a list of rows')
    m = len(dist)
    for i, row in enumerate(dist):
        if len(row) != m:
            raise ParseError(f"row {i} of dist has {len(row)} entries, expected {m}", line=None, field=i)
        for j, v in enumerate(row):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ParseError(f"dist[{i}][{j}] is not a number: {v!r}", field=j)
    if "size" in obj and obj["size"] != m:
        raise ParseError(f'"size" is {obj["size"]} but dist has {m} rows')
    arr = np.array(dist, dtype=float)
    defects = validate_metric(arr)
    if defects:
        raise ValidationError("file holds an invalid metric", defects)
    return FiniteMetricSpace(arr, obj.get("labels"), obj.get("coords"), check=False)


def dumps_csv(space: FiniteMetricSpace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if space.labels is not None:
        writer.writerow(space.labels)
    for row in space.dist:
        writer.writerow([f"{v:.12f}" for v in row])
    return buf.getvalue()


def loads_csv(text: str) -> FiniteMetricSpace:
    rows = [r for r in csv.reader(io.StringIO(text))]
    # keep original line numbers while skipping blank lines
    numbered = [(n + 1, r) for n, r in enumerate(rows) if any(c.strip() for c in r)]
    if not numbered:
        raise ParseError("empty CSV file", line=1)
    labels = None
    first_line, first = numbered[0]
    try:
        [float(c) for c in first]
    except ValueError:
        labels = [c.strip() for c in first]
        numbered = numbered[1:]
    m = len(numbered)
    if labels is not None and len(labels) != m:
        raise ParseError(f"header has {len(labels)} labels but there are {m} rows", line=first_line)
    data = np.empty((m, m))
    for r, (line_no, row) in enumerate(numbered):
        if len(row) != m:
            raise ParseError(f"expected {m} fields, got {len(row)}", line=line_no)
        for c, cell in enumerate(row):
            try:
                data[r, c] = float(cell)
            except ValueError:
                raise ParseError(f"not a number: {cell!r}", line=line_no, field=c + 1) from None
    if m == 0:
        raise ParseError("no data rows", line=first_line)
    defects = validate_metric(data)
    if defects:
        raise ValidationError("file holds an invalid metric", defects)
    return FiniteMetricSpace(data, labels, check=False)


def _format_for(path: Path, fmt: str | None) -> str:
    fmt = fmt or path.suffix.lstrip(".").lower()
    if fmt not in ("json", "csv"):
        raise ParameterError(f"unknown space file format {fmt!r} (use .json or .csv)")
    return fmt


def save_space(space: FiniteMetricSpace, path, fmt: str | None = None) -> None:
    path = Path(path)
    text = dumps_json(space) if _format_for(path, fmt) == "json" else dumps_csv(space)
    path.write_text(text, encoding="utf-8")


def load_space(path, fmt: str | None = None) -> FiniteMetricSpace:
    path = Path(path)
    kind = _format_for(path, fmt)
    text = path.read_text(encoding="utf-8")
    return loads_json(text) if kind == "json" else loads_csv(text)
