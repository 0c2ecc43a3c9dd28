"""Finite metric spaces and the de Groot / Nagata dimension-type properties."""

from .core import (
    FiniteMetricSpace, MetricDefect, floyd_warshall, load_space, restrict, save_space,
    scale_metric, shortest_path_completion, validate_metric,
)
from .errors import (
    CapacityError, CompletionError, InfeasibleError, MetricPropsError, OracleMismatchError,
    ParameterError, ParseError, PreconditionError, ShapeError, ValidationError,
)
from .properties import (
    PropertyQuery, PropertyReport, ViolationWitness, check, check_de_groot, check_nagata,
    check_ultrametric, count_violations, violation_margin,
)
from .constructions import (
    equilateral_with_centroid, euclidean_interval, i_space, lm_sample, max_product,
    random_metric, random_ultrametric, triode_path, triode_rho, two_point_space,
    ultrametric_extend,
)
from .embeddings import (
    PointMap, distortion, distortion_summary, find_isometric_embedding, inverse_lipschitz_constant,
    is_similarity, lipschitz_constant, map_sup_distance,
)
from .arcs import (
    ArcSample, check_obtuse, openness_probe, separation_check, slice_analysis, slice_batch,
)
from .search import (
    AnnealConfig, ExtensionProblem, SearchResult, anneal_extension, separation_experiment,
    triode_extension_problem, violation_objective,
)

__version__ = "0.1.0"
