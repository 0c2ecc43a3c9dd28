import json

import numpy as np
import pytest

from metric_props.constructions import (
    euclidean_interval, i_space, random_metric, random_ultrametric, triode_bar_indices, triode_rho,
)
from metric_props.core import FiniteMetricSpace, restrict, scale_metric
from metric_props.embeddings import (
    PointMap, distortion, distortion_summary, find_isometric_embedding, inverse_lipschitz_constant,
    is_similarity, lipschitz_constant, load_map, map_sup_distance, save_map,
)
from metric_props.errors import ParameterError


def _bar_map(m):
    return PointMap(euclidean_interval(-1, 1, 2 * m + 1), triode_rho(m), triode_bar_indices(m))


def test_identity_constants():
    X = random_metric(6, 0)
    f = PointMap.identity(X, X)
    assert lipschitz_constant(f) == 1.0
    assert distortion(f) == 1.0
    assert is_similarity(f) == (True, 1.0)


def test_scaled_grid_lipschitz():
    C = 4.0
    f = PointMap.identity(euclidean_interval(0, C, 9), euclidean_interval(0, 1, 9))
    assert lipschitz_constant(f) == pytest.approx(1 / C)
    assert distortion(f) == pytest.approx(1.0)
    X = random_metric(5, 1)
    ok, ratio = is_similarity(PointMap.identity(X, scale_metric(X, 3.0)))
    assert ok and ratio == pytest.approx(3.0)


@pytest.mark.parametrize("m", [2, 3, 5, 8, 21])
def test_bar_into_rho_distortion_exactly_two(m):
    f = _bar_map(m)
    assert lipschitz_constant(f) == 1.0
    assert inverse_lipschitz_constant(f) == 2.0
    assert distortion(f) == 2.0
    s = distortion_summary(f)
    i, j = s["argmin_pair"]
    xs = f.domain.coords[:, 0]
    assert xs[i] == -xs[j]
    assert not is_similarity(f)[0]


def test_tiny_domain_flags():
    one = FiniteMetricSpace([[0.0]])
    f = PointMap(one, random_metric(3, 0), (2,))
    assert lipschitz_constant(f) is None
    assert distortion(f) == 1.0


def test_pointmap_validation():
    X = random_metric(3, 0)
    with pytest.raises(ParameterError):
        PointMap(X, X, (0, 0, 1))
    with pytest.raises(ParameterError):
        PointMap(X, X, (0, 1))
    with pytest.raises(ParameterError):
        PointMap(X, X, (0, 1, 5))


def test_compose():
    X = euclidean_interval(0, 1, 5)
    Y = euclidean_interval(0, 1, 9)
    f = PointMap(X, Y, (0, 2, 4, 6, 8))
    g = PointMap.identity(Y, Y, list(range(9)))
    assert g.compose(f).image == f.image


def test_sup_distance():
    Y = euclidean_interval(0, 1, 11)
    X = euclidean_interval(0, 1, 5)
    f = PointMap(X, Y, (0, 2, 4, 6, 8))
    g = PointMap(X, Y, (1, 3, 5, 7, 9))
    assert map_sup_distance(f, f) == 0.0
    assert map_sup_distance(f, g) == pytest.approx(0.1)


def test_isometric_embedding_found_for_restriction():
    rng = np.random.default_rng(0)
    for seed in range(5):
        X = random_metric(12, seed)
        S = sorted(rng.choice(12, size=5, replace=False))
        A = restrict(X, S)
        f = find_isometric_embedding(A, X)
        assert f is not None
        np.testing.assert_allclose(f.pulled_back(), A.dist, atol=1e-12)


def test_isometric_embedding_not_found_in_ultrametric():
    for seed in range(3):
        assert find_isometric_embedding(euclidean_interval(0, 1, 5), random_ultrametric(30, seed)) is None


def test_isometric_embedding_i_space():
    f = find_isometric_embedding(i_space(0.1, 5), i_space(0.1, 9))
    assert f is not None and distortion(f) == pytest.approx(1.0)


def test_map_file_round_trip(tmp_path):
    f = _bar_map(3)
    path = tmp_path / "map.json"
    save_map(f, path)
    assert json.loads(path.read_text())["image"] == list(f.image)
    assert load_map(path, f.domain, f.codomain).image == f.image
