import math

import numpy as np
import pytest

from spheric_radial.models.errors import DimensionMismatch, NotPositiveDefinite
from spheric_radial.utils.gaussian_model import build_model, standardize_system
from spheric_radial.utils.problem.expression import parse_expression
from spheric_radial.utils.problem.system import ExpressionComponent, InequalitySystem


def _system(src: str, n: int = 1, m: int = 2) -> InequalitySystem:
    return InequalitySystem(n, m, [ExpressionComponent(parse_expression(src, n, m), n, m)])


def test_identity_covariance_is_its_own_standardization():
    model = build_model([0.0, 0.0], np.eye(2))
    assert np.array_equal(model.scale, [1.0, 1.0])
    assert np.array_equal(model.correlation, np.eye(2))
    assert np.array_equal(model.cholesky, np.eye(2))
    assert model.cholesky_norm == pytest.approx(1.0)
    assert model.condition_number == pytest.approx(1.0)


def test_diagonal_covariance_scales_to_unit_variance():
    model = build_model([1.0, -2.0], [[4.0, 0.0], [0.0, 9.0]])
    assert np.allclose(model.scale, [0.5, 1.0 / 3.0])
    assert np.allclose(model.inverse_scale, [2.0, 3.0])
    assert np.array_equal(model.cholesky, np.eye(2))
    assert np.allclose(model.standardize([3.0, 1.0]), [1.0, 1.0])
    assert np.allclose(model.destandardize([1.0, 1.0]), [3.0, 1.0])


def test_correlated_cholesky_factor():
    model = build_model([0.0, 0.0], [[1.0, 0.5], [0.5, 1.0]])
    expected = np.array([[1.0, 0.0], [0.5, math.sqrt(0.75)]])
    assert np.allclose(model.cholesky, expected, atol=1e-15)
    assert np.max(np.abs(model.cholesky @ model.cholesky.T - model.correlation)) <= 1e-12
    assert model.cholesky_min_singular ** 2 == pytest.approx(0.5)


def test_model_arrays_are_read_only():
    model = build_model([0.0], [[2.0]])
    with pytest.raises(ValueError):
        model.cholesky[0, 0] = 3.0
    with pytest.raises(ValueError):
        model.mean[0] = 1.0


@pytest.mark.parametrize("covariance", [
    [[1.0, 2.0], [2.0, 1.0]],
    [[1.0, 0.0], [0.0, 0.0]],
    [[1.0, 1.0], [1.0, 1.0]],
    [[-1.0, 0.0], [0.0, 1.0]],
    [[1.0, 0.3], [0.2, 1.0]],
])
def test_invalid_covariances_are_rejected(covariance):
    with pytest.raises(NotPositiveDefinite):
        build_model([0.0, 0.0], covariance)


def test_shape_mismatch_is_rejected():
    with pytest.raises(DimensionMismatch):
        build_model([0.0, 0.0, 0.0], np.eye(2))
    with pytest.raises(DimensionMismatch):
        build_model([], np.zeros((0, 0)))


def test_standardized_system_shifts_and_scales_z():
    model = build_model([3.0, 0.0], [[4.0, 0.0], [0.0, 1.0]])
    standardized = standardize_system(model, _system("z1 - x1"))
    for x, z1, z2 in [(0.0, 0.0, 0.0), (1.0, 0.5, -2.0), (-2.0, -1.5, 3.0)]:
        assert standardized.value([x], [z1, z2]) == pytest.approx(2.0 * z1 + 3.0 - x, abs=1e-14)
    assert np.allclose(standardized.grad_z_component(0, [1.0], [0.3, 0.2]), [2.0, 0.0])
    assert np.allclose(standardized.grad_x_component(0, [1.0], [0.3, 0.2]), [-1.0])


def test_standardization_preserves_the_event(rng):
    model = build_model([1.0, -1.0], [[2.0, 0.6], [0.6, 0.5]])
    system = _system("z1 + 2*z2 - x1^2 + x2", n=2)
    standardized = standardize_system(model, system)
    x = [1.5, -0.5]
    draws = model.mean + rng.standard_normal((500, 2)) @ np.linalg.cholesky(model.covariance).T
    for xi in draws:
        assert (system.value(x, xi) <= 0.0) == (standardized.value(x, model.standardize(xi)) <= 0.0)


def test_standard_model_leaves_values_unchanged():
    model = build_model([0.0, 0.0], [[1.0, 0.4], [0.4, 1.0]])
    system = _system("z1^2 + z2 - x1")
    standardized = standardize_system(model, system)
    for z in ([0.1, 0.2], [-1.0, 2.0], [3.0, -0.5]):
        assert standardized.value([0.7], z) == system.value([0.7], z)


def test_standardize_system_checks_dimensions():
    with pytest.raises(DimensionMismatch):
        standardize_system(build_model([0.0, 0.0, 0.0], np.eye(3)), _system("z1 - x1"))
