from dataclasses import dataclass

import numpy as np

from ..models.errors import DimensionMismatch, NotPositiveDefinite
from . import logger_setup
from .problem.system import InequalitySystem, StandardizedComponent
from .settings import settings

log = logger_setup.Logger(__name__)

# Cholesky pivots below this fraction of the largest diagonal entry are rejected.
PIVOT_TOLERANCE = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GaussianModel:
    """Law N(μ, Σ) of ξ together with its standardization ξ̃ = D(ξ − μ) ~ N(0, R).

    `scale` holds the diagonal of D, `cholesky` the lower factor L with L Lᵀ = R.
    """

    mean: np.ndarray
    covariance: np.ndarray
    correlation: np.ndarray
    scale: np.ndarray
    cholesky: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def inverse_scale(self) -> np.ndarray:
        return 1.0 / self.scale

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.correlation))

    @property
    def cholesky_norm(self) -> float:
        """Spectral norm ‖L‖."""
        return float(np.linalg.norm(self.cholesky, 2))

    @property
    def cholesky_min_singular(self) -> float:
        return float(np.linalg.svd(self.cholesky, compute_uv=False).min())

    def standardize(self, xi: np.ndarray) -> np.ndarray:
        return self.scale * (np.asarray(xi, dtype=float) - self.mean)

    def destandardize(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) / self.scale + self.mean


def build_model(mean, covariance) -> GaussianModel:
    mean = np.asarray(mean, dtype=float).reshape(-1)
    covariance = np.asarray(covariance, dtype=float)
    m = mean.size
    if m < 1:
        raise DimensionMismatch("the Gaussian model needs dimension >= 1")
    if covariance.shape != (m, m):
        raise DimensionMismatch(f"covariance shape {covariance.shape} does not match mean length {m}")
    if not np.allclose(covariance, covariance.T, rtol=0.0, atol=1e-12 * np.abs(covariance).max()):
        raise NotPositiveDefinite("covariance matrix is not symmetric")
    diagonal = np.diag(covariance)
    if np.any(diagonal <= 0.0):
        raise NotPositiveDefinite(f"covariance diagonal must be strictly positive, got {diagonal.tolist()}")

    scale = 1.0 / np.sqrt(diagonal)
    correlation = scale[:, None] * covariance * scale[None, :]
    correlation = 0.5 * (correlation + correlation.T)
    np.fill_diagonal(correlation, 1.0)

    try:
        cholesky = np.linalg.cholesky(correlation)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"correlation matrix is not positive definite: {exc}") from exc
    pivots = np.diag(cholesky) ** 2
    if pivots.min() <= PIVOT_TOLERANCE * np.diag(correlation).max():
        raise NotPositiveDefinite(f"Cholesky pivot {pivots.min():.3g} below tolerance {PIVOT_TOLERANCE}")

    model = GaussianModel(
        mean=_frozen(mean),
        covariance=_frozen(covariance),
        correlation=_frozen(correlation),
        scale=_frozen(scale),
        cholesky=_frozen(cholesky),
    )
    condition = model.condition_number
    if condition > settings.condition_warning:
        log.warning(f"correlation matrix is nearly singular (condition number {condition:.3g})")
    log.debug(f"built Gaussian model of dimension {m}, cond(R)={condition:.3g}")
    return model


def standardize_system(model: GaussianModel, system: InequalitySystem) -> InequalitySystem:
    """g̃(x, z) = g(x, D⁻¹z + μ); ∇_z g̃ = D⁻¹ ∇_z g."""
    if system.m != model.dim:
        raise DimensionMismatch(f"system random dimension {system.m} does not match model dimension {model.dim}")
    inverse_scale = model.inverse_scale
    return InequalitySystem(
        system.n,
        system.m,
        [StandardizedComponent(c, model.mean, inverse_scale) for c in system.components],
    )
