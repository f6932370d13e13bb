"""Two-dimensional example whose probability function is continuous but not
locally Lipschitz at x = 0.

g(x, z₁, z₂) = α(x) e^{h(z₁)} + z₂ − 1 with α(x) = max(x, 0)², h(s) = −1 − 4 log(1 − Φ(s))
and ξ ~ N(0, I₂). For t <= 0 the constraint reads ξ₂ <= 1, so φ(t) = Φ(1).
"""
import math
import warnings
from typing import Iterable, Optional

from scipy import integrate
from scipy import special

from ..dto import dto, dto_diagnostics
from ..models.errors import OutOfRange, QuadratureFailure
from ..utils import logger_setup
from ..utils.distributions import normal_cdf, normal_pdf
from ..utils.gaussian_model import GaussianModel, build_model
from ..utils.problem.loader import Problem, build_problem
from ..utils.problem.system import EXAMPLE_CLAMP, InequalitySystem, NonLipschitzExampleComponent, example_h
from ..utils.settings import settings

log = logger_setup.Logger(__name__)

QUADRATURE_BOUND = 8.0


def example_system() -> InequalitySystem:
    return InequalitySystem(1, 2, [NonLipschitzExampleComponent()])


def example_model() -> GaussianModel:
    return build_model([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])


def example_problem() -> Problem:
    return build_problem(dto.ProblemSpec(
        name="nonlipschitz_example", n=1, m=2, components=[dto.NonLipschitzExampleSpec()], reference_x=[0.0],
    ))


def witness_epsilon() -> float:
    """ε = Φ(1) − Φ(1 − e⁻¹)."""
    return normal_cdf(1.0) - normal_cdf(1.0 - math.exp(-1.0))


def _kink(t: float) -> Optional[float]:
    """The s where t² e^{h(s)} = 1, if it lies inside the quadrature interval."""
    tail = math.exp((2.0 * math.log(t) - 1.0) / 4.0)
    if tail >= 1.0:
        return None
    s = -float(special.ndtri(tail))
    return s if -QUADRATURE_BOUND < s < min(QUADRATURE_BOUND, EXAMPLE_CLAMP) else None


def example_phi_closed_form(t: float, quad_tol: Optional[float] = None) -> float:
    """φ(t) = ∫ φ_N(s) Φ(1 − t² e^{h(s)}) ds over [−8, 8]; Φ(1) for t <= 0."""
    quad_tol = quad_tol if quad_tol is not None else settings.quad_tolerance
    if quad_tol <= 0.0:
        raise ValueError(f"quadrature tolerance must be positive, got {quad_tol}")
    if t <= 0.0:
        return normal_cdf(1.0)

    t2 = t * t

    def integrand(s: float) -> float:
        return normal_pdf(s) * normal_cdf(1.0 - t2 * math.exp(example_h(s)[0]))

    kink = _kink(t)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr = integrate.quad(
            integrand, -QUADRATURE_BOUND, QUADRATURE_BOUND,
            epsabs=quad_tol, epsrel=quad_tol, limit=500,
            points=[kink] if kink is not None else None,
        )
    if abserr > 1e3 * quad_tol:
        raise QuadratureFailure(f"quadrature for phi({t:g}) reached error {abserr:.3g}, tolerance {quad_tol:.3g}")
    if abserr > quad_tol:
        log.warning(f"quadrature for phi({t:g}) reached error {abserr:.3g} above tolerance {quad_tol:.3g}")
    return value


def nonsmoothness_witness(t_grid: Iterable[float], quad_tol: Optional[float] = None) -> dto_diagnostics.WitnessTable:
    """Rows (t, φ(0) − φ(t), ε√t, (φ(0) − φ(t))/t) along the grid sorted by decreasing t."""
    grid = sorted((float(t) for t in t_grid), reverse=True)
    if not grid:
        raise OutOfRange("the witness table needs at least one t")
    for t in grid:
        if not 0.0 < t < 1.0:
            raise OutOfRange(f"witness grid values must lie in (0, 1), got {t}")
    epsilon = witness_epsilon()
    phi_zero = example_phi_closed_form(0.0, quad_tol)
    rows = []
    for t in grid:
        gap = phi_zero - example_phi_closed_form(t, quad_tol)
        rows.append(dto_diagnostics.WitnessRow(t=t, phi_gap=gap, eps_sqrt_t=epsilon * math.sqrt(t), ratio=gap / t))
    ratios = [row.ratio for row in rows]
    return dto_diagnostics.WitnessTable(
        epsilon=epsilon,
        phi_zero=phi_zero,
        rows=rows,
        gap_bound_holds=all(row.phi_gap >= row.eps_sqrt_t for row in rows),
        ratio_diverges=all(later > earlier for earlier, later in zip(ratios, ratios[1:])),
    )
