"""Regularity diagnostics for a Gaussian probability function at a point x₀.

Growth and nice-direction checks are sampled evidence, never proofs. All
z-coordinates refer to the standardized system.
"""
import math
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from ..dto import dto_diagnostics
from ..models import enums
from ..models.errors import DomainError
from ..utils import logger_setup
from ..utils.distributions import ChiDistribution
from ..utils.gaussian_model import GaussianModel
from ..utils.problem.system import InequalitySystem, as_vector, spot_check_convexity, verify_gradients
from ..utils.radial.sphere_sampler import SphereSample
from ..utils.settings import AppSettings, settings
from .estimators import (CONE_TERM_NONTRIVIAL, CONE_TERM_ZERO, DirectionSweep, EstimatorService,
                         EstimatorServiceParams)

log = logger_setup.Logger(__name__)

# radius of the x-neighbourhood used to sample Lipschitz moduli of g(·, ρLv)
_LIPSCHITZ_RADIUS = 1e-3
_LIPSCHITZ_PROBES = 4


def check_slater(system: InequalitySystem, x) -> dto_diagnostics.SlaterCheck:
    values = system.values(x, np.zeros(system.m))
    worst = int(np.argmax(values))
    return dto_diagnostics.SlaterCheck(ok=bool(values[worst] < 0.0), value=float(values[worst]), component=worst)


def growth_envelope(norm_z: float, level: float, m: int, cholesky_norm: float,
                    envelope: enums.GrowthEnvelope = enums.GrowthEnvelope.NICE) -> float:
    """l‖z‖^{−m} e^{‖z‖²/(2‖L‖²)}, or l e^{‖z‖} for the exponential envelope."""
    if envelope == enums.GrowthEnvelope.EXPONENTIAL:
        return level * math.exp(norm_z)
    return level * norm_z ** (-m) * math.exp(norm_z * norm_z / (2.0 * cholesky_norm * cholesky_norm))


def _probe_points(x0: np.ndarray, m: int, level: float, z_max: float, probes: int,
                  seed: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Boundary probes first, then `probes` random points.

    y ranges over the closed ball B_{1/l}(x0), z over l <= ‖z‖ <= z_max.
    """
    n = x0.size
    ys = [x0]
    for j in range(n):
        step = np.zeros(n)
        step[j] = 1.0 / level
        ys += [x0 + step, x0 - step]
    zs = []
    for k in range(m):
        axis = np.zeros(m)
        axis[k] = level
        zs += [axis, -axis]
    for y in ys:
        for z in zs:
            yield y, z

    rng = np.random.default_rng(seed)
    for _ in range(probes):
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u) or 1.0
        y = x0 + u * rng.uniform() ** (1.0 / n) / level
        w = rng.standard_normal(m)
        w /= np.linalg.norm(w) or 1.0
        yield y, w * rng.uniform(level, z_max)


def _z_max(model: GaussianModel, level: float, config: AppSettings) -> float:
    cutoff = ChiDistribution(model.dim).tail_quantile(config.cutoff_tail_probability)
    return max(level, cutoff * model.cholesky_norm)


def check_growth(system: InequalitySystem, model: GaussianModel, x0, level: float, probes: int, seed: int,
                 envelope: enums.GrowthEnvelope = enums.GrowthEnvelope.NICE,
                 config: AppSettings = settings) -> dto_diagnostics.GrowthCheck:
    """Worst ratio ‖∇_x g_i(y, z)‖ / envelope(‖z‖) over probes; the witness is the first ratio above 1."""
    if level <= 0.0:
        raise ValueError(f"growth level must be positive, got {level}")
    x0 = as_vector(x0, system.n, "x0")
    cholesky_norm = model.cholesky_norm
    worst, witness, count = 0.0, None, 0
    for y, z in _probe_points(x0, system.m, level, _z_max(model, level, config), probes, seed):
        count += 1
        norm_z = float(np.linalg.norm(z))
        bound = growth_envelope(norm_z, level, system.m, cholesky_norm, envelope)
        for i, component in enumerate(system.components):
            try:
                numerator = float(np.linalg.norm(component.gradients(y, z)[1]))
            except DomainError as e:
                log.debug(f"growth probe skipped at y={y.tolist()}, z={z.tolist()}: {e}")
                continue
            ratio = numerator / bound
            worst = max(worst, ratio)
            if ratio > 1.0 and witness is None:
                witness = dto_diagnostics.ProbeWitness(
                    y=y.tolist(), z=z.tolist(), component=i, numerator=numerator, envelope=bound, ratio=ratio,
                )
    return dto_diagnostics.GrowthCheck(
        ok=witness is None, level=level, envelope=envelope, probes=count, worst_ratio=worst, witness=witness,
    )


def probe_nice_direction(system: InequalitySystem, model: GaussianModel, x0, h, level: float, probes: int,
                         seed: int, config: AppSettings = settings) -> dto_diagnostics.NiceDirectionProbe:
    """Tests g°(·, z)(y; h) <= l‖z‖^{−m} e^{‖z‖²/(2‖L‖²)} ‖h‖ on the growth probes.

    For a max of C¹ components the Clarke derivative is the largest ⟨∇_x g_i, h⟩
    over the components active at (y, z).
    """
    x0 = as_vector(x0, system.n, "x0")
    h = as_vector(h, system.n, "h")
    h_norm = float(np.linalg.norm(h))
    if h_norm == 0.0:
        raise ValueError("direction h must be nonzero")
    cholesky_norm = model.cholesky_norm
    worst, witness, count = 0.0, None, 0
    for y, z in _probe_points(x0, system.m, level, _z_max(model, level, config), probes, seed):
        count += 1
        try:
            active = system.active_indices(y, z, config.tie_tolerance)
            slopes = [(float(system.components[i].gradients(y, z)[1] @ h), i) for i in active]
        except DomainError as e:
            log.debug(f"nice-direction probe skipped at y={y.tolist()}, z={z.tolist()}: {e}")
            continue
        derivative, component = max(slopes)
        bound = growth_envelope(float(np.linalg.norm(z)), level, system.m, cholesky_norm) * h_norm
        ratio = max(0.0, derivative) / bound
        worst = max(worst, ratio)
        if ratio > 1.0 and witness is None:
            witness = dto_diagnostics.ProbeWitness(
                y=y.tolist(), z=z.tolist(), component=component, numerator=derivative, envelope=bound, ratio=ratio,
            )
    return dto_diagnostics.NiceDirectionProbe(
        direction=h.tolist(), level=level, ok=witness is None, probes=count, worst_ratio=worst, witness=witness,
    )


def check_gradient_bound(sweep: DirectionSweep, config: AppSettings = settings) -> dto_diagnostics.BoundCheck:
    """Per-direction gradient norms against ρχ(ρ)M̂/|g(x,0)|, and denominators against −g(x,0)/ρ.

    M̂ is the largest ‖∇_x g_i(·, ρLv)‖ over x and a few points within a small
    ball around it.
    """
    engine = sweep.engine
    system = engine.system
    rng = np.random.default_rng(config.seed)
    g0 = abs(engine.slater_value)
    violations = denominator_violations = checked = 0
    worst = 0.0
    for v, result in zip(sweep.sample.directions, sweep.results):
        term = result.term
        if term is None or term.is_zero:
            continue
        checked += 1
        rho = result.outcome.rho
        z = rho * engine.ray(v)
        points = [engine.x] + [engine.x + _LIPSCHITZ_RADIUS * rng.uniform(-1.0, 1.0, system.n)
                               for _ in range(_LIPSCHITZ_PROBES)]
        for k, i in enumerate(term.indices):
            component = system.components[i]
            modulus = max(float(np.linalg.norm(component.gradients(y, z)[1])) for y in points)
            bound = rho * engine.chi.pdf(rho) * modulus / g0
            norm = float(np.linalg.norm(term.vectors[k]))
            if bound > 0.0:
                worst = max(worst, norm / bound)
            if norm > bound * (1.0 + 1e-9) + config.denominator_slack:
                violations += 1
            if term.denominators[k] < term.lower_bound - config.denominator_slack:
                denominator_violations += 1
    return dto_diagnostics.BoundCheck(
        directions=checked, violations=violations, denominator_violations=denominator_violations, worst_ratio=worst,
    )


def k_star(model: GaussianModel) -> float:
    """max over unit v of ‖Lv‖^{−m}, i.e. σ_min(L)^{−m}."""
    return model.cholesky_min_singular ** (-model.dim)


def constant_r(model: GaussianModel, level: float, slater_value: float) -> float:
    """2 l K K* / |g(x₀, 0)|, the radius bounding the extra ball term."""
    return 2.0 * level * ChiDistribution(model.dim).normalizer * k_star(model) / abs(slater_value)


def classify_differentiability(growth_ok: bool, all_directions_finite: bool,
                               tie_fraction: float) -> enums.DifferentiabilityVerdict:
    if not (growth_ok or all_directions_finite):
        return enums.DifferentiabilityVerdict.UNKNOWN
    if tie_fraction == 0.0:
        return enums.DifferentiabilityVerdict.STRICT_DIFFERENTIABLE
    return enums.DifferentiabilityVerdict.LIPSCHITZ_ONLY


class DiagnosticsServiceParams:
    def __init__(self, system: InequalitySystem, model: GaussianModel, config: Optional[AppSettings] = None):
        self.system = system
        self.model = model
        self.config = config or settings


class DiagnosticsService:
    def __init__(self, params: DiagnosticsServiceParams):
        self.params = params
        self.config = params.config
        self.estimators = EstimatorService(EstimatorServiceParams(params.system, params.model, params.config))
        self.system = self.estimators.standardized
        self.model = params.model

    async def run(self, x0, level: Optional[float] = None, directions: Optional[Sequence] = None,
                  envelope: enums.GrowthEnvelope = enums.GrowthEnvelope.NICE,
                  sample: Optional[SphereSample] = None) -> dto_diagnostics.DiagnosticsReport:
        config = self.config
        level = level if level is not None else config.growth_level
        x0 = as_vector(x0, self.system.n, "x0")
        slater = check_slater(self.system, x0)
        condition = self.model.condition_number
        report = dto_diagnostics.DiagnosticsReport(
            slater=slater,
            k_star=k_star(self.model),
            condition_number=condition,
            condition_warning=condition > config.condition_warning,
        )
        if not slater.ok:
            log.warning(f"Slater condition fails at x={x0.tolist()}: g(x,0) = {slater.value:.6g}")
            return report

        rng = np.random.default_rng(config.seed)
        convexity_ok, _, offender = spot_check_convexity(self.system, x0, rng, slack=config.denominator_slack)
        if not convexity_ok:
            log.warning(f"Component {offender} failed the convexity spot check")
        gradient_error = max(verify_gradients(self.system, x0, rng.standard_normal(self.system.m))
                             for _ in range(3)) if self.system.smooth_in_x else None

        growth = check_growth(self.system, self.model, x0, level, config.growth_probes, config.seed, envelope, config)
        if directions is None:
            directions = [sign * np.eye(self.system.n)[j] for j in range(self.system.n) for sign in (1.0, -1.0)]
        nice = [probe_nice_direction(self.system, self.model, x0, h, level, config.growth_probes, config.seed, config)
                for h in directions]

        sweep = await self.estimators.sweep(x0, sample, with_gradients=self.system.smooth_in_x)
        bound = check_gradient_bound(sweep, config) if self.system.smooth_in_x else None
        all_finite = sweep.infinite_fraction == 0.0
        if envelope == enums.GrowthEnvelope.EXPONENTIAL and growth.ok:
            radius = 0.0
        else:
            radius = constant_r(self.model, level, slater.value)

        return report.model_copy(update=dict(
            growth=growth,
            nice_directions=nice,
            bound=bound,
            tie_fraction=sweep.tie_fraction,
            infinite_fraction=sweep.infinite_fraction,
            all_directions_finite=all_finite,
            constant_r=radius,
            gradient_check_error=gradient_error,
            convexity_ok=convexity_ok,
            cone_term=CONE_TERM_ZERO if growth.ok else CONE_TERM_NONTRIVIAL,
            differentiability_verdict=classify_differentiability(growth.ok, all_finite, sweep.tie_fraction),
        ))


async def run_diagnostics(system: InequalitySystem, model: GaussianModel, x0, level: Optional[float] = None,
                          directions: Optional[Sequence] = None,
                          envelope: enums.GrowthEnvelope = enums.GrowthEnvelope.NICE,
                          config: Optional[AppSettings] = None,
                          sample: Optional[SphereSample] = None) -> dto_diagnostics.DiagnosticsReport:
    service = DiagnosticsService(DiagnosticsServiceParams(system, model, config))
    return await service.run(x0, level, directions, envelope, sample)
