import asyncio
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np

from ..dto import dto, dto_diagnostics
from ..models import enums
from ..models.errors import NonSmoothComponent
from ..utils import logger_setup
from ..utils.gaussian_model import GaussianModel, standardize_system
from ..utils.problem.system import InequalitySystem, as_vector
from ..utils.radial.engine import DirectionGradientTerm, RadialEngine, RadiusOutcome
from ..utils.radial.sphere_sampler import SphereSample, make_sample
from ..utils.settings import AppSettings, settings

log = logger_setup.Logger(__name__)

T = TypeVar("T")

CONE_TERM_ZERO = "zero (growth condition holds)"
CONE_TERM_NONTRIVIAL = "integral part only; cone term nontrivial"
CONE_TERM_UNCHECKED = "integral part only; growth not checked"


async def map_directions(fn: Callable[[np.ndarray], List[T]], rows: np.ndarray,
                         workers: int = 1, chunk_size: int = 1024) -> List[T]:
    """Apply `fn` to consecutive chunks of `rows` and concatenate in row order.

    With workers > 1 chunks run in threads, at most `workers` at a time; the
    result order never depends on the schedule.
    """
    chunks = [rows[start:start + chunk_size] for start in range(0, len(rows), max(1, chunk_size))]
    if workers <= 1:
        results = [fn(chunk) for chunk in chunks]
    else:
        semaphore = asyncio.Semaphore(workers)

        async def run(chunk: np.ndarray) -> List[T]:
            async with semaphore:
                return await asyncio.to_thread(fn, chunk)

        results = await asyncio.gather(*(run(chunk) for chunk in chunks))
    return [item for chunk_result in results for item in chunk_result]


def _mean(values: np.ndarray) -> float:
    return math.fsum(values.tolist()) / values.size


def _stderr(values: np.ndarray, sample: Optional[SphereSample]) -> float:
    """Replicate-mean spread for replicated QMC, sample std / √N otherwise."""
    if sample is not None and sample.replicates > 1 and sample.blocks is not None:
        means = np.array([_mean(values[sample.blocks == r]) for r in range(sample.replicates)])
        return float(np.std(means, ddof=1) / math.sqrt(sample.replicates))
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(values.size))


def _column_stats(vectors: np.ndarray, sample: Optional[SphereSample]):
    values = [_mean(vectors[:, j]) for j in range(vectors.shape[1])]
    errors = [_stderr(vectors[:, j], sample) for j in range(vectors.shape[1])]
    return values, errors


@dataclass(frozen=True, eq=False)
class DirectionResult:
    outcome: RadiusOutcome
    probability: float
    term: Optional[DirectionGradientTerm] = None


@dataclass(frozen=True, eq=False)
class DirectionSweep:
    engine: RadialEngine
    sample: SphereSample
    results: List[DirectionResult]

    @property
    def size(self) -> int:
        return len(self.results)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([r.probability for r in self.results])

    @property
    def tie_fraction(self) -> float:
        return sum(r.outcome.has_ties for r in self.results) / self.size

    @property
    def infinite_fraction(self) -> float:
        return sum(not r.outcome.is_finite for r in self.results) / self.size

    @property
    def residual_infinite_mass(self) -> float:
        return self.infinite_fraction * self.engine.residual_prob

    def gradients(self, policy: enums.TiePolicy, coordinate: int = 0) -> np.ndarray:
        return np.array([r.term.select(policy, coordinate) for r in self.results])


class EstimatorServiceParams:
    def __init__(self, system: InequalitySystem, model: GaussianModel, config: Optional[AppSettings] = None):
        self.system = system
        self.model = model
        self.config = config or settings


class EstimatorService:
    """Spheric-radial estimates of φ(x) = P(g(x, ξ) <= 0) and its derivatives."""

    def __init__(self, params: EstimatorServiceParams):
        self.params = params
        self.config = params.config
        self.system = params.system
        self.model = params.model
        self.standardized = standardize_system(params.model, params.system)

    def default_sample(self) -> SphereSample:
        return make_sample(self.system.m, self.config)

    def engine(self, x) -> RadialEngine:
        return RadialEngine(self.standardized, self.model.cholesky, x, config=self.config)

    async def sweep(self, x, sample: Optional[SphereSample] = None, with_gradients: bool = False) -> DirectionSweep:
        """Radius, radial probability and optionally the gradient term for every direction."""
        sample = sample or self.default_sample()
        if sample.dim != self.system.m:
            raise ValueError(f"sample dimension {sample.dim} does not match m={self.system.m}")
        engine = self.engine(x)
        if with_gradients and not self.system.smooth_in_x:
            raise NonSmoothComponent("the gradient formula needs components that are C¹ in x")

        def run(chunk: np.ndarray) -> List[DirectionResult]:
            results = []
            for v in chunk:
                outcome = engine.solve_radius(v)
                term = engine.radial_gradient(v, outcome) if with_gradients else None
                results.append(DirectionResult(outcome, engine.radial_probability(outcome), term))
            return results

        log.info(f"Sweeping {sample.size} directions ({sample.tag}) at x={engine.x.tolist()}")
        results = await map_directions(run, sample.directions, self.config.workers, self.config.chunk_size)
        sweep = DirectionSweep(engine, sample, results)
        log.debug(f"{sweep.infinite_fraction:.4f} of directions effectively infinite, "
                  f"residual mass {sweep.residual_infinite_mass:.3g}")
        return sweep

    async def estimate_probability(self, x, sample: Optional[SphereSample] = None) -> dto.Estimate:
        sweep = await self.sweep(x, sample)
        probabilities = sweep.probabilities
        return dto.Estimate(
            value=min(1.0, max(0.0, _mean(probabilities))),
            stderr=_stderr(probabilities, sweep.sample),
            samples=sweep.size,
            sampler=sweep.sample.tag,
            tie_fraction=sweep.tie_fraction,
            infinite_fraction=sweep.infinite_fraction,
            residual_infinite_mass=sweep.residual_infinite_mass,
        )

    async def estimate_gradient(self, x, sample: Optional[SphereSample] = None,
                                policy: enums.TiePolicy = enums.TiePolicy.LOWEST_INDEX,
                                coordinate: int = 0) -> dto.Estimate:
        sweep = await self.sweep(x, sample, with_gradients=True)
        values, errors = _column_stats(sweep.gradients(policy, coordinate), sweep.sample)
        return dto.Estimate(
            value=values,
            stderr=errors,
            samples=sweep.size,
            sampler=sweep.sample.tag,
            tie_fraction=sweep.tie_fraction,
            infinite_fraction=sweep.infinite_fraction,
            residual_infinite_mass=sweep.residual_infinite_mass,
            policy=policy,
        )

    async def estimate_subdifferential(self, x, sample: Optional[SphereSample] = None,
                                       policies: Optional[Sequence[enums.TiePolicy]] = None,
                                       growth: Optional[dto_diagnostics.GrowthCheck] = None,
                                       constant_r: Optional[float] = None) -> dto.SubdiffEnclosure:
        """One integral estimate per tie-selection policy and their interval hull.

        Coordinate-extreme policies produce one estimate per coordinate.
        """
        policies = list(policies or enums.TiePolicy)
        sweep = await self.sweep(x, sample, with_gradients=True)
        gradients = []
        for policy in policies:
            if policy in (enums.TiePolicy.LOWEST_INDEX, enums.TiePolicy.HIGHEST_INDEX):
                coordinates = [None]
            else:
                coordinates = list(range(self.system.n))
            for coordinate in coordinates:
                values, errors = _column_stats(sweep.gradients(policy, coordinate or 0), sweep.sample)
                gradients.append(dto.PolicyGradient(policy=policy, coordinate=coordinate, value=values, stderr=errors))

        stacked = np.array([g.value for g in gradients])
        lower = stacked.min(axis=0)
        upper = stacked.max(axis=0)
        if growth is None:
            cone_term, ball_radius = CONE_TERM_UNCHECKED, None
        elif growth.ok:
            cone_term = CONE_TERM_ZERO
            ball_radius = sweep.infinite_fraction * constant_r if constant_r is not None else None
        else:
            cone_term, ball_radius = CONE_TERM_NONTRIVIAL, None
        return dto.SubdiffEnclosure(
            policies=gradients,
            hull_lower=lower.tolist(),
            hull_upper=upper.tolist(),
            hull_width=(upper - lower).tolist(),
            samples=sweep.size,
            sampler=sweep.sample.tag,
            tie_fraction=sweep.tie_fraction,
            infinite_fraction=sweep.infinite_fraction,
            residual_infinite_mass=sweep.residual_infinite_mass,
            growth_ok=None if growth is None else growth.ok,
            cone_term=cone_term,
            ball_radius=ball_radius,
        )

    async def oracle_probability_mc(self, x, samples: int, seed: int) -> dto.Estimate:
        """Frequency of g(x, ξ) <= 0 over direct draws ξ ~ N(μ, Σ)."""
        if samples < 1:
            raise ValueError(f"oracle sample size must be >= 1, got {samples}")
        x = as_vector(x, self.system.n, "x")
        rng = np.random.default_rng(seed)
        standard = rng.standard_normal((samples, self.system.m))
        draws = (standard @ self.model.cholesky.T) * self.model.inverse_scale + self.model.mean
        system = self.system

        def run(chunk: np.ndarray) -> List[bool]:
            return [system.value(x, xi) <= 0.0 for xi in chunk]

        hits = await map_directions(run, draws, self.config.workers, self.config.chunk_size)
        p = sum(hits) / samples
        return dto.Estimate(
            value=p,
            stderr=math.sqrt(p * (1.0 - p) / samples),
            samples=samples,
            sampler=f"mc-oracle(seed={seed})",
        )

    async def oracle_gradient_fd(self, x, sample: Optional[SphereSample] = None,
                                 h: Optional[float] = None) -> dto.Estimate:
        """Central differences of the spheric-radial estimate on common directions.

        The step for coordinate j is h·(1 + |x_j|).
        """
        x = as_vector(x, self.system.n, "x")
        sample = sample or self.default_sample()
        h = h if h is not None else self.config.fd_step
        values, errors = [], []
        for j in range(self.system.n):
            step = h * (1.0 + abs(x[j]))
            shift = np.zeros(self.system.n)
            shift[j] = step
            upper = (await self.sweep(x + shift, sample)).probabilities
            lower = (await self.sweep(x - shift, sample)).probabilities
            quotients = (upper - lower) / (2.0 * step)
            values.append(_mean(quotients))
            errors.append(_stderr(quotients, sample))
        return dto.Estimate(
            value=values,
            stderr=errors,
            samples=sample.size,
            sampler=f"fd(h={h:g}, {sample.tag})",
        )


def _service(system: InequalitySystem, model: GaussianModel, config: Optional[AppSettings]) -> EstimatorService:
    return EstimatorService(EstimatorServiceParams(system, model, config))


async def estimate_probability(system: InequalitySystem, model: GaussianModel, x, sample: SphereSample,
                               config: Optional[AppSettings] = None) -> dto.Estimate:
    return await _service(system, model, config).estimate_probability(x, sample)


async def estimate_gradient(system: InequalitySystem, model: GaussianModel, x, sample: SphereSample,
                            config: Optional[AppSettings] = None) -> dto.Estimate:
    return await _service(system, model, config).estimate_gradient(x, sample)


async def estimate_subdifferential(system: InequalitySystem, model: GaussianModel, x, sample: SphereSample,
                                   policies: Optional[Sequence[enums.TiePolicy]] = None,
                                   config: Optional[AppSettings] = None) -> dto.SubdiffEnclosure:
    return await _service(system, model, config).estimate_subdifferential(x, sample, policies)


async def oracle_probability_mc(system: InequalitySystem, model: GaussianModel, x, samples: int, seed: int,
                                config: Optional[AppSettings] = None) -> dto.Estimate:
    return await _service(system, model, config).oracle_probability_mc(x, samples, seed)


async def oracle_gradient_fd(system: InequalitySystem, model: GaussianModel, x, sample: SphereSample,
                             h: float = 1e-4, config: Optional[AppSettings] = None) -> dto.Estimate:
    return await _service(system, model, config).oracle_gradient_fd(x, sample, h)
