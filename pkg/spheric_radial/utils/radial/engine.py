"""Per-direction kernel of the spheric-radial decomposition.

For a unit direction v the ray r ↦ g(x, rLv) starts strictly negative and is
convex, so its first sign change is the unique radius ρ(x, v). Directions whose
ray stays feasible up to the Chi cutoff r_max are classified effectively
infinite; the Chi mass beyond r_max is at most the configured tail probability.
"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ...models import enums
from ...models.errors import (DegenerateDenominator, NonConvexityDetected, NonSmoothComponent,
                              SlaterViolation)
from ..distributions import ChiDistribution
from ..problem.system import Component, InequalitySystem, as_vector
from ..settings import AppSettings, settings

_MAX_ITERATIONS = 200


@dataclass(frozen=True)
class ActiveSet:
    indices: Tuple[int, ...]
    tolerance: float


@dataclass(frozen=True)
class RadiusOutcome:
    kind: enums.RadiusKind
    rho: float
    active: Optional[ActiveSet]
    cutoff: float
    residual_prob: float = 0.0
    component_radii: Tuple[float, ...] = ()

    @property
    def is_finite(self) -> bool:
        return self.kind == enums.RadiusKind.FINITE

    @property
    def has_ties(self) -> bool:
        return self.active is not None and len(self.active.indices) > 1


@dataclass(frozen=True, eq=False)
class DirectionGradientTerm:
    """Per-component vectors −χ(ρ)∇_x g_i / ⟨∇_z g_i, Lv⟩ for i in T(v).

    An empty term stands for an (effectively) infinite direction, whose
    contribution is the zero vector.
    """

    indices: Tuple[int, ...]
    vectors: np.ndarray  # (len(indices), n)
    denominators: np.ndarray  # (len(indices),)
    n: int
    lower_bound: float = 0.0  # −g(x,0)/ρ

    @property
    def is_zero(self) -> bool:
        return not self.indices

    def select(self, policy: enums.TiePolicy, coordinate: int = 0) -> np.ndarray:
        if self.is_zero:
            return np.zeros(self.n)
        if policy == enums.TiePolicy.LOWEST_INDEX:
            return self.vectors[0]
        if policy == enums.TiePolicy.HIGHEST_INDEX:
            return self.vectors[-1]
        column = self.vectors[:, coordinate]
        if policy == enums.TiePolicy.MAX_COORDINATE:
            return self.vectors[int(np.argmax(column))]
        return self.vectors[int(np.argmin(column))]


class RadialEngine:
    """Radius solver bound to one decision x; stateless per direction."""

    def __init__(self, system: InequalitySystem, cholesky: np.ndarray, x, chi: Optional[ChiDistribution] = None,
                 config: AppSettings = settings):
        self.system = system
        self.cholesky = np.asarray(cholesky, dtype=float)
        self.x = as_vector(x, system.n, "x")
        self.chi = chi or ChiDistribution(system.m)
        self.config = config
        self.origin = np.zeros(system.m)
        self.origin_values = np.array([c.value(self.x, self.origin) for c in system.components])
        self.slater_value = float(self.origin_values.max())
        if not self.slater_value < 0.0:
            raise SlaterViolation(self.slater_value, int(np.argmax(self.origin_values)))
        self.cutoff = self.chi.tail_quantile(config.cutoff_tail_probability)
        self.residual_prob = self.chi.sf(self.cutoff)

    def ray(self, v) -> np.ndarray:
        v = as_vector(v, self.system.m, "v")
        if abs(float(np.linalg.norm(v)) - 1.0) > 1e-12:
            raise ValueError(f"direction must be a unit vector, got norm {np.linalg.norm(v):.15g}")
        return self.cholesky @ v

    def solve_radius(self, v) -> RadiusOutcome:
        lv = self.ray(v)
        radii = tuple(self._component_radius(c, g0, lv) for c, g0 in zip(self.system.components, self.origin_values))
        rho = min(radii)
        if math.isinf(rho):
            return RadiusOutcome(
                kind=enums.RadiusKind.EFFECTIVELY_INFINITE,
                rho=math.inf,
                active=None,
                cutoff=self.cutoff,
                residual_prob=self.residual_prob,
                component_radii=radii,
            )
        tolerance = self.config.tie_tolerance
        active = tuple(i for i, r in enumerate(radii) if abs(r - rho) <= tolerance * (1.0 + rho))
        return RadiusOutcome(
            kind=enums.RadiusKind.FINITE,
            rho=rho,
            active=ActiveSet(active, tolerance),
            cutoff=self.cutoff,
            component_radii=radii,
        )

    def _component_radius(self, component: Component, g0: float, lv: np.ndarray) -> float:
        x = self.x

        def f(r: float) -> Tuple[float, float]:
            return component.value_and_slope(x, r * lv, lv)

        lo, hi = 0.0, min(1.0, self.cutoff)
        while True:
            value, _ = f(hi)
            if not value < 0.0:
                break
            if hi >= self.cutoff:
                return math.inf
            lo, hi = hi, min(2.0 * hi, self.cutoff)

        f_tol = self.config.root_tolerance * (1.0 + abs(g0))
        rho = self._newton_bisection(f, lo, hi, f_tol, use_newton=component.smooth_in_z)
        midpoint, _ = f(0.5 * rho)
        # convexity with f(0) = g0 < 0 forces f(ρ/2) <= g0/2
        if midpoint > 0.5 * g0 + f_tol:
            raise NonConvexityDetected(
                f"component {component.describe()} is not convex along the ray: "
                f"g(x, ρ/2·Lv) = {midpoint:.6g} > g(x,0)/2 = {0.5 * g0:.6g}"
            )
        return rho

    @staticmethod
    def _newton_bisection(f, lo: float, hi: float, f_tol: float, use_newton: bool = True) -> float:
        """Safeguarded Newton on a bracket with f(lo) < 0 <= f(hi)."""
        r = hi
        value, slope = f(r)
        step_old = hi - lo
        for _ in range(_MAX_ITERATIONS):
            if abs(value) <= f_tol:
                return r
            if value < 0.0:
                lo = r
            else:
                hi = r
            newton_ok = (use_newton and slope > 0.0 and math.isfinite(slope)
                         and abs(2.0 * value) <= abs(step_old * slope))
            candidate = r - value / slope if newton_ok else 0.0
            if not newton_ok or not lo < candidate < hi:
                candidate = 0.5 * (lo + hi)
            step_old = abs(candidate - r)
            if candidate in (lo, hi) or hi - lo <= 4.0 * np.finfo(float).eps * hi:
                return hi
            r = candidate
            value, slope = f(r)
        return r

    def radial_probability(self, outcome: RadiusOutcome) -> float:
        if not outcome.is_finite:
            return 1.0
        return self.chi.cdf(outcome.rho)

    def radial_gradient(self, v, outcome: RadiusOutcome) -> DirectionGradientTerm:
        n = self.system.n
        if not outcome.is_finite:
            return DirectionGradientTerm((), np.zeros((0, n)), np.zeros(0), n)
        lv = self.ray(v)
        rho = outcome.rho
        z = rho * lv
        density = self.chi.pdf(rho)
        vectors, denominators = [], []
        for i in outcome.active.indices:
            component = self.system.components[i]
            if not component.smooth_in_x:
                raise NonSmoothComponent(f"component {i} ({component.describe()}) is not differentiable in x")
            _, gx, gz = component.gradients(self.x, z)
            denominator = float(gz @ lv)
            if denominator <= self.config.denominator_floor:
                raise DegenerateDenominator(
                    f"⟨∇_z g_{i}, Lv⟩ = {denominator:.3g} at ρ = {rho:.6g}; "
                    f"a Slater point forces it to be at least {-self.slater_value / rho:.3g}"
                )
            vectors.append(-density * gx / denominator)
            denominators.append(denominator)
        return DirectionGradientTerm(
            indices=outcome.active.indices,
            vectors=np.array(vectors),
            denominators=np.array(denominators),
            n=n,
            lower_bound=-self.slater_value / rho,
        )


def solve_radius(system: InequalitySystem, cholesky, x, v, config: AppSettings = settings) -> RadiusOutcome:
    return RadialEngine(system, cholesky, x, config=config).solve_radius(v)


def radial_probability(outcome: RadiusOutcome, chi: ChiDistribution) -> float:
    if not outcome.is_finite:
        return 1.0
    return chi.cdf(outcome.rho)


def radial_gradient(system: InequalitySystem, cholesky, x, v, outcome: RadiusOutcome,
                    config: AppSettings = settings) -> DirectionGradientTerm:
    return RadialEngine(system, cholesky, x, config=config).radial_gradient(v, outcome)
