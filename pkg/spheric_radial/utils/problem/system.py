import math
from abc import ABC, abstractmethod
from typing import Optional, Sequence, Tuple

import numpy as np

from ...models import enums
from ...models.errors import DimensionMismatch, ProblemError
from .. import distributions
from . import expression as ex

GradientTriple = Tuple[float, np.ndarray, np.ndarray]


def as_vector(values, size: int, name: str) -> np.ndarray:
    vec = np.asarray(values, dtype=float).reshape(-1)
    if vec.shape != (size,):
        raise DimensionMismatch(f"{name} must have length {size}, got {vec.size}")
    return vec


class Component(ABC):
    """One scalar function g_i(x, z); convex in z by contract."""

    kind: enums.ComponentKind
    convex_in_z: bool = True
    smooth_in_z: bool = True
    smooth_in_x: bool = True

    def __init__(self, n: int, m: int):
        self.n = n
        self.m = m

    @abstractmethod
    def value(self, x: np.ndarray, z: np.ndarray) -> float:
        pass

    @abstractmethod
    def gradients(self, x: np.ndarray, z: np.ndarray) -> GradientTriple:
        """Value, ∇_x g_i and ∇_z g_i at (x, z)."""
        pass

    def value_and_slope(self, x: np.ndarray, z: np.ndarray, dz: np.ndarray) -> Tuple[float, float]:
        """Value and the z-directional derivative ⟨∇_z g_i(x, z), dz⟩."""
        value, _, gz = self.gradients(x, z)
        return value, float(gz @ dz)

    def describe(self) -> str:
        return self.kind.value


class AffineComponent(Component):
    """g_i = ⟨w, x⟩ + ⟨c, z⟩ + d."""

    kind = enums.ComponentKind.AFFINE

    def __init__(self, w: Sequence[float], c: Sequence[float], d: float):
        w = np.asarray(w, dtype=float).reshape(-1)
        c = np.asarray(c, dtype=float).reshape(-1)
        super().__init__(w.size, c.size)
        self.w, self.c, self.d = w, c, float(d)

    def value(self, x, z):
        return float(self.w @ x + self.c @ z + self.d)

    def gradients(self, x, z):
        return self.value(x, z), self.w.copy(), self.c.copy()

    def value_and_slope(self, x, z, dz):
        return self.value(x, z), float(self.c @ dz)

    def describe(self) -> str:
        return f"affine(w={self.w.tolist()}, c={self.c.tolist()}, d={self.d})"


class SeparableComponent(Component):
    """g_i = a(x) + Σ_j q_j z_j² with q_j >= 0."""

    kind = enums.ComponentKind.SEPARABLE

    def __init__(self, a: ex.Expression, q: Sequence[float], n: int):
        q = np.asarray(q, dtype=float).reshape(-1)
        if np.any(q < 0.0):
            raise ProblemError(f"separable weights must be nonnegative, got {q.tolist()}")
        if a.references("z"):
            raise ProblemError(f"separable a(x) must not reference z: {a.to_source()}")
        super().__init__(n, q.size)
        self.a, self.q = a, q

    def value(self, x, z):
        return ex.evaluate(self.a, x, z) + float(self.q @ (z * z))

    def gradients(self, x, z):
        a_value, gx, _ = ex.evaluate_gradient(self.a, x, z)
        return a_value + float(self.q @ (z * z)), gx, 2.0 * self.q * z

    def value_and_slope(self, x, z, dz):
        return self.value(x, z), float(2.0 * (self.q * z) @ dz)

    def describe(self) -> str:
        return f"separable(a={self.a.to_source()}, q={self.q.tolist()})"


class BallComponent(Component):
    """g_i = ‖z‖ − c(x)."""

    kind = enums.ComponentKind.BALL

    def __init__(self, radius: ex.Expression, n: int, m: int):
        if radius.references("z"):
            raise ProblemError(f"ball radius must not reference z: {radius.to_source()}")
        super().__init__(n, m)
        self.radius = radius

    def value(self, x, z):
        return float(np.linalg.norm(z)) - ex.evaluate(self.radius, x, z)

    def gradients(self, x, z):
        c, gc, _ = ex.evaluate_gradient(self.radius, x, z)
        norm = float(np.linalg.norm(z))
        gz = z / norm if norm > 0.0 else np.zeros(self.m)
        return norm - c, -gc, gz

    def value_and_slope(self, x, z, dz):
        norm = float(np.linalg.norm(z))
        slope = float(z @ dz) / norm if norm > 0.0 else float(np.linalg.norm(dz))
        return norm - ex.evaluate(self.radius, x, z), slope

    def describe(self) -> str:
        return f"ball(radius={self.radius.to_source()})"


class ExpressionComponent(Component):
    kind = enums.ComponentKind.EXPR

    def __init__(self, expr: ex.Expression, n: int, m: int, convex: bool = True):
        if expr.max_index("x") > n or expr.max_index("z") > m:
            raise DimensionMismatch(f"expression {expr.to_source()!r} references variables beyond n={n}, m={m}")
        super().__init__(n, m)
        self.expr = expr
        self.convex_in_z = convex

    def value(self, x, z):
        return ex.evaluate(self.expr, x, z)

    def gradients(self, x, z):
        return ex.evaluate_gradient(self.expr, x, z)

    def value_and_slope(self, x, z, dz):
        return ex.evaluate_directional(self.expr, x, z, dz)

    def describe(self) -> str:
        return f"expr({self.expr.to_source()})"


class StandardizedComponent(Component):
    """g̃_i(x, z) = g_i(x, D⁻¹z + μ) for a diagonal scaling D."""

    def __init__(self, inner: Component, mean: np.ndarray, inv_scale: np.ndarray):
        super().__init__(inner.n, inner.m)
        self.inner = inner
        self.mean = mean
        self.inv_scale = inv_scale
        self.kind = inner.kind
        self.convex_in_z = inner.convex_in_z
        self.smooth_in_z = inner.smooth_in_z
        self.smooth_in_x = inner.smooth_in_x

    def _original(self, z: np.ndarray) -> np.ndarray:
        return self.inv_scale * z + self.mean

    def value(self, x, z):
        return self.inner.value(x, self._original(z))

    def gradients(self, x, z):
        value, gx, gz = self.inner.gradients(x, self._original(z))
        return value, gx, self.inv_scale * gz

    def value_and_slope(self, x, z, dz):
        return self.inner.value_and_slope(x, self._original(z), self.inv_scale * dz)

    def describe(self) -> str:
        return f"standardized({self.inner.describe()})"


class InequalitySystem:
    """g(x, z) = max_i g_i(x, z) over p >= 1 components; immutable."""

    def __init__(self, n: int, m: int, components: Sequence[Component]):
        if n < 1 or m < 1:
            raise DimensionMismatch(f"dimensions must be positive, got n={n}, m={m}")
        if not components:
            raise ProblemError("an inequality system needs at least one component")
        for i, component in enumerate(components):
            if component.n != n or component.m != m:
                raise DimensionMismatch(
                    f"component {i} ({component.describe()}) has dimensions "
                    f"n={component.n}, m={component.m}; system expects n={n}, m={m}"
                )
        self.n = n
        self.m = m
        self.components: Tuple[Component, ...] = tuple(components)

    @property
    def p(self) -> int:
        return len(self.components)

    @property
    def smooth_in_x(self) -> bool:
        return all(c.smooth_in_x for c in self.components)

    def _component(self, i: int) -> Component:
        if not 0 <= i < self.p:
            raise DimensionMismatch(f"component index {i} out of range for p={self.p}")
        return self.components[i]

    def _point(self, x, z) -> Tuple[np.ndarray, np.ndarray]:
        return as_vector(x, self.n, "x"), as_vector(z, self.m, "z")

    def eval_component(self, i: int, x, z) -> float:
        x, z = self._point(x, z)
        return self._component(i).value(x, z)

    def grad_x_component(self, i: int, x, z) -> np.ndarray:
        x, z = self._point(x, z)
        return self._component(i).gradients(x, z)[1]

    def grad_z_component(self, i: int, x, z) -> np.ndarray:
        x, z = self._point(x, z)
        return self._component(i).gradients(x, z)[2]

    def values(self, x, z) -> np.ndarray:
        x, z = self._point(x, z)
        return np.array([c.value(x, z) for c in self.components])

    def value(self, x, z) -> float:
        return float(np.max(self.values(x, z)))

    def active_indices(self, x, z, tolerance: float = 0.0) -> Tuple[int, ...]:
        values = self.values(x, z)
        top = float(np.max(values))
        return tuple(int(i) for i in np.flatnonzero(values >= top - tolerance * (1.0 + abs(top))))

    def describe(self) -> str:
        return " | ".join(c.describe() for c in self.components)


def verify_gradients(system: InequalitySystem, x, z, step: float = 1e-5) -> float:
    """Largest relative gap between declared gradients and central differences."""
    x, z = system._point(x, z)
    worst = 0.0
    for component in system.components:
        _, gx, gz = component.gradients(x, z)
        point = np.concatenate([x, z])
        declared = np.concatenate([gx, gz])
        for k in range(point.size):
            up, down = point.copy(), point.copy()
            up[k] += step
            down[k] -= step
            fd = (component.value(up[:system.n], up[system.n:])
                  - component.value(down[:system.n], down[system.n:])) / (2.0 * step)
            worst = max(worst, abs(fd - declared[k]) / max(1.0, abs(declared[k])))
    return worst


def spot_check_convexity(system: InequalitySystem, x, rng: np.random.Generator,
                         probes: int = 100, radius: float = 3.0,
                         slack: float = 1e-10) -> Tuple[bool, float, Optional[int]]:
    """Random midpoint test of convexity in z for declared-convex components.

    Returns (ok, worst excess, offending component index or None).
    """
    x = as_vector(x, system.n, "x")
    worst, offender = 0.0, None
    for _ in range(probes):
        z1 = rng.uniform(-radius, radius, system.m)
        z2 = rng.uniform(-radius, radius, system.m)
        lam = float(rng.uniform(0.0, 1.0))
        mid = lam * z1 + (1.0 - lam) * z2
        for i, component in enumerate(system.components):
            if not component.convex_in_z:
                continue
            excess = component.value(x, mid) - (lam * component.value(x, z1) + (1.0 - lam) * component.value(x, z2))
            scale = 1.0 + abs(component.value(x, z1)) + abs(component.value(x, z2))
            if excess / scale > worst:
                worst, offender = excess / scale, i
    return worst <= slack, worst, offender


# h(s) = -1 - 4 log(1 - Φ(s)) is held constant above this argument
EXAMPLE_CLAMP = 8.0


def example_alpha(x: float) -> Tuple[float, float]:
    """α(x) = x² for x >= 0 and 0 otherwise, with α′."""
    if x <= 0.0:
        return 0.0, 0.0
    return x * x, 2.0 * x


def example_h(s: float) -> Tuple[float, float]:
    """h(s) and h′(s) = 4 φ(s) / (1 − Φ(s)), tail-accurate via log(1 − Φ)."""
    if s > EXAMPLE_CLAMP:
        return example_h(EXAMPLE_CLAMP)[0], 0.0
    log_sf = distributions.log_normal_sf(s)
    log_pdf = -0.5 * s * s - 0.5 * math.log(2.0 * math.pi)
    return -1.0 - 4.0 * log_sf, 4.0 * math.exp(log_pdf - log_sf)


class NonLipschitzExampleComponent(Component):
    """g(x, z₁, z₂) = α(x) e^{h(z₁)} + z₂ − 1 with n = 1, m = 2."""

    kind = enums.ComponentKind.NONLIPSCHITZ_EXAMPLE

    def __init__(self):
        super().__init__(1, 2)

    def value(self, x, z):
        alpha, _ = example_alpha(float(x[0]))
        h, _ = example_h(float(z[0]))
        return alpha * math.exp(h) + float(z[1]) - 1.0

    def gradients(self, x, z):
        alpha, alpha_prime = example_alpha(float(x[0]))
        h, h_prime = example_h(float(z[0]))
        eh = math.exp(h)
        return alpha * eh + float(z[1]) - 1.0, np.array([alpha_prime * eh]), np.array([alpha * eh * h_prime, 1.0])

    def value_and_slope(self, x, z, dz):
        alpha, _ = example_alpha(float(x[0]))
        h, h_prime = example_h(float(z[0]))
        eh = math.exp(h)
        return alpha * eh + float(z[1]) - 1.0, alpha * eh * h_prime * float(dz[0]) + float(dz[1])

    def describe(self) -> str:
        return "nonlipschitz_example(alpha(x)*exp(h(z1)) + z2 - 1)"
