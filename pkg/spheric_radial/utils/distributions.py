"""One-dimensional kernels: the Chi law of the radius and the standard normal.

The Chi distribution with m degrees of freedom is the law of the norm of an
m-dimensional standard Gaussian vector. Its CDF is the regularized lower
incomplete gamma function with shape m/2 evaluated at t²/2.
"""
import math
from typing import Union

from scipy import special

from ..models.errors import NegativeArgument, OutOfRange

# Above this radius F_η is 1 in double precision for every m used here.
CDF_SATURATION = 40.0

Real = Union[int, float]


class ChiDistribution:
    """Chi distribution with `degrees` degrees of freedom; immutable."""

    __slots__ = ("_degrees", "_log_normalizer")

    def __init__(self, degrees: int):
        if int(degrees) != degrees or degrees < 1:
            raise OutOfRange(f"Chi degrees of freedom must be a positive integer, got {degrees}")
        self._degrees = int(degrees)
        half = 0.5 * self._degrees
        # K = 1 / (2^{m/2-1} Γ(m/2))
        self._log_normalizer = -((half - 1.0) * math.log(2.0) + special.gammaln(half))

    @property
    def degrees(self) -> int:
        return self._degrees

    @property
    def normalizer(self) -> float:
        return math.exp(self._log_normalizer)

    def pdf(self, t: Real) -> float:
        _require_nonnegative(t)
        if math.isinf(t):
            return 0.0
        if t == 0.0:
            return self.normalizer if self._degrees == 1 else 0.0
        return math.exp(self._log_normalizer + (self._degrees - 1) * math.log(t) - 0.5 * t * t)

    def cdf(self, t: Real) -> float:
        _require_nonnegative(t)
        if t > CDF_SATURATION:
            return 1.0
        return float(special.gammainc(0.5 * self._degrees, 0.5 * t * t))

    def sf(self, t: Real) -> float:
        _require_nonnegative(t)
        if math.isinf(t):
            return 0.0
        return float(special.gammaincc(0.5 * self._degrees, 0.5 * t * t))

    def quantile(self, p: Real) -> float:
        if not 0.0 <= p < 1.0:
            raise OutOfRange(f"Chi quantile level must lie in [0, 1), got {p}")
        if p == 0.0:
            return 0.0
        half = 0.5 * self._degrees
        if p > 0.5:
            y = special.gammainccinv(half, 1.0 - p)
        else:
            y = special.gammaincinv(half, p)
        return math.sqrt(2.0 * float(y))

    def tail_quantile(self, q: Real) -> float:
        """Radius t with 1 - F_η(t) = q, computed without forming 1 - q."""
        if not 0.0 < q <= 1.0:
            raise OutOfRange(f"Chi tail probability must lie in (0, 1], got {q}")
        if q == 1.0:
            return 0.0
        return math.sqrt(2.0 * float(special.gammainccinv(0.5 * self._degrees, q)))

    def __eq__(self, other) -> bool:
        return isinstance(other, ChiDistribution) and other._degrees == self._degrees

    def __hash__(self) -> int:
        return hash(("chi", self._degrees))

    def __repr__(self) -> str:
        return f"ChiDistribution(degrees={self._degrees})"


def _require_nonnegative(t: Real):
    if math.isnan(t) or t < 0.0:
        raise NegativeArgument(f"Chi kernels are defined for t >= 0, got {t}")


def chi_pdf(d: ChiDistribution, t: Real) -> float:
    return d.pdf(t)


def chi_cdf(d: ChiDistribution, t: Real) -> float:
    return d.cdf(t)


def chi_quantile(d: ChiDistribution, p: Real) -> float:
    return d.quantile(p)


def chi_tail_quantile(d: ChiDistribution, q: Real) -> float:
    return d.tail_quantile(q)


def normal_cdf(t: Real) -> float:
    return float(special.ndtr(t))


def normal_sf(t: Real) -> float:
    """1 - Φ(t), accurate in the upper tail."""
    return float(special.ndtr(-t))


def log_normal_sf(t: Real) -> float:
    """log(1 - Φ(t)) without cancellation for large t."""
    return float(special.log_ndtr(-t))


def normal_pdf(t: Real) -> float:
    return math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)


def normal_quantile(p: Real) -> float:
    if not 0.0 < p < 1.0:
        raise OutOfRange(f"Normal quantile level must lie in (0, 1), got {p}")
    return float(special.ndtri(p))
