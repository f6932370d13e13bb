from enum import Enum


class SamplerKind(Enum):
    MC = "mc"
    QMC = "qmc"


class Command(Enum):
    EVAL = "eval"
    GRAD = "grad"
    SUBDIFF = "subdiff"
    ORACLE = "oracle"
    CHECK = "check"
    EXAMPLE = "example"


class OutputFormat(Enum):
    JSON = "json"
    CSV = "csv"


class RadiusKind(Enum):
    FINITE = "finite"
    EFFECTIVELY_INFINITE = "effectively_infinite"


class TiePolicy(Enum):
    LOWEST_INDEX = "lowest"
    HIGHEST_INDEX = "highest"
    MAX_COORDINATE = "max"
    MIN_COORDINATE = "min"


class GrowthEnvelope(Enum):
    NICE = "nice"
    EXPONENTIAL = "exponential"


class DifferentiabilityVerdict(Enum):
    STRICT_DIFFERENTIABLE = "strict-differentiable"
    LIPSCHITZ_ONLY = "lipschitz-only"
    UNKNOWN = "unknown"


class ComponentKind(Enum):
    EXPR = "expr"
    AFFINE = "affine"
    BALL = "ball"
    SEPARABLE = "separable"
    NONLIPSCHITZ_EXAMPLE = "nonlipschitz_example"
