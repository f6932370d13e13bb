"""Direction sets representing the uniform law on the unit sphere S^{m-1}.

Both samplers push Gaussian vectors through normalization. The QMC sampler
takes Owen-scrambled Sobol points (scipy's Joe-Kuo direction numbers), maps
them coordinatewise through Φ⁻¹ and normalizes.
"""
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special
from scipy.stats import qmc

from ...models import enums
from .. import logger_setup
from ..settings import AppSettings, settings

log = logger_setup.Logger(__name__)

_UNIT_LOW = 1e-15
_UNIT_HIGH = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True, eq=False)
class SphereSample:
    dim: int
    directions: np.ndarray  # (N, m), unit rows
    weights: np.ndarray  # (N,), all 1/N
    kind: enums.SamplerKind
    seed: Optional[int] = None
    sequence: Optional[int] = None
    replicates: int = 1
    blocks: Optional[np.ndarray] = None  # replicate id per direction when replicates > 1

    @property
    def size(self) -> int:
        return self.directions.shape[0]

    @property
    def tag(self) -> str:
        if self.kind == enums.SamplerKind.MC:
            return f"mc(seed={self.seed})"
        replicated = f", replicates={self.replicates}" if self.replicates > 1 else ""
        return f"qmc(sobol, seed={self.seed}, sequence={self.sequence}{replicated})"


def _normalize(gaussian: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(gaussian, axis=1)
    degenerate = norms == 0.0
    if np.any(degenerate):
        log.debug(f"{int(degenerate.sum())} zero Gaussian image(s) mapped to e1")
        gaussian = gaussian.copy()
        gaussian[degenerate] = 0.0
        gaussian[degenerate, 0] = 1.0
        norms[degenerate] = 1.0
    directions = gaussian / norms[:, None]
    directions.setflags(write=False)
    return directions


def _uniform_weights(size: int) -> np.ndarray:
    weights = np.full(size, 1.0 / size)
    weights.setflags(write=False)
    return weights


def _check(m: int, size: int):
    if m < 1:
        raise ValueError(f"sphere dimension must be >= 1, got {m}")
    if size < 1:
        raise ValueError(f"sample size must be >= 1, got {size}")


def _blocks(size: int, replicates: int) -> np.ndarray:
    sizes = [size // replicates + (1 if r < size % replicates else 0) for r in range(replicates)]
    return np.repeat(np.arange(replicates), sizes)


def sample_mc(m: int, size: int, seed: int) -> SphereSample:
    """`size` i.i.d. uniform directions; identical output for identical arguments."""
    _check(m, size)
    rng = np.random.default_rng(seed)
    directions = _normalize(rng.standard_normal((size, m)))
    return SphereSample(
        dim=m,
        directions=directions,
        weights=_uniform_weights(size),
        kind=enums.SamplerKind.MC,
        seed=seed,
    )


def _sobol_points(m: int, size: int, sequence: int, seed) -> np.ndarray:
    engine = qmc.Sobol(d=m, scramble=True, seed=seed)
    if sequence:
        engine.fast_forward(sequence * size)
    with warnings.catch_warnings():
        # balance warnings for sizes that are not powers of two
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(size)


def sample_qmc(m: int, size: int, sequence: int = 0, replicates: int = 1, seed: int = 0) -> SphereSample:
    """Deterministic low-discrepancy directions from Owen-scrambled Sobol points.

    The scrambling is drawn from `seed`, so equal arguments give equal output.
    With replicates >= 2 the sample consists of `replicates` independently
    scrambled point sets, which lets estimators report the spread of the
    replicate means as standard error.
    """
    _check(m, size)
    replicates = max(1, min(replicates, size))
    if replicates == 1:
        unit = _sobol_points(m, size, sequence, seed)
        blocks = None
    else:
        blocks = _blocks(size, replicates)
        streams = np.random.SeedSequence(seed).spawn(replicates)
        unit = np.concatenate([
            _sobol_points(m, int(np.sum(blocks == r)), sequence, np.random.default_rng(streams[r]))
            for r in range(replicates)
        ])
    unit = np.clip(unit, _UNIT_LOW, _UNIT_HIGH)
    return SphereSample(
        dim=m,
        directions=_normalize(special.ndtri(unit)),
        weights=_uniform_weights(size),
        kind=enums.SamplerKind.QMC,
        seed=seed,
        sequence=sequence,
        replicates=replicates,
        blocks=blocks,
    )


def make_sample(m: int, config: AppSettings = settings) -> SphereSample:
    """Sample described by the sampler fields of `config`."""
    if config.sampler == enums.SamplerKind.MC:
        return sample_mc(m, config.samples, config.seed)
    return sample_qmc(m, config.samples, config.sequence, config.replicates, config.seed)
