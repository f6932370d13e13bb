from pydantic_settings import BaseSettings, SettingsConfigDict

from ..models import enums


class AppSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="SPHERIC_RADIAL_")

    samples: int = 2**14
    sampler: enums.SamplerKind = enums.SamplerKind.QMC
    seed: int = 0
    replicates: int = 8
    sequence: int = 0
    tie_tolerance: float = 1e-9
    root_tolerance: float = 1e-10
    cutoff_tail_probability: float = 1e-12
    denominator_floor: float = 1e-14
    denominator_slack: float = 1e-10
    fd_step: float = 1e-4
    growth_level: float = 1.0
    growth_probes: int = 2000
    workers: int = 1
    chunk_size: int = 1024
    quad_tolerance: float = 1e-10
    condition_warning: float = 1e12
    log_level: str = "WARNING"


settings = AppSettings()
