import os

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Config(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="ALPHAMOD_")

    app_name: str = "AlphaModulationToolkit"
    debug: bool = False
    log_level: str = "INFO"

    # Parallelism (0 means one worker per CPU)
    threads: int = 0

    # Certification tolerances
    sum_to_one_tolerance: float = 1e-8
    leakage_tolerance: float = 1e-6
    slope_tolerance: float = 0.05
    stability_tolerance: float = 0.10
    boundary_epsilon: float = 1e-12

    # Covering sampling
    covering_sample_points: int = 4097
    covering_sample_points_2d: int = 257

    # Norm evaluation
    local_oversampling: int = 32

    # Brushlet frame
    coefficient_tail_energy: float = 1e-14
    roundtrip_tolerance: float = 1e-6
    bell_plateau: float = 0.05
    dual_support_scale: float = 0.8

    # Experiments
    default_seed: int = 7
    growth_factor: float = 2.0
    band_factor: float = 2.0

    @property
    def workers(self) -> int:
        if self.threads > 0:
            return self.threads
        return os.cpu_count() or 1


config = Config()
