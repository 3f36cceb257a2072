import math
from typing import Annotated

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_validator

from app.core.config import config
from app.core.constants import VALID_COVERING_FAMILIES, VALID_SIGNAL_KINDS, NormKind
from app.models.exponent import Exponent


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default_factory=lambda: config.default_seed)
    out: str = "out"


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    d: int = Field(default=1, ge=1, le=2)
    n: int = 4096
    half_width: float = Field(default=16 * math.pi, gt=0)


def _exponent(value: str | int | float) -> str:
    return str(Exponent.parse(value))


ExponentText = Annotated[str, BeforeValidator(_exponent)]


class CoveringRunConfig(RunConfig):
    family: str = "lattice_ball"
    d: int = Field(default=1, ge=1, le=2)
    alpha: float = Field(default=0.5, ge=0, le=1)
    r: float | None = Field(default=None, gt=0)
    trunc_radius: float = Field(default=50.0, ge=0)
    grid: GridConfig | None = Field(default=None, description="Sample and store BAPU descriptors on this grid")
    output: str = "covering.json"

    @field_validator("family")
    @classmethod
    def check_family(cls, value: str) -> str:
        if value not in VALID_COVERING_FAMILIES:
            raise ValueError(f"family must be one of {VALID_COVERING_FAMILIES}")
        return value


class SignalConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str = "random_bandlimited"
    path: str | None = Field(default=None, description="Load samples from this .bin file instead of generating")
    radius: float = 16.0
    sigma: float = 1.0
    center: list[float] | None = None
    frequency: list[float] | None = None

    @field_validator("kind")
    @classmethod
    def check_kind(cls, value: str) -> str:
        if value not in VALID_SIGNAL_KINDS:
            raise ValueError(f"kind must be one of {VALID_SIGNAL_KINDS}")
        return value


class NormSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: NormKind = NormKind.ALPHA
    alpha: float = Field(default=0.0, ge=0, le=1)
    p: ExponentText = "2"
    q: ExponentText = "2"
    s: float = 0.0


class NormRunConfig(RunConfig):
    grid: GridConfig = Field(default_factory=GridConfig)
    trunc_radius: float = Field(default=48.0, gt=0)
    signal: SignalConfig = Field(default_factory=SignalConfig)
    signal_id: str = "signal"
    norms: list[NormSpec] = Field(default_factory=lambda: [NormSpec()])
    output: str = "norms.csv"


class EmbedRunConfig(RunConfig):
    d: int = Field(default=1, ge=1, le=2)
    alpha1: float = Field(default=0.0, ge=0, le=1)
    alpha2: float = Field(default=1.0, ge=0, le=1)
    p: ExponentText = "2"
    q: ExponentText = "2"
    s: float = 0.0
    direction: str = "upper"
    endpoints: bool = False
    grid: GridConfig | None = None
    trunc_radius: float | None = Field(default=None, gt=0)
    signal_radius: float | None = Field(default=None, gt=0)
    signals: int = Field(default=8, ge=1)
    output: str = "embed.json"


class SharpnessRunConfig(RunConfig):
    d: int = Field(default=1, ge=1, le=2)
    alpha1: float = Field(default=0.0, ge=0, le=1)
    alpha2: float = Field(default=0.5, ge=0, le=1)
    p: ExponentText = "2"
    q: ExponentText = "2"
    s: float = 0.0
    t: float | None = None
    eps: float = Field(default=0.25, ge=0)
    mode: str | None = None
    n_list: list[int] = Field(default_factory=lambda: [4, 8, 16, 32, 64])
    n: int = 2 ** 17
    half_width: float = Field(default=40 * math.pi, gt=0)
    trunc_radius: float = Field(default=1200.0, gt=0)
    metric_r: float = Field(default=0.5, gt=0, lt=1)
    lattice_r: float = Field(default=2.0, gt=0)
    plateau_r: float = Field(default=0.95, gt=0, lt=2)
    bump_radius: float = Field(default=0.4, gt=0)
    output: str = "sharpness.csv"


class FrameRunConfig(RunConfig):
    alpha: float = Field(default=0.5, ge=0, lt=1)
    r: float | None = Field(default=None, gt=0)
    trunc_radius: float = Field(default=48.0, gt=0)
    grid: GridConfig = Field(default_factory=GridConfig)
    p: ExponentText = "2"
    q: ExponentText = "2"
    s: float = 0.0
    signals: int = Field(default=20, ge=1)
    signal_radius: float = Field(default=32.0, gt=0)
    gram_cutoff: int = Field(default=32, ge=1)
    output: str = "frame.json"
