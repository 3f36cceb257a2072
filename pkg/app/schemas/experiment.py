from pydantic import BaseModel, Field


class CorollaryRegion(BaseModel):
    sharp_upper_applies: bool = Field(description="1/p <= max(1/2, 1/q): the threshold for M_alpha1 into M_alpha2 is sharp")
    sharp_lower_applies: bool = Field(description="1/p >= min(1/2, 1/q): the threshold for M_alpha2 into M_alpha1 is sharp")


class EmbeddingRun(BaseModel):
    n: int
    half_width: float
    trunc_radius: float
    signals: int
    worst_ratio: float
    nu_worst_ratio: float


class EmbeddingReport(BaseModel):
    case: str
    d: int
    alpha1: float
    alpha2: float
    p: str
    q: str
    s: float
    direction: str
    shift: float = Field(description="d (alpha2 - alpha1) theta for the tested side")
    nu_shift: float = Field(description="Same shift with the older nu indices")
    runs: list[EmbeddingRun]
    stable: bool
    nu_not_larger: bool
    passed: bool


class EndpointRow(BaseModel):
    p: str
    q: str
    proof_shift: float
    theorem_shift: float
    consistent: bool
    report: EmbeddingReport


class EndpointReport(BaseModel):
    d: int
    alpha1: float
    alpha2: float
    s: float
    rows: list[EndpointRow]
    passed: bool


class GrowthRow(BaseModel):
    N: int
    norm_alpha1: float
    norm_alpha2: float
    ratio: float
    plateau_estimate: float = Field(description="(sum (t_i <xi_i>^t ||F^-1 vartheta_i||_Lp)^q)^(1/q)")


class GrowthTable(BaseModel):
    case: str
    t: float
    threshold: float
    eps: float
    bump_mode: str
    rows: list[GrowthRow]
    growth: float = Field(description="ratio(N_max) / ratio(N_min)")
    band: float = Field(description="max ratio / min ratio over the schedule")
    above_threshold: bool
    region: CorollaryRegion
    probing: bool = Field(description="Outside the region where the threshold is known to be sharp; never gates")
    subsequence_condition_met: bool
    bar_met: bool
    passed: bool
