from pydantic import BaseModel, Field


class RoundtripReport(BaseModel):
    relative_error: float = Field(description="||R(Df) - f||_L2 / ||f||_L2")
    coefficients: int
    patches: int
    passed: bool


class GramReport(BaseModel):
    max_deviation: float = Field(description="max |G - I| over the retained atoms of every patch")
    per_patch: dict[str, float]
    cutoff: int


class RatioInterval(BaseModel):
    n: int
    ratio_min: float
    ratio_max: float


class FrameNormReport(BaseModel):
    params: dict[str, str | float]
    intervals: list[RatioInterval]
    signals: int
    stable: bool = Field(description="Ratio interval end points agree across grids within the stability tolerance")
    passed: bool


class SynthesisReport(BaseModel):
    trials: int
    ratio_min: float = Field(description="min ||Rc||_M / ||c||_m over random sparse c")
    ratio_max: float
    passed: bool


class FrameSummary(BaseModel):
    roundtrip: RoundtripReport
    norm_equivalence: FrameNormReport
    gram: GramReport
    synthesis: SynthesisReport

    @property
    def passed(self) -> bool:
        return self.roundtrip.passed and self.norm_equivalence.passed and self.synthesis.passed
