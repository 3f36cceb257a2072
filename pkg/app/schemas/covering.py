from pydantic import BaseModel, Field

from app.schemas.bapu import WindowDescriptor


class PatchRatio(BaseModel):
    id: str
    ratio_min: float = Field(description="min over x in Q of mu(Q) / <x>^(alpha d)")
    ratio_max: float = Field(description="max over x in Q of mu(Q) / <x>^(alpha d)")


class CoveringCertificate(BaseModel):
    n0: int = Field(description="Largest number of patches met by a single patch, itself included")
    ratio_K: float = Field(description="Largest R_Q / r_Q")
    ratio_min: float
    ratio_max: float
    ratio_spread: float = Field(description="ratio_max / ratio_min across all retained patches")
    complete: bool = Field(description="Every sample of B(0, trunc_radius) lies inside some patch")
    sample_points: int
    uncovered_points: int = 0
    patch_ratios: list[PatchRatio] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.complete


class PatchDocument(BaseModel):
    id: str
    index: list[int]
    shape: str
    params: dict[str, float | list[float]]
    xi: list[float]


class CoveringSummary(BaseModel):
    n0: int
    K: float
    ratio_spread: float
    complete: bool


class WindowDocument(WindowDescriptor):
    patch_id: str


class CoveringDocument(BaseModel):
    family: str
    alpha: float
    r: float
    d: int
    trunc_radius: float
    patches: list[PatchDocument]
    certificate: CoveringSummary | None = None
    windows: list[WindowDocument] | None = None


class CountingReport(BaseModel):
    omega_ratio_max: float = Field(description="max_i |Omega_i| / <xi_i>^(d (alpha2 - alpha1))")
    omega_upper_ratio_max: float = Field(description="Same statistic from the circumscribed-ball over-approximation")
    lambda_max: int = Field(description="max_j |Lambda_j|")
    comparability: float = Field(description="Smallest C with <xi_i> / <xi_j> in [1/C, C] for j in Omega_i")
    fine_patches: int
    coarse_patches: int
