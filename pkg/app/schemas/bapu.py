from pydantic import BaseModel, Field

from app.core.constants import WindowForm


class WindowDescriptor(BaseModel):
    """Analytic form of a window; samples are regenerated from a grid."""

    form: WindowForm
    center: list[float] = Field(default_factory=list)
    scale: float = 0.0
    support_scale: float = 1.0
    level: int | None = None
    plateau_r: float | None = None


class BapuCertificate(BaseModel):
    sum_error: float = Field(description="max |sum psi - 1| over B(0, trunc_radius)")
    square_sum_min: float = Field(description="min of sum psi^2 over B(0, trunc_radius)")
    square_sum_bound: float = Field(description="0.99 / n0^2")
    value_range: tuple[float, float]
    support_ok: bool
    passed: bool


class OrderSlope(BaseModel):
    order: int
    max_value: float
    slope: float
    fitted_windows: int
    passed: bool


class DerivativeScalingReport(BaseModel):
    orders: list[OrderSlope]
    passed: bool


class FourierGrowthReport(BaseModel):
    p: str
    max_value: float
    min_value: float
    spread: float
    slope: float
    fitted_windows: int
    parseval_error: float | None = Field(default=None, description="Only for p = 2")
    passed: bool
