from pydantic import BaseModel, Field


class SignalSidecar(BaseModel):
    """JSON companion of a little-endian complex128 sample file."""

    kind: str
    d: int
    n: int
    half_width: float
    domain: str = Field(default="spatial", description="'spatial' samples or 'spectral' coefficients")
    dtype: str = "<c16"
    seed: int | None = None
    params: dict[str, float | int | list[float] | list[list[float]]] = Field(default_factory=dict)


class NormRow(BaseModel):
    kind: str
    alpha: float
    p: str
    q: str
    s: float
    grid: str
    signal_id: str
    norm: float
    n_patches: int
