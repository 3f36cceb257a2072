from dataclasses import dataclass, field

import numpy as np

from app.core.constants import CoveringFamily
from app.models.patch import FrequencyPatch
from app.schemas.covering import CoveringCertificate


@dataclass
class Covering:
    """An indexed family of frequency patches truncated to B(0, trunc_radius)."""

    family: CoveringFamily
    d: int
    alpha: float
    r: float
    trunc_radius: float
    patches: tuple[FrequencyPatch, ...]
    certificate: CoveringCertificate | None = None

    @property
    def beta(self) -> float:
        if self.alpha >= 1:
            return float("inf")
        return self.alpha / (1 - self.alpha)

    @property
    def height_n0(self) -> int | None:
        return self.certificate.n0 if self.certificate else None

    @property
    def ratio_K(self) -> float | None:
        return self.certificate.ratio_K if self.certificate else None

    def __len__(self) -> int:
        return len(self.patches)

    def position(self, patch_id: str) -> int:
        for i, patch in enumerate(self.patches):
            if patch.id == patch_id:
                return i
        raise KeyError(patch_id)

    def centers(self) -> np.ndarray:
        return np.array([patch.bounding_ball()[0] for patch in self.patches]).reshape(len(self.patches), self.d)

    def bounding_radii(self) -> np.ndarray:
        return np.array([patch.bounding_ball()[1] for patch in self.patches], dtype=float)


@dataclass
class NeighborMap:
    """Intersection structure between a fine covering (index i) and a coarse one (index j)."""

    omega: list[tuple[int, ...]]
    lam: list[tuple[int, ...]]
    omega_upper: list[int] = field(default_factory=list)
