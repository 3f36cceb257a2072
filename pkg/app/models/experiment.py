from dataclasses import dataclass

import numpy as np

from app.core.constants import BumpMode, EmbeddingDirection
from app.models.exponent import Exponent
from app.models.signal import GridSpec
from app.models.window import Bapu


@dataclass(frozen=True)
class EmbeddingCase:
    d: int
    alpha1: float
    alpha2: float
    p: Exponent
    q: Exponent
    s: float = 0.0
    direction: EmbeddingDirection = EmbeddingDirection.UPPER

    def __post_init__(self):
        if not 0.0 <= self.alpha1 <= self.alpha2 <= 1.0:
            raise ValueError(f"Need 0 <= alpha1 <= alpha2 <= 1, got ({self.alpha1}, {self.alpha2})")
        object.__setattr__(self, "p", Exponent.parse(self.p))
        object.__setattr__(self, "q", Exponent.parse(self.q))
        object.__setattr__(self, "direction", EmbeddingDirection(self.direction))

    @property
    def gap(self) -> float:
        return self.alpha2 - self.alpha1

    @property
    def key(self) -> str:
        return f"d={self.d},a1={self.alpha1:g},a2={self.alpha2:g},p={self.p},q={self.q},s={self.s:g},{self.direction.value}"


@dataclass(eq=False)
class ExtremalFamily:
    """Frequency bumps t_i * vartheta_i centred at xi_i with pairwise disjoint supports."""

    centers: np.ndarray
    weights: np.ndarray
    radii: np.ndarray
    bump_mode: BumpMode
    eps: float
    subsequence_condition_met: bool = False

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(eq=False)
class SharpnessSetup:
    """Grid and partitions shared by every family size of a growth table."""

    grid: GridSpec
    bapu1: Bapu
    bapu2: Bapu
    plateau_r: float
    bump_radius: float

    @property
    def trunc_radius(self) -> float:
        return self.bapu2.covering.trunc_radius
