import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from app.models.exponent import SpaceParams


@dataclass(frozen=True)
class GridSpec:
    """
    Uniform periodic grid on [-L, L)^d with n samples per axis.

    Spectral samples sit at xi_m = pi m / L for centred indices
    m in [-n/2, n/2); arrays are kept in FFT order.
    """

    d: int
    n: int
    half_width: float

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"Only d in (1, 2) is supported, got {self.d}")
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two, got {self.n}")
        if self.half_width <= 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def dx(self) -> float:
        return 2 * self.half_width / self.n

    @property
    def dxi(self) -> float:
        return math.pi / self.half_width

    @property
    def nyquist(self) -> float:
        return math.pi * self.n / (2 * self.half_width)

    def doubled(self) -> "GridSpec":
        return GridSpec(self.d, 2 * self.n, self.half_width)

    @cached_property
    def x_axis(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.n)

    @cached_property
    def index_axis(self) -> np.ndarray:
        """Centred integer frequency indices in FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(np.int64)

    @cached_property
    def xi_axis(self) -> np.ndarray:
        return self.index_axis * self.dxi

    @cached_property
    def sign(self) -> np.ndarray:
        """(-1)^(m_1 + ... + m_d) on the spectral grid."""
        axis = np.where(self.index_axis % 2 == 0, 1.0, -1.0)
        if self.d == 1:
            return axis
        return np.multiply.outer(axis, axis)

    @cached_property
    def xi_norm(self) -> np.ndarray:
        if self.d == 1:
            return np.abs(self.xi_axis)
        return np.hypot.outer(self.xi_axis, self.xi_axis)

    def x_mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.x_axis] * self.d), indexing="ij"))


@dataclass(eq=False)
class Signal:
    grid: GridSpec
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.shape != self.grid.shape:
            raise ValueError(f"Signal shape {self.samples.shape} does not match grid {self.grid.shape}")


@dataclass(eq=False)
class SpectralSignal:
    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(f"Spectrum shape {self.coeffs.shape} does not match grid {self.grid.shape}")

    def energy(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2) * self.grid.dxi ** self.grid.d)


@dataclass
class PieceNorms:
    """Weighted piece norms <xi_Q>^s and ||psi_Q(D) f||_Lp per patch id."""

    params: SpaceParams
    entries: dict[str, tuple[float, float]] = field(default_factory=dict)
    leaked_fraction: float = 0.0

    def weighted(self) -> np.ndarray:
        return np.array([weight * piece for weight, piece in self.entries.values()], dtype=float)
