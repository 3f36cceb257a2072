import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gamma

from app.core.constants import ShapeKind


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / gamma(d / 2 + 1)


def japanese(x: np.ndarray | float) -> np.ndarray | float:
    """<x> = (1 + |x|^2)^(1/2) for scalars or arrays of norms."""
    return np.sqrt(1.0 + np.square(x))


@dataclass(frozen=True)
class FrequencyPatch:
    """
    A closed frequency patch Q with a designated point xi_Q.

    `size` is the radius of a ball, the half side of a cube or the outer
    radius of an annulus; `inner` is only used by annuli. Annuli and `ball0`
    patches are centred at the origin.
    """

    id: str
    index: tuple[int, ...]
    shape: ShapeKind
    center: tuple[float, ...]
    size: float
    inner: float = 0.0
    xi: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError(f"Patch {self.id}: size must be positive, got {self.size}")
        if self.shape == ShapeKind.ANNULUS and not 0 <= self.inner < self.size:
            raise ValueError(f"Patch {self.id}: annulus needs 0 <= inner < outer, got [{self.inner}, {self.size}]")
        if self.xi is None:
            object.__setattr__(self, "xi", self._default_xi())
        if not self.contains_closed(np.asarray(self.xi, dtype=float)):
            raise ValueError(f"Patch {self.id}: designated point {self.xi} lies outside the patch")

    def _default_xi(self) -> tuple[float, ...]:
        if self.shape == ShapeKind.ANNULUS:
            point = [0.0] * self.dim
            point[0] = 0.5 * (self.inner + self.size)
            return tuple(point)
        return tuple(self.center)

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    def inner_outer_radius(self) -> tuple[float, float]:
        if self.shape in (ShapeKind.BALL, ShapeKind.BALL0):
            return self.size, self.size
        if self.shape == ShapeKind.CUBE:
            return self.size, self.size * math.sqrt(self.dim)
        return (self.size - self.inner) / 2, self.size

    def radial_extent(self) -> tuple[float, float]:
        """Smallest and largest |x| over the patch."""
        if self.shape == ShapeKind.ANNULUS:
            return self.inner, self.size
        c = np.abs(self.center_array)
        if self.shape == ShapeKind.CUBE:
            near = float(np.linalg.norm(np.maximum(c - self.size, 0.0)))
            far = float(np.linalg.norm(c + self.size))
            return near, far
        distance = float(np.linalg.norm(c))
        return max(0.0, distance - self.size), distance + self.size

    def bounding_ball(self) -> tuple[np.ndarray, float]:
        if self.shape == ShapeKind.ANNULUS:
            return np.zeros(self.dim), self.size
        return self.center_array, self.inner_outer_radius()[1]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.shape == ShapeKind.ANNULUS:
            return np.full(self.dim, -self.size), np.full(self.dim, self.size)
        c = self.center_array
        return c - self.size, c + self.size

    def measure(self) -> float:
        d = self.dim
        if self.shape == ShapeKind.CUBE:
            return (2 * self.size) ** d
        if self.shape == ShapeKind.ANNULUS:
            return unit_ball_volume(d) * (self.size ** d - self.inner ** d)
        return unit_ball_volume(d) * self.size ** d

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Interior membership for an (N, d) array of points."""
        points = np.atleast_2d(points)
        if self.shape == ShapeKind.CUBE:
            return np.max(np.abs(points - self.center_array), axis=1) < self.size
        if self.shape == ShapeKind.ANNULUS:
            radius = np.linalg.norm(points, axis=1)
            return (radius > self.inner) & (radius < self.size)
        return np.linalg.norm(points - self.center_array, axis=1) < self.size

    def contains_closed(self, point: np.ndarray) -> bool:
        slack = 1e-9 * max(1.0, self.size)
        if self.shape == ShapeKind.CUBE:
            return bool(np.max(np.abs(point - self.center_array)) <= self.size + slack)
        if self.shape == ShapeKind.ANNULUS:
            radius = float(np.linalg.norm(point))
            return self.inner - slack <= radius <= self.size + slack
        return bool(np.linalg.norm(point - self.center_array) <= self.size + slack)

    def with_xi(self, xi: tuple[float, ...]) -> "FrequencyPatch":
        return replace(self, xi=tuple(float(v) for v in xi))
