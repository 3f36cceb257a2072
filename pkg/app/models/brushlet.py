import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from app.models.covering import Covering
from app.models.signal import GridSpec, Signal
from app.models.window import Bapu


@dataclass(frozen=True)
class IntervalSpec:
    """A frequency interval [a, b] whose end points sit half-way between grid samples."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"Interval needs a < b, got [{self.a}, {self.b}]")

    @property
    def mu(self) -> float:
        return self.b - self.a

    @classmethod
    def snapped(cls, lo: float, hi: float, grid: GridSpec) -> "IntervalSpec":
        h = grid.dxi
        first = math.ceil(lo / h - 0.5)
        last = math.floor(hi / h - 0.5)
        if last < first:
            raise ValueError(f"Interval [{lo}, {hi}] holds no half-grid end points at spacing {h}")
        return cls((first + 0.5) * h, (last + 0.5) * h)

    def first_index(self, grid: GridSpec) -> int:
        return int(round(self.a / grid.dxi + 0.5))

    def count(self, grid: GridSpec) -> int:
        return int(round(self.mu / grid.dxi))

    def local_coordinate(self, grid: GridSpec) -> np.ndarray:
        """(xi - a) / mu at the grid samples inside the interval."""
        return (np.arange(self.count(grid)) + 0.5) / self.count(grid)

    def center_offset(self, n: int) -> float:
        """e_{n,I} = pi (n + 1/2) / mu."""
        return math.pi * (n + 0.5) / self.mu


@dataclass(eq=False)
class BrushletAtom:
    n: tuple[int, ...]
    k: tuple[int, ...]
    intervals: tuple[IntervalSpec, ...]
    samples: Signal
    spectrum_origin: tuple[int, ...]
    spectrum_values: np.ndarray


@dataclass(eq=False)
class CoeffArray:
    """
    Brushlet coefficients c_{n,k}, stored per lattice index k as a block over n.

    `blocks[k]` has shape `cutoff_n[k]`; entries outside the block are zero.
    """

    blocks: dict[tuple[int, ...], np.ndarray] = field(default_factory=dict)

    @property
    def cutoff_n(self) -> dict[tuple[int, ...], tuple[int, ...]]:
        return {k: block.shape for k, block in self.blocks.items()}

    def __getitem__(self, key: tuple[tuple[int, ...], tuple[int, ...]]) -> complex:
        n, k = key
        block = self.blocks.get(tuple(k))
        if block is None or any(i >= s for i, s in zip(n, block.shape)):
            return 0j
        return complex(block[tuple(n)])

    def entries(self) -> Iterator[tuple[tuple[int, ...], tuple[int, ...], complex]]:
        for k in sorted(self.blocks):
            block = self.blocks[k]
            for n in np.ndindex(block.shape):
                yield tuple(int(i) for i in n), k, complex(block[n])

    def size(self) -> int:
        return int(sum(block.size for block in self.blocks.values()))

    def __add__(self, other: "CoeffArray") -> "CoeffArray":
        keys = set(self.blocks) | set(other.blocks)
        out: dict[tuple[int, ...], np.ndarray] = {}
        for k in keys:
            a = self.blocks.get(k)
            b = other.blocks.get(k)
            if a is None or b is None:
                out[k] = (a if b is None else b).copy()
                continue
            shape = tuple(max(sa, sb) for sa, sb in zip(a.shape, b.shape))
            total = np.zeros(shape, dtype=np.complex128)
            total[tuple(slice(0, s) for s in a.shape)] += a
            total[tuple(slice(0, s) for s in b.shape)] += b
            out[k] = total
        return CoeffArray(out)

    def scaled(self, factor: complex) -> "CoeffArray":
        return CoeffArray({k: factor * block for k, block in self.blocks.items()})


@dataclass(eq=False)
class BrushletFrame:
    """
    Brushlet system on a cube covering: per lattice index k the snapped axis
    intervals of Q_k, the bell samples on each interval and the dual window
    samples laid out on the same interval box.
    """

    covering: Covering
    grid: GridSpec
    intervals: dict[tuple[int, ...], tuple[IntervalSpec, ...]]
    bells: dict[tuple[int, ...], tuple[np.ndarray, ...]]
    dual: Bapu
    dual_local: dict[tuple[int, ...], np.ndarray]

    @property
    def keys(self) -> list[tuple[int, ...]]:
        return sorted(self.intervals)

    def box_shape(self, k: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(interval.count(self.grid) for interval in self.intervals[k])

    def grid_slices(self, k: tuple[int, ...]) -> tuple[np.ndarray, ...]:
        axes = [interval.first_index(self.grid) + np.arange(interval.count(self.grid)) for interval in self.intervals[k]]
        return np.ix_(*[axis % self.grid.n for axis in axes])

    def bell(self, k: tuple[int, ...]) -> np.ndarray:
        """Tensor product of the per-axis bells on the interval box of Q_k."""
        out = np.ones(self.box_shape(k))
        for axis, values in enumerate(self.bells[k]):
            shape = [1] * len(self.bells[k])
            shape[axis] = values.size
            out = out * values.reshape(shape)
        return out
