from dataclasses import dataclass, field

import numpy as np

from app.core.constants import WindowForm
from app.models.covering import Covering
from app.models.signal import GridSpec
from app.schemas.bapu import WindowDescriptor


@dataclass(eq=False)
class WindowSymbol:
    """
    A window psi_Q sampled on the spectral grid.

    Samples are kept on the smallest index box holding the support: `origin`
    is the centred frequency index of the first sample along each axis.
    """

    patch_id: str
    descriptor: WindowDescriptor
    origin: tuple[int, ...]
    values: np.ndarray
    xi: tuple[float, ...]
    level: int | None = None

    @property
    def form(self) -> WindowForm:
        return self.descriptor.form

    @property
    def box_shape(self) -> tuple[int, ...]:
        return self.values.shape

    def axis_indices(self, axis: int) -> np.ndarray:
        return self.origin[axis] + np.arange(self.values.shape[axis])

    def grid_slices(self, grid: GridSpec) -> tuple[np.ndarray, ...]:
        """Open-mesh positions of the box inside FFT-ordered arrays."""
        return np.ix_(*[self.axis_indices(a) % grid.n for a in range(grid.d)])

    def frequencies(self, grid: GridSpec) -> tuple[np.ndarray, ...]:
        axes = [self.axis_indices(a) * grid.dxi for a in range(grid.d)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def restrict(self, array: np.ndarray, grid: GridSpec) -> np.ndarray:
        return array[self.grid_slices(grid)]

    def dense(self, grid: GridSpec) -> np.ndarray:
        out = np.zeros(grid.shape)
        out[self.grid_slices(grid)] = self.values
        return out


@dataclass(eq=False)
class Bapu:
    """Windows subordinate to `covering`, summing to one on B(0, covering.trunc_radius)."""

    covering: Covering
    grid: GridSpec
    windows: tuple[WindowSymbol, ...]
    plateau_ids: frozenset[str] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.windows)

    def window(self, patch_id: str) -> WindowSymbol:
        for window in self.windows:
            if window.patch_id == patch_id:
                return window
        raise KeyError(patch_id)

    def total(self) -> np.ndarray:
        out = np.zeros(self.grid.shape)
        for window in self.windows:
            out[window.grid_slices(self.grid)] += window.values
        return out

    def square_total(self) -> np.ndarray:
        out = np.zeros(self.grid.shape)
        for window in self.windows:
            out[window.grid_slices(self.grid)] += window.values ** 2
        return out
