from pathlib import Path

import numpy as np

from app.models.signal import GridSpec, Signal, SpectralSignal
from app.repositories.base import BaseRepository
from app.schemas.signal import SignalSidecar


class SignalRepository(BaseRepository[SignalSidecar]):
    """Samples as little-endian complex128 `<name>.bin` next to a `<name>.json` sidecar."""

    def __init__(self, root: str | Path):
        super().__init__(SignalSidecar, root)

    def save_samples(self, name: str, data: Signal | SpectralSignal, sidecar: SignalSidecar) -> Path:
        values = data.samples if isinstance(data, Signal) else data.coeffs
        path = self.path(f"{name}.bin")
        path.parent.mkdir(parents=True, exist_ok=True)
        np.ascontiguousarray(values, dtype="<c16").tofile(path)
        self.save(f"{name}.json", sidecar)
        return path

    def load_samples(self, name: str) -> tuple[Signal | SpectralSignal, SignalSidecar]:
        stem = name[:-4] if name.endswith(".bin") else name
        sidecar = self.get(f"{stem}.json")
        if sidecar is None:
            raise FileNotFoundError(f"Missing sidecar {self.path(stem + '.json')}")
        grid = GridSpec(sidecar.d, sidecar.n, sidecar.half_width)
        values = np.fromfile(self.path(f"{stem}.bin"), dtype=sidecar.dtype).reshape(grid.shape)
        if sidecar.domain == "spectral":
            return SpectralSignal(grid, values), sidecar
        return Signal(grid, values), sidecar
