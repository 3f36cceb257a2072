import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
from scipy import fft

from app.core.config import config
from app.core.constants import CoveringFamily
from app.core.exceptions import CertificationError
from app.models.brushlet import BrushletAtom, BrushletFrame, CoeffArray, IntervalSpec
from app.models.covering import Covering
from app.models.exponent import SpaceParams
from app.models.signal import GridSpec, Signal, SpectralSignal
from app.models.window import Bapu, WindowSymbol
from app.schemas.brushlet import FrameNormReport, GramReport, RatioInterval, RoundtripReport, SynthesisReport
from app.services.bapu_service import BapuService
from app.services.signal_service import SignalService, lq_sum
from app.services.symbols import bell

logger = logging.getLogger(__name__)


def _dct4(values: np.ndarray) -> np.ndarray:
    """Orthonormal DCT-IV over every axis, real and imaginary parts separately."""
    return fft.dctn(values.real, type=4, norm="ortho") + 1j * fft.dctn(values.imag, type=4, norm="ortho")


def coefficient_weight(k: tuple[int, ...], params: SpaceParams, d: int) -> float:
    """omega_k = |k|^((s + alpha d (1/2 - 1/p)) / (1 - alpha))."""
    if params.alpha >= 1:
        raise ValueError("Brushlet sequence spaces need alpha < 1")
    exponent = (params.s + params.alpha * d * (0.5 - float(params.p.recip))) / (1 - params.alpha)
    return float(np.linalg.norm(k)) ** exponent


class BrushletService:
    def __init__(self, signal_service: SignalService | None = None, bapu_service: BapuService | None = None):
        self.signal_service = signal_service or SignalService()
        self.bapu_service = bapu_service or BapuService(self.signal_service)
        self._atoms: dict[tuple, BrushletAtom] = {}
        self._atoms_lock = threading.Lock()

    # ------------------------------------------------------------------
    # Frame construction
    # ------------------------------------------------------------------

    def build_frame(self, covering: Covering, grid: GridSpec, flank: float | None = None,
                    dual_support_scale: float | None = None) -> BrushletFrame:
        """
        Brushlet system on a lattice cube covering.

        Each cube side is snapped inward to half-grid points, so the cosine
        packets on an interval form an exact DCT-IV basis of its samples. The
        dual windows are the cube BAPU shrunk to `dual_support_scale`, and the
        bell must equal one wherever a dual window is nonzero.
        """
        if covering.family != CoveringFamily.LATTICE_CUBE:
            raise ValueError(f"Brushlet frames need a lattice cube covering, got {covering.family.value}")
        flank = config.bell_plateau if flank is None else flank
        dual_support_scale = config.dual_support_scale if dual_support_scale is None else dual_support_scale

        dual = self.bapu_service.build_bapu(covering, grid, support_scale=dual_support_scale)
        intervals: dict[tuple[int, ...], tuple[IntervalSpec, ...]] = {}
        bells: dict[tuple[int, ...], tuple[np.ndarray, ...]] = {}
        for patch in covering.patches:
            k = tuple(patch.index)
            lo, hi = patch.bounding_box()
            intervals[k] = tuple(IntervalSpec.snapped(a, b, grid) for a, b in zip(lo, hi))
            bells[k] = tuple(bell(interval.local_coordinate(grid), flank) for interval in intervals[k])

        frame = BrushletFrame(covering=covering, grid=grid, intervals=intervals, bells=bells, dual=dual, dual_local={})
        for patch, window in zip(covering.patches, dual.windows):
            k = tuple(patch.index)
            local = self._embed(window, frame, k)
            if np.any(np.abs(frame.bell(k)[local > 0] - 1.0) > 1e-12):
                logger.error(f"Bell is not flat on the dual window of patch {patch.id}")
                raise CertificationError(f"Dual window of {patch.id} leaves the plateau of the bell")
            frame.dual_local[k] = local
        logger.info(f"Built brushlet frame on {len(intervals)} cubes (alpha={covering.alpha}, flank={flank})")
        return frame

    @staticmethod
    def _embed(window: WindowSymbol, frame: BrushletFrame, k: tuple[int, ...]) -> np.ndarray:
        """Lay the dual window samples out on the interval box of Q_k."""
        grid = frame.grid
        local = np.zeros(frame.box_shape(k))
        source, target = [], []
        for axis, interval in enumerate(frame.intervals[k]):
            first = interval.first_index(grid)
            start = max(window.origin[axis], first)
            stop = min(window.origin[axis] + window.values.shape[axis], first + interval.count(grid))
            if stop <= start:
                raise CertificationError(f"Dual window of {k} misses its interval box")
            source.append(slice(start - window.origin[axis], stop - window.origin[axis]))
            target.append(slice(start - first, stop - first))
        local[tuple(target)] = window.values[tuple(source)]
        if not math.isclose(float(local.sum()), float(window.values.sum()), rel_tol=1e-12):
            raise CertificationError(f"Dual window of {k} reaches outside its interval box")
        return local

    # ------------------------------------------------------------------
    # Atoms
    # ------------------------------------------------------------------

    def atom_spectrum(self, frame: BrushletFrame, n: tuple[int, ...], k: tuple[int, ...]) -> np.ndarray:
        """w_hat_{n,k} on the interval box of Q_k: prod_j sqrt(2/mu) g cos(pi (n_j + 1/2)(xi_j - a_j) / mu)."""
        grid = frame.grid
        out = np.ones(frame.box_shape(k))
        for axis, (interval, values) in enumerate(zip(frame.intervals[k], frame.bells[k])):
            offset = (np.arange(interval.count(grid)) + 0.5) * grid.dxi
            factor = math.sqrt(2 / interval.mu) * values * np.cos(interval.center_offset(n[axis]) * offset)
            shape = [1] * grid.d
            shape[axis] = factor.size
            out = out * factor.reshape(shape)
        return out

    def build_atom(self, n: tuple[int, ...], k: tuple[int, ...], frame: BrushletFrame) -> BrushletAtom:
        grid = frame.grid
        bells = b"".join(v.tobytes() for v in frame.bells.get(tuple(k), ()))
        key = (tuple(n), tuple(k), grid, frame.intervals.get(tuple(k)), bells)
        with self._atoms_lock:
            cached = self._atoms.get(key)
        if cached is not None:
            return cached
        if tuple(k) not in frame.intervals:
            raise KeyError(f"Lattice index {k} is not part of the frame")

        values = self.atom_spectrum(frame, n, k)
        spectrum = np.zeros(grid.shape, dtype=np.complex128)
        spectrum[frame.grid_slices(k)] = values
        atom = BrushletAtom(
            n=tuple(n),
            k=tuple(k),
            intervals=frame.intervals[k],
            samples=self.signal_service.fft_inverse(SpectralSignal(grid, spectrum)),
            spectrum_origin=tuple(interval.first_index(grid) for interval in frame.intervals[k]),
            spectrum_values=values,
        )
        with self._atoms_lock:
            self._atoms[key] = atom
        return atom

    # ------------------------------------------------------------------
    # Coefficient operator D and reconstruction R
    # ------------------------------------------------------------------

    def analyze(self, f: Signal | SpectralSignal, frame: BrushletFrame, tail_energy: float | None = None) -> CoeffArray:
        """
        c_{n,k} = (f, w_{n,k}) for every cube, truncated per cube to the smallest
        |n|_inf range whose omitted coefficients fit the cube's share of the
        `tail_energy` budget (a fraction of ||f||^2).
        """
        spectrum = f if isinstance(f, SpectralSignal) else self.signal_service.fft_forward(f)
        grid = frame.grid
        if spectrum.grid != grid:
            raise ValueError(f"Signal grid {spectrum.grid} does not match frame grid {grid}")
        tail_energy = config.coefficient_tail_energy if tail_energy is None else tail_energy
        keys = frame.keys
        budget = tail_energy * spectrum.energy() / max(len(keys), 1)
        scale = grid.dxi ** (grid.d / 2)

        def coefficients(k: tuple[int, ...]) -> np.ndarray | None:
            local = spectrum.coeffs[frame.grid_slices(k)] * frame.bell(k)
            block = scale * _dct4(local)
            energy = np.abs(block) ** 2
            total = float(energy.sum())
            if total <= budget:
                return None
            rings = np.indices(block.shape).max(axis=0)
            ring_energy = np.bincount(rings.ravel(), weights=energy.ravel())
            tail = np.append(np.cumsum(ring_energy[::-1])[::-1][1:], 0.0)
            cutoff = int(np.argmax(tail <= budget))
            return block[tuple(slice(0, cutoff + 1) for _ in block.shape)].copy()

        with ThreadPoolExecutor(max_workers=self.signal_service.workers) as pool:
            blocks = list(pool.map(coefficients, keys))
        coeffs = CoeffArray({k: b for k, b in zip(keys, blocks) if b is not None})
        logger.debug(f"Analyzed into {coeffs.size()} coefficients over {len(coeffs.blocks)} cubes")
        return coeffs

    def synthesize_spectrum(self, c: CoeffArray, frame: BrushletFrame) -> SpectralSignal:
        grid = frame.grid
        out = np.zeros(grid.shape, dtype=np.complex128)
        scale = grid.dxi ** (grid.d / 2)
        for k in sorted(c.blocks):
            if k not in frame.intervals:
                raise KeyError(f"Coefficient block {k} has no cube in the frame")
            block = c.blocks[k]
            shape = frame.box_shape(k)
            if any(b > s for b, s in zip(block.shape, shape)):
                raise ValueError(f"Coefficient block {k} of shape {block.shape} exceeds the cube's {shape} atoms")
            padded = np.zeros(shape, dtype=np.complex128)
            padded[tuple(slice(0, b) for b in block.shape)] = block
            out[frame.grid_slices(k)] += frame.dual_local[k] * frame.bell(k) * _dct4(padded) / scale
        return SpectralSignal(grid, out)

    def synthesize(self, c: CoeffArray, frame: BrushletFrame) -> Signal:
        """R c = sum c_{n,k} psi_k(D) w_{n,k}, summed in lattice order."""
        return self.signal_service.fft_inverse(self.synthesize_spectrum(c, frame))

    def sequence_norm(self, c: CoeffArray, params: SpaceParams, d: int) -> float:
        """Inner l^p over n, outer l^q over k with the weight omega_k."""
        keys = sorted(c.blocks)
        outer = np.array([
            coefficient_weight(k, params, d) * lq_sum(c.blocks[k].ravel(), params.p) for k in keys
        ])
        return lq_sum(outer, params.q)

    # ------------------------------------------------------------------
    # Reports
    # ------------------------------------------------------------------

    def roundtrip_report(self, f: SpectralSignal, frame: BrushletFrame, tolerance: float | None = None) -> RoundtripReport:
        tolerance = config.roundtrip_tolerance if tolerance is None else tolerance
        c = self.analyze(f, frame)
        restored = self.synthesize_spectrum(c, frame)
        error = SpectralSignal(f.grid, restored.coeffs - f.coeffs).energy()
        norm = f.energy()
        relative = math.sqrt(error / norm) if norm > 0 else math.sqrt(error)
        logger.info(f"Brushlet roundtrip: relative error {relative:.3e} with {c.size()} coefficients")
        return RoundtripReport(relative_error=relative, coefficients=c.size(), patches=len(c.blocks),
                               passed=relative <= tolerance)

    def worst_roundtrip(self, signals: Sequence[SpectralSignal], frame: BrushletFrame,
                        tolerance: float | None = None) -> RoundtripReport:
        """The roundtrip report with the largest relative error over a signal family."""
        if not signals:
            raise ValueError("Roundtrip needs at least one signal")
        reports = [self.roundtrip_report(f, frame, tolerance) for f in signals]
        return max(reports, key=lambda report: report.relative_error)

    def gram_deviation(self, frame: BrushletFrame, cutoff: int = 32) -> GramReport:
        """max |<w_n, w_m> - delta_nm| over n, m below `cutoff` per axis, for every cube."""
        per_patch = {}
        for patch in frame.covering.patches:
            k = tuple(patch.index)
            full = np.ones((1, 1))
            for interval, values in zip(frame.intervals[k], frame.bells[k]):
                size = values.size
                basis = fft.dct(np.eye(size), type=4, norm="ortho", axis=0)[:, :min(cutoff, size)]
                full = np.kron(full, basis.T @ (values[:, None] ** 2 * basis))
            per_patch[patch.id] = float(np.abs(full - np.eye(full.shape[0])).max())
        return GramReport(max_deviation=max(per_patch.values(), default=0.0), per_patch=per_patch, cutoff=cutoff)

    def frame_norm_equivalence_report(
        self,
        covering: Covering,
        grid: GridSpec,
        params: SpaceParams,
        signals: Callable[[GridSpec], Sequence[SpectralSignal]],
    ) -> FrameNormReport:
        """
        ||f||_M / ||Df||_m over a signal family, on `grid` and on the doubled grid.

        `signals` builds the same family on any grid; the M-norm uses the cube BAPU.
        """
        intervals = []
        count = 0
        for g in (grid, grid.doubled()):
            frame = self.build_frame(covering, g)
            bapu = self.bapu_service.build_bapu(covering, g)
            ratios = []
            for f in signals(g):
                function_norm = self.signal_service.alpha_modulation_norm(f, bapu, params)[0]
                sequence = self.sequence_norm(self.analyze(f, frame), params, g.d)
                if sequence > 0:
                    ratios.append(function_norm / sequence)
            count = len(ratios)
            intervals.append(RatioInterval(n=g.n, ratio_min=min(ratios, default=0.0), ratio_max=max(ratios, default=0.0)))

        first, second = intervals
        tol = config.stability_tolerance
        stable = (
            count > 0
            and math.isclose(first.ratio_min, second.ratio_min, rel_tol=tol)
            and math.isclose(first.ratio_max, second.ratio_max, rel_tol=tol)
        )
        return FrameNormReport(
            params={"alpha": params.alpha, "p": str(params.p), "q": str(params.q), "s": params.s},
            intervals=intervals,
            signals=count,
            stable=stable,
            passed=stable and first.ratio_min > 0,
        )

    def synthesis_boundedness(self, frame: BrushletFrame, bapu: Bapu, params: SpaceParams,
                              trials: int = 20, seed: int | None = None, per_block: int = 4) -> SynthesisReport:
        """||Rc||_M / ||c||_m over random sparse c supported on interior cubes."""
        rng = np.random.default_rng(config.default_seed if seed is None else seed)
        limit = frame.covering.trunc_radius / 2
        interior = [tuple(p.index) for p in frame.covering.patches if p.radial_extent()[1] <= limit]
        if not interior:
            raise ValueError("No cube lies inside half the truncation radius")
        ratios = []
        for _ in range(trials):
            chosen = rng.choice(len(interior), size=min(3, len(interior)), replace=False)
            blocks = {}
            for index in sorted(chosen):
                k = interior[index]
                shape = tuple(min(per_block, s) for s in frame.box_shape(k))
                block = np.zeros(shape, dtype=np.complex128)
                positions = rng.integers(0, shape, size=(2, len(shape)))
                for position in positions:
                    block[tuple(position)] = rng.standard_normal() + 1j * rng.standard_normal()
                blocks[k] = block
            c = CoeffArray(blocks)
            sequence = self.sequence_norm(c, params, frame.grid.d)
            if sequence == 0:
                continue
            function_norm = self.signal_service.alpha_modulation_norm(self.synthesize_spectrum(c, frame), bapu, params)[0]
            ratios.append(function_norm / sequence)
        report = SynthesisReport(
            trials=len(ratios),
            ratio_min=min(ratios, default=0.0),
            ratio_max=max(ratios, default=0.0),
            passed=bool(ratios) and all(math.isfinite(r) and r > 0 for r in ratios),
        )
        logger.info(f"Synthesis boundedness: ratios in [{report.ratio_min:.4g}, {report.ratio_max:.4g}]")
        return report
