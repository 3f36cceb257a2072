import logging
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import fft

from app.core.config import config
from app.core.constants import CoveringFamily, SignalKind
from app.core.exceptions import GridCapacityError, SpectralLeakageError
from app.models.exponent import Exponent, SpaceParams
from app.models.patch import japanese
from app.models.signal import GridSpec, PieceNorms, Signal, SpectralSignal
from app.models.window import Bapu, WindowSymbol
from app.services.symbols import bump

logger = logging.getLogger(__name__)

_ROOT_2PI = math.sqrt(2 * math.pi)


def lp_of_samples(samples: np.ndarray, p: Exponent, cell: float) -> float:
    """Riemann-sum L^p norm with the given cell volume; p = inf is the max modulus."""
    modulus = np.abs(samples)
    if modulus.size == 0:
        return 0.0
    if p.is_infinite:
        return float(modulus.max())
    if p.recip == 1:
        return float(modulus.sum() * cell)
    if p.recip == Fraction(1, 2):
        return float(math.sqrt(np.sum(modulus ** 2) * cell))
    exponent = p.value
    peak = float(modulus.max())
    if peak == 0.0:
        return 0.0
    return peak * float(np.sum((modulus / peak) ** exponent) * cell) ** (1 / exponent)


def lq_sum(values: np.ndarray, q: Exponent) -> float:
    values = np.abs(np.asarray(values))
    if values.size == 0:
        return 0.0
    peak = float(values.max())
    if q.is_infinite or peak == 0.0:
        return peak
    exponent = q.value
    return peak * float(np.sum((values / peak) ** exponent)) ** (1 / exponent)


def _next_power_of_two(value: int) -> int:
    return 1 << max(0, int(value - 1).bit_length())


class SignalService:
    def __init__(self, workers: int | None = None, oversampling: int | None = None):
        self.workers = workers or config.workers
        self.oversampling = oversampling or config.local_oversampling

    # ------------------------------------------------------------------
    # Transforms
    # ------------------------------------------------------------------

    def fft_forward(self, signal: Signal) -> SpectralSignal:
        """Discrete surrogate of (2 pi)^(-d/2) int f(x) e^(-i x.xi) dx on the grid."""
        grid = signal.grid
        coeffs = fft.fftn(signal.samples, workers=self.workers)
        coeffs *= grid.sign * (grid.dx / _ROOT_2PI) ** grid.d
        return SpectralSignal(grid, coeffs)

    def fft_inverse(self, spectrum: SpectralSignal) -> Signal:
        grid = spectrum.grid
        samples = fft.ifftn(spectrum.coeffs * grid.sign, workers=self.workers)
        samples *= (grid.dxi * grid.n / _ROOT_2PI) ** grid.d
        return Signal(grid, samples)

    def multiplier_apply(self, window: WindowSymbol, f: SpectralSignal) -> Signal:
        """psi(D) f = F^-1(psi f_hat)."""
        grid = f.grid
        product = np.zeros(grid.shape, dtype=np.complex128)
        slices = window.grid_slices(grid)
        product[slices] = window.values * f.coeffs[slices]
        return self.fft_inverse(SpectralSignal(grid, product))

    def local_samples(self, values: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, float]:
        """
        Samples, up to a unimodular factor, of the function whose spectrum is
        `values` on a contiguous index box, taken on the coarsest power-of-two
        sub-grid of [-L, L)^d that oversamples the box width by `oversampling`.

        Returns the samples and the Riemann cell volume of that sub-grid.
        """
        sizes = [min(grid.n, _next_power_of_two(self.oversampling * s)) for s in values.shape]
        padded = np.zeros(sizes, dtype=np.complex128)
        signs = values.astype(np.complex128)
        for axis, length in enumerate(values.shape):
            shape = [1] * values.ndim
            shape[axis] = length
            signs = signs * np.where(np.arange(length) % 2 == 0, 1.0, -1.0).reshape(shape)
        padded[tuple(slice(0, s) for s in values.shape)] = signs
        samples = fft.ifftn(padded, workers=1)
        samples *= math.prod(sizes) * (grid.dxi / _ROOT_2PI) ** grid.d
        cell = math.prod(2 * grid.half_width / s for s in sizes)
        return samples, cell

    # ------------------------------------------------------------------
    # Norms
    # ------------------------------------------------------------------

    def lp_norm(self, signal: Signal, p) -> float:
        return lp_of_samples(signal.samples, Exponent.parse(p), signal.grid.dx ** signal.grid.d)

    def sobolev_norm(self, f: SpectralSignal, s: float) -> float:
        grid = f.grid
        weight = japanese(grid.xi_norm) ** (2 * s)
        return float(math.sqrt(np.sum(weight * np.abs(f.coeffs) ** 2) * grid.dxi ** grid.d))

    def leaked_fraction(self, f: SpectralSignal, radius: float) -> float:
        energy = np.abs(f.coeffs) ** 2
        total = float(energy.sum())
        if total == 0.0:
            return 0.0
        return float(energy[f.grid.xi_norm > radius].sum()) / total

    def piece_norms(self, f: SpectralSignal, windows: Sequence[WindowSymbol], p: Exponent) -> np.ndarray:
        """||psi_Q(D) f||_Lp for every window, in window order."""
        grid = f.grid
        floor = 1e-15 * float(np.abs(f.coeffs).max(initial=0.0))

        def piece(window: WindowSymbol) -> float:
            local = window.restrict(f.coeffs, grid)
            if local.size == 0 or float(np.abs(local).max()) <= floor:
                return 0.0
            samples, cell = self.local_samples(window.values * local, grid)
            return lp_of_samples(samples, p, cell)

        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return np.fromiter(pool.map(piece, windows), dtype=float, count=len(windows))

    def window_weights(self, bapu: Bapu, s: float) -> np.ndarray:
        """2^(js) on dyadic windows, <xi_Q>^s elsewhere."""
        weights = np.empty(len(bapu.windows))
        for i, window in enumerate(bapu.windows):
            if window.level is not None:
                weights[i] = 2.0 ** (window.level * s)
            else:
                weights[i] = float(japanese(np.linalg.norm(window.xi))) ** s
        return weights

    def alpha_modulation_norm(self, f: SpectralSignal, bapu: Bapu, params: SpaceParams) -> tuple[float, PieceNorms]:
        """(sum_Q <xi_Q>^(qs) ||psi_Q(D) f||_Lp^q)^(1/q), sup for q = inf."""
        grid = f.grid
        covering = bapu.covering
        if bapu.grid != grid:
            raise ValueError(f"BAPU sampled on {bapu.grid}, signal on {grid}")
        if not math.isclose(covering.alpha, params.alpha, abs_tol=1e-12):
            raise ValueError(f"BAPU is built for alpha={covering.alpha}, params ask for alpha={params.alpha}")
        if grid.nyquist < covering.trunc_radius:
            raise GridCapacityError(
                f"Nyquist radius {grid.nyquist:.4f} is below the certified radius {covering.trunc_radius}"
            )

        leaked = self.leaked_fraction(f, covering.trunc_radius)
        if leaked > config.leakage_tolerance:
            logger.error(f"Spectral leakage {leaked:.3e} beyond B(0, {covering.trunc_radius})")
            raise SpectralLeakageError(
                f"{leaked:.3e} of the spectral mass lies outside the certified region B(0, {covering.trunc_radius})"
            )
        if leaked > 0.0:
            logger.warning(f"Spectral leakage {leaked:.3e} below tolerance; reported with the piece norms")

        pieces = self.piece_norms(f, bapu.windows, params.p)
        weights = self.window_weights(bapu, params.s)
        norms = PieceNorms(
            params=params,
            entries={w.patch_id: (float(wt), float(pc)) for w, wt, pc in zip(bapu.windows, weights, pieces)},
            leaked_fraction=leaked,
        )
        return lq_sum(weights * pieces, params.q), norms

    def besov_norm(self, f: SpectralSignal, dyadic_bapu: Bapu, p, q, s: float) -> float:
        if dyadic_bapu.covering.family != CoveringFamily.DYADIC:
            raise ValueError("Besov norms need the dyadic partition")
        return self.alpha_modulation_norm(f, dyadic_bapu, SpaceParams(1.0, p, q, s))[0]

    # ------------------------------------------------------------------
    # Test signals
    # ------------------------------------------------------------------

    def make_test_signal(self, kind: SignalKind | str, grid: GridSpec, **params) -> Signal:
        kind = SignalKind(kind)
        if kind == SignalKind.GAUSSIAN:
            return self.gaussian(grid, **params)
        return self.fft_inverse(self.make_test_spectrum(kind, grid, **params))

    def make_test_spectrum(self, kind: SignalKind | str, grid: GridSpec, **params) -> SpectralSignal:
        kind = SignalKind(kind)
        if kind == SignalKind.GAUSSIAN:
            return self.fft_forward(self.gaussian(grid, **params))
        if kind == SignalKind.RANDOM_BANDLIMITED:
            return self.random_bandlimited(grid, **params)
        return self.bump_train(grid, **params)

    def gaussian(self, grid: GridSpec, sigma: float = 1.0, center: Sequence[float] | None = None,
                 frequency: Sequence[float] | None = None) -> Signal:
        center = np.zeros(grid.d) if center is None else np.asarray(center, dtype=float)
        frequency = np.zeros(grid.d) if frequency is None else np.asarray(frequency, dtype=float)
        mesh = grid.x_mesh()
        radius2 = sum((x - c) ** 2 for x, c in zip(mesh, center))
        phase = sum(x * w for x, w in zip(mesh, frequency))
        return Signal(grid, np.exp(-radius2 / (2 * sigma ** 2)) * np.exp(1j * phase))

    def random_bandlimited(self, grid: GridSpec, seed: int | None = None, radius: float = 16.0) -> SpectralSignal:
        """
        i.i.d. complex Gaussian coefficients on |xi_m| <= radius, drawn in
        lexicographic order of the centred index m, so the draw does not depend on n.
        """
        if radius >= grid.nyquist:
            raise GridCapacityError(f"Band radius {radius} exceeds the Nyquist radius {grid.nyquist:.4f}")
        seed = config.default_seed if seed is None else seed
        top = int(math.floor(radius / grid.dxi))
        axis = np.arange(-top, top + 1)
        points = np.stack(np.meshgrid(*([axis] * grid.d), indexing="ij"), axis=-1).reshape(-1, grid.d)
        points = points[np.linalg.norm(points, axis=1) * grid.dxi <= radius]
        rng = np.random.default_rng(seed)
        draws = rng.standard_normal(len(points)) + 1j * rng.standard_normal(len(points))
        coeffs = np.zeros(grid.shape, dtype=np.complex128)
        coeffs[tuple((points % grid.n).T)] = draws
        return SpectralSignal(grid, coeffs)

    def bump_train(self, grid: GridSpec, centers: Sequence[Sequence[float]], radii: Sequence[float],
                   weights: Sequence[float] | None = None) -> SpectralSignal:
        """sum_i t_i chi(|xi - xi_i| / rho_i) on the spectral grid."""
        centers = np.asarray(centers, dtype=float).reshape(-1, grid.d)
        radii = np.asarray(radii, dtype=float)
        weights = np.ones(len(centers)) if weights is None else np.asarray(weights, dtype=float)
        coeffs = np.zeros(grid.shape, dtype=np.complex128)
        for center, radius, weight in zip(centers, radii, weights):
            if np.linalg.norm(center) + radius >= grid.nyquist:
                raise GridCapacityError(f"Bump at {center.tolist()} with radius {radius} passes the Nyquist radius")
            slices, mesh = self.box_around(grid, center, radius)
            distance = np.sqrt(sum((m - c) ** 2 for m, c in zip(mesh, center)))
            coeffs[slices] += weight * bump(distance / radius)
        return SpectralSignal(grid, coeffs)

    @staticmethod
    def box_around(grid: GridSpec, center: np.ndarray, radius: float) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
        """Grid positions and frequencies of the index box covering B(center, radius)."""
        axes = []
        for c in center:
            lo = max(math.ceil((c - radius) / grid.dxi), -grid.n // 2)
            hi = min(math.floor((c + radius) / grid.dxi), grid.n // 2 - 1)
            axes.append(np.arange(lo, hi + 1))
        slices = np.ix_(*[a % grid.n for a in axes])
        mesh = tuple(np.meshgrid(*[a * grid.dxi for a in axes], indexing="ij"))
        return slices, mesh
