import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from app.core.config import config
from app.core.constants import CoveringFamily, ShapeKind, WindowForm, XiMode
from app.core.exceptions import CertificationError, CoveringHoleError, GridCapacityError, PlateauOverlapError
from app.models.covering import Covering
from app.models.exponent import Exponent
from app.models.patch import FrequencyPatch, japanese
from app.models.signal import GridSpec
from app.models.window import Bapu, WindowSymbol
from app.schemas.bapu import (
    BapuCertificate,
    DerivativeScalingReport,
    FourierGrowthReport,
    OrderSlope,
    WindowDescriptor,
)
from app.schemas.covering import WindowDocument
from app.services.covering_service import CoveringService
from app.services.signal_service import SignalService, lp_of_samples
from app.services.symbols import bump, dyadic_profile, plateau

logger = logging.getLogger(__name__)

# Fourth-order centred first-derivative stencil on offsets -2..2
_STENCIL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def _index_box(grid: GridSpec, lo: np.ndarray, hi: np.ndarray) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    """Origin and shape of the centred index box inside [lo, hi], clamped to the grid."""
    first = [max(math.ceil(v / grid.dxi), -grid.n // 2) for v in lo]
    last = [min(math.floor(v / grid.dxi), grid.n // 2 - 1) for v in hi]
    if any(b < a for a, b in zip(first, last)):
        return None
    return tuple(first), tuple(b - a + 1 for a, b in zip(first, last))


def _box_mesh(grid: GridSpec, origin: tuple[int, ...], shape: tuple[int, ...]) -> tuple[np.ndarray, ...]:
    axes = [(o + np.arange(s)) * grid.dxi for o, s in zip(origin, shape)]
    return tuple(np.meshgrid(*axes, indexing="ij"))


def _fd_derivative(values: np.ndarray, axis: int, order: int, step: float) -> np.ndarray:
    """Repeated centred differences; the box is zero-padded so nothing wraps."""
    out = values
    for _ in range(order):
        pad = [(0, 0)] * out.ndim
        pad[axis] = (2, 2)
        padded = np.pad(out, pad)
        out = sum(w * np.roll(padded, -offset, axis=axis) for w, offset in zip(_STENCIL, range(-2, 3)))
        out = out / step
    return out


def _loglog_slope(scales: np.ndarray, values: np.ndarray) -> tuple[float, int]:
    """Slope of log(values) against log(scales) over the asymptotic range scales >= sqrt(max scale)."""
    if scales.size == 0:
        return 0.0, 0
    keep = (scales >= math.sqrt(float(scales.max()))) & (values > 0)
    if np.count_nonzero(keep) < 2 or np.ptp(np.log(scales[keep])) == 0:
        return 0.0, int(np.count_nonzero(keep))
    slope = np.polyfit(np.log(scales[keep]), np.log(values[keep]), 1)[0]
    return float(slope), int(np.count_nonzero(keep))


class BapuService:
    def __init__(self, signal_service: SignalService | None = None, covering_service: CoveringService | None = None):
        self.signal_service = signal_service or SignalService()
        self.covering_service = covering_service or CoveringService()

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    def build_bapu(
        self,
        covering: Covering,
        grid: GridSpec,
        xi_mode: XiMode | str = XiMode.CENTER,
        seed: int | None = None,
        support_scale: float = 1.0,
    ) -> Bapu:
        """
        Smooth partition of unity subordinate to a certified covering, sampled on `grid`.

        Dyadic coverings get the telescoping dilates of a single radial profile;
        every other family gets template bumps normalized by their pointwise sum.
        `support_scale` < 1 places each bump inside the concentric sub-patch.
        """
        if covering.certificate is None or not covering.certificate.complete:
            logger.error(f"Refusing to build a BAPU on an uncertified {covering.family.value} covering")
            raise CertificationError("BAPUs need a covering with a passing certificate")
        if covering.d != grid.d:
            raise ValueError(f"Covering dimension {covering.d} does not match grid dimension {grid.d}")
        if grid.nyquist < covering.trunc_radius:
            raise GridCapacityError(
                f"Nyquist radius {grid.nyquist:.4f} is below the certified radius {covering.trunc_radius}"
            )
        if not 0.0 < support_scale <= 1.0:
            raise ValueError(f"support_scale must lie in (0, 1], got {support_scale}")

        if XiMode(xi_mode) == XiMode.RANDOM:
            covering = self._randomize_xi(covering, seed)

        if covering.family == CoveringFamily.DYADIC:
            windows = self._dyadic_windows(covering, grid)
        else:
            windows = self._normalized_windows(covering, grid, support_scale)
        bapu = Bapu(covering=covering, grid=grid, windows=tuple(windows))
        logger.info(f"Built BAPU with {len(bapu)} windows on grid n={grid.n}, L={grid.half_width:.4f}")
        return bapu

    def _randomize_xi(self, covering: Covering, seed: int | None) -> Covering:
        rng = np.random.default_rng(config.default_seed if seed is None else seed)
        patches = tuple(patch.with_xi(self._random_point(patch, rng)) for patch in covering.patches)
        return replace(covering, patches=patches)

    @staticmethod
    def _random_point(patch: FrequencyPatch, rng: np.random.Generator) -> tuple[float, ...]:
        lo, hi = patch.bounding_box()
        while True:
            point = rng.uniform(lo, hi)
            if patch.contains(point)[0]:
                return tuple(float(v) for v in point)

    def _template(self, patch: FrequencyPatch, grid: GridSpec, support_scale: float):
        radius = patch.inner_outer_radius()[0] * support_scale
        center = patch.center_array
        box = _index_box(grid, center - radius, center + radius)
        if box is None:
            logger.error(f"Patch {patch.id} holds no spectral samples at dxi={grid.dxi:.4g}")
            raise GridCapacityError(f"Patch {patch.id} is too small for the spectral grid")
        origin, shape = box
        mesh = _box_mesh(grid, origin, shape)
        if patch.shape == ShapeKind.CUBE:
            values = np.ones(shape)
            for axis, c in zip(mesh, center):
                values = values * bump((axis - c) / radius)
        else:
            distance = np.sqrt(sum((axis - c) ** 2 for axis, c in zip(mesh, center)))
            values = bump(distance / radius)
        return origin, values, radius

    def _normalized_windows(self, covering: Covering, grid: GridSpec, support_scale: float) -> list[WindowSymbol]:
        templates = [self._template(patch, grid, support_scale) for patch in covering.patches]
        denominator = np.zeros(grid.shape)
        for (origin, values, _) in templates:
            slices = np.ix_(*[(o + np.arange(s)) % grid.n for o, s in zip(origin, values.shape)])
            denominator[slices] += values

        inside = grid.xi_norm <= covering.trunc_radius
        if np.any(denominator[inside] <= 0.0):
            holes = int(np.count_nonzero(denominator[inside] <= 0.0))
            logger.error(f"Window denominator vanishes at {holes} samples of B(0, {covering.trunc_radius})")
            raise CoveringHoleError(f"Covering leaves {holes} spectral samples of the certified region uncovered")

        windows = []
        for patch, (origin, values, radius) in zip(covering.patches, templates):
            slices = np.ix_(*[(o + np.arange(s)) % grid.n for o, s in zip(origin, values.shape)])
            local = denominator[slices]
            normalized = np.divide(values, local, out=np.zeros_like(values), where=local > 0)
            windows.append(WindowSymbol(
                patch_id=patch.id,
                descriptor=WindowDescriptor(
                    form=WindowForm.NORMALIZED_BUMP,
                    center=list(patch.center),
                    scale=radius,
                    support_scale=support_scale,
                ),
                origin=origin,
                values=normalized,
                xi=tuple(patch.xi),
            ))
        return windows

    def _dyadic_windows(self, covering: Covering, grid: GridSpec) -> list[WindowSymbol]:
        windows = []
        for patch in covering.patches:
            level = patch.index[0]
            outer = 2.0 ** level
            box = _index_box(grid, np.full(grid.d, -outer), np.full(grid.d, outer))
            origin, shape = box
            mesh = _box_mesh(grid, origin, shape)
            radius = np.sqrt(sum(axis ** 2 for axis in mesh))
            if level == 0:
                values = dyadic_profile(radius)
            else:
                values = np.maximum(dyadic_profile(radius / outer) - dyadic_profile(2.0 * radius / outer), 0.0)
            windows.append(WindowSymbol(
                patch_id=patch.id,
                descriptor=WindowDescriptor(form=WindowForm.DYADIC_DILATE, scale=outer, level=level),
                origin=origin,
                values=values,
                xi=tuple(patch.xi),
                level=level,
            ))
        return windows

    def adjoin_plateau(self, bapu: Bapu, centers: Sequence[Sequence[float]], r: float | None = None) -> Bapu:
        """
        Add windows phi_j = plateau(<xi_j>^(-alpha) |xi - xi_j|) and multiply every
        existing window by prod_j (1 - phi_j).

        phi_j is 1 on B(xi_j, r<xi_j>^alpha / 4) and supported in B(xi_j, r<xi_j>^alpha / 2);
        those outer balls must be pairwise disjoint and lie inside the certified region.
        """
        covering, grid = bapu.covering, bapu.grid
        if r is None:
            if covering.r >= 1:
                raise ValueError(f"Covering scale r={covering.r} is not below 1; pass the plateau scale r explicitly")
            r = covering.r
        if r <= 0:
            raise ValueError(f"Plateau scale must be positive, got {r}")

        centers = np.asarray(centers, dtype=float).reshape(-1, grid.d)
        if not len(centers):
            return bapu
        scales = japanese(np.linalg.norm(centers, axis=1)) ** covering.alpha
        halves = 0.5 * r * scales

        reach = np.linalg.norm(centers, axis=1) + halves
        if np.any(reach > covering.trunc_radius):
            worst = int(np.argmax(reach))
            raise ValueError(
                f"Plateau ball at {centers[worst].tolist()} reaches |xi|={reach[worst]:.4f} "
                f"beyond B(0, {covering.trunc_radius})"
            )
        if len(centers) > 1:
            tree = cKDTree(centers)
            for i, j in tree.query_pairs(r=2 * float(halves.max()), output_type="ndarray"):
                if np.linalg.norm(centers[i] - centers[j]) < (halves[i] + halves[j]) * (1 - config.boundary_epsilon):
                    logger.error(f"Plateau balls {i} and {j} overlap")
                    raise PlateauOverlapError(
                        f"Plateau balls around {centers[i].tolist()} and {centers[j].tolist()} overlap"
                    )

        offset = len([w for w in bapu.windows if w.patch_id.startswith("p:")])
        complement = np.ones(grid.shape)
        plateau_windows = []
        plateau_patches = []
        for j, (center, scale, half) in enumerate(zip(centers, scales, halves), start=offset):
            box = _index_box(grid, center - half, center + half)
            if box is None:
                raise GridCapacityError(f"Plateau ball at {center.tolist()} holds no spectral samples")
            origin, shape = box
            mesh = _box_mesh(grid, origin, shape)
            distance = np.sqrt(sum((axis - c) ** 2 for axis, c in zip(mesh, center)))
            values = plateau(distance / scale, r)
            slices = np.ix_(*[(o + np.arange(s)) % grid.n for o, s in zip(origin, shape)])
            complement[slices] *= 1.0 - values

            patch_id = f"p:{j}"
            point = tuple(float(v) for v in center)
            plateau_patches.append(FrequencyPatch(
                id=patch_id, index=(j,), shape=ShapeKind.BALL, center=point, size=float(half)
            ))
            plateau_windows.append(WindowSymbol(
                patch_id=patch_id,
                descriptor=WindowDescriptor(
                    form=WindowForm.PLATEAU, center=list(point), scale=float(scale), plateau_r=r
                ),
                origin=origin,
                values=values,
                xi=point,
            ))

        damped = [replace(w, values=w.values * w.restrict(complement, grid)) for w in bapu.windows]
        extended = replace(covering, patches=covering.patches + tuple(plateau_patches), certificate=None)
        extended.certificate = self.covering_service.certify_alpha_covering(extended)
        ids = bapu.plateau_ids | {p.id for p in plateau_patches}
        logger.info(f"Adjoined {len(plateau_patches)} plateau windows (r={r}); n0 now {extended.height_n0}")
        return Bapu(covering=extended, grid=grid, windows=tuple(damped + plateau_windows), plateau_ids=frozenset(ids))

    def restore_bapu(self, covering: Covering, grid: GridSpec, documents: Sequence[WindowDocument]) -> Bapu:
        """Resample a BAPU from its analytic descriptors on a (possibly different) grid."""
        plateau_docs = [doc for doc in documents if doc.form == WindowForm.PLATEAU]
        base_docs = [doc for doc in documents if doc.form != WindowForm.PLATEAU]
        plateau_ids = {doc.patch_id for doc in plateau_docs}
        base = replace(covering, patches=tuple(p for p in covering.patches if p.id not in plateau_ids))
        if base.certificate is None or plateau_ids:
            base.certificate = self.covering_service.certify_alpha_covering(base)
        support_scale = base_docs[0].support_scale if base_docs else 1.0
        bapu = self.build_bapu(base, grid, support_scale=support_scale)
        if plateau_docs:
            rs = {doc.plateau_r for doc in plateau_docs}
            if len(rs) != 1:
                raise ValueError(f"Plateau windows carry mixed scales {sorted(rs)}")
            bapu = self.adjoin_plateau(bapu, [doc.center for doc in plateau_docs], r=rs.pop())
        return bapu

    @staticmethod
    def describe(bapu: Bapu) -> list[WindowDocument]:
        return [WindowDocument(patch_id=w.patch_id, **w.descriptor.model_dump()) for w in bapu.windows]

    # ------------------------------------------------------------------
    # Certification
    # ------------------------------------------------------------------

    def certify(self, bapu: Bapu, tolerance: float | None = None) -> BapuCertificate:
        tolerance = config.sum_to_one_tolerance if tolerance is None else tolerance
        grid, covering = bapu.grid, bapu.covering
        inside = grid.xi_norm <= covering.trunc_radius
        total = bapu.total()[inside]
        squares = bapu.square_total()[inside]
        sum_error = float(np.abs(total - 1.0).max(initial=0.0))
        square_min = float(squares.min(initial=1.0))
        n0 = covering.height_n0 or len(covering)
        bound = 0.99 / n0 ** 2

        low = min((float(w.values.min()) for w in bapu.windows if w.values.size), default=0.0)
        high = max((float(w.values.max()) for w in bapu.windows if w.values.size), default=0.0)
        support_ok = all(self._support_inside(w, covering.patches[covering.position(w.patch_id)], grid)
                         for w in bapu.windows)
        range_ok = low >= -1e-12 and high <= 1.0 + 1e-12

        certificate = BapuCertificate(
            sum_error=sum_error,
            square_sum_min=square_min,
            square_sum_bound=bound,
            value_range=(low, high),
            support_ok=support_ok,
            passed=sum_error <= tolerance and square_min >= bound and range_ok and support_ok,
        )
        if not certificate.passed:
            logger.warning(f"BAPU certificate failed: {certificate.model_dump()}")
        return certificate

    @staticmethod
    def _support_inside(window: WindowSymbol, patch: FrequencyPatch, grid: GridSpec) -> bool:
        nonzero = window.values > 0
        if not np.any(nonzero):
            return True
        points = np.stack([axis[nonzero] for axis in window.frequencies(grid)], axis=-1)
        return bool(np.all(patch.contains(points)))

    def _interior(self, bapu: Bapu) -> list[WindowSymbol]:
        covering = bapu.covering
        limit = covering.trunc_radius / 2
        interior = []
        for window in bapu.windows:
            patch = covering.patches[covering.position(window.patch_id)]
            if patch.radial_extent()[1] <= limit:
                interior.append(window)
        return interior

    def certify_derivative_scaling(self, bapu: Bapu, max_order: int = 3,
                                   slope_tolerance: float | None = None) -> DerivativeScalingReport:
        """<xi_Q>^(alpha k) max |d^k psi_Q| per pure order k, with the log-log slope over interior windows."""
        slope_tolerance = config.slope_tolerance if slope_tolerance is None else slope_tolerance
        grid, alpha = bapu.grid, bapu.covering.alpha
        windows = self._interior(bapu)
        scales = np.array([float(japanese(np.linalg.norm(w.xi))) for w in windows])

        def measure(window: WindowSymbol) -> list[float]:
            return [
                max(float(np.abs(_fd_derivative(window.values, axis, order, grid.dxi)).max(initial=0.0))
                    for axis in range(grid.d))
                for order in range(max_order + 1)
            ]

        with ThreadPoolExecutor(max_workers=self.signal_service.workers) as pool:
            raw = np.array(list(pool.map(measure, windows)), dtype=float).reshape(len(windows), max_order + 1)

        orders = []
        for order in range(max_order + 1):
            values = raw[:, order] * scales ** (alpha * order)
            slope, fitted = _loglog_slope(scales, values)
            orders.append(OrderSlope(
                order=order,
                max_value=float(values.max(initial=0.0)),
                slope=slope,
                fitted_windows=fitted,
                passed=slope <= slope_tolerance,
            ))
            logger.info(f"Derivative order {order}: max={orders[-1].max_value:.4g}, slope={slope:.4f}")
        return DerivativeScalingReport(orders=orders, passed=all(o.passed for o in orders))

    def certify_fourier_growth(self, bapu: Bapu, p, slope_tolerance: float | None = None) -> FourierGrowthReport:
        """<xi_Q>^(-d alpha / p') ||F psi_Q||_Lp over interior windows."""
        slope_tolerance = config.slope_tolerance if slope_tolerance is None else slope_tolerance
        p = Exponent.parse(p)
        grid, alpha = bapu.grid, bapu.covering.alpha
        windows = self._interior(bapu)
        scales = np.array([float(japanese(np.linalg.norm(w.xi))) for w in windows])
        exponent = -grid.d * alpha * float(p.conjugate.recip)

        def measure(window: WindowSymbol) -> tuple[float, float]:
            samples, cell = self.signal_service.local_samples(window.values, grid)
            spatial = lp_of_samples(samples, p, cell)
            spectral = math.sqrt(float(np.sum(window.values ** 2)) * grid.dxi ** grid.d)
            return spatial, spectral

        with ThreadPoolExecutor(max_workers=self.signal_service.workers) as pool:
            measured = np.array(list(pool.map(measure, windows)), dtype=float).reshape(len(windows), 2)

        values = measured[:, 0] * scales ** exponent
        slope, fitted = _loglog_slope(scales, values)
        parseval_error = None
        if p == Exponent.parse(2) and len(windows):
            parseval_error = float(np.max(np.abs(measured[:, 0] - measured[:, 1]) / measured[:, 1]))
        high = float(values.max(initial=0.0))
        low = float(values.min()) if values.size else 0.0
        passed = slope <= slope_tolerance and (parseval_error is None or parseval_error <= 1e-10)
        logger.info(f"Fourier growth p={p}: spread={high / low if low else math.inf:.4f}, slope={slope:.4f}")
        return FourierGrowthReport(
            p=str(p),
            max_value=high,
            min_value=low,
            spread=high / low if low > 0 else math.inf,
            slope=slope,
            fitted_windows=fitted,
            parseval_error=parseval_error,
            passed=passed,
        )
