import logging
import math
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from app.core.config import config
from app.core.constants import ENDPOINT_PAIRS, BumpMode, EmbeddingDirection
from app.core.exceptions import CertificationError, GridCapacityError
from app.models.exponent import Exponent, SpaceParams
from app.models.experiment import EmbeddingCase, ExtremalFamily, SharpnessSetup
from app.models.patch import japanese
from app.models.signal import GridSpec, Signal, SpectralSignal
from app.models.window import Bapu
from app.schemas.experiment import (
    CorollaryRegion,
    EmbeddingReport,
    EmbeddingRun,
    EndpointReport,
    EndpointRow,
    GrowthRow,
    GrowthTable,
)
from app.services.bapu_service import BapuService
from app.services.covering_service import CoveringService
from app.services.index_service import nu1, nu2, sharp_lower_threshold, theta1, theta2, weight_shift
from app.services.signal_service import SignalService, lp_of_samples, lq_sum
from app.services.symbols import bump

logger = logging.getLogger(__name__)

# Weight shifts of the endpoint estimates in units of d (alpha2 - alpha1)
ENDPOINT_SHIFTS = {
    ("2", "inf"): Fraction(-1, 2),
    ("1", "1"): Fraction(0),
    ("1", "inf"): Fraction(-1),
    ("inf", "1"): Fraction(0),
    ("inf", "inf"): Fraction(-1),
}

DEFAULT_N_LIST = (4, 8, 16, 32, 64)


def corollary_region_check(p, q) -> CorollaryRegion:
    p, q = Exponent.parse(p), Exponent.parse(q)
    half = Fraction(1, 2)
    return CorollaryRegion(
        sharp_upper_applies=p.recip <= max(half, q.recip),
        sharp_lower_applies=p.recip >= min(half, q.recip),
    )


def default_embedding_grid(d: int) -> tuple[GridSpec, float, float]:
    """Grid, truncation radius and signal band radius of the embedding harness."""
    if d == 1:
        return GridSpec(1, 4096, 16 * math.pi), 48.0, 32.0
    return GridSpec(d, 256, 4 * math.pi), 12.0, 8.0


class ExperimentService:
    def __init__(
        self,
        signal_service: SignalService | None = None,
        covering_service: CoveringService | None = None,
        bapu_service: BapuService | None = None,
    ):
        self.signal_service = signal_service or SignalService()
        self.covering_service = covering_service or CoveringService()
        self.bapu_service = bapu_service or BapuService(self.signal_service, self.covering_service)
        self._bapus: dict[tuple, Bapu] = {}

    # ------------------------------------------------------------------
    # Partitions
    # ------------------------------------------------------------------

    def alpha_bapu(self, alpha: float, grid: GridSpec, trunc_radius: float) -> Bapu:
        """Dyadic partition for alpha = 1, lattice balls otherwise; memoized per grid."""
        key = (alpha, grid, trunc_radius)
        if key not in self._bapus:
            if alpha >= 1:
                covering = self.covering_service.build_dyadic_covering(grid.d, trunc_radius)
            else:
                covering = self.covering_service.build_ball_covering(grid.d, alpha, trunc_radius=trunc_radius)
            self._bapus[key] = self.bapu_service.build_bapu(covering, grid)
        return self._bapus[key]

    # ------------------------------------------------------------------
    # Embedding estimates
    # ------------------------------------------------------------------

    @staticmethod
    def embedding_shifts(case: EmbeddingCase) -> tuple[float, float]:
        """(theta shift, nu shift) of the weight on the alpha2 side."""
        if theta1(case.p, case.q) != -theta2(case.p.conjugate, case.q.conjugate):
            raise CertificationError(f"Index duality fails at (p, q) = ({case.p}, {case.q})")
        if case.direction == EmbeddingDirection.UPPER:
            theta, nu = theta1(case.p, case.q), nu1(case.p, case.q)
        else:
            theta, nu = theta2(case.p, case.q), nu2(case.p, case.q)
        return (weight_shift(case.d, case.alpha1, case.alpha2, theta),
                weight_shift(case.d, case.alpha1, case.alpha2, nu))

    def embedding_ratios(self, case: EmbeddingCase, spectra: Sequence[SpectralSignal], bapu1: Bapu, bapu2: Bapu,
                         shift: float) -> list[float]:
        """
        Upper: ||f||_{alpha1, s} / ||f||_{alpha2, s + shift}.
        Lower: ||f||_{alpha2, s + shift} / ||f||_{alpha1, s}.
        """
        params1 = SpaceParams(case.alpha1, case.p, case.q, case.s)
        params2 = SpaceParams(case.alpha2, case.p, case.q, case.s + shift)
        ratios = []
        for f in spectra:
            norm1 = self.signal_service.alpha_modulation_norm(f, bapu1, params1)[0]
            norm2 = self.signal_service.alpha_modulation_norm(f, bapu2, params2)[0]
            if case.direction == EmbeddingDirection.UPPER:
                ratios.append(norm1 / norm2 if norm2 > 0 else math.inf)
            else:
                ratios.append(norm2 / norm1 if norm1 > 0 else math.inf)
        return ratios

    def verify_embedding(
        self,
        case: EmbeddingCase,
        grid: GridSpec | None = None,
        trunc_radius: float | None = None,
        signal_radius: float | None = None,
        signals: int = 8,
        seed: int | None = None,
    ) -> EmbeddingReport:
        """
        Worst embedding ratio over seeded band-limited signals on the base grid,
        the doubled grid and the doubled truncation radius; the constant is
        accepted when the three worst ratios agree within the stability tolerance.
        """
        base_grid, base_trunc, base_radius = default_embedding_grid(case.d)
        grid = grid or base_grid
        trunc_radius = trunc_radius or base_trunc
        signal_radius = signal_radius or base_radius
        seed = config.default_seed if seed is None else seed
        if grid.d != case.d:
            raise ValueError(f"Grid dimension {grid.d} does not match case dimension {case.d}")
        if signal_radius >= trunc_radius:
            raise ValueError(f"Signal band radius {signal_radius} must be below the truncation radius {trunc_radius}")

        shift, nu_shift = self.embedding_shifts(case)
        runs = []
        nu_not_larger = True
        for g, t in ((grid, trunc_radius), (grid.doubled(), trunc_radius), (grid, 2 * trunc_radius)):
            if g.nyquist <= t:
                raise GridCapacityError(f"Nyquist radius {g.nyquist:.4f} cannot hold truncation radius {t}")
            bapu1 = self.alpha_bapu(case.alpha1, g, t)
            bapu2 = self.alpha_bapu(case.alpha2, g, t)
            spectra = [self.signal_service.random_bandlimited(g, seed + i, signal_radius) for i in range(signals)]
            ratios = self.embedding_ratios(case, spectra, bapu1, bapu2, shift)
            nu_ratios = self.embedding_ratios(case, spectra, bapu1, bapu2, nu_shift)
            nu_not_larger &= all(nu <= theta * (1 + 1e-12) for nu, theta in zip(nu_ratios, ratios))
            runs.append(EmbeddingRun(
                n=g.n,
                half_width=g.half_width,
                trunc_radius=t,
                signals=len(spectra),
                worst_ratio=max(ratios),
                nu_worst_ratio=max(nu_ratios),
            ))

        reference = runs[0].worst_ratio
        finite = all(math.isfinite(run.worst_ratio) and run.worst_ratio > 0 for run in runs)
        stable = finite and all(
            math.isclose(run.worst_ratio, reference, rel_tol=config.stability_tolerance) for run in runs
        )
        report = EmbeddingReport(
            case=case.key,
            d=case.d,
            alpha1=case.alpha1,
            alpha2=case.alpha2,
            p=str(case.p),
            q=str(case.q),
            s=case.s,
            direction=case.direction.value,
            shift=shift,
            nu_shift=nu_shift,
            runs=runs,
            stable=stable,
            nu_not_larger=nu_not_larger,
            passed=stable and nu_not_larger,
        )
        logger.info(f"Embedding {case.key}: worst ratio {reference:.4g}, stable={stable}")
        return report

    def verify_endpoints(self, d: int, alpha1: float, alpha2: float, s: float = 0.0, **kwargs) -> EndpointReport:
        """The five endpoint estimates of the embedding proof, checked against the theta2 shift."""
        rows = []
        for p, q in ENDPOINT_PAIRS:
            case = EmbeddingCase(d, alpha1, alpha2, p, q, s, EmbeddingDirection.LOWER)
            proof_shift = d * (alpha2 - alpha1) * float(ENDPOINT_SHIFTS[(p, q)])
            theorem_shift = weight_shift(d, alpha1, alpha2, theta2(p, q))
            consistent = math.isclose(proof_shift, theorem_shift, abs_tol=1e-12)
            if not consistent:
                logger.error(f"Endpoint ({p}, {q}): proof shift {proof_shift} differs from {theorem_shift}")
            rows.append(EndpointRow(
                p=p,
                q=q,
                proof_shift=proof_shift,
                theorem_shift=theorem_shift,
                consistent=consistent,
                report=self.verify_embedding(case, **kwargs),
            ))
        return EndpointReport(
            d=d, alpha1=alpha1, alpha2=alpha2, s=s, rows=rows,
            passed=all(row.consistent and row.report.passed for row in rows),
        )

    # ------------------------------------------------------------------
    # Sharpness
    # ------------------------------------------------------------------

    def sharpness_setup(
        self,
        d: int,
        alpha1: float,
        alpha2: float,
        n: int = 2 ** 17,
        half_width: float = 40 * math.pi,
        trunc_radius: float = 1200.0,
        metric_r: float = 0.5,
        lattice_r: float = 2.0,
        plateau_r: float = 0.95,
        bump_radius: float = 0.4,
    ) -> SharpnessSetup:
        """alpha1 on a metric covering, alpha2 on lattice balls (dyadic for alpha2 = 1)."""
        grid = GridSpec(d, n, half_width)
        fine = self.covering_service.build_metric_covering(d, alpha1, metric_r, trunc_radius)
        if alpha2 >= 1:
            coarse = self.covering_service.build_dyadic_covering(d, trunc_radius)
        else:
            coarse = self.covering_service.build_ball_covering(d, alpha2, lattice_r, trunc_radius)
            if not coarse.certificate.complete:
                raise CertificationError(f"Lattice covering with r={lattice_r} does not cover B(0, {trunc_radius})")
        return SharpnessSetup(
            grid=grid,
            bapu1=self.bapu_service.build_bapu(fine, grid),
            bapu2=self.bapu_service.build_bapu(coarse, grid),
            plateau_r=plateau_r,
            bump_radius=bump_radius,
        )

    @staticmethod
    def plateau_centers(count: int, alpha: float, plateau_r: float, bump_radius: float, trunc_radius: float) -> np.ndarray:
        """
        Radii |xi_i| of touching plateau balls B(xi_i, r<xi_i>^alpha / 2) along the first axis,
        starting where the quarter ball can hold a bump of `bump_radius`.
        """
        need = 1.05 * bump_radius * 4 / plateau_r
        if alpha == 0:
            if need > 1:
                raise ValueError(f"Plateau scale {plateau_r} cannot hold a bump of radius {bump_radius}")
            start = 0.0
        else:
            target = need ** (1 / alpha)
            start = math.sqrt(target ** 2 - 1) if target > 1 else 0.0

        def half(x: float) -> float:
            return 0.5 * plateau_r * float(japanese(x)) ** alpha

        centers = []
        current = start
        while len(centers) < count:
            if current + half(current) > trunc_radius:
                logger.error(f"Only {len(centers)} plateau balls fit inside B(0, {trunc_radius})")
                raise GridCapacityError(
                    f"{count} disjoint plateau balls do not fit inside B(0, {trunc_radius})",
                    max_feasible=len(centers),
                )
            centers.append(current)
            xi = current

            def gap(x: float) -> float:
                return x - xi - (half(xi) + half(x)) * (1 + 1e-9)

            hi = xi + 4 * half(xi) + 1.0
            while gap(hi) < 0:
                hi = xi + 2 * (hi - xi)
            current = brentq(gap, xi, hi)
        return np.array(centers)

    def extremal_family(self, case: EmbeddingCase, count: int, setup: SharpnessSetup,
                        mode: BumpMode | str | None = None, eps: float = 0.25) -> ExtremalFamily:
        d = case.d
        mode = BumpMode(mode) if mode is not None else self.default_bump_mode(case)
        radii_along = self.plateau_centers(count, case.alpha2, setup.plateau_r, setup.bump_radius, setup.trunc_radius)
        centers = np.zeros((count, d))
        centers[:, 0] = radii_along
        scales = japanese(radii_along)

        dual_recip = float(case.p.conjugate.recip)
        if mode == BumpMode.FIXED:
            weights = np.ones(count)
            radii = np.full(count, setup.bump_radius)
        else:
            radii = setup.bump_radius * (scales / scales[0]) ** case.alpha2
            if case.q.is_infinite:
                weights = scales ** (-case.s - d * case.alpha1 * dual_recip)
            else:
                q_recip = float(case.q.recip)
                index = japanese(np.arange(1, count + 1, dtype=float))
                weights = index ** (-2 * q_recip) * scales ** (
                    -case.s - d * case.gap * q_recip - d * case.alpha1 * dual_recip
                )

        if case.q.is_infinite:
            subsequence = True
        elif eps <= 0:
            subsequence = False
        else:
            index = japanese(np.arange(1, count + 1, dtype=float))
            subsequence = bool(np.all(scales >= index ** (2 / (eps * float(case.q.value)))))
        return ExtremalFamily(centers=centers, weights=weights, radii=radii, bump_mode=mode, eps=eps,
                              subsequence_condition_met=subsequence)

    @staticmethod
    def default_bump_mode(case: EmbeddingCase) -> BumpMode:
        """Fixed bumps where the s-threshold binds, scaled bumps otherwise."""
        if case.q.recip - case.p.conjugate.recip >= 0:
            return BumpMode.FIXED
        return BumpMode.SCALED

    def build_extremal(self, case: EmbeddingCase, count: int, mode: BumpMode | str | None = None,
                       eps: float = 0.25, setup: SharpnessSetup | None = None) -> tuple[Signal, ExtremalFamily]:
        setup = setup or self.sharpness_setup(case.d, case.alpha1, case.alpha2)
        family = self.extremal_family(case, count, setup, mode, eps)
        spectrum = self.signal_service.bump_train(setup.grid, family.centers, family.radii, family.weights)
        return self.signal_service.fft_inverse(spectrum), family

    def _bump_lp(self, grid: GridSpec, center: np.ndarray, radius: float, p: Exponent) -> float:
        slices, mesh = SignalService.box_around(grid, center, radius)
        distance = np.sqrt(sum((m - c) ** 2 for m, c in zip(mesh, center)))
        samples, cell = self.signal_service.local_samples(bump(distance / radius), grid)
        return lp_of_samples(samples, p, cell)

    def sharpness_growth(
        self,
        case: EmbeddingCase,
        t: float | None = None,
        n_list: Sequence[int] = DEFAULT_N_LIST,
        eps: float = 0.25,
        mode: BumpMode | str | None = None,
        setup: SharpnessSetup | None = None,
    ) -> GrowthTable:
        """
        rho(N) = ||f_N||_{alpha2, t} / ||f_N||_{alpha1, s} along an extremal family.

        Above the threshold rho must at least double over the schedule; at or below
        it, rho must stay within a factor two band.
        """
        if not n_list:
            raise ValueError("n_list must not be empty")
        setup = setup or self.sharpness_setup(case.d, case.alpha1, case.alpha2)
        region = corollary_region_check(case.p, case.q)
        threshold = case.s + case.d * case.gap * float(sharp_lower_threshold(case.p, case.q))
        t = threshold + eps if t is None else t
        above = t > threshold + 1e-12

        sizes = sorted(set(int(v) for v in n_list))
        family = self.extremal_family(case, sizes[-1], setup, mode, eps)
        plateau_bapu = self.bapu_service.adjoin_plateau(setup.bapu2, family.centers, r=setup.plateau_r)
        params1 = SpaceParams(case.alpha1, case.p, case.q, case.s)
        params2 = SpaceParams(case.alpha2, case.p, case.q, t)
        singles = np.array([
            self._bump_lp(setup.grid, center, radius, case.p) for center, radius in zip(family.centers, family.radii)
        ])
        terms = family.weights * japanese(np.linalg.norm(family.centers, axis=1)) ** t * singles

        rows = []
        for size in sizes:
            spectrum = self.signal_service.bump_train(
                setup.grid, family.centers[:size], family.radii[:size], family.weights[:size]
            )
            norm1 = self.signal_service.alpha_modulation_norm(spectrum, setup.bapu1, params1)[0]
            norm2 = self.signal_service.alpha_modulation_norm(spectrum, plateau_bapu, params2)[0]
            rows.append(GrowthRow(
                N=size,
                norm_alpha1=norm1,
                norm_alpha2=norm2,
                ratio=norm2 / norm1,
                plateau_estimate=lq_sum(terms[:size], case.q),
            ))
            logger.info(f"Sharpness {case.key} N={size}: ratio {rows[-1].ratio:.4g}")

        ratios = [row.ratio for row in rows]
        growth = ratios[-1] / ratios[0]
        band = max(ratios) / min(ratios)
        factor = config.growth_factor
        bar_met = growth >= factor if above else band <= config.band_factor
        probing = not region.sharp_upper_applies
        return GrowthTable(
            case=case.key,
            t=t,
            threshold=threshold,
            eps=eps,
            bump_mode=family.bump_mode.value,
            rows=rows,
            growth=growth,
            band=band,
            above_threshold=above,
            region=region,
            probing=probing,
            subsequence_condition_met=family.subsequence_condition_met,
            bar_met=bar_met,
            passed=bar_met or probing,
        )
