import logging
from functools import lru_cache
from pathlib import Path

from app.core.constants import CoveringFamily, EmbeddingDirection, NormKind, SignalKind
from app.core.exceptions import ConfigurationError
from app.models.covering import Covering
from app.models.exponent import SpaceParams
from app.models.experiment import EmbeddingCase
from app.models.signal import GridSpec, SpectralSignal
from app.repositories import CoveringRepository, CsvRepository, ReportRepository, SignalRepository
from app.schemas.brushlet import FrameSummary
from app.schemas.run_config import (
    CoveringRunConfig,
    EmbedRunConfig,
    FrameRunConfig,
    GridConfig,
    NormRunConfig,
    SharpnessRunConfig,
)
from app.schemas.signal import NormRow, SignalSidecar
from app.services.bapu_service import BapuService
from app.services.brushlet_service import BrushletService
from app.services.covering_service import CoveringService
from app.services.experiment_service import ExperimentService
from app.services.signal_service import SignalService

logger = logging.getLogger(__name__)


@lru_cache()
def get_signal_service() -> SignalService:
    return SignalService()


@lru_cache()
def get_covering_service() -> CoveringService:
    return CoveringService()


@lru_cache()
def get_bapu_service() -> BapuService:
    return BapuService(get_signal_service(), get_covering_service())


@lru_cache()
def get_brushlet_service() -> BrushletService:
    return BrushletService(get_signal_service(), get_bapu_service())


@lru_cache()
def get_experiment_service() -> ExperimentService:
    return ExperimentService(get_signal_service(), get_covering_service(), get_bapu_service())


def _grid(config: GridConfig) -> GridSpec:
    return GridSpec(config.d, config.n, config.half_width)


# ============================================================================
# covering
# ============================================================================

def build_covering(family: CoveringFamily, d: int, alpha: float, r: float | None, trunc_radius: float) -> Covering:
    service = get_covering_service()
    if family == CoveringFamily.LATTICE_BALL:
        return service.build_ball_covering(d, alpha, r, trunc_radius)
    if family == CoveringFamily.LATTICE_CUBE:
        return service.build_cube_covering(d, alpha, r, trunc_radius)
    if family == CoveringFamily.DYADIC:
        if alpha != 1:
            raise ConfigurationError(f"The dyadic covering is the alpha = 1 covering, got alpha={alpha}")
        return service.build_dyadic_covering(d, trunc_radius)
    return service.build_metric_covering(d, alpha, 0.5 if r is None else r, trunc_radius)


def cmd_covering(config: CoveringRunConfig) -> int:
    covering = build_covering(CoveringFamily(config.family), config.d, config.alpha, config.r, config.trunc_radius)
    passed = covering.certificate.complete
    windows = None
    reports = ReportRepository(config.out)
    if config.grid is not None and passed:
        bapu_service = get_bapu_service()
        bapu = bapu_service.build_bapu(covering, _grid(config.grid), seed=config.seed)
        certificate = bapu_service.certify(bapu)
        reports.save("bapu_certificate.json", certificate)
        windows = bapu_service.describe(bapu)
        passed = passed and certificate.passed

    path = CoveringRepository(config.out).save_covering(config.output, covering, windows)
    reports.save("covering_certificate.json", covering.certificate)
    logger.info(f"Wrote {path} (n0={covering.height_n0}, complete={covering.certificate.complete})")
    return 0 if passed else 1


# ============================================================================
# norm
# ============================================================================

def load_or_create_signal(config: NormRunConfig) -> SpectralSignal:
    signal_service = get_signal_service()
    signals = SignalRepository(config.out)
    if config.signal.path:
        path = Path(config.signal.path)
        data, _ = SignalRepository(path.parent).load_samples(path.name)
        return data if isinstance(data, SpectralSignal) else signal_service.fft_forward(data)

    grid = _grid(config.grid)
    kind = SignalKind(config.signal.kind)
    params: dict = {}
    if kind == SignalKind.GAUSSIAN:
        params = {"sigma": config.signal.sigma}
        if config.signal.center:
            params["center"] = config.signal.center
        if config.signal.frequency:
            params["frequency"] = config.signal.frequency
        signal = signal_service.gaussian(grid, **params)
        spectrum = signal_service.fft_forward(signal)
    elif kind == SignalKind.RANDOM_BANDLIMITED:
        params = {"radius": config.signal.radius}
        spectrum = signal_service.random_bandlimited(grid, config.seed, config.signal.radius)
        signal = signal_service.fft_inverse(spectrum)
    else:
        center = config.signal.center or [0.0] * grid.d
        params = {"centers": [center], "radii": [config.signal.radius]}
        spectrum = signal_service.bump_train(grid, [center], [config.signal.radius])
        signal = signal_service.fft_inverse(spectrum)

    sidecar = SignalSidecar(kind=kind.value, d=grid.d, n=grid.n, half_width=grid.half_width, seed=config.seed,
                            params=params)
    signals.save_samples(config.signal_id, signal, sidecar)
    return spectrum


def cmd_norm(config: NormRunConfig) -> int:
    signal_service = get_signal_service()
    experiments = get_experiment_service()
    spectrum = load_or_create_signal(config)
    grid = spectrum.grid
    grid_label = f"d={grid.d};n={grid.n};L={grid.half_width:.12g}"

    rows = []
    for spec in config.norms:
        n_patches = 0
        if spec.kind == NormKind.SOBOLEV:
            value = signal_service.sobolev_norm(spectrum, spec.s)
            alpha = spec.alpha
        elif spec.kind == NormKind.BESOV:
            bapu = experiments.alpha_bapu(1.0, grid, config.trunc_radius)
            value = signal_service.besov_norm(spectrum, bapu, spec.p, spec.q, spec.s)
            alpha, n_patches = 1.0, len(bapu)
        else:
            bapu = experiments.alpha_bapu(spec.alpha, grid, config.trunc_radius)
            value, _ = signal_service.alpha_modulation_norm(spectrum, bapu, SpaceParams(spec.alpha, spec.p, spec.q, spec.s))
            alpha, n_patches = spec.alpha, len(bapu)
        rows.append(NormRow(kind=spec.kind.value, alpha=alpha, p=spec.p, q=spec.q, s=spec.s, grid=grid_label,
                            signal_id=config.signal_id, norm=value, n_patches=n_patches))
        logger.info(f"{spec.kind.value} norm (alpha={alpha}, p={spec.p}, q={spec.q}, s={spec.s}) = {value:.12g}")

    CsvRepository(config.out).append(config.output, rows)
    return 0


# ============================================================================
# embed
# ============================================================================

def cmd_embed(config: EmbedRunConfig) -> int:
    experiments = get_experiment_service()
    grid = _grid(config.grid) if config.grid else None
    options = {
        "grid": grid,
        "trunc_radius": config.trunc_radius,
        "signal_radius": config.signal_radius,
        "signals": config.signals,
        "seed": config.seed,
    }
    reports = ReportRepository(config.out)
    tables = CsvRepository(config.out)
    if config.endpoints:
        report = experiments.verify_endpoints(config.d, config.alpha1, config.alpha2, config.s, **options)
        embeddings = [row.report for row in report.rows]
    else:
        case = EmbeddingCase(config.d, config.alpha1, config.alpha2, config.p, config.q, config.s,
                             EmbeddingDirection(config.direction))
        report = experiments.verify_embedding(case, **options)
        embeddings = [report]

    reports.save(config.output, report)
    tables.append(Path(config.output).with_suffix(".csv").name, [
        {"case": e.case, "n": run.n, "half_width": run.half_width, "trunc_radius": run.trunc_radius,
         "shift": e.shift, "worst_ratio": run.worst_ratio, "nu_worst_ratio": run.nu_worst_ratio}
        for e in embeddings for run in e.runs
    ])
    return 0 if report.passed else 1


# ============================================================================
# sharpness
# ============================================================================

def cmd_sharpness(config: SharpnessRunConfig) -> int:
    experiments = get_experiment_service()
    case = EmbeddingCase(config.d, config.alpha1, config.alpha2, config.p, config.q, config.s)
    setup = experiments.sharpness_setup(
        config.d, config.alpha1, config.alpha2, n=config.n, half_width=config.half_width,
        trunc_radius=config.trunc_radius, metric_r=config.metric_r, lattice_r=config.lattice_r,
        plateau_r=config.plateau_r, bump_radius=config.bump_radius,
    )
    table = experiments.sharpness_growth(case, t=config.t, n_list=config.n_list, eps=config.eps,
                                         mode=config.mode, setup=setup)

    CsvRepository(config.out).append(config.output, [
        {"d": case.d, "alpha1": case.alpha1, "alpha2": case.alpha2, "p": str(case.p), "q": str(case.q),
         "s": case.s, "t": table.t, "N": row.N, "norm_alpha1": row.norm_alpha1,
         "norm_alpha2": row.norm_alpha2, "ratio": row.ratio}
        for row in table.rows
    ])
    ReportRepository(config.out).save(Path(config.output).with_suffix(".json").name, table)
    if table.probing:
        logger.warning(f"{case.key} lies outside the sharp region; growth reported as a probing run")
    return 0 if table.passed else 1


# ============================================================================
# frame
# ============================================================================

def cmd_frame(config: FrameRunConfig) -> int:
    covering_service = get_covering_service()
    signal_service = get_signal_service()
    bapu_service = get_bapu_service()
    brushlets = get_brushlet_service()

    grid = _grid(config.grid)
    covering = covering_service.build_cube_covering(grid.d, config.alpha, config.r, config.trunc_radius)
    if not covering.certificate.complete:
        ReportRepository(config.out).save("covering_certificate.json", covering.certificate)
        logger.error("Cube covering failed certification")
        return 1
    params = SpaceParams(config.alpha, config.p, config.q, config.s)
    frame = brushlets.build_frame(covering, grid)
    bapu = bapu_service.build_bapu(covering, grid)

    def family(g: GridSpec) -> list[SpectralSignal]:
        return [signal_service.random_bandlimited(g, config.seed + i, config.signal_radius)
                for i in range(config.signals)]

    signals = family(grid)
    summary = FrameSummary(
        roundtrip=brushlets.worst_roundtrip(signals, frame),
        norm_equivalence=brushlets.frame_norm_equivalence_report(covering, grid, params, family),
        gram=brushlets.gram_deviation(frame, config.gram_cutoff),
        synthesis=brushlets.synthesis_boundedness(frame, bapu, params, seed=config.seed),
    )

    coefficients = brushlets.analyze(signals[0], frame)
    CsvRepository(config.out).append("coefficients.csv", [
        {**{f"k{i}": v for i, v in enumerate(k)}, **{f"n{i}": v for i, v in enumerate(n)},
         "re": value.real, "im": value.imag}
        for n, k, value in coefficients.entries()
    ])
    ReportRepository(config.out).save(config.output, summary)
    return 0 if summary.passed else 1