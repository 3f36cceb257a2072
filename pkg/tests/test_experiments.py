import math

import numpy as np
import pytest

from app.core.constants import ENDPOINT_PAIRS, BumpMode, EmbeddingDirection
from app.core.exceptions import GridCapacityError
from app.models.experiment import EmbeddingCase
from app.models.patch import japanese
from app.services.experiment_service import ExperimentService


@pytest.fixture(scope="module")
def setup(experiment_service):
    """A reduced sharpness grid: dxi = 1/8, Nyquist radius 256."""
    return experiment_service.sharpness_setup(1, 0.0, 0.5, n=2 ** 13, half_width=8 * math.pi, trunc_radius=200.0)


def test_case_validation():
    with pytest.raises(ValueError):
        EmbeddingCase(1, 0.5, 0.0, "2", "2")
    case = EmbeddingCase(1, 0.0, 0.5, "2", "inf", direction="lower")
    assert case.direction == EmbeddingDirection.LOWER
    assert case.gap == 0.5
    assert "q=inf" in case.key


def test_embedding_shifts(experiment_service):
    upper = EmbeddingCase(2, 0.0, 1.0, "1", "1")
    lower = EmbeddingCase(1, 0.0, 1.0, "2", "inf", direction="lower")
    assert experiment_service.embedding_shifts(upper) == (2.0, 2.0)
    assert experiment_service.embedding_shifts(lower) == (-0.5, -1.0)


def test_alpha_bapu_is_memoized(experiment_service, grid):
    first = experiment_service.alpha_bapu(0.5, grid, 48.0)
    assert experiment_service.alpha_bapu(0.5, grid, 48.0) is first
    assert experiment_service.alpha_bapu(1.0, grid, 48.0).covering.family.value == "dyadic"


def test_upper_embedding_is_stable(experiment_service):
    case = EmbeddingCase(1, 0.0, 0.5, "2", "2")
    report = experiment_service.verify_embedding(case, signals=2, seed=3)
    assert [run.n for run in report.runs] == [4096, 8192, 4096]
    assert [run.trunc_radius for run in report.runs] == [48.0, 48.0, 96.0]
    assert report.shift == 0.0
    assert report.stable
    assert report.nu_not_larger
    assert report.passed


def test_embedding_needs_room_for_the_band(experiment_service):
    case = EmbeddingCase(1, 0.0, 0.5, "2", "2")
    with pytest.raises(ValueError):
        experiment_service.verify_embedding(case, trunc_radius=20.0, signal_radius=30.0)


def test_plateau_centers_touch_without_overlap():
    centers = ExperimentService.plateau_centers(10, 0.5, 0.95, 0.4, 200.0)
    half = 0.5 * 0.95 * japanese(centers) ** 0.5
    gaps = np.diff(centers) - (half[:-1] + half[1:])
    assert np.all(gaps >= 0)
    assert np.all(gaps <= 1e-6)
    # the first quarter ball holds a bump of the requested radius
    assert 0.25 * 0.95 * float(japanese(centers[0])) ** 0.5 >= 0.4


def test_plateau_centers_report_capacity():
    with pytest.raises(GridCapacityError) as info:
        ExperimentService.plateau_centers(1000, 0.5, 0.95, 0.4, 50.0)
    assert 0 < info.value.max_feasible < 1000


def test_default_bump_mode():
    assert ExperimentService.default_bump_mode(EmbeddingCase(1, 0.0, 0.5, "2", "2")) == BumpMode.FIXED
    assert ExperimentService.default_bump_mode(EmbeddingCase(1, 0.0, 0.5, "2", "inf")) == BumpMode.SCALED


def test_extremal_family_is_disjoint(experiment_service, setup):
    case = EmbeddingCase(1, 0.0, 0.5, "2", "inf")
    family = experiment_service.extremal_family(case, 8, setup)
    assert family.bump_mode == BumpMode.SCALED
    assert len(family) == 8
    edges = family.centers[:, 0] + family.radii
    assert np.all(edges[:-1] < family.centers[1:, 0] - family.radii[1:])
    assert family.subsequence_condition_met


def test_plateau_estimate_is_exact_for_p_two(experiment_service, setup):
    case = EmbeddingCase(1, 0.0, 0.5, "2", "2")
    table = experiment_service.sharpness_growth(case, n_list=(2, 4, 8), setup=setup)
    assert [row.N for row in table.rows] == [2, 4, 8]
    assert table.threshold == 0.0
    assert table.t == pytest.approx(0.25)
    assert table.above_threshold
    assert not table.probing
    for row in table.rows:
        assert row.norm_alpha2 == pytest.approx(row.plateau_estimate, rel=1e-9)
        assert row.norm_alpha1 > 0


def test_probing_runs_never_gate(experiment_service, setup):
    case = EmbeddingCase(1, 0.0, 0.5, "1", "inf")
    table = experiment_service.sharpness_growth(case, n_list=(2, 4), setup=setup)
    assert table.probing
    assert table.passed
    assert not table.region.sharp_upper_applies


def test_growth_needs_sizes(experiment_service, setup):
    with pytest.raises(ValueError):
        experiment_service.sharpness_growth(EmbeddingCase(1, 0.0, 0.5, "2", "2"), n_list=(), setup=setup)


def test_endpoint_shifts_match_theta2(experiment_service):
    report = experiment_service.verify_endpoints(1, 0.0, 0.5, signals=1, seed=2)
    assert [(row.p, row.q) for row in report.rows] == ENDPOINT_PAIRS
    assert all(row.consistent for row in report.rows)
    shifts = {(row.p, row.q): row.theorem_shift for row in report.rows}
    assert shifts[("2", "inf")] == -0.25
    assert shifts[("1", "1")] == 0.0
    assert shifts[("inf", "inf")] == -0.5
    assert all(row.report.direction == "lower" for row in report.rows)


@pytest.fixture(scope="module")
def full_setup(experiment_service):
    """The default sharpness grid: n = 2^17, L = 40 pi, T = 1200."""
    return experiment_service.sharpness_setup(1, 0.0, 0.5)


@pytest.mark.parametrize("p,q", [("2", "2"), ("1", "1"), ("2", "inf")])
def test_ratio_grows_above_the_threshold(experiment_service, full_setup, p, q):
    table = experiment_service.sharpness_growth(EmbeddingCase(1, 0.0, 0.5, p, q), setup=full_setup)
    assert [row.N for row in table.rows] == [4, 8, 16, 32, 64]
    assert table.above_threshold
    assert not table.probing
    assert table.growth >= 2.0
    assert table.bar_met


@pytest.mark.parametrize("p,q", [("2", "2"), ("1", "1"), ("2", "inf")])
def test_ratio_stays_banded_at_the_threshold(experiment_service, full_setup, p, q):
    table = experiment_service.sharpness_growth(EmbeddingCase(1, 0.0, 0.5, p, q), eps=0.0, setup=full_setup)
    assert table.t == table.threshold
    assert not table.above_threshold
    assert table.band <= 2.0
    assert table.bar_met
