import math

import numpy as np
import pytest

from app.core.constants import WindowForm
from app.core.exceptions import CertificationError, GridCapacityError, PlateauOverlapError
from app.models.exponent import SpaceParams
from app.models.signal import GridSpec


@pytest.fixture(scope="module")
def ball_bapu(covering_service, bapu_service, grid):
    covering = covering_service.build_ball_covering(1, 0.0, 2.0, 48.0)
    return bapu_service.build_bapu(covering, grid)


@pytest.mark.parametrize("alpha", [0.0, 0.5])
def test_lattice_bapu_certifies(covering_service, bapu_service, grid, alpha):
    covering = covering_service.build_ball_covering(1, alpha, 2.0, 48.0)
    bapu = bapu_service.build_bapu(covering, grid)
    certificate = bapu_service.certify(bapu)
    assert certificate.passed
    assert certificate.sum_error <= 1e-8
    assert certificate.square_sum_min >= certificate.square_sum_bound
    assert certificate.value_range[0] >= 0.0
    assert certificate.value_range[1] <= 1.0 + 1e-12


def test_dyadic_bapu_certifies(covering_service, bapu_service, grid):
    covering = covering_service.build_dyadic_covering(1, 48.0)
    bapu = bapu_service.build_bapu(covering, grid)
    assert all(w.form == WindowForm.DYADIC_DILATE for w in bapu.windows)
    assert [w.level for w in bapu.windows] == list(range(len(covering)))
    assert bapu_service.certify(bapu).passed


def test_random_designated_points_stay_inside(covering_service, bapu_service, grid):
    covering = covering_service.build_ball_covering(1, 0.5, 2.0, 48.0)
    bapu = bapu_service.build_bapu(covering, grid, xi_mode="random", seed=3)
    for window, patch in zip(bapu.windows, bapu.covering.patches):
        assert patch.contains(np.asarray(window.xi))[0]
    assert bapu_service.certify(bapu).passed


def test_uncertified_covering_is_refused(covering_service, bapu_service, grid):
    covering = covering_service.build_ball_covering(1, 0.0, 1.0, 10.0)
    with pytest.raises(CertificationError):
        bapu_service.build_bapu(covering, grid)


def test_coarse_grid_is_refused(covering_service, bapu_service):
    covering = covering_service.build_ball_covering(1, 0.0, 2.0, 48.0)
    with pytest.raises(GridCapacityError):
        bapu_service.build_bapu(covering, GridSpec(1, 64, 16 * math.pi))


def test_support_scale_range(covering_service, bapu_service, grid):
    covering = covering_service.build_ball_covering(1, 0.0, 2.0, 48.0)
    with pytest.raises(ValueError):
        bapu_service.build_bapu(covering, grid, support_scale=0.0)


def test_derivative_scaling_for_uniform_covering(bapu_service, ball_bapu):
    report = bapu_service.certify_derivative_scaling(ball_bapu)
    assert [o.order for o in report.orders] == [0, 1, 2, 3]
    assert report.passed
    assert all(o.fitted_windows >= 2 for o in report.orders)


def test_fourier_growth_for_uniform_covering(bapu_service, ball_bapu):
    report = bapu_service.certify_fourier_growth(ball_bapu, "2")
    assert report.parseval_error <= 1e-10
    assert report.passed


def test_fourier_growth_parseval_at_half(covering_service, bapu_service, grid):
    covering = covering_service.build_ball_covering(1, 0.5, 2.0, 48.0)
    bapu = bapu_service.build_bapu(covering, grid)
    report = bapu_service.certify_fourier_growth(bapu, 2)
    assert report.parseval_error <= 1e-10
    assert report.p == "2"
    assert bapu_service.certify_fourier_growth(bapu, "inf").parseval_error is None


def test_plateau_windows_keep_the_sum(bapu_service, ball_bapu):
    extended = bapu_service.adjoin_plateau(ball_bapu, [[20.0], [-10.0]], r=0.5)
    assert extended.plateau_ids == frozenset({"p:0", "p:1"})
    assert len(extended) == len(ball_bapu) + 2
    assert bapu_service.certify(extended).sum_error <= 1e-8

    core = extended.window("p:0")
    assert core.form == WindowForm.PLATEAU
    assert core.values.max() == 1.0


def test_plateau_norm_is_exact(signal_service, bapu_service, ball_bapu, grid):
    extended = bapu_service.adjoin_plateau(ball_bapu, [[20.0]], r=0.5)
    spectrum = signal_service.bump_train(grid, [[20.0]], [0.1])
    norm, pieces = signal_service.alpha_modulation_norm(spectrum, extended, SpaceParams(0.0, "2", "2", 0.0))
    assert norm == pytest.approx(math.sqrt(spectrum.energy()), rel=1e-10)
    nonzero = [pid for pid, (_, piece) in pieces.entries.items() if piece > 0]
    assert nonzero == ["p:0"]


def test_plateau_overlap_is_rejected(bapu_service, ball_bapu):
    with pytest.raises(PlateauOverlapError):
        bapu_service.adjoin_plateau(ball_bapu, [[20.0], [20.3]], r=0.5)


def test_plateau_must_stay_inside_the_certified_region(bapu_service, ball_bapu):
    with pytest.raises(ValueError):
        bapu_service.adjoin_plateau(ball_bapu, [[47.9]], r=0.5)


def test_plateau_scale_defaults_only_below_one(bapu_service, ball_bapu):
    with pytest.raises(ValueError):
        bapu_service.adjoin_plateau(ball_bapu, [[20.0]])


def test_restore_from_descriptors(bapu_service, ball_bapu, grid):
    extended = bapu_service.adjoin_plateau(ball_bapu, [[20.0]], r=0.5)
    documents = bapu_service.describe(extended)
    restored = bapu_service.restore_bapu(extended.covering, grid, documents)
    assert [w.patch_id for w in restored.windows] == [w.patch_id for w in extended.windows]
    assert np.allclose(restored.total(), extended.total())
    assert restored.plateau_ids == extended.plateau_ids


def test_fourier_l1_growth_is_flat_at_half(covering_service, bapu_service):
    grid = GridSpec(1, 8192, 16 * math.pi)
    covering = covering_service.build_ball_covering(1, 0.5, 2.0, 100.0)
    report = bapu_service.certify_fourier_growth(bapu_service.build_bapu(covering, grid), 1)
    assert report.p == "1"
    assert report.fitted_windows >= 4
    assert report.passed
