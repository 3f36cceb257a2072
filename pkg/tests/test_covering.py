import math

import numpy as np
import pytest

from app.core.constants import CoveringFamily, ShapeKind
from app.models.patch import FrequencyPatch


@pytest.mark.parametrize("alpha,n0", [(0.0, 7), (1 / 3, 5), (0.5, 4), (2 / 3, 4)])
def test_ball_covering_height(covering_service, alpha, n0):
    covering = covering_service.build_ball_covering(1, alpha, 2.0, 50.0)
    assert covering.certificate.complete
    assert covering.height_n0 == n0


@pytest.mark.parametrize("alpha", [0.0, 0.5])
def test_ball_covering_is_stable_under_truncation(covering_service, alpha):
    small = covering_service.build_ball_covering(1, alpha, 2.0, 50.0)
    large = covering_service.build_ball_covering(1, alpha, 2.0, 100.0)
    assert small.height_n0 == large.height_n0
    assert small.ratio_K == large.ratio_K
    assert small.certificate.ratio_spread == pytest.approx(large.certificate.ratio_spread)


def test_measure_ratio_spread_at_half(covering_service):
    covering = covering_service.build_ball_covering(1, 0.5, 2.0, 50.0)
    # extremes sit on the patches k = 1 (smallest ratio) and k = 2 (largest)
    assert covering.certificate.ratio_spread == pytest.approx(2 * 10 ** 0.25)


def test_default_r_is_certified(covering_service):
    covering = covering_service.build_ball_covering(1, 0.5, trunc_radius=40.0)
    assert covering.r == pytest.approx(2.0)
    assert covering.certificate.complete
    assert covering.beta == pytest.approx(1.0)


def test_explicit_r_is_reported_not_rejected(covering_service):
    covering = covering_service.build_ball_covering(1, 0.0, 1.0, 10.0)
    assert not covering.certificate.complete
    assert covering.certificate.uncovered_points >= 1
    assert covering.height_n0 == 3
    assert len(covering_service.disjointize(covering)) == 2


def test_lattice_rejects_alpha_one(covering_service):
    with pytest.raises(ValueError):
        covering_service.build_ball_covering(1, 1.0, 2.0, 10.0)


def test_dyadic_covering(covering_service):
    covering = covering_service.build_dyadic_covering(1, 48.0)
    assert covering.family == CoveringFamily.DYADIC
    assert covering.patches[0].shape == ShapeKind.BALL0
    assert all(p.shape == ShapeKind.ANNULUS for p in covering.patches[1:])
    assert covering.patches[-1].size >= 2 * 48.0
    assert covering.certificate.complete
    assert covering.height_n0 == 3
    assert covering.ratio_K == pytest.approx(8 / 3)
    assert len(covering_service.disjointize(covering)) == 2


def test_metric_covering_spacing(covering_service):
    covering = covering_service.build_metric_covering(1, 0.0, 0.5, 10.0)
    centers = np.sort(covering.centers()[:, 0])
    assert np.allclose(np.diff(centers), 0.25)
    assert all(p.size == pytest.approx(0.25) for p in covering.patches)
    assert covering.certificate.complete


def test_metric_covering_needs_small_r(covering_service):
    with pytest.raises(ValueError):
        covering_service.build_metric_covering(1, 0.0, 1.5, 10.0)


def test_disjoint_classes_really_are_disjoint(covering_service):
    covering = covering_service.build_ball_covering(1, 0.5, 2.0, 50.0)
    adjacency = covering_service.intersection_graph(covering)
    classes = covering_service.disjointize(covering)
    assert sorted(i for c in classes for i in c) == list(range(len(covering)))
    for members in classes:
        chosen = set(members)
        for i in members:
            assert not chosen.intersection(int(j) for j in adjacency[i])


def test_cube_covering_2d(covering_service):
    covering = covering_service.build_cube_covering(2, 0.5, trunc_radius=12.0)
    assert covering.certificate.complete
    assert all(p.shape == ShapeKind.CUBE for p in covering.patches)
    assert covering.ratio_K == pytest.approx(math.sqrt(2))


def test_neighbor_map_counts(covering_service):
    coarse = covering_service.build_ball_covering(1, 0.0, 2.0, 40.0)
    fine = covering_service.build_ball_covering(1, 0.5, 2.0, 40.0)
    nmap = covering_service.neighbor_map(coarse, fine)
    assert len(nmap.omega) == len(fine)
    assert len(nmap.lam) == len(coarse)
    assert all(len(o) <= upper for o, upper in zip(nmap.omega, nmap.omega_upper))
    for i, members in enumerate(nmap.omega):
        for j in members:
            assert i in nmap.lam[j]

    report = covering_service.counting_report(coarse, fine, nmap)
    assert report.fine_patches == len(fine)
    assert report.lambda_max >= 1
    assert math.isfinite(report.omega_ratio_max)
    assert report.comparability >= 1.0


def test_neighbor_map_needs_ordered_alphas(covering_service):
    coarse = covering_service.build_ball_covering(1, 0.0, 2.0, 20.0)
    fine = covering_service.build_ball_covering(1, 0.5, 2.0, 20.0)
    with pytest.raises(ValueError):
        covering_service.neighbor_map(fine, coarse)


def test_patch_designated_point_must_lie_inside():
    with pytest.raises(ValueError):
        FrequencyPatch(id="x", index=(1,), shape=ShapeKind.BALL, center=(0.0,), size=1.0, xi=(2.0,))
    patch = FrequencyPatch(id="a", index=(1,), shape=ShapeKind.ANNULUS, center=(0.0,), size=4.0, inner=1.0)
    assert patch.xi == (2.5,)
    assert patch.radial_extent() == (1.0, 4.0)



def _covering(covering_service, alpha, trunc_radius):
    if alpha == 1.0:
        return covering_service.build_dyadic_covering(1, trunc_radius)
    return covering_service.build_ball_covering(1, alpha, trunc_radius=trunc_radius)


@pytest.mark.parametrize("alpha1,alpha2", [(0.0, 1.0), (0.0, 0.5), (0.5, 1.0)])
def test_counting_statistics_are_stable_under_truncation(covering_service, alpha1, alpha2):
    reports = [
        covering_service.counting_report(_covering(covering_service, alpha1, t), _covering(covering_service, alpha2, t))
        for t in (50.0, 100.0)
    ]
    first, second = reports
    assert second.fine_patches > first.fine_patches
    assert second.omega_ratio_max == pytest.approx(first.omega_ratio_max, rel=0.1)
    assert second.lambda_max == first.lambda_max
