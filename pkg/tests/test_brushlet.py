import math

import numpy as np
import pytest

from app.core.constants import WindowForm
from app.models.brushlet import CoeffArray, IntervalSpec
from app.models.exponent import SpaceParams
from app.models.signal import Signal
from app.services.brushlet_service import BrushletService, coefficient_weight


@pytest.fixture(scope="module")
def cube_covering(covering_service):
    return covering_service.build_cube_covering(1, 0.5, trunc_radius=48.0)


@pytest.fixture(scope="module")
def frame(brushlet_service, cube_covering, grid):
    return brushlet_service.build_frame(cube_covering, grid)


def test_interval_snapping(grid):
    interval = IntervalSpec.snapped(-1.0, 3.0, grid)
    assert interval.a >= -1.0 and interval.b <= 3.0
    assert interval.count(grid) == 63
    assert interval.a / grid.dxi % 1 == pytest.approx(0.5)
    with pytest.raises(ValueError):
        IntervalSpec.snapped(0.01, 0.02, grid)


def test_frame_uses_the_shrunk_dual(frame, cube_covering):
    assert frame.keys == sorted(tuple(p.index) for p in cube_covering.patches)
    assert all(w.descriptor.support_scale == pytest.approx(0.8) for w in frame.dual.windows)
    assert all(w.form == WindowForm.NORMALIZED_BUMP for w in frame.dual.windows)
    for k in frame.keys:
        assert frame.dual_local[k].shape == frame.box_shape(k)


def test_frame_needs_cubes(brushlet_service, covering_service, grid):
    covering = covering_service.build_ball_covering(1, 0.5, 2.0, 48.0)
    with pytest.raises(ValueError):
        brushlet_service.build_frame(covering, grid)


def test_roundtrip(brushlet_service, signal_service, frame, grid):
    probe = signal_service.random_bandlimited(grid, seed=4, radius=32.0)
    report = brushlet_service.roundtrip_report(probe, frame)
    assert report.passed
    assert report.relative_error <= 1e-6
    assert report.coefficients > 0


def test_synthesis_is_linear(brushlet_service, signal_service, frame, grid):
    f = signal_service.random_bandlimited(grid, seed=1, radius=20.0)
    g = signal_service.random_bandlimited(grid, seed=2, radius=20.0)
    c = brushlet_service.analyze(f, frame, tail_energy=0.0) + brushlet_service.analyze(g, frame, tail_energy=0.0).scaled(2.0)
    restored = brushlet_service.synthesize_spectrum(c, frame)
    assert np.allclose(restored.coeffs, f.coeffs + 2.0 * g.coeffs, atol=1e-9)


def test_atoms_are_cached_and_bounded(brushlet_service, signal_service, frame):
    k = frame.keys[len(frame.keys) // 2]
    atom = brushlet_service.build_atom((3,), k, frame)
    assert brushlet_service.build_atom((3,), k, frame) is atom
    assert atom.spectrum_values.shape == frame.box_shape(k)
    assert signal_service.lp_norm(atom.samples, 2) <= 1.0 + 1e-12
    with pytest.raises(KeyError):
        brushlet_service.build_atom((0,), (10 ** 6,), frame)


def test_analysis_matches_inner_products(brushlet_service, signal_service, frame, grid):
    f = signal_service.random_bandlimited(grid, seed=9, radius=10.0)
    c = brushlet_service.analyze(f, frame, tail_energy=0.0)
    k = (1,)
    atom = brushlet_service.build_atom((2,), k, frame)
    inner = np.sum(f.coeffs[frame.grid_slices(k)] * atom.spectrum_values) * grid.dxi
    assert c[((2,), k)] == pytest.approx(complex(inner), abs=1e-10)


def test_gram_report_shape(brushlet_service, frame):
    report = brushlet_service.gram_deviation(frame, cutoff=8)
    assert set(report.per_patch) == {p.id for p in frame.covering.patches}
    assert report.max_deviation == max(report.per_patch.values())
    assert report.cutoff == 8


def test_sequence_norm_weights():
    block = CoeffArray({(3,): np.array([1.0 + 0j])})
    service = BrushletService()
    assert service.sequence_norm(block, SpaceParams(0.5, "2", "2", 0.0), 1) == pytest.approx(1.0)
    assert service.sequence_norm(block, SpaceParams(0.5, "2", "2", 1.0), 1) == pytest.approx(9.0)
    with pytest.raises(ValueError):
        coefficient_weight((1,), SpaceParams(1.0, "2", "2"), 1)


def test_coefficient_array_lookup():
    c = CoeffArray({(2,): np.array([1j, 2.0])})
    assert c[((1,), (2,))] == 2.0
    assert c[((5,), (2,))] == 0j
    assert c[((0,), (7,))] == 0j
    assert c.size() == 2
    assert [n for n, _, _ in c.entries()] == [(0,), (1,)]


def test_frame_norm_equivalence(brushlet_service, signal_service, cube_covering, grid):
    def family(g):
        return [signal_service.random_bandlimited(g, seed, 24.0) for seed in range(3)]

    report = brushlet_service.frame_norm_equivalence_report(cube_covering, grid, SpaceParams(0.5, "2", "2"), family)
    assert report.signals == 3
    assert [interval.n for interval in report.intervals] == [grid.n, 2 * grid.n]
    assert report.passed
    assert math.isfinite(report.intervals[0].ratio_max)


def test_synthesis_boundedness(brushlet_service, bapu_service, frame, cube_covering, grid):
    bapu = bapu_service.build_bapu(cube_covering, grid)
    report = brushlet_service.synthesis_boundedness(frame, bapu, SpaceParams(0.5, "2", "2"), trials=3, seed=1)
    assert report.trials == 3
    assert report.passed
    assert 0 < report.ratio_min <= report.ratio_max


def test_sequence_norm_uses_the_complex_modulus():
    block = CoeffArray({(3,): np.array([1j, 3 + 4j])})
    service = BrushletService()
    assert service.sequence_norm(block, SpaceParams(0.5, "2", "2", 0.0), 1) == pytest.approx(math.sqrt(26))
    assert service.sequence_norm(block, SpaceParams(0.5, "1", "1", 0.0), 1) == pytest.approx(6.0 * 3 ** -0.5)
    assert service.sequence_norm(block, SpaceParams(0.0, "inf", "inf", 0.0), 1) == pytest.approx(5.0)


def test_synthesis_inverts_analysis_on_samples(brushlet_service, signal_service, frame, grid):
    f = signal_service.fft_inverse(signal_service.random_bandlimited(grid, seed=6, radius=32.0))
    restored = brushlet_service.synthesize(brushlet_service.analyze(f, frame), frame)
    assert isinstance(restored, Signal)
    error = signal_service.lp_norm(Signal(grid, restored.samples - f.samples), 2)
    assert error <= 1e-6 * signal_service.lp_norm(f, 2)


def test_worst_roundtrip_over_a_family(brushlet_service, signal_service, frame, grid):
    signals = [signal_service.random_bandlimited(grid, seed, 32.0) for seed in range(3)]
    worst = brushlet_service.worst_roundtrip(signals, frame)
    errors = [brushlet_service.roundtrip_report(f, frame).relative_error for f in signals]
    assert worst.relative_error == max(errors)
    assert worst.passed
    with pytest.raises(ValueError):
        brushlet_service.worst_roundtrip([], frame)
