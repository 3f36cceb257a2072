import math

import numpy as np

from app.models.signal import GridSpec, SpectralSignal
from app.repositories import CoveringRepository, CsvRepository, ReportRepository, SignalRepository
from app.schemas.signal import NormRow, SignalSidecar


def test_covering_document_keeps_patches(tmp_path, covering_service):
    covering = covering_service.build_dyadic_covering(1, 20.0)
    repository = CoveringRepository(tmp_path)
    repository.save_covering("covering.json", covering)
    restored, document = repository.get_covering("covering.json")
    assert document.certificate.n0 == covering.height_n0
    assert [p.id for p in restored.patches] == [p.id for p in covering.patches]
    assert restored.patches[-1].inner == covering.patches[-1].inner
    assert restored.certificate is None
    assert covering_service.certify_alpha_covering(restored).complete


def test_missing_document(tmp_path):
    assert CoveringRepository(tmp_path).get_covering("absent.json") is None


def test_report_json_is_stable(tmp_path, covering_service):
    covering = covering_service.build_ball_covering(1, 0.0, 2.0, 10.0)
    path = ReportRepository(tmp_path).save("nested/certificate.json", covering.certificate)
    text = path.read_text(encoding="utf-8")
    assert text.endswith("\n")
    assert text.index('"n0"') < text.index('"ratio_K"')


def test_csv_header_written_once(tmp_path):
    tables = CsvRepository(tmp_path)
    row = NormRow(kind="alpha", alpha=0.5, p="2", q="2", s=0.0, grid="d=1", signal_id="a", norm=1.5, n_patches=3)
    tables.append("norms.csv", [row])
    tables.append("norms.csv", [row.model_copy(update={"norm": 2.5})])
    rows = tables.read("norms.csv")
    assert [r["norm"] for r in rows] == ["1.5", "2.5"]
    assert (tmp_path / "norms.csv").read_text(encoding="utf-8").count("kind") == 1


def test_signal_samples_round_trip(tmp_path):
    grid = GridSpec(1, 64, 4 * math.pi)
    coeffs = np.arange(64) + 1j * np.arange(64)[::-1]
    sidecar = SignalSidecar(kind="bump_train", d=1, n=64, half_width=grid.half_width, domain="spectral", seed=1)
    repository = SignalRepository(tmp_path)
    path = repository.save_samples("spectrum", SpectralSignal(grid, coeffs), sidecar)
    assert path.stat().st_size == 64 * 16
    loaded, meta = repository.load_samples("spectrum.bin")
    assert isinstance(loaded, SpectralSignal)
    assert np.array_equal(loaded.coeffs, coeffs)
    assert meta.kind == "bump_train"
