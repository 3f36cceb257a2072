import json
import math

from app.main import main
from app.repositories import CoveringRepository, CsvRepository


def test_covering_command(tmp_path):
    code = main(["covering", "--alpha", "0.5", "--trunc", "20", "--n", "1024", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "covering_certificate.json").exists()
    assert (tmp_path / "bapu_certificate.json").exists()
    covering, document = CoveringRepository(tmp_path).get_covering("covering.json")
    assert document.certificate.complete
    assert document.windows is not None and len(document.windows) == len(covering)


def test_metric_covering_command(tmp_path):
    code = main(["covering", "--family", "metric", "--alpha", "0", "--r", "0.5", "--trunc", "5",
                 "--out", str(tmp_path), "-o", "metric.json"])
    assert code == 0
    assert (tmp_path / "metric.json").exists()


def test_norm_command_from_config_file(tmp_path):
    config = tmp_path / "norm.json"
    config.write_text(json.dumps({
        "grid": {"d": 1, "n": 1024},
        "trunc_radius": 20.0,
        "signal": {"kind": "random_bandlimited", "radius": 8.0},
        "norms": [
            {"kind": "alpha", "alpha": 0.5, "p": "2", "q": "2", "s": 0.0},
            {"kind": "besov", "p": "1", "q": "inf", "s": 1.0},
            {"kind": "sobolev", "s": 1.0},
        ],
    }), encoding="utf-8")
    code = main(["norm", "--config", str(config), "--out", str(tmp_path / "run"), "--seed", "3"])
    assert code == 0
    rows = CsvRepository(tmp_path / "run").read("norms.csv")
    assert [row["kind"] for row in rows] == ["alpha", "besov", "sobolev"]
    assert all(float(row["norm"]) > 0 for row in rows)
    assert (tmp_path / "run" / "signal.bin").exists()
    sidecar = json.loads((tmp_path / "run" / "signal.json").read_text(encoding="utf-8"))
    assert sidecar["seed"] == 3


def test_flags_override_the_config_file(tmp_path):
    config = tmp_path / "norm.json"
    config.write_text(json.dumps({"grid": {"n": 1024}, "trunc_radius": 20.0, "signal": {"radius": 8.0}}),
                      encoding="utf-8")
    code = main(["norm", "--config", str(config), "--alpha", "0", "--p", "inf", "--out", str(tmp_path)])
    assert code == 0
    rows = CsvRepository(tmp_path).read("norms.csv")
    assert rows[0]["alpha"] == "0.0"
    assert rows[0]["p"] == "inf"


def test_unknown_config_key_is_a_usage_error(tmp_path):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"colour": "blue"}), encoding="utf-8")
    assert main(["covering", "--config", str(config), "--out", str(tmp_path)]) == 2


def test_missing_config_file_is_a_usage_error(tmp_path):
    assert main(["covering", "--config", str(tmp_path / "absent.json")]) == 2


def test_bad_family_is_a_usage_error(tmp_path):
    assert main(["covering", "--family", "hexagonal", "--out", str(tmp_path)]) == 2


def test_unknown_command_is_a_usage_error():
    assert main(["transmogrify"]) == 2


def test_uncovered_lattice_fails_certification(tmp_path):
    code = main(["covering", "--alpha", "0", "--r", "1", "--trunc", "10", "--out", str(tmp_path)])
    assert code == 1


def test_embed_command_writes_report_and_table(tmp_path):
    code = main(["embed", "--alpha1", "0", "--alpha2", "0.5", "--p", "2", "--q", "2",
                 "--signals", "2", "--seed", "3", "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "embed.json").read_text(encoding="utf-8"))
    assert report["passed"]
    rows = CsvRepository(tmp_path).read("embed.csv")
    assert [row["n"] for row in rows] == ["4096", "8192", "4096"]


def test_repeated_runs_write_identical_artifacts(tmp_path):
    for run in ("first", "second"):
        assert main(["covering", "--alpha", "0.5", "--trunc", "20", "--n", "1024",
                     "--out", str(tmp_path / run)]) == 0
        assert main(["norm", "--signal", "random_bandlimited", "--kind", "alpha", "--alpha", "0.5",
                     "--trunc", "20", "--n", "1024", "--seed", "11", "--out", str(tmp_path / run)]) == 0
    names = sorted(path.name for path in (tmp_path / "first").iterdir())
    assert names == sorted(path.name for path in (tmp_path / "second").iterdir())
    for name in names:
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()


def test_infeasible_sharpness_family_is_an_experiment_failure(tmp_path):
    code = main(["sharpness", "--n", "8192", "--half-width", str(8 * math.pi), "--trunc", "200",
                 "--out", str(tmp_path)])
    assert code == 1
