import numpy as np
import pytest

from fimeff import cli, formats


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def iso_csv(tmp_path):
    z = np.random.default_rng(0).standard_normal((5000, 4))
    path = tmp_path / "iso.csv"
    formats.write_csv(path, z)
    return path


def test_analyze_isotropic(capsys, iso_csv, tmp_path):
    out_file = tmp_path / "report.json"
    code, out, _ = run(capsys, "analyze", "--input", str(iso_csv), "--out", str(out_file))
    assert code == 0
    doc = formats.loads(out)
    assert doc["report"]["eta"] == 1.0
    assert doc["config"]["sigma_sq"] == 1.0
    assert out_file.read_text() == out
    assert formats.from_tree(doc["report"]).d_eff == 4


def test_analyze_with_noise_reports_population_loss(capsys, iso_csv):
    code, out, _ = run(capsys, "analyze", "--input", str(iso_csv), "--noise-var", "0.1", "--lambda", "0.01")
    assert code == 0
    doc = formats.loads(out)
    c = np.array(doc["population_correlation"])
    assert np.allclose(np.diag(c), 1 / 1.1, atol=0.05)
    assert doc["loss"]["lambda"] == 0.01
    assert doc["report"]["offdiag_mass"] is not None


def test_analyze_duplicate_column(capsys, tmp_path):
    z = np.random.default_rng(1).standard_normal((2000, 5))
    z[:, 3] = z[:, 2]
    path = tmp_path / "dup.bin"
    formats.write_bin(path, z)
    code, out, _ = run(capsys, "analyze", "--input", str(path))
    assert code == 0
    doc = formats.loads(out)
    assert doc["report"]["condition_number"] == float("inf")
    assert doc["report"]["eta"] < 1
    assert doc["collapse"]["null_eigen_count"] == 1
    assert doc["input"]["format"] == "bin-f64"


def test_analyze_all_constant_names_dimensions(capsys, tmp_path):
    path = tmp_path / "flat.csv"
    formats.write_csv(path, np.ones((10, 3)))
    code, _, err = run(capsys, "analyze", "--input", str(path))
    assert code == 3
    assert "collapsed" in err and "0, 1, 2" in err


def test_analyze_empty_file(capsys, tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    code, _, err = run(capsys, "analyze", "--input", str(path), "--format", "csv")
    assert code == 3
    assert "line 1" in err


def test_analyze_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "analyze", "--input", str(tmp_path / "nope.csv"))
    assert code == 3


def test_loss_sign_pattern(capsys, tmp_path):
    z = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    formats.write_csv(tmp_path / "a.csv", z)
    formats.write_csv(tmp_path / "b.csv", z)
    code, out, _ = run(capsys, "loss", "--input", str(tmp_path / "a.csv"), "--input-b", str(tmp_path / "b.csv"))
    assert code == 0
    doc = formats.loads(out)
    assert doc["loss"]["total"] == 0.0
    assert doc["cross_correlation"] == [[1.0, 0.0], [0.0, 1.0]]


def test_loss_identical_files(capsys, iso_csv):
    code, out, _ = run(capsys, "loss", "--input", str(iso_csv), "--input-b", str(iso_csv))
    assert code == 0
    assert formats.loads(out)["loss"]["invariance"] < 1e-28


def test_loss_shape_mismatch(capsys, tmp_path):
    formats.write_csv(tmp_path / "a.csv", np.ones((4, 2)) * [[1], [2], [3], [4]])
    formats.write_csv(tmp_path / "b.csv", np.ones((4, 3)) * [[1], [2], [3], [4]])
    code, _, err = run(capsys, "loss", "--input", str(tmp_path / "a.csv"), "--input-b", str(tmp_path / "b.csv"))
    assert code == 3
    assert "(4, 2)" in err and "(4, 3)" in err


def test_train_writes_trace(capsys, tmp_path):
    trace_path = tmp_path / "trace.csv"
    code, out, _ = run(capsys, "train", "--steps", "40", "--batch-n", "128", "--trace-out", str(trace_path))
    assert code == 0
    trace = formats.read_trace_csv(trace_path)
    assert len(trace) == 40
    doc = formats.loads(out)
    assert doc["final_step"]["step"] == 39
    assert doc["config"]["steps"] == 40
    assert np.array(doc["encoder"]["weights"]).shape == (4, 8)


def test_train_zero_steps_is_usage_error(capsys):
    code, _, err = run(capsys, "train", "--steps", "0")
    assert code == 2
    assert "steps" in err


def test_train_overflow_exit_status(capsys):
    code, _, err = run(capsys, "train", "--steps", "20", "--lr", "1e300")
    assert code == 4
    assert "diverged" in err


def test_validate_unknown_claim(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["validate", "lemma2"])
    assert exc.value.code == 2


def test_validate_lemma3_small_n(capsys):
    code, _, err = run(capsys, "validate", "lemma3", "--samples", "100")
    assert code == 2
    assert "sample_count" in err


def test_validate_lemma1(capsys):
    code, out, err = run(capsys, "validate", "lemma1")
    assert code == 0
    doc = formats.loads(out)
    assert doc["passed"] is True
    (res,) = doc["results"]
    assert res["measured"]["max_abs_dev"] <= res["tolerance"]["max_abs_dev"]
    assert "PASS lemma1" in err


def test_validate_failure_exit_status(capsys):
    # theorem2 with almost no training cannot meet the decorrelation bar
    code, out, _ = run(capsys, "validate", "theorem2", "--steps", "1")
    assert code == 1
    assert formats.loads(out)["passed"] is False


def test_validate_all(capsys):
    code, out, err = run(capsys, "validate", "all")
    assert code == 0, err
    names = {r["name"] for r in formats.loads(out)["results"]}
    assert names == {
        "lemma1_isotropic_fim",
        "lemma3_closed_form",
        "lemma4_isotropy",
        "theorem1_isotropic_fim",
        "theorem2_optimal_efficiency",
        "prop1_spectrum_map",
    }
