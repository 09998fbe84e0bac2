import math

import numpy as np
import pytest

from fimeff import barlow, fim, lab, spectral
from fimeff.errors import PreconditionError


def test_validation_result_pass_rule():
    assert lab.ValidationResult("x", {"a": 0.1}, {"a": 0.1}).passed
    assert not lab.ValidationResult("x", {"a": 0.2, "b": 0.0}, {"a": 0.3, "b": -1.0}).passed
    with pytest.raises(ValueError):
        lab.ValidationResult("x", {"a": 0.1}, {"b": 0.1})


def test_generate_synthetic_identity_cov():
    spec = lab.SyntheticSpec((1.0, 1.0), sample_count=100_000, rotation_seed=3)
    z = lab.generate_synthetic(spec, seed=1)
    assert np.max(np.abs(spectral.covariance(z) - np.eye(2))) <= 5 / math.sqrt(100_000)


def test_generate_synthetic_rotated_cov():
    spec = lab.SyntheticSpec((3.0, 1.0, 0.5), sample_count=100_000, rotation_seed=9)
    z = lab.generate_synthetic(spec, seed=2)
    cov = spec.covariance()
    np.testing.assert_allclose(np.linalg.eigvalsh(cov)[::-1], [3.0, 1.0, 0.5], rtol=1e-12)
    assert np.max(np.abs(spectral.covariance(z, centered=False) - cov)) <= 5 * 3 / math.sqrt(100_000)


def test_generate_synthetic_zero_and_determinism():
    spec = lab.SyntheticSpec((0.0, 0.0), sample_count=10)
    assert not np.any(lab.generate_synthetic(spec))
    spec = lab.SyntheticSpec((1.0, 2.0), sample_count=50, rotation_seed=1)
    assert lab.generate_synthetic(spec, 4).tobytes() == lab.generate_synthetic(spec, 4).tobytes()


def test_random_orthogonal():
    q = lab.random_orthogonal(6, 0)
    np.testing.assert_allclose(q.T @ q, np.eye(6), atol=1e-14)


def test_lemma1_default():
    res = lab.validate_lemma1(fim.GaussianModelConfig(1.0, 1.0, 4), 100_000, seed=0)
    assert res.passed
    assert res.measured["max_abs_dev"] < 0.016


def test_lemma1_sigma_four():
    res = lab.validate_lemma1(fim.GaussianModelConfig(4.0, 1.0, 2), 100_000, seed=1)
    assert res.passed
    assert res.extras["fim_diag_mean"] == pytest.approx(0.25, abs=0.01)


def test_lemma1_precondition():
    with pytest.raises(PreconditionError):
        lab.validate_lemma1(mc_samples=1000)


def test_lemma3_diagonal():
    res = lab.validate_lemma3(lab.SyntheticSpec((2.0, 1.0)), 1.0, seed=0)
    assert res.passed
    emp = np.array(res.extras["empirical"])
    assert np.max(np.abs(emp - np.diag([2 / 3, 1 / 2]))) <= 5 / math.sqrt(100_000)


def test_lemma3_rotated():
    res = lab.validate_lemma3(lab.SyntheticSpec((3.0, 1.0, 0.2), rotation_seed=5), 0.5, seed=3)
    assert res.passed


def test_lemma3_strong_signal():
    res = lab.validate_lemma3(lab.SyntheticSpec((100.0, 100.0)), 1.0, seed=0)
    assert res.passed
    np.testing.assert_allclose(np.array(res.extras["population"]), (100 / 101) * np.eye(2), atol=1e-14)
    assert res.extras["population"][0][0] == pytest.approx(0.990, abs=1e-3)


def test_lemma3_noise_dominated():
    res = lab.validate_lemma3(lab.SyntheticSpec((1.0, 2.0)), 1e6, seed=0)
    assert res.passed
    assert np.max(np.abs(res.extras["empirical"])) < 1e-2


def test_lemma3_precondition():
    with pytest.raises(PreconditionError):
        lab.validate_lemma3(lab.SyntheticSpec((1.0,), sample_count=100))


def test_lemma3_deviation_shrinks_with_n():
    devs = []
    for n in (10_000, 40_000):
        runs = [lab.validate_lemma3(lab.SyntheticSpec((2.0, 1.0), sample_count=n), 1.0, seed=s) for s in range(8)]
        devs.append(np.mean([r.measured["max_abs_dev"] for r in runs]))
    ratio = devs[0] / devs[1]
    assert 1.0 <= ratio <= 4.0


def test_lemma4_forward():
    res = lab.validate_lemma4(1.0, 1.0, 3)
    assert res.passed
    assert res.extras["c_diag"] == pytest.approx(0.5, abs=1e-15)


def test_lemma4_implied_bound():
    res = lab.validate_lemma4(1.0, 1.0, 3, delta=0.01)
    assert res.extras["implied_nu_lower_bound"] == pytest.approx(99.0)


def test_lemma4_noiseless_limit():
    res = lab.validate_lemma4(5.0, 1e-300, 4)
    assert res.passed
    assert res.extras["c_diag"] == 1.0


def test_lemma4_precondition():
    with pytest.raises(PreconditionError):
        lab.validate_lemma4(0.0)


def test_theorem1_equal_spectrum():
    res = lab.validate_theorem1(lab.SyntheticSpec((3.0,) * 16), fim.GaussianModelConfig(1.0, 1.0, 16))
    assert res.passed
    assert res.measured["relative_spread"] == 0.0
    assert res.extras["c"] == pytest.approx(0.75)


def test_theorem1_zero_is_degenerate():
    res = lab.validate_theorem1(lab.SyntheticSpec((0.0,) * 4), fim.GaussianModelConfig(dim=4))
    assert not res.passed
    assert res.measured["degenerate"] == 1.0


def test_theorem1_rejects_unequal():
    with pytest.raises(PreconditionError):
        lab.validate_theorem1(lab.SyntheticSpec((2.0, 1.0)))


def test_evaluate_rank_one_encoder_collapses():
    cfg = lab.Theorem2Config()
    rng = np.random.default_rng(0)
    w = np.outer(rng.standard_normal(4), rng.standard_normal(8))
    ev = lab.evaluate_encoder(barlow.LinearEncoder(w), np.eye(8), cfg)
    assert ev.report.eta == 1 / 4
    assert ev.report.d_eff == 1


def test_theorem2_short_run_records_trace():
    res = lab.validate_theorem2(lab.Theorem2Config(steps=200))
    assert len(res.trace) == 200
    assert set(res.measured) == {"eta_shortfall", "offdiag_mass", "diag_gap"}


def test_theorem2_offdiag_improves_with_training():
    res = lab.validate_theorem2()
    assert res.passed
    trace = res.trace
    assert trace.final.offdiag_mass < trace[100].offdiag_mass


def test_sweep_worked_example():
    (res,) = lab.sweep_spectrum_map([(4.0, 3.0, 2.0, 1.0)], [(1.0, 1.0)])
    assert res.passed
    np.testing.assert_allclose(res.extras["lam"], [0.8, 0.75, 2 / 3, 0.5], rtol=1e-15)


def test_sweep_equal_profiles():
    for res in lab.sweep_spectrum_map([(2.0,) * 4], lab.DEFAULT_MODEL_GRID):
        assert res.extras["eta_from_nu"] == res.extras["eta_from_lambda"] == 1.0


def test_sweep_zero_maps_to_zero():
    (res,) = lab.sweep_spectrum_map([(3.0, 1.0, 0.0)], [(1.0, 1.0)])
    assert res.extras["lam"][-1] == 0.0


def test_sweep_defaults_pass():
    results = lab.sweep_spectrum_map()
    assert len(results) == len(lab.DEFAULT_PROFILES) * len(lab.DEFAULT_MODEL_GRID)
    assert all(r.passed for r in results)
    # compression of the spectrum can move the cut
    assert any(not r.extras["cut_preserved"] for r in results)


def test_sweep_requires_grids():
    with pytest.raises(PreconditionError):
        lab.sweep_spectrum_map([], [(1.0, 1.0)])


def test_validators_deterministic():
    a = lab.validate_lemma3(lab.SyntheticSpec((2.0, 1.0), sample_count=10_000), 1.0, seed=4)
    b = lab.validate_lemma3(lab.SyntheticSpec((2.0, 1.0), sample_count=10_000), 1.0, seed=4)
    assert a.measured == b.measured
