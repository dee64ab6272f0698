import numpy as np
import pytest

from wildbregman.errors import RejectedInputError
from wildbregman.harness import (CoverageExperiment, SyntheticSpec,
                                 generate_synthetic, realized_excess_risk,
                                 run_coverage)
from wildbregman.potentials import builtin_loss
from wildbregman.trainers import SaturatedTrainer
from wildbregman.geometry import Box


def test_generate_deterministic():
    spec = SyntheticSpec(n=30, d=2, seed=11)
    d1, o1 = generate_synthetic(spec)
    d2, o2 = generate_synthetic(spec)
    assert np.array_equal(d1.responses, d2.responses)
    assert np.array_equal(o1.noise, o2.noise)


def test_responses_reconstruct_exactly():
    spec = SyntheticSpec(n=25, d=3, fstar_family="nonlinear", seed=2)
    data, oracle = generate_synthetic(spec)
    assert np.array_equal(data.responses,
                          oracle.fstar_preds.values + oracle.noise)


def test_zero_noise_amplitude():
    spec = SyntheticSpec(n=10, d=1, noise_scale=0.0, seed=0)
    data, oracle = generate_synthetic(spec)
    assert oracle.w_inf == 0.0
    assert np.array_equal(data.responses, oracle.fstar_preds.values)


def test_scaled_rademacher_amplitude():
    spec = SyntheticSpec(n=50, d=2, noise_family="scaled_rademacher",
                         noise_scale=0.3, seed=1)
    _, oracle = generate_synthetic(spec)
    assert np.all(np.abs(oracle.noise) == pytest.approx(0.3))
    assert oracle.w_inf == pytest.approx(0.3)


def test_heteroskedastic_amplitudes_differ():
    spec = SyntheticSpec(n=5000, d=3, noise_family="heteroskedastic",
                         noise_scale=0.5, seed=4)
    _, oracle = generate_synthetic(spec)
    maxes = np.max(np.abs(oracle.noise), axis=0)
    assert maxes[0] < maxes[1] < maxes[2]


def test_domain_overflow_rejected():
    loss = builtin_loss("sqrt_bernoulli", 2, eps0=0.1)
    spec = SyntheticSpec(n=20, d=2, fstar_scale=0.5, noise_scale=0.5, seed=0)
    with pytest.raises(RejectedInputError):
        generate_synthetic(spec, loss)


def test_simplex_domain_unsupported():
    loss = builtin_loss("clipped_simplex_kl", 2, eta0=0.1)
    with pytest.raises(RejectedInputError):
        generate_synthetic(SyntheticSpec(n=10, d=2, seed=0), loss)


def test_conditional_mean_empirical(rng):
    # empirical mean of Y - F* within the CLT band 4a/sqrt(N) per coordinate
    a = 0.25
    spec = SyntheticSpec(n=100_000, d=2, noise_scale=a, seed=9)
    data, oracle = generate_synthetic(spec)
    mean = np.mean(data.responses - oracle.fstar_preds.values, axis=0)
    assert np.all(np.abs(mean) <= 4.0 * a / np.sqrt(100_000))


def test_realized_excess_risk_zero_for_fstar():
    loss = builtin_loss("squared_l2", 2)
    data, oracle = generate_synthetic(SyntheticSpec(n=20, d=2, seed=3), loss)
    assert realized_excess_risk(loss, data, oracle.fstar_preds,
                                oracle) == pytest.approx(0.0, abs=1e-12)


def test_realized_excess_risk_nonpositive_for_erm():
    # the saturated trainer minimizes the training loss exactly, so its
    # training-loss gap to any other predictor is <= 0
    loss = builtin_loss("squared_l2", 2)
    data, oracle = generate_synthetic(SyntheticSpec(n=30, d=2, seed=5), loss)
    trainer = SaturatedTrainer(loss, Box(np.full(2, -10.0), np.full(2, 10.0)))
    fhat = trainer.fit(data)
    assert realized_excess_risk(loss, data, fhat, oracle) <= 1e-12


def test_realized_excess_risk_shape_mismatch():
    loss = builtin_loss("squared_l2", 2)
    data, oracle = generate_synthetic(SyntheticSpec(n=10, d=2, seed=0), loss)
    from wildbregman.design import PredictionMatrix
    bad = PredictionMatrix(np.zeros((5, 2)))
    with pytest.raises(RejectedInputError):
        realized_excess_risk(loss, data, bad, oracle)


def test_run_coverage_rejects_zero_reps():
    exp = CoverageExperiment(theorem="lemma_5_1", reps=0, delta=0.05,
                             spec=SyntheticSpec(n=10, d=1))
    with pytest.raises(RejectedInputError):
        run_coverage(exp)


def test_run_coverage_rejects_few_probabilistic_reps():
    exp = CoverageExperiment(theorem="thm_5_1_excess", reps=10, delta=0.05,
                             spec=SyntheticSpec(n=10, d=1))
    with pytest.raises(RejectedInputError):
        run_coverage(exp)


def test_run_coverage_lemma_bit_identical():
    exp = CoverageExperiment(theorem="lemma_5_1", reps=20, delta=0.05,
                             spec=SyntheticSpec(n=50, d=2, seed=21),
                             cset_bound=0.4)
    r1 = run_coverage(exp)
    r2 = run_coverage(exp)
    assert r1.per_replication == r2.per_replication
    assert r1.passed and r1.errors == 0
    # recorded lhs is the process value at the realized wild radius, which
    # the wild optimism dominates
    for rec in r1.per_replication:
        assert rec["lhs"] <= rec["rhs"] + 1e-8


def test_run_coverage_isolates_errors():
    # saturated trainer with a loose box interpolates, so calibration to a
    # positive radius errors; the report must count those separately
    exp = CoverageExperiment(theorem="thm_5_1_excess", reps=100, delta=0.05,
                             spec=SyntheticSpec(n=20, d=1, seed=1),
                             cset_bound=10.0)
    report = run_coverage(exp)
    assert report.errors == 100
    assert report.replications == 0
    assert not report.passed
    assert all(r["error"] is not None for r in report.per_replication)


def test_run_coverage_thm51_passes_small():
    exp = CoverageExperiment(theorem="thm_5_1_excess", reps=100, delta=0.05,
                             spec=SyntheticSpec(n=60, d=2, seed=3),
                             trainer={"kind": "linear"})
    report = run_coverage(exp)
    assert report.errors == 0
    assert report.passed
    assert report.target_coverage == pytest.approx(0.6)


def test_coverage_report_csv_roundtrip(tmp_path):
    exp = CoverageExperiment(theorem="lemma_5_1", reps=5, delta=0.05,
                             spec=SyntheticSpec(n=30, d=1, seed=2),
                             cset_bound=0.4)
    report = run_coverage(exp)
    path = tmp_path / "reps.csv"
    report.write_csv(path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "rep,seed,lhs,rhs,holds,error"
    assert len(lines) == 6
