import numpy as np
import pytest

from wildbregman.design import FixedDesignDataset, PredictionMatrix
from wildbregman.geometry import Box
from wildbregman.potentials import builtin_loss
from wildbregman.trainers import (LinearTrainer, SaturatedTrainer,
                                  check_nonexpansive, fit_linear_class,
                                  fit_saturated)


def box(d, b):
    return Box(np.full(d, -b), np.full(d, b))


def test_saturated_interior_returns_responses():
    loss = builtin_loss("squared_l2", 2)
    data = FixedDesignDataset(None, np.array([[0.5, -0.5], [1.0, 2.0]]))
    fit = fit_saturated(loss, box(2, 10.0), data)
    assert np.array_equal(fit.values, data.responses)


def test_saturated_squared_l2_clamps():
    loss = builtin_loss("squared_l2", 1)
    data = FixedDesignDataset(None, np.array([[1.5], [-0.2], [0.3]]))
    fit = fit_saturated(loss, Box(np.array([0.0]), np.array([1.0])), data)
    assert np.allclose(fit.values, [[1.0], [0.0], [0.3]])


def test_saturated_sqrt_bernoulli_boundary():
    # minimizer of D(0.1, .) over [0.2, 0.8]: boundary point, verified
    # against a fine 1-d grid
    loss = builtin_loss("sqrt_bernoulli", 1, eps0=0.05)
    data = FixedDesignDataset(None, np.array([[0.1]]))
    cset = Box(np.array([0.2]), np.array([0.8]))
    fit = fit_saturated(loss, cset, data)
    grid = np.linspace(0.2, 0.8, 60001)
    vals = [loss.divergence([0.1], [g]) for g in grid]
    best = grid[int(np.argmin(vals))]
    assert fit.values[0, 0] == pytest.approx(best, abs=1e-5)
    assert fit.values[0, 0] == pytest.approx(0.2, abs=1e-5)


def test_saturated_kl_projects_onto_clipped_simplex():
    loss = builtin_loss("clipped_simplex_kl", 2, eta0=0.1)
    cset = loss.domain
    data = FixedDesignDataset(None, np.array([[0.5, 0.5], [0.15, 0.85]]))
    fit = fit_saturated(loss, cset, data)
    assert np.all(cset.contains_rows(fit.values))
    # interior rows are fixed points
    assert np.allclose(fit.values, data.responses, atol=1e-8)


def test_saturated_determinism():
    loss = builtin_loss("squared_l2", 2)
    data = FixedDesignDataset(None, np.random.default_rng(0).normal(size=(20, 2)))
    cset = box(2, 0.5)
    a = fit_saturated(loss, cset, data).values
    b = fit_saturated(loss, cset, data).values
    assert np.array_equal(a, b)


def test_linear_recovers_realizable_data():
    rng = np.random.default_rng(1)
    loss = builtin_loss("squared_l2", 2)
    X = rng.uniform(-1, 1, size=(60, 3))
    theta = rng.normal(size=(3, 2))
    Y = X @ theta + 0.3
    data = FixedDesignDataset(X, Y)
    fit = fit_linear_class(loss, box(2, 50.0), data)
    train_loss = float(np.mean(loss.divergence_rows(Y, fit.values)))
    assert train_loss <= 1e-8


def test_linear_zero_features_gives_mean():
    loss = builtin_loss("squared_l2", 1)
    X = np.zeros((5, 1))
    Y = np.array([[1.0], [2.0], [3.0], [4.0], [5.0]])
    fit = fit_linear_class(loss, box(1, 50.0), FixedDesignDataset(X, Y))
    assert np.allclose(fit.values, 3.0, atol=1e-5)


def test_linear_more_iters_never_worse():
    rng = np.random.default_rng(2)
    loss = builtin_loss("squared_l2", 1)
    X = rng.uniform(-1, 1, size=(40, 2))
    Y = np.tanh(X @ rng.normal(size=(2, 1))) + 0.1 * rng.normal(size=(40, 1))
    data = FixedDesignDataset(X, Y)
    cset = box(1, 10.0)

    def obj(max_iters):
        tr = LinearTrainer(loss, cset, max_iters=max_iters)
        fit = tr.fit(data)
        return float(np.mean(loss.divergence_rows(Y, fit.values)))

    assert obj(400) <= obj(200) + 1e-12


def test_linear_predictor_evaluates_off_design():
    rng = np.random.default_rng(3)
    loss = builtin_loss("squared_l2", 1)
    X = rng.uniform(-1, 1, size=(50, 2))
    theta = np.array([[1.0], [-2.0]])
    Y = X @ theta
    trainer = LinearTrainer(loss, box(1, 50.0))
    pred = trainer.fit_predictor(FixedDesignDataset(X, Y))
    Xnew = rng.uniform(-1, 1, size=(10, 2))
    assert np.allclose(pred.predict(Xnew), Xnew @ theta, atol=1e-4)


def test_nonexpansive_zero_noise():
    loss = builtin_loss("squared_l2", 1)
    trainer = SaturatedTrainer(loss, box(1, 10.0))
    F = PredictionMatrix(np.array([[0.1], [0.2]]))
    out = check_nonexpansive(loss, trainer, F, np.zeros((2, 1)))
    assert out["lhs"] == 0.0 and out["rhs"] == 0.0 and out["holds"]


def test_nonexpansive_saturated_interior_closed_form(rng):
    # interior data: fdagger = fstar, ftilde = fstar + u, so
    # lhs = 0.5 mean||u||^2 and rhs = mean||u||^2
    loss = builtin_loss("squared_l2", 2)
    trainer = SaturatedTrainer(loss, box(2, 10.0))
    F = PredictionMatrix(rng.uniform(-1, 1, size=(30, 2)))
    U = rng.uniform(-0.5, 0.5, size=(30, 2))
    out = check_nonexpansive(loss, trainer, F, U)
    m = float(np.mean(np.sum(U * U, axis=1)))
    assert out["lhs"] == pytest.approx(0.5 * m, rel=1e-9)
    assert out["rhs"] == pytest.approx(m, rel=1e-9)
    assert out["holds"]


def test_nonexpansive_saturated_clamped_holds(rng):
    # clamp is monotone and 1-Lipschitz per coordinate, so the contract
    # holds even when rows saturate the box
    loss = builtin_loss("squared_l2", 2)
    trainer = SaturatedTrainer(loss, box(2, 0.4))
    F = PredictionMatrix(np.clip(rng.uniform(-0.6, 0.6, size=(50, 2)), -0.4, 0.4))
    U = rng.uniform(-0.5, 0.5, size=(50, 2))
    out = check_nonexpansive(loss, trainer, F, U)
    assert out["holds"]


def test_linear_nonexpansive_diagnostic_reports(rng):
    loss = builtin_loss("squared_l2", 2)
    trainer = LinearTrainer(loss, box(2, 10.0))
    X = rng.uniform(-1, 1, size=(50, 3))
    F = PredictionMatrix(X @ rng.normal(size=(3, 2)) * 0.3)
    U = rng.uniform(-0.3, 0.3, size=(50, 2))
    out = check_nonexpansive(loss, trainer, F, U, inputs=X)
    assert set(out) == {"lhs", "rhs", "holds"}
    assert isinstance(out["holds"], bool)
