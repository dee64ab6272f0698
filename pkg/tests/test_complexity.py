import math

import numpy as np
import pytest

from wildbregman.complexity import (ball_sup, convex_class_bracket,
                                    deviation_term, fixed_point_radius,
                                    pilot_error_oracle, rhat_bound_convex,
                                    wn, wn_tilde_oracle, zn_eps_oracle)
from wildbregman.design import (FixedDesignDataset, PredictionMatrix,
                                sample_sign_matrix)
from wildbregman.errors import RejectedInputError, UnboundedRadiusError
from wildbregman.geometry import Box
from wildbregman.potentials import builtin_loss
from wildbregman.trainers import SaturatedTrainer


def box(d, b):
    return Box(np.full(d, -b), np.full(d, b))


def closed_form(Z, r, n):
    return r * math.sqrt(2.0 / n) * float(np.linalg.norm(Z))


def test_wn_zero_radius(rng):
    loss = builtin_loss("squared_l2", 2)
    F = PredictionMatrix(rng.uniform(-1, 1, size=(20, 2)))
    assert wn(loss, box(2, 5.0), F, rng.normal(size=(20, 2)), 0.0) == 0.0


def test_wn_zero_perturbation(rng):
    loss = builtin_loss("squared_l2", 2)
    F = PredictionMatrix(rng.uniform(-1, 1, size=(20, 2)))
    assert wn(loss, box(2, 5.0), F, np.zeros((20, 2)), 1.0) == 0.0


def test_wn_negative_radius_rejected(rng):
    loss = builtin_loss("squared_l2", 1)
    F = PredictionMatrix(np.zeros((5, 1)))
    with pytest.raises(RejectedInputError):
        wn(loss, box(1, 5.0), F, np.ones((5, 1)), -1.0)


def test_wn_matches_closed_form_interior(rng):
    loss = builtin_loss("squared_l2", 3)
    n = 50
    F = PredictionMatrix(rng.uniform(-1, 1, size=(n, 3)))
    Z = rng.normal(size=(n, 3))
    for r in (0.05, 0.2, 0.5):
        got = wn(loss, box(3, 50.0), F, Z, r)
        assert got == pytest.approx(closed_form(Z, r, n), rel=1e-9)


def test_wn_box_constrained_below_closed_form(rng):
    # with a binding box the supremum cannot exceed the unconstrained bound
    loss = builtin_loss("squared_l2", 2)
    n = 40
    F = PredictionMatrix(rng.uniform(-0.4, 0.4, size=(n, 2)))
    Z = rng.normal(size=(n, 2))
    r = 2.0
    got, info = ball_sup(loss, box(2, 0.4), F, Z, r, full_output=True)
    assert info["method"] == "box_qp"
    assert got <= closed_form(Z, r, n) + 1e-12
    assert got > 0.0


def test_wn_box_qp_matches_long_ascent(rng):
    from wildbregman.complexity import _sup_box_sql2_qp, _sup_numerical
    loss = builtin_loss("squared_l2", 2)
    cset = box(2, 0.4)
    for k in range(5):
        C = rng.uniform(-0.4, 0.4, size=(30, 2))
        Z = rng.normal(size=(30, 2))
        r = float(rng.uniform(0.3, 1.0))
        q = _sup_box_sql2_qp(cset, C, Z, r)
        v, _ = _sup_numerical(loss, cset, C, Z, r, seed=k, max_iters=1000,
                              n_starts=16)
        # ascent is a feasible lower bound; the dual QP is exact
        assert v <= q + 1e-10
        assert q == pytest.approx(v, rel=5e-3)


def test_wn_monotone_in_radius(rng):
    for kind, kwargs, b in [("squared_l2", {}, 0.5),
                            ("sqrt_bernoulli", {"eps0": 0.1}, None)]:
        loss = builtin_loss(kind, 2, **kwargs)
        cset = box(2, b) if b else Box(np.full(2, 0.1), np.full(2, 0.9))
        C = cset.project(rng.uniform(-1, 1, size=(30, 2)))
        F = PredictionMatrix(C)
        Z = rng.normal(size=(30, 2))
        vals = [wn(loss, cset, F, Z, r) for r in np.geomspace(0.01, 1.0, 6)]
        assert all(b2 >= b1 - 1e-9 for b1, b2 in zip(vals, vals[1:]))


def test_scale_concavity_squared_l2(rng):
    # W_n(v)/v <= W_n(c0 u)/u for v >= u, c0 = 1 for squared_l2
    loss = builtin_loss("squared_l2", 2)
    cset = box(2, 0.4)
    C = rng.uniform(-0.4, 0.4, size=(40, 2))
    F = PredictionMatrix(C)
    Z = rng.normal(size=(40, 2))
    grid = np.geomspace(0.01, 2.0, 10)
    ratios = [wn(loss, cset, F, Z, r) / r for r in grid]
    for i, u in enumerate(grid):
        for j in range(i, len(grid)):
            assert ratios[j] <= ratios[i] + 1e-8


def test_oracle_variants_consistency(rng):
    loss = builtin_loss("squared_l2", 2)
    cset = box(2, 5.0)
    n = 30
    F = PredictionMatrix(rng.uniform(-1, 1, size=(n, 2)))
    W = rng.uniform(-0.5, 0.5, size=(n, 2))
    eps = sample_sign_matrix(n, 2, 3)
    r = 0.3
    assert wn_tilde_oracle(loss, cset, F, W, eps, r) == pytest.approx(
        wn(loss, cset, F, eps.values * W, r), rel=1e-12)
    # Z_n^eps >= 0 always (the center is feasible)
    assert zn_eps_oracle(loss, cset, F, W, eps, r) >= 0.0
    assert zn_eps_oracle(loss, cset, F, W, None, r) == pytest.approx(
        wn(loss, cset, F, W, r), rel=1e-12)


def test_lemma_e1_oracle_saturated(rng):
    # noiseless-fit radius squared is at most the un-symmetrized process at
    # that radius, for the (non-expansive) clamp trainer
    loss = builtin_loss("squared_l2", 2)
    cset = box(2, 0.4)
    trainer = SaturatedTrainer(loss, cset)
    for seed in range(10):
        r2 = np.random.default_rng(seed)
        F = r2.uniform(-0.6, 0.6, size=(50, 2))
        W = r2.uniform(-0.3, 0.3, size=(50, 2))
        fdag = trainer.fit(FixedDesignDataset(None, F))
        fhat = trainer.fit(FixedDesignDataset(None, F + W))
        r_hat = math.sqrt(float(np.mean(loss.divergence_rows(fdag.values,
                                                             fhat.values))))
        if r_hat == 0.0:
            continue
        zn = zn_eps_oracle(loss, cset, fdag, W, None, r_hat)
        assert r_hat ** 2 <= zn + 1e-9


def test_pilot_error_zero_when_exact(rng):
    loss = builtin_loss("squared_l2", 2)
    F = PredictionMatrix(rng.uniform(-1, 1, size=(20, 2)))
    eps = sample_sign_matrix(20, 2, 0)
    assert pilot_error_oracle(loss, box(2, 5.0), F, F, eps, 0.5) == 0.0


def test_pilot_error_closed_form(rng):
    loss = builtin_loss("squared_l2", 2)
    n = 30
    F = PredictionMatrix(rng.uniform(-0.5, 0.5, size=(n, 2)))
    G = PredictionMatrix(rng.uniform(-0.5, 0.5, size=(n, 2)))
    eps = sample_sign_matrix(n, 2, 1)
    r = 0.1
    Z = eps.values * (F.values - G.values)
    expect = closed_form(Z, 3.0 * loss.c0 * r, n)
    got = pilot_error_oracle(loss, box(2, 100.0), F, G, eps, r)
    assert got == pytest.approx(expect, rel=1e-9)


def test_deviation_term_substitution():
    loss = builtin_loss("squared_l2", 1)
    # alpha=beta=1, misspec=0, r=1, w_inf=1, d=1, n=100, delta=e^-1
    assert deviation_term(loss, 0.0, 1.0, 1.0, 100, 1,
                          math.exp(-1.0)) == pytest.approx(1.0, rel=1e-12)


def test_deviation_term_zero_case():
    loss = builtin_loss("squared_l2", 1)
    assert deviation_term(loss, 0.0, 0.0, 1.0, 100, 1, 0.1) == 0.0


def test_deviation_term_root_n_scaling():
    loss = builtin_loss("squared_l2", 1)
    a = deviation_term(loss, 0.5, 1.0, 1.0, 100, 2, 0.01)
    b = deviation_term(loss, 0.5, 1.0, 1.0, 200, 2, 0.01)
    assert b == pytest.approx(a / math.sqrt(2.0), rel=1e-12)


def test_deviation_term_rejects_bad_delta():
    loss = builtin_loss("squared_l2", 1)
    with pytest.raises(RejectedInputError):
        deviation_term(loss, 0.0, 1.0, 1.0, 100, 1, 1.5)


def test_fixed_point_radius_zero_process():
    delta, n = math.exp(-9.0), 100
    r = fixed_point_radius(lambda s: 0.0, delta, n, r_max=10.0)
    assert r == pytest.approx(9.0 / math.sqrt(n))


def test_fixed_point_radius_analytic_root():
    # linear evaluator W(s) = k s gives condition r^2 >= k (2+1/log) r,
    # i.e. root r* = k (2 + 1/log(1/delta))
    delta, n = math.exp(-10.0), 400
    k = 0.5  # root k (2 + 1/log) must exceed the grid floor log(1/delta)/sqrt(n)
    factor = 2.0 + 1.0 / 10.0
    r_star = k * factor
    r = fixed_point_radius(lambda s: k * s, delta, n, r_max=10.0)
    assert r == pytest.approx(r_star, rel=1e-4)
    assert r * r >= k * factor * r - 1e-12


def test_fixed_point_radius_rejects_large_delta():
    with pytest.raises(RejectedInputError):
        fixed_point_radius(lambda s: 0.0, 0.05, 100, r_max=10.0)


def test_fixed_point_radius_unbounded():
    with pytest.raises(UnboundedRadiusError):
        fixed_point_radius(lambda s: 100.0 + s, math.exp(-9.0), 100, r_max=5.0)


def test_convex_class_bracket_analytic():
    loss = builtin_loss("squared_l2", 1)
    delta = math.exp(-9.0)
    k = 0.3
    r_dia = 0.1
    factor = loss.c0 * (2.0 + 1.0 / 3.0)
    expect = max(r_dia, k * factor * r_dia / r_dia)
    got = convex_class_bracket(lambda s: k * s, r_dia, delta, loss)
    assert got == pytest.approx(expect, rel=1e-12)


def test_rhat_bound_zero_process_floor():
    loss = builtin_loss("squared_l2", 1)
    delta, n = math.exp(-9.0), 100
    r_dia = 0.2
    r = rhat_bound_convex(lambda s: 0.0, r_dia, delta, n, 0.0, 1, 0.0, loss)
    # with W == 0, w_inf = 0, pilot = 0 the inequality r^2 <= floor gives
    # the largest admissible r = sqrt(max(r_dia^2, log(1/delta)^2/n))
    expect = max(r_dia, 9.0 / math.sqrt(n))
    assert r == pytest.approx(expect, rel=1e-3)


def test_rhat_bound_covers_oracle_radius(rng):
    # Monte Carlo: the data-driven bound dominates the oracle noiseless
    # radius on clamped saturated instances
    loss = builtin_loss("squared_l2", 2)
    cset = box(2, 0.4)
    trainer = SaturatedTrainer(loss, cset)
    delta = math.exp(-9.0)
    hits = total = 0
    for seed in range(60):
        r2 = np.random.default_rng(seed)
        F = r2.uniform(-0.6, 0.6, size=(60, 2))
        W = r2.uniform(-0.3, 0.3, size=(60, 2))
        data = FixedDesignDataset(None, F + W)
        fhat = trainer.fit(data)
        fdag = trainer.fit(FixedDesignDataset(None, F))
        r_hat = math.sqrt(float(np.mean(loss.divergence_rows(fdag.values,
                                                             fhat.values))))
        eps = sample_sign_matrix(60, 2, seed + 1)
        Z = eps.values * (data.responses - fhat.values)
        rho = 1.0
        fdia = trainer.fit(FixedDesignDataset(
            None, fhat.values - rho * Z))
        r_dia = math.sqrt(float(np.mean(loss.divergence_rows(fhat.values,
                                                             fdia.values))))
        if r_dia == 0.0:
            continue
        pilot = pilot_error_oracle(loss, cset, fhat,
                                   PredictionMatrix(F), eps, r_hat)
        bound = rhat_bound_convex(
            lambda s: wn(loss, cset, fhat, Z, s), r_dia, delta, 60,
            float(np.max(np.abs(W))), 2, pilot, loss)
        total += 1
        hits += bound >= r_hat
    assert total >= 50
    assert hits / total >= 1.0 - 4.0 * delta - 0.1
