"""Empirical-process suprema over Bregman balls and radius solvers.

The central object is the supremum, over predictors within a Bregman ball
around a center, of the averaged inner product between the loss gradient
and a fixed perturbation matrix.  For the squared-Euclidean potential with
the optimizer interior to the box, the supremum has a Cauchy-Schwarz closed
form; otherwise a multi-start projected ascent reports a certified feasible
lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import PredictionMatrix, SignMatrix
from .errors import RejectedInputError, UnboundedRadiusError
from .geometry import Box, CompactSet
from .potentials import BregmanLoss


@dataclass(frozen=True)
class RadiusReport:
    r_hat_n: float
    r_diamond_rho: float
    r_certified: float
    method: str  # oracle | fixed_point | convex_class_bound

    def __post_init__(self):
        if min(self.r_hat_n, self.r_diamond_rho, self.r_certified) < 0:
            raise RejectedInputError("radii must be >= 0")
        if self.method not in ("oracle", "fixed_point", "convex_class_bound"):
            raise RejectedInputError(f"unknown radius method {self.method!r}")

    def to_dict(self) -> dict:
        return {"r_hat_n": self.r_hat_n, "r_diamond_rho": self.r_diamond_rho,
                "r_certified": self.r_certified, "method": self.method}


def _objective(loss: BregmanLoss, center: np.ndarray, U: np.ndarray,
               Z: np.ndarray) -> float:
    g = loss.potential.gradient
    return float(np.mean(np.sum((g(center) - g(U)) * Z, axis=-1)))


def _ball_value(loss: BregmanLoss, center: np.ndarray, U: np.ndarray) -> float:
    return float(np.mean(loss._div_raw(center, U)))


def _radial_pullback(loss, center, U, r2, iters: int = 50) -> np.ndarray:
    """Shrink U toward the center along the segment until L_n <= r^2."""
    val = _ball_value(loss, center, U)
    if val <= r2:
        return U
    if loss.potential.kind == "squared_l2":
        # ball value scales as t^2 along the segment, so the pullback is exact
        return center + math.sqrt(r2 / val) * (U - center)
    lo_t, hi_t = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo_t + hi_t)
        if _ball_value(loss, center, center + mid * (U - center)) <= r2:
            lo_t = mid
        else:
            hi_t = mid
    return center + lo_t * (U - center)


def _sup_closed_form_sql2(cset, center, Z, r):
    """Exact supremum for squared_l2 when the optimizer stays in the box."""
    zf = float(np.linalg.norm(Z))
    if zf == 0.0 or r == 0.0:
        return 0.0
    n = center.shape[0]
    U_opt = center - math.sqrt(2.0 * n) * r * Z / zf
    if not np.all(cset.contains_rows(U_opt)):
        return None
    return r * math.sqrt(2.0 / n) * zf


def _sup_box_sql2_qp(cset, center, Z, r):
    """Exact supremum for squared_l2 over box-and-ball, boundary case included.

    In V = C - U the problem is max <V, Z> over the shifted box with
    ||V||_F^2 <= 2 n r^2; the Lagrangian solution V(mu) = clip(Z/mu, box) has
    a norm monotone in mu, so the multiplier is found by bisection.
    """
    n = center.shape[0]
    lo_e, hi_e = center - cset.hi, center - cset.lo
    cap = 2.0 * n * r * r
    V0 = np.where(Z > 0, hi_e, np.where(Z < 0, lo_e, 0.0))
    if float(np.sum(V0 * V0)) <= cap:
        return float(np.sum(V0 * Z)) / n

    def clipped(mu):
        return np.clip(Z / mu, lo_e, hi_e)

    mu_hi = float(np.linalg.norm(Z)) / math.sqrt(cap)
    mu_lo = mu_hi
    for _ in range(200):
        mu_lo *= 0.5
        if float(np.sum(clipped(mu_lo) ** 2)) > cap:
            break
    for _ in range(100):
        mid = 0.5 * (mu_lo + mu_hi)
        if float(np.sum(clipped(mid) ** 2)) > cap:
            mu_lo = mid
        else:
            mu_hi = mid
    V = clipped(mu_hi)
    nv = float(np.linalg.norm(V))
    if nv > 0:
        V = V * (math.sqrt(cap) / nv)
        V = np.clip(V, lo_e, hi_e)
    return float(np.sum(V * Z)) / n


def _sup_dual_box(loss, cset, center, Z, r):
    """Exact supremum over box-and-Bregman-ball for separable potentials.

    In mirror coordinates m = grad phi(u) the objective is linear, the box
    maps to a box, and the ball is convex, so strong duality holds.  The
    stationary point of the Lagrangian at multiplier lam is
    u(lam) = clip(c - z / lam, box), whose ball value is monotone in lam;
    bisection on lam solves the program exactly.
    """
    n = center.shape[0]
    r2 = r * r

    def at(lam):
        return np.clip(center - Z / lam, cset.lo, cset.hi)

    U0 = np.clip(np.where(Z > 0, cset.lo, np.where(Z < 0, cset.hi, center)),
                 cset.lo, cset.hi)
    if _ball_value(loss, center, U0) <= r2:
        return _objective(loss, center, U0, Z)
    lam_hi = 1.0
    for _ in range(200):
        if _ball_value(loss, center, at(lam_hi)) <= r2:
            break
        lam_hi *= 2.0
    lam_lo = lam_hi
    for _ in range(400):
        lam_lo *= 0.5
        if _ball_value(loss, center, at(lam_lo)) > r2:
            break
    for _ in range(100):
        mid = 0.5 * (lam_lo + lam_hi)
        if _ball_value(loss, center, at(mid)) > r2:
            lam_lo = mid
        else:
            lam_hi = mid
    return _objective(loss, center, at(lam_hi), Z)


def _sup_numerical(loss, cset, center, Z, r, *, n_starts=8, max_iters=80,
                   tol=1e-12, seed=0):
    n = center.shape[0]
    r2 = r * r
    hess = loss.potential.hessian_diag

    def feasible(U):
        return _radial_pullback(loss, center, cset.project(U), r2)

    # direction starts: +/- Z and the ascent gradient at the center
    scale = cset.diameter() / max(float(np.max(np.abs(Z))), 1e-300)
    starts = [center,
              feasible(center - scale * Z),
              feasible(center + scale * Z),
              feasible(center - scale * hess(center) * Z)]
    rng = np.random.default_rng(seed)
    while len(starts) < n_starts:
        D = rng.standard_normal(center.shape)
        starts.append(feasible(center + cset.diameter() * D / np.linalg.norm(D)))

    best_val, best_stationary = 0.0, True
    for U in starts:
        val = _objective(loss, center, U, Z)
        step = max(r, tol)
        stationary = False
        stalls = 0
        for _ in range(max_iters):
            G = -(1.0 / n) * hess(U) * Z
            gn = float(np.linalg.norm(G))
            if gn == 0.0:
                stationary = True
                break
            eta, moved = step / gn, False
            for _ in range(25):
                U_new = feasible(U + eta * G)
                val_new = _objective(loss, center, U_new, Z)
                if val_new > val + 1e-14:
                    gain = val_new - val
                    U, val, moved = U_new, val_new, True
                    step = min(eta * gn * 2.0, 1e3 * cset.diameter())
                    stalls = stalls + 1 if gain <= 1e-11 * max(1.0, abs(val)) else 0
                    break
                eta *= 0.5
            if not moved or stalls >= 3:
                stationary = True
                break
            if step < tol * cset.diameter():
                stationary = True
                break
        if val > best_val:
            best_val, best_stationary = val, stationary
    return best_val, best_stationary


def ball_sup(loss: BregmanLoss, cset: CompactSet, center: PredictionMatrix,
             Z: np.ndarray, r: float, *, n_starts: int = 8, seed: int = 0,
             full_output: bool = False):
    """sup over {U : rows in cset, L_n(center, U) <= r^2} of the averaged
    gradient-perturbation inner product (1/n) sum <gradphi(c_i)-gradphi(u_i), z_i>.
    """
    if r < 0:
        raise RejectedInputError("radius must be >= 0")
    C = center.values
    Z = np.asarray(Z, dtype=float)
    if Z.shape != C.shape:
        raise RejectedInputError(f"shape mismatch: {Z.shape} vs {C.shape}")
    if r == 0.0 or not np.any(Z):
        return (0.0, {"method": "trivial", "stationary": True}) if full_output else 0.0
    if loss.potential.kind == "squared_l2" and isinstance(cset, Box):
        exact = _sup_closed_form_sql2(cset, C, Z, r)
        if exact is not None:
            out = (exact, {"method": "closed_form", "stationary": True})
            return out if full_output else exact
        exact = _sup_box_sql2_qp(cset, C, Z, r)
        out = (exact, {"method": "box_qp", "stationary": True})
        return out if full_output else exact
    if isinstance(cset, Box):
        exact = _sup_dual_box(loss, cset, C, Z, r)
        out = (exact, {"method": "dual_box", "stationary": True})
        return out if full_output else exact
    val, stationary = _sup_numerical(loss, cset, C, Z, r, n_starts=n_starts,
                                     seed=seed)
    out = (val, {"method": "ascent", "stationary": stationary})
    return out if full_output else val


def wn(loss: BregmanLoss, cset: CompactSet, fhat: PredictionMatrix,
       Z: np.ndarray, r: float, **kw):
    """Wild noise complexity at radius r, with Z = eps (.) residues."""
    return ball_sup(loss, cset, fhat, Z, r, **kw)


def wn_tilde_oracle(loss: BregmanLoss, cset: CompactSet, fhat: PredictionMatrix,
                    W: np.ndarray, eps: SignMatrix, r: float, **kw):
    """Same supremum with the true noise: Z = eps (.) W (oracle mode)."""
    return ball_sup(loss, cset, fhat, eps.values * W, r, **kw)


def zn_eps_oracle(loss: BregmanLoss, cset: CompactSet, fdagger: PredictionMatrix,
                  W: np.ndarray, eps: SignMatrix | None, r: float, **kw):
    """Supremum centered at the noiseless fit; eps=None gives the un-symmetrized
    process (all-ones signs)."""
    Z = np.asarray(W, dtype=float) if eps is None else eps.values * W
    return ball_sup(loss, cset, fdagger, Z, r, **kw)


def pilot_sup(loss: BregmanLoss, cset: CompactSet, fhat: PredictionMatrix,
              fstar_preds: PredictionMatrix, eps: SignMatrix, radius: float, **kw):
    """Supremum coupling signs with the estimation-error matrix fhat - fstar."""
    Z = eps.values * (fhat.values - fstar_preds.values)
    return ball_sup(loss, cset, fhat, Z, radius, **kw)


def pilot_error_oracle(loss: BregmanLoss, cset: CompactSet, fhat: PredictionMatrix,
                       fstar_preds: PredictionMatrix, eps: SignMatrix,
                       r: float, **kw):
    """Pilot error at the theorem's inflated radius 3 sqrt(beta/alpha) r."""
    return pilot_sup(loss, cset, fhat, fstar_preds, eps, 3.0 * loss.c0 * r, **kw)


def deviation_term(loss: BregmanLoss, misspec: float, r: float, w_inf: float,
                   n: int, d: int, delta: float) -> float:
    """High-probability deviation at t = sqrt(log(1/delta)).

    (misspec + 5r) * 2 w_inf (beta^{3/2} v beta^2) sqrt(d) t
    / ((alpha^{3/2} ^ alpha) sqrt(n)).
    """
    if not 0 < delta < 1:
        raise RejectedInputError("delta must lie in (0, 1)")
    if min(misspec, r, w_inf) < 0:
        raise RejectedInputError("misspec, r, w_inf must be >= 0")
    a, b = loss.alpha, loss.beta
    t = math.sqrt(math.log(1.0 / delta))
    num = (misspec + 5.0 * r) * 2.0 * w_inf * max(b ** 1.5, b ** 2) * math.sqrt(d) * t
    return num / (min(a ** 1.5, a) * math.sqrt(n))


def fixed_point_radius(wn_evaluator, delta: float, n: int, *, r_max: float,
                       grid_ratio: float = 1.1, refine_rel: float = 1e-4) -> float:
    """Smallest r with r^2 >= W_n((2 + 1/log(1/delta)) r).

    Geometric grid from log(1/delta)/sqrt(n) up to r_max, refined by
    bisection between the last failing and first passing grid points.
    """
    if delta > math.exp(-9.0):
        raise RejectedInputError("requires delta <= e^-9")
    log_inv = math.log(1.0 / delta)
    factor = 2.0 + 1.0 / log_inv
    r_min = log_inv / math.sqrt(n)

    def passes(r):
        return r * r >= wn_evaluator(factor * r)

    trace = []
    if passes(r_min):
        return r_min
    r_prev, r = r_min, r_min * grid_ratio
    while r <= r_max * grid_ratio:
        ok = passes(r)
        trace.append((r, ok))
        if ok:
            lo, hi = r_prev, r
            while (hi - lo) > refine_rel * hi:
                mid = 0.5 * (lo + hi)
                if passes(mid):
                    hi = mid
                else:
                    lo = mid
            return hi
        r_prev, r = r, r * grid_ratio
    raise UnboundedRadiusError("no radius below r_max satisfies the fixed-point "
                               "condition", trace=trace)


def convex_class_bracket(wn_evaluator, r_diamond: float, delta: float,
                         loss: BregmanLoss) -> float:
    """Initial upper bracket max{r_dia, W_n(c0 (2 + 1/sqrt(log 1/delta)) r_dia)/r_dia}."""
    factor = loss.c0 * (2.0 + 1.0 / math.sqrt(math.log(1.0 / delta)))
    return max(r_diamond, wn_evaluator(factor * r_diamond) / r_diamond)


def rhat_bound_convex(wn_evaluator, r_diamond: float, delta: float, n: int,
                      w_inf: float, d: int, pilot: float, loss: BregmanLoss, *,
                      refine_rel: float = 1e-4, grid_ratio: float = 1.05) -> float:
    """Upper bound on the noiseless estimation radius for convex classes.

    Scans for the largest r satisfying the self-bounding inequality
      r^2 <= max{r_dia^2, log(1/d)^2/n, (r/r_dia) W_n(c0 (2+1/sqrt(log 1/d)) r)}
             + r^2 stab + pilot,
    which dominates every feasible value of the true radius.
    """
    if delta > math.exp(-9.0):
        raise RejectedInputError("requires delta <= e^-9")
    if r_diamond <= 0:
        raise RejectedInputError("r_diamond must be > 0")
    log_inv = math.log(1.0 / delta)
    factor = loss.c0 * (2.0 + 1.0 / math.sqrt(log_inv))
    stab = 6.0 * w_inf * loss.beta ** 1.5 * math.sqrt(d) / (loss.alpha * math.sqrt(log_inv))
    floor = max(r_diamond * r_diamond, log_inv * log_inv / n)

    def satisfied(r):
        rhs = max(floor, (r / r_diamond) * wn_evaluator(factor * r))
        return r * r <= rhs + r * r * stab + pilot

    r_top = 4.0 * max(convex_class_bracket(wn_evaluator, r_diamond, delta, loss),
                      math.sqrt(floor + pilot))
    trace = []
    r = max(r_diamond, log_inv / math.sqrt(n)) * 1e-3
    last_ok = None
    while r <= r_top:
        ok = satisfied(r)
        trace.append((r, ok))
        if ok:
            last_ok = r
        elif last_ok is not None:
            lo, hi = last_ok, r
            while (hi - lo) > refine_rel * hi:
                mid = 0.5 * (lo + hi)
                if satisfied(mid):
                    lo = mid
                else:
                    hi = mid
            return lo
        r *= grid_ratio
    if last_ok is None:
        raise UnboundedRadiusError("self-bounding inequality unsatisfiable on grid",
                                   trace=trace)
    raise UnboundedRadiusError("self-bounding inequality still satisfied at grid "
                               "top; bound diverges", trace=trace)
