"""Reference black-box training procedures.

Two trainers exercise the black-box contract: an exact pointwise one (the
"saturated" class of all functions, where each design point is fit
independently) and an approximate linear class trained by gradient descent.
Downstream code treats both as opaque procedures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import FixedDesignDataset, PredictionMatrix
from .errors import ConvergenceError, RejectedInputError
from .geometry import Box, CompactSet
from .potentials import BregmanLoss


def _pointwise_objective(loss: BregmanLoss, y: np.ndarray, z: np.ndarray) -> float:
    return float(loss._div_raw(y, z))


def _minimize_pointwise(loss: BregmanLoss, cset: CompactSet, y: np.ndarray,
                        max_iters: int, tol: float) -> np.ndarray:
    """Minimize z -> D_phi(y, z) over the compact set for one response row.

    Projected gradient with Armijo backtracking; 1-d grid refinement as a
    fallback since the map need not be convex in its second argument.
    """
    p = loss.potential
    z = cset.project(np.asarray(y, dtype=float))
    step = 1.0 / p.beta
    obj = _pointwise_objective(loss, y, z)
    for _ in range(max_iters):
        grad = p.hessian_diag(z) * (z - y)
        eta = step
        moved = False
        for _ in range(40):
            z_new = cset.project(z - eta * grad)
            obj_new = _pointwise_objective(loss, y, z_new)
            if obj_new <= obj - 1e-4 * np.dot(grad, (z - z_new)):
                z, obj, moved = z_new, obj_new, True
                break
            eta *= 0.5
        if not moved or np.linalg.norm(z - cset.project(z - step * grad)) <= tol * step:
            break
    else:
        grad = p.hessian_diag(z) * (z - y)
        residual = np.linalg.norm(z - cset.project(z - step * grad)) / step
        if residual > 1e-6:
            raise ConvergenceError(
                "pointwise fit did not reach stationarity",
                last_iterate=z, grad_norm=float(residual),
            )
    if z.shape[0] == 1 and isinstance(cset, Box):
        z = _refine_1d(loss, cset, y, z)
    return z

def _refine_1d(loss: BregmanLoss, cset: Box, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    lo, hi = float(cset.lo[0]), float(cset.hi[0])
    grid = np.linspace(lo, hi, 2001)[:, None]
    vals = loss._div_raw(np.broadcast_to(y, grid.shape), grid)
    best = grid[int(np.argmin(vals))]
    # local refinement around the better of the PGD iterate and the grid point
    cand = best if _pointwise_objective(loss, y, best) < _pointwise_objective(loss, y, z) else z
    width = (hi - lo) / 2000
    for _ in range(25):
        trio = np.clip(np.array([cand - width, cand, cand + width]), lo, hi)
        vals = [(_pointwise_objective(loss, y, t), tuple(t)) for t in trio]
        cand = np.array(min(vals)[1])
        width *= 0.5
    return cand


@dataclass(frozen=True)
class SaturatedTrainer:
    """ERM over all functions: each design row is fit independently."""

    loss: BregmanLoss
    cset: CompactSet
    max_iters: int = 500
    tol: float = 1e-12

    @property
    def descriptor(self) -> dict:
        return {"kind": "saturated", "max_iters": self.max_iters, "tol": self.tol}

    def fit(self, data: FixedDesignDataset) -> PredictionMatrix:
        Y = data.responses
        p = self.loss.potential
        if p.kind == "squared_l2" and isinstance(self.cset, Box):
            # minimizer of 0.5 ||y - z||^2 over a box is the clamp
            return PredictionMatrix(self.cset.project(Y))
        out = np.empty_like(Y)
        inside = self.cset.contains_rows(Y)
        out[inside] = Y[inside]
        for i in np.flatnonzero(~inside):
            out[i] = _minimize_pointwise(self.loss, self.cset, Y[i],
                                         self.max_iters, self.tol)
        return PredictionMatrix(out)


def fit_saturated(loss: BregmanLoss, cset: CompactSet,
                  data: FixedDesignDataset) -> PredictionMatrix:
    return SaturatedTrainer(loss, cset).fit(data)


@dataclass(frozen=True)
class LinearPredictor:
    """Affine map theta^T [x; 1], rows projected onto the compact set."""

    theta: np.ndarray
    cset: CompactSet

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Z = np.hstack([X, np.ones((X.shape[0], 1))]) @ self.theta
        return self.cset.project(Z)


@dataclass(frozen=True)
class LinearTrainer:
    """Approximate ERM over affine predictors, by monotone gradient descent.

    Predictions are clipped into the loss domain during optimization and
    projected onto the compact set at evaluation; the trainer is declared
    approximate and must be treated as an opaque procedure downstream.
    """

    loss: BregmanLoss
    cset: CompactSet
    max_iters: int = 500
    tol: float = 1e-10
    seed: int = 0

    @property
    def descriptor(self) -> dict:
        return {"kind": "linear", "max_iters": self.max_iters,
                "tol": self.tol, "seed": self.seed}

    def _domain_clip(self, Z: np.ndarray) -> np.ndarray:
        return self.loss.domain.project(Z)

    def _objective(self, Xa, Y, theta) -> float:
        Z = self._domain_clip(Xa @ theta)
        return float(np.mean(self.loss._div_raw(Y, Z)))

    def fit_theta(self, data: FixedDesignDataset) -> np.ndarray:
        if data.inputs is None:
            raise RejectedInputError("linear trainer needs feature inputs")
        X, Y = data.inputs, data.responses
        n, d = Y.shape
        Xa = np.hstack([X, np.ones((n, 1))])
        p = self.loss.potential
        theta = np.zeros((Xa.shape[1], d))
        # start from the domain center so the Hessian oracle is evaluable
        theta[-1] = p.domain.center() if p.kind != "squared_l2" else 0.0
        obj = self._objective(Xa, Y, theta)
        trace = [obj]
        # conservative Lipschitz guess for the step; refined by backtracking
        step = 1.0 / (p.beta * max(1.0, float(np.linalg.norm(Xa, 2) ** 2) / n))
        for _ in range(self.max_iters):
            Z = self._domain_clip(Xa @ theta)
            G = Xa.T @ (p.hessian_diag(Z) * (Z - Y)) / n
            gnorm = float(np.linalg.norm(G))
            if gnorm <= self.tol:
                break
            eta, moved = step, False
            for _ in range(50):
                cand = theta - eta * G
                obj_new = self._objective(Xa, Y, cand)
                if obj_new <= obj - 1e-4 * eta * gnorm ** 2:
                    theta, obj, moved = cand, obj_new, True
                    step = min(eta * 2.0, 1e6)
                    break
                eta *= 0.5
            trace.append(obj)
            if not moved or (len(trace) > 2 and trace[-2] - trace[-1] <= self.tol * max(1.0, obj)):
                break
        if not np.isfinite(obj):
            raise ConvergenceError("linear fit diverged", trace=trace)
        return theta

    def fit_predictor(self, data: FixedDesignDataset) -> LinearPredictor:
        return LinearPredictor(theta=self.fit_theta(data), cset=self.cset)

    def fit(self, data: FixedDesignDataset) -> PredictionMatrix:
        theta = self.fit_theta(data)
        Xa = np.hstack([data.inputs, np.ones((data.n, 1))])
        return PredictionMatrix(self.cset.project(Xa @ theta))


def fit_linear_class(loss: BregmanLoss, cset: CompactSet, data: FixedDesignDataset,
                     *, max_iters: int = 500, tol: float = 1e-10,
                     seed: int = 0) -> PredictionMatrix:
    return LinearTrainer(loss, cset, max_iters=max_iters, tol=tol, seed=seed).fit(data)


def check_nonexpansive(loss: BregmanLoss, trainer, fstar_preds: PredictionMatrix,
                       noise: np.ndarray, inputs: np.ndarray | None = None) -> dict:
    """Diagnostic for the non-expansiveness contract of a training procedure.

    Fits on the noiseless and the noisy dataset and compares the discrepancy
    between the two fits against the gradient-noise inner product.  Reported,
    not asserted: no verification recipe exists for general procedures.
    """
    F = fstar_preds.values
    U = np.asarray(noise, dtype=float)
    if U.shape != F.shape:
        raise RejectedInputError("noise shape must match predictions")
    clean = FixedDesignDataset(inputs, F)
    noisy = FixedDesignDataset(inputs, F + U)
    fdag = trainer.fit(clean).values
    ftil = trainer.fit(noisy).values
    p = loss.potential
    lhs = float(np.mean(loss._div_raw(fdag, ftil)))
    rhs = float(np.mean(np.sum((p.gradient(ftil) - p.gradient(fdag)) * U, axis=-1)))
    return {"lhs": lhs, "rhs": rhs, "holds": bool(lhs <= rhs + 1e-9)}
