"""Compact prediction sets: coordinate boxes and clipped probability simplices.

Both sets support membership tests, Euclidean projection, and a finite
diameter.  Projection is vectorized over rows, so an (n, d) array of
predictions can be projected in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RejectedInputError

_CONTAIN_TOL = 1e-9


@dataclass(frozen=True)
class Box:
    """Coordinate-wise box {z : lo <= z <= hi}."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise RejectedInputError("box bounds must be 1-d arrays of equal length")
        if not np.all(lo < hi):
            raise RejectedInputError("box requires lo < hi coordinate-wise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def contains(self, z, tol: float = _CONTAIN_TOL) -> bool:
        z = np.asarray(z, dtype=float)
        return bool(np.all(z >= self.lo - tol) and np.all(z <= self.hi + tol))

    def contains_rows(self, Z, tol: float = _CONTAIN_TOL) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return np.all((Z >= self.lo - tol) & (Z <= self.hi + tol), axis=-1)

    def project(self, z) -> np.ndarray:
        if not np.all(np.isfinite(z)):
            raise RejectedInputError("cannot project non-finite input")
        return np.clip(np.asarray(z, dtype=float), self.lo, self.hi)

    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)


def _project_simplex(v: np.ndarray, s: float) -> np.ndarray:
    """Euclidean projection of rows of v onto {q >= 0, sum q = s}.

    Standard sorted-threshold construction; O(d log d) per row.
    """
    v = np.atleast_2d(v)
    d = v.shape[1]
    u = -np.sort(-v, axis=1)
    cssv = np.cumsum(u, axis=1) - s
    ks = np.arange(1, d + 1)
    cond = u - cssv / ks > 0
    rho = d - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = cssv[np.arange(v.shape[0]), rho] / (rho + 1)
    return np.clip(v - theta[:, None], 0.0, None)


@dataclass(frozen=True)
class ClippedSimplex:
    """Probability simplex with a floor: {p : p_j >= eta0, sum p = 1}."""

    eta0: float
    dim: int
    # cached shifted-simplex mass, 1 - d * eta0
    _mass: float = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim < 2:
            raise RejectedInputError("clipped simplex needs dim >= 2")
        if not 0 < self.eta0 < 1.0 / self.dim:
            raise RejectedInputError("clipped simplex requires 0 < eta0 < 1/dim")
        object.__setattr__(self, "_mass", 1.0 - self.dim * self.eta0)

    def contains(self, z, tol: float = _CONTAIN_TOL) -> bool:
        z = np.asarray(z, dtype=float)
        return bool(
            np.all(z >= self.eta0 - tol) and abs(float(np.sum(z)) - 1.0) <= tol * self.dim
        )

    def contains_rows(self, Z, tol: float = _CONTAIN_TOL) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        ok_lo = np.all(Z >= self.eta0 - tol, axis=-1)
        ok_sum = np.abs(np.sum(Z, axis=-1) - 1.0) <= tol * self.dim
        return ok_lo & ok_sum

    def project(self, z) -> np.ndarray:
        if not np.all(np.isfinite(z)):
            raise RejectedInputError("cannot project non-finite input")
        z = np.asarray(z, dtype=float)
        single = z.ndim == 1
        q = _project_simplex(np.atleast_2d(z) - self.eta0, self._mass) + self.eta0
        return q[0] if single else q

    def diameter(self) -> float:
        # max distance between vertices of the shifted simplex
        return float(self._mass * np.sqrt(2.0))

    def center(self) -> np.ndarray:
        return np.full(self.dim, 1.0 / self.dim)


CompactSet = Box | ClippedSimplex
