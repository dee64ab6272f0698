"""Fixed-design datasets, prediction matrices, and sign randomization.

Everything here is immutable after construction; sampling operations are
pure functions of (shape, seed).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import RejectedInputError
from .geometry import CompactSet
from .potentials import BregmanLoss


@dataclass(frozen=True)
class FixedDesignDataset:
    """Design points plus an n x d response matrix.

    `inputs` is an (n, p) feature array, or None when the design is opaque
    (only row indices matter, e.g. for the saturated trainer).
    """

    inputs: np.ndarray | None
    responses: np.ndarray

    def __post_init__(self):
        Y = np.asarray(self.responses, dtype=float)
        if Y.ndim != 2 or Y.shape[0] < 1 or Y.shape[1] < 1:
            raise RejectedInputError("responses must be a non-empty n x d matrix")
        if not np.all(np.isfinite(Y)):
            raise RejectedInputError("responses contain non-finite entries")
        object.__setattr__(self, "responses", Y)
        if self.inputs is not None:
            X = np.asarray(self.inputs, dtype=float)
            if X.ndim != 2 or X.shape[0] != Y.shape[0]:
                raise RejectedInputError("inputs must be (n, p) matching responses")
            object.__setattr__(self, "inputs", X)

    @property
    def n(self) -> int:
        return self.responses.shape[0]

    @property
    def d(self) -> int:
        return self.responses.shape[1]

    def with_responses(self, Y) -> "FixedDesignDataset":
        return FixedDesignDataset(self.inputs, np.asarray(Y, dtype=float))


@dataclass(frozen=True)
class PredictionMatrix:
    """n x d matrix of predictor outputs on the design."""

    values: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.values, dtype=float)
        if V.ndim != 2:
            raise RejectedInputError("prediction matrix must be 2-d")
        if not np.all(np.isfinite(V)):
            raise RejectedInputError("prediction matrix has non-finite entries")
        object.__setattr__(self, "values", V)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def check_in_set(self, cset: CompactSet):
        if not np.all(cset.contains_rows(self.values)):
            raise RejectedInputError("prediction rows leave the compact set")
        return self


@dataclass(frozen=True)
class SignMatrix:
    """n x d matrix of +/-1 entries with the seed that produced it."""

    values: np.ndarray
    seed: int

    def __post_init__(self):
        V = np.asarray(self.values)
        if not np.all(np.abs(V) == 1):
            raise RejectedInputError("sign matrix entries must be exactly +/-1")
        object.__setattr__(self, "values", V.astype(float))


def sample_sign_matrix(n: int, d: int, seed: int) -> SignMatrix:
    """i.i.d. Rademacher entries; deterministic given the seed."""
    if n < 1 or d < 1:
        raise RejectedInputError("n and d must be >= 1")
    rng = np.random.default_rng(seed)
    values = rng.integers(0, 2, size=(n, d)) * 2 - 1
    return SignMatrix(values=values, seed=int(seed))


def empirical_discrepancy(loss: BregmanLoss, F: PredictionMatrix, G: PredictionMatrix) -> float:
    """L_n(f, g) = (1/n) sum_i D_phi(f(x_i), g(x_i))."""
    if F.values.shape != G.values.shape:
        raise RejectedInputError(
            f"shape mismatch: {F.values.shape} vs {G.values.shape}"
        )
    return float(np.mean(loss.divergence_rows(F.values, G.values)))


def save_dataset(path, dataset: FixedDesignDataset, *, seed: int | None = None,
                 potential_kind: str | None = None):
    """Write <path>.csv with x_*/y_* columns and a <path>.json manifest."""
    path = Path(path)
    csv_path = path.with_suffix(".csv")
    n, d = dataset.n, dataset.d
    p = 0 if dataset.inputs is None else dataset.inputs.shape[1]
    header = [f"x_{j + 1}" for j in range(p)] + [f"y_{j + 1}" for j in range(d)]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(n):
            row = [] if p == 0 else [repr(float(v)) for v in dataset.inputs[i]]
            row += [repr(float(v)) for v in dataset.responses[i]]
            writer.writerow(row)
    manifest = {"n": n, "d": d, "p": p, "seed": seed, "potential_kind": potential_kind}
    with open(path.with_suffix(".json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return csv_path


def load_dataset(csv_path) -> FixedDesignDataset:
    """Read a dataset written by `save_dataset` (or any file with the same header)."""
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        x_cols = [i for i, name in enumerate(header) if name.startswith("x_")]
        y_cols = [i for i, name in enumerate(header) if name.startswith("y_")]
        if not y_cols:
            raise RejectedInputError("dataset CSV has no y_* columns")
        xs, ys = [], []
        for row in reader:
            xs.append([float(row[i]) for i in x_cols])
            ys.append([float(row[i]) for i in y_cols])
    inputs = np.asarray(xs) if x_cols else None
    return FixedDesignDataset(inputs=inputs, responses=np.asarray(ys))
