import numpy as np
import pytest

from wildbregman.potentials import builtin_loss

# the three built-in losses at small dimension, with samplers for their domains
BUILTINS = {
    "squared_l2": dict(kwargs={}, dim=3),
    "sqrt_bernoulli": dict(kwargs={"eps0": 0.05}, dim=3),
    "clipped_simplex_kl": dict(kwargs={"eta0": 0.1}, dim=3),
}


def make_loss(kind, dim=None, **extra):
    cfg = BUILTINS[kind]
    return builtin_loss(kind, dim or cfg["dim"], **{**cfg["kwargs"], **extra})


def sample_domain(loss, rng, size):
    """Uniform-ish points strictly inside the loss domain, shape (size, d)."""
    dom = loss.domain
    kind = loss.potential.kind
    if kind == "squared_l2":
        return rng.uniform(-2.0, 2.0, size=(size, dom.dim))
    if kind == "sqrt_bernoulli":
        eps0 = loss.potential.params["eps0"]
        return rng.uniform(eps0, 1.0 - eps0, size=(size, dom.dim))
    raw = rng.uniform(0.0, 1.0, size=(size, dom.dim))
    return dom.project(raw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
