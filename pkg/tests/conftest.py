import numpy as np
import pytest
from hypothesis import settings

from wsee.core import WseeProblem

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def random_problem(rng, K, pmax=None, eta_scale=1.0):
    """Random interference network with a strictly positive everything."""
    theta = rng.uniform(0.2, 3.0, K)
    eta = eta_scale * rng.uniform(0.0, 1.0, (K, K))
    sigma2 = rng.uniform(0.05, 1.0, K)
    w = rng.uniform(0.5, 2.0, K)
    phi = rng.uniform(1.0, 4.0, K)
    pc = rng.uniform(0.2, 2.0, K)
    pmax = rng.uniform(0.5, 5.0, K) if pmax is None else pmax
    return WseeProblem.build(theta, eta, sigma2, w, phi, pc, pmax)


def central_diff(fun, p, rel_step=1e-6):
    p = np.asarray(p, dtype=float)
    g = np.empty_like(p)
    for i in range(p.size):
        h = rel_step * (1.0 + abs(p[i]))
        e = np.zeros_like(p)
        e[i] = h
        g[i] = (fun(p + e) - fun(p - e)) / (2 * h)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
