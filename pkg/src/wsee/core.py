"""
WSEE problem data and objective evaluation.

The rate of user ``k`` in an interference network is

    r_k(p) = log(1 + theta_k p_k / (sigma2_k + sum_j eta_kj p_j))

in nats, and the weighted sum energy efficiency is

    f(p) = sum_k w_k r_k(p) / (phi_k p_k + pc_k).

Users are indexed from 0 throughout the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "InterferenceNetwork",
    "PowerModel",
    "WseeProblem",
    "interference",
    "rate",
    "rates",
    "wsee",
    "grad_rate",
    "rate_jacobian",
    "grad_wsee",
    "rate_dc_split",
    "projected_gradient_residual",
    "problem_to_dict",
    "problem_from_dict",
    "save_problem",
    "load_problem",
]


def _frozen_array(x, ndim: int, name: str) -> np.ndarray:
    a = np.array(x, dtype=float)
    if a.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class InterferenceNetwork:
    """Coefficients of the SINR rate model.

    Parameters
    ----------
    theta : (K,) array
        Direct channel gains, strictly positive.
    eta : (K, K) array
        Interference coefficients; row ``k`` belongs to the receiver of
        user ``k``. The diagonal holds self-interference.
    sigma2 : (K,) array
        Noise powers, strictly positive.
    """

    theta: np.ndarray
    eta: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        theta = _frozen_array(self.theta, 1, "theta")
        eta = _frozen_array(self.eta, 2, "eta")
        sigma2 = _frozen_array(self.sigma2, 1, "sigma2")
        K = theta.size
        if K < 1:
            raise ValueError("network needs at least one user")
        if eta.shape != (K, K) or sigma2.shape != (K,):
            raise ValueError(
                f"dimension mismatch: theta {theta.shape}, eta {eta.shape}, "
                f"sigma2 {sigma2.shape}")
        if np.any(theta <= 0) or np.any(sigma2 <= 0):
            raise ValueError("theta and sigma2 must be strictly positive")
        if np.any(eta < 0):
            raise ValueError("eta must be nonnegative")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def K(self) -> int:
        return self.theta.size


@dataclass(frozen=True, eq=False)
class PowerModel:
    """Amplifier inefficiencies ``phi`` and static circuit powers ``pc``."""

    phi: np.ndarray
    pc: np.ndarray

    def __post_init__(self):
        phi = _frozen_array(self.phi, 1, "phi")
        pc = _frozen_array(self.pc, 1, "pc")
        if phi.shape != pc.shape:
            raise ValueError("phi and pc must have the same length")
        if np.any(phi <= 0) or np.any(pc <= 0):
            raise ValueError("phi and pc must be strictly positive")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "pc", pc)

    def consumed(self, p) -> np.ndarray:
        """Consumed power ``phi * p + pc`` per user."""
        return self.phi * p + self.pc


@dataclass(frozen=True, eq=False)
class WseeProblem:
    """Everything needed to state the WSEE maximization over a power box.

    The feasible set is ``[0, pmax[0]] x ... x [0, pmax[K-1]]``.
    """

    net: InterferenceNetwork
    pm: PowerModel
    w: np.ndarray
    pmax: np.ndarray

    def __post_init__(self):
        w = _frozen_array(self.w, 1, "w")
        pmax = _frozen_array(self.pmax, 1, "pmax")
        K = self.net.K
        if self.pm.phi.shape != (K,) or w.shape != (K,) or pmax.shape != (K,):
            raise ValueError(f"all per-user vectors must have length K={K}")
        if np.any(w <= 0) or np.any(pmax <= 0):
            raise ValueError("weights and power budgets must be strictly positive")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "pmax", pmax)

    @property
    def K(self) -> int:
        return self.net.K

    @classmethod
    def build(cls, theta, eta, sigma2, w, phi, pc, pmax) -> "WseeProblem":
        """Construct from plain arrays; scalars broadcast over users."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        K = theta.size

        def vec(x):
            return np.broadcast_to(np.asarray(x, dtype=float), (K,)).copy()

        net = InterferenceNetwork(theta, np.asarray(eta, dtype=float).reshape(K, K),
                                  vec(sigma2))
        return cls(net, PowerModel(vec(phi), vec(pc)), vec(w), vec(pmax))

    def with_pmax(self, pmax) -> "WseeProblem":
        pmax = np.broadcast_to(np.asarray(pmax, dtype=float), (self.K,)).copy()
        return WseeProblem(self.net, self.pm, self.w, pmax)

    def check_power(self, p) -> np.ndarray:
        """Return ``p`` as a float array after verifying it lies in the box."""
        p = _as_power(p, self.K)
        if np.any(p < 0) or np.any(p > self.pmax):
            raise ValueError(f"power vector {p} outside the box [0, {self.pmax}]")
        return p


def _as_power(p, K: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (K,):
        raise ValueError(f"power vector must have shape ({K},), got {p.shape}")
    return p


def _check_user(net: InterferenceNetwork, k: int) -> None:
    if not 0 <= k < net.K:
        raise IndexError(f"user index {k} out of range for K={net.K}")


def interference(net: InterferenceNetwork, p) -> np.ndarray:
    """Noise plus interference ``sigma2_k + sum_j eta_kj p_j`` for every ``k``.

    Rates and gradients both go through this so they stay bit-consistent.
    """
    return net.sigma2 + net.eta @ _as_power(p, net.K)


def rates(net: InterferenceNetwork, p) -> np.ndarray:
    """All user rates in nats."""
    p = _as_power(p, net.K)
    return np.log1p(net.theta * p / interference(net, p))


def rate(net: InterferenceNetwork, p, k: int) -> float:
    """Rate of user ``k`` in nats."""
    _check_user(net, k)
    p = _as_power(p, net.K)
    den = net.sigma2[k] + net.eta[k] @ p
    return float(np.log1p(net.theta[k] * p[k] / den))


def wsee(prob: WseeProblem, p) -> float:
    """Weighted sum energy efficiency in nats per Joule."""
    p = _as_power(p, prob.K)
    return float(np.sum(prob.w * rates(prob.net, p) / prob.pm.consumed(p)))


def rate_jacobian(net: InterferenceNetwork, p) -> np.ndarray:
    """Matrix whose row ``k`` is the gradient of ``r_k`` at ``p``."""
    p = _as_power(p, net.K)
    I = interference(net, p)
    S = I + net.theta * p
    # d r_k / d p_i = theta_k / S_k * (delta_ki - eta_ki p_k / I_k)
    J = -(net.eta * (p / I)[:, None])
    J[np.diag_indices(net.K)] += 1.0
    return (net.theta / S)[:, None] * J


def grad_rate(net: InterferenceNetwork, p, k: int) -> np.ndarray:
    """Gradient of the rate of user ``k`` with respect to all powers."""
    _check_user(net, k)
    p = _as_power(p, net.K)
    I = net.sigma2[k] + net.eta[k] @ p
    S = I + net.theta[k] * p[k]
    g = -net.eta[k] * (p[k] / I)
    g[k] += 1.0
    return net.theta[k] / S * g


def grad_wsee(prob: WseeProblem, p) -> np.ndarray:
    """Gradient of the WSEE objective."""
    p = _as_power(p, prob.K)
    cons = prob.pm.consumed(p)
    r = rates(prob.net, p)
    J = rate_jacobian(prob.net, p)
    return (prob.w / cons) @ J - prob.w * prob.pm.phi * r / cons**2


def rate_dc_split(net: InterferenceNetwork, p, k: int, normalized: bool = False):
    """Split ``r_k`` into two nondecreasing parts, ``r_k = plus - minus``.

    ``plus = log(sigma2_k + theta_k p_k + sum_j eta_kj p_j)`` and
    ``minus = log(sigma2_k + sum_j eta_kj p_j)``. With ``normalized=True``
    both parts are shifted by ``-log(sigma2_k)`` so that they vanish at
    ``p = 0`` and are nonnegative on the orthant.
    """
    _check_user(net, k)
    p = _as_power(p, net.K)
    I = net.sigma2[k] + net.eta[k] @ p
    S = I + net.theta[k] * p[k]
    if normalized:
        s2 = net.sigma2[k]
        return float(np.log1p((S - s2) / s2)), float(np.log1p((I - s2) / s2))
    return float(np.log(S)), float(np.log(I))


def projected_gradient_residual(prob: WseeProblem, p) -> float:
    """Stationarity measure ``||p - clip(p + grad f(p), 0, pmax)||_inf``."""
    p = _as_power(p, prob.K)
    step = np.clip(p + grad_wsee(prob, p), 0.0, prob.pmax)
    return float(np.max(np.abs(p - step)))


# -- serialization ----------------------------------------------------------

def problem_to_dict(prob: WseeProblem) -> dict:
    return {
        "K": prob.K,
        "theta": prob.net.theta.tolist(),
        "eta": prob.net.eta.tolist(),
        "sigma2": prob.net.sigma2.tolist(),
        "w": prob.w.tolist(),
        "phi": prob.pm.phi.tolist(),
        "pc": prob.pm.pc.tolist(),
        "pmax": prob.pmax.tolist(),
    }


def problem_from_dict(d: dict) -> WseeProblem:
    missing = {"K", "theta", "eta", "sigma2", "w", "phi", "pc", "pmax"} - set(d)
    if missing:
        raise ValueError(f"problem document lacks fields: {sorted(missing)}")
    prob = WseeProblem(
        InterferenceNetwork(d["theta"], d["eta"], d["sigma2"]),
        PowerModel(d["phi"], d["pc"]),
        d["w"],
        d["pmax"],
    )
    if prob.K != int(d["K"]):
        raise ValueError(f"K={d['K']} disagrees with vector lengths ({prob.K})")
    return prob


def save_problem(prob: WseeProblem, path) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(prob), indent=2))


def load_problem(path) -> WseeProblem:
    return problem_from_dict(json.loads(Path(path).read_text()))
