"""
Successive convex approximation for WSEE maximization over a power box.

Each iteration replaces the objective by a separable concave surrogate that
keeps user ``k``'s own rate term and linearizes everything else around the
current point. On a box the surrogate splits into K scalar problems

    max_{0 <= p <= pmax_k}  a log(1 + theta p / (eta_kk p + d)) + b p + c

solved in closed form. The best response direction is then scaled by an
Armijo backtracking step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .core import WseeProblem, grad_wsee, projected_gradient_residual, rate_jacobian, rates, wsee

__all__ = [
    "ScaConfig",
    "SurrogateCoeffs",
    "ScaIterate",
    "ScaResult",
    "LineSearch",
    "surrogate_coeffs",
    "surrogate_value",
    "surrogate_derivative",
    "solve_scalar_subproblem",
    "best_response",
    "armijo_step",
    "sca_solve",
]

ARMIJO_MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class ScaConfig:
    alpha: float = 0.3
    beta: float = 0.5
    max_iters: int = 1000
    tol_obj: float = 1e-8
    tol_step: float = 1e-7
    tol_residual: float = 1e-6   # required for convergence, and accepted on a stall
    p0: Optional[np.ndarray] = None  # None -> start at pmax

    def __post_init__(self):
        if not 0 < self.alpha < 1 or not 0 < self.beta < 1:
            raise ValueError("Armijo constants must satisfy 0 < alpha, beta < 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.tol_obj < 0 or self.tol_step < 0 or self.tol_residual < 0:
            raise ValueError("tolerances must be nonnegative")


class SurrogateCoeffs(NamedTuple):
    """Scalar surrogate ``a log(1 + theta p/(eta_kk p + d)) + b p + c``."""

    a: float
    b: float
    c: float
    d: float
    theta_k: float
    eta_kk: float


class ScaIterate(NamedTuple):
    f: float
    gamma: float
    step: float


class LineSearch(NamedTuple):
    gamma: float
    backtracks: int
    ok: bool


@dataclass
class ScaResult:
    p_star: np.ndarray
    f_star: float
    iters: int
    status: str  # "converged" | "max-iters" | "stalled"
    residual: float
    f0: float
    trace: list = field(default_factory=list)

    @property
    def objective_trace(self) -> np.ndarray:
        return np.array([self.f0] + [it.f for it in self.trace])


def surrogate_coeffs(prob: WseeProblem, p_t, k: int) -> SurrogateCoeffs:
    """Coefficients of the k-th scalar surrogate built at ``p_t``."""
    p_t = np.asarray(p_t, dtype=float)
    net, w = prob.net, prob.w
    cons = prob.pm.consumed(p_t)
    r = rates(net, p_t)
    J = rate_jacobian(net, p_t)
    return _coeffs_from(prob, p_t, k, cons, r, J)


def _coeffs_from(prob, p_t, k, cons, r, J) -> SurrogateCoeffs:
    net, w = prob.net, prob.w
    a = w[k] / cons[k]
    cross = w * J[:, k] / cons
    b = -w[k] * prob.pm.phi[k] * r[k] / cons[k] ** 2 + (cross.sum() - cross[k])
    d = net.sigma2[k] + net.eta[k] @ p_t - net.eta[k, k] * p_t[k]
    return SurrogateCoeffs(float(a), float(b), float(-b * p_t[k]), float(d),
                           float(net.theta[k]), float(net.eta[k, k]))


def surrogate_value(sc: SurrogateCoeffs, p):
    """Surrogate evaluated at scalar or array ``p``."""
    p = np.asarray(p, dtype=float)
    val = sc.a * np.log1p(sc.theta_k * p / (sc.eta_kk * p + sc.d)) + sc.b * p + sc.c
    return float(val) if val.ndim == 0 else val


def surrogate_derivative(sc: SurrogateCoeffs, p: float) -> float:
    return (sc.a * sc.theta_k * sc.d
            / ((sc.eta_kk * p + sc.d) * ((sc.theta_k + sc.eta_kk) * p + sc.d)) + sc.b)


def _stationary_points(sc: SurrogateCoeffs) -> list:
    """Real roots of the surrogate derivative (only meaningful for b < 0).

    Zeroing the derivative gives
    eta(theta+eta) p^2 + (theta+2 eta) d p + d^2 - a theta d / (-b) = 0.
    """
    a, b, d, th, et = sc.a, sc.b, sc.d, sc.theta_k, sc.eta_kk
    q = a * th * d / -b
    A = et * (th + et)
    B = (th + 2.0 * et) * d
    C = d * d - q
    if A == 0.0:
        return [-C / B]
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        return []
    # B > 0, so the minus branch never cancels
    s = -B - math.sqrt(disc)
    return [s / (2.0 * A), 2.0 * C / s]


def solve_scalar_subproblem(sc: SurrogateCoeffs, pmax_k: float) -> float:
    """Global maximizer of the scalar surrogate over ``[0, pmax_k]``.

    Ties between candidates go to the smaller power.
    """
    if sc.b >= 0.0:
        # derivative is strictly positive everywhere on p >= 0
        return float(pmax_k)
    cands = [0.0, float(pmax_k)]
    cands += [x for x in _stationary_points(sc) if 0.0 < x < pmax_k]
    cands.sort()
    vals = [surrogate_value(sc, x) for x in cands]
    best = max(range(len(cands)), key=lambda i: (vals[i], -cands[i]))
    return cands[best]


def best_response(prob: WseeProblem, p_t) -> np.ndarray:
    """Maximizer of the separable surrogate built at ``p_t``."""
    p_t = np.asarray(p_t, dtype=float)
    cons = prob.pm.consumed(p_t)
    r = rates(prob.net, p_t)
    J = rate_jacobian(prob.net, p_t)
    out = np.empty(prob.K)
    for k in range(prob.K):
        sc = _coeffs_from(prob, p_t, k, cons, r, J)
        out[k] = solve_scalar_subproblem(sc, prob.pmax[k])
    return out


def armijo_step(prob: WseeProblem, p_t, direction, alpha: float, beta: float,
                f_t: Optional[float] = None, grad_t=None) -> LineSearch:
    """Backtracking step ``beta**m`` for the smallest ``m`` passing the
    sufficient-ascent test.

    ``ok`` is False when the direction is not an ascent direction (gamma is
    then 0) or when the backtrack cap was hit without passing the test.
    """
    p_t = np.asarray(p_t, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if f_t is None:
        f_t = wsee(prob, p_t)
    if grad_t is None:
        grad_t = grad_wsee(prob, p_t)
    slope = float(grad_t @ direction)
    if slope < 0.0:
        return LineSearch(0.0, 0, False)
    gamma = 1.0
    for m in range(ARMIJO_MAX_BACKTRACKS + 1):
        if wsee(prob, p_t + gamma * direction) >= f_t + alpha * gamma * slope:
            return LineSearch(gamma, m, True)
        if m < ARMIJO_MAX_BACKTRACKS:
            gamma *= beta
    return LineSearch(gamma, ARMIJO_MAX_BACKTRACKS, False)


def sca_solve(prob: WseeProblem, cfg: ScaConfig = ScaConfig()) -> ScaResult:
    """Run the SCA iteration until both the objective change and the best
    response step fall below their tolerances and the projected gradient
    residual is within ``tol_residual``.

    On flat directions the best response step can shrink below ``tol_step``
    well before the gradient does, so the residual check keeps iterating
    until stationarity is certified (or ``max_iters`` is reached).

    Close to a stationary point the objective can stop resolving the update:
    the line search then fails, or accepts a step that leaves ``f`` unchanged
    and moves ``p`` by less than ``tol_step``. The iteration stops there with
    status ``converged`` when the best response step or the projected
    gradient residual is within tolerance, and ``stalled`` otherwise.
    """
    p = prob.pmax.copy() if cfg.p0 is None else prob.check_power(cfg.p0).copy()
    f = wsee(prob, p)
    f0 = f
    trace = []
    status = "max-iters"
    for _ in range(cfg.max_iters):
        grad = grad_wsee(prob, p)
        direction = best_response(prob, p) - p
        step = float(np.max(np.abs(direction)))
        ls = armijo_step(prob, p, direction, cfg.alpha, cfg.beta, f, grad)
        p_new = np.clip(p + ls.gamma * direction, 0.0, prob.pmax)
        f_new = wsee(prob, p_new)
        if not ls.ok or f_new < f or (
                f_new == f and ls.gamma * step <= cfg.tol_step):
            # numerically flat: no measurable ascent left
            trace.append(ScaIterate(f, 0.0, step))
            stationary = (step <= cfg.tol_step
                          or projected_gradient_residual(prob, p) <= cfg.tol_residual)
            status = "converged" if stationary else "stalled"
            break
        trace.append(ScaIterate(f_new, ls.gamma, step))
        df = f_new - f
        p, f = p_new, f_new
        if (abs(df) <= cfg.tol_obj and step <= cfg.tol_step
                and projected_gradient_residual(prob, p) <= cfg.tol_residual):
            status = "converged"
            break
    return ScaResult(p_star=p, f_star=f, iters=len(trace), status=status,
                     residual=projected_gradient_residual(prob, p), f0=f0,
                     trace=trace)
