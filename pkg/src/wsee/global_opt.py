"""
Global WSEE maximization by fractional monotonic programming.

The sum of ratios is brought over a common denominator,

    f(p) = N(p) / D(p),
    N(p) = sum_k w_k r_k(p) prod_{i != k} (phi_i p_i + pc_i),
    D(p) = prod_k (phi_k p_k + pc_k),

and Dinkelbach's method maximizes ``F(p; lam) = N(p) - lam D(p)`` for an
increasing sequence of ``lam``. Every such subproblem is a difference of
increasing functions ``A(p) - B(p)`` which is lifted to a monotonic problem
in ``(p, t)`` and solved with the polyblock algorithm.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .core import WseeProblem, wsee
from .polyblock import PolyblockConfig, PolyblockResult, polyblock_maximize

__all__ = [
    "DinkelbachConfig",
    "LiftedPoint",
    "OuterRecord",
    "GlobalResult",
    "ratio_parts",
    "parametric_F",
    "DcSplit",
    "dc_split_F",
    "lifted_feasible",
    "LiftedSubproblem",
    "maximize_parametric",
    "dinkelbach_solve",
    "write_outer_trace",
]


@dataclass(frozen=True)
class DinkelbachConfig:
    eps: float = 1e-5
    max_outer: int = 100
    inner: PolyblockConfig = field(default_factory=PolyblockConfig)
    time_limit: Optional[float] = None   # seconds for the whole solve
    p0: Optional[np.ndarray] = None      # None -> pmax

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be positive")


class LiftedPoint(NamedTuple):
    p: np.ndarray
    t: float


class OuterRecord(NamedTuple):
    lam: float
    F: float
    inner_iters: int
    incumbent: float
    bound: float


@dataclass
class GlobalResult:
    p_star: np.ndarray
    f_star: float
    outer_iters: int
    inner_iters_total: int
    status: str   # "converged" | "budget-exhausted"
    trace: list = field(default_factory=list)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([r.lam for r in self.trace])

    @property
    def total_iters(self) -> int:
        return self.outer_iters + self.inner_iters_total


# -- ratio form ---------------------------------------------------------------

def _batch(p):
    p = np.asarray(p, dtype=float)
    return p[None, :] if p.ndim == 1 else p, p.ndim == 1


def _parts(prob: WseeProblem, p):
    """Normalized rate parts and consumed powers for a batch of points."""
    net = prob.net
    I = p @ net.eta.T
    rp = np.log1p((I + net.theta * p) / net.sigma2)
    rm = np.log1p(I / net.sigma2)
    cons = prob.pm.phi * p + prob.pm.pc
    D = np.prod(cons, axis=1)
    others = D[:, None] / cons   # prod over i != k
    return rp, rm, others, D


def ratio_parts(prob: WseeProblem, p):
    """Numerator and denominator of the single-ratio form of the WSEE."""
    pb, single = _batch(p)
    rp, rm, others, D = _parts(prob, pb)
    N = np.sum(prob.w * (rp - rm) * others, axis=1)
    if single:
        return float(N[0]), float(D[0])
    return N, D


def parametric_F(prob: WseeProblem, p, lam: float):
    N, D = ratio_parts(prob, p)
    return N - lam * D


class DcSplit:
    """Two nondecreasing functions with ``F(p; lam) = A(p) - B(p)``.

    ``A = sum_k w_k (r_k + c_k) prod_{i != k} (phi_i p_i + pc_i)`` and
    ``B = sum_k w_k c_k prod_{i != k} (...) + lam prod_k (...)``, where the
    compensator ``c_k`` is increasing and makes ``r_k + c_k`` increasing.
    Every factor is nonnegative and increasing, hence so are the products,
    and apart from the ``lam`` term both vanish at ``p = 0``.

    ``split="standard"`` uses ``c_k = log(1 + sum_j eta_kj p_j / sigma2_k)``,
    which turns ``r_k + c_k`` into ``log(1 + (theta_k p_k + sum_j eta_kj
    p_j) / sigma2_k)``. ``split="tight"`` drops the self-interference term
    (``r_k`` already increases in ``p_k``) and, per user, takes whichever of
    the log form and the linear form ``L_k sum_{j != k} eta_kj p_j`` varies
    less over the box; ``L_k`` bounds ``|d r_k / d p_j| / eta_kj`` there.

    With ``shift=True`` a common linear term ``s . p`` is subtracted from
    both parts, where ``s_j`` is a lower bound of both ``dA/dp_j`` and
    ``dB/dp_j`` over the box, so both stay nondecreasing. The polyblock
    outer approximation error grows with the slopes of ``A`` and ``B``, so
    flatter parts and a smaller range of ``B`` mean fewer iterations.
    """

    def __init__(self, prob: WseeProblem, lam: float, split: str = "tight",
                 shift: bool = True):
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        net = prob.net
        self.prob, self.lam, self.split = prob, float(lam), split
        self._theta, self._eta = net.theta, net.eta
        self._inv_s2 = 1.0 / net.sigma2
        self._w, self._phi, self._pc = prob.w, prob.pm.phi, prob.pm.pc
        if split == "standard":
            self._eta_c = net.eta
            self._use_lin = np.zeros(prob.K, dtype=bool)
            self._slope = np.zeros(prob.K)
        elif split == "tight":
            self._eta_c = net.eta - np.diag(np.diag(net.eta))
            snr = net.theta * prob.pmax / net.sigma2
            self._slope = snr / (1.0 + snr) / net.sigma2
            top = self._eta_c @ prob.pmax
            self._use_lin = self._slope * top < np.log1p(top / net.sigma2)
        else:
            raise ValueError(f"unknown split {split!r}")
        self.shift = self._common_slope(prob) if shift else np.zeros(prob.K)

    def _common_slope(self, prob, cells=4096):
        # Interval lower bounds of dA/dp_j and dB/dp_j on a grid of sub-boxes
        # [lo, hi] of the power box. Every factor below is positive and
        # monotone in p, so a product of per-factor bounds is a valid bound.
        K = prob.K
        n = max(2, min(64, int(round(cells ** (1.0 / K)))))
        edges = np.linspace(0.0, 1.0, n + 1)
        idx = np.stack(np.meshgrid(*([np.arange(n)] * K), indexing="ij"), -1).reshape(-1, K)
        lo, hi = edges[idx] * prob.pmax, edges[idx + 1] * prob.pmax
        th, eta, s2 = self._theta, self._eta, 1.0 / self._inv_s2
        ekk = np.diag(eta)
        r_lo, c_lo, others_lo, _ = self._pieces(lo)
        cons_lo = self._phi * lo + self._pc
        # d others_k / d p_j = phi_j prod_{i != j, k} cons_i, zero for j = k
        dO = others_lo[:, :, None] * self._phi / cons_lo[:, None, :]
        dO[:, np.arange(K), np.arange(K)] = 0.0
        S_hi = s2 + th * hi + hi @ eta.T
        I0_lo, I0_hi = s2 + lo @ self._eta_c.T, s2 + hi @ self._eta_c.T
        if self.split == "standard":
            # r_k + c_k = log(S_k / sigma2_k)
            drc = (np.diag(th) + eta)[None] / S_hi[:, :, None]
            dc = eta[None] / (s2 + hi @ eta.T)[:, :, None]
        else:
            # own: theta I0 / (S I) with I = I0 + eta_kk p_k
            own = th / S_hi * I0_lo / (I0_lo + ekk * hi)
            I_lo = I0_lo + ekk * lo
            S_lo = s2 + th * lo + lo @ eta.T
            # cross: eta_kj (1/S - 1/I) + dc_k/dp_j, where 1/S - 1/I = -theta p_k / (S I)
            # and the log compensator adds 1/I0 = 1/I + eta_kk p_k / (I0 I)
            log_x = 1.0 / S_hi + ekk * lo / (I0_hi * (I0_hi + ekk * lo))
            lin_x = self._slope - th * hi / (S_lo * I_lo)
            lin = self._use_lin
            drc = self._eta_c[None] * np.where(lin, lin_x, log_x)[:, :, None]
            drc[:, np.arange(K), np.arange(K)] += own
            dc = self._eta_c[None] * np.where(lin, self._slope, 1.0 / I0_hi)[:, :, None]
        w = self._w[None, :, None]
        lA = np.sum(w * (drc * others_lo[:, :, None] + (r_lo + c_lo)[:, :, None] * dO), axis=1)
        lB = np.sum(w * (dc * others_lo[:, :, None] + c_lo[:, :, None] * dO), axis=1)
        lB = lB + self.lam * self._phi * np.prod(cons_lo, axis=1)[:, None] / cons_lo
        return np.maximum(np.min(np.minimum(lA, lB), axis=0), 0.0)

    def _pieces(self, P):
        Ic = P @ self._eta_c.T
        c = np.where(self._use_lin, self._slope * Ic, np.log1p(Ic * self._inv_s2))
        I = P @ self._eta.T
        r = np.log1p(self._theta * P / (1.0 / self._inv_s2 + I))
        cons = self._phi * P + self._pc
        D = np.prod(cons, axis=-1)
        others = D[..., None] / cons
        return r, c, others, D

    def compensators(self, p) -> np.ndarray:
        return self._pieces(np.asarray(p, dtype=float))[1]

    def A(self, p):
        p = np.asarray(p, dtype=float)
        r, c, others, _ = self._pieces(p)
        out = np.sum(self._w * (r + c) * others, axis=-1) - p @ self.shift
        return float(out) if out.ndim == 0 else out

    def B(self, p):
        p = np.asarray(p, dtype=float)
        _, c, others, D = self._pieces(p)
        out = np.sum(self._w * c * others, axis=-1) + self.lam * D - p @ self.shift
        return float(out) if out.ndim == 0 else out


def dc_split_F(prob: WseeProblem, lam: float, split: str = "tight"):
    """``(A, B)`` callables of a `DcSplit`; both accept a point or a batch."""
    dc = DcSplit(prob, lam, split)
    return dc.A, dc.B


def lifted_feasible(prob: WseeProblem, lam: float, z: LiftedPoint,
                    split: str = "tight") -> bool:
    """Membership in ``{(p, t): 0 <= p <= pmax, 0 <= t <= B(pmax) - B(p)}``."""
    p = np.asarray(z.p, dtype=float)
    if np.any(p < 0) or np.any(p > prob.pmax) or z.t < 0:
        return False
    _, B = dc_split_F(prob, lam, split)
    return bool(z.t <= B(prob.pmax) - B(p))


# -- inner solver ----------------------------------------------------------------

class LiftedSubproblem:
    """Monotonic reformulation of ``max_p F(p; lam)`` over the power box.

    Polyblock coordinates are ``z = (u, s)`` with ``u = p + pad`` and
    ``s = t + t_pad``. The functions are extended to ``p < 0`` by clamping
    at 0 and ``t`` may drop to ``-t_pad``; both extensions are flat, keep
    the set normal and leave the optimum unchanged. They move the faces
    ``p_k = 0`` and ``t = 0``, where optima frequently sit, off the lower
    boundary of the search box. The conormal corner sits halfway into the
    padding.

    The objective is divided by ``scale`` so that a polyblock tolerance
    relative to ``max(1, |value|)`` is relative to the size of the ratio.
    """

    def __init__(self, prob: WseeProblem, lam: float, split: str = "tight",
                 pad_frac: float = 0.5, t_pad_frac: float = 1.0, scale: float = 1.0):
        self.prob = prob
        self.lam = float(lam)
        self.scale = float(scale)
        self.dc = DcSplit(prob, lam, split)
        self.B = self.dc.B
        self.B_top = self.B(prob.pmax)
        self.t_range = self.B_top - self.B(np.zeros(prob.K))
        self.pad = pad_frac * prob.pmax
        self.t_pad = t_pad_frac * max(self.t_range, 1e-300)
        self.upper = np.append(prob.pmax + self.pad, self.t_range + self.t_pad)
        self.lower = 0.5 * np.append(self.pad, self.t_pad)
        self._pmax = prob.pmax

    def to_power(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.minimum(np.maximum(z[..., :-1] - self.pad, 0.0), self._pmax)

    def from_power(self, p) -> np.ndarray:
        """Best lifted point above power vector ``p``."""
        p = np.asarray(p, dtype=float)
        return np.append(p + self.pad, self.t_pad + self.B_top - self.B(p))

    def objective(self, Z) -> np.ndarray:
        # equals F(p; lam) on the upper boundary of the feasible set
        return (self.dc.A(self.to_power(Z)) + Z[:, -1] - self.t_pad - self.B_top) / self.scale

    def slack(self, z) -> float:
        return self.t_pad + self.B_top - self.B(self.to_power(z)) - z[-1]

    def feasible(self, z) -> bool:
        return bool(np.all(z <= self.upper) and self.slack(z) >= 0.0)

    def improve(self, z):
        return self.from_power(self.to_power(z))


def maximize_parametric(prob: WseeProblem, lam: float, cfg: PolyblockConfig = PolyblockConfig(),
                        p_start=None, deadline: Optional[float] = None):
    """Globally maximize ``F(p; lam)``.

    Returns ``(p, F, F_upper, result)`` where ``F_upper`` bounds the maximum
    from above. The polyblock runs on ``F / max(1, lam prod_k pc_k)``, so its
    tolerance is relative to the size of ``lam D(p)`` at its smallest.
    """
    scale = max(1.0, lam * float(np.prod(prob.pm.pc)))
    sub = LiftedSubproblem(prob, lam, scale=scale)
    inc = None if p_start is None else sub.from_power(p_start)
    res: PolyblockResult = polyblock_maximize(
        sub.objective, sub.feasible, sub.upper, cfg,
        incumbent=inc, improve=sub.improve, slack=sub.slack,
        lower_corner=sub.lower, deadline=deadline)
    p = sub.to_power(res.z)
    return p, float(parametric_F(prob, p, lam)), res.upper_bound * scale, res


def dinkelbach_solve(prob: WseeProblem, cfg: DinkelbachConfig = DinkelbachConfig()) -> GlobalResult:
    """Dinkelbach iteration with globally solved parametric subproblems."""
    deadline = None if cfg.time_limit is None else time.monotonic() + cfg.time_limit
    p_prev = prob.pmax.copy() if cfg.p0 is None else prob.check_power(cfg.p0).copy()
    f_prev = wsee(prob, p_prev)
    trace = []
    inner_total = 0
    status = "budget-exhausted"
    p_best, f_best = p_prev, f_prev
    for _ in range(cfg.max_outer):
        lam = f_prev
        p, F, F_up, res = maximize_parametric(prob, lam, cfg.inner, p_start=p_prev,
                                              deadline=deadline)
        inner_total += res.iters
        trace.append(OuterRecord(lam, F, res.iters, F, F_up))
        f = wsee(prob, p)
        if f > f_best:
            p_best, f_best = p, f
        if not res.converged:
            break
        if F <= cfg.eps:
            status = "converged"
            break
        p_prev, f_prev = p, f
    return GlobalResult(p_star=p_best, f_star=f_best, outer_iters=len(trace),
                        inner_iters_total=inner_total, status=status, trace=trace)


def write_outer_trace(result: GlobalResult, path) -> None:
    """One CSV row per outer iteration: lambda, F, inner iterations, bounds."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["outer", "lambda", "F", "inner_iters", "incumbent", "bound"])
        for i, r in enumerate(result.trace, 1):
            wr.writerow([i, f"{r.lam:.12g}", f"{r.F:.12g}", r.inner_iters,
                         f"{r.incumbent:.12g}", f"{r.bound:.12g}"])
