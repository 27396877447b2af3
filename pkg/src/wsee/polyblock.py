"""
Polyblock outer approximation for monotonic optimization.

Maximizes an increasing function over the intersection of a normal
(downward closed) subset of a box ``[0, b]`` with the conormal set
``{z >= a}``. The feasible set is enclosed in a union of boxes ``[a, v]``
given by a vertex set. Each iteration takes the vertex with the
largest objective, projects it onto the upper boundary of the feasible set
along the ray from the origin, and replaces every vertex strictly above the
projection by its n children ``v - (v_i - x_i) e_i``. Children that leave
``{z >= a}`` are discarded, which is what keeps vertices from creeping
toward a coordinate face forever when the objective is flat there.

Without an explicit lower corner the search runs in shifted coordinates
``y = z + pad`` with the problem extended to ``y < pad`` by clamping
``z = max(y - pad, 0)``. The extension is flat, so the set stays normal,
the objective stays increasing and the optimum is unchanged, while optima
on a face ``z_i = 0`` move off the lower boundary of the search box. The
conormal corner is then placed halfway into the padding.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = ["PolyblockConfig", "PolyblockResult", "project_to_boundary", "polyblock_maximize"]


@dataclass(frozen=True)
class PolyblockConfig:
    tol: float = 1e-4
    max_iters: int = 2_000_000
    max_vertices: int = 1_000_000
    bisect_tol: float = 1e-9
    pad_frac: float = 0.5   # padding relative to the upper corner, 0 disables

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("polyblock tolerance must be positive")
        if self.pad_frac < 0:
            raise ValueError("pad_frac must be nonnegative")


@dataclass
class PolyblockResult:
    z: np.ndarray
    value: float
    upper_bound: float
    iters: int
    status: str        # "converged" | "max-iters" | "max-vertices" | "time-limit"
    n_vertices: int
    lower_trace: np.ndarray
    upper_trace: np.ndarray

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def project_to_boundary(feasible: Callable, v: np.ndarray, rel_tol: float = 1e-9,
                        slack: Optional[Callable] = None) -> float:
    """Largest ``mu`` in ``[0, 1]`` (up to ``rel_tol``) with ``mu * v`` feasible.

    Plain bisection on ``feasible``. When ``slack`` is given (a function that
    is nonincreasing along rays and nonnegative exactly on the feasible set)
    a bracketing root finder locates the crossing first and bisection only
    polishes the bracket. The returned ``mu`` is always on the feasible side.
    """
    if feasible(v):
        return 1.0
    lo, hi = 0.0, 1.0
    if slack is not None:
        lo, hi = _secant_bracket(slack, v, rel_tol)
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if feasible(mid * v):
            lo = mid
        else:
            hi = mid
    return lo


def _secant_bracket(slack, v, rel_tol):
    # Illinois regula falsi on mu -> slack(mu v); slack(0) >= 0 > slack(1)
    lo, hi = 0.0, 1.0
    s_lo, s_hi = slack(0.0 * v), slack(v)
    if not (s_lo >= 0.0 > s_hi):
        return 0.0, 1.0
    side = 0
    for _ in range(100):
        if hi - lo <= rel_tol * hi:
            break
        mu = (lo * s_hi - hi * s_lo) / (s_hi - s_lo)
        if not lo < mu < hi:
            mu = 0.5 * (lo + hi)
        s = slack(mu * v)
        if s >= 0.0:
            lo, s_lo = mu, s
            if side == -1:
                s_hi *= 0.5
            side = -1
        else:
            hi, s_hi = mu, s
            if side == 1:
                s_lo *= 0.5
            side = 1
    return lo, hi


def _proper_children(children: np.ndarray) -> np.ndarray:
    """Drop children dominated by another child; of duplicates keep the first."""
    m = len(children)
    if m < 2:
        return children
    le = np.all(children[:, None, :] <= children[None, :, :], axis=2)
    eq = le & le.T
    # j dominates i if c_i <= c_j, unless they are equal and j comes later
    dominated = le & ~(eq & np.tri(m, m, 0, dtype=bool).T)
    return children[~dominated.any(axis=1)]


def polyblock_maximize(objective: Callable, feasible: Callable, upper_corner,
                       cfg: PolyblockConfig = PolyblockConfig(), *,
                       incumbent=None, improve: Optional[Callable] = None,
                       slack: Optional[Callable] = None,
                       lower_corner=None,
                       deadline: Optional[float] = None) -> PolyblockResult:
    """Maximize an increasing ``objective`` over a normal feasible set.

    Parameters
    ----------
    objective : callable
        Maps an ``(m, n)`` array of points to ``m`` values; must be
        nondecreasing in every coordinate.
    feasible : callable
        Predicate on a single point; the set must be normal and contain 0.
    upper_corner : array_like
        ``b`` with the feasible set inside ``[0, b]``.
    lower_corner : array_like, optional
        ``a`` of the conormal constraint ``z >= a``; only points above
        ``a`` count as solutions. When omitted the constraint is ``z >= 0``
        and the search is padded (see ``PolyblockConfig.pad_frac``).
    incumbent : array_like, optional
        A known feasible point used as the starting lower bound.
    improve : callable, optional
        Maps a point of the box to a feasible point with objective at least
        as large as any feasible point it dominates, or ``None``. Used to
        sharpen the incumbent from projections and vertices.
    slack : callable, optional
        Accelerates projections, see `project_to_boundary`.
    deadline : float, optional
        ``time.monotonic()`` value after which the search stops.

    Returns
    -------
    PolyblockResult
        Best feasible point, its value and a valid upper bound. On budget
        exhaustion the bound is still valid and ``status`` says why.
    """
    b = np.asarray(upper_corner, dtype=float)
    n = b.size
    if lower_corner is None and cfg.pad_frac > 0:
        return _padded(objective, feasible, b, cfg, incumbent, improve, slack, deadline)
    a = np.zeros(n) if lower_corner is None else np.asarray(lower_corner, dtype=float)
    if np.any(a > b):
        raise ValueError("lower corner exceeds upper corner")

    def value_of(z):
        return float(objective(z[None, :])[0])

    best_z, best = None, -np.inf
    if incumbent is not None:
        best_z = np.asarray(incumbent, dtype=float).copy()
        best = value_of(best_z)
    elif lower_corner is None:
        best_z = np.zeros(n)
        best = value_of(best_z)

    def offer(z):
        nonlocal best_z, best
        if z is None or np.any(z < a):
            return
        val = value_of(z)
        if val > best:
            best_z, best = np.array(z, dtype=float), val

    def gap_tol():
        # no incumbent yet: nothing can be pruned
        return cfg.tol * max(1.0, abs(best)) if np.isfinite(best) else 0.0

    offer(improve(b) if improve is not None else None)

    verts = b[None, :].copy()
    vals = objective(verts)
    pruned_ub = -np.inf
    lower, upper = [], []
    status = "max-iters"
    iters = 0

    while iters < cfg.max_iters:
        # prune boxes that cannot beat the incumbent by more than the tolerance
        keep = vals > best + gap_tol()
        if not keep.all():
            pruned_ub = max(pruned_ub, float(vals[~keep].max()))
            verts, vals = verts[keep], vals[keep]
        if len(verts) == 0:
            ub = pruned_ub
        else:
            i = int(np.argmax(vals))
            ub = max(float(vals[i]), pruned_ub)
        lower.append(best)
        upper.append(ub)
        if ub - best <= gap_tol() or len(verts) == 0:
            status = "converged"
            break
        if deadline is not None and time.monotonic() > deadline:
            status = "time-limit"
            break

        v = verts[i]
        mu = project_to_boundary(feasible, v, cfg.bisect_tol, slack)
        x = mu * v
        iters += 1
        offer(x)
        if improve is not None:
            offer(improve(x))
            offer(improve(v))
        if mu == 1.0:
            # the whole box [0, v] is feasible; its best point is v itself
            verts = np.delete(verts, i, axis=0)
            vals = np.delete(vals, i)
            continue

        above = np.all(verts > x, axis=1)
        above[i] = True
        cut = verts[above]
        verts, vals = verts[~above], vals[~above]
        children = np.repeat(cut, n, axis=0)
        cols = np.tile(np.arange(n), len(cut))
        children[np.arange(len(children)), cols] = x[cols]
        children = _proper_children(children[np.all(children >= a, axis=1)])
        if len(children):
            cvals = objective(children)
            verts = np.concatenate([verts, children])
            vals = np.concatenate([vals, cvals])
        if len(verts) > cfg.max_vertices:
            status = "max-vertices"
            ub = max(float(vals.max()), pruned_ub)
            lower.append(best)
            upper.append(ub)
            break
    else:
        ub = max(float(vals.max()) if len(vals) else -np.inf, pruned_ub)

    if best_z is None:
        raise ValueError("no feasible point found above the lower corner")
    return PolyblockResult(z=best_z, value=best, upper_bound=max(ub, best), iters=iters,
                           status=status, n_vertices=len(verts),
                           lower_trace=np.array(lower), upper_trace=np.array(upper))


def _padded(objective, feasible, b, cfg, incumbent, improve, slack, deadline):
    pad = cfg.pad_frac * b

    def unpad(y):
        return np.maximum(y - pad, 0.0)

    def improve_y(y):
        z = improve(unpad(y))
        return None if z is None else np.asarray(z, dtype=float) + pad

    start = np.zeros(b.size) if incumbent is None else np.asarray(incumbent, dtype=float)
    res = polyblock_maximize(
        lambda Y: objective(unpad(Y)), lambda y: feasible(unpad(y)), b + pad, cfg,
        incumbent=start + pad,
        improve=None if improve is None else improve_y,
        slack=None if slack is None else (lambda y: slack(unpad(y))),
        lower_corner=0.5 * pad, deadline=deadline)
    res.z = unpad(res.z)
    return res
