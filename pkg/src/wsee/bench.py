"""
Monte-Carlo benchmark harness for the WSEE solvers on the multi-way relay
channel.

For every realization one channel is drawn and reused across the whole
``P_max`` sweep and by every solver. All nodes share the power budget, so
the relay power and each user's ``pmax`` equal ``P_max``. SCA warm-starts
from the optimum of the previous (smaller) ``P_max`` point. Records are
sorted by ``(pmax_db, realization, solver)`` before they leave the harness,
so results do not depend on how realizations were scheduled.
"""

from __future__ import annotations

import csv
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .global_opt import DinkelbachConfig, dinkelbach_solve
from .mwrc import ChannelGenConfig, generate_channels, mwrc_problem
from .polyblock import PolyblockConfig
from .sca import ScaConfig, sca_solve

__all__ = [
    "SOLVERS",
    "SweepConfig",
    "SweepRecord",
    "AggregateRow",
    "SweepResult",
    "db_to_linear",
    "parse_db_range",
    "run_realization",
    "run_sweep",
    "aggregate",
    "emit_csv",
    "read_csv",
    "summarize",
]

SOLVERS = ("sca", "global")
SIG_DIGITS = 12
DASH = "\u2014"   # Table I style placeholder for solvers that did not run

_SCA_KEYS = {"alpha", "beta", "max_iters", "tol_obj", "tol_step", "tol_residual"}
_GLOBAL_KEYS = {"eps", "max_outer", "tol", "max_iters", "max_vertices", "time_budget_s"}


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _round_sig(x: float) -> float:
    return float(f"{x:.{SIG_DIGITS}g}")


def parse_db_range(text: str) -> tuple:
    """``"a:b:step"`` -> ``(a, a + step, ..., b)``, endpoints inclusive."""
    try:
        a, b, step = (float(s) for s in text.split(":"))
    except ValueError:
        raise ValueError(f"expected a:b:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise ValueError(f"empty dB range {text!r}")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return tuple(_round_sig(a + i * step) for i in range(n))


@dataclass(frozen=True)
class SweepConfig:
    """Benchmark settings; JSON config files use the same field names.

    ``sca`` holds ScaConfig overrides (alpha, beta, max_iters, tol_obj,
    tol_step, tol_residual). ``dinkelbach`` holds global solver settings: eps, max_outer,
    the polyblock tol, max_iters and max_vertices, and ``time_budget_s``
    (wall clock per solve, None for no limit). The global solver only runs
    at ``pmax_db <= global_max_pmax_db`` and ``K <= global_max_K``. It starts
    from ``pmax`` or, with ``global_start="sca"``, from the SCA optimum of
    the same point when SCA ran there.
    """

    pmax_db: tuple = tuple(float(x) for x in range(-30, 31, 5))
    K: int = 3
    realizations: int = 50
    seed: int = 0
    pc: float = 1.0
    phi: float = 2.5
    N0: float = 1e-2
    weights: Optional[tuple] = None
    solvers: tuple = ("sca",)
    warm_start: bool = True
    sca: dict = field(default_factory=dict)
    dinkelbach: dict = field(default_factory=lambda: {"time_budget_s": 300.0})
    global_max_pmax_db: float = 0.0
    global_max_K: int = 3
    global_start: str = "pmax"
    workers: int = 1
    cold_start_audit: bool = False
    record_timing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "pmax_db", tuple(float(x) for x in self.pmax_db))
        object.__setattr__(self, "solvers", tuple(self.solvers))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(x) for x in self.weights))
        if not self.pmax_db:
            raise ValueError("pmax_db sweep is empty")
        if self.realizations < 1:
            raise ValueError("realizations must be at least 1")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if not self.solvers or not set(self.solvers) <= set(SOLVERS):
            raise ValueError(f"solvers must be a nonempty subset of {SOLVERS}")
        if self.weights is not None and (len(self.weights) != self.K
                                         or min(self.weights) <= 0):
            raise ValueError("weights must be K positive numbers")
        if min(self.pc, self.phi, self.N0) <= 0:
            raise ValueError("pc, phi and N0 must be positive")
        if self.global_start not in ("pmax", "sca"):
            raise ValueError("global_start must be 'pmax' or 'sca'")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        bad = set(self.sca) - _SCA_KEYS
        bad |= set(self.dinkelbach) - _GLOBAL_KEYS
        if bad:
            raise ValueError(f"unknown solver settings: {sorted(bad)}")
        self.sca_config()
        self.dinkelbach_config()

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "SweepConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pmax_db"] = list(self.pmax_db)
        d["solvers"] = list(self.solvers)
        if self.weights is not None:
            d["weights"] = list(self.weights)
        return d

    def replace(self, **changes) -> "SweepConfig":
        d = self.to_dict()
        d.update(changes)
        return SweepConfig.from_dict(d)

    def sca_config(self, p0=None) -> ScaConfig:
        return ScaConfig(p0=p0, **self.sca)

    def dinkelbach_config(self, p0=None) -> DinkelbachConfig:
        g = dict(self.dinkelbach)
        inner = PolyblockConfig(**{k: g.pop(k) for k in ("tol", "max_iters", "max_vertices")
                                   if k in g})
        return DinkelbachConfig(inner=inner, time_limit=g.pop("time_budget_s", None), p0=p0, **g)

    def runs_global(self, pmax_db: float) -> bool:
        return ("global" in self.solvers and pmax_db <= self.global_max_pmax_db
                and self.K <= self.global_max_K)


@dataclass(frozen=True)
class SweepRecord:
    """One solve. Floats are held at the precision written to CSV."""

    pmax_db: float
    realization: int
    solver: str
    wsee: float
    p: tuple
    iters_outer: int
    iters_inner: int
    iters_total: int
    wall_ms: float
    status: str

    def __post_init__(self):
        object.__setattr__(self, "pmax_db", _round_sig(self.pmax_db))
        object.__setattr__(self, "wsee", _round_sig(self.wsee))
        object.__setattr__(self, "p", tuple(_round_sig(x) for x in self.p))
        object.__setattr__(self, "wall_ms", _round_sig(self.wall_ms))

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def sort_key(self):
        return (self.pmax_db, self.realization, self.solver)


@dataclass(frozen=True)
class AggregateRow:
    pmax_db: float
    solver: str
    n: int
    n_converged: int
    wsee: float            # means over converged rows, nan if none
    iters_outer: float
    iters_inner: float
    iters_total: float

    @property
    def converged_fraction(self) -> float:
        return self.n_converged / self.n


@dataclass
class SweepResult:
    records: list
    summary: list


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, 1e3 * (time.perf_counter() - t0)


def _failed(pmax_db, r, solver, K, wall_ms, err) -> SweepRecord:
    return SweepRecord(pmax_db, r, solver, float("nan"), (float("nan"),) * K,
                       0, 0, 0, wall_ms, f"error: {type(err).__name__}")


def run_realization(cfg: SweepConfig, r: int) -> list:
    """All solves of one realization, in sweep order."""
    chan = generate_channels(ChannelGenConfig(seed=cfg.seed, K=cfg.K), 1.0,
                             cfg.N0, cfg.N0, realization=r)
    w = 1.0 if cfg.weights is None else np.asarray(cfg.weights)
    out = []
    p_warm = None
    clock = 1.0 if cfg.record_timing else 0.0

    def sca_row(prob, db, solver, p0):
        try:
            res, ms = _timed(lambda: sca_solve(prob, cfg.sca_config(p0)))
        except Exception as err:   # recorded, never fatal
            return None, _failed(db, r, solver, cfg.K, 0.0, err)
        rec = SweepRecord(db, r, solver, res.f_star, tuple(res.p_star),
                          res.iters, 0, res.iters, clock * ms, res.status)
        return res, rec

    for db in sorted(cfg.pmax_db):
        P = db_to_linear(db)
        prob = mwrc_problem(chan.with_relay_power(P), P, w=w, phi=cfg.phi, pc=cfg.pc)
        p_sca = None
        if "sca" in cfg.solvers:
            p0 = None
            if cfg.warm_start and p_warm is not None:
                p0 = np.minimum(p_warm, prob.pmax)
            res, rec = sca_row(prob, db, "sca", p0)
            out.append(rec)
            p_warm = p_sca = None if res is None else res.p_star
            if cfg.cold_start_audit:
                out.append(sca_row(prob, db, "sca-cold", None)[1])
        if cfg.runs_global(db):
            try:
                p0 = p_sca if cfg.global_start == "sca" else None
                res, ms = _timed(lambda: dinkelbach_solve(prob, cfg.dinkelbach_config(p0)))
                out.append(SweepRecord(db, r, "global", res.f_star, tuple(res.p_star),
                                       res.outer_iters, res.inner_iters_total,
                                       res.total_iters, clock * ms, res.status))
            except Exception as err:
                out.append(_failed(db, r, "global", cfg.K, 0.0, err))
    return out


def _run_one(args):
    cfg, r = args
    return run_realization(cfg, r)


def run_sweep(cfg: SweepConfig, workers: Optional[int] = None,
              progress: bool = False) -> SweepResult:
    """Run every realization and aggregate.

    ``workers`` overrides ``cfg.workers``; with more than one worker the
    realizations are spread over a process pool.
    """
    workers = cfg.workers if workers is None else int(workers)
    jobs = [(cfg, r) for r in range(cfg.realizations)]
    records = []

    def collect(i, recs):
        records.extend(recs)
        if progress:
            print(f"\rrealization {i}/{cfg.realizations}", end="", file=sys.stderr, flush=True)

    if workers <= 1:
        for i, job in enumerate(jobs, 1):
            collect(i, _run_one(job))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, recs in enumerate(pool.map(_run_one, jobs), 1):
                collect(i, recs)
    if progress:
        print(file=sys.stderr)
    records.sort(key=SweepRecord.sort_key)
    return SweepResult(records, aggregate(records))


def aggregate(records: Sequence[SweepRecord]) -> list:
    """Per ``(pmax_db, solver)`` means over converged rows only."""
    groups = {}
    for rec in records:
        groups.setdefault((rec.pmax_db, rec.solver), []).append(rec)
    rows = []
    for (db, solver), recs in sorted(groups.items()):
        ok = [x for x in recs if x.converged]

        def mean(attr):
            return float(np.mean([getattr(x, attr) for x in ok])) if ok else float("nan")

        rows.append(AggregateRow(db, solver, len(recs), len(ok), mean("wsee"),
                                 mean("iters_outer"), mean("iters_inner"),
                                 mean("iters_total")))
    return rows


def _header(K: int) -> list:
    return (["pmax_db", "realization", "solver", "wsee_nats_per_joule"]
            + [f"p_{k}" for k in range(1, K + 1)]
            + ["iters_outer", "iters_inner", "iters_total", "wall_ms", "status"])


def _fmt(x: float) -> str:
    return f"{x:.{SIG_DIGITS}g}"


def emit_csv(records: Sequence[SweepRecord], path) -> Path:
    """Write records, sorted, as CSV. Refuses to write an empty table."""
    if not records:
        raise ValueError("no records to write")
    path = Path(path)
    K = max(len(rec.p) for rec in records)
    rows = [_header(K)]
    for rec in sorted(records, key=SweepRecord.sort_key):
        p = list(rec.p) + [float("nan")] * (K - len(rec.p))
        rows.append([_fmt(rec.pmax_db), rec.realization, rec.solver, _fmt(rec.wsee)]
                    + [_fmt(x) for x in p]
                    + [rec.iters_outer, rec.iters_inner, rec.iters_total,
                       _fmt(rec.wall_ms), rec.status])
    try:
        with path.open("w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    except OSError as err:
        raise OSError(f"cannot write {path}: {err}") from err
    return path


def read_csv(path) -> list:
    """Parse a file written by `emit_csv` back into records."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as err:
        raise OSError(f"cannot read {path}: {err}") from err
    out = []
    for row in rows:
        K = sum(1 for key in row if key.startswith("p_"))
        out.append(SweepRecord(
            float(row["pmax_db"]), int(row["realization"]), row["solver"],
            float(row["wsee_nats_per_joule"]),
            tuple(float(row[f"p_{k}"]) for k in range(1, K + 1)),
            int(row["iters_outer"]), int(row["iters_inner"]), int(row["iters_total"]),
            float(row["wall_ms"]), row["status"]))
    return out


def summarize(records: Sequence[SweepRecord]) -> str:
    """Table of mean iterations and WSEE per ``P_max``.

    Means use converged rows only; the ``conv`` columns give the converged
    fraction. Cells of a solver that did not run at a point show a dash.
    """
    agg = {(row.pmax_db, row.solver): row for row in aggregate(records)}
    dbs = sorted({db for db, _ in agg})
    cols = ["P_max [dB]", "SCA iters", "SCA WSEE", "SCA conv",
            "Outer", "Inner", "Total", "Global WSEE", "Global conv"]

    def num(x, spec):
        return DASH if x is None or math.isnan(x) else format(x, spec)

    lines = []
    for db in dbs:
        s, g = agg.get((db, "sca")), agg.get((db, "global"))
        cells = [format(db, "g")]
        cells += ([num(s.iters_total, ".2f"), num(s.wsee, ".6g"), num(s.converged_fraction, ".2f")]
                  if s else [DASH] * 3)
        cells += ([num(g.iters_outer, ".2f"), num(g.iters_inner, ".1f"), num(g.iters_total, ".1f"),
                   num(g.wsee, ".6g"), num(g.converged_fraction, ".2f")]
                  if g else [DASH] * 5)
        lines.append(cells)
    widths = [max(len(c), *(len(line[i]) for line in lines)) for i, c in enumerate(cols)]

    def render(cells):
        return "  ".join(c.rjust(wd) for c, wd in zip(cells, widths))

    out = [render(cols), "  ".join("-" * wd for wd in widths)]
    out += [render(line) for line in lines]
    return "\n".join(out)
