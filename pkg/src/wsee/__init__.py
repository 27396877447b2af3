"""
Weighted sum energy efficiency (WSEE) power control.

Objective and rate model in `wsee.core`, the successive convex approximation
solver in `wsee.sca`, the global Dinkelbach/polyblock solver in
`wsee.global_opt`, the multi-way relay channel model in `wsee.mwrc` and the
benchmark harness in `wsee.bench`.
"""

from .core import (InterferenceNetwork, PowerModel, WseeProblem, grad_rate, grad_wsee,
                   rate, rate_dc_split, rates, wsee)
from .global_opt import DinkelbachConfig, GlobalResult, dinkelbach_solve
from .mwrc import ChannelGenConfig, MwrcChannel, generate_channels, mwrc_problem
from .polyblock import PolyblockConfig, polyblock_maximize
from .sca import ScaConfig, ScaResult, sca_solve

__version__ = "0.1.0"

__all__ = [
    "InterferenceNetwork", "PowerModel", "WseeProblem",
    "rate", "rates", "wsee", "grad_rate", "grad_wsee", "rate_dc_split",
    "ScaConfig", "ScaResult", "sca_solve",
    "PolyblockConfig", "polyblock_maximize",
    "DinkelbachConfig", "GlobalResult", "dinkelbach_solve",
    "MwrcChannel", "ChannelGenConfig", "generate_channels", "mwrc_problem",
]
