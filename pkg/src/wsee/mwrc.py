"""
Amplify-and-forward multi-way relay channel.

K single-antenna users exchange messages circularly through one relay:
user k sends to user k+1 and user K-1 sends to user 0. The relay always
transmits at full power ``P0``. Treating interference as noise, the rate of
stream k decoded at user k+1 is an instance of the interference network
rate model, with ``gt = |g_{k+1}|^2 P0 / N_{k+1}``:

    theta_k      = |h_k|^2
    sigma2_k     = N0 (1 + 1/gt)
    eta_kk       = |h_k|^2 / gt
    eta_k,k+1    = |h_{k+1}|^2 / gt
    eta_ki       = |h_i|^2 (1 + 1/gt)      for i not in {k, k+1}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import InterferenceNetwork, PowerModel, WseeProblem

__all__ = [
    "MwrcChannel",
    "ChannelGenConfig",
    "channel_rng",
    "effective_gain",
    "to_interference_network",
    "lemma_rates",
    "generate_channels",
    "mwrc_problem",
    "channel_to_dict",
    "channel_from_dict",
    "save_channel",
]


@dataclass(frozen=True, eq=False)
class MwrcChannel:
    h: np.ndarray   # uplink, user k -> relay
    g: np.ndarray   # downlink, relay -> user k
    N0: float
    Nk: np.ndarray
    P0: float

    def __post_init__(self):
        h = np.array(self.h, dtype=complex)
        g = np.array(self.g, dtype=complex)
        K = h.size
        Nk = np.broadcast_to(np.asarray(self.Nk, dtype=float), (K,)).copy()
        if h.ndim != 1 or g.shape != h.shape:
            raise ValueError("h and g must be vectors of equal length")
        if self.N0 <= 0 or self.P0 <= 0 or np.any(Nk <= 0):
            raise ValueError("noise and relay powers must be positive")
        for a in (h, g, Nk):
            a.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "Nk", Nk)
        object.__setattr__(self, "N0", float(self.N0))
        object.__setattr__(self, "P0", float(self.P0))

    @property
    def K(self) -> int:
        return self.h.size

    def with_relay_power(self, P0: float) -> "MwrcChannel":
        return MwrcChannel(self.h, self.g, self.N0, self.Nk, P0)


@dataclass(frozen=True)
class ChannelGenConfig:
    seed: int = 0
    K: int = 3
    reciprocal: bool = True


def channel_rng(seed: int, realization: int = 0) -> np.random.Generator:
    """PCG64 stream for one realization.

    The stream depends only on ``(seed, realization)``, so sweeps give the
    same draws no matter how realizations are scheduled across workers.
    """
    return np.random.default_rng(np.random.SeedSequence([seed, realization]))


def effective_gain(chan: MwrcChannel, k: int) -> float:
    """Relay-to-user gain ``|g_k|^2 P0 / N_k``."""
    return float(abs(chan.g[k]) ** 2 * chan.P0 / chan.Nk[k])


def to_interference_network(chan: MwrcChannel) -> InterferenceNetwork:
    K = chan.K
    h2 = np.abs(chan.h) ** 2
    theta = h2.copy()
    sigma2 = np.empty(K)
    eta = np.empty((K, K))
    for k in range(K):
        nxt = (k + 1) % K
        inv = 1.0 / effective_gain(chan, nxt)
        sigma2[k] = chan.N0 * (1.0 + inv)
        eta[k] = h2 * (1.0 + inv)
        # stream k itself and the receiver's own signal only arrive through
        # the amplified relay noise term
        eta[k, nxt] = h2[nxt] * inv
        eta[k, k] = h2[k] * inv
    return InterferenceNetwork(theta, eta, sigma2)


def lemma_rates(chan: MwrcChannel, p) -> np.ndarray:
    """Achievable rates written directly in terms of the physical channel."""
    p = np.asarray(p, dtype=float)
    K = chan.K
    h2 = np.abs(chan.h) ** 2
    rx = h2 * p
    total = chan.N0 + rx.sum()
    out = np.empty(K)
    for k in range(K):
        nxt = (k + 1) % K
        others = sum(rx[i] for i in range(K) if i != k and i != nxt)
        den = chan.N0 + others + total / effective_gain(chan, nxt)
        out[k] = np.log1p(rx[k] / den)
    return out


def generate_channels(cfg: ChannelGenConfig, P0: float, N0: float, Nk,
                      realization: int = 0) -> MwrcChannel:
    """Draw ``h ~ CN(0, 1)`` i.i.d.; reciprocal channels use ``g = conj(h)``."""
    rng = channel_rng(cfg.seed, realization)
    scale = np.sqrt(0.5)
    h = scale * (rng.standard_normal(cfg.K) + 1j * rng.standard_normal(cfg.K))
    if cfg.reciprocal:
        g = np.conj(h)
    else:
        g = scale * (rng.standard_normal(cfg.K) + 1j * rng.standard_normal(cfg.K))
    return MwrcChannel(h, g, N0, Nk, P0)


def mwrc_problem(chan: MwrcChannel, pmax, w=1.0, phi=2.5, pc=1.0) -> WseeProblem:
    """WSEE problem on the MWRC with the relay at its power limit."""
    net = to_interference_network(chan)
    K = chan.K

    def vec(x):
        return np.broadcast_to(np.asarray(x, dtype=float), (K,)).copy()

    return WseeProblem(net, PowerModel(vec(phi), vec(pc)), vec(w), vec(pmax))


def channel_to_dict(chan: MwrcChannel) -> dict:
    return {
        "K": chan.K,
        "h_re": chan.h.real.tolist(), "h_im": chan.h.imag.tolist(),
        "g_re": chan.g.real.tolist(), "g_im": chan.g.imag.tolist(),
        "N0": chan.N0, "Nk": chan.Nk.tolist(), "P0": chan.P0,
    }


def channel_from_dict(d: dict) -> MwrcChannel:
    h = np.asarray(d["h_re"]) + 1j * np.asarray(d["h_im"])
    g = np.asarray(d["g_re"]) + 1j * np.asarray(d["g_im"])
    return MwrcChannel(h, g, d["N0"], d["Nk"], d["P0"])


def save_channel(chan: MwrcChannel, path) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(chan), indent=2))
