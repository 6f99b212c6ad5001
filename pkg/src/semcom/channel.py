"""OFDMA downlink model: Shannon capacity per resource block and the
per-user token budget it implies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_BITS_PER_TOKEN = 88  # 11-byte wire token


@dataclass
class ChannelConfig:
    W_hz: float                  # bandwidth per resource block
    P_w: float                   # MASP transmit power
    N0_w_per_hz: float           # noise power spectral density
    bits_per_token: int = DEFAULT_BITS_PER_TOKEN
    O: float = 1.0               # bandwidth cost multiplier per token

    def __post_init__(self):
        if min(self.W_hz, self.P_w, self.N0_w_per_hz, self.bits_per_token, self.O) <= 0:
            raise ValueError("all channel parameters must be strictly positive")


@dataclass
class UserLink:
    distance_m: float
    rayleigh: float              # fading draw, >= 0
    latency_s: float
    interference_w: float = 0.0

    def __post_init__(self):
        if self.distance_m <= 0 or self.latency_s <= 0:
            raise ValueError("distance and latency budget must be positive")
        if self.rayleigh < 0 or self.interference_w < 0:
            raise ValueError("fading and interference must be non-negative")


def channel_gain(link: UserLink) -> float:
    """Rayleigh fading over inverse-square path loss."""
    return link.rayleigh * link.distance_m ** -2


def capacity(cfg: ChannelConfig, link: UserLink) -> float:
    """Downlink Shannon capacity of the user's resource block, bits/second."""
    snr = cfg.P_w * channel_gain(link) / (link.interference_w + cfg.W_hz * cfg.N0_w_per_hz)
    return cfg.W_hz * math.log2(1.0 + snr)


def token_budget(cfg: ChannelConfig, link: UserLink, info_size_tokens: int) -> int:
    """Tokens deliverable within the latency budget, capped by the semantic
    information size."""
    if info_size_tokens < 0:
        raise ValueError("info size must be non-negative")
    bandwidth_units = min(link.latency_s * capacity(cfg, link) / cfg.bits_per_token,
                          cfg.O * info_size_tokens)
    return int(math.floor(bandwidth_units / cfg.O))


def sample_rayleigh(seed: int, n: int) -> np.ndarray:
    """Reproducible unit-scale Rayleigh draws from a counter-based generator."""
    if n < 0:
        raise ValueError("n must be non-negative")
    gen = np.random.Generator(np.random.Philox(seed))
    u = 1.0 - gen.random(n)  # (0, 1], keeps log finite
    return np.sqrt(-2.0 * np.log(u))
