"""Gaussian multiple-access channel with unit user amplitudes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from essa.phy import place_in_frame


def sigma2_from_ebn0(ebn0_db: float, K: int, L0: int, L: int) -> float:
    """Noise variance per real sample giving the requested per-user Eb/N0.

    With +-1 chips the per-user energy is ``L0 + L``, so
    ``Eb/N0 = (L0 + L) / (2 K sigma2)``.
    """
    if math.isinf(ebn0_db) and ebn0_db > 0:
        return 0.0
    return (L0 + L) / (2.0 * K * 10.0 ** (ebn0_db / 10.0))


def ebn0_from_sigma2(sigma2: float, K: int, L0: int, L: int) -> float:
    return 10.0 * math.log10((L0 + L) / (2.0 * K * sigma2))


def delta_e_db(L0: int, L: int) -> float:
    """Preamble energy overhead ``1 + L0/L`` in dB."""
    return 10.0 * math.log10(1.0 + L0 / L)


@dataclass(frozen=True)
class ChannelParams:
    Ka: int
    ebn0_db: float
    sigma2: float

    def __post_init__(self):
        if self.Ka < 1:
            raise ValueError(f"Ka must be >= 1, got {self.Ka}")
        if not self.sigma2 >= 0:
            raise ValueError("sigma2 must be non-negative")

    @classmethod
    def from_ebn0(cls, Ka: int, ebn0_db: float, K: int, L0: int, L: int) -> "ChannelParams":
        return cls(Ka=Ka, ebn0_db=ebn0_db, sigma2=sigma2_from_ebn0(ebn0_db, K, L0, L))


def transmit(packets, sigma2, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Superpose the packets in a length-n frame and add white Gaussian noise.

    ``sigma2`` is the noise variance or a :class:`ChannelParams`. No noise is
    drawn when the variance is zero.
    """
    if isinstance(sigma2, ChannelParams):
        sigma2 = sigma2.sigma2
    y = np.zeros(n)
    for pkt in packets:
        place_in_frame(y, pkt)
    if sigma2 > 0:
        if rng is None:
            raise ValueError("an rng is required for a noisy channel")
        y += rng.normal(0.0, math.sqrt(sigma2), size=n)
    return y
