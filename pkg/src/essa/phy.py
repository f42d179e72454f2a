"""Transmitter chain: spreading, preamble, hashed start time, circular placement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from essa.codec import CodeSpec, polar_encode

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1

DEFAULT_SPREADING_SEED = 0x5EED_0001
DEFAULT_PREAMBLE_SEED = 0x5EED_0002
DEFAULT_HASH_SEED = 0x5EED_0003


@dataclass(frozen=True)
class PhyParams:
    """Frame geometry and seeds shared by every user and the receiver.

    ``n`` is the frame length in real channel uses, ``s`` the number of chips
    per coded bit, ``N`` the codeword length and ``L0`` the preamble length.
    """

    n: int
    s: int
    N: int
    L0: int = 0
    spreading_seed: int = DEFAULT_SPREADING_SEED
    preamble_seed: int = DEFAULT_PREAMBLE_SEED
    hash_seed: int = DEFAULT_HASH_SEED

    def __post_init__(self):
        if self.s < 1:
            raise ValueError(f"spreading factor must be >= 1, got {self.s}")
        if self.L0 < 0:
            raise ValueError(f"preamble length must be >= 0, got {self.L0}")
        if self.N < 1:
            raise ValueError(f"codeword length must be >= 1, got {self.N}")
        if self.L0 + self.L > self.n:
            raise ValueError(f"packet does not fit the frame: L0 + L = {self.L0 + self.L} > n = {self.n}")
        for name in ("spreading_seed", "preamble_seed", "hash_seed"):
            v = getattr(self, name)
            if not 0 <= v <= _MASK64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer")

    @property
    def L(self) -> int:
        return self.s * self.N

    @property
    def packet_len(self) -> int:
        return self.L0 + self.L


@dataclass(frozen=True, eq=False)
class Packet:
    """Preamble plus spread payload (``x'`` before zero padding) and its start time."""

    samples: np.ndarray
    start_time: int


def pm1_sequence(seed: int, length: int) -> np.ndarray:
    """Deterministic i.i.d. uniform +-1 chips from a Philox counter-based generator."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    bits = rng.integers(0, 2, size=length, dtype=np.uint8)
    return 1.0 - 2.0 * bits


def generate_sequences(params: PhyParams):
    """Return ``(preamble, spreading)`` chip vectors of lengths L0 and L."""
    preamble = pm1_sequence(params.preamble_seed, params.L0)
    spreading = pm1_sequence(params.spreading_seed, params.L)
    return preamble, spreading


def chips_to_hex(chips) -> str:
    """Pack chips MSB-first into hex, bit 1 for a -1 chip."""
    bits = (np.asarray(chips) < 0).astype(np.uint8)
    return np.packbits(bits).tobytes().hex()


def spread(c, b) -> np.ndarray:
    """Block j of the output is ``(-1)**c[j] * b_j``."""
    c = np.asarray(c, dtype=np.uint8)
    b = np.asarray(b, dtype=np.float64)
    if b.size % c.size:
        raise ValueError("spreading sequence length must be a multiple of the codeword length")
    s = b.size // c.size
    signs = 1.0 - 2.0 * c
    return (b.reshape(c.size, s) * signs[:, None]).ravel()


def fnv1a_64(data: bytes, h: int = FNV_OFFSET) -> int:
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def hash_time(u, params: PhyParams) -> int:
    """Map a message to a start time in ``[0, n)``.

    FNV-1a 64 over the big-endian seed bytes followed by the message packed
    MSB-first into bytes, reduced modulo n.
    """
    packed = np.packbits(np.asarray(u, dtype=np.uint8)).tobytes()
    h = fnv1a_64(params.hash_seed.to_bytes(8, "big"))
    h = fnv1a_64(packed, h)
    return h % params.n


def build_packet(u, spec: CodeSpec, params: PhyParams, p, b) -> Packet:
    c = polar_encode(u, spec)
    samples = np.concatenate([np.asarray(p, dtype=np.float64), spread(c, b)])
    return Packet(samples=samples, start_time=hash_time(u, params))


def frame_indices(t: int, length: int, n: int) -> np.ndarray:
    """Indices of the circular window of ``length`` samples starting at t."""
    return (t + np.arange(length)) % n


def place_in_frame(frame: np.ndarray, pkt: Packet, scale: float = 1.0) -> np.ndarray:
    """Add ``scale * pkt`` into ``frame`` in place, wrapping around the end."""
    if pkt.samples.size > frame.size:
        raise ValueError("packet longer than frame")
    idx = frame_indices(pkt.start_time, pkt.samples.size, frame.size)
    frame[idx] += scale * pkt.samples
    return frame
