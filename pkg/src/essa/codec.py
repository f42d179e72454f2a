"""CRC-aided polar code: construction, encoding and adaptive SCL decoding.

The construction follows the 5G NR design: the information set holds the
most reliable input positions of the universal reliability sequence, an
outer CRC (degree 11 by default) protects the message, and puncturing
rate-matches the mother code of length ``Np = 2**m`` down to ``N`` bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from essa._scl import node_schedule, scl_decode
from essa._tables import RELIABILITY_1024, SUBBLOCK_PATTERN

# D^11 + D^10 + D^9 + D^5 + 1
CRC11_POLY = 0xE21


class CodeDimensionError(ValueError):
    """Raised when (N, K, crc_len) cannot form a valid code."""


def _crc_register(bits, poly: int, deg: int) -> int:
    """Remainder of bits(x) * x^deg modulo poly, MSB first, zero-initialised."""
    reg = 0
    top = 1 << (deg - 1)
    mask = (1 << deg) - 1
    for b in bits:
        fb = ((reg & top) != 0) ^ bool(b)
        reg = (reg << 1) & mask
        if fb:
            reg ^= poly & mask
    return reg


def _int_to_bits(x: int, width: int) -> np.ndarray:
    return np.array([(x >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def subblock_interleaver(Np: int) -> np.ndarray:
    """Sub-block interleaver index map J of TS 38.212 for a mother code of size Np."""
    if Np < 32:
        return np.arange(Np)
    n = np.arange(Np)
    blk = Np // 32
    return SUBBLOCK_PATTERN[(32 * n) // Np] * blk + n % blk


def incapacitated_inputs(Np: int, punctured) -> np.ndarray:
    """Boolean mask of input positions that carry zero capacity.

    Propagates erasure indicators (punctured bits are certain erasures, all
    other bits are perfect) through the polarization butterflies.
    """
    z = np.zeros(Np, dtype=bool)
    z[np.asarray(punctured, dtype=np.int64)] = True

    def rec(z):
        if z.size == 1:
            return z
        h = z.size // 2
        return np.concatenate([rec(z[:h] | z[h:]), rec(z[:h] & z[h:])])

    return rec(z)


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """An (N, K) CRC-aided polar code."""

    N: int
    K: int
    Np: int
    Kp: int
    m: int
    info_set: np.ndarray
    frozen_set: np.ndarray
    crc_poly: int
    crc_len: int
    puncture_pattern: np.ndarray
    interleave: bool = False
    # mother-code positions of the transmitted bits, in transmission order
    tx_positions: np.ndarray = field(repr=False, default=None)
    crc_matrix: np.ndarray = field(repr=False, default=None)
    frozen_mask: np.ndarray = field(repr=False, default=None)
    schedule: tuple = field(repr=False, default=None)

    def to_text(self) -> str:
        """Human-readable form used for golden-file comparison."""
        lines = [
            f"N={self.N}",
            f"K={self.K}",
            f"Np={self.Np}",
            f"Kp={self.Kp}",
            f"crc_len={self.crc_len}",
            f"crc_poly=0x{self.crc_poly:X}",
            f"interleave={int(self.interleave)}",
            "info_set=" + ",".join(str(i) for i in self.info_set),
            "puncture_pattern=" + ",".join(str(i) for i in self.puncture_pattern),
        ]
        return "\n".join(lines) + "\n"


def build_code_spec(N: int, K: int, crc_len: int = 11, crc_poly: int | None = None,
                    interleave: bool = False) -> CodeSpec:
    """Construct the (N, K) CA-polar code.

    ``crc_poly`` is the full generator polynomial including the leading
    ``x^crc_len`` term; it defaults to the 5G NR CRC11 polynomial and must be
    given for any other degree.
    """
    if K < 1 or crc_len < 1 or K + crc_len > N:
        raise CodeDimensionError(f"invalid dimensions: K + crc_len = {K + crc_len} > N = {N}")
    if N > 1 << 20:
        raise CodeDimensionError(f"N = {N} exceeds 2**20")
    if crc_poly is None:
        if crc_len != 11:
            raise ValueError("crc_poly required for crc_len != 11")
        crc_poly = CRC11_POLY
    if crc_poly >> crc_len != 1:
        raise ValueError(f"crc_poly 0x{crc_poly:X} is not of degree {crc_len}")

    m = max(0, int(np.ceil(np.log2(N))))
    Np = 1 << m
    if Np > RELIABILITY_1024.size:
        raise CodeDimensionError(f"mother code length {Np} exceeds the reliability table")
    Kp = K + crc_len

    order = subblock_interleaver(Np) if interleave else np.arange(Np)
    n_punct = Np - N
    puncture = np.sort(order[:n_punct])
    tx_positions = order[n_punct:].copy()

    dead = incapacitated_inputs(Np, puncture)
    rel = RELIABILITY_1024[RELIABILITY_1024 < Np]
    usable = rel[~dead[rel]]
    info = np.sort(usable[::-1][:Kp])
    frozen = np.setdiff1d(np.arange(Np), info)
    frozen_mask = np.ones(Np, dtype=np.uint8)
    frozen_mask[info] = 0

    # v = (u, p) is a codeword iff v @ crc_matrix = 0: the top K rows give the
    # parity of each unit message, the bottom rows pass p through
    crc_matrix = np.zeros((Kp, crc_len), dtype=np.uint8)
    for i in range(K):
        unit = np.zeros(K, dtype=np.uint8)
        unit[i] = 1
        crc_matrix[i] = _int_to_bits(_crc_register(unit, crc_poly, crc_len), crc_len)
    crc_matrix[K:] = np.eye(crc_len, dtype=np.uint8)

    return CodeSpec(N=N, K=K, Np=Np, Kp=Kp, m=m, info_set=info, frozen_set=frozen,
                    crc_poly=crc_poly, crc_len=crc_len, puncture_pattern=puncture,
                    interleave=interleave, tx_positions=tx_positions,
                    crc_matrix=crc_matrix, frozen_mask=frozen_mask,
                    schedule=node_schedule(frozen_mask))


def crc_append(u, spec: CodeSpec) -> np.ndarray:
    """Return ``u`` followed by its ``crc_len`` parity bits."""
    u = np.asarray(u, dtype=np.uint8)
    if u.shape != (spec.K,):
        raise ValueError(f"message must have {spec.K} bits, got {u.shape}")
    parity = (u @ spec.crc_matrix[:spec.K].astype(np.int64)) & 1
    return np.concatenate([u, parity.astype(np.uint8)])


def crc_syndrome(v, spec: CodeSpec) -> np.ndarray:
    """CRC syndrome of one word (shape ``(Kp,)``) or a batch (``(B, Kp)``)."""
    v = np.asarray(v, dtype=np.int64)
    return (v @ spec.crc_matrix.astype(np.int64)) & 1


def crc_check(v, spec: CodeSpec) -> bool:
    v = np.asarray(v)
    if v.shape != (spec.Kp,):
        raise ValueError(f"word must have {spec.Kp} bits, got {v.shape}")
    return not crc_syndrome(v, spec).any()


def polar_transform(v) -> np.ndarray:
    """Compute ``v F^{(x)m}`` over GF(2) with the butterfly network."""
    x = np.array(v, dtype=np.uint8)
    n = x.size
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < n:
        y = x.reshape(-1, 2, h)
        y[:, 0, :] ^= y[:, 1, :]
        h *= 2
    return x


def polar_encode(u, spec: CodeSpec) -> np.ndarray:
    """Encode a K-bit message into the N transmitted code bits."""
    v = np.zeros(spec.Np, dtype=np.uint8)
    v[spec.info_set] = crc_append(u, spec)
    return polar_transform(v)[spec.tx_positions]


def scl_list_decode(llr, spec: CodeSpec, list_size: int):
    """Fixed-size SCL decoding with CRC selection over the final list.

    Returns the K-bit message of the lowest-metric CRC-passing path (ties go
    to the lower path index), or None if no path passes.
    """
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape != (spec.N,):
        raise ValueError(f"expected {spec.N} LLRs, got {llr.shape}")
    if not np.all(np.isfinite(llr)):
        raise ValueError("LLRs must be finite")
    full = np.zeros(spec.Np)
    full[spec.tx_positions] = llr
    u, _ = scl_decode(full, *spec.schedule, list_size)
    words = u[:, spec.info_set]
    ok = ~crc_syndrome(words, spec).any(axis=1)
    if not ok.any():
        return None
    return words[np.argmax(ok), :spec.K].copy()


def adaptive_scl_decode(llr, spec: CodeSpec, list_max: int = 256):
    """Adaptive SCL decoding.

    Runs list sizes 1, 2, 4, ... up to ``list_max``, restarting from scratch
    at each size, and stops at the first size where a surviving path passes
    the CRC. Punctured positions enter the decoder with LLR 0.

    Returns
    -------
    message : ndarray or None
        The K-bit message of the best CRC-passing path, or None on erasure.
    """
    if list_max < 1 or list_max & (list_max - 1):
        raise ValueError("list_max must be a power of two")
    ell = 1
    while ell <= list_max:
        msg = scl_list_decode(llr, spec, ell)
        if msg is not None:
            return msg
        ell *= 2
    return None
