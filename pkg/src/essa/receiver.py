"""Iterative preamble-search / decode / cancel receiver.

Each iteration correlates the residual frame with the preamble, keeps the W
best start-time candidates, and tries to decode each one. A decoded message
is accepted only when its hashed start time agrees with the candidate time
(up to ``delta`` samples); accepted packets are rebuilt and subtracted with
an estimated amplitude. The loop stops after ``Imax`` iterations or after an
iteration that accepts nothing new.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from essa.codec import CodeSpec, adaptive_scl_decode
from essa.phy import Packet, PhyParams, build_packet, frame_indices, hash_time

SUCCESS = "success"
ERASURE = "erasure"
HASH_MISMATCH = "hash-mismatch"

VAR_FLOOR = 1e-6


@dataclass(frozen=True)
class ReceiverParams:
    W: int = 100
    Imax: int = 50
    delta: int = 0
    list_max: int = 256
    genie: bool = False

    def __post_init__(self):
        if self.W < 1:
            raise ValueError(f"W must be >= 1, got {self.W}")
        if self.Imax < 1:
            raise ValueError(f"Imax must be >= 1, got {self.Imax}")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if self.list_max < 1 or self.list_max & (self.list_max - 1):
            raise ValueError(f"list_max must be a power of two, got {self.list_max}")


@dataclass(eq=False)
class DecodeOutcome:
    status: str
    start_time: int
    message: np.ndarray | None = None
    amplitude: float = 0.0
    packet: Packet | None = field(default=None, repr=False)


@dataclass(eq=False)
class SicResult:
    recovered: list
    attempts: int
    iterations: int
    residual: np.ndarray = field(repr=False)


def preamble_correlate(y, p) -> np.ndarray:
    """Circular correlation ``lam[t] = sum_j p[j] * y[(j + t) % n]`` via FFT."""
    y = np.asarray(y, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if p.size < 1:
        raise ValueError("preamble correlation needs L0 >= 1")
    n = y.size
    pp = np.zeros(n)
    pp[:p.size] = p
    return np.fft.irfft(np.fft.rfft(y) * np.conj(np.fft.rfft(pp)), n)


def top_w(lam, W: int, exclude=()) -> list[int]:
    """Times of the W largest correlations, largest first, ties to smaller t."""
    order = np.argsort(-np.asarray(lam), kind="stable")
    if exclude:
        order = order[~np.isin(order, np.fromiter(exclude, dtype=np.int64))]
    return [int(t) for t in order[:W]]


def matched_filter(y, t: int, params: PhyParams, b) -> np.ndarray:
    """Despread the payload window starting at ``t + L0`` into N soft bits."""
    idx = frame_indices(t + params.L0, params.L, y.size)
    return (y[idx] * b).reshape(params.N, params.s).mean(axis=1)


def soft_to_llr(soft, s: int) -> np.ndarray:
    """Scale despread values to LLRs with a per-packet variance estimate.

    The residual interference plus noise is treated as Gaussian with per-chip
    variance ``s * (E[r^2] - E[|r|]^2)``.
    """
    v = s * (np.mean(soft ** 2) - np.mean(np.abs(soft)) ** 2)
    v = max(VAR_FLOOR, v)
    return 2.0 * s * soft / v


def despread(y, t: int, params: PhyParams, b) -> np.ndarray:
    return soft_to_llr(matched_filter(y, t, params, b), params.s)


def circular_distance(a: int, b: int, n: int) -> int:
    d = abs(a - b) % n
    return min(d, n - d)


def attempt(y, t: int, spec: CodeSpec, params: PhyParams, p, b, rx: ReceiverParams) -> DecodeOutcome:
    """One decoding attempt at candidate start time t."""
    msg = adaptive_scl_decode(despread(y, t, params, b), spec, rx.list_max)
    if msg is None:
        return DecodeOutcome(ERASURE, t)
    if circular_distance(hash_time(msg, params), t, params.n) > rx.delta:
        return DecodeOutcome(HASH_MISMATCH, t)
    pkt = build_packet(msg, spec, params, p, b)
    pkt = Packet(pkt.samples, t)
    idx = frame_indices(t, params.packet_len, params.n)
    amp = float(y[idx] @ pkt.samples) / params.packet_len
    return DecodeOutcome(SUCCESS, t, msg, amp, pkt)


def run_sic(y, spec: CodeSpec, params: PhyParams, p, b, rx: ReceiverParams,
            true_times=None, trace=None) -> SicResult:
    """Iterative detection, decoding and interference cancellation on frame y.

    ``y`` is not modified. In genie mode ``true_times`` replaces the preamble
    search. ``trace``, if given, is a text stream receiving one JSON record
    per decoding attempt.
    """
    if rx.genie and true_times is None:
        raise ValueError("genie mode needs the true start times")
    if not rx.genie and params.L0 < 1:
        raise ValueError("preamble search needs L0 >= 1; use genie mode")
    y = np.array(y, dtype=np.float64)
    n = params.n
    recovered = []
    seen = set()
    done_times = set()
    attempts = 0
    iterations = 0
    if rx.genie:
        genie_times = sorted({int(t) % n for t in true_times})

    while iterations < rx.Imax:
        if rx.genie:
            cands = [t for t in genie_times if t not in done_times][:rx.W]
            if not cands:
                break
        else:
            cands = top_w(preamble_correlate(y, p), rx.W, done_times)
        iterations += 1
        progress = 0
        for t in cands:
            out = attempt(y, t, spec, params, p, b, rx)
            attempts += 1
            dup = False
            if out.status == SUCCESS:
                key = out.message.tobytes()
                dup = key in seen
                if not dup:
                    seen.add(key)
                    done_times.add(t)
                    recovered.append((out.message, t))
                    idx = frame_indices(t, params.packet_len, n)
                    y[idx] -= out.amplitude * out.packet.samples
                    progress += 1
            if trace is not None:
                rec = {"iteration": iterations, "t": t, "status": out.status,
                       "amplitude": out.amplitude}
                if dup:
                    rec["duplicate"] = True
                trace.write(json.dumps(rec) + "\n")
        if progress == 0:
            break
    return SicResult(recovered, attempts, iterations, y)
