"""Frame-level Monte Carlo estimation of the per-user probability of error.

Every frame draws from its own generator seeded by ``(master_seed,
frame_index)``: first the Ka distinct messages (one K-bit row at a time,
redrawing duplicates), then the n noise samples. Nothing else consumes
randomness, so results do not depend on how frames are scheduled.
"""

from __future__ import annotations

import concurrent.futures as cf
import dataclasses
import json
import math
import multiprocessing as mp
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from essa.channel import delta_e_db, sigma2_from_ebn0, transmit
from essa.codec import CodeSpec, build_code_spec
from essa.phy import Packet, PhyParams, build_packet, generate_sequences
from essa.receiver import ReceiverParams, run_sic

Z95 = NormalDist().inv_cdf(0.975)


class BracketError(ValueError):
    """The Eb/N0 search interval does not bracket the target PUPE."""


@dataclass(frozen=True)
class CodeParams:
    N: int = 1000
    K: int = 100
    crc_len: int = 11
    crc_poly: int | None = None
    interleave: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    code: CodeParams
    phy: PhyParams
    Ka: int
    ebn0_db: float
    rx: ReceiverParams
    frames: int = 100
    master_seed: int = 0

    def __post_init__(self):
        if self.phy.N != self.code.N:
            raise ValueError(f"phy.N = {self.phy.N} does not match code N = {self.code.N}")
        if self.Ka < 1:
            raise ValueError(f"Ka must be >= 1, got {self.Ka}")
        if self.frames < 1:
            raise ValueError(f"frames must be >= 1, got {self.frames}")
        if not self.rx.genie and self.phy.L0 < 1:
            raise ValueError("preamble search needs L0 >= 1; use genie mode")
        if 2 * self.rx.delta >= self.phy.n:
            raise ValueError("delta must be below n/2")
        if self.code.K + self.code.crc_len > self.code.N:
            raise ValueError("K + crc_len exceeds N")
        if self.Ka > 2 ** self.code.K:
            raise ValueError("more users than distinct messages")

    @property
    def sigma2(self) -> float:
        return sigma2_from_ebn0(self.ebn0_db, self.code.K, self.phy.L0, self.phy.L)

    def replace(self, **changes) -> "ScenarioConfig":
        """Copy with top-level or nested (``phy__s=...``) fields changed."""
        top = {}
        nested = {}
        for key, val in changes.items():
            if "__" in key:
                part, name = key.split("__", 1)
                nested.setdefault(part, {})[name] = val
            else:
                top[key] = val
        for part, vals in nested.items():
            top[part] = dataclasses.replace(getattr(self, part), **vals)
        return dataclasses.replace(self, **top)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        return cls(code=CodeParams(**d["code"]), phy=PhyParams(**d["phy"]),
                   Ka=d["Ka"], ebn0_db=d["ebn0_db"], rx=ReceiverParams(**d["rx"]),
                   frames=d["frames"], master_seed=d["master_seed"])


@dataclass(eq=False)
class FrameResult:
    sent: np.ndarray
    recovered: list
    misses: int
    false_alarms: int
    attempts: int
    iterations: int

    def to_dict(self) -> dict:
        return {"misses": self.misses, "false_alarms": self.false_alarms,
                "attempts": self.attempts, "iterations": self.iterations}


@dataclass(eq=False)
class SimReport:
    Ka: int
    frames: int
    ebn0_db: float
    misses: int
    false_alarms: int
    total_attempts: int
    max_attempts: int
    total_iterations: int
    frame_results: list | None = field(default=None, repr=False)

    @property
    def pupe(self) -> float:
        return self.misses / (self.frames * self.Ka)

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.misses, self.frames * self.Ka)

    @property
    def fa_per_frame(self) -> float:
        return self.false_alarms / self.frames

    @property
    def mean_attempts(self) -> float:
        return self.total_attempts / self.frames

    @property
    def mean_iterations(self) -> float:
        return self.total_iterations / self.frames

    def to_dict(self) -> dict:
        lo, hi = self.ci
        return {"Ka": self.Ka, "frames": self.frames, "ebn0_db": self.ebn0_db,
                "pupe": self.pupe, "ci_lo": lo, "ci_hi": hi,
                "misses": self.misses, "false_alarms": self.false_alarms,
                "fa_per_frame": self.fa_per_frame, "mean_attempts": self.mean_attempts,
                "max_attempts": self.max_attempts, "mean_iterations": self.mean_iterations}


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion k/n."""
    if n <= 0:
        raise ValueError("need at least one trial")
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # clamp so rounding never pushes the bounds past the point estimate
    return max(0.0, min(p, center - half)), min(1.0, max(p, center + half))


_CONTEXT: dict = {}


def _context(cfg: ScenarioConfig):
    key = (cfg.code, cfg.phy)
    if key not in _CONTEXT:
        c = cfg.code
        spec = build_code_spec(c.N, c.K, c.crc_len, c.crc_poly, c.interleave)
        p, b = generate_sequences(cfg.phy)
        _CONTEXT.clear()
        _CONTEXT[key] = (spec, p, b)
    return _CONTEXT[key]


def frame_rng(master_seed: int, frame_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, frame_index]))


def draw_messages(rng: np.random.Generator, Ka: int, K: int) -> np.ndarray:
    msgs = np.empty((Ka, K), dtype=np.uint8)
    seen = set()
    i = 0
    while i < Ka:
        row = rng.integers(0, 2, size=K, dtype=np.uint8)
        key = row.tobytes()
        if key in seen:
            continue
        seen.add(key)
        msgs[i] = row
        i += 1
    return msgs


def run_frame(cfg: ScenarioConfig, frame_index: int, force_time: int | None = None,
              trace=None) -> FrameResult:
    """Simulate one frame end to end.

    ``force_time`` places every packet at the same start time (a collision
    test hook); the receiver still checks hashes against candidate times.
    """
    spec, p, b = _context(cfg)
    rng = frame_rng(cfg.master_seed, frame_index)
    sent = draw_messages(rng, cfg.Ka, cfg.code.K)
    packets = [build_packet(u, spec, cfg.phy, p, b) for u in sent]
    if force_time is not None:
        packets = [Packet(pk.samples, force_time) for pk in packets]
    y = transmit(packets, cfg.sigma2, cfg.phy.n, rng)
    sic = run_sic(y, spec, cfg.phy, p, b, cfg.rx,
                  true_times=[pk.start_time for pk in packets], trace=trace)
    sent_keys = {u.tobytes() for u in sent}
    rec_keys = {m.tobytes() for m, _ in sic.recovered}
    hits = len(sent_keys & rec_keys)
    return FrameResult(sent=sent, recovered=sic.recovered, misses=cfg.Ka - hits,
                       false_alarms=len(rec_keys - sent_keys), attempts=sic.attempts,
                       iterations=sic.iterations)


def _run_block(cfg: ScenarioConfig, indices) -> list[FrameResult]:
    return [run_frame(cfg, i) for i in indices]


def run_frames(cfg: ScenarioConfig, jobs: int = 1) -> list[FrameResult]:
    """All frames of the scenario, in frame-index order."""
    idx = list(range(cfg.frames))
    if jobs <= 1 or cfg.frames == 1:
        return [run_frame(cfg, i) for i in idx]
    n_blocks = min(cfg.frames, 4 * jobs)
    blocks = [idx[k::n_blocks] for k in range(n_blocks)]
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
    results: dict[int, FrameResult] = {}
    with cf.ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as ex:
        for blk, frs in zip(blocks, ex.map(_run_block, [cfg] * n_blocks, blocks)):
            results.update(zip(blk, frs))
    return [results[i] for i in idx]


def estimate_pupe(cfg: ScenarioConfig, jobs: int = 1, keep_frames: bool = False,
                  trace=None) -> SimReport:
    """PUPE, false alarms and decoding effort over ``cfg.frames`` frames.

    With ``trace`` (a text stream) frames run in-process and every attempt is
    logged as a JSON line, preceded by a ``{"frame": i}`` record per frame.
    """
    if trace is None:
        frs = run_frames(cfg, jobs)
    else:
        frs = []
        for i in range(cfg.frames):
            trace.write(json.dumps({"frame": i}) + "\n")
            frs.append(run_frame(cfg, i, trace=trace))
    return aggregate(frs, cfg.Ka, cfg.ebn0_db, keep_frames)


def aggregate(frs, Ka: int, ebn0_db: float, keep_frames: bool = False) -> SimReport:
    return SimReport(Ka=Ka, frames=len(frs), ebn0_db=ebn0_db,
                     misses=sum(f.misses for f in frs),
                     false_alarms=sum(f.false_alarms for f in frs),
                     total_attempts=sum(f.attempts for f in frs),
                     max_attempts=max(f.attempts for f in frs),
                     total_iterations=sum(f.iterations for f in frs),
                     frame_results=list(frs) if keep_frames else None)


@dataclass
class MinSnrResult:
    ebn0_db: float
    probes: list  # (ebn0_db, pupe or SimReport) in probe order

    def report_at(self, ebn0_db: float):
        for x, r in self.probes:
            if x == ebn0_db:
                return r
        raise KeyError(ebn0_db)


def bisect_ebn0(pupe_at, target: float, lo: float, hi: float, tol: float) -> MinSnrResult:
    """Bisection for the smallest Eb/N0 whose PUPE is at most ``target``.

    ``pupe_at(x)`` returns either a float or an object with a ``pupe``
    attribute. Returns the upper end of the final bracket.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if lo >= hi:
        raise ValueError("need lo < hi")
    if target >= 1.0:
        return MinSnrResult(lo, [])
    probes = []

    def probe(x):
        r = pupe_at(x)
        probes.append((x, r))
        return r if isinstance(r, float) else r.pupe

    if probe(hi) > target:
        raise BracketError(f"PUPE at hi = {hi} dB exceeds target {target}")
    if probe(lo) <= target:
        raise BracketError(f"PUPE at lo = {lo} dB already meets target {target}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if probe(mid) <= target:
            hi = mid
        else:
            lo = mid
    return MinSnrResult(hi, probes)


def min_ebn0(cfg: ScenarioConfig, target_pupe: float, lo_db: float, hi_db: float,
             tol_db: float = 0.05, jobs: int = 1) -> MinSnrResult:
    """Minimum Eb/N0 meeting ``target_pupe`` with ``cfg.frames`` frames per probe.

    Every probe reuses the same master seed, so messages and normalised noise
    are common across probes.
    """
    return bisect_ebn0(lambda x: estimate_pupe(cfg.replace(ebn0_db=x), jobs),
                       target_pupe, lo_db, hi_db, tol_db)


AXES = {
    "spreading_factor": "phy__s",
    "preamble_length": "phy__L0",
    "W": "rx__W",
    "Ka": "Ka",
}
AXIS_ALIASES = {"s": "spreading_factor", "spreading": "spreading_factor",
                "l0": "preamble_length", "preamble": "preamble_length",
                "preamble_len": "preamble_length", "w": "W", "ka": "Ka"}

CSV_COLUMNS = ["axis_value", "ebn0_db", "pupe", "ci_lo", "ci_hi", "fa_per_frame",
               "mean_attempts", "frames", "delta_e_db"]


def canonical_axis(axis: str) -> str:
    axis = AXIS_ALIASES.get(axis, AXIS_ALIASES.get(axis.lower(), axis))
    if axis not in AXES:
        raise ValueError(f"unknown sweep axis {axis!r}")
    return axis


def sweep(axis: str, values, cfg: ScenarioConfig, target_pupe: float | None = None,
          lo_db: float = -1.0, hi_db: float = 6.0, tol_db: float = 0.05, jobs: int = 1) -> list[dict]:
    """Evaluate the scenario along one axis.

    With ``target_pupe`` each point reports the minimum Eb/N0 and the PUPE
    statistics measured there; without it, the PUPE at ``cfg.ebn0_db``.
    """
    axis = canonical_axis(axis)
    rows = []
    for v in values:
        pcfg = cfg.replace(**{AXES[axis]: v})
        if target_pupe is None:
            rep = estimate_pupe(pcfg, jobs)
        else:
            res = min_ebn0(pcfg, target_pupe, lo_db, hi_db, tol_db, jobs)
            rep = res.report_at(res.ebn0_db) if res.probes else estimate_pupe(
                pcfg.replace(ebn0_db=res.ebn0_db), jobs)
        d = rep.to_dict()
        rows.append({"axis_value": v, "ebn0_db": d["ebn0_db"], "pupe": d["pupe"],
                     "ci_lo": d["ci_lo"], "ci_hi": d["ci_hi"],
                     "fa_per_frame": d["fa_per_frame"], "mean_attempts": d["mean_attempts"],
                     "frames": d["frames"], "delta_e_db": delta_e_db(pcfg.phy.L0, pcfg.phy.L)})
    return rows
