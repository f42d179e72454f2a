"""Acceptance criteria, one test each, at the stated tolerances.

Each test prints a single ``PASS`` / ``FAIL`` line (also collected into the
terminal summary by conftest.py). The Monte Carlo criteria are slow on one
core: roughly 30 minutes in total.
"""

import math
import subprocess
import sys

import numpy as np
import pytest

from essa import channel, codec
from essa.cli import profile_config
from essa.montecarlo import _context, estimate_pupe, min_ebn0
from essa.phy import build_packet
from essa.receiver import run_sic
from oracles import all_messages, ml_decode_bpsk

pytestmark = pytest.mark.acceptance

RESULTS = []
TARGET = 0.05
_shared = {}


def record(num, ok, text):
    line = f"{'PASS' if ok else 'FAIL'}  [{num}] {text}"
    RESULTS.append(line)
    print("\n" + line)
    assert ok, line


def test_1_noiseless_exactness():
    worst = {}
    fa = 0
    for Ka in (1, 2, 5, 10):
        rep = estimate_pupe(profile_config("genie", frames=20, Ka=Ka, ebn0_db=25.0))
        worst[Ka] = rep.pupe
        fa += rep.false_alarms
    # exact cancellation is checked on a truly noiseless single-user frame
    cfg = profile_config("genie", frames=1, Ka=1, ebn0_db=math.inf)
    rel = []
    spec, p, b = _context(cfg)
    for i in range(5):
        u = np.random.default_rng(i).integers(0, 2, 100, dtype=np.uint8)
        pkt = build_packet(u, spec, cfg.phy, p, b)
        y = channel.transmit([pkt], 0.0, cfg.phy.n)
        res = run_sic(y, spec, cfg.phy, p, b, cfg.rx, true_times=[pkt.start_time])
        rel.append(float(res.residual @ res.residual) / float(y @ y))
    ok = all(v == 0.0 for v in worst.values()) and fa == 0 and max(rel) < 1e-18
    record(1, ok, f"noiseless exactness: PUPE by Ka {worst}, false alarms {fa}, "
                  f"max relative residual energy {max(rel):.1e} (< 1e-18)")


def test_2_codec_oracle_equivalence():
    toy = codec.build_code_spec(8, 2, 2, crc_poly=0b111)
    msgs = all_messages(2)
    words = np.array([codec.polar_encode(u, toy) for u in msgs])
    rng = np.random.default_rng(2024)
    agree = decoded = 0
    for trial in range(10 ** 4):
        sigma = (0.6, 0.8, 1.0, 1.5)[trial % 4]
        u = msgs[rng.integers(4)]
        y = 1.0 - 2.0 * codec.polar_encode(u, toy) + rng.normal(0, sigma, 8)
        llr = 2.0 * y / sigma ** 2
        got = codec.scl_list_decode(llr, toy, 4)
        if got is not None:
            decoded += 1
            agree += np.array_equal(got, ml_decode_bpsk(llr, msgs, words))
    spec = codec.build_code_spec(1000, 100)
    inv = crc = 0
    for _ in range(10 ** 3):
        v = rng.integers(0, 2, 1024, dtype=np.uint8)
        inv += np.array_equal(codec.polar_transform(codec.polar_transform(v)), v)
        w = codec.crc_append(rng.integers(0, 2, 100, dtype=np.uint8), spec)
        bad = w.copy()
        bad[rng.integers(111)] ^= 1
        crc += codec.crc_check(w, spec) and not codec.crc_check(bad, spec)
    ok = agree == decoded and inv == 1000 and crc == 1000
    record(2, ok, f"codec oracles: list-4 SCL agrees with ML in {agree}/{decoded} non-erased "
                  f"trials of 10000, involution {inv}/1000, CRC single-error {crc}/1000")


def test_3_energy_overhead():
    de = channel.delta_e_db(3050, 25000)
    record(3, abs(de - 0.4997) <= 0.005, f"delta E for L0=3050, L=25000 is {de:.4f} dB (0.4997 +- 0.005)")


def _single_user(seed):
    cfg = profile_config("genie", frames=2000, Ka=1, master_seed=seed)
    return min_ebn0(cfg, TARGET, -0.5, 1.0, 0.05)


def test_4_single_user_waterfall_reproducible():
    a, b = _single_user(1), _single_user(2)
    _shared["ka1"] = a.ebn0_db
    _shared.setdefault("reports", []).extend(r for res in (a, b) for _, r in res.probes)
    gap = abs(a.ebn0_db - b.ebn0_db)
    record(4, gap <= 0.15, f"single-user min Eb/N0 at PUPE 5e-2: seed 1 {a.ebn0_db:.3f} dB, "
                           f"seed 2 {b.ebn0_db:.3f} dB, gap {gap:.3f} dB (<= 0.15)")


def test_5_multiuser_approaches_single_user():
    ka1 = _shared.get("ka1")
    if ka1 is None:
        ka1 = _single_user(1).ebn0_db
    cfg = profile_config("genie", frames=400, Ka=25, master_seed=5)
    res = min_ebn0(cfg, TARGET, -0.5, 1.5, 0.05)
    _shared["ka25"] = res
    _shared.setdefault("reports", []).extend(r for _, r in res.probes)
    gap = res.ebn0_db - ka1
    record(5, abs(gap) <= 0.5, f"min Eb/N0 Ka=25 {res.ebn0_db:.3f} dB vs Ka=1 {ka1:.3f} dB, "
                               f"difference {gap:+.3f} dB (within 0.5)")


def test_6_threshold_effect():
    res = _shared.get("ka25")
    if res is None:
        res = min_ebn0(profile_config("genie", frames=400, Ka=25, master_seed=5), TARGET, -0.5, 1.5, 0.05)
    x = res.ebn0_db
    r25 = res.report_at(x)
    r125 = estimate_pupe(profile_config("genie", frames=200, Ka=125, ebn0_db=x, master_seed=6))
    _shared.setdefault("reports", []).append(r125)
    ok = r125.pupe > TARGET and r125.ci[0] > r25.ci[1]
    record(6, ok, f"at {x:.3f} dB: PUPE Ka=25 {r25.pupe:.4f} CI [{r25.ci[0]:.4f}, {r25.ci[1]:.4f}], "
                  f"Ka=125 {r125.pupe:.4f} CI [{r125.ci[0]:.4f}, {r125.ci[1]:.4f}] (> 0.05, disjoint)")


def test_7_false_alarm_suppression():
    rep = estimate_pupe(profile_config("paper", frames=100, Ka=100, ebn0_db=2.5, master_seed=7))
    _shared.setdefault("reports", []).append(rep)
    ok = rep.pupe <= TARGET and rep.false_alarms <= 1
    record(7, ok, f"paper profile Ka=100 W=100 at 2.5 dB over 100 frames: PUPE {rep.pupe:.4f} "
                  f"(<= 0.05), false alarms {rep.false_alarms} (<= 1)")


def test_8_complexity_bound():
    cfg = profile_config("paper", frames=50, Ka=25, ebn0_db=2.5, master_seed=8)
    rep = estimate_pupe(cfg)
    bound = cfg.rx.Imax * cfg.rx.W
    # every frame simulated by the Monte Carlo criteria obeys the loop bound too
    reps = [rep] + _shared.get("reports", [])
    worst = max(r.max_attempts for r in reps)
    ok = worst <= bound and rep.mean_attempts < 0.25 * bound
    record(8, ok, f"max attempts in any frame {worst} (<= Imax*W = {bound}); mean attempts "
                  f"at Ka=25 {rep.mean_attempts:.1f} (< {0.25 * bound:.0f})")


def _cli(*argv):
    return subprocess.run([sys.executable, "-m", "essa", *argv], capture_output=True, check=True).stdout


def test_9_reproducible_reports():
    base = ("--profile", "ci", "--frames", "48", "--seed", "9", "--ebn0-db", "2.5")
    checks = {
        "run json": ("run", *base, "--format", "json"),
        "run csv": ("run", *base, "--format", "csv"),
        "sweep csv": ("sweep", *base, "--axis", "ka", "--values", "2,6", "--fixed-snr"),
        "sweep json": ("sweep", *base, "--axis", "w", "--values", "4,8", "--fixed-snr",
                       "--format", "json"),
    }
    same = {k: _cli(*a, "--jobs", "1") == _cli(*a, "--jobs", "8") for k, a in checks.items()}
    record(9, all(same.values()), f"byte-identical reports at --jobs 1 and --jobs 8: {same}")
