"""Quick built-in checks of the basic contracts of every module."""

from __future__ import annotations

import math

import numpy as np

from essa import channel, codec, phy, receiver


def _codec_checks():
    spec = codec.build_code_spec(1000, 100, 11)
    toy = codec.build_code_spec(128, 32, 11)
    rng = np.random.default_rng(1)
    u = rng.integers(0, 2, 100, dtype=np.uint8)
    v = rng.integers(0, 2, 1024, dtype=np.uint8)
    c = codec.polar_encode(u, spec)
    yield "codec: (1000,100) gives Np=1024, Kp=111, 24 punctured", (
        spec.Np == 1024 and spec.Kp == 111 and spec.puncture_pattern.size == 24)
    yield "codec: N = Np has no puncturing", toy.puncture_pattern.size == 0
    yield "codec: zero message has zero CRC", not codec.crc_append(np.zeros(100, np.uint8), spec).any()
    w = codec.crc_append(u, spec)
    w1 = w.copy()
    w1[5] ^= 1
    yield "codec: CRC round trip and single-bit detection", codec.crc_check(w, spec) and not codec.crc_check(w1, spec)
    yield "codec: polar transform is an involution", np.array_equal(codec.polar_transform(codec.polar_transform(v)), v)
    e = np.zeros(1024, np.uint8)
    e[-1] = 1
    yield "codec: last row of the kernel power is all ones", codec.polar_transform(e).all()
    yield "codec: zero message encodes to zero", not codec.polar_encode(np.zeros(100, np.uint8), spec).any()
    yield "codec: strong all-positive LLRs decode to zero", not codec.adaptive_scl_decode(np.full(1000, 50.0), spec).any()
    msg = codec.adaptive_scl_decode(20.0 * (1.0 - 2.0 * c), spec, 1)
    yield "codec: noiseless codeword decodes at list 1", msg is not None and np.array_equal(msg, u)


def _phy_checks():
    p = phy.PhyParams(n=30000, s=25, N=1000, L0=3050)
    pre, b = phy.generate_sequences(p)
    pre2, b2 = phy.generate_sequences(p)
    yield "phy: sequences are deterministic", np.array_equal(pre, pre2) and np.array_equal(b, b2)
    yield "phy: L0 = 0 gives an empty preamble", phy.generate_sequences(phy.PhyParams(30000, 25, 1000, 0))[0].size == 0
    c = np.zeros(1000, np.uint8)
    yield "phy: spreading the zero word returns b", np.array_equal(phy.spread(c, b), b)
    yield "phy: spreading the ones word returns -b", np.array_equal(phy.spread(c + 1, b), -b)
    spec = codec.build_code_spec(1000, 100)
    u = np.random.default_rng(2).integers(0, 2, 100, dtype=np.uint8)
    t = phy.hash_time(u, p)
    yield "phy: hash lands in [0, n) and is repeatable", 0 <= t < p.n and t == phy.hash_time(u, p)
    pkt = phy.build_packet(u, spec, p, pre, b)
    yield "phy: packet energy equals L0 + L", float(pkt.samples @ pkt.samples) == p.L0 + p.L
    f = np.zeros(p.n)
    phy.place_in_frame(f, phy.Packet(pkt.samples, p.n - 1))
    yield "phy: placement wraps around", f[p.n - 1] == pkt.samples[0] and f[0] == pkt.samples[1]
    phy.place_in_frame(f, phy.Packet(pkt.samples, p.n - 1), -1.0)
    yield "phy: place then subtract restores the frame", not f.any()


def _channel_checks():
    yield "channel: sigma2 at 0 dB, K=100, L0=3050, L=25000 is 140.25", math.isclose(
        channel.sigma2_from_ebn0(0.0, 100, 3050, 25000), 140.25)
    yield "channel: infinite Eb/N0 gives zero noise", channel.sigma2_from_ebn0(math.inf, 100, 0, 25000) == 0.0
    yield "channel: empty noiseless frame is zero", not channel.transmit([], 0.0, 100).any()
    yield "channel: delta E of L0=0 is 0 dB", channel.delta_e_db(0, 25000) == 0.0


def _receiver_checks():
    p = phy.PhyParams(n=30000, s=25, N=1000, L0=3050)
    spec = codec.build_code_spec(1000, 100)
    pre, b = phy.generate_sequences(p)
    u = np.random.default_rng(3).integers(0, 2, 100, dtype=np.uint8)
    pkt = phy.build_packet(u, spec, p, pre, b)
    y = channel.transmit([pkt], 0.0, p.n)
    lam = receiver.preamble_correlate(y, pre)
    yield "receiver: correlation peak equals L0 at the true time", (
        int(np.argmax(lam)) == pkt.start_time and math.isclose(lam[pkt.start_time], p.L0))
    yield "receiver: all-equal correlations pick times 0..W-1", receiver.top_w(np.zeros(10), 3) == [0, 1, 2]
    rx = receiver.ReceiverParams(W=4, Imax=3)
    out = receiver.attempt(y, pkt.start_time, spec, p, pre, b, rx)
    yield "receiver: noiseless attempt succeeds with unit amplitude", out.status == receiver.SUCCESS and out.amplitude == 1.0
    res = receiver.run_sic(y, spec, p, pre, b, rx)
    yield "receiver: single-user SIC leaves a zero residual", len(res.recovered) == 1 and not res.residual.any()
    yield "receiver: attempts bounded by Imax * W", res.attempts <= rx.Imax * rx.W


CHECKS = [_codec_checks, _phy_checks, _channel_checks, _receiver_checks]


def run_selftest(out) -> bool:
    ok_all = True
    for group in CHECKS:
        for name, ok in group():
            ok = bool(ok)
            ok_all &= ok
            out.write(f"{'PASS' if ok else 'FAIL'}  {name}\n")
    return ok_all
