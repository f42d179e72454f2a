from pathlib import Path

import numpy as np
import pytest
from scipy.stats import chi2

from essa import codec, phy

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="module")
def params():
    return phy.PhyParams(n=30000, s=25, N=1000, L0=3050)


@pytest.fixture(scope="module")
def seqs(params):
    return phy.generate_sequences(params)


@pytest.fixture(scope="module")
def spec():
    return codec.build_code_spec(1000, 100)


def test_derived_lengths(params):
    assert params.L == 25000 and params.packet_len == 28050


@pytest.mark.parametrize("kw", [dict(n=1000, s=25, N=1000, L0=3050), dict(n=100, s=0, N=10),
                                dict(n=100, s=2, N=10, L0=-1)])
def test_invalid_params_raise(kw):
    with pytest.raises(ValueError):
        phy.PhyParams(**kw)


def test_sequences_are_pm1_and_deterministic(params, seqs):
    p, b = seqs
    p2, b2 = phy.generate_sequences(params)
    assert p.size == 3050 and b.size == 25000
    assert set(np.unique(p)) <= {-1.0, 1.0} and set(np.unique(b)) <= {-1.0, 1.0}
    assert np.array_equal(p, p2) and np.array_equal(b, b2)


def test_sequences_golden_prefix(params, seqs):
    golden = dict(line.split("=", 1) for line in (GOLDEN / "sequences_default.txt").read_text().split())
    assert int(golden["preamble_seed"], 16) == params.preamble_seed
    assert int(golden["spreading_seed"], 16) == params.spreading_seed
    assert phy.chips_to_hex(seqs[0][:64]) == golden["preamble_first64"]
    assert phy.chips_to_hex(seqs[1][:64]) == golden["spreading_first64"]


def test_preamble_independent_of_spreading(params, seqs):
    p, b = seqs
    # normalised cross-correlation of independent sequences is about 1/sqrt(L0)
    assert abs(p @ b[:3050]) / 3050 < 4 / np.sqrt(3050)


def test_empty_preamble():
    p, b = phy.generate_sequences(phy.PhyParams(n=30000, s=25, N=1000, L0=0))
    assert p.size == 0 and b.size == 25000


def test_chip_balance_over_a_million_chips():
    chips = phy.pm1_sequence(0x5EED0001, 10 ** 6)
    assert abs(chips.mean()) < 4 / np.sqrt(chips.size)


def test_spreading_examples(seqs):
    b = seqs[1]
    c = np.zeros(1000, np.uint8)
    assert np.array_equal(phy.spread(c, b), b)
    assert np.array_equal(phy.spread(c + 1, b), -b)
    small_b = np.array([1.0, -1.0, 1.0, 1.0, -1.0, -1.0])
    got = phy.spread(np.array([0, 0, 1], np.uint8), small_b)
    assert got.tolist() == [1.0, -1.0, 1.0, 1.0, 1.0, 1.0]


def test_spreading_length_mismatch(seqs):
    with pytest.raises(ValueError):
        phy.spread(np.zeros(999, np.uint8), seqs[1])


def test_fnv1a_reference_vectors():
    assert phy.fnv1a_64(b"") == 0xCBF29CE484222325
    assert phy.fnv1a_64(b"a") == 0xAF63DC4C8601EC8C
    assert phy.fnv1a_64(b"foobar") == 0x85944171F73967E8


def test_hash_range_and_repeatability(params):
    rng = np.random.default_rng(0)
    for _ in range(100):
        u = rng.integers(0, 2, 100, dtype=np.uint8)
        t = phy.hash_time(u, params)
        assert 0 <= t < params.n and t == phy.hash_time(u.copy(), params)


def test_hash_depends_on_seed(params):
    u = np.random.default_rng(1).integers(0, 2, 100, dtype=np.uint8)
    other = phy.PhyParams(n=30000, s=25, N=1000, L0=3050, hash_seed=1)
    times = [phy.hash_time(u, phy.PhyParams(n=30000, s=25, N=1000, L0=3050, hash_seed=k))
             for k in range(20)]
    assert len(set(times)) > 15
    assert phy.hash_time(u, other) in times


def test_hash_uniformity_chi_square(params):
    rng = np.random.default_rng(123)
    msgs = rng.integers(0, 2, (10 ** 5, 100), dtype=np.uint8)
    t = np.array([phy.hash_time(u, params) for u in msgs])
    counts = np.bincount(t * 100 // params.n, minlength=100)
    expected = t.size / 100
    stat = ((counts - expected) ** 2 / expected).sum()
    assert stat < chi2.ppf(0.999, 99)


def test_hash_avalanche(params):
    rng = np.random.default_rng(7)
    same = trials = 0
    for _ in range(100):
        u = rng.integers(0, 2, 100, dtype=np.uint8)
        t = phy.hash_time(u, params)
        for i in range(100):
            v = u.copy()
            v[i] ^= 1
            same += phy.hash_time(v, params) == t
            trials += 1
    # an ideal hash collides with probability 1/n per flip
    assert same / trials <= 2 / params.n


def test_packet_structure(params, seqs, spec):
    p, b = seqs
    u = np.random.default_rng(2).integers(0, 2, 100, dtype=np.uint8)
    pkt = phy.build_packet(u, spec, params, p, b)
    assert pkt.samples.size == params.packet_len
    assert pkt.start_time == phy.hash_time(u, params)
    assert np.array_equal(pkt.samples[:3050], p)
    assert np.array_equal(pkt.samples[3050:], phy.spread(codec.polar_encode(u, spec), b))
    assert pkt.samples @ pkt.samples == params.packet_len


def test_distinct_messages_give_distinct_packets(params, seqs, spec):
    rng = np.random.default_rng(3)
    u = rng.integers(0, 2, 100, dtype=np.uint8)
    v = u.copy()
    v[0] ^= 1
    a = phy.build_packet(u, spec, params, *seqs)
    c = phy.build_packet(v, spec, params, *seqs)
    assert not np.array_equal(a.samples, c.samples)


@pytest.mark.parametrize("t", [0, 1, 30000 - 28050, 29999])
def test_placement_wraps_and_subtracts(params, seqs, spec, t):
    u = np.random.default_rng(t).integers(0, 2, 100, dtype=np.uint8)
    pkt = phy.Packet(phy.build_packet(u, spec, params, *seqs).samples, t)
    f = np.zeros(params.n)
    phy.place_in_frame(f, pkt)
    idx = (t + np.arange(params.packet_len)) % params.n
    assert np.array_equal(f[idx], pkt.samples)
    untouched = np.ones(params.n, bool)
    untouched[idx] = False
    assert not f[untouched].any()
    phy.place_in_frame(f, pkt, -1.0)
    assert not f.any()


def test_placement_rejects_oversized_packet():
    with pytest.raises(ValueError):
        phy.place_in_frame(np.zeros(10), phy.Packet(np.ones(11), 0))
