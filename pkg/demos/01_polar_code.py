"""
The (1000, 100) CA-polar code
=============================

Build the code used by every user, push a few words through a BPSK/AWGN
channel and watch how the adaptive list decoder trades effort for
reliability.
"""

# %%
# The construction: a 1024-bit mother code punctured to 1000 bits, 100
# message bits plus 11 CRC bits on the most reliable inputs.
import time

import numpy as np

from essa import codec

spec = codec.build_code_spec(1000, 100)
print("mother length", spec.Np, "info+crc", spec.Kp, "punctured", spec.puncture_pattern.size)
print("first info positions:", spec.info_set[:8])

# %%
# Encoding is linear, and the all-zero message maps to the all-zero word.
rng = np.random.default_rng(0)
u = rng.integers(0, 2, 100, dtype=np.uint8)
c = codec.polar_encode(u, spec)
print("codeword weight:", c.sum(), "of", c.size)

# %%
# Decode noisy copies at a few SNRs. The BPSK LLR is 2y / sigma^2.
def frame_error_rate(ebn0_db, list_max, trials=200):
    rate = spec.K / spec.N
    sigma = np.sqrt(1.0 / (2 * rate * 10 ** (ebn0_db / 10)))
    errors = 0
    for _ in range(trials):
        msg = rng.integers(0, 2, 100, dtype=np.uint8)
        y = 1.0 - 2.0 * codec.polar_encode(msg, spec) + rng.normal(0, sigma, spec.N)
        out = codec.adaptive_scl_decode(2 * y / sigma ** 2, spec, list_max)
        errors += out is None or not np.array_equal(out, msg)
    return errors / trials


for list_max in (1, 8, 256):
    t0 = time.perf_counter()
    fer = [frame_error_rate(x, list_max) for x in (0.5, 1.0, 1.5)]
    print(f"list_max={list_max:3d}  FER at 0.5/1.0/1.5 dB: {fer}  ({time.perf_counter() - t0:.1f} s)")
