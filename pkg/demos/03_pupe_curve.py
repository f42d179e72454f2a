"""
PUPE against Eb/N0 on the small profile
=======================================

The ``ci`` profile shrinks the frame (n = 4096, a (128, 32) code) so that a
whole curve takes seconds. The same calls work on the full-size ``paper``
and ``genie`` profiles, only slower.
"""

# %%
from essa.cli import profile_config
from essa.montecarlo import estimate_pupe, min_ebn0

cfg = profile_config("ci", frames=200, Ka=4)
print(f"{'Eb/N0':>6} {'PUPE':>8} {'95% CI':>20} {'attempts':>9}")
for x in (0.0, 1.0, 2.0, 3.0, 4.0):
    rep = estimate_pupe(cfg.replace(ebn0_db=x))
    lo, hi = rep.ci
    print(f"{x:6.1f} {rep.pupe:8.4f} [{lo:.4f}, {hi:.4f}] {rep.mean_attempts:9.1f}")

# %%
# Bisection for the Eb/N0 that reaches PUPE 0.05, reusing the same messages
# and noise at every probe.
res = min_ebn0(cfg, 0.05, 0.0, 6.0, 0.1)
print("min Eb/N0 for PUPE 0.05: %.2f dB after %d probes" % (res.ebn0_db, len(res.probes)))
