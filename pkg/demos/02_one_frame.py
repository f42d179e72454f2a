"""
One frame, step by step
=======================

Several users pick their start times by hashing their own messages, send a
preamble plus a spread codeword, and collide in a 30000-sample frame. The
receiver correlates with the preamble, decodes the best candidates and
cancels what it decodes.
"""

# %%
import io
import json

import numpy as np

from essa import channel, codec, phy, receiver

params = phy.PhyParams(n=30000, s=25, N=1000, L0=3050)
spec = codec.build_code_spec(1000, 100)
p, b = phy.generate_sequences(params)
print("packet length", params.packet_len, "delta E %.3f dB" % channel.delta_e_db(params.L0, params.L))

# %%
# Eight users at 2 dB.
rng = np.random.default_rng(3)
msgs = rng.integers(0, 2, (8, 100), dtype=np.uint8)
packets = [phy.build_packet(u, spec, params, p, b) for u in msgs]
print("start times:", sorted(pk.start_time for pk in packets))
sigma2 = channel.sigma2_from_ebn0(2.0, 100, params.L0, params.L)
y = channel.transmit(packets, sigma2, params.n, rng)

# %%
# The preamble correlation peaks sit on the true start times.
lam = receiver.preamble_correlate(y, p)
print("top 10 correlation times:", receiver.top_w(lam, 10))

# %%
# Run the full receiver and look at its attempt trace.
trace = io.StringIO()
res = receiver.run_sic(y, spec, params, p, b, receiver.ReceiverParams(W=16, Imax=10), trace=trace)
for line in trace.getvalue().splitlines():
    rec = json.loads(line)
    print(f"iter {rec['iteration']}  t={rec['t']:5d}  {rec['status']:13s}  a={rec['amplitude']:.3f}")
sent = {u.tobytes() for u in msgs}
hits = sum(m.tobytes() in sent for m, _ in res.recovered)
print(f"recovered {hits}/8 in {res.iterations} iterations, {res.attempts} attempts")
print("residual power / noise power: %.3f" % (res.residual.var() / sigma2))
