# Monte Carlo ground truth drawn from the envelope density itself.
#
# Only parameter sets whose density integrates to about 1 can be sampled;
# (K, S_h, delta) = (2 dB, -9.8 dB, 0.4) is one of them.
import math

from jfts_capacity import JftsParams, ora_quadrature
from jfts_capacity.errors import ModelError
from jfts_capacity.oracle import build_sampler, ks_statistic, mc_capacity, sample_envelope

try:
    build_sampler(JftsParams.from_db(5.0, -9.8, 0.1))
except ModelError as exc:
    print("reference set refused, normalization =", exc.diagnostics["normalization"])

p = JftsParams.from_db(2.0, -9.8, 0.4)
s = build_sampler(p)
print("normalization", s.normalization)
a = sample_envelope(s, 1_000_000, seed=1)
print("KS", ks_statistic(s, a), "bound", 1.63 / math.sqrt(a.size))

for db in (5, 10, 15):
    gb = 10 ** (db / 10)
    for scheme in ("ora", "opra", "tifr"):
        est = mc_capacity(s, gb, scheme, 1_000_000, seed=db)
        print(f"{db} dB {scheme:5s} {est.mean:.4f} +/- {est.half_width_95:.4f}")
    print("        aggregated-density ORA quadrature", ora_quadrature(p, gb, 1e3 * gb).value)
