# Channel inversion.  Full inversion needs E[1/gamma], which diverges at
# the origin for this density, so CIFR is zero.  Truncated inversion is
# then maximised over the cutoff.
from jfts_capacity import JftsParams, cifr, tifr_max

p = JftsParams.from_db(5.0, -9.8, 0.1)
res = cifr(p)
print("CIFR:", res.value)
for eps, v in res.diagnostics["inverse_moment_probes"].items():
    print(f"  int_{eps:g}^1 f(g)/g dg = {v:.4f}")   # grows like log(1/eps)

for db in (5, 10, 15, 20):
    sol, out = tifr_max(p, 10 ** (db / 10))
    d = out.diagnostics
    print(f"{db} dB  best gamma0 {sol.gamma0:.4f}  capacity {out.value:.4f}  "
          f"P_out {d['outage_probability']:.4f}  unbounded {d['supremum_unbounded']}")
# P_out above 1 makes the prefactor negative.  The product then grows as the
# log argument approaches 0, so the "maximum" sits at the validity edge.
