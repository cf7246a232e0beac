# Comparison channels with heavy fading: Nakagami-log-normal and K-fading.
from jfts_capacity import JftsParams, amount_of_fading
from jfts_capacity.baselines import (K_FADING_FIG, NAKAGAMI_LOGNORMAL_FIG,
                                     baseline_amount_of_fading, baseline_opra)

for bp in (NAKAGAMI_LOGNORMAL_FIG, K_FADING_FIG):
    print(bp.label, "AF", round(baseline_amount_of_fading(bp), 4))
    for db in (0, 10, 20):
        r = baseline_opra(bp, 10 ** (db / 10))
        print(f"  {db} dB  OPRA {r.value:.4f}  gamma0 {r.diagnostics['gamma0']:.4f}")

# The JFTS amount of fading, normalised by the density's own mass
for p1 in (0.25, 0.5, 1.0):
    print("JFTS p1 =", p1, "AF", amount_of_fading(JftsParams.from_db(5.0, -9.8, 0.1, p1=p1)))
