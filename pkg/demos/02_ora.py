# ORA capacity: the printed series has a Gamma pole in every term, so only
# the quadrature route yields a number.
from jfts_capacity import JftsParams, ora_quadrature, ora_series

p = JftsParams.from_db(2.0, -6.0, 0.9)
for db in (5, 10, 15):
    gb = 10 ** (db / 10)
    s = ora_series(p, gb, n_terms=10)
    print(f"{db} dB  series: value {s.value}, pole at n={s.diagnostics['pole_index']}")
    for mult in (1e2, 1e3, 1e4):
        q = ora_quadrature(p, gb, mult * gb)
        print(f"        quad to {mult:g} x mean: {q.value:.4f} bits/s/Hz")
