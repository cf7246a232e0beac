# Cutoff CSNR and OPRA capacity for the reference JFTS channel.
#
# The closed form is printed next to truncated quadrature of its own
# defining integral, so the effect of the dropped boundary terms is visible.
import numpy as np

from jfts_capacity import JftsParams, b_aggregate, opra_closed, opra_quadrature, solve_cutoff
from jfts_capacity.errors import NoRootError

p = JftsParams.from_db(5.0, -9.8, 0.1)
print("aggregate constant B =", b_aggregate(p))

# Water-filling cutoff against mean CSNR
for db in np.arange(0, 21, 5):
    gb = 10 ** (db / 10)
    try:
        sol = solve_cutoff(p, gb)
    except NoRootError as exc:
        print(f"{db:4.0f} dB  no cutoff root  {exc.diagnostics}")
        continue
    closed = opra_closed(p, gb, gamma0=sol.gamma0, gamma_max_mults=())
    quads = [opra_quadrature(p, gb, m * gb, gamma0=sol.gamma0).value for m in (1e2, 1e3, 1e4)]
    print(f"{db:4.0f} dB  gamma0 {sol.gamma0:.4f}  closed {closed.value:9.3f}  "
          f"quad x1e2/x1e3/x1e4 {quads[0]:8.3f} {quads[1]:8.3f} {quads[2]:8.3f}")

# The quadrature keeps growing with the truncation point: the density has a
# 1/gamma tail, so the untruncated integral diverges.
