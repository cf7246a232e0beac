"""Nakagami-log-normal and K-fading comparison channels.

Both are genuine, normalised CSNR densities with exponential tails, so
the OPRA integrals converge and a single density-driven pipeline
(:func:`opra_from_density`) serves every model, including the JFTS
comparison in the figure sweeps.
"""

from dataclasses import dataclass
import enum
import math

import numpy as np
from scipy import integrate, optimize, special

from .capacity import CapacityResult, CutoffSolution, Method, Scheme
from .errors import DomainError, NoRootError
from .specfun import gauss_hermite

__all__ = [
    "BaselineModel",
    "BaselineParams",
    "NAKAGAMI_LOGNORMAL_FIG",
    "K_FADING_FIG",
    "baseline_csnr_pdf",
    "baseline_amount_of_fading",
    "density_integral",
    "opra_from_density",
    "baseline_opra",
]

DB_TO_NEPER = math.log(10.0) / 10.0
LOGNORMAL_ORDER = 40


class BaselineModel(enum.Enum):
    NAKAGAMI_LOGNORMAL = "nakagami_lognormal"
    K_FADING = "k_fading"


@dataclass(frozen=True)
class BaselineParams:
    """Parameters of a comparison channel.

    ``sigma_db`` is the log-normal spread in dB; ``k_shape`` is the Gamma
    shadowing shape of the K distribution.  Both densities are scaled to
    mean CSNR ``gamma_bar``.
    """

    model: BaselineModel
    nakagami_m: float = None
    sigma_db: float = None
    k_shape: float = None

    def __post_init__(self):
        model = BaselineModel(self.model)
        object.__setattr__(self, "model", model)
        needed = (("nakagami_m", "sigma_db") if model is BaselineModel.NAKAGAMI_LOGNORMAL
                  else ("k_shape",))
        for name in needed:
            value = getattr(self, name)
            if value is None or not value > 0:
                raise DomainError(f"{model.value} needs a positive {name}")

    @property
    def label(self):
        if self.model is BaselineModel.NAKAGAMI_LOGNORMAL:
            return f"nakagami_lognormal_m{self.nakagami_m:g}_sigma{self.sigma_db:g}"
        return f"k_fading_k{self.k_shape:g}"


NAKAGAMI_LOGNORMAL_FIG = BaselineParams(BaselineModel.NAKAGAMI_LOGNORMAL, nakagami_m=1.0, sigma_db=3.88)
K_FADING_FIG = BaselineParams(BaselineModel.K_FADING, k_shape=0.96)


def _nln_pdf(m, sigma_db, g, gamma_bar):
    # Gamma(m, omega/m) averaged over log-normal omega with E[omega] = gamma_bar.
    s = sigma_db * DB_TO_NEPER
    rule = gauss_hermite(LOGNORMAL_ORDER)
    omega = np.exp(math.log(gamma_bar) - s * s / 2 + math.sqrt(2.0) * s * rule.nodes)
    gg = np.asarray(g, dtype=float)[..., None]
    logpdf = (m * np.log(m / omega) + (m - 1) * np.log(gg) - m * gg / omega - special.gammaln(m))
    return np.sum(rule.weights * np.exp(logpdf), axis=-1) / math.sqrt(math.pi)


def baseline_csnr_pdf(bp, gamma, gamma_bar):
    """CSNR density of a comparison channel with mean ``gamma_bar``."""
    g = np.asarray(gamma, dtype=float)
    if np.any(~(g > 0)) or not gamma_bar > 0:
        raise DomainError("gamma and gamma_bar must be positive")
    if bp.model is BaselineModel.NAKAGAMI_LOGNORMAL:
        out = _nln_pdf(bp.nakagami_m, bp.sigma_db, g, gamma_bar)
    else:
        z = 2.0 * np.sqrt(bp.k_shape * g / gamma_bar)
        log_pref = (math.log(2.0) - special.gammaln(bp.k_shape)
                    + (bp.k_shape + 1) / 2 * math.log(bp.k_shape / gamma_bar)
                    + (bp.k_shape - 1) / 2 * np.log(g))
        # kve(v, z) = exp(z) K_v(z); guards underflow far in the tail.
        out = np.exp(log_pref - z) * special.kve(bp.k_shape - 1, z)
    return float(out) if np.ndim(out) == 0 else out


def density_integral(pdf, lo, hi, weight=None, scale=1.0):
    """``int_lo^hi weight(g) pdf(g) dg`` over log-spaced panels.

    ``hi`` may be ``inf``.  ``scale`` marks where the density lives
    (panel edges are placed around it).
    """
    w = weight if weight is not None else (lambda g: 1.0)

    def f(g):
        return w(g) * pdf(g)

    inner = np.geomspace(scale * 1e-12, scale * 200.0, 29)
    edges = [lo] + [e for e in inner if lo < e < hi] + [hi]
    total = []
    for a, b in zip(edges[:-1], edges[1:]):
        v, _ = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)
        total.append(v)
    return math.fsum(total)


def opra_from_density(pdf, gamma_bar, scheme_label="baseline"):
    """Water-filling OPRA capacity for any proper CSNR density.

    Solves ``int_{g0}^inf (1/g0 - 1/g) f dg = 1`` for the cutoff by Brent's
    method, then integrates ``log2(g/g0) f`` above it.

    Returns
    -------
    CapacityResult
        ``diagnostics["cutoff"]`` holds the :class:`CutoffSolution`.
    """
    if not gamma_bar > 0:
        raise DomainError("gamma_bar must be positive")

    def constraint(g0):
        return density_integral(pdf, g0, math.inf, lambda g: 1.0 / g0 - 1.0 / g, gamma_bar) - 1.0

    lo, hi = 1e-8, 10.0
    f_lo, f_hi = constraint(lo), constraint(hi)
    while f_hi > 0 and hi < 1e4:
        hi *= 10.0
        f_hi = constraint(hi)
    if not (f_lo > 0 > f_hi):
        raise NoRootError("water-filling constraint has no sign change",
                          {"model": scheme_label, "f_lo": f_lo, "f_hi": f_hi})
    g0, info = optimize.brentq(constraint, lo, hi, xtol=1e-14, rtol=1e-13, full_output=True)
    value = density_integral(pdf, g0, math.inf, lambda g: math.log(g / g0), gamma_bar) / math.log(2.0)
    sol = CutoffSolution(gamma0=float(g0), residual=float(constraint(g0)),
                         iterations=int(info.iterations), bracket=(lo, hi))
    return CapacityResult(Scheme.OPRA, value, Method.QUADRATURE, math.inf,
                          {"cutoff": sol, "gamma0": float(g0), "model": scheme_label})


def baseline_opra(bp, gamma_bar):
    """OPRA capacity of a comparison channel at mean CSNR ``gamma_bar``."""
    return opra_from_density(lambda g: baseline_csnr_pdf(bp, g, gamma_bar), gamma_bar, bp.label)


def baseline_amount_of_fading(bp, gamma_bar=1.0):
    """``Var(gamma) / E[gamma]**2`` by quadrature."""
    def pdf(g):
        return baseline_csnr_pdf(bp, g, gamma_bar)

    m1 = density_integral(pdf, 0.0, math.inf, lambda g: g, gamma_bar)
    m2 = density_integral(pdf, 0.0, math.inf, lambda g: g * g, gamma_bar)
    m0 = density_integral(pdf, 0.0, math.inf, None, gamma_bar)
    return m2 * m0 / (m1 * m1) - 1.0
