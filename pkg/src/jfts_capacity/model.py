"""The joint fading and two-path shadowing (JFTS) channel law.

Everything here evaluates the published expressions term by term: the
envelope density, its closed-form mean square ``omega_a``, the aggregate
constant ``b_aggregate`` and the CSNR densities derived from them.  The
printed envelope density is not normalised for most parameter sets and
the two CSNR densities decay like ``1/gamma``; nothing here corrects
for that.  Use :mod:`jfts_capacity.oracle` to quantify the consequences.
"""

from dataclasses import dataclass
import enum
from functools import lru_cache
import math

import numpy as np
from scipy import integrate, special

from .errors import ConfigurationError, DomainError, NumericError
from .specfun import EULER_GAMMA, bessel_i0, expint_ei, gauss_hermite

__all__ = [
    "TWDP_A",
    "TWDP_B",
    "TWDP_M",
    "JftsParams",
    "CsnrDensityForm",
    "db_to_linear",
    "linear_to_db",
    "envelope_pdf",
    "log_envelope_pdf",
    "log_envelope_moment",
    "omega_a",
    "b_aggregate",
    "csnr_pdf",
    "outage_probability",
    "density_support",
    "numeric_log_moments",
    "numeric_moment",
    "amount_of_fading",
]

# Fourth-order TWDP approximation constants.
TWDP_A = np.array([751 / 17280, 3577 / 17280, 49 / 640, 2989 / 17280])
TWDP_B = TWDP_A * bessel_i0(1.0)
TWDP_M = np.cos(np.arange(4) * np.pi / 7)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else 10.0 ** (float(db) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x) if np.ndim(x) else 10.0 * math.log10(x)


@dataclass(frozen=True)
class JftsParams:
    """JFTS channel parameters, all in linear units.

    Attributes
    ----------
    k_fading : float
        Small-scale fading parameter K (power ratio).
    s_shadow : float
        Shadowing parameter S_h (power ratio), one value for all nodes.
    delta : float
        Shadowing shape parameter in [0, 1].
    p1, p2 : float
        Mean-squared voltages of the diffuse and shadowed components.
    quad_order : int
        Gauss-Hermite order of the density approximation.  Formulas that
        divide by ``|r_h|`` require an even order.
    """

    k_fading: float
    s_shadow: float
    delta: float
    p1: float = 1.0
    p2: float = 1.0
    quad_order: int = 20

    def __post_init__(self):
        for name in ("k_fading", "s_shadow", "p1", "p2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")
        if not 0.0 <= self.delta <= 1.0:
            raise DomainError(f"delta must lie in [0, 1], got {self.delta!r}")
        if int(self.quad_order) != self.quad_order or not 1 <= self.quad_order <= 64:
            raise DomainError(f"quad_order must be an integer in [1, 64], got {self.quad_order!r}")
        object.__setattr__(self, "quad_order", int(self.quad_order))

    @classmethod
    def from_db(cls, k_db, sh_db, delta, p1=1.0, p2=1.0, quad_order=20):
        """Build from K and S_h given in dB."""
        return cls(db_to_linear(k_db), db_to_linear(sh_db), delta, p1, p2, quad_order)

    @property
    def k_db(self):
        return linear_to_db(self.k_fading)

    @property
    def sh_db(self):
        return linear_to_db(self.s_shadow)

    def replace(self, **changes):
        fields = dict(k_fading=self.k_fading, s_shadow=self.s_shadow, delta=self.delta,
                      p1=self.p1, p2=self.p2, quad_order=self.quad_order)
        fields.update(changes)
        return JftsParams(**fields)


class CsnrDensityForm(enum.Enum):
    """Which printed CSNR density to evaluate."""

    PER_NODE_SUM = "per_node_sum"
    AGGREGATED = "aggregated"


def _even_rule(params):
    if params.quad_order % 2:
        raise ConfigurationError(
            f"quad_order={params.quad_order} is odd; its rule contains the node 0 "
            "and the density divides by |r_h|")
    return gauss_hermite(params.quad_order)


def _log_r_factor(params, rule):
    # log of (w_h / |r_h|) exp(r_h^2 (2 P1 - 1) / (2 P1))
    r2 = rule.nodes ** 2
    return np.log(rule.weights / np.abs(rule.nodes)) + r2 * (2 * params.p1 - 1) / (2 * params.p1)


def _branches(params):
    """Per (i, branch) constants: log b_i, shadow exponent, K S (1 -/+ delta M_i)."""
    kss = params.k_fading * params.s_shadow
    dm = params.delta * TWDP_M
    log_b = np.concatenate([np.log(TWDP_B), np.log(TWDP_B)])
    shadow = np.concatenate([params.s_shadow * dm, -params.s_shadow * dm])
    kappa = np.concatenate([kss * (1 - dm), kss * (1 + dm)])
    return log_b, shadow, kappa


def log_envelope_pdf(params, alpha):
    """Natural log of :func:`envelope_pdf` (``-inf`` at alpha = 0)."""
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0) or np.any(np.isnan(a)):
        raise DomainError("envelope_pdf requires alpha >= 0")
    rule = _even_rule(params)
    r2 = rule.nodes ** 2
    log_b, shadow, kappa = _branches(params)
    base = _log_r_factor(params, rule) - params.k_fading - params.s_shadow  # (m,)

    flat = np.atleast_1d(a).ravel()
    out = np.full(flat.shape, -np.inf)
    pos = flat > 0
    ap = flat[pos][:, None, None]
    z = 2 * ap * np.sqrt(kappa / (params.p1 * params.p2))[None, :, None]
    terms = (log_b[None, :, None] + shadow[None, :, None] + base[None, None, :]
             - ap ** 2 / (2 * params.p2 * r2[None, None, :])
             + np.log(special.i0e(z)) + z)
    if ap.size:
        out[pos] = (np.log(flat[pos]) - math.log(2 * params.p1 * params.p2)
                    + special.logsumexp(terms.reshape(terms.shape[0], -1), axis=1))
    out = out.reshape(a.shape)
    return float(out) if out.ndim == 0 else out


def envelope_pdf(params, alpha):
    """Printed JFTS envelope density ``f_A(alpha)``.

    The exponent's ``alpha_2`` is read as ``alpha**2``.  Evaluated in the
    log domain, so the result is ``inf`` only when the true value exceeds
    the float range.
    """
    with np.errstate(over="ignore"):
        out = np.exp(log_envelope_pdf(params, alpha))
    return float(out) if np.ndim(out) == 0 else out


def log_envelope_moment(params, k):
    """Log of ``int alpha**k f_A(alpha) d alpha`` in closed form, k even.

    Each summand of the density integrates through
    ``int x**(2n+1) exp(-p x**2) I0(c x) dx = n! exp(q) L_n(-q) / (2 p**(n+1))``
    with ``q = c**2 / (4 p)``.  This is exact for the printed density and
    serves as an independent check on quadrature moments.
    """
    if k < 0 or k % 2:
        raise DomainError("closed-form moments need an even order k >= 0")
    n = k // 2
    rule = _even_rule(params)
    r2 = rule.nodes ** 2
    log_b, shadow, kappa = _branches(params)
    p = 1.0 / (2 * params.p2 * r2)  # (m,)
    q = 2 * kappa[:, None] * r2[None, :] / params.p1  # (8, m)
    log_lag = np.log(special.eval_laguerre(n, -q))
    terms = (log_b[:, None] + shadow[:, None] + _log_r_factor(params, rule)[None, :]
             - params.k_fading - params.s_shadow - math.log(2 * params.p1 * params.p2)
             + math.lgamma(n + 1) - math.log(2) - (n + 1) * np.log(p)[None, :] + q + log_lag)
    return float(special.logsumexp(terms))


@lru_cache(maxsize=4096)
def _log_omega_a(params):
    rule = _even_rule(params)
    r2 = rule.nodes ** 2
    kss = params.k_fading * params.s_shadow
    dm = params.delta * TWDP_M[:, None]
    common = (np.log(TWDP_B)[:, None] + math.log(params.p2) + _log_r_factor(params, rule)[None, :]
              + 2 * np.log(r2)[None, :] - 2 * math.log(params.p1)
              - params.k_fading - params.s_shadow)
    first = (params.s_shadow * dm - kss * (1 - dm) * r2 / (2 * params.p1)
             + np.log(params.p1 + kss * r2 * (1 - dm)))
    second = (-params.s_shadow * dm - kss * (1 + dm) * r2 / (2 * params.p1)
              + np.log(params.p1 + kss * r2 * (1 + dm)))
    return float(special.logsumexp(np.concatenate([common + first, common + second])))


def omega_a(params):
    """Closed-form mean-square envelope ``Omega_A = E{A^2}`` as printed."""
    return math.exp(_log_omega_a(params))


def b_aggregate(params):
    """Aggregate constant ``sum_h Omega_A / (2 P2 r_h^2)``."""
    rule = _even_rule(params)
    return omega_a(params) * float(np.sum(1.0 / (2 * params.p2 * rule.nodes ** 2)))


def _check_positive(**values):
    for name, v in values.items():
        arr = np.asarray(v, dtype=float)
        if np.any(~(arr > 0)):
            raise DomainError(f"{name} must be positive")


def csnr_pdf(params, form, gamma, gamma_bar):
    """Printed CSNR density in either form.

    ``PER_NODE_SUM`` keeps one term per quadrature node;
    ``AGGREGATED`` is ``(B/gamma)(1 - exp(-B gamma / gamma_bar))`` with
    ``B = b_aggregate(params)``, the form all capacity formulas integrate.
    """
    _check_positive(gamma=gamma, gamma_bar=gamma_bar)
    g = np.asarray(gamma, dtype=float)
    form = CsnrDensityForm(form)
    if form is CsnrDensityForm.AGGREGATED:
        b = b_aggregate(params)
        out = b / g * -np.expm1(-b * g / gamma_bar)
    else:
        rule = _even_rule(params)
        c = omega_a(params) / (2 * params.p2 * rule.nodes ** 2)
        gg = g[..., None]
        out = np.sum(c / gg * -np.expm1(-c * gg / gamma_bar), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def outage_probability(params, gamma0, gamma_bar, with_diagnostics=False):
    """``B log(gamma0) - B Ei(-B gamma0 / gamma_bar)``, unclamped.

    With ``with_diagnostics=True`` returns ``(value, diagnostics)`` where
    ``diagnostics["outside_unit_interval"]`` flags values outside [0, 1].
    """
    _check_positive(gamma0=gamma0, gamma_bar=gamma_bar)
    b = b_aggregate(params)
    value = b * math.log(gamma0) - b * expint_ei(-b * gamma0 / gamma_bar)
    if not with_diagnostics:
        return value
    return value, {"outside_unit_interval": not 0.0 <= value <= 1.0}


def outage_small_cutoff_limit(params, gamma_bar):
    """Limit of the outage expression as gamma0 -> 0: ``-B (gamma + log(B / gamma_bar))``."""
    b = b_aggregate(params)
    return -b * (EULER_GAMMA + math.log(b / gamma_bar))


# --- numerical moments -----------------------------------------------------

_QUAD_PANELS = 64


def density_support(logpdf, lo_log_drop=80.0):
    """Upper envelope limit beyond which even ``alpha**4 f(alpha)`` is negligible.

    Returns ``(alpha_hi, probe_grid, log_values)``.
    """
    hi = 1.0
    for _ in range(60):
        grid = np.linspace(hi / 4096, hi, 4096)
        lp = logpdf(grid) + 4 * np.log(grid)
        peak = np.max(lp)
        if lp[-1] < peak - lo_log_drop and np.argmax(lp) < 0.9 * grid.size:
            return hi, grid, lp
        hi *= 2
    raise NumericError("could not bracket the density support", {"alpha_hi": hi})


def numeric_log_moments(logpdf, orders=(0, 2, 4), rtol=1e-9):
    """Log moments ``log int alpha**k f(alpha) d alpha`` by adaptive quadrature.

    ``logpdf`` maps an array of alpha > 0 to log density values.  The
    integrand is rescaled by its maximum so densities far outside the
    float range still integrate.
    """
    hi, grid, _ = density_support(logpdf)
    edges = np.linspace(0.0, hi, _QUAD_PANELS + 1)
    out = {}
    for k in orders:
        lk = logpdf(grid) + k * np.log(grid)
        scale = float(np.max(lk))
        if not math.isfinite(scale):
            raise NumericError("density is not finite on its support", {"order": k})

        def f(a, k=k, scale=scale):
            if a <= 0:
                return 0.0
            return math.exp(float(logpdf(np.array([a]))[0]) + k * math.log(a) - scale)

        total, err = 0.0, 0.0
        for lo, up in zip(edges[:-1], edges[1:]):
            v, e = integrate.quad(f, lo, up, epsabs=0.0, epsrel=rtol, limit=200)
            total += v
            err += e
        if not total > 0 or err > 1e-6 * total:
            raise NumericError("moment quadrature did not converge",
                               {"order": k, "value": total, "abserr": err, "alpha_hi": hi})
        out[k] = scale + math.log(total)
    return out


def numeric_moment(params, k):
    """``int alpha**k f_A(alpha) d alpha`` by adaptive quadrature (may be inf)."""
    lm = numeric_log_moments(lambda a: log_envelope_pdf(params, a), orders=(k,))[k]
    return math.exp(lm) if lm < 709.0 else math.inf


def amount_of_fading(params=None, density=None):
    """Amount of fading ``E[A^4] / E[A^2]^2 - 1`` by quadrature.

    Moments are normalised by the density's own integral, so the result
    is scale free even when the density is not normalised.  ``density``
    overrides the JFTS envelope with any callable pdf of alpha.
    """
    if density is None:
        if params is None:
            raise DomainError("need params or a density")

        def logpdf(a):
            return log_envelope_pdf(params, a)
    else:
        def logpdf(a):
            with np.errstate(divide="ignore"):
                return np.log(np.asarray(density(a), dtype=float))
    lm = numeric_log_moments(logpdf, orders=(0, 2, 4))
    return math.exp(lm[4] + lm[0] - 2 * lm[2]) - 1.0
