"""Cutoff CSNR and capacity under OPRA, ORA, CIFR and TIFR.

Closed forms are evaluated exactly as published.  Each defining integral
also has a truncated quadrature twin with an explicit upper limit
``gamma_max``, because the aggregated density decays like ``1/gamma`` and
the closed forms silently drop the resulting divergent boundary terms.
Negative or otherwise suspicious values are flagged, never clamped.
"""

from dataclasses import dataclass, field
import enum
import math

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NoCapacityError, NoRootError, NumericError, PoleError
from .model import CsnrDensityForm, b_aggregate, csnr_pdf, outage_probability
from .specfun import EULER_GAMMA, expint_ei, gamma_at, hyp3f3_unit

__all__ = [
    "Scheme",
    "Method",
    "CutoffSolution",
    "CapacityResult",
    "cutoff_residual",
    "solve_cutoff",
    "opra_closed",
    "opra_quadrature",
    "ora_quadrature",
    "ora_series",
    "cifr",
    "tifr_capacity",
    "tifr_max",
    "log_quad",
]

LN2 = math.log(2.0)
RESIDUAL_TOL = 1e-9
BRACKET_LO = 1e-8
BRACKET_HI = 10.0
BRACKET_CAP = 1e4
ORA_LOWER = 1e-12
TIFR_GRID = 200


class Scheme(enum.Enum):
    OPRA = "opra"
    ORA = "ora"
    CIFR = "cifr"
    TIFR = "tifr"


class Method(enum.Enum):
    CLOSED_FORM = "closed"
    QUADRATURE = "quad"
    SERIES = "series"
    MONTE_CARLO = "mc"


@dataclass(frozen=True)
class CutoffSolution:
    """A cutoff CSNR together with how it was found."""

    gamma0: float
    residual: float
    iterations: int
    bracket: tuple
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class CapacityResult:
    """Capacity per unit bandwidth in bits/sec/Hz."""

    scheme: Scheme
    value: float
    method: Method
    gamma_max: float = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if (self.gamma_max is not None) != (self.method is Method.QUADRATURE):
            raise ValueError("gamma_max is set exactly for quadrature results")


def _positive(name, value):
    if not (isinstance(value, (int, float, np.floating)) and value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")


def cutoff_residual(params, gamma0, gamma_bar):
    """Left side of the cutoff fixed point minus one."""
    _positive("gamma0", gamma0)
    _positive("gamma_bar", gamma_bar)
    b = b_aggregate(params)
    x = b * gamma0 / gamma_bar
    return ((b / gamma0 + b * b / gamma_bar) * expint_ei(-x)
            + (b / gamma0) * (1.0 - math.log(gamma0) + math.exp(-x)) - 1.0)


def _sign_changes(f, lo, hi, n):
    grid = np.geomspace(lo, hi, n)
    vals = np.array([f(g) for g in grid])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    return grid, vals, idx


def solve_cutoff(params, gamma_bar, tol=1e-12):
    """Bracketed Brent root of :func:`cutoff_residual`.

    The search grid starts on [1e-8, 10] and the upper end grows by
    factors of ten up to 1e4.  The smallest root wins; more than one sign
    change sets ``diagnostics["multiple_roots"]``.

    Raises
    ------
    NoRootError
        No sign change anywhere in [1e-8, 1e4].
    """
    _positive("gamma_bar", gamma_bar)
    if not tol >= 1e-12:
        raise DomainError("tol must be >= 1e-12")

    def f(g):
        return cutoff_residual(params, g, gamma_bar)

    hi = BRACKET_HI
    while True:
        n = 40 * int(round(math.log10(hi / BRACKET_LO))) + 1
        grid, vals, idx = _sign_changes(f, BRACKET_LO, hi, n)
        if idx.size or hi >= BRACKET_CAP:
            break
        hi *= 10.0
    if not idx.size:
        raise NoRootError(
            "cutoff residual has no sign change in [1e-8, 1e4]",
            {"residual_lo": float(vals[0]), "residual_hi": float(vals[-1]),
             "bracket": (BRACKET_LO, hi)})

    i = int(idx[0])
    lo_b, hi_b = float(grid[i]), float(grid[i + 1])
    root, info = optimize.brentq(f, lo_b, hi_b, xtol=tol * lo_b, rtol=4 * np.finfo(float).eps,
                                 maxiter=200, full_output=True)
    residual = f(root)
    diagnostics = {"multiple_roots": bool(idx.size > 1), "sign_changes": int(idx.size),
                   "search_hi": hi}
    if idx.size > 1:
        diagnostics["other_brackets"] = [(float(grid[j]), float(grid[j + 1])) for j in idx[1:]]
    if abs(residual) >= RESIDUAL_TOL:
        raise NumericError("cutoff residual above tolerance after Brent",
                           {"gamma0": root, "residual": residual, **diagnostics})
    return CutoffSolution(gamma0=float(root), residual=float(residual),
                          iterations=int(info.iterations), bracket=(lo_b, hi_b),
                          diagnostics=diagnostics)


def log_quad(func, lo, hi, epsabs=1e-10, epsrel=1e-12, per_decade=2):
    """Adaptive quadrature over [lo, hi] split into log-spaced panels.

    Returns ``(value, abserr)``.  Panelling keeps QUADPACK accurate on the
    slowly decaying integrands that span many decades.
    """
    if not hi > lo > 0:
        raise DomainError("log_quad requires 0 < lo < hi")
    n = max(1, int(math.ceil(per_decade * math.log10(hi / lo))))
    edges = np.geomspace(lo, hi, n + 1)
    edges[0], edges[-1] = lo, hi
    total, err = [], 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(func, a, b, epsabs=epsabs / n, epsrel=epsrel, limit=200)
        total.append(v)
        err += e
    return math.fsum(total), err


def opra_quadrature(params, gamma_bar, gamma_max, gamma0=None):
    """Truncated OPRA integral ``int_{g0}^{gmax} log2(g/g0) f(g) dg``.

    ``f`` is the aggregated density; ``gamma0`` defaults to the solved cutoff.
    """
    _positive("gamma_bar", gamma_bar)
    diagnostics = {}
    if gamma0 is None:
        sol = solve_cutoff(params, gamma_bar)
        gamma0 = sol.gamma0
        diagnostics["cutoff"] = sol
    _positive("gamma0", gamma0)
    if not gamma_max > gamma0:
        raise DomainError(f"gamma_max={gamma_max!r} must exceed gamma0={gamma0!r}")
    b = b_aggregate(params)

    def integrand(g):
        return math.log(g / gamma0) * (b / g) * -math.expm1(-b * g / gamma_bar)

    value, err = log_quad(integrand, gamma0, gamma_max)
    diagnostics.update(gamma0=gamma0, abserr=err)
    return CapacityResult(Scheme.OPRA, value / LN2, Method.QUADRATURE, float(gamma_max), diagnostics)


GAMMA_MAX_MULTS = (1e2, 1e3, 1e4)


def opra_closed(params, gamma_bar, gamma0=None, gamma_max_mults=GAMMA_MAX_MULTS):
    """Published OPRA closed form.

    ``gamma0`` may be forced; otherwise :func:`solve_cutoff` supplies it.
    ``diagnostics["quadrature_gap"]`` maps each ``gamma_max / gamma_bar``
    multiplier to ``closed - quadrature``.  Pass ``gamma_max_mults=()`` to
    skip those evaluations.
    """
    _positive("gamma_bar", gamma_bar)
    diagnostics = {}
    if gamma0 is None:
        sol = solve_cutoff(params, gamma_bar)
        gamma0 = sol.gamma0
        diagnostics["cutoff"] = sol
    else:
        diagnostics["forced_gamma0"] = True
    _positive("gamma0", gamma0)
    b = b_aggregate(params)
    x = b * gamma0 / gamma_bar
    value = (b * math.log(gamma0) / LN2 * (math.log(x) + EULER_GAMMA)
             - b * b * gamma0 / (gamma_bar * LN2) * hyp3f3_unit(-x))
    diagnostics.update(gamma0=gamma0, negative=value < 0)
    gaps = {}
    for mult in gamma_max_mults:
        gmax = mult * gamma_bar
        if gmax > gamma0:
            gaps[mult] = value - opra_quadrature(params, gamma_bar, gmax, gamma0=gamma0).value
    if gaps:
        diagnostics["quadrature_gap"] = gaps
    return CapacityResult(Scheme.OPRA, value, Method.CLOSED_FORM, None, diagnostics)


def ora_quadrature(params, gamma_bar, gamma_max):
    """Truncated ORA integral ``int_{1e-12}^{gmax} log2(1+g) f(g) dg``."""
    _positive("gamma_bar", gamma_bar)
    _positive("gamma_max", gamma_max)
    if not gamma_max > ORA_LOWER:
        raise DomainError("gamma_max must exceed the 1e-12 lower limit")
    b = b_aggregate(params)

    def integrand(g):
        return math.log1p(g) * (b / g) * -math.expm1(-b * g / gamma_bar)

    value, err = log_quad(integrand, ORA_LOWER, gamma_max)
    return CapacityResult(Scheme.ORA, value / LN2, Method.QUADRATURE, float(gamma_max),
                          {"abserr": err, "lower_limit": ORA_LOWER})


def ora_series(params, gamma_bar, n_terms=50, gamma_max_mult=1e3):
    """Published ORA series ``sum_n B Gamma(-n) (-B/gamma_bar)**n / (n log 2)``.

    ``Gamma(-n)`` sits on a pole for every n >= 1, so the series never
    yields a number: the result has ``value = nan``, the divergence flag
    and the first pole index, plus the quadrature value at
    ``gamma_max_mult * gamma_bar`` as a usable replacement.
    """
    if int(n_terms) != n_terms or n_terms < 1:
        raise DomainError("n_terms must be a positive integer")
    _positive("gamma_bar", gamma_bar)
    b = b_aggregate(params)
    partial = []
    diagnostics = {"divergent": False}
    for n in range(1, int(n_terms) + 1):
        try:
            g = gamma_at(-n)
        except PoleError:
            diagnostics.update(divergent=True, pole_index=n)
            break
        partial.append(b * g / (n * LN2) * (-b / gamma_bar) ** n)
    replacement = ora_quadrature(params, gamma_bar, gamma_max_mult * gamma_bar)
    diagnostics["quadrature_replacement"] = replacement.value
    diagnostics["quadrature_gamma_max"] = replacement.gamma_max
    value = math.nan if diagnostics["divergent"] else math.fsum(partial)
    return CapacityResult(Scheme.ORA, value, Method.SERIES, None, diagnostics)


CIFR_PROBE_EPS = (1e-2, 1e-4, 1e-6)


def cifr(params, gamma_bar=10.0):
    """Channel inversion with fixed rate: zero for this channel.

    ``int (1/g) f(g) dg`` diverges at the origin because the aggregated
    density tends to the constant ``B**2 / gamma_bar`` there.  The
    diagnostics record ``int_eps^1 (1/g) f(g) dg`` for a few eps, which
    grows like ``log(1/eps)``.
    """
    _positive("gamma_bar", gamma_bar)
    b = b_aggregate(params)

    def integrand(g):
        return csnr_pdf(params, CsnrDensityForm.AGGREGATED, g, gamma_bar) / g

    probes = {eps: log_quad(integrand, eps, 1.0)[0] for eps in CIFR_PROBE_EPS}
    diagnostics = {
        "inverse_moment_divergent": True,
        "density_at_origin": b * b / gamma_bar,
        "inverse_moment_probes": probes,
        "gamma_bar": gamma_bar,
    }
    return CapacityResult(Scheme.CIFR, 0.0, Method.CLOSED_FORM, None, diagnostics)


def tifr_capacity(params, gamma0, gamma_bar):
    """Published TIFR outage capacity at a given cutoff.

    Points where the ``log2`` argument is not positive come back with
    ``value = nan`` and ``diagnostics["invalid"] = True`` rather than
    raising, so a maximiser can step over them.
    """
    _positive("gamma0", gamma0)
    _positive("gamma_bar", gamma_bar)
    b = b_aggregate(params)
    x = b * gamma0 / gamma_bar
    ei = expint_ei(-x)
    prefactor = 1.0 + b * ei - b * math.log(gamma0)
    denom = b * gamma_bar * math.exp(-x) + b * b * gamma0 * ei + b * gamma_bar
    arg = 1.0 - gamma0 * gamma_bar / denom
    p_out, p_diag = outage_probability(params, gamma0, gamma_bar, with_diagnostics=True)
    diagnostics = {
        "gamma0": gamma0,
        "prefactor": prefactor,
        "log_argument": arg,
        "outage_probability": p_out,
        "prefactor_outside_unit_interval": not 0.0 <= prefactor <= 1.0,
        "outage_outside_unit_interval": p_diag["outside_unit_interval"],
    }
    if not (arg > 0 and math.isfinite(arg)):
        diagnostics["invalid"] = True
        return CapacityResult(Scheme.TIFR, math.nan, Method.CLOSED_FORM, None, diagnostics)
    diagnostics["invalid"] = False
    return CapacityResult(Scheme.TIFR, prefactor * math.log2(arg), Method.CLOSED_FORM, None,
                          diagnostics)


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo, hi, rtol):
    """Golden-section maximisation of f on [lo, hi] in log(gamma0)."""
    a, b = math.log(lo), math.log(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    it = 0
    while b - a > rtol and it < 500:
        it += 1
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(math.exp(d))
    if fc >= fd:
        return math.exp(c), fc, it
    return math.exp(d), fd, it


def tifr_max(params, gamma_bar, n_grid=TIFR_GRID, rtol=1e-6):
    """Maximise :func:`tifr_capacity` over the cutoff.

    A 200-point log grid on [1e-3, 10 gamma_bar] is scanned, invalid
    points skipped, and the best cell refined by golden section until the
    relative bracket width is below ``rtol``.

    Returns
    -------
    (CutoffSolution, CapacityResult)
    """
    _positive("gamma_bar", gamma_bar)
    grid = np.geomspace(1e-3, 10.0 * gamma_bar, n_grid)
    values = np.array([tifr_capacity(params, float(g), gamma_bar).value for g in grid])
    valid = np.isfinite(values)
    if not valid.any():
        raise NoCapacityError("TIFR expression is invalid on the whole search grid",
                              {"grid_lo": float(grid[0]), "grid_hi": float(grid[-1]),
                               "b_aggregate": b_aggregate(params)})
    i = int(np.nanargmax(np.where(valid, values, -np.inf)))
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, n_grid - 1)])

    def f(g):
        v = tifr_capacity(params, g, gamma_bar).value
        return v if math.isfinite(v) else -math.inf

    g_best, v_best, iterations = _golden_max(f, lo, hi, rtol)
    if v_best < values[i]:
        g_best, v_best = float(grid[i]), float(values[i])
    result = tifr_capacity(params, g_best, gamma_bar)
    # A negative prefactor times log2 of an argument sliding to 0+ grows without bound.
    unbounded = result.diagnostics["prefactor"] < 0 and result.diagnostics["log_argument"] < 1e-3
    result.diagnostics.update(grid_max=float(values[i]), grid_valid_points=int(valid.sum()),
                              grid_argmax=float(grid[i]), supremum_unbounded=bool(unbounded))
    solution = CutoffSolution(gamma0=g_best, residual=cutoff_residual(params, g_best, gamma_bar),
                              iterations=iterations, bracket=(lo, hi),
                              diagnostics={"objective": "tifr"})
    return solution, result
