"""Special functions and quadrature rules used by the JFTS formulas.

Gauss-Hermite rules, the exponential integral and the unit-parameter
``3F3(1,1,1;2,2,2;z)`` are computed here directly.  The Bessel functions
and the Gamma function are thin guarded wrappers around
:mod:`scipy.special`.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import special

from .errors import DomainError, PoleError, RangeError

__all__ = [
    "EULER_GAMMA",
    "QuadratureRule",
    "gauss_hermite",
    "bessel_i0",
    "bessel_i0e",
    "bessel_kv",
    "expint_ei",
    "expint_e1",
    "hyp3f3_unit",
    "gamma_at",
]

EULER_GAMMA = 0.57721566490153286060651209008240243

MAX_HERMITE_ORDER = 64
I0_GUARD = 700.0
HYP3F3_GUARD = 500.0


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for the weight ``exp(-x**2)`` on the real line."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, func):
        """Approximate ``int exp(-x**2) func(x) dx``."""
        return float(np.sum(self.weights * func(self.nodes)))


def _hermite_pair(x, m):
    """Orthonormal Hermite values (h_m(x), h_{m-1}(x)).

    h_n = H_n / sqrt(2**n n! sqrt(pi)); the scaling keeps m = 64 in range.
    """
    h_prev = np.zeros_like(x)
    h = np.full_like(x, np.pi ** -0.25)
    for n in range(m):
        h_next = np.sqrt(np.longdouble(2) / (n + 1)) * x * h \
            - np.sqrt(np.longdouble(n) / (n + 1)) * h_prev
        h_prev, h = h, h_next
    return h, h_prev


@lru_cache(maxsize=None)
def gauss_hermite(order=20):
    """Nodes and weights of the ``order``-point Gauss-Hermite rule.

    Initial guesses are the eigenvalues of the symmetric Jacobi matrix
    (Golub-Welsch); each is then polished by Newton steps on the
    three-term recurrence in extended precision.  Weights follow
    ``2**(m-1) m! sqrt(pi) / (m**2 H_{m-1}(r)**2)``, evaluated through the
    orthonormal recurrence as ``1 / (m h_{m-1}(r)**2)``.

    Parameters
    ----------
    order : int
        Number of nodes, 1 <= order <= 64.

    Returns
    -------
    QuadratureRule
    """
    if isinstance(order, bool) or int(order) != order:
        raise DomainError(f"quadrature order must be an integer, got {order!r}")
    m = int(order)
    if not 1 <= m <= MAX_HERMITE_ORDER:
        raise DomainError(f"quadrature order must lie in [1, {MAX_HERMITE_ORDER}], got {m}")

    off = np.sqrt(np.arange(1, m) / 2.0)
    guess = np.linalg.eigvalsh(np.diag(off, 1) + np.diag(off, -1))
    x = guess.astype(np.longdouble)
    for _ in range(100):
        h_m, h_m1 = _hermite_pair(x, m)
        step = h_m / (np.sqrt(np.longdouble(2 * m)) * h_m1)
        x = x - step
        if np.all(np.abs(step) <= 1e-18 * np.maximum(1, np.abs(x))):
            break
    _, h_m1 = _hermite_pair(x, m)
    weights = 1 / (m * h_m1 * h_m1)

    # Exact symmetry; the middle node of an odd rule is exactly zero.
    x = np.sort(x)
    x = (x - x[::-1]) / 2
    weights = (weights + weights[::-1]) / 2
    nodes = np.asarray(x, dtype=float)
    weights = np.asarray(weights, dtype=float)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(order=m, nodes=nodes, weights=weights)


def bessel_i0(x):
    """Modified Bessel function of the first kind, order zero."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > I0_GUARD):
        raise RangeError(f"|x| > {I0_GUARD} overflows I0")
    # iv(0, .) rather than i0: the Chebyshev i0 dips below 1 near x = 0.
    # iv returns nan for subnormal x, where I0 is 1 to double precision anyway.
    small = np.abs(x) < 1e-8
    out = np.where(small, 1.0, special.iv(0, np.where(small, 1.0, x)))
    return float(out) if out.ndim == 0 else out


def bessel_i0e(x):
    """Exponentially scaled ``exp(-|x|) I0(x)``; no range guard needed."""
    out = special.i0e(np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


def bessel_kv(nu, x):
    """Modified Bessel function of the second kind ``K_nu(x)`` for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("K_nu(x) requires x > 0")
    # kv underflows early for large x; the scaled form keeps values down to ~1e-308.
    out = special.kve(nu, x) * np.exp(-x)
    return float(out) if np.ndim(out) == 0 else out


def gamma_at(x):
    """Euler Gamma function; raises :class:`PoleError` at 0, -1, -2, ..."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise PoleError(f"Gamma has a pole at {x:g}")
    return float(special.gamma(x))


# --- exponential integrals -------------------------------------------------

_E1_SERIES_TERMS = 30


def _e1_array(z):
    """E1(z) for an array of z > 0 (series for z <= 1, Lentz CF above)."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z <= 1.0

    zs = z[small]
    if zs.size:
        acc = np.zeros_like(zs)
        term = np.ones_like(zs)
        for k in range(1, _E1_SERIES_TERMS):
            term = term * (-zs) / k
            acc += term / k
        out[small] = -EULER_GAMMA - np.log(zs) - acc

    zl = z[~small]
    if zl.size:
        tiny = 1e-300
        b = zl + 1.0
        c = np.full_like(zl, 1.0 / tiny)
        d = 1.0 / b
        h = d.copy()
        live = np.ones(zl.shape, dtype=bool)
        for i in range(1, 1000):
            an = -float(i * i)
            b = b + 2.0
            d = 1.0 / (an * d + b)
            c = b + an / c
            delta = c * d
            # Converged entries are frozen so a value never depends on its batch.
            h = np.where(live, h * delta, h)
            live &= np.abs(delta - 1.0) >= 1e-16
            if not live.any():
                break
        out[~small] = h * np.exp(-zl)
    return out


def _ei_positive(x):
    """Ei(x) for an array of x > 0."""
    out = np.empty_like(x)
    mid = x <= 40.0
    xm = x[mid]
    if xm.size:
        term = np.ones_like(xm)
        acc = np.zeros_like(xm)
        live = np.ones(xm.shape, dtype=bool)
        for k in range(1, 200):
            term = term * xm / k
            inc = term / k
            acc = np.where(live, acc + inc, acc)
            live &= inc > 1e-17 * acc
            if not live.any():
                break
        out[mid] = EULER_GAMMA + np.log(xm) + acc
    xl = x[~mid]
    if xl.size:
        # Asymptotic series, truncated well before its smallest term.
        term = np.ones_like(xl)
        acc = np.ones_like(xl)
        for k in range(1, 40):
            term = term * k / xl
            acc += term
        out[~mid] = np.exp(xl) / xl * acc
    return out


def expint_e1(z):
    """Exponential integral ``E1(z) = int_z^inf exp(-t)/t dt`` for z > 0."""
    arr = np.asarray(z, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("E1(z) requires z > 0")
    out = _e1_array(np.atleast_1d(arr)).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def expint_ei(x):
    """Principal-value exponential integral Ei(x).

    For x < 0 this is ``-E1(-x)``; every capacity formula calls it there.
    """
    arr = np.asarray(x, dtype=float)
    flat = np.atleast_1d(arr).ravel()
    if np.any(flat == 0):
        raise PoleError("Ei has a logarithmic pole at 0")
    if np.any(np.isnan(flat)):
        raise DomainError("Ei(nan) is undefined")
    if np.any(flat > 709.0):
        raise RangeError("Ei(x) overflows for x > 709")
    out = np.empty_like(flat)
    neg = flat < 0
    if np.any(neg):
        out[neg] = -_e1_array(-flat[neg])
    if np.any(~neg):
        out[~neg] = _ei_positive(flat[~neg])
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


# --- 3F3(1,1,1;2,2,2;z) ----------------------------------------------------

def _hyp3f3_series(z):
    # term_n = z**n / (n! (n+1)**3); ratio term_{n+1}/term_n = z (n+1)**2 / (n+2)**3
    terms = [1.0]
    t = 1.0
    partial = 1.0
    n = 0
    while True:
        t *= z * (n + 1) ** 2 / (n + 2) ** 3
        n += 1
        terms.append(t)
        partial += t
        if n > 8 and abs(t) <= 1e-17 * abs(partial):
            break
        if n > 5000:  # unreachable inside the guard
            break
    return math.fsum(terms)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_E1_TAIL_END = 60


@lru_cache(maxsize=1)
def _e1_over_s_panels():
    """Cumulative int_1^k E1(s)/s ds for k = 1..60 (unit panels)."""
    vals = [0.0]
    for k in range(1, _E1_TAIL_END):
        s = k + 0.5 + 0.5 * _GL_X
        vals.append(0.5 * float(np.dot(_GL_W, _e1_array(s) / s)))
    return np.cumsum(vals)


def _int_e1_over_s(x):
    """int_1^x E1(s)/s ds for x >= 1, truncated at s = 60 (tail < 1e-28)."""
    if x >= _E1_TAIL_END:
        return float(_e1_over_s_panels()[-1])
    k = int(math.floor(x))
    head = float(_e1_over_s_panels()[k - 1])
    if x == k:
        return head
    half = 0.5 * (x - k)
    s = k + half + half * _GL_X
    return head + half * float(np.dot(_GL_W, _e1_array(s) / s))


# int_0^1 Ein(s)/s ds = sum_{k>=1} (-1)**(k+1) / (k**2 k!)
_EIN_OVER_S_01 = math.fsum((-1) ** (k + 1) / (k * k * math.factorial(k)) for k in range(1, 25))


def hyp3f3_unit(z):
    """Generalized hypergeometric ``3F3(1,1,1;2,2,2;z)``.

    The series ``sum z**n / (n! (n+1)**3)`` is summed with compensated
    accumulation for z >= -2.  For z = -x < -2 the alternating series
    cancels catastrophically, so the identity
    ``x F(-x) = int_0^x Ein(s)/s ds`` is used instead, split as
    ``C + log(x)**2/2 + gamma*log(x) + int_1^x E1(s)/s ds``.

    Parameters
    ----------
    z : float
        Argument with ``|z| <= 500``.
    """
    z = float(z)
    if math.isnan(z):
        raise DomainError("3F3(nan) is undefined")
    if abs(z) > HYP3F3_GUARD:
        raise RangeError(f"|z| > {HYP3F3_GUARD} is outside the guarded range")
    if z >= -2.0:
        return _hyp3f3_series(z)
    x = -z
    lx = math.log(x)
    total = math.fsum([_EIN_OVER_S_01, 0.5 * lx * lx, EULER_GAMMA * lx, _int_e1_over_s(x)])
    return total / x
