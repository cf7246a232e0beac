"""Monte Carlo ground truth drawn from the printed envelope density.

The envelope CDF is tabulated on a fine grid, renormalised, and inverted
with shape-preserving (PCHIP) interpolation.  Random numbers come from
Philox substreams keyed by ``(seed, chunk index)`` with a fixed chunk
size, so estimates do not depend on how many workers draw the chunks.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.interpolate import PchipInterpolator

from .capacity import Scheme
from .errors import DomainError, ModelError, NumericError
from .model import density_support, log_envelope_pdf

__all__ = [
    "EnvelopeSampler",
    "DegenerateSampler",
    "McEstimate",
    "build_sampler",
    "sample_envelope",
    "sample_csnr",
    "mc_capacity",
    "ks_statistic",
]

CHUNK = 1 << 18
NORMALIZATION_BOUNDS = (0.9, 1.1)
Z95 = 1.959963984540054

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class EnvelopeSampler:
    """Tabulated, renormalised envelope CDF ready for inversion."""

    params: object
    grid: np.ndarray
    cdf: np.ndarray
    normalization: float
    mean_square: float
    _inverse: PchipInterpolator = field(init=False, repr=False, compare=False)
    _forward: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        keep = np.concatenate([[True], np.diff(self.cdf) > 0])
        object.__setattr__(self, "_inverse", PchipInterpolator(self.cdf[keep], self.grid[keep]))
        object.__setattr__(self, "_forward", PchipInterpolator(self.grid, self.cdf))

    def ppf(self, u):
        """Envelope quantile for probabilities ``u`` in [0, 1]."""
        return self._inverse(np.clip(u, 0.0, 1.0))

    def cdf_at(self, alpha):
        """Tabulated CDF, monotone-interpolated, at envelope values."""
        a = np.clip(alpha, self.grid[0], self.grid[-1])
        return np.clip(self._forward(a), 0.0, 1.0)


@dataclass(frozen=True)
class DegenerateSampler:
    """Point mass at ``alpha``; the no-fading limit for testing estimators."""

    alpha: float
    params: object = None

    @property
    def mean_square(self):
        return self.alpha ** 2

    def ppf(self, u):
        return np.full(np.shape(u), self.alpha)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    half_width_95: float
    n: int
    seed: int
    diagnostics: dict = field(default_factory=dict, compare=False)


def build_sampler(params, n_grid=8192):
    """Tabulate and renormalise the envelope CDF.

    The grid spans [0, alpha_hi] where the density has dropped at least
    80 nats below its peak (tail mass far below 1e-10).  Each cell is
    integrated with 8-point Gauss-Legendre.

    Raises
    ------
    ModelError
        If the raw integral of the density lies outside [0.9, 1.1]; the
        raw value is in ``diagnostics["normalization"]``.
    """
    if n_grid < 4096:
        raise DomainError("the CDF table needs at least 4096 points")

    def logpdf(a):
        return log_envelope_pdf(params, a)

    alpha_hi, _, _ = density_support(logpdf)
    grid = np.linspace(0.0, alpha_hi, n_grid)
    left, width = grid[:-1], np.diff(grid)
    pts = left[:, None] + width[:, None] * (_GL_X[None, :] + 1) / 2
    lp = logpdf(pts.ravel()).reshape(pts.shape)
    scale = float(np.max(lp))
    if not math.isfinite(scale):
        raise ModelError("envelope density is not finite on its support",
                         {"normalization": math.inf})
    vals = np.exp(lp - scale)
    cell = width / 2 * (vals @ _GL_W)
    cell2 = width / 2 * ((vals * pts ** 2) @ _GL_W)
    total = math.fsum(cell)
    log_norm = scale + math.log(total)
    normalization = math.exp(log_norm) if log_norm < 709 else math.inf
    lo, hi = NORMALIZATION_BOUNDS
    if not lo <= normalization <= hi:
        raise ModelError(
            f"envelope density integrates to {normalization:.6g}, outside [{lo}, {hi}]",
            {"normalization": normalization, "log_normalization": log_norm})
    cdf = np.concatenate([[0.0], np.cumsum(cell)]) / total
    cdf[-1] = 1.0
    mean_square = math.fsum(cell2) / total
    grid.flags.writeable = False
    cdf.flags.writeable = False
    return EnvelopeSampler(params, grid, cdf, normalization, mean_square)


def _chunk_sizes(n):
    full, rest = divmod(int(n), CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def _uniforms(seed, chunk, size):
    key = (int(seed) & 0xFFFFFFFFFFFFFFFF) | (int(chunk) << 64)
    return np.random.Generator(np.random.Philox(key=key)).random(size)


def _map_ordered(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sample_envelope(sampler, n, seed, workers=1):
    """``n`` envelope draws by inverse transform, in chunk order."""
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    sizes = _chunk_sizes(n)
    parts = _map_ordered(lambda j: sampler.ppf(_uniforms(seed, j, sizes[j])),
                         list(range(len(sizes))), workers)
    return np.concatenate(parts)


def sample_csnr(sampler, gamma_bar, n, seed, workers=1):
    """CSNR draws ``gamma_bar * A**2 / E[A**2]``.

    ``E[A**2]`` is the sampler's own tabulated mean square, so the draws
    have mean ``gamma_bar`` exactly in expectation.
    """
    if not gamma_bar > 0:
        raise DomainError("gamma_bar must be positive")
    a = sample_envelope(sampler, n, seed, workers)
    return gamma_bar * (a * a) / sampler.mean_square


def ks_statistic(sampler, samples):
    """Kolmogorov-Smirnov distance between samples and the tabulated CDF."""
    x = np.sort(np.asarray(samples))
    n = x.size
    f = sampler.cdf_at(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def _mean_hw(contrib):
    n = contrib.size
    mean = float(np.mean(contrib))
    hw = Z95 * float(np.std(contrib, ddof=1)) / math.sqrt(n) if n > 1 else math.inf
    return mean, hw


def _empirical_cutoff(sorted_g, suffix_inv):
    """Root of mean[(1/g0 - 1/g) 1{g >= g0}] = 1 by bisection in log(g0)."""
    n = sorted_g.size

    def h(g0):
        k = int(np.searchsorted(sorted_g, g0, side="left"))
        return ((n - k) / g0 - suffix_inv[k]) / n - 1.0

    lo, hi = sorted_g[0] * 1e-6, sorted_g[-1]
    if not (h(lo) > 0 and h(hi) < 0):
        raise NumericError("empirical water-filling constraint has no root",
                           {"h_lo": h(lo), "h_hi": h(hi)})
    it = 0
    while hi / lo - 1 > 1e-14 and it < 400:
        mid = math.sqrt(lo * hi)
        if h(mid) > 0:
            lo = mid
        else:
            hi = mid
        it += 1
    return math.sqrt(lo * hi), it


def mc_capacity(sampler, gamma_bar, scheme, n, seed, workers=1, n_grid=200):
    """Monte Carlo capacity in bits/sec/Hz from sampled CSNR.

    OPRA solves the empirical water-filling cutoff first; ORA averages
    ``log2(1 + g)``; TIFR maximises
    ``(1 - P_out(g0)) log2(1 + 1 / E[1/g; g >= g0])`` over a log grid of
    cutoffs on [1e-3, 10 gamma_bar].  Half-widths are normal-theory 95%
    intervals (delta method for TIFR) at the chosen cutoff.
    """
    scheme = Scheme(scheme)
    if scheme is Scheme.CIFR:
        raise DomainError("Monte Carlo estimation covers OPRA, ORA and TIFR only")
    g = sample_csnr(sampler, gamma_bar, n, seed, workers)
    diagnostics = {}
    if scheme is Scheme.ORA:
        mean, hw = _mean_hw(np.log2(1.0 + g))
    elif scheme is Scheme.OPRA:
        gs = np.sort(g)
        suffix_inv = np.concatenate([np.cumsum((1.0 / gs)[::-1])[::-1], [0.0]])
        g0, iters = _empirical_cutoff(gs, suffix_inv)
        contrib = np.where(g >= g0, np.log2(np.maximum(g, g0) / g0), 0.0)
        mean, hw = _mean_hw(contrib)
        diagnostics.update(gamma0=g0, bisection_iterations=iters)
    else:
        gs = np.sort(g)
        inv = 1.0 / gs
        suffix_inv = np.concatenate([np.cumsum(inv[::-1])[::-1], [0.0]])
        cut = np.geomspace(1e-3, 10.0 * gamma_bar, n_grid)
        k = np.searchsorted(gs, cut, side="left")
        keep = (gs.size - k) / gs.size
        m = suffix_inv[k] / gs.size
        with np.errstate(divide="ignore"):
            cap = np.where(m > 0, keep * np.log2(1.0 + 1.0 / np.where(m > 0, m, 1.0)), 0.0)
        i = int(np.argmax(cap))
        g0 = float(cut[i])
        x = (g >= g0).astype(float)
        y = np.where(g >= g0, 1.0 / g, 0.0)
        mx, my = float(x.mean()), float(y.mean())
        mean = float(cap[i])
        if my > 0 and g.size > 1:
            grad = np.array([math.log2(1.0 + 1.0 / my), -mx / (math.log(2.0) * my * (my + 1.0))])
            cov = np.cov(np.vstack([x, y]))
            hw = Z95 * math.sqrt(max(float(grad @ cov @ grad), 0.0) / g.size)
        else:
            hw = math.inf
        diagnostics.update(gamma0=g0, outage_probability=1.0 - mx)
    return McEstimate(mean=mean, half_width_95=hw, n=int(n), seed=int(seed), diagnostics=diagnostics)
