"""Reliability distributions and expected order statistics.

A :class:`ReliabilityDist` describes the folded magnitude ``|L|`` of a
channel LLR (or ``|y|`` of the received signal) conditioned on a transmitted
zero, which by output symmetry is also the unconditional distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import legendre
from scipy import fft, integrate
from scipy.special import erfc, gammaln

from .channels import (
    Awgn,
    ChannelModel,
    GaussianMixture,
    RayleighCsi,
    RayleighNcsi,
    cdf_given_bit,
    llr,
    noise_pdf_given_bit,
)

MODES = ("grand", "posd", "osd")
TAIL_MASS = 1e-12
_GL_ORDER = 20
_GL_X, _GL_W = legendre.leggauss(_GL_ORDER)


class QuadratureError(RuntimeError):
    def __init__(self, message: str, achieved: float = float("nan")):
        super().__init__(f"{message} (achieved error {achieved:.3g})")
        self.achieved = achieved


@dataclass(frozen=True, eq=False)
class ReliabilityDist:
    """Evaluable pdf/cdf pair on ``[0, l_max]``.

    ``sf`` is an optional accurate survival function; ``1 - cdf`` is used
    when it is missing.
    """

    pdf: Callable
    cdf: Callable
    l_max: float
    sf: Optional[Callable] = None
    name: str = ""

    def survival(self, x) -> np.ndarray:
        if self.sf is not None:
            return self.sf(x)
        return 1.0 - self.cdf(x)


@dataclass(frozen=True, eq=False)
class OrderStatsProfile:
    """Expected sorted reliabilities, ascending, for one decoder mode."""

    mode: str
    sample_size: int
    positions: int
    expected: np.ndarray
    ranks: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.expected, dtype=float)
        if e.shape != (self.positions,):
            raise ValueError("expected must have one entry per position")
        if np.any(e < 0):
            raise ValueError("expected reliabilities must be non-negative")
        if np.any(np.diff(e) < 0):
            raise ValueError("expected reliabilities must be non-decreasing")
        e.setflags(write=False)
        object.__setattr__(self, "expected", e)


# -- numerical building blocks ----------------------------------------------


def gauss_legendre_grid(a: float, b: float, panels: int):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``."""
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_X).ravel()
    w = (half[:, None] * _GL_W).ravel()
    return x, w


def _find_l_max(pdf: Callable, start: float) -> float:
    """Double ``start`` until the mass beyond it is below ``TAIL_MASS``."""
    l_max = max(start, 1e-3)
    for _ in range(60):
        x, w = gauss_legendre_grid(l_max, 8.0 * l_max, 64)
        tail = float(np.sum(w * pdf(x)))
        if tail < TAIL_MASS:
            return l_max
        l_max *= 2.0
    raise QuadratureError("could not bound the distribution tail", tail)


class _PiecewiseCumulative:
    """Running integral of a smooth function via piecewise Chebyshev series.

    Panels are split until the trailing Chebyshev coefficients fall below
    ``tol`` relative to the function's peak.
    """

    def __init__(self, f: Callable, a: float, b: float, deg: int = 24, tol: float = 1e-14,
                 max_panels: int = 1 << 14):
        self.deg = deg
        theta = np.pi * (np.arange(deg) + 0.5) / deg
        self._t = np.cos(theta)
        edges = list(np.linspace(a, b, 33))
        scale = None
        while True:
            lo = np.array(edges[:-1])
            hi = np.array(edges[1:])
            coef = self._coefficients(f, lo, hi)
            if scale is None:
                scale = max(np.max(np.abs(coef[:, 0])), 1e-300)
            tail = np.max(np.abs(coef[:, -3:]), axis=1)
            bad = tail > tol * scale
            if not bad.any():
                break
            if len(edges) - 1 >= max_panels:
                raise QuadratureError("piecewise interpolation did not converge", float(tail.max()))
            new_edges = [edges[0]]
            for i in range(len(lo)):
                if bad[i]:
                    new_edges.append(0.5 * (lo[i] + hi[i]))
                new_edges.append(hi[i])
            edges = new_edges
        self.edges = np.array(edges)
        self.coef = coef
        half = 0.5 * (hi - lo)
        icoef = np.polynomial.chebyshev.chebint(coef, m=1, lbnd=-1, scl=1.0, axis=1) * half[:, None]
        self.icoef = icoef
        panel_mass = self._clenshaw(icoef, np.ones(len(lo)))
        self.offsets = np.concatenate([[0.0], np.cumsum(panel_mass)[:-1]])
        self.total = float(np.sum(panel_mass))

    def _coefficients(self, f, lo, hi):
        x = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * self._t
        vals = f(x.ravel()).reshape(x.shape)
        c = fft.dct(vals, type=2, axis=1) / self.deg
        c[:, 0] *= 0.5
        return c

    @staticmethod
    def _clenshaw(coef, t):
        b1 = np.zeros_like(t)
        b2 = np.zeros_like(t)
        for j in range(coef.shape[1] - 1, 0, -1):
            b1, b2 = 2.0 * t * b1 - b2 + coef[:, j], b1
        return t * b1 - b2 + coef[:, 0]

    def _locate(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.edges[0], self.edges[-1])
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.edges) - 2)
        lo, hi = self.edges[idx], self.edges[idx + 1]
        t = (2.0 * x - lo - hi) / (hi - lo)
        return idx, t

    def integral(self, x) -> np.ndarray:
        shape = np.shape(x)
        idx, t = self._locate(np.ravel(x))
        out = self.offsets[idx] + self._clenshaw(self.icoef[idx], t)
        return out.reshape(shape)

    def value(self, x) -> np.ndarray:
        shape = np.shape(x)
        idx, t = self._locate(np.ravel(x))
        return self._clenshaw(self.coef[idx], t).reshape(shape)


def _dist_from_pdf(pdf: Callable, start: float, name: str) -> ReliabilityDist:
    l_max = _find_l_max(pdf, start)
    cum = _PiecewiseCumulative(pdf, 0.0, l_max)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0, 0.0, np.minimum(cum.integral(x), 1.0))

    def sf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0, 1.0, np.maximum(1.0 - cum.integral(x), 0.0))

    return ReliabilityDist(pdf=pdf, cdf=cdf, sf=sf, l_max=l_max, name=name)


# -- per-channel reliability distributions -----------------------------------


def awgn_reliability(sigma: float) -> ReliabilityDist:
    """Folded AWGN LLR: ``|L|`` with ``L ~ N(2/sigma^2, 4/sigma^2)``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    mean = 2.0 / sigma**2
    var2 = 8.0 / sigma**2  # twice the LLR variance
    norm = 1.0 / math.sqrt(math.pi * var2)
    root = math.sqrt(var2)

    def pdf(x):
        x = np.asarray(x, dtype=float)
        out = norm * (np.exp(-((x - mean) ** 2) / var2) + np.exp(-((x + mean) ** 2) / var2))
        return np.where(x < 0, 0.0, out)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        out = 0.5 * (erfc((mean - x) / root) - erfc((mean + x) / root))
        return np.where(x < 0, 0.0, out)

    def sf(x):
        x = np.asarray(x, dtype=float)
        out = 0.5 * (erfc((x - mean) / root) + erfc((x + mean) / root))
        return np.where(x < 0, 1.0, out)

    l_max = mean + 10.0 * root / math.sqrt(2.0)
    return ReliabilityDist(pdf=pdf, cdf=cdf, sf=sf, l_max=l_max, name=f"awgn(sigma={sigma:g})")


def _csi_inner(l: np.ndarray, sigma: float, h_max: float = 8.0) -> np.ndarray:
    """Scaled fading integral over h for the CSI LLR density.

    Returns ``I(l) * exp(2*sqrt(a*b))`` with
    ``I(l) = int_0^h_max exp(-a h^2 - b / h^2) dh``,
    ``a = 1 + 1/(2 sigma^2)`` and ``b = sigma^2 l^2 / 8``.  The scaling keeps
    the integrand peak at one so absolute tolerances stay meaningful.
    """
    a = 1.0 + 0.5 / sigma**2
    b = sigma**2 * l**2 / 8.0
    shift = 2.0 * np.sqrt(a * b)

    def integrand(h):
        with np.errstate(divide="ignore", over="ignore"):
            return np.exp(-a * h * h - b / (h * h) + shift) if h > 0 else np.zeros_like(l)

    res, err, info = integrate.quad_vec(
        integrand, 0.0, h_max, epsabs=1e-13, epsrel=1e-11, norm="max", limit=4000, full_output=True
    )
    if not info.success:
        raise QuadratureError("fading integral did not converge", float(err))
    return res


def rayleigh_csi_reliability(sigma: float) -> ReliabilityDist:
    """|L| for ``L = 2 y h / sigma^2`` with known Rayleigh gains.

    The density conditioned on a transmitted zero is integrated over the
    fading gain; folding adds the mirrored term.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    a = 1.0 + 0.5 / sigma**2
    pref = sigma / math.sqrt(2.0 * math.pi)

    def pdf(x):
        x = np.asarray(x, dtype=float)
        shape = x.shape
        xf = np.abs(x.ravel())
        inner = _csi_inner(xf, sigma)
        shift = 2.0 * np.sqrt(a * sigma**2 * xf**2 / 8.0)
        # f(l|0) + f(-l|0): exp(+-l/2) factors around the common integral.
        out = pref * inner * (np.exp(0.5 * xf - shift) + np.exp(-0.5 * xf - shift))
        return np.where(x.ravel() < 0, 0.0, out).reshape(shape)

    r = math.sqrt(2.0 * sigma**2 + 1.0)
    return _dist_from_pdf(pdf, 2.0 / (r - 1.0), f"rayleigh_csi(sigma={sigma:g})")


def ncsi_llr_pdf(l, sigma: float, mean_h: float = 0.8862) -> np.ndarray:
    """Density of ``L = 2 y E[h] / sigma^2`` given a transmitted zero."""
    l = np.asarray(l, dtype=float)
    d = math.sqrt(sigma**2 / (2.0 * sigma**2 + 1.0))
    q = 0.5 * erfc((-d * l / (2.0 * mean_h)) / math.sqrt(2.0))
    return (
        sigma * d**2 / (2.0 * mean_h)
        * np.exp(-(d**2) * sigma**2 * l**2 / (4.0 * mean_h**2))
        * (math.sqrt(2.0 / math.pi) * np.exp(-(d**2) * l**2 / (8.0 * mean_h**2)) + d * l / mean_h * q)
    )


def rayleigh_ncsi_reliability(sigma: float, mean_h: float = 0.8862) -> ReliabilityDist:
    if not sigma > 0:
        raise ValueError("sigma must be positive")

    def pdf(x):
        x = np.asarray(x, dtype=float)
        out = ncsi_llr_pdf(x, sigma, mean_h) + ncsi_llr_pdf(-x, sigma, mean_h)
        return np.where(x < 0, 0.0, out)

    return _dist_from_pdf(pdf, 4.0 * mean_h / sigma**2, f"rayleigh_ncsi(sigma={sigma:g})")


def reliability_for(model: ChannelModel) -> ReliabilityDist:
    if isinstance(model, Awgn):
        return awgn_reliability(model.sigma)
    if isinstance(model, RayleighCsi):
        return rayleigh_csi_reliability(model.sigma)
    if isinstance(model, RayleighNcsi):
        return rayleigh_ncsi_reliability(model.sigma, model.mean_h)
    raise TypeError(f"no closed-form LLR distribution for {type(model).__name__}; "
                    "use expected_profile_from_signal")


def signal_magnitude_dist(model: ChannelModel) -> ReliabilityDist:
    """Distribution of ``|y|`` given a transmitted zero (AWGN or mixture)."""
    if not isinstance(model, (Awgn, GaussianMixture)):
        raise TypeError(f"received-signal path not available for {type(model).__name__}")

    def pdf(x):
        x = np.asarray(x, dtype=float)
        out = noise_pdf_given_bit(model, x, 0) + noise_pdf_given_bit(model, -x, 0)
        return np.where(x < 0, 0.0, out)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        out = cdf_given_bit(model, x, 0) - cdf_given_bit(model, -x, 0)
        return np.where(x < 0, 0.0, out)

    def sf(x):
        x = np.asarray(x, dtype=float)
        # P(y > x) + P(y < -x), using the mirrored bit for the upper tail.
        out = cdf_given_bit(model, -x, 1) + cdf_given_bit(model, -x, 0)
        return np.where(x < 0, 1.0, out)

    l_max = _find_l_max(pdf, 2.0)
    return ReliabilityDist(pdf=pdf, cdf=cdf, sf=sf, l_max=l_max, name=f"|y| {model!r}")


# -- order statistics ----------------------------------------------------------


def _log_order_coef(N: int, ranks) -> np.ndarray:
    ranks = np.asarray(ranks, dtype=float)
    return gammaln(N + 1.0) - gammaln(ranks) - gammaln(N - ranks + 1.0)


def _order_log_pdf(pdf_vals, cdf_vals, sf_vals, N: int, ranks) -> np.ndarray:
    ranks = np.atleast_1d(np.asarray(ranks, dtype=float))
    r = ranks[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        lf, lF, lS = np.log(pdf_vals), np.log(cdf_vals), np.log(sf_vals)
        # 0 * log(0) terms are exactly zero.
        a = np.where(r - 1.0 == 0, 0.0, (r - 1.0) * lF)
        b = np.where(N - r == 0, 0.0, (N - r) * lS)
    return _log_order_coef(N, ranks)[:, None] + a + b + lf


def order_stat_pdf(dist: ReliabilityDist, N: int, i: int) -> Callable:
    """Density of the i-th smallest of N i.i.d. draws from ``dist`` (1-based)."""
    if not 1 <= i <= N:
        raise ValueError(f"rank {i} outside [1, {N}]")

    def f(x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        lp = _order_log_pdf(dist.pdf(flat), dist.cdf(flat), dist.survival(flat), N, [i])[0]
        return np.exp(lp).reshape(x.shape)

    return f


def mode_ranks(n: int, k: int, mode: str) -> tuple[int, np.ndarray]:
    """Sample size and 1-based ranks profiled by each decoder mode."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    if mode == "grand":
        return n, np.arange(1, n + 1)
    if mode == "posd":
        return k, np.arange(1, k + 1)
    if mode == "osd":
        return n, np.arange(n - k + 1, n + 1)
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def order_stat_moments(dist: ReliabilityDist, N: int, ranks, panels: int = 256,
                       max_panels: int = 1 << 14, rtol: float = 1e-10):
    """Return ``(expectations, normalizations)`` for the given ranks.

    Composite Gauss-Legendre on ``[0, l_max]``; the panel count doubles until
    two successive estimates agree to ``rtol``.
    """
    ranks = np.asarray(ranks)
    prev = None
    while panels <= max_panels:
        x, w = gauss_legendre_grid(0.0, dist.l_max, panels)
        dens = np.exp(_order_log_pdf(dist.pdf(x), dist.cdf(x), dist.survival(x), N, ranks))
        norm = dens @ w
        mean = dens @ (w * x)
        if prev is not None:
            err = float(np.max(np.abs(mean - prev) / np.maximum(1.0, np.abs(mean))))
            if err < rtol and np.max(np.abs(norm - 1.0)) < 1e-8:
                return mean, norm
        prev = mean
        panels *= 2
    raise QuadratureError("order-statistic expectations did not converge",
                          float(np.max(np.abs(norm - 1.0))))


def expected_profile(dist: ReliabilityDist, n: int, k: int, mode: str) -> OrderStatsProfile:
    """Expected ascending reliabilities seen by a GRAND, POSD or OSD decoder."""
    N, ranks = mode_ranks(n, k, mode)
    mean, _ = order_stat_moments(dist, N, ranks)
    # Quadrature noise can break ties between nearly equal neighbours.
    mean = np.maximum.accumulate(mean)
    return OrderStatsProfile(mode=mode, sample_size=N, positions=len(ranks), expected=mean, ranks=ranks)


def expected_profile_from_signal(model: ChannelModel, n: int, k: int, mode: str) -> OrderStatsProfile:
    """Expected reliabilities via order statistics of the received signal.

    Sorts ``|y|``, takes the expected value at each rank, maps it through the
    channel LLR and sorts the resulting magnitudes.  Useful when the LLR is
    a non-invertible function of ``y``.
    """
    dist = signal_magnitude_dist(model)
    N, ranks = mode_ranks(n, k, mode)
    mean_y, _ = order_stat_moments(dist, N, ranks)
    rel = np.sort(np.abs(llr(model, mean_y)))
    return OrderStatsProfile(mode=mode, sample_size=N, positions=len(ranks), expected=rel, ranks=ranks)


def sample_sorted_reliabilities(model: ChannelModel, n: int, k: int, mode: str, frames: int,
                                rng: np.random.Generator, batch: int = 10_000) -> np.ndarray:
    """Monte-Carlo mean of the sorted reliabilities a decoder mode sees.

    Transmits the all-zero word; by symmetry this matches any codeword.
    """
    from .channels import bpsk_modulate, transmit

    N, ranks = mode_ranks(n, k, mode)
    total = np.zeros(len(ranks))
    done = 0
    while done < frames:
        b = min(batch, frames - done)
        x = bpsk_modulate(np.zeros((b, N), dtype=np.uint8))
        y, h = transmit(model, x, rng)
        rel = np.sort(np.abs(llr(model, y, h)), axis=1)
        total += rel[:, ranks - 1].sum(axis=0)
        done += b
    return total / frames
