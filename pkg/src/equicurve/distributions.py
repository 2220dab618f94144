"""Log-space densities and CDFs for the distributions used throughout.

Four families are supported: Normal, noncentral t, a scaled noncentral
chi-square with one degree of freedom, and the noncentral F. Noncentral
log-densities are computed by explicit log-space series so they stay finite
and relatively accurate far into the tails, where naive ``log(pdf(x))``
underflows to ``-inf``:

* noncentral chi-square and noncentral F: Poisson mixtures over central
  densities, truncated when the Poisson tail mass drops below ``1e-14``;
* noncentral t: a power series in ``sqrt(2)*x*ncp/sqrt(df + x^2)`` whose
  terms are all positive when ``x*ncp >= 0``.  When ``x*ncp`` is negative
  enough that the alternating series would cancel, the density is instead
  integrated in log space over its normal scale-mixture representation
  (fixed Gauss-Legendre panels around the analytic mode of the integrand).

Negative noncentrality for the t is handled by reflection:
``pdf(x; -ncp) == pdf(-x; ncp)``.

CDFs delegate to scipy, which is plenty for sanity checks and stopping
analytics; only the log-densities need the bespoke treatment.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import stats
from scipy.special import betaln, gammaln, logsumexp, ndtr

from .errors import DomainError, ParameterError

__all__ = [
    "Normal",
    "NoncentralT",
    "ScaledNoncentralChiSq1",
    "NoncentralF",
    "log_pdf",
    "cdf",
]

_LOG_2PI = math.log(2.0 * math.pi)
# Poisson mixture terms are dropped once the two-sided tail mass is below this.
_POISSON_TAIL = 1e-14
# Below this value of the series variable the alternating t series cancels;
# switch to the scale-mixture quadrature.
_T_SERIES_SWITCH = -0.5


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    return value


def _as_array(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("evaluation points must be finite")
    return arr


def _scalar_ok(x, out: np.ndarray):
    return np.asarray(out).reshape(-1)[0].item() if np.ndim(x) == 0 else out


@lru_cache(maxsize=16)
def _leggauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def _poisson_k_window(lam: float, y_max: float) -> np.ndarray:
    """Index window for a Poisson(lam) mixture evaluated up to argument y_max.

    The window covers all k with two-sided Poisson tail mass above
    ``_POISSON_TAIL`` and is widened toward the term-wise peak
    ``k* ~ sqrt(lam * y)/2`` so the largest mixture terms are never clipped
    at extreme arguments.
    """
    if lam <= 0.0:
        return np.arange(1)
    lo = int(stats.poisson.ppf(_POISSON_TAIL / 2.0, lam))
    hi = int(stats.poisson.isf(_POISSON_TAIL / 2.0, lam))
    k_peak = 0.5 * math.sqrt(lam * max(y_max, 0.0))
    hi = max(hi, int(k_peak + 12.0 * math.sqrt(k_peak + 1.0) + 20))
    lo = max(0, lo - 2)
    return np.arange(lo, hi + 3)


def _chi2_log_pdf(y: np.ndarray, df: np.ndarray) -> np.ndarray:
    return (0.5 * df - 1.0) * np.log(y) - 0.5 * y - 0.5 * df * math.log(2.0) - gammaln(0.5 * df)


def _ncx2_log_pdf(y: np.ndarray, df: float, nc: float) -> np.ndarray:
    """Noncentral chi-square log-density via the Poisson mixture of centrals."""
    if nc == 0.0:
        return _chi2_log_pdf(y, np.asarray(df))
    k = _poisson_k_window(0.5 * nc, float(np.max(y)))
    log_w = k * math.log(0.5 * nc) - 0.5 * nc - gammaln(k + 1.0)
    dfs = df + 2.0 * k
    terms = log_w[None, :] + _chi2_log_pdf(y[:, None], dfs[None, :])
    return logsumexp(terms, axis=1)


def _f_log_pdf(y: np.ndarray, d1: np.ndarray, d2: float) -> np.ndarray:
    return (
        0.5 * d1 * (np.log(d1) - math.log(d2))
        + (0.5 * d1 - 1.0) * np.log(y)
        - 0.5 * (d1 + d2) * np.log1p(d1 * y / d2)
        - betaln(0.5 * d1, 0.5 * d2)
    )


def _ncf_log_pdf(y: np.ndarray, d1: float, d2: float, nc: float) -> np.ndarray:
    """Noncentral F log-density as a Poisson mixture of rescaled central Fs."""
    if nc == 0.0:
        return _f_log_pdf(y, np.asarray(d1), d2)
    k = _poisson_k_window(0.5 * nc, float(np.max(y)) * d1)
    log_w = k * math.log(0.5 * nc) - 0.5 * nc - gammaln(k + 1.0)
    dfs = d1 + 2.0 * k
    scale = d1 / dfs
    terms = (
        log_w[None, :]
        + _f_log_pdf(y[:, None] * scale[None, :], dfs[None, :], d2)
        + np.log(scale)[None, :]
    )
    return logsumexp(terms, axis=1)


def _nct_series_coeffs(df: float, z_max: float) -> np.ndarray:
    """Log-coefficients lgamma((df+j+1)/2) - lgamma(j+1) up to convergence."""
    n_terms = 64
    while True:
        j = np.arange(n_terms, dtype=float)
        logc = gammaln(0.5 * (df + j + 1.0)) - gammaln(j + 1.0)
        if z_max <= 0.0:
            return logc
        log_terms = logc + j * math.log(z_max)
        if log_terms[-1] < np.max(log_terms) - 46.0:
            return logc
        n_terms *= 2
        if n_terms > 1 << 16:  # pragma: no cover - unreachable for finite z
            raise ParameterError(f"t series did not converge for z={z_max}")


def _nct_log_pdf_series(x: np.ndarray, df: float, nc: float, z: np.ndarray) -> np.ndarray:
    base = (
        0.5 * df * math.log(df)
        + 0.5 * math.log(2.0)
        - 0.5 * _LOG_2PI
        - gammaln(0.5 * df)
        - 0.5 * (df + 1.0) * np.log(df + x * x)
        - 0.5 * nc * nc
    )
    logc = _nct_series_coeffs(df, float(np.max(np.abs(z))))
    j = np.arange(logc.shape[0], dtype=float)
    out = np.empty_like(z)
    zero = z == 0.0
    out[zero] = logc[0]
    nz = ~zero
    if np.any(nz):
        log_terms = logc[None, :] + j[None, :] * np.log(np.abs(z[nz]))[:, None]
        even = logsumexp(log_terms[:, 0::2], axis=1)
        odd = logsumexp(log_terms[:, 1::2], axis=1)
        s = np.logaddexp(even, odd)
        neg_z = z[nz] < 0.0
        if np.any(neg_z):
            # alternating series; safe because the switch bounds cancellation
            s[neg_z] = even[neg_z] + np.log1p(-np.exp(odd[neg_z] - even[neg_z]))
        out[nz] = s
    return base + out


def _nct_log_pdf_quad(x: np.ndarray, df: float, nc: float) -> np.ndarray:
    """Scale-mixture quadrature: f(x) = C * int s^df exp(-(sx-nc)^2/2 - df s^2/2) ds.

    The integrand is positive and unimodal in s with analytic mode, so three
    Gauss-Legendre panels around the mode resolve it to near machine accuracy.
    """
    log_c = (
        math.log(2.0)
        + 0.5 * df * (math.log(df) - math.log(2.0))
        - gammaln(0.5 * df)
        - 0.5 * _LOG_2PI
    )
    b = x * x + df
    c = x * nc
    s_mode = (c + np.sqrt(c * c + 4.0 * b * df)) / (2.0 * b)
    # Two decay scales: the curvature at the mode and the quadratic envelope.
    width = 1.0 / np.sqrt(df / (s_mode * s_mode) + b)
    width_far = np.maximum(width, 1.0 / np.sqrt(b))

    nodes, weights = _leggauss(64)
    edges = np.stack(
        [
            np.maximum(s_mode - 14.0 * width_far, 0.0),
            np.maximum(s_mode - 4.0 * width, 0.0),
            s_mode + 4.0 * width,
            s_mode + 14.0 * width_far,
        ]
    )
    pieces = []
    for lo, hi in ((edges[0], edges[1]), (edges[1], edges[2]), (edges[2], edges[3])):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        s = mid[:, None] + half[:, None] * nodes[None, :]
        s = np.maximum(s, 1e-300)
        g = (
            df * np.log(s)
            - 0.5 * (s * x[:, None] - nc) ** 2
            - 0.5 * df * s * s
        )
        pieces.append(g + np.log(weights)[None, :] + np.log(np.maximum(half, 1e-300))[:, None])
    return log_c + logsumexp(np.concatenate(pieces, axis=1), axis=1)


def _nct_log_pdf(x: np.ndarray, df: float, nc: float) -> np.ndarray:
    if nc < 0.0:
        x, nc = -x, -nc
    z = math.sqrt(2.0) * nc * x / np.sqrt(df + x * x)
    out = np.empty_like(z)
    series = z >= _T_SERIES_SWITCH
    if np.any(series):
        out[series] = _nct_log_pdf_series(x[series], df, nc, z[series])
    if np.any(~series):
        out[~series] = _nct_log_pdf_quad(x[~series], df, nc)
    return out


@dataclass(frozen=True)
class Normal:
    """Normal distribution with the given mean and variance."""

    mean: float
    variance: float

    def __post_init__(self):
        _require_finite("mean", self.mean)
        if not (math.isfinite(self.variance) and self.variance > 0.0):
            raise ParameterError(f"variance must be positive, got {self.variance!r}")

    support = (-math.inf, math.inf)

    def log_pdf(self, x):
        arr = _as_array(x)
        out = -0.5 * (_LOG_2PI + math.log(self.variance)) - 0.5 * (arr - self.mean) ** 2 / self.variance
        return _scalar_ok(x, out)

    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        return _scalar_ok(x, ndtr((arr - self.mean) / math.sqrt(self.variance)))


@dataclass(frozen=True)
class NoncentralT:
    """Noncentral t with ``df`` degrees of freedom; ``ncp`` may be any real."""

    df: float
    ncp: float

    def __post_init__(self):
        _require_finite("ncp", self.ncp)
        if not (math.isfinite(self.df) and self.df > 0.0):
            raise ParameterError(f"df must be positive, got {self.df!r}")

    support = (-math.inf, math.inf)

    def log_pdf(self, x):
        arr = np.atleast_1d(_as_array(x))
        return _scalar_ok(x, _nct_log_pdf(arr, self.df, self.ncp))

    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        if self.ncp == 0.0:
            out = stats.t.cdf(arr, self.df)
        else:
            out = stats.nct.cdf(arr, self.df, self.ncp)
        return _scalar_ok(x, out)


@dataclass(frozen=True)
class ScaledNoncentralChiSq1:
    """``scale`` times a noncentral chi-square with 1 degree of freedom."""

    scale: float
    ncp: float

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0.0):
            raise ParameterError(f"scale must be positive, got {self.scale!r}")
        if not (math.isfinite(self.ncp) and self.ncp >= 0.0):
            raise ParameterError(f"ncp must be nonnegative, got {self.ncp!r}")

    support = (0.0, math.inf)

    def log_pdf(self, x):
        arr = np.atleast_1d(_as_array(x))
        if np.any(arr <= 0.0):
            raise DomainError("scaled chi-square support is (0, inf)")
        out = _ncx2_log_pdf(arr / self.scale, 1.0, self.ncp) - math.log(self.scale)
        return _scalar_ok(x, out)

    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        y = np.clip(arr / self.scale, 0.0, None)
        if self.ncp == 0.0:
            out = stats.chi2.cdf(y, 1.0)
        else:
            out = stats.ncx2.cdf(y, 1.0, self.ncp)
        return _scalar_ok(x, np.where(arr <= 0.0, 0.0, out))


@dataclass(frozen=True)
class NoncentralF:
    """Noncentral F with ``df1``/``df2`` degrees of freedom, ``ncp >= 0``."""

    df1: float
    df2: float
    ncp: float

    def __post_init__(self):
        for name in ("df1", "df2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ParameterError(f"{name} must be positive, got {v!r}")
        if not (math.isfinite(self.ncp) and self.ncp >= 0.0):
            raise ParameterError(f"ncp must be nonnegative, got {self.ncp!r}")

    support = (0.0, math.inf)

    def log_pdf(self, x):
        arr = np.atleast_1d(_as_array(x))
        if np.any(arr <= 0.0):
            raise DomainError("F support is (0, inf)")
        return _scalar_ok(x, _ncf_log_pdf(arr, self.df1, self.df2, self.ncp))

    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        y = np.clip(arr, 0.0, None)
        if self.ncp == 0.0:
            out = stats.f.cdf(y, self.df1, self.df2)
        else:
            out = stats.ncf.cdf(y, self.df1, self.df2, self.ncp)
        return _scalar_ok(x, np.where(arr <= 0.0, 0.0, out))


DistSpec = Normal | NoncentralT | ScaledNoncentralChiSq1 | NoncentralF


def log_pdf(spec: DistSpec, x):
    """Log-density of ``spec`` at ``x`` (scalar or array)."""
    return spec.log_pdf(x)


def cdf(spec: DistSpec, x):
    """CDF of ``spec`` at ``x`` (scalar or array), in [0, 1]."""
    return spec.cdf(x)
