"""Calibrated e-values for two-sided equivalence nulls.

The central object is the boundary-mixture e-value

    e(x) = psi( lam * (c * p_lower(x) + (1-c) * p_upper(x)) / q(x) ),

with ``psi`` the inverse marginal utility and ``q`` the density of a mixture
alternative supported strictly between the margins.  ``calibrate_log`` and
``calibrate_utility`` pin ``(c, lam)`` so that the expectation equals one at
both boundary points; under strict total positivity of order 3 this makes the
e-value valid for the whole two-sided null.  The weaker order-2 condition is
not enough, and the discrete kernel reproducing that failure lives here too,
together with a minor-based total-positivity checker.

Also here: the TOST-E (minimum of two one-sided e-values, valid under
monotone likelihood ratios), a generalized universal-inference e-value (valid
with no assumptions), executable validity sweeps over a null grid, and a grid
diagnostic for the at-most-one-extremum shape result that underpins boundary
calibration.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
import math

import numpy as np
from scipy import integrate, optimize

from .errors import CalibrationError, NumericError, ParameterError
from .models import MarginPair, MixtureAlternative, ZTest, mixture_log_density

__all__ = [
    "LogUtility",
    "NeymanPearsonUtility",
    "PowerUtility",
    "UtilitySpec",
    "BoundaryMixtureEValue",
    "TostEValue",
    "UniversalInferenceEValue",
    "CalibrationReport",
    "calibrate_log",
    "calibrate_utility",
    "make_log_optimal",
    "tost_e",
    "mean_scale_t_tost",
    "universal_inference",
    "default_null_grid",
    "DiscreteKernel",
    "StpVerdict",
    "stp_check",
    "simplex_region",
    "SweepResult",
    "validity_sweep",
    "count_strict_local_extrema",
]

_C_BRACKET = (1e-6, 1.0 - 1e-6)
_LAMBDA_BRACKET = (1e-6, 1e6)
_QUAD_ABS_TOL = 1e-10



# ---------------------------------------------------------------------------
# Utility specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogUtility:
    """U(e) = log e, the utility behind the numeraire / log-optimal e-value."""

    def log_psi(self, log_t):
        return -np.asarray(log_t)


@dataclass(frozen=True)
class NeymanPearsonUtility:
    """U(e) = min(e, 1/alpha); recovers the classical level-alpha test shape.

    The inverse marginal utility degenerates to a threshold: the e-value is
    1/alpha where the likelihood ratio clears ``lam`` and 0 elsewhere.  The
    e-value itself is reported directly; no external randomization is used at
    the threshold (a measure-zero event for continuous models).
    """

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must be in (0, 1), got {self.alpha!r}")

    def log_psi(self, log_t):
        log_t = np.asarray(log_t, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(log_t <= 0.0, -math.log(self.alpha), -math.inf)


@dataclass(frozen=True)
class PowerUtility:
    """U(e) = e^rho / rho for rho in (0, 1).

    Note x * U'(x) = x^rho is bounded only on bounded evaluation ranges; the
    boundedness diagnostic below makes that visible.  Boundary calibration is
    still well posed for the Gaussian-type models used here because the
    relevant integrals are finite.
    """

    rho: float

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ParameterError(f"rho must be in (0, 1), got {self.rho!r}")

    def log_psi(self, log_t):
        return -np.asarray(log_t) / (1.0 - self.rho)


UtilitySpec = LogUtility | NeymanPearsonUtility | PowerUtility


def xuprime_max(utility: UtilitySpec, lo: float = 1e-8, hi: float = 1e8, n: int = 200) -> float:
    """Max of x * U'(x) on a log-spaced grid (finite for Log and NP only)."""
    x = np.geomspace(lo, hi, n)
    if isinstance(utility, LogUtility):
        return 1.0
    if isinstance(utility, NeymanPearsonUtility):
        return float(np.max(np.where(x < 1.0 / utility.alpha, x, 0.0)))
    return float(np.max(x**utility.rho))


# ---------------------------------------------------------------------------
# Discrete kernels (finite models given by a positive stochastic matrix)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteKernel:
    """Strictly positive densities on a finite ordered sample space.

    Rows are ordered parameter values, columns ordered sample points, and
    every row sums to one.  The kernel doubles as a model: expectations are
    finite sums, so calibration and validity sweeps are exact.
    """

    params: tuple[float, ...]
    points: tuple[float, ...]
    pmf: np.ndarray

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=float)
        if pmf.shape != (len(self.params), len(self.points)):
            raise ParameterError("pmf must have shape (len(params), len(points))")
        if np.any(pmf <= 0.0):
            raise ParameterError("kernel entries must be strictly positive")
        if np.any(np.abs(pmf.sum(axis=1) - 1.0) > 1e-12):
            raise ParameterError("kernel rows must sum to 1")
        if list(self.params) != sorted(self.params) or list(self.points) != sorted(self.points):
            raise ParameterError("params and points must be sorted")
        object.__setattr__(self, "pmf", pmf)

    parameter_space = None
    support = None

    def row(self, param: float) -> np.ndarray:
        try:
            return self.pmf[self.params.index(param)]
        except ValueError:
            raise ParameterError(f"{param!r} is not a kernel parameter") from None

    def points_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def log_density(self, param: float, x):
        row = self.row(param)
        idx = np.searchsorted(self.points, np.asarray(x, dtype=float))
        idx = np.clip(idx, 0, len(self.points) - 1)
        chosen = np.asarray(self.points)[idx]
        if np.any(chosen != np.asarray(x, dtype=float)):
            raise ParameterError("kernel evaluated off its sample points")
        out = np.log(row[idx])
        return out.item() if np.ndim(x) == 0 else out


#: The 4x3 order-2-but-not-order-3 counterexample kernel.
COUNTEREXAMPLE_KERNEL = DiscreteKernel(
    params=(1.0, 2.0, 3.0, 4.0),
    points=(1.0, 2.0, 3.0),
    pmf=np.array(
        [[16.0, 7.0, 1.0], [12.0, 6.0, 6.0], [6.0, 6.0, 12.0], [2.0, 4.0, 18.0]]
    )
    / 24.0,
)


# ---------------------------------------------------------------------------
# Expectation engine
# ---------------------------------------------------------------------------

def _null_expectation(model, mu: float, log_fn, *, split_points=(), feature_span=None) -> float:
    """E_mu[exp(log_fn(X))] by finite sum, Gaussian panels, or adaptive panels.

    The Gaussian fast path integrates on fixed Gauss-Legendre panels over a
    window wide enough for any exponential tilt the integrand's features can
    produce; everything is one vectorized evaluation.  Other models fall back
    to adaptive Gauss-Kronrod quadrature with ``split_points`` honored as
    panel edges (used for kinked integrands).
    """
    if isinstance(model, DiscreteKernel):
        pts = model.points_array()
        return float(np.sum(model.row(mu) * np.exp(log_fn(pts))))
    if isinstance(model, ZTest):
        return _gaussian_panel_expectation(model, mu, log_fn, split_points, feature_span)
    lo, hi = model.support
    lo = max(lo, 1e-300) if lo == 0.0 else lo

    def integrand(x):
        return math.exp(float(log_fn(np.array([x]))[0]) + float(model.log_density(mu, x)))

    edges = sorted(p for p in split_points if lo < p < hi)
    total = 0.0
    err = 0.0
    for a, b in zip([lo] + edges, edges + [hi]):
        val, abserr = integrate.quad(
            integrand, a, b, epsabs=_QUAD_ABS_TOL, epsrel=1e-9, limit=400
        )
        total += val
        err += abserr
    if err > 1e-6:
        raise NumericError(f"quadrature error estimate {err:.2e} too large at mu={mu}")
    return total


def _gaussian_panel_expectation(model: ZTest, mu: float, log_fn, split_points, feature_span) -> float:
    sigma = math.sqrt(model.statistic_variance)
    lo = mu - 12.0 * sigma
    hi = mu + 12.0 * sigma
    if feature_span is not None:
        lo = min(lo, feature_span[0] - 12.0 * sigma)
        hi = max(hi, feature_span[1] + 12.0 * sigma)
    edges = np.array(sorted({lo, hi, *(p for p in split_points if lo < p < hi)}))
    nodes, weights = _leggauss(48)
    xs = []
    ws = []
    for a, b in zip(edges[:-1], edges[1:]):
        pieces = max(1, int(math.ceil((b - a) / (1.5 * sigma))))
        bounds = np.linspace(a, b, pieces + 1)
        half = 0.5 * np.diff(bounds)
        mid = 0.5 * (bounds[:-1] + bounds[1:])
        xs.append((mid[:, None] + half[:, None] * nodes[None, :]).ravel())
        ws.append((half[:, None] * weights[None, :]).ravel())
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    vals = np.exp(np.asarray(log_fn(x)) + np.asarray(model.log_density(mu, x)))
    return float(np.sum(w * vals))


@lru_cache(maxsize=8)
def _leggauss(order: int):
    return np.polynomial.legendre.leggauss(order)


# ---------------------------------------------------------------------------
# Boundary-mixture e-values
# ---------------------------------------------------------------------------

def _check_alternative_inside(margins: MarginPair, alternative: MixtureAlternative):
    points, _ = alternative.nodes()
    if np.any(points <= margins.lower) or np.any(points >= margins.upper):
        raise ParameterError(
            f"mixture support {points} must lie strictly inside "
            f"({margins.lower}, {margins.upper})"
        )


def _feature_span(margins: MarginPair, alternative: MixtureAlternative) -> tuple[float, float]:
    """Range of locations where the e-value's structure lives (for windowing)."""
    pts, _ = alternative.nodes()
    finite = [m for m in (margins.lower, margins.upper) if math.isfinite(m)]
    lo = min([*finite, float(pts.min())])
    hi = max([*finite, float(pts.max())])
    return lo, hi


@dataclass(frozen=True)
class BoundaryMixtureEValue:
    """The calibrated two-boundary mixture e-value ``psi(lam * p_c / q)``."""

    model: object
    margins: MarginPair
    alternative: MixtureAlternative
    c: float
    lam: float = 1.0
    utility: UtilitySpec = LogUtility()
    calibrated: bool = False

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise ParameterError(f"c must be in [0, 1], got {self.c!r}")
        if not self.lam > 0.0:
            raise ParameterError(f"lam must be positive, got {self.lam!r}")
        if math.isinf(self.margins.lower) and self.c != 0.0:
            raise ParameterError("one-sided lower margin forces c = 0")
        if math.isinf(self.margins.upper) and self.c != 1.0:
            raise ParameterError("one-sided upper margin forces c = 1")
        # closed-interval membership; calibration itself insists on the
        # strict interior, but boundary point masses are well-defined here
        points, _ = self.alternative.nodes()
        if np.any(points < self.margins.lower) or np.any(points > self.margins.upper):
            raise ParameterError("mixture support must lie within the margins")

    def log_mixture(self, x):
        return mixture_log_density(self.model, self.alternative, x)

    def log_boundary_mix(self, x):
        """log(c * p_lower(x) + (1-c) * p_upper(x)) with one-sided handling."""
        parts = []
        if self.c > 0.0:
            parts.append(math.log(self.c) + np.asarray(self.model.log_density(self.margins.lower, x)))
        if self.c < 1.0:
            parts.append(math.log(1.0 - self.c) + np.asarray(self.model.log_density(self.margins.upper, x)))
        if len(parts) == 1:
            return parts[0]
        return np.logaddexp(parts[0], parts[1])

    def log_evaluate(self, x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        log_q = np.asarray(self.log_mixture(x_arr))
        log_t = math.log(self.lam) + self.log_boundary_mix(x_arr) - log_q
        out = self.utility.log_psi(log_t)
        # convention: zero alternative density gives zero evidence
        out = np.where(np.isneginf(log_q), -math.inf, out)
        return out[0].item() if np.ndim(x) == 0 else out

    def evaluate(self, x):
        return np.exp(self.log_evaluate(x))

    def null_expectation(self, mu: float) -> float:
        if isinstance(self.utility, NeymanPearsonUtility):
            lo, hi = self._np_rejection_interval()
            if lo >= hi:
                return 0.0
            mass = float(self.model.cdf(mu, hi)) - float(self.model.cdf(mu, lo))
            return mass / self.utility.alpha
        span = _feature_span(self.margins, self.alternative)
        return _null_expectation(self.model, mu, self.log_evaluate, feature_span=span)

    def _np_rejection_interval(self) -> tuple[float, float]:
        """Endpoints of {x : q(x)/p_c(x) >= lam}, an interval by unimodality."""
        if isinstance(self.model, DiscreteKernel):
            raise ParameterError("interval form requires a continuous model")

        def h(x):
            arr = np.atleast_1d(np.asarray(x, dtype=float))
            return np.asarray(self.log_mixture(arr)) - self.log_boundary_mix(arr) - math.log(self.lam)

        grid = _scan_grid(self.model, self.margins)
        vals = h(grid)
        inside = vals >= 0.0
        if not np.any(inside):
            return (math.inf, math.inf)
        first, last = np.nonzero(inside)[0][[0, -1]]
        lo = grid[0] if first == 0 else optimize.brentq(
            lambda x: float(h(x)[0]), grid[first - 1], grid[first], xtol=1e-14
        )
        hi = grid[-1] if last == len(grid) - 1 else optimize.brentq(
            lambda x: float(h(x)[0]), grid[last], grid[last + 1], xtol=1e-14
        )
        return (float(lo), float(hi))


def _scan_grid(model, margins: MarginPair, n: int = 4001) -> np.ndarray:
    lo, hi = model.support
    scale = _statistic_scale(model)
    finite = [m for m in (margins.lower, margins.upper) if math.isfinite(m)]
    left = max(lo, min(finite) - 12.0 * scale) if math.isfinite(lo) or finite else -12.0 * scale
    right = min(hi, max(finite) + 12.0 * scale) if finite else 12.0 * scale
    if lo == 0.0:
        left = max(left, scale * 1e-9)
    return np.linspace(left, right, n)


def _statistic_scale(model) -> float:
    if isinstance(model, ZTest):
        return math.sqrt(model.statistic_variance)
    return 1.0


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationReport:
    """Calibration constants with their achieved boundary expectations."""

    c: float
    lam: float
    e_lower: float
    e_upper: float
    evaluations: int

    def to_json_obj(self) -> dict:
        return {
            "c": self.c,
            "lam": self.lam,
            "boundary_expectation_lower": self.e_lower,
            "boundary_expectation_upper": self.e_upper,
            "evaluations": self.evaluations,
        }


def _boundary_expectations(ev: BoundaryMixtureEValue) -> tuple[float, float]:
    e_lo = ev.null_expectation(ev.margins.lower) if math.isfinite(ev.margins.lower) else math.nan
    e_hi = ev.null_expectation(ev.margins.upper) if math.isfinite(ev.margins.upper) else math.nan
    return e_lo, e_hi


def calibrate_log(model, margins: MarginPair, alternative: MixtureAlternative,
                  *, tol: float = 1e-8) -> CalibrationReport:
    """Find c* with both boundary expectations of q/p_c equal to one.

    The difference of boundary expectations is strictly decreasing in c, so a
    bracketed root on (0, 1) is safe; ``lam`` stays 1 for the log utility.
    """
    _check_alternative_inside(margins, alternative)
    if margins.one_sided:
        c = 0.0 if math.isinf(margins.lower) else 1.0
        ev = BoundaryMixtureEValue(model, margins, alternative, c=c, calibrated=True)
        e_lo, e_hi = _boundary_expectations(ev)
        _check_boundary(e_lo, e_hi, tol)
        return CalibrationReport(c, 1.0, e_lo, e_hi, 1)

    counter = {"n": 0}

    def gap(c: float) -> float:
        counter["n"] += 1
        ev = BoundaryMixtureEValue(model, margins, alternative, c=c)
        e_lo, e_hi = _boundary_expectations(ev)
        return e_lo - e_hi

    c_star = _bracketed_root(gap, *_C_BRACKET, what="boundary-expectation gap over c")
    ev = BoundaryMixtureEValue(model, margins, alternative, c=c_star, calibrated=True)
    e_lo, e_hi = _boundary_expectations(ev)
    _check_boundary(e_lo, e_hi, tol)
    return CalibrationReport(c_star, 1.0, e_lo, e_hi, counter["n"])


def calibrate_utility(model, margins: MarginPair, alternative: MixtureAlternative,
                      utility: UtilitySpec, *, tol: float = 1e-7) -> CalibrationReport:
    """Nested calibration: inner root c(lam), outer root on m(lam) = 1.

    ``m`` is the common boundary expectation at the inner root; it increases
    without bound as lam drops to 0 and vanishes as lam grows, so a geometric
    bracket expansion over lam always finds the crossing when one exists.
    """
    _check_alternative_inside(margins, alternative)
    counter = {"n": 0}

    def inner_c(lam: float) -> float:
        if margins.one_sided:
            return 0.0 if math.isinf(margins.lower) else 1.0

        def gap(c: float) -> float:
            counter["n"] += 1
            ev = BoundaryMixtureEValue(model, margins, alternative, c=c, lam=lam, utility=utility)
            e_lo, e_hi = _boundary_expectations(ev)
            return e_lo - e_hi

        return _bracketed_root(gap, *_C_BRACKET, what=f"inner c root at lam={lam:g}")

    def m_minus_one(lam: float) -> float:
        c = inner_c(lam)
        ev = BoundaryMixtureEValue(model, margins, alternative, c=c, lam=lam, utility=utility)
        boundary = margins.upper if math.isinf(margins.lower) else margins.lower
        counter["n"] += 1
        return ev.null_expectation(boundary) - 1.0

    lam_star = _expanding_root(m_minus_one, what="outer lam root")
    c_star = inner_c(lam_star)
    ev = BoundaryMixtureEValue(
        model, margins, alternative, c=c_star, lam=lam_star, utility=utility, calibrated=True
    )
    e_lo, e_hi = _boundary_expectations(ev)
    _check_boundary(e_lo, e_hi, tol)
    return CalibrationReport(c_star, lam_star, e_lo, e_hi, counter["n"])


def make_log_optimal(model, margins: MarginPair, alternative: MixtureAlternative) -> BoundaryMixtureEValue:
    """Convenience: calibrate and return the log-optimal boundary mixture."""
    report = calibrate_log(model, margins, alternative)
    return BoundaryMixtureEValue(
        model, margins, alternative, c=report.c, lam=1.0, calibrated=True
    )


def _check_boundary(e_lo: float, e_hi: float, tol: float):
    for val in (e_lo, e_hi):
        if not math.isnan(val) and abs(val - 1.0) > tol:
            raise CalibrationError(
                f"boundary expectations ({e_lo!r}, {e_hi!r}) missed 1 by more than {tol}"
            )


def _bracketed_root(fn, lo: float, hi: float, *, what: str) -> float:
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise CalibrationError(f"no sign change for {what} on [{lo:g}, {hi:g}]")
    return float(optimize.brentq(fn, lo, hi, xtol=1e-13, rtol=8.9e-16))


def _expanding_root(fn, *, what: str) -> float:
    lo, hi = 1e-2, 1e2
    f_lo, f_hi = fn(lo), fn(hi)
    while f_lo < 0.0 and lo > _LAMBDA_BRACKET[0]:
        lo = max(lo / 10.0, _LAMBDA_BRACKET[0])
        f_lo = fn(lo)
    while f_hi > 0.0 and hi < _LAMBDA_BRACKET[1]:
        hi = min(hi * 10.0, _LAMBDA_BRACKET[1])
        f_hi = fn(hi)
    if f_lo < 0.0 or f_hi > 0.0:
        raise CalibrationError(f"bracket exhausted for {what} on {_LAMBDA_BRACKET}")
    return float(optimize.brentq(fn, lo, hi, xtol=1e-13, rtol=8.9e-16))


# ---------------------------------------------------------------------------
# TOST-E and universal inference
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TostEValue:
    """Minimum of two one-sided e-values; valid under monotone likelihood ratios."""

    left: BoundaryMixtureEValue | None
    right: BoundaryMixtureEValue | None

    def log_evaluate(self, x):
        logs = [piece.log_evaluate(x) for piece in (self.left, self.right) if piece is not None]
        if len(logs) == 1:
            return logs[0]
        return np.minimum(logs[0], logs[1])

    def evaluate(self, x):
        return np.exp(self.log_evaluate(x))

    def null_expectation(self, mu: float) -> float:
        piece = self.left or self.right
        spans = [
            _feature_span(p.margins, p.alternative)
            for p in (self.left, self.right)
            if p is not None
        ]
        span = (min(s[0] for s in spans), max(s[1] for s in spans))
        return _null_expectation(
            piece.model, mu, self.log_evaluate, split_points=self._kinks(), feature_span=span
        )

    def _kinks(self) -> tuple[float, ...]:
        # the one-sided pieces cross once under MLR; split quadrature there
        if self.left is None or self.right is None:
            return ()
        model = self.left.model
        if isinstance(model, DiscreteKernel):
            return ()
        span = MarginPair(self.left.margins.lower, self.right.margins.upper)

        def diff(x):
            arr = np.atleast_1d(np.asarray(x, dtype=float))
            out = np.asarray(self.left.log_evaluate(arr)) - np.asarray(self.right.log_evaluate(arr))
            return out if np.ndim(x) else float(out[0])

        grid = _scan_grid(model, span, n=201)
        vals = diff(grid)
        sign_change = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
        return tuple(
            float(optimize.brentq(diff, grid[i], grid[i + 1], xtol=1e-12))
            for i in sign_change[:4]
        )


def tost_e(model, margins: MarginPair, alternative: MixtureAlternative,
           utility: UtilitySpec = LogUtility()) -> TostEValue:
    """Build the TOST-E from one-sided boundary pieces.

    For the log utility each piece is the likelihood ratio q/p_boundary whose
    boundary expectation is exactly one.  For other utilities the piece's
    ``lam`` is calibrated so the boundary expectation equals one, which is
    what makes the one-sided pieces (and hence their minimum) valid.
    """
    _check_alternative_inside(margins, alternative)
    left = right = None
    if math.isfinite(margins.lower):
        left = _one_sided_piece(model, margins.lower, "lower", alternative, utility)
    if math.isfinite(margins.upper):
        right = _one_sided_piece(model, margins.upper, "upper", alternative, utility)
    if left is None and right is None:
        raise ParameterError("at least one margin must be finite")
    return TostEValue(left, right)


def _one_sided_piece(model, boundary: float, side: str, alternative, utility) -> BoundaryMixtureEValue:
    if side == "lower":
        margins = MarginPair(boundary, math.inf)
        c = 1.0
    else:
        margins = MarginPair(-math.inf, boundary)
        c = 0.0
    if isinstance(utility, LogUtility):
        return BoundaryMixtureEValue(model, margins, alternative, c=c, calibrated=True)

    def expectation_minus_one(lam: float) -> float:
        ev = BoundaryMixtureEValue(model, margins, alternative, c=c, lam=lam, utility=utility)
        return ev.null_expectation(boundary) - 1.0

    lam = _expanding_root(expectation_minus_one, what=f"one-sided lam at {boundary:g}")
    return BoundaryMixtureEValue(
        model, margins, alternative, c=c, lam=lam, utility=utility, calibrated=True
    )


def mean_scale_t_tost(sample, margins: MarginPair, ncp_alt: float = 1.0) -> float:
    """TOST-E for mean-scale margins with unknown variance.

    Each one-sided piece standardizes the sample against its own margin, so
    the null boundary is a central t and the composite one-sided null (any
    variance) is covered by monotone likelihood ratios in the noncentrality.
    The one-sided alternative is a point mass at ``ncp_alt > 0`` on the
    noncentrality scale; nothing pins this choice, so it is a knob.
    """
    from .models import TEffectSize

    if not ncp_alt > 0.0:
        raise ParameterError("alternative noncentrality must be positive")
    arr = np.asarray(sample, dtype=float).ravel()
    if arr.size < 2:
        raise ParameterError("mean-scale TOST needs at least two observations")
    model = TEffectSize(n=arr.size)
    dof = model.dof
    sd = float(np.std(arr, ddof=1))
    if sd == 0.0:
        from .errors import DegenerateSampleError

        raise DegenerateSampleError("sample standard deviation is zero")
    mean = float(np.mean(arr))
    root_n = math.sqrt(arr.size)
    from . import distributions as dist

    central = dist.NoncentralT(dof, 0.0)
    alt = dist.NoncentralT(dof, ncp_alt)
    pieces = []
    if math.isfinite(margins.lower):
        t_l = root_n * (mean - margins.lower) / sd
        pieces.append(float(alt.log_pdf(t_l)) - float(central.log_pdf(t_l)))
    if math.isfinite(margins.upper):
        t_r = root_n * (margins.upper - mean) / sd
        pieces.append(float(alt.log_pdf(t_r)) - float(central.log_pdf(t_r)))
    if not pieces:
        raise ParameterError("at least one margin must be finite")
    return math.exp(min(pieces))


@dataclass(frozen=True)
class UniversalInferenceEValue:
    """q(x) over the largest null density on a finite null grid."""

    model: object
    alternative: MixtureAlternative
    null_grid: tuple[float, ...]

    def __post_init__(self):
        if len(self.null_grid) == 0:
            raise ParameterError("universal inference needs a nonempty null grid")

    def log_evaluate(self, x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        log_q = np.asarray(mixture_log_density(self.model, self.alternative, x_arr))
        log_sup = np.max(
            np.stack([np.asarray(self.model.log_density(mu, x_arr)) for mu in self.null_grid]),
            axis=0,
        )
        out = log_q - log_sup
        return out[0].item() if np.ndim(x) == 0 else out

    def evaluate(self, x):
        return np.exp(self.log_evaluate(x))

    def null_expectation(self, mu: float) -> float:
        # the sup over the grid switches between neighbors, so hint the
        # quadrature with the midpoints where kinks can occur
        grid = np.asarray(self.null_grid)
        mids = 0.5 * (grid[1:] + grid[:-1])
        pts, _ = self.alternative.nodes()
        span = (min(grid.min(), pts.min()), max(grid.max(), pts.max()))
        return _null_expectation(
            self.model, mu, self.log_evaluate, split_points=tuple(mids), feature_span=span
        )


def default_null_grid(model, margins: MarginPair, *, points_per_side: int = 25,
                      stderr_mult: float = 10.0) -> tuple[float, ...]:
    """Boundary points plus a truncated grid over each null piece.

    The unbounded null pieces are truncated ``stderr_mult`` statistic scales
    beyond the margins (configurable; nothing in the construction pins a
    canonical truncation).
    """
    scale = _statistic_scale(model)
    lo_param, hi_param = model.parameter_space
    grid: list[float] = []
    if math.isfinite(margins.lower):
        left_edge = max(lo_param, margins.lower - stderr_mult * scale)
        grid.extend(np.linspace(left_edge, margins.lower, points_per_side))
    if math.isfinite(margins.upper):
        right_edge = margins.upper + stderr_mult * scale
        grid.extend(np.linspace(margins.upper, right_edge, points_per_side))
    return tuple(sorted(set(grid)))


def universal_inference(model, margins: MarginPair, alternative: MixtureAlternative,
                        null_grid=None) -> UniversalInferenceEValue:
    """Generalized universal inference over a finite null grid."""
    _check_alternative_inside(margins, alternative)
    if null_grid is None:
        null_grid = default_null_grid(model, margins)
    return UniversalInferenceEValue(model, alternative, tuple(float(m) for m in null_grid))


# ---------------------------------------------------------------------------
# Total positivity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StpVerdict:
    """Outcome of a strict total positivity check up to a given order."""

    order: int
    strict_pass: bool
    witness_rows: tuple[int, ...] | None = None
    witness_cols: tuple[int, ...] | None = None
    witness_minor: float | None = None

    def to_json_obj(self) -> dict:
        out = {"order": self.order, "strict_pass": self.strict_pass}
        if not self.strict_pass:
            out.update(
                witness_rows=list(self.witness_rows),
                witness_cols=list(self.witness_cols),
                witness_minor=self.witness_minor,
            )
        return out


def stp_check(kernel: DiscreteKernel, order: int) -> StpVerdict:
    """Check all minors up to ``order`` are strictly positive.

    FAIL returns the first offending row/column index sets (0-based) and the
    minor's value, scanning orders from 1 upward.
    """
    n_rows, n_cols = kernel.pmf.shape
    if order < 1 or order > min(n_rows, n_cols):
        raise ParameterError(f"order must be in [1, {min(n_rows, n_cols)}], got {order}")
    for n in range(1, order + 1):
        for rows in combinations(range(n_rows), n):
            sub = kernel.pmf[list(rows)]
            for cols in combinations(range(n_cols), n):
                minor = float(np.linalg.det(sub[:, list(cols)]))
                if minor <= 0.0:
                    return StpVerdict(order, False, rows, cols, minor)
    return StpVerdict(order, True)


def simplex_region(p, p1, p2) -> str:
    """Classify a third pmf against two fixed rows on the probability simplex.

    Returns "stp3_side", "stp2_only", or "not_stp2"; strict inequalities are
    required for each class (determinant exactly zero is not the strict side).
    """
    rows = []
    for name, vec in (("p", p), ("p1", p1), ("p2", p2)):
        arr = np.asarray(vec, dtype=float)
        if arr.shape != (3,) or np.any(arr < 0.0) or abs(arr.sum() - 1.0) > 1e-9:
            raise ParameterError(f"{name} must be a probability 3-vector")
        rows.append(arr)
    p, p1, p2 = rows
    if np.any(np.vstack([p1, p2, p]) <= 0.0):
        return "not_stp2"
    stacked = DiscreteKernel(
        params=(1.0, 2.0, 3.0), points=(1.0, 2.0, 3.0), pmf=np.vstack([p1, p2, p])
    )
    if not stp_check(stacked, 2).strict_pass:
        return "not_stp2"
    return "stp3_side" if stp_check(stacked, 3).strict_pass else "stp2_only"


# ---------------------------------------------------------------------------
# Validity sweeps and shape diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    """Null expectations across a grid, with the worst case singled out."""

    grid: tuple[float, ...]
    expectations: tuple[float, ...]
    errors: tuple[float, ...]
    max_expectation: float
    argmax: float
    method: str

    def to_json_obj(self) -> dict:
        return {
            "grid": list(self.grid),
            "expectations": list(self.expectations),
            "errors": list(self.errors),
            "max_expectation": self.max_expectation,
            "argmax": self.argmax,
            "method": self.method,
        }


def validity_sweep(evalue, model, null_grid, *, method: str = "quadrature",
                   mc_size: int = 100_000, seed: int = 0) -> SweepResult:
    """Max of E_mu[e] over a finite null grid: the executable validity contract."""
    null_grid = tuple(float(m) for m in null_grid)
    if len(null_grid) == 0:
        raise ParameterError("null grid must be nonempty")
    expectations = []
    errors = []
    if method == "quadrature":
        for mu in null_grid:
            if hasattr(evalue, "null_expectation"):
                val = evalue.null_expectation(mu)
            else:
                val = _null_expectation(model, mu, evalue.log_evaluate)
            expectations.append(val)
            errors.append(_QUAD_ABS_TOL)
    elif method == "monte_carlo":
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        for mu in null_grid:
            draws = model.sample_statistic(mu, mc_size, rng)
            vals = np.asarray(evalue.evaluate(draws), dtype=float)
            expectations.append(float(np.mean(vals)))
            errors.append(float(np.std(vals, ddof=1) / math.sqrt(mc_size)))
    else:
        raise ParameterError(f"unknown sweep method {method!r}")
    idx = int(np.argmax(expectations))
    return SweepResult(
        grid=null_grid,
        expectations=tuple(expectations),
        errors=tuple(errors),
        max_expectation=expectations[idx],
        argmax=null_grid[idx],
        method=method,
    )


def count_strict_local_extrema(values) -> int:
    """Number of strict direction changes along a grid evaluation.

    Zero for monotone shapes, one for single-peaked or single-dipped shapes;
    plateaus are ignored.
    """
    v = np.asarray(values, dtype=float)
    signs = np.sign(np.diff(v))
    signs = signs[signs != 0]
    if signs.size < 2:
        return 0
    return int(np.sum(signs[1:] != signs[:-1]))
