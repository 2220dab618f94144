"""Parametric model families, mixture alternatives, and margin pairs.

Each model wraps a one-parameter family of densities for a (sufficient)
statistic of an i.i.d. normal sample:

* ``ZTest(sigma, n)``      - sample mean, parameter mu, known variance;
* ``TEffectSize(n)``       - t statistic sqrt(n)*mean/sd, parameter
  delta = mu/sigma (noncentral t with noncentrality sqrt(n)*delta);
* ``SymmetricZSquared(n)`` - squared mean, parameter a = mu^2, known
  unit variance (scaled noncentral chi-square);
* ``SymmetricTSquaredF(n)`` - squared t statistic, parameter a = delta^2
  (noncentral F).

The two squared-statistic families are the sign-invariant reductions used
for symmetric equivalence margins: their statistics are unchanged when the
whole sample flips sign.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import logsumexp

from . import distributions as dist
from .errors import DegenerateSampleError, ParameterError

__all__ = [
    "ZTest",
    "TEffectSize",
    "SymmetricZSquared",
    "SymmetricTSquaredF",
    "ParametricModel",
    "Dirac",
    "UniformInterval",
    "DiscreteWeights",
    "MixtureAlternative",
    "MarginPair",
    "mixture_log_density",
    "sufficient_statistic",
    "model_from_config",
    "mixture_from_config",
]


def _check_n(n: int, minimum: int = 1) -> int:
    if not isinstance(n, (int, np.integer)) or n < minimum:
        raise ParameterError(f"sample size must be an integer >= {minimum}, got {n!r}")
    return int(n)


@dataclass(frozen=True)
class ZTest:
    """Known-variance Gaussian mean model; statistic is the sample mean."""

    sigma: float = 1.0
    n: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ParameterError(f"sigma must be positive, got {self.sigma!r}")
        _check_n(self.n)

    parameter_space = (-math.inf, math.inf)
    support = (-math.inf, math.inf)

    @property
    def statistic_variance(self) -> float:
        return self.sigma**2 / self.n

    def statistic_dist(self, mu: float) -> dist.Normal:
        return dist.Normal(mu, self.statistic_variance)

    def log_density(self, mu: float, x):
        return self.statistic_dist(mu).log_pdf(x)

    def cdf(self, mu: float, x):
        return self.statistic_dist(mu).cdf(x)

    def sufficient_statistic(self, sample) -> float:
        sample = _sample_array(sample, self.n, minimum=1)
        return float(np.mean(sample))

    def sample_statistic(self, mu: float, size: int, rng) -> np.ndarray:
        return rng.normal(mu, math.sqrt(self.statistic_variance), size=size)


@dataclass(frozen=True)
class TEffectSize:
    """Effect-size scale t model; statistic is sqrt(n) * mean / sd."""

    n: int = 2

    def __post_init__(self):
        _check_n(self.n, minimum=2)

    parameter_space = (-math.inf, math.inf)
    support = (-math.inf, math.inf)

    @property
    def dof(self) -> float:
        return float(self.n - 1)

    def statistic_dist(self, delta: float) -> dist.NoncentralT:
        return dist.NoncentralT(self.dof, math.sqrt(self.n) * delta)

    def log_density(self, delta: float, x):
        return self.statistic_dist(delta).log_pdf(x)

    def cdf(self, delta: float, x):
        return self.statistic_dist(delta).cdf(x)

    def sufficient_statistic(self, sample) -> float:
        sample = _sample_array(sample, self.n, minimum=2)
        sd = float(np.std(sample, ddof=1))
        if sd == 0.0:
            raise DegenerateSampleError("sample standard deviation is zero")
        return math.sqrt(len(sample)) * float(np.mean(sample)) / sd

    def sample_statistic(self, delta: float, size: int, rng) -> np.ndarray:
        z = rng.normal(math.sqrt(self.n) * delta, 1.0, size=size)
        v = rng.chisquare(self.dof, size=size)
        return z / np.sqrt(v / self.dof)


@dataclass(frozen=True)
class SymmetricZSquared:
    """Squared-mean model for symmetric margins; parameter is a = mu^2 >= 0."""

    n: int = 1

    def __post_init__(self):
        _check_n(self.n)

    parameter_space = (0.0, math.inf)
    support = (0.0, math.inf)

    def statistic_dist(self, a: float) -> dist.ScaledNoncentralChiSq1:
        if a < 0.0:
            raise ParameterError(f"squared-mean parameter must be >= 0, got {a!r}")
        return dist.ScaledNoncentralChiSq1(1.0 / self.n, self.n * a)

    def log_density(self, a: float, x):
        return self.statistic_dist(a).log_pdf(x)

    def cdf(self, a: float, x):
        return self.statistic_dist(a).cdf(x)

    def sufficient_statistic(self, sample) -> float:
        sample = _sample_array(sample, self.n, minimum=1)
        return float(np.mean(sample)) ** 2

    def sample_statistic(self, a: float, size: int, rng) -> np.ndarray:
        return rng.normal(math.sqrt(a), math.sqrt(1.0 / self.n), size=size) ** 2


@dataclass(frozen=True)
class SymmetricTSquaredF:
    """Squared-t model for symmetric effect-size margins; a = delta^2 >= 0."""

    n: int = 2

    def __post_init__(self):
        _check_n(self.n, minimum=2)

    parameter_space = (0.0, math.inf)
    support = (0.0, math.inf)

    def statistic_dist(self, a: float) -> dist.NoncentralF:
        if a < 0.0:
            raise ParameterError(f"squared effect size must be >= 0, got {a!r}")
        return dist.NoncentralF(1.0, float(self.n - 1), self.n * a)

    def log_density(self, a: float, x):
        return self.statistic_dist(a).log_pdf(x)

    def cdf(self, a: float, x):
        return self.statistic_dist(a).cdf(x)

    def sufficient_statistic(self, sample) -> float:
        sample = _sample_array(sample, self.n, minimum=2)
        var = float(np.var(sample, ddof=1))
        if var == 0.0:
            raise DegenerateSampleError("sample variance is zero")
        return len(sample) * float(np.mean(sample)) ** 2 / var

    def sample_statistic(self, a: float, size: int, rng) -> np.ndarray:
        z = rng.normal(math.sqrt(self.n * a), 1.0, size=size) ** 2
        v = rng.chisquare(float(self.n - 1), size=size)
        return z / (v / (self.n - 1))


ParametricModel = ZTest | TEffectSize | SymmetricZSquared | SymmetricTSquaredF


def _sample_array(sample, n: int, minimum: int) -> np.ndarray:
    arr = np.asarray(sample, dtype=float).ravel()
    if arr.size < minimum:
        raise ParameterError(f"sample must have at least {minimum} observations")
    if arr.size != n:
        raise ParameterError(f"sample length {arr.size} does not match model n={n}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("sample contains non-finite values")
    return arr


# ---------------------------------------------------------------------------
# Mixture alternatives
# ---------------------------------------------------------------------------

#: Gauss-Legendre order used to discretize interval mixtures.
UNIFORM_MIXTURE_ORDER = 64


@dataclass(frozen=True)
class Dirac:
    """Point mass at a single parameter value."""

    at: float

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([self.at]), np.array([1.0])


@dataclass(frozen=True)
class UniformInterval:
    """Uniform mixing distribution on (lower, upper).

    Discretized on construction to Gauss-Legendre nodes so every downstream
    expectation sees a finite weighted sum with controlled error.
    """

    lower: float
    upper: float
    order: int = UNIFORM_MIXTURE_ORDER

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ParameterError("uniform mixture endpoints must be finite")
        if not self.lower < self.upper:
            raise ParameterError("uniform mixture requires lower < upper")
        if self.order < 2:
            raise ParameterError("uniform mixture needs at least 2 nodes")

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        u, w = np.polynomial.legendre.leggauss(self.order)
        mid = 0.5 * (self.lower + self.upper)
        half = 0.5 * (self.upper - self.lower)
        return mid + half * u, w / 2.0


@dataclass(frozen=True)
class DiscreteWeights:
    """Finite mixing distribution over explicit support points."""

    points: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.points) == 0:
            raise ParameterError("mixture must have at least one support point")
        if len(self.points) != len(self.weights):
            raise ParameterError("points and weights must have equal length")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ParameterError("weights must be finite and nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ParameterError(f"weights must sum to 1, got {w.sum()!r}")

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.points, dtype=float), np.asarray(self.weights, dtype=float)


MixtureAlternative = Dirac | UniformInterval | DiscreteWeights


def mixture_log_density(model, alt: MixtureAlternative, x):
    """Log of q(x) = sum_i w_i * p_{mu_i}(x) for the discretized mixture."""
    points, weights = alt.nodes()
    if isinstance(alt, Dirac):
        return model.log_density(points[0], x)
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    rows = np.stack([model.log_density(p, arr) for p in points])
    out = logsumexp(rows + np.log(weights)[:, None], axis=0)
    return out[0].item() if np.ndim(x) == 0 else out


def sufficient_statistic(model, sample) -> float:
    """The reduced statistic on which the model's density is defined."""
    return model.sufficient_statistic(sample)


# ---------------------------------------------------------------------------
# Margins
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarginPair:
    """Equivalence margin pair; ``lower`` may be ``-inf`` for one-sided nulls."""

    lower: float
    upper: float

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ParameterError("margins must not be NaN")
        if not self.lower < self.upper:
            raise ParameterError(f"margins require lower < upper, got {self}")

    @classmethod
    def symmetric(cls, half_width: float) -> "MarginPair":
        if not (math.isfinite(half_width) and half_width > 0.0):
            raise ParameterError("symmetric margin half-width must be positive")
        return cls(-half_width, half_width)

    @property
    def one_sided(self) -> bool:
        return math.isinf(self.lower) or math.isinf(self.upper)

    def contains(self, mu: float) -> bool:
        return self.lower < mu < self.upper


# ---------------------------------------------------------------------------
# JSON construction (shared by the CLI)
# ---------------------------------------------------------------------------

_MODEL_KINDS = {
    "z_test": lambda c: ZTest(sigma=float(c.get("sigma", 1.0)), n=int(c["n"])),
    "t_effect_size": lambda c: TEffectSize(n=int(c["n"])),
    "symmetric_z_squared": lambda c: SymmetricZSquared(n=int(c["n"])),
    "symmetric_t_squared_f": lambda c: SymmetricTSquaredF(n=int(c["n"])),
}


def model_from_config(config: dict) -> ParametricModel:
    """Build a model from a JSON-style dict: {"kind": ..., "n": ..., ...}."""
    try:
        kind = config["kind"]
    except (TypeError, KeyError):
        raise ParameterError("model config must be a dict with a 'kind' key") from None
    try:
        factory = _MODEL_KINDS[kind]
    except KeyError:
        raise ParameterError(
            f"unknown model kind {kind!r}; expected one of {sorted(_MODEL_KINDS)}"
        ) from None
    return factory(config)


def mixture_from_config(config: dict) -> MixtureAlternative:
    """Build a mixture from a JSON-style dict: {"kind": ..., ...}."""
    try:
        kind = config["kind"]
    except (TypeError, KeyError):
        raise ParameterError("mixture config must be a dict with a 'kind' key") from None
    if kind == "dirac":
        return Dirac(at=float(config["at"]))
    if kind == "uniform":
        return UniformInterval(
            lower=float(config["lower"]),
            upper=float(config["upper"]),
            order=int(config.get("order", UNIFORM_MIXTURE_ORDER)),
        )
    if kind == "grid":
        points = tuple(float(p) for p in config["points"])
        if "weights" in config:
            weights = tuple(float(w) for w in config["weights"])
        else:
            weights = tuple(1.0 / len(points) for _ in points)
        return DiscreteWeights(points=points, weights=weights)
    raise ParameterError(f"unknown mixture kind {kind!r}")
