"""Anytime-valid e-processes and the Monte-Carlo campaign harness.

Two construction families:

* running products of conditionally valid per-step e-values (one-sided
  likelihood ratios on raw Gaussian observations; per-step boundary-mixture
  "numeraire" ratios), which are supermartingales under every boundary null;
* full-sample statistic ratios recomputed at each n (the one-sided t process
  and the sign-invariant squared-statistic reductions for symmetric margins),
  whose anytime validity comes from monotone-likelihood-ratio arguments and
  is verified here empirically via the campaign harness.

Derived processes: the sequential TOST (pointwise minimum of two one-sided
processes), universal inference (pointwise minimum over a null grid of
simple-null processes), and level crossings of 1/alpha justified by Ville's
inequality.

Randomness is counter-based: every replication's stream is derived from
(seed, replication index) through an independent Philox generator, so
campaigns are bitwise reproducible and trivially parallel.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import logsumexp

from . import distributions as dist
from .errors import ParameterError
from .models import (
    Dirac,
    DiscreteWeights,
    MarginPair,
    MixtureAlternative,
    TEffectSize,
    ZTest,
    mixture_from_config,
)
from .optimal import calibrate_log

__all__ = [
    "EProcess",
    "StoppingReport",
    "ville_stop",
    "one_sided_lr_process",
    "symmetric_z_process",
    "symmetric_t_process",
    "sequential_tost",
    "product_of_numeraires",
    "sequential_ui",
    "default_squared_mixture",
    "SimCampaign",
    "CampaignResult",
    "run_campaign",
    "replication_stream",
]


# ---------------------------------------------------------------------------
# Core types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EProcess:
    """A time-indexed sequence of e-values with implicit value 1 at time 0."""

    values: np.ndarray
    construction: str

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise ParameterError("an e-process needs a nonempty value sequence")
        if np.any(np.isnan(vals)) or np.any(vals < 0.0):
            raise ParameterError("e-process values must be >= 0")
        object.__setattr__(self, "values", vals)

    @property
    def horizon(self) -> int:
        return int(self.values.size)

    def running_max(self) -> np.ndarray:
        return np.maximum.accumulate(self.values)


@dataclass(frozen=True)
class StoppingReport:
    """First crossing of the rejection threshold 1/alpha, if any."""

    threshold: float
    tau: int | None
    value_at_tau: float | None
    running_max: float


def ville_stop(process: EProcess, alpha: float) -> StoppingReport:
    """First time the process reaches 1/alpha (1-based), with the running max."""
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must be in (0, 1), got {alpha!r}")
    threshold = 1.0 / alpha
    hits = np.nonzero(process.values >= threshold)[0]
    if hits.size == 0:
        return StoppingReport(threshold, None, None, float(np.max(process.values)))
    tau = int(hits[0]) + 1
    return StoppingReport(
        threshold, tau, float(process.values[tau - 1]), float(np.max(process.values))
    )


# ---------------------------------------------------------------------------
# Vectorized process kernels (rows = replications, columns = time)
# ---------------------------------------------------------------------------

def _as_matrix(observations) -> np.ndarray:
    data = np.asarray(observations, dtype=float)
    if data.ndim == 1:
        data = data[None, :]
    if data.ndim != 2 or data.shape[1] < 1:
        raise ParameterError("observations must be a 1-D stream or (reps, time) matrix")
    return data


def _prefix_mean(data: np.ndarray) -> np.ndarray:
    n = np.arange(1, data.shape[1] + 1, dtype=float)
    return np.cumsum(data, axis=1) / n


def _prefix_sd(data: np.ndarray) -> np.ndarray:
    """Prefix sample standard deviations (ddof=1); column 0 is NaN."""
    n = np.arange(1, data.shape[1] + 1, dtype=float)
    mean = _prefix_mean(data)
    sumsq = np.cumsum(data * data, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        var = (sumsq - n * mean * mean) / (n - 1.0)
    var = np.maximum(var, 0.0)
    var[:, 0] = np.nan
    return np.sqrt(var)


def _gauss_log_mix(x: np.ndarray, centers: np.ndarray, weights: np.ndarray, variance: float) -> np.ndarray:
    """log sum_i w_i N(x; centers_i, variance), vectorized over any x shape."""
    z = (x[..., None] - centers) ** 2 / (2.0 * variance)
    base = -0.5 * math.log(2.0 * math.pi * variance)
    return base + logsumexp(-z + np.log(weights), axis=-1)


def _one_sided_z_matrix(data, sigma, boundary, alt: MixtureAlternative) -> np.ndarray:
    points, weights = alt.nodes()
    v = sigma * sigma
    log_q = _gauss_log_mix(data, points, weights, v)
    log_p0 = _gauss_log_mix(data, np.array([boundary]), np.array([1.0]), v)
    return np.exp(np.cumsum(log_q - log_p0, axis=1))


def _numeraire_z_matrix(data, sigma, margins: MarginPair, alt: MixtureAlternative, c: float) -> np.ndarray:
    points, weights = alt.nodes()
    v = sigma * sigma
    log_q = _gauss_log_mix(data, points, weights, v)
    log_pc = _gauss_log_mix(
        data,
        np.array([margins.lower, margins.upper]),
        np.array([c, 1.0 - c]),
        v,
    )
    return np.exp(np.cumsum(log_q - log_pc, axis=1))


def _one_sided_t_matrix(data, boundary_delta, alt: MixtureAlternative) -> np.ndarray:
    points, weights = alt.nodes()
    mean = _prefix_mean(data)
    sd = _prefix_sd(data)
    out = np.ones_like(data)
    for j in range(1, data.shape[1]):
        n = j + 1
        t_n = math.sqrt(n) * mean[:, j] / sd[:, j]
        log_q = _mix_logpdf_nct(t_n, n - 1, math.sqrt(n) * points, weights)
        log_p0 = dist.NoncentralT(n - 1, math.sqrt(n) * boundary_delta).log_pdf(t_n)
        out[:, j] = np.exp(log_q - log_p0)
    return out


def _mix_logpdf_nct(x, dof, ncps, weights) -> np.ndarray:
    rows = np.stack([dist.NoncentralT(dof, float(nc)).log_pdf(x) for nc in ncps])
    return logsumexp(rows + np.log(weights)[:, None], axis=0)


def _symmetric_z_matrix(data, margin_s, sq_alt: MixtureAlternative) -> np.ndarray:
    points, weights = sq_alt.nodes()
    mean = _prefix_mean(data)
    out = np.empty_like(data)
    for j in range(data.shape[1]):
        n = j + 1
        stat = np.maximum(mean[:, j] ** 2, 1e-300)
        log_p0 = dist.ScaledNoncentralChiSq1(1.0 / n, n * margin_s**2).log_pdf(stat)
        rows = np.stack(
            [dist.ScaledNoncentralChiSq1(1.0 / n, n * float(a)).log_pdf(stat) for a in points]
        )
        log_q = logsumexp(rows + np.log(weights)[:, None], axis=0)
        out[:, j] = np.exp(log_q - log_p0)
    return out


def _symmetric_t_matrix(data, margin_s, sq_alt: MixtureAlternative) -> np.ndarray:
    points, weights = sq_alt.nodes()
    mean = _prefix_mean(data)
    sd = _prefix_sd(data)
    out = np.ones_like(data)
    for j in range(1, data.shape[1]):
        n = j + 1
        stat = np.maximum(n * (mean[:, j] / sd[:, j]) ** 2, 1e-300)
        log_p0 = dist.NoncentralF(1.0, n - 1.0, n * margin_s**2).log_pdf(stat)
        rows = np.stack(
            [dist.NoncentralF(1.0, n - 1.0, n * float(a)).log_pdf(stat) for a in points]
        )
        log_q = logsumexp(rows + np.log(weights)[:, None], axis=0)
        out[:, j] = np.exp(log_q - log_p0)
    return out


# ---------------------------------------------------------------------------
# Public single-stream constructors
# ---------------------------------------------------------------------------

def one_sided_lr_process(model, margin: float, alternative: MixtureAlternative,
                         observations) -> EProcess:
    """Likelihood-ratio e-process against the boundary of a one-sided null.

    For ``ZTest`` the model must describe a single observation (``n == 1``);
    the process is the running product of per-observation ratios.  For
    ``TEffectSize`` the full-sample t statistic ratio is recomputed at each
    prefix (defined from n = 2; the value at n = 1 is set to 1).
    """
    data = _as_matrix(observations)
    if isinstance(model, ZTest):
        if model.n != 1:
            raise ParameterError("per-observation products need a ZTest with n=1")
        vals = _one_sided_z_matrix(data, model.sigma, margin, alternative)[0]
        return EProcess(vals, "product")
    if isinstance(model, TEffectSize):
        if model.n != data.shape[1]:
            raise ParameterError("model n must match the stream length")
        vals = _one_sided_t_matrix(data, margin, alternative)[0]
        return EProcess(vals, "statistic_ratio")
    raise ParameterError(f"unsupported model {type(model).__name__} for sequential LR")


def default_squared_mixture(margin_s: float, points: int = 16) -> DiscreteWeights:
    """Uniform grid mixture on [0, margin_s^2) for the squared-scale processes."""
    if points < 1:
        raise ParameterError("mixture needs at least one point")
    grid = margin_s**2 * np.arange(points) / points
    return DiscreteWeights(tuple(float(a) for a in grid), tuple(1.0 / points for _ in grid))


def matched_symmetric_mixtures(margin_s: float, points: int = 16):
    """A symmetric location mixture and its squared-scale pushforward.

    Both mixtures express the same weight measure over effect sizes, so the
    one-sided components and the sign-invariant squared-statistic process
    compete on equal footing.  This is the configuration under which the
    squared-statistic process dominates the sequential TOST.
    """
    squared = default_squared_mixture(margin_s, points)
    deltas = [0.0]
    weights = [1.0 / points]
    for a in squared.points[1:]:
        d = math.sqrt(a)
        deltas += [-d, d]
        weights += [0.5 / points, 0.5 / points]
    total = sum(weights)
    location = DiscreteWeights(tuple(deltas), tuple(w / total for w in weights))
    return location, squared


def symmetric_z_process(observations, margin_s: float,
                        alternative: MixtureAlternative | None = None) -> EProcess:
    """Squared-mean statistic ratio for symmetric margins, unit known variance."""
    if margin_s <= 0.0:
        raise ParameterError("symmetric margin must be positive")
    alt = alternative if alternative is not None else default_squared_mixture(margin_s)
    _check_squared_mixture(alt, margin_s)
    data = _as_matrix(observations)
    return EProcess(_symmetric_z_matrix(data, margin_s, alt)[0], "statistic_ratio")


def symmetric_t_process(observations, margin_s: float,
                        alternative: MixtureAlternative | None = None) -> EProcess:
    """Squared-t statistic ratio for symmetric effect-size margins."""
    if margin_s <= 0.0:
        raise ParameterError("symmetric margin must be positive")
    alt = alternative if alternative is not None else default_squared_mixture(margin_s)
    _check_squared_mixture(alt, margin_s)
    data = _as_matrix(observations)
    if data.shape[1] < 2:
        raise ParameterError("the t-based process needs at least two observations")
    return EProcess(_symmetric_t_matrix(data, margin_s, alt)[0], "statistic_ratio")


def _check_squared_mixture(alt: MixtureAlternative, margin_s: float):
    # the closed upper endpoint is allowed: an atom at the boundary only
    # mixes in a constant-one ratio and cannot hurt validity
    points, _ = alt.nodes()
    if np.any(points < 0.0) or np.any(points > margin_s**2):
        raise ParameterError(
            f"squared-scale mixture must live on [0, {margin_s**2:g}], got {points}"
        )


def sequential_tost(left: EProcess, right: EProcess) -> EProcess:
    """Pointwise minimum of two one-sided e-processes."""
    if left.horizon != right.horizon:
        raise ParameterError("TOST components must share the horizon")
    return EProcess(np.minimum(left.values, right.values), "min")


def product_of_numeraires(model: ZTest, margins: MarginPair,
                          alternative: MixtureAlternative, observations) -> EProcess:
    """Running product of per-step calibrated boundary-mixture e-values.

    For i.i.d. streams the mixing weight is constant over time, so it is
    calibrated once on the single-observation model.
    """
    if not isinstance(model, ZTest) or model.n != 1:
        raise ParameterError("per-step numeraires need a ZTest with n=1")
    report = calibrate_log(model, margins, alternative)
    data = _as_matrix(observations)
    vals = _numeraire_z_matrix(data, model.sigma, margins, alternative, report.c)[0]
    return EProcess(vals, "product")


def sequential_ui(processes) -> EProcess:
    """Pointwise-in-time infimum over a family of simple-null e-processes."""
    processes = list(processes)
    if not processes:
        raise ParameterError("universal inference needs a nonempty family")
    horizon = processes[0].horizon
    if any(p.horizon != horizon for p in processes):
        raise ParameterError("family members must share the horizon")
    vals = np.min(np.stack([p.values for p in processes]), axis=0)
    return EProcess(vals, "ess_inf")


# ---------------------------------------------------------------------------
# Simulation campaigns
# ---------------------------------------------------------------------------

_VARIANTS = ("tost_z", "numeraire_z", "ui_z", "symmetric_z", "tost_t", "symmetric_t")


@dataclass(frozen=True)
class SimCampaign:
    """A reproducible comparison of e-process variants on i.i.d. normal data.

    ``mu_true`` is the data-generating mean; the t-based variants read it as
    the effect size since the generated noise has unit variance.
    ``alternative`` is the location-scale mixture used by the one-sided
    variants; the symmetric variants use ``squared_alternative`` (default: a
    16-point uniform grid mixture on [0, margin^2)).
    """

    margins: MarginPair
    mu_true: float
    horizon: int
    replications: int
    seed: int
    variants: tuple[str, ...]
    alternative: MixtureAlternative = Dirac(0.0)
    squared_alternative: MixtureAlternative | None = None
    alpha: float = 0.05
    sigma: float = 1.0
    ui_grid_points: int = 8

    def __post_init__(self):
        if self.horizon < 2 or self.replications < 1:
            raise ParameterError("campaign needs horizon >= 2 and replications >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError("alpha must be in (0, 1)")
        unknown = set(self.variants) - set(_VARIANTS)
        if unknown:
            raise ParameterError(f"unknown variants {sorted(unknown)}; choose from {_VARIANTS}")
        needs_symmetric = {"symmetric_z", "symmetric_t", "tost_t"} & set(self.variants)
        if needs_symmetric and self.margins.upper != -self.margins.lower:
            raise ParameterError(f"{sorted(needs_symmetric)} require symmetric margins")

    @property
    def margin_s(self) -> float:
        return self.margins.upper

    @classmethod
    def from_config(cls, config: dict) -> "SimCampaign":
        margins = MarginPair(float(config["margins"][0]), float(config["margins"][1]))
        alt_cfg = config.get("alternative", {"kind": "dirac", "at": 0.0})
        if isinstance(alt_cfg, dict) and alt_cfg.get("kind") == "matched_symmetric":
            alt, sq_alt = matched_symmetric_mixtures(
                margins.upper, int(alt_cfg.get("points", 16))
            )
        else:
            alt = mixture_from_config(alt_cfg)
            sq_alt = None
            if "squared_alternative" in config:
                sq_alt = mixture_from_config(config["squared_alternative"])
        return cls(
            margins=margins,
            mu_true=float(config["mu_true"]),
            horizon=int(config["horizon"]),
            replications=int(config["replications"]),
            seed=int(config["seed"]),
            variants=tuple(config["variants"]),
            alternative=alt,
            squared_alternative=sq_alt,
            alpha=float(config.get("alpha", 0.05)),
            sigma=float(config.get("sigma", 1.0)),
        )


@dataclass(frozen=True)
class CampaignResult:
    """Per-variant, per-time mean e-values and rejection frequencies."""

    campaign: SimCampaign
    variants: tuple[str, ...]
    mean_e: dict
    se_e: dict
    reject: dict
    se_reject: dict

    def rows(self):
        for variant in self.variants:
            for j in range(self.campaign.horizon):
                yield {
                    "variant": variant,
                    "n": j + 1,
                    "mean_e": self.mean_e[variant][j],
                    "se_e": self.se_e[variant][j],
                    "reject_prob": self.reject[variant][j],
                    "se_reject": self.se_reject[variant][j],
                }

    def to_csv_text(self) -> str:
        fmt = "%.12g"
        lines = ["variant,n,mean_e,se_e,reject_prob,se_reject"]
        for row in self.rows():
            lines.append(
                f"{row['variant']},{row['n']},{fmt % row['mean_e']},{fmt % row['se_e']},"
                f"{fmt % row['reject_prob']},{fmt % row['se_reject']}"
            )
        return "\n".join(lines) + "\n"


def replication_stream(seed: int, replication: int, horizon: int, mu: float,
                       sigma: float = 1.0) -> np.ndarray:
    """The deterministic observation stream for (seed, replication)."""
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, replication))))
    return gen.normal(mu, sigma, size=horizon)


def _campaign_data(campaign: SimCampaign) -> np.ndarray:
    return np.stack(
        [
            replication_stream(
                campaign.seed, rep, campaign.horizon, campaign.mu_true, campaign.sigma
            )
            for rep in range(campaign.replications)
        ]
    )


def _variant_matrix(variant: str, campaign: SimCampaign, data: np.ndarray) -> np.ndarray:
    margins = campaign.margins
    alt = campaign.alternative
    sigma = campaign.sigma
    if variant == "tost_z":
        left = _one_sided_z_matrix(data, sigma, margins.lower, alt)
        right = _one_sided_z_matrix(data, sigma, margins.upper, alt)
        return np.minimum(left, right)
    if variant == "numeraire_z":
        c = calibrate_log(ZTest(sigma=sigma, n=1), margins, alt).c
        return _numeraire_z_matrix(data, sigma, margins, alt, c)
    if variant == "ui_z":
        grid = np.concatenate(
            [
                np.linspace(margins.lower - 2.0 * sigma, margins.lower, campaign.ui_grid_points),
                np.linspace(margins.upper, margins.upper + 2.0 * sigma, campaign.ui_grid_points),
            ]
        )
        running = None
        for mu0 in grid:
            mat = _one_sided_z_matrix(data, sigma, float(mu0), alt)
            running = mat if running is None else np.minimum(running, mat)
        return running
    sq_alt = campaign.squared_alternative or default_squared_mixture(campaign.margin_s)
    _check_squared_mixture(sq_alt, campaign.margin_s)
    if variant == "symmetric_z":
        return _symmetric_z_matrix(data, campaign.margin_s, sq_alt)
    if variant == "symmetric_t":
        return _symmetric_t_matrix(data, campaign.margin_s, sq_alt)
    if variant == "tost_t":
        left = _one_sided_t_matrix(data, -campaign.margin_s, alt)
        right = _one_sided_t_matrix(data, campaign.margin_s, alt)
        return np.minimum(left, right)
    raise ParameterError(f"unknown variant {variant!r}")  # pragma: no cover


def run_campaign(campaign: SimCampaign) -> CampaignResult:
    """Run every variant on shared streams and summarize per time point."""
    data = _campaign_data(campaign)
    threshold = 1.0 / campaign.alpha
    m = campaign.replications
    mean_e, se_e, reject, se_reject = {}, {}, {}, {}
    for variant in campaign.variants:
        mat = _variant_matrix(variant, campaign, data)
        mean_e[variant] = np.mean(mat, axis=0)
        se_e[variant] = np.std(mat, axis=0, ddof=1) / math.sqrt(m) if m > 1 else np.zeros(mat.shape[1])
        crossed = np.maximum.accumulate(mat, axis=1) >= threshold
        p = np.mean(crossed, axis=0)
        reject[variant] = p
        se_reject[variant] = np.sqrt(p * (1.0 - p) / m)
    return CampaignResult(
        campaign=campaign,
        variants=tuple(campaign.variants),
        mean_e=mean_e,
        se_e=se_e,
        reject=reject,
        se_reject=se_reject,
    )
