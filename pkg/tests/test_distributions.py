import math

import mpmath as mp
import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from equicurve import distributions as dist
from equicurve.errors import DomainError, ParameterError


# ---------------------------------------------------------------------------
# High-precision oracles, independent of the package's series/quadrature code.
# ---------------------------------------------------------------------------

def nct_logpdf_oracle(x, df, nc):
    # Closed form via confluent hypergeometric functions at 120 digits.
    with mp.workdps(120):
        t, v, d = mp.mpf(x), mp.mpf(df), mp.mpf(nc)
        fac = t**2 + v
        y = d**2 * t**2 / (2 * fac)
        lead = v**(v / 2) * mp.gamma(v + 1) * mp.e**(-(d**2) / 2) / (
            2**v * fac**(v / 2) * mp.gamma(v / 2)
        )
        term_a = mp.sqrt(2) * d * t * mp.hyp1f1(v / 2 + 1, mp.mpf(3) / 2, y) / (
            fac * mp.gamma((v + 1) / 2)
        )
        term_b = mp.hyp1f1((v + 1) / 2, mp.mpf(1) / 2, y) / (
            mp.sqrt(fac) * mp.gamma(v / 2 + 1)
        )
        return float(mp.log(lead * (term_a + term_b)))


def ncx2_logpdf_oracle(y, df, nc):
    # Bessel-function form of the noncentral chi-square density.
    with mp.workdps(80):
        y_, d_, l_ = mp.mpf(y), mp.mpf(df), mp.mpf(nc)
        val = (
            mp.mpf(1) / 2
            * mp.e**(-(y_ + l_) / 2)
            * (y_ / l_)**(d_ / 4 - mp.mpf(1) / 2)
            * mp.besseli(d_ / 2 - 1, mp.sqrt(l_ * y_))
        )
        return float(mp.log(val))


def ncf_logpdf_oracle(x, d1, d2, nc):
    with mp.workdps(80):
        x_, a, b, l_ = mp.mpf(x), mp.mpf(d1), mp.mpf(d2), mp.mpf(nc)
        lead = (
            mp.e**(-l_ / 2)
            * (a / b)**(a / 2)
            * x_**(a / 2 - 1)
            * (1 + a * x_ / b)**(-(a + b) / 2)
            / mp.beta(a / 2, b / 2)
        )
        arg = l_ * a * x_ / (2 * (a * x_ + b))
        return float(mp.log(lead * mp.hyp1f1((a + b) / 2, a / 2, arg)))


def ncf_pdf_poisson_mixture(x, d1, d2, nc):
    # Plain-space Poisson mixture of central F terms, relative tail mass 1e-14.
    lam = nc / 2.0
    k_hi = int(stats.poisson.isf(1e-14, lam)) + 5 if lam > 0 else 0
    total = 0.0
    for k in range(k_hi + 1):
        w = stats.poisson.pmf(k, lam) if lam > 0 else 1.0
        scale = d1 / (d1 + 2 * k)
        total += w * stats.f.pdf(x * scale, d1 + 2 * k, d2) * scale
    return total


# ---------------------------------------------------------------------------
# Spec examples
# ---------------------------------------------------------------------------

def test_standard_normal_at_zero():
    assert dist.log_pdf(dist.Normal(0.0, 1.0), 0.0) == pytest.approx(
        math.log(1.0 / math.sqrt(2 * math.pi)), abs=1e-14
    )


def test_noncentral_t_reduces_to_central():
    spec = dist.NoncentralT(5.0, 0.0)
    assert dist.log_pdf(spec, 1.2) == pytest.approx(stats.t.logpdf(1.2, 5), abs=1e-12)


def test_noncentral_f_against_series_oracle():
    spec = dist.NoncentralF(1.0, 9.0, 2.5)
    expected = math.log(ncf_pdf_poisson_mixture(1.0, 1.0, 9.0, 2.5))
    assert dist.log_pdf(spec, 1.0) == pytest.approx(expected, abs=1e-12)


def test_normal_cdf_symmetry():
    assert dist.cdf(dist.Normal(0.0, 1.0), 0.0) == pytest.approx(0.5, abs=1e-15)
    assert dist.cdf(dist.NoncentralT(10.0, 0.0), 0.0) == pytest.approx(0.5, abs=1e-12)


def test_scaled_chisq_cdf_against_monte_carlo():
    scale, nc = 0.1, 1.5
    spec = dist.ScaledNoncentralChiSq1(scale, nc)
    rng = np.random.default_rng(20240811)
    draws = scale * (rng.normal(size=1_000_000) + math.sqrt(nc)) ** 2
    for x in (0.05, 0.2, 0.5):
        p_hat = np.mean(draws <= x)
        se = math.sqrt(p_hat * (1 - p_hat) / draws.size)
        assert abs(dist.cdf(spec, x) - p_hat) <= 3 * se


# ---------------------------------------------------------------------------
# High-precision oracle sweeps
# ---------------------------------------------------------------------------

def test_noncentral_t_logpdf_matches_high_precision():
    cases = [
        (x, df, nc)
        for df in (1.0, 4.0, 19.0, 49.0)
        for nc in (0.0, 0.5, 3.5355, 7.0, -2.5)
        for x in (-8.0, -2.0, -0.3, 0.0, 0.7, 3.0, 10.0)
    ]
    for x, df, nc in cases:
        got = dist.log_pdf(dist.NoncentralT(df, nc), x)
        want = nct_logpdf_oracle(x, df, nc)
        assert abs(math.expm1(got - want)) < 1e-10, (x, df, nc)


def test_noncentral_f_logpdf_matches_high_precision():
    cases = [
        (x, d1, d2, nc)
        for (d1, d2) in ((1.0, 9.0), (1.0, 49.0), (3.0, 12.0))
        for nc in (0.1, 2.5, 12.5)
        for x in (0.01, 0.4, 1.0, 6.0, 40.0)
    ]
    for x, d1, d2, nc in cases:
        got = dist.log_pdf(dist.NoncentralF(d1, d2, nc), x)
        want = ncf_logpdf_oracle(x, d1, d2, nc)
        assert abs(math.expm1(got - want)) < 1e-10, (x, d1, d2, nc)


def test_scaled_chisq_logpdf_matches_high_precision():
    cases = [
        (x, scale, nc)
        for scale in (0.025, 0.1, 0.5)
        for nc in (0.4, 4.0, 18.0)
        for x in (0.001, 0.05, 0.3, 2.0)
    ]
    for x, scale, nc in cases:
        got = dist.log_pdf(dist.ScaledNoncentralChiSq1(scale, nc), x)
        want = ncx2_logpdf_oracle(x / scale, 1.0, nc) - math.log(scale)
        assert abs(math.expm1(got - want)) < 1e-10, (x, scale, nc)


def test_deep_tail_stays_finite():
    # values frozen from the high-precision oracles above
    got_t = dist.log_pdf(dist.NoncentralT(49.0, 10.0), -26.0)
    assert got_t == pytest.approx(-168.01441002641351, abs=1e-9)
    got_f = dist.log_pdf(dist.NoncentralF(1.0, 9.0, 9.0), 4000.0)
    assert got_f == pytest.approx(-28.997142128231882, abs=1e-9)
    # far deeper, where float pdfs underflow entirely
    assert math.isfinite(dist.log_pdf(dist.NoncentralT(9.0, 10.0), -300.0))
    assert math.isfinite(dist.log_pdf(dist.ScaledNoncentralChiSq1(0.1, 20.0), 500.0))


# ---------------------------------------------------------------------------
# Invariants
# ---------------------------------------------------------------------------

def _param_grid():
    combos = []
    for m, v in ((0.0, 1.0), (-1.0, 3.0), (0.05, 0.025), (2.0, 10.0)):
        combos.append(dist.Normal(m, v))
    for df in (1.0, 3.0, 9.0, 39.0):
        for nc in (0.0, 1.0, 3.0, -4.0):
            combos.append(dist.NoncentralT(df, nc))
    for scale in (0.05, 0.25, 1.0):
        for nc in (0.0, 2.0, 10.0, 20.0):
            combos.append(dist.ScaledNoncentralChiSq1(scale, nc))
    for d2 in (4.0, 19.0, 49.0):
        for nc in (0.0, 1.0, 6.0, 12.0):
            combos.append(dist.NoncentralF(1.0, d2, nc))
        for nc in (0.0, 6.0):
            combos.append(dist.NoncentralF(2.0, d2, nc))
    return combos


def test_density_normalizes_on_parameter_grid():
    specs = _param_grid()
    assert len(specs) >= 50
    for spec in specs:
        lo, hi = spec.support
        if lo == 0.0:
            # substitute u = sqrt(x) to remove the df=1 endpoint singularity
            integrand = lambda u: math.exp(dist.log_pdf(spec, u * u)) * 2.0 * u
            lo = 1e-13
        else:
            integrand = lambda x: math.exp(dist.log_pdf(spec, x))
        total, err = quad(integrand, lo, hi, limit=400, epsabs=1e-11, epsrel=1e-11)
        assert total == pytest.approx(1.0, abs=1e-8), spec


def test_central_t_reduction_on_grid():
    xs = np.linspace(-10.0, 10.0, 201)
    for df in (1.0, 5.0, 24.0):
        got = dist.log_pdf(dist.NoncentralT(df, 0.0), xs)
        want = stats.t.logpdf(xs, df)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


def test_cdf_monotone_and_tail_limits():
    grids = {
        dist.Normal(0.3, 2.0): np.linspace(-20, 20, 300),
        dist.NoncentralT(7.0, 1.5): np.linspace(-40, 40, 300),
        dist.ScaledNoncentralChiSq1(0.2, 3.0): np.linspace(1e-6, 60, 300),
        dist.NoncentralF(1.0, 9.0, 2.5): np.linspace(1e-6, 4000, 300),
    }
    for spec, grid in grids.items():
        vals = dist.cdf(spec, grid)
        assert np.all(np.diff(vals) >= -1e-12)
        assert np.all((vals >= 0.0) & (vals <= 1.0))
        lo, hi = spec.support
        lo_proxy = -60.0 if math.isinf(lo) else 0.0
        assert dist.cdf(spec, lo_proxy) < 1e-12
        assert dist.cdf(spec, 1e7) > 1 - 1e-12


def test_noncentral_f_likelihood_ratio_monotone():
    # MLR sanity across the noncentrality parameter (order-2 total positivity).
    xs = np.linspace(0.01, 30.0, 200)
    pairs = [(0.5, 2.0), (2.0, 5.0), (0.0, 1.0)]
    for nc1, nc2 in pairs:
        r = dist.log_pdf(dist.NoncentralF(1.0, 9.0, nc2), xs) - dist.log_pdf(
            dist.NoncentralF(1.0, 9.0, nc1), xs
        )
        assert np.all(np.diff(r) >= -1e-10), (nc1, nc2)


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

def test_support_violations_raise():
    with pytest.raises(DomainError):
        dist.log_pdf(dist.ScaledNoncentralChiSq1(0.1, 1.0), -0.5)
    with pytest.raises(DomainError):
        dist.log_pdf(dist.NoncentralF(1.0, 9.0, 1.0), 0.0)
    with pytest.raises(DomainError):
        dist.log_pdf(dist.Normal(0.0, 1.0), math.nan)


def test_bad_parameters_raise():
    with pytest.raises(ParameterError):
        dist.Normal(0.0, -1.0)
    with pytest.raises(ParameterError):
        dist.Normal(math.inf, 1.0)
    with pytest.raises(ParameterError):
        dist.NoncentralT(0.0, 1.0)
    with pytest.raises(ParameterError):
        dist.NoncentralF(1.0, 9.0, -0.5)
    with pytest.raises(ParameterError):
        dist.ScaledNoncentralChiSq1(0.0, 1.0)
