import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import norm

from equicurve import optimal
from equicurve.errors import ParameterError
from equicurve.models import Dirac, MarginPair, TEffectSize, ZTest

Z40 = ZTest(sigma=1.0, n=40)
ASYM = MarginPair(-0.6, 0.4)
SYM = MarginPair(-0.5, 0.5)


# ---------------------------------------------------------------------------
# Counterexample kernel (order-2 family that breaks at order 3)
# ---------------------------------------------------------------------------

def test_kernel_calibration_and_validity_violation():
    k = optimal.COUNTEREXAMPLE_KERNEL
    rep = optimal.calibrate_log(k, MarginPair(1.0, 3.0), Dirac(2.0))
    assert rep.c == pytest.approx(0.558, abs=1e-3)
    assert rep.e_lower == pytest.approx(1.0, abs=1e-12)
    assert rep.e_upper == pytest.approx(1.0, abs=1e-12)
    ev = optimal.BoundaryMixtureEValue(
        k, MarginPair(1.0, 3.0), Dirac(2.0), c=rep.c, calibrated=True
    )
    sweep = optimal.validity_sweep(ev, k, [1.0, 3.0, 4.0])
    assert sweep.max_expectation > 1.0
    assert sweep.argmax == 4.0
    # restricted to the two calibrated rows the e-value is valid and has power
    assert max(sweep.expectations[0], sweep.expectations[1]) <= 1.0 + 1e-12
    assert ev.null_expectation(2.0) > 1.0


def test_stp_check_verdicts():
    k = optimal.COUNTEREXAMPLE_KERNEL
    assert optimal.stp_check(k, 2).strict_pass
    v3 = optimal.stp_check(k, 3)
    assert not v3.strict_pass
    assert v3.witness_rows == (0, 1, 2)
    assert v3.witness_cols == (0, 1, 2)
    assert v3.witness_minor < 0.0
    single = optimal.DiscreteKernel((1.0,), (1.0, 2.0), np.array([[0.4, 0.6]]))
    assert optimal.stp_check(single, 1).strict_pass
    with pytest.raises(ParameterError):
        optimal.stp_check(k, 4)


def test_stp2_pass_implies_monotone_likelihood_ratios():
    k = optimal.COUNTEREXAMPLE_KERNEL
    assert optimal.stp_check(k, 2).strict_pass
    for i in range(3):
        for j in range(i + 1, 4):
            ratio = k.pmf[j] / k.pmf[i]
            assert np.all(np.diff(ratio) > 0.0), (i, j)


# ---------------------------------------------------------------------------
# Simplex geometry
# ---------------------------------------------------------------------------

P1 = np.array([16.0, 7.0, 1.0]) / 24.0
P2 = np.array([12.0, 6.0, 6.0]) / 24.0


def _region_oracle(p):
    # explicit wedge + determinant-line computation, independent of stp_check
    x, y, z = p
    if min(p) <= 0.0:
        return "not_stp2"
    pairs = [(P1, P2), (P1, p), (P2, p)]
    for lo, hi in pairs:
        for c1 in range(3):
            for c2 in range(c1 + 1, 3):
                if lo[c1] * hi[c2] - lo[c2] * hi[c1] <= 0.0:
                    return "not_stp2"
    det = float(np.linalg.det(np.vstack([P1, P2, p])))
    return "stp3_side" if det > 0.0 else "stp2_only"


def test_simplex_region_paper_points():
    k = optimal.COUNTEREXAMPLE_KERNEL
    assert optimal.simplex_region(k.pmf[2], P1, P2) == "stp2_only"
    assert optimal.simplex_region(k.pmf[3], P1, P2) == "stp2_only"
    # convex moves toward the (0, 0, 1) vertex land on the order-3 side
    p = 0.7 * P2 + 0.3 * np.array([0.0, 0.001, 0.999])
    p = p / p.sum()
    assert optimal.simplex_region(p, P1, P2) == "stp3_side"
    with pytest.raises(ParameterError):
        optimal.simplex_region((0.5, 0.6, -0.1), P1, P2)


def test_simplex_region_matches_oracle_on_random_points():
    rng = np.random.default_rng(2718)
    for _ in range(200):
        p = rng.dirichlet(np.ones(3))
        got = optimal.simplex_region(p, P1, P2)
        assert got == _region_oracle(p), p


def test_simplex_region_determinant_boundary_is_not_strict():
    # a point just off the determinant line keeps its strict classification
    x = 0.25
    y = (1.0 + 2.0 * x) / 8.0
    z = 1.0 - x - y
    eps = 1e-6
    below = np.array([x, y + eps, z - eps])  # 3x - 7y + z < 0
    above = np.array([x, y - eps, z + eps])
    assert optimal.simplex_region(below, P1, P2) == "stp2_only"
    assert optimal.simplex_region(above, P1, P2) == "stp3_side"


# ---------------------------------------------------------------------------
# Log calibration
# ---------------------------------------------------------------------------

def test_symmetric_z_calibration_gives_half():
    rep = optimal.calibrate_log(Z40, SYM, Dirac(0.0))
    assert rep.c == pytest.approx(0.5, abs=1e-9)
    assert rep.lam == 1.0


def test_symmetric_t_calibration_gives_half():
    rep = optimal.calibrate_log(TEffectSize(n=12), SYM, Dirac(0.0))
    assert rep.c == pytest.approx(0.5, abs=1e-7)


def test_asymmetric_calibration_verified_by_monte_carlo():
    rep = optimal.calibrate_log(Z40, ASYM, Dirac(0.0))
    ev = optimal.BoundaryMixtureEValue(Z40, ASYM, Dirac(0.0), c=rep.c, calibrated=True)
    rng = np.random.default_rng(60457)
    for boundary in (-0.6, 0.4):
        draws = Z40.sample_statistic(boundary, 1_000_000, rng)
        vals = ev.evaluate(draws)
        se = float(np.std(vals, ddof=1) / math.sqrt(draws.size))
        assert abs(float(np.mean(vals)) - 1.0) <= 3 * se


def test_boundary_gap_strictly_decreasing_in_c():
    gaps = []
    for c in np.linspace(0.05, 0.95, 20):
        ev = optimal.BoundaryMixtureEValue(Z40, ASYM, Dirac(0.0), c=float(c))
        gaps.append(ev.null_expectation(-0.6) - ev.null_expectation(0.4))
    assert np.all(np.diff(gaps) < 0.0)


def test_one_sided_margin_forces_degenerate_weight():
    rep = optimal.calibrate_log(Z40, MarginPair(-math.inf, 0.4), Dirac(0.0))
    assert rep.c == 0.0
    assert rep.e_upper == pytest.approx(1.0, abs=1e-10)
    rep2 = optimal.calibrate_log(Z40, MarginPair(-0.6, math.inf), Dirac(0.0))
    assert rep2.c == 1.0


def test_alternative_must_sit_inside_margins_for_calibration():
    with pytest.raises(ParameterError):
        optimal.calibrate_log(Z40, ASYM, Dirac(0.4))
    with pytest.raises(ParameterError):
        optimal.calibrate_log(Z40, ASYM, Dirac(-1.0))


def test_panel_quadrature_agrees_with_adaptive_quad():
    ev = optimal.BoundaryMixtureEValue(Z40, ASYM, Dirac(0.0), c=0.3)

    def integrand(x):
        return math.exp(float(ev.log_evaluate(x)) + float(Z40.log_density(-0.6, x)))

    want, _ = integrate.quad(integrand, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13)
    got = ev.null_expectation(-0.6)
    assert got == pytest.approx(want, abs=1e-11)


# ---------------------------------------------------------------------------
# Evaluation identities
# ---------------------------------------------------------------------------

def test_log_optimal_value_at_midpoint():
    ev = optimal.make_log_optimal(Z40, SYM, Dirac(0.0))
    assert ev.c == pytest.approx(0.5, abs=1e-9)
    v = Z40.statistic_variance
    x = 0.0  # midpoint of the symmetric margins
    want = norm.pdf(x, 0.0, math.sqrt(v)) / (
        0.5 * norm.pdf(x, -0.5, math.sqrt(v)) + 0.5 * norm.pdf(x, 0.5, math.sqrt(v))
    )
    assert ev.evaluate(x) == pytest.approx(want, rel=1e-9)


def test_boundary_dirac_with_full_weight_is_constant_one():
    ev = optimal.BoundaryMixtureEValue(
        Z40, MarginPair(-0.6, 0.4), Dirac(-0.6), c=1.0
    )
    xs = np.linspace(-2, 2, 50)
    np.testing.assert_allclose(ev.evaluate(xs), 1.0, rtol=1e-12)


def test_zero_alternative_density_maps_to_zero():
    k = optimal.COUNTEREXAMPLE_KERNEL
    ev = optimal.BoundaryMixtureEValue(k, MarginPair(1.0, 3.0), Dirac(2.0), c=0.5)
    assert np.isfinite(ev.evaluate(2.0))


# ---------------------------------------------------------------------------
# Utility calibration
# ---------------------------------------------------------------------------

def test_log_utility_through_nested_path_matches_direct():
    direct = optimal.calibrate_log(Z40, ASYM, Dirac(0.0))
    nested = optimal.calibrate_utility(Z40, ASYM, Dirac(0.0), optimal.LogUtility())
    assert nested.c == pytest.approx(direct.c, abs=1e-6)
    assert nested.lam == pytest.approx(1.0, abs=1e-6)


def test_neyman_pearson_recovers_ump_structure():
    alpha = 0.05
    rep = optimal.calibrate_utility(Z40, SYM, Dirac(0.0), optimal.NeymanPearsonUtility(alpha))
    assert rep.c == pytest.approx(0.5, abs=1e-6)
    ev = optimal.BoundaryMixtureEValue(
        Z40, SYM, Dirac(0.0), c=rep.c, lam=rep.lam,
        utility=optimal.NeymanPearsonUtility(alpha), calibrated=True,
    )
    # two-valued outcome
    xs = np.linspace(-1.5, 1.5, 2001)
    vals = ev.evaluate(xs)
    assert set(np.round(np.unique(vals), 9)) <= {0.0, round(1 / alpha, 9)}
    # rejection region has probability alpha at both boundaries
    lo, hi = ev._np_rejection_interval()
    for b in (-0.5, 0.5):
        mass = float(Z40.cdf(b, hi)) - float(Z40.cdf(b, lo))
        assert mass == pytest.approx(alpha, abs=1e-6)


def test_power_utility_symmetric_margin_gives_half():
    rep = optimal.calibrate_utility(Z40, SYM, Dirac(0.0), optimal.PowerUtility(0.5))
    assert rep.c == pytest.approx(0.5, abs=1e-6)
    assert rep.e_lower == pytest.approx(1.0, abs=1e-7)


def test_xuprime_diagnostic():
    assert optimal.xuprime_max(optimal.LogUtility()) == 1.0
    assert optimal.xuprime_max(optimal.NeymanPearsonUtility(0.05)) <= 20.0
    # the power family is only range-bounded
    assert optimal.xuprime_max(optimal.PowerUtility(0.5), hi=1e8) > 1e3


def test_neyman_pearson_needs_continuous_model():
    k = optimal.COUNTEREXAMPLE_KERNEL
    ev = optimal.BoundaryMixtureEValue(
        k, MarginPair(1.0, 3.0), Dirac(2.0), c=0.5,
        utility=optimal.NeymanPearsonUtility(0.1),
    )
    with pytest.raises(ParameterError):
        ev.null_expectation(1.0)


# ---------------------------------------------------------------------------
# TOST-E and universal inference
# ---------------------------------------------------------------------------

def test_tost_log_closed_form():
    tost = optimal.tost_e(Z40, ASYM, Dirac(0.0))
    v = Z40.statistic_variance
    want = norm.pdf(0.0, 0.0, math.sqrt(v)) / max(
        norm.pdf(0.0, -0.6, math.sqrt(v)), norm.pdf(0.0, 0.4, math.sqrt(v))
    )
    assert tost.evaluate(0.0) == pytest.approx(want, rel=1e-10)


def test_tost_equals_one_sided_value_where_boundary_densities_tie():
    tost = optimal.tost_e(Z40, SYM, Dirac(0.0))
    # at the midpoint the boundary densities coincide
    left = tost.left.evaluate(0.0)
    right = tost.right.evaluate(0.0)
    assert left == pytest.approx(right, rel=1e-12)
    assert tost.evaluate(0.0) == pytest.approx(left, rel=1e-12)


def test_log_optimal_dominates_tost_pointwise():
    ev = optimal.make_log_optimal(Z40, ASYM, Dirac(0.0))
    tost = optimal.tost_e(Z40, ASYM, Dirac(0.0))
    xs = np.linspace(-2.0, 2.0, 1000)
    assert np.all(tost.evaluate(xs) <= ev.evaluate(xs) * (1 + 1e-12))


def test_ui_two_point_grid_equals_tost():
    tost = optimal.tost_e(Z40, ASYM, Dirac(0.0))
    ui = optimal.universal_inference(Z40, ASYM, Dirac(0.0), null_grid=(-0.6, 0.4))
    xs = np.linspace(-2.0, 2.0, 400)
    np.testing.assert_allclose(ui.evaluate(xs), tost.evaluate(xs), rtol=1e-12)


def test_ui_refinement_never_increases():
    base = optimal.universal_inference(Z40, ASYM, Dirac(0.0), null_grid=(-0.6, 0.4))
    finer = optimal.universal_inference(
        Z40, ASYM, Dirac(0.0), null_grid=(-1.0, -0.8, -0.6, 0.4, 0.7, 1.0)
    )
    xs = np.linspace(-2.0, 2.0, 400)
    assert np.all(finer.evaluate(xs) <= base.evaluate(xs) * (1 + 1e-12))


def test_ui_sup_attained_at_data_point_inside_null():
    grid = optimal.default_null_grid(Z40, ASYM)
    ui = optimal.universal_inference(Z40, ASYM, Dirac(0.0), null_grid=grid)
    x = 0.9  # far in the right null region; the grid contains a point near x
    v = Z40.statistic_variance
    nearest = grid[int(np.argmin(np.abs(np.asarray(grid) - x)))]
    want = norm.pdf(x, 0.0, math.sqrt(v)) / norm.pdf(x, nearest, math.sqrt(v))
    assert ui.evaluate(x) == pytest.approx(want, rel=1e-9)


def test_dominance_chain_on_random_configurations():
    rng = np.random.default_rng(11)
    for _ in range(10):
        n = int(rng.integers(10, 80))
        sigma = float(rng.uniform(0.5, 2.0))
        model = ZTest(sigma=sigma, n=n)
        lo = float(rng.uniform(-1.0, -0.2))
        hi = float(rng.uniform(0.2, 1.0))
        margins = MarginPair(lo, hi)
        alt = Dirac(float(rng.uniform(lo * 0.5, hi * 0.5)))
        ev = optimal.make_log_optimal(model, margins, alt)
        tost = optimal.tost_e(model, margins, alt)
        ui = optimal.universal_inference(model, margins, alt)
        xs = np.linspace(lo - 1.0, hi + 1.0, 1000)
        e_ui, e_t, e_l = ui.evaluate(xs), tost.evaluate(xs), ev.evaluate(xs)
        assert np.all(e_ui <= e_t * (1 + 1e-12))
        assert np.all(e_t <= e_l * (1 + 1e-12))


# ---------------------------------------------------------------------------
# Validity sweeps and shape diagnostics
# ---------------------------------------------------------------------------

def test_validity_sweeps_stay_below_one():
    grid = optimal.default_null_grid(Z40, ASYM)
    assert len(grid) == 50
    ev = optimal.make_log_optimal(Z40, ASYM, Dirac(0.0))
    tost = optimal.tost_e(Z40, ASYM, Dirac(0.0))
    ui = optimal.universal_inference(Z40, ASYM, Dirac(0.0))
    for obj in (ev, tost, ui):
        sweep = optimal.validity_sweep(obj, Z40, grid)
        assert sweep.max_expectation <= 1.0 + 1e-6, type(obj)


def test_constant_evalue_sweep_is_exactly_one():
    class Unit:
        def log_evaluate(self, x):
            return np.zeros_like(np.asarray(x, dtype=float))

        def evaluate(self, x):
            return np.ones_like(np.asarray(x, dtype=float))

    sweep = optimal.validity_sweep(Unit(), Z40, [-0.6, 0.0, 0.4])
    assert sweep.max_expectation == pytest.approx(1.0, abs=1e-12)


def test_monte_carlo_sweep_agrees_with_quadrature():
    ev = optimal.make_log_optimal(Z40, ASYM, Dirac(0.0))
    quad_sweep = optimal.validity_sweep(ev, Z40, [-0.6, 0.4])
    mc_sweep = optimal.validity_sweep(
        ev, Z40, [-0.6, 0.4], method="monte_carlo", mc_size=200_000, seed=9
    )
    for q, m, se in zip(quad_sweep.expectations, mc_sweep.expectations, mc_sweep.errors):
        assert abs(q - m) <= 4 * se
    # determinism under a fixed seed
    again = optimal.validity_sweep(
        ev, Z40, [-0.6, 0.4], method="monte_carlo", mc_size=200_000, seed=9
    )
    assert again.expectations == mc_sweep.expectations


def test_unimodality_diagnostic():
    assert optimal.count_strict_local_extrema([1.0, 2.0, 3.0]) == 0
    assert optimal.count_strict_local_extrema([1.0, 3.0, 2.0]) == 1
    assert optimal.count_strict_local_extrema([1.0, 3.0, 3.0, 2.0, 5.0]) == 2
    ev = optimal.make_log_optimal(Z40, ASYM, Dirac(0.0))
    xs = np.linspace(-2.5, 2.5, 10_000)
    assert optimal.count_strict_local_extrema(ev.evaluate(xs)) <= 1


def test_sweep_rejects_empty_grid_and_bad_method():
    ev = optimal.make_log_optimal(Z40, ASYM, Dirac(0.0))
    with pytest.raises(ParameterError):
        optimal.validity_sweep(ev, Z40, [])
    with pytest.raises(ParameterError):
        optimal.validity_sweep(ev, Z40, [0.4], method="bogus")


# ---------------------------------------------------------------------------
# Mean-scale TOST with unknown variance
# ---------------------------------------------------------------------------

def test_mean_scale_t_tost_structure():
    sample = [0.2, -0.1, 0.4, 0.0, 0.1]
    margins = MarginPair(-0.5, 0.5)
    val = optimal.mean_scale_t_tost(sample, margins, ncp_alt=1.0)
    assert val > 0.0
    # hand recomputation of the two shifted t ratios
    import numpy as _np
    from equicurve import distributions as dist

    arr = _np.asarray(sample)
    sd = float(_np.std(arr, ddof=1))
    rn = math.sqrt(arr.size)
    t_l = rn * (arr.mean() + 0.5) / sd
    t_r = rn * (0.5 - arr.mean()) / sd
    alt, cen = dist.NoncentralT(4.0, 1.0), dist.NoncentralT(4.0, 0.0)
    want = math.exp(
        min(alt.log_pdf(t_l) - cen.log_pdf(t_l), alt.log_pdf(t_r) - cen.log_pdf(t_r))
    )
    assert val == pytest.approx(want, rel=1e-12)


def test_mean_scale_t_tost_validity_under_boundary_null():
    # any variance on the boundary: mean e-value stays at or below one
    rng = np.random.default_rng(909)
    margins = MarginPair(-0.5, 0.5)
    for sigma in (0.5, 1.0, 2.5):
        vals = np.array(
            [
                optimal.mean_scale_t_tost(rng.normal(0.5, sigma, size=10), margins)
                for _ in range(4000)
            ]
        )
        se = float(np.std(vals, ddof=1) / math.sqrt(vals.size))
        assert float(np.mean(vals)) <= 1.0 + 3 * se, sigma


def test_mean_scale_t_tost_validation():
    with pytest.raises(ParameterError):
        optimal.mean_scale_t_tost([0.1, 0.2], MarginPair(-0.5, 0.5), ncp_alt=0.0)
    with pytest.raises(ParameterError):
        optimal.mean_scale_t_tost([0.1], MarginPair(-0.5, 0.5))
