"""Small-ball probabilities, concentration functions and lattice covers."""
from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import stats

from _oracles import equal_weight_chisq_cdf
from contract_bench import (
    ConfigurationError,
    GaussianPriorSpec,
    RadiusPmf,
    SequenceVector,
    SievePriorSpec,
    TruncationPmf,
    CoefficientDensity,
    WaveletPriorSpec,
    make_operator,
)
from contract_bench.errors import NumericalError
from contract_bench.smallball import (
    approximation_term,
    centered_smallball_lower_bound,
    centered_smallball_probability,
    certified_constant,
    concentration_function,
    entropy_constant,
    noncentral_weighted_chisq_cdf,
    product_smallball_lower_bound,
    rectangle_cover,
    rkhs_cover_count,
    smallball_mc,
    smallball_tilted,
    weighted_chisq_cdf,
)


def _truth(K, gamma):
    return SequenceVector(np.arange(1, K + 1, dtype=float) ** (-gamma - 0.5 - 0.01))


# ---------------------------------------------------------------------------
# exact weighted chi-square laws


@pytest.mark.parametrize("K,w,x", [(1, 1.0, 0.5), (3, 0.5, 1.0), (10, 1.0, 0.01), (20, 0.1, 0.05), (6, 2.0, 1e-4)])
def test_weighted_chisq_matches_mpmath(K, w, x):
    exact = equal_weight_chisq_cdf(K, w, x)
    assert weighted_chisq_cdf(np.full(K, w), x) == pytest.approx(exact, rel=1e-8)


@pytest.mark.parametrize("K,w,x,nc", [(4, 1.0, 2.0, 1.5), (8, 0.5, 0.3, 4.0), (12, 1.0, 0.5, 9.0)])
def test_noncentral_chisq_matches_mpmath(K, w, x, nc):
    shifts = np.zeros(K)
    shifts[0] = math.sqrt(nc)
    exact = equal_weight_chisq_cdf(K, w, x, nc)
    assert noncentral_weighted_chisq_cdf(np.full(K, w), shifts, x) == pytest.approx(exact, rel=1e-7)


def test_noncentral_reduces_to_central():
    lam = np.linspace(0.1, 1.0, 7)
    assert noncentral_weighted_chisq_cdf(lam, np.zeros(7), 0.8) == pytest.approx(weighted_chisq_cdf(lam, 0.8), rel=1e-12)


def test_chisq_log_mode_and_edges():
    lam = np.ones(30)
    lp = weighted_chisq_cdf(lam, 1e-3, log=True)
    assert lp == pytest.approx(math.log(equal_weight_chisq_cdf(30, 1.0, 1e-3)), rel=1e-8)
    assert weighted_chisq_cdf(lam, 0.0) == 0.0
    with pytest.raises(ConfigurationError):
        weighted_chisq_cdf([-1.0], 1.0)


def test_infinite_sum_probability_matches_monte_carlo():
    w, eps = 1.5, 0.5
    k = np.arange(1, 2001, dtype=float)
    lam = (1 + k**2) ** (-w)
    rng = np.random.default_rng(0)
    hits = 0
    N = 100_000
    for _ in range(10):
        z = rng.standard_normal((N // 10, 2000))
        hits += int(np.sum((z * z) @ lam < eps**2))
    p = hits / N
    exact = centered_smallball_probability(w, eps)
    assert abs(p - exact) < 4 * math.sqrt(exact * (1 - exact) / N)


# ---------------------------------------------------------------------------
# analytic centred bound


def _exact_or_none(w, eps):
    # tails far below the double range cannot be inverted
    try:
        return centered_smallball_probability(w, eps, log=True)
    except NumericalError:
        return None


@pytest.mark.parametrize("w", [0.75, 1.0, 1.5, 2.5, 4.0])
def test_certified_bound_below_exact_probability(w):
    resolved = 0
    for eps in np.logspace(-1.5, 0, 9):
        exact = _exact_or_none(w, eps)
        if exact is not None:
            resolved += 1
            assert centered_smallball_lower_bound(w, eps, log=True) <= exact
    assert resolved >= 3


def test_bound_below_monte_carlo_example():
    w, eps = 1.5, 0.5
    k = np.arange(1, 2001, dtype=float)
    lam = (1 + k**2) ** (-w)
    rng = np.random.default_rng(1)
    N = 100_000
    hits = sum(int(np.sum((rng.standard_normal((10_000, 2000)) ** 2) @ lam < eps**2)) for _ in range(10))
    p = hits / N
    assert centered_smallball_lower_bound(w, eps) <= p + 3 * math.sqrt(p * (1 - p) / N)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.8, 4.0), st.floats(0.05, 1.0))
def test_bound_domination_property(w, eps):
    exact = _exact_or_none(w, eps)
    assume(exact is not None)
    assert centered_smallball_lower_bound(w, eps, log=True) <= exact


def test_talbot_converges_in_deep_tail():
    # a fixed 24-node contour returns about -32 here; the adaptive one must not
    assert centered_smallball_probability(0.8, 0.3, log=True) == pytest.approx(-123.65996023, abs=1e-6)
    with pytest.raises(NumericalError):
        centered_smallball_probability(0.75, 0.25, log=True)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.8, 4.0), st.floats(1e-3, 5.0), st.floats(1e-3, 5.0))
def test_bound_monotone_in_eps(w, e1, e2):
    lo, hi = sorted((e1, e2))
    assert centered_smallball_lower_bound(w, lo, log=True) <= centered_smallball_lower_bound(w, hi, log=True)


def test_log_bound_slope_in_eps_power():
    w = 1.5
    rho = 1.0 / (2 * w - 1)
    eps = np.logspace(-4, -2, 15)
    lb = centered_smallball_lower_bound(w, eps, log=True)
    slope = np.polyfit(eps ** (-2 * rho), lb, 1)[0]
    assert slope == pytest.approx(-w * (1 + rho) ** rho, rel=0.01)


def test_bound_argument_checks():
    with pytest.raises(ConfigurationError):
        centered_smallball_lower_bound(0.5, 0.1)
    with pytest.raises(ConfigurationError):
        centered_smallball_lower_bound(1.0, 0.0)
    with pytest.raises(ConfigurationError):
        certified_constant(0.6)


def test_product_bound_below_exact():
    k = np.arange(1, 41, dtype=float)
    s = np.exp(-k)
    for eps in (0.3, 0.05, 1e-3):
        lp, J = product_smallball_lower_bound(np.log(s), math.log(eps))
        assert lp <= weighted_chisq_cdf(s, eps * eps, log=True)
        assert 0 <= J <= 40


# ---------------------------------------------------------------------------
# Monte Carlo and tilted estimates


def test_mc_single_coordinate_matches_normal_cdf():
    op = make_operator("identity", {}, 1)
    spec = GaussianPriorSpec(1.0)
    tau1 = spec.tau_values(1)[0]
    eps = 0.3
    est = smallball_mc(spec, op, SequenceVector([0.0]), eps, 100_000, seed=2)
    exact = 2 * stats.norm.cdf(eps / tau1) - 1
    assert abs(est.estimate - exact) < 3 * math.sqrt(exact * (1 - exact) / 100_000)


def test_mc_huge_eps_gives_one():
    op = make_operator("mild_power", {"alpha": 1.0}, 30)
    for prior in (GaussianPriorSpec(1.0),
                  SievePriorSpec(TruncationPmf("exponential", b=1.0), CoefficientDensity.laplace())):
        assert smallball_mc(prior, op, _truth(30, 1.0), 1e6, 2000, seed=3).estimate == 1.0


def test_mc_wavelet_prior_runs_and_reports_sobolev_ball():
    op = make_operator("deconvolution", {"atoms": [[0.0, 1.0]], "alpha": 0.0}, 11)
    prior = WaveletPriorSpec(1.0, RadiusPmf("point_mass", B=1))
    est = smallball_mc(prior, op, SequenceVector(np.zeros(11)), 10.0, 1000, seed=4)
    assert est.estimate == 1.0 and est.sobolev_estimate == 1.0


def test_mc_zero_hits_reports_clopper_pearson():
    op = make_operator("identity", {}, 50)
    est = smallball_mc(GaussianPriorSpec(0.5), op, SequenceVector(np.ones(50)), 1e-3, 1000, seed=5)
    assert est.hits == 0 and est.estimate == 0.0
    assert est.upper_bound == pytest.approx(1 - 0.05 ** (1 / 1000), rel=1e-9)


def test_mc_argument_checks():
    op = make_operator("identity", {}, 2)
    f0 = SequenceVector(np.zeros(2))
    with pytest.raises(ConfigurationError):
        smallball_mc(GaussianPriorSpec(1.0), op, f0, 0.0, 1000, 0)
    with pytest.raises(ConfigurationError):
        smallball_mc(GaussianPriorSpec(1.0), op, f0, 1.0, 999, 0)
    with pytest.raises(ConfigurationError):
        smallball_mc(GaussianPriorSpec(1.0), op, SequenceVector(np.zeros(3)), 1.0, 1000, 0)


def test_mc_is_deterministic():
    op = make_operator("mild_power", {"alpha": 1.0}, 20)
    a = smallball_mc(GaussianPriorSpec(1.0), op, _truth(20, 1.0), 0.2, 5000, seed=6)
    b = smallball_mc(GaussianPriorSpec(1.0), op, _truth(20, 1.0), 0.2, 5000, seed=6)
    assert a == b


@pytest.mark.parametrize("eps", [0.2, 0.05, 0.01])
def test_tilted_matches_exact_law(eps):
    K = 60
    op = make_operator("mild_power", {"alpha": 1.0}, K)
    spec = GaussianPriorSpec(1.0)
    f0 = _truth(K, 1.0)
    tau = spec.tau_values(K)
    exact = noncentral_weighted_chisq_cdf((op.rho * tau) ** 2, -f0.coeffs / tau, eps * eps, log=True)
    est = smallball_tilted(spec, op, f0, eps, 20_000, seed=7)
    assert est.relative_error < 0.05
    assert abs(math.exp(est.log_estimate - exact) - 1.0) < 5 * est.relative_error


def test_tilted_agrees_with_plain_mc_at_moderate_eps():
    K = 30
    op = make_operator("mild_power", {"alpha": 1.0}, K)
    spec = GaussianPriorSpec(1.0)
    f0 = _truth(K, 1.0)
    mc = smallball_mc(spec, op, f0, 0.5, 50_000, seed=8)
    tl = smallball_tilted(spec, op, f0, 0.5, 20_000, seed=9)
    assert abs(tl.estimate - mc.estimate) < 4 * math.hypot(mc.std_error, tl.relative_error * tl.estimate)


def test_tilted_needs_gaussian_prior():
    op = make_operator("identity", {}, 3)
    with pytest.raises(ConfigurationError):
        smallball_tilted(SievePriorSpec(TruncationPmf("exponential"), CoefficientDensity.gaussian()), op,
                         SequenceVector(np.zeros(3)), 0.1, 1000, 0)


# ---------------------------------------------------------------------------
# concentration function


def test_approximation_term_zero_center():
    value, h, lognu = approximation_term(np.ones(4), np.zeros(4), 0.1)
    assert value == 0.0 and np.all(h == 0) and lognu is None


def test_approximation_term_one_coordinate_example():
    value, h, lognu = approximation_term(np.array([1.0]), np.array([2.0]), 1.0)
    assert math.exp(lognu) == pytest.approx(1.0, rel=1e-10)
    assert h[0] == pytest.approx(1.0, rel=1e-10)
    assert value == pytest.approx(1.0, rel=1e-10)
    # dense grid minimization of h^2 over |h - 2| <= 1
    grid = np.linspace(1.0, 3.0, 200_001)
    assert value == pytest.approx(np.min(grid**2), abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_approximation_term_two_dim_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    s = 10 ** rng.uniform(-2, 1, 2)
    b = rng.uniform(0.5, 2.0, 2) * rng.choice([-1, 1], 2)
    eps = 0.4
    value, h, _ = approximation_term(s, b, eps)
    # the optimum sits on the constraint circle; scan it densely
    t = np.linspace(0, 2 * np.pi, 2_000_001)
    cand = b[None, :] + eps * np.stack([np.cos(t), np.sin(t)], axis=1)
    grid_min = float(np.min(np.sum(cand**2 / s, axis=1)))
    assert value == pytest.approx(grid_min, rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32 - 1), st.floats(0.01, 0.9))
def test_minimizer_feasible_and_beats_projections(K, seed, frac):
    rng = np.random.default_rng(seed)
    s = np.sort(10 ** rng.uniform(-6, 0, K))[::-1]
    b = rng.standard_normal(K) / np.arange(1, K + 1)
    eps = frac * float(np.linalg.norm(b))
    value, h, _ = approximation_term(s, b, eps)
    assert abs(np.linalg.norm(h - b) - eps) <= 1e-8 * max(eps, 1e-300) + 1e-14
    for J in range(K + 1):
        if np.linalg.norm(b[J:]) <= eps:
            assert value <= np.sum(b[:J] ** 2 / s[:J]) * (1 + 1e-9)


def test_concentration_terms_add_up():
    op = make_operator("mild_power", {"alpha": 1.0}, 200)
    spec = GaussianPriorSpec(1.0)
    b = op.rho * _truth(200, 1.0).coeffs
    r = concentration_function(spec, op, b, 0.01)
    assert r.approx_term >= 0 and r.total == r.approx_term + r.centered_term
    assert r.centered_method == "analytic"
    assert np.linalg.norm(r.minimizer.coeffs - b) == pytest.approx(0.01, rel=1e-8)
    z = concentration_function(spec, op, np.zeros(200), 0.01)
    assert z.approx_term == 0.0


def test_concentration_mc_centered_term():
    op = make_operator("mild_power", {"alpha": 1.0}, 100)
    spec = GaussianPriorSpec(1.0)
    b = np.zeros(100)
    r = concentration_function(spec, op, b, 0.3, centered_mode="mc", draws=20_000, seed=1)
    s = (op.rho * spec.tau_values(100)) ** 2
    exact = weighted_chisq_cdf(s, 0.09)
    assert r.centered_method == "mc"
    assert math.exp(-r.centered_term) == pytest.approx(exact, abs=4 * math.sqrt(exact / 20_000))
    tiny = concentration_function(spec, op, b, 1e-3, centered_mode="mc", draws=1000, seed=1)
    assert tiny.unresolved and tiny.centered_term == -tiny.details["bound_log_prob"]
    with pytest.raises(ConfigurationError):
        concentration_function(spec, op, b, 0.3, centered_mode="exact")


def test_mild_concentration_slope():
    # matched smoothness: log phi grows like log(1/eps) / (alpha + delta)
    alpha = delta = 1.0
    op = make_operator("mild_power", {"alpha": alpha}, 3000)
    spec = GaussianPriorSpec(delta)
    b = op.rho * _truth(3000, delta).coeffs
    eps = np.logspace(-4, -1, 7)
    phi = [concentration_function(spec, op, b, e).total for e in eps]
    slope = np.polyfit(np.log(1 / eps), np.log(phi), 1)[0]
    assert abs(slope - 1 / (alpha + delta)) < 0.1


@pytest.mark.parametrize("delta,gamma", [(1.0, 1.0), (1.5, 0.5), (2.0, 0.5), (3.0, 0.5)])
def test_severe_concentration_exponents(delta, gamma):
    beta = 1.0
    op = make_operator("severe_exp", {"beta": beta, "c0": 1.0}, 650)
    spec = GaussianPriorSpec(delta)
    b = op.rho * _truth(650, gamma).coeffs
    eps = np.logspace(-250, -20, 10)
    phi = [concentration_function(spec, op, b, e).total for e in eps]
    slope = np.polyfit(np.log(np.log(1 / eps)), np.log(phi), 1)[0]
    target = (2 * delta - 2 * gamma + 1) / beta if gamma + beta / 2 <= delta else 1 + 1 / beta
    assert abs(slope - target) < 0.2


# ---------------------------------------------------------------------------
# covers


def test_cover_trivial_when_box_fits_in_one_ball():
    cov = rectangle_cover(1.0, 1.0, 1.0, 2.0)
    assert cov.J == 0 and cov.log_count == 0.0


def test_cover_example_by_hand():
    cov = rectangle_cover(1.0, 1.0, 1.0, 0.1)
    # a_k = e^-k < 0.025 first at k = 4, so J = 3; spacing 0.1 / (2 sqrt 3)
    sp = 0.1 / (2 * math.sqrt(3))
    counts = [math.ceil(2 * math.exp(-k) / sp) for k in (1, 2, 3)]
    assert cov.J == 3 and counts == [26, 10, 4]
    assert cov.log_count == pytest.approx(math.log(26 * 10 * 4), rel=1e-14)
    assert len(cov.enumerate()) == 1040


def _brute_force_cover_check(cov, rng, samples=4000):
    pts = cov.enumerate()
    a = cov.half_widths
    corners = np.array(list(itertools.product(*[(-x, x) for x in a])))
    probe = np.vstack([corners, rng.uniform(-a, a, (samples, cov.J))])
    worst = 0.0
    for chunk in np.array_split(probe, 20):
        d = np.sqrt(((chunk[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
        worst = max(worst, float(d.max()))
    return worst


@pytest.mark.parametrize("C,c0,beta,eps", [(1.0, 1.0, 1.0, 0.1), (1.0, 0.7, 1.0, 0.2), (2.0, 1.0, 2.0, 0.05),
                                           (1.0, 1.5, 0.8, 0.08)])
def test_cover_is_valid_by_brute_force(C, c0, beta, eps):
    cov = rectangle_cover(C, c0, beta, eps)
    assert 1 <= cov.J <= 4
    worst = _brute_force_cover_check(cov, np.random.default_rng(0))
    assert worst <= eps / 2
    # kept box within eps/4 and discarded tail within eps/2: the whole rectangle is covered at eps
    assert math.hypot(worst, cov.tail_radius) < eps


def test_entropy_ratio_bounded():
    for beta in (0.5, 1.0, 2.0):
        ratios = []
        for e in 10.0 ** -np.arange(1, 7):
            lc = rectangle_cover(1.0, 1.0, beta, e).log_count
            ratios.append(lc / math.log(1 / e) ** (1 + 1 / beta))
        assert max(ratios) < 10 * entropy_constant(1.0, beta) + 1
        # the late ratios settle
        assert abs(ratios[-1] - ratios[-2]) < 0.25 * ratios[-1]


def test_rkhs_cover_count_for_severe_operator():
    op = make_operator("severe_exp", {"beta": 1.0, "c0": 1.0}, 60)
    spec = GaussianPriorSpec(1.0)
    lcs = [rkhs_cover_count(op, spec, e) for e in (1e-2, 1e-4, 1e-8)]
    assert lcs[0] < lcs[1] < lcs[2]
    assert lcs[2] / math.log(1e8) ** 2 < 5.0


def test_rkhs_cover_count_argument_checks():
    spec = GaussianPriorSpec(1.0)
    with pytest.raises(ConfigurationError):
        rkhs_cover_count(make_operator("mild_power", {"alpha": 1.0}, 10), spec, 0.1)
    with pytest.raises(ConfigurationError):
        rkhs_cover_count(make_operator("severe_exp", {"beta": 1.0, "c0": 1.0}, 10), spec, 1.5)
    with pytest.raises(ConfigurationError):
        rectangle_cover(1.0, 0.0, 1.0, 0.1)
