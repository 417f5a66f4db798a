"""Operators, norms, the delta factors and observation simulation."""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contract_bench import (
    BasisMap,
    ConfigurationError,
    InjectivityError,
    SequenceVector,
    SpectralOperator,
    delta_sequence,
    ill_posedness_delta,
    make_operator,
    operator_weak_norm,
    simulate_observation,
    sobolev_norm,
)
from contract_bench.spectral_core import Observation, truncation_tail_bound
from contract_bench.wavelets import meyer_basis_map, required_K

coeff_lists = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=60)


# ---------------------------------------------------------------------------
# make_operator


def test_identity_has_unit_singular_values():
    op = make_operator("identity", {}, 37)
    assert np.all(op.rho == 1.0)
    assert op.classification.variant == "mild" and op.classification.alpha == 0.0


def test_heat_first_singular_value():
    # exp(-pi^2) evaluated independently
    op = make_operator("heat", {"T": 1.0}, 5)
    assert op.rho[0] == pytest.approx(5.1723186203812387e-05, rel=1e-12)
    assert op.classification.variant == "severe"
    assert op.classification.beta == 2.0


def test_dirac_deconvolution_is_direct_observation():
    op = make_operator("deconvolution", {"atoms": [[0.0, 1.0]]}, 21)
    np.testing.assert_allclose(op.rho, 1.0, rtol=0, atol=1e-15)
    assert op.field == "complex-paired"


def test_deconvolution_density_matches_closed_form():
    # uniform density on [0, 1/4): |mu_hat_m| = |sin(pi m / 4)| / (pi m / 4)
    N = 4096
    g = np.where(np.arange(N) / N < 0.25, 4.0, 0.0)
    op = make_operator("deconvolution", {"density": g.tolist(), "alpha": 1.0}, 7)
    m = np.arange(1, 8) // 2
    want = np.ones(7)
    nz = m > 0
    want[nz] = np.abs(np.sin(np.pi * m[nz] / 4) / (np.pi * m[nz] / 4))
    # the grid quadrature is first order, so agreement is at the 1/N level
    np.testing.assert_allclose(op.rho, want, atol=5e-3)


def test_radon_surrogate_is_half_smoothing():
    op = make_operator("radon_surrogate", {}, 10)
    assert op.classification.alpha == 0.5
    k = np.arange(1, 11)
    np.testing.assert_allclose(op.rho, (1 + k**2) ** -0.25)


def test_zero_singular_value_rejected():
    # equal atoms at 0 and 1/2 cancel every odd frequency
    with pytest.raises(InjectivityError):
        make_operator("deconvolution", {"atoms": [[0.0, 0.5], [0.5, 0.5]]}, 5)


def test_density_with_spectral_zero_rejected():
    # the box on [0, 1/4) has no frequency-4 content
    g = np.where(np.arange(4096) / 4096 < 0.25, 4.0, 0.0)
    with pytest.raises(InjectivityError):
        make_operator("deconvolution", {"density": g.tolist()}, 9)


def test_underflowing_heat_rejected():
    with pytest.raises(InjectivityError):
        make_operator("heat", {"T": 1.0}, 40)


@pytest.mark.parametrize("kind,params", [("nonsense", {}), ("heat", {"T": -1.0}), ("mild_power", {})])
def test_bad_operator_configs(kind, params):
    with pytest.raises(ConfigurationError):
        make_operator(kind, params, 5)


@pytest.mark.parametrize("kind,params", [("mild_power", {"alpha": 1.5}), ("severe_exp", {"beta": 1.0, "c0": 0.5}),
                                         ("heat", {"T": 0.1}), ("radon_surrogate", {})])
def test_monotone_kinds_decay(kind, params):
    op = make_operator(kind, params, 20)
    assert np.all(np.diff(np.abs(op.rho)) <= 0)


@pytest.mark.parametrize("kind,params", [("mild_power", {"alpha": 2.0, "scale": 3.0}),
                                         ("severe_exp", {"beta": 1.5, "c0": 0.3, "alpha1": 1.0}),
                                         ("heat", {"T": 0.05})])
def test_envelope_constants_bracket_rho(kind, params):
    op = make_operator(kind, params, 25)
    c1, c2 = op.envelope_constants()
    k = np.arange(1, 26)
    w_lo = np.exp(op.classification.log_weight(k, upper=False))
    w_hi = np.exp(op.classification.log_weight(k, upper=True))
    assert 0 < c1 <= c2
    assert np.all(c1 * w_lo <= np.abs(op.rho) * (1 + 1e-12))
    assert np.all(np.abs(op.rho) <= c2 * w_hi * (1 + 1e-12))


def test_operator_json_round_trip():
    op = make_operator("severe_exp", {"beta": 1.0, "c0": 0.7}, 12)
    doc = op.to_json()
    assert set(doc) >= {"kind", "params", "K_max", "rho"}
    back = SpectralOperator.from_json(doc)
    np.testing.assert_array_equal(back.rho, op.rho)


def test_operator_json_detects_tampered_rho():
    doc = make_operator("heat", {"T": 0.1}, 5).to_json()
    doc["rho"][2] *= 1.5
    with pytest.raises(ConfigurationError):
        SpectralOperator.from_json(doc)


# ---------------------------------------------------------------------------
# norms


def test_sobolev_norm_of_e1():
    assert sobolev_norm(SequenceVector.basis_vector(1, 4), 2.0) == pytest.approx(2.0)


def test_sobolev_norm_of_zero():
    assert sobolev_norm(SequenceVector(np.zeros(9)), 1.3) == 0.0


def test_sobolev_norm_s0_is_l2():
    c = 1.0 / np.arange(1, 101) ** 2
    assert sobolev_norm(SequenceVector(c), 0.0) == pytest.approx(math.sqrt(np.sum(c**2)), rel=1e-14)


def test_weak_norm_identity_equals_l2():
    f = SequenceVector(np.linspace(-1, 2, 17))
    assert operator_weak_norm(f, make_operator("identity", {}, 17)) == pytest.approx(f.norm(), rel=1e-15)


def test_weak_norm_heat_single_term():
    f = SequenceVector.basis_vector(1, 6)
    assert operator_weak_norm(f, make_operator("heat", {"T": 1.0}, 6)) == pytest.approx(math.exp(-math.pi**2), rel=1e-13)


@pytest.mark.parametrize("k", [1, 3, 10])
def test_weak_norm_mild_basis_vector_inside_envelope(k):
    op = make_operator("mild_power", {"alpha": 2.0}, 12)
    v = operator_weak_norm(SequenceVector.basis_vector(k, 12), op)
    c1, c2 = op.envelope_constants()
    shape = (1 + k**2) ** -1.0
    assert v == pytest.approx(shape, rel=1e-14)
    assert c1 * shape * (1 - 1e-12) <= v <= c2 * shape * (1 + 1e-12)


def test_weak_norm_requires_matching_truncation():
    with pytest.raises(ConfigurationError):
        operator_weak_norm(SequenceVector(np.ones(3)), make_operator("identity", {}, 4))


@given(coeff_lists)
@settings(max_examples=60, deadline=None)
def test_parseval(c):
    f = SequenceVector(np.array(c))
    total = float(np.sum(np.square(c)))
    assert abs(f.norm() ** 2 - total) <= 1e-12 * max(total, 1e-300)


@given(coeff_lists, st.floats(0.0, 4.0))
@settings(max_examples=60, deadline=None)
def test_mild_weak_norm_dominated_by_negative_sobolev(c, alpha):
    f = SequenceVector(np.array(c))
    op = make_operator("mild_power", {"alpha": alpha, "scale": 2.5}, f.K_max)
    _, c2 = op.envelope_constants()
    assert operator_weak_norm(f, op) <= c2 * sobolev_norm(f, -alpha) * (1 + 1e-12) + 1e-300


def test_truncation_tail_bound_dominates_actual_tail():
    k = np.arange(1, 2001, dtype=float)
    f = SequenceVector(k**-1.51)
    K = 100
    actual = float(np.linalg.norm(f.coeffs[K:]))
    assert actual <= truncation_tail_bound(f, 1.0, K)


def test_sequence_vector_rejects_nonfinite():
    with pytest.raises(ConfigurationError):
        SequenceVector(np.array([1.0, np.nan]))


def test_sequence_vector_json_round_trip():
    f = SequenceVector(np.array([0.1, -2.0, 3.5]), "wavelet")
    back = SequenceVector.from_json(f.to_json())
    assert back.basis_tag == "wavelet"
    np.testing.assert_array_equal(back.coeffs, f.coeffs)


# ---------------------------------------------------------------------------
# simulation


def test_pure_noise_moments():
    op = make_operator("identity", {}, 1)
    f0 = SequenceVector(np.zeros(1))
    y = np.array([simulate_observation(f0, op, 100.0, s).y[0] for s in range(10_000)])
    assert abs(y.mean()) <= 3 * 0.1 / 100
    assert y.var() == pytest.approx(0.01, rel=0.05)


def test_simulation_is_deterministic():
    op = make_operator("mild_power", {"alpha": 1.0}, 30)
    f0 = SequenceVector(np.arange(30) / 30.0)
    a = simulate_observation(f0, op, 1e4, 123)
    b = simulate_observation(f0, op, 1e4, 123)
    np.testing.assert_array_equal(a.y, b.y)


def test_heat_mean_matches_formula():
    op = make_operator("heat", {"T": 0.1}, 3)
    f0 = SequenceVector.basis_vector(1, 3)
    N = 10_000
    y1 = np.array([simulate_observation(f0, op, 1e6, s).y[0] for s in range(N)])
    sigma = 1e-3 / math.sqrt(N)
    assert abs(y1.mean() - math.exp(-0.1 * math.pi**2)) <= 3 * sigma


def test_standardized_residuals_calibrated():
    op = make_operator("severe_exp", {"beta": 1.0, "c0": 0.2}, 8)
    f0 = SequenceVector(np.linspace(1, -1, 8))
    N = 10_000
    n = 250.0
    ss = np.random.SeedSequence(7).spawn(N)
    r = np.array([math.sqrt(n) * (simulate_observation(f0, op, n, s).y - op.rho * f0.coeffs) for s in ss])
    assert np.all(np.abs(r.mean(axis=0)) < 4 / math.sqrt(N))
    assert np.all(np.abs(r.var(axis=0) - 1) < 0.05)


def test_nonpositive_n_rejected():
    op = make_operator("identity", {}, 2)
    with pytest.raises(ConfigurationError):
        simulate_observation(SequenceVector(np.zeros(2)), op, 0.0, 1)


def test_observation_json_round_trip():
    op = make_operator("heat", {"T": 0.2}, 6)
    obs = simulate_observation(SequenceVector(np.ones(6)), op, 50.0, 9)
    back = Observation.from_json(obs.to_json())
    np.testing.assert_array_equal(back.y, obs.y)
    assert back.n == obs.n and back.seed == 9


# ---------------------------------------------------------------------------
# delta factors


def test_delta_identity_map_recovers_rho():
    op = make_operator("mild_power", {"alpha": 1.0}, 15)
    bm = BasisMap.identity(15)
    np.testing.assert_allclose(delta_sequence(bm, op), op.rho)
    assert ill_posedness_delta(bm, op, 1) == abs(op.rho[0])


def test_delta_meyer_level_bound():
    op = make_operator("mild_power", {"alpha": 1.0}, required_K(4))
    bm = meyer_basis_map(4)
    for j in range(5):
        k = 2 ** (j + 1)  # scaling function plus levels 0..j
        d = ill_posedness_delta(bm, op, k)
        hi = int(math.floor(2**j * 4 / 3))
        assert d == pytest.approx((1 + (2 * hi + 1) ** 2) ** -0.5, rel=1e-12)
        assert d <= 1.0 * (1 + 2 ** (2 * j)) ** -0.5


def test_delta_empty_support_rejected():
    bm = BasisMap(((np.array([], dtype=int), np.array([])),))
    with pytest.raises(ConfigurationError):
        ill_posedness_delta(bm, make_operator("identity", {}, 3), 1)


@given(st.integers(0, 2**31), st.integers(2, 12))
@settings(max_examples=40, deadline=None)
def test_delta_nonincreasing_for_random_orthonormal_maps(seed, K):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((K, K)))
    Q[np.abs(Q) < 0.2] = 0.0  # sparsify; orthonormality is irrelevant for delta
    bm = BasisMap.from_dense(Q)
    if any(idx.size == 0 for idx, _ in bm.rows[:1]):
        return
    op = make_operator("deconvolution", {"atoms": [[0.1, 0.7], [0.35, 0.3]]}, K)
    d = delta_sequence(bm, op)
    assert np.all(np.diff(d) <= 0) and np.all(d > 0)


def test_basis_map_json_round_trip():
    bm = meyer_basis_map(2)
    back = BasisMap.from_json(bm.to_json())
    assert len(back) == len(bm)
    for (i1, v1), (i2, v2) in zip(bm.rows, back.rows):
        np.testing.assert_array_equal(i1, i2)
        np.testing.assert_array_equal(v1, v2)
