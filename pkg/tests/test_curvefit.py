"""Tests for temporal curve fitting of parameter sequences."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fewspikes import CurveModel, eval_curve, fit, fit_auto, fit_exponential, fit_polynomial


def test_exponential_exact_geometric():
    model = fit_exponential([8.0, 4.0, 2.0, 1.0])
    a, r, c = model.coefficients
    assert a == pytest.approx(16.0, abs=1e-6)
    assert r == pytest.approx(0.5, abs=1e-9)
    assert c == pytest.approx(0.0, abs=1e-6)
    assert model.residual_rms <= 1e-9


def test_exponential_constant_sequence():
    model = fit_exponential([5.0, 5.0, 5.0, 5.0])
    a, r, c = model.coefficients
    assert a * r + c == pytest.approx(5.0, abs=1e-9)
    assert model.residual_rms <= 1e-9


def test_exponential_synthesize_then_recover():
    t = np.arange(1, 9, dtype=float)
    seq = 3.0 + 2.0 * 0.7**t
    model = fit_exponential(seq)
    a, r, c = model.coefficients
    assert a == pytest.approx(2.0, abs=1e-6)
    assert r == pytest.approx(0.7, abs=1e-7)
    assert c == pytest.approx(3.0, abs=1e-6)


def test_exponential_noisy_geometric_matches_independent_oracle():
    # oracle: scipy.optimize.curve_fit on the same objective
    seq = [8.1, 3.9, 2.05, 0.98]
    model = fit_exponential(seq)
    fitted = [eval_curve(model, t) for t in range(1, 5)]
    oracle = [8.090497805770378, 3.9492401988160712, 1.968716091111013, 1.0215459043025408]
    np.testing.assert_allclose(fitted, oracle, atol=1e-6)
    assert max(abs(f - s) for f, s in zip(fitted, seq)) <= 0.15
    assert model.residual_rms == pytest.approx(0.052076925992259965, abs=1e-9)


def test_exponential_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_exponential([1.0, 2.0])
    with pytest.raises(ValueError):
        fit_exponential([1.0, np.nan, 2.0])


def test_polynomial_exact_line():
    model = fit_polynomial([1.0, 2.0, 3.0, 4.0], 1)
    np.testing.assert_allclose(model.coefficients, [0.0, 1.0], atol=1e-9)
    assert model.residual_rms <= 1e-12


def test_polynomial_exact_quadratic():
    model = fit_polynomial([1.0, 4.0, 9.0, 16.0], 2)
    np.testing.assert_allclose(model.coefficients, [0.0, 0.0, 1.0], atol=1e-9)
    assert model.residual_rms <= 1e-10


def test_polynomial_interpolates_at_full_degree():
    rng = np.random.default_rng(5)
    seq = rng.normal(size=6)
    model = fit_polynomial(seq, 5)
    assert model.residual_rms <= 1e-8


def test_polynomial_rejects_excess_degree():
    with pytest.raises(ValueError):
        fit_polynomial([1.0, 2.0, 3.0], 3)


@given(st.floats(min_value=-100, max_value=100, allow_nan=False))
@settings(max_examples=50, deadline=None)
def test_polynomial_shift_equivariance(const):
    seq = np.array([2.0, 3.5, 1.0, 4.0, 2.5])
    base = fit_polynomial(seq, 2)
    shifted = fit_polynomial(seq + const, 2)
    assert shifted.coefficients[0] == pytest.approx(base.coefficients[0] + const, abs=1e-9)
    np.testing.assert_allclose(shifted.coefficients[1:], base.coefficients[1:], atol=1e-9)


def test_auto_picks_exponential_for_geometric():
    model = fit_auto([8.0, 4.0, 2.0, 1.0])
    assert model.family == "exponential"


def test_auto_prefers_fewer_coefficients_on_ties():
    model = fit_auto([2.0, 4.0, 6.0, 8.0])
    assert model.family == "polynomial"
    assert len(model.coefficients) == 2
    np.testing.assert_allclose(model.coefficients, [0.0, 2.0], atol=1e-9)


def test_auto_constant_length_three():
    model = fit_auto([5.0, 5.0, 5.0])
    assert model.family == "polynomial"
    assert model.coefficients == (5.0, 0.0)
    assert model.residual_rms == 0.0


def test_auto_never_beats_candidates_by_more_than_tie_window():
    rng = np.random.default_rng(17)
    for _ in range(30):
        k = int(rng.integers(3, 12))
        seq = rng.normal(size=k) * rng.uniform(0.1, 5)
        chosen = fit_auto(seq)
        candidates = [fit_polynomial(seq, 1), fit_polynomial(seq, 2), fit_exponential(seq)]
        best = min(m.residual_rms for m in candidates)
        assert chosen.residual_rms <= best + 1e-9


def test_recovery_property_polynomial():
    rng = np.random.default_rng(23)
    for _ in range(20):
        k = int(rng.integers(4, 12))
        coefs = rng.uniform(-2, 2, size=3)
        t = np.arange(1, k + 1, dtype=float)
        seq = coefs[0] + coefs[1] * t + coefs[2] * t * t
        model = fit_polynomial(seq, 2)
        fitted = [eval_curve(model, int(tt)) for tt in t]
        np.testing.assert_allclose(fitted, seq, atol=1e-6)


def test_eval_curve_exponential():
    model = CurveModel("exponential", (16.0, 0.5, 0.0), 0.0, 4)
    assert eval_curve(model, 3) == pytest.approx(2.0, abs=1e-12)


def test_eval_curve_polynomial():
    model = CurveModel("polynomial", (0.0, 1.0), 0.0, 4)
    assert eval_curve(model, 7) == 7.0


def test_eval_curve_extrapolates():
    model = fit_exponential([8.0, 4.0, 2.0, 1.0])
    assert eval_curve(model, 5) == pytest.approx(0.5, abs=1e-6)


def test_eval_curve_rejects_nonpositive_step():
    model = CurveModel("polynomial", (0.0, 1.0), 0.0, 4)
    with pytest.raises(ValueError):
        eval_curve(model, 0)


def test_fitted_values_consistent_with_residual():
    rng = np.random.default_rng(31)
    for _ in range(20):
        k = int(rng.integers(3, 10))
        seq = rng.normal(size=k)
        model = fit_auto(seq)
        bound = model.residual_rms * np.sqrt(k) + 1e-9
        for t in range(1, k + 1):
            assert abs(seq[t - 1] - eval_curve(model, t)) <= bound


def test_fit_dispatch():
    assert fit([8.0, 4.0, 2.0, 1.0], "exponential").family == "exponential"
    assert fit([1.0, 2.0, 3.0, 4.0], "poly1").family == "polynomial"
    assert len(fit([1.0, 2.0, 4.0, 8.0], "poly2").coefficients) == 3
    assert fit([8.0, 4.0, 2.0, 1.0], "auto").family == "exponential"
    with pytest.raises(ValueError):
        fit([1.0, 2.0, 3.0], "sinusoid")


def test_curve_model_json_round_trip():
    model = fit_exponential([8.0, 4.0, 2.0, 1.0])
    doc = model.to_dict()
    assert set(doc) == {"family", "coefficients", "residual_rms", "k"}
    restored = CurveModel.from_dict(doc)
    assert restored == model
