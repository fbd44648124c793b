import json

import numpy as np
import pytest

from helpers import random_stable_ss
from quantshape.statespace import (FirFilter, StateSpace, equilibrate_states,
                                   fir_realization, impulse_response, l1_norm,
                                   series, spectral_radius)
from quantshape.quantsim import transfer_coefficients


def test_impulse_geometric():
    s = StateSpace([[0.5]], [[1.0]], [[1.0]], 0.0)
    assert np.allclose(impulse_response(s, 4), [0, 1, 0.5, 0.25, 0.125])


def test_impulse_feedthrough_only():
    s = StateSpace.gain(2.0)
    assert np.allclose(impulse_response(s, 5), [2, 0, 0, 0, 0, 0])


def test_fir_realization_identity_case():
    r = fir_realization(FirFilter(()))
    assert r.order == 0 and r.D == 1.0
    assert np.allclose(impulse_response(r, 3), [1, 0, 0, 0])


def test_fir_realization_first_order():
    r = fir_realization(FirFilter((0.5,)))
    assert r.A.shape == (1, 1) and r.A[0, 0] == 0.0
    assert r.B[0, 0] == 1.0 and r.C[0, 0] == 0.5 and r.D == 1.0


def test_fir_realization_impulse_equals_taps():
    taps = (0.3, -0.2, 0.15, 0.05)
    resp = impulse_response(fir_realization(FirFilter(taps)), 10)
    assert np.allclose(resp, [1.0, *taps, 0, 0, 0, 0, 0, 0], atol=1e-15)


def test_fir_shift_register_structure():
    r = fir_realization(FirFilter((1.0, 2.0, 3.0, 4.0)))
    assert np.allclose(r.A, np.diag(np.ones(3), k=1))
    assert np.allclose(r.B.ravel(), [0, 0, 0, 1])
    assert np.allclose(r.C.ravel(), [4.0, 3.0, 2.0, 1.0])


def test_series_with_identity_keeps_impulse():
    rng = np.random.default_rng(0)
    h = random_stable_ss(rng, 3)
    s = series(h, StateSpace.identity())
    assert np.allclose(impulse_response(s, 30), impulse_response(h, 30))


def test_series_delay_times_fir():
    delay = StateSpace([[0.0]], [[1.0]], [[1.0]], 0.0)  # one-sample delay
    prod = series(delay, fir_realization(FirFilter((0.5,))))
    assert np.allclose(impulse_response(prod, 5), [0, 1, 0.5, 0, 0, 0])


def test_series_orderings_agree_and_match_convolution():
    rng = np.random.default_rng(42)
    for _ in range(40):
        h = random_stable_ss(rng, 3)
        taps = tuple(rng.normal(0, 1, 3))
        r = fir_realization(FirFilter(taps))
        first = impulse_response(series(h, r, r_first=True), 50)
        second = impulse_response(series(h, r, r_first=False), 50)
        conv = np.convolve(impulse_response(h, 50),
                           np.concatenate(([1.0], taps)))[:51]
        assert np.max(np.abs(first - second)) < 1e-12
        assert np.max(np.abs(first - conv)) < 1e-11


def test_l1_norm_differencer():
    s = fir_realization(FirFilter((-1.0,)))
    value, m = l1_norm(s)
    assert value == 2.0 and m == 1


def test_l1_norm_geometric_bracketing():
    s = StateSpace([[0.5]], [[1.0]], [[1.0]], 0.0)
    for tol in (1e-6, 1e-9, 1e-12):
        value, m = l1_norm(s, tol)
        truncated = np.sum(np.abs(impulse_response(s, m)))
        assert truncated <= value <= truncated + 1e-15
        assert value <= 2.0 <= value + tol


def test_l1_norm_rejects_unstable():
    s = StateSpace([[1.0]], [[1.0]], [[1.0]], 0.0)
    with pytest.raises(ValueError):
        l1_norm(s)


def test_l1_norm_feedthrough_only():
    assert l1_norm(StateSpace.gain(-3.0)) == (3.0, 0)


def test_fir_feedback_norm_exact():
    taps = (0.125, -0.25, 0.0625)
    assert FirFilter(taps).feedback_l1 == 0.4375


def test_spectral_radius_examples():
    assert spectral_radius(np.array([[0.5, 1.0], [0.0, 0.5]])) == pytest.approx(0.5, abs=1e-12)
    th = 1.1
    rot = 0.9 * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    assert spectral_radius(rot) == pytest.approx(0.9, abs=1e-12)


def test_spectral_radius_pendulum_closed_loop(bench):
    rho = spectral_radius(bench.A + bench.B @ bench.K)
    # oracle: roots of the characteristic polynomial
    ref = max(abs(np.roots(np.poly(bench.A + bench.B @ bench.K))))
    assert rho == pytest.approx(ref, rel=1e-10)
    assert rho < 1.0


def test_statespace_json_round_trip():
    rng = np.random.default_rng(3)
    s = random_stable_ss(rng, 4)
    text = s.to_json()
    back = StateSpace.from_json(text)
    assert np.array_equal(back.A, s.A) and np.array_equal(back.B, s.B)
    assert np.array_equal(back.C, s.C) and back.D == s.D
    assert set(json.loads(text)) == {"A", "B", "C", "D"}


def test_dimension_validation():
    with pytest.raises(ValueError):
        StateSpace(np.zeros((2, 3)), np.zeros((2, 1)), np.zeros((1, 2)), 0.0)
    with pytest.raises(ValueError):
        StateSpace(np.zeros((2, 2)), np.zeros((3, 1)), np.zeros((1, 2)), 0.0)


def test_immutability():
    s = StateSpace([[0.5]], [[1.0]], [[1.0]], 0.0)
    with pytest.raises(ValueError):
        s.A[0, 0] = 2.0


def test_equilibrate_preserves_transfer(pendulum_plant):
    eq = equilibrate_states(pendulum_plant)
    assert np.max(np.abs(impulse_response(eq, 300)
                         - impulse_response(pendulum_plant, 300))) < 1e-12


def test_pendulum_impulse_matches_long_division(pendulum_plant):
    # oracle: divide the realization's own transfer polynomials
    num, den = transfer_coefficients(pendulum_plant)
    m = 400
    h_div = np.zeros(m + 1)
    for k in range(m + 1):
        acc = num[k] if k < num.size else 0.0
        for j in range(1, den.size):
            if k - j >= 0:
                acc -= den[j] * h_div[k - j]
        h_div[k] = acc
    h = impulse_response(pendulum_plant, m)
    assert np.max(np.abs(h - h_div)) < 1e-10
