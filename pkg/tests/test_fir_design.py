import math

import numpy as np
import pytest

from helpers import grid_search_fir2, random_stable_ss
from quantshape.fir_design import (DesignSpec, design_min_bits,
                                   design_min_error, min_bits_for,
                                   quantizer_interval, static_norm_product,
                                   static_quantizer_bits, tradeoff_sweep)
from quantshape.statespace import (FirFilter, StateSpace, fir_realization,
                                   impulse_response, l1_norm, series)


def test_min_bits_rounding():
    assert min_bits_for(3.0) == 2
    assert min_bits_for(4.0) == 2          # non-strict at exact powers
    assert min_bits_for(4.0000001) == 3
    assert min_bits_for(0.5) == 0


def test_pure_gain_plant_keeps_identity_filter():
    spec = DesignSpec(StateSpace.gain(1.0), 2, 0.05, math.pi / 2, truncation=8)
    rep = design_min_bits(spec)
    assert np.allclose(rep.filter.coeffs, 0.0, atol=1e-9)
    assert rep.objective == pytest.approx(spec.c, rel=1e-9)
    assert rep.min_bits == math.ceil(math.log2(spec.c))


def test_static_bits_examples():
    spec = DesignSpec(StateSpace.gain(1.0), 1, 1.0, 3.0, truncation=4)
    assert static_norm_product(spec) == pytest.approx(3.0, rel=1e-9)
    assert static_quantizer_bits(spec) == 2


def test_static_product_matches_long_sim_oracle():
    rng = np.random.default_rng(9)
    for _ in range(5):
        h = random_stable_ss(rng, 3, rho_max=0.8)
        spec = DesignSpec(h, 1, 0.5, 2.0)
        oracle = 4.0 * np.sum(np.abs(impulse_response(h, 4000)))
        assert static_norm_product(spec) == pytest.approx(oracle, rel=1e-8)
        assert static_quantizer_bits(spec) == min_bits_for(oracle)


def test_design_matches_grid_search_oracle():
    # smoke version of acceptance 7b: one random second-order plant
    rng = np.random.default_rng(3)
    h_sys = random_stable_ss(rng, 2, rho_max=0.6)
    m = 60
    spec = DesignSpec(h_sys, 2, 0.5, 1.0, truncation=m)
    rep = design_min_bits(spec)
    h = impulse_response(h_sys, m)
    ref, _ = grid_search_fir2(h, m, spec.c, 1.0)
    ref += spec.c * abs(h_sys.D)
    lipschitz = (spec.c * np.sum(np.abs(h)) + 1.0)
    assert rep.objective <= ref + 1e-6
    assert ref - rep.objective <= 2e-3 * lipschitz


def test_min_error_cap_zero_is_static(pendulum_spec, pendulum_plant):
    rep = design_min_error(pendulum_spec, 0.0)
    assert np.allclose(rep.filter.coeffs, 0.0, atol=1e-10)
    assert rep.hr_norm == pytest.approx(l1_norm(pendulum_plant)[0], rel=1e-9)


def test_min_error_monotone_in_cap(pendulum_spec):
    caps = [0.0, 0.5, 1.0, 2.0, 4.0]
    norms = [design_min_error(pendulum_spec, cp).hr_norm for cp in caps]
    for lo, hi in zip(norms[1:], norms[:-1]):
        assert lo <= hi + 1e-9


def test_min_error_small_fir_plant_grid_oracle():
    # plant 1 + z^-1, one tap, cap 1: optimal value 2 (flat optimum segment)
    plant = StateSpace([[0.0]], [[1.0]], [[1.0]], 1.0)
    spec = DesignSpec(plant, 1, 1.0, 1.0, truncation=6)
    rep = design_min_error(spec, 1.0)
    grid = np.arange(-1.0, 1.0 + 1e-3, 1e-3)
    h = impulse_response(plant, 6)
    vals = [np.abs(np.convolve(h, [1.0, r]))[: 7].sum() for r in grid]
    assert rep.hr_norm == pytest.approx(min(vals), abs=2e-3)
    assert rep.hr_norm == pytest.approx(2.0, abs=1e-9)
    assert rep.feedback_norm <= 1.0 + 1e-9


def test_lp_rows_match_series_impulse(pendulum_plant):
    # the LP's affine map taps -> impulse samples is the convolution; the
    # cascade realization must produce the same samples
    rng = np.random.default_rng(8)
    m = 80
    h = impulse_response(pendulum_plant, m)
    for _ in range(5):
        taps = tuple(rng.normal(0, 0.5, 4))
        conv = np.convolve(h, np.concatenate(([1.0], taps)))[:m + 1]
        casc = impulse_response(series(pendulum_plant,
                                       fir_realization(FirFilter(taps)),
                                       r_first=False), m)
        assert np.max(np.abs(conv - casc)) < 1e-12


def test_objective_invariant_to_truncation_increase(pendulum_spec, fir_report):
    bigger = DesignSpec(pendulum_spec.plant, 4, 0.05, math.pi / 2,
                        truncation=2 * fir_report.truncation)
    rep2 = design_min_bits(bigger)
    assert abs(rep2.objective - fir_report.objective) < 1e-9


def test_feedback_norm_matches_lp_value(pendulum_spec, fir_report):
    # the split LP variables must reproduce sum |r_k| exactly at the optimum
    n = 4
    x = fir_report.lp_status.x
    split_sum = float(np.sum(x[:2 * n]))
    assert split_sum == pytest.approx(fir_report.feedback_norm, abs=1e-9)
    assert fir_report.feedback_norm == pytest.approx(
        sum(abs(t) for t in fir_report.filter.coeffs), abs=0.0)


def test_bound_pairs_complementary(pendulum_spec, fir_report):
    # u_k * v_k = 0 at the optimum (the aux pair encodes |f_k| tightly)
    n, m = 4, fir_report.truncation
    x = fir_report.lp_status.x
    u = x[2 * n:2 * n + m]
    v = x[2 * n + m:]
    assert float(np.max(u * v)) < 1e-12


def test_report_consistency(pendulum_spec, fir_report):
    rep = fir_report
    assert rep.objective == pytest.approx(
        pendulum_spec.c * rep.hr_norm + rep.feedback_norm, rel=1e-12)
    assert rep.interval == pytest.approx(
        quantizer_interval(0.05, rep.hr_norm), rel=1e-12)
    assert 2.0 ** (rep.min_bits - 1) < rep.objective <= 2.0 ** rep.min_bits
    assert rep.hr_norm >= abs(pendulum_spec.plant.D)


def test_tradeoff_two_point_hand_check():
    plant = StateSpace([[0.5]], [[1.0]], [[1.0]], 0.0)
    spec = DesignSpec(plant, 1, 1.0, 1.0, truncation=40)
    curve = tradeoff_sweep(spec, [0.0, 0.5], [2])
    assert len(curve.caps) == 2
    # hand evaluation of L_y * hr / (2^b - fb) over both points
    expect = min(spec.l_y * hr / (4.0 - fb)
                 for hr, fb in zip(curve.hr_norms, curve.feedback_norms))
    bits, bound, idx = curve.per_bit[0]
    assert bits == 2
    assert bound == pytest.approx(expect, rel=1e-12)
    assert idx in (0, 1)


def test_tradeoff_cap_zero_closed_form(pendulum_spec, pendulum_plant):
    curve = tradeoff_sweep(pendulum_spec, [0.0], [3, 4])
    h_norm = l1_norm(pendulum_plant)[0]
    for bits, bound, _ in curve.per_bit:
        assert bound == pytest.approx(
            pendulum_spec.l_y * h_norm / 2.0 ** bits, rel=1e-9)


def test_tradeoff_skips_bits_without_points():
    plant = StateSpace([[0.5]], [[1.0]], [[1.0]], 0.0)
    spec = DesignSpec(plant, 1, 1.0, 1.0, truncation=40)
    curve = tradeoff_sweep(spec, [3.0], [1, 2])
    # the single point has feedback norm <= 3; bits=1 needs fb < 2
    assert all(b in (1, 2) for b, _, _ in curve.per_bit)


def test_spec_validation():
    plant = StateSpace([[0.5]], [[1.0]], [[1.0]], 0.0)
    with pytest.raises(ValueError):
        DesignSpec(plant, 0, 0.05, 1.0)
    with pytest.raises(ValueError):
        DesignSpec(plant, 2, -0.05, 1.0)
    with pytest.raises(ValueError):
        DesignSpec(StateSpace([[1.0]], [[1.0]], [[1.0]], 0.0), 2, 0.05, 1.0)
    with pytest.raises(ValueError):
        DesignSpec(plant, 4, 0.05, 1.0, truncation=2)
    with pytest.raises(ValueError):
        design_min_error(DesignSpec(plant, 1, 1.0, 1.0), -1.0)


def test_csv_and_json_round_trip(pendulum_spec):
    curve = tradeoff_sweep(pendulum_spec, [0.1, 1.0], [3])
    lines = curve.points_csv().strip().splitlines()
    assert lines[0] == "cap,hr_norm,r_norm,objective"
    parsed = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    for row, cap, hr in zip(parsed, curve.caps, curve.hr_norms):
        assert row[0] == cap and row[1] == hr
    obj = curve.to_json_dict()
    assert len(obj["points"]) == 2 and obj["failures"] == []
