import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqzom.core_model import TWO_PI, DriveState, SystemParams, squeezed_thermal_variances
from sqzom.errors import DomainError
from sqzom.tomography import (
    DEFAULT_AVERAGES,
    eta_det_om_predicted,
    expected_eta_eff,
    fit_squeezing,
    integrated_sideband_power,
    simulate_phase_sweep,
    sweep_model,
)


def test_closed_form_band_power_matches_numeric_integral(params):
    for theta in (0.0, 1.0, math.pi):
        drive = DriveState(r=0.8, theta=theta, C=100.0)
        exact = integrated_sideband_power(drive, params)
        numeric = integrated_sideband_power(drive, params, numeric=True, points=20001)
        assert numeric == pytest.approx(exact, rel=1e-6)


def test_unsqueezed_sweep_is_flat(params):
    sweep = simulate_phase_sweep(0.0, params, 250.0)
    np.testing.assert_allclose(sweep.integrated_power, 1.0, rtol=1e-14)
    est = fit_squeezing(sweep)
    assert est.degenerate and est.r_hat == 0.0
    lo, hi = est.ci()["r_hat"]
    assert lo <= 0.0 <= hi


def test_sweep_extremes_follow_amplitude_variance(params):
    sweep = simulate_phase_sweep(1.0, params, 250.0, points=360)
    y = sweep.integrated_power
    assert sweep.theta_grid[np.argmin(y)] == pytest.approx(0.0, abs=1e-12)
    assert sweep.theta_grid[np.argmax(y)] == pytest.approx(math.pi, abs=1e-12)
    contrast = [np.ptp(simulate_phase_sweep(r, params, 250.0).integrated_power)
                for r in (0.3, 0.6, 0.9, 1.15)]
    assert np.all(np.diff(contrast) > 0)


@given(st.floats(0.0, 1.5), st.floats(0.1, 1000.0), st.floats(0.0, 1.0))
def test_phase_average_never_below_coherent(r, C, eta_in):
    p = SystemParams(eta_in=eta_in)
    sweep = simulate_phase_sweep(r, p, C, points=64)
    assert sweep.integrated_power.mean() >= 1.0 - 1e-12


def test_high_drive_minimum_is_drive_variance_ratio(params):
    r = 1.0
    limit = 1.0 - params.eta_in * (1.0 - math.exp(-2 * r))
    v_ratio = squeezed_thermal_variances(r, 0.0, params.n_c, params.eta_in) / \
        squeezed_thermal_variances(0.0, 0.0, params.n_c, params.eta_in)
    assert limit == pytest.approx(v_ratio, rel=1e-12)
    big = simulate_phase_sweep(r, params, 1e7, points=8).integrated_power.min()
    assert big == pytest.approx(limit, rel=1e-4)
    at_250 = simulate_phase_sweep(r, params, 250.0, points=8).integrated_power.min()
    assert limit < at_250 < 1.0


@pytest.mark.parametrize("r", [0.1, 0.3, 0.6, 0.9, 1.2])
@pytest.mark.parametrize("C", [10.0, 50.0, 250.0, 500.0])
def test_clean_sweep_roundtrip(params, r, C):
    est = fit_squeezing(simulate_phase_sweep(r, params, C))
    assert est.r_hat == pytest.approx(r, abs=1e-3)
    assert est.eta_eff == pytest.approx(expected_eta_eff(params, C), abs=1e-3)
    assert 0.0 <= est.eta_eff <= 1.0
    assert est.eta_det_om == pytest.approx(est.eta_eff / params.eta_in)


def test_phase_offset_recovered(params):
    est = fit_squeezing(simulate_phase_sweep(0.9, params, 250.0, phase_offset=0.4))
    # the fit's offset lives on the pump phase, twice the squeezing phase
    assert est.phase_offset == pytest.approx(0.8, abs=1e-6)
    assert est.r_hat == pytest.approx(0.9, abs=1e-6)


def test_sweep_model_reduces_to_drive_variance():
    th = np.linspace(0, TWO_PI, 50)
    got = sweep_model(2 * th, 0.7, 0.47, 0.0)
    ref = squeezed_thermal_variances(0.7, th, 0.0, 0.47) / 0.25
    np.testing.assert_allclose(got, ref, rtol=1e-12)


def test_noisy_sweeps_are_unbiased(params):
    r_hats = []
    for seed in range(20):
        sweep = simulate_phase_sweep(1.0, params, 250.0, averages=DEFAULT_AVERAGES, seed=seed)
        r_hats.append(fit_squeezing(sweep).r_hat)
    assert abs(np.mean(r_hats) - 1.0) < 0.02


def test_noise_is_seeded(params):
    a = simulate_phase_sweep(0.6, params, 250.0, averages=100, seed=3)
    b = simulate_phase_sweep(0.6, params, 250.0, averages=100, seed=3)
    c = simulate_phase_sweep(0.6, params, 250.0, averages=100, seed=4)
    np.testing.assert_array_equal(a.integrated_power, b.integrated_power)
    assert not np.array_equal(a.integrated_power, c.integrated_power)


def test_partial_sweep_rejected(params):
    sweep = simulate_phase_sweep(0.6, params, 250.0, theta_grid=np.linspace(0, 3.0, 50))
    with pytest.raises(DomainError):
        fit_squeezing(sweep)
    with pytest.raises(DomainError):
        simulate_phase_sweep(0.6, params, 0.0)


def test_efficiency_at_top_of_range(params):
    eta = eta_det_om_predicted(params, 250.0)
    assert eta == pytest.approx(0.939, abs=0.005)
    assert eta / params.eta_det > 30
    n_coh = 250.0 / params.sideband_weight
    assert eta_det_om_predicted(params, 250.0, include_imprecision=False) == pytest.approx(
        1 / (1 + params.n_th / n_coh), rel=1e-12)


@settings(max_examples=30)
@given(st.floats(0.0, 50.0), st.floats(0.001, 1.0))
def test_efficiency_monotone_and_bounded(n_th, eta_det):
    p = SystemParams(n_th=n_th, eta_det=eta_det)
    C = np.geomspace(1e-3, 1e6, 200)
    eta = eta_det_om_predicted(p, C)
    assert np.all(np.diff(eta) > 0)
    assert np.all((eta > 0) & (eta <= 1))


def test_efficiency_vanishes_at_low_drive(params):
    assert eta_det_om_predicted(params, 1e-9) < 1e-9
    with pytest.raises(DomainError):
        eta_det_om_predicted(params, 0.0)
