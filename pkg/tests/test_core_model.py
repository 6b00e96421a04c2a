import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqzom.core_model import (
    HEISENBERG_BOUND,
    SNL,
    TWO_PI,
    DriveState,
    QuadCovariance,
    SystemParams,
    cooperativity_from_photons,
    drive_covariance,
    heisenberg_product,
    load_params,
    params_from_mapping,
    photons_from_cooperativity,
    scatter_rate,
    squeezed_thermal_variances,
    to_db,
    weighted_cooperativity,
)
from sqzom.errors import ConfigError, DomainError, InvariantViolation

r_st = st.floats(0.0, 2.0)
theta_st = st.floats(0.0, TWO_PI)
n_c_st = st.floats(0.0, 2.0)
eta_st = st.floats(0.0, 1.0)


# parameters ----------------------------------------------------------------

def test_defaults_in_hz(params):
    cfg = params.to_config()
    expected = dict(omega_c_hz=6.89e9, omega_m_hz=8.68e6, kappa_hz=22.2e6, gamma_m_hz=22.0,
                    gamma_hz=200.0, g0_hz=170.0, n_th=10.0, n_c=0.17, eta_in=0.47,
                    eta_det=0.03, n_bath=95.0)
    for key, value in expected.items():
        assert cfg[key] == pytest.approx(value, rel=1e-15), key


def test_bundled_file_matches_defaults():
    assert load_params() == SystemParams()


def test_params_file_roundtrip(tmp_path, params):
    path = tmp_path / "p.toml"
    path.write_text("\n".join(f"{k} = {v!r}" for k, v in params.to_config().items()))
    loaded = load_params(path)
    for a, b in zip(loaded.to_config().values(), params.to_config().values()):
        assert a == pytest.approx(b, rel=1e-15)


def test_unknown_key_is_named(tmp_path):
    path = tmp_path / "p.toml"
    path.write_text("kappa_hz = 1e6\nkapa_hz = 2e6\n")
    with pytest.raises(ConfigError, match="kapa_hz"):
        load_params(path)


def test_non_numeric_value_rejected():
    with pytest.raises(ConfigError, match="eta_in"):
        params_from_mapping({"eta_in": "high"})


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_params(tmp_path / "absent.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("kappa_hz = = 3")
    with pytest.raises(ConfigError):
        load_params(bad)


@pytest.mark.parametrize("change", [
    dict(cavity_linewidth=-1.0), dict(mech_freq=0.0), dict(eta_in=1.2), dict(eta_det=-0.1),
    dict(n_c=-0.01), dict(total_mech_linewidth=TWO_PI * 10.0), dict(vacuum_coupling=math.inf),
])
def test_invalid_params(params, change):
    with pytest.raises(DomainError):
        params.replace(**change)


# cooperativity algebra -------------------------------------------------------

def test_photon_number_at_unit_cooperativity(params):
    # kappa Gamma / (4 g0^2) with every rate in Hz (the 2 pi factors cancel)
    expected = 22.2e6 * 200.0 / (4.0 * 170.0 ** 2)
    assert photons_from_cooperativity(params, 1.0) == pytest.approx(expected, rel=1e-12)
    assert cooperativity_from_photons(params, expected) == pytest.approx(1.0, rel=1e-12)


@given(st.floats(1e-3, 1e12))
def test_photon_roundtrip(n):
    p = SystemParams()
    assert photons_from_cooperativity(p, cooperativity_from_photons(p, n)) == pytest.approx(n, rel=1e-12)


def test_cooperativity_linear_in_photons(params):
    c1 = cooperativity_from_photons(params, 1e4)
    assert cooperativity_from_photons(params, 2e4) == pytest.approx(2 * c1, rel=1e-14)
    drive = DriveState.from_photons(params, 1e4, r=0.5)
    assert drive.C == pytest.approx(c1) and drive.r == 0.5


@pytest.mark.parametrize("n", [0.0, -5.0])
def test_photon_number_must_be_positive(params, n):
    with pytest.raises(DomainError):
        cooperativity_from_photons(params, n)


def test_sideband_weight(params):
    assert params.sideband_weight == pytest.approx(1 + 4 * (8.68 / 22.2) ** 2, rel=1e-14)
    assert params.sideband_weight == pytest.approx(1.6115, abs=1e-4)


def test_weighted_cooperativity_value(params):
    assert weighted_cooperativity(70.0, params) == pytest.approx(173.8, abs=0.05)
    assert weighted_cooperativity(1.0, params) == pytest.approx(2.482, abs=1e-3)


def test_weighted_cooperativity_resolved_limit():
    p = SystemParams(mech_freq=1e-6)
    assert weighted_cooperativity(3.0, p) == pytest.approx(12.0, rel=1e-12)


def test_weighted_cooperativity_vectorized(params):
    C = np.array([1.0, 10.0, 100.0])
    np.testing.assert_allclose(weighted_cooperativity(C, params), 4 * C / params.sideband_weight)
    with pytest.raises(DomainError):
        weighted_cooperativity(np.array([1.0, 0.0]), params)


def test_scatter_rate(params):
    assert scatter_rate(220.0, params) / TWO_PI == pytest.approx(27.3e3, rel=2e-3)
    # the two closed forms agree
    assert scatter_rate(220.0, params) == pytest.approx(220.0 * params.gamma / params.sideband_weight,
                                                        rel=1e-12)
    assert scatter_rate(1e-12, params) < 1e-6


# drive covariance ------------------------------------------------------------

def test_unsqueezed_drive_is_thermal(params):
    cov = drive_covariance(DriveState(C=1.0), params)
    assert cov.v_xx == pytest.approx(1.34 * SNL) and cov.v_yy == pytest.approx(1.34 * SNL)
    assert cov.v_xy == 0.0
    assert cov.det == pytest.approx(0.1122, abs=1e-4)
    assert cov.relative_db() == pytest.approx(to_db(1.34))


def test_amplitude_squeezed_variance(params):
    cov = drive_covariance(DriveState(r=1.0, theta=0.0), params)
    expected = 1.34 * (0.53 + 0.47 * math.exp(-2.0))
    assert cov.v_xx / SNL == pytest.approx(expected, rel=1e-12)
    assert cov.v_xx / SNL == pytest.approx(0.795, abs=1e-3)


def test_pure_state_variances(ideal):
    for theta, (lo, hi) in [(0.0, ("v_xx", "v_yy")), (math.pi, ("v_yy", "v_xx"))]:
        cov = drive_covariance(DriveState(r=0.7, theta=theta), ideal)
        assert getattr(cov, lo) == pytest.approx(SNL * math.exp(-1.4), rel=1e-12)
        assert getattr(cov, hi) == pytest.approx(SNL * math.exp(1.4), rel=1e-12)
        assert cov.v_xy == pytest.approx(0.0, abs=1e-15)
        assert cov.det == pytest.approx(HEISENBERG_BOUND, rel=1e-12)


def test_heisenberg_violation_detected():
    with pytest.raises(InvariantViolation):
        heisenberg_product(QuadCovariance(0.1, 0.1, 0.0))
    with pytest.raises(InvariantViolation):
        heisenberg_product(QuadCovariance(0.3, 0.3, 0.3))


@given(r_st, theta_st, n_c_st, eta_st)
def test_uncertainty_bound(r, theta, n_c, eta_in):
    p = SystemParams(n_c=n_c, eta_in=eta_in)
    det = heisenberg_product(drive_covariance(DriveState(r=r, theta=theta), p))
    assert det >= HEISENBERG_BOUND * (1 - 1e-12)


@given(r_st, theta_st, st.floats(0.01, 2.0), st.floats(0.0, 0.99))
def test_mixed_states_exceed_bound(r, theta, n_c, eta_in):
    p = SystemParams(n_c=n_c, eta_in=eta_in)
    assert drive_covariance(DriveState(r=r, theta=theta), p).det > HEISENBERG_BOUND * (1 + 1e-6)


@given(r_st, theta_st)
def test_pure_states_saturate_bound(r, theta):
    p = SystemParams(n_c=0.0, eta_in=1.0)
    assert drive_covariance(DriveState(r=r, theta=theta), p).det == pytest.approx(
        HEISENBERG_BOUND, rel=1e-9)


@given(r_st, theta_st, n_c_st, eta_st, st.floats(-10.0, 10.0))
def test_variance_is_pi_periodic_in_angle(r, theta, n_c, eta_in, angle):
    cov = drive_covariance(DriveState(r=r, theta=theta), SystemParams(n_c=n_c, eta_in=eta_in))
    assert cov.variance(angle + math.pi) == pytest.approx(cov.variance(angle), rel=1e-9)
    assert squeezed_thermal_variances(r, theta, n_c, eta_in, angle) == pytest.approx(
        cov.variance(angle), rel=1e-9)


@given(st.floats(0.05, 2.0), theta_st, n_c_st, st.floats(0.05, 1.0))
def test_squeezed_axis_orientation(r, theta, n_c, eta_in):
    cov = drive_covariance(DriveState(r=r, theta=theta), SystemParams(n_c=n_c, eta_in=eta_in))
    angles = np.linspace(0.0, math.pi, 721)
    v = cov.variance(angles)
    lo, hi = cov.variance(theta / 2), cov.variance(theta / 2 + math.pi / 2)
    assert lo <= v.min() * (1 + 1e-12) and hi >= v.max() * (1 - 1e-12)
    scale = SNL * (1 + 2 * n_c)
    assert lo == pytest.approx(scale * (1 - eta_in + eta_in * math.exp(-2 * r)), rel=1e-9)


@given(theta_st, n_c_st, eta_st)
def test_unsqueezed_limit_is_isotropic(theta, n_c, eta_in):
    cov = drive_covariance(DriveState(r=0.0, theta=theta), SystemParams(n_c=n_c, eta_in=eta_in))
    assert cov.v_xx == pytest.approx(cov.v_yy) and cov.v_xy == pytest.approx(0.0, abs=1e-15)
    near = drive_covariance(DriveState(r=1e-9, theta=theta), SystemParams(n_c=n_c, eta_in=eta_in))
    assert near.v_xx == pytest.approx(cov.v_xx, rel=1e-8)


def test_theta_reduced_and_validated():
    assert DriveState(theta=-math.pi / 2).theta == pytest.approx(1.5 * math.pi)
    assert DriveState(theta=5 * math.pi).theta == pytest.approx(math.pi)
    with pytest.raises(DomainError):
        DriveState(r=-0.1)
    with pytest.raises(DomainError):
        DriveState(C=0.0)
    with pytest.raises(DomainError):
        DriveState(r=math.nan)
