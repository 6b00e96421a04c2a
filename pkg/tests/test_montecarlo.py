import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqzom.core_model import TWO_PI, DriveState, SystemParams, drive_covariance
from sqzom.errors import DomainError
from sqzom.montecarlo import (
    PsdAccumulator,
    SimConfig,
    _build,
    _discretize,
    _run_one,
    accumulate_psd,
    canonical_cases,
    check_envelope_validity,
    default_config,
    estimate_psd,
    integrate,
    mc_verify,
    run_case,
    stationary_occupancy,
    synthesize_input_noise,
)
from sqzom.noise_budget import backaction, budget
from sqzom.spectra import asymmetry_metric, output_psd

FS = 65536.0


def short_config(params, seconds=20.0, **kw):
    return SimConfig(dt=1 / FS, duration=seconds, **kw)


def z_scores(spec, analytic):
    return (spec.psd - analytic.psd) / spec.error


# noise synthesis -------------------------------------------------------------

@pytest.mark.parametrize("theta", [0.0, 1.0, math.pi / 2])
def test_input_noise_covariance(params, theta):
    drive = DriveState(r=1.0, theta=theta)
    n = 2_000_000
    s = synthesize_input_noise(drive, params, n, seed=11)
    cov = drive_covariance(drive, params)
    est = np.cov(np.vstack([s.x_in, s.y_in]))
    se_xx = cov.v_xx * math.sqrt(2 / n)
    se_yy = cov.v_yy * math.sqrt(2 / n)
    se_xy = math.sqrt((cov.v_xx * cov.v_yy + cov.v_xy ** 2) / n)
    assert abs(est[0, 0] - cov.v_xx) < 3 * se_xx
    assert abs(est[1, 1] - cov.v_yy) < 3 * se_yy
    assert abs(est[0, 1] - cov.v_xy) < 3 * se_xy
    assert abs(np.var(s.bath_q) / (2 * params.n_th + 1) - 1) < 3 * math.sqrt(2 / n)
    assert abs(np.var(s.vacuum) / 0.25 - 1) < 3 * math.sqrt(2 / n)


def test_input_noise_seeded(params):
    a = synthesize_input_noise(DriveState(r=0.5), params, 1000, seed=1)
    b = synthesize_input_noise(DriveState(r=0.5), params, 1000, seed=1)
    np.testing.assert_array_equal(a.x_in, b.x_in)
    np.testing.assert_array_equal(a.bath_p, b.bath_p)


# configuration ---------------------------------------------------------------

def test_config_validation(params):
    with pytest.raises(DomainError, match="coarse"):
        SimConfig(dt=1e-3, duration=10.0).validate(params)
    with pytest.raises(DomainError, match="coarse"):
        SimConfig(dt=1 / FS, duration=10.0, model="full").validate(params)
    with pytest.raises(DomainError, match="100/Gamma"):
        SimConfig(dt=1 / FS, duration=0.01).validate(params)
    with pytest.raises(DomainError):
        SimConfig(dt=1 / FS, duration=10.0, model="euler").validate(params)


def test_default_config_resolution(params):
    cfg = default_config(params)
    cfg.validate(params)
    bin_hz = 1 / (cfg.dt * cfg.segment_length)
    assert bin_hz <= params.gamma / TWO_PI / 25
    segs = cfg.n_trajectories * (2 * cfg.n_steps // cfg.segment_length - 1)
    assert segs >= 10_000


# exact discretization --------------------------------------------------------

@pytest.mark.parametrize("model", ["envelope", "full"])
def test_recursion_matches_direct_loop(model):
    p = SystemParams(mech_freq=TWO_PI * 8e3, cavity_linewidth=TWO_PI * 5e3)
    m = _build(DriveState(r=1.0, theta=1.0, C=30.0), p, model)
    dt = 1 / 2 ** 18
    Phi, Psi, factor = _discretize(m, dt)
    steps = 3000
    _, mech = _run_one(m, Phi, Psi, factor, steps, 0, np.random.default_rng(5))
    g = np.random.default_rng(5).standard_normal((steps, factor.shape[1]))
    noise = g @ factor.T
    n = Phi.shape[0]
    z = np.zeros(n)
    ref = np.empty((steps, n))
    for k in range(steps):
        ref[k] = z
        z = Phi @ z + noise[k, :n]
    idx = list(m.mech_index)
    np.testing.assert_allclose(mech, ref[:, idx], rtol=1e-9, atol=1e-12 * np.abs(ref).max())


@pytest.mark.parametrize("C", [1.0, 70.0, 220.0])
@pytest.mark.parametrize("theta", [0.0, math.pi / 2, math.pi])
def test_stationary_occupancy_matches_budget(params, C, theta):
    drive = DriveState(r=1.0, theta=theta, C=C)
    env = stationary_occupancy(drive, params, "envelope")
    full = stationary_occupancy(drive, params, "full")
    occ = budget(drive, params).occupancy
    assert env == pytest.approx(occ, rel=1e-9)
    assert full == pytest.approx(occ, rel=1e-4)


def test_discrete_covariance_is_stationary(params):
    # one exact step maps the continuous stationary covariance onto itself
    from scipy import linalg
    m = _build(DriveState(r=1.0, theta=0.5, C=70.0), params, "envelope")
    dt = 1 / FS
    Phi, _, factor = _discretize(m, dt)
    P = linalg.solve_continuous_lyapunov(m.A, -m.B @ m.N @ m.B.T)
    Q = factor @ factor.T
    n = Phi.shape[0]
    np.testing.assert_allclose(Phi @ P @ Phi.T + Q[:n, :n], P, rtol=1e-9, atol=1e-12 * np.abs(P).max())


def test_envelope_validity_at_default_params(params):
    rep = check_envelope_validity(DriveState(r=1.0, theta=math.pi / 2, C=70.0), params)
    assert rep.valid and rep.relative_difference < 0.01 and abs(rep.short_run_cavity_z) < 5


# trajectories ----------------------------------------------------------------

def test_integration_is_deterministic(params):
    cfg = short_config(params, 0.2, n_trajectories=3, seed=9, segment_length=1024)
    drive = DriveState(r=1.0, theta=1.0, C=70.0)
    a, b = integrate(drive, params, cfg), integrate(drive, params, cfg)
    np.testing.assert_array_equal(a.y_out, b.y_out)
    np.testing.assert_array_equal(a.mech, b.mech)
    assert a.config_digest == b.config_digest
    # any subset replays the same streams
    sub = integrate(drive, params, cfg, trajectories=[2])
    np.testing.assert_array_equal(sub.y_out[0], a.y_out[2])
    other = integrate(drive, params, SimConfig(**{**cfg.__dict__, "seed": 10}))
    assert not np.array_equal(other.y_out, a.y_out)
    sa = estimate_psd(a, segment_length=1024)
    sb = estimate_psd(b, segment_length=1024)
    np.testing.assert_array_equal(sa.psd, sb.psd)


@pytest.mark.parametrize("C", [10.0, 70.0, 220.0])
def test_simulated_occupancy(params, C):
    drive = DriveState(C=C)
    batch = integrate(drive, params, short_config(params, 20.0, seed=int(C)))
    occ = float(batch.mechanical_occupancy()[0])
    assert occ == pytest.approx(budget(drive, params).occupancy, rel=0.05)


def test_backaction_scales_with_drive_power(params):
    # n_ba is linear in C, i.e. quadratic in the drive amplitude
    amps = np.array([0.5, 1.0, 2.0])
    n_ba = []
    for s in amps:
        drive = DriveState(C=35.0 * s * s)
        batch = integrate(drive, params, short_config(params, 20.0, seed=3))
        n_ba.append(float(batch.mechanical_occupancy()[0]) - params.n_th)
    slope = np.polyfit(np.log(amps), np.log(n_ba), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)


def test_squeezing_suppresses_simulated_backaction(params):
    ratios = {}
    for label, theta in (("amp", 0.0), ("phase", math.pi)):
        drive = DriveState(r=1.0, theta=theta, C=150.0)
        batch = integrate(drive, params, short_config(params, 20.0, seed=4))
        coh = integrate(DriveState(C=150.0), params, short_config(params, 20.0, seed=4))
        ratios[label] = ((batch.mechanical_occupancy()[0] - params.n_th)
                         / (coh.mechanical_occupancy()[0] - params.n_th))
        expected = backaction(drive, params) / backaction(DriveState(C=150.0), params)
        assert ratios[label] == pytest.approx(expected, rel=0.05)
    assert ratios["amp"] < 1 < ratios["phase"]


# spectral estimation ---------------------------------------------------------

def test_uncoupled_spectrum_is_flat_floor(params):
    drive = DriveState(r=1.0, theta=math.pi / 2, C=1e-9)
    batch = integrate(drive, params, short_config(params, 40.0))
    spec = estimate_psd(batch, segment_length=4096, band_hz=2000)
    floor = output_psd(drive, params, spec.freq).floor
    z = (spec.psd - floor) / spec.error
    assert abs(np.mean(spec.psd) / floor - 1) < 3 * np.mean(spec.error / floor) / math.sqrt(spec.psd.size / 2)
    assert np.mean(np.abs(z) < 3) > 0.98


def test_error_bars_calibrated(params):
    drive = DriveState(r=1.0, theta=0.0, C=70.0)
    batch = integrate(drive, params, short_config(params, 64.0, seed=21))
    spec = estimate_psd(batch, segment_length=8192, band_hz=2000)
    z = z_scores(spec, output_psd(drive, params, spec.freq))
    assert abs(np.mean(z)) < 0.3
    assert 0.8 < np.std(z) < 1.25


def test_few_segments_flagged(params):
    batch = integrate(DriveState(C=10.0), params, short_config(params, 0.2, segment_length=4096))
    with pytest.warns(RuntimeWarning, match="segments"):
        spec = estimate_psd(batch, segment_length=4096)
    assert spec.meta["few_segments"] and spec.meta["segments"] < 8
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        spec = estimate_psd(batch, segment_length=512)
    assert not spec.meta["few_segments"]
    with pytest.raises(DomainError):
        estimate_psd(batch, segment_length=1 << 16)


@settings(max_examples=20)
@given(st.lists(st.integers(1, 50), min_size=3, max_size=3))
def test_accumulator_merge_associative(counts):
    rng = np.random.default_rng(sum(counts))
    f = np.arange(8.0)

    def acc(c):
        x = rng.random(8)
        return PsdAccumulator(f, x * c, x * x * c, c, 1.1)

    a, b, c = (acc(n) for n in counts)
    left = a.merge(b).merge(c)
    right = a.merge(b.merge(c))
    np.testing.assert_allclose(left.total, right.total, rtol=1e-14)
    np.testing.assert_allclose(left.total_sq, right.total_sq, rtol=1e-14)
    assert left.count == right.count == sum(counts)
    with pytest.raises(DomainError):
        a.merge(PsdAccumulator(f + 1, a.total, a.total_sq, 1, 1.1))


def test_accumulation_order_independent(params):
    cfg = short_config(params, 0.5, n_trajectories=3, segment_length=1024)
    drive = DriveState(r=0.5, C=70.0)
    whole = accumulate_psd(integrate(drive, params, cfg), segment_length=1024)
    parts = [accumulate_psd(integrate(drive, params, cfg, trajectories=[i]), segment_length=1024)
             for i in (2, 0, 1)]
    merged = parts[0].merge(parts[1]).merge(parts[2])
    assert merged.count == whole.count
    np.testing.assert_allclose(merged.total, whole.total, rtol=1e-12)


def test_full_model_on_scaled_parameters():
    p = SystemParams(mech_freq=TWO_PI * 8e3, cavity_linewidth=TWO_PI * 5e3, eta_det=1.0)
    drive = DriveState(r=1.0, theta=math.pi / 2, C=30.0)
    cfg = SimConfig(dt=1 / 2 ** 18, duration=16.0, segment_length=2 ** 15, model="full")
    batch = integrate(drive, p, cfg)
    spec = estimate_psd(batch, segment_length=2 ** 15, band_hz=2000)
    analytic = output_psd(drive, p, spec.freq, model="full")
    z = z_scores(spec, analytic)
    assert abs(np.mean(z)) < 0.3
    assert 0.8 < np.std(z) < 1.25
    assert float(batch.mechanical_occupancy()[0]) == pytest.approx(
        stationary_occupancy(drive, p, "full"), rel=0.05)


def test_oblique_squeezing_skews_simulated_line(params):
    cfg = default_config(params, segments=2048, n_trajectories=4, seed=1)
    for deg in (90, 270):
        drive = DriveState(r=1.0, theta=math.radians(deg), C=70.0)
        res = run_case(f"t{deg}", drive, params, cfg)
        assert np.sign(res.asymmetry_mc) == np.sign(res.asymmetry_analytic)
        assert res.rms_psd_deviation < 0.05
        assert res.occupancy_deviation < 0.05


def test_canonical_cases_and_unknown_case(params):
    cases = canonical_cases()
    assert sorted(cases) == sorted(f"r{r}_theta{t}" for r in (0, 1) for t in (0, 90, 180))
    with pytest.raises(DomainError, match="nope"):
        mc_verify(params, ["nope"])


def test_small_budget_verification_report(params):
    rep = mc_verify(params, "r0_theta0", segments=256, n_trajectories=2)
    assert rep["cases"][0]["segments"] >= 256
    assert set(rep) == {"seed", "config", "config_digest", "cases", "passed"}
