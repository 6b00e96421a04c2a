"""Squeezing tomography through the mechanical sideband.

The mechanics only responds to the drive's amplitude quadrature. Rotating the
squeezing phase while recording the integrated power of the upper
mechanical sideband therefore traces out the amplitude variance as a
function of phase. Fitting that trace gives the squeezing parameter and an
effective detection efficiency.

Sweep phase convention: ``theta_grid`` holds the squeezing phase ``theta``
(``theta = 0`` squeezes the amplitude quadrature). The fit model is written
in terms of a pump phase ``x = 2 theta`` and uses the half-angle form
``cos((phi + x) / 2)``, with ``phi`` a free calibration offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .core_model import (
    SNL,
    TWO_PI,
    DriveState,
    SystemParams,
    drive_covariance,
    squeezed_thermal_variances,
    weighted_cooperativity,
)
from .errors import DomainError, InvariantViolation
from .spectra import heterodyne_upper_sideband, peak_gain

DEFAULT_SWEEP_POINTS = 200
DEFAULT_AVERAGES = 500  # resolution bandwidth / video bandwidth = 1 kHz / 2 Hz
BAND_LINEWIDTHS = 5.0


@dataclass(frozen=True, eq=False)
class PhaseSweep:
    """Integrated upper-sideband power versus squeezing phase.

    ``integrated_power`` is normalized to the coherent-drive (r = 0) level.
    ``integration_band`` is in Hz; ``samples_per_point`` is the number of
    averages (0 means noiseless).
    """

    theta_grid: np.ndarray
    integrated_power: np.ndarray
    integration_band: float
    samples_per_point: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.theta_grid.shape != self.integrated_power.shape:
            raise DomainError("theta grid and power differ in shape")
        if np.any(~(self.integrated_power > 0)):
            raise InvariantViolation("normalized sideband power must be positive")

    @property
    def pump_phase(self) -> np.ndarray:
        return 2.0 * self.theta_grid


@dataclass(frozen=True)
class SqueezeEstimate:
    r_hat: float
    eta_eff: float
    eta_det_om: float
    phase_offset: float
    stderr: dict
    degenerate: bool = False

    def ci(self, z: float = 1.0) -> dict:
        """Symmetric intervals ``value +- z * stderr`` for each parameter."""
        values = {"r_hat": self.r_hat, "eta_eff": self.eta_eff,
                  "eta_det_om": self.eta_det_om, "phase_offset": self.phase_offset}
        return {k: (v - z * self.stderr[k], v + z * self.stderr[k]) for k, v in values.items()}

    def as_dict(self):
        return {"r_hat": self.r_hat, "eta_eff": self.eta_eff, "eta_det_om": self.eta_det_om,
                "phase_offset": self.phase_offset, "degenerate": self.degenerate,
                "ci": {k: list(v) for k, v in self.ci().items()}}


def _band_terms(params: SystemParams, C: float, band_hz: float, eta_det: float | None):
    """Floor width and Lorentzian weight of the band-integrated heterodyne power."""
    eta = params.eta_det if eta_det is None else eta_det
    h = params.gamma / TWO_PI / 2.0
    lorentz = 2.0 * h * math.atan(band_hz / (2.0 * h))
    gain = eta * weighted_cooperativity(C, params)
    return eta, lorentz, gain


def _band_power(params, C, band_hz, v_xx, trace, eta_det):
    eta, lorentz, gain = _band_terms(params, C, band_hz, eta_det)
    floor = 1.0 - eta / 2.0 + eta * trace
    n_mech = params.n_th + 0.5 + weighted_cooperativity(C, params) * v_xx
    return floor * band_hz + gain * n_mech * lorentz


def integrated_sideband_power(drive: DriveState, params: SystemParams,
                              band_hz: float | None = None, *, eta_det: float | None = None,
                              numeric: bool = False, points: int = 2001) -> float:
    """Upper-sideband heterodyne power integrated over ``band_hz`` around Omega_m.

    Units: shot-noise PSD times Hz. The closed form integrates the floor and
    the Lorentzian exactly (the dispersive part is odd and drops out);
    ``numeric=True`` integrates the heterodyne spectrum instead.
    """
    band = BAND_LINEWIDTHS * params.gamma / TWO_PI if band_hz is None else band_hz
    if numeric:
        grid = np.linspace(-band / 2.0, band / 2.0, points)
        spec = heterodyne_upper_sideband(drive, params, grid, eta_det=eta_det)
        return float(np.trapezoid(spec.psd, grid))
    cov = drive_covariance(drive, params)
    return float(_band_power(params, drive.C, band, cov.v_xx, cov.v_xx + cov.v_yy, eta_det))


def measured_occupancy(drive: DriveState, params: SystemParams, n_imp: float) -> float:
    """``n_th + n_imp + C~ <dX_a^2>``: occupancy a sideband measurement infers."""
    cov = drive_covariance(drive, params)
    return params.n_th + n_imp + weighted_cooperativity(drive.C, params) * cov.v_xx


def simulate_phase_sweep(drive_r: float, params: SystemParams, C: float, theta_grid=None, *,
                         averages: int = 0, seed=None, band_hz: float | None = None,
                         background_correction: bool = True, phase_offset: float = 0.0,
                         eta_det: float | None = None,
                         points: int = DEFAULT_SWEEP_POINTS) -> PhaseSweep:
    """Normalized band-integrated sideband power as the squeezing phase rotates.

    For each phase the measured occupancy ``n_th + n_imp + C~ <dX_a^2>``
    (``n_imp`` here being the heterodyne floor integrated over the band) is
    converted to band power and divided by its value for an unsqueezed drive.
    ``background_correction`` removes the theta-independent rise of the
    floor caused by anti-squeezing, leaving only the mechanical contribution
    to vary with r. ``averages > 0`` multiplies each point by an independent
    ``chi2(2 averages) / (2 averages)`` draw from ``numpy.random.default_rng(seed)``.
    """
    if not C > 0:
        raise DomainError("cooperativity must be > 0")
    if drive_r < 0:
        raise DomainError("squeezing parameter must be >= 0")
    theta = (np.arange(points) * (TWO_PI / points) if theta_grid is None
             else np.asarray(theta_grid, dtype=float))
    band = BAND_LINEWIDTHS * params.gamma / TWO_PI if band_hz is None else band_hz
    angle_theta = theta + phase_offset
    v_xx = squeezed_thermal_variances(drive_r, angle_theta, params.n_c, params.eta_in, 0.0)
    v_yy = squeezed_thermal_variances(drive_r, angle_theta, params.n_c, params.eta_in,
                                      math.pi / 2)
    trace_ref = 2.0 * SNL * (1.0 + 2.0 * params.n_c)
    trace = np.full_like(v_xx, trace_ref) if background_correction else v_xx + v_yy
    ref = _band_power(params, C, band, trace_ref / 2.0, trace_ref, eta_det)
    power = _band_power(params, C, band, v_xx, trace, eta_det) / ref
    if averages:
        rng = np.random.default_rng(seed)
        dof = 2 * int(averages)
        power = power * rng.chisquare(dof, size=power.shape) / dof
    return PhaseSweep(theta_grid=theta, integrated_power=np.asarray(power, dtype=float),
                      integration_band=band, samples_per_point=int(averages),
                      meta={"r": drive_r, "C": C, "eta_in": params.eta_in,
                            "background_correction": background_correction})


def expected_eta_eff(params: SystemParams, C: float, band_hz: float | None = None,
                     eta_det: float | None = None) -> float:
    """Effective efficiency that :func:`fit_squeezing` recovers from a clean sweep.

    Equals ``eta_in * b / (a + b)`` where ``b`` is the band power from
    coherent-drive backaction (thermal factor included) and ``a`` the
    remaining band power (thermal motion, zero point and floor).
    """
    band = BAND_LINEWIDTHS * params.gamma / TWO_PI if band_hz is None else band_hz
    eta, lorentz, gain = _band_terms(params, C, band, eta_det)
    v0 = SNL * (1.0 + 2.0 * params.n_c)
    total = _band_power(params, C, band, v0, 2.0 * v0, eta_det)
    b = gain * lorentz * weighted_cooperativity(C, params) * v0
    return params.eta_in * b / total


def sweep_model(pump_phase, r, eta_eff, phase_offset):
    """``1 - eta + eta (cosh 2r - cos((phi + x) / 2) sinh 2r)``."""
    return 1.0 - eta_eff + eta_eff * (
        math.cosh(2.0 * r) - np.cos((phase_offset + pump_phase) / 2.0) * math.sinh(2.0 * r))


def fit_squeezing(sweep: PhaseSweep, eta_in: float | None = None) -> SqueezeEstimate:
    """Fit ``(r, eta_eff, phi)`` to a phase sweep.

    ``eta_det_om = eta_eff / eta_in``; ``eta_in`` defaults to the value
    recorded in the sweep. A sweep whose contrast is not resolved above its
    scatter returns ``r_hat = 0`` with ``degenerate=True``.
    """
    x = sweep.pump_phase
    y = sweep.integrated_power
    eta_in = sweep.meta.get("eta_in", 0.47) if eta_in is None else eta_in
    if np.ptp(sweep.theta_grid) < TWO_PI * (1.0 - 1.5 / max(len(x), 2)):
        raise DomainError("phase sweep must cover a full period of the squeezing phase")

    # y = c0 - a cos(theta + phi/2) is linear in (c0, a cos, a sin)
    theta = x / 2.0
    basis = np.column_stack([np.ones_like(theta), -np.cos(theta), np.sin(theta)])
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    c0, ac, as_ = coef
    amp = math.hypot(ac, as_)
    half_phi = math.atan2(as_, ac)
    resid = y - basis @ coef
    dof = max(len(y) - 3, 1)
    s2 = float(resid @ resid) / dof
    amp_err = math.sqrt(2.0 * s2 / len(y))
    excess = c0 - 1.0

    if amp <= max(2.0 * amp_err, 1e-12) or excess <= 0 or excess >= amp:
        r_err = math.atanh(min(0.999, 2.0 * amp_err / max(abs(excess), 1e-12))) if amp_err else 0.0
        return SqueezeEstimate(r_hat=0.0, eta_eff=0.0, eta_det_om=0.0,
                               phase_offset=0.0,
                               stderr={"r_hat": max(r_err, 2.0 * amp_err, 1.0),
                                       "eta_eff": 1.0, "eta_det_om": 1.0 / eta_in,
                                       "phase_offset": math.pi},
                               degenerate=True)

    r0 = math.atanh(excess / amp)
    eta0 = min(amp / math.sinh(2.0 * r0), 1.0)
    phi0 = 2.0 * half_phi

    def resid_fn(p):
        return sweep_model(x, *p) - y

    res = optimize.least_squares(resid_fn, [r0, eta0, phi0],
                                 bounds=([0.0, 0.0, -np.inf], [np.inf, 1.0, np.inf]),
                                 x_scale=[max(r0, 1e-3), max(eta0, 1e-3), 1.0],
                                 xtol=1e-15, ftol=1e-15, gtol=1e-15)
    r_hat, eta_eff, phi = res.x
    s2 = 2.0 * res.cost / dof
    cov = np.linalg.pinv(res.jac.T @ res.jac) * s2
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    phi = (phi + 2.0 * math.pi) % (4.0 * math.pi) - 2.0 * math.pi
    return SqueezeEstimate(
        r_hat=float(r_hat), eta_eff=float(eta_eff), eta_det_om=float(eta_eff / eta_in),
        phase_offset=float(phi),
        stderr={"r_hat": float(err[0]), "eta_eff": float(err[1]),
                "eta_det_om": float(err[1] / eta_in), "phase_offset": float(err[2])},
    )


def coherent_imprecision(params: SystemParams, C: float) -> float:
    """Homodyne imprecision for an ideal coherent drive (phase variance 1/4)."""
    return 1.0 / (4.0 * params.eta_det * weighted_cooperativity(C, params))


def eta_det_om_predicted(params: SystemParams, C: float, *, include_imprecision: bool = True,
                         check: bool = True) -> float:
    """Optomechanical detection efficiency ``(1 + (n_th + n_imp) / n_ba_coh)^-1``.

    ``n_ba_coh = C / (1 + 4 (Omega_m/kappa)^2)`` is the coherent-drive
    backaction. With ``include_imprecision=False`` this is the high-drive
    form ``(1 + n_th Gamma / Gamma_scatter)^-1``. When ``check`` is set and
    ``n_imp < n_th / 100`` the two forms are verified to agree within 1%.
    """
    C_arr = np.asarray(C, dtype=float)
    if np.any(~(C_arr > 0)):
        raise DomainError("cooperativity must be > 0")
    n_coh = C_arr / params.sideband_weight
    n_imp = coherent_imprecision(params, C_arr) if params.eta_det > 0 else np.inf
    full = 1.0 / (1.0 + (params.n_th + n_imp) / n_coh)
    simple = 1.0 / (1.0 + params.n_th / n_coh)
    if check:
        mask = np.asarray(n_imp < params.n_th / 100.0)
        if np.any(mask & (np.abs(full / simple - 1.0) > 0.01)):
            raise InvariantViolation("high-drive efficiency disagrees with the full expression")
    out = full if include_imprecision else simple
    return float(out) if np.ndim(out) == 0 else out
