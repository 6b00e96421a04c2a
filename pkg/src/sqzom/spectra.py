"""Output noise spectra of the resonantly driven optomechanical cavity.

The linearized dynamics in the frame rotating at the cavity frequency, with
quadratures ``X = (a + a^dag)/2`` and ``Y = (a - a^dag)/2i`` and mechanical
position ``q = b + b^dag``, are

    dX/dt = -kappa/2 X + sqrt(kappa) X_in
    dY/dt = -kappa/2 Y - g q + sqrt(kappa) Y_in
    db/dt = -(i Omega_m + Gamma/2) b - 2 i g X + sqrt(Gamma) b_in

with the perfectly overcoupled input-output relation ``out = in - sqrt(kappa) a``.
The amplitude quadrature never sees the mechanics (QND), while the phase
quadrature carries the mechanical motion, including the backaction driven by
``X_in``. Squeezing correlates ``X_in`` and ``Y_in`` which produces the
dispersive (Fano) term when the squeezed axis is oblique.

Two solvers are provided. ``model="narrowband"`` evaluates the cavity response
at the mechanical sideband and keeps only the co-rotating mechanical pole.
With ``Gamma << kappa, Omega_m`` this is exact to ``O(Gamma/kappa)`` and yields
exactly ``floor + Lorentzian + dispersive``. ``model="full"`` solves the
complete 4x4 linear-response problem at every frequency.

Spectra are symmetrized and normalized to the shot noise of an ideal detector:
``psd = 1 - eta + 4 eta S_Q`` where ``S_Q`` is the detected quadrature's
spectral density in vacuum-1/4 units.
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
    coupling_rate,
    drive_covariance,
    weighted_cooperativity,
)
from .errors import DomainError, FitError, UnsupportedConfiguration

PHASE_QUADRATURE = math.pi / 2
AMPLITUDE_QUADRATURE = 0.0

DEFAULT_SPAN_HZ = 300e3
DEFAULT_POINTS = 6000


@dataclass(frozen=True, eq=False)
class Spectrum:
    """PSD on a frequency grid, normalized to ideal shot noise.

    ``freq`` holds offsets from the mechanical frequency in Hz unless
    ``absolute`` is set. ``error`` is an optional per-bin standard error.
    """

    freq: np.ndarray
    psd: np.ndarray
    quadrature_angle: float = PHASE_QUADRATURE
    kind: str = "homodyne"
    absolute: bool = False
    floor: float | None = None
    error: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.freq.shape != self.psd.shape:
            raise DomainError("frequency grid and psd differ in shape")
        if np.any(np.diff(self.freq) <= 0):
            raise DomainError("frequency grid must be strictly increasing")

    def rows(self):
        return np.column_stack([self.freq, self.psd])


@dataclass(frozen=True)
class LineshapeFit:
    """Least-squares fit of ``floor + [A h^2 + B h x] / (x^2 + h^2)``.

    ``h`` is half the linewidth and ``x`` the offset from ``center``.
    ``lorentzian_area`` is the integrated absorptive excess divided by the
    linewidth (``pi A / 2``), i.e. excess power in units of shot-noise power
    per mechanical linewidth. ``fano_coefficient`` is ``B / A``.
    ``stderr`` maps parameter names to 68% (one sigma) half-widths.
    """

    center: float
    linewidth: float
    peak: float
    dispersive: float
    floor: float
    fit_residual: float
    stderr: dict
    nfev: int = 0

    @property
    def lorentzian_area(self) -> float:
        return 0.5 * math.pi * self.peak

    @property
    def lorentzian_area_stderr(self) -> float:
        return 0.5 * math.pi * self.stderr["peak"]

    @property
    def fano_coefficient(self) -> float:
        return self.dispersive / self.peak if self.peak != 0 else math.copysign(math.inf, self.dispersive)

    def as_dict(self):
        return {
            "center": self.center,
            "linewidth": self.linewidth,
            "lorentzian_area": self.lorentzian_area,
            "fano_coefficient": self.fano_coefficient,
            "floor": self.floor,
            "fit_residual": self.fit_residual,
            "peak": self.peak,
            "dispersive": self.dispersive,
            "stderr": dict(self.stderr),
        }


def default_grid(span_hz: float = DEFAULT_SPAN_HZ, points: int = DEFAULT_POINTS) -> np.ndarray:
    """Grid of offsets from Omega_m, exactly mirror-symmetric about zero.

    Even ``points`` gives bin centres at ``+-(k + 1/2) df``; odd ``points``
    includes zero.
    """
    if points < 2 or span_hz <= 0:
        raise DomainError("grid needs at least 2 points and a positive span")
    step = span_hz / points
    if points % 2 == 0:
        half = (np.arange(points // 2) + 0.5) * step
        return np.concatenate([-half[::-1], half])
    half = np.arange(1, points // 2 + 1) * step
    return np.concatenate([-half[::-1], [0.0], half])


def susceptibilities(params: SystemParams, omega):
    """Cavity and mechanical response at angular frequency ``omega``.

    ``chi_c = 1 / (kappa/2 - i omega)`` in the frame of the resonant drive and
    ``chi_m = 1 / (Gamma/2 - i (omega - Omega_m))``.
    """
    omega = np.asarray(omega, dtype=float)
    chi_c = 1.0 / (params.kappa / 2.0 - 1j * omega)
    chi_m = 1.0 / (params.gamma / 2.0 - 1j * (omega - params.omega_m))
    return chi_c, chi_m


def analytic_floor(drive: DriveState, params: SystemParams, angle: float = PHASE_QUADRATURE,
                   eta_det: float | None = None) -> float:
    """Far-from-resonance level ``1 - eta + 4 eta <dQ^2>`` of a homodyne spectrum."""
    eta = params.eta_det if eta_det is None else eta_det
    cov = drive_covariance(drive, params)
    return float(1.0 - eta + 4.0 * eta * cov.variance(angle))


def _check_detuning(detuning):
    if detuning != 0.0:
        raise UnsupportedConfiguration(
            "only a drive on cavity resonance is supported (detuning must be 0)")


def _narrowband_moments(v_xx, v_yy, v_xy, C, params, delta, angle):
    g2 = C * params.kappa * params.gamma / 4.0
    K = g2 * params.kappa / (params.kappa ** 2 / 4.0 + params.omega_m ** 2)
    half = params.gamma / 2.0
    D = half * half + delta * delta
    c, s = math.cos(angle), math.sin(angle)
    if abs(c) < 1e-15:
        c = 0.0
    if abs(s) < 1e-15:
        s = 0.0
    n_mech = params.n_th + 0.5
    return (v_xx * (c * c + (4.0 * s * s * K * K - 4.0 * c * s * K * delta) / D)
            + s * s * v_yy
            + 2.0 * v_xy * (s * c - 2.0 * s * s * K * delta / D)
            + s * s * params.gamma * K * n_mech / D)


def _narrowband_sq(drive, params, delta, angle):
    """Detected quadrature spectral density (vacuum 1/4) near +Omega_m."""
    cov = drive_covariance(drive, params)
    return _narrowband_moments(cov.v_xx, cov.v_yy, cov.v_xy, drive.C, params, delta, angle)


def psd_at_offset(r, theta, C, params: SystemParams, offset_hz: float,
                  detect_angle: float = PHASE_QUADRATURE, eta_det: float | None = None):
    """Narrowband homodyne PSD at one offset, broadcast over ``r``, ``theta``, ``C``.

    Same expression as :func:`output_psd` with ``model="narrowband"``.
    """
    eta = params.eta_det if eta_det is None else eta_det
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    C = np.asarray(C, dtype=float)
    scale = SNL * (1.0 + 2.0 * params.n_c)
    ch, sh = np.cosh(2.0 * r), np.sinh(2.0 * r)
    v_xx = scale * (1.0 - params.eta_in + params.eta_in * (ch - np.cos(theta) * sh))
    v_yy = scale * (1.0 - params.eta_in + params.eta_in * (ch + np.cos(theta) * sh))
    v_xy = -scale * params.eta_in * np.sin(theta) * sh
    sq = _narrowband_moments(v_xx, v_yy, v_xy, C, params, TWO_PI * offset_hz, detect_angle)
    return 1.0 - eta + 4.0 * eta * sq


def _full_sq(drive, params, omega, angle):
    """Same quantity from the complete 4x4 linear-response solution."""
    cov = drive_covariance(drive, params)
    g = coupling_rate(params, drive.C)
    k, G, Om = params.kappa, params.gamma, params.omega_m
    A = np.array([
        [-k / 2, 0.0, 0.0, 0.0],
        [0.0, -k / 2, -g, 0.0],
        [0.0, 0.0, -G / 2, Om],
        [-4.0 * g, 0.0, -Om, -G / 2],
    ])
    B = np.diag([math.sqrt(k), math.sqrt(k), math.sqrt(G), math.sqrt(G)])
    noise = np.zeros((4, 4))
    noise[:2, :2] = cov.matrix
    noise[2, 2] = noise[3, 3] = 2.0 * params.n_th + 1.0
    c, s = math.cos(angle), math.sin(angle)
    proj = np.array([c, s, 0.0, 0.0])
    eye = np.eye(4)
    out = np.empty(omega.shape)
    for i, w in enumerate(omega.ravel()):
        M = np.linalg.solve(-1j * w * eye - A, B)
        t = proj - math.sqrt(k) * (proj @ M)
        out.flat[i] = np.real(t @ noise @ t.conj())
    return out


def output_psd(drive: DriveState, params: SystemParams, grid=None,
               detect_angle: float = PHASE_QUADRATURE, *, model: str = "narrowband",
               eta_det: float | None = None, detuning: float = 0.0) -> Spectrum:
    """Homodyne PSD at LO angle ``detect_angle`` on ``grid`` (Hz offsets from Omega_m).

    ``detect_angle = pi/2`` is the phase quadrature carrying the mechanical
    signal; ``0`` is the amplitude quadrature.
    """
    _check_detuning(detuning)
    freq = default_grid() if grid is None else np.asarray(grid, dtype=float)
    eta = params.eta_det if eta_det is None else eta_det
    delta = TWO_PI * freq
    if model == "narrowband":
        sq = _narrowband_sq(drive, params, delta, detect_angle)
    elif model == "full":
        sq = _full_sq(drive, params, params.omega_m + delta, detect_angle)
    else:
        raise DomainError(f"unknown spectrum model {model!r}")
    psd = 1.0 - eta + 4.0 * eta * sq
    floor = analytic_floor(drive, params, detect_angle, eta)
    return Spectrum(freq=freq, psd=np.asarray(psd, dtype=float), quadrature_angle=detect_angle,
                    kind="homodyne", floor=floor,
                    meta={"C": drive.C, "r": drive.r, "theta": drive.theta, "eta_det": eta,
                          "model": model})


def amplitude_quadrature_qnd_check(drive: DriveState, params: SystemParams, grid=None,
                                   **kwargs) -> Spectrum:
    """Spectrum of the reflected amplitude quadrature.

    The mechanics only reads the amplitude quadrature and writes onto the
    phase quadrature, so this spectrum is flat at its floor.
    """
    return output_psd(drive, params, grid, AMPLITUDE_QUADRATURE, **kwargs)


def qnd_deviation(spec: Spectrum) -> float:
    """``max |psd - floor| / floor`` over the grid."""
    floor = spec.floor if spec.floor is not None else float(np.median(spec.psd))
    return float(np.max(np.abs(spec.psd - floor)) / floor)


def heterodyne_upper_sideband(drive: DriveState, params: SystemParams, grid=None, *,
                              model: str = "narrowband", eta_det: float | None = None,
                              detuning: float = 0.0) -> Spectrum:
    """Phase-insensitive PSD of the upper mechanical sideband.

    Heterodyne detection splits the detection efficiency evenly between the two
    quadratures, so the result is the mean of the amplitude- and phase-
    quadrature homodyne spectra taken at half efficiency. The floor
    ``1 - eta/2 + eta (v_xx + v_yy)`` depends on r but not on theta.
    """
    eta = params.eta_det if eta_det is None else eta_det
    amp = output_psd(drive, params, grid, AMPLITUDE_QUADRATURE, model=model,
                     eta_det=eta / 2.0, detuning=detuning)
    ph = output_psd(drive, params, grid, PHASE_QUADRATURE, model=model,
                    eta_det=eta / 2.0, detuning=detuning)
    cov = drive_covariance(drive, params)
    floor = 1.0 - eta / 2.0 + eta * (cov.v_xx + cov.v_yy)
    return Spectrum(freq=amp.freq, psd=0.5 * (amp.psd + ph.psd), quadrature_angle=float("nan"),
                    kind="heterodyne_upper", floor=floor,
                    meta={**ph.meta, "eta_det": eta})


def asymmetry_metric(spec: Spectrum, floor: float | None = None) -> float:
    """Normalized odd part ``sum sign(f) (psd - floor) / sum |psd - floor|``.

    Zero for a lineshape symmetric about the mechanical frequency. Uses exact
    mirror pairs when the grid is symmetric, interpolation otherwise.
    """
    floor = spec.floor if floor is None else floor
    f, excess = spec.freq, spec.psd - floor
    total = np.sum(np.abs(excess))
    if total == 0:
        return 0.0
    if np.array_equal(f, -f[::-1]):
        pos = f > 0
        odd = np.sum(excess[pos] - excess[::-1][pos])
    else:
        pos = f > 0
        mirrored = np.interp(-f[pos], f, excess)
        odd = np.sum(excess[pos] - mirrored)
    return float(odd / total)


def peak_gain(drive: DriveState, params: SystemParams, angle: float = PHASE_QUADRATURE,
              kind: str = "homodyne", eta_det: float | None = None) -> float:
    """Lorentzian peak height per phonon of (n + 1/2)."""
    eta = params.eta_det if eta_det is None else eta_det
    C_tilde = weighted_cooperativity(drive.C, params)
    if kind == "homodyne":
        return 4.0 * eta * C_tilde * math.sin(angle) ** 2
    if kind == "heterodyne_upper":
        return eta * C_tilde
    raise DomainError(f"unknown spectrum kind {kind!r}")


def occupancy_from_area(fit: LineshapeFit, drive: DriveState, params: SystemParams,
                        angle: float = PHASE_QUADRATURE, kind: str = "homodyne",
                        eta_det: float | None = None) -> float:
    """Mechanical occupancy implied by a fitted Lorentzian.

    Uses the transduction gain that also defines the imprecision and
    backaction formulas, and removes the zero-point half quantum of the
    symmetrized spectrum.
    """
    peak = 2.0 * fit.lorentzian_area / math.pi
    return peak / peak_gain(drive, params, angle, kind, eta_det) - 0.5


def _model(f, center, linewidth, peak, dispersive, floor):
    h = 0.5 * linewidth
    x = f - center
    return floor + (peak * h * h + dispersive * h * x) / (x * x + h * h)


def _linear_part(f, w, center, linewidth):
    h = 0.5 * linewidth
    x = f - center
    denom = x * x + h * h
    basis = np.column_stack([h * h / denom, h * x / denom, np.ones_like(f)])
    return basis * w[:, None]


def fit_lineshape(spec: Spectrum, sigma=None, *, max_nfev: int = 200,
                  min_span_linewidths: float = 10.0) -> LineshapeFit:
    """Weighted least-squares Lorentzian-plus-dispersive fit.

    ``sigma`` defaults to the spectrum's error bars, or to the PSD itself
    (relative weighting) for noiseless spectra. Amplitudes and floor are
    solved linearly for each trial (center, linewidth) before a joint
    polish of all five parameters.
    """
    f = np.asarray(spec.freq, dtype=float)
    y = np.asarray(spec.psd, dtype=float)
    if sigma is None:
        sigma = spec.error if spec.error is not None else np.abs(y)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), y.shape)
    if np.any(~(sigma > 0)):
        raise DomainError("fit weights must be positive")
    w = 1.0 / sigma
    span = f[-1] - f[0]
    df = np.min(np.diff(f))

    edge = np.abs(f - f.mean()) > 0.3 * span
    floor0 = float(np.median(y[edge])) if np.any(edge) else float(np.median(y))
    excess = y - floor0
    i0 = int(np.argmax(np.abs(excess)))
    above = np.abs(excess) > 0.5 * abs(excess[i0])
    width0 = max(np.count_nonzero(above) * df, 2.0 * df)

    def solve_linear(c, lw):
        basis = _linear_part(f, w, c, lw)
        coef, *_ = np.linalg.lstsq(basis, y * w, rcond=None)
        return coef

    def reduced(p):
        c, log_lw = p
        lw = math.exp(log_lw)
        coef = solve_linear(c, lw)
        return (_model(f, c, lw, *coef) - y) * w

    best = None
    for c_try in (f[i0], 0.5 * (f[0] + f[-1])):
        for scale in (1.0, 0.3, 3.0):
            res = optimize.least_squares(reduced, [c_try, math.log(width0 * scale)],
                                         x_scale=[width0, 1.0], max_nfev=max_nfev,
                                         method="lm")
            if best is None or res.cost < best.cost:
                best = res
    c, lw = best.x[0], math.exp(best.x[1])
    p0 = [c, lw, *solve_linear(c, lw)]

    def full(p):
        return (_model(f, *p) - y) * w

    scale = np.array([lw, lw, max(abs(p0[2]), 1e-30), max(abs(p0[3]), abs(p0[2]), 1e-30),
                      max(abs(p0[4]), 1e-30)])
    res = optimize.least_squares(full, p0, x_scale=scale, method="lm", max_nfev=max_nfev * 5)
    if not res.success or not np.all(np.isfinite(res.x)):
        raise FitError("lineshape fit did not converge",
                       {"status": res.status, "message": res.message, "x": res.x.tolist(),
                        "nfev": res.nfev})
    center, linewidth, peak, dispersive, floor = res.x
    linewidth = abs(linewidth)
    dof = max(y.size - 5, 1)
    chi2 = 2.0 * res.cost
    s2 = chi2 / dof
    cov = np.linalg.pinv(res.jac.T @ res.jac) * s2
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    if abs(peak) > 0 and span < min_span_linewidths * linewidth:
        raise FitError("grid spans fewer than the required number of linewidths",
                       {"span": span, "linewidth": linewidth})
    names = ("center", "linewidth", "peak", "dispersive", "floor")
    return LineshapeFit(
        center=float(center), linewidth=float(linewidth), peak=float(peak),
        dispersive=float(dispersive), floor=float(floor), fit_residual=float(math.sqrt(s2)),
        stderr=dict(zip(names, map(float, err))), nfev=int(res.nfev),
    )
