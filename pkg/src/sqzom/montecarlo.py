"""Time-domain stochastic oracle for the analytic spectra.

The linearized quantum Langevin equations are Gaussian and linear, so their
symmetrized spectra are reproduced exactly by a classical SDE whose noise
covariances include the zero-point terms. Two state-space models are
integrated:

``full``
    Real quadratures ``(X, Y, q, p)`` in the frame of the resonant drive,
    mechanics oscillating at Omega_m. Requires ``dt kappa/2 < 0.1`` and
    ``dt Omega_m < 0.3``; only practical for short runs or scaled
    parameters.
``envelope``
    Cavity eliminated through its response at the mechanical sideband and
    mechanics in the frame rotating at Omega_m (complex envelope ``beta``).
    Valid for ``Gamma << kappa, Omega_m``. This is the fast path used for
    long spectral runs; :func:`check_envelope_validity` compares it with the
    full model.

Each step is propagated exactly (matrix exponential of the drift, Van Loan
noise covariance). The detected output is integrated over each step, so
sampled white noise stays white and the PSD estimate needs no anti-alias
correction.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import linalg, signal

from .core_model import TWO_PI, DriveState, SystemParams, coupling_rate, drive_covariance
from .errors import DomainError, IntegrationError, InvariantViolation
from .spectra import Spectrum, fit_lineshape, occupancy_from_area, output_psd

MODELS = ("envelope", "full")


@dataclass(frozen=True)
class SimConfig:
    """Integration and spectral-estimation settings.

    ``segment_length`` is the Welch segment length in samples (Hann window,
    50% overlap). ``burn_in`` defaults to ``10 / Gamma``.
    """

    dt: float
    duration: float
    n_trajectories: int = 1
    seed: int = 0
    segment_length: int = 8192
    model: str = "envelope"
    burn_in: float | None = None

    def validate(self, params: SystemParams) -> None:
        if self.model not in MODELS:
            raise DomainError(f"unknown model {self.model!r}")
        if not (self.dt > 0 and self.duration > 0 and self.n_trajectories >= 1):
            raise DomainError("dt, duration and n_trajectories must be positive")
        if self.model == "full":
            if self.dt * params.kappa / 2.0 >= 0.1:
                raise DomainError(f"dt={self.dt!r} too coarse: need dt*kappa/2 < 0.1")
            if self.dt * params.omega_m >= 0.3:
                raise DomainError(f"dt={self.dt!r} too coarse: need dt*Omega_m < 0.3")
        elif self.dt * params.gamma / 2.0 >= 0.1:
            raise DomainError(f"dt={self.dt!r} too coarse: need dt*Gamma/2 < 0.1")
        if self.duration < 100.0 / params.gamma:
            raise DomainError("duration must be at least 100/Gamma to resolve the mechanical line")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def burn_in_steps(self, params: SystemParams) -> int:
        t = 10.0 / params.gamma if self.burn_in is None else self.burn_in
        return int(math.ceil(t / self.dt))

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def default_config(params: SystemParams, *, segments: int = 10_000, n_trajectories: int = 16,
                   seed: int = 0, model: str = "envelope") -> SimConfig:
    """Envelope-model settings resolving the mechanical line to ~Gamma/25.

    ``segments`` is the total number of 50%-overlapping Welch segments over
    all trajectories.
    """
    gamma_hz = params.gamma / TWO_PI
    fs = 2.0 ** math.ceil(math.log2(320.0 * gamma_hz))
    nperseg = int(2 ** math.ceil(math.log2(25.0 * fs / gamma_hz)))
    samples = (segments + n_trajectories) * nperseg // 2
    per_traj = int(math.ceil(samples / n_trajectories))
    duration = max(per_traj / fs, 100.0 / params.gamma)
    return SimConfig(dt=1.0 / fs, duration=duration, n_trajectories=n_trajectories, seed=seed,
                     segment_length=nperseg, model=model)


@dataclass(frozen=True, eq=False)
class NoiseStreams:
    """Unit-bandwidth white noise samples (covariance per sample = intensity)."""

    x_in: np.ndarray
    y_in: np.ndarray
    bath_q: np.ndarray
    bath_p: np.ndarray
    vacuum: np.ndarray


def synthesize_input_noise(drive: DriveState, params: SystemParams, n_samples: int,
                           seed=None) -> NoiseStreams:
    """Gaussian quadrature noise with the drive covariance, plus bath and vacuum.

    The drive streams have sample covariance ``drive_covariance``; the bath
    quadratures have variance ``2 n_th + 1`` and the detector vacuum 1/4.
    Multiply by ``sqrt(dt)`` to get Wiener increments.
    """
    cov = drive_covariance(drive, params)
    try:
        chol = np.linalg.cholesky(cov.matrix)
    except np.linalg.LinAlgError as exc:
        raise InvariantViolation("drive covariance is not positive definite") from exc
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((5, n_samples))
    xy = chol @ g[:2]
    bath = math.sqrt(2.0 * params.n_th + 1.0)
    return NoiseStreams(x_in=xy[0], y_in=xy[1], bath_q=bath * g[2], bath_p=bath * g[3],
                        vacuum=0.5 * g[4])


# ----------------------------------------------------------------------------
# state-space models


@dataclass(frozen=True, eq=False)
class _Model:
    """Linear SDE ``dz = A z dt + B dW`` with ``<dW dW^T> = N dt``.

    Output quadratures (step averages) are ``(Hz @ z_int + Hw @ W) / dt``
    where rows are Re/Im (envelope) or the real value (full) of X_out,
    Y_out and the detector vacuum.
    """

    A: np.ndarray
    B: np.ndarray
    N: np.ndarray
    Hz: np.ndarray
    Hw: np.ndarray
    complex_output: bool
    mech_index: tuple


def _cmul(c: complex) -> np.ndarray:
    return np.array([[c.real, -c.imag], [c.imag, c.real]])


def _envelope_model(drive: DriveState, params: SystemParams) -> _Model:
    cov = drive_covariance(drive, params)
    g = float(coupling_rate(params, drive.C))
    k, G = params.kappa, params.gamma
    chi_c = 1.0 / (k / 2.0 - 1j * params.omega_m)
    refl = 1.0 - k * chi_c
    drive_coef = -2j * g * math.sqrt(k) * chi_c
    out_coef = math.sqrt(k) * g * chi_c
    # sources: x_re, x_im, y_re, y_im, b_re, b_im, v_re, v_im
    N = np.zeros((8, 8))
    N[np.ix_([0, 2], [0, 2])] = cov.matrix / 2.0
    N[np.ix_([1, 3], [1, 3])] = cov.matrix / 2.0
    N[4, 4] = N[5, 5] = (params.n_th + 0.5) / 2.0
    N[6, 6] = N[7, 7] = 0.125
    A = -G / 2.0 * np.eye(2)
    B = np.zeros((2, 8))
    B[:, 0:2] = _cmul(drive_coef)
    B[:, 4:6] = math.sqrt(G) * np.eye(2)
    Hz = np.zeros((6, 2))
    Hw = np.zeros((6, 8))
    Hw[0:2, 0:2] = _cmul(refl)
    Hw[2:4, 2:4] = _cmul(refl)
    Hz[2:4, :] = _cmul(out_coef)
    Hw[4:6, 6:8] = np.eye(2)
    return _Model(A, B, N, Hz, Hw, True, (0, 1))


def _full_model(drive: DriveState, params: SystemParams) -> _Model:
    cov = drive_covariance(drive, params)
    g = float(coupling_rate(params, drive.C))
    k, G, Om = params.kappa, params.gamma, params.omega_m
    A = np.array([
        [-k / 2, 0.0, 0.0, 0.0],
        [0.0, -k / 2, -g, 0.0],
        [0.0, 0.0, -G / 2, Om],
        [-4.0 * g, 0.0, -Om, -G / 2],
    ])
    # sources: X_in, Y_in, q_in, p_in, vacuum
    B = np.zeros((4, 5))
    B[0, 0] = B[1, 1] = math.sqrt(k)
    B[2, 2] = B[3, 3] = math.sqrt(G)
    N = np.zeros((5, 5))
    N[:2, :2] = cov.matrix
    N[2, 2] = N[3, 3] = 2.0 * params.n_th + 1.0
    N[4, 4] = 0.25
    Hz = np.zeros((3, 4))
    Hw = np.zeros((3, 5))
    Hz[0, 0] = Hz[1, 1] = -math.sqrt(k)
    Hw[0, 0] = Hw[1, 1] = 1.0
    Hw[2, 4] = 1.0
    return _Model(A, B, N, Hz, Hw, False, (2, 3))


def _build(drive, params, model):
    if model == "envelope":
        return _envelope_model(drive, params)
    if model == "full":
        return _full_model(drive, params)
    raise DomainError(f"unknown model {model!r}")


def _discretize(m: _Model, dt: float):
    """Exact one-step propagator for (z, int z dt, W) via Van Loan."""
    n, s = m.A.shape[0], m.B.shape[1]
    d = 2 * n + s
    Abar = np.zeros((d, d))
    Abar[:n, :n] = m.A
    Abar[n:2 * n, :n] = np.eye(n)
    Bbar = np.zeros((d, s))
    Bbar[:n] = m.B
    Bbar[2 * n:] = np.eye(s)
    Gmat = Bbar @ m.N @ Bbar.T
    M = np.zeros((2 * d, 2 * d))
    M[:d, :d] = -Abar
    M[:d, d:] = Gmat
    M[d:, d:] = Abar.T
    E = linalg.expm(M * dt)
    Fbar = E[d:, d:].T
    Q = Fbar @ E[:d, d:]
    Q = 0.5 * (Q + Q.T)
    w, U = np.linalg.eigh(Q)
    factor = U * np.sqrt(np.clip(w, 0.0, None))
    Phi = Fbar[:n, :n]
    Psi = Fbar[n:2 * n, :n]
    return Phi, Psi, factor


def stationary_covariance(m: _Model) -> np.ndarray:
    return linalg.solve_continuous_lyapunov(m.A, -m.B @ m.N @ m.B.T)


def _occupancy_from_state_cov(P: np.ndarray, model: str) -> float:
    # envelope: <|beta|^2> = n + 1/2; full: <q^2> + <p^2> = 4 n + 2
    if model == "envelope":
        return float(P[0, 0] + P[1, 1]) - 0.5
    return float(P[2, 2] + P[3, 3]) / 4.0 - 0.5


def stationary_occupancy(drive: DriveState, params: SystemParams, model: str = "envelope") -> float:
    m = _build(drive, params, model)
    return _occupancy_from_state_cov(stationary_covariance(m), model)


@dataclass(frozen=True, eq=False)
class TrajectoryBatch:
    """Simulated trajectories after burn-in.

    ``x_out``, ``y_out`` and ``vacuum`` have shape ``(n_traj, n_samples)``
    and hold step-averaged output quadratures (complex envelopes around
    +Omega_m for the envelope model, real rotating-frame quadratures for
    the full model). ``mech`` holds the mechanical state at each step.
    """

    x_out: np.ndarray
    y_out: np.ndarray
    vacuum: np.ndarray
    mech: np.ndarray
    dt: float
    model: str
    eta_det: float
    omega_m: float
    config_digest: str
    seeds: tuple
    meta: dict = field(default_factory=dict)

    @property
    def n_trajectories(self) -> int:
        return self.x_out.shape[0]

    def mechanical_occupancy(self) -> np.ndarray:
        """Time-averaged phonon occupancy per trajectory."""
        if self.model == "envelope":
            power = np.mean(np.abs(self.mech) ** 2, axis=-1)
            return power - 0.5
        q, p = self.mech[..., 0, :], self.mech[..., 1, :]
        return (np.mean(q * q, axis=-1) + np.mean(p * p, axis=-1)) / 4.0 - 0.5


def _run_one(m: _Model, Phi, Psi, factor, n_total, n_burn, rng, chunk=1 << 20):
    n = Phi.shape[0]
    # Schur form: the full-model drift is defective (degenerate cavity
    # eigenvalues linked through the mechanics), so diagonalizing is unstable
    T, Z = linalg.schur(Phi.astype(complex), output="complex")
    z = np.zeros(n, dtype=complex)
    outs, mechs = [], []
    done = 0
    while done < n_total:
        steps = min(chunk, n_total - done)
        g = rng.standard_normal((steps, factor.shape[1]))
        noise = g @ factor.T
        nz = noise[:, :n]
        drive = nz @ Z.conj()
        u0 = Z.conj().T @ z
        u = np.empty((steps + 1, n), dtype=complex)
        u[0] = u0
        for j in range(n - 1, -1, -1):
            # u_j[k+1] = T_jj u_j[k] + sum_{i>j} T_ji u_i[k] + drive_j[k]
            x = drive[:, j] + u[:-1, j + 1:] @ T[j, j + 1:]
            y, _ = signal.lfilter([1.0], [1.0, -T[j, j]], x, zi=[T[j, j] * u0[j]])
            u[1:, j] = y
        states = (u @ Z.T).real
        start = states[:-1]
        z = states[-1].astype(complex)
        zint = start @ Psi.T + noise[:, n:2 * n]
        w = noise[:, 2 * n:]
        out = (zint @ m.Hz.T + w @ m.Hw.T)
        if not np.all(np.isfinite(out)) or not np.all(np.isfinite(states)):
            raise IntegrationError("non-finite state encountered; reduce dt")
        skip = max(0, n_burn - done)
        if skip < steps:
            outs.append(out[skip:])
            mechs.append(start[skip:][:, list(m.mech_index)])
        done += steps
    return np.concatenate(outs), np.concatenate(mechs)


def trajectory_seeds(config: SimConfig):
    return np.random.SeedSequence(config.seed).spawn(config.n_trajectories)


def integrate(drive: DriveState, params: SystemParams, config: SimConfig, *,
              trajectories=None) -> TrajectoryBatch:
    """Integrate the linear SDEs for ``config.n_trajectories`` independent runs.

    ``trajectories`` optionally selects a subset of trajectory indices (the
    seeds are derived from ``config.seed`` so any subset is reproducible).
    """
    config.validate(params)
    m = _build(drive, params, config.model)
    Phi, Psi, factor = _discretize(m, config.dt)
    if np.max(np.abs(np.linalg.eigvals(Phi))) >= 1.0:
        raise IntegrationError(f"propagator is not contracting at dt={config.dt!r}")
    seeds = trajectory_seeds(config)
    idx = range(config.n_trajectories) if trajectories is None else list(trajectories)
    n_burn = config.burn_in_steps(params)
    n_total = config.n_steps + n_burn
    xs, ys, vs, ms = [], [], [], []
    used = []
    for i in idx:
        rng = np.random.default_rng(seeds[i])
        out, mech = _run_one(m, Phi, Psi, factor, n_total, n_burn, rng)
        out = out / config.dt
        if m.complex_output:
            xs.append((out[:, 0] + 1j * out[:, 1]).astype(np.complex64))
            ys.append((out[:, 2] + 1j * out[:, 3]).astype(np.complex64))
            vs.append((out[:, 4] + 1j * out[:, 5]).astype(np.complex64))
            ms.append((mech[:, 0] + 1j * mech[:, 1]).astype(np.complex64))
        else:
            xs.append(out[:, 0].astype(np.float32))
            ys.append(out[:, 1].astype(np.float32))
            vs.append(out[:, 2].astype(np.float32))
            ms.append(mech.T.astype(np.float32))
        used.append(int(seeds[i].spawn_key[-1]))
    return TrajectoryBatch(
        x_out=np.stack(xs), y_out=np.stack(ys), vacuum=np.stack(vs), mech=np.stack(ms),
        dt=config.dt, model=config.model, eta_det=params.eta_det, omega_m=params.omega_m,
        config_digest=config.digest(), seeds=tuple(used),
        meta={"C": drive.C, "r": drive.r, "theta": drive.theta, "seed": config.seed},
    )


# ----------------------------------------------------------------------------
# spectral estimation


@dataclass
class PsdAccumulator:
    """Running sums of Hann-windowed, 50%-overlap segment periodograms.

    Combining accumulators is associative, so trajectories can be processed
    in any grouping.
    """

    freq: np.ndarray
    total: np.ndarray
    total_sq: np.ndarray
    count: int
    overlap_factor: float
    meta: dict = field(default_factory=dict)

    def merge(self, other: "PsdAccumulator") -> "PsdAccumulator":
        if not np.array_equal(self.freq, other.freq):
            raise DomainError("cannot merge spectra on different grids")
        return replace(self, total=self.total + other.total, total_sq=self.total_sq + other.total_sq,
                       count=self.count + other.count)

    def spectrum(self, detect_angle: float, kind: str = "homodyne") -> Spectrum:
        if self.count < 2:
            raise DomainError("need at least two segments for a PSD estimate")
        mean = self.total / self.count
        var = np.maximum(self.total_sq / self.count - mean * mean, 0.0)
        err = np.sqrt(var * self.overlap_factor / self.count)
        few = self.count < 8
        if few:
            warnings.warn(f"PSD error bars from only {self.count} segments are unreliable",
                          RuntimeWarning, stacklevel=2)
        return Spectrum(freq=self.freq, psd=4.0 * mean, quadrature_angle=detect_angle, kind=kind,
                        error=4.0 * err, meta={**self.meta, "segments": self.count,
                                               "few_segments": few})


def _overlap_factor(window: np.ndarray, step: int) -> float:
    """Variance inflation of averaged overlapping segments (white-noise estimate)."""
    w2 = window * window
    rho = 0.0
    shift = step
    while shift < window.size:
        c = np.sum(w2[:-shift] * w2[shift:]) / np.sum(w2 * w2)
        rho += c
        shift += step
    return 1.0 + 2.0 * rho


def _detected(batch: TrajectoryBatch, detect_angle: float, eta_det: float):
    c, s = math.cos(detect_angle), math.sin(detect_angle)
    amp = math.sqrt(eta_det)
    return amp * (c * batch.x_out + s * batch.y_out) + math.sqrt(1.0 - eta_det) * batch.vacuum


def accumulate_psd(batch: TrajectoryBatch, detect_angle: float = math.pi / 2, *,
                   segment_length: int = 8192, band_hz: float | None = None,
                   eta_det: float | None = None, chunk: int = 128) -> PsdAccumulator:
    eta = batch.eta_det if eta_det is None else eta_det
    data = _detected(batch, detect_angle, eta)
    nper = int(segment_length)
    step = nper // 2
    if data.shape[1] < nper:
        raise DomainError("trajectory shorter than one PSD segment")
    window = signal.windows.hann(nper, sym=False)
    scale = batch.dt / np.sum(window * window)
    freq = np.fft.fftshift(np.fft.fftfreq(nper, batch.dt))
    if batch.model == "full":
        offset = freq - batch.omega_m / TWO_PI
    else:
        # envelope convention beta e^{-i Omega t}: positive FFT frequency is a negative offset
        offset = -freq
    keep = np.ones(nper, dtype=bool) if band_hz is None else np.abs(offset) <= band_hz
    if batch.model == "full" and band_hz is None:
        keep = offset > -batch.omega_m / TWO_PI / 2.0
    total = np.zeros(np.count_nonzero(keep))
    total_sq = np.zeros_like(total)
    count = 0
    for row in data:
        segs = np.lib.stride_tricks.sliding_window_view(row, nper)[::step]
        for j in range(0, segs.shape[0], chunk):
            block = segs[j:j + chunk].astype(np.complex128) * window
            per = np.abs(np.fft.fftshift(np.fft.fft(block, axis=-1), axes=-1)) ** 2 * scale
            per = per[:, keep]
            total += per.sum(axis=0)
            total_sq += (per * per).sum(axis=0)
            count += per.shape[0]
    order = np.argsort(offset[keep])
    return PsdAccumulator(freq=offset[keep][order], total=total[order], total_sq=total_sq[order],
                          count=count,
                          overlap_factor=_overlap_factor(window, step),
                          meta={"model": batch.model, "eta_det": eta, "dt": batch.dt,
                                **batch.meta})


def estimate_psd(batch: TrajectoryBatch, detect_angle: float = math.pi / 2, *,
                 segment_length: int = 8192, band_hz: float | None = None,
                 eta_det: float | None = None) -> Spectrum:
    """Welch estimate of the detected-quadrature PSD, in shot-noise units.

    Frequencies are offsets from Omega_m. Error bars are the standard error
    of the segment average; fewer than 8 segments triggers a warning and
    sets ``meta["few_segments"]``.
    """
    acc = accumulate_psd(batch, detect_angle, segment_length=segment_length, band_hz=band_hz,
                         eta_det=eta_det)
    return acc.spectrum(detect_angle)


# ----------------------------------------------------------------------------
# validation against the full model and the analytic spectra


@dataclass(frozen=True)
class ValidityReport:
    envelope_occupancy: float
    full_occupancy: float
    relative_difference: float
    short_run_cavity_z: float
    valid: bool


def check_envelope_validity(drive: DriveState, params: SystemParams, *, tol: float = 0.01,
                            short_run_steps: int = 200_000, seed: int = 0) -> ValidityReport:
    """Compare the envelope fast path with the full model.

    The stationary mechanical occupancies of both models (continuous
    Lyapunov solutions) must agree within ``tol``. A short full-model run
    starting from rest then checks that the intracavity amplitude variance
    settles at the drive's amplitude variance (``|z| < 5``).
    """
    env = stationary_occupancy(drive, params, "envelope")
    full = stationary_occupancy(drive, params, "full")
    rel = abs(env / full - 1.0)

    m = _full_model(drive, params)
    dt = min(0.05 / (params.kappa / 2.0), 0.1 / params.omega_m)
    Phi, Psi, factor = _discretize(m, dt)
    rng = np.random.default_rng(seed)
    burn = int(20.0 / (params.kappa * dt))
    g = rng.standard_normal((short_run_steps + burn, factor.shape[1]))
    nx = (g @ factor.T)[:, 0]
    lam = Phi[0, 0]
    x, _ = signal.lfilter([1.0], [1.0, -lam], nx, zi=[0.0])
    x = x[burn:]
    target = drive_covariance(drive, params).v_xx
    var = float(np.mean(x * x))
    tau = 2.0 / params.kappa
    n_eff = max(short_run_steps * dt / (2.0 * tau), 1.0)
    se = target * math.sqrt(2.0 / n_eff)
    z = (var - target) / se
    return ValidityReport(env, full, rel, z, bool(rel < tol and abs(z) < 5.0))


def canonical_cases(C: float = 70.0) -> dict:
    cases = {}
    for r in (0.0, 1.0):
        for deg in (0, 90, 180):
            cases[f"r{r:g}_theta{deg}"] = DriveState(r=r, theta=math.radians(deg), C=C)
    return cases


@dataclass(frozen=True)
class CaseResult:
    name: str
    rms_psd_deviation: float
    occupancy_mc: float
    occupancy_budget: float
    occupancy_deviation: float
    asymmetry_mc: float
    asymmetry_analytic: float
    segments: int
    envelope_valid: bool
    passed: bool

    def as_dict(self):
        return asdict(self)


def run_case(name: str, drive: DriveState, params: SystemParams, config: SimConfig, *,
             band_linewidths: float = 10.0, rms_tol: float = 0.03, occ_tol: float = 0.05
             ) -> CaseResult:
    """Monte Carlo PSD vs the analytic spectrum for one drive state."""
    from .noise_budget import backaction
    from .spectra import asymmetry_metric

    gamma_hz = params.gamma / TWO_PI
    band = band_linewidths * gamma_hz
    acc = None
    for i in range(config.n_trajectories):
        batch = integrate(drive, params, config, trajectories=[i])
        part = accumulate_psd(batch, segment_length=config.segment_length, band_hz=band)
        acc = part if acc is None else acc.merge(part)
        del batch
    spec = acc.spectrum(math.pi / 2)
    analytic = output_psd(drive, params, spec.freq)
    rms = float(np.sqrt(np.mean((spec.psd / analytic.psd - 1.0) ** 2)))
    fit = fit_lineshape(spec)
    occ_mc = occupancy_from_area(fit, drive, params)
    occ_budget = params.n_th + backaction(drive, params)
    occ_dev = abs(occ_mc / occ_budget - 1.0)
    validity = check_envelope_validity(drive, params) if config.model == "envelope" else None
    env_ok = True if validity is None else validity.valid
    mc_spec = Spectrum(freq=spec.freq, psd=spec.psd, floor=analytic.floor)
    return CaseResult(
        name=name, rms_psd_deviation=rms, occupancy_mc=occ_mc, occupancy_budget=occ_budget,
        occupancy_deviation=occ_dev, asymmetry_mc=asymmetry_metric(mc_spec),
        asymmetry_analytic=asymmetry_metric(analytic), segments=acc.count,
        envelope_valid=env_ok, passed=bool(rms < rms_tol and occ_dev < occ_tol and env_ok),
    )


def mc_verify(params: SystemParams, cases=None, *, seed: int = 0, segments: int = 10_000,
              n_trajectories: int = 16, C: float = 70.0) -> dict:
    """Oracle report over the canonical drive states (or a named subset)."""
    all_cases = canonical_cases(C)
    if cases is None or cases == "all":
        names = list(all_cases)
    else:
        names = [cases] if isinstance(cases, str) else list(cases)
        unknown = [n for n in names if n not in all_cases]
        if unknown:
            raise DomainError(f"unknown case(s): {', '.join(unknown)}")
    config = default_config(params, segments=segments, n_trajectories=n_trajectories, seed=seed)
    results = [run_case(n, all_cases[n], params, config) for n in names]
    return {
        "seed": seed,
        "config": asdict(config),
        "config_digest": config.digest(),
        "cases": [r.as_dict() for r in results],
        "passed": all(r.passed for r in results),
    }
