"""Imprecision/backaction noise budget in phonon units and sideband cooling."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

from .core_model import (
    DriveState,
    SystemParams,
    drive_covariance,
    weighted_cooperativity,
)
from .errors import DomainError, InstabilityError

BUDGET_COLUMNS = ("C", "n_imp", "n_ba", "n_add", "n_total", "heisenberg_product")


@dataclass(frozen=True)
class NoiseBudget:
    """Measurement noise at one operating point, in equivalent phonons."""

    C: float
    n_imp: float
    n_ba: float
    n_add: float
    n_total: float
    heisenberg_product: float

    def as_dict(self):
        return asdict(self)

    @property
    def occupancy(self) -> float:
        """Equilibrium phonon occupancy ``n_th + n_ba`` (requires n_th; set by budget)."""
        return self.n_total - self.n_imp - 0.5


@dataclass(frozen=True)
class CoolingDrive:
    """Scattering rates (rad/s) of an auxiliary sideband-cooling tone.

    ``anti_stokes_rate`` removes phonons (cooling), ``stokes_rate`` adds them.
    """

    anti_stokes_rate: float = 0.0
    stokes_rate: float = 0.0

    def __post_init__(self):
        if self.anti_stokes_rate < 0 or self.stokes_rate < 0:
            raise DomainError("scattering rates must be >= 0")

    @property
    def net_damping(self) -> float:
        return self.anti_stokes_rate - self.stokes_rate


def _imprecision(v_yy, C_tilde, eta_det):
    return (1.0 - eta_det + 4.0 * eta_det * v_yy) / (4.0 * eta_det * C_tilde)


def imprecision(drive: DriveState, params: SystemParams) -> float:
    """Imprecision floor ``(1 - eta + 4 eta <dY^2>) / (4 eta C~)``."""
    if not params.eta_det > 0:
        raise DomainError("no detection: eta_det must be > 0")
    cov = drive_covariance(drive, params)
    return _imprecision(cov.v_yy, weighted_cooperativity(drive.C, params), params.eta_det)


def backaction(drive: DriveState, params: SystemParams) -> float:
    """Backaction occupancy ``C~ <dX_a^2>``."""
    cov = drive_covariance(drive, params)
    return weighted_cooperativity(drive.C, params) * cov.v_xx


def budget(drive: DriveState, params: SystemParams) -> NoiseBudget:
    n_imp = imprecision(drive, params)
    n_ba = backaction(drive, params)
    return NoiseBudget(
        C=drive.C,
        n_imp=n_imp,
        n_ba=n_ba,
        n_add=n_imp + n_ba,
        n_total=n_imp + n_ba + params.n_th + 0.5,
        heisenberg_product=n_imp * n_ba,
    )


def standard_drives(r: float = 1.0) -> dict:
    """The three drive states of the imprecision/backaction comparison."""
    return {
        "unsqueezed": dict(r=0.0, theta=0.0),
        "amplitude": dict(r=r, theta=0.0),
        "phase": dict(r=r, theta=math.pi),
    }


def sweep_cooperativity(drive_family: Mapping[str, Mapping] | None,
                        params: SystemParams,
                        C_grid: Sequence[float]) -> dict:
    """Budgets over a cooperativity grid for each named drive.

    ``drive_family`` maps a label to ``DriveState`` keyword arguments (or a
    ``DriveState`` whose C is ignored). ``None`` uses :func:`standard_drives`.
    Returns ``{label: [NoiseBudget, ...]}`` in grid order.
    """
    C_grid = np.asarray(C_grid, dtype=float)
    if C_grid.size == 0:
        raise DomainError("empty cooperativity grid")
    if np.any(~(C_grid > 0)):
        raise DomainError("cooperativity grid must be strictly positive")
    if np.any(np.diff(C_grid) <= 0):
        raise DomainError("cooperativity grid must be sorted and strictly increasing")
    family = standard_drives() if drive_family is None else drive_family
    out = {}
    for label, spec in family.items():
        if isinstance(spec, DriveState):
            spec = dict(r=spec.r, theta=spec.theta, phi=spec.phi)
        spec = {k: v for k, v in dict(spec).items() if k != "C"}
        out[label] = [budget(DriveState(C=float(C), **spec), params) for C in C_grid]
    return out


def sweep_table(sweep: Mapping[str, list]) -> dict:
    """Column arrays for the cooperativity sweep figures.

    Keys: ``C``, then for every drive label ``n_total_<label>``,
    ``n_imp_times_C_<label>`` and ``occupancy_<label>``.
    """
    labels = list(sweep)
    cols = {"C": np.array([b.C for b in sweep[labels[0]]])}
    for label in labels:
        rows = sweep[label]
        cols[f"n_total_{label}"] = np.array([b.n_total for b in rows])
        cols[f"n_imp_times_C_{label}"] = np.array([b.n_imp * b.C for b in rows])
        cols[f"occupancy_{label}"] = np.array([b.occupancy for b in rows])
    return cols


def cooled_occupancy(params: SystemParams, cool: CoolingDrive,
                     n_bath: float | None = None, gamma_m: float | None = None) -> float:
    """Equilibrium occupancy with a sideband-cooling tone and a thermal cavity.

    ``(Gm n_bath + G- (1 + n_c) + G+ n_c) / (Gm - G- + G+)`` with ``G+`` the
    anti-Stokes (cooling) and ``G-`` the Stokes (heating) rate.
    ``n_bath`` and ``gamma_m`` default to the intrinsic values in ``params``.
    """
    n_bath = params.n_bath if n_bath is None else n_bath
    gamma_m = params.gamma_m if gamma_m is None else gamma_m
    g_plus, g_minus = cool.anti_stokes_rate, cool.stokes_rate
    denom = gamma_m - g_minus + g_plus
    if not denom > 0:
        raise InstabilityError(
            f"total mechanical damping {denom!r} rad/s is not positive (parametric instability)")
    num = gamma_m * n_bath + g_minus * (1.0 + params.n_c) + g_plus * params.n_c
    return num / denom


def sideband_rates(params: SystemParams, C_cool: float, detuning: float) -> CoolingDrive:
    """Anti-Stokes/Stokes rates of a tone at ``detuning`` (rad/s) from the cavity.

    ``C_cool`` is the tone's cooperativity ``4 g^2 / (kappa Gamma)``; rates
    follow the usual Lorentzian sideband weights
    ``g^2 kappa / ((detuning -+ Omega_m)^2 + kappa^2 / 4)``.
    """
    g2 = C_cool * params.kappa * params.gamma / 4.0
    half = params.kappa ** 2 / 4.0
    anti = g2 * params.kappa / ((detuning + params.omega_m) ** 2 + half)
    stokes = g2 * params.kappa / ((detuning - params.omega_m) ** 2 + half)
    return CoolingDrive(anti_stokes_rate=anti, stokes_rate=stokes)


def rates_for_linewidth(params: SystemParams, detuning: float,
                        total_linewidth: float | None = None) -> CoolingDrive:
    """Tone rates at ``detuning`` that bring the mechanical linewidth to ``total_linewidth``."""
    target = params.gamma if total_linewidth is None else total_linewidth
    unit = sideband_rates(params, 1.0, detuning)
    net = unit.net_damping
    if not net > 0:
        raise DomainError("tone at this detuning does not cool")
    scale = (target - params.gamma_m) / net
    if scale < 0:
        raise DomainError("target linewidth is below the intrinsic linewidth")
    return CoolingDrive(unit.anti_stokes_rate * scale, unit.stokes_rate * scale)


@dataclass(frozen=True)
class ToneCondition:
    ratio: float
    threshold: float
    passed: bool


def cooling_tone_condition(drive: DriveState, params: SystemParams, cool: CoolingDrive,
                           threshold: float = 0.2) -> ToneCondition:
    """Check ``sinh^2 r * G+ << n_th * Gamma_m``.

    When it holds the cooling tone can be treated as an ideal sideband
    cooler that simply sets Gamma and n_th. The ratio is always returned;
    ``threshold`` quantifies "much less than".
    """
    scale = params.n_th * params.gamma_m
    excess = math.sinh(drive.r) ** 2 * cool.anti_stokes_rate
    if scale > 0:
        ratio = excess / scale
    else:
        ratio = 0.0 if excess == 0 else math.inf
    return ToneCondition(ratio=ratio, threshold=threshold, passed=ratio < threshold)
