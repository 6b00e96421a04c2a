"""Physical parameters, squeezed-thermal drive model and cooperativity algebra.

Conventions used throughout the package:

* Rates and frequencies are angular (rad/s) internally. Anything that
  crosses the I/O boundary (config files, CLI flags, CSV columns) is in Hz
  and converted with an explicit factor of 2*pi.
* Quadratures are normalized so that vacuum has variance 1/4 (the shot noise
  limit, SNL). Decibel figures are ``10*log10(variance / SNL)``.
* The squeezing phase ``theta`` is measured relative to the coherent drive
  phase. ``theta = 0`` squeezes the amplitude quadrature X_a and
  ``theta = pi`` squeezes the phase quadrature Y_a. The squeezed axis sits at
  quadrature angle ``theta / 2``, so the variance of the quadrature at angle
  ``psi`` is ``cosh 2r - cos(2 psi - theta) sinh 2r`` (times the thermal and
  loss factors) in SNL units.
* The squeezing is taken to be white over the few-MHz band around the
  mechanical sidebands.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ConfigError, DomainError, InvariantViolation

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TWO_PI = 2.0 * math.pi
SNL = 0.25
HEISENBERG_BOUND = 1.0 / 16.0

# config key -> (field name, factor applied on load)
_CONFIG_KEYS = {
    "omega_c_hz": ("cavity_freq", TWO_PI),
    "omega_m_hz": ("mech_freq", TWO_PI),
    "kappa_hz": ("cavity_linewidth", TWO_PI),
    "gamma_m_hz": ("intrinsic_mech_linewidth", TWO_PI),
    "gamma_hz": ("total_mech_linewidth", TWO_PI),
    "g0_hz": ("vacuum_coupling", TWO_PI),
    "n_th": ("n_th", 1.0),
    "n_c": ("n_c", 1.0),
    "eta_in": ("eta_in", 1.0),
    "eta_det": ("eta_det", 1.0),
    "n_bath": ("n_bath", 1.0),
    "base_temperature_k": ("base_temperature", 1.0),
    "noise_temperature_k": ("noise_temperature", 1.0),
}


@dataclass(frozen=True)
class SystemParams:
    """Fixed parameters of the optomechanical circuit and detection chain.

    The defaults are the experimental values of the squeezed-drive run.
    Angular units (rad/s) for every rate and frequency.
    """

    cavity_freq: float = TWO_PI * 6.89e9
    mech_freq: float = TWO_PI * 8.68e6
    cavity_linewidth: float = TWO_PI * 22.2e6
    intrinsic_mech_linewidth: float = TWO_PI * 22.0
    total_mech_linewidth: float = TWO_PI * 200.0
    vacuum_coupling: float = TWO_PI * 170.0
    n_th: float = 10.0
    n_c: float = 0.17
    eta_in: float = 0.47
    eta_det: float = 0.03
    n_bath: float = 95.0
    base_temperature: float = 0.040
    noise_temperature: float = 5.5

    def __post_init__(self):
        rates = ("cavity_freq", "mech_freq", "cavity_linewidth",
                 "intrinsic_mech_linewidth", "total_mech_linewidth",
                 "vacuum_coupling")
        for name in rates:
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")
        if self.total_mech_linewidth < self.intrinsic_mech_linewidth:
            raise DomainError("total mechanical linewidth must be >= intrinsic linewidth")
        for name in ("eta_in", "eta_det"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
        for name in ("n_th", "n_c", "n_bath"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be >= 0, got {value!r}")

    # short aliases used in formulas
    @property
    def kappa(self) -> float:
        return self.cavity_linewidth

    @property
    def omega_m(self) -> float:
        return self.mech_freq

    @property
    def gamma(self) -> float:
        return self.total_mech_linewidth

    @property
    def gamma_m(self) -> float:
        return self.intrinsic_mech_linewidth

    @property
    def g0(self) -> float:
        return self.vacuum_coupling

    @property
    def sideband_weight(self) -> float:
        """Cavity filtering factor ``1 + 4 (Omega_m / kappa)^2``."""
        return 1.0 + 4.0 * (self.mech_freq / self.cavity_linewidth) ** 2

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def to_config(self) -> dict:
        """Inverse of :func:`params_from_mapping` (values in Hz)."""
        return {key: getattr(self, name) / factor
                for key, (name, factor) in _CONFIG_KEYS.items()}


def params_from_mapping(mapping: Mapping[str, float], base: SystemParams | None = None) -> SystemParams:
    """Build parameters from config keys, overriding ``base`` (bundled defaults).

    Unknown keys raise :class:`ConfigError` naming the key.
    """
    base = SystemParams() if base is None else base
    changes = {}
    for key, value in mapping.items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown parameter key {key!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"parameter {key!r} must be numeric, got {value!r}")
        name, factor = _CONFIG_KEYS[key]
        changes[name] = float(value) * factor
    return base.replace(**changes)


def bundled_params_path():
    return resources.files("sqzom").joinpath("data/table_s1.toml")


def load_params(path: str | Path | None = None) -> SystemParams:
    """Load a TOML parameter file. ``None`` loads the bundled defaults."""
    if path is None:
        text = bundled_params_path().read_text(encoding="utf-8")
        data = tomllib.loads(text)
        return params_from_mapping(data, base=SystemParams())
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read parameter file {path}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed parameter file {path}: {exc}") from exc
    return params_from_mapping(data)


@dataclass(frozen=True)
class DriveState:
    """Displaced squeezed thermal drive.

    Attributes:
        r: squeezing parameter (>= 0).
        theta: squeezing phase relative to the drive, reduced to [0, 2 pi).
        C: measurement cooperativity ``4 g^2 / (kappa Gamma)``.
        phi: coherent drive phase. Only ``theta`` relative to the drive
            enters the physics; ``phi`` is bookkeeping.
    """

    r: float = 0.0
    theta: float = 0.0
    C: float = 1.0
    phi: float = 0.0

    def __post_init__(self):
        if not (self.r >= 0 and math.isfinite(self.r)):
            raise DomainError(f"squeezing parameter must be >= 0, got {self.r!r}")
        if not (self.C > 0 and math.isfinite(self.C)):
            raise DomainError(f"cooperativity must be > 0, got {self.C!r}")
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)

    def replace(self, **changes) -> "DriveState":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_photons(cls, params: SystemParams, n_photons: float, **kwargs) -> "DriveState":
        return cls(C=cooperativity_from_photons(params, n_photons), **kwargs)


@dataclass(frozen=True)
class QuadCovariance:
    """Symmetrized 2x2 covariance of the drive quadratures (vacuum = 1/4)."""

    v_xx: float
    v_yy: float
    v_xy: float = 0.0

    def __post_init__(self):
        if not (self.v_xx > 0 and self.v_yy > 0):
            raise InvariantViolation(f"quadrature variances must be positive: {self}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.v_xx, self.v_xy], [self.v_xy, self.v_yy]])

    @property
    def det(self) -> float:
        return self.v_xx * self.v_yy - self.v_xy ** 2

    def variance(self, angle):
        """Variance of ``X cos(angle) + Y sin(angle)``."""
        c, s = np.cos(angle), np.sin(angle)
        return c * c * self.v_xx + s * s * self.v_yy + 2.0 * c * s * self.v_xy

    def relative_db(self, angle=0.0):
        return 10.0 * np.log10(self.variance(angle) / SNL)


def cooperativity_from_photons(params: SystemParams, n_photons: float) -> float:
    """``C = 4 g0^2 |alpha|^2 / (kappa Gamma)``."""
    if not n_photons > 0:
        raise DomainError(f"photon number must be > 0, got {n_photons!r}")
    return 4.0 * params.g0 ** 2 * n_photons / (params.kappa * params.gamma)


def photons_from_cooperativity(params: SystemParams, C: float) -> float:
    if not C > 0:
        raise DomainError(f"cooperativity must be > 0, got {C!r}")
    return C * params.kappa * params.gamma / (4.0 * params.g0 ** 2)


def coupling_rate(params: SystemParams, C):
    """Parametrically enhanced coupling ``g = g0 |alpha|`` for cooperativity C."""
    return np.sqrt(np.asarray(C, dtype=float) * params.kappa * params.gamma / 4.0)


def weighted_cooperativity(C, params: SystemParams):
    """``C~ = 4 C / (1 + 4 (Omega_m / kappa)^2)``."""
    C = np.asarray(C, dtype=float)
    if np.any(~(C > 0)):
        raise DomainError("cooperativity must be > 0")
    out = 4.0 * C / params.sideband_weight
    return float(out) if out.ndim == 0 else out


def scatter_rate(C, params: SystemParams):
    """Rate of pump photons scattered into the mechanical sidebands.

    ``4 g^2 kappa / (kappa^2 + 4 Omega_m^2)``, equal to ``C Gamma / (1 + 4 (Omega_m/kappa)^2)``.
    """
    C = np.asarray(C, dtype=float)
    if np.any(~(C > 0)):
        raise DomainError("cooperativity must be > 0")
    g2 = C * params.kappa * params.gamma / 4.0
    out = 4.0 * g2 * params.kappa / (params.kappa ** 2 + 4.0 * params.omega_m ** 2)
    return float(out) if out.ndim == 0 else out


def squeezed_thermal_variances(r, theta, n_c, eta_in, angle=0.0):
    """Quadrature variance (SNL = 1/4 units) of a lossy squeezed thermal state.

    Vectorized over all arguments. ``angle`` is the quadrature angle; the
    amplitude quadrature is ``angle = 0``.
    """
    r = np.asarray(r, dtype=float)
    rel = (1.0 + 2.0 * n_c) * (1.0 - eta_in + eta_in * (
        np.cosh(2.0 * r) - np.cos(2.0 * np.asarray(angle) - theta) * np.sinh(2.0 * r)))
    return SNL * rel


def drive_covariance(drive: DriveState, params: SystemParams) -> QuadCovariance:
    """Covariance of the drive quadratures arriving at the cavity.

    A squeezed thermal state (thermal factor ``1 + 2 n_c``) mixed on a
    beamsplitter of transmittance ``eta_in`` with a bath at the same
    temperature.
    """
    return _covariance(drive.r, drive.theta, params.n_c, params.eta_in)


def _covariance(r, theta, n_c, eta_in) -> QuadCovariance:
    scale = SNL * (1.0 + 2.0 * n_c)
    ch, sh = math.cosh(2.0 * r), math.sinh(2.0 * r)
    v_xx = scale * (1.0 - eta_in + eta_in * (ch - math.cos(theta) * sh))
    v_yy = scale * (1.0 - eta_in + eta_in * (ch + math.cos(theta) * sh))
    v_xy = -scale * eta_in * math.sin(theta) * sh
    return QuadCovariance(v_xx, v_yy, v_xy)


def heisenberg_product(cov: QuadCovariance, tol: float = 1e-12) -> float:
    """Determinant of the covariance; must respect ``det >= 1/16``."""
    det = cov.det
    if not (cov.v_xx > 0 and cov.v_yy > 0 and det > 0):
        raise InvariantViolation(f"covariance is not positive definite: {cov}")
    if det < HEISENBERG_BOUND - tol:
        raise InvariantViolation(f"covariance violates the uncertainty bound: det={det!r}")
    return det


def to_db(ratio):
    return 10.0 * np.log10(ratio)


def hz(value):
    """Angular rate -> Hz."""
    return value / TWO_PI


def rad_per_s(value_hz):
    return value_hz * TWO_PI
