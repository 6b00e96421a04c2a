"""Figure recipes: theory curves as column tables plus a small summary.

Every recipe is a pure function of ``(params, seed)`` returning a
:class:`FigureData`; CSV/JSON/SVG emitters live in :mod:`sqzom.cli`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core_model import TWO_PI, DriveState, SystemParams
from .noise_budget import (
    cooled_occupancy,
    sideband_rates,
    standard_drives,
    sweep_cooperativity,
    sweep_table,
)
from .spectra import (
    AMPLITUDE_QUADRATURE,
    Spectrum,
    asymmetry_metric,
    default_grid,
    fit_lineshape,
    occupancy_from_area,
    output_psd,
    qnd_deviation,
)
from .tomography import (
    DEFAULT_AVERAGES,
    eta_det_om_predicted,
    fit_squeezing,
    simulate_phase_sweep,
)

FIG2_C = 70.0
FIG2_R = 0.9
FIG2DE_C = 220.0
FIG3_R = 1.0
FIG4_C = 250.0
FIG4_R_VALUES = (0.3, 0.6, 0.9, 1.15)
S3_C_VALUES = (10.0, 50.0, 220.0)
ETA_IN_RANGE = (0.45, 0.49)


@dataclass
class FigureData:
    name: str
    columns: dict
    summary: dict = field(default_factory=dict)
    plot: dict = field(default_factory=dict)

    def header(self):
        return list(self.columns)

    def rows(self):
        return np.column_stack([np.asarray(v, dtype=float) for v in self.columns.values()])


def _drive_spectra(params, C, r, grid, labels=("unsqueezed", "amplitude", "phase")):
    drives = standard_drives(r)
    cols, fits = {}, {}
    for label in labels:
        drive = DriveState(C=C, **drives[label])
        spec = output_psd(drive, params, grid)
        cols[f"psd_{label}"] = spec.psd
        fits[label] = spec
    return cols, fits


def _fit_summary(spec: Spectrum, drive: DriveState, params: SystemParams) -> dict:
    fit = fit_lineshape(spec)
    return {
        "occupancy": occupancy_from_area(fit, drive, params),
        "lorentzian_area": fit.lorentzian_area,
        "fano_coefficient": fit.fano_coefficient,
        "floor": fit.floor,
        "analytic_floor": spec.floor,
    }


def fig2a(params: SystemParams, seed: int = 0) -> FigureData:
    """Broadband spectra for unsqueezed, amplitude- and phase-squeezed drives."""
    grid = default_grid(40e3, 4000)
    cols, _ = _drive_spectra(params, FIG2_C, FIG2_R, grid)
    return FigureData("fig2a", {"offset_hz": grid, **cols},
                      {"C": FIG2_C, "r": FIG2_R},
                      dict(x="offset_hz", logy=True, xlabel="offset from mechanical resonance (Hz)",
                           ylabel="PSD / shot noise"))


def fig2b(params: SystemParams, seed: int = 0) -> FigureData:
    """Close-up of the mechanical line; fitted areas track the occupancy."""
    grid = default_grid(5e3, 2000)
    cols, specs = _drive_spectra(params, FIG2_C, FIG2_R, grid)
    drives = standard_drives(FIG2_R)
    summary = {"C": FIG2_C, "r": FIG2_R, "fits": {
        k: _fit_summary(s, DriveState(C=FIG2_C, **drives[k]), params) for k, s in specs.items()}}
    return FigureData("fig2b", {"offset_hz": grid, **cols}, summary,
                      dict(x="offset_hz", xlabel="offset from mechanical resonance (Hz)",
                           ylabel="PSD / shot noise"))


def fig2c(params: SystemParams, seed: int = 0) -> FigureData:
    """Noise floor away from the mechanical line."""
    grid = np.linspace(5e3, 150e3, 1000)
    cols, specs = _drive_spectra(params, FIG2_C, FIG2_R, grid)
    summary = {"C": FIG2_C, "r": FIG2_R,
               "analytic_floor": {k: s.floor for k, s in specs.items()}}
    return FigureData("fig2c", {"offset_hz": grid, **cols}, summary,
                      dict(x="offset_hz", xlabel="offset from mechanical resonance (Hz)",
                           ylabel="PSD / shot noise"))


def fig2d(params: SystemParams, seed: int = 0) -> FigureData:
    """Fano-like lines at intermediate squeezing phases (pi/2 and 3 pi/2)."""
    grid = default_grid(6e3, 2400)
    cols, summary = {"offset_hz": grid}, {"C": FIG2DE_C, "r": FIG2_R, "fits": {}}
    for deg in (90, 270):
        drive = DriveState(r=FIG2_R, theta=math.radians(deg), C=FIG2DE_C)
        spec = output_psd(drive, params, grid)
        cols[f"psd_theta{deg}"] = spec.psd
        info = _fit_summary(spec, drive, params)
        info["asymmetry_metric"] = asymmetry_metric(spec)
        summary["fits"][f"theta{deg}"] = info
    return FigureData("fig2d", cols, summary,
                      dict(x="offset_hz", xlabel="offset from mechanical resonance (Hz)",
                           ylabel="PSD / shot noise"))


def _fig3_table(params: SystemParams):
    grid = np.geomspace(0.1, 1000.0, 81)
    table = sweep_table(sweep_cooperativity(standard_drives(FIG3_R), params, grid))
    return grid, table


def fig3a(params: SystemParams, seed: int = 0) -> FigureData:
    """Total noise in phonons versus cooperativity for the three drives.

    ``n_imp_ideal_*`` columns are the imprecision at unit detection efficiency.
    """
    grid, table = _fig3_table(params)
    ideal = sweep_table(sweep_cooperativity(standard_drives(FIG3_R),
                                            params.replace(eta_det=1.0), grid))
    cols = {"C": grid}
    labels = list(standard_drives())
    for label in labels:
        cols[f"n_total_{label}"] = table[f"n_total_{label}"]
    for label in labels:
        cols[f"n_imp_ideal_{label}"] = ideal[f"n_imp_times_C_{label}"] / grid
    return FigureData("fig3a", cols, {"r": FIG3_R},
                      dict(x="C", ys=[f"n_total_{k}" for k in labels], logx=True, logy=True,
                           xlabel="cooperativity C", ylabel="total noise (phonons)"))


def fig3b(params: SystemParams, seed: int = 0) -> FigureData:
    grid, table = _fig3_table(params)
    cols = {"C": grid, **{k: v for k, v in table.items() if k.startswith("n_imp_times_C_")}}
    return FigureData("fig3b", cols, {"r": FIG3_R},
                      dict(x="C", logx=True, xlabel="cooperativity C", ylabel="n_imp x C"))


def fig3c(params: SystemParams, seed: int = 0) -> FigureData:
    grid, table = _fig3_table(params)
    cols = {"C": grid, **{k: v for k, v in table.items() if k.startswith("occupancy_")}}
    return FigureData("fig3c", cols, {"r": FIG3_R},
                      dict(x="C", logx=True, logy=True, xlabel="cooperativity C",
                           ylabel="phonon occupancy"))


def fig4a(params: SystemParams, seed: int = 0) -> FigureData:
    """Phase sweeps of the band-integrated sideband power with fits."""
    seeds = np.random.SeedSequence(seed).spawn(len(FIG4_R_VALUES))
    cols, fits = {}, {}
    for r, ss in zip(FIG4_R_VALUES, seeds):
        sweep = simulate_phase_sweep(r, params, FIG4_C, averages=DEFAULT_AVERAGES,
                                     seed=np.random.default_rng(ss))
        if not cols:
            cols["theta_deg"] = np.degrees(sweep.theta_grid)
        cols[f"power_r{r:g}"] = sweep.integrated_power
        fits[f"r{r:g}"] = fit_squeezing(sweep, params.eta_in).as_dict()
    return FigureData("fig4a", cols, {"C": FIG4_C, "averages": DEFAULT_AVERAGES, "seed": seed,
                                      "fits": fits},
                      dict(x="theta_deg", xlabel="squeezing phase (deg)",
                           ylabel="integrated sideband power (rel. coherent)"))


def fig4c(params: SystemParams, seed: int = 0) -> FigureData:
    """Optomechanical detection efficiency versus cooperativity."""
    grid = np.geomspace(1.0, FIG4_C, 100)
    lo, hi = ETA_IN_RANGE
    cols = {
        "C": grid,
        "eta_det_om": eta_det_om_predicted(params, grid),
        "eta_det_om_eta_in_lo": eta_det_om_predicted(params.replace(eta_in=lo), grid),
        "eta_det_om_eta_in_hi": eta_det_om_predicted(params.replace(eta_in=hi), grid),
    }
    top = float(cols["eta_det_om"][-1])
    return FigureData("fig4c", cols, {"eta_det_om_at_top": top, "C_top": FIG4_C,
                                      "ratio_to_eta_det": top / params.eta_det},
                      dict(x="C", logx=True, xlabel="cooperativity C", ylabel="eta_det^OM"))


def figS3(params: SystemParams, seed: int = 0) -> FigureData:
    """Amplitude versus phase quadrature near resonance, unsqueezed drive."""
    grid = default_grid(4e3, 1600)
    cols = {"offset_hz": grid}
    deviations, areas = {}, {}
    for C in S3_C_VALUES:
        drive = DriveState(C=C)
        amp = output_psd(drive, params, grid, AMPLITUDE_QUADRATURE)
        phase = output_psd(drive, params, grid)
        cols[f"psd_amplitude_C{C:g}"] = amp.psd
        cols[f"psd_phase_C{C:g}"] = phase.psd
        deviations[f"C{C:g}"] = qnd_deviation(amp)
        areas[f"C{C:g}"] = fit_lineshape(phase).lorentzian_area
    return FigureData("figS3", cols, {"qnd_deviation": deviations,
                                      "phase_lorentzian_area": areas},
                      dict(x="offset_hz", logy=True, xlabel="offset from mechanical resonance (Hz)",
                           ylabel="PSD / shot noise"))


def figS5(params: SystemParams, seed: int = 0) -> FigureData:
    """Sideband cooling from the damped state by a tone at -Omega_m.

    The constant damping tone fixes the starting point (occupancy ``n_th``,
    linewidth Gamma); the extra tone's rates follow from its detuning.
    """
    grid = np.geomspace(0.1, 300.0, 80)
    n_ideal, n_cav, width = [], [], []
    ideal = params.replace(n_c=0.0)
    for C in grid:
        cool = sideband_rates(params, float(C), -params.omega_m)
        kw = dict(n_bath=params.n_th, gamma_m=params.gamma)
        n_ideal.append(cooled_occupancy(ideal, cool, **kw))
        n_cav.append(cooled_occupancy(params, cool, **kw))
        width.append((params.gamma + cool.net_damping) / TWO_PI)
    cols = {"C_aux": grid, "n_f_coherent": np.array(n_ideal), "n_f": np.array(n_cav),
            "linewidth_hz": np.array(width)}
    return FigureData("figS5", cols, {"n_c": params.n_c},
                      dict(x="C_aux", ys=["n_f_coherent", "n_f"], logx=True, logy=True,
                           xlabel="auxiliary cooling cooperativity", ylabel="phonon occupancy"))


RECIPES = {
    "fig2a": fig2a, "fig2b": fig2b, "fig2c": fig2c, "fig2d": fig2d,
    "fig3a": fig3a, "fig3b": fig3b, "fig3c": fig3c,
    "fig4a": fig4a, "fig4c": fig4c,
    "figS3": figS3, "figS5": figS5,
}


def reproduce(name: str, params: SystemParams, seed: int = 0) -> FigureData:
    try:
        recipe = RECIPES[name]
    except KeyError:
        raise KeyError(name) from None
    return recipe(params, seed)


__all__ = ["RECIPES", "FigureData", "reproduce"]
