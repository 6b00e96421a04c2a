"""Drive settings that minimize measurement noise.

Deterministic derivative-free search: a coarse grid, coordinate-wise
golden-section refinement in ``(r, theta, log C)``, then an audit on a dense
grid. If any audit point beats the refined optimum the search restarts from
that point, so the returned value never exceeds the audited minimum.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .core_model import TWO_PI, SystemParams, squeezed_thermal_variances, weighted_cooperativity
from .errors import DomainError
from .spectra import PHASE_QUADRATURE, psd_at_offset

OBJECTIVES = ("n_add", "n_total", "floor")
R_MAX = 1.15  # sinh^2 r <= 1.5 keeps the cooling-tone heating negligible
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptProblem:
    """Bounds and objective of a drive optimization.

    ``theta=None`` leaves the squeezing phase free. A fixed cooperativity is
    expressed as ``C_range=(C, C)``; the ``floor`` objective (PSD at
    ``offset_hz`` from the mechanical resonance) requires one.
    """

    params: SystemParams = field(default_factory=SystemParams)
    objective: str = "n_add"
    r_max: float = R_MAX
    C_range: tuple = (0.01, 1000.0)
    theta: float | None = None
    offset_hz: float | None = None
    detect_angle: float = PHASE_QUADRATURE
    coarse_points: int = 21
    audit_points: int = 101

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise DomainError(f"unknown objective {self.objective!r}; choose from {OBJECTIVES}")
        c_lo, c_hi = (float(c) for c in self.C_range)
        if not (self.r_max >= 0 and c_lo > 0 and c_lo <= c_hi and math.isfinite(c_hi)):
            raise DomainError(f"empty feasible set: r in [0, {self.r_max!r}], C in [{c_lo!r}, {c_hi!r}]")
        if self.objective in ("n_add", "n_total") and not self.params.eta_det > 0:
            raise DomainError("no detection: eta_det must be > 0")
        if self.objective == "floor":
            if self.offset_hz is None or self.offset_hz == 0:
                raise DomainError("floor objective needs a non-zero offset_hz")
            if c_lo != c_hi:
                raise DomainError("floor objective is optimized at fixed C; pass C_range=(C, C)")
        if self.coarse_points < 2 or self.audit_points < 2:
            raise DomainError("grids need at least two points per axis")

    @property
    def theta_free(self) -> bool:
        return self.theta is None


@dataclass(frozen=True)
class OptResult:
    r: float
    theta: float
    C: float
    value: float
    objective: str
    C_tilde: float
    bounds_active: dict
    audit_min: float
    audit_size: int
    fallback_used: bool
    n_evaluations: int
    trace: list

    def as_dict(self):
        return asdict(self)


def evaluate(problem: OptProblem, r, theta, C):
    """Objective value, broadcast over ``r``, ``theta`` and ``C``."""
    p = problem.params
    if problem.objective == "floor":
        return psd_at_offset(r, theta, C, p, problem.offset_hz, problem.detect_angle)
    v_xx = squeezed_thermal_variances(r, theta, p.n_c, p.eta_in, 0.0)
    v_yy = squeezed_thermal_variances(r, theta, p.n_c, p.eta_in, math.pi / 2)
    ct = weighted_cooperativity(np.asarray(C, dtype=float), p)
    eta = p.eta_det
    value = (1.0 - eta + 4.0 * eta * v_yy) / (4.0 * eta * ct) + ct * v_xx
    if problem.objective == "n_total":
        value = value + p.n_th + 0.5
    return value


def golden_section(f, a: float, b: float, *, xtol: float = 1e-12, maxiter: int = 200):
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x), n_evaluations)``."""
    if b < a:
        a, b = b, a
    if b - a <= xtol:
        x = 0.5 * (a + b)
        return x, f(x), 1
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    nfev = 2
    for _ in range(maxiter):
        if b - a <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
        nfev += 1
    # endpoints matter when the optimum sits on a bound
    cands = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    nfev += 2
    fx, x = min(cands)
    return x, fx, nfev


class _Search:
    """Coordinates ``(r, theta, log C)`` with bound handling and a call counter."""

    def __init__(self, problem: OptProblem):
        self.problem = problem
        c_lo, c_hi = (float(c) for c in problem.C_range)
        self.c_lo, self.c_hi = c_lo, c_hi
        self.lo = np.array([0.0, -math.inf, math.log(c_lo)])
        self.hi = np.array([problem.r_max, math.inf, math.log(c_hi)])
        if not problem.theta_free:
            self.lo[1] = self.hi[1] = float(problem.theta)
        self.nfev = 0

    def C(self, log_c: float) -> float:
        """Cooperativity at ``log_c``, exact at the bounds."""
        if log_c <= self.lo[2]:
            return self.c_lo
        if log_c >= self.hi[2]:
            return self.c_hi
        return math.exp(log_c)

    def f(self, x) -> float:
        self.nfev += 1
        return float(evaluate(self.problem, x[0], x[1], self.C(x[2])))

    def refine(self, x, steps, trace, *, refine_theta=True, max_cycles=60):
        x = np.array(x, dtype=float)
        fx = self.f(x)
        axes = [0, 2] + ([1] if refine_theta and self.problem.theta_free else [])
        for cycle in range(max_cycles):
            start = fx
            for i in axes:
                if self.lo[i] == self.hi[i]:
                    continue
                a = max(self.lo[i], x[i] - steps[i])
                b = min(self.hi[i], x[i] + steps[i])

                def line(t, i=i):
                    y = x.copy()
                    y[i] = t
                    return self.f(y)

                t, ft, _ = golden_section(line, a, b)
                if ft < fx:
                    x[i], fx = t, ft
            trace.append({"stage": f"refine{cycle}", "r": x[0], "theta": x[1],
                          "C": self.C(x[2]), "value": fx})
            if start - fx <= 1e-15 * max(1.0, abs(fx)):
                break
        return x, fx


def _theta_axis(problem: OptProblem, n: int):
    if not problem.theta_free:
        return np.array([float(problem.theta)])
    return np.linspace(0.0, TWO_PI, n, endpoint=False)


def _grid(problem: OptProblem, n: int, theta_axis):
    c_lo, c_hi = (float(c) for c in problem.C_range)
    r = np.linspace(0.0, problem.r_max, n) if problem.r_max > 0 else np.array([0.0])
    C = np.geomspace(c_lo, c_hi, n) if c_hi > c_lo else np.array([c_lo])
    values = evaluate(problem, r[:, None, None], theta_axis[None, :, None], C[None, None, :])
    values = np.broadcast_to(values, (r.size, theta_axis.size, C.size))
    return r, theta_axis, C, values


def _bounds_active(problem: OptProblem, r: float, C: float) -> dict:
    c_lo, c_hi = (float(c) for c in problem.C_range)
    rt = 1e-6 * max(problem.r_max, 1.0)
    return {
        "r_lower": r <= rt,
        "r_upper": r >= problem.r_max - rt,
        "C_lower": math.log(C) <= math.log(c_lo) + 1e-6,
        "C_upper": math.log(C) >= math.log(c_hi) - 1e-6,
    }


def minimize(problem: OptProblem) -> OptResult:
    """Global minimum of ``problem.objective`` within the bounds."""
    search = _Search(problem)
    trace: list = []
    separable = problem.objective in ("n_add", "n_total") and problem.theta_free
    # budget objectives depend on theta only through cos(theta): extrema at 0 and pi
    coarse_theta = np.array([0.0, math.pi]) if separable else _theta_axis(problem, 4 * problem.coarse_points)
    r, th, C, vals = _grid(problem, problem.coarse_points, coarse_theta)
    search.nfev += vals.size
    i, j, k = np.unravel_index(int(np.argmin(vals)), vals.shape)
    x0 = [r[i], th[j], math.log(C[k])]
    trace.append({"stage": "coarse", "r": r[i], "theta": th[j], "C": C[k], "value": float(vals[i, j, k])})
    steps = [
        problem.r_max / (problem.coarse_points - 1) if problem.r_max > 0 else 0.0,
        TWO_PI / coarse_theta.size if problem.theta_free else 0.0,
        (math.log(problem.C_range[1]) - math.log(problem.C_range[0])) / (problem.coarse_points - 1),
    ]
    x, fx = search.refine(x0, steps, trace, refine_theta=not separable)

    audit_theta = _theta_axis(problem, problem.audit_points)
    ar, ath, aC, avals = _grid(problem, problem.audit_points, audit_theta)
    search.nfev += avals.size
    audit_min = float(np.min(avals))
    fallback = False
    if fx > audit_min:
        fallback = True
        i, j, k = np.unravel_index(int(np.argmin(avals)), avals.shape)
        xa = [ar[i], ath[j], math.log(aC[k])]
        trace.append({"stage": "audit_restart", "r": ar[i], "theta": ath[j], "C": aC[k],
                      "value": audit_min})
        fine = [s * (problem.coarse_points - 1) / (problem.audit_points - 1) for s in steps]
        xb, fb = search.refine(xa, fine, trace, refine_theta=problem.theta_free)
        if fb <= audit_min:
            x, fx = xb, fb
        else:
            x, fx = np.array(xa), audit_min
    theta = float(np.mod(x[1], TWO_PI)) if problem.theta_free else float(x[1])
    C_opt = search.C(x[2])
    return OptResult(
        r=float(x[0]), theta=theta, C=C_opt, value=float(fx), objective=problem.objective,
        C_tilde=float(weighted_cooperativity(C_opt, problem.params)),
        bounds_active=_bounds_active(problem, float(x[0]), C_opt), audit_min=audit_min,
        audit_size=int(avals.size), fallback_used=fallback, n_evaluations=search.nfev, trace=trace,
    )


def minimize_added_noise(problem: OptProblem) -> OptResult:
    """Minimum of ``n_add`` (or ``n_total``) over ``(r, theta, C)``."""
    if problem.objective == "floor":
        raise DomainError("use optimal_floor_at_offset for the floor objective")
    return minimize(problem)


def optimal_floor_at_offset(problem: OptProblem, offset_hz: float) -> OptResult:
    """Squeezing that minimizes the homodyne PSD at ``Omega_m + offset_hz`` at fixed C."""
    if offset_hz == 0:
        raise DomainError("offset_hz must be non-zero")
    return minimize(replace(problem, objective="floor", offset_hz=float(offset_hz)))
