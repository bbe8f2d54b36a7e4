"""Fixed-step integration of the open- and closed-loop equations with diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .control import (
    GainVector,
    ManeuverKind,
    ManeuverSpec,
    feedback,
    output_matrix,
    reference,
)
from .dynamics import (
    UNICYCLE_INDEX,
    PhysicalParams,
    contact_point_velocity,
    mechanical_energy,
    unicycle_rhs,
    unicycle_state,
    wheel_rhs,
)
from .errors import SimulationAbort, SingularTiltError, ValidationError

METHODS = ("RK4", "RK45")


@dataclass(frozen=True)
class IntegratorConfig:
    h: float = 1e-3
    method: str = "RK4"
    t_end: float = 10.0
    rtol: float = 1e-10
    atol: float = 1e-12

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0):
            raise ValidationError(f"step h must be > 0, got {self.h!r}")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValidationError(f"t_end must be > 0, got {self.t_end!r}")
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}, got {self.method!r}")

    @property
    def n_steps(self) -> int:
        # tolerate t_end/h landing a rounding error below an integer
        return int(math.floor(self.t_end / self.h + 1e-9))


@dataclass
class SimTrace:
    """Uniform samples; ``states`` has one row per entry of ``t``."""

    t: np.ndarray
    states: np.ndarray
    u: np.ndarray
    vP_norm: np.ndarray
    energy: np.ndarray
    work: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.states[:, UNICYCLE_INDEX[name]]


def _rk4_step(f, t, x, h):
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(rhs: Callable, x0, config: IntegratorConfig = IntegratorConfig()):
    """Integrate ``x' = rhs(t, x)``; returns ``(t, X)`` on the grid ``k h``.

    A singular tilt or a non-finite state stops the run with
    :class:`SimulationAbort` carrying the last valid sample.
    """
    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValidationError("initial state must be finite")
    n = config.n_steps
    t = np.arange(n + 1) * config.h
    X = np.empty((n + 1, x.size))
    X[0] = x
    if config.method == "RK4":
        for k in range(n):
            try:
                x = _rk4_step(rhs, t[k], x, config.h)
            except SingularTiltError as exc:
                raise SimulationAbort(f"singular tilt reached: {exc}", t[k], X[k].copy()) from exc
            if not np.all(np.isfinite(x)):
                raise SimulationAbort("state became non-finite", t[k], X[k].copy())
            X[k + 1] = x
        return t, X
    return t, _integrate_rk45(rhs, X, t, config)


def _integrate_rk45(rhs, X, t, config):
    from scipy.integrate import solve_ivp

    try:
        sol = solve_ivp(rhs, (0.0, t[-1]), X[0], method="RK45", t_eval=t, rtol=config.rtol,
                        atol=config.atol, max_step=10 * config.h)
    except SingularTiltError as exc:
        raise SimulationAbort(f"singular tilt reached: {exc}", math.nan, X[0].copy()) from exc
    if sol.status != 0 or sol.y.shape[1] != t.size:
        k = sol.y.shape[1] - 1
        last = sol.y[:, k] if k >= 0 else X[0]
        raise SimulationAbort(f"adaptive integration failed: {sol.message}", t[max(k, 0)], last.copy())
    out = sol.y.T.copy()
    if not np.all(np.isfinite(out)):
        raise SimulationAbort("state became non-finite", math.nan, X[0].copy())
    return out


def _vP_norm(x, dx, params):
    """Contact-point speed using the centre velocity from the integrated xG, yG rows."""
    is_uni = x.size == 10
    ix, iy = (8, 9) if is_uni else (6, 7)
    th = x[3]
    vG = np.array([dx[ix], dx[iy], -params.R * dx[3] * math.sin(th)])
    return float(np.linalg.norm(contact_point_velocity(x, params, v_G=vG)))


def simulate(x0, params: PhysicalParams, config: IntegratorConfig = IntegratorConfig(),
             control: Callable | None = None) -> SimTrace:
    """Run the wheel (8 states) or unicycle (10 states) with optional ``u = control(t, x)``.

    The control work ``int u sigma dt`` is integrated as an extra state so the
    energy balance ``E(t) - E(0) = W(t)`` can be checked to integrator accuracy.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape == (8,):
        if control is not None:
            raise ValidationError("the bare wheel has no input")
        force = None
    elif x0.shape == (10,):
        force = control
    else:
        raise ValidationError(f"state must have 8 or 10 components, got {x0.shape}")

    def field(t, x):
        if force is None:
            return wheel_rhs(x, params), 0.0, 0.0
        u = float(force(t, x))
        return unicycle_rhs(x, params, u), u, x[4]

    def augmented(t, z):
        dx, u, sigma = field(t, z[:-1])
        return np.append(dx, u * sigma)

    t, Z = integrate(augmented, np.append(x0, 0.0), config)
    X, W = Z[:, :-1], Z[:, -1]
    U = np.empty(t.size)
    VP = np.empty(t.size)
    E = np.empty(t.size)
    for k in range(t.size):
        dx, U[k], _ = field(t[k], X[k])
        VP[k] = _vP_norm(X[k], dx, params)
        E[k] = mechanical_energy(X[k], params)
    return SimTrace(t, X, U, VP, E, W)


def straight_rolling_start(speed: float, params: PhysicalParams) -> np.ndarray:
    """Unicycle rolling along the x axis at ``speed`` with the mass centred."""
    return unicycle_state(omega2=speed / params.R)


def closed_loop_control(spec: ManeuverSpec, gains: GainVector) -> Callable:
    C = output_matrix(spec.kind)
    if len(gains.values) != C.shape[0]:
        raise ValidationError(f"{spec.kind.value} needs {C.shape[0]} gains, got {len(gains.values)}")

    def control(t, x):
        return feedback(gains, C @ x, reference(spec, min(t, spec.t_end)))

    return control


@dataclass(frozen=True)
class ManeuverMetrics:
    lateral_error: float
    yaw_error: float
    max_abs_u: float
    max_constraint_residual: float
    energy_work_residual: float
    energy_work_relative: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def metrics(trace: SimTrace, spec: ManeuverSpec, window: float = 0.5) -> ManeuverMetrics:
    """Terminal errors averaged over the final ``window`` seconds plus whole-run maxima.

    Lane change: lateral error is ``yG + L``, yaw error ``psi``.  Turn:
    lateral error is the ``xG`` drift across the window (zero when heading
    exactly along ``-y``), yaw error ``psi + angle``.
    """
    if trace.t.size == 0:
        raise ValidationError("empty trace")
    tail = trace.t >= trace.t[-1] - window - 1e-12
    psi = trace.column("psi")[tail]
    if spec.kind is ManeuverKind.LANE_CHANGE:
        lateral = float(np.mean(trace.column("yG")[tail]) + spec.amplitude)
        yaw = float(np.mean(psi))
    else:
        xg = trace.column("xG")[tail]
        lateral = float(xg[-1] - xg[0])
        yaw = float(np.mean(psi) + spec.amplitude)
    balance = trace.energy - trace.energy[0] - trace.work
    resid = float(np.max(np.abs(balance)))
    return ManeuverMetrics(
        lateral_error=lateral,
        yaw_error=yaw,
        max_abs_u=float(np.max(np.abs(trace.u))),
        max_constraint_residual=float(np.max(trace.vP_norm)),
        energy_work_residual=resid,
        energy_work_relative=resid / max(abs(trace.energy[0]), 1e-300),
    )


def run_maneuver(spec: ManeuverSpec, params: PhysicalParams, gains: GainVector,
                 config: IntegratorConfig | None = None):
    """Closed-loop maneuver from straight rolling; returns ``(trace, metrics)``."""
    if config is None:
        config = IntegratorConfig(t_end=spec.t_end)
    if config.t_end > spec.t_end + 1e-12:
        raise ValidationError("integration horizon exceeds the reference window")
    trace = simulate(straight_rolling_start(spec.speed, params), params, config, closed_loop_control(spec, gains))
    return trace, metrics(trace, spec)
