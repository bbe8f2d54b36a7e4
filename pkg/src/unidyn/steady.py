"""Steady-state families of the wheel and the unicycle (u = 0).

A steady state fixes the tilt ``theta_star``, the yaw rate ``psi_dot_star``,
the pitch rate ``phi_dot_star`` and, for the unicycle, the mass position
``r_star``; all pseudo velocities are then constant and the hidden
coordinates advance linearly (angles) or along a circle (centre position).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import PhysicalParams, point_mass_height
from .errors import (
    ExcludedYawRateError,
    NegativeRadicandError,
    ParameterError,
    ZeroYawRateError,
)

STEADY_TOL = 1e-9
EXCLUDED_YAW_TOL = 1e-9


class SteadyStateKind(enum.Enum):
    STRAIGHT_ROLLING = "StraightRolling"
    TURNING_ROLLING = "TurningRolling"
    SPINNING = "Spinning"
    STATIC = "Static"
    NON_TILTED_TURNING = "NonTiltedTurning"
    TILTED_SPINNING = "TiltedSpinning"


class RegionLabel(enum.Enum):
    FEASIBLE_MASS_BELOW_CENTER = "FeasibleMassBelowCenter"
    FEASIBLE_MASS_ABOVE_CENTER = "FeasibleMassAboveCenter"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class SteadyState:
    kind: SteadyStateKind
    theta_star: float
    psi_dot_star: float
    phi_dot_star: float
    r_star: float = 0.0
    feasible: bool = True
    model: str = "wheel"


def _classify(theta, psi_dot, phi_dot, model):
    if psi_dot == 0.0:
        if phi_dot == 0.0 and model == "wheel":
            return SteadyStateKind.STATIC
        return SteadyStateKind.STRAIGHT_ROLLING
    if phi_dot == 0.0:
        return SteadyStateKind.SPINNING if theta == 0.0 else SteadyStateKind.TILTED_SPINNING
    if theta == 0.0 and model == "unicycle":
        return SteadyStateKind.NON_TILTED_TURNING
    return SteadyStateKind.TURNING_ROLLING


# ---------------------------------------------------------------------------
# wheel


def wheel_steady_residual(theta, psi_dot, phi_dot, params: PhysicalParams) -> float:
    """Tilt-equation residual of a wheel steady state (zero on the family)."""
    R, g = params.R, params.g
    s, c = math.sin(theta), math.cos(theta)
    return 5 * psi_dot ** 2 * R * s * c + 6 * psi_dot * phi_dot * R * c + 4 * g * s


def wheel_pitch_rate(theta, psi_dot, params: PhysicalParams) -> float:
    """Pitch rate that makes ``(theta, psi_dot)`` a turning-rolling wheel state."""
    if psi_dot == 0.0:
        raise ZeroYawRateError("wheel pitch rate is undefined at zero yaw rate (straight rolling: theta must be 0)")
    return -5.0 / 6.0 * psi_dot * math.sin(theta) - 2 * params.g * math.tan(theta) / (3 * params.R * psi_dot)


def wheel_steady_state(theta, psi_dot, params: PhysicalParams, phi_dot=None) -> SteadyState:
    """Classified wheel steady state.

    With ``psi_dot = 0`` the tilt must vanish and ``phi_dot`` (default 0) is
    free; otherwise ``phi_dot`` is solved for.
    """
    if psi_dot == 0.0:
        if theta != 0.0:
            raise ZeroYawRateError("straight rolling requires zero tilt")
        phi_dot = 0.0 if phi_dot is None else float(phi_dot)
    else:
        phi_dot = wheel_pitch_rate(theta, psi_dot, params)
    return SteadyState(_classify(theta, psi_dot, phi_dot, "wheel"), float(theta), float(psi_dot), phi_dot, 0.0, True, "wheel")


def turning_radii(ss: SteadyState, params: PhysicalParams) -> tuple:
    """Radii ``(rho_P, rho_G)`` of the contact-point and centre circles (inf when straight)."""
    if ss.psi_dot_star == 0.0:
        return math.inf, math.inf
    ratio = ss.phi_dot_star / ss.psi_dot_star
    return abs(ratio) * params.R, abs(ratio + math.sin(ss.theta_star)) * params.R


def wheel_steady_trajectory(ss: SteadyState, t, params: PhysicalParams, psi0=0.0, phi0=0.0, x0=0.0, y0=0.0):
    """Closed-form hidden coordinates ``(psi, phi, xG, yG)`` at time(s) ``t``.

    For a turning state ``(x0, y0)`` is the centre of the circle traced by G;
    for straight rolling it is the starting point.
    """
    t = np.asarray(t, dtype=float)
    pd, fd, th, R = ss.psi_dot_star, ss.phi_dot_star, ss.theta_star, params.R
    psi = pd * t + psi0
    phi = fd * t + phi0
    if pd != 0.0:
        rad = (fd / pd + math.sin(th)) * R
        x = rad * np.sin(psi) + x0
        y = -rad * np.cos(psi) + y0
    else:
        x = fd * t * R * math.cos(psi0) + x0
        y = fd * t * R * math.sin(psi0) + y0
    return psi, phi, x, y


def embed_wheel(ss: SteadyState, params: PhysicalParams, t=0.0, psi0=0.0, phi0=0.0, x0=0.0, y0=0.0) -> np.ndarray:
    """Full 8-component state on the steady motion at time ``t``."""
    th, pd, fd = ss.theta_star, ss.psi_dot_star, ss.phi_dot_star
    psi, phi, x, y = wheel_steady_trajectory(ss, t, params, psi0, phi0, x0, y0)
    return np.array([0.0, pd * math.sin(th) + fd, pd * math.cos(th), th, psi, phi, x, y], dtype=float)


# ---------------------------------------------------------------------------
# unicycle


def _unicycle_terms(theta, psi_dot, phi_dot, r, params):
    m, m0, R, g = params.m, params.m0, params.R, params.g
    s, c = math.sin(theta), math.cos(theta)
    pd, fd = psi_dot, phi_dot
    first = (
        5 * m * R * R * pd * pd * s * c,
        4 * m0 * R * pd * pd * r * s * s,
        -4 * m0 * pd * pd * r * r * s * c,
        6 * m * R * R * pd * fd * c,
        4 * m0 * R * pd * fd * r * s,
        -4 * m0 * g * r * c,
        4 * m * g * R * s,
    )
    second = (
        m * R ** 3 * pd * fd * c,
        4 * m0 * R * R * pd * fd * r * s,
        -4 * m0 * R * pd * fd * r * r * c,
        5 * m * R * R * pd * pd * r * c * c,
        4 * m0 * R * R * pd * pd * r * s * s,
        -8 * m0 * R * pd * pd * r * r * s * c,
        4 * m0 * pd * pd * r ** 3 * c * c,
        -m * g * R * R * s,
        -4 * m0 * g * R * r * c,
        -4 * m0 * g * r * r * s,
    )
    return first, second


def unicycle_steady_residuals(theta, psi_dot, phi_dot, r, params: PhysicalParams) -> np.ndarray:
    """Both steady-state residuals (tilt and axial balance) of the unicycle."""
    first, second = _unicycle_terms(theta, psi_dot, phi_dot, r, params)
    return np.array([math.fsum(first), math.fsum(second)])


def unicycle_residual_scale(theta, psi_dot, phi_dot, r, params: PhysicalParams) -> np.ndarray:
    """Sum of absolute term magnitudes; the rounding floor of each residual."""
    first, second = _unicycle_terms(theta, psi_dot, phi_dot, r, params)
    return np.array([math.fsum(map(abs, first)), math.fsum(map(abs, second))])


def is_unicycle_steady(theta, psi_dot, phi_dot, r, params: PhysicalParams, tol=STEADY_TOL) -> bool:
    res = np.abs(unicycle_steady_residuals(theta, psi_dot, phi_dot, r, params))
    scale = unicycle_residual_scale(theta, psi_dot, phi_dot, r, params)
    return bool(np.all(res <= tol * np.maximum(1.0, scale)))


def excluded_yaw_rate(theta, params: PhysicalParams) -> float:
    """Positive yaw rate at which the turning-rolling mass position diverges."""
    return math.sqrt(2 * params.m0 * params.g / (3 * params.m * params.R * math.cos(theta) ** 3))


def unicycle_solve(theta, psi_dot, params: PhysicalParams) -> tuple:
    """``(phi_dot_star, r_star)`` of the turning-rolling unicycle state at ``(theta, psi_dot)``."""
    m, m0, R, g = params.m, params.m0, params.R, params.g
    if psi_dot == 0.0:
        raise ExcludedYawRateError("excluded yaw rate: psi_dot_star = 0 (straight rolling, requires theta = 0)")
    s, c = math.sin(theta), math.cos(theta)
    denom = 6 * psi_dot ** 2 * m * R * c ** 3 - 4 * m0 * g
    crit = excluded_yaw_rate(theta, params)
    if abs(abs(psi_dot) - crit) <= EXCLUDED_YAW_TOL or denom == 0.0:
        raise ExcludedYawRateError(
            f"excluded yaw rate: |psi_dot_star| = sqrt(2 m0 g / (3 m R cos^3 theta)) = {crit:.9g} rad/s "
            "(mass position diverges; non-tilted turning only at theta = 0)"
        )
    r = m * R * (psi_dot ** 2 * R * c + 2 * g) * s * c / denom
    phi_den = psi_dot * R * (6 * m * R * c + 4 * m0 * r * s)
    if phi_den == 0.0:
        raise ExcludedYawRateError("pitch-rate denominator vanishes at this (theta, psi_dot)")
    phi_dot = (
        -4 * m * g * R * s
        + psi_dot ** 2 * (4 * m0 * r * r - 5 * m * R * R) * s * c
        - 4 * psi_dot ** 2 * m0 * R * r * s * s
        + 4 * m0 * g * r * c
    ) / phi_den
    return phi_dot, r


def unicycle_steady_state(theta, psi_dot, params: PhysicalParams, phi_dot=None) -> SteadyState:
    """Classified unicycle steady state (generic turning rolling or straight rolling)."""
    if psi_dot == 0.0:
        if theta != 0.0:
            raise ExcludedYawRateError("straight rolling of the unicycle requires zero tilt (and r_star = 0)")
        fd = 0.0 if phi_dot is None else float(phi_dot)
        return SteadyState(SteadyStateKind.STRAIGHT_ROLLING, 0.0, 0.0, fd, 0.0, True, "unicycle")
    fd, r = unicycle_solve(theta, psi_dot, params)
    kind = _classify(theta, psi_dot, fd, "unicycle")
    feasible = point_mass_height(theta, r, params.R) > 0
    return SteadyState(kind, float(theta), float(psi_dot), fd, r, feasible, "unicycle")


def non_tilted_turning(r, params: PhysicalParams) -> tuple:
    """The two non-tilted turning states for mass position ``r`` (positive yaw branch first)."""
    if params.m0 <= 0:
        raise ParameterError("non-tilted turning needs m0 > 0")
    m, m0, R, g = params.m, params.m0, params.R, params.g
    pd = math.sqrt(2 * m0 * g / (3 * m * R))
    fd = math.sqrt(2 * m0 * g / (3 * m * R ** 3)) * r
    kind = SteadyStateKind.SPINNING if r == 0.0 else SteadyStateKind.NON_TILTED_TURNING
    return (
        SteadyState(kind, 0.0, pd, fd, float(r), R > 0, "unicycle"),
        SteadyState(kind, 0.0, -pd, -fd, float(r), R > 0, "unicycle"),
    )


def tilted_spinning(theta, params: PhysicalParams) -> tuple:
    """Tilted spinning states (zero pitch rate) at tilt ``theta``; both yaw signs.

    Both roots of the quadratic for ``r_star`` are tried and kept only if the
    yaw-rate radicand is positive and the residuals vanish.
    """
    if params.m0 <= 0:
        raise ParameterError("tilted spinning needs m0 > 0")
    if theta == 0.0:
        raise NegativeRadicandError("tilted spinning needs theta != 0 (theta = 0 is ordinary spinning)")
    m, m0, R, g = params.m, params.m0, params.R, params.g
    s, c = math.sin(theta), math.cos(theta)
    root = math.sqrt(m * m * c ** 4 + 3 * m * m0 * c * c + m0 * m0)
    found = []
    for sign in (1.0, -1.0):
        r = R * math.tan(theta) / (2 * m0) * (m * c * c + m0 + sign * root)
        num = 4 * m0 * g * r * c - 4 * m * g * R * s
        den = (5 * m * R * R - 4 * m0 * r * r) * s * c + 4 * m0 * R * r * s * s
        if den == 0.0 or num / den <= 0.0:
            continue
        pd = math.sqrt(num / den)
        if not is_unicycle_steady(theta, pd, 0.0, r, params):
            continue
        feasible = point_mass_height(theta, r, R) > 0
        for yaw in (pd, -pd):
            found.append(SteadyState(SteadyStateKind.TILTED_SPINNING, float(theta), yaw, 0.0, r, feasible, "unicycle"))
    if not found:
        raise NegativeRadicandError(f"no real tilted spinning state at theta = {theta!r} (negative radicand)")
    return tuple(found)


def classify_region(theta, psi_dot, params: PhysicalParams) -> RegionLabel:
    """Where the point mass sits for the turning-rolling state at ``(theta, psi_dot)``."""
    _, r = unicycle_solve(theta, psi_dot, params)
    return region_from_position(theta, r, params)


def region_from_position(theta, r, params: PhysicalParams) -> RegionLabel:
    z_a = point_mass_height(theta, r, params.R)
    z_g = params.R * math.cos(theta)
    if z_a <= 0:
        return RegionLabel.INFEASIBLE
    if z_a < z_g:
        return RegionLabel.FEASIBLE_MASS_BELOW_CENTER
    return RegionLabel.FEASIBLE_MASS_ABOVE_CENTER


def embed_unicycle(ss: SteadyState, params: PhysicalParams, t=0.0, psi0=0.0, phi0=0.0, x0=0.0, y0=0.0) -> np.ndarray:
    """Full 10-component state on the steady motion at time ``t`` (sigma = 0)."""
    w = embed_wheel(ss, params, t, psi0, phi0, x0, y0)
    return np.concatenate([w[:4], [0.0, ss.r_star], w[4:]])
