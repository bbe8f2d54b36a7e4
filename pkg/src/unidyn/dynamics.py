"""Nonlinear equations of motion of the rolling wheel and the point-mass unicycle.

States are plain float arrays in a fixed order:

* wheel (8):     omega1, omega2, omega3, theta, psi, phi, xG, yG
* unicycle (10): omega1, omega2, omega3, theta, sigma, r, psi, phi, xG, yG

``omega1..3`` are the components of the wheel angular velocity resolved in
the tilted (axle-aligned) frame, ``sigma`` is the axial speed of the point
mass and ``r`` its position along the axle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SingularTiltError, ValidationError

EPS_SING = 1e-6
TILT_LIMIT = math.pi / 2 - EPS_SING

WHEEL_STATE = ("omega1", "omega2", "omega3", "theta", "psi", "phi", "xG", "yG")
UNICYCLE_STATE = ("omega1", "omega2", "omega3", "theta", "sigma", "r", "psi", "phi", "xG", "yG")
WHEEL_INDEX = {name: i for i, name in enumerate(WHEEL_STATE)}
UNICYCLE_INDEX = {name: i for i, name in enumerate(UNICYCLE_STATE)}


@dataclass(frozen=True)
class PhysicalParams:
    """Wheel mass ``m`` [kg], point mass ``m0`` [kg], radius ``R`` [m], gravity ``g`` [m/s^2]."""

    m: float = 10.0
    m0: float = 5.0
    R: float = 0.3
    g: float = 9.81

    def __post_init__(self):
        for name in ("m", "m0", "R", "g"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
        if self.m <= 0:
            raise ParameterError(f"wheel mass m must be > 0, got {self.m}")
        if self.R <= 0:
            raise ParameterError(f"wheel radius R must be > 0, got {self.R}")
        if self.g <= 0:
            raise ParameterError(f"gravity g must be > 0, got {self.g}")
        if self.m0 < 0:
            raise ParameterError(f"point mass m0 must be >= 0, got {self.m0}")

    def with_m0(self, m0: float) -> "PhysicalParams":
        return PhysicalParams(self.m, m0, self.R, self.g)


TABLE_I = PhysicalParams(m=10.0, m0=5.0, R=0.3, g=9.81)


def wheel_state(**components) -> np.ndarray:
    """Build a wheel state from keyword components; omitted entries are zero."""
    return _named_state(WHEEL_INDEX, components)


def unicycle_state(**components) -> np.ndarray:
    return _named_state(UNICYCLE_INDEX, components)


def _named_state(index, components):
    x = np.zeros(len(index))
    for name, value in components.items():
        if name not in index:
            raise ValidationError(f"unknown state component {name!r}; expected one of {tuple(index)}")
        x[index[name]] = value
    return x


def check_tilt(theta: float) -> None:
    if not abs(theta) < TILT_LIMIT:
        raise SingularTiltError(theta, TILT_LIMIT)


def _split(state):
    x = np.asarray(state, dtype=float)
    if x.shape == (8,):
        w1, w2, w3, th, psi, phi, xg, yg = x
        return w1, w2, w3, th, 0.0, 0.0, psi, phi, xg, yg, False
    if x.shape == (10,):
        w1, w2, w3, th, sig, r, psi, phi, xg, yg = x
        return w1, w2, w3, th, sig, r, psi, phi, xg, yg, True
    raise ValidationError(f"state must have 8 (wheel) or 10 (unicycle) components, got shape {x.shape}")


# ---------------------------------------------------------------------------
# vector fields


def wheel_rhs(state, params: PhysicalParams) -> np.ndarray:
    """Time derivative of the 8-component wheel state."""
    w1, w2, w3, th, psi, phi, xg, yg = np.asarray(state, dtype=float)
    check_tilt(th)
    R, g = params.R, params.g
    s, c, t = math.sin(th), math.cos(th), math.tan(th)
    sp, cp = math.sin(psi), math.cos(psi)
    return np.array([
        1.2 * w2 * w3 - 0.2 * w3 * w3 * t + 0.8 * g / R * s,
        -2.0 / 3.0 * w1 * w3,
        -2.0 * w1 * w2 + w1 * w3 * t,
        w1,
        w3 / c,
        w2 - w3 * t,
        w1 * R * sp * c + w2 * R * cp,
        -w1 * R * cp * c + w2 * R * sp,
    ])


def _unicycle_field(w1, w2, w3, th, sig, r, psi, m, m0, R, g, u):
    s, c, t = math.sin(th), math.cos(th), math.tan(th)
    sp, cp = math.sin(psi), math.cos(psi)
    D1 = 5 * m * R * R + 4 * m0 * r * r
    D2 = 3 * m * R * R + 2 * m0 * R * R + 12 * m0 * r * r
    dw1 = (
        4 * w1 * w1 * m0 * R * r
        - w3 * w3 * (m * R * R + 4 * m0 * r * r) * t
        - 8 * w1 * sig * m0 * r
        + 2 * w2 * w3 * R * (3 * m * R + 2 * m0 * r * t)
        - 4 * m0 * g * r * c
        + 4 * m * g * R * s
        + 4 * R * u
    ) / D1
    dw2 = 2.0 / D2 * (
        -2 * w1 * w2 * m0 * R * r
        - w1 * w3 * (m * R * R + m0 * R * R + 4 * m0 * r * r)
        + 2 * w3 * sig * m0 * R
    )
    dw3 = (
        -2 * w1 * w2 * R * R * (3 * m + 2 * m0)
        + w1 * w3 * (3 * m * R * R * t + 2 * m0 * (R * R * t + 2 * R * r + 6 * r * r * t))
        - 24 * w3 * sig * m0 * r
    ) / D2
    # Axial equation over the (omega1, sigma) mass block determinant D1; the
    # Coriolis coupling carries m0*R*r and the control term 1/m0 scaling.
    dsig = (
        w1 * w1 * (5 * m * R * R + 4 * m0 * (R * R + r * r)) * r
        + w3 * w3 * (5 * m * R * R * r - 4 * m0 * R * r * r * t + 4 * m0 * r ** 3 - m * R ** 3 * t)
        - 8 * w1 * sig * m0 * R * r
        + w2 * w3 * R * (m * R * R + 4 * m0 * (R * r * t - r * r))
        - (m * R * R + 4 * m0 * r * r) * g * s
        - 4 * m0 * g * R * r * c
    ) / D1
    if u:
        dsig += (5 * m / m0 * R * R + 4 * R * R + 4 * r * r) * u / D1
    return np.array([
        dw1,
        dw2,
        dw3,
        w1,
        dsig,
        sig,
        w3 / c,
        w2 - w3 * t,
        w1 * R * sp * c + w2 * R * cp,
        -w1 * R * cp * c + w2 * R * sp,
    ])


def unicycle_rhs(state, params: PhysicalParams, u: float = 0.0) -> np.ndarray:
    """Time derivative of the 10-component unicycle state under axial force ``u`` [N].

    The field is control affine: ``unicycle_rhs(x, p, u) = f(x) + g(x) u``.
    """
    if params.m0 <= 0:
        raise ParameterError("unicycle_rhs needs m0 > 0; use wheel_rhs for the bare wheel")
    w1, w2, w3, th, sig, r, psi, phi, xg, yg = np.asarray(state, dtype=float)
    check_tilt(th)
    return _unicycle_field(w1, w2, w3, th, sig, r, psi, params.m, params.m0, params.R, params.g, float(u))


def unicycle_input_vector(state, params: PhysicalParams) -> np.ndarray:
    """``g(x)`` of the control-affine form (only omega1 and sigma rows are nonzero)."""
    if params.m0 <= 0:
        raise ParameterError("input vector is undefined for m0 = 0")
    x = np.asarray(state, dtype=float)
    check_tilt(x[3])
    m, m0, R = params.m, params.m0, params.R
    r = x[5]
    D1 = 5 * m * R * R + 4 * m0 * r * r
    out = np.zeros(10)
    out[0] = 4 * R / D1
    out[4] = (5 * m / m0 * R * R + 4 * R * R + 4 * r * r) / D1
    return out


def unicycle_limit_rhs(state, params: PhysicalParams) -> np.ndarray:
    """Unicycle field with the point mass removed (m0 -> 0) and no input.

    Every m0-weighted coupling cancels, so the first four and last four
    components reproduce the wheel; ``sigma``/``r`` describe a massless bead.
    """
    w1, w2, w3, th, sig, r, psi, phi, xg, yg = np.asarray(state, dtype=float)
    check_tilt(th)
    return _unicycle_field(w1, w2, w3, th, sig, r, psi, params.m, 0.0, params.R, params.g, 0.0)


def wheel_limit_check(state, params: PhysicalParams) -> np.ndarray:
    """Residual (8-vector) between the massless unicycle field and the wheel field."""
    x = np.asarray(state, dtype=float)
    if x.shape != (10,):
        raise ValidationError("wheel_limit_check expects a 10-component unicycle state")
    limit = unicycle_limit_rhs(x, params)
    shared = np.concatenate([x[:4], x[6:]])
    wheel = wheel_rhs(shared, params)
    return np.concatenate([limit[:4], limit[6:]]) - wheel


# ---------------------------------------------------------------------------
# kinematics and diagnostics


def rotation_02(psi: float, theta: float) -> np.ndarray:
    """Rotation taking axle-frame components to ground-frame components."""
    sp, cp = math.sin(psi), math.cos(psi)
    s, c = math.sin(theta), math.cos(theta)
    return np.array([
        [cp, -sp * c, sp * s],
        [sp, cp * c, -cp * s],
        [0.0, s, c],
    ])


def reconstruct_generalized_velocities(state, params: PhysicalParams) -> tuple:
    """Generalized velocities from pseudo velocities.

    Returns ``(xG', yG', psi', theta', phi')`` for a wheel state and appends
    ``r' = sigma`` for a unicycle state.
    """
    w1, w2, w3, th, sig, r, psi, phi, xg, yg, is_uni = _split(state)
    check_tilt(th)
    R = params.R
    c = math.cos(th)
    sp, cp = math.sin(psi), math.cos(psi)
    out = (
        w1 * R * sp * c + w2 * R * cp,
        -w1 * R * cp * c + w2 * R * sp,
        w3 / c,
        w1,
        w2 - w3 * math.tan(th),
    )
    if is_uni:
        out = out + (sig,)
    return out


def center_velocity(state, params: PhysicalParams) -> np.ndarray:
    """Ground-frame velocity of the wheel centre (vertical part from zG = R cos(theta))."""
    gen = reconstruct_generalized_velocities(state, params)
    th = _split(state)[3]
    return np.array([gen[0], gen[1], -params.R * gen[3] * math.sin(th)])


def contact_point_velocity(state, params: PhysicalParams, v_G=None) -> np.ndarray:
    """Ground-frame velocity of the material wheel point at the contact.

    ``v_G`` overrides the reconstructed centre velocity (ground frame); with
    the default the rolling condition makes this vanish identically.
    """
    w1, w2, w3, th, sig, r, psi, phi, xg, yg, _ = _split(state)
    check_tilt(th)
    vG = center_velocity(state, params) if v_G is None else np.asarray(v_G, dtype=float)
    omega = np.array([w1, w2, w3])
    r_gp = np.array([0.0, 0.0, -params.R])
    return vG + rotation_02(psi, th) @ np.cross(omega, r_gp)


def mechanical_energy(state, params: PhysicalParams) -> float:
    """Kinetic plus gravitational energy [J], zero potential at ground level."""
    w1, w2, w3, th, sig, r, psi, phi, xg, yg, is_uni = _split(state)
    check_tilt(th)
    m, R, g = params.m, params.R, params.g
    vG = center_velocity(state, params)
    omega = np.array([w1, w2, w3])
    inertia = 0.25 * m * R * R * np.array([1.0, 2.0, 1.0])
    E = 0.5 * m * vG @ vG + 0.5 * omega @ (inertia * omega) + m * g * R * math.cos(th)
    if is_uni:
        m0 = params.m0
        # the frame rate differs from omega only along the axle, parallel to r_GA
        r_ga = np.array([0.0, r, 0.0])
        v_rel = np.cross(omega, r_ga) + np.array([0.0, sig, 0.0])
        vA = vG + rotation_02(psi, th) @ v_rel
        E += 0.5 * m0 * vA @ vA + m0 * g * point_mass_height(th, r, R)
    return float(E)


def point_mass_height(theta: float, r: float, R: float) -> float:
    """Height of the axle point mass above the ground, ``R cos(theta) + r sin(theta)``."""
    return R * math.cos(theta) + r * math.sin(theta)


def state_point_mass_height(state, params: PhysicalParams) -> float:
    x = np.asarray(state, dtype=float)
    if x.shape != (10,):
        raise ValidationError("point mass height needs a unicycle state")
    return point_mass_height(x[3], x[5], params.R)
