"""Controllability, reduced models, references and pole placement for steering.

All linear models here are taken about straight rolling at pitch rate
``phi_dot`` with the point mass centred.  The controller is the output
feedback ``u = -K (y - y_des)`` with ``y`` a selection of the full state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynamics import UNICYCLE_INDEX, PhysicalParams
from .errors import ParameterError, UncontrollableError, ValidationError
from .linear import straight_rolling_state_matrix
from .numerics import (
    charpoly_exact,
    numerical_rank,
    poly_from_roots_exact,
    poly_roots,
    solve_linear_exact,
    to_fractions,
)


class ManeuverKind(enum.Enum):
    LANE_CHANGE = "LaneChange"
    TURN = "Turn"


LANE_CHANGE_OUTPUTS = ("omega1", "theta", "sigma", "r", "psi", "yG")
TURN_OUTPUTS = LANE_CHANGE_OUTPUTS[:5]
GAIN_NAMES = ("D_theta", "P_theta", "D_r", "P_r", "P_psi", "P_y")
GAIN_UNITS = ("N*s", "N", "N*s/m", "N/m", "N", "N/m")

# lateral offset used for the two reference speeds when none is given
DEFAULT_LANE_OFFSET = {1.0: 2.5, 5.0: 10.0}


def _outputs(kind: ManeuverKind):
    return LANE_CHANGE_OUTPUTS if kind is ManeuverKind.LANE_CHANGE else TURN_OUTPUTS


# ---------------------------------------------------------------------------
# linear model about straight rolling


def input_matrix(params: PhysicalParams, r_star: float = 0.0) -> np.ndarray:
    """Input column (10,) of the unicycle: nonzero in the omega1 and sigma rows."""
    if params.m0 <= 0:
        raise ParameterError("input matrix is undefined for m0 = 0 (no point mass to push)")
    m, m0, R = params.m, params.m0, params.R
    D1 = 5 * m * R * R + 4 * m0 * r_star * r_star
    B = np.zeros(10)
    B[0] = 4 * R / D1
    B[4] = (5 * m / m0 * R * R + 4 * R * R + 4 * r_star * r_star) / D1
    return B


def straight_rolling_model(phi_dot: float, params: PhysicalParams):
    """``(A, B)`` of the full 10-state linear model about straight rolling."""
    return straight_rolling_state_matrix(phi_dot, params), input_matrix(params)


def krylov_rank(M) -> int:
    """Numerical rank after scaling every nonzero column to unit length.

    Krylov columns grow like ``|A|**k``; without equilibration the relative
    rank threshold would discard the early columns at high speed.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    norms = np.linalg.norm(M, axis=0)
    keep = norms > 0
    if not np.any(keep):
        return 0
    return numerical_rank(M[:, keep] / norms[keep])


def controllability_matrix(A, B):
    """``[B, AB, ..., A^(n-1) B]`` and its (column-equilibrated) numerical rank."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("A must be square")
    blocks = [B]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    M = np.hstack(blocks)
    return M, krylov_rank(M)


def output_matrix(kind: ManeuverKind) -> np.ndarray:
    """0/1 selection of the controlled outputs from the 10-component state."""
    names = _outputs(ManeuverKind(kind))
    C = np.zeros((len(names), 10))
    for i, name in enumerate(names):
        C[i, UNICYCLE_INDEX[name]] = 1.0
    return C


def output_controllability(A, B, C) -> int:
    """Rank of ``[CB, CAB, ..., CA^(n-1)B]``."""
    M, _ = controllability_matrix(A, B)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.shape[1] != M.shape[0]:
        raise ValidationError(f"C has {C.shape[1]} columns, expected {M.shape[0]}")
    return krylov_rank(C @ M)


def tilt_yaw_relation(phi_dot: float) -> float:
    """Linear factor ``k`` in ``omega3 = k * theta`` about straight rolling."""
    return -2.0 * phi_dot


@dataclass(frozen=True)
class ReducedModel:
    A: np.ndarray
    B: np.ndarray
    labels: tuple
    phi_dot: float
    kind: ManeuverKind


def reduced_model(phi_dot: float, params: PhysicalParams, kind=ManeuverKind.LANE_CHANGE) -> ReducedModel:
    """Reachable dynamics of the steering outputs.

    ``omega3`` is eliminated through ``omega3 = -2 phi_dot theta``; the turn
    model drops ``yG``.
    """
    if params.m0 <= 0:
        raise ParameterError("reduced model needs m0 > 0")
    kind = ManeuverKind(kind)
    m, m0, R, g = params.m, params.m0, params.R, params.g
    A = np.zeros((6, 6))
    A[0, 1] = 4 * g / (5 * R) - 12 / 5 * phi_dot ** 2
    A[0, 3] = -4 * m0 * g / (5 * m * R * R)
    A[1, 0] = 1.0
    A[2, 1] = -(g / 5 + 2 * R / 5 * phi_dot ** 2)
    A[2, 3] = -4 * m0 * g / (5 * m * R)
    A[3, 2] = 1.0
    A[4, 1] = -2 * phi_dot
    A[5, 0] = -R
    A[5, 4] = R * phi_dot
    B = np.array([4 / (5 * m * R), 0.0, (5 * m + 4 * m0) / (5 * m * m0), 0.0, 0.0, 0.0])
    k = len(_outputs(kind))
    return ReducedModel(A[:k, :k].copy(), B[:k].copy(), _outputs(kind), float(phi_dot), kind)


# ---------------------------------------------------------------------------
# gains


@dataclass(frozen=True)
class GainVector:
    """Output-feedback gains ``K`` in the order of the output vector."""

    values: np.ndarray
    names: tuple
    units: tuple
    exact: tuple = field(default=(), repr=False, compare=False)

    def __len__(self):
        return len(self.values)

    def as_dict(self) -> dict:
        return {n: float(v) for n, v in zip(self.names, self.values)}

    @classmethod
    def from_values(cls, values) -> "GainVector":
        values = np.asarray(values, dtype=float).ravel()
        if values.size not in (5, 6):
            raise ValidationError("gain vector needs 5 (turn) or 6 (lane change) entries")
        k = values.size
        return cls(values, GAIN_NAMES[:k], GAIN_UNITS[:k], tuple(Fraction(float(v)) for v in values))


def _exact_charpoly_affine(A, b):
    """Coefficient map of ``K -> charpoly(A - b K)`` (affine for a single input)."""
    n = len(A)
    base = charpoly_exact(A)
    cols = []
    for j in range(n):
        Aj = [[A[i][k] - (b[i] if k == j else 0) for k in range(n)] for i in range(n)]
        pj = charpoly_exact(Aj)
        cols.append([pj[i] - base[i] for i in range(n)])
    M = [[cols[j][i] for j in range(n)] for i in range(n)]
    return base, M


def place_gains(reduced: ReducedModel, pole: float = -8.0) -> GainVector:
    """Gains putting every eigenvalue of ``A_r - B_r K`` at ``pole``.

    The closed-loop characteristic coefficients are affine in ``K``; the
    matching system is solved in rational arithmetic on the exact binary
    values of ``A_r`` and ``B_r``, so the placed root is exact before the
    final rounding of ``K`` to floats.
    """
    if not (math.isfinite(pole) and pole < 0):
        raise ValidationError(f"pole must be a finite negative number, got {pole!r}")
    n = reduced.A.shape[0]
    _, rank = controllability_matrix(reduced.A, reduced.B)
    if rank < n:
        raise UncontrollableError(f"reduced pair is not controllable (rank {rank} < {n})")
    A = to_fractions(reduced.A)
    b = to_fractions(reduced.B)
    base, M = _exact_charpoly_affine(A, b)
    target = poly_from_roots_exact([Fraction(pole)] * n)
    rhs = [target[i] - base[i] for i in range(n)]
    K = solve_linear_exact(M, rhs)
    return GainVector(np.array([float(k) for k in K]), GAIN_NAMES[:n], GAIN_UNITS[:n], tuple(K))


def closed_loop_charpoly_exact(A, B, C, gains: GainVector) -> list:
    """Exact ascending characteristic polynomial of ``A - B K C``.

    Uses the exact gains when available, otherwise the float gains.
    """
    K = list(gains.exact) if gains.exact else to_fractions(gains.values)
    Af, Bf, Cf = to_fractions(A), to_fractions(np.ravel(B)), to_fractions(C)
    n = len(Af)
    KC = [sum((K[i] * Cf[i][j] for i in range(len(K))), Fraction(0)) for j in range(n)]
    Acl = [[Af[i][j] - Bf[i] * KC[j] for j in range(n)] for i in range(n)]
    return charpoly_exact(Acl)


def closed_loop_eigenvalues(A, B, C, gains: GainVector) -> np.ndarray:
    """Eigenvalues of ``A - B K C`` from its exact characteristic polynomial.

    A six-fold root is perturbed by ~1e-2 in a floating-point eigensolve; the
    exact polynomial plus cluster refinement resolves it to working accuracy.
    """
    coeffs = closed_loop_charpoly_exact(A, B, C, gains)
    zeros = 0
    while zeros < len(coeffs) - 1 and coeffs[zeros] == 0:
        zeros += 1
    rest = np.array([float(c) for c in coeffs[zeros:]])
    roots = poly_roots(rest) if rest.size > 1 else np.zeros(0, dtype=complex)
    return np.concatenate([np.zeros(zeros, dtype=complex), roots])


def feedback(gains: GainVector, y, y_des) -> float:
    """``u = -K (y - y_des)`` [N]."""
    y = np.asarray(y, dtype=float).ravel()
    y_des = np.asarray(y_des, dtype=float).ravel()
    if not (y.size == y_des.size == len(gains.values)):
        raise ValidationError(
            f"dimension mismatch: {len(gains.values)} gains, {y.size} outputs, {y_des.size} references"
        )
    return float(-(gains.values @ (y - y_des)))


# ---------------------------------------------------------------------------
# maneuvers and references


@dataclass(frozen=True)
class ManeuverSpec:
    kind: ManeuverKind
    speed: float
    amplitude: float | None = None
    t1: float = 2.0
    t2: float = 7.0
    t_end: float = 10.0
    pole: float = -8.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ManeuverKind(self.kind))
        if not (math.isfinite(self.speed) and self.speed > 0):
            raise ValidationError(f"speed must be > 0, got {self.speed!r}")
        if not (0 <= self.t1 < self.t2 < self.t_end):
            raise ValidationError("timing must satisfy 0 <= t1 < t2 < t_end")
        if not (math.isfinite(self.pole) and self.pole < 0):
            raise ValidationError(f"pole must be negative, got {self.pole!r}")
        if self.kind is ManeuverKind.LANE_CHANGE:
            if self.amplitude is None:
                if float(self.speed) not in DEFAULT_LANE_OFFSET:
                    raise ValidationError(
                        f"lane offset L must be given for speed {self.speed} m/s "
                        f"(defaults exist for {sorted(DEFAULT_LANE_OFFSET)} m/s)"
                    )
                object.__setattr__(self, "amplitude", DEFAULT_LANE_OFFSET[float(self.speed)])
            if not (math.isfinite(self.amplitude) and self.amplitude > 0):
                raise ValidationError("lane offset L must be > 0")
        else:
            if self.amplitude is None:
                object.__setattr__(self, "amplitude", math.pi / 2)
            if not (math.isfinite(self.amplitude) and self.amplitude > 0):
                raise ValidationError("turn angle magnitude must be > 0")

    def phi_dot(self, params: PhysicalParams) -> float:
        return self.speed / params.R


def _blend(t, t1, t2, t_end, final):
    if not (-1e-12 <= t <= t_end + 1e-12):
        raise ValidationError(f"reference time {t!r} outside [0, {t_end}]")
    if t < t1:
        return 0.0
    if t < t2:
        return 0.5 * final * (1.0 - math.cos(math.pi * (t - t1) / (t2 - t1)))
    return final


def reference_lane_change(t: float, L: float, t1: float = 2.0, t2: float = 7.0, t_end: float = 10.0) -> np.ndarray:
    """Desired outputs ``(omega1, theta, sigma, r, psi, yG)``; ``yG`` moves from 0 to ``-L``."""
    y = np.zeros(6)
    y[5] = _blend(t, t1, t2, t_end, -L)
    return y


def reference_turn(t: float, angle: float = math.pi / 2, t1: float = 2.0, t2: float = 7.0,
                   t_end: float = 10.0) -> np.ndarray:
    """Desired outputs ``(omega1, theta, sigma, r, psi)``; ``psi`` moves from 0 to ``-angle`` (right turn)."""
    y = np.zeros(5)
    y[4] = _blend(t, t1, t2, t_end, -angle)
    return y


def reference(spec: ManeuverSpec, t: float) -> np.ndarray:
    if spec.kind is ManeuverKind.LANE_CHANGE:
        return reference_lane_change(t, spec.amplitude, spec.t1, spec.t2, spec.t_end)
    return reference_turn(t, spec.amplitude, spec.t1, spec.t2, spec.t_end)


@dataclass(frozen=True)
class Design:
    """Everything the gain report needs for one maneuver."""

    spec: ManeuverSpec
    reduced: ReducedModel
    gains: GainVector
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    controllability_rank: int
    output_rank: int
    closed_loop: np.ndarray


def design(spec: ManeuverSpec, params: PhysicalParams) -> Design:
    phi_dot = spec.phi_dot(params)
    red = reduced_model(phi_dot, params, spec.kind)
    gains = place_gains(red, spec.pole)
    A, B = straight_rolling_model(phi_dot, params)
    C = output_matrix(spec.kind)
    _, rank = controllability_matrix(A, B)
    orank = output_controllability(A, B, C)
    lam = closed_loop_eigenvalues(A, B, C, gains)
    return Design(spec, red, gains, A, B, C, rank, orank, lam)
