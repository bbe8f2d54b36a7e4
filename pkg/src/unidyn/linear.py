"""Linearization about steady states, characteristic roots and stability maps."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import TILT_LIMIT, PhysicalParams, check_tilt, point_mass_height
from .errors import (
    DomainError,
    ParameterError,
    ResidualError,
    SteadyStateError,
    ValidationError,
)
from .numerics import eigenvalues
from .steady import (
    SteadyState,
    SteadyStateKind,
    is_unicycle_steady,
    unicycle_solve,
    wheel_pitch_rate,
    wheel_steady_residual,
)

EPS_ROOT = 1e-7

__all__ = [
    "EPS_ROOT",
    "LinearModel",
    "StabilityVerdict",
    "Verdict",
    "classify",
    "critical_tilt_angle",
    "eigenvalues",
    "linearize",
    "root_locus_straight_rolling",
    "stability_map",
    "straight_rolling_quartic",
    "unicycle_char_quartic",
    "unicycle_state_matrix",
    "unicycle_straight_critical",
    "wheel_char_roots",
    "wheel_critical_yaw_rates",
    "wheel_spin_critical",
    "wheel_state_matrix",
    "wheel_straight_critical",
]


class StabilityVerdict(enum.Enum):
    NEUTRALLY_STABLE = "NeutrallyStable"
    UNSTABLE = "Unstable"


@dataclass(frozen=True)
class Verdict:
    verdict: StabilityVerdict
    witness: complex

    @property
    def stable(self) -> bool:
        return self.verdict is StabilityVerdict.NEUTRALLY_STABLE


@dataclass(frozen=True)
class LinearModel:
    A: np.ndarray
    B: np.ndarray | None
    about: SteadyState
    eval_time: float = 0.0


def classify(roots, eps_root: float = EPS_ROOT) -> Verdict:
    """Unstable iff some root has real part above ``eps_root``.

    The witness is the root with the largest real part.
    """
    roots = np.asarray(roots, dtype=complex).ravel()
    if roots.size == 0:
        raise ValidationError("classify needs at least one root")
    k = int(np.argmax(roots.real))
    worst = complex(roots[k])
    if worst.real > eps_root:
        return Verdict(StabilityVerdict.UNSTABLE, worst)
    return Verdict(StabilityVerdict.NEUTRALLY_STABLE, worst)


# ---------------------------------------------------------------------------
# wheel


def wheel_state_matrix(ss: SteadyState, params: PhysicalParams, t: float = 0.0, psi0: float = 0.0) -> np.ndarray:
    """8x8 Jacobian of the wheel field along the steady motion at time ``t``."""
    th, pd, fd, R, g = ss.theta_star, ss.psi_dot_star, ss.phi_dot_star, params.R, params.g
    check_tilt(th)
    s, c, tn = math.sin(th), math.cos(th), math.tan(th)
    psi = pd * t + psi0
    sp, cp = math.sin(psi), math.cos(psi)
    A = np.zeros((8, 8))
    A[0, 1] = 1.2 * pd * c
    A[0, 2] = 0.8 * pd * s + 1.2 * fd
    A[0, 3] = -0.2 * pd * pd + 0.8 * g / R * c
    A[1, 0] = -2.0 / 3.0 * pd * c
    A[2, 0] = -pd * s - 2 * fd
    A[3, 0] = 1.0
    A[4, 2] = 1 / c
    A[4, 3] = pd * tn
    A[5, 1] = 1.0
    A[5, 2] = -tn
    A[5, 3] = -pd / c
    A[6, 0] = R * sp * c
    A[6, 1] = R * cp
    A[6, 4] = -R * sp * (pd * s + fd)
    A[7, 0] = -R * cp * c
    A[7, 1] = R * sp
    A[7, 4] = R * cp * (pd * s + fd)
    return A


def wheel_radicand(theta, psi_dot, phi_dot, params: PhysicalParams) -> float:
    """``lambda**2`` of the single nontrivial root pair of the wheel."""
    s = math.sin(theta)
    return (
        4 * params.g / (5 * params.R) * math.cos(theta)
        - (psi_dot ** 2 + 2.8 * psi_dot * phi_dot * s + 2.4 * phi_dot ** 2)
    )


def wheel_char_roots(ss: SteadyState, params: PhysicalParams) -> np.ndarray:
    """Closed-form spectrum: the pair ``+-sqrt(radicand)`` followed by six zeros."""
    rad = wheel_radicand(ss.theta_star, ss.psi_dot_star, ss.phi_dot_star, params)
    lam = np.sqrt(complex(rad))
    return np.array([lam, -lam] + [0j] * 6)


def critical_tilt_angle() -> float:
    """Tilt beyond which no turning-rolling wheel state is unstable [rad]."""
    return math.asin(math.sqrt(12 / 19 - 9 * math.sqrt(5) / 38))


def wheel_critical_yaw_rates(theta: float, params: PhysicalParams) -> tuple:
    """Yaw rates ``(low, high)`` bounding the unstable band at tilt ``theta``.

    With the pitch rate eliminated, the radicand is a quadratic in
    ``x = psi_dot**2`` whose roots are
    ``2g/(5Rc(3-2s^2)) * (3(1-2s^2) -+ sqrt(76 s^4 - 96 s^2 + 9))``.
    """
    V = critical_tilt_angle()
    if abs(theta) > V:
        raise DomainError(f"|theta| = {abs(theta):.9g} rad exceeds the critical tilt {V:.9g} rad; no critical yaw rate")
    s2 = math.sin(theta) ** 2
    c = math.cos(theta)
    disc = max(76 * s2 * s2 - 96 * s2 + 9, 0.0)
    k = 2 * params.g / (5 * params.R * c * (3 - 2 * s2))
    lo = k * (3 * (1 - 2 * s2) - math.sqrt(disc))
    hi = k * (3 * (1 - 2 * s2) + math.sqrt(disc))
    return math.sqrt(max(lo, 0.0)), math.sqrt(hi)


def wheel_straight_critical(params: PhysicalParams) -> float:
    """Critical pitch rate of straight rolling [rad/s]; multiply by R for the speed."""
    return math.sqrt(params.g / (3 * params.R))


def wheel_spin_critical(params: PhysicalParams) -> float:
    return math.sqrt(4 * params.g / (5 * params.R))


# ---------------------------------------------------------------------------
# unicycle


def unicycle_state_matrix(ss: SteadyState, params: PhysicalParams, t: float = 0.0, psi0: float = 0.0,
                          tol: float = 1e-9) -> np.ndarray:
    """10x10 Jacobian of the unforced unicycle field along a steady motion."""
    th, pd, fd, r = ss.theta_star, ss.psi_dot_star, ss.phi_dot_star, ss.r_star
    check_tilt(th)
    if not is_unicycle_steady(th, pd, fd, r, params, tol):
        raise ResidualError(
            f"(theta, psi_dot, phi_dot, r) = ({th!r}, {pd!r}, {fd!r}, {r!r}) is not a unicycle steady state"
        )
    m, m0, R, g = params.m, params.m0, params.R, params.g
    s, c, tn = math.sin(th), math.cos(th), math.tan(th)
    D1 = 5 * m * R * R + 4 * m0 * r * r
    D2 = 3 * m * R * R + 2 * m0 * R * R + 12 * m0 * r * r
    A = np.zeros((10, 10))
    A[0, 1] = 2 * R * pd / D1 * (3 * m * R * c + 2 * m0 * r * s)
    A[0, 2] = 2 / D1 * (
        2 * m * R * R * pd * s + 3 * m * R * R * fd + 2 * m0 * R * r * pd * s * tn
        + 2 * m0 * R * r * fd * tn - 4 * m0 * r * r * pd * s
    )
    A[0, 3] = 4 * m0 * R * r * pd * (fd + pd * s) / (D1 * c) + (
        -m * R * R * pd * pd + 4 * m * g * R * c - 4 * m0 * r * r * pd * pd + 4 * m0 * g * r * s
    ) / D1
    A[0, 5] = 4 * m0 / (D1 * D1) * (
        5 * m * R ** 3 * pd * pd * s * s + 5 * m * R ** 3 * pd * fd * s
        - 20 * m * R * R * r * pd * pd * s * c - 12 * m * R * R * r * pd * fd * c
        - 5 * m * g * R * R * c - 4 * m0 * R * r * r * pd * pd * s * s
        - 4 * m0 * R * r * r * pd * fd * s - 8 * m * g * R * r * s + 4 * m0 * g * r * r * c
    )
    A[1, 0] = -(
        2 * m * R * R * pd * c + 2 * m0 * R * R * pd * c + 4 * m0 * R * r * pd * s
        + 4 * m0 * R * r * fd + 8 * m0 * r * r * pd * c
    ) / D2
    A[1, 4] = 4 * m0 * R * pd * c / D2
    A[2, 0] = (
        -3 * m * R * R * pd * s - 2 * m0 * R * R * pd * s - 6 * m * R * R * fd
        - 4 * m0 * R * R * fd + 4 * m0 * R * r * pd * c + 12 * m0 * r * r * pd * s
    ) / D2
    A[2, 4] = -24 * m0 * r * pd * c / D2
    A[3, 0] = 1.0
    A[4, 1] = R * pd * c / D1 * (m * R * R + 4 * m0 * R * r * tn - 4 * m0 * r * r)
    A[4, 2] = (
        m * R ** 3 * fd - m * R ** 3 * pd * s + 10 * m * R * R * r * pd * c
        + 4 * m0 * R * R * r * pd * s * tn + 4 * m0 * R * R * r * fd * tn
        - 12 * m0 * R * r * r * pd * s - 4 * m0 * R * fd * r * r + 8 * m0 * r ** 3 * pd * c
    ) / D1
    # the m0*R*r^2*psi_dot^2 term carries a single power of cos(theta)
    A[4, 3] = (
        -2 * m * R ** 3 * pd * pd * c + 8 * m0 * R * R * r * pd * pd * s + 8 * m0 * R * R * r * pd * fd
        - 2 * m * g * R * R * c * c - 8 * m0 * R * r * r * pd * pd * c
        + 8 * m0 * g * R * r * s * c - 8 * m0 * g * r * r * c * c
    ) / (2 * D1 * c)
    A[4, 5] = (
        25 * m * m * R ** 4 * pd * pd * c * c + 20 * m * m0 * R ** 4 * pd * pd * s * s
        + 20 * m * m0 * R ** 4 * pd * fd * s - 80 * m * m0 * R ** 3 * r * pd * pd * s * c
        - 48 * m * m0 * R ** 3 * r * pd * fd * c - 20 * m * m0 * g * R ** 3 * c
        + 40 * m * m0 * R * R * r * r * pd * pd * c * c - 16 * m0 * m0 * R * R * r * r * pd * pd * s * s
        - 16 * m0 * m0 * R * R * r * r * pd * fd * s - 32 * m * m0 * g * R * R * r * s
        + 16 * m0 * m0 * g * R * r * r * c + 16 * m0 * m0 * r ** 4 * pd * pd * c * c
    ) / (D1 * D1)
    A[5, 4] = 1.0
    A[6, 2] = 1 / c
    A[6, 3] = pd * tn
    A[7, 1] = 1.0
    A[7, 2] = -tn
    A[7, 3] = -pd / c
    psi = pd * t + psi0
    sp, cp = math.sin(psi), math.cos(psi)
    A[8, 0] = R * sp * c
    A[8, 1] = R * cp
    A[8, 6] = -R * (pd * s + fd) * sp
    A[9, 0] = -R * cp * c
    A[9, 1] = R * sp
    A[9, 6] = R * (pd * s + fd) * cp
    return A


def unicycle_char_quartic(ss: SteadyState, params: PhysicalParams) -> np.ndarray:
    """Nontrivial factor of the characteristic polynomial, ``(c, b, a)`` ascending in ``lambda**2``.

    Scaled so that ``a = 5 m R**2``; the full polynomial is
    ``(a lambda^4 + b lambda^2 + c) lambda^6``.
    """
    A = unicycle_state_matrix(ss, params)
    a12, a13, a14, a16 = A[0, 1], A[0, 2], A[0, 3], A[0, 5]
    a21, a25, a31, a35 = A[1, 0], A[1, 4], A[2, 0], A[2, 4]
    a52, a53, a54, a56 = A[4, 1], A[4, 2], A[4, 3], A[4, 5]
    lin = a12 * a21 + a13 * a31 + a14 + a25 * a52 + a35 * a53 + a56
    const = (
        a12 * a21 * a35 * a53 + a12 * a21 * a56 - a12 * a31 * a25 * a53 - a12 * a25 * a54
        + a13 * a31 * a25 * a52 + a13 * a31 * a56 - a13 * a21 * a35 * a52 - a13 * a35 * a54
        + a14 * a25 * a52 + a14 * a35 * a53 + a14 * a56
        - a16 * a21 * a52 - a16 * a31 * a53 - a16 * a54
    )
    a = 5 * params.m * params.R ** 2
    return np.array([a * const, -a * lin, a])


def straight_rolling_quartic(phi_dot: float, params: PhysicalParams) -> tuple:
    """``(a, b, c)`` of ``a lambda^4 + b lambda^2 + c`` for straight rolling."""
    m, m0, R, g = params.m, params.m0, params.R, params.g
    a = 5 * m * R * R
    b = 12 * phi_dot ** 2 * m * R * R + 4 * (m0 - m) * g * R
    c = 4 * m0 * g * (2 * phi_dot ** 2 * R - g)
    return a, b, c


def unicycle_straight_critical(params: PhysicalParams) -> float:
    """Critical pitch rate of the unforced unicycle [rad/s] (independent of the masses)."""
    if params.m0 <= 0:
        raise ParameterError("unicycle critical pitch rate needs m0 > 0")
    return math.sqrt(params.g / (2 * params.R))


def straight_rolling_branches(phi_dot: float, params: PhysicalParams) -> np.ndarray:
    """Four nontrivial roots ``[l1, l2, l3, l4]`` of the straight-rolling quartic.

    ``l1,2`` come from the larger-magnitude root of the quadratic in
    ``lambda**2`` (the wheel-like pair), ``l3,4`` from the smaller one, which
    vanishes at the critical rate.  The quadratic is solved in the
    cancellation-free form ``q = -(b + sgn(b) sqrt(D)) / 2``.
    """
    a, b, c = straight_rolling_quartic(phi_dot, params)
    D = complex(b * b - 4 * a * c)
    q = -(b + math.copysign(1.0, b) * np.sqrt(D)) / 2
    big = q / a
    small = c / q if q != 0 else 0j
    l1 = np.sqrt(complex(big))
    l3 = np.sqrt(complex(small))
    return np.array([l1, -l1, l3, -l3])


def linearize(ss: SteadyState, params: PhysicalParams, t: float = 0.0) -> LinearModel:
    """State (and, for the unicycle, input) matrix about ``ss``."""
    if ss.model == "wheel":
        return LinearModel(wheel_state_matrix(ss, params, t), None, ss, t)
    from .control import input_matrix

    A = unicycle_state_matrix(ss, params, t)
    return LinearModel(A, input_matrix(params, ss.r_star), ss, t)


# ---------------------------------------------------------------------------
# maps and sweeps


@dataclass(frozen=True)
class GridSpec:
    theta_min: float
    theta_max: float
    theta_n: int
    psi_dot_min: float
    psi_dot_max: float
    psi_dot_n: int

    def __post_init__(self):
        for name in ("theta_min", "theta_max", "psi_dot_min", "psi_dot_max"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"grid bound {name} must be finite")
        if self.theta_n < 1 or self.psi_dot_n < 1:
            raise ValidationError("grid must have at least one point per axis")
        if self.theta_max < self.theta_min or self.psi_dot_max < self.psi_dot_min:
            raise ValidationError("grid bounds must satisfy min <= max")
        if max(abs(self.theta_min), abs(self.theta_max)) >= TILT_LIMIT:
            raise ValidationError(f"grid tilt must stay inside |theta| < {TILT_LIMIT!r} rad")

    def thetas(self) -> np.ndarray:
        return np.linspace(self.theta_min, self.theta_max, self.theta_n)

    def psi_dots(self) -> np.ndarray:
        return np.linspace(self.psi_dot_min, self.psi_dot_max, self.psi_dot_n)


@dataclass
class StabilityMap:
    """Row-major (theta outer, psi_dot inner) arrays of one value per grid point."""

    model: str
    theta: np.ndarray
    psi_dot: np.ndarray
    phi_dot: np.ndarray
    r: np.ndarray
    label: np.ndarray
    max_real_root: np.ndarray


UNDEFINED = "Undefined"
INFEASIBLE = "Infeasible"


def _wheel_point(theta, psi_dot, params, eps_root):
    if psi_dot == 0.0:
        if theta != 0.0:
            return math.nan, math.nan, UNDEFINED, math.nan
        # theta = 0, psi_dot = 0: standing disc; pitch rate is free, report it at rest
        fd = 0.0
    else:
        fd = wheel_pitch_rate(theta, psi_dot, params)
    rad = wheel_radicand(theta, psi_dot, fd, params)
    lam = np.sqrt(complex(rad))
    v = classify([lam, -lam, 0j], eps_root)
    return fd, 0.0, v.verdict.value, max(v.witness.real, 0.0)


def essential_block(ss: SteadyState, params: PhysicalParams) -> np.ndarray:
    """Block of the unicycle state matrix that carries the nonzero spectrum.

    With ``m0 = 0`` the bead rows no longer feed back into the wheel and are
    dropped, which leaves the wheel's 4x4 block.
    """
    A = unicycle_state_matrix(ss, params)
    k = 6 if params.m0 > 0 else 4
    return A[:k, :k]


def _unicycle_point(theta, psi_dot, params, eps_root):
    try:
        if psi_dot == 0.0:
            if theta != 0.0:
                return math.nan, math.nan, UNDEFINED, math.nan
            fd, r = 0.0, 0.0
        else:
            fd, r = unicycle_solve(theta, psi_dot, params)
        if not (math.isfinite(fd) and math.isfinite(r)):
            return math.nan, math.nan, UNDEFINED, math.nan
        if point_mass_height(theta, r, params.R) <= 0:
            return fd, r, INFEASIBLE, math.nan
        ss = SteadyState(SteadyStateKind.TURNING_ROLLING, theta, psi_dot, fd, r, True, "unicycle")
        lam = eigenvalues(essential_block(ss, params), check=False)
    except SteadyStateError:
        return math.nan, math.nan, UNDEFINED, math.nan
    v = classify(lam, eps_root)
    return fd, r, v.verdict.value, max(v.witness.real, 0.0)


def _resolve_threads(threads):
    if threads is None:
        env = os.environ.get("UNIDYN_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise ValidationError("thread count must be >= 1")
    return threads


def stability_map(grid: GridSpec, model: str, params: PhysicalParams, threads: int | None = None,
                  eps_root: float = EPS_ROOT) -> StabilityMap:
    """Per-point stability verdicts over a (theta, psi_dot) grid.

    Wheel points use the closed-form root pair, unicycle points a numerical
    eigensolve of the essential block.  Points without a turning-rolling
    steady state are labeled ``Undefined``; unicycle states with the mass
    below ground are ``Infeasible``.  Results do not depend on ``threads``.
    """
    if model not in ("wheel", "unicycle"):
        raise ValidationError(f"model must be 'wheel' or 'unicycle', got {model!r}")
    point = _wheel_point if model == "wheel" else _unicycle_point
    thetas, rates = grid.thetas(), grid.psi_dots()

    def row(th):
        return [point(float(th), float(pd), params, eps_root) for pd in rates]

    n = _resolve_threads(threads)
    if n == 1:
        rows = [row(th) for th in thetas]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(row, thetas))
    flat = [p for r in rows for p in r]
    TH, PD = np.meshgrid(thetas, rates, indexing="ij")
    return StabilityMap(
        model=model,
        theta=TH.ravel(),
        psi_dot=PD.ravel(),
        phi_dot=np.array([p[0] for p in flat]),
        r=np.array([p[1] for p in flat]),
        label=np.array([p[2] for p in flat], dtype=object),
        max_real_root=np.array([p[3] for p in flat]),
    )


@dataclass
class RootLocus:
    """One row per (model, phi_dot, branch)."""

    model: list
    phi_dot: np.ndarray
    branch: np.ndarray
    root: np.ndarray


def root_locus_straight_rolling(phi_dots, params: PhysicalParams, m0_values=None) -> RootLocus:
    """Nontrivial straight-rolling roots for the wheel and each unicycle point mass.

    Wheel rows carry branches 1, 2; unicycle rows branches 1..4 with 3, 4
    the pair that decides criticality.
    """
    phi_dots = np.asarray(phi_dots, dtype=float).ravel()
    if phi_dots.size == 0:
        raise ValidationError("root-locus sweep is empty")
    if not np.all(np.isfinite(phi_dots)):
        raise ValidationError("root-locus sweep must be finite")
    if m0_values is None:
        m0_values = [params.m0]
    models, fds, branches, roots = [], [], [], []
    for fd in phi_dots:
        lam = np.sqrt(complex(4 * params.g / (5 * params.R) - 2.4 * fd * fd))
        for k, z in enumerate((lam, -lam), start=1):
            models.append("wheel")
            fds.append(fd)
            branches.append(k)
            roots.append(z)
    for m0 in m0_values:
        p = params.with_m0(float(m0))
        if p.m0 <= 0:
            raise ValidationError("unicycle root-locus point mass must be > 0")
        tag = f"unicycle_m0={p.m0:g}"
        for fd in phi_dots:
            for k, z in enumerate(straight_rolling_branches(float(fd), p), start=1):
                models.append(tag)
                fds.append(fd)
                branches.append(k)
                roots.append(z)
    return RootLocus(models, np.array(fds), np.array(branches), np.array(roots, dtype=complex))


def straight_rolling_state_matrix(phi_dot: float, params: PhysicalParams) -> np.ndarray:
    """Unicycle state matrix about straight rolling at pitch rate ``phi_dot``."""
    ss = SteadyState(SteadyStateKind.STRAIGHT_ROLLING, 0.0, 0.0, float(phi_dot), 0.0, True, "unicycle")
    return unicycle_state_matrix(ss, params)


def stability_crossing(matrix_of, lo: float, hi: float, eps_root: float = EPS_ROOT, xtol: float = 1e-12) -> float:
    """Bisect the rate where the numerical spectrum of ``matrix_of(rate)`` changes verdict."""
    def unstable(x):
        return not classify(eigenvalues(matrix_of(x), check=False), eps_root).stable

    ulo, uhi = unstable(lo), unstable(hi)
    if ulo == uhi:
        raise ValidationError(f"no verdict change between {lo!r} and {hi!r}")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if unstable(mid) == ulo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def wheel_residual_ok(ss: SteadyState, params: PhysicalParams, tol: float = 1e-9) -> bool:
    return abs(wheel_steady_residual(ss.theta_star, ss.psi_dot_star, ss.phi_dot_star, params)) <= tol * max(
        1.0, params.g / params.R
    )
