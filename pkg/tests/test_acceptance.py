"""One PASS/FAIL line per acceptance criterion, printed to the terminal.

Run with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from unidyn.control import (
    GAIN_NAMES,
    ManeuverKind,
    ManeuverSpec,
    controllability_matrix,
    design,
    output_controllability,
    output_matrix,
    place_gains,
    reduced_model,
    straight_rolling_model,
)
from unidyn.dynamics import TABLE_I, unicycle_limit_rhs, unicycle_rhs, unicycle_state, wheel_rhs, wheel_state
from unidyn.errors import ExcludedYawRateError
from unidyn.linear import (
    GridSpec,
    classify,
    critical_tilt_angle,
    stability_crossing,
    stability_map,
    straight_rolling_state_matrix,
    unicycle_state_matrix,
    unicycle_straight_critical,
    wheel_spin_critical,
    wheel_state_matrix,
    wheel_straight_critical,
)
from unidyn.numerics import eigenvalues, fd_jacobian
from unidyn.simulate import IntegratorConfig, integrate, run_maneuver, simulate
from unidyn.steady import (
    SteadyState,
    SteadyStateKind,
    embed_unicycle,
    embed_wheel,
    unicycle_steady_state,
    wheel_steady_state,
)

LANE, TURN = ManeuverKind.LANE_CHANGE, ManeuverKind.TURN
P = TABLE_I

PRINTED_GAINS = {
    (LANE, 1.0): (-2042.70, -7637.29, 2116.86, 11942.04, 3382.02, 4509.36),
    (LANE, 5.0): (75.51, 777.28, 99.52, 405.60, 676.4, 180.37),
    (TURN, 1.0): (-776.65, -2776.88, 882.53, 4881.84, 536.67),
    (TURN, 5.0): (106.44, -128.32, 41.49, 73.69, 112.73),
}


class Report:
    def __init__(self, number, title):
        self.number, self.title = number, title
        self.failed = []
        self.notes = []
        self.start = time.perf_counter()

    def check(self, name, ok, detail=""):
        ok = bool(ok)
        if not ok:
            self.failed.append(f"{name} ({detail})" if detail else name)
        elif detail:
            self.notes.append(f"{name}: {detail}")
        return ok

    def within(self, name, seconds):
        elapsed = time.perf_counter() - self.start
        self.check(f"{name} runtime", elapsed < seconds, f"{elapsed:.2f} s of {seconds:g} s")

    def line(self):
        status = "FAIL" if self.failed else "PASS"
        body = "; ".join(self.failed) if self.failed else "; ".join(self.notes)
        return f"criterion {self.number}: {status} {self.title}" + (f" | {body}" if body else "")


def _emit(report, capsys=None):
    text = report.line()
    if capsys is None:
        print(text)
    else:
        with capsys.disabled():
            print("\n" + text)
    assert not report.failed, text


def _random_wheel(rng, n):
    return [wheel_steady_state(rng.uniform(-1.2, 1.2), rng.uniform(0.3, 10) * rng.choice([-1, 1]), P)
            for _ in range(n)]


def _random_unicycle(rng, n):
    out = []
    while len(out) < n:
        try:
            ss = unicycle_steady_state(rng.uniform(-1.0, 1.0), rng.uniform(0.3, 8) * rng.choice([-1, 1]), P)
        except ExcludedYawRateError:
            continue
        if ss.feasible and abs(ss.r_star) < 2.0:
            out.append(ss)
    return out


def _stable(A):
    return classify(eigenvalues(A)).stable


def criterion_1(capsys=None):
    rep = Report(1, "critical tilt angle")
    deg = math.degrees(critical_tilt_angle())
    rep.check("V = 18.62 deg", abs(deg - 18.62) <= 0.01, f"{deg:.5f} deg")
    rep.within("V", 1.0)
    _emit(rep, capsys)


def criterion_2(capsys=None):
    rep = Report(2, "critical rates, closed form and eigenvalue bracketing")
    d = 1e-4

    def straight_wheel(fd):
        return wheel_state_matrix(SteadyState(SteadyStateKind.STRAIGHT_ROLLING, 0.0, 0.0, fd), P)

    def spin_wheel(w):
        return wheel_state_matrix(wheel_steady_state(0.0, w, P), P)

    cases = [
        ("wheel straight", wheel_straight_critical(P), math.sqrt(P.g / (3 * P.R)), 3.30151, straight_wheel),
        ("wheel spin", wheel_spin_critical(P), math.sqrt(4 * P.g / (5 * P.R)), 5.11468, spin_wheel),
        ("unicycle straight", unicycle_straight_critical(P), math.sqrt(P.g / (2 * P.R)), 4.04351,
         lambda fd: straight_rolling_state_matrix(fd, P)),
    ]
    for name, value, closed, quoted, matrix in cases:
        rep.check(f"{name} closed form", abs(value - closed) < 1e-12 and abs(value - quoted) < 5e-6, f"{value:.6f}")
        rep.check(f"{name} bracket", not _stable(matrix(value - d)) and _stable(matrix(value + d)))
        x = stability_crossing(matrix, value - 0.5, value + 0.5)
        rep.check(f"{name} crossing", abs(x - value) < d, f"{x:.8f}")
    v = unicycle_straight_critical(P) * P.R
    rep.check("v_crit", abs(v - 1.213) < 5e-4 and abs(v - 1.21) < 0.01, f"{v:.4f} m/s")
    rep.within("rates", 1.0)
    _emit(rep, capsys)


def criterion_3(capsys=None):
    rep = Report(3, "gain tables at pole -8")
    worst = 0.0
    for (kind, v), printed in PRINTED_GAINS.items():
        gains = place_gains(reduced_model(v / P.R, P, kind), -8.0).values
        for name, got, want in zip(GAIN_NAMES, gains, printed):
            rel = abs(got - want) / abs(want)
            if rel <= 5e-3:
                worst = max(worst, rel)
            rep.check(f"{kind.value} {v:g} m/s {name}", rel <= 5e-3, f"computed {got:.2f}, printed {want:.2f}")
        lam = design(ManeuverSpec(kind, v), P).closed_loop
        nonzero = lam[np.abs(lam) > 1e-6]
        rep.check(f"{kind.value} {v:g} m/s closed loop",
                  nonzero.size == len(printed) and np.max(np.abs(nonzero + 8.0)) < 1e-6)
    rep.notes.append(f"largest in-tolerance deviation {100 * worst:.3f}%")
    rep.within("gains", 1.0)
    _emit(rep, capsys)


def criterion_4(capsys=None):
    rep = Report(4, "controllability ranks")
    for v in (1.0, 5.0):
        fd = v / P.R
        A, B = straight_rolling_model(fd, P)
        M, rank = controllability_matrix(A, B)
        rep.check(f"{v:g} m/s rank", rank == 6, str(rank))
        # 1-based rows 2, 8, 9 vanish; row 3 = -2 phi_dot row 4
        rep.check(f"{v:g} m/s zero rows", all(np.all(M[i] == 0) for i in (1, 7, 8)))
        scale = np.max(np.abs(M[2]))
        rep.check(f"{v:g} m/s proportional rows", np.max(np.abs(M[2] + 2 * fd * M[3])) <= 1e-12 * scale)
        rep.check(f"{v:g} m/s output ranks",
                  output_controllability(A, B, output_matrix(LANE)) == 6
                  and output_controllability(A, B, output_matrix(TURN)) == 5)
    rep.within("ranks", 1.0)
    _emit(rep, capsys)


def criterion_5(capsys=None):
    rep = Report(5, "closed-loop maneuvers")
    for kind, v in ((LANE, 1.0), (LANE, 5.0), (TURN, 1.0), (TURN, 5.0)):
        spec = ManeuverSpec(kind, v)
        gains = design(spec, P).gains
        t0 = time.perf_counter()
        _, m = run_maneuver(spec, P, gains, IntegratorConfig(h=1e-3))
        elapsed = time.perf_counter() - t0
        tag = f"{kind.value} {v:g} m/s"
        if kind is LANE:
            rel = abs(m.lateral_error) / spec.amplitude
            rep.check(f"{tag} |yG+L|/L", rel < 0.02, f"{rel:.2e}")
            rep.check(f"{tag} |psi|", abs(m.yaw_error) < 0.02, f"{abs(m.yaw_error):.2e}")
            rep.check(f"{tag} max|u| < 10 N", m.max_abs_u < 10.0, f"{m.max_abs_u:.3f} N")
        else:
            rep.check(f"{tag} |psi+pi/2|", abs(m.yaw_error) < 0.02, f"{abs(m.yaw_error):.2e}")
        rep.check(f"{tag} runtime", elapsed < 10.0, f"{elapsed:.2f} s")
    _emit(rep, capsys)


def criterion_6(capsys=None):
    rep = Report(6, "six structural zero roots")
    rng = np.random.default_rng(6)
    fewest = 10
    for ss in _random_wheel(rng, 200):
        fewest = min(fewest, int(np.sum(np.abs(eigenvalues(wheel_state_matrix(ss, P))) < 1e-8)))
    rep.check("wheel", fewest >= 6, f"min {fewest} zeros")
    fewest = 10
    for ss in _random_unicycle(rng, 200):
        fewest = min(fewest, int(np.sum(np.abs(eigenvalues(unicycle_state_matrix(ss, P))) < 1e-8)))
    rep.check("unicycle", fewest >= 6, f"min {fewest} zeros")
    rep.within("spectra", 30.0)
    _emit(rep, capsys)


def criterion_7(capsys=None):
    rep = Report(7, "rolling constraint, energy balance, massless limit")
    cfg = IntegratorConfig(h=1e-3, t_end=10.0)
    traces = {
        "open-loop wheel": simulate(wheel_state(omega1=0.05, omega2=6.0, omega3=0.3, theta=0.1), P, cfg),
        "open-loop unicycle": simulate(unicycle_state(omega2=15.0, theta=0.02), P, cfg,
                                       control=lambda t, x: 2.0 * math.sin(3 * t)),
    }
    for kind, v in ((LANE, 1.0), (TURN, 5.0)):
        spec = ManeuverSpec(kind, v)
        traces[f"{kind.value} {v:g} m/s"] = run_maneuver(spec, P, design(spec, P).gains, cfg)[0]
    for name, tr in traces.items():
        vp = float(np.max(tr.vP_norm))
        bal = float(np.max(np.abs(tr.energy - tr.energy[0] - tr.work)) / abs(tr.energy[0]))
        rep.check(f"{name} constraint", vp < 1e-8, f"{vp:.1e} m/s")
        rep.check(f"{name} energy", bal < 1e-6, f"{bal:.1e}")
    xw = wheel_state(omega1=0.02, omega2=12.0, omega3=0.1, theta=0.03)
    xu = np.concatenate([xw[:4], [0.0, 0.0], xw[4:]])
    _, W = integrate(lambda t, x: wheel_rhs(x, P), xw, cfg)
    _, U = integrate(lambda t, x: unicycle_limit_rhs(x, P), xu, cfg)
    gap = float(np.max(np.abs(U[:, [0, 1, 2, 3, 6, 7, 8, 9]] - W)))
    rep.check("m0 -> 0 equivalence", gap < 1e-9, f"{gap:.1e}")
    rep.within("traces", 30.0)
    _emit(rep, capsys)


def criterion_8(capsys=None):
    rep = Report(8, "analytic vs finite-difference Jacobians")
    rng = np.random.default_rng(8)

    def rel(A, J):
        return float(np.max(np.abs(A - J)) / np.max(np.abs(J)))

    worst = 0.0
    for ss in _random_wheel(rng, 100):
        t = rng.uniform(0, 2)
        J = fd_jacobian(lambda z: wheel_rhs(z, P), embed_wheel(ss, P, t=t))
        worst = max(worst, rel(wheel_state_matrix(ss, P, t=t), J))
    rep.check("wheel", worst < 1e-5, f"worst {worst:.1e}")
    worst = 0.0
    for ss in _random_unicycle(rng, 100):
        J = fd_jacobian(lambda z: unicycle_rhs(z, P, 0.0), embed_unicycle(ss, P))
        worst = max(worst, rel(unicycle_state_matrix(ss, P), J))
    rep.check("unicycle", worst < 1e-5, f"worst {worst:.1e}")
    worst = 0.0
    for fd in rng.uniform(0.5, 20, 20):
        J = fd_jacobian(lambda z: unicycle_rhs(z, P, 0.0), unicycle_state(omega2=fd))
        worst = max(worst, rel(straight_rolling_state_matrix(fd, P), J))
    rep.check("straight rolling", worst < 1e-5, f"worst {worst:.1e}")
    rep.within("jacobians", 30.0)
    _emit(rep, capsys)


def criterion_9(capsys=None):
    rep = Report(9, "stability-map structure")
    V = critical_tilt_angle()
    smap = stability_map(GridSpec(-1.5, 1.5, 61, -10, 10, 41), "wheel", P)
    beyond = np.abs(smap.theta) > V
    bad = int(np.sum(smap.label[beyond] == "Unstable"))
    rep.check("wheel beyond V stable", bad == 0, f"{bad} unstable")
    grid = GridSpec(-1.2, 1.2, 41, -10, 10, 41)
    same = list(stability_map(grid, "wheel", P).label) == list(stability_map(grid, "unicycle", P.with_m0(0.0)).label)
    rep.check("m0 = 0 map equals wheel map", same)
    target = math.sqrt(P.g / (2 * P.R))
    for m0 in (1.0, 5.0, 20.0):
        p = P.with_m0(m0)
        x = stability_crossing(lambda fd: straight_rolling_state_matrix(fd, p), 3.0, 5.0)
        rep.check(f"crossing m0={m0:g}", abs(x - target) < 1e-6, f"{abs(x - target):.1e}")
    rep.within("maps", 120.0)
    _emit(rep, capsys)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 10)])
def test_acceptance(criterion, capsys):
    criterion(capsys)


if __name__ == "__main__":
    failures = 0
    for crit in CRITERIA:
        try:
            crit()
        except AssertionError:
            failures += 1
    raise SystemExit(1 if failures else 0)
