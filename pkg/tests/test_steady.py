import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from oracles import reference_rhs

from unidyn.dynamics import point_mass_height, unicycle_rhs, wheel_rhs
from unidyn.errors import ExcludedYawRateError, NegativeRadicandError, ParameterError, ZeroYawRateError
from unidyn.simulate import IntegratorConfig, simulate
from unidyn.steady import (
    RegionLabel,
    SteadyState,
    SteadyStateKind,
    classify_region,
    embed_unicycle,
    embed_wheel,
    excluded_yaw_rate,
    is_unicycle_steady,
    non_tilted_turning,
    region_from_position,
    tilted_spinning,
    turning_radii,
    unicycle_solve,
    unicycle_steady_residuals,
    unicycle_steady_state,
    wheel_pitch_rate,
    wheel_steady_residual,
    wheel_steady_state,
    wheel_steady_trajectory,
)


def _uni(theta, psi_dot, phi_dot, r):
    return SteadyState(SteadyStateKind.TURNING_ROLLING, theta, psi_dot, phi_dot, r, True, "unicycle")


# wheel


def test_wheel_residual_zero_when_upright_straight_or_spinning(params):
    for pd, fd in [(0.0, 0.0), (0.0, -4.0), (7.0, 0.0)]:
        assert wheel_steady_residual(0.0, pd, fd, params) == 0.0
    # upright with both rates nonzero leaves only the gyroscopic term
    assert_allclose(wheel_steady_residual(0.0, 3.0, -1.0, params), 6 * 3.0 * -1.0 * params.R)


def test_wheel_residual_direct_value(params):
    R, g = params.R, params.g
    expect = 5 * R * math.sin(0.1) * math.cos(0.1) + 4 * g * math.sin(0.1)
    assert_allclose(wheel_steady_residual(0.1, 1.0, 0.0, params), expect, rtol=1e-15)


def test_wheel_pitch_rate_closes_residual(params, rng):
    for _ in range(50):
        th, pd = rng.uniform(-1.2, 1.2), rng.uniform(0.2, 10) * rng.choice([-1, 1])
        fd = wheel_pitch_rate(th, pd, params)
        assert abs(wheel_steady_residual(th, pd, fd, params)) < 1e-9


def test_wheel_pitch_rate_values(params):
    assert wheel_pitch_rate(0.0, 2.0, params) == 0.0
    expect = -5 / 6 * 3 * math.sin(0.2) - 2 * 9.81 * math.tan(0.2) / (3 * 0.3 * 3)
    assert_allclose(wheel_pitch_rate(0.2, 3.0, params), expect, rtol=1e-15)
    assert wheel_pitch_rate(-0.2, 3.0, params) == -wheel_pitch_rate(0.2, 3.0, params)
    with pytest.raises(ZeroYawRateError):
        wheel_pitch_rate(0.2, 0.0, params)


def test_wheel_steady_state_kinds(params):
    assert wheel_steady_state(0.0, 0.0, params).kind is SteadyStateKind.STATIC
    assert wheel_steady_state(0.0, 0.0, params, phi_dot=3.0).kind is SteadyStateKind.STRAIGHT_ROLLING
    assert wheel_steady_state(0.0, 2.0, params).kind is SteadyStateKind.SPINNING
    assert wheel_steady_state(0.2, 2.0, params).kind is SteadyStateKind.TURNING_ROLLING
    with pytest.raises(ZeroYawRateError):
        wheel_steady_state(0.2, 0.0, params)


def test_wheel_embedding_is_equilibrium_of_oracle(params, rng):
    for _ in range(20):
        ss = wheel_steady_state(rng.uniform(-1.2, 1.2), rng.uniform(0.3, 8) * rng.choice([-1, 1]), params)
        x = embed_wheel(ss, params, t=rng.uniform(0, 3))
        assert np.max(np.abs(reference_rhs(x, params)[:4])) < 1e-9
        assert np.max(np.abs(wheel_rhs(x, params)[:4])) < 1e-9


def test_wheel_trajectory_straight(params):
    ss = wheel_steady_state(0.0, 0.0, params, phi_dot=2.0)
    t = np.linspace(0, 3, 7)
    psi, phi, x, y = wheel_steady_trajectory(ss, t, params, y0=1.5)
    assert_allclose(x, 2.0 * params.R * t)
    assert_allclose(y, 1.5)


def test_wheel_trajectory_circle(params):
    ss = wheel_steady_state(0.3, 2.5, params)
    rho_p, rho_g = turning_radii(ss, params)
    assert_allclose(rho_p, abs(ss.phi_dot_star / ss.psi_dot_star) * params.R)
    t = np.linspace(0, 5, 50)
    _, _, x, y = wheel_steady_trajectory(ss, t, params, x0=1.0, y0=-2.0)
    assert_allclose(np.hypot(x - 1.0, y + 2.0), rho_g, rtol=1e-12)


def test_wheel_trajectory_matches_integration(params):
    ss = wheel_steady_state(0.4, 4.0, params)
    x0 = embed_wheel(ss, params)
    trace = simulate(x0, params, IntegratorConfig(h=1e-3, t_end=5.0))
    psi, phi, x, y = wheel_steady_trajectory(ss, trace.t, params)
    # centre of the closed form's circle sits at the origin; shift to the start point
    x = x - x[0] + x0[6]
    y = y - y[0] + x0[7]
    W = trace.states
    assert np.max(np.abs(W[:, 6] - x)) < 1e-6
    assert np.max(np.abs(W[:, 7] - y)) < 1e-6
    assert np.max(np.abs(W[:, 4] - psi)) < 1e-6


# unicycle


def test_unicycle_residuals_vanish_upright_spin(params):
    assert_allclose(unicycle_steady_residuals(0.0, 0.0, 3.0, 0.0, params), 0.0, atol=0)


def test_unicycle_residuals_match_oracle(params):
    # residuals are the tilt and axial accelerations scaled by 5mR^2 + 4m0r^2
    for th, pd, fd, r in [(0.1, 1.0, 0.5, 0.05), (-0.4, 3.0, -2.0, 0.12), (0.7, -1.5, 0.3, -0.2)]:
        d = reference_rhs(embed_unicycle(_uni(th, pd, fd, r), params), params)
        D1 = 5 * params.m * params.R ** 2 + 4 * params.m0 * r * r
        assert_allclose(unicycle_steady_residuals(th, pd, fd, r, params), D1 * d[[0, 4]], rtol=1e-9, atol=1e-12)


def test_unicycle_solve_closure(params, rng):
    fd, r = unicycle_solve(0.15, 2.0, params)
    assert np.max(np.abs(unicycle_steady_residuals(0.15, 2.0, fd, r, params))) < 1e-9
    for _ in range(100):
        th, pd = rng.uniform(-1.2, 1.2), rng.uniform(0.1, 10) * rng.choice([-1, 1])
        try:
            fd, r = unicycle_solve(th, pd, params)
        except ExcludedYawRateError:
            continue
        assert is_unicycle_steady(th, pd, fd, r, params)
        x = embed_unicycle(_uni(th, pd, fd, r), params)
        d = unicycle_rhs(x, params)
        scale = max(1.0, np.max(np.abs(x[:6])) ** 2 * 10)
        assert np.max(np.abs(d[:6])) < 1e-9 * scale


def test_unicycle_solve_upright(params):
    fd, r = unicycle_solve(0.0, 2.7, params)
    assert fd == 0.0 and r == 0.0


def test_unicycle_solve_near_excluded_rate(params):
    th = 0.2
    crit = excluded_yaw_rate(th, params)
    with pytest.raises(ExcludedYawRateError, match="excluded yaw"):
        unicycle_solve(th, crit, params)
    with pytest.raises(ExcludedYawRateError):
        unicycle_solve(th, -crit, params)
    fd, r = unicycle_solve(th, crit + 1e-3, params)
    assert math.isfinite(fd) and math.isfinite(r)
    assert abs(r) > 10
    res = unicycle_steady_residuals(th, crit + 1e-3, fd, r, params)
    assert is_unicycle_steady(th, crit + 1e-3, fd, r, params, tol=1e-6), res


def test_unicycle_steady_state_straight_requires_upright(params):
    assert unicycle_steady_state(0.0, 0.0, params, phi_dot=5.0).kind is SteadyStateKind.STRAIGHT_ROLLING
    with pytest.raises(ExcludedYawRateError):
        unicycle_steady_state(0.1, 0.0, params)


def test_non_tilted_turning(params):
    a, b = non_tilted_turning(0.1, params)
    expect = math.sqrt(2 * 5 * 9.81 / (3 * 10 * 0.3))
    assert_allclose([a.psi_dot_star, b.psi_dot_star], [expect, -expect], rtol=1e-15)
    assert_allclose(expect, 3.30151, atol=5e-6)
    assert_allclose(a.phi_dot_star, a.psi_dot_star * 0.1 / params.R, rtol=1e-14)
    for ss in (a, b):
        assert ss.theta_star == 0.0 and ss.kind is SteadyStateKind.NON_TILTED_TURNING
        assert is_unicycle_steady(0.0, ss.psi_dot_star, ss.phi_dot_star, ss.r_star, params)
        d = reference_rhs(embed_unicycle(ss, params), params)
        assert np.max(np.abs(d[:6])) < 1e-9
    spin = non_tilted_turning(0.0, params)
    assert spin[0].phi_dot_star == 0.0 and spin[0].kind is SteadyStateKind.SPINNING
    with pytest.raises(ParameterError):
        non_tilted_turning(0.1, params.with_m0(0.0))


@pytest.mark.parametrize("theta", [0.2, -0.2, 0.05, 0.6, -1.0])
def test_tilted_spinning(params, theta):
    states = tilted_spinning(theta, params)
    assert len(states) >= 2
    for ss in states:
        assert ss.phi_dot_star == 0.0
        assert ss.r_star * theta > 0
        assert is_unicycle_steady(theta, ss.psi_dot_star, 0.0, ss.r_star, params)
        d = reference_rhs(embed_unicycle(ss, params), params)
        assert np.max(np.abs(d[:6])) < 1e-8


def test_tilted_spinning_needs_tilt(params):
    with pytest.raises(NegativeRadicandError):
        tilted_spinning(0.0, params)


def test_upright_spin_forces_centred_mass(params):
    # with zero tilt and pitch rate, only r = 0 balances the axial equation
    pd = 2.0
    rs = np.linspace(-0.5, 0.5, 1001)
    res = np.array([unicycle_steady_residuals(0.0, pd, 0.0, r, params)[1] for r in rs])
    zero = rs[np.abs(res) < 1e-9]
    assert_allclose(zero, [0.0], atol=1e-12)


def test_symmetry_of_families(params, rng):
    for _ in range(30):
        th, pd = rng.uniform(-1.0, 1.0), rng.uniform(0.2, 8) * rng.choice([-1, 1])
        try:
            fd, r = unicycle_solve(th, pd, params)
        except ExcludedYawRateError:
            continue
        fd2, r2 = unicycle_solve(-th, -pd, params)
        assert_allclose([fd2, r2], [fd, -r], rtol=1e-12, atol=1e-12)
        assert_allclose(wheel_pitch_rate(-th, -pd, params), wheel_pitch_rate(th, pd, params), rtol=1e-12)


def test_region_labels(params):
    assert classify_region(0.0, 2.0, params) is RegionLabel.FEASIBLE_MASS_ABOVE_CENTER
    assert region_from_position(0.3, -0.1, params) is RegionLabel.FEASIBLE_MASS_BELOW_CENTER
    assert region_from_position(0.3, 0.1, params) is RegionLabel.FEASIBLE_MASS_ABOVE_CENTER
    assert region_from_position(math.pi / 4, -1.01 * params.R, params) is RegionLabel.INFEASIBLE
    assert region_from_position(0.5, -10.0, params) is RegionLabel.INFEASIBLE


def test_region_grid_has_infeasible_points_consistent_with_height(params):
    seen = set()
    for th in np.linspace(-1.3, 1.3, 53):
        for pd in np.linspace(-10, 10, 41):
            try:
                fd, r = unicycle_solve(th, pd, params)
            except ExcludedYawRateError:
                continue
            label = classify_region(th, pd, params)
            z_a = point_mass_height(th, r, params.R)
            z_g = params.R * math.cos(th)
            expect = (RegionLabel.INFEASIBLE if z_a <= 0 else
                      RegionLabel.FEASIBLE_MASS_BELOW_CENTER if z_a < z_g else
                      RegionLabel.FEASIBLE_MASS_ABOVE_CENTER)
            assert label is expect
            seen.add(label)
    assert seen == set(RegionLabel)
