import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavenets.nets import Delta, EpsGrid, Mesh, ScalarNet, TestFunction, default_battery
from wavenets.solver import (
    CauchyData,
    convergence_order,
    dalembert_oracle,
    domain_of_dependence_check,
    max_wave_speed,
    solve,
    solve_distributional,
)
from wavenets.spacetime import make_minkowski, make_pp_wave_rosen, make_robertson_walker, make_static


@pytest.fixture
def grid():
    return EpsGrid.geometric(0.1, 4)


def _metric_mesh():
    return Mesh.torus(16, times=(-1.0, 1.0, 21))


def _bump(scale=1.0):
    phi = TestFunction([0.0], [1.0], amplitude=scale * math.e**6, sharpness=6.0)
    return lambda x: phi(x)


def test_standing_wave_matches_closed_form(grid):
    g = make_minkowski(_metric_mesh(), grid)
    mesh = Mesh.torus(512)
    sol = solve(g, CauchyData.from_functions(grid, mesh, np.sin), 1.0, n_out=5)
    x = mesh.spatial_coords()[0]
    for k, t in enumerate(sol.times):
        assert np.max(np.abs(sol.u.samples[:, k] - np.sin(x) * np.cos(t))) < 1e-4
        assert np.max(np.abs(sol.u_t.samples[:, k] + np.sin(x) * np.sin(t))) < 1e-3
        assert np.max(np.abs(sol.u_tt.samples[:, k] + np.sin(x) * np.cos(t))) < 1e-3
    assert [d["status"] for d in sol.diagnostics] == ["ok"] * 4


def test_dalembert_bump_with_velocity(grid):
    # [DERIVED] d'Alembert formula evaluated by Gauss-Legendre quadrature
    g = make_minkowski(_metric_mesh(), grid)
    mesh = Mesh.torus(1024)
    u0, u1 = _bump(), _bump(0.5)
    sol = solve(g, CauchyData.from_functions(grid, mesh, u0, u1), 1.0, n_out=3)
    x = mesh.spatial_coords()[0]
    ref = dalembert_oracle(u0, u1, 1.0, x, 1.0, period=2 * np.pi)
    assert np.max(np.abs(sol.u.samples[:, -1] - ref)) < 1e-3 * np.max(np.abs(ref))


def test_fourier_oracle_agrees_with_quadrature():
    mesh = Mesh.torus(256)
    x = mesh.spatial_coords()[0]
    u0, u1 = _bump(), _bump(0.5)
    a = dalembert_oracle(u0(x), u1(x), 0.7, x, 1.3, mesh=mesh)
    b = dalembert_oracle(u0, u1, 0.7, x, 1.3, period=2 * np.pi)
    assert np.max(np.abs(a - b)) < 1e-8


def test_second_order_convergence(grid):
    g = make_minkowski(_metric_mesh(), grid)
    rep = convergence_order(g, lambda N: CauchyData.from_functions(grid, Mesh.torus(N), np.sin), 1.0,
                            [128, 256, 512], exact=lambda t, x: np.sin(x) * np.cos(t))
    assert all(abs(o - 2.0) < 0.2 for o in rep.orders.values())
    assert rep.reference == "exact"


def test_self_convergence_needs_doublings(grid):
    g = make_minkowski(_metric_mesh(), grid)
    with pytest.raises(ValueError):
        convergence_order(g, lambda N: CauchyData.from_functions(grid, Mesh.torus(N), np.sin), 0.5, [64, 100, 200])


def test_rw_wave_speed():
    # h = f^2 with f = 2 and beta = 1: light travels at 1/2
    grid = EpsGrid.geometric(0.1, 4)
    g = make_robertson_walker(2.0, None, _metric_mesh(), grid)
    assert max_wave_speed(g, 0, Mesh.torus(64), 1.0) == pytest.approx(0.5)


@pytest.mark.parametrize("kind", ["minkowski", "rw"])
def test_solution_stays_in_causal_future(grid, kind):
    mm = _metric_mesh()
    g = make_minkowski(mm, grid) if kind == "minkowski" else make_robertson_walker(2.0, None, mm, grid)
    data = CauchyData.from_functions(grid, Mesh.torus(256), _bump(), _bump(0.5), support=((-1.0, 1.0),))
    assert data.support_ok()
    rep = domain_of_dependence_check(g, data, 1.0, [(-1.0, 1.0)])
    assert rep.passed and rep.relative < 1e-8


def test_too_slow_cone_is_detected(grid):
    g = make_minkowski(_metric_mesh(), grid)
    data = CauchyData.from_functions(grid, Mesh.torus(256), _bump(), _bump(0.5))
    rep = domain_of_dependence_check(g, data, 1.0, [(-1.0, 1.0)], speed=0.25)
    assert not rep.passed


def test_delta_velocity_is_associated():
    grid = EpsGrid.geometric(0.1, 6)
    g = make_minkowski(_metric_mesh(), grid)
    rep = solve_distributional(g, None, Delta(0.0), 0.5, default_battery(1, 3), Mesh.torus(8192), n_out=3)
    assert rep.associated
    assert rep.times == (0.0, 0.25, 0.5)


@settings(max_examples=10)
@given(st.floats(-3.0, 3.0))
def test_solution_is_linear_in_data(a):
    grid = EpsGrid.geometric(0.1, 4)
    g = make_minkowski(_metric_mesh(), grid)
    data = CauchyData.from_functions(grid, Mesh.torus(64), np.sin, np.cos)
    base = solve(g, data, 0.5, n_out=3)
    scaled = solve(g, data.scaled(a), 0.5, n_out=3)
    assert np.allclose(scaled.u.samples, a * base.u.samples, rtol=1e-12, atol=1e-12)


def test_source_term_drives_solution(grid):
    # box = -d_t^2 + d_x^2, so u = -t^2/2 solves box u = 1 with zero data
    g = make_minkowski(_metric_mesh(), grid)
    data = CauchyData(ScalarNet.constant(grid, Mesh.torus(32), 0.0), ScalarNet.constant(grid, Mesh.torus(32), 0.0),
                      f=lambda t, x: np.ones_like(x))
    sol = solve(g, data, 1.0, n_out=3)
    t = sol.times[:, None]
    assert np.allclose(sol.u.samples, np.broadcast_to(-t**2 / 2, sol.u.samples.shape[1:]), atol=1e-10)


def test_static_lapse_changes_speed(grid):
    g = make_static(_metric_mesh(), grid, beta=4.0)
    assert max_wave_speed(g, 0, Mesh.torus(32), 1.0) == pytest.approx(2.0)


@pytest.mark.parametrize("T,n_out", [(-1.0, 5), (1.0, 1)])
def test_solve_rejects_bad_arguments(grid, T, n_out):
    g = make_minkowski(_metric_mesh(), grid)
    with pytest.raises(ValueError):
        solve(g, CauchyData.from_functions(grid, Mesh.torus(32), np.sin), T, n_out=n_out)


def test_cauchy_data_validation(grid):
    mesh = Mesh.torus(32)
    a = ScalarNet.constant(grid, mesh, 0.0)
    with pytest.raises(ValueError):
        CauchyData(a, ScalarNet.constant(EpsGrid.geometric(0.2, 4), mesh, 0.0))
    with pytest.raises(ValueError):
        CauchyData(ScalarNet.constant(grid, mesh.with_times((0, 1, 3)), 0.0),
                   ScalarNet.constant(grid, mesh.with_times((0, 1, 3)), 0.0))


def test_time_reversal_recovers_data(grid):
    g = make_minkowski(_metric_mesh(), grid)
    mesh = Mesh.torus(256)
    data = CauchyData.from_functions(grid, mesh, _bump(), _bump(0.5))
    fwd = solve(g, data, 1.0, n_out=3)
    back = CauchyData(ScalarNet(grid, mesh, fwd.u.samples[:, -1]), ScalarNet(grid, mesh, -fwd.u_t.samples[:, -1]))
    rev = solve(g, back, 1.0, n_out=3)
    assert np.max(np.abs(rev.u.samples[:, -1] - data.u0.samples)) < 1e-12
    assert np.max(np.abs(rev.u_t.samples[:, -1] + data.u1.samples)) < 1e-12


def test_pp_wave_self_convergence():
    # [DERIVED] mollified kink at fixed eps: successive-resolution differences shrink like h^2
    grid = EpsGrid((0.4, 0.2, 0.1, 0.05))
    g = make_pp_wave_rosen(Mesh.torus(8, dim=2, times=(-0.5, 0.5, 641)), grid)
    fn = lambda N: CauchyData.from_functions(grid, Mesh.torus(N, dim=2), lambda x, y: np.exp(np.cos(x)) * np.cos(y),
                                             lambda x, y: 0.3 * np.sin(x))
    rep = convergence_order(g, fn, 0.5, [32, 64, 128], n_out=3)
    assert rep.reference == "self"
    assert all(abs(o - 2.0) <= 0.3 for o in rep.orders.values())
