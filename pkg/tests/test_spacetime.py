import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavenets.nets import EpsGrid, Mesh, ScalarNet
from wavenets.spacetime import (
    CovectorFieldSigma,
    check_condition_A,
    check_condition_B,
    check_luni_positive,
    check_splitting,
    christoffel,
    make_adversarial,
    make_minkowski,
    make_pp_wave_rosen,
    make_robertson_walker,
    make_static,
    mollify_metric,
)


def test_minkowski_passes_both_conditions(grid6, flat_mesh):
    g = make_minkowski(flat_mesh, grid6)
    A = check_condition_A(g)
    assert A.passed
    assert A.g_estimates[0].exponent == pytest.approx(0.0, abs=1e-12)
    # derivatives of a constant metric vanish up to rounding
    assert all(max(A.g_estimates[k].sup_values) < 1e-10 for k in (1, 2, 3))
    B = check_condition_B(g)
    assert B.passed and B.C_timelike == pytest.approx(1.0)


def test_robertson_walker_constant_scale(grid6, flat_mesh):
    g = make_robertson_walker(2.0, None, flat_mesh, grid6)
    assert check_condition_A(g).passed
    assert check_condition_B(g).passed
    S = check_splitting(g)
    assert S.passed
    assert S.h_lower_bound == pytest.approx(4.0)


def test_oscillating_scale_factor_is_weakly_singular(flat_mesh):
    # [DERIVED] d^k/dt^k of (2 + sin(t/eps))^2 grows exactly like eps^-k
    grid = EpsGrid.geometric(0.1, 4, 0.5)
    mesh = Mesh.torus(8, times=(-0.25, 0.25, 641))
    g = make_robertson_walker(lambda t, eps: 2.0 + np.sin(t / eps), None, mesh, grid, time_scale=lambda e: e)
    A = check_condition_A(g, k_max=2)
    for k in (1, 2):
        assert A.g_estimates[k].exponent == pytest.approx(k, abs=0.1)
    assert A.passed


def test_adversarial_net_fails(grid6, flat_mesh):
    g = make_adversarial(flat_mesh, grid6)
    assert all(g.degenerate)
    A = check_condition_A(g)
    assert not A.passed
    assert A.g_estimates[0].exponent == pytest.approx(2.0, abs=0.05)
    assert not check_condition_B(g).passed


def test_pp_wave_small_grid():
    grid = EpsGrid.geometric(0.1, 4, 0.5)
    mesh = Mesh.torus(8, dim=2, times=(-0.5, 0.5, 321))
    g = make_pp_wave_rosen(mesh, grid)
    A = check_condition_A(g)
    assert A.passed
    # the kink has bounded first derivative; its second grows like eps^-1
    assert A.g_estimates[1].exponent == pytest.approx(0.0, abs=0.05)
    assert A.g_estimates[2].exponent == pytest.approx(1.0, abs=0.1)
    assert check_condition_B(g).passed


@pytest.mark.parametrize("kwargs", [dict(dim=1), dict(dim=2, times=(-1.0, 1.0, 11))])
def test_pp_wave_rejects_bad_meshes(kwargs):
    times = kwargs.pop("times", (-0.5, 0.5, 11))
    with pytest.raises(ValueError):
        make_pp_wave_rosen(Mesh.torus(8, times=times, **kwargs), EpsGrid.geometric(0.1, 4))


def test_rw_rejects_nonpositive_scale(grid4, flat_mesh):
    with pytest.raises(ValueError):
        make_robertson_walker(lambda t: t, None, flat_mesh, grid4)


def test_degenerate_metric_is_rejected_unless_allowed(grid4, flat_mesh):
    with pytest.raises(ValueError):
        make_static(flat_mesh, grid4, beta=-1.0)
    g = make_static(flat_mesh, grid4, beta=-1.0, allow_degenerate=True)
    assert all(g.degenerate) and g.active_indices() == []


def test_christoffel_symbols_of_rw():
    # [DERIVED] g = -dt^2 + a(t)^2 dx^2: Gamma^t_xx = a a', Gamma^x_tx = a'/a
    grid = EpsGrid.geometric(0.1, 4)
    mesh = Mesh.torus(16, times=(-0.5, 0.5, 201))
    a = lambda t: 1.5 + 0.3 * t
    g = make_robertson_walker(a, None, mesh, grid)
    G = g.g(0, *mesh.coords())
    Gi = g.g_inv(0, *mesh.coords())
    gam = christoffel(G, Gi, mesh)
    t = mesh.time_values()[:, None]
    assert np.allclose(gam[..., 0, 1, 1], a(t) * 0.3, atol=1e-10)
    assert np.allclose(gam[..., 1, 0, 1], 0.3 / a(t), atol=1e-10)
    assert np.allclose(gam[..., 0, 0, 0], 0.0, atol=1e-12)


@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(-0.9, 0.9))
def test_inverse_metric_is_blockwise_inverse(beta, a, c):
    grid = EpsGrid.geometric(0.1, 4)
    mesh = Mesh.torus(8, dim=2, times=(0.0, 1.0, 5))
    h = np.array([[a, c * a], [c * a, a]])
    g = make_static(mesh, grid, beta=beta, h=lambda *xs: h)
    G = g.g(0, *mesh.coords())
    Gi = g.g_inv(0, *mesh.coords())
    assert np.allclose(G @ Gi, np.eye(3), atol=1e-10)


@given(st.floats(0.01, 100.0))
def test_normal_covector_normalization(beta):
    s = CovectorFieldSigma.from_beta(np.array([beta]))
    # V^2 = -g(grad t, grad t) = 1/beta
    assert s.V[0] ** 2 == pytest.approx(1.0 / beta)


def test_luni_positive_detects_decay(grid6):
    mesh = Mesh.torus(16)
    ok = ScalarNet.from_function(grid6, mesh, lambda e, x: 2.0 + np.sin(x))
    bad = ScalarNet.from_function(grid6, mesh, lambda e, x: e * (2.0 + np.sin(x)))
    rep = check_luni_positive(ok)
    assert rep.passed and rep.C == pytest.approx(1.0, rel=1e-3)
    assert not check_luni_positive(bad).passed


def test_mollified_metric_matches_smooth_input():
    grid4 = EpsGrid((0.8, 0.4, 0.2, 0.1))
    mesh = Mesh.torus(256, times=(-0.5, 0.5, 41))
    t, x = mesh.coords()
    beta = np.broadcast_to(1.0 + 0.0 * x, mesh.full_shape)
    h = np.broadcast_to((2.0 + 0.1 * np.cos(x))[..., None, None], mesh.full_shape + (1, 1))
    g = mollify_metric(beta, h, mesh, grid4)
    hb = g.h(3, *mesh.coords())[..., 0, 0]
    assert np.max(np.abs(hb - (2.0 + 0.1 * np.cos(x)))) < 1e-3
    assert g.params["positive_below"] > 0
