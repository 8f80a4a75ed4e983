import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavenets.energy import (
    FieldNet,
    aux_metric,
    energy_history,
    energy_integral,
    energy_report,
    energy_summands,
    energy_tensor,
    pointwise_norm,
    sobolev_norms,
    verify_dominant_energy,
    verify_gronwall,
    verify_norm_energy_equivalence,
)
from wavenets.nets import EpsGrid, Mesh, ScalarNet
from wavenets.solver import CauchyData, solve
from wavenets.spacetime import make_minkowski, make_static


@pytest.fixture
def grid():
    return EpsGrid.geometric(0.1, 4)


def _metric_mesh(dim=1):
    return Mesh.torus(16, dim=dim, times=(-1.0, 1.0, 21))


def _frozen_in_time(grid, g, fn, n=64, times=(0.0, 1.0, 3)):
    """Time-independent field ``fn(*x)`` as a FieldNet."""
    mesh = Mesh.torus(n, dim=g.dim, times=times)
    zero = lambda e, t, *xs: np.zeros(np.broadcast(t, *xs).shape)
    return FieldNet.from_functions(grid, mesh, g, lambda e, t, *xs: fn(*xs) + 0 * t, zero, zero)


# --- auxiliary metric and pointwise norms ---------------------------------------


@given(st.floats(0.1, 10.0))
def test_time_covector_has_norm_one_over_beta(beta):
    e = np.diag([beta, 1.0, 2.0])
    ei = np.linalg.inv(e)
    assert pointwise_norm(np.array([1.0, 0.0, 0.0]), "l", e, ei) == pytest.approx(1.0 / beta)


@settings(max_examples=20)
@given(st.lists(st.floats(-2, 2), min_size=9, max_size=9), st.sampled_from(["ul", "lu", "ll", "uu"]))
def test_pointwise_norm_matches_explicit_sum(vals, sig):
    T = np.array(vals).reshape(3, 3)
    A = np.array([[2.0, 0.3, 0.1], [0.3, 1.5, -0.2], [0.1, -0.2, 1.0]])
    Ai = np.linalg.inv(A)
    M = [Ai if c == "l" else A for c in sig]
    ref = sum(T[a, b] * T[c, d] * M[0][a, c] * M[1][b, d]
              for a in range(3) for b in range(3) for c in range(3) for d in range(3))
    assert pointwise_norm(T, sig, A, Ai) == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_pointwise_norm_rejects_bad_signature():
    with pytest.raises(ValueError):
        pointwise_norm(np.zeros(3), "x", np.eye(3), np.eye(3))
    with pytest.raises(ValueError):
        pointwise_norm(np.zeros(2), "l", np.eye(3), np.eye(3))


def test_aux_metric_is_riemannian(grid):
    g = make_static(_metric_mesh(), grid, beta=lambda t, x: 1.5 + 0.2 * np.cos(x))
    E = aux_metric(g)
    assert E.positive
    assert E.e_estimate.bounded_by(1e-9)
    t, x = np.zeros(5), np.linspace(0, 1, 5)
    assert np.allclose(E.e(0, t, x)[..., 0, 0], 1.5 + 0.2 * np.cos(x))
    assert np.allclose(E.e(0, t, x) @ E.e_inv(0, t, x), np.eye(2))


# --- closed forms -------------------------------------------------------------


def test_sine_slice_energy_and_norm(grid):
    # u = sin x, u_t = 0 on flat space: E^1 = int (sin^2 + cos^2)/2 = pi, |u|_1^2 = 2 pi
    g = make_minkowski(_metric_mesh(), grid)
    f = _frozen_in_time(grid, g, np.sin, n=256)
    assert energy_integral(f, 1, 0, tau=0.0) == pytest.approx(math.pi, rel=1e-7)
    n = sobolev_norms(f, 1, tau=0.0)
    assert np.allclose(n.slice_sq, 2 * math.pi, rtol=1e-6)
    assert np.allclose(n.region_sq, 0.0)


def test_constant_field_zeroth_order_norm(grid):
    g = make_minkowski(_metric_mesh(), grid)
    f = _frozen_in_time(grid, g, lambda x: np.ones_like(x))
    n = sobolev_norms(f, 0, time_index=2)
    assert np.allclose(n.slice_sq, 2 * math.pi, rtol=1e-12)
    assert np.allclose(n.region_sq, 2 * math.pi, rtol=1e-12)   # tau = 1


def test_quadrupled_lapse_doubles_region_norm(grid):
    g1 = make_static(_metric_mesh(), grid, beta=1.0)
    g4 = make_static(_metric_mesh(), grid, beta=4.0)
    a = sobolev_norms(_frozen_in_time(grid, g1, np.sin), 1, time_index=2)
    b = sobolev_norms(_frozen_in_time(grid, g4, np.sin), 1, time_index=2)
    assert np.allclose(b.slice_sq, a.slice_sq)
    assert np.allclose(b.region_sq, 2 * a.region_sq)


def test_standing_wave_energy_is_conserved(grid):
    g = make_minkowski(_metric_mesh(), grid)
    sol = solve(g, CauchyData.from_functions(grid, Mesh.torus(512), np.sin), 1.0, n_out=5)
    # the first-order summand int (u_t^2 + u_x^2) / 2 = pi / 2 is conserved,
    # the zeroth-order one int u^2 / 2 = pi cos^2 t / 2 is not
    S = np.array([[energy_summands(sol, 1, i, time_index=k) for k in range(5)] for i in range(len(grid))])
    assert np.max(np.abs(S[..., 1] - math.pi / 2)) < 1e-4
    assert np.allclose(S[..., 0], 0.5 * math.pi * np.cos(sol.times) ** 2, rtol=1e-4)
    E = energy_history(sol, 1)
    assert np.allclose(E, S.sum(axis=-1), rtol=1e-14)


def test_summands_add_up(grid):
    g = make_static(_metric_mesh(), grid, beta=2.0)
    f = _frozen_in_time(grid, g, lambda x: np.sin(x) + 0.3 * np.cos(2 * x))
    s = energy_summands(f, 1, 0, time_index=0)
    assert energy_integral(f, 0, 0, time_index=0) == pytest.approx(s[0], rel=1e-14)
    assert energy_integral(f, 1, 0, time_index=0) == pytest.approx(s.sum(), rel=1e-14)


# --- tensors --------------------------------------------------------------------


def _loop_stress(g, du):
    """T^{ab} = (g^ac g^bd - 1/2 g^ab g^cd) d_c u d_d u, by explicit sums."""
    gi = np.linalg.inv(g)
    n = len(du)
    T = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    T[a, b] += (gi[a, c] * gi[b, d] - 0.5 * gi[a, b] * gi[c, d]) * du[c] * du[d]
    return T


def test_first_order_tensor_on_tilted_metric(grid):
    # [DERIVED] explicit index loops with a non-diagonal spatial metric and a varying lapse
    H = np.array([[1.3, 0.4], [0.4, 0.9]])
    beta = lambda t, x, y: 1.2 + 0.3 * np.sin(x) * np.cos(y)
    g = make_static(_metric_mesh(2), grid, beta=beta, h=lambda *xs: H)
    mesh = Mesh.torus(128, dim=2, times=(0.0, 1.0, 3))
    u = lambda e, t, x, y: np.sin(x) * np.cos(2 * y) + t
    ut = lambda e, t, x, y: np.cos(x + y) + 0 * t
    f = FieldNet.from_functions(grid, mesh, g, u, ut)
    T = energy_tensor(f, 1, 1, time_index=0)
    x, y = mesh.spatial_coords()
    rng = np.random.default_rng(3)
    for _ in range(6):
        i, j = rng.integers(0, 128, 2)
        xi, yj = x[i, 0], y[0, j]
        b = 1.2 + 0.3 * np.sin(xi) * np.cos(yj)
        G = np.zeros((3, 3))
        G[0, 0], G[1:, 1:] = -b, H
        du = np.array([np.cos(xi + yj), np.cos(xi) * np.cos(2 * yj), -2 * np.sin(xi) * np.sin(2 * yj)])
        # fourth-order differences of cos 2y at h = 2 pi / 128 are good to about 7e-6
        assert np.allclose(T[i, j], _loop_stress(G, du), atol=2e-5)


def test_energy_density_closed_form(grid):
    # T^{tt,1} = (u_t^2 / beta + |grad u|_h^2) / (2 beta)
    g = make_static(_metric_mesh(), grid, beta=3.0)
    mesh = Mesh.torus(128, times=(0.0, 1.0, 3))
    f = FieldNet.from_functions(grid, mesh, g, lambda e, t, x: np.sin(x) + 0 * t,
                                lambda e, t, x: 2 * np.cos(x) + 0 * t)
    T = energy_tensor(f, 1, 0, tau=0.0)
    x = mesh.spatial_coords()[0]
    assert np.allclose(T[..., 0, 0], (4 * np.cos(x) ** 2 / 3 + np.cos(x) ** 2) / 6, atol=1e-7)


def test_second_order_needs_u_tt(grid):
    g = make_minkowski(_metric_mesh(), grid)
    f = FieldNet.from_functions(grid, Mesh.torus(32, times=(0, 1, 3)), g,
                                lambda e, t, x: np.sin(x) + 0 * t, lambda e, t, x: 0 * x + 0 * t)
    with pytest.raises(ValueError):
        energy_tensor(f, 2, 0, time_index=0)
    with pytest.raises(ValueError):
        energy_tensor(f, 3, 0, time_index=0)


def test_unknown_tau_is_rejected(grid):
    g = make_minkowski(_metric_mesh(), grid)
    with pytest.raises(ValueError):
        energy_integral(_frozen_in_time(grid, g, np.sin), 1, 0, tau=0.3)


# --- invariants -----------------------------------------------------------------


@settings(max_examples=15)
@given(st.floats(0.1, 5.0), st.integers(0, 2))
def test_energies_scale_quadratically(a, k):
    grid = EpsGrid.geometric(0.1, 4)
    g = make_static(_metric_mesh(), grid, beta=1.7)
    mesh = Mesh.torus(64, times=(0.0, 1.0, 3))
    f = FieldNet.from_functions(grid, mesh, g, lambda e, t, x: np.sin(x) * (1 + t),
                                lambda e, t, x: np.sin(x) + 0 * t, lambda e, t, x: 0 * x + 0 * t)
    assert energy_integral(f.scaled(a), k, 2, time_index=1) == pytest.approx(
        a * a * energy_integral(f, k, 2, time_index=1), rel=1e-12)


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_dominant_energy_density_is_nonnegative(seed):
    grid = EpsGrid.geometric(0.1, 4)
    rng = np.random.default_rng(seed)
    c = rng.normal(size=4)
    g = make_static(_metric_mesh(), grid, beta=float(rng.uniform(0.2, 5.0)))
    mesh = Mesh.torus(32, times=(0.0, 1.0, 3))
    f = FieldNet.from_functions(grid, mesh, g, lambda e, t, x: c[0] * np.sin(x) + c[1] * np.cos(3 * x) + t,
                                lambda e, t, x: c[2] * np.cos(x) + c[3] + 0 * t)
    assert verify_dominant_energy(f, 1)["passed"]


def test_energy_norm_ratio_on_flat_space(grid):
    g = make_minkowski(_metric_mesh(), grid)
    sol = solve(g, CauchyData.from_functions(grid, Mesh.torus(256), np.sin, np.cos), 1.0, n_out=5)
    rep = verify_norm_energy_equivalence(sol, 1)
    assert rep.passed
    assert rep.C_low == pytest.approx(0.5, abs=1e-12) and rep.C_high == pytest.approx(0.5, abs=1e-12)


# --- Gronwall -------------------------------------------------------------------


def test_conserved_energy_has_no_growth(grid):
    g = make_minkowski(_metric_mesh(), grid)
    sol = solve(g, CauchyData.from_functions(grid, Mesh.torus(512), np.sin), 1.0, n_out=5)
    rep = verify_gronwall(sol)
    assert rep.passed and np.all(rep.C3 < 1e-4)
    assert rep.spread == 1.0


def test_zero_solution_is_trivially_bounded(grid):
    g = make_minkowski(_metric_mesh(), grid)
    zero = ScalarNet.constant(grid, Mesh.torus(32), 0.0)
    rep = verify_gronwall(solve(g, CauchyData(zero, zero), 0.5, n_out=3))
    assert rep.passed and np.all(rep.C3 == 0.0)


def test_gronwall_order_limit(grid):
    g = make_minkowski(_metric_mesh(), grid)
    with pytest.raises(ValueError):
        verify_gronwall(_frozen_in_time(grid, g, np.sin), k=2)


@pytest.mark.parametrize("m", [1, 2])
def test_negligible_data_give_negligible_energy(grid, m):
    g = make_minkowski(_metric_mesh(), grid)
    mesh = Mesh.torus(128)
    u0 = ScalarNet.from_function(grid, mesh, lambda e, x: e**m * np.sin(x))
    data = CauchyData(u0, ScalarNet.constant(grid, mesh, 0.0))
    rep = energy_report(solve(g, data, 0.5, n_out=3), k_max=1, gronwall=False)
    # sup E ~ eps^(2m)
    assert -rep.sup_energy_estimate.exponent >= 2 * m - 0.5


def test_energy_report_csv_rows(grid):
    g = make_minkowski(_metric_mesh(), grid)
    sol = solve(g, CauchyData.from_functions(grid, Mesh.torus(128), np.sin), 0.5, n_out=3)
    rep = energy_report(sol, k_max=1)
    rows = rep.csv_rows()
    assert len(rows) == 3 * len(grid)
    assert all(len(r) == 5 and r[4] == pytest.approx(0.5, abs=1e-12) for r in rows)
    assert rep.positivity["passed"] and rep.gronwall.passed
