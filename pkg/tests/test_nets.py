import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from wavenets.nets import (
    Delta,
    EpsGrid,
    Heaviside,
    Kink,
    Mesh,
    Mollifier,
    ScalarNet,
    TestFunction,
    association_check,
    classify_moderate,
    classify_negligible,
    default_battery,
    derivative,
    estimate_order,
    fd_weights,
    load_net,
    mollifier_embed,
    pair,
    richardson_extrapolate,
    save_net,
)


# --- grids and meshes -------------------------------------------------------


def test_geometric_grid():
    g = EpsGrid.geometric(0.1, 6, 0.5)
    assert len(g) == 6
    assert g.finest == pytest.approx(0.1 / 32)
    assert g.ratio == pytest.approx(2.0)  # eps_k / eps_{k+1}


@pytest.mark.parametrize("values", [(0.1, 0.2, 0.05, 0.01), (0.1, 0.05, 0.02), (2.0, 0.5, 0.2, 0.1)])
def test_grid_rejects_bad_values(values):
    with pytest.raises(ValueError):
        EpsGrid(values)


def test_irregular_grid_has_no_ratio():
    assert EpsGrid((0.1, 0.05, 0.03, 0.01)).ratio is None


def test_mesh_roundtrip_and_spacing():
    m = Mesh.torus(64, dim=2, times=(0.0, 1.0, 11))
    assert m.spacing == pytest.approx((2 * math.pi / 64,) * 2)
    assert m.dt == pytest.approx(0.1)
    assert Mesh.from_dict(m.to_dict()) == m
    assert m.full_shape == (11, 64, 64)


# --- asymptotic fits --------------------------------------------------------


@given(st.floats(-1.0, 5.0), st.floats(0.1, 10.0))
def test_estimate_order_recovers_power(N, C):
    g = EpsGrid.geometric(0.1, 6, 0.5)
    est = estimate_order(C * g.array ** (-N), g)
    assert abs(est.exponent - N) < 1e-9
    assert est.power_law
    assert est.bounded_by(N + 1e-9)


def test_estimate_order_zero_and_infinite():
    g = EpsGrid.geometric(0.1, 4)
    assert estimate_order(np.zeros(4), g).is_zero
    est = estimate_order([1.0, 2.0, math.inf, 3.0], g)
    assert est.exponent == math.inf and not est.bounded


def test_log_growth_is_not_a_power_law():
    # sup = exp(1/eps) grows faster than any power: the fit is poor
    g = EpsGrid.geometric(0.1, 6)
    est = estimate_order(np.exp(1 / g.array) * 1e-300, g)
    assert not est.power_law


@given(st.floats(0.5, 4.0))
def test_to_dict_is_json_safe(N):
    import json

    g = EpsGrid.geometric(0.1, 4)
    json.dumps(estimate_order(g.array ** (-N), g).to_dict())


# --- finite differences -----------------------------------------------------


def test_fd_weights_central():
    w = fd_weights(0.0, [-2, -1, 0, 1, 2], 1)
    assert np.allclose(w[:, 1], [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12])
    assert np.allclose(w[:, 0], [0, 0, 1, 0, 0])


@pytest.mark.parametrize("periodic", [True, False])
def test_derivative_fourth_order(periodic):
    errs = []
    for n in (64, 128):
        x = np.linspace(0, 2 * np.pi, n, endpoint=not periodic) if not periodic else np.arange(n) * 2 * np.pi / n
        h = x[1] - x[0]
        d = derivative(np.sin(x), 0, 1, h, periodic)
        errs.append(np.max(np.abs(d - np.cos(x))))
    assert math.log2(errs[0] / errs[1]) > 3.5


def test_derivative_needs_enough_points():
    with pytest.raises(ValueError):
        derivative(np.ones(3), 0, 1, 0.1, periodic=True)


# --- moderate and negligible ------------------------------------------------


def test_classify_moderate_detects_growth(grid6):
    mesh = Mesh.torus(128)
    net = ScalarNet.from_function(grid6, mesh, lambda e, x: np.sin(x) / e**2 + np.cos(2 * x))
    v = classify_moderate(net, [0, 1, 2])
    assert v.moderate
    # the eps-independent cos(2x) term bends the fit slightly at coarse eps
    assert all(abs(est.exponent - 2.0) < 0.02 for est in v.estimates.values())


def test_exponential_growth_is_not_moderate(grid6):
    net = ScalarNet.from_function(grid6, Mesh.torus(32), lambda e, x: np.exp(1 / e) * 1e-120 * (2 + np.sin(x)))
    assert not classify_moderate(net).moderate


def test_classify_negligible(grid6):
    mesh = Mesh.torus(64)
    net = ScalarNet.from_function(grid6, mesh, lambda e, x: e**4 * np.cos(x))
    v = classify_negligible(net, [1, 2, 3, 4, 5])
    assert v.negligible[4] and not v.negligible[5]


def test_zero_net_is_negligible_at_every_order(grid4):
    net = ScalarNet.constant(grid4, Mesh.torus(32), 0.0)
    assert classify_negligible(net, [1, 10, 100]).all_negligible


# --- test functions ----------------------------------------------------------


def _sample_bump(frozen):
    p = frozen["bump"]["params"]
    return TestFunction(p["center"], p["width"], amplitude=p["amplitude"], tilt=p["tilt"],
                        sharpness=p["sharpness"])


@pytest.mark.parametrize("key", ["phi", "d_t", "d_tx", "box", "box2"])
def test_test_function_derivatives_match_symbolic(frozen, key):
    # [DERIVED] frozen values from symbolic differentiation
    phi = _sample_bump(frozen)
    ops = {"phi": phi, "d_t": phi.diff((1, 0)), "d_tx": phi.diff((1, 1)), "box": phi.box_operator(1),
           "box2": phi.box_operator(2)}
    for pt, ref in zip(frozen["bump"]["points"], frozen["bump"]["values"][key]):
        assert float(ops[key](*pt)) == pytest.approx(ref, rel=1e-11, abs=1e-13)


def test_test_function_vanishes_outside_support():
    phi = TestFunction([0.0], [1.0])
    assert phi(np.array([1.0, 1.5, -2.0])).tolist() == [0.0, 0.0, 0.0]


@given(st.floats(-0.5, 0.5), st.floats(0.5, 2.0))
def test_integral_matches_riemann_sum(c, w):
    phi = TestFunction([c], [w], sharpness=2.0)
    x = np.linspace(c - w, c + w, 20001)
    assert phi.integral() == pytest.approx(integrate.trapezoid(phi(x), x), rel=1e-8)


def test_battery_is_reproducible():
    a, b = default_battery(2, 4), default_battery(2, 4)
    assert [p.center for p in a] == [p.center for p in b]
    assert len({p.label for p in a}) == 4


# --- mollifier and embeddings -------------------------------------------------


@pytest.mark.parametrize("d", [1, 2, 3])
def test_mollifier_normalization(frozen, d):
    # [DERIVED] independent mpmath quadrature
    assert Mollifier.of_dim(d).norm == pytest.approx(frozen["mollifier_norm"][str(d)], rel=1e-12)


def test_kink_constant(frozen):
    assert Mollifier.of_dim(1).kink_constant() == pytest.approx(frozen["kink_constant"], rel=1e-12)


def test_mollifier_cdf_limits():
    m = Mollifier.of_dim(1)
    assert m.cdf(-1.0) == 0.0 and m.cdf(1.0) == 1.0
    assert m.cdf(0.0) == pytest.approx(0.5, abs=1e-14)


def test_delta_embedding_has_unit_mass(grid6):
    mesh = Mesh.torus(8192)
    net = mollifier_embed(Delta(0.3), grid6, mesh)
    mass = net.samples.sum(axis=1) * mesh.cell_volume
    assert np.allclose(mass, 1.0, atol=1e-13)


def test_embedding_requires_resolution(grid6):
    with pytest.raises(ValueError):
        mollifier_embed(Delta(0.0), grid6, Mesh.torus(256))


@pytest.mark.parametrize("target", [Delta(0.0), Heaviside(0.1), Kink(-0.2)])
def test_embeddings_are_associated(grid6, target):
    mesh = Mesh.torus(8192)
    net = mollifier_embed(target, grid6, mesh)
    rep = association_check(net, target.pair, default_battery(1, 4))
    assert rep.verdict == "associated"


def test_association_detects_wrong_shadow(grid6):
    mesh = Mesh.torus(8192)
    net = mollifier_embed(Delta(0.0), grid6, mesh)
    rep = association_check(net, Delta(0.2).pair, default_battery(1, 4))
    assert rep.verdict == "not associated"


def test_pair_rejects_support_outside_mesh():
    net = ScalarNet.constant(EpsGrid.geometric(0.1, 4), Mesh.torus(64, length=1.0), 1.0)
    with pytest.raises(ValueError):
        pair(net, TestFunction([0.0], [1.0]))


@given(st.floats(1.5, 3.0), st.integers(1, 3))
def test_richardson_removes_power_error(ratio, order):
    eps = 0.1 * ratio ** -np.arange(5.0)
    vals = 2.0 + 3.0 * eps**order
    assert richardson_extrapolate(vals, ratio, order) == pytest.approx(2.0, abs=1e-10)


@pytest.mark.parametrize("fmt", ["npy", "csv"])
def test_save_load_roundtrip(tmp_path, grid4, fmt):
    net = ScalarNet.from_function(grid4, Mesh.torus(16, dim=2), lambda e, x, y: e * np.sin(x) * np.cos(y))
    back = load_net(save_net(net, tmp_path / "net", fmt=fmt))
    assert back.grid == net.grid and back.mesh == net.mesh
    assert np.allclose(back.samples, net.samples, rtol=0, atol=1e-15)
