"""Riesz distributions on Minkowski space and the leading Hadamard coefficient.

Coordinates on R^n are ``X = (t, x_1, ..., x_{n-1})`` with the Lorentz form
``<X, X> = -t^2 + |x|^2`` and ``gamma(X) = -<X, X>``.  The advanced
distribution is supported in the future cone ``t >= |x|``, the retarded one
in the past cone.  Its pairing with a test function is defined for
``alpha > n`` by the locally integrable density ``C(alpha, n) gamma^((alpha-n)/2)``
and extended to all ``alpha`` through ``<R(alpha), phi> = <R(alpha + 2), box phi>``
with ``box = d_t^2 - sum_i d_i^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .nets import TestFunction

__all__ = [
    "RieszParams",
    "RieszPairing",
    "riesz_constant",
    "riesz_pair",
    "riesz_pair_detailed",
    "continuation_depth",
    "verify_recursion",
    "HadamardTransportState",
    "hadamard_v0",
    "metric_christoffel",
    "minkowski_metric",
]


@dataclass(frozen=True)
class RieszParams:
    """Order ``alpha`` (real, >= 0), dimension ``n`` (>= 2) and cone sign.

    ``sign`` is ``+1`` for the advanced distribution (future cone) and ``-1``
    for the retarded one.
    """

    alpha: float
    n: int
    sign: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise ValueError("alpha must be a real number >= 0")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 (advanced) or -1 (retarded)")


def riesz_constant(alpha: float, n: int) -> float:
    """``2^(1-alpha) pi^((2-n)/2) / (Gamma(alpha/2) Gamma((alpha-n)/2 + 1))``.

    Reciprocal gamma functions are evaluated directly, so a pole of either
    gamma factor gives exactly zero.
    """
    if int(n) != n or n < 2:
        raise ValueError("n must be an integer >= 2")
    r1 = special.rgamma(alpha / 2.0)
    r2 = special.rgamma((alpha - n) / 2.0 + 1.0)
    if r1 == 0.0 or r2 == 0.0:
        return 0.0
    return float(2.0 ** (1.0 - alpha) * math.pi ** ((2.0 - n) / 2.0) * r1 * r2)


def continuation_depth(alpha: float, n: int) -> int:
    """Smallest ``m >= 0`` with ``alpha + 2m > n``."""
    if alpha > n:
        return 0
    return int(math.floor((n - alpha) / 2.0)) + 1


@dataclass(frozen=True)
class RieszPairing:
    value: float
    error_estimate: float
    depth: int
    alpha_used: float
    points: int

    def converged(self, tol: float = 1e-8) -> bool:
        return self.error_estimate <= tol * max(1.0, abs(self.value))


def _panel_rule(lo: float, hi: float, panels: int, order: int, jacobi_power: float | None = None):
    """Composite Gauss rule on [lo, hi]; optionally the first panel carries the
    weight ``(a - lo)^jacobi_power`` exactly (Gauss-Jacobi)."""
    xs, ws = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    nodes, weights = [], []
    for k in range(panels):
        a, b = edges[k], edges[k + 1]
        h = 0.5 * (b - a)
        if k == 0 and jacobi_power is not None:
            xj, wj = special.roots_jacobi(order, 0.0, jacobi_power)
            pts = a + h * (xj + 1.0)
            # weight (1+x)^p is built into wj; restore the missing (pts-a)^p / (h (1+x))^p = h^p
            nodes.append(pts)
            weights.append(wj * h ** (1.0 + jacobi_power))
        else:
            nodes.append(a + h * (xs + 1.0))
            weights.append(ws * h)
    return np.concatenate(nodes), np.concatenate(weights)


def _sphere_rule(n: int, resolution: int):
    """Nodes (k, n-1) and weights on the unit sphere S^(n-2) of R^(n-1)."""
    if n == 2:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 3:
        m = 2 * resolution
        th = 2 * np.pi * np.arange(m) / m
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(m, 2 * np.pi / m)
    if n == 4:
        c, wc = np.polynomial.legendre.leggauss(resolution)
        m = 2 * resolution
        ps = 2 * np.pi * np.arange(m) / m
        C, Ps = np.meshgrid(c, ps, indexing="ij")
        S = np.sqrt(1.0 - C**2)
        nodes = np.stack([S * np.cos(Ps), S * np.sin(Ps), C], axis=-1).reshape(-1, 3)
        weights = (wc[:, None] * np.full(m, 2 * np.pi / m)[None, :]).reshape(-1)
        return nodes, weights
    raise NotImplementedError("cone quadrature supports n = 2, 3, 4")


def _box_extent(phi: TestFunction, sign: int):
    lo, hi = phi.box
    t_lo, t_hi = (lo[0], hi[0]) if sign > 0 else (-hi[0], -lo[0])
    slo, shi = lo[1:], hi[1:]
    nearest = np.clip(0.0, slo, shi)
    r_min = float(np.linalg.norm(nearest))
    r_max = float(np.linalg.norm(np.maximum(np.abs(slo), np.abs(shi))))
    return t_lo, t_hi, r_min, r_max


def _cone_integral(fn: Callable, n: int, p: float, phi: TestFunction, sign: int, panels: int, order: int,
                   angular: int, chunk: int = 400_000) -> tuple[float, int]:
    """Integral of ``gamma^p * fn`` over the (future or past) cone.

    Coordinates ``a = |t| - r >= 0``, ``r = |x|`` and ``omega`` on the
    sphere; ``dX = r^(n-2) da dr domega`` and ``gamma = a (a + 2r)``.
    """
    t_lo, t_hi, r_min, r_max = _box_extent(phi, sign)
    if t_hi <= r_min:
        return 0.0, 0
    a_lo, a_hi = max(0.0, t_lo - r_max), t_hi - r_min
    r_hi = min(r_max, t_hi - a_lo)
    jac = None if float(p).is_integer() else p
    if a_lo > 0:
        jac = None
    a, wa = _panel_rule(a_lo, a_hi, panels, order, jac)
    r, wr = _panel_rule(r_min, r_hi, panels, order)
    om, wo = _sphere_rule(n, angular)
    A, R = np.meshgrid(a, r, indexing="ij")
    W = np.outer(wa, wr)
    gam = A * (A + 2.0 * R)
    if jac is not None:
        # Gauss-Jacobi weights carry a^p on the first panel
        first = np.zeros_like(A, dtype=bool)
        first[: len(a) // panels] = True
        base = np.where(first, (A + 2.0 * R) ** p, gam**p)
    else:
        base = gam**p if p != 0 else np.ones_like(gam)
    keep = (A + R <= t_hi + 1e-14) & (W != 0)
    A, R, W, base = A[keep], R[keep], W[keep], base[keep]
    W = W * base * R ** (n - 2)
    T = sign * (A + R)
    total = 0.0
    count = 0
    nom = len(wo)
    step = max(1, chunk // nom)
    for s in range(0, len(A), step):
        Tc, Rc, Wc = T[s:s + step], R[s:s + step], W[s:s + step]
        coords = [np.repeat(Tc, nom)]
        for d in range(n - 1):
            coords.append((Rc[:, None] * om[None, :, d]).reshape(-1))
        vals = fn(*coords).reshape(len(Tc), nom)
        total += float(np.sum((vals @ wo) * Wc))
        count += vals.size
    return total, count


_DEFAULT_PANELS = {2: 8, 3: 6, 4: 6}
_DEFAULT_ANGULAR = {3: 16, 4: 12}


def riesz_pair_detailed(params: RieszParams, phi: TestFunction, extra_depth: int = 0, panels: int | None = None,
                        order: int = 16, angular: int | None = None, estimate: bool = True) -> RieszPairing:
    """Pairing together with a quadrature error estimate.

    The estimate is the difference to a rerun at two thirds of the
    resolution, so it overstates the error of the returned value.

    Args:
        params: order, dimension and sign.
        phi: test function on R^n (first coordinate is time).
        extra_depth: additional continuation steps beyond the minimal one.
        panels, order, angular: quadrature resolution (time/radial panels,
            Gauss points per panel, angular resolution for n >= 3).
        estimate: skip the coarse rerun when False (error reported as nan).
    """
    n = params.n
    if panels is None:
        panels = _DEFAULT_PANELS.get(n, 4)
    if angular is None:
        angular = _DEFAULT_ANGULAR.get(n, 16)
    if phi.dim != n:
        raise ValueError(f"test function has dimension {phi.dim}, expected {n}")
    m = continuation_depth(params.alpha, n) + int(extra_depth)
    alpha = params.alpha + 2 * m
    c = riesz_constant(alpha, n)
    psi = phi.box_operator(m) if m else phi
    p = (alpha - n) / 2.0
    value, pts = _cone_integral(psi, n, p, phi, params.sign, panels, order, angular)
    if pts == 0:
        return RieszPairing(0.0, 0.0, m, alpha, 0)
    err = math.nan
    if estimate:
        coarse, _ = _cone_integral(psi, n, p, phi, params.sign, max(1, (2 * panels) // 3), order,
                                   max(2, (2 * angular) // 3))
        err = abs(c) * abs(value - coarse)
    return RieszPairing(c * value, err, m, alpha, pts)


def riesz_pair(params: RieszParams, phi: TestFunction, extra_depth: int = 0, **quadrature) -> float:
    """``<R(alpha), phi>`` via analytic continuation and cone quadrature."""
    return riesz_pair_detailed(params, phi, extra_depth, estimate=False, **quadrature).value


def verify_recursion(alpha: float, n: int, battery: Sequence[TestFunction], sign: int = 1,
                     **quadrature) -> float:
    """Max over the battery of ``|<R(alpha+2), box phi> - <R(alpha), phi>|``.

    The right side is evaluated one continuation step deeper than the left,
    so the two sides use different powers of ``box`` and different kernels.
    """
    worst = 0.0
    for phi in battery:
        lhs = riesz_pair(RieszParams(alpha + 2, n, sign), phi.box_operator(1), **quadrature)
        rhs = riesz_pair(RieszParams(alpha, n, sign), phi, extra_depth=1, **quadrature)
        worst = max(worst, abs(lhs - rhs))
    return worst


# ---------------------------------------------------------------------------
# leading Hadamard coefficient
# ---------------------------------------------------------------------------


def minkowski_metric(n: int) -> Callable:
    """``X -> diag(-1, 1, ..., 1)`` for points of shape ``(..., n)``."""
    eta = np.diag([-1.0] + [1.0] * (n - 1))
    return lambda X: np.broadcast_to(eta, np.shape(X)[:-1] + (n, n))


def metric_christoffel(metric: Callable, X: np.ndarray, step: float = 1e-3) -> np.ndarray:
    """``Gamma^a_bc`` at points ``X`` (shape ``(..., n)``), metric derivatives by
    fourth-order central differences.  Returns ``(..., a, b, c)``."""
    X = np.asarray(X, dtype=float)
    n = X.shape[-1]
    g = metric(X)
    ginv = np.linalg.inv(g)
    dg = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        d = (8.0 * (metric(X + e) - metric(X - e)) - (metric(X + 2 * e) - metric(X - 2 * e))) / (12.0 * step)
        dg.append(d)
    dg = np.stack(dg, axis=-3)  # (..., k, a, b) = d_k g_ab
    low = 0.5 * (np.einsum("...bac->...abc", dg) + np.einsum("...cab->...abc", dg) - dg)
    return np.einsum("...ad,...dbc->...abc", ginv, low)


@dataclass
class HadamardTransportState:
    """``V^0`` along one radial geodesic ``s -> exp_x(s X)``.

    ``box_gamma`` holds the d'Alembertian of the squared geodesic distance
    obtained from the exponential-map density; ``flag`` names the reason a
    ray was truncated (``None`` if it reached the requested radius).
    """

    base_point: np.ndarray
    direction: np.ndarray
    s: np.ndarray
    points: np.ndarray
    V: np.ndarray
    box_gamma: np.ndarray
    eps: float | None = None
    flag: str | None = None

    def to_dict(self) -> dict:
        return {"base_point": self.base_point.tolist(), "direction": self.direction.tolist(), "eps": self.eps,
                "s": self.s.tolist(), "V": self.V.tolist(), "box_gamma": self.box_gamma.tolist(),
                "flag": self.flag}


def _geodesic_rhs(metric: Callable, state: np.ndarray, fd_step: float) -> np.ndarray:
    pos, vel = state[..., 0, :], state[..., 1, :]
    gam = metric_christoffel(metric, pos, fd_step)
    return np.stack([vel, -np.einsum("...abc,...b,...c->...a", gam, vel, vel)], axis=-2)


def _log_density_rate(metric: Callable, s: float, state: np.ndarray, delta: float, fd_step: float):
    """``d/ds log mu`` along the central geodesic and the Jacobian condition number.

    ``state`` holds the central geodesic and its 2n perturbations (initial
    direction shifted by ``+-delta e_k``).  With ``A = dc/dX``
    (exponential-map Jacobian times s) the rate is
    ``Gamma^a_ak c'^k + tr(A^-1 A') - n / s``.
    """
    n = state.shape[-1]
    pos, vel = state[..., 0, :], state[..., 1, :]
    if s <= 0.0:
        return np.zeros(state.shape[0]), np.ones(state.shape[0])
    A = np.swapaxes((pos[:, 1:1 + n] - pos[:, 1 + n:]) / (2 * delta), -1, -2)
    Ad = np.swapaxes((vel[:, 1:1 + n] - vel[:, 1 + n:]) / (2 * delta), -1, -2)
    gam = metric_christoffel(metric, pos[:, 0], fd_step)
    vol = np.einsum("...aak,...k->...", gam, vel[:, 0])
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(A)
        trace = np.trace(np.linalg.solve(A, Ad), axis1=-2, axis2=-1)
    return vol + trace - n / s, cond


def _rays(metric: Callable, x: np.ndarray, directions: np.ndarray, radius: float, steps: int, delta: float,
          fd_step: float, time_bounds, cond_limit: float, eps):
    n = len(x)
    rays = directions.shape[0]
    perturb = np.concatenate([np.zeros((1, n)), delta * np.eye(n), -delta * np.eye(n)])
    vel0 = directions[:, None, :] + perturb[None, :, :]
    state = np.stack([np.broadcast_to(x, vel0.shape).copy(), vel0], axis=-2)  # (rays, 1+2n, 2, n)
    # geodesic bundle on the half-step grid, so that every Runge-Kutta stage
    # of the transport equation below sits on an accurately integrated node
    h2 = radius / (2 * steps)
    nodes = [state]
    for _ in range(2 * steps):
        k1 = _geodesic_rhs(metric, state, fd_step)
        k2 = _geodesic_rhs(metric, state + h2 / 2 * k1, fd_step)
        k3 = _geodesic_rhs(metric, state + h2 / 2 * k2, fd_step)
        k4 = _geodesic_rhs(metric, state + h2 * k3, fd_step)
        state = state + h2 / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        nodes.append(state)
    s_half = h2 * np.arange(2 * steps + 1)
    rate = np.empty((2 * steps + 1, rays))
    bad = np.zeros((2 * steps + 1, rays), dtype=object)
    for j, (sj, st) in enumerate(zip(s_half, nodes)):
        rate[j], cond = _log_density_rate(metric, sj, st, delta, fd_step)
        t = st[:, 0, 0, 0]
        for r in range(rays):
            if time_bounds is not None and not (time_bounds[0] <= t[r] <= time_bounds[1]):
                bad[j, r] = "left mesh"
            elif not np.isfinite(cond[r]) or cond[r] > cond_limit or not np.isfinite(rate[j, r]):
                bad[j, r] = "exponential map degenerate"
            else:
                bad[j, r] = None
    h = 2 * h2
    out = []
    for r in range(rays):
        V = [1.0]
        flag = None
        last = 0
        for k in range(steps):
            j = 2 * k
            if bad[j + 1, r] or bad[j + 2, r]:
                flag = bad[j + 1, r] or bad[j + 2, r]
                break
            c1, c2, c3 = -0.5 * rate[j, r], -0.5 * rate[j + 1, r], -0.5 * rate[j + 2, r]
            v = V[-1]
            k1 = c1 * v
            k2 = c2 * (v + h / 2 * k1)
            k3 = c2 * (v + h / 2 * k2)
            k4 = c3 * (v + h * k3)
            V.append(v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
            last = k + 1
        idx = 2 * np.arange(last + 1)
        s_arr = s_half[idx]
        pts = np.stack([nodes[j][r, 0, 0] for j in idx])
        box = 2.0 * n + 2.0 * s_arr * rate[idx, r]
        out.append(HadamardTransportState(np.array(x, dtype=float), directions[r].copy(), s_arr, pts,
                                          np.array(V), box, eps, flag))
    return out


def hadamard_v0(metric, x, directions, radius: float, steps: int = 100, delta: float = 1e-4,
                fd_step: float = 1e-3, cond_limit: float = 1e8):
    """Integrate the k = 0 transport equation along radial geodesics from ``x``.

    Along ``c(s) = exp_x(s X)`` the equation reads
    ``dV/ds = -(box Gamma_x / 2 - n) V / (2 s)``, with
    ``box Gamma_x = 2n + 2 s d/ds log mu_x`` where ``mu_x`` is the density of
    the metric volume in normal coordinates.  ``mu_x`` comes from the
    Jacobian of the exponential map (central differences over initial
    directions); geodesics, their variations and V advance together with a
    classical fourth-order Runge-Kutta step.

    Args:
        metric: ``None`` for Minkowski, a callable ``X -> g(X)`` or a
            :class:`~wavenets.spacetime.MetricSplit` (evaluated per eps).
        x: base point (time first).
        directions: initial tangent vectors, shape ``(rays, n)``.
        radius: final geodesic parameter.
        steps: number of Runge-Kutta steps.

    Returns:
        A list of :class:`HadamardTransportState` (one per ray), or for a
        MetricSplit a dict ``eps -> list`` over non-degenerate eps.
    """
    x = np.asarray(x, dtype=float)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    n = len(x)
    if directions.shape[1] != n:
        raise ValueError("directions must have the dimension of the base point")
    if radius <= 0 or steps < 1:
        raise ValueError("radius and steps must be positive")
    if metric is None:
        return _rays(minkowski_metric(n), x, directions, radius, steps, delta, fd_step, None, cond_limit, None)
    if callable(metric) and not hasattr(metric, "grid"):
        return _rays(metric, x, directions, radius, steps, delta, fd_step, None, cond_limit, None)
    if metric.dim + 1 != n:
        raise ValueError("base point dimension does not match the metric")
    t0, t1, _ = metric.mesh.times
    if not t0 <= x[0] <= t1:
        raise ValueError("base point lies outside the mesh")
    return {eps: _rays(metric.metric_function(i), x, directions, radius, steps, delta, fd_step, (t0, t1),
                       cond_limit, eps)
            for i, eps in enumerate(metric.grid) if not metric.degenerate[i]}
