"""Split Lorentz metrics ``-beta dt^2 + h_t`` indexed by eps, and checks on them.

A :class:`MetricSplit` stores, for every eps of an :class:`EpsGrid`, callables
``beta(t, *x)`` and ``h(t, *x)`` (the latter returning ``d x d`` matrices in
its last two axes).  Checks sample these callables on a space-time
:class:`Mesh` (time axis required) and fit growth exponents with
:func:`wavenets.nets.estimate_order`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .nets import (
    AsymptoticEstimate,
    EpsGrid,
    Mesh,
    Mollifier,
    ScalarNet,
    _box_slices,
    _check_resolution,
    derivative,
    estimate_order,
    mollify_samples,
)

__all__ = [
    "BackgroundMetric",
    "MetricSplit",
    "CovectorFieldSigma",
    "make_minkowski",
    "make_robertson_walker",
    "make_pp_wave_rosen",
    "make_static",
    "make_adversarial",
    "mollify_metric",
    "christoffel",
    "check_condition_A",
    "check_condition_B",
    "check_splitting",
    "check_luni_positive",
    "ConditionAReport",
    "ConditionBReport",
    "SplittingReport",
    "LuniReport",
]

DEFAULT_SLACK = 0.3


@dataclass(frozen=True)
class BackgroundMetric:
    """Constant Riemannian metric ``m`` on space-time used for tensor norms,
    plus an optional constant lower-bound metric ``rho`` for the slices."""

    matrix: np.ndarray | None = None
    rho: np.ndarray | None = None

    def __post_init__(self):
        for name in ("matrix", "rho"):
            m = getattr(self, name)
            if m is not None:
                m = np.asarray(m, dtype=float)
                if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.allclose(m, m.T):
                    raise ValueError(f"{name} must be a symmetric matrix")
                if np.linalg.eigvalsh(m).min() <= 0:
                    raise ValueError(f"{name} must be positive definite")
                object.__setattr__(self, name, m)

    def norm2(self, tensor: np.ndarray) -> np.ndarray:
        """Pointwise ``|T|_m`` for (0,2)-tensors stored in the last two axes."""
        if self.matrix is None:
            return np.sqrt(np.sum(tensor**2, axis=(-2, -1)))
        minv = np.linalg.inv(self.matrix)
        raised = np.einsum("ac,...cd,db->...ab", minv, tensor, minv)
        return np.sqrt(np.abs(np.einsum("...ab,...ab->...", raised, tensor)))


FLAT = BackgroundMetric()


def _as_fn(v) -> Callable:
    return v if callable(v) else (lambda *_: v)


@dataclass(frozen=True, eq=False)
class MetricSplit:
    """Net of split metrics ``g_eps = -beta_eps dt^2 + h_eps``.

    Attributes:
        grid: the eps grid.
        mesh: space-time mesh (time axis required) on which checks sample.
        beta_fns, h_fns: one callable per eps.  ``beta(t, *x)`` returns an
            array broadcast from the inputs; ``h(t, *x)`` returns the same
            shape plus ``(d, d)``.
        time_scales: per-eps smallest time scale on which the metric varies
            (``None`` when it is smooth on the scale of the mesh); the solver
            keeps its step below a quarter of it.
        static: whether the metric is independent of t.
        degenerate: per-eps flags for samples where beta <= 0 or h fails to
            be positive definite.
    """

    grid: EpsGrid
    mesh: Mesh
    beta_fns: tuple
    h_fns: tuple
    time_scales: tuple = ()
    static: bool = False
    label: str = "metric"
    allow_degenerate: bool = False
    background: BackgroundMetric = FLAT
    params: dict = field(default_factory=dict)
    degenerate: tuple = ()

    def __post_init__(self):
        if not self.mesh.has_time:
            raise ValueError("a metric net needs a mesh with a time axis")
        if self.mesh.dim not in (1, 2):
            raise ValueError("spatial dimension must be 1 or 2")
        ne = len(self.grid)
        if len(self.beta_fns) != ne or len(self.h_fns) != ne:
            raise ValueError("need one beta and one h callable per eps")
        scales = tuple(self.time_scales) if self.time_scales else (None,) * ne
        if len(scales) != ne:
            raise ValueError("time_scales must have one entry per eps")
        object.__setattr__(self, "time_scales", scales)
        flags = tuple(self._degenerate_at(i) for i in range(ne))
        if any(flags) and not self.allow_degenerate:
            bad = [e for e, f in zip(self.grid, flags) if f]
            raise ValueError(f"metric is degenerate (beta <= 0 or h not positive definite) for eps {bad}")
        object.__setattr__(self, "degenerate", flags)

    @property
    def dim(self) -> int:
        return self.mesh.dim

    def beta(self, i: int, t, *xs) -> np.ndarray:
        t, *xs = np.broadcast_arrays(np.asarray(t, dtype=float), *[np.asarray(x, dtype=float) for x in xs])
        return np.broadcast_to(self.beta_fns[i](t, *xs), t.shape).astype(float)

    def h(self, i: int, t, *xs) -> np.ndarray:
        t, *xs = np.broadcast_arrays(np.asarray(t, dtype=float), *[np.asarray(x, dtype=float) for x in xs])
        return np.broadcast_to(self.h_fns[i](t, *xs), t.shape + (self.dim, self.dim)).astype(float)

    def g(self, i: int, t, *xs) -> np.ndarray:
        """Full metric components ``(..., n, n)`` with n = d + 1, time first."""
        b = self.beta(i, t, *xs)
        h = self.h(i, t, *xs)
        n = self.dim + 1
        out = np.zeros(b.shape + (n, n))
        out[..., 0, 0] = -b
        out[..., 1:, 1:] = h
        return out

    def g_inv(self, i: int, t, *xs) -> np.ndarray:
        """Blockwise inverse ``diag(-1/beta, h^-1)``."""
        b = self.beta(i, t, *xs)
        h = self.h(i, t, *xs)
        n = self.dim + 1
        out = np.zeros(b.shape + (n, n))
        out[..., 0, 0] = -1.0 / b
        out[..., 1:, 1:] = np.linalg.inv(h)
        return out

    def sample(self, i: int, mesh: Mesh | None = None):
        """``(beta, h)`` sampled on the space-time mesh."""
        mesh = mesh or self.mesh
        coords = mesh.coords()
        return self.beta(i, *coords), self.h(i, *coords)

    def metric_function(self, i: int) -> Callable:
        """``X -> g(X)`` for points ``X`` of shape ``(..., n)`` (time first)."""
        def fn(X):
            X = np.asarray(X, dtype=float)
            return self.g(i, X[..., 0], *[X[..., k] for k in range(1, X.shape[-1])])
        return fn

    def _degenerate_at(self, i: int) -> bool:
        b, h = self.sample(i)
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(h))):
            return True
        if np.max(np.abs(h - np.swapaxes(h, -1, -2))) > 0:
            raise ValueError("h must be exactly symmetric")
        return bool(np.min(b) <= 0 or np.min(np.linalg.eigvalsh(h)) <= 0)

    def active_indices(self) -> list[int]:
        return [i for i, f in enumerate(self.degenerate) if not f]

    def sigma(self, i: int, mesh: Mesh | None = None) -> "CovectorFieldSigma":
        b, _ = self.sample(i, mesh)
        return CovectorFieldSigma.from_beta(b)

    def describe(self) -> dict:
        return {"label": self.label, "static": self.static, "params": self.params,
                "eps_grid": self.grid.to_list(), "mesh": self.mesh.to_dict(),
                "degenerate_eps": [e for e, f in zip(self.grid, self.degenerate) if f]}


@dataclass(frozen=True)
class CovectorFieldSigma:
    """The time one-form ``sigma = dt`` in split form.

    ``xi = grad t = -(1/beta) d_t``, ``V^2 = -g(xi, xi) = 1/beta`` and the
    unit normal ``xi / V = -beta^(-1/2) d_t``.
    """

    V: np.ndarray
    xi_hat_t: np.ndarray

    @classmethod
    def from_beta(cls, beta: np.ndarray) -> "CovectorFieldSigma":
        beta = np.asarray(beta, dtype=float)
        if np.any(beta <= 0):
            raise ValueError("beta must be positive")
        return cls(V=beta**-0.5, xi_hat_t=-(beta**-0.5))


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def _identity(d: int) -> Callable:
    eye = np.eye(d)
    return lambda t, *xs: np.broadcast_to(eye, np.shape(t) + (d, d))


def make_static(mesh: Mesh, grid: EpsGrid, beta: Callable | float = 1.0, h: Callable | None = None,
                label: str = "static", allow_degenerate: bool = False, params: dict | None = None) -> MetricSplit:
    """Time independent metric with the same (or eps-dependent) components.

    ``beta`` and ``h`` may be constants or callables; callables accepting an
    ``eps`` keyword are evaluated per eps.
    """
    def per_eps(fn, eps):
        if not callable(fn):
            return _as_fn(fn)
        try:
            fn(np.zeros(1), *[np.zeros(1)] * mesh.dim, eps=eps)
        except TypeError:
            return fn
        return lambda t, *xs, _e=eps: fn(t, *xs, eps=_e)

    h = h if h is not None else _identity(mesh.dim)
    return MetricSplit(grid, mesh, tuple(per_eps(beta, e) for e in grid), tuple(per_eps(h, e) for e in grid),
                       static=True, label=label, allow_degenerate=allow_degenerate, params=dict(params or {}))


def make_minkowski(mesh: Mesh, grid: EpsGrid) -> MetricSplit:
    """``beta = 1``, ``h = id`` for every eps."""
    return make_static(mesh, grid, 1.0, None, label="minkowski")


def make_robertson_walker(f, h0=None, mesh: Mesh | None = None, grid: EpsGrid | None = None,
                          time_scale: Callable[[float], float | None] | None = None) -> MetricSplit:
    """``beta = 1`` and ``h_t = f(t)^2 h0``.

    Args:
        f: positive scale factor; a constant, a callable ``f(t)`` or a
            callable ``f(t, eps)``.
        h0: spatial metric (constant matrix, callable of ``(*x)`` or
            ``(*x, eps)``); identity by default.
        mesh, grid: space-time mesh and eps grid.
        time_scale: optional map eps -> time scale of ``f_eps``.
    """
    if mesh is None or grid is None:
        raise ValueError("mesh and grid are required")
    d = mesh.dim

    def f_eps(eps):
        if not callable(f):
            return lambda t: np.full(np.shape(t), float(f))
        try:
            f(np.zeros(1), eps)
        except TypeError:
            return lambda t: np.asarray(f(t), dtype=float) * np.ones(np.shape(t))
        return lambda t, _e=eps: np.asarray(f(t, _e), dtype=float) * np.ones(np.shape(t))

    def h0_eps(eps):
        if h0 is None:
            eye = np.eye(d)
            return lambda *xs: eye
        if not callable(h0):
            m = np.asarray(h0, dtype=float)
            return lambda *xs: m
        try:
            h0(*[np.zeros(1)] * d, eps)
        except TypeError:
            return h0
        return lambda *xs, _e=eps: h0(*xs, _e)

    t_axis = mesh.time_values()
    fns_b, fns_h = [], []
    for eps in grid:
        fe, he = f_eps(eps), h0_eps(eps)
        if np.min(fe(t_axis)) <= 0:
            raise ValueError("scale factor f must be positive on the mesh")
        fns_b.append(lambda t, *xs: np.ones(np.shape(t)))
        fns_h.append(lambda t, *xs, _f=fe, _h=he: (_f(t) ** 2)[..., None, None] * _h(*xs))
    static = not callable(f)
    scales = tuple(time_scale(e) if time_scale else None for e in grid)
    return MetricSplit(grid, mesh, tuple(fns_b), tuple(fns_h), scales, static=static, label="robertson_walker",
                       params={"f": f if not callable(f) else getattr(f, "__name__", "callable")})


def make_pp_wave_rosen(mesh: Mesh, grid: EpsGrid, kink_mollified: bool = True) -> MetricSplit:
    """Plane-symmetric impulsive wave slab: ``beta = 1``,
    ``h_t = diag((1 + u)^2, (1 - u)^2)`` with ``u`` the kink ``max(t, 0)``,
    exact or mollified (``eps K(t / eps)``).

    The mesh time axis must stay inside ``|t| < 1``, where ``1 - u`` is positive.
    """
    if mesh.dim != 2:
        raise ValueError("the pp-wave slab has two spatial dimensions")
    t0, t1, _ = mesh.times
    if max(abs(t0), abs(t1)) >= 1.0:
        raise ValueError("pp-wave slab requires |t| < 1 (the metric degenerates at u = 1)")
    mol = Mollifier.of_dim(1)

    def kink(eps):
        if not kink_mollified:
            return lambda t: np.maximum(t, 0.0)
        return lambda t, _e=eps: _e * mol.kink(np.asarray(t) / _e)

    fns_b, fns_h = [], []
    for eps in grid:
        u = kink(eps)

        def h(t, *xs, _u=u):
            t = np.asarray(t, dtype=float)
            if t.size > 1 and np.all(t == t.flat[0]):
                uv = np.full(t.shape, float(_u(t.flat[0])))
            else:
                uv = _u(t)
            out = np.zeros(np.shape(uv) + (2, 2))
            out[..., 0, 0] = (1 + uv) ** 2
            out[..., 1, 1] = (1 - uv) ** 2
            return out

        fns_b.append(lambda t, *xs: np.ones(np.shape(t)))
        fns_h.append(h)
    scales = tuple(e if kink_mollified else None for e in grid)
    return MetricSplit(grid, mesh, tuple(fns_b), tuple(fns_h), scales, static=False, label="pp_wave",
                       params={"kink_mollified": kink_mollified, "T": max(abs(t0), abs(t1))})


def make_adversarial(mesh: Mesh, grid: EpsGrid) -> MetricSplit:
    """``beta = 1``, ``h_eps = (1 + eps^-2 sin x_1) id``: violates every growth bound
    (and positivity), kept as a negative control."""
    d = mesh.dim

    def h(t, *xs, eps):
        s = 1.0 + np.sin(xs[0]) / eps**2
        return s[..., None, None] * np.eye(d)

    return make_static(mesh, grid, 1.0, h, label="adversarial", allow_degenerate=True)


class _SampledField:
    """Cubic interpolation of samples on a space-time mesh (periodic in space)."""

    def __init__(self, values: np.ndarray, mesh: Mesh, pad: int = 3):
        self.mesh = mesh
        self.tail = values.shape[len(mesh.full_shape):]
        v = values
        for ax in range(1, 1 + mesh.dim):
            v = np.concatenate([np.take(v, range(-pad, 0), axis=ax), v, np.take(v, range(pad), axis=ax)], axis=ax)
        axes = [mesh.time_values()]
        for i in range(mesh.dim):
            axes.append(mesh.origin[i] + mesh.spacing[i] * np.arange(-pad, mesh.shape[i] + pad))
        flat = v.reshape(v.shape[: 1 + mesh.dim] + (-1,))
        method = "cubic" if min(len(a) for a in axes) >= 4 else "linear"
        self.interp = RegularGridInterpolator(axes, flat, method=method, bounds_error=False, fill_value=None)

    def __call__(self, t, *xs):
        t, *xs = np.broadcast_arrays(np.asarray(t, dtype=float), *[np.asarray(x, dtype=float) for x in xs])
        t0, t1, _ = self.mesh.times
        pts = [np.clip(t, t0, t1)]
        for i, x in enumerate(xs):
            o, L = self.mesh.origin[i], self.mesh.lengths[i]
            pts.append(o + np.mod(x - o, L))
        vals = self.interp(np.stack([p.reshape(-1) for p in pts], axis=-1))
        return vals.reshape(t.shape + self.tail)


def mollify_metric(beta_samples, h_samples, mesh: Mesh, grid: EpsGrid, label: str = "mollified") -> MetricSplit:
    """Componentwise convolution of a sampled continuous metric with ``rho_eps``.

    ``beta_samples`` has shape ``mesh.full_shape`` and ``h_samples`` shape
    ``mesh.full_shape + (d, d)``.  The kernel acts in all space-time
    coordinates.  Eps values at which the result loses positivity are
    flagged in ``degenerate``; ``params['positive_below']`` records the
    largest eps below which no flag occurs.
    """
    beta_samples = np.asarray(beta_samples, dtype=float)
    h_samples = np.asarray(h_samples, dtype=float)
    d = mesh.dim
    if beta_samples.shape != mesh.full_shape or h_samples.shape != mesh.full_shape + (d, d):
        raise ValueError("sample shapes do not match the mesh")
    if np.max(np.abs(h_samples - np.swapaxes(h_samples, -1, -2))) > 0:
        raise ValueError("h samples must be symmetric")
    _check_resolution(mesh.spatial(), grid)
    if mesh.dt > grid.finest / 4 + 1e-15:
        raise ValueError("time step too coarse for the finest eps")
    fb, fh = [], []
    for eps in grid:
        b = mollify_samples(beta_samples, mesh, eps)
        hm = np.moveaxis(mollify_samples(np.moveaxis(h_samples, (-2, -1), (0, 1)), mesh, eps), (0, 1), (-2, -1))
        hm = 0.5 * (hm + np.swapaxes(hm, -1, -2))
        fb.append(_SampledField(b, mesh))
        fh.append(_SampledField(hm, mesh))
    ms = MetricSplit(grid, mesh, tuple(fb), tuple(fh), tuple(grid), static=False, label=label,
                     allow_degenerate=True)
    ok_below = None
    for e, flag in zip(grid, ms.degenerate):
        if flag:
            ok_below = None
        elif ok_below is None:
            ok_below = e
    ms.params["positive_below"] = ok_below
    return ms


# ---------------------------------------------------------------------------
# differential quantities
# ---------------------------------------------------------------------------


def _mesh_derivatives(field: np.ndarray, mesh: Mesh, accuracy: int = 4, static: bool = False) -> np.ndarray:
    """First derivatives of a sampled field along every space-time axis,
    stacked in a new leading axis (n, ...).  ``static`` skips the time axis."""
    if static:
        out = [np.zeros_like(field)]
    else:
        out = [derivative(field, 0, 1, mesh.dt, periodic=False, accuracy=accuracy)]
    for i in range(mesh.dim):
        out.append(derivative(field, i + 1, 1, mesh.spacing[i], periodic=True, accuracy=accuracy))
    return np.stack(out)


def christoffel(g: np.ndarray, g_inv: np.ndarray, mesh: Mesh, static: bool = False) -> np.ndarray:
    """``Gamma^c_ab`` (array ``(..., c, a, b)``) from sampled metric components."""
    dg = _mesh_derivatives(g, mesh, static=static)  # (k, ..., a, b) = d_k g_ab
    dg = np.moveaxis(dg, 0, -3)  # (..., k, a, b)
    # Gamma_{d a b} = 1/2 (d_a g_db + d_b g_da - d_d g_ab)
    first = np.einsum("...adb->...dab", dg)   # d_a g_db
    second = np.einsum("...bda->...dab", dg)  # d_b g_da
    third = dg                                 # d_d g_ab indexed (..., d, a, b)
    low = 0.5 * (first + second - third)
    return np.einsum("...cd,...dab->...cab", g_inv, low)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def _verdict_growth(est: AsymptoticEstimate, bound: float) -> bool:
    return est.bounded_by(bound)


@dataclass(frozen=True)
class ConditionAReport:
    g_estimates: dict
    ginv_estimates: dict
    slack: float
    passed: bool
    per_k: dict

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "slack": self.slack,
            "per_k": {str(k): v for k, v in self.per_k.items()},
            "g": {str(k): e.to_dict() for k, e in self.g_estimates.items()},
            "g_inv": {str(k): e.to_dict() for k, e in self.ginv_estimates.items()},
        }


def _check_time_resolution(g: MetricSplit):
    scales = [s for s in g.time_scales if s is not None]
    if scales and g.mesh.dt > min(scales) / 4 + 1e-15:
        raise ValueError(f"mesh time step {g.mesh.dt:.3g} does not resolve the metric time scale {min(scales):.3g}")


def check_condition_A(g: MetricSplit, K=None, k_max: int = 3, slack: float = DEFAULT_SLACK) -> ConditionAReport:
    """Growth exponents of ``sup_K |d^k g_eps|_m`` and ``sup_K |d^k g_eps^-1|_m``.

    Every multi-index of order ``k`` over the coordinate fields (t first) is
    included.  PASS iff each fitted exponent is at most ``k + slack``
    (identically vanishing derivatives count as PASS).
    """
    if not 0 <= k_max <= 3:
        raise ValueError("k_max must be between 0 and 3")
    _check_time_resolution(g)
    mesh = g.mesh
    sl = (slice(None),) + _box_slices(mesh, K)
    n = mesh.dim + 1
    active = g.active_indices() if g.allow_degenerate else range(len(g.grid))
    sups_g = {k: np.zeros(len(g.grid)) for k in range(k_max + 1)}
    sups_gi = {k: np.zeros(len(g.grid)) for k in range(k_max + 1)}
    for i in range(len(g.grid)):
        coords = mesh.coords()
        G = g.g(i, *coords)
        with np.errstate(divide="ignore", invalid="ignore"):
            b = g.beta(i, *coords)
            h = g.h(i, *coords)
            Gi = np.zeros_like(G)
            Gi[..., 0, 0] = -1.0 / b
            try:
                Gi[..., 1:, 1:] = np.linalg.inv(h)
            except np.linalg.LinAlgError:
                Gi[...] = np.inf
        for field_, sups in ((G, sups_g), (Gi, sups_gi)):
            levels = {(): field_}
            for k in range(k_max + 1):
                worst = 0.0
                for mi in itertools.combinations_with_replacement(range(n), k):
                    arr = levels.get(mi)
                    if arr is None:
                        prev = levels[mi[:-1]]
                        ax = mi[-1]
                        if ax == 0:
                            arr = derivative(prev, 0, 1, mesh.dt, periodic=False)
                        else:
                            arr = derivative(prev, ax, 1, mesh.spacing[ax - 1], periodic=True)
                        levels[mi] = arr
                    vals = g.background.norm2(arr)[sl[1:]]
                    vals = np.where(np.isfinite(vals), vals, np.inf)
                    worst = max(worst, float(np.max(vals)))
                sups[k][i] = worst
    per_k, est_g, est_gi = {}, {}, {}
    passed = True
    for k in range(k_max + 1):
        est_g[k] = estimate_order(sups_g[k], g.grid)
        est_gi[k] = estimate_order(sups_gi[k], g.grid)
        ok = _verdict_growth(est_g[k], k + slack) and _verdict_growth(est_gi[k], k + slack)
        per_k[k] = ok
        passed = passed and ok
    return ConditionAReport(est_g, est_gi, slack, passed, per_k)


@dataclass(frozen=True)
class ConditionBReport:
    C_timelike: float
    C_timelike_per_eps: tuple
    nabla_sigma_estimate: AsymptoticEstimate
    II_estimate: AsymptoticEstimate
    timelike_pass: bool
    nabla_sigma_pass: bool
    II_pass: bool

    @property
    def passed(self) -> bool:
        return self.timelike_pass and self.nabla_sigma_pass and self.II_pass

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "C_timelike": self.C_timelike,
            "C_timelike_per_eps": list(self.C_timelike_per_eps),
            "timelike_pass": self.timelike_pass,
            "nabla_sigma": self.nabla_sigma_estimate.to_dict(),
            "nabla_sigma_pass": self.nabla_sigma_pass,
            "II": self.II_estimate.to_dict(),
            "II_pass": self.II_pass,
        }


def check_condition_B(g: MetricSplit, K=None, slack: float = DEFAULT_SLACK) -> ConditionBReport:
    """Uniform timelikeness of dt and boundedness of its covariant derivative.

    ``C_timelike = inf -g^-1(dt, dt) = inf 1/beta`` over K and eps.
    ``nabla sigma = -Gamma^t_ab`` with Christoffels from finite differences;
    the second fundamental form of the slices is its tangential block
    scaled by ``sqrt(beta)``.
    """
    _check_time_resolution(g)
    mesh = g.mesh
    sl = _box_slices(mesh, K)
    ne = len(g.grid)
    c_eps = np.zeros(ne)
    s_sig = np.zeros(ne)
    s_ii = np.zeros(ne)
    for i in range(ne):
        coords = mesh.coords()
        G = g.g(i, *coords)
        Gi = g.g_inv(i, *coords)
        b = g.beta(i, *coords)
        c_eps[i] = float(np.min(1.0 / b[sl]))
        gam = christoffel(G, Gi, mesh)
        nab = -gam[..., 0, :, :]
        s_sig[i] = float(np.max(g.background.norm2(nab)[sl]))
        ii = np.sqrt(b)[..., None, None] * nab[..., 1:, 1:]
        s_ii[i] = float(np.max(np.sqrt(np.sum(ii**2, axis=(-2, -1)))[sl]))
    C = float(np.min(c_eps))
    c_fit = estimate_order(1.0 / c_eps, g.grid)
    timelike_ok = C > 0 and _verdict_growth(c_fit, slack)
    e_sig = estimate_order(s_sig, g.grid)
    e_ii = estimate_order(s_ii, g.grid)
    return ConditionBReport(C, tuple(c_eps.tolist()), e_sig, e_ii, bool(timelike_ok),
                            _verdict_growth(e_sig, slack), _verdict_growth(e_ii, slack))


@dataclass(frozen=True)
class LuniReport:
    C: float
    minima: tuple
    estimate: AsymptoticEstimate
    passed: bool

    def to_dict(self) -> dict:
        return {"C": self.C, "minima": list(self.minima), "estimate": self.estimate.to_dict(), "pass": self.passed}


def check_luni_positive(net: ScalarNet, K=None, slack: float = DEFAULT_SLACK, tail: int = 3) -> LuniReport:
    """Locally uniform positivity: ``inf_K u_eps >= C > 0`` along the eps tail.

    ``C`` is the infimum over K and the last ``tail`` eps.  A positive
    infimum that still decays like a power of eps (fitted exponent below
    ``-slack``) is not uniform and fails.
    """
    vals = net.samples[(slice(None),) + _box_slices(net.mesh, K)]
    minima = vals.reshape(len(net.grid), -1).min(axis=1)
    C = float(np.min(minima[-tail:]))
    if C <= 0:
        est = estimate_order(np.abs(minima), net.grid)
        return LuniReport(C, tuple(minima.tolist()), est, False)
    est = estimate_order(minima, net.grid)
    passed = est.exponent >= -slack
    return LuniReport(C, tuple(minima.tolist()), est, bool(passed))


@dataclass(frozen=True)
class SplittingReport:
    beta_bounded: bool
    beta_estimate: AsymptoticEstimate
    beta_luni: LuniReport
    h_lower_bound: float
    h_lower_per_eps: tuple
    h_lower_pass: bool
    det_h_exponent: float

    @property
    def passed(self) -> bool:
        return self.beta_bounded and self.beta_luni.passed and self.h_lower_pass

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "beta_bounded": self.beta_bounded,
            "beta_sup": self.beta_estimate.to_dict(),
            "beta_luni_positive": self.beta_luni.to_dict(),
            "h_lower_bound_c": self.h_lower_bound,
            "h_lower_per_eps": list(self.h_lower_per_eps),
            "h_lower_pass": self.h_lower_pass,
            "det_h_exponent": self.det_h_exponent,
        }


def check_splitting(g: MetricSplit, T: float | None = None, slack: float = DEFAULT_SLACK) -> SplittingReport:
    """Boundedness and uniform positivity of beta and a uniform lower bound on h.

    ``h - rho >= 0`` is tested with ``rho = c * flat`` (or ``c * rho`` for the
    background lower-bound metric); ``c`` is the largest admissible constant
    over ``t`` in ``[-T, T]`` (clipped to the mesh) and all eps.
    """
    mesh = g.mesh
    t0, t1, _ = mesh.times
    box = None
    if T is not None:
        if T <= 0:
            raise ValueError("T must be positive")
        box = [(max(-T, t0), min(T, t1))] + [None] * mesh.dim
    sl = _box_slices(mesh, box)
    ne = len(g.grid)
    beta_all = np.zeros((ne,) + mesh.full_shape)
    c_eps = np.zeros(ne)
    det_min = np.zeros(ne)
    rho = g.background.rho
    if rho is not None:
        L = np.linalg.cholesky(rho)
        Linv = np.linalg.inv(L)
    for i in range(ne):
        b, h = g.sample(i)
        beta_all[i] = b
        hs = h[sl]
        if rho is not None:
            hs = np.einsum("ab,...bc,dc->...ad", Linv, hs, Linv)
        c_eps[i] = float(np.min(np.linalg.eigvalsh(hs)[..., 0]))
        det_min[i] = float(np.min(np.linalg.det(h[sl])))
    bnet = ScalarNet(g.grid, mesh, beta_all)
    b_est = estimate_order(bnet.sup(box), g.grid)
    luni = check_luni_positive(bnet, box, slack)
    c = float(np.min(c_eps))
    if c > 0:
        lower_ok = _verdict_growth(estimate_order(1.0 / c_eps, g.grid), slack)
        det_exp = estimate_order(1.0 / det_min, g.grid).exponent if np.all(det_min > 0) else math.inf
    else:
        lower_ok, det_exp = False, math.inf
    return SplittingReport(_verdict_growth(b_est, slack), b_est, luni, c, tuple(c_eps.tolist()), bool(lower_ok),
                           float(det_exp))
