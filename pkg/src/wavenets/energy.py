"""Energies of solution candidates on split metrics.

With the time one-form ``sigma = dt`` and its normalization ``sigma_hat =
sqrt(beta) dt`` the auxiliary Riemannian metric is ``e = g + 2 sigma_hat
sigma_hat``, i.e. ``beta dt^2 + h``.  Order-k energy momentum tensors are::

    T^{ab,0} = -1/2 g^ab u^2
    T^{ab,k} = (g^ac g^bd - 1/2 g^ab g^cd) e^{p q} (nabla_c nabla_p u)(nabla_d nabla_q u)   (k = 2)

(no ``e`` factors for k = 1), and the energy on the slice ``t = tau`` is::

    E^k_tau = sum_{j <= k} int T^{ab,j} xi_a xi_b V^-1 sqrt(det h) dx

with ``xi = dt`` and ``V = (-g(xi, xi))^(1/2) = beta^(-1/2)``.  Covariant
derivatives stop at order two.  Spatial derivatives are fourth-order periodic
differences; time derivatives are the solver's stored ``u_t`` and ``u_tt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .nets import AsymptoticEstimate, EpsGrid, Mesh, ScalarNet, _json_float, derivative, estimate_order
from .solver import SolutionNet, _source
from .spacetime import MetricSplit, _check_time_resolution, _mesh_derivatives, christoffel

__all__ = [
    "FieldNet",
    "AuxMetricE",
    "aux_metric",
    "pointwise_norm",
    "SobolevNorms",
    "sobolev_norms",
    "energy_tensor",
    "energy_integral",
    "energy_summands",
    "energy_history",
    "verify_dominant_energy",
    "verify_norm_energy_equivalence",
    "EquivalenceReport",
    "verify_gronwall",
    "GronwallReport",
    "EnergyReport",
    "energy_report",
]

MAX_ORDER = 2


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FieldNet:
    """A net of fields on a space-time mesh with its time derivatives.

    ``u_tt`` is only needed for order-2 quantities.  ``f`` is the
    inhomogeneity (same conventions as ``CauchyData.f``) or ``None``.
    """

    u: ScalarNet
    u_t: ScalarNet
    metric: MetricSplit
    u_tt: ScalarNet | None = None
    f: Callable | ScalarNet | None = None

    def __post_init__(self):
        if not self.u.mesh.has_time:
            raise ValueError("fields need a space-time mesh")
        for other in (self.u_t, self.u_tt):
            if other is not None and (other.grid != self.u.grid or other.mesh != self.u.mesh):
                raise ValueError("field components must share grid and mesh")
        if self.metric.grid != self.u.grid:
            raise ValueError("metric and fields must share the eps grid")

    @property
    def grid(self) -> EpsGrid:
        return self.u.grid

    @property
    def mesh(self) -> Mesh:
        return self.u.mesh

    @property
    def times(self) -> np.ndarray:
        return self.mesh.time_values()

    @classmethod
    def from_solution(cls, sol: SolutionNet) -> "FieldNet":
        return cls(sol.u, sol.u_t, sol.metric, sol.u_tt, sol.data.f)

    @classmethod
    def from_functions(cls, grid: EpsGrid, mesh: Mesh, metric: MetricSplit, u: Callable,
                       u_t: Callable, u_tt: Callable | None = None, f=None) -> "FieldNet":
        """Sample callables ``fn(eps, t, *x)`` on the space-time mesh."""
        nets = [None if fn is None else ScalarNet.from_function(grid, mesh, fn) for fn in (u, u_t, u_tt)]
        return cls(nets[0], nets[1], metric, nets[2], f)

    def scaled(self, a: float) -> "FieldNet":
        f = self.f
        if isinstance(f, ScalarNet):
            f = f * a
        elif callable(f):
            f = (lambda t, *xs, _f=f, **kw: a * np.asarray(_f(t, *xs, **kw)))
        return FieldNet(self.u * a, self.u_t * a, self.metric,
                        None if self.u_tt is None else self.u_tt * a, f)


def _as_fields(obj) -> FieldNet:
    if isinstance(obj, FieldNet):
        return obj
    if isinstance(obj, SolutionNet):
        return FieldNet.from_solution(obj)
    raise TypeError(f"expected FieldNet or SolutionNet, got {type(obj).__name__}")


# ---------------------------------------------------------------------------
# auxiliary metric
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AuxMetricE:
    """``e = g + 2 sigma_hat (x) sigma_hat`` for every eps of a metric net.

    ``e_estimate`` and ``grad_e_estimate`` are the asymptotic orders of the
    sup (Frobenius) norms of ``e`` and ``nabla e`` on the metric mesh.
    """

    metric: MetricSplit
    e_sups: np.ndarray
    grad_e_sups: np.ndarray
    e_estimate: AsymptoticEstimate
    grad_e_estimate: AsymptoticEstimate
    positive: bool

    def e(self, i: int, t, *xs) -> np.ndarray:
        g = self.metric
        b = g.beta(i, t, *xs)
        out = np.zeros(b.shape + (g.dim + 1,) * 2)
        out[..., 0, 0] = b
        out[..., 1:, 1:] = g.h(i, t, *xs)
        return out

    def e_inv(self, i: int, t, *xs) -> np.ndarray:
        g = self.metric
        b = g.beta(i, t, *xs)
        out = np.zeros(b.shape + (g.dim + 1,) * 2)
        out[..., 0, 0] = 1.0 / b
        out[..., 1:, 1:] = np.linalg.inv(g.h(i, t, *xs))
        return out

    def contract(self, T: np.ndarray, signature: str, i: int, t, *xs) -> np.ndarray:
        """``|T|_e^2`` for samples of ``T``; see ``pointwise_norm``."""
        return pointwise_norm(T, signature, self.e(i, t, *xs), self.e_inv(i, t, *xs))

    def to_dict(self) -> dict:
        return {"positive_definite": self.positive,
                "e_sups": [_json_float(v) for v in self.e_sups],
                "grad_e_sups": [_json_float(v) for v in self.grad_e_sups],
                "e_estimate": self.e_estimate.to_dict(),
                "grad_e_estimate": self.grad_e_estimate.to_dict()}


def _split_g(beta: np.ndarray, h: np.ndarray, sign: float) -> np.ndarray:
    out = np.zeros(beta.shape + (h.shape[-1] + 1,) * 2)
    out[..., 0, 0] = sign * beta
    out[..., 1:, 1:] = h
    return out


def aux_metric(g: MetricSplit) -> AuxMetricE:
    """Build ``e`` for every eps, check positivity and measure ``|e|`` and ``|nabla e|``."""
    if not g.static:
        _check_time_resolution(g)
    e_sups, grad_sups = [], []
    positive = True
    for i in range(len(g.grid)):
        if g.degenerate[i]:
            e_sups.append(math.inf)
            grad_sups.append(math.inf)
            continue
        beta, h = g.sample(i)
        e = _split_g(beta, h, 1.0)
        try:
            np.linalg.cholesky(e)
        except np.linalg.LinAlgError:
            positive = False
        gm = _split_g(beta, h, -1.0)
        ginv = np.zeros_like(gm)
        ginv[..., 0, 0] = -1.0 / beta
        ginv[..., 1:, 1:] = np.linalg.inv(h)
        gamma = christoffel(gm, ginv, g.mesh, g.static)                   # (..., c, a, b)
        de = np.moveaxis(_mesh_derivatives(e, g.mesh, static=g.static), 0, -3)      # (..., c, a, b) = d_c e_ab
        grad = (de - np.einsum("...dca,...db->...cab", gamma, e)
                - np.einsum("...dcb,...ad->...cab", gamma, e))
        e_sups.append(float(np.max(np.sqrt(np.sum(e**2, axis=(-2, -1))))))
        grad_sups.append(float(np.max(np.sqrt(np.sum(grad**2, axis=(-3, -2, -1))))))
    e_sups = np.array(e_sups)
    grad_sups = np.array(grad_sups)
    return AuxMetricE(g, e_sups, grad_sups, estimate_order(e_sups, g.grid),
                      estimate_order(grad_sups, g.grid), positive)


def pointwise_norm(T: np.ndarray, signature: str, e: np.ndarray, e_inv: np.ndarray) -> np.ndarray:
    """``|T|_e^2`` for a tensor field with index signature such as ``""``,
    ``"l"``, ``"ul"``.

    The trailing ``len(signature)`` axes of ``T`` are tensor indices; a lower
    index (``l``) is contracted with ``e^-1`` and an upper one (``u``) with
    ``e``.
    """
    T = np.asarray(T, dtype=float)
    r = len(signature)
    if any(c not in "ul" for c in signature):
        raise ValueError(f"signature may only contain 'u' and 'l', got {signature!r}")
    n = e.shape[-1]
    if r and T.shape[-r:] != (n,) * r:
        raise ValueError(f"tensor shape {T.shape} does not match signature {signature!r} in dimension {n}")
    if r == 0:
        return T**2
    W = T
    for k, c in enumerate(signature):
        M = e_inv if c == "l" else e
        ax = T.ndim - r + k
        W = np.moveaxis(np.einsum("...ab,...b->...a", _expand(M, r), np.moveaxis(W, ax, -1)), -1, ax)
    return np.sum(T * W, axis=tuple(range(-r, 0)))


def _expand(M: np.ndarray, r: int) -> np.ndarray:
    """Insert broadcast axes so ``M`` acts on one of ``r`` tensor indices once
    that index has been moved last."""
    base = M.shape[:-2]
    return M.reshape(base + (1,) * (r - 1) + M.shape[-2:])


# ---------------------------------------------------------------------------
# slice geometry and derivatives
# ---------------------------------------------------------------------------


@dataclass
class _Slice:
    beta: np.ndarray
    h: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    e: np.ndarray
    e_inv: np.ndarray
    sqrt_det_h: np.ndarray
    gamma: np.ndarray | None


def _slice_geometry(g: MetricSplit, i: int, t: float, mesh: Mesh, need_gamma: bool) -> _Slice:
    coords = mesh.spatial_coords()
    shape = mesh.shape
    tt = np.full(shape, float(t))
    xs = [np.broadcast_to(c, shape) for c in coords]
    beta = g.beta(i, tt, *xs)
    h = g.h(i, tt, *xs)
    gm = g.g(i, tt, *xs)
    ginv = g.g_inv(i, tt, *xs)
    e = _split_g(beta, h, 1.0)
    einv = np.zeros_like(e)
    einv[..., 0, 0] = 1.0 / beta
    einv[..., 1:, 1:] = ginv[..., 1:, 1:]
    gamma = None
    if need_gamma:
        n = g.dim + 1
        dg = np.zeros((n,) + gm.shape)
        if not g.static:
            scale = g.time_scales[i]
            dlt = min(scale / 20, 1e-3) if scale else 1e-3
            w = (1.0, -8.0, 8.0, -1.0)
            for c, s in zip(w, (2, 1, -1, -2)):
                dg[0] += c * g.g(i, tt + s * dlt, *xs)
            dg[0] /= -12 * dlt
        for k in range(g.dim):
            dg[k + 1] = derivative(gm, k, 1, mesh.spacing[k], periodic=True, accuracy=4)
        dg = np.moveaxis(dg, 0, -3)
        low = 0.5 * (np.einsum("...adb->...dab", dg) + np.einsum("...bda->...dab", dg) - dg)
        gamma = np.einsum("...cd,...dab->...cab", ginv, low)
    return _Slice(beta, h, gm, ginv, e, einv, np.sqrt(np.linalg.det(h)), gamma)


def _gradient(fields: FieldNet, i: int, it: int) -> np.ndarray:
    """``(d_a u)`` at time level ``it``, shape ``mesh + (n,)``."""
    mesh = fields.mesh
    u = fields.u.samples[i, it]
    parts = [fields.u_t.samples[i, it]]
    parts += [derivative(u, k, 1, mesh.spacing[k], periodic=True, accuracy=4) for k in range(mesh.dim)]
    return np.stack(parts, axis=-1)


def _hessian(fields: FieldNet, i: int, it: int, geo: _Slice, grad: np.ndarray) -> np.ndarray:
    """Covariant Hessian ``nabla_a nabla_b u`` at time level ``it``."""
    if fields.u_tt is None:
        raise ValueError("order-2 quantities need u_tt samples")
    mesh = fields.mesh
    d = mesh.dim
    u = fields.u.samples[i, it]
    ut = fields.u_t.samples[i, it]
    H = np.zeros(mesh.shape + (d + 1, d + 1))
    H[..., 0, 0] = fields.u_tt.samples[i, it]
    for k in range(d):
        v = derivative(ut, k, 1, mesh.spacing[k], periodic=True, accuracy=4)
        H[..., 0, k + 1] = H[..., k + 1, 0] = v
        H[..., k + 1, k + 1] = derivative(u, k, 2, mesh.spacing[k], periodic=True, accuracy=4)
        for j in range(k):
            uj = derivative(u, j, 1, mesh.spacing[j], periodic=True, accuracy=4)
            H[..., j + 1, k + 1] = H[..., k + 1, j + 1] = derivative(uj, k, 1, mesh.spacing[k], periodic=True,
                                                                     accuracy=4)
    return H - np.einsum("...cab,...c->...ab", geo.gamma, grad)


def _time_index(fields: FieldNet, tau: float | None, index: int | None) -> int:
    if index is not None:
        return int(index)
    ts = fields.times
    it = int(np.argmin(np.abs(ts - tau)))
    if abs(ts[it] - tau) > 1e-9 * max(1.0, abs(tau)):
        raise ValueError(f"tau={tau} is not a stored time level")
    return it


def _check_order(k: int):
    if not 0 <= k <= MAX_ORDER:
        raise ValueError(f"order k must lie in 0..{MAX_ORDER}, got {k}")


def _tensor_terms(fields: FieldNet, i: int, it: int, k: int):
    """Per-order tensors ``T^{ab,j}`` (j <= k), plus the slice geometry."""
    geo = _slice_geometry(fields.metric, i, float(fields.times[it]), fields.mesh.spatial(), need_gamma=k >= 2)
    u = fields.u.samples[i, it]
    gi = geo.g_inv
    out = [-0.5 * gi * (u**2)[..., None, None]]
    if k >= 1:
        grad = _gradient(fields, i, it)
        S1 = grad[..., :, None] * grad[..., None, :]
        out.append(_stress(gi, S1))
        if k >= 2:
            H = _hessian(fields, i, it, geo, grad)
            S2 = np.einsum("...pq,...cp,...dq->...cd", geo.e_inv, H, H)
            out.append(_stress(gi, S2))
    return out, geo


def _stress(gi: np.ndarray, S: np.ndarray) -> np.ndarray:
    """``(g^ac g^bd - 1/2 g^ab g^cd) S_cd``."""
    return np.einsum("...ac,...bd,...cd->...ab", gi, gi, S) - 0.5 * gi * np.einsum("...cd,...cd->...", gi, S)[..., None, None]


# ---------------------------------------------------------------------------
# tensors, energies and norms
# ---------------------------------------------------------------------------


def energy_tensor(fields, k: int, eps_index: int, tau: float | None = None,
                  time_index: int | None = None) -> np.ndarray:
    """Samples of ``T^{ab,k}`` on the slice (shape ``mesh + (n, n)``)."""
    fields = _as_fields(fields)
    _check_order(k)
    it = _time_index(fields, tau, time_index)
    return _tensor_terms(fields, eps_index, it, k)[0][k]


def _densities(fields: FieldNet, i: int, it: int, k: int):
    """``T^{tt,j} V^-1`` for j <= k and ``sqrt(det h)``."""
    terms, geo = _tensor_terms(fields, i, it, k)
    vinv = np.sqrt(geo.beta)
    return [T[..., 0, 0] * vinv for T in terms], geo


def energy_summands(fields, k: int, eps_index: int, tau: float | None = None,
                    time_index: int | None = None) -> np.ndarray:
    """The order-j contributions (j = 0..k) to ``E^k`` on one slice."""
    fields = _as_fields(fields)
    _check_order(k)
    it = _time_index(fields, tau, time_index)
    dens, geo = _densities(fields, eps_index, it, k)
    vol = fields.mesh.spatial().cell_volume
    return np.array([float(np.sum(d * geo.sqrt_det_h) * vol) for d in dens])


def energy_integral(fields, k: int, eps_index: int, tau: float | None = None,
                    time_index: int | None = None) -> float:
    """``E^k`` at the slice ``tau`` (or stored level ``time_index``) for one eps."""
    return float(np.sum(energy_summands(fields, k, eps_index, tau, time_index)))


def _slice_norm_density(fields: FieldNet, i: int, it: int, k: int, geo: _Slice | None = None):
    if geo is None:
        geo = _slice_geometry(fields.metric, i, float(fields.times[it]), fields.mesh.spatial(), need_gamma=k >= 2)
    u = fields.u.samples[i, it]
    dens = u**2
    if k >= 1:
        grad = _gradient(fields, i, it)
        dens = dens + pointwise_norm(grad, "l", geo.e, geo.e_inv)
        if k >= 2:
            H = _hessian(fields, i, it, geo, grad)
            dens = dens + pointwise_norm(H, "ll", geo.e, geo.e_inv)
    return dens, geo


@dataclass(frozen=True)
class SobolevNorms:
    """Squared Sobolev norms of order ``k`` per eps: on the slice ``t = tau``
    and on the region ``0 <= t <= tau`` (trapezoidal rule over stored levels)."""

    k: int
    tau: float
    slice_sq: np.ndarray
    region_sq: np.ndarray

    def to_dict(self) -> dict:
        return {"k": self.k, "tau": self.tau, "slice_sq": [_json_float(v) for v in self.slice_sq],
                "region_sq": [_json_float(v) for v in self.region_sq]}


def _slice_norms_all(fields: FieldNet, i: int, k: int, upto: int) -> tuple[np.ndarray, np.ndarray]:
    vol = fields.mesh.spatial().cell_volume
    out = np.zeros(upto + 1)
    region = np.zeros(upto + 1)
    for it in range(upto + 1):
        dens, geo = _slice_norm_density(fields, i, it, k)
        out[it] = np.sum(dens * geo.sqrt_det_h) * vol
        region[it] = np.sum(dens * geo.sqrt_det_h * np.sqrt(geo.beta)) * vol
    return out, region


def sobolev_norms(fields, k: int, tau: float | None = None, time_index: int | None = None) -> SobolevNorms:
    """Squared slice and region norms ``sum_{j<=k} int |nabla^(j) u|_e^2``.

    Slice measure ``sqrt(det h) dx``, region measure ``sqrt(beta det h) dt dx``.
    """
    fields = _as_fields(fields)
    _check_order(k)
    it = _time_index(fields, tau, time_index)
    ts = fields.times[: it + 1]
    sl, rg = [], []
    for i in range(len(fields.grid)):
        if fields.metric.degenerate[i]:
            sl.append(math.nan)
            rg.append(math.nan)
            continue
        if it == 0:
            dens, geo = _slice_norm_density(fields, i, 0, k)
            sl.append(float(np.sum(dens * geo.sqrt_det_h) * fields.mesh.spatial().cell_volume))
            rg.append(0.0)
            continue
        s, r = _slice_norms_all(fields, i, k, it)
        sl.append(float(s[-1]))
        rg.append(float(integrate.trapezoid(r, ts)))
    return SobolevNorms(k, float(fields.times[it]), np.array(sl), np.array(rg))


def _source_region(fields: FieldNet, i: int, order: int) -> np.ndarray:
    """Cumulative ``int_0^tau int |nabla^(j) f|^2 mu`` (j <= order, here order 0)
    at every stored level."""
    ts = fields.times
    if fields.f is None:
        return np.zeros(len(ts))
    if order > 0:
        raise ValueError("source norms are implemented for order 0")
    mesh = fields.mesh.spatial()
    coords = [np.broadcast_to(c, mesh.shape) for c in mesh.spatial_coords()]
    eps = fields.grid[i]
    vals = np.zeros(len(ts))
    for it, t in enumerate(ts):
        fv = _source(fields, i, eps, float(t), coords, ts)
        geo = _slice_geometry(fields.metric, i, float(t), mesh, need_gamma=False)
        vals[it] = np.sum(fv**2 * geo.sqrt_det_h * np.sqrt(geo.beta)) * mesh.cell_volume
    cum = np.zeros(len(ts))
    cum[1:] = np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(ts))
    return cum


# ---------------------------------------------------------------------------
# verifications
# ---------------------------------------------------------------------------


def _scale(fields: FieldNet) -> float:
    m = max(float(np.max(np.abs(fields.u.samples))), float(np.max(np.abs(fields.u_t.samples))))
    return max(m, 1e-300) ** 2


def verify_dominant_energy(fields, k: int = 1, tol: float = 1e-12) -> dict:
    """Minimum of the order-k energy density ``T^{ab,k} xi_a xi_b`` over all
    samples; PASS iff it is ``>= -tol * scale`` with ``scale = max|u|^2``."""
    fields = _as_fields(fields)
    _check_order(k)
    mins = []
    for i in fields.metric.active_indices():
        m = math.inf
        for it in range(len(fields.times)):
            T = _tensor_terms(fields, i, it, k)[0][k]
            m = min(m, float(np.min(T[..., 0, 0])))
        mins.append(m)
    lo = min(mins) if mins else 0.0
    scale = _scale(fields)
    return {"k": k, "minimum": lo, "per_eps_minimum": mins, "scale": scale,
            "passed": bool(lo >= -tol * scale)}


@dataclass(frozen=True)
class EquivalenceReport:
    """Ratios ``E^k / |u|^2_{k,S_tau}`` over (eps, tau)."""

    k: int
    taus: np.ndarray
    ratios: np.ndarray
    C_low: float
    C_high: float
    band: tuple
    passed: bool

    def to_dict(self) -> dict:
        return {"k": self.k, "taus": self.taus.tolist(), "C_low": self.C_low, "C_high": self.C_high,
                "band": list(self.band), "passed": self.passed,
                "ratios": [[_json_float(v) for v in row] for row in self.ratios]}


def verify_norm_energy_equivalence(fields, k: int = 1, time_indices: Sequence[int] | None = None,
                                   band: tuple = (0.2, 1.2), tail: int | None = None) -> EquivalenceReport:
    """Empirical equivalence constants between energies and slice norms.

    PASS iff every ratio over the last ``tail`` eps (all by default) lies in
    ``band``.  Slices with zero norm are skipped (NaN in ``ratios``).
    """
    fields = _as_fields(fields)
    _check_order(k)
    idx = list(range(len(fields.times))) if time_indices is None else list(time_indices)
    ne = len(fields.grid)
    ratios = np.full((ne, len(idx)), np.nan)
    vol = fields.mesh.spatial().cell_volume
    for i in fields.metric.active_indices():
        for j, it in enumerate(idx):
            dens, geo = _densities(fields, i, it, k)
            E = sum(float(np.sum(d * geo.sqrt_det_h) * vol) for d in dens)
            nd, _ = _slice_norm_density(fields, i, it, k, geo if k < 2 else None)
            N = float(np.sum(nd * geo.sqrt_det_h) * vol)
            if N > 0:
                ratios[i, j] = E / N
    rows = ratios[-tail:] if tail else ratios
    finite = rows[np.isfinite(rows)]
    lo = float(np.min(finite)) if finite.size else math.nan
    hi = float(np.max(finite)) if finite.size else math.nan
    ok = bool(finite.size and band[0] <= lo and hi <= band[1])
    return EquivalenceReport(k, fields.times[idx], ratios, lo, hi, tuple(band), ok)


@dataclass(frozen=True)
class GronwallReport:
    """Fitted ``C'''`` per eps for ``E_tau <= (E_0 + C' F_tau) exp(C''' tau)``.

    ``F_tau`` is the squared region norm of the source.  ``spread`` is the
    max/min ratio of the fitted constants above ``floor`` across the eps tail;
    constants at or below ``floor`` count as ``floor``.
    """

    k: int
    times: np.ndarray
    energies: np.ndarray
    forcing: np.ndarray
    C_prime: float
    C3: np.ndarray
    spread: float
    factor: float
    floor: float
    flagged: list
    passed: bool

    def to_dict(self) -> dict:
        return {"k": self.k, "times": self.times.tolist(), "C_prime": self.C_prime,
                "C3": [_json_float(v) for v in self.C3], "spread": _json_float(self.spread),
                "factor": self.factor, "floor": self.floor, "flagged": list(self.flagged),
                "passed": self.passed,
                "energies": [[_json_float(v) for v in row] for row in self.energies]}


def energy_history(fields, k: int = 1) -> np.ndarray:
    """``E^k`` at every stored level for every eps (NaN for degenerate eps)."""
    fields = _as_fields(fields)
    _check_order(k)
    out = np.full((len(fields.grid), len(fields.times)), np.nan)
    for i in fields.metric.active_indices():
        for it in range(len(fields.times)):
            out[i, it] = energy_integral(fields, k, i, time_index=it)
    return out


def verify_gronwall(solution, k: int = 1, C_prime: float = 1.0, factor: float = 2.0,
                    floor: float = 1e-2, tail: int | None = None) -> GronwallReport:
    """Fit the exponential growth constant of the order-k energy per eps.

    ``C''' = max_tau log(E_tau / (E_0 + C' F_tau)) / tau``, clipped at zero.
    A run whose initial energy (plus forcing) vanishes while the solution
    does not is flagged and fails.
    """
    fields = _as_fields(solution)
    if k > 1:
        raise ValueError("Gronwall fitting is implemented for k <= 1")
    E = energy_history(fields, k)
    ts = fields.times
    ne = len(fields.grid)
    F = np.zeros((ne, len(ts)))
    C3 = np.full(ne, np.nan)
    flagged = []
    for i in fields.metric.active_indices():
        F[i] = _source_region(fields, i, max(k - 1, 0))
        base = E[i, 0] + C_prime * F[i]
        scale = max(float(np.max(np.abs(E[i]))), 1e-300)
        if np.max(np.abs(E[i])) == 0 and np.max(F[i]) == 0:
            C3[i] = 0.0
            continue
        if np.any(base[1:] <= 1e-14 * scale):
            flagged.append(float(fields.grid[i]))
            C3[i] = math.inf
            continue
        rates = np.log(E[i, 1:] / base[1:]) / (ts[1:] - ts[0])
        C3[i] = max(0.0, float(np.max(rates)))
    rows = C3[-tail:] if tail else C3
    rows = rows[np.isfinite(rows) | np.isinf(rows)]
    if rows.size == 0 or np.any(np.isinf(rows)):
        spread = math.inf
    else:
        clipped = np.maximum(rows, floor)
        spread = float(np.max(clipped) / np.min(clipped))
    passed = bool(not flagged and spread < factor)
    return GronwallReport(k, ts, E, F, C_prime, C3, spread, factor, floor, flagged, passed)


# ---------------------------------------------------------------------------
# combined report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyReport:
    """Energies, Sobolev norms, Gronwall fit and positivity minima of one run."""

    tau_grid: np.ndarray
    eps: tuple
    energies: dict
    slice_norms: dict
    region_norms: dict
    gronwall: GronwallReport | None
    positivity: dict
    sup_energy_estimate: AsymptoticEstimate

    def to_dict(self) -> dict:
        rows = lambda a: [[_json_float(v) for v in r] for r in a]
        return {"tau_grid": self.tau_grid.tolist(), "eps": list(self.eps),
                "energies": {str(k): rows(v) for k, v in self.energies.items()},
                "slice_norms": {str(k): rows(v) for k, v in self.slice_norms.items()},
                "region_norms": {str(k): rows(v) for k, v in self.region_norms.items()},
                "gronwall": None if self.gronwall is None else self.gronwall.to_dict(),
                "positivity": self.positivity,
                "sup_energy_estimate": self.sup_energy_estimate.to_dict()}

    def csv_rows(self) -> list[list]:
        """``tau, eps, E0, E1, ratio`` rows (ratio = E1 / slice norm^2 of order 1)."""
        out = []
        E0, E1 = self.energies.get(0), self.energies.get(1)
        N1 = self.slice_norms.get(1)
        for i, eps in enumerate(self.eps):
            for j, tau in enumerate(self.tau_grid):
                r = E1[i, j] / N1[i, j] if N1 is not None and N1[i, j] > 0 else math.nan
                out.append([float(tau), float(eps), float(E0[i, j]), float(E1[i, j]), float(r)])
        return out


def energy_report(solution, k_max: int = 1, gronwall: bool = True) -> EnergyReport:
    """Energies and norms of orders ``0..k_max`` at every stored level."""
    fields = _as_fields(solution)
    _check_order(k_max)
    ts = fields.times
    ne = len(fields.grid)
    vol = fields.mesh.spatial().cell_volume
    energies = {k: np.full((ne, len(ts)), np.nan) for k in range(k_max + 1)}
    slices = {k: np.full((ne, len(ts)), np.nan) for k in range(k_max + 1)}
    regions = {k: np.full((ne, len(ts)), np.nan) for k in range(k_max + 1)}
    for i in fields.metric.active_indices():
        dens_rows = {k: np.zeros(len(ts)) for k in range(k_max + 1)}
        for it in range(len(ts)):
            terms, geo = _densities(fields, i, it, k_max)
            parts = [float(np.sum(d * geo.sqrt_det_h) * vol) for d in terms]
            for k in range(k_max + 1):
                energies[k][i, it] = sum(parts[: k + 1])
                nd, _ = _slice_norm_density(fields, i, it, k, geo if k < 2 else None)
                slices[k][i, it] = float(np.sum(nd * geo.sqrt_det_h) * vol)
                dens_rows[k][it] = float(np.sum(nd * geo.sqrt_det_h * np.sqrt(geo.beta)) * vol)
        for k in range(k_max + 1):
            cum = np.zeros(len(ts))
            cum[1:] = np.cumsum(0.5 * (dens_rows[k][1:] + dens_rows[k][:-1]) * np.diff(ts))
            regions[k][i] = cum
    top = energies[k_max]
    sups = np.nanmax(np.where(np.isfinite(top), top, np.nan), axis=1)
    sups = np.where(np.isfinite(sups), sups, np.inf)
    gr = verify_gronwall(fields, min(k_max, 1)) if gronwall else None
    positivity = verify_dominant_energy(fields, min(k_max, 1)) if k_max >= 1 else {}
    return EnergyReport(ts, tuple(fields.grid), energies, slices, regions, gr, positivity,
                        estimate_order(sups, fields.grid))
