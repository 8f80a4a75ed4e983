"""Per-eps leapfrog solution of the wave equation on a split metric.

For ``g = -beta dt^2 + h`` the equation ``|g|^(-1/2) d_a(|g|^(1/2) g^ab d_b u) = f``
is written in the conservative form::

    d_t(A u_t) = d_i(B^ij d_j u) - sqrt|g| f,
    A = sqrt(det h / beta),  B = sqrt(beta det h) h^-1,

and discretized with leapfrog in time and second-order centered,
flux-form stencils on the periodic spatial mesh.  Initial data are
``u(0) = u0`` and ``u_t(0) = sqrt(beta) u1`` (derivative along the unit normal).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import fft

from .nets import (
    AssociationReport,
    Delta,
    EpsGrid,
    Heaviside,
    Kink,
    Mesh,
    Sampled,
    ScalarNet,
    TestFunction,
    association_check,
    mollifier_embed,
)
from .spacetime import MetricSplit

__all__ = [
    "CauchyData",
    "SolutionNet",
    "solve",
    "dalembert_oracle",
    "convergence_order",
    "ConvergenceReport",
    "domain_of_dependence_check",
    "DependenceReport",
    "solve_distributional",
    "DistributionalReport",
    "max_wave_speed",
]

CFL = 0.5


@dataclass(frozen=True, eq=False)
class CauchyData:
    """Initial value ``u0``, normal derivative ``u1`` and optional source ``f``.

    ``f`` is either a callable ``f(t, *x)`` (optionally taking ``eps=``) or a
    ScalarNet on a space-time mesh over the solve interval (linearly
    interpolated in time).
    """

    u0: ScalarNet
    u1: ScalarNet
    f: Callable | ScalarNet | None = None
    support: tuple | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.u0.grid != self.u1.grid or self.u0.mesh != self.u1.mesh:
            raise ValueError("u0 and u1 must share the eps grid and mesh")
        if self.u0.mesh.has_time:
            raise ValueError("Cauchy data live on a spatial mesh")
        if isinstance(self.f, ScalarNet) and (self.f.grid != self.u0.grid or not self.f.mesh.has_time):
            raise ValueError("source net must share the eps grid and carry a time axis")

    @property
    def grid(self) -> EpsGrid:
        return self.u0.grid

    @property
    def mesh(self) -> Mesh:
        return self.u0.mesh

    @classmethod
    def from_functions(cls, grid: EpsGrid, mesh: Mesh, u0: Callable | None = None, u1: Callable | None = None,
                       f=None, support=None, provenance=None) -> "CauchyData":
        """Sample eps-independent callables ``u(*x)`` on the mesh."""
        zero = lambda *xs: np.zeros(np.broadcast(*xs).shape)
        n0 = ScalarNet.from_function(grid, mesh, lambda e, *xs: (u0 or zero)(*xs))
        n1 = ScalarNet.from_function(grid, mesh, lambda e, *xs: (u1 or zero)(*xs))
        return cls(n0, n1, f, support, dict(provenance or {"kind": "smooth"}))

    def support_ok(self, tol: float = 0.0) -> bool:
        """Whether all data vanish (up to ``tol``) outside the declared support box."""
        if self.support is None:
            return True
        inside = np.ones(self.mesh.shape, dtype=bool)
        for i, c in enumerate(self.mesh.spatial_coords()):
            lo, hi = self.support[i]
            inside &= (c >= lo) & (c <= hi)
        outside = ~inside
        return bool(np.all(np.abs(self.u0.samples[:, outside]) <= tol)
                    and np.all(np.abs(self.u1.samples[:, outside]) <= tol))

    def scaled(self, a: float) -> "CauchyData":
        f = self.f
        if isinstance(f, ScalarNet):
            f = f * a
        elif callable(f):
            f = _scale_callable(f, a)
        return CauchyData(self.u0 * a, self.u1 * a, f, self.support, dict(self.provenance))


def _scale_callable(f, a):
    def scaled(t, *xs, **kw):
        return a * np.asarray(f(t, *xs, **kw))
    return scaled


@dataclass(frozen=True, eq=False)
class SolutionNet:
    """Solution samples at common output times for every eps.

    ``u``, ``u_t`` and ``u_tt`` are ScalarNets on the space-time output mesh
    (time derivatives from centered differences of neighbouring time levels).
    ``diagnostics`` holds, per eps, the time step, number of steps,
    maximal wave speed and a status (``ok``, ``failed`` or ``skipped``).
    Rows of failed or skipped eps are zero-filled.
    """

    u: ScalarNet
    u_t: ScalarNet
    u_tt: ScalarNet
    diagnostics: tuple
    metric: MetricSplit
    data: CauchyData

    @property
    def grid(self) -> EpsGrid:
        return self.u.grid

    @property
    def mesh(self) -> Mesh:
        return self.u.mesh

    @property
    def times(self) -> np.ndarray:
        return self.mesh.time_values()

    @property
    def valid(self) -> list[int]:
        return [i for i, d in enumerate(self.diagnostics) if d["status"] == "ok"]

    @property
    def partial(self) -> bool:
        return len(self.valid) < len(self.grid)

    def restricted(self) -> ScalarNet:
        """The solution net over the eps values whose solve succeeded."""
        idx = self.valid
        if len(idx) == len(self.grid):
            return self.u
        grid = EpsGrid(tuple(self.grid[i] for i in idx))
        return ScalarNet(grid, self.mesh, self.u.samples[idx], dict(self.u.provenance))

    def diagnostics_dict(self) -> list[dict]:
        return [dict(d) for d in self.diagnostics]


# ---------------------------------------------------------------------------
# coefficient evaluation
# ---------------------------------------------------------------------------


def _coefficients(g: MetricSplit, i: int, t: float, coords):
    """``A``, ``B`` (shape ``(d, d) + mesh``), ``sqrt|g|`` at time ``t``."""
    tt = np.full(np.broadcast(*coords).shape, float(t))
    beta = g.beta(i, tt, *coords)
    h = g.h(i, tt, *coords)
    det = np.linalg.det(h)
    hinv = np.linalg.inv(h)
    sqrtg = np.sqrt(beta * det)
    A = np.sqrt(det / beta)
    B = np.moveaxis(sqrtg[..., None, None] * hinv, (-2, -1), (0, 1))
    return A, B, sqrtg


def _speed(g: MetricSplit, i: int, t: float, coords) -> float:
    tt = np.full(np.broadcast(*coords).shape, float(t))
    beta = g.beta(i, tt, *coords)
    lam = np.linalg.eigvalsh(np.linalg.inv(g.h(i, tt, *coords)))[..., -1]
    return float(np.max(np.sqrt(beta * lam)))


def max_wave_speed(g: MetricSplit, i: int, mesh: Mesh, T: float, samples: int = 33) -> float:
    """``max sqrt(beta lambda_max(h^-1))`` over the mesh and sampled times in [0, T]."""
    coords = mesh.spatial_coords()
    if g.static:
        return _speed(g, i, 0.0, coords)
    times = set(np.linspace(0.0, T, samples).tolist())
    t0, t1, _ = g.mesh.times
    times.update(t for t in g.mesh.time_values() if 0.0 <= t <= T)
    return max(_speed(g, i, t, coords) for t in sorted(times))


def _flux_operator(B: np.ndarray, mesh: Mesh) -> Callable:
    """``u -> d_i(B^ij d_j u)`` with flux-form second-order stencils."""
    d = mesh.dim
    hs = mesh.spacing
    diag_faces = []
    for i in range(d):
        diag_faces.append(0.5 * (B[i, i] + np.roll(B[i, i], -1, axis=i)))
    cross = [(i, j, B[i, j]) for i in range(d) for j in range(d) if i != j and np.any(B[i, j] != 0)]

    def apply(u):
        out = np.zeros_like(u)
        for i in range(d):
            flux = diag_faces[i] * (np.roll(u, -1, axis=i) - u)
            out += (flux - np.roll(flux, 1, axis=i)) / hs[i] ** 2
        for i, j, bij in cross:
            dj = (np.roll(u, -1, axis=j) - np.roll(u, 1, axis=j)) / (2 * hs[j])
            q = bij * dj
            out += (np.roll(q, -1, axis=i) - np.roll(q, 1, axis=i)) / (2 * hs[i])
        return out

    return apply


def _source(data: CauchyData, i: int, eps: float, t: float, coords, out_times) -> np.ndarray | None:
    f = data.f
    if f is None:
        return None
    if isinstance(f, ScalarNet):
        ts = f.mesh.time_values()
        if t <= ts[0]:
            return f.samples[i, 0]
        if t >= ts[-1]:
            return f.samples[i, -1]
        k = int(np.searchsorted(ts, t) - 1)
        w = (t - ts[k]) / (ts[k + 1] - ts[k])
        return (1 - w) * f.samples[i, k] + w * f.samples[i, k + 1]
    tt = np.full(np.broadcast(*coords).shape, float(t))
    try:
        return np.broadcast_to(f(tt, *coords, eps=eps), tt.shape)
    except TypeError:
        return np.broadcast_to(f(tt, *coords), tt.shape)


def _plan(g: MetricSplit, i: int, mesh: Mesh, T: float, n_out: int, cfl: float, dt_max: float | None):
    speed = max_wave_speed(g, i, mesh, T)
    dt = cfl * min(mesh.spacing) / speed
    scale = g.time_scales[i]
    if scale is not None:
        dt = min(dt, scale / 4)
    if dt_max is not None:
        dt = min(dt, dt_max)
    per = max(1, math.ceil(T / (dt * (n_out - 1))))
    nsteps = per * (n_out - 1)
    return T / nsteps, nsteps, per, speed


def _solve_one(g: MetricSplit, data: CauchyData, i: int, T: float, n_out: int, cfl: float, dt_max):
    mesh = data.mesh
    eps = data.grid[i]
    shape = (n_out,) + mesh.shape
    if g.degenerate[i]:
        return np.zeros(shape), np.zeros(shape), np.zeros(shape), {"eps": eps, "status": "skipped",
                                                                   "reason": "degenerate metric"}
    coords = mesh.spatial_coords()
    dt, nsteps, per, speed = _plan(g, i, mesh, T, n_out, cfl, dt_max)
    diag = {"eps": eps, "dt": dt, "steps": nsteps, "max_speed": speed, "status": "ok"}
    u0 = np.array(data.u0.samples[i], dtype=float)
    u1 = np.array(data.u1.samples[i], dtype=float)

    static = g.static
    cache = {}

    def coeff(t):
        key = 0.0 if static else t
        if key not in cache:
            if len(cache) > 4:
                cache.clear()
            A, B, sg = _coefficients(g, i, key, coords)
            cache[key] = (A, _flux_operator(B, mesh), sg)
        return cache[key]

    A0, L0, sg0 = coeff(0.0)
    beta0 = g.beta(i, np.zeros(mesh.shape), *coords)
    v0 = np.sqrt(beta0) * u1
    if static:
        A_t = 0.0
    else:
        A_t = (coeff(dt / 2)[0] - coeff(-dt / 2)[0]) / dt
    rhs0 = L0(u0)
    f0 = _source(data, i, eps, 0.0, coords, None)
    if f0 is not None:
        rhs0 = rhs0 - sg0 * f0
    a0 = (rhs0 - A_t * v0) / A0
    u_prev = u0
    u_curr = u0 + dt * v0 + 0.5 * dt**2 * a0

    out_u = np.zeros(shape)
    out_ut = np.zeros(shape)
    out_utt = np.zeros(shape)
    out_u[0] = u0
    out_ut[0] = v0
    out_utt[0] = a0
    pending = None  # output index waiting for the next level to form a centered u_t
    A_half_prev = coeff(0.5 * dt)[0]
    with np.errstate(over="raise", invalid="raise"):
        try:
            for n in range(1, nsteps + 1):
                t = n * dt
                if n % per == 0:
                    pending = n // per
                    out_u[pending] = u_curr
                if n == nsteps:
                    break
                A_half = coeff(t + 0.5 * dt)[0]
                _, L, sg = coeff(t)
                rhs = L(u_curr)
                fn = _source(data, i, eps, t, coords, None)
                if fn is not None:
                    rhs = rhs - sg * fn
                u_next = u_curr + (A_half_prev / A_half) * (u_curr - u_prev) + dt**2 / A_half * rhs
                if pending is not None:
                    out_ut[pending] = (u_next - u_prev) / (2 * dt)
                    out_utt[pending] = (u_next - 2 * u_curr + u_prev) / dt**2
                    pending = None
                u_prev, u_curr, A_half_prev = u_curr, u_next, A_half
                if n % 64 == 0 and not np.all(np.isfinite(u_curr)):
                    raise FloatingPointError("non-finite values")
            # final output level: one more step gives a centered derivative
            A_half = coeff(T + 0.5 * dt)[0]
            _, L, sg = coeff(T)
            rhs = L(u_curr)
            fn = _source(data, i, eps, T, coords, None)
            if fn is not None:
                rhs = rhs - sg * fn
            u_next = u_curr + (A_half_prev / A_half) * (u_curr - u_prev) + dt**2 / A_half * rhs
            out_ut[-1] = (u_next - u_prev) / (2 * dt)
            out_utt[-1] = (u_next - 2 * u_curr + u_prev) / dt**2
            if not (np.all(np.isfinite(out_u)) and np.all(np.isfinite(out_ut)) and np.all(np.isfinite(out_utt))):
                raise FloatingPointError("non-finite values")
        except FloatingPointError as exc:
            diag.update(status="failed", reason=f"instability: {exc}")
            return np.zeros(shape), np.zeros(shape), np.zeros(shape), diag
    return out_u, out_ut, out_utt, diag


def solve(g: MetricSplit, data: CauchyData, T: float, n_out: int = 11, cfl: float = CFL, threads: int = 1,
          dt_max: float | None = None) -> SolutionNet:
    """Solve the Cauchy problem on ``[0, T]`` independently for every eps.

    Args:
        g: split metric net (same eps grid as the data).
        data: Cauchy data on the spatial mesh of the solve.
        T: final time.
        n_out: number of output times (including 0 and T).
        cfl: Courant factor relative to the maximal wave speed.
        threads: worker threads for the eps sweep (results keep eps order).
        dt_max: optional extra cap on the time step.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if n_out < 2:
        raise ValueError("need at least two output times")
    if g.grid != data.grid:
        raise ValueError("metric and data use different eps grids")
    if g.dim != data.mesh.dim:
        raise ValueError("metric and data have different spatial dimensions")
    ne = len(data.grid)
    work = lambda i: _solve_one(g, data, i, T, n_out, cfl, dt_max)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(ne)))
    else:
        results = [work(i) for i in range(ne)]
    mesh = data.mesh.with_times((0.0, float(T), n_out))
    prov = {"metric": g.label, "data": data.provenance, "T": T}
    u = ScalarNet(data.grid, mesh, np.stack([r[0] for r in results]), prov)
    ut = ScalarNet(data.grid, mesh, np.stack([r[1] for r in results]), prov)
    utt = ScalarNet(data.grid, mesh, np.stack([r[2] for r in results]), prov)
    return SolutionNet(u, ut, utt, tuple(r[3] for r in results), g, data)


# ---------------------------------------------------------------------------
# oracles and studies
# ---------------------------------------------------------------------------


def dalembert_oracle(u0, u1, t: float, x, c: float, period: float | None = None, mesh: Mesh | None = None,
                     velocity_scale: float = 1.0, nodes: int = 64):
    """Closed-form solution of ``u_tt = c^2 u_xx`` in one space dimension.

    ``u(t, x) = (u0(x + ct) + u0(x - ct)) / 2 + (1 / 2c) int_{x-ct}^{x+ct} v0``
    with ``v0 = velocity_scale * u1``.  Callables are evaluated directly (with
    periodic wrap when ``period`` is given) and the integral uses composite
    Gauss-Legendre quadrature; sampled arrays on a periodic ``mesh`` are
    propagated exactly in Fourier space.
    """
    if c <= 0:
        raise ValueError("wave speed must be positive")
    if callable(u0) or callable(u1):
        zero = lambda y: np.zeros_like(np.asarray(y, dtype=float))
        f0, f1 = (u0 or zero), (u1 or zero)
        x = np.asarray(x, dtype=float)

        def wrap(y):
            if period is None:
                return y
            return np.mod(y + period / 2, period) - period / 2

        val = 0.5 * (f0(wrap(x + c * t)) + f0(wrap(x - c * t)))
        if t != 0:
            panels = max(1, int(math.ceil(2 * c * t)))
            xs, ws = np.polynomial.legendre.leggauss(nodes)
            edges = np.linspace(-c * t, c * t, panels + 1)
            acc = np.zeros_like(val, dtype=float)
            for a, b in zip(edges[:-1], edges[1:]):
                for xi, wi in zip(0.5 * (b - a) * xs + 0.5 * (a + b), 0.5 * (b - a) * ws):
                    acc = acc + wi * f1(wrap(x + xi))
            val = val + velocity_scale * acc / (2 * c)
        return val
    if mesh is None:
        raise ValueError("sampled data need their periodic mesh")
    a0, a1 = np.asarray(u0, dtype=float), np.asarray(u1, dtype=float)
    k = 2 * np.pi * np.fft.rfftfreq(mesh.shape[0], d=mesh.spacing[0])
    w = c * k
    s = np.where(w > 0, np.sin(w * t) / np.where(w > 0, w, 1.0), t)
    spectrum = fft.rfft(a0) * np.cos(w * t) + velocity_scale * fft.rfft(a1) * s
    return fft.irfft(spectrum, n=mesh.shape[0])


@dataclass(frozen=True)
class ConvergenceReport:
    resolutions: tuple
    errors: dict
    orders: dict
    reference: str

    def to_dict(self) -> dict:
        return {"resolutions": list(self.resolutions), "reference": self.reference,
                "errors": {str(k): list(v) for k, v in self.errors.items()},
                "orders": {str(k): v for k, v in self.orders.items()}}


def convergence_order(g: MetricSplit, data_fn: Callable[[Mesh], CauchyData], T: float, resolutions: Sequence[int],
                      exact: Callable | None = None, n_out: int = 5, **solve_kw) -> ConvergenceReport:
    """Fitted L-infinity convergence order per eps.

    Args:
        g: metric net.
        data_fn: builds Cauchy data on a spatial mesh of a given resolution.
        T: final time.
        resolutions: increasing point counts per axis, each the double of
            the previous one for self-convergence.
        exact: optional closed form ``u(t, *x)``; without it the order comes
            from differences between successive resolutions.
    """
    res = sorted(int(r) for r in resolutions)
    sols = []
    for N in res:
        data = data_fn(N)
        sols.append(solve(g, data, T, n_out=n_out, **solve_kw))
    ne = len(g.grid)
    errors: dict = {}
    orders: dict = {}
    if exact is not None:
        for i in range(ne):
            errs = []
            for sol in sols:
                ts = sol.times
                coords = sol.data.mesh.spatial_coords()
                errs.append(max(float(np.max(np.abs(sol.u.samples[i, k] - exact(t, *coords))))
                                for k, t in enumerate(ts)))
            hs = [2 * np.pi / N for N in res]
            errors[g.grid[i]] = errs
            orders[g.grid[i]] = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
        ref = "exact"
    else:
        if len(res) < 3 or any(b != 2 * a for a, b in zip(res, res[1:])):
            raise ValueError("self-convergence needs at least three doubling resolutions")
        for i in range(ne):
            diffs = []
            for a, b in zip(sols, sols[1:]):
                fine = b.u.samples[i][(slice(None),) + (slice(None, None, 2),) * a.mesh.dim]
                diffs.append(float(np.max(np.abs(a.u.samples[i] - fine))))
            errors[g.grid[i]] = diffs
            ratios = [math.log2(d0 / d1) for d0, d1 in zip(diffs, diffs[1:]) if d1 > 0 and d0 > 0]
            orders[g.grid[i]] = float(np.mean(ratios)) if ratios else math.nan
        ref = "self"
    return ConvergenceReport(tuple(res), errors, orders, ref)


@dataclass(frozen=True)
class DependenceReport:
    passed: bool
    speed: float
    collar: float
    max_outside: float
    max_inside: float
    relative: float
    tolerance: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def domain_of_dependence_check(g: MetricSplit, data: CauchyData, T: float, box: Sequence[Sequence[float]],
                               tolerance: float = 1e-8, collar_cells: float = 2.0, speed: float | None = None,
                               solution: SolutionNet | None = None, n_out: int = 11) -> DependenceReport:
    """Check that the solution vanishes outside the expanded causal future of ``box``.

    The box is widened at time t by ``speed * t`` plus a collar of
    ``collar_cells`` mesh cells; ``speed`` defaults to the maximal wave speed.
    PASS iff ``|u| < tolerance * max|u|`` outside for every eps and time.
    """
    mesh = data.mesh
    if len(box) != mesh.dim:
        raise ValueError("box needs one interval per spatial dimension")
    if speed is None:
        speed = max(max_wave_speed(g, i, mesh, T) for i in range(len(g.grid)) if not g.degenerate[i])
    collar = collar_cells * max(mesh.spacing)
    for i, (lo, hi) in enumerate(box):
        if not mesh.contains_box([lo], [hi]) if mesh.dim == 1 else not (
                mesh.origin[i] <= lo and hi <= mesh.origin[i] + mesh.lengths[i]):
            raise ValueError("support box must lie inside the fundamental domain")
        if (hi - lo) + 2 * (speed * T + collar) >= mesh.lengths[i]:
            raise ValueError("the causal future of the box wraps around the torus before T")
    sol = solution or solve(g, data, T, n_out=n_out)
    coords = mesh.spatial_coords()
    worst_out, worst_in = 0.0, 0.0
    for k, t in enumerate(sol.times):
        inside = np.ones(mesh.shape, dtype=bool)
        for i, (lo, hi) in enumerate(box):
            r = speed * t + collar
            inside &= (coords[i] >= lo - r) & (coords[i] <= hi + r)
        vals = np.abs(sol.u.samples[sol.valid][:, k])
        worst_out = max(worst_out, float(np.max(vals[:, ~inside], initial=0.0)))
        worst_in = max(worst_in, float(np.max(vals, initial=0.0)))
    rel = worst_out / worst_in if worst_in > 0 else 0.0
    return DependenceReport(bool(rel < tolerance or worst_out == 0.0), float(speed), collar, worst_out, worst_in,
                            rel, tolerance)


# ---------------------------------------------------------------------------
# distributional data
# ---------------------------------------------------------------------------


def _target_pair(target, psi: Callable, lo: float, hi: float) -> float:
    """``<target, psi>`` for a 1-D target and a test function supported in [lo, hi]."""
    from scipy import integrate

    if target is None:
        return 0.0
    if isinstance(target, Delta):
        return float(psi(np.atleast_1d(np.asarray(target.x0, dtype=float))[0]))
    if isinstance(target, (Heaviside, Kink)):
        a = max(lo, target.x0)
        if a >= hi:
            return 0.0
        weight = (lambda x: 1.0) if isinstance(target, Heaviside) else (lambda x: x - target.x0)
        return integrate.quad(lambda x: weight(x) * float(psi(x)), a, hi, epsabs=1e-13, epsrel=1e-12,
                              limit=400)[0]
    if isinstance(target, Sampled) and callable(target.values):
        return integrate.quad(lambda x: float(target.values(x)) * float(psi(x)), lo, hi, epsabs=1e-13,
                              epsrel=1e-12, limit=400)[0]
    raise TypeError(f"no exact pairing for {target!r}")


def _shadow_pairing(u0_target, u1_target, c: float, sqrt_beta: float, t: float) -> Callable:
    """``phi -> <u(t), phi>`` for the d'Alembert solution with distributional data."""
    from scipy import integrate

    def shadow(phi: TestFunction) -> float:
        lo, hi = phi.box[0][0], phi.box[1][0]
        val = 0.0
        if u0_target is not None:
            shifted = lambda y: 0.5 * (phi(np.asarray(y) - c * t) + phi(np.asarray(y) + c * t))
            val += _target_pair(u0_target, shifted, lo - c * t, hi + c * t)
        if u1_target is not None and t > 0:
            def window(y):
                a, b = max(y - c * t, lo), min(y + c * t, hi)
                if a >= b:
                    return 0.0
                return integrate.quad(lambda x: float(phi(x)), a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
            val += sqrt_beta / (2 * c) * _target_pair(u1_target, np.vectorize(window), lo - c * t, hi + c * t)
        return float(val)

    return shadow


@dataclass(frozen=True)
class DistributionalReport:
    times: tuple
    reports: tuple
    solution: SolutionNet

    @property
    def associated(self) -> bool:
        return all(r.verdict == "associated" for r in self.reports)

    def to_dict(self) -> dict:
        return {"times": list(self.times), "associated": self.associated,
                "reports": [r.to_dict() for r in self.reports]}


def solve_distributional(g: MetricSplit, u0_target, u1_target, T: float, battery: Sequence[TestFunction],
                         mesh: Mesh, tolerance: float = 1e-2, n_out: int = 5, threads: int = 1,
                         order: float = 2.0) -> DistributionalReport:
    """Mollify distributional Cauchy data, solve per eps and compare each output
    slice with the d'Alembert solution of the limit data.

    The metric must be one-dimensional, static and constant in space and eps
    so that the closed-form limit exists.
    """
    if mesh.dim != 1:
        raise ValueError("distributional solves are supported in one space dimension")
    grid = g.grid
    coords = mesh.spatial_coords()
    i0 = 0
    beta = g.beta(i0, np.zeros(mesh.shape), *coords)
    h = g.h(i0, np.zeros(mesh.shape), *coords)[..., 0, 0]
    for i in range(len(grid)):
        if not (np.allclose(g.beta(i, np.zeros(mesh.shape), *coords), beta[0], rtol=0, atol=1e-14)
                and np.allclose(g.h(i, np.zeros(mesh.shape), *coords)[..., 0, 0], h[0], rtol=0, atol=1e-14)):
            raise ValueError("closed-form comparison needs a constant, eps-independent metric")
    if not g.static:
        raise ValueError("closed-form comparison needs a static metric")
    b0, h0 = float(beta[0]), float(h[0])
    c = math.sqrt(b0 / h0)

    def embed(target):
        if target is None:
            return ScalarNet.constant(grid, mesh, 0.0)
        return mollifier_embed(target, grid, mesh)

    data = CauchyData(embed(u0_target), embed(u1_target), None,
                      provenance={"kind": "mollified distribution",
                                  "u0": type(u0_target).__name__ if u0_target is not None else "zero",
                                  "u1": type(u1_target).__name__ if u1_target is not None else "zero"})
    sol = solve(g, data, T, n_out=n_out, threads=threads)
    reports = []
    for k, t in enumerate(sol.times):
        shadow = _shadow_pairing(u0_target, u1_target, c, math.sqrt(b0), float(t))
        reports.append(association_check(sol.u, shadow, battery, tolerance, order, time_index=k))
    return DistributionalReport(tuple(sol.times.tolist()), tuple(reports), sol)
