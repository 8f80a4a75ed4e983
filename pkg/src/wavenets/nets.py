"""Epsilon-indexed nets of sampled fields.

A :class:`ScalarNet` holds one sample array per regularization parameter
``eps`` on a shared periodic mesh.  The functions here estimate the
asymptotic growth of such nets (moderate / negligible classification),
pair them with smooth compactly supported test functions and check
whether the pairings converge to a prescribed distributional limit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import fft, integrate

__all__ = [
    "EpsGrid",
    "Mesh",
    "ScalarNet",
    "AsymptoticEstimate",
    "TestFunction",
    "default_battery",
    "PairingResult",
    "ModerateVerdict",
    "NegligibleVerdict",
    "AssociationReport",
    "Delta",
    "Heaviside",
    "Kink",
    "Sampled",
    "Mollifier",
    "estimate_order",
    "classify_moderate",
    "classify_negligible",
    "pair",
    "association_check",
    "mollifier_embed",
    "mollify_samples",
    "richardson_extrapolate",
    "fd_weights",
    "derivative",
    "save_net",
    "load_net",
]

ZERO_FLOOR = 1e-300
DEFAULT_RESIDUAL_THRESHOLD = 0.2


# ---------------------------------------------------------------------------
# grids and meshes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EpsGrid:
    """Finite strictly decreasing sample of the parameter interval (0, 1]."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 4:
            raise ValueError("an EpsGrid needs at least 4 entries")
        arr = np.asarray(vals)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0) or np.any(arr > 1):
            raise ValueError("EpsGrid values must lie in (0, 1]")
        if np.any(np.diff(arr) >= 0):
            raise ValueError("EpsGrid values must be strictly decreasing")

    @classmethod
    def geometric(cls, eps0: float = 0.1, count: int = 6, ratio: float = 0.5) -> "EpsGrid":
        return cls(tuple(eps0 * ratio**k for k in range(count)))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values)

    @property
    def ratio(self) -> float | None:
        """Common ratio eps[k-1]/eps[k] if the grid is geometric, else None."""
        r = self.array[:-1] / self.array[1:]
        if np.allclose(r, r[0], rtol=1e-9, atol=0):
            return float(r[0])
        return None

    @property
    def finest(self) -> float:
        return self.values[-1]

    def to_list(self) -> list[float]:
        return list(self.values)


@dataclass(frozen=True)
class Mesh:
    """Uniform periodic mesh on a flat torus, optionally with a time axis.

    Spatial points are ``origin + j * length / n`` for ``j = 0..n-1`` (the
    right end is identified with the left one).  The time axis, if present,
    is the closed interval ``[t0, t1]`` sampled at ``nt`` points.
    """

    lengths: tuple[float, ...]
    shape: tuple[int, ...]
    origin: tuple[float, ...] | None = None
    times: tuple[float, float, int] | None = None

    def __post_init__(self):
        lengths = tuple(float(v) for v in self.lengths)
        shape = tuple(int(n) for n in self.shape)
        if len(lengths) != len(shape) or not lengths:
            raise ValueError("lengths and shape must have the same nonzero length")
        if any(v <= 0 for v in lengths) or any(n < 1 for n in shape):
            raise ValueError("mesh extents and sizes must be positive")
        origin = self.origin
        origin = tuple(-0.5 * v for v in lengths) if origin is None else tuple(float(o) for o in origin)
        if len(origin) != len(lengths):
            raise ValueError("origin has the wrong dimension")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "origin", origin)
        if self.times is not None:
            t0, t1, nt = self.times
            if int(nt) < 2 or not float(t1) > float(t0):
                raise ValueError("time axis needs t1 > t0 and at least 2 samples")
            object.__setattr__(self, "times", (float(t0), float(t1), int(nt)))

    @classmethod
    def torus(cls, n: int | Sequence[int], length: float = 2 * np.pi, dim: int = 1, times=None) -> "Mesh":
        shape = (int(n),) * dim if np.isscalar(n) else tuple(n)
        return cls(lengths=(float(length),) * len(shape), shape=shape, times=times)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def has_time(self) -> bool:
        return self.times is not None

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.shape))

    @property
    def dt(self) -> float | None:
        if self.times is None:
            return None
        t0, t1, nt = self.times
        return (t1 - t0) / (nt - 1)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def full_shape(self) -> tuple[int, ...]:
        return ((self.times[2],) if self.times else ()) + self.shape

    def axis(self, i: int) -> np.ndarray:
        return self.origin[i] + self.spacing[i] * np.arange(self.shape[i])

    def time_values(self) -> np.ndarray:
        if self.times is None:
            raise ValueError("mesh has no time axis")
        t0, t1, nt = self.times
        return np.linspace(t0, t1, nt)

    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays (t first if present) of ``full_shape``."""
        axes = [self.axis(i) for i in range(self.dim)]
        if self.times is not None:
            axes = [self.time_values()] + axes
        return tuple(np.meshgrid(*axes, indexing="ij", sparse=True))

    def spatial_coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*[self.axis(i) for i in range(self.dim)], indexing="ij", sparse=True))

    def points(self) -> np.ndarray:
        """Spatial points as an array of shape ``shape + (dim,)``."""
        grids = np.meshgrid(*[self.axis(i) for i in range(self.dim)], indexing="ij")
        return np.stack(grids, axis=-1)

    def spatial(self) -> "Mesh":
        return Mesh(self.lengths, self.shape, self.origin)

    def with_shape(self, shape: Sequence[int]) -> "Mesh":
        return Mesh(self.lengths, tuple(shape), self.origin, self.times)

    def with_times(self, times) -> "Mesh":
        return Mesh(self.lengths, self.shape, self.origin, times)

    def contains_box(self, lo: Sequence[float], hi: Sequence[float]) -> bool:
        """Whether the spatial box [lo, hi] lies inside one fundamental domain."""
        return all(
            o <= a and b <= o + L for a, b, o, L in zip(lo, hi, self.origin, self.lengths)
        )

    def to_dict(self) -> dict:
        return {
            "lengths": list(self.lengths),
            "shape": list(self.shape),
            "origin": list(self.origin),
            "times": list(self.times) if self.times else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Mesh":
        times = d.get("times")
        return cls(tuple(d["lengths"]), tuple(d["shape"]), tuple(d["origin"]) if d.get("origin") else None,
                   tuple(times) if times else None)


@dataclass(frozen=True, eq=False)
class ScalarNet:
    """One sample array per eps on a shared mesh; immutable after construction."""

    grid: EpsGrid
    mesh: Mesh
    samples: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float, copy=True)
        expected = (len(self.grid),) + self.mesh.full_shape
        if arr.shape != expected:
            raise ValueError(f"samples have shape {arr.shape}, expected {expected}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("net samples must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @classmethod
    def from_function(cls, grid: EpsGrid, mesh: Mesh, fn: Callable, provenance=None) -> "ScalarNet":
        """Sample ``fn(eps, *coords)`` for every eps; coords as in :meth:`Mesh.coords`."""
        coords = mesh.coords()
        data = np.empty((len(grid),) + mesh.full_shape)
        for i, eps in enumerate(grid):
            data[i] = np.broadcast_to(fn(eps, *coords), mesh.full_shape)
        return cls(grid, mesh, data, dict(provenance or {}))

    @classmethod
    def constant(cls, grid: EpsGrid, mesh: Mesh, value: float = 0.0) -> "ScalarNet":
        return cls(grid, mesh, np.full((len(grid),) + mesh.full_shape, float(value)), {"kind": "constant"})

    def __len__(self):
        return len(self.grid)

    def _check_compatible(self, other: "ScalarNet"):
        if other.grid != self.grid or other.mesh != self.mesh:
            raise ValueError("nets live on different eps grids or meshes")

    def __add__(self, other):
        if isinstance(other, ScalarNet):
            self._check_compatible(other)
            return ScalarNet(self.grid, self.mesh, self.samples + other.samples)
        return ScalarNet(self.grid, self.mesh, self.samples + float(other))

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return ScalarNet(self.grid, self.mesh, -self.samples)

    def __mul__(self, c):
        if isinstance(c, ScalarNet):
            self._check_compatible(c)
            return ScalarNet(self.grid, self.mesh, self.samples * c.samples)
        return ScalarNet(self.grid, self.mesh, self.samples * float(c))

    __rmul__ = __mul__
    __radd__ = __add__

    def scaled_by_eps(self, power: float) -> "ScalarNet":
        """The net ``eps**power * u_eps``."""
        scale = self.grid.array**power
        shape = (-1,) + (1,) * len(self.mesh.full_shape)
        return ScalarNet(self.grid, self.mesh, self.samples * scale.reshape(shape), dict(self.provenance))

    def at_time(self, index: int) -> "ScalarNet":
        if not self.mesh.has_time:
            raise ValueError("net has no time axis")
        return ScalarNet(self.grid, self.mesh.spatial(), self.samples[:, index], dict(self.provenance))

    def sup(self, box=None) -> np.ndarray:
        """Per-eps supremum of ``|u_eps|`` over the mesh or a sub-box."""
        vals = np.abs(_restrict(self.samples, self.mesh, box))
        return vals.reshape(len(self.grid), -1).max(axis=1)


# ---------------------------------------------------------------------------
# asymptotic estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticEstimate:
    """Least-squares fit ``sup ~ C * eps**(-exponent)``.

    ``exponent`` is ``-inf`` when every sup value is below ``ZERO_FLOOR``
    (the net vanishes identically).  ``curvature`` is the quadratic
    coefficient of a second-degree fit in ``log(1/eps)``; ``power_law`` is
    False when the linear fit residual exceeds the configured threshold.
    ``tail_exponent`` is the slope over the three finest eps only.
    """

    exponent: float
    residual: float
    sup_values: tuple[float, ...]
    curvature: float = 0.0
    power_law: bool = True
    tail_exponent: float = math.nan

    @property
    def is_zero(self) -> bool:
        return self.exponent == -math.inf

    @property
    def bounded(self) -> bool:
        return self.is_zero or (math.isfinite(self.exponent) and self.power_law)

    def bounded_by(self, bound: float) -> bool:
        """Growth no faster than ``eps**-bound``: both the global and the tail
        slope stay below ``bound`` (a zero net always qualifies)."""
        if self.is_zero:
            return True
        if not math.isfinite(self.exponent):
            return False
        tail = self.tail_exponent if math.isfinite(self.tail_exponent) else self.exponent
        return self.exponent <= bound and tail <= bound

    def to_dict(self) -> dict:
        return {
            "exponent": _json_float(self.exponent),
            "tail_exponent": _json_float(self.tail_exponent),
            "residual": self.residual,
            "curvature": self.curvature,
            "power_law": self.power_law,
            "sup_values": list(self.sup_values),
        }


def estimate_order(sup_values, grid: EpsGrid, threshold: float = DEFAULT_RESIDUAL_THRESHOLD) -> AsymptoticEstimate:
    """Fit the exponent N in ``sup(eps) = O(eps**-N)`` by log-log regression.

    Args:
        sup_values: per-eps nonnegative suprema, aligned with ``grid``.
        grid: the eps grid.
        threshold: RMS residual (natural-log units) above which the data
            is flagged as not following a power law.
    """
    sups = np.asarray(sup_values, dtype=float)
    if sups.shape != (len(grid),):
        raise ValueError(f"expected {len(grid)} sup values, got shape {sups.shape}")
    if np.any(np.isnan(sups)) or np.any(sups < 0):
        raise ValueError("sup values must be nonnegative numbers")
    sup_tuple = tuple(float(s) for s in sups)
    if np.all(sups < ZERO_FLOOR):
        return AsymptoticEstimate(-math.inf, 0.0, sup_tuple, 0.0, True, -math.inf)
    if np.any(np.isinf(sups)):
        return AsymptoticEstimate(math.inf, math.inf, sup_tuple, math.inf, False, math.inf)
    x = np.log(1.0 / grid.array)
    y = np.log(np.maximum(sups, ZERO_FLOOR))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    curvature = float(np.polyfit(x, y, 2)[0]) if len(x) >= 3 else 0.0
    tail = float(np.polyfit(x[-3:], y[-3:], 1)[0])
    return AsymptoticEstimate(float(slope), rms, sup_tuple, curvature, rms <= threshold, tail)


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------


def fd_weights(z: float, x: Sequence[float], m: int) -> np.ndarray:
    """Fornberg weights for derivatives 0..m at ``z`` on the nodes ``x``.

    Returns an array ``c`` of shape ``(len(x), m + 1)`` with ``c[:, k]`` the
    weights of the k-th derivative.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def _half_width(order: int, accuracy: int) -> int:
    return (order + 1) // 2 - 1 + accuracy // 2


def derivative(arr: np.ndarray, axis: int, order: int, h: float, periodic: bool, accuracy: int = 4) -> np.ndarray:
    """Centered finite-difference derivative of ``arr`` along ``axis``.

    Periodic axes use a wrapped central stencil; open axes fall back to
    one-sided stencils of the same width near the ends.
    """
    if order == 0:
        return np.array(arr, dtype=float, copy=True)
    if accuracy % 2:
        raise ValueError("accuracy must be even")
    p = _half_width(order, accuracy)
    n = arr.shape[axis]
    if 2 * p + 1 > n:
        raise ValueError(f"derivative of order {order} needs {2 * p + 1} points along axis {axis}, mesh has {n}")
    offsets = np.arange(-p, p + 1)
    w = fd_weights(0.0, offsets, order)[:, order] / h**order
    a = np.moveaxis(np.asarray(arr, dtype=float), axis, 0)
    if periodic:
        out = np.zeros_like(a)
        for off, wk in zip(offsets, w):
            if wk != 0.0:
                out += wk * np.roll(a, -off, axis=0)
    else:
        out = np.empty_like(a)
        out[p:n - p] = sum(wk * a[p + off:n - p + off] for off, wk in zip(offsets, w))
        for i in list(range(p)) + list(range(n - p, n)):
            start = min(max(i - p, 0), n - (2 * p + 1))
            idx = np.arange(start, start + 2 * p + 1)
            wb = fd_weights(float(i), idx.astype(float), order)[:, order] / h**order
            out[i] = np.tensordot(wb, a[idx], axes=(0, 0))
    return np.moveaxis(out, 0, axis)


def _net_derivative(samples: np.ndarray, mesh: Mesh, multi_index: Sequence[int], accuracy: int = 4) -> np.ndarray:
    """Apply the mixed partial ``multi_index`` (t first when present) per eps."""
    naxes = len(mesh.full_shape)
    if len(multi_index) != naxes:
        raise ValueError(f"multi-index {tuple(multi_index)} does not match {naxes} mesh axes")
    out = np.asarray(samples, dtype=float)
    off = 1 if mesh.has_time else 0
    for ax, k in enumerate(multi_index):
        if k < 0:
            raise ValueError("negative derivative order")
        if k == 0:
            continue
        if mesh.has_time and ax == 0:
            out = derivative(out, 1, k, mesh.dt, periodic=False, accuracy=accuracy)
        else:
            out = derivative(out, ax + 1, k, mesh.spacing[ax - off], periodic=True, accuracy=accuracy)
    return out


def _box_slices(mesh: Mesh, box) -> tuple:
    """Index slices (over ``full_shape``) of mesh points inside ``box``.

    ``box`` is a sequence of ``(lo, hi)`` pairs, one per mesh axis (time first
    when present); ``None`` entries leave an axis unrestricted.
    """
    if box is None:
        return tuple(slice(None) for _ in mesh.full_shape)
    axes = ([mesh.time_values()] if mesh.has_time else []) + [mesh.axis(i) for i in range(mesh.dim)]
    if len(box) != len(axes):
        raise ValueError("box must give one (lo, hi) pair per mesh axis")
    slices = []
    for vals, bounds in zip(axes, box):
        if bounds is None:
            slices.append(slice(None))
            continue
        lo, hi = bounds
        if lo < vals[0] - 1e-12 or hi > vals[-1] + 1e-12 * max(1.0, abs(vals[-1])) + (vals[1] - vals[0] if len(vals) > 1 else 0):
            raise ValueError(f"box [{lo}, {hi}] lies outside the mesh")
        idx = np.nonzero((vals >= lo - 1e-12) & (vals <= hi + 1e-12))[0]
        if idx.size == 0:
            raise ValueError(f"box [{lo}, {hi}] contains no mesh points")
        slices.append(slice(idx[0], idx[-1] + 1))
    return tuple(slices)


def _restrict(samples: np.ndarray, mesh: Mesh, box) -> np.ndarray:
    return samples[(slice(None),) + _box_slices(mesh, box)]


# ---------------------------------------------------------------------------
# moderate / negligible classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModerateVerdict:
    moderate: bool
    estimates: dict

    def to_dict(self) -> dict:
        return {"moderate": self.moderate,
                "estimates": {str(k): v.to_dict() for k, v in self.estimates.items()}}


@dataclass(frozen=True)
class NegligibleVerdict:
    negligible: dict
    estimates: dict

    @property
    def all_negligible(self) -> bool:
        return all(self.negligible.values())

    def to_dict(self) -> dict:
        return {"negligible": {str(k): v for k, v in self.negligible.items()},
                "estimates": {str(k): v.to_dict() for k, v in self.estimates.items()}}


def _normalize_orders(net: ScalarNet, orders) -> list[tuple[int, ...]]:
    naxes = len(net.mesh.full_shape)
    out = []
    for o in orders:
        if np.isscalar(o):
            # a bare integer k means the k-th derivative along the first spatial axis
            mi = [0] * naxes
            mi[1 if net.mesh.has_time else 0] = int(o)
            out.append(tuple(mi))
        else:
            out.append(tuple(int(k) for k in o))
    return out


def derivative_estimates(net: ScalarNet, derivative_orders, box=None, threshold=DEFAULT_RESIDUAL_THRESHOLD,
                         accuracy: int = 4) -> dict:
    estimates = {}
    for mi in _normalize_orders(net, derivative_orders):
        d = _net_derivative(net.samples, net.mesh, mi, accuracy)
        sups = np.abs(_restrict(d, net.mesh, box)).reshape(len(net.grid), -1).max(axis=1)
        estimates[mi] = estimate_order(sups, net.grid, threshold)
    return estimates


def classify_moderate(net: ScalarNet, derivative_orders=((0,),), box=None,
                      threshold: float = DEFAULT_RESIDUAL_THRESHOLD) -> ModerateVerdict:
    """Fit sup-norm growth of the requested derivatives of ``net``.

    The net is reported moderate when every requested derivative has a
    finite power-law exponent (fit residual below ``threshold``) or
    vanishes identically.
    """
    est = derivative_estimates(net, derivative_orders, box, threshold)
    return ModerateVerdict(all(e.bounded for e in est.values()), est)


def classify_negligible(net: ScalarNet, test_orders: Iterable[int], derivative_orders=None, box=None,
                        threshold: float = DEFAULT_RESIDUAL_THRESHOLD, slack: float = 1e-6) -> NegligibleVerdict:
    """Decide ``sup|P u_eps| = O(eps**m)`` for each ``m`` in ``test_orders``.

    Only the zeroth derivative is tested unless ``derivative_orders`` is given.
    """
    if derivative_orders is None:
        derivative_orders = [tuple([0] * len(net.mesh.full_shape))]
    est = derivative_estimates(net, derivative_orders, box, threshold)
    verdict = {}
    for m in test_orders:
        verdict[m] = all(e.is_zero or (e.power_law and -e.exponent >= m - slack) for e in est.values())
    return NegligibleVerdict(verdict, est)


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------


_EDGE = 1.0 - 2e-3  # beyond this squared radius the bump and its derivatives underflow


def _shift_up(p: np.ndarray, axis: int) -> np.ndarray:
    """Multiply a dense polynomial coefficient array by y_axis."""
    pad = [(0, 0)] * p.ndim
    pad[axis] = (1, 0)
    return np.pad(p, pad)


def _poly_der(p: np.ndarray, axis: int) -> np.ndarray:
    n = p.shape[axis]
    if n == 1:
        return np.zeros_like(p)
    k = np.arange(1, n, dtype=float).reshape([-1 if i == axis else 1 for i in range(p.ndim)])
    return np.take(p, np.arange(1, n), axis=axis) * k


def _poly_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    shape = tuple(max(x, y) for x, y in zip(a.shape, b.shape))
    out = np.zeros(shape)
    out[tuple(slice(0, s) for s in a.shape)] += a
    out[tuple(slice(0, s) for s in b.shape)] += b
    return out


class TestFunction:
    """Smooth compactly supported function on R^n built from a bump.

    With ``y = (x - center) / width`` and ``q = |y|^2`` the base function is::

        amplitude * (1 + tilt . y) * exp(-sharpness / (1 - q)) * exp(-q / (2 gauss^2))

    for ``q < 1`` and zero elsewhere, so its support is the ellipsoid inscribed
    in the box ``center +- width``.

    Every derivative of such a function has the form
    ``sum_j P_j(y) F^(j)(q)`` with polynomials ``P_j`` and ``F`` the radial
    factor; ``F^(j) = F * R_j(1/(1 - q))`` with polynomials ``R_j``.  The
    instance stores the ``P_j`` as dense coefficient arrays, so derivatives
    (e.g. powers of the d'Alembertian) are exact up to rounding.
    """

    __test__ = False  # keep pytest from collecting this class

    def __init__(self, center, width, amplitude=1.0, tilt=None, sharpness=1.0, gauss=None, label=None):
        self.center = tuple(float(c) for c in np.atleast_1d(center))
        width = np.atleast_1d(np.asarray(width, dtype=float))
        if width.size == 1 and len(self.center) > 1:
            width = np.full(len(self.center), float(width[0]))
        self.width = tuple(float(w) for w in width)
        if len(self.width) != len(self.center) or min(self.width) <= 0:
            raise ValueError("width must be positive, one entry per dimension")
        if sharpness <= 0:
            raise ValueError("sharpness must be positive")
        self.amplitude = float(amplitude)
        self.tilt = None if tilt is None else tuple(float(t) for t in tilt)
        self.sharpness = float(sharpness)
        self.gauss = None if gauss is None else float(gauss)
        self.label = label
        n = self.dim
        p = np.zeros((2,) * n)
        p[(0,) * n] = self.amplitude
        if self.tilt is not None:
            for i, t in enumerate(self.tilt):
                idx = [0] * n
                idx[i] = 1
                p[tuple(idx)] = self.amplitude * t
        self.terms = {0: p}

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def box(self) -> tuple[np.ndarray, np.ndarray]:
        c, w = np.asarray(self.center), np.asarray(self.width)
        return c - w, c + w

    def _with_terms(self, terms: dict, label=None) -> "TestFunction":
        tf = TestFunction.__new__(TestFunction)
        tf.__dict__.update(self.__dict__)
        tf.__dict__.pop("_r_polys", None)
        tf.terms = {j: p for j, p in terms.items() if np.any(p)}
        tf.label = label
        return tf

    def _dy(self, terms: dict, axis: int) -> dict:
        out: dict = {}
        for j, p in terms.items():
            for jj, piece in ((j, _poly_der(p, axis)), (j + 1, 2.0 * _shift_up(p, axis))):
                out[jj] = _poly_add(out[jj], piece) if jj in out else piece
        return out

    def diff(self, multi_index) -> "TestFunction":
        """Exact partial derivative with respect to x."""
        terms = self.terms
        for axis, k in enumerate(multi_index):
            for _ in range(int(k)):
                terms = {j: p / self.width[axis] for j, p in self._dy(terms, axis).items()}
        return self._with_terms(terms)

    def second_order(self, coefficients) -> "TestFunction":
        """Exact ``sum_i coefficients[i] * d^2/dx_i^2`` applied to this function."""
        total: dict = {}
        for axis, c in enumerate(coefficients):
            if c == 0:
                continue
            d2 = self._dy(self._dy(self.terms, axis), axis)
            for j, p in d2.items():
                piece = (c / self.width[axis] ** 2) * p
                total[j] = _poly_add(total[j], piece) if j in total else piece
        return self._with_terms(total)

    def box_operator(self, power: int = 1) -> "TestFunction":
        """``(d_t^2 - sum_i d_i^2)**power`` with the first coordinate as time."""
        out = self
        signs = [1.0] + [-1.0] * (self.dim - 1)
        for _ in range(int(power)):
            out = out.second_order(signs)
        return out

    def laplacian(self) -> "TestFunction":
        return self.second_order([1.0] * self.dim)

    @cached_property
    def _r_polys(self) -> dict:
        """Coefficients (ascending powers of u = 1/(1-q)) of F^(j)/F."""
        s = self.sharpness
        c = 0.0 if self.gauss is None else 1.0 / (2.0 * self.gauss**2)
        from numpy.polynomial import polynomial as P

        dlog = np.array([-c, 0.0, -s])  # derivative of log F in q, as a polynomial in u
        r = {0: np.array([1.0])}
        for j in range(1, max(self.terms) + 1 if self.terms else 1):
            prev = r[j - 1]
            r[j] = P.polyadd(P.polymul([0.0, 0.0, 1.0], P.polyder(prev)) if len(prev) > 1 else [0.0],
                             P.polymul(prev, dlog))
        return r

    def __call__(self, *coords) -> np.ndarray:
        if len(coords) != self.dim:
            raise ValueError(f"test function takes {self.dim} coordinates")
        coords = np.broadcast_arrays(*[np.asarray(x, dtype=float) for x in coords])
        ys = [(x - c) / w for x, c, w in zip(coords, self.center, self.width)]
        q = sum(y**2 for y in ys)
        out = np.zeros(q.shape)
        inside = q < _EDGE
        if not np.any(inside) or not self.terms:
            return out
        ys = [y[inside] for y in ys]
        qi = q[inside]
        u = 1.0 / (1.0 - qi)
        logf = -self.sharpness * u
        if self.gauss is not None:
            logf = logf - qi / (2.0 * self.gauss**2)
        fval = np.exp(logf)
        maxdeg = max(max(p.shape) for p in self.terms.values())
        powers = [[np.ones_like(y)] for y in ys]
        for pw, y in zip(powers, ys):
            for _ in range(1, maxdeg):
                pw.append(pw[-1] * y)
        acc = np.zeros_like(qi)
        from numpy.polynomial import polynomial as P

        for j, p in self.terms.items():
            poly = np.zeros_like(qi)
            for idx in zip(*np.nonzero(p)):
                mono = p[idx]
                term = None
                for axis, k in enumerate(idx):
                    if k:
                        term = powers[axis][k] if term is None else term * powers[axis][k]
                poly += mono if term is None else mono * term
            acc += P.polyval(u, self._r_polys[j]) * poly
        out[inside] = acc * fval
        return out

    def integral(self) -> float:
        """Integral over R^n by adaptive quadrature (reference values only)."""
        lo, hi = self.box
        if self.dim == 1:
            return integrate.quad(lambda x: float(self(x)), lo[0], hi[0], epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        if self.dim == 2:
            f = lambda y, x: float(self(x, y))
            return integrate.dblquad(f, lo[0], hi[0], lo[1], hi[1], epsabs=1e-13, epsrel=1e-12)[0]
        raise NotImplementedError("integral() supports dimensions 1 and 2")

    def __repr__(self):
        return f"TestFunction(center={self.center}, width={self.width}, label={self.label!r})"


def default_battery(dim: int = 1, count: int = 5, scale: float = 1.0, sharpness: float = 6.0) -> list[TestFunction]:
    """A fixed, reproducible battery of bump test functions near the origin.

    High derivatives of ``exp(-s / (1 - q))`` grow like ``(2j / s)^(2j)`` near
    the support edge, so a large sharpness ``s`` keeps pairings against
    repeated derivatives well conditioned.  Amplitudes are scaled by ``e^s``
    so that the peak values are of order one.
    """
    rng = np.random.default_rng(1234 + dim)
    out = []
    for k in range(count):
        center = rng.uniform(-0.3, 0.3, dim) * scale
        width = rng.uniform(1.5, 1.9, dim) * scale
        tilt = rng.uniform(-0.4, 0.4, dim)
        out.append(TestFunction(center, width, amplitude=(1.0 + 0.25 * k) * math.exp(sharpness), tilt=tilt,
                                sharpness=sharpness, label=f"phi{k}"))
    return out


# ---------------------------------------------------------------------------
# pairing and association
# ---------------------------------------------------------------------------


def pair(net: ScalarNet, phi: TestFunction, time_index: int | None = None) -> np.ndarray:
    """Per-eps trapezoid quadrature of ``u_eps * phi`` on the periodic mesh."""
    mesh = net.mesh
    samples = net.samples
    if mesh.has_time:
        if time_index is None:
            raise ValueError("net has a time axis; pass time_index")
        samples = samples[:, time_index]
    if phi.dim != mesh.dim:
        raise ValueError("test function dimension does not match the mesh")
    lo, hi = phi.box
    if not mesh.contains_box(lo, hi):
        raise ValueError("test function support exceeds the mesh domain")
    weights = phi(*mesh.spatial_coords()) * mesh.cell_volume
    return np.tensordot(samples, weights, axes=weights.ndim)


def richardson_extrapolate(values: Sequence[float], ratio: float, order: float) -> float:
    """Eliminate error terms ``eps**order, eps**(2 order), ...`` from a sequence
    computed on eps values shrinking by ``ratio`` at each step (coarse first)."""
    vals = [float(v) for v in values]
    if len(vals) < 2:
        raise ValueError("need at least two values")
    level = vals
    for j in range(1, len(vals)):
        f = ratio ** (order * j)
        level = [(f * level[i + 1] - level[i]) / (f - 1.0) for i in range(len(level) - 1)]
    return level[0]


@dataclass(frozen=True)
class PairingResult:
    label: str | None
    pairings: tuple[float, ...]
    limit: float
    increments: tuple[float, ...]
    cauchy: bool
    shadow_value: float | None = None
    deviation: float | None = None
    finest_deviation: float | None = None
    deviations: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class AssociationReport:
    verdict: str
    results: tuple[PairingResult, ...]
    tolerance: float

    @property
    def associated(self) -> bool:
        return self.verdict in ("associated", "converges")

    @property
    def converges(self) -> bool:
        return all(r.cauchy for r in self.results)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "tolerance": self.tolerance,
                "results": [r.to_dict() for r in self.results]}


def association_check(net: ScalarNet, candidate_shadow: Callable[[TestFunction], float] | None,
                      battery: Sequence[TestFunction], tolerance: float = 1e-3, order: float = 2.0,
                      time_index: int | None = None, tail: int = 3) -> AssociationReport:
    """Check whether ``<u_eps, phi>`` converges, and to ``<shadow, phi>`` if given.

    Limits are Richardson-extrapolated over the last ``tail`` grid points
    assuming an error expansion in powers ``eps**order`` (only when the grid
    is geometric; otherwise the finest pairing is used).
    """
    if not battery:
        raise ValueError("the test-function battery is empty")
    ratio = net.grid.ratio
    results = []
    for phi in battery:
        p = pair(net, phi, time_index)
        inc = np.abs(np.diff(p))
        scale = max(1.0, float(np.max(np.abs(p))))
        last = inc[-1]
        contracting = last <= inc[-2] * (1 + 1e-9) or last <= 1e-12 * scale if len(inc) > 1 else True
        cauchy = bool(last <= tolerance and contracting)
        k = min(tail, len(p))
        limit = richardson_extrapolate(p[-k:], ratio, order) if ratio is not None else float(p[-1])
        if candidate_shadow is not None:
            s = float(candidate_shadow(phi))
            devs = np.abs(p - s)
            results.append(PairingResult(phi.label, tuple(p.tolist()), limit, tuple(inc.tolist()), cauchy, s,
                                         abs(limit - s), float(devs[-1]), tuple(devs.tolist())))
        else:
            results.append(PairingResult(phi.label, tuple(p.tolist()), limit, tuple(inc.tolist()), cauchy))
    if not all(r.cauchy for r in results):
        verdict = "no shadow"
    elif candidate_shadow is None:
        verdict = "converges"
    elif all(r.deviation <= tolerance for r in results):
        verdict = "associated"
    else:
        verdict = "not associated"
    return AssociationReport(verdict, tuple(results), tolerance)


# ---------------------------------------------------------------------------
# mollifier and embeddings
# ---------------------------------------------------------------------------


def _gl(n: int):
    return np.polynomial.legendre.leggauss(n)


class Mollifier:
    """Radial bump ``c_d exp(-1/(1 - |z|^2))`` on the unit ball of R^d.

    The normalizing constant makes the integral exactly one.  The 1-D
    marginal along a coordinate axis gives the profiles of mollified
    step and kink functions.
    """

    _cache: dict = {}

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = dim
        radial = integrate.quad(lambda r: r ** (dim - 1) * math.exp(-1.0 / (1.0 - r * r)), 0, 1,
                                epsabs=1e-15, epsrel=1e-13)[0]
        sphere = 2 * math.pi ** (dim / 2) / math.gamma(dim / 2)
        self.norm = 1.0 / (sphere * radial) if dim > 1 else 1.0 / (2 * radial)

    @classmethod
    def of_dim(cls, dim: int) -> "Mollifier":
        if dim not in cls._cache:
            cls._cache[dim] = cls(dim)
        return cls._cache[dim]

    def profile(self, r2) -> np.ndarray:
        """Kernel value as a function of the squared radius."""
        r2 = np.asarray(r2, dtype=float)
        out = np.zeros(r2.shape)
        m = r2 < 1.0
        out[m] = self.norm * np.exp(-1.0 / (1.0 - r2[m]))
        return out

    def __call__(self, *z) -> np.ndarray:
        return self.profile(sum(np.asarray(c, dtype=float) ** 2 for c in z))

    def marginal(self, s) -> np.ndarray:
        """Integral of the kernel over the hyperplane ``z_0 = s``."""
        s = np.asarray(s, dtype=float)
        if self.dim == 1:
            return self.profile(s**2)
        if self.dim != 2:
            raise NotImplementedError("marginals are implemented for d <= 2")
        x, w = _gl(80)
        a = np.sqrt(np.clip(1.0 - s**2, 0.0, None))
        y = a[..., None] * x
        return (self.profile(s[..., None] ** 2 + y**2) * w).sum(-1) * a

    def _cumulative(self, z, weight_power: int) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        zc = np.clip(z, -1.0, 1.0)
        x, w = _gl(96)
        half = 0.5 * (zc + 1.0)
        s = -1.0 + half[..., None] * (x + 1.0)
        vals = self.marginal(s) * s**weight_power
        return (vals * w).sum(-1) * half

    def cdf(self, z) -> np.ndarray:
        """Integral of the 1-D marginal over (-inf, z]."""
        z = np.asarray(z, dtype=float)
        out = self._cumulative(z, 0)
        out = np.where(z >= 1.0, 1.0, out)
        return np.where(z <= -1.0, 0.0, out)

    def kink(self, z) -> np.ndarray:
        """Marginal convolved with the kink ``s_+``, evaluated at ``z``."""
        z = np.asarray(z, dtype=float)
        val = z * self._cumulative(z, 0) - self._cumulative(z, 1)
        out = np.where(z >= 1.0, z, val)
        return np.where(z <= -1.0, 0.0, out)

    def kink_constant(self) -> float:
        """``c`` with (rho_eps * kink)(0) = c * eps."""
        return float(self.kink(0.0))


@dataclass(frozen=True)
class Delta:
    x0: tuple[float, ...] | float = 0.0

    def pair(self, phi: TestFunction) -> float:
        return float(phi(*np.atleast_1d(self.x0)))


@dataclass(frozen=True)
class Heaviside:
    x0: float = 0.0
    axis: int = 0

    def pair(self, phi: TestFunction) -> float:
        if phi.dim != 1:
            raise NotImplementedError("exact Heaviside pairing is implemented in 1-D")
        lo, hi = phi.box
        a = max(self.x0, lo[0])
        if a >= hi[0]:
            return 0.0
        return integrate.quad(lambda x: float(phi(x)), a, hi[0], epsabs=1e-14, epsrel=1e-13, limit=200)[0]


@dataclass(frozen=True)
class Kink:
    x0: float = 0.0
    axis: int = 0

    def pair(self, phi: TestFunction) -> float:
        if phi.dim != 1:
            raise NotImplementedError("exact kink pairing is implemented in 1-D")
        lo, hi = phi.box
        a = max(self.x0, lo[0])
        if a >= hi[0]:
            return 0.0
        return integrate.quad(lambda x: (x - self.x0) * float(phi(x)), a, hi[0], epsabs=1e-14, epsrel=1e-13,
                              limit=200)[0]


@dataclass(frozen=True)
class Sampled:
    """A continuous function, given as a callable of the spatial coordinates
    or as samples on the target mesh."""

    values: Callable | np.ndarray


def _min_image(coord: np.ndarray, x0: float, length: float) -> np.ndarray:
    d = coord - x0
    return d - length * np.round(d / length)


def _kernel_on_mesh(mesh: Mesh, eps: float, include_time: bool = False) -> np.ndarray:
    """Normalized kernel ``rho_eps`` sampled at periodic displacements from the origin
    (array aligned with FFT ordering)."""
    mol = Mollifier.of_dim(mesh.dim)
    r2 = 0.0
    for i in range(mesh.dim):
        n, h = mesh.shape[i], mesh.spacing[i]
        disp = np.fft.ifftshift((np.arange(n) - n // 2) * h)
        shape = [1] * mesh.dim
        shape[i] = n
        r2 = r2 + (disp.reshape(shape) / eps) ** 2
    k = mol.profile(r2)
    s = k.sum() * mesh.cell_volume
    if s <= 0:
        raise ValueError("mesh too coarse to resolve the mollifier")
    return k / s


def _check_resolution(mesh: Mesh, grid: EpsGrid):
    if max(mesh.spacing) > grid.finest / 4 + 1e-15:
        raise ValueError(
            f"mesh spacing {max(mesh.spacing):.3g} exceeds eps_min/4 = {grid.finest / 4:.3g}")


def mollifier_embed(target, grid: EpsGrid, mesh: Mesh) -> ScalarNet:
    """Embed a distribution on the periodic spatial mesh as the net ``rho_eps * target``.

    ``target`` is one of :class:`Delta`, :class:`Heaviside`, :class:`Kink` or
    :class:`Sampled`.  The mesh spacing must not exceed ``eps_min / 4``.
    """
    if mesh.has_time:
        raise ValueError("embedding targets live on a spatial mesh")
    _check_resolution(mesh, grid)
    coords = mesh.spatial_coords()
    data = np.empty((len(grid),) + mesh.shape)
    if isinstance(target, Delta):
        x0 = np.atleast_1d(np.asarray(target.x0, dtype=float))
        if len(x0) != mesh.dim or not mesh.contains_box(x0, x0):
            raise ValueError("delta location must be a point inside the mesh")
        mol = Mollifier.of_dim(mesh.dim)
        for i, eps in enumerate(grid):
            r2 = sum((_min_image(c, x, L) / eps) ** 2 for c, x, L in zip(coords, x0, mesh.lengths))
            k = mol.profile(r2)
            data[i] = k / (k.sum() * mesh.cell_volume)
        kind = {"kind": "delta", "x0": x0.tolist()}
    elif isinstance(target, (Heaviside, Kink)):
        ax = target.axis
        if not mesh.contains_box([target.x0], [target.x0]) if mesh.dim == 1 else not (
                mesh.origin[ax] <= target.x0 <= mesh.origin[ax] + mesh.lengths[ax]):
            raise ValueError("jump location must lie inside the mesh")
        mol = Mollifier.of_dim(mesh.dim)
        for i, eps in enumerate(grid):
            z = (coords[ax] - target.x0) / eps
            prof = mol.cdf(z) if isinstance(target, Heaviside) else eps * mol.kink(z)
            data[i] = np.broadcast_to(prof, mesh.shape)
        kind = {"kind": type(target).__name__.lower(), "x0": target.x0, "axis": ax}
    elif isinstance(target, Sampled):
        vals = target.values(*coords) if callable(target.values) else np.asarray(target.values, dtype=float)
        vals = np.broadcast_to(vals, mesh.shape)
        spectrum = fft.rfftn(vals)
        for i, eps in enumerate(grid):
            k = _kernel_on_mesh(mesh, eps)
            data[i] = fft.irfftn(spectrum * fft.rfftn(k), s=mesh.shape) * mesh.cell_volume
        kind = {"kind": "sampled"}
    else:
        raise TypeError(f"unsupported embedding target {target!r}")
    return ScalarNet(grid, mesh, data, {"embedding": kind, "mollifier": "radial exp(-1/(1-|z|^2))"})


def mollify_samples(samples: np.ndarray, mesh: Mesh, eps: float) -> np.ndarray:
    """Convolve samples on ``mesh`` (time axis included, if any) with ``rho_eps``.

    The kernel is the radial bump in all mesh dimensions.  Spatial axes wrap;
    the time axis is extended by its end values.  Kernel weights are
    renormalized to unit discrete mass.
    """
    from scipy.signal import fftconvolve

    samples = np.asarray(samples, dtype=float)
    naxes = len(mesh.full_shape)
    if samples.shape[-naxes:] != mesh.full_shape:
        raise ValueError("samples do not match the mesh")
    h = ([mesh.dt] if mesh.has_time else []) + list(mesh.spacing)
    radii = [int(math.ceil(eps / hi)) for hi in h]
    grids = np.meshgrid(*[np.arange(-r, r + 1) * hi / eps for r, hi in zip(radii, h)], indexing="ij")
    kern = Mollifier.of_dim(naxes).profile(sum(g**2 for g in grids))
    if kern.sum() <= 0:
        raise ValueError("mesh too coarse to resolve the mollifier")
    kern /= kern.sum()
    lead = samples.ndim - naxes
    pad = [(0, 0)] * lead + [(r, r) for r in radii]
    out = samples
    if mesh.has_time:
        out = np.pad(out, [(0, 0)] * lead + [pad[lead]] + [(0, 0)] * (naxes - 1), mode="edge")
        out = np.pad(out, [(0, 0)] * (lead + 1) + pad[lead + 1:], mode="wrap")
    else:
        out = np.pad(out, pad, mode="wrap")
    kern = kern.reshape((1,) * lead + kern.shape)
    return fftconvolve(out, kern, mode="valid", axes=tuple(range(lead, samples.ndim)))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _json_float(x: float):
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def save_net(net: ScalarNet, directory, fmt: str = "npy") -> Path:
    """Write one array per eps plus ``manifest.json`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for i in range(len(net.grid)):
        if fmt == "npy":
            name = f"eps_{i:03d}.npy"
            np.save(directory / name, net.samples[i])
        elif fmt == "csv":
            name = f"eps_{i:03d}.csv"
            np.savetxt(directory / name, net.samples[i].reshape(net.samples[i].shape[0], -1), delimiter=",",
                       fmt="%.17g")
        else:
            raise ValueError(f"unknown format {fmt!r}")
        files.append(name)
    manifest = {"eps_grid": net.grid.to_list(), "mesh": net.mesh.to_dict(), "provenance": net.provenance,
                "format": fmt, "files": files}
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str))
    return directory


def load_net(directory) -> ScalarNet:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    grid = EpsGrid(tuple(manifest["eps_grid"]))
    mesh = Mesh.from_dict(manifest["mesh"])
    arrays = []
    for name in manifest["files"]:
        if manifest["format"] == "npy":
            arrays.append(np.load(directory / name))
        else:
            arrays.append(np.loadtxt(directory / name, delimiter=",", ndmin=2).reshape(mesh.full_shape))
    return ScalarNet(grid, mesh, np.stack(arrays), manifest.get("provenance", {}))
