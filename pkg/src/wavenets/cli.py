"""Scenario runner: ``wavenets run|list|solve|energy|riesz|conditions``.

A scenario is a JSON file naming an eps grid, a metric, Cauchy data and a
list of analyses, each with explicit tolerances.  Every analysis records
measured numbers and boolean verdicts separately; the exit status is 0 when
all verdicts pass, 1 when any fails and 2 for configuration errors.

Outputs in ``--out``: ``report.json`` (deterministic, sorted keys),
``metadata.json`` (timestamps, runtimes, versions), CSV tables and, for
solves, ``.npy`` field dumps with a manifest.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import platform
import sys
import time
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np
import scipy

from . import energy as en
from . import nets, riesz, solver, spacetime
from .nets import EpsGrid, Mesh, TestFunction

ANALYSES = ("conditions", "solve", "energy", "riesz", "hadamard", "association", "convergence",
            "dependence", "negligible", "moderate")
METRICS = ("minkowski", "robertson_walker", "pp_wave", "adversarial")
DATA_TYPES = ("zero", "sine", "cosine", "bump", "delta", "heaviside")
NEEDS_SOLUTION = ("solve", "energy", "negligible")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    """Malformed or inconsistent scenario."""


# ---------------------------------------------------------------------------
# scenario loading and validation
# ---------------------------------------------------------------------------


def scenario_dir():
    return resources.files("wavenets") / "scenarios"


def shipped_scenarios() -> dict[str, dict]:
    out = {}
    for entry in sorted(scenario_dir().iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            cfg = json.loads(entry.read_text())
            out[cfg.get("name", entry.name[:-5])] = cfg
    return out


def load_scenario(ref: str) -> dict:
    """A scenario from a path or by shipped name."""
    path = Path(ref)
    if path.is_file():
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        cfg.setdefault("name", path.stem)
        return cfg
    shipped = shipped_scenarios()
    if ref in shipped:
        return copy.deepcopy(shipped[ref])
    raise ConfigError(f"no scenario file or shipped scenario named {ref!r}")


def _positive(value, what: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what} must be a number, got {value!r}") from exc
    if not (v > 0 and math.isfinite(v)):
        raise ConfigError(f"{what} must be positive, got {value!r}")
    return v


def validate(cfg: dict) -> dict:
    """Check the scenario structure; returns it unchanged."""
    if not isinstance(cfg, dict):
        raise ConfigError("scenario must be a JSON object")
    for key in ("name", "analyses"):
        if key not in cfg:
            raise ConfigError(f"scenario lacks {key!r}")
    if "T" in cfg:
        _positive(cfg["T"], "T")
    eg = cfg.get("eps_grid", {})
    if int(eg.get("count", 6)) < 4:
        raise ConfigError("eps_grid.count must be at least 4")
    _positive(eg.get("eps0", 0.1), "eps_grid.eps0")
    r = float(eg.get("ratio", 0.5))
    if not 0 < r < 1:
        raise ConfigError("eps_grid.ratio must lie in (0, 1)")
    if "metric" in cfg and cfg["metric"].get("type") not in METRICS:
        raise ConfigError(f"metric.type must be one of {METRICS}")
    if "mesh" in cfg:
        m = cfg["mesh"]
        if int(m.get("n", 0)) < 8:
            raise ConfigError("mesh.n must be at least 8")
        if int(m.get("dim", 1)) not in (1, 2):
            raise ConfigError("mesh.dim must be 1 or 2")
    for key in ("u0", "u1"):
        desc = cfg.get("data", {}).get(key)
        if desc is not None and desc.get("type") not in DATA_TYPES:
            raise ConfigError(f"data.{key}.type must be one of {DATA_TYPES}")
    if not isinstance(cfg["analyses"], list) or not cfg["analyses"]:
        raise ConfigError("analyses must be a non-empty list")
    for a in cfg["analyses"]:
        if a.get("type") not in ANALYSES:
            raise ConfigError(f"unknown analysis {a.get('type')!r}; known: {ANALYSES}")
        if "metric" in a and a["metric"].get("type") not in METRICS:
            raise ConfigError(f"metric.type must be one of {METRICS}")
        for k, v in a.get("tolerances", {}).items():
            _positive(v, f"{a['type']}.tolerances.{k}")
        if a["type"] in NEEDS_SOLUTION + ("dependence",) and ("T" not in cfg or "mesh" not in cfg):
            raise ConfigError(f"analysis {a['type']!r} needs T and mesh")
    return cfg


def apply_overrides(cfg: dict, eps_count=None, resolution=None) -> dict:
    cfg = copy.deepcopy(cfg)
    if eps_count is not None:
        cfg.setdefault("eps_grid", {})["count"] = int(eps_count)
    if resolution is not None:
        if "mesh" in cfg:
            cfg["mesh"]["n"] = int(resolution)
    return cfg


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def build_grid(cfg: dict) -> EpsGrid:
    eg = cfg.get("eps_grid", {})
    if "values" in eg:
        return EpsGrid(tuple(eg["values"]))
    return EpsGrid.geometric(float(eg.get("eps0", 0.1)), int(eg.get("count", 6)), float(eg.get("ratio", 0.5)))


def build_mesh(desc: dict, with_times: bool = False) -> Mesh:
    dim = int(desc.get("dim", 1))
    length = float(desc.get("length", 2 * math.pi))
    times = tuple(desc["times"]) if with_times or "times" in desc else None
    if times is not None:
        times = (float(times[0]), float(times[1]), int(times[2]))
    return Mesh.torus(int(desc["n"]), length=length, dim=dim, times=times)


def build_metric(desc: dict, grid: EpsGrid) -> spacetime.MetricSplit:
    kind = desc["type"]
    mesh = build_mesh(desc.get("mesh", {"n": 16, "times": [-1, 1, 21]}), with_times=True)
    if kind == "minkowski":
        return spacetime.make_minkowski(mesh, grid)
    if kind == "robertson_walker":
        return spacetime.make_robertson_walker(float(desc.get("f", 2.0)), None, mesh, grid)
    if kind == "pp_wave":
        return spacetime.make_pp_wave_rosen(mesh, grid, bool(desc.get("mollified", True)))
    return spacetime.make_adversarial(mesh, grid)


def _bump(desc: dict, dim: int) -> TestFunction:
    s = float(desc.get("sharpness", 6.0))
    center = desc.get("center", [0.0] * dim)
    width = desc.get("width", [1.0] * dim)
    amp = float(desc.get("amplitude", 1.0)) * math.exp(s)
    return TestFunction(center, width, amplitude=amp, sharpness=s)


def data_target(desc: dict | None, dim: int):
    """Callable ``(*x) -> values`` or a distributional target for a data descriptor."""
    if desc is None or desc["type"] == "zero":
        return None
    kind = desc["type"]
    a = float(desc.get("amplitude", 1.0))
    axis = int(desc.get("axis", 0))
    if kind == "sine":
        k = float(desc.get("k", 1.0))
        return lambda *xs: a * np.sin(k * xs[axis])
    if kind == "cosine":
        k = float(desc.get("k", 1.0))
        return lambda *xs: a * np.cos(k * xs[axis])
    if kind == "bump":
        return _bump(desc, dim)
    if kind == "delta":
        return nets.Delta(tuple(desc.get("x0", [0.0] * dim)))
    return nets.Heaviside(float(desc.get("x0", 0.0)), axis)


def _is_distribution(target) -> bool:
    return isinstance(target, (nets.Delta, nets.Heaviside, nets.Kink))


def _embed(target, grid: EpsGrid, mesh: Mesh, power: float) -> nets.ScalarNet:
    if target is None:
        net = nets.ScalarNet.constant(grid, mesh, 0.0)
    elif _is_distribution(target):
        net = nets.mollifier_embed(target, grid, mesh)
    else:
        net = nets.ScalarNet.from_function(grid, mesh, lambda e, *xs: target(*xs))
    return net.scaled_by_eps(power) if power else net


def _support(desc: dict | None, dim: int):
    if desc and desc.get("type") == "bump":
        lo, hi = _bump(desc, dim).box
        return [(float(a), float(b)) for a, b in zip(lo, hi)]
    return None


def build_data(cfg: dict, grid: EpsGrid, mesh: Mesh) -> solver.CauchyData:
    d = cfg.get("data", {})
    dim = mesh.dim
    power = float(d.get("eps_power", 0.0))
    t0, t1 = data_target(d.get("u0"), dim), data_target(d.get("u1"), dim)
    u0 = _embed(t0, grid, mesh, power)
    u1 = _embed(t1, grid, mesh, power)
    sup = None
    s0, s1 = _support(d.get("u0"), dim), _support(d.get("u1"), dim)
    if s0 or s1:
        boxes = [b for b in (s0, s1) if b]
        sup = [(min(b[i][0] for b in boxes), max(b[i][1] for b in boxes)) for i in range(dim)]
    return solver.CauchyData(u0, u1, None, sup, {"data": d})


class Context:
    """Lazily built objects shared by the analyses of one scenario."""

    def __init__(self, cfg: dict, threads: int = 1):
        self.cfg = cfg
        self.threads = threads
        self.grid = build_grid(cfg)
        self.metric = build_metric(cfg["metric"], self.grid) if "metric" in cfg else None
        self.mesh = build_mesh(cfg["mesh"]) if "mesh" in cfg else None
        self.data = build_data(cfg, self.grid, self.mesh) if self.mesh is not None and "data" in cfg else None
        self._solution = None

    def metric_for(self, a: dict) -> spacetime.MetricSplit:
        """The analysis' own metric if it names one, else the scenario metric."""
        if "metric" in a:
            return build_metric(a["metric"], self.grid)
        return self.metric

    @property
    def T(self) -> float:
        return float(self.cfg["T"])

    def solution(self) -> solver.SolutionNet:
        if self._solution is None:
            n_out = int(self.cfg.get("n_out", 11))
            self._solution = solver.solve(self.metric, self.data, self.T, n_out=n_out, threads=self.threads)
        return self._solution


# ---------------------------------------------------------------------------
# analyses
# ---------------------------------------------------------------------------


def _tol(a: dict, key: str, default: float) -> float:
    return float(a.get("tolerances", {}).get(key, default))


def _expect(a: dict, key: str, default: bool = True) -> bool:
    return bool(a.get("expect", {}).get(key, default))


def _expected(a: dict, measured: dict) -> dict:
    """Verdicts comparing measured booleans with their expected outcome."""
    return {k: v == _expect(a, k) for k, v in measured.items()}


def run_conditions(ctx: Context, a: dict, out: Path):
    g = ctx.metric_for(a)
    slack = _tol(a, "slack", spacetime.DEFAULT_SLACK)
    A = spacetime.check_condition_A(g, k_max=int(a.get("k_max", 3)), slack=slack)
    measured = {"condition_A": A.to_dict()}
    outcome = {"A": bool(A.passed)}
    if g.active_indices():
        B = spacetime.check_condition_B(g, slack=slack)
        measured["condition_B"] = B.to_dict()
        outcome["B"] = bool(B.passed)
    else:
        measured["condition_B"] = {"skipped": "every eps is degenerate"}
        outcome["B"] = False
    if a.get("splitting", False) and g.active_indices():
        S = spacetime.check_splitting(g, slack=slack)
        measured["splitting"] = S.to_dict()
        outcome["splitting"] = bool(S.passed)
    measured["metric"] = g.describe()
    measured["outcome"] = outcome
    return measured, _expected(a, outcome)


def run_solve(ctx: Context, a: dict, out: Path):
    sol = ctx.solution()
    measured = {"diagnostics": sol.diagnostics_dict(), "times": sol.times.tolist()}
    verdicts = {"all_ok": not sol.partial}
    if a.get("dump", True):
        nets.save_net(sol.u, out / "fields" / "u")
    oracle = a.get("oracle")
    if oracle:
        exact = _oracle(oracle)
        ts, coords = sol.times, sol.mesh.coords()
        err = float(np.max(np.abs(sol.u.samples - exact(*coords)[None])))
        measured["max_error"] = err
        verdicts["oracle"] = err <= _tol(a, "max_error", 1e-3)
    return measured, verdicts


def _oracle(desc: dict):
    k = float(desc.get("k", 1.0))
    if desc["type"] == "standing_wave":
        return lambda t, *xs: np.sin(k * xs[0]) * np.cos(k * t)
    raise ConfigError(f"unknown oracle {desc['type']!r}")


def run_energy(ctx: Context, a: dict, out: Path):
    sol = ctx.solution()
    fields = en.FieldNet.from_solution(sol)
    rep = en.energy_report(fields, k_max=1, gronwall=a.get("gronwall", True))
    measured = {"report": rep.to_dict()}
    verdicts = {"dominant_energy": bool(rep.positivity.get("passed", True))}
    E0, E1 = rep.energies[0], rep.energies[1]
    if "conservation" in a.get("tolerances", {}):
        order1 = E1 - E0
        drift = float(np.nanmax(np.abs(order1 - order1[:, :1]) / np.abs(order1[:, :1])))
        measured["order1_drift"] = drift
        verdicts["conservation"] = drift < _tol(a, "conservation", 1e-4)
        if "closed_form" in a.get("tolerances", {}):
            ts = rep.tau_grid
            target = np.pi / 2 * (1 + np.cos(ts) ** 2)
            dev = float(np.nanmax(np.abs(E1 - target) / target))
            measured["closed_form_deviation"] = dev
            verdicts["closed_form"] = dev < _tol(a, "closed_form", 1e-3)
    band = a.get("ratio_band")
    if band:
        eq = en.verify_norm_energy_equivalence(fields, 1, band=tuple(band))
        measured["equivalence"] = eq.to_dict()
        verdicts["equivalence"] = eq.passed
    if rep.gronwall is not None:
        verdicts["gronwall_uniform"] = bool(rep.gronwall.passed)
    if "sup_exponent" in a.get("tolerances", {}):
        est = rep.sup_energy_estimate
        verdicts["moderate_sup"] = bool(est.bounded_by(_tol(a, "sup_exponent", 0.3)))
    rows = rep.csv_rows()
    _write_csv(out / "energy.csv", ["tau", "eps", "E0", "E1", "ratio"], rows)
    return measured, verdicts


def _battery(a: dict, dim: int) -> list[TestFunction]:
    return nets.default_battery(dim, int(a.get("count", 5)))


def run_riesz(ctx: Context, a: dict, out: Path):
    n = int(a.get("n", 2))
    alpha = float(a.get("alpha", 0.0))
    battery = _battery(a, n)
    quad = {k: a[k] for k in ("panels", "angular", "order") if k in a}
    mode = a.get("mode", "delta")
    rows, measured = [], {"n": n, "alpha": alpha, "mode": mode}
    if mode == "delta":
        worst = 0.0
        for phi in battery:
            val = riesz.riesz_pair(riesz.RieszParams(0.0, n), phi, **quad)
            ref = float(phi(*([0.0] * n)))
            rel = abs(val - ref) / abs(ref)
            worst = max(worst, rel)
            rows.append([phi.label, val, ref, rel])
        measured["max_relative_deviation"] = worst
        verdicts = {"delta_property": worst < _tol(a, "relative", 1e-6)}
    else:
        dev = riesz.verify_recursion(alpha, n, battery, **quad)
        measured["max_deviation"] = dev
        rows.append(["recursion", dev, 0.0, dev])
        verdicts = {"recursion": dev < _tol(a, "absolute", 1e-6)}
    c22, c24 = riesz.riesz_constant(2, 2), riesz.riesz_constant(2, 4)
    measured["constants"] = {"C(2,2)": c22, "C(2,4)": c24}
    verdicts["constants"] = c22 == 0.5 and c24 == 0.0
    _write_csv(out / f"riesz_{mode}_n{n}.csv", ["label", "value", "reference", "deviation"], rows)
    return measured, verdicts


def run_hadamard(ctx: Context, a: dict, out: Path):
    n = int(a.get("n", 2))
    rng = np.random.default_rng(int(a.get("seed", 0)))
    dirs = rng.normal(size=(int(a.get("rays", 6)), n))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    x = a.get("base_point", [0.1] * n)
    states = riesz.hadamard_v0(None, x, dirs, float(a.get("radius", 0.5)), steps=int(a.get("steps", 100)))
    dev = max(float(np.max(np.abs(s.V - 1))) for s in states)
    base = [float(s.V[0]) for s in states]
    measured = {"max_deviation": dev, "base_values": base, "flags": [s.flag for s in states]}
    return measured, {"V0_is_one": dev < _tol(a, "deviation", 1e-8), "base_exact": all(b == 1.0 for b in base)}


def run_association(ctx: Context, a: dict, out: Path):
    d = ctx.cfg.get("data", {})
    dim = ctx.mesh.dim
    t0, t1 = data_target(d.get("u0"), dim), data_target(d.get("u1"), dim)
    battery = _battery(a, dim)
    rep = solver.solve_distributional(ctx.metric, t0, t1, ctx.T, battery, ctx.mesh,
                                      tolerance=_tol(a, "deviation", 1e-2), n_out=int(a.get("n_out", 3)),
                                      threads=ctx.threads)
    final = rep.reports[-1]
    devs = np.array([p.deviations for p in final.results])
    worst = np.max(np.abs(devs), axis=0)
    monotone = bool(np.all(np.diff(worst) < 0))
    measured = {"times": list(rep.times), "verdict": final.verdict, "finest_deviation": float(worst[-1]),
                "worst_deviation_per_eps": worst.tolist()}
    rows = [[float(e)] + devs[:, i].tolist() for i, e in enumerate(ctx.grid)]
    _write_csv(out / "association.csv", ["eps"] + [p.label for p in final.results], rows)
    return measured, {"monotone": monotone, "finest": float(worst[-1]) < _tol(a, "deviation", 1e-2)}


def run_convergence(ctx: Context, a: dict, out: Path):
    res = [int(r) for r in a.get("resolutions", [256, 512, 1024])]
    d = ctx.cfg.get("data", {})
    u0 = data_target(d.get("u0"), 1)
    u1 = data_target(d.get("u1"), 1)
    exact = _oracle(a["oracle"]) if "oracle" in a else None

    def data_fn(N):
        mesh = Mesh.torus(N, length=float(ctx.cfg.get("mesh", {}).get("length", 2 * math.pi)))
        return solver.CauchyData.from_functions(ctx.grid, mesh, u0, u1)

    rep = solver.convergence_order(ctx.metric, data_fn, ctx.T, res, exact=exact)
    target = float(a.get("expected_order", 2.0))
    orders = [float(v) for v in rep.orders.values()]
    worst = max(abs(o - target) for o in orders)
    rows = [[float(e), n, err] for e, errs in rep.errors.items() for n, err in zip(rep.resolutions, errs)]
    _write_csv(out / "convergence.csv", ["eps", "N", "error"], rows)
    return {"report": rep.to_dict(), "orders": orders}, {"order": worst <= _tol(a, "order", 0.2)}


def run_dependence(ctx: Context, a: dict, out: Path):
    box = a.get("box") or ctx.data.support
    g = ctx.metric_for(a)
    rep = solver.domain_of_dependence_check(g, ctx.data, ctx.T, box,
                                            tolerance=_tol(a, "relative", 1e-8),
                                            collar_cells=float(a.get("collar_cells", 2.0)))
    return {"report": rep.to_dict(), "metric": g.label}, {"vanishes_outside": bool(rep.passed)}


def run_negligible(ctx: Context, a: dict, out: Path):
    sol = ctx.solution()
    est = nets.estimate_order([float(np.max(np.abs(sol.u.samples[i]))) for i in range(len(ctx.grid))], ctx.grid)
    decay = -est.exponent
    measured = {"estimate": est.to_dict(), "decay_exponent": decay}
    return measured, {"decay": decay >= _tol(a, "decay", 3.5)}


def run_moderate(ctx: Context, a: dict, out: Path):
    """Synthetic ``eps^-N`` nets: the fitted exponent must recover ``N``."""
    grid = ctx.grid
    mesh = Mesh.torus(int(a.get("n", 64)))
    worst, rows = 0.0, []
    for N in a.get("orders", [0, 1, 2, 3]):
        net = nets.ScalarNet.from_function(grid, mesh, lambda e, x, _N=N: e ** (-_N) * (1 + 0.5 * np.sin(x)))
        est = next(iter(nets.classify_moderate(net).estimates.values()))
        worst = max(worst, abs(est.exponent - N))
        rows.append([N, est.exponent])
    _write_csv(out / "moderate.csv", ["N", "fitted_exponent"], rows)
    return {"max_error": worst, "fits": rows}, {"recovers_order": worst <= _tol(a, "exponent", 0.05)}


RUNNERS = {"conditions": run_conditions, "solve": run_solve, "energy": run_energy, "riesz": run_riesz,
           "hadamard": run_hadamard, "association": run_association, "convergence": run_convergence,
           "dependence": run_dependence, "negligible": run_negligible, "moderate": run_moderate}


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _write_csv(path: Path, header: list, rows: list):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return obj


def run_scenario(cfg: dict, out: Path, threads: int = 1, only: str | None = None) -> tuple[int, dict]:
    """Run the analyses of a validated scenario and write the report bundle."""
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    try:
        validate(cfg)
        analyses = cfg["analyses"]
        if only is not None:
            analyses = [a for a in analyses if a["type"] == only] or [{"type": only}]
            if only in NEEDS_SOLUTION + ("dependence",) and ("T" not in cfg or "mesh" not in cfg):
                raise ConfigError(f"analysis {only!r} needs T and mesh")
        ctx = Context(cfg, threads)
        if any(a["type"] in NEEDS_SOLUTION + ("conditions", "association", "convergence", "dependence")
               and "metric" not in a for a in analyses) and ctx.metric is None:
            raise ConfigError("scenario needs a metric for its analyses")
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        return EXIT_CONFIG, {"status": "CONFIG ERROR", "error": f"{type(exc).__name__}: {exc}"}
    out.mkdir(parents=True, exist_ok=True)
    results, timings = [], {}
    for k, a in enumerate(analyses):
        tag = f"{k}:{a['type']}"
        ts = time.perf_counter()
        try:
            measured, verdicts = RUNNERS[a["type"]](ctx, a, out)
            err = None
        except ConfigError as exc:
            return EXIT_CONFIG, {"status": "CONFIG ERROR", "error": str(exc)}
        except Exception as exc:  # an analysis that crashes is a failed verdict
            measured, verdicts, err = {}, {"completed": False}, f"{type(exc).__name__}: {exc}"
        timings[tag] = time.perf_counter() - ts
        entry = {"type": a["type"], "measured": measured, "verdicts": verdicts,
                 "passed": all(bool(v) for v in verdicts.values())}
        if err:
            entry["error"] = err
        results.append(entry)
    status = "PASS" if all(r["passed"] for r in results) else "FAIL"
    report = _clean({"scenario": cfg["name"], "description": cfg.get("description", ""), "config": cfg,
                     "analyses": results, "status": status})
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    meta = {"started": started.isoformat(), "finished": datetime.now(timezone.utc).isoformat(),
            "runtime_seconds": time.perf_counter() - t0, "analysis_seconds": timings,
            "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "threads": threads}
    (out / "metadata.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return (EXIT_OK if status == "PASS" else EXIT_FAIL), report


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavenets", description="Run wave-equation net scenarios.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="report directory (default reports/<name>)")
    common.add_argument("--eps-count", type=int, default=None, help="override the number of eps values")
    common.add_argument("--resolution", type=int, default=None, help="override the spatial mesh size")
    common.add_argument("--threads", type=int, default=1, help="worker threads for per-eps solves")
    r = sub.add_parser("run", parents=[common], help="run every analysis of a scenario")
    r.add_argument("scenario", help="scenario file or shipped scenario name")
    sub.add_parser("list", help="list shipped scenarios")
    for name, text in (("solve", "solve and dump fields"), ("energy", "energies, norms and Gronwall fit"),
                       ("riesz", "Riesz distribution checks"), ("conditions", "growth conditions on a metric net")):
        s = sub.add_parser(name, parents=[common], help=f"{text} for a scenario")
        s.add_argument("scenario", help="scenario file or shipped scenario name")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        for name, cfg in shipped_scenarios().items():
            print(f"{name}\t{cfg.get('description', '')}")
        return EXIT_OK
    try:
        cfg = apply_overrides(load_scenario(args.scenario), args.eps_count, args.resolution)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or Path("reports") / str(cfg.get("name", "scenario"))
    only = None if args.command == "run" else args.command
    code, report = run_scenario(cfg, out, threads=args.threads, only=only)
    if code == EXIT_CONFIG:
        print(f"config error: {report['error']}", file=sys.stderr)
        return code
    for a in report["analyses"]:
        flags = ", ".join(f"{k}={'PASS' if v else 'FAIL'}" for k, v in sorted(a["verdicts"].items()))
        print(f"{a['type']:<12} {'PASS' if a['passed'] else 'FAIL'}  {flags}")
        if "error" in a:
            print(f"    error: {a['error']}")
    print(f"{report['scenario']}: {report['status']}  ->  {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
