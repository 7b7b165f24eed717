"""Ensemble benchmarks: configure, run over seeds, aggregate, write CSV/SVG."""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from . import rates
from .problem import BilinearGameSpec, DiskEnsembleSpec, DiskMode, make_instance
from .recurrence import mp_coefficients
from .solvers import MethodSpec, Variant, run_method
from .spectra import mp_edges

__all__ = [
    "ConfigError",
    "BenchmarkConfig",
    "ResultRow",
    "Aggregate",
    "parse_config",
    "dump_config",
    "run_benchmark",
    "aggregate",
    "relative_gain",
    "calibrated_sigma2",
    "emit_csv",
    "read_csv",
    "emit_svg",
    "CSV_HEADER",
    "DEFAULT_RATIOS",
]

CSV_HEADER = ["experiment", "method", "seed", "t", "dist", "field_evals", "predicted"]
DIVERGED = "diverged"
DEFAULT_RATIOS = (0.25, 0.5, 0.9, 1.0)
EG_GRID = tuple(k / 10 for k in range(1, 11))

DEFAULT_METHODS = {
    "bilinear": ["avg_opt_bilinear", "asymp_bilinear", "extragradient", "gd"],
    "disk": ["avg_opt_generic", "asymp_disk", "gd"],
}
_ALLOWED = {
    "bilinear": {"avg_opt_bilinear", "asymp_bilinear", "extragradient", "gd"},
    "disk": {"avg_opt_generic", "asymp_disk", "extragradient", "gd"},
}


class ConfigError(ValueError):
    """Invalid benchmark configuration (CLI exit code 2)."""


@dataclass
class BenchmarkConfig:
    experiment: str
    # bilinear ensemble
    d1: int = 200
    d2: int = 200
    sigma2: float = 1.0
    ratios: list[float] | None = None
    edges: str = "empirical"
    # disk ensemble
    d: int = 100
    center: float = 2.0
    radius: float = 1.0
    mode: str = "normal"
    # shared
    init_scale: float = 1.0
    centered: bool = False
    iters: int = 100
    seeds: int = 10
    base_seed: int = 0
    methods: list[str] | None = None
    eg_step: float | None = None
    eg_grid: bool = False
    gd_step: float | None = None
    out: str = "bench"
    svg: bool = False
    threads: int | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def bad(name, msg):
            raise ConfigError(f"{name}: {msg}")

        if self.experiment not in DEFAULT_METHODS:
            bad("experiment", f"must be 'bilinear' or 'disk', got {self.experiment!r}")
        for name in ("iters", "seeds"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                bad(name, f"must be an integer >= 1, got {v!r}")
        if not isinstance(self.base_seed, int) or not 0 <= self.base_seed < 2**64 - self.seeds:
            bad("base_seed", "must be a nonnegative 64-bit integer")
        if not (isinstance(self.init_scale, (int, float)) and self.init_scale > 0):
            bad("init_scale", "must be positive")
        if self.methods is None:
            self.methods = list(DEFAULT_METHODS[self.experiment])
        unknown = [m for m in self.methods if m not in _ALLOWED[self.experiment]]
        if unknown or not self.methods:
            bad("methods", f"unsupported for {self.experiment}: {unknown or 'empty list'}")
        for name in ("eg_step", "gd_step"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                bad(name, "must be finite and positive")
        if self.threads is not None and self.threads < 1:
            bad("threads", "must be >= 1")
        if self.experiment == "bilinear":
            if self.edges not in ("empirical", "theory"):
                bad("edges", "must be 'empirical' or 'theory'")
            if not (math.isfinite(self.sigma2) and self.sigma2 > 0):
                bad("sigma2", "must be finite and positive")
            if self.ratios is not None:
                if not self.ratios:
                    bad("ratios", "must be a nonempty list")
                for r in self.ratios:
                    if not 0 < r <= 1 or round(r * self.d2) < 1:
                        bad("ratios", f"each ratio must lie in (0, 1] with round(r*d2) >= 1, got {r}")
            else:
                for name in ("d1", "d2"):
                    if not isinstance(getattr(self, name), int) or getattr(self, name) < 1:
                        bad(name, "must be an integer >= 1")
                if self.d1 > self.d2:
                    bad("d1", f"players must be ordered so that d1 <= d2 (d1={self.d1}, d2={self.d2})")
        else:
            if not isinstance(self.d, int) or self.d < 2 or self.d % 2:
                bad("d", f"must be an even integer >= 2, got {self.d!r}")
            if not (self.center > 0 and self.radius > 0):
                bad("center/radius", "must be positive")
            if not self.radius < self.center:
                bad("radius", f"constraint R < C violated (R={self.radius}, C={self.center})")
            if self.mode not in ("normal", "iid"):
                bad("mode", "must be 'normal' or 'iid'")

    def experiments(self) -> list[tuple[str, object]]:
        """``(experiment id, spec factory)`` pairs; the factory maps a seed to a spec."""
        if self.experiment == "disk":
            return [("disk", lambda seed: DiskEnsembleSpec(
                self.d, self.center, self.radius, DiskMode(self.mode), self.init_scale, seed))]
        if self.ratios is None:
            dims = [(self.d1, self.d2)]
        else:
            dims = [(int(round(r * self.d2)), self.d2) for r in self.ratios]
        out = []
        for d1, d2 in dims:
            exp_id = "bilinear" if self.ratios is None else f"bilinear_r{d1 / d2:g}"
            out.append((exp_id, lambda seed, d1=d1, d2=d2: BilinearGameSpec(
                d1, d2, self.sigma2, self.init_scale, seed)))
        return out


def dump_config(config: BenchmarkConfig) -> str:
    return json.dumps(dataclasses.asdict(config), sort_keys=True, indent=2)


def parse_config(path=None, **overrides) -> BenchmarkConfig:
    """Load a flat JSON object, apply non-``None`` overrides, validate.

    Unknown keys are rejected.
    """
    known = {f.name for f in dataclasses.fields(BenchmarkConfig)}
    values = {}
    if path is not None:
        try:
            with open(path) as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}") from exc
        if not isinstance(values, dict):
            raise ConfigError("config: expected a single flat JSON object")
    values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"config: unknown keys {unknown}")
    if "experiment" not in values:
        raise ConfigError("experiment: missing")
    try:
        return BenchmarkConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"config: {exc}") from exc


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    method: str
    seed: int
    t: int
    dist: float | None
    field_evals: int
    predicted: float | None = None
    diverged: bool = False


def calibrated_sigma2(instance, r: float) -> float:
    """MP scale whose upper edge equals the instance's largest eigenvalue of ``A^T A``.

    At finite size the top eigenvalue overshoots the limiting edge, and
    methods tuned to the limiting edge can then diverge on that direction.
    """
    return float(np.linalg.norm(instance.matrix, 2) ** 2 / (1 + math.sqrt(r)) ** 2)


def _method_specs(config: BenchmarkConfig, instance, spec) -> list[MethodSpec]:
    T = config.iters
    specs = []
    if config.experiment == "bilinear":
        r = spec.d1 / spec.d2
        sigma2 = calibrated_sigma2(instance, r) if config.edges == "empirical" else spec.sigma2
        lo, hi = mp_edges(sigma2, r)
        for name in config.methods:
            if name == "avg_opt_bilinear":
                specs.append(MethodSpec(Variant.AVG_OPT_BILINEAR,
                                        {"coeffs": mp_coefficients(sigma2, r, T)}))
            elif name == "asymp_bilinear":
                specs.append(MethodSpec(Variant.ASYMP_BILINEAR, {"edge_low": lo, "edge_high": hi}))
            elif name == "extragradient":
                specs.append(MethodSpec(Variant.EXTRAGRADIENT,
                                        {"step": config.eg_step or 1 / math.sqrt(lo + hi),
                                         "grid_scale": 1 / math.sqrt(hi)}))
            elif name == "gd":
                specs.append(MethodSpec(Variant.GRADIENT_DESCENT,
                                        {"step": config.gd_step or 2 / (lo + hi),
                                         "hamiltonian": True}))
    else:
        C, R = config.center, config.radius
        for name in config.methods:
            if name == "avg_opt_generic":
                specs.append(MethodSpec(Variant.AVG_OPT_GENERIC, {"center": C, "radius": R}))
            elif name == "asymp_disk":
                specs.append(MethodSpec(Variant.ASYMP_DISK, {"center": C, "radius": R}))
            elif name == "extragradient":
                specs.append(MethodSpec(Variant.EXTRAGRADIENT,
                                        {"step": config.eg_step or 1 / C, "grid_scale": 1 / C}))
            elif name == "gd":
                specs.append(MethodSpec(Variant.GRADIENT_DESCENT,
                                        {"step": config.gd_step or 1 / C, "hamiltonian": False}))
    return specs


def _prediction(config: BenchmarkConfig, spec: MethodSpec, t: int) -> float | None:
    if config.experiment != "disk":
        return None
    C, R = config.center, config.radius
    scale = config.init_scale**2
    if spec.variant is Variant.AVG_OPT_GENERIC:
        return scale * rates.xi_opt(C, R, t)
    if spec.variant is Variant.ASYMP_DISK:
        return scale * rates.xi_asymp(C, R, t)
    if spec.variant is Variant.GRADIENT_DESCENT and spec.params["step"] == 1 / C:
        return scale * rates.xi_gd(C, R, t)
    return None


def _run_extragradient_grid(instance, spec, T):
    best = None
    for k in EG_GRID:
        trial = MethodSpec(Variant.EXTRAGRADIENT, {"step": k * spec.params["grid_scale"]})
        traj = run_method(instance, trial, T)
        key = (traj.diverged, traj.dist[-1])
        if best is None or key < best[0]:
            best = (key, traj)
    return best[1]


def _run_seed(config, exp_id, make_spec, seed) -> list[ResultRow]:
    spec = make_spec(seed)
    instance = make_instance(spec)
    if config.centered:
        # Same iterates in exact arithmetic; avoids the rounding floor near |x_star| * eps.
        instance = instance.shifted(-instance.x_star)
    rows = []
    for mspec in _method_specs(config, instance, spec):
        if mspec.variant is Variant.EXTRAGRADIENT and config.eg_grid and config.eg_step is None:
            traj = _run_extragradient_grid(instance, mspec, config.iters)
        else:
            traj = run_method(instance, mspec, config.iters)
        name = mspec.variant.value
        for t, (dv, fe) in enumerate(zip(traj.dist, traj.field_evals)):
            rows.append(ResultRow(exp_id, name, seed, t, float(dv), int(fe),
                                  _prediction(config, mspec, t)))
        if traj.diverged:
            t = traj.iters + 1
            per_iter = traj.field_evals[1] if len(traj.field_evals) > 1 else 0
            rows.append(ResultRow(exp_id, name, seed, t, None, int(per_iter * t), None, True))
    return rows


def _workers(config: BenchmarkConfig) -> int:
    if config.threads:
        return config.threads
    env = os.environ.get("BENCH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"BENCH_THREADS: not an integer: {env!r}") from None
    return min(8, os.cpu_count() or 1)


def run_benchmark(config: BenchmarkConfig) -> list[ResultRow]:
    """Run every configured method on every seed; rows sorted by experiment, method, seed, t."""
    jobs = [
        (exp_id, factory, config.base_seed + i)
        for exp_id, factory in config.experiments()
        for i in range(config.seeds)
    ]
    workers = _workers(config)
    if workers == 1:
        chunks = [_run_seed(config, *job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda job: _run_seed(config, *job), jobs))
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r.experiment, r.method, r.seed, r.t))
    return rows


@dataclass(frozen=True)
class Aggregate:
    experiment: str
    method: str
    t: int
    mean: float | None
    stderr: float | None
    n: int
    diverged: int
    predicted: float | None = None


def aggregate(rows: Iterable[ResultRow]) -> list[Aggregate]:
    """Per ``(experiment, method, t)`` mean and standard error over non-diverged runs."""
    rows = list(rows)
    if not rows:
        return []
    diverged_runs = {(r.experiment, r.method, r.seed) for r in rows if r.diverged}
    groups: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        if not r.diverged:
            groups.setdefault((r.experiment, r.method, r.t), []).append(r)
    n_div = {}
    for exp, method, _ in diverged_runs:
        n_div[(exp, method)] = n_div.get((exp, method), 0) + 1
    out = []
    for (exp, method, t), grp in sorted(groups.items()):
        vals = np.array(
            [r.dist for r in sorted(grp, key=lambda r: r.seed)
             if (exp, method, r.seed) not in diverged_runs]
        )
        preds = {r.predicted for r in grp}
        pred = preds.pop() if len(preds) == 1 else None
        if vals.size == 0:
            out.append(Aggregate(exp, method, t, None, None, 0, n_div.get((exp, method), 0), pred))
            continue
        mean = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
        out.append(Aggregate(exp, method, t, mean, se, int(vals.size),
                             n_div.get((exp, method), 0), pred))
    # Groups whose every run diverged before t would otherwise vanish.
    seen = {(a.experiment, a.method) for a in out}
    for exp, method in sorted(n_div):
        if (exp, method) not in seen:
            out.append(Aggregate(exp, method, 0, None, None, 0, n_div[(exp, method)], None))
    return out


def relative_gain(aggs: Sequence[Aggregate], experiment: str, baseline: str,
                  method: str = "avg_opt_bilinear", t_min: int = 10) -> float:
    """Median over ``t >= t_min`` of ``mean_baseline(t) / mean_method(t)``."""
    by = {(a.method, a.t): a.mean for a in aggs if a.experiment == experiment}
    ratios = [
        by[(baseline, t)] / by[(method, t)]
        for (m, t) in by
        if m == method and t >= t_min and by.get((baseline, t)) is not None
        and by[(method, t)] not in (None, 0.0)
    ]
    if not ratios:
        raise ValueError(f"no overlapping iterations for {method} and {baseline}")
    return float(np.median(ratios))


def _fmt(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def _open_for_write(path):
    try:
        return open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_csv(rows: Iterable[ResultRow], path) -> None:
    """Lossless CSV (17 significant digits); diverged markers carry ``dist=diverged``."""
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            dist = DIVERGED if r.diverged else _fmt(r.dist)
            seed = "" if r.seed is None else r.seed
            w.writerow([r.experiment, r.method, seed, r.t, dist, r.field_evals,
                        _fmt(r.predicted)])


def read_csv(path) -> list[ResultRow]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        for rec in reader:
            div = rec["dist"] == DIVERGED
            out.append(ResultRow(
                rec["experiment"], rec["method"], int(rec["seed"]) if rec["seed"] else None,
                int(rec["t"]), None if div or not rec["dist"] else float(rec["dist"]),
                int(rec["field_evals"]) if rec["field_evals"] else 0,
                float(rec["predicted"]) if rec["predicted"] else None, div,
            ))
    return out


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def emit_svg(aggs: Sequence[Aggregate], path, width: int = 640, height: int = 360) -> None:
    """One log-scale panel per experiment; solid lines for means, dashed for theory."""
    experiments = sorted({a.experiment for a in aggs})
    margin_l, margin_r, margin_t, margin_b = 70, 170, 30, 40
    total_h = height * max(1, len(experiments))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{total_h}" '
        f'viewBox="0 0 {width} {total_h}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{total_h}" fill="white"/>',
    ]
    for panel, exp in enumerate(experiments):
        sub = [a for a in aggs if a.experiment == exp]
        curves: dict[tuple[str, bool], list[tuple[int, float]]] = {}
        for a in sub:
            if a.mean is not None and a.mean > 0:
                curves.setdefault((a.method, False), []).append((a.t, a.mean))
            if a.predicted is not None and a.predicted > 0:
                curves.setdefault((a.method, True), []).append((a.t, a.predicted))
        y0 = panel * height
        pw, ph = width - margin_l - margin_r, height - margin_t - margin_b
        parts.append(f'<text x="{margin_l}" y="{y0 + 18}" font-size="13">{escape(exp)}</text>')
        parts.append(f'<rect x="{margin_l}" y="{y0 + margin_t}" width="{pw}" height="{ph}" '
                     'fill="none" stroke="black"/>')
        if not curves:
            continue
        ts = [t for pts in curves.values() for t, _ in pts]
        ys = [math.log10(v) for pts in curves.values() for _, v in pts]
        tmax = max(max(ts), 1)
        lo, hi = math.floor(min(ys)), math.ceil(max(ys))
        if hi == lo:
            hi += 1

        def px(t):
            return margin_l + pw * t / tmax

        def py(v):
            return y0 + margin_t + ph * (hi - math.log10(v)) / (hi - lo)

        step = max(1, (hi - lo) // 6)
        for e in range(lo, hi + 1, step):
            yy = py(10.0**e)
            parts.append(f'<line x1="{margin_l - 4}" y1="{yy:.2f}" x2="{margin_l}" y2="{yy:.2f}" '
                         'stroke="black"/>')
            parts.append(f'<text x="{margin_l - 6}" y="{yy + 4:.2f}" text-anchor="end">1e{e}</text>')
        parts.append(f'<text x="{margin_l + pw / 2:.2f}" y="{y0 + height - 8}" '
                     'text-anchor="middle">iteration</text>')
        parts.append(f'<text x="{margin_l + pw:.2f}" y="{y0 + margin_t + ph + 14}" '
                     f'text-anchor="end">{tmax}</text>')
        methods = sorted({m for m, _ in curves})
        for i, method in enumerate(methods):
            color = _PALETTE[i % len(_PALETTE)]
            for theory in (False, True):
                pts = sorted(curves.get((method, theory), []))
                if not pts:
                    continue
                coords = " ".join(f"{px(t):.2f},{py(v):.2f}" for t, v in pts)
                dash = ' stroke-dasharray="5,4"' if theory else ""
                parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} '
                             f'points="{coords}"/>')
            ly = y0 + margin_t + 14 * (i + 1)
            parts.append(f'<line x1="{width - margin_r + 10}" y1="{ly - 4}" '
                         f'x2="{width - margin_r + 30}" y2="{ly - 4}" stroke="{color}" '
                         'stroke-width="2"/>')
            label = method + (" (+theory)" if (method, True) in curves else "")
            parts.append(f'<text x="{width - margin_r + 34}" y="{ly}">{escape(label)}</text>')
    parts.append("</svg>")
    with _open_for_write(path) as fh:
        fh.write("\n".join(parts) + "\n")
