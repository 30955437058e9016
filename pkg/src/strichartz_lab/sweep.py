"""Sweep configuration, execution and report emission."""
from __future__ import annotations

import csv
import enum
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .counterexamples import (KnappParams, TubeParams, duhamel_quotient, knapp_measure,
                              predicted_exponents, scaling_family, tube_measure)
from .duhamel import (dyadic_synthesis, duhamel_timestep, relative_l2, resolved_window,
                      t_delta_apply, t_delta_timeside, tdelta_scaling_probe)
from .exponent_geometry import (ExponentConfig, ExponentPoint, as_rational, classify,
                                fmt_rational, scaling_gap, vertices)
from .fitting import fit_slope
from .spectral import Field, GridSpec

__all__ = [
    "Experiment",
    "ConfigError",
    "SweepConfig",
    "SweepReport",
    "DEFAULT_TOLERANCES",
    "run_sweep",
    "emit_report",
    "load_config",
    "band_limited_forcing",
    "annulus_forcing",
]


class ConfigError(ValueError):
    """Raised for malformed or out-of-budget sweep configurations."""


class Experiment(str, enum.Enum):
    REGION_SCAN = "REGION_SCAN"
    KNAPP = "KNAPP"
    TUBE = "TUBE"
    SCALING = "SCALING"
    TDELTA_PROBE = "TDELTA_PROBE"
    DUHAMEL_VERIFY = "DUHAMEL_VERIFY"


DEFAULT_TOLERANCES = {
    "operator_slope": 0.3,
    "input_slope": 0.15,
    "oracle": 1e-3,
    "dual_path": 1e-4,
    "scaling_ratio": 0.01,
    "scaling_log2": 0.05,
    "tube_slope": 0.35,
    "tube_constant": 0.05,
    "phase_bound": 10.0,
    "wrap_mass": 1e-6,
}

# Default parameter lists and grids per experiment.
_DEFAULT_PARAMS = {
    Experiment.KNAPP: [16, 32, 64, 128],
    Experiment.TUBE: [0.5, 0.25, 0.125, 0.0625],
    Experiment.SCALING: [1, 2, 4],
    Experiment.TDELTA_PROBE: [2.0 ** -k for k in range(2, 7)],
    Experiment.DUHAMEL_VERIFY: [],
    Experiment.REGION_SCAN: [],
}

_DEFAULT_GRID = {
    Experiment.DUHAMEL_VERIFY: {"L": 128.0, "N": 512, "T": 64.0, "Nt": 512},
    Experiment.SCALING: {"L": 64.0, "N": 256, "T": 16.0, "Nt": 256},
    Experiment.TDELTA_PROBE: {"L": 128.0, "N": 128, "T": 128.0, "Nt": 256},
    Experiment.KNAPP: {"dx": 1.0},
    Experiment.TUBE: {"c1": 4.0, "c2": 8.0, "w": 1.0 / 16, "h": 1.0 / 16, "h_t": 1.0 / 64},
    Experiment.REGION_SCAN: {},
}

_GRID_KEYS = {
    Experiment.DUHAMEL_VERIFY: {"L", "N", "T", "Nt", "xi_width", "tau_width", "k_min", "k_max"},
    Experiment.SCALING: {"L", "N", "T", "Nt", "xi_width", "tau_width"},
    Experiment.TDELTA_PROBE: {"L", "N", "T", "Nt", "tau_lo", "tau_hi"},
    Experiment.KNAPP: {"dx", "dt"},
    Experiment.TUBE: {"c1", "c2", "w", "h", "h_t"},
    Experiment.REGION_SCAN: set(),
}

_NOTES = {
    Experiment.TUBE: [
        "box indicators mollified with erf edges of width w in the rescaled box variables",
        "output window relaxed to c1/delta <= t <= c2/delta; phase bound sampled to guard it",
        "U(F) evaluated through the Galilean boost and the closed-form Fourier solution of the static box",
    ],
    Experiment.KNAPP: [
        "forcing built on the frequency side; time step chosen so psi is carried to |phi_hat| argument 64",
        "output norm restricted to t in [M, 2M], ||x| - 2t| <= M^(1/2)",
    ],
    Experiment.TDELTA_PROBE: ["single seeded random-phase annulus input; only the lower direction is asserted"],
    Experiment.DUHAMEL_VERIFY: ["dyadic synthesis uses temporal zero padding (aperiodic convolution)"],
    Experiment.SCALING: ["rescaled input reuses the samples on the rescaled grid"],
    Experiment.REGION_SCAN: [],
}


@dataclass(frozen=True)
class SweepConfig:
    experiment: Experiment
    n: int = 1
    configs: tuple[ExponentConfig, ...] = ()
    params: tuple[float, ...] = ()
    grid: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    step: str = "1/40"
    probe: dict = field(default_factory=dict)
    seed: int = 0
    jobs: int = 1
    memory_mb: float = 4096.0
    name: str = ""
    output: str | None = None

    def __post_init__(self):
        try:
            exp = Experiment(self.experiment)
        except ValueError as e:
            raise ConfigError(f"unknown experiment {self.experiment!r}") from e
        object.__setattr__(self, "experiment", exp)
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError("n must be a positive integer")
        cfgs = tuple(c if isinstance(c, ExponentConfig) else ExponentConfig.from_json({"n": self.n, **c})
                     for c in self.configs)
        if any(c.n != self.n for c in cfgs):
            raise ConfigError("exponent config dimension differs from n")
        object.__setattr__(self, "configs", cfgs)
        params = tuple(float(p) for p in (self.params or _DEFAULT_PARAMS[exp]))
        object.__setattr__(self, "params", params)
        unknown = set(self.grid) - _GRID_KEYS[exp]
        if unknown:
            raise ConfigError(f"unknown grid keys for {exp.value}: {sorted(unknown)}")
        object.__setattr__(self, "grid", {**_DEFAULT_GRID[exp], **self.grid})
        bad_tol = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if bad_tol:
            raise ConfigError(f"unknown tolerance keys: {sorted(bad_tol)}")
        object.__setattr__(self, "tolerances", {**DEFAULT_TOLERANCES, **self.tolerances})
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        self._validate_params()
        if exp in (Experiment.KNAPP, Experiment.TUBE, Experiment.SCALING) and not cfgs:
            raise ConfigError(f"{exp.value} needs at least one exponent config")
        if exp is Experiment.TDELTA_PROBE and set(self.probe) - {"r_tilde", "r"}:
            raise ConfigError("probe accepts only r_tilde and r")
        if exp is Experiment.REGION_SCAN:
            try:
                st = as_rational(self.step)
            except (ValueError, ZeroDivisionError) as e:
                raise ConfigError(f"bad step {self.step!r}") from e
            if not 0 < st <= Fraction(1, 2) or st.numerator != 1:
                raise ConfigError("step must be 1/k with k >= 2")
        if self.memory_estimate_mb() > self.memory_mb:
            raise ConfigError(f"estimated {self.memory_estimate_mb():.0f} MB exceeds budget {self.memory_mb} MB")

    def _validate_params(self):
        exp, ps = self.experiment, self.params
        if exp in (Experiment.REGION_SCAN, Experiment.DUHAMEL_VERIFY):
            return
        if len(ps) < 3 and exp is not Experiment.SCALING:
            raise ConfigError("slope fits need at least three parameter values")
        if len(ps) < 2:
            raise ConfigError("scaling comparison needs at least two values")
        ratios = {ps[i + 1] / ps[i] for i in range(len(ps) - 1)}
        if not (ratios <= {2.0} or ratios <= {0.5}):
            raise ConfigError("parameter lists must be geometric with ratio 2")
        if exp is Experiment.SCALING and ps[0] != 1.0:
            raise ConfigError("scaling sweeps start at lam = 1")

    def memory_estimate_mb(self) -> float:
        """Rough peak working set of the largest single task, in MB."""
        exp, g = self.experiment, self.grid
        if exp is Experiment.KNAPP:
            M = max(self.params)
            dt = g.get("dt") or KnappParams.default_dt(M)
            pts = (32 * M / g["dx"]) ** self.n * 4 * M / dt
            mult = 6
        elif exp is Experiment.TUBE:
            d = min(self.params)
            pts = (40 / d ** 0.5 / g["h"]) * (3 / g["h_t"])
            mult = 4
        elif exp is Experiment.REGION_SCAN:
            return 0.0
        else:
            N = g["N"] ** self.n if isinstance(g["N"], int) else math.prod(g["N"])
            pts = N * g["Nt"]
            mult = 12 if exp is Experiment.DUHAMEL_VERIFY else 6
        return pts * 16 * mult / 2 ** 20

    def to_json(self) -> dict:
        return {
            "experiment": self.experiment.value,
            "n": self.n,
            "configs": [{k: v for k, v in c.to_json().items() if k != "n"} for c in self.configs],
            "params": list(self.params),
            "grid": dict(sorted(self.grid.items())),
            "tolerances": dict(sorted(self.tolerances.items())),
            "step": self.step,
            "probe": dict(sorted(self.probe.items())),
            "seed": self.seed,
            "memory_mb": self.memory_mb,
            "name": self.name,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SweepConfig":
        allowed = {f.name for f in fields(cls)}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in d:
            raise ConfigError("config needs an 'experiment' key")
        d = dict(d)
        for k in ("configs", "params"):
            if k in d:
                d[k] = tuple(d[k])
        try:
            return cls(**d)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as e:
            raise ConfigError(str(e)) from e

    def replace(self, **kw) -> "SweepConfig":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        return SweepConfig(**d)


def load_config(path) -> SweepConfig:
    try:
        d = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path}: {e}") from e
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    return SweepConfig.from_json(d)


@dataclass
class SweepReport:
    """Measured values, fits and verdicts of one sweep.  ``timings`` is kept out of the JSON body."""

    config: dict
    version: str
    points: list = field(default_factory=list)
    fits: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    timings: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return not self.errors and all(c["verdict"] == "PASS" for c in self.fits + self.checks)

    def to_json(self) -> dict:
        return {"config": self.config, "version": self.version, "points": self.points,
                "fits": self.fits, "checks": self.checks, "errors": self.errors,
                "notes": self.notes, "verdict": "PASS" if self.passed else "FAIL"}

    @classmethod
    def from_json(cls, d: dict) -> "SweepReport":
        return cls(d["config"], d["version"], d["points"], d["fits"], d["checks"], d["errors"], d["notes"])

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# verdict helpers


def _judge(value: float, target: float, tol: float, direction: str) -> bool:
    if direction == "le":
        return value <= target + tol
    if direction == "ge":
        return value >= target - tol
    if direction == "abs":
        return abs(value - target) <= tol
    if direction == "gt":
        return value > target
    raise ValueError(direction)


def _check(name: str, value: float, target: float, tol: float, direction: str, **extra) -> dict:
    ok = bool(np.isfinite(value)) and _judge(value, target, tol, direction)
    return {"name": name, "value": value, "target": target, "tolerance": tol,
            "direction": direction, "verdict": "PASS" if ok else "FAIL", **extra}


def _fit(name: str, pts: Sequence[tuple[float, float]], target: float, tol: float, direction: str,
         **extra) -> dict:
    slope, err = fit_slope(pts)
    d = _check(name, slope, target, tol, direction, **extra)
    d["stderr"] = err
    return d


def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    """Map preserving order; exceptions are captured per item."""
    def safe(it):
        t = time.perf_counter()
        try:
            return fn(it), None, time.perf_counter() - t
        except Exception as e:  # recorded in the report, never aborts the sweep
            return None, f"{type(e).__name__}: {e}", time.perf_counter() - t
    if jobs == 1:
        return [safe(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(safe, items))


# ---------------------------------------------------------------------------
# forcing families


def band_limited_forcing(grid: GridSpec, seed: int, xi_width: float = 0.5, tau_width: float = 1.0,
                         margin: float = 0.2) -> Field:
    """Seeded random forcing with Gaussian spectral envelope and a flat-top time window.

    The window ``exp(-(t'/(margin T))^8)`` about the grid centre ``t'`` leaves
    more than ``T/8`` of near-zero padding at both ends.
    """
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    ch = np.fft.fftn(c)
    env = np.exp(-grid.xi_sq() / xi_width ** 2)[..., None] * np.exp(-(grid.tau_axis() / tau_width) ** 2)
    f = np.fft.ifftn(ch * env)
    tc = grid.t_axis() - (grid.t0 + grid.T / 2)
    f = f * np.exp(-(tc / (margin * grid.T)) ** 8)
    return Field(grid, f / np.abs(f).max())


def annulus_forcing(grid: GridSpec, seed: int, tau_lo: float = -4.5, tau_hi: float = 0.0) -> Field:
    """Random-phase unit-modulus spectrum on ``1/2 <= |xi| <= 2``, ``tau_lo <= tau <= tau_hi``."""
    rng = np.random.default_rng(seed)
    rad = np.sqrt(grid.xi_sq())[..., None]
    tau = grid.tau_axis().reshape([1] * grid.n + [-1])
    sup = (rad >= 0.5) & (rad <= 2.0) & (tau >= tau_lo) & (tau <= tau_hi)
    hat = np.where(sup, np.exp(2j * np.pi * rng.random(grid.shape)), 0.0)
    return Field(grid, hat, side="frequency").to_physical()


def _grid_from(cfg: SweepConfig, centre_time: bool = True) -> GridSpec:
    g = cfg.grid
    return GridSpec(cfg.n, g["L"], g["N"], g["T"], g["Nt"], t0=-g["T"] / 2 if centre_time else 0.0)


# ---------------------------------------------------------------------------
# experiments


def _run_region(cfg: SweepConfig, rep: SweepReport) -> None:
    from .exponent_geometry import rational_grid

    n = cfg.n
    step = as_rational(cfg.step)
    axis = rational_grid(step.denominator)
    counts: dict[str, int] = {}
    for x in axis:
        for y in axis:
            v = classify(n, ExponentPoint(x, y))
            counts[v.kind.value] = counts.get(v.kind.value, 0) + 1
            rep.points.append({"x": fmt_rational(x), "y": fmt_rational(y), "verdict": v.kind.value,
                               "violated": list(v.violated)})
    rep.checks.append({"name": "raster_counts", "value": dict(sorted(counts.items())), "verdict": "PASS"})
    if n >= 3:
        V = vertices(n)
        mid = ExponentPoint((V["P"].x + V["P'"].x) / 2, (V["P"].y + V["P'"].y) / 2)
        for label, p, want in (("B", V["B"], "OPEN_GAP"), ("mid(P,P')", mid, "SUFFICIENT"),
                               ("R", V["R"], "EXCLUDED")):
            got = classify(n, p).kind.value
            rep.checks.append({"name": f"classify[{label}]", "value": got, "target": want,
                               "verdict": "PASS" if got == want else "FAIL"})


def _run_knapp(cfg: SweepConfig, rep: SweepReport) -> None:
    tol = cfg.tolerances
    tasks = [(i, M) for i in range(len(cfg.configs)) for M in cfg.params]

    def one(task):
        i, M = task
        p = KnappParams(M, cfg.configs[i], cfg.n, dx=cfg.grid["dx"], dt=cfg.grid.get("dt"))
        return knapp_measure(p)

    results = _pmap(one, tasks, cfg.jobs)
    for (i, M), (m, err, dt) in zip(tasks, results):
        rep.timings[f"config{i}/M={M:g}"] = dt
        if err:
            rep.errors.append({"config": i, "param": M, "error": err})
        else:
            rep.points.append({"config": i, "param": M, **m.to_json()})
    for i, c in enumerate(cfg.configs):
        pts = [p for p in rep.points if p["config"] == i]
        if not pts:
            continue
        rep.checks.append(_check("wrap_mass", max(p["wrap_mass"] for p in pts),
                                 tol["wrap_mass"], 0.0, "le", config=i))
        if len(pts) < 3:
            continue
        pe = predicted_exponents("KNAPP", c)
        extra = {"config": i, "predicted": pe.to_json()}
        rep.fits.append(_fit("input_slope", [(p["M"], p["input_norm"]) for p in pts],
                             float(pe.e_rhs), tol["input_slope"], "le", **extra))
        rep.fits.append(_fit("output_slope", [(p["M"], p["output_norm"]) for p in pts],
                             float(pe.e_lhs), tol["operator_slope"], "ge", **extra))
        if pe.e_quotient > 0:
            rep.fits.append(_fit("quotient_blowup", [(p["M"], p["quotient"]) for p in pts],
                                 0.0, 0.0, "gt", **extra))


def _run_tube(cfg: SweepConfig, rep: SweepReport) -> None:
    tol = cfg.tolerances
    g = cfg.grid
    tasks = [(i, d) for i in range(len(cfg.configs)) for d in cfg.params]

    def one(task):
        i, d = task
        p = TubeParams(d, cfg.configs[i], cfg.n, c1=g["c1"], c2=g["c2"], w=g["w"], h=g["h"],
                       h_t=g["h_t"])
        return tube_measure(p, seed=cfg.seed)

    results = _pmap(one, tasks, cfg.jobs)
    for (i, d), (m, err, dt) in zip(tasks, results):
        rep.timings[f"config{i}/delta={d:g}"] = dt
        if err:
            rep.errors.append({"config": i, "param": d, "error": err})
        else:
            rep.points.append({"config": i, "param": d, **m.to_json()})
    for i, c in enumerate(cfg.configs):
        pts = [p for p in rep.points if p["config"] == i]
        if not pts:
            continue
        rep.checks.append(_check("min_abs_scaled", min(p["min_abs_scaled"] for p in pts),
                                 tol["tube_constant"], 0.0, "ge", config=i))
        rep.checks.append(_check("phase_bound", max(p["phase_bound"] for p in pts),
                                 tol["phase_bound"], 0.0, "le", config=i))
        if len(pts) >= 3:
            pe = predicted_exponents("TUBE", c)
            rep.fits.append(_fit("quotient_slope", [(p["delta"], p["quotient"]) for p in pts],
                                 float(pe.e_quotient), tol["tube_slope"], "abs", config=i,
                                 predicted=pe.to_json()))


def _run_scaling(cfg: SweepConfig, rep: SweepReport) -> None:
    tol = cfg.tolerances
    g = cfg.grid
    base = band_limited_forcing(_grid_from(cfg), cfg.seed, g.get("xi_width", 0.5), g.get("tau_width", 1.0))
    tasks = [(i, lam) for i in range(len(cfg.configs)) for lam in cfg.params]

    def one(task):
        i, lam = task
        return duhamel_quotient(scaling_family(base, lam), cfg.configs[i])

    results = _pmap(one, tasks, cfg.jobs)
    for (i, lam), (q, err, dt) in zip(tasks, results):
        rep.timings[f"config{i}/lam={lam:g}"] = dt
        if err:
            rep.errors.append({"config": i, "param": lam, "error": err})
        else:
            rep.points.append({"config": i, "param": lam, "lam": lam, "quotient": q})
    for i, c in enumerate(cfg.configs):
        pts = {p["lam"]: p["quotient"] for p in rep.points if p["config"] == i}
        if 1.0 not in pts:
            continue
        gap = scaling_gap(c)
        for lam, q in sorted(pts.items()):
            if lam == 1.0:
                continue
            target = float(2 * gap) * math.log2(lam)
            rep.checks.append(_check(f"log2_ratio[lam={lam:g}]", math.log2(q / pts[1.0]), target,
                                     tol["scaling_log2"], "abs", config=i, gap=fmt_rational(gap)))
            if gap == 0:
                rep.checks.append(_check(f"ratio[lam={lam:g}]", q / pts[1.0], 1.0,
                                         tol["scaling_ratio"], "abs", config=i))


def _run_tdelta(cfg: SweepConfig, rep: SweepReport) -> None:
    tol = cfg.tolerances
    g = cfg.grid
    rt = float(as_rational(cfg.probe.get("r_tilde", 2)))
    r = float(as_rational(cfg.probe.get("r", 6)))
    F = annulus_forcing(_grid_from(cfg), cfg.seed, g.get("tau_lo", -4.5), g.get("tau_hi", 0.0))
    t = time.perf_counter()
    res = tdelta_scaling_probe(cfg.n, rt, r, cfg.params, F)
    rep.timings["probe"] = time.perf_counter() - t
    for d, q, lhs in zip(res.deltas, res.quotients, res.lhs_norms):
        rep.points.append({"param": d, "delta": d, "lhs_norm": lhs, "rhs_norm": res.rhs_norm, "quotient": q})
    d = _fit("quotient_slope", [(p["delta"], p["quotient"]) for p in rep.points], res.predicted,
             tol["operator_slope"], "ge", r_tilde=rt, r=r)
    rep.fits.append(d)


def _run_verify(cfg: SweepConfig, rep: SweepReport) -> None:
    tol = cfg.tolerances
    g = cfg.grid
    grid = _grid_from(cfg)
    F = band_limited_forcing(grid, cfg.seed, g.get("xi_width", 0.5), g.get("tau_width", 1.0))
    margin = max(int(grid.Nt / 8), 1)
    edge = float(max(np.abs(F.samples[..., :margin]).max(), np.abs(F.samples[..., -margin:]).max()))
    rep.checks.append(_check("padding_margin", edge, 1e-8, 0.0, "le"))
    k_min, k_max = int(g.get("k_min", -8)), int(g.get("k_max", 8))
    t = time.perf_counter()
    ref = duhamel_timestep(F, "grid_start").field
    rep.timings["timestep"] = time.perf_counter() - t
    windows = [(k_min, k_max)]
    if k_min < -4 < 4 < k_max:
        windows.append((-4, 4))
    errs = {}
    for lo, hi in windows:
        t = time.perf_counter()
        errs[(lo, hi)] = relative_l2(dyadic_synthesis(F, lo, hi).field, ref)
        rep.timings[f"synthesis[{lo},{hi}]"] = time.perf_counter() - t
        rep.points.append({"param": f"[{lo},{hi}]", "kind": "synthesis", "discrepancy": errs[(lo, hi)]})
    rep.checks.append(_check("synthesis_vs_timestep", errs[(k_min, k_max)], tol["oracle"], 0.0, "le",
                             window=[k_min, k_max]))
    if (-4, 4) in errs and (-4, 4) != (k_min, k_max):
        rep.checks.append(_check("window_monotone", errs[(k_min, k_max)], errs[(-4, 4)], 0.0, "le"))
    ks = [int(round(math.log2(d))) for d in cfg.params] or list(range(*_span(resolved_window(grid))))
    for k in ks:
        d = 2.0 ** k
        t = time.perf_counter()
        e = relative_l2(t_delta_timeside(F, d), t_delta_apply(F, d, causal=True))
        rep.timings[f"dual_path[k={k}]"] = time.perf_counter() - t
        rep.points.append({"param": d, "kind": "dual_path", "discrepancy": e})
        rep.checks.append(_check(f"dual_path[k={k}]", e, tol["dual_path"], 0.0, "le"))


def _span(w: tuple[int, int]) -> tuple[int, int]:
    return w[0], w[1] + 1


_RUNNERS = {
    Experiment.REGION_SCAN: _run_region,
    Experiment.KNAPP: _run_knapp,
    Experiment.TUBE: _run_tube,
    Experiment.SCALING: _run_scaling,
    Experiment.TDELTA_PROBE: _run_tdelta,
    Experiment.DUHAMEL_VERIFY: _run_verify,
}


def run_sweep(cfg: SweepConfig) -> SweepReport:
    rep = SweepReport(config=cfg.to_json(), version=__version__, notes=list(_NOTES[cfg.experiment]))
    t = time.perf_counter()
    try:
        _RUNNERS[cfg.experiment](cfg, rep)
    except Exception as e:  # a failure outside the per-parameter loop is still a report, not a crash
        rep.errors.append({"param": None, "error": f"{type(e).__name__}: {e}"})
    rep.timings["total"] = time.perf_counter() - t
    _clean(rep)
    return rep


def _clean(rep: SweepReport) -> None:
    """Coerce numpy scalars so the JSON body is plain and stable."""
    rep.points = json.loads(json.dumps(rep.points, default=_plain))
    rep.fits = json.loads(json.dumps(rep.fits, default=_plain))
    rep.checks = json.loads(json.dumps(rep.checks, default=_plain))


def _plain(o: Any):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Fraction):
        return fmt_rational(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def _csv_text(rep: SweepReport) -> str:
    cols: list[str] = []
    for p in rep.points:
        for k, v in p.items():
            if k not in cols and not isinstance(v, (list, dict)):
                cols.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for p in rep.points:
        w.writerow({k: p.get(k, "") for k in cols})
    return buf.getvalue()


def emit_report(report: SweepReport, out_dir, formats: Sequence[str] = ("json",), stem: str | None = None) -> list[Path]:
    """Write ``<stem>.json`` / ``<stem>.csv`` plus a ``<stem>.timings.json`` sidecar."""
    out = Path(out_dir)
    stem = stem or (report.config.get("name") or report.config["experiment"].lower())
    fm = {f.lower() for f in formats}
    if fm - {"json", "csv"}:
        raise ValueError(f"unknown formats {sorted(fm - {'json', 'csv'})}")
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "json" in fm:
            p = out / f"{stem}.json"
            p.write_text(report.dumps())
            written.append(p)
        if "csv" in fm:
            p = out / f"{stem}.csv"
            p.write_text(_csv_text(report))
            written.append(p)
        p = out / f"{stem}.timings.json"
        p.write_text(json.dumps(report.timings, indent=2, sort_keys=True) + "\n")
        written.append(p)
    except OSError as e:
        raise OSError(f"failed writing report under {out}: {e}") from e
    return written
