"""End-to-end acceptance checks.  Each test records one PASS/FAIL line that is
repeated in the pytest terminal summary."""
import math
import random
import time
from fractions import Fraction as Fr
from pathlib import Path

import numpy as np
import pytest

from strichartz_lab.duhamel import relative_l2
from strichartz_lab.exponent_geometry import (ExponentPoint, build_region, classify, dual_point,
                                              feasible_q_interval, necessary_region, sufficient_region,
                                              vertices)
from strichartz_lab.fitting import fit_slope
from strichartz_lab.spectral import GridSpec, free_propagate
from strichartz_lab.sweep import load_config, run_sweep

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
DIMS = range(3, 9)
FIRST_RUNS: dict[str, str] = {}


def sweep(name):
    rep = run_sweep(load_config(CONFIGS / f"{name}.json"))
    FIRST_RUNS.setdefault(name, rep.dumps())
    return rep


def P(x, y):
    return ExponentPoint(Fr(x), Fr(y))


def corner_points(n):
    """Corner coordinates written out independently of the library."""
    base = {
        "B": P(Fr(n + 3, 2 * (n + 2)), Fr(n - 1, 2 * (n + 2))),
        "C": P(Fr(1, 2), Fr(n - 2, 2 * n)),
        "P": P(Fr(n + 2, 2 * (n + 1)), Fr(n * n, 2 * (n + 1) * (n + 2))),
        "Q": P(Fr(n + 2, 2 * (n + 1)), Fr(n - 2, 2 * (n + 1))),
        "R": P(Fr(n + 1, 2 * n), Fr(n - 3, 2 * n)),
        "S": P(Fr(n, 2 * (n - 1)), Fr((n - 2) ** 2, 2 * n * (n - 1))),
    }
    out = dict(base)
    for k, p in base.items():
        out[k + "'"] = P(1 - p.y, 1 - p.x)
    return out


def lattice_half_plane_N(n, i, j, den):
    # point (i/den, j/den); all four inequalities cleared of denominators
    d = i - j
    return (n + 2) * d >= 2 * den and n * d <= 2 * den and 3 * i + j >= 2 * den and i + 3 * j <= 2 * den


# -- 1 ---------------------------------------------------------------------------

def test_criterion_1_geometry_exactness(record_criterion):
    t = time.perf_counter()
    bad = []
    den = 200
    for n in DIMS:
        V, W = vertices(n), corner_points(n)
        if V != W:
            bad.append(f"vertices n={n}")
        if any(dual_point(dual_point(p)) != p or dual_point(V[k]) != V[k + "'"] for k, p in V.items() if "'" not in k):
            bad.append(f"involution n={n}")
        N = necessary_region(n)
        R, Rp = W["R"], W["R'"]
        for i in range(den + 1):
            for j in range(den + 1):
                p = ExponentPoint(Fr(i, den), Fr(j, den))
                want = lattice_half_plane_N(n, i, j, den) and p not in (R, Rp)
                if N.contains(p) != want:
                    bad.append(f"hull n={n} at {p}")
        S = sufficient_region(n)
        if N.contains(R) or N.contains(Rp) or S.contains(R) or S.contains(Rp):
            bad.append(f"R excluded n={n}")
        for a, b in (("P", "P'"), ("R", "R'")):
            for s in (Fr(1, 7), Fr(1, 2), Fr(5, 6)):
                q = ExponentPoint(W[a].x + s * (W[b].x - W[a].x), W[a].y + s * (W[b].y - W[a].y))
                if not S.contains(q):
                    bad.append(f"segment ({a},{b}) n={n}")
    dt = time.perf_counter() - t
    ok = not bad and dt < 5
    record_criterion(1, ok, f"mismatches={len(bad)} runtime={dt:.2f}s (limit 5s)")
    assert ok, bad[:10]


# -- 2 ---------------------------------------------------------------------------

def test_criterion_2_propagator(record_criterion):
    t = time.perf_counter()
    g = GridSpec(1, 80.0, 1024, 1.0, 4)
    x = g.x_axes()[0]
    rng = np.random.default_rng(0)
    u0 = np.fft.ifft(np.fft.fft(rng.normal(size=1024) + 1j * rng.normal(size=1024))
                     * (np.abs(g.xi_axes()[0]) < 10))
    conservation = max(abs(np.linalg.norm(free_propagate(u0, g, s)) / np.linalg.norm(u0) - 1)
                       for s in (0.3, 1.0, 7.5))
    k = g.xi_axes()[0][37]
    s = 2.5
    plane = np.abs(free_propagate(np.exp(1j * k * x), g, s) - np.exp(-1j * s * k * k) * np.exp(1j * k * x)).max()
    a = 1.0
    gauss = np.exp(-x ** 2 / (4 * a))
    exact = np.sqrt(a / (a + 1j * s)) * np.exp(-x ** 2 / (4 * (a + 1j * s)))
    gauss_err = np.abs(free_propagate(gauss, g, s) - exact).max()
    dt = time.perf_counter() - t
    ok = conservation <= 1e-12 and plane <= 1e-12 and gauss_err <= 1e-6 and dt < 5
    record_criterion(2, ok, f"L2 drift={conservation:.1e} plane={plane:.1e} gaussian={gauss_err:.1e} "
                            f"runtime={dt:.2f}s")
    assert ok


# -- 3 ---------------------------------------------------------------------------

def test_criterion_3_synthesis_matches_timestepping(record_criterion):
    t = time.perf_counter()
    rep = sweep("duhamel_verify")
    dt = time.perf_counter() - t
    cfg = rep.config
    checks = {c["name"]: c["value"] for c in rep.checks}
    synth = checks["synthesis_vs_timestep"]
    dual = {k: v for k, v in checks.items() if k.startswith("dual_path")}
    ok = (cfg["grid"]["N"] == 512 and cfg["grid"]["Nt"] == 512 and cfg["grid"]["k_min"] == -8
          and cfg["grid"]["k_max"] == 8 and checks["padding_margin"] <= 1e-8
          and synth <= 1e-3 and len(dual) == len(cfg["params"]) and max(dual.values()) <= 1e-4
          and not rep.errors and dt < 60)
    record_criterion(3, ok, f"synthesis={synth:.2e} worst dual path={max(dual.values()):.2e} "
                            f"over {len(dual)} scales runtime={dt:.1f}s")
    assert ok


# -- 4 ---------------------------------------------------------------------------

def test_criterion_4_scaling(record_criterion):
    t = time.perf_counter()
    rep = sweep("scaling")
    dt = time.perf_counter() - t
    from strichartz_lab.exponent_geometry import ExponentConfig
    cfgs = [ExponentConfig.from_json({"n": rep.config["n"], **c}) for c in rep.config["configs"]]
    q = {(p["config"], p["lam"]): p["quotient"] for p in rep.points}
    gaps = [c.inv_qt_prime - c.inv_q + Fr(c.n, 2) * (c.x - c.y) - 1 for c in cfgs]
    zero = [i for i, g in enumerate(gaps) if g == 0]
    quarter = [i for i, g in enumerate(gaps) if g == Fr(1, 4)]
    ratios = [q[i, 2.0] / q[i, 1.0] for i in zero]
    logs = [math.log2(q[i, 2.0] / q[i, 1.0]) for i in quarter]
    ok = (zero and quarter and all(abs(r - 1) <= 0.01 for r in ratios)
          and all(abs(v - 0.5) <= 0.05 for v in logs) and dt < 60)
    record_criterion(4, bool(ok), f"gap-0 ratios={[f'{r:.6f}' for r in ratios]} "
                                  f"gap-1/4 log2={[f'{v:.6f}' for v in logs]} runtime={dt:.1f}s")
    assert ok


# -- 5 ---------------------------------------------------------------------------

def test_criterion_5_knapp(record_criterion):
    t = time.perf_counter()
    rep = sweep("knapp")
    dt = time.perf_counter() - t
    n = rep.config["n"]
    assert sorted(rep.config["params"]) == [16, 32, 64, 128]
    lines, ok = [], not rep.errors
    saw_violation = False
    for i, c in enumerate(rep.config["configs"]):
        iq, iqtp, iy = Fr(c["inv_q"]), Fr(c["inv_qt_prime"]), Fr(c["point"][1])
        pts = [p for p in rep.points if p["config"] == i]
        s_in, _ = fit_slope([(p["M"], p["input_norm"]) for p in pts])
        s_out, _ = fit_slope([(p["M"], p["output_norm"]) for p in pts])
        bound_in = -0.5 + float(iqtp) / 2 + 0.15
        bound_out = -n / 2 + float(iq) / 2 + n * float(iy) - 0.3
        ok &= s_in <= bound_in and s_out >= bound_out
        line = f"cfg{i}: in {s_in:.3f}<={bound_in:.3f} out {s_out:.3f}>={bound_out:.3f}"
        if iqtp - iq < 2 * n * iy - n + 1:
            saw_violation = True
            s_q, _ = fit_slope([(p["M"], p["quotient"]) for p in pts])
            ok &= s_q > 0
            line += f" quotient {s_q:.3f}>0"
        lines.append(line)
    ok = ok and saw_violation and dt < 300
    record_criterion(5, ok, "; ".join(lines) + f" runtime={dt:.1f}s")
    assert ok


# -- 6 ---------------------------------------------------------------------------

TUBE_CONSTANT = 0.05


def test_criterion_6_tube(record_criterion):
    t = time.perf_counter()
    rep = sweep("tube")
    dt = time.perf_counter() - t
    n = rep.config["n"]
    assert sorted(rep.config["params"]) == [0.0625, 0.125, 0.25, 0.5]
    lines, ok = [], not rep.errors and len(rep.points) == 8
    c_min = min(p["min_abs_scaled"] for p in rep.points)
    ok &= c_min >= TUBE_CONSTANT
    for i, c in enumerate(rep.config["configs"]):
        x, y = (Fr(v) for v in c["point"])
        slack = Fr(c["inv_qt_prime"]) - Fr(c["inv_q"]) + (n + 1) * (x - y) - 2
        pts = [p for p in rep.points if p["config"] == i]
        s, _ = fit_slope([(p["delta"], p["quotient"]) for p in pts])
        ok &= abs(s - float(slack / 2)) <= 0.35
        lines.append(f"cfg{i}: slope {s:.3f} vs {float(slack / 2):.3f}")
    ok = ok and dt < 300
    record_criterion(6, ok, f"min |U| delta={c_min:.4f} (c={TUBE_CONSTANT}); " + "; ".join(lines)
                     + f" runtime={dt:.1f}s")
    assert ok


# -- 7 ---------------------------------------------------------------------------

def test_criterion_7_tdelta_probe(record_criterion):
    t = time.perf_counter()
    rep = sweep("tdelta_probe")
    dt = time.perf_counter() - t
    cfg = rep.config
    n, rt = cfg["n"], float(Fr(cfg["probe"]["r_tilde"]))
    assert n == 2 and cfg["grid"]["N"] == 128 and cfg["grid"]["Nt"] == 256
    assert sorted(cfg["params"]) == [2.0 ** -k for k in range(6, 1, -1)]
    s, _ = fit_slope([(p["delta"], p["quotient"]) for p in rep.points])
    bound = -(n - 1) / 2 + n / rt - 0.3
    ok = s >= bound and dt < 600
    record_criterion(7, ok, f"slope={s:.3f} >= {bound:.3f} runtime={dt:.1f}s")
    assert ok


# -- 8 ---------------------------------------------------------------------------

def random_point(rng, den=997):
    return ExponentPoint(Fr(rng.randint(0, den), den), Fr(rng.randint(0, den), den))


def test_criterion_8_region_self_consistency(record_criterion):
    t = time.perf_counter()
    rng = random.Random(8)
    subset_bad, hits = 0, 0
    for n in DIMS:
        S, N = sufficient_region(n), necessary_region(n)
        V = corner_points(n)
        hexagon = [V[k] for k in ("P", "Q", "R", "P'", "Q'", "R'")]
        for _ in range(500):
            w = [Fr(rng.randint(1, 50)) for _ in hexagon]
            tot = sum(w)
            p = ExponentPoint(sum(a * v.x for a, v in zip(w, hexagon)) / tot,
                              sum(a * v.y for a, v in zip(w, hexagon)) / tot)
            q = random_point(rng)
            for z in (p, q):
                if S.contains(z):
                    hits += 1
                    subset_bad += not N.contains(z)
    dual_bad = 0
    for _ in range(10_000):
        n = rng.randint(1, 8)
        p = random_point(rng)
        dual_bad += classify(n, p).kind is not classify(n, dual_point(p)).kind
    empty_sets = {n: sorted(k for k, p in corner_points(n).items() if feasible_q_interval(n, p).empty)
                  for n in DIMS}
    exact = all(v == ["R", "R'"] for v in empty_sets.values())
    dt = time.perf_counter() - t
    ok = subset_bad == 0 and hits > 3000 and dual_bad == 0 and exact and dt < 10
    record_criterion(8, ok, f"S-not-in-N={subset_bad}/{hits} duality mismatches={dual_bad}/10000 "
                            f"empty at {empty_sets[3]} (n=3; wanted exactly R, R') runtime={dt:.2f}s")
    assert subset_bad == 0 and dual_bad == 0 and dt < 10
    assert exact, f"feasible interval empty at {empty_sets}"


# -- 9 ---------------------------------------------------------------------------

def test_criterion_9_determinism(record_criterion):
    names = sorted(p.stem for p in CONFIGS.glob("*.json"))
    diffs = []
    for name in names:
        first = FIRST_RUNS.get(name) or sweep(name).dumps()
        if run_sweep(load_config(CONFIGS / f"{name}.json")).dumps() != first:
            diffs.append(name)
    ok = not diffs
    record_criterion(9, ok, f"reran {len(names)} sweeps, differing reports: {diffs or 'none'}")
    assert ok
