"""Retarded Duhamel operator, its dyadic pieces ``T_delta`` and kernel diagnostics.

``T_delta F = \\int delta phi(delta (t - s)) e^{i(t-s) Lap} F(s) ds`` is applied
primarily as the space-time multiplier ``phi_hat((tau + |xi|^2) / delta)``; a
direct time-convolution quadrature is kept as an independent check.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .spectral import BumpPhi, Field, GridSpec, MixedNormSpec, default_bump, mixed_norm

__all__ = [
    "DyadicScale",
    "DuhamelMethod",
    "DuhamelResult",
    "duhamel_timestep",
    "t_delta_apply",
    "t_delta_timeside",
    "dyadic_synthesis",
    "kernel_K_delta",
    "ProbeResult",
    "tdelta_scaling_probe",
    "causal_pad_length",
    "resolved_window",
    "relative_l2",
]


@dataclass(frozen=True)
class DyadicScale:
    k: int
    window: tuple[int, int] | None = None

    def __post_init__(self):
        if int(self.k) != self.k:
            raise ValueError("dyadic exponent must be an integer")
        if self.window is not None and not self.window[0] <= self.k <= self.window[1]:
            raise ValueError(f"k={self.k} outside dyadic window {self.window}")

    @property
    def value(self) -> float:
        return math.ldexp(1.0, self.k)

    @classmethod
    def of(cls, delta: float) -> "DyadicScale":
        m, e = math.frexp(delta)
        if m != 0.5:
            raise ValueError(f"{delta} is not a power of two")
        return cls(e - 1)


def _scale(delta) -> float:
    return delta.value if isinstance(delta, DyadicScale) else DyadicScale.of(float(delta)).value


class DuhamelMethod(str, enum.Enum):
    TIME_STEPPED = "TIME_STEPPED"
    DYADIC_SYNTHESIS = "DYADIC_SYNTHESIS"
    TIME_SIDE_ORACLE = "TIME_SIDE_ORACLE"


@dataclass(frozen=True, eq=False)
class DuhamelResult:
    field: Field
    method: DuhamelMethod
    metadata: dict = field(default_factory=dict)

    def sidecar(self) -> dict:
        return {"method": self.method.value, "grid": self.field.grid.to_json(), **self.metadata}


def relative_l2(a: np.ndarray, b: np.ndarray) -> float:
    """``|a - b| / |b|`` in the discrete l^2 sense."""
    a = np.asarray(a.samples if isinstance(a, Field) else a)
    b = np.asarray(b.samples if isinstance(b, Field) else b)
    return float(np.linalg.norm((a - b).ravel()) / np.linalg.norm(b.ravel()))


def duhamel_timestep(F: Field, lower_limit: str = "zero") -> DuhamelResult:
    """Second-order trapezoidal integration of ``u(t) = \\int_{t_*}^t e^{i(t-s)Lap} F(s) ds``.

    ``lower_limit="zero"`` integrates from ``t = 0`` (which must be a grid node,
    negative times are swept backwards); ``"grid_start"`` from the first node,
    standing in for ``-infinity`` when ``F`` vanishes near the start.
    """
    F = F.to_physical()
    g = F.grid
    axes = tuple(range(g.n))
    if lower_limit == "zero":
        k0 = g.time_index(0.0)
    elif lower_limit in ("grid_start", "minus_infinity"):
        k0 = 0
    else:
        raise ValueError(f"unknown lower limit {lower_limit!r}")
    Fh = np.fft.fftn(F.samples, axes=axes)
    E = np.exp(-1j * g.dt * g.xi_sq())
    Einv = np.conj(E)
    h = 0.5 * g.dt
    U = np.zeros_like(Fh)
    for k in range(k0, g.Nt - 1):
        U[..., k + 1] = E * (U[..., k] + h * Fh[..., k]) + h * Fh[..., k + 1]
    for k in range(k0, 0, -1):
        U[..., k - 1] = Einv * (U[..., k] - h * Fh[..., k]) - h * Fh[..., k - 1]
    u = np.fft.ifftn(U, axes=axes)
    meta = {"lower_limit": lower_limit, "quadrature": "trapezoid", "order": 2}
    return DuhamelResult(Field(g, u), DuhamelMethod.TIME_STEPPED, meta)


def causal_pad_length(grid: GridSpec, delta_min: float) -> int:
    """Power-of-two time length that holds the grid plus the longest kernel reach ``2/delta``."""
    need = grid.Nt + int(math.ceil(2.0 / (delta_min * grid.dt))) + 1
    return 1 << (need - 1).bit_length()


def resolved_window(grid: GridSpec, alias_margin: float = 50.0) -> tuple[int, int]:
    """Dyadic exponents ``k`` where the two ``T_delta`` realizations can agree.

    Below: the kernel reach ``2/delta`` must fit in the time extent.  Above: the
    lag sampling aliases ``phi_hat`` at ``2 pi / (dt delta)``, which must sit
    ``alias_margin`` units out on the rapidly decaying tail.
    """
    k_lo = math.ceil(math.log2(2.0 / grid.T))
    k_hi = math.floor(math.log2(2 * math.pi / (alias_margin * grid.dt)))
    return k_lo, k_hi


def _multiplier_lambda(grid: GridSpec, nt: int) -> np.ndarray:
    tau = 2 * np.pi * np.fft.fftfreq(nt, grid.dt)
    return grid.xi_sq()[..., None] + tau.reshape([1] * grid.n + [-1])


def _apply_multiplier(F: Field, mult_fn, nt: int) -> np.ndarray:
    g = F.grid
    f = F.to_physical().samples
    if nt != g.Nt:
        pad = [(0, 0)] * g.n + [(0, nt - g.Nt)]
        f = np.pad(f, pad)
    fh = np.fft.fftn(f)
    fh *= mult_fn(_multiplier_lambda(g, nt))
    out = np.fft.ifftn(fh)
    return out[..., : g.Nt]


def t_delta_apply(F: Field, delta, bump: BumpPhi | None = None, causal: bool = False) -> Field:
    """Multiplier form of ``T_delta``.

    By default the time axis is periodic.  ``causal=True`` zero-pads time so the
    convolution is aperiodic, i.e. ``F`` is taken to vanish off the grid.
    """
    bump = bump or default_bump()
    d = _scale(delta)
    nt = causal_pad_length(F.grid, d) if causal else F.grid.Nt
    out = _apply_multiplier(F, lambda lam: bump.phi_hat(lam / d), nt)
    return Field(F.grid, out)


def t_delta_timeside(F: Field, delta, bump: BumpPhi | None = None, causal: bool = True) -> Field:
    """Direct quadrature of ``sum_m dt delta phi(delta m dt) e^{i m dt Lap} F(t - m dt)``.

    Independent of the tabulated transform: uses only samples of ``phi``.
    """
    bump = bump or default_bump()
    d = _scale(delta)
    g = F.grid
    if 1.0 / (2.0 * d) >= (g.T if causal else math.inf) and causal:
        raise ValueError(f"delta={d} too small: kernel window starts beyond the time extent")
    axes = tuple(range(g.n))
    Fh = np.fft.fftn(F.to_physical().samples, axes=axes)
    m_lo = int(math.floor(1.0 / (2.0 * d * g.dt))) + 1
    m_hi = int(math.ceil(2.0 / (d * g.dt))) - 1
    if not causal:
        m_hi = min(m_hi, m_lo + 64 * g.Nt)
    else:
        m_hi = min(m_hi, g.Nt - 1)
    out = np.zeros_like(Fh)
    if m_hi < m_lo:
        warnings.warn(f"kernel window of T_delta (delta={d}) holds no quadrature node; output is 0")
        return Field(g, out)
    xs = g.xi_sq()
    for m in range(m_lo, m_hi + 1):
        s = m * g.dt
        w = g.dt * d * float(bump.phi(d * s))
        if w == 0.0:
            continue
        ph = (w * np.exp(-1j * s * xs))[..., None]
        if causal:
            out[..., m:] += ph * Fh[..., : g.Nt - m]
        else:
            out += ph * np.roll(Fh, m, axis=-1)
    return Field(g, np.fft.ifftn(out, axes=axes))


def dyadic_synthesis(F: Field, k_min: int, k_max: int, bump: BumpPhi | None = None,
                     causal: bool = True) -> DuhamelResult:
    """``sum_{k=k_min}^{k_max} 2^{-k} T_{2^k} F`` with one FFT pair.

    The multipliers are accumulated in ascending ``k`` so the result does not
    depend on evaluation order.
    """
    if k_max < k_min:
        raise ValueError("empty dyadic window")
    bump = bump or default_bump()
    g = F.grid
    nt = causal_pad_length(g, math.ldexp(1.0, k_min)) if causal else g.Nt

    def total(lam):
        acc = np.zeros(lam.shape, dtype=np.complex128)
        for k in range(k_min, k_max + 1):
            d = math.ldexp(1.0, k)
            acc += bump.phi_hat(lam / d) / d
        return acc

    out = _apply_multiplier(F, total, nt)
    meta = {"k_min": k_min, "k_max": k_max, "causal": causal, "padded_Nt": nt,
            "bump_eta_max": bump.eta_max, "bump_samples": bump.n_samples}
    return DuhamelResult(Field(g, out), DuhamelMethod.DYADIC_SYNTHESIS, meta)


def _sphere_transform(n: int, rho: np.ndarray) -> np.ndarray:
    """``\\int_{S^{n-1}} e^{i rho theta_1} d theta = (2 pi)^{n/2} rho^{-(n-2)/2} J_{(n-2)/2}(rho)``."""
    nu = (n - 2) / 2.0
    rho = np.asarray(rho, dtype=float)
    small = rho < 1e-8
    safe = np.where(small, 1.0, rho)
    val = (2 * np.pi) ** (n / 2.0) * special.jv(nu, safe) / safe ** nu
    limit = 2 * np.pi ** (n / 2.0) / special.gamma(n / 2.0)
    return np.where(small, limit, val)


def kernel_K_delta(y, s, delta, n: int | None = None, bump: BumpPhi | None = None,
                   n_nodes: int = 4096) -> complex | np.ndarray:
    """``K_delta(y, s) = delta phi(delta s) \\int e^{-i s r^2} psi(r) sigma^(r|y|) dr``.

    ``psi`` is the same bump as ``phi``; the sphere integral is reduced to its
    Bessel closed form and the radial integral done by the trapezoid rule.
    ``s`` may be an array; ``y`` is a single vector.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = n or y.size
    if n < 2:
        raise ValueError("kernel diagnostics need n >= 2")
    bump = bump or default_bump()
    d = _scale(delta)
    s = np.asarray(s, dtype=float)
    r = np.linspace(0.5, 2.0, n_nodes)
    dr = r[1] - r[0]
    radial = bump.phi(r) * _sphere_transform(n, r * float(np.linalg.norm(y)))
    ss = np.atleast_1d(s)
    inner = np.exp(-1j * np.outer(ss, r * r)) @ radial * dr
    val = d * bump.phi(d * ss) * inner
    return val.reshape(s.shape) if s.ndim else complex(val[0])


@dataclass(frozen=True)
class ProbeResult:
    deltas: tuple[float, ...]
    quotients: tuple[float, ...]
    slope: float
    stderr: float
    predicted: float
    lhs_norms: tuple[float, ...] = ()
    rhs_norm: float = float("nan")


def tdelta_scaling_probe(n: int, r_tilde: float, r: float, deltas: Sequence[float],
                         F: Field, bump: BumpPhi | None = None) -> ProbeResult:
    """Fit ``log2 |T_delta F|_{L^r L^2} / |F|_{L^{r~} L^2}`` against ``log2 delta``.

    The predicted exponent is ``-(n-1)/2 + n / r~``; only ``slope >= predicted``
    (up to tolerance) is meaningful since ``F`` is one test input.
    """
    from .fitting import fit_slope

    if n < 2:
        raise ValueError("the annulus bound is stated for n >= 2")
    inv_rt = 0.0 if math.isinf(r_tilde) else 1.0 / r_tilde
    inv_r = 0.0 if math.isinf(r) else 1.0 / r
    if not (1.0 <= r_tilde <= 2.0) or (n + 1) * inv_r > (n - 1) * (1 - inv_rt) + 1e-12:
        raise ValueError("exponents violate 1 <= r~ <= 2 and (n+1)/r <= (n-1)(1-1/r~)")
    if F.grid.n != n:
        raise ValueError("field dimension does not match n")
    rhs = mixed_norm(F, MixedNormSpec(r_tilde, 2))
    lhs = []
    for d in deltas:
        lhs.append(mixed_norm(t_delta_apply(F, d, bump), MixedNormSpec(r, 2)))
    quot = [v / rhs for v in lhs]
    slope, err = fit_slope(list(zip(deltas, quot)))
    alpha = -(n - 1) / 2 + n * inv_rt
    return ProbeResult(tuple(float(d) for d in deltas), tuple(quot), slope, err, alpha,
                       tuple(lhs), rhs)
