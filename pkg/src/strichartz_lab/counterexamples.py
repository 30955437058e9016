"""Test-function families whose Duhamel quotients follow computable power laws.

* Knapp family (parameter ``M -> infinity``): forcing concentrated on a thin
  slab around ``tau = -1`` over the unit frequency annulus.
* Tube family (parameter ``delta -> 0``): a modulated box travelling at speed 2.
* Scaling family: parabolic rescaling ``F(lam x, lam^2 t)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import special

from .duhamel import duhamel_timestep
from .exponent_geometry import ExponentConfig, scaling_gap
from .spectral import (BumpPhi, Field, GridSpec, MixedNormSpec, boundary_mass_fraction,
                       default_bump, mixed_norm, mixed_norm_array)

__all__ = [
    "Family",
    "PredictedExponents",
    "predicted_exponents",
    "KnappParams",
    "knapp_psi",
    "knapp_field",
    "knapp_time_leakage",
    "knapp_region_mask",
    "KnappMeasurement",
    "knapp_measure",
    "TubeParams",
    "smooth_indicator",
    "tube_envelope",
    "tube_field",
    "smooth_indicator_hat",
    "scaled_tube_solution",
    "tube_solution",
    "TubeWindow",
    "tube_window",
    "tube_phase",
    "tube_phase_bound",
    "TubeMeasurement",
    "tube_measure",
    "scaling_family",
    "duhamel_quotient",
]


class Family(str, enum.Enum):
    KNAPP = "KNAPP"
    TUBE = "TUBE"
    SCALING = "SCALING"


@dataclass(frozen=True)
class PredictedExponents:
    """Power-law exponents of the output norm, the input norm, and their quotient."""

    e_lhs: Fraction
    e_rhs: Fraction

    @property
    def e_quotient(self) -> Fraction:
        return self.e_lhs - self.e_rhs

    def to_json(self) -> dict:
        return {"e_lhs": str(self.e_lhs), "e_rhs": str(self.e_rhs), "e_quotient": str(self.e_quotient)}


def predicted_exponents(family: Family | str, c: ExponentConfig) -> PredictedExponents:
    """Exponents in the family parameter: ``M`` for KNAPP, ``delta`` for TUBE, ``lam`` for SCALING."""
    family = Family(family)
    n = Fraction(c.n)
    h = Fraction(1, 2)
    if family is Family.KNAPP:
        return PredictedExponents(-n * h + c.inv_q * h + n * c.inv_r, -h + c.inv_qt_prime * h)
    if family is Family.TUBE:
        return PredictedExponents(-1 - c.inv_q * h - (n + 1) * c.inv_r * h,
                                  -c.inv_qt_prime * h - (n + 1) * c.x * h)
    e_lhs = -2 - 2 * c.inv_q - n * c.inv_r
    e_rhs = -2 * c.inv_qt_prime - n * c.x
    assert e_lhs - e_rhs == 2 * scaling_gap(c)
    return PredictedExponents(e_lhs, e_rhs)


def _is_pow2(v: float) -> bool:
    m, _ = math.frexp(v)
    return v > 0 and m == 0.5


# ---------------------------------------------------------------------------
# Knapp family


@dataclass(frozen=True)
class KnappParams:
    """Knapp forcing at scale ``M`` on an automatically sized grid.

    The grid spans ``|x| <= 16M`` and ``t in [-M/2, 7M/2)``: up to ``t = 2M``
    even the fastest annulus frequencies (speed 4) stay clear of the periodic
    wrap, and the output window ``t in [M, 2M]``, ``||x| - 2t| <= M^{1/2}``
    is resolved.
    """

    M: float
    config: ExponentConfig
    n: int = 1
    dx: float = 1.0
    dt: float | None = None
    grid: GridSpec | None = None

    def __post_init__(self):
        if self.M < 8 or not _is_pow2(self.M):
            raise ValueError("M must be a power of two >= 8")
        if self.n not in (1, 2) or self.config.n != self.n:
            raise ValueError("Knapp sweeps are available for n = 1 and (coarse) n = 2")
        if self.grid is None:
            M = self.M
            dt = self.dt if self.dt is not None else self.default_dt(M)
            g = GridSpec(self.n, 32 * M, int(32 * M / self.dx), 4 * M, int(4 * M / dt),
                         t0=-M / 2)
            object.__setattr__(self, "grid", g)
        g = self.grid
        if 2 * np.pi / g.T > self.M ** -0.5 / 2:
            raise ValueError("time extent cannot resolve the width M^{-1/2} in tau")
        if min(np.pi / d for d in g.dx) < 3.0 or np.pi / g.dt < 6.0:
            raise ValueError("grid does not resolve the annulus 1/2 <= |xi| <= 2")

    @staticmethod
    def default_dt(M: float, reach: float = 64.0) -> float:
        """Largest power-of-two step whose Nyquist band carries ``psi`` out to ``|phi_hat|`` argument ``reach``."""
        bound = min(0.5, np.pi * (2.0 / 3.0) * math.sqrt(M) / reach)
        return 2.0 ** math.floor(math.log2(bound))


def knapp_psi(omega, bump: BumpPhi | None = None) -> np.ndarray:
    """Transform of ``b(s) = 2 phi(1/2 + 3s/2)``, a bump supported in ``[0, 1]`` with ``psi(0) = 1``."""
    bump = bump or default_bump()
    omega = np.asarray(omega, dtype=float)
    return (4.0 / 3.0) * np.exp(1j * omega / 3.0) * bump.phi_hat(2.0 * omega / 3.0)


def knapp_field(p: KnappParams, bump: BumpPhi | None = None) -> Field:
    """``F^(xi, tau) = phi(|xi|) psi(M^{1/2}(tau + 1))`` sampled on the grid, returned physical-side."""
    bump = bump or default_bump()
    g = p.grid
    rad = np.sqrt(g.xi_sq())
    spatial = bump.phi(rad)
    temporal = knapp_psi(math.sqrt(p.M) * (g.tau_axis() + 1.0), bump)
    hat = spatial[..., None] * temporal.reshape([1] * g.n + [-1])
    return Field(g, hat, side="frequency").to_physical()


def knapp_time_leakage(F: Field, p: KnappParams) -> float:
    """Fraction of ``|F|^2`` lying outside the time support ``[0, M^{1/2}]``."""
    t = F.grid.t_axis()
    inside = (t >= 0) & (t <= math.sqrt(p.M))
    w = np.sum(np.abs(F.samples) ** 2, axis=tuple(range(F.grid.n)))
    return float(w[~inside].sum() / w.sum())


def knapp_region_mask(p: KnappParams) -> np.ndarray:
    g = p.grid
    rad = np.sqrt(sum(a ** 2 for a in g.spatial_mesh()))
    t = g.t_axis().reshape([1] * g.n + [-1])
    return (t >= p.M) & (t <= 2 * p.M) & (np.abs(rad[..., None] - 2 * t) <= math.sqrt(p.M))


@dataclass(frozen=True)
class KnappMeasurement:
    M: float
    input_norm: float
    output_norm: float
    min_abs_scaled: float  # M^{1/2} min |u| over the output window
    wrap_mass: float  # largest share of |u|^2 near the periodic boundary for t <= 2M
    time_leakage: float

    @property
    def quotient(self) -> float:
        return self.output_norm / self.input_norm

    def to_json(self) -> dict:
        return {"M": self.M, "input_norm": self.input_norm, "output_norm": self.output_norm,
                "quotient": self.quotient, "min_abs_scaled": self.min_abs_scaled,
                "wrap_mass": self.wrap_mass, "time_leakage": self.time_leakage}


def knapp_measure(p: KnappParams, bump: BumpPhi | None = None) -> KnappMeasurement:
    c = p.config
    F = knapp_field(p, bump)
    u = duhamel_timestep(F, "zero").field
    mask = knapp_region_mask(p)
    out = mixed_norm(u, MixedNormSpec.from_reciprocals(c.inv_r, c.inv_q), mask=mask)
    inp = mixed_norm(F, MixedNormSpec.from_reciprocals(c.x, c.inv_qt_prime))
    lo = float(np.abs(u.samples[mask]).min()) * math.sqrt(p.M)
    early = p.grid.t_axis() <= 2 * p.M
    wrap = boundary_mass_fraction(u.samples[..., early], p.grid)
    return KnappMeasurement(p.M, inp, out, lo, wrap, knapp_time_leakage(F, p))


# ---------------------------------------------------------------------------
# Tube family


def smooth_indicator(u, w: float) -> np.ndarray:
    """Indicator of ``[0, 1]`` convolved with a Gaussian of width ``w`` (erf edges)."""
    u = np.asarray(u, dtype=float)
    return 0.5 * (special.erf(u / w) - special.erf((u - 1.0) / w))


def smooth_indicator_hat(omega, w: float) -> np.ndarray:
    """``\\int smooth_indicator(u) e^{-i u omega} du = e^{-i omega/2} sinc(omega/2) e^{-w^2 omega^2/4}``."""
    omega = np.asarray(omega, dtype=float)
    return np.exp(-0.5j * omega) * np.sinc(omega / (2 * np.pi)) * np.exp(-(w * omega) ** 2 / 4)


@dataclass(frozen=True)
class TubeParams:
    """Tube forcing at scale ``delta`` for ``n = 1``.

    ``w`` is the mollification width in the rescaled box variables
    ``(delta^{1/2} y, delta s)``.  The output window is
    ``c1/delta <= t <= c2/delta`` with ``(x + 2t)^2 <= 1/delta``; ``h`` and
    ``h_t`` are the lab sampling steps there, again in rescaled units.
    """

    delta: float
    config: ExponentConfig | None = None
    n: int = 1
    c1: float = 4.0
    c2: float = 8.0
    w: float = 1.0 / 16
    h: float = 1.0 / 16
    h_t: float = 1.0 / 64

    def __post_init__(self):
        if not 0 < self.delta <= 0.5 or not _is_pow2(self.delta):
            raise ValueError("delta must be an inverse power of two <= 1/2")
        if self.n != 1:
            raise ValueError("tube sweeps are implemented for n = 1")
        if not 1.0 + 8 * self.w < self.c1 < self.c2:
            raise ValueError("need 1 + 8w < c1 < c2 so the window follows the forcing")
        if not 0 < self.w <= 1.0 / 8:
            raise ValueError("mollification width must be in (0, 1/8]")
        if self.h <= 0 or self.h_t <= 0:
            raise ValueError("sampling steps must be positive")
        if self.config is not None and self.config.n != self.n:
            raise ValueError("config dimension mismatch")

    @property
    def side(self) -> float:
        return self.delta ** -0.5

    def lab_grid(self) -> GridSpec:
        """Grid holding the forcing in the original frame, sampled at the rescaled steps."""
        d = self.delta
        dy, ds = self.h * self.side, self.h_t / d
        s0 = -8 * self.w / d
        s_end = (1 + 8 * self.w) / d
        Nt = 1 << math.ceil(math.log2((s_end - s0) / ds + 1))
        lo = -2 * s_end - 8 * self.w * self.side
        hi = self.side * (1 + 8 * self.w) - 2 * s0
        N = 1 << math.ceil(math.log2((hi - lo) / dy + 1))
        return GridSpec(1, N * dy, N, Nt * ds, Nt, lo, s0)


def tube_envelope(p: TubeParams, z, s) -> np.ndarray:
    """Static box ``A(z, s) = Phi_w(delta^{1/2} z, delta s)`` in the co-moving frame."""
    d = p.delta
    return smooth_indicator(math.sqrt(d) * np.asarray(z), p.w) * smooth_indicator(d * np.asarray(s), p.w)


def tube_field(p: TubeParams, grid: GridSpec | None = None) -> Field:
    """``F(y, s) = A(y + 2s, s) e^{-i(y + s)}`` on the lab grid."""
    g = grid or p.lab_grid()
    y = g.x_axes()[0][:, None]
    s = g.t_axis()[None, :]
    vals = tube_envelope(p, y + 2 * s, s) * np.exp(-1j * (y + s))
    return Field(g, vals)


def _omega_grid(w: float, period: float = 1024.0) -> tuple[np.ndarray, float]:
    # Beyond |omega| = (160/w^2)^{1/4} the temporal factor is below e^{-40}.
    cut = (160.0 / w ** 2) ** 0.25
    dw = 2 * np.pi / period
    m = int(math.ceil(cut / dw))
    return dw * np.arange(-m, m + 1), dw


def scaled_tube_solution(Z, S, w: float) -> np.ndarray:
    """``V(Z, S)`` with ``U(A)(z, t) = delta^{-1} V(delta^{1/2} z, delta t)``, valid once the forcing is off.

    ``V = (2 pi)^{-1} \\int C(omega) C(-omega^2) e^{i(omega Z - S omega^2)} d omega``
    where ``C`` is :func:`smooth_indicator_hat`; the trapezoid rule in
    ``omega`` is spectrally accurate and periodizes ``Z`` with period 1024.
    """
    Z = np.asarray(Z, dtype=float)
    S = np.asarray(S, dtype=float)
    if np.any(S < 1 + 8 * w):
        raise ValueError("closed form needs S >= 1 + 8w (forcing switched off)")
    om, dw = _omega_grid(w)
    amp = smooth_indicator_hat(om, w) * smooth_indicator_hat(-om ** 2, w) * (dw / (2 * np.pi))
    Zf, Sf = np.broadcast_arrays(Z, S)
    Zf, Sf = Zf.ravel(), Sf.ravel()
    out = np.empty(Zf.shape, dtype=np.complex128)
    block = max(1, 2 ** 22 // om.size)
    for i in range(0, Zf.size, block):
        z, s = Zf[i:i + block, None], Sf[i:i + block, None]
        out[i:i + block] = np.exp(1j * (om * z - s * om ** 2)) @ amp
    return out.reshape(np.broadcast(Z, S).shape)


def tube_solution(p: TubeParams, x, t) -> np.ndarray:
    """``U(F)(x, t) = e^{-i(x+t)} U(A)(x + 2t, t)`` at lab points after the forcing window."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    d = p.delta
    V = scaled_tube_solution(math.sqrt(d) * (x + 2 * t), d * t, p.w)
    return np.exp(-1j * (x + t)) * V / d


@dataclass(frozen=True, eq=False)
class TubeWindow:
    """``|U(F)|`` on the lab lattice over the output window (rows ``x``, columns ``t``)."""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    dx: float
    dt: float


def tube_window(p: TubeParams) -> TubeWindow:
    d = p.delta
    dx, dt = p.h * p.side, p.h_t / d
    nt = int(round((p.c2 - p.c1) / p.h_t)) + 1
    t = p.c1 / d + dt * np.arange(nt)
    x_lo = math.floor((-2 * t[-1] - p.side) / dx)
    x_hi = math.ceil((-2 * t[0] + p.side) / dx)
    x = dx * np.arange(x_lo, x_hi + 1)
    vals = np.zeros((x.size, t.size))
    mask = np.zeros((x.size, t.size), dtype=bool)
    for k, tk in enumerate(t):
        sel = np.nonzero((x + 2 * tk) ** 2 <= 1.0 / d * (1 + 1e-12))[0]
        mask[sel, k] = True
        vals[sel, k] = np.abs(tube_solution(p, x[sel], tk))
    return TubeWindow(x, t, vals, mask, dx, dt)


def tube_phase(x, y, t, s) -> np.ndarray:
    """``P = (x - y + 2t)^2 / (4 (t - s))`` in the co-moving variables (``n = 1``)."""
    x, y, t, s = (np.asarray(v, dtype=float) for v in (x, y, t, s))
    return (x - y + 2 * t) ** 2 / (4 * (t - s))


def tube_phase_bound(p: TubeParams, n_samples: int = 100_000, seed: int = 0) -> float:
    """Largest sampled ``|P|`` over the output window and the support of ``A``."""
    rng = np.random.default_rng(seed)
    d = p.delta
    t = rng.uniform(p.c1 / d, p.c2 / d, n_samples)
    x = -2 * t + rng.uniform(-p.side, p.side, n_samples)
    y = rng.uniform(0, p.side, n_samples)
    s = rng.uniform(0, 1 / d, n_samples)
    return float(np.abs(tube_phase(x, y, t, s)).max())


@dataclass(frozen=True)
class TubeMeasurement:
    delta: float
    input_norm: float
    output_norm: float
    min_abs_scaled: float  # delta * min |U(F)| over the output window
    phase_bound: float

    @property
    def quotient(self) -> float:
        return self.output_norm / self.input_norm

    def to_json(self) -> dict:
        return {"delta": self.delta, "input_norm": self.input_norm, "output_norm": self.output_norm,
                "quotient": self.quotient, "min_abs_scaled": self.min_abs_scaled,
                "phase_bound": self.phase_bound}


def tube_measure(p: TubeParams, seed: int = 0) -> TubeMeasurement:
    if p.config is None:
        raise ValueError("tube_measure needs an exponent config")
    c = p.config
    win = tube_window(p)
    out = mixed_norm_array(win.values, MixedNormSpec.from_reciprocals(c.inv_r, c.inv_q), win.dx, win.dt)
    inp = mixed_norm(tube_field(p), MixedNormSpec.from_reciprocals(c.x, c.inv_qt_prime))
    lo = float(win.values[win.mask].min()) * p.delta
    return TubeMeasurement(p.delta, inp, out, lo, tube_phase_bound(p, seed=seed))


# ---------------------------------------------------------------------------
# Scaling family


def scaling_family(F: Field, lam: float) -> Field:
    """``F_lam(x, t) = F(lam x, lam^2 t)``: identical samples on the rescaled grid."""
    if not _is_pow2(float(lam)):
        raise ValueError("lam must be a power of two")
    if lam == 1:
        return F
    F = F.to_physical()
    return Field(F.grid.scaled(float(lam)), F.samples)


def duhamel_quotient(F: Field, c: ExponentConfig, lower_limit: str = "grid_start") -> float:
    """``|U F|_{L^r_x L^q_t} / |F|_{L^{r~'}_x L^{q~'}_t}`` with ``U`` the time-stepped Duhamel map."""
    u = duhamel_timestep(F, lower_limit).field
    num = mixed_norm(u, MixedNormSpec.from_reciprocals(c.inv_r, c.inv_q))
    den = mixed_norm(F, MixedNormSpec.from_reciprocals(c.x, c.inv_qt_prime))
    return num / den
