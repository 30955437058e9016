"""Periodic FFT discretisation of space-time: grids, fields, propagator, norms, bumps.

Fourier convention (continuous, approximated on the grid)::

    F^(xi, tau) = \\int\\int F(x, t) exp(-i (x.xi + t tau)) dx dt

so the free propagator ``e^{it Lap}`` is multiplication by ``exp(-i t |xi|^2)``.
"""
from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "GridSpec",
    "Field",
    "MixedNormSpec",
    "BumpPhi",
    "build_bump",
    "default_bump",
    "smooth_step",
    "free_propagate",
    "mixed_norm",
    "mixed_norm_array",
    "temporal_projection",
    "spatial_annulus_projection",
    "boundary_mass_fraction",
    "write_field",
    "read_field",
]


def _is_pow2(k: int) -> bool:
    return k >= 1 and (k & (k - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on a box in R^n times a time interval.

    Spatial axis ``i`` has ``N[i]`` samples starting at ``x0[i]`` with spacing
    ``L[i] / N[i]``; time has ``Nt`` samples starting at ``t0``.
    """

    n: int
    L: tuple[float, ...]
    N: tuple[int, ...]
    T: float
    Nt: int
    x0: tuple[float, ...] | None = None
    t0: float = 0.0

    def __post_init__(self):
        L = tuple(float(v) for v in np.broadcast_to(self.L, (self.n,)))
        N = tuple(int(v) for v in np.broadcast_to(self.N, (self.n,)))
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "N", N)
        if self.x0 is None:
            object.__setattr__(self, "x0", tuple(-l / 2 for l in L))
        else:
            object.__setattr__(self, "x0", tuple(float(v) for v in np.broadcast_to(self.x0, (self.n,))))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "t0", float(self.t0))
        for k in N + (self.Nt,):
            if k < 4 or not _is_pow2(k):
                raise ValueError(f"sample counts must be powers of two >= 4, got {k}")
        if min(L) <= 0 or self.T <= 0:
            raise ValueError("extents must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.N + (self.Nt,)

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple(l / k for l, k in zip(self.L, self.N))

    @property
    def dt(self) -> float:
        return self.T / self.Nt

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.dx))

    def x_axes(self) -> list[np.ndarray]:
        return [a + d * np.arange(k) for a, d, k in zip(self.x0, self.dx, self.N)]

    def t_axis(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.Nt)

    def xi_axes(self) -> list[np.ndarray]:
        return [2 * np.pi * np.fft.fftfreq(k, d) for k, d in zip(self.N, self.dx)]

    def tau_axis(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.Nt, self.dt)

    def xi_sq(self) -> np.ndarray:
        """``|xi|^2`` on the spatial frequency grid, shape ``N``."""
        out = np.zeros(self.N)
        for i, k in enumerate(self.xi_axes()):
            sh = [1] * self.n
            sh[i] = -1
            out = out + k.reshape(sh) ** 2
        return out

    def spatial_mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.x_axes(), indexing="ij")

    def time_index(self, t: float) -> int:
        """Index of an exact grid node; raises if ``t`` is not one."""
        k = (t - self.t0) / self.dt
        ki = int(round(k))
        if abs(k - ki) > 1e-9 or not 0 <= ki < self.Nt:
            raise ValueError(f"t={t} is not a node of the time grid")
        return ki

    def scaled(self, lam: float) -> "GridSpec":
        """Grid for ``F(lam x, lam^2 t)``: lengths divided by lam, times by lam^2."""
        return GridSpec(self.n, tuple(l / lam for l in self.L), self.N, self.T / lam ** 2,
                        self.Nt, tuple(a / lam for a in self.x0), self.t0 / lam ** 2)

    def with_time(self, T: float, Nt: int, t0: float | None = None) -> "GridSpec":
        return GridSpec(self.n, self.L, self.N, T, Nt, self.x0, self.t0 if t0 is None else t0)

    def to_json(self) -> dict:
        return {"n": self.n, "L": list(self.L), "N": list(self.N), "T": self.T, "Nt": self.Nt,
                "x0": list(self.x0), "t0": self.t0}

    @classmethod
    def from_json(cls, d: dict) -> "GridSpec":
        return cls(int(d["n"]), tuple(d["L"]), tuple(d["N"]), d["T"], int(d["Nt"]),
                   tuple(d["x0"]) if d.get("x0") is not None else None, d.get("t0", 0.0))


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples bound to a grid, on the physical or the frequency side.

    Frequency-side samples approximate the continuous transform at the FFT
    ordered frequencies ``(xi_axes, tau_axis)``.
    """

    grid: GridSpec
    samples: np.ndarray
    side: str = "physical"

    def __post_init__(self):
        a = np.array(self.samples, dtype=np.complex128, copy=True)
        if a.shape != self.grid.shape:
            raise ValueError(f"samples shape {a.shape} does not match grid {self.grid.shape}")
        if self.side not in ("physical", "frequency"):
            raise ValueError("side must be 'physical' or 'frequency'")
        a.setflags(write=False)
        object.__setattr__(self, "samples", a)

    def _phase(self) -> np.ndarray:
        g = self.grid
        ph = np.zeros(g.shape)
        for i, (k, a) in enumerate(zip(g.xi_axes(), g.x0)):
            sh = [1] * (g.n + 1)
            sh[i] = -1
            ph = ph + (a * k).reshape(sh)
        ph = ph + (g.t0 * g.tau_axis()).reshape([1] * g.n + [-1])
        return ph

    def to_frequency(self) -> "Field":
        if self.side == "frequency":
            return self
        g = self.grid
        vol = g.cell_volume * g.dt
        fh = np.fft.fftn(self.samples) * vol * np.exp(-1j * self._phase())
        return Field(g, fh, "frequency")

    def to_physical(self) -> "Field":
        if self.side == "physical":
            return self
        g = self.grid
        vol = g.cell_volume * g.dt
        f = np.fft.ifftn(self.samples * np.exp(1j * self._phase())) / vol
        return Field(g, f, "physical")

    def with_samples(self, samples: np.ndarray) -> "Field":
        return Field(self.grid, samples, self.side)

    def l2(self) -> float:
        g = self.grid
        f = self.to_physical().samples
        return float(np.sqrt(np.sum(np.abs(f) ** 2) * g.cell_volume * g.dt))


def smooth_step(u):
    """C-infinity monotone step: 0 for u <= 0, 1 for u >= 1, glued from exp(-1/s)."""
    u = np.asarray(u, dtype=float)

    def h(s):
        out = np.zeros_like(s)
        m = s > 0
        out[m] = np.exp(-1.0 / s[m])
        return out

    a, b = h(u), h(1.0 - u)
    return a / (a + b)


def _eta(t):
    return 1.0 - smooth_step(np.asarray(t, dtype=float) - 1.0)


@dataclass(frozen=True, eq=False)
class BumpPhi:
    """Dyadic bump ``phi = eta - eta(2 .)`` with a tabulated Fourier transform.

    ``phi_hat(eta) = \\int phi(t) exp(-i t eta) dt`` is tabulated on
    ``[0, eta_max]`` and extended to negative arguments by conjugation, so the
    symmetry ``phi_hat(-eta) = conj(phi_hat(eta))`` holds exactly.  Arguments
    beyond the table return zero.
    """

    eta_max: float
    n_samples: int
    table_eta: np.ndarray = field(repr=False)
    table: np.ndarray = field(repr=False)
    _re: CubicSpline = field(repr=False)
    _im: CubicSpline = field(repr=False)

    @staticmethod
    def phi(t):
        t = np.asarray(t, dtype=float)
        return _eta(t) - _eta(2.0 * t)

    @staticmethod
    def eta(t):
        return _eta(t)

    def phi_hat(self, eta) -> np.ndarray:
        eta = np.asarray(eta, dtype=float)
        a = np.abs(eta)
        out = np.zeros(eta.shape, dtype=np.complex128)
        inside = a <= self.eta_max
        ai = a[inside]
        val = self._re(ai) + 1j * self._im(ai)
        out[inside] = np.where(eta[inside] < 0, np.conj(val), val)
        return out

    def partition_sum(self, t, K: int) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return sum(self.phi(2.0 ** k * t) for k in range(-K, K + 1))

    def sup_abs(self) -> float:
        return float(np.max(np.abs(self.table)))


def build_bump(eta_max: float = 256.0, n_samples: int = 2 ** 16) -> BumpPhi:
    """Construct the bump and tabulate its transform with one long FFT.

    Sampling phi with step ``pi / eta_max`` makes the FFT bins land on
    ``[-eta_max, eta_max)`` with spacing ``2 eta_max / n_samples``.
    """
    if not _is_pow2(n_samples):
        raise ValueError("n_samples must be a power of two")
    h = np.pi / eta_max
    t = h * np.arange(n_samples)
    vals = np.fft.fft(BumpPhi.phi(t)) * h
    half = n_samples // 2
    etas = 2 * np.pi * np.arange(half + 1) / (n_samples * h)
    tab = np.concatenate([vals[:half], [np.conj(vals[half])]])
    tab[0] = tab[0].real
    return BumpPhi(eta_max, n_samples, etas, tab,
                   CubicSpline(etas, tab.real), CubicSpline(etas, tab.imag))


@functools.lru_cache(maxsize=4)
def default_bump(eta_max: float = 256.0, n_samples: int = 2 ** 16) -> BumpPhi:
    return build_bump(eta_max, n_samples)


def free_propagate(u: np.ndarray, grid: GridSpec, t: float) -> np.ndarray:
    """Apply ``e^{it Lap}`` to a spatial slice (or stack of slices along a trailing axis)."""
    u = np.asarray(u, dtype=np.complex128)
    axes = tuple(range(grid.n))
    sym = np.exp(-1j * t * grid.xi_sq())
    if u.ndim > grid.n:
        sym = sym.reshape(sym.shape + (1,) * (u.ndim - grid.n))
    return np.fft.ifftn(np.fft.fftn(u, axes=axes) * sym, axes=axes)


def _as_exponent(v) -> float:
    if v is None or (isinstance(v, str) and v.lower() in ("inf", "infinity")):
        return math.inf
    return float(Fraction(v)) if isinstance(v, (str, Fraction)) else float(v)


@dataclass(frozen=True)
class MixedNormSpec:
    """``L^r_x L^q_t``: time integrated first (exponent q), then space (exponent r)."""

    r: float
    q: float

    def __post_init__(self):
        r, q = _as_exponent(self.r), _as_exponent(self.q)
        if r < 1 or q < 1:
            raise ValueError("mixed-norm exponents must be >= 1")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "q", q)

    @classmethod
    def from_reciprocals(cls, inv_r, inv_q) -> "MixedNormSpec":
        def rec(v):
            v = Fraction(v) if not isinstance(v, float) else v
            return math.inf if v == 0 else 1.0 / float(v)
        return cls(rec(inv_r), rec(inv_q))


def _lp(a: np.ndarray, p: float, w: float, axis) -> np.ndarray:
    if math.isinf(p):
        return np.max(a, axis=axis)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(m > 0, m, 1.0)
    s = np.sum((a / m) ** p, axis=axis) * w
    return np.squeeze(m, axis=axis) * s ** (1.0 / p)


def mixed_norm(f, spec: MixedNormSpec, grid: GridSpec | None = None, mask: np.ndarray | None = None) -> float:
    """Discrete ``(sum_x (sum_t |f|^q dt)^{r/q} dx)^{1/r}``; infinite exponents are maxima.

    ``mask`` restricts the norm to a subset of the grid (zero outside).
    """
    if isinstance(f, Field):
        grid = f.grid
        if f.side != "physical":
            raise ValueError("mixed_norm needs a physical-side field")
        f = f.samples
    if grid is None:
        raise ValueError("grid required for raw arrays")
    a = np.abs(np.asarray(f))
    if mask is not None:
        a = np.where(mask, a, 0.0)
    return mixed_norm_array(a, spec, grid.cell_volume, grid.dt)


def mixed_norm_array(a: np.ndarray, spec: MixedNormSpec, dvol: float, dt: float) -> float:
    """Mixed norm of ``|a|`` with time on the last axis and cell sizes given explicitly."""
    a = np.abs(np.asarray(a))
    inner = _lp(a, spec.q, dt, axis=-1)
    return float(_lp(inner.reshape(-1), spec.r, dvol, axis=0))


def temporal_projection(f: Field, j: int, bump: BumpPhi | None = None) -> Field:
    """Multiply the space-time transform by ``phi(2^j tau)``."""
    bump = bump or default_bump()
    g = f.grid
    m = bump.phi(2.0 ** j * g.tau_axis()).reshape([1] * g.n + [-1])
    fh = np.fft.fft(f.to_physical().samples, axis=-1)
    return Field(g, np.fft.ifft(fh * m, axis=-1))


def spatial_annulus_projection(f: Field, j: int, bump: BumpPhi | None = None) -> Field:
    """Multiply the spatial transform by ``phi(2^j |xi|)``."""
    bump = bump or default_bump()
    g = f.grid
    axes = tuple(range(g.n))
    m = bump.phi(2.0 ** j * np.sqrt(g.xi_sq()))[..., None]
    fh = np.fft.fftn(f.to_physical().samples, axes=axes)
    return Field(g, np.fft.ifftn(fh * m, axes=axes))


def boundary_mass_fraction(u: np.ndarray, grid: GridSpec, frac: float = 1 / 16) -> float:
    """Worst-case (over time) share of L^2 mass inside the outer ``frac`` of the box."""
    a = np.abs(np.asarray(u)) ** 2
    mask = np.zeros(grid.N, dtype=bool)
    for i, k in enumerate(grid.N):
        w = max(1, int(round(frac * k)))
        idx = [slice(None)] * grid.n
        idx[i] = np.r_[0:w, k - w:k]
        mask[tuple(idx)] = True
    tot = a.reshape(-1, a.shape[-1]).sum(axis=0) if a.ndim > grid.n else a.sum()
    edge = a[mask].sum(axis=0)
    tot = np.where(tot > 0, tot, 1.0)
    return float(np.max(edge / tot))


_MAGIC = b"SLFD"
_VERSION = 1


def write_field(path, f: Field) -> None:
    """Flat little-endian layout: header then interleaved complex64 pairs in C order.

    Header: magic, u32 version, u32 n, u8 side (0 physical / 1 frequency), then
    per spatial axis (u32 N, f64 L, f64 x0), then (u32 Nt, f64 T, f64 t0).
    """
    g = f.grid
    path = Path(path)
    head = [_MAGIC, struct.pack("<IIB", _VERSION, g.n, 0 if f.side == "physical" else 1)]
    for k, l, a in zip(g.N, g.L, g.x0):
        head.append(struct.pack("<Idd", k, l, a))
    head.append(struct.pack("<Idd", g.Nt, g.T, g.t0))
    data = np.ascontiguousarray(f.samples, dtype="<c8").tobytes()
    try:
        path.write_bytes(b"".join(head) + data)
    except OSError as exc:
        raise OSError(f"cannot write field to {path}: {exc}") from exc


def read_field(path) -> Field:
    buf = Path(path).read_bytes()
    if buf[:4] != _MAGIC:
        raise ValueError(f"{path}: not a field file")
    off = 4
    version, n, side = struct.unpack_from("<IIB", buf, off)
    off += struct.calcsize("<IIB")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported field version {version}")
    N, L, x0 = [], [], []
    for _ in range(n):
        k, l, a = struct.unpack_from("<Idd", buf, off)
        off += struct.calcsize("<Idd")
        N.append(k), L.append(l), x0.append(a)
    Nt, T, t0 = struct.unpack_from("<Idd", buf, off)
    off += struct.calcsize("<Idd")
    g = GridSpec(n, tuple(L), tuple(N), T, Nt, tuple(x0), t0)
    arr = np.frombuffer(buf, dtype="<c8", offset=off).reshape(g.shape)
    return Field(g, arr.astype(np.complex128), "physical" if side == 0 else "frequency")


def band_limit_fraction(f: Field, cut: float = 2 / 3) -> float:
    """L^2 share of spectral content beyond ``cut`` times Nyquist on any axis."""
    g = f.grid
    fh = np.abs(np.fft.fftn(f.to_physical().samples)) ** 2
    mask = np.zeros(g.shape, dtype=bool)
    freqs = [np.fft.fftfreq(k) for k in g.shape]
    for i, fr in enumerate(freqs):
        sh = [1] * len(g.shape)
        sh[i] = -1
        mask = mask | (np.abs(fr) > cut * 0.5).reshape(sh)
    tot = fh.sum()
    return float(fh[mask].sum() / tot) if tot > 0 else 0.0


def geometric(values: Sequence[float]) -> bool:
    """True when consecutive ratios are exactly 2 or exactly 1/2 throughout."""
    v = list(values)
    if len(v) < 2:
        return True
    r = v[1] / v[0]
    return r in (2.0, 0.5) and all(b / a == r for a, b in zip(v, v[1:]))
