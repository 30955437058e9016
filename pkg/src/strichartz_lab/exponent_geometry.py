"""Exact admissibility geometry for time-space inhomogeneous Strichartz estimates.

Points live in the plane with horizontal coordinate ``x = 1/r~'`` and vertical
coordinate ``y = 1/r``.  Everything here is exact :class:`fractions.Fraction`
arithmetic; floats are refused at the boundary so that open/closed boundary
pieces keep their meaning.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

RationalLike = Union[Fraction, int, str]

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)

__all__ = [
    "ExponentPoint",
    "ExponentConfig",
    "RegionId",
    "Region",
    "VerdictKind",
    "Verdict",
    "QInterval",
    "as_rational",
    "dual_point",
    "vertices",
    "scaling_gap",
    "necessary_check",
    "point_conditions",
    "build_region",
    "necessary_region",
    "sufficient_region",
    "region_membership",
    "feasible_q_interval",
    "classify",
    "check_theorem_1d",
    "fmt_rational",
]


def as_rational(value: RationalLike) -> Fraction:
    """Coerce ``value`` to a Fraction; accepts ints, Fractions and ``"p/q"`` strings."""
    if isinstance(value, bool):
        raise TypeError("booleans are not exponents")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def fmt_rational(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


@dataclass(frozen=True, order=True)
class ExponentPoint:
    x: Fraction
    y: Fraction

    def __post_init__(self):
        x = as_rational(self.x)
        y = as_rational(self.y)
        if not (ZERO <= x <= ONE and ZERO <= y <= ONE):
            raise ValueError(f"point ({x}, {y}) outside the unit square")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __iter__(self):
        yield self.x
        yield self.y

    def to_json(self) -> list[str]:
        return [fmt_rational(self.x), fmt_rational(self.y)]


@dataclass(frozen=True)
class ExponentConfig:
    """Dimension plus the reciprocals ``1/q``, ``1/q~'`` and the point ``(1/r~', 1/r)``.

    ``1/r~`` and ``1/q~`` are derived, never stored.
    """

    n: int
    inv_q: Fraction
    inv_qt_prime: Fraction
    point: ExponentPoint

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("dimension must be a positive integer")
        inv_q = as_rational(self.inv_q)
        inv_qtp = as_rational(self.inv_qt_prime)
        for name, v in (("1/q", inv_q), ("1/q~'", inv_qtp)):
            if not ZERO <= v <= ONE:
                raise ValueError(f"{name}={v} outside [0, 1]")
        object.__setattr__(self, "inv_q", inv_q)
        object.__setattr__(self, "inv_qt_prime", inv_qtp)
        if not isinstance(self.point, ExponentPoint):
            object.__setattr__(self, "point", ExponentPoint(*self.point))

    @classmethod
    def of(cls, n: int, x: RationalLike, y: RationalLike, inv_q: RationalLike,
           inv_qt_prime: RationalLike) -> "ExponentConfig":
        return cls(n, as_rational(inv_q), as_rational(inv_qt_prime), ExponentPoint(x, y))

    @property
    def x(self) -> Fraction:
        return self.point.x

    @property
    def y(self) -> Fraction:
        return self.point.y

    @property
    def inv_r(self) -> Fraction:
        return self.point.y

    @property
    def inv_rt_prime(self) -> Fraction:
        return self.point.x

    @property
    def inv_rt(self) -> Fraction:
        return ONE - self.point.x

    @property
    def inv_qt(self) -> Fraction:
        return ONE - self.inv_qt_prime

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "inv_q": fmt_rational(self.inv_q),
            "inv_qt_prime": fmt_rational(self.inv_qt_prime),
            "point": self.point.to_json(),
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "ExponentConfig":
        x, y = d["point"]
        return cls.of(int(d["n"]), x, y, d["inv_q"], d["inv_qt_prime"])


def dual_point(p: ExponentPoint) -> ExponentPoint:
    """The adjoint involution ``(a, b) -> (1 - b, 1 - a)``."""
    return ExponentPoint(ONE - p.y, ONE - p.x)


_BASE_NAMES = ("B", "C", "P", "Q", "R", "S")


def vertices(n: int) -> dict[str, ExponentPoint]:
    """Named corner points B, C, P, Q, R, S and their duals (keys with a trailing ``'``)."""
    if n < 3:
        raise ValueError("vertex formulas are defined for n >= 3")
    n = Fraction(n)
    base = {
        "B": ExponentPoint((n + 3) / (2 * (n + 2)), (n - 1) / (2 * (n + 2))),
        "C": ExponentPoint(HALF, (n - 2) / (2 * n)),
        "P": ExponentPoint((n + 2) / (2 * (n + 1)), n * n / (2 * (n + 1) * (n + 2))),
        "Q": ExponentPoint((n + 2) / (2 * (n + 1)), (n - 2) / (2 * (n + 1))),
        "R": ExponentPoint((n + 1) / (2 * n), (n - 3) / (2 * n)),
        "S": ExponentPoint(n / (2 * (n - 1)), (n - 2) ** 2 / (2 * n * (n - 1))),
    }
    out = dict(base)
    for name in _BASE_NAMES:
        out[name + "'"] = dual_point(base[name])
    return out


def scaling_gap(c: ExponentConfig) -> Fraction:
    """Zero exactly when the parabolic scaling balance holds."""
    return c.inv_qt_prime - c.inv_q + Fraction(c.n, 2) * (c.x - c.y) - ONE


def point_conditions(n: int, p: ExponentPoint) -> list[str]:
    """Necessary conditions that involve only ``(1/r~', 1/r)``.

    These are the spatial conditions together with the consequences of the
    two extra test-function conditions under exact scaling.
    """
    x, y = p.x, p.y
    out = []
    if not x > HALF:
        out.append("x-cond[r~'<2]")
    if not y < HALF:
        out.append("x-cond[2<r]")
    if x - y > Fraction(2, n):
        out.append("x-cond[gap<=2/n]")
    if not (ONE - Fraction(1, n) <= x + y <= ONE + Fraction(1, n)):
        out.append("x-cond[sum]")
    if x - y < Fraction(2, n + 2):
        out.append("rcon1")
    if x + 3 * y > 2:
        out.append("rcon2[first]")
    if 3 * x + y < 2:
        out.append("rcon2[second]")
    if n >= 3:
        named = vertices(n)
        if p in (named["R"], named["R'"]):
            out.append("endpoint[R]")
    return out


def necessary_check(c: ExponentConfig) -> list[str]:
    """Identifiers of every violated necessary condition; empty when none fails."""
    n, x, y = c.n, c.x, c.y
    iq, iqtp = c.inv_q, c.inv_qt_prime
    a = iqtp - iq
    out = []
    if scaling_gap(c) != 0:
        out.append("scale")
    out += [k for k in point_conditions(n, c.point) if k.startswith("x-cond")]
    if not iq <= iqtp:
        out.append("t-cond[q~'<=q]")
    if not iq < n * (HALF - y):
        out.append("t-cond[1/q]")
    if not iqtp > 1 - n * (x - HALF):
        out.append("t-cond[1/q~']")
    if not a + (n + 1) * (x - y) >= 2:
        out.append("q2")
    if not a >= 2 * n * y - n + 1:
        out.append("q3[first]")
    if not a >= n + 1 - 2 * n * x:
        out.append("q3[second]")
    out += [k for k in point_conditions(n, c.point) if not k.startswith("x-cond")]
    return out


class RegionId(str, enum.Enum):
    N = "N"
    S = "S"
    H = "H"
    TRIANGLE_1D = "TRIANGLE_1D"
    PENTAGON_2D = "PENTAGON_2D"


def _cross(o: ExponentPoint, a: ExponentPoint, b: ExponentPoint) -> Fraction:
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


def _integer_line(a: ExponentPoint, b: ExponentPoint) -> tuple[int, int, int]:
    """Integers ``(A, B, C)`` with ``A y - B x + C`` a positive multiple of ``_cross(a, b, (x, y))``."""
    A, B = b.x - a.x, b.y - a.y
    C = B * a.x - A * a.y
    den = math.lcm(A.denominator, B.denominator, C.denominator)
    return int(A * den), int(B * den), int(C * den)


def _convex_hull(points: Iterable[ExponentPoint]) -> list[ExponentPoint]:
    # Andrew's monotone chain; collinear points dropped, output counter-clockwise.
    pts = sorted(set(points))
    if len(pts) < 3:
        return pts
    lower: list[ExponentPoint] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[ExponentPoint] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


@dataclass(frozen=True)
class Region:
    """Strictly convex polygon with per-edge and per-vertex inclusion flags.

    Edge ``i`` joins ``vertices[i]`` and ``vertices[i + 1]`` (cyclically); its
    flag covers the open segment only, vertex flags cover the endpoints.
    """

    id: RegionId
    n: int
    vertices: tuple[ExponentPoint, ...]
    edge_included: tuple[bool, ...]
    vertex_included: tuple[bool, ...]
    labels: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        m = len(self.vertices)
        if m < 3 or len(self.edge_included) != m or len(self.vertex_included) != m:
            raise ValueError("malformed region")
        for i in range(m):
            a, b, c = self.vertices[i], self.vertices[(i + 1) % m], self.vertices[(i + 2) % m]
            if _cross(a, b, c) <= 0:
                raise ValueError(f"region {self.id.value} is not strictly convex CCW")
        object.__setattr__(self, "_lines", tuple(_integer_line(a, b) for a, b in self.edges()))
        object.__setattr__(self, "_vertex_index", {v: i for i, v in enumerate(self.vertices)})

    def edges(self) -> list[tuple[ExponentPoint, ExponentPoint]]:
        m = len(self.vertices)
        return [(self.vertices[i], self.vertices[(i + 1) % m]) for i in range(m)]

    def _signs(self, p: ExponentPoint):
        xn, xd, yn, yd = p.x.numerator, p.x.denominator, p.y.numerator, p.y.denominator
        xy, xdy, ydx = xd * yd, yn * xd, xn * yd
        return [A * xdy - B * ydx + C * xy for A, B, C in self._lines]

    def contains(self, p: ExponentPoint) -> bool:
        i = self._vertex_index.get(p)
        if i is not None:
            return self.vertex_included[i]
        on_edge = None
        for i, sgn in enumerate(self._signs(p)):
            if sgn < 0:
                return False
            if sgn == 0:
                on_edge = i
        if on_edge is not None:
            return self.edge_included[on_edge]
        return True

    def closed_contains(self, p: ExponentPoint) -> bool:
        return all(sgn >= 0 for sgn in self._signs(p))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "region": self.id.value,
            "vertices": [v.to_json() for v in self.vertices],
            "labels": list(self.labels),
            "edge_included": list(self.edge_included),
            "vertex_included": list(self.vertex_included),
        }


def _polygon(rid: RegionId, n: int, named: Mapping[str, ExponentPoint],
             vertex_in: Iterable[str] = (), edge_in: Iterable[tuple[str, str]] = (),
             closed: bool = False) -> Region:
    by_point = {p: k for k, p in named.items()}
    hull = _convex_hull(named.values())
    if len(hull) != len(named):
        raise ValueError(f"{rid.value}: named points are not in strictly convex position")
    labels = tuple(by_point[p] for p in hull)
    vset = set(vertex_in)
    eset = {frozenset(e) for e in edge_in}
    m = len(hull)
    if closed:
        vflags = (True,) * m
        eflags = (True,) * m
    else:
        vflags = tuple(lab in vset for lab in labels)
        eflags = tuple(frozenset((labels[i], labels[(i + 1) % m])) in eset for i in range(m))
    missing = eset - {frozenset((labels[i], labels[(i + 1) % m])) for i in range(m)}
    if missing:
        raise ValueError(f"{rid.value}: requested edges are not polygon edges: {missing}")
    return Region(rid, n, tuple(hull), eflags, vflags, labels)


@functools.lru_cache(maxsize=None)
def build_region(n: int, rid: RegionId | str) -> Region:
    rid = RegionId(rid)
    if rid in (RegionId.N, RegionId.S, RegionId.H):
        if n < 3:
            raise ValueError(f"region {rid.value} needs n >= 3")
        v = vertices(n)
        if rid is RegionId.N:
            pick = {k: v[k] for k in ("B", "R", "R'", "B'")}
            return _polygon(rid, n, pick, vertex_in=("B", "B'"),
                            edge_in=(("B", "R"), ("R", "R'"), ("R'", "B'"), ("B'", "B")))
        if rid is RegionId.S:
            pick = {k: v[k] for k in ("P", "Q", "R", "P'", "Q'", "R'")}
            return _polygon(rid, n, pick, edge_in=(("P", "P'"), ("R", "R'")))
        pick = {k: v[k] for k in ("P", "Q", "S", "P'", "Q'", "S'")}
        return _polygon(rid, n, pick,
                        edge_in=(("Q", "S"), ("S", "S'"), ("S'", "Q'"), ("P'", "P")))
    if rid is RegionId.TRIANGLE_1D:
        if n != 1:
            raise ValueError("the triangle region is the n = 1 necessary region")
        return _polygon(rid, 1, _triangle_points(), closed=True)
    if n != 2:
        raise ValueError("the pentagon region is the n = 2 sufficient region")
    return _pentagon_2d()


def _triangle_points() -> dict[str, ExponentPoint]:
    return {"A": ExponentPoint(Fraction(2, 3), 0), "O": ExponentPoint(1, 0),
            "A'": ExponentPoint(1, Fraction(1, 3))}


def _pentagon_2d() -> Region:
    P = ExponentPoint(Fraction(2, 3), Fraction(1, 6))
    Q = ExponentPoint(Fraction(2, 3), 0)
    pts = {"P": P, "Q": Q, "O": ExponentPoint(1, 0), "Q'": dual_point(Q), "P'": dual_point(P)}
    return _polygon(RegionId.PENTAGON_2D, 2, pts, edge_in=(("P", "P'"),))


@functools.lru_cache(maxsize=None)
def necessary_region(n: int) -> Region:
    """Closed (up to R, R') region outside of which the estimate fails.

    For n = 2 the polygon is cut out by the same half-planes as for n >= 3;
    its corners are B, Q, (1, 0), Q', B'.
    """
    if n >= 3:
        return build_region(n, RegionId.N)
    if n == 1:
        return build_region(1, RegionId.TRIANGLE_1D)
    if n != 2:
        raise ValueError("n must be positive")
    B = ExponentPoint(Fraction(5, 8), Fraction(1, 8))
    Q = ExponentPoint(Fraction(2, 3), 0)
    pts = {"B": B, "Q": Q, "O": ExponentPoint(1, 0), "Q'": dual_point(Q), "B'": dual_point(B)}
    return _polygon(RegionId.N, 2, pts, closed=True)


@functools.lru_cache(maxsize=None)
def sufficient_region(n: int) -> Region:
    if n >= 3:
        return build_region(n, RegionId.S)
    if n == 2:
        return build_region(2, RegionId.PENTAGON_2D)
    if n != 1:
        raise ValueError("n must be positive")
    # Only the hypotenuse survives; the bottom and right closed sides are removed.
    return _polygon(RegionId.TRIANGLE_1D, 1, _triangle_points(), edge_in=(("A'", "A"),))


def region_membership(region: Region, p: ExponentPoint) -> bool:
    return region.contains(p)


@dataclass(frozen=True)
class QInterval:
    """Set of admissible ``1/q~'`` values; ``1/q`` follows from exact scaling."""

    lo: Fraction
    hi: Fraction
    lo_closed: bool
    hi_closed: bool
    offset: Fraction  # 1/q = 1/q~' + offset

    @property
    def empty(self) -> bool:
        return self.lo > self.hi or (self.lo == self.hi and not (self.lo_closed and self.hi_closed))

    def __contains__(self, u) -> bool:
        u = as_rational(u)
        if self.empty:
            return False
        lo_ok = u > self.lo or (self.lo_closed and u == self.lo)
        hi_ok = u < self.hi or (self.hi_closed and u == self.hi)
        return lo_ok and hi_ok

    def inv_q(self, inv_qt_prime: RationalLike) -> Fraction:
        return as_rational(inv_qt_prime) + self.offset

    def midpoint(self) -> Fraction:
        if self.empty:
            raise ValueError("empty interval has no midpoint")
        return (self.lo + self.hi) / 2

    def reflected(self) -> "QInterval":
        """Image under ``u -> 1 - (u + offset)``, the duality map on 1/q~'."""
        c = self.offset
        return QInterval(1 - c - self.hi, 1 - c - self.lo, self.hi_closed, self.lo_closed, c)

    def to_json(self) -> dict:
        return {
            "empty": self.empty,
            "lo": fmt_rational(self.lo),
            "hi": fmt_rational(self.hi),
            "lo_closed": self.lo_closed,
            "hi_closed": self.hi_closed,
            "inv_q_offset": fmt_rational(self.offset),
        }


def feasible_q_interval(n: int, p: ExponentPoint) -> QInterval:
    """Solve the temporal-exponent constraint system over the rationals.

    With ``u = 1/q~'`` and ``1/q = u + c``, ``c = (n/2)(x - y) - 1``, every
    constraint is a bound on ``u``.  The set is invariant under duality.
    """
    if n < 3:
        raise ValueError("feasible_q_interval needs n >= 3")
    x, y = p.x, p.y
    h = Fraction(n, 2)
    c = h * (x - y) - 1
    u_sum = x + y - 1
    # (bound, closed) pairs
    lows = [
        (-c, True),                         # 1/q >= 0
        (1 - n * (x - HALF), False),        # 1/q~' > 1 - n(x - 1/2)
        (1 - n * (HALF - y), False),        # 1/q~' > 1 - n(1/2 - y)
        (h * u_sum - c, False),             # 1/q > (n/2)(x + y - 1)
    ]
    highs = [
        (ONE, True),                        # 1/q~' <= 1
        (n * (HALF - y) - c, False),        # 1/q < n(1/2 - y)
        (n * (x - HALF) - c, False),        # 1/q < n(x - 1/2)
        (1 + h * u_sum, False),             # 1/q~' < 1 + (n/2)(x + y - 1)
    ]
    lo = max(b for b, _ in lows)
    lo_closed = all(cl for b, cl in lows if b == lo)
    hi = min(b for b, _ in highs)
    hi_closed = all(cl for b, cl in highs if b == hi)
    if c > 0:  # 1/q <= 1/q~' impossible
        lo, hi, lo_closed, hi_closed = ONE, ZERO, True, True
    return QInterval(lo, hi, lo_closed, hi_closed, c)


class VerdictKind(str, enum.Enum):
    SUFFICIENT = "SUFFICIENT"
    OPEN_GAP = "OPEN_GAP"
    EXCLUDED = "EXCLUDED"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    violated: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"verdict": self.kind.value, "violated": list(self.violated)}


def classify(n: int, p: ExponentPoint) -> Verdict:
    if n < 1:
        raise ValueError("n must be positive")
    if sufficient_region(n).contains(p):
        return Verdict(VerdictKind.SUFFICIENT)
    if necessary_region(n).contains(p):
        return Verdict(VerdictKind.OPEN_GAP)
    violated = tuple(point_conditions(n, p))
    if not violated:
        raise AssertionError(f"point {p} outside the necessary region but no condition fails")
    return Verdict(VerdictKind.EXCLUDED, violated)


def check_theorem_1d(c: ExponentConfig) -> bool:
    """Sufficient condition for n = 1: ``1 < q~ < 2 < q < inf`` plus the gap inequality."""
    if c.n != 1:
        raise ValueError("the one-dimensional criterion needs n = 1")
    iqt, iq = c.inv_qt, c.inv_q
    if not (HALF < iqt < ONE and ZERO < iq < HALF):
        return False
    return (c.x - c.y) + iqt / 2 - iq / 2 >= 1


def rational_grid(step_den: int, lo: Fraction = ZERO, hi: Fraction = ONE) -> Sequence[Fraction]:
    """All multiples of ``1/step_den`` in ``[lo, hi]``."""
    a = int(lo * step_den)
    b = int(hi * step_den)
    return [Fraction(k, step_den) for k in range(a, b + 1) if lo <= Fraction(k, step_den) <= hi]
