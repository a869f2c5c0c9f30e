"""Analytic test functions with averages, L1 norms and total variation.

Descriptors are small frozen dataclasses that evaluate vectorised: 1D
descriptors take an array of abscissae, 2D descriptors an array of points
with last axis 2.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from ._quad import composite_nodes, gauss_legendre
from .errors import DomainError, GeometryError
from .geometry import AxisBox, Interval, Polygon2D, Rectangle

DEFAULT_GRID_1D = 4096
DEFAULT_GRID_2D = 512


# ---------------------------------------------------------------------------
# descriptors


class Descriptor:
    dim = 1

    def __call__(self, x):
        raise NotImplementedError

    def derivative(self, x):
        """Classical derivative (1D), zero at jump points' complement only."""
        raise NotImplementedError

    def breakpoints(self):
        """Abscissae where u or u' fails to be smooth (1D)."""
        return np.empty(0)

    def jumps(self):
        """List of (location, height) of jump discontinuities (1D)."""
        return []

    def sup_abs(self):
        return None

    def __add__(self, other):
        return Sum((self, other))

    def to_dict(self):
        raise NotImplementedError


def _bump_profile(r2):
    """e*exp(-1/(1-r^2)) for r^2 < 1, else 0; equals 1 at r = 0."""
    r2 = np.asarray(r2, dtype=float)
    out = np.zeros_like(r2)
    inside = r2 < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


def _bump_profile_d(r2):
    """Derivative of the profile with respect to r^2."""
    r2 = np.asarray(r2, dtype=float)
    out = np.zeros_like(r2)
    inside = r2 < 1
    q = 1.0 - r2[inside]
    out[inside] = -np.exp(1.0 - 1.0 / q) / q**2
    return out


@dataclass(frozen=True)
class Linear(Descriptor):
    """u(x) = coef . x + offset (u(x) = x by default in 1D)."""

    coef: tuple = (1.0,)
    offset: float = 0.0

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.coef))
        object.__setattr__(self, "coef", c)

    @property
    def dim(self):
        return len(self.coef)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return self.coef[0] * x + self.offset
        return x @ np.asarray(self.coef) + self.offset

    def derivative(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.coef[0])

    def to_dict(self):
        return {"kind": "linear", "coef": list(self.coef), "offset": self.offset}


@dataclass(frozen=True)
class Constant(Descriptor):
    value: float = 1.0
    ndim: int = 1

    @property
    def dim(self):
        return self.ndim

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        shape = x.shape if self.ndim == 1 else x.shape[:-1]
        return np.full(shape, float(self.value))

    def derivative(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def sup_abs(self):
        return abs(self.value)

    def to_dict(self):
        return {"kind": "constant", "value": self.value, "dim": self.ndim}


@dataclass(frozen=True)
class SmoothBump(Descriptor):
    """a * e * exp(-1/(1 - |x-c|^2/r^2)) inside the ball, 0 outside; peak value a."""

    center: tuple = (0.5,)
    radius: float = 0.25
    amplitude: float = 1.0

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.center))
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise DomainError("bump radius must be positive")

    @property
    def dim(self):
        return len(self.center)

    def _r2(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return ((x - self.center[0]) / self.radius) ** 2
        d = x - np.asarray(self.center)
        return np.sum(d * d, axis=-1) / self.radius**2

    def __call__(self, x):
        return self.amplitude * _bump_profile(self._r2(x))

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        dr2 = 2 * (x - self.center[0]) / self.radius**2
        return self.amplitude * _bump_profile_d(self._r2(x)) * dr2

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        g = self.amplitude * _bump_profile_d(self._r2(x))
        return g[..., None] * 2 * (x - np.asarray(self.center)) / self.radius**2

    def breakpoints(self):
        c = self.center[0]
        return np.array([c - self.radius, c, c + self.radius])

    def sup_abs(self):
        return abs(self.amplitude)

    def to_dict(self):
        return {
            "kind": "bump",
            "center": list(self.center),
            "radius": self.radius,
            "amplitude": self.amplitude,
        }


@dataclass(frozen=True)
class TensorProfile(Descriptor):
    """u(x', x_d) = u'(x') in the plane, constant in x_d."""

    profile: Descriptor = SmoothBump((0.0,), 0.5, 1.0)

    dim = 2

    def __post_init__(self):
        if self.profile.dim != 1:
            raise DomainError("tensor profile must be one-dimensional")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.profile(x[..., 0])

    def sup_abs(self):
        return self.profile.sup_abs()

    def to_dict(self):
        return {"kind": "tensor", "profile": self.profile.to_dict()}


@dataclass(frozen=True)
class Step(Descriptor):
    """base + sum_i heights[i] * 1[x >= locations[i]] (1D)."""

    locations: tuple = (1.0,)
    heights: tuple = (1.0,)
    base: float = 0.0

    def __post_init__(self):
        loc = tuple(float(v) for v in np.atleast_1d(self.locations))
        hts = tuple(float(v) for v in np.atleast_1d(self.heights))
        if len(loc) != len(hts):
            raise DomainError("step needs one height per location")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "heights", hts)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, float(self.base))
        for a, h in zip(self.locations, self.heights):
            out = out + h * (x >= a)
        return out

    def derivative(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def breakpoints(self):
        return np.asarray(self.locations)

    def jumps(self):
        return list(zip(self.locations, self.heights))

    def sup_abs(self):
        vals = np.cumsum((self.base,) + self.heights)
        return float(np.max(np.abs(vals)))

    def to_dict(self):
        return {
            "kind": "step",
            "locations": list(self.locations),
            "heights": list(self.heights),
            "base": self.base,
        }


def _smoothstep_down(sig):
    """1 - 3 s^2 + 2 s^3 clamped: 1 for s <= 0, 0 for s >= 1."""
    s = np.clip(sig, 0.0, 1.0)
    return 1.0 - 3.0 * s**2 + 2.0 * s**3


def _smoothstep_down_d(sig):
    s = np.asarray(sig, dtype=float)
    out = -6.0 * s + 6.0 * s**2
    return np.where((s > 0) & (s < 1), out, 0.0)


def _outside_distance(domain, x):
    """Distance to the boundary, extended by 0 outside (no exception)."""
    if isinstance(domain, Interval):
        x = np.asarray(x, dtype=float)
        return np.clip(np.minimum(x, 2 * domain.D - x), 0.0, None)
    if isinstance(domain, AxisBox) and domain.d == 2:
        domain = domain.to_polygon()
    if isinstance(domain, Polygon2D) and domain.is_convex:
        a, _, n, _ = domain.edge_frames()
        x = np.asarray(x, dtype=float)
        d = np.einsum("...j,kj->...k", x, n) - np.einsum("kj,kj->k", a, n)
        return np.clip(d.min(axis=-1), 0.0, None)
    x = np.asarray(x, dtype=float)
    inside = domain.contains(x)
    out = np.zeros(inside.shape)
    if np.any(inside):
        out[inside] = domain.distance(x[inside])
    return out


@dataclass(frozen=True)
class BoundaryPlateau(Descriptor):
    """c on the collar {delta < eps}, cubic transition to 0 over ``width``."""

    c: float = 1.0
    eps: float = 0.1
    width: float = 0.2
    domain: object = Interval(1.0)

    def __post_init__(self):
        if self.c == 0:
            raise DomainError("plateau constant must be nonzero")
        if not (self.eps >= 0 and self.width > 0):
            raise DomainError("plateau needs eps >= 0 and width > 0")
        if self.eps + self.width > self.domain.inradius * (1 + 1e-12):
            raise DomainError("plateau transition does not fit inside the domain")

    @property
    def dim(self):
        return self.domain.dim

    def _sigma(self, x):
        return (_outside_distance(self.domain, x) - self.eps) / self.width

    def __call__(self, x):
        return self.c * _smoothstep_down(self._sigma(x))

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        D = self.domain.D
        ddelta = np.where(x < D, 1.0, -1.0)
        return self.c * _smoothstep_down_d(self._sigma(x)) * ddelta / self.width

    def breakpoints(self):
        D = self.domain.D
        e, w = self.eps, self.width
        return np.array([e, e + w, D, 2 * D - e - w, 2 * D - e])

    def sup_abs(self):
        return abs(self.c)

    def to_dict(self):
        return {
            "kind": "plateau",
            "c": self.c,
            "eps": self.eps,
            "width": self.width,
            "domain": self.domain.to_dict(),
        }


@dataclass(frozen=True)
class ClampedLinear(Descriptor):
    """Lipschitz cutoff clip((x - a)/(b - a), 0, 1) (1D) or of x_1 (2D)."""

    a: float = 0.0
    b: float = 1.0
    ndim: int = 1

    def __post_init__(self):
        if not self.b > self.a:
            raise DomainError("clamped linear needs a < b")

    @property
    def dim(self):
        return self.ndim

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        t = x if self.ndim == 1 else x[..., 0]
        return np.clip((t - self.a) / (self.b - self.a), 0.0, 1.0)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x > self.a) & (x < self.b), 1.0 / (self.b - self.a), 0.0)

    def breakpoints(self):
        return np.array([self.a, self.b])

    def sup_abs(self):
        return 1.0

    def to_dict(self):
        return {"kind": "clamped", "a": self.a, "b": self.b, "dim": self.ndim}


@dataclass(frozen=True)
class PiecewiseLinear(Descriptor):
    """Linear interpolation of (knots, values), constant outside the knot range."""

    knots: tuple = (0.0, 1.0)
    values: tuple = (0.0, 1.0)

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        if len(k) < 2 or len(k) != len(self.values) or np.any(np.diff(k) <= 0):
            raise DomainError("piecewise linear needs >= 2 increasing knots with one value each")

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.knots, self.values)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        k = np.asarray(self.knots)
        slope = np.diff(self.values) / np.diff(k)
        i = np.clip(np.searchsorted(k, x, side="right") - 1, 0, len(slope) - 1)
        inside = (x > k[0]) & (x < k[-1])
        return np.where(inside, slope[i], 0.0)

    def breakpoints(self):
        return np.asarray(self.knots, dtype=float)

    def sup_abs(self):
        return float(np.max(np.abs(self.values)))

    def total_variation(self):
        return float(np.sum(np.abs(np.diff(self.values))))

    def to_dict(self):
        return {"kind": "pwlinear", "knots": list(map(float, self.knots)), "values": list(map(float, self.values))}


@dataclass(frozen=True)
class Affine(Descriptor):
    """scale * base + shift."""

    base: Descriptor
    scale: float = 1.0
    shift: float = 0.0

    @property
    def dim(self):
        return self.base.dim

    def __call__(self, x):
        return self.scale * self.base(x) + self.shift

    def derivative(self, x):
        return self.scale * self.base.derivative(x)

    def breakpoints(self):
        return self.base.breakpoints()

    def jumps(self):
        return [(a, self.scale * h) for a, h in self.base.jumps()]

    def sup_abs(self):
        s = self.base.sup_abs()
        return None if s is None else abs(self.scale) * s + abs(self.shift)

    def to_dict(self):
        return {"kind": "affine", "base": self.base.to_dict(), "scale": self.scale, "shift": self.shift}


@dataclass(frozen=True)
class Dilation(Descriptor):
    """u(origin + (x - origin)/lam): the base stretched by lam about origin (1D)."""

    base: Descriptor
    lam: float = 1.0
    origin: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError("dilation factor must be positive")

    @property
    def dim(self):
        return self.base.dim

    def _map(self, x):
        return self.origin + (np.asarray(x, dtype=float) - self.origin) / self.lam

    def __call__(self, x):
        return self.base(self._map(x))

    def derivative(self, x):
        return self.base.derivative(self._map(x)) / self.lam

    def breakpoints(self):
        return self.origin + self.lam * (self.base.breakpoints() - self.origin)

    def jumps(self):
        return [(self.origin + self.lam * (a - self.origin), h) for a, h in self.base.jumps()]

    def sup_abs(self):
        return self.base.sup_abs()

    def to_dict(self):
        return {"kind": "dilation", "base": self.base.to_dict(), "lam": self.lam, "origin": self.origin}


@dataclass(frozen=True)
class Sum(Descriptor):
    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise DomainError("empty sum")
        if len({t.dim for t in self.terms}) != 1:
            raise DomainError("summands must share a dimension")

    @property
    def dim(self):
        return self.terms[0].dim

    def __call__(self, x):
        return sum(t(x) for t in self.terms)

    def derivative(self, x):
        return sum(t.derivative(x) for t in self.terms)

    def breakpoints(self):
        return np.concatenate([t.breakpoints() for t in self.terms])

    def jumps(self):
        merged = {}
        for t in self.terms:
            for a, h in t.jumps():
                merged[a] = merged.get(a, 0.0) + h
        return sorted(merged.items())

    def sup_abs(self):
        parts = [t.sup_abs() for t in self.terms]
        return None if any(p is None for p in parts) else float(sum(parts))

    def to_dict(self):
        return {"kind": "sum", "terms": [t.to_dict() for t in self.terms]}


@dataclass(frozen=True)
class Product(Descriptor):
    """Pointwise product f * g; 1D jumps are supported when g is continuous."""

    f: Descriptor
    g: Descriptor

    @property
    def dim(self):
        return self.f.dim

    def __call__(self, x):
        return self.f(x) * self.g(x)

    def derivative(self, x):
        return self.f.derivative(x) * self.g(x) + self.f(x) * self.g.derivative(x)

    def breakpoints(self):
        return np.concatenate([self.f.breakpoints(), self.g.breakpoints()])

    def jumps(self):
        out = []
        for a, h in self.f.jumps():
            out.append((a, h * float(self.g(np.array([a]))[0])))
        for a, h in self.g.jumps():
            out.append((a, h * float(self.f(np.array([a]))[0])))
        return out

    def sup_abs(self):
        a, b = self.f.sup_abs(), self.g.sup_abs()
        return None if a is None or b is None else a * b

    def to_dict(self):
        return {"kind": "product", "f": self.f.to_dict(), "g": self.g.to_dict()}


def descriptor_from_dict(d):
    from .geometry import domain_from_dict

    k = d["kind"]
    if k == "linear":
        return Linear(tuple(d["coef"]), d.get("offset", 0.0))
    if k == "constant":
        return Constant(d["value"], d.get("dim", 1))
    if k == "bump":
        return SmoothBump(tuple(d["center"]), d["radius"], d["amplitude"])
    if k == "tensor":
        return TensorProfile(descriptor_from_dict(d["profile"]))
    if k == "step":
        return Step(tuple(d["locations"]), tuple(d["heights"]), d.get("base", 0.0))
    if k == "plateau":
        return BoundaryPlateau(d["c"], d["eps"], d["width"], domain_from_dict(d["domain"]))
    if k == "clamped":
        return ClampedLinear(d["a"], d["b"], d.get("dim", 1))
    if k == "pwlinear":
        return PiecewiseLinear(tuple(d["knots"]), tuple(d["values"]))
    if k == "affine":
        return Affine(descriptor_from_dict(d["base"]), d["scale"], d["shift"])
    if k == "dilation":
        return Dilation(descriptor_from_dict(d["base"]), d["lam"], d.get("origin", 0.0))
    if k == "sum":
        return Sum(tuple(descriptor_from_dict(t) for t in d["terms"]))
    if k == "product":
        return Product(descriptor_from_dict(d["f"]), descriptor_from_dict(d["g"]))
    raise DomainError(f"unknown function kind {k!r}")


# ---------------------------------------------------------------------------
# the test function wrapper


@dataclass(frozen=True)
class TestFunction:
    """A descriptor together with a sampling resolution and optional exact data."""

    __test__ = False  # keep pytest from collecting this class

    descriptor: Descriptor
    grid: Optional[int] = None
    known_tv: Optional[float] = None
    known_l1: Optional[float] = None

    def __post_init__(self):
        if self.grid is None:
            g = DEFAULT_GRID_1D if self.dim == 1 else DEFAULT_GRID_2D
            object.__setattr__(self, "grid", g)
        if self.grid < 8:
            raise DomainError("grid must have at least 8 points per axis")

    @property
    def dim(self):
        return self.descriptor.dim

    def __call__(self, x):
        return self.descriptor(x)

    def with_grid(self, grid):
        return TestFunction(self.descriptor, grid, self.known_tv, self.known_l1)

    def to_dict(self):
        return {
            "descriptor": self.descriptor.to_dict(),
            "grid": self.grid,
            "known_tv": self.known_tv,
            "known_l1": self.known_l1,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(descriptor_from_dict(d["descriptor"]), d.get("grid"), d.get("known_tv"), d.get("known_l1"))


def _as_tf(u):
    return u if isinstance(u, TestFunction) else TestFunction(u)


# ---------------------------------------------------------------------------
# quadrature rules over regions


def _region_1d(E):
    if isinstance(E, Interval):
        return 0.0, 2 * E.D
    if isinstance(E, AxisBox) and E.d == 1:
        return 0.0, E.h
    a, b = map(float, E)
    return a, b


def _sign_change_roots(f, a, b, n):
    """Roots of f on [a, b] bracketed on a uniform n-cell grid."""
    x = np.linspace(a, b, n + 1)
    y = f(x)
    roots = []
    idx = np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]
    for i in idx:
        roots.append(optimize.brentq(lambda s: float(f(np.array([s]))[0]), x[i], x[i + 1], xtol=1e-15))
    return np.asarray(roots)


def rule_1d(a, b, cells, breaks=(), order=4):
    """Composite Gauss-Legendre on [a, b] with ``cells`` uniform cells plus breakpoints."""
    edges = np.linspace(a, b, cells + 1)
    br = np.asarray([p for p in np.atleast_1d(breaks) if a < p < b], dtype=float)
    edges = np.unique(np.concatenate([edges, br]))
    return composite_nodes(edges, order)


def _triangulate(poly: Polygon2D):
    """Ear-clipping triangulation; returns list of (3, 2) arrays."""
    v = [np.asarray(p) for p in poly.vertices]
    idx = list(range(len(v)))
    tris = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    guard = 0
    while len(idx) > 3 and guard < 10000:
        guard += 1
        for k in range(len(idx)):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            a, b, c = v[i0], v[i1], v[i2]
            if cross(a, b, c) <= 0:
                continue
            inside = False
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                p = v[j]
                if cross(a, b, p) >= 0 and cross(b, c, p) >= 0 and cross(c, a, p) >= 0:
                    inside = True
                    break
            if not inside:
                tris.append(np.array([a, b, c]))
                idx.pop(k)
                break
        else:
            raise GeometryError("triangulation failed")
    tris.append(np.array([v[i] for i in idx]))
    return tris


def rule_triangle(tri, n):
    """Collapsed (Duffy) tensor Gauss-Legendre rule on a triangle, n cells per axis."""
    cells = max(1, n // 4)
    s, ws = composite_nodes(np.linspace(0, 1, cells + 1), 4)
    U, V = np.meshgrid(s, s, indexing="ij")
    W = np.outer(ws, ws)
    # (u, v) in unit square -> barycentric (u, (1-u) v)
    p0, p1, p2 = tri
    a1 = U
    a2 = (1 - U) * V
    pts = p0 + a1[..., None] * (p1 - p0) + a2[..., None] * (p2 - p0)
    jac = abs((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]))
    return pts.reshape(-1, 2), (W * (1 - U) * jac).ravel()


def rule_2d(E, n):
    """Quadrature nodes/weights over a 2D region with about n points per axis."""
    if isinstance(E, Rectangle):
        x, wx = rule_1d(E.x0, E.x1, max(1, n // 4))
        y, wy = rule_1d(E.y0, E.y1, max(1, n // 4))
        X, Y = np.meshgrid(x, y, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], 1), np.outer(wx, wy).ravel()
    if isinstance(E, AxisBox):
        if E.d != 2:
            raise GeometryError("only 2D boxes are supported here")
        return rule_2d(Rectangle(-E.n, E.n, 0.0, E.h), n)
    if isinstance(E, Polygon2D):
        pts, ws = [], []
        for tri in _triangulate(E):
            p, w = rule_triangle(tri, n)
            pts.append(p)
            ws.append(w)
        return np.concatenate(pts), np.concatenate(ws)
    raise GeometryError(f"unsupported 2D region {E!r}")


def _measure(E):
    if isinstance(E, (Interval, AxisBox, Polygon2D)):
        return E.measure
    if isinstance(E, Rectangle):
        return E.area
    a, b = _region_1d(E)
    return b - a


def _rule(u: TestFunction, E, with_roots=False):
    if u.dim == 1:
        a, b = _region_1d(E)
        if not b > a:
            raise GeometryError("empty region")
        br = list(u.descriptor.breakpoints())
        if with_roots:
            br += list(_sign_change_roots(u.descriptor, a, b, u.grid))
        return rule_1d(a, b, u.grid, br)
    return rule_2d(E, u.grid)


# ---------------------------------------------------------------------------
# public operations


def average(u, E):
    """(1/|E|) int_E u."""
    u = _as_tf(u)
    m = _measure(E)
    if not m > 0:
        raise GeometryError("average over a region of zero measure")
    x, w = _rule(u, E)
    return float(np.dot(w, u(x)) / m)


def integral(u, E, func=None):
    u = _as_tf(u)
    x, w = _rule(u, E, with_roots=True)
    v = u(x)
    return float(np.dot(w, v if func is None else func(v)))


def l1_norm(u, E):
    """int_E |u|."""
    u = _as_tf(u)
    x, w = _rule(u, E, with_roots=True)
    return float(np.dot(w, np.abs(u(x))))


def mean_oscillation_integral(u, E, c=None):
    """int_E |u - c|, with c = (u)_E by default."""
    u = _as_tf(u)
    if c is None:
        c = average(u, E)
    shifted = TestFunction(Affine(u.descriptor, 1.0, -c), u.grid)
    return l1_norm(shifted, E)


def tv_numeric(u, E):
    """Total variation by quadrature of |u'| (plus jumps) or |grad u|."""
    u = _as_tf(u)
    d = u.descriptor
    if u.dim == 1:
        a, b = _region_1d(E)
        try:
            roots = _sign_change_roots(d.derivative, a, b, u.grid)
        except NotImplementedError as exc:
            raise DomainError("descriptor has no derivative; TV unsupported") from exc
        x, w = rule_1d(a, b, u.grid, list(d.breakpoints()) + list(roots))
        jumps = sum(abs(h) for loc, h in d.jumps() if a < loc < b)
        return float(np.dot(w, np.abs(d.derivative(x))) + jumps)
    x, w = rule_2d(E, u.grid)
    scale = float(np.max(np.abs(x))) + 1.0
    h = 1e-5 * scale
    e0, e1 = np.array([h, 0.0]), np.array([0.0, h])
    g0 = (d(x + e0) - d(x - e0)) / (2 * h)
    g1 = (d(x + e1) - d(x - e1)) / (2 * h)
    return float(np.dot(w, np.hypot(g0, g1)))


def tv_seminorm(u, E):
    """[u]_BV(E): the exact value when the function carries one, else tv_numeric."""
    u = _as_tf(u)
    if u.known_tv is not None:
        return float(u.known_tv)
    return tv_numeric(u, E)


def export_grid_csv(u, domain, path, grid=None):
    """Write one row per grid point: coordinates then value."""
    u = _as_tf(u)
    n = grid or (u.grid if u.dim == 1 else min(u.grid, 256))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if u.dim == 1:
            a, b = _region_1d(domain)
            x = np.linspace(a, b, n + 1)
            w.writerow(["x", "value"])
            for xi, vi in zip(x, u(x)):
                w.writerow([f"{xi:.17g}", f"{vi:.17g}"])
        else:
            if isinstance(domain, Rectangle):
                lo, hi = np.array([domain.x0, domain.y0]), np.array([domain.x1, domain.y1])
            elif isinstance(domain, AxisBox):
                lo, hi = domain.lower, domain.upper
            else:
                lo, hi = domain.bbox
            gx = np.linspace(lo[0], hi[0], n + 1)
            gy = np.linspace(lo[1], hi[1], n + 1)
            P = np.stack(np.meshgrid(gx, gy, indexing="ij"), -1).reshape(-1, 2)
            if hasattr(domain, "contains"):
                P = P[domain.contains(P)]
            w.writerow(["x1", "x2", "value"])
            for p, vi in zip(P, u(P)):
                w.writerow([f"{p[0]:.17g}", f"{p[1]:.17g}", f"{vi:.17g}"])
    return path
