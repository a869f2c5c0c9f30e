"""Domains, distance-to-boundary oracles, dyadic layers and graph flattening."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from .errors import GeometryError

_BOUNDARY_TOL = 1e-12


# ---------------------------------------------------------------------------
# simple domains


@dataclass(frozen=True)
class Interval:
    """The interval (0, 2D)."""

    D: float

    def __post_init__(self):
        if not (np.isfinite(self.D) and self.D > 0):
            raise GeometryError(f"Interval needs D > 0, got {self.D!r}")
        object.__setattr__(self, "D", float(self.D))

    dim = 1

    @property
    def bounds(self):
        return (0.0, 2.0 * self.D)

    @property
    def measure(self):
        return 2.0 * self.D

    @property
    def inradius(self):
        return self.D

    def contains(self, x, closed=True):
        x = np.asarray(x, dtype=float)
        tol = _BOUNDARY_TOL * self.D
        if closed:
            return (x >= -tol) & (x <= 2 * self.D + tol)
        return (x > 0) & (x < 2 * self.D)

    def distance(self, x):
        x = _check_inside(self, x)
        return np.maximum(np.minimum(x, 2.0 * self.D - x), 0.0)

    def to_dict(self):
        return {"variant": "interval", "D": self.D}


@dataclass(frozen=True)
class AxisBox:
    """The box (-n, n)^{d-1} x (0, h)."""

    d: int
    n: float
    h: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise GeometryError(f"AxisBox dimension must be >= 1, got {self.d!r}")
        if not (np.isfinite(self.n) and self.n > 0):
            raise GeometryError(f"AxisBox halfwidth must be positive, got {self.n!r}")
        if not (np.isfinite(self.h) and self.h > 0):
            raise GeometryError(f"AxisBox height must be positive, got {self.h!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "n", float(self.n))
        object.__setattr__(self, "h", float(self.h))

    @property
    def dim(self):
        return self.d

    @property
    def lower(self):
        return np.array([-self.n] * (self.d - 1) + [0.0])

    @property
    def upper(self):
        return np.array([self.n] * (self.d - 1) + [self.h])

    @property
    def measure(self):
        return (2 * self.n) ** (self.d - 1) * self.h

    @property
    def inradius(self):
        return min(self.n, self.h / 2) if self.d > 1 else self.h / 2

    def contains(self, x, closed=True):
        x = _points(x, self.d)
        tol = _BOUNDARY_TOL * max(self.n, self.h)
        lo, hi = self.lower, self.upper
        if closed:
            return np.all((x >= lo - tol) & (x <= hi + tol), axis=-1)
        return np.all((x > lo) & (x < hi), axis=-1)

    def distance(self, x):
        x = _check_inside(self, x)
        gaps = np.concatenate([x - self.lower, self.upper - x], axis=-1)
        return np.maximum(gaps.min(axis=-1), 0.0)

    def to_polygon(self):
        if self.d != 2:
            raise GeometryError("only 2D boxes convert to polygons")
        n, h = self.n, self.h
        return Polygon2D([(-n, 0.0), (n, 0.0), (n, h), (-n, h)])

    def to_dict(self):
        return {"variant": "box", "d": self.d, "n": self.n, "h": self.h}


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle [x0, x1] x [y0, y1] used as an integration region."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise GeometryError("empty rectangle")

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def to_dict(self):
        return {"variant": "rect", "x0": self.x0, "x1": self.x1, "y0": self.y0, "y1": self.y1}


def _points(x, d):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (d,):
        raise GeometryError(f"expected points with last axis {d}, got shape {x.shape}")
    return x


def _check_inside(dom, x):
    x = np.asarray(x, dtype=float) if dom.dim == 1 else _points(x, dom.dim)
    if np.any(~np.isfinite(x)):
        raise GeometryError("non-finite point")
    inside = dom.contains(x, closed=True)
    if not np.all(inside):
        bad = np.asarray(x)[~np.asarray(inside)]
        raise GeometryError(f"point outside the closed domain: {bad[:3].tolist()}")
    return x


# ---------------------------------------------------------------------------
# polygons


def _segment_distance(p, a, b):
    """Distance from points p (N,2) to segments a->b (M,2); returns (N,M)."""
    ab = b - a
    ap = p[:, None, :] - a[None, :, :]
    L2 = np.einsum("ij,ij->i", ab, ab)
    s = np.clip(np.einsum("nmj,mj->nm", ap, ab) / L2, 0.0, 1.0)
    proj = a[None] + s[..., None] * ab[None]
    return np.linalg.norm(p[:, None, :] - proj, axis=-1)


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True

    def on_seg(a, b, c):
        return (
            min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
        )

    return bool(
        (o1 == 0 and on_seg(p1, p2, q1))
        or (o2 == 0 and on_seg(p1, p2, q2))
        or (o3 == 0 and on_seg(q1, q2, p1))
        or (o4 == 0 and on_seg(q1, q2, p2))
    )


@dataclass(frozen=True)
class Polygon2D:
    """Simple polygon with counterclockwise vertices."""

    vertices: tuple

    dim = 2

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise GeometryError("polygon needs at least 3 vertices in the plane")
        if not np.all(np.isfinite(v)):
            raise GeometryError("non-finite polygon vertex")
        object.__setattr__(self, "vertices", tuple(map(tuple, v.tolist())))
        if self.signed_area <= 0:
            raise GeometryError("polygon must be counterclockwise with positive area")
        n = len(v)
        for i in range(n):
            if np.allclose(v[i], v[(i + 1) % n]):
                raise GeometryError("repeated polygon vertex")
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                    raise GeometryError("polygon is not simple")

    @classmethod
    def unit_square(cls):
        return cls([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])

    @property
    def array(self):
        return np.asarray(self.vertices)

    @property
    def signed_area(self):
        v = np.asarray(self.vertices)
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def measure(self):
        return self.signed_area

    @property
    def perimeter(self):
        v = self.array
        return float(np.sum(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))

    @property
    def bbox(self):
        v = self.array
        return v.min(axis=0), v.max(axis=0)

    @property
    def is_convex(self):
        v = self.array
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        return bool(np.all(cross >= -1e-14 * np.max(np.abs(v)) ** 2))

    def edges(self):
        """(start, end) arrays of the edges."""
        v = self.array
        return v, np.roll(v, -1, axis=0)

    def edge_frames(self):
        """Per edge: start a, unit tangent t, inward unit normal n, length."""
        a, b = self.edges()
        e = b - a
        L = np.linalg.norm(e, axis=1)
        t = e / L[:, None]
        n = np.stack([-t[:, 1], t[:, 0]], axis=1)  # left normal is inward for CCW
        return a, t, n, L

    @property
    def inradius(self):
        # max of the distance function, over a coarse grid refined once
        lo, hi = self.bbox
        g = np.stack(np.meshgrid(np.linspace(lo[0], hi[0], 81), np.linspace(lo[1], hi[1], 81)), -1)
        p = g.reshape(-1, 2)
        p = p[self.contains(p)]
        return float(self.distance(p).max())

    def contains(self, x, closed=True):
        p = _points(x, 2)
        flat = p.reshape(-1, 2)
        a, b = self.edges()
        # crossing number
        y = flat[:, 1][:, None]
        xq = flat[:, 0][:, None]
        ya, yb = a[None, :, 1], b[None, :, 1]
        xa, xb = a[None, :, 0], b[None, :, 0]
        cond = (ya > y) != (yb > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = xa + (y - ya) * (xb - xa) / (yb - ya)
        inside = np.sum(cond & (xq < xint), axis=1) % 2 == 1
        if closed:
            scale = max(1.0, float(np.max(np.abs(self.array))))
            dist = _segment_distance(flat, a, b).min(axis=1)
            inside = inside | (dist <= _BOUNDARY_TOL * scale)
        return inside.reshape(p.shape[:-1])

    def distance(self, x):
        p = _check_inside(self, x)
        flat = p.reshape(-1, 2)
        a, b = self.edges()
        d = _segment_distance(flat, a, b).min(axis=1)
        return d.reshape(p.shape[:-1])

    def to_dict(self):
        return {"variant": "polygon", "vertices": [list(v) for v in self.vertices]}


# ---------------------------------------------------------------------------
# Lipschitz graphs


_GRAPH_KINDS = ("zero", "abs", "linear", "sine", "polyline")


@dataclass(frozen=True)
class LipschitzGraph:
    """A Lipschitz function gamma: R -> R from a small closed family.

    kinds: zero; abs (scale*|x - shift|); linear (slope*x + offset);
    sine (amplitude*sin(freq*x)); polyline (knots xs, ys, extended constantly).
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in _GRAPH_KINDS:
            raise GeometryError(f"unknown graph kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(self.params))
        if self.kind == "polyline":
            xs, ys = self._knots()
            if len(xs) < 2 or np.any(np.diff(xs) <= 0):
                raise GeometryError("polyline knots must be strictly increasing")

    # constructors
    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def abs(cls, scale=1.0, shift=0.0):
        return cls("abs", (float(scale), float(shift)))

    @classmethod
    def linear(cls, slope, offset=0.0):
        return cls("linear", (float(slope), float(offset)))

    @classmethod
    def sine(cls, amplitude, freq=1.0):
        return cls("sine", (float(amplitude), float(freq)))

    @classmethod
    def polyline(cls, xs, ys):
        xs = tuple(float(x) for x in xs)
        ys = tuple(float(y) for y in ys)
        if len(xs) != len(ys):
            raise GeometryError("polyline needs matching knot arrays")
        return cls("polyline", xs + ys)

    def _knots(self):
        k = len(self.params) // 2
        return np.asarray(self.params[:k]), np.asarray(self.params[k:])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.params
        if k == "zero":
            return np.zeros_like(x)
        if k == "abs":
            return p[0] * np.abs(x - p[1])
        if k == "linear":
            return p[0] * x + p[1]
        if k == "sine":
            return p[0] * np.sin(p[1] * x)
        xs, ys = self._knots()
        return np.interp(x, xs, ys)

    @property
    def lipschitz(self):
        """Exact Lipschitz constant of the descriptor."""
        k, p = self.kind, self.params
        if k == "zero":
            return 0.0
        if k in ("abs", "linear"):
            return abs(p[0])
        if k == "sine":
            return abs(p[0] * p[1])
        xs, ys = self._knots()
        return float(np.max(np.abs(np.diff(ys) / np.diff(xs))))

    def kinks(self):
        if self.kind == "abs":
            return np.array([self.params[1]])
        if self.kind == "polyline":
            return self._knots()[0]
        return np.empty(0)

    def to_dict(self):
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], tuple(d.get("params", ())))


@dataclass(frozen=True)
class GraphDomain:
    """Epigraph {x_2 > gamma(x_1)} in the plane, sampled over the window box.

    ``box = (a, b, H)`` is the window a < x_1 < b, 0 < x_2 - gamma(x_1) < H used
    for sampling and for the Lipschitz check.
    """

    gamma: LipschitzGraph
    M: float
    box: tuple = (-1.0, 1.0, 1.0)
    samples: int = 20001

    dim = 2

    def __post_init__(self):
        a, b, H = map(float, self.box)
        if not (b > a and H > 0):
            raise GeometryError("graph window needs a < b and H > 0")
        object.__setattr__(self, "box", (a, b, H))
        if not (np.isfinite(self.M) and self.M >= 0):
            raise GeometryError("Lipschitz constant must be nonnegative")
        # sampled Lipschitz check on the widened window
        pad = H + 1.0
        x = np.linspace(a - pad, b + pad, self.samples)
        slope = np.abs(np.diff(self.gamma(x)) / np.diff(x))
        if np.max(slope, initial=0.0) > self.M * (1 + 1e-9) + 1e-12:
            raise GeometryError(
                f"gamma has sampled slope {np.max(slope):.6g} above M = {self.M}"
            )

    @property
    def C(self):
        """Bilipschitz constant sqrt(2 M^2 + 2) of the flattening map."""
        return math.sqrt(2 * self.M**2 + 2)

    def contains(self, x, closed=True):
        p = _points(x, 2)
        g = self.gamma(p[..., 0])
        if closed:
            return p[..., 1] >= g - _BOUNDARY_TOL * (1 + np.abs(g))
        return p[..., 1] > g

    def distance(self, x):
        p = _check_inside(self, x)
        flat = p.reshape(-1, 2)
        out = np.array([self._distance_one(q) for q in flat])
        return out.reshape(p.shape[:-1])

    def _distance_one(self, q, n_dense=2001):
        x1, x2 = float(q[0]), float(q[1])
        xi = x2 - float(self.gamma(x1))
        if xi <= 0:
            return 0.0
        # the nearest boundary point has |y - x1| <= xi
        y = np.linspace(x1 - xi, x1 + xi, n_dense)
        kinks = self.gamma.kinks()
        kinks = kinks[(kinks >= x1 - xi) & (kinks <= x1 + xi)]
        y = np.concatenate([y, kinks])
        d2 = (y - x1) ** 2 + (x2 - self.gamma(y)) ** 2
        best = float(d2.min())
        i = int(np.argmin(d2[:n_dense]))
        h = 2 * xi / (n_dense - 1)
        lo, hi = x1 - xi + max(i - 1, 0) * h, x1 - xi + min(i + 1, n_dense - 1) * h

        def f(s):
            return (s - x1) ** 2 + (x2 - float(self.gamma(s))) ** 2

        res = optimize.minimize_scalar(
            f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14 * (1 + abs(x1)) + 1e-15 * xi}
        )
        if res.success:
            best = min(best, float(res.fun))
        return math.sqrt(best)

    def sample_points(self, count, rng, log_depth=True):
        """Random points of the window: uniform x_1, xi_d log-uniform (or uniform)."""
        a, b, H = self.box
        x1 = rng.uniform(a, b, count)
        if log_depth:
            xi = H * np.exp(rng.uniform(math.log(1e-6), 0.0, count))
        else:
            xi = rng.uniform(0, H, count) + 1e-12
        return np.stack([x1, xi + self.gamma(x1)], axis=1)

    def to_dict(self):
        a, b, H = self.box
        xs = np.linspace(a, b, 65)
        return {
            "variant": "graph",
            "gamma": self.gamma.to_dict(),
            "M": self.M,
            "box": [a, b, H],
            "polyline_samples": [[float(x), float(y)] for x, y in zip(xs, self.gamma(xs))],
        }


def domain_from_dict(d):
    v = d["variant"]
    if v == "interval":
        return Interval(d["D"])
    if v == "box":
        return AxisBox(d["d"], d["n"], d["h"])
    if v == "polygon":
        return Polygon2D(d["vertices"])
    if v == "graph":
        return GraphDomain(LipschitzGraph.from_dict(d["gamma"]), d["M"], tuple(d["box"]))
    if v == "rect":
        return Rectangle(d["x0"], d["x1"], d["y0"], d["y1"])
    raise GeometryError(f"unknown domain variant {v!r}")


def distance_to_boundary(domain, x):
    """delta_Omega(x); scalar in, scalar out for 1D domains and single points."""
    out = domain.distance(x)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# flattening


def graph_flatten(gamma, x):
    """F(x) = (x', x_d - gamma(x'))."""
    x = _points(x, 2)
    return np.stack([x[..., 0], x[..., 1] - gamma(x[..., 0])], axis=-1)


def graph_unflatten(gamma, xi):
    """G(xi) = (xi', xi_d + gamma(xi'))."""
    xi = _points(xi, 2)
    return np.stack([xi[..., 0], xi[..., 1] + gamma(xi[..., 0])], axis=-1)


def bilipschitz_ratios(gamma, pairs, rng, window=(-2.0, 2.0, 2.0)):
    """|F(x) - F(y)| / |x - y| for random pairs in the window above the graph."""
    a, b, H = window
    x1 = rng.uniform(a, b, (2, pairs))
    x2 = gamma(x1) + rng.uniform(-H, H, (2, pairs))
    p = np.stack([x1[0], x2[0]], -1)
    q = np.stack([x1[1], x2[1]], -1)
    num = np.linalg.norm(graph_flatten(gamma, p) - graph_flatten(gamma, q), axis=1)
    den = np.linalg.norm(p - q, axis=1)
    keep = den > 0
    return num[keep] / den[keep]


def delta_equivalence_check(domain: GraphDomain, samples=2000, seed=0):
    """Empirical (min, max) of delta_Omega(x) / xi_d over random window points."""
    rng = np.random.default_rng(seed)
    p = domain.sample_points(samples, rng)
    xi = graph_flatten(domain.gamma, p)[:, 1]
    r = domain.distance(p) / xi
    return float(r.min()), float(r.max())


# ---------------------------------------------------------------------------
# dyadic layers


@dataclass(frozen=True)
class DyadicLayer:
    """Slab A_k = (-n, n)^{d-1} x [3^k, 3^{k+1}) cut into cubes of side 2*3^k."""

    k: int
    n: int
    d: int
    corners: np.ndarray = field(repr=False)
    parents: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def lo(self):
        return 3.0**self.k

    @property
    def hi(self):
        return 3.0 ** (self.k + 1)

    @property
    def side(self):
        return 2.0 * 3.0**self.k

    @property
    def sigma(self):
        return len(self.corners)

    def centers(self):
        return self.corners + 0.5 * self.side


def _layer_corners(n, d, k):
    side = 2.0 * 3.0**k
    per_axis = int(round(n * 3.0 ** (-k)))
    ticks = -n + side * np.arange(per_axis)
    if d == 1:
        return np.array([[3.0**k]])
    grids = np.meshgrid(*([ticks] * (d - 1)), indexing="ij")
    xs = np.stack([g.ravel() for g in grids], axis=1)
    return np.concatenate([xs, np.full((len(xs), 1), 3.0**k)], axis=1)


def dyadic_layers(n, d, ell):
    """Layers k = ell..-1 of (-n, n)^{d-1} x [3^ell, 1)."""
    if int(n) != n or n < 1:
        raise GeometryError("n must be a positive integer")
    if int(ell) != ell or ell > -1:
        raise GeometryError("ell must be an integer <= -1")
    if d < 1:
        raise GeometryError("d must be >= 1")
    n, d, ell = int(n), int(d), int(ell)
    corners = {k: _layer_corners(n, d, k) for k in range(ell, 0)}
    layers = []
    for k in range(ell, 0):
        parents = None
        if k < -1:
            up = corners[k + 1]
            side_up = 2.0 * 3.0 ** (k + 1)
            c = corners[k][:, :-1] + 3.0**k
            if d == 1:
                parents = np.zeros(len(c), dtype=int)
            else:
                # cube of layer k+1 whose x' range contains the center
                idx = np.floor((c + n) / side_up).astype(int)
                per_axis = int(round(n * 3.0 ** (-(k + 1))))
                idx = np.clip(idx, 0, per_axis - 1)
                parents = np.ravel_multi_index(tuple(idx.T), (per_axis,) * (d - 1))
                assert np.allclose(up[parents, :-1], -n + side_up * idx)
        layers.append(DyadicLayer(k, n, d, corners[k], parents))
    return layers
