"""Iterated-logarithm weights L_m, lattice majorants Y_m and related scalar checks.

Everything is evaluated in log space. With z_0 = -ln t and z_j = log1p(z_{j-1})
one has L_j(t) = 1/(1 + z_{j-1}) = exp(-z_j), so no intermediate quantity
overflows even when t underflows to a subnormal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError, UnsupportedTailError


# ---------------------------------------------------------------------------
# tails and the chain type


@dataclass(frozen=True)
class Square:
    """Tail factor L_m^2."""

    def to_dict(self):
        return {"kind": "square"}


@dataclass(frozen=True)
class Power:
    """Tail factor L_m^beta."""

    beta: float

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise DomainError(f"Power tail needs beta > 0, got {self.beta!r}")

    def to_dict(self):
        return {"kind": "power", "beta": float(self.beta)}


@dataclass(frozen=True)
class RhoStar:
    """Tail factor L_m^{1 + rho*}, which equals L_m * L_{m+1}^beta pointwise."""

    beta: float

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 1):
            raise DomainError(f"RhoStar tail needs beta > 1, got {self.beta!r}")

    def to_dict(self):
        return {"kind": "rhostar", "beta": float(self.beta)}


Tail = Union[Square, Power, RhoStar]


def tail_from_dict(d):
    kind = d["kind"]
    if kind == "square":
        return Square()
    if kind == "power":
        return Power(float(d["beta"]))
    if kind == "rhostar":
        return RhoStar(float(d["beta"]))
    raise DomainError(f"unknown tail kind {kind!r}")


@dataclass(frozen=True)
class WeightChain:
    """The weight L_1(t/R) ... L_{m-1}(t/R) * tail(L_m(t/R))."""

    m: int
    R: float
    tail: Tail = Square()

    def __post_init__(self):
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise DomainError(f"chain length m must be an integer >= 1, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        if not (np.isfinite(self.R) and self.R > 0):
            raise DomainError(f"scale R must be positive, got {self.R!r}")
        object.__setattr__(self, "R", float(self.R))
        if not isinstance(self.tail, (Square, Power, RhoStar)):
            raise DomainError(f"unsupported tail {self.tail!r}")

    def __call__(self, t):
        return eval_chain(self, t)

    @property
    def depth(self):
        """Number of z-levels needed to evaluate the chain."""
        return self.m + 1 if isinstance(self.tail, RhoStar) else self.m

    def log_from_z(self, z0):
        """ln(chain) as a function of z_0 = -ln(t/R) >= 0 (array friendly)."""
        z = _z_levels(np.asarray(z0, dtype=float), self.depth)
        out = np.zeros_like(z[0])
        for j in range(1, self.m):
            out -= z[j]
        tail = self.tail
        if isinstance(tail, Square):
            out -= 2.0 * z[self.m]
        elif isinstance(tail, Power):
            out -= tail.beta * z[self.m]
        else:
            out -= z[self.m] + tail.beta * z[self.m + 1]
        return out

    def to_dict(self):
        return {"m": self.m, "R": self.R, "tail": self.tail.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["m"]), float(d["R"]), tail_from_dict(d["tail"]))


# ---------------------------------------------------------------------------
# core recursion


def _z_levels(z0, depth):
    """List [z_0, ..., z_depth] from z_0 by z_j = log1p(z_{j-1})."""
    z = [z0]
    for _ in range(depth):
        z.append(np.log1p(z[-1]))
    return z


def _as_unit(t, lo_open=False, hi_open=False, name="t"):
    t = np.asarray(t, dtype=float)
    bad = ~np.isfinite(t) | (t < 0) | (t > 1)
    if lo_open:
        bad |= t <= 0
    if hi_open:
        bad |= t >= 1
    if np.any(bad):
        lo = "(" if lo_open else "["
        hi = ")" if hi_open else "]"
        raise DomainError(f"{name} must lie in {lo}0,1{hi}; got {t[bad].ravel()[:3]}")
    return t


def _z0(t):
    with np.errstate(divide="ignore"):
        return -np.log(t)


def _ret(x, like):
    return float(x) if np.ndim(like) == 0 else x


def eval_L_sequence(m, t):
    """Array of shape (m, *t.shape) holding L_1(t), ..., L_m(t)."""
    _check_m(m)
    t = _as_unit(t)
    z = _z_levels(_z0(t), m - 1)
    return np.stack([1.0 / (1.0 + zj) for zj in z])


def eval_L(m, t):
    """L_m(t) for t in [0, 1], with L_m(0) = 0 and L_m(1) = 1."""
    _check_m(m)
    tt = _as_unit(t)
    z = _z_levels(_z0(tt), m - 1)
    return _ret(1.0 / (1.0 + z[-1]), t)


def eval_L_derivative(m, t):
    """Closed-form derivative (1/t) L_1 ... L_{m-1} L_m^2 on (0, 1]."""
    _check_m(m)
    tt = _as_unit(t, lo_open=True)
    L = eval_L_sequence(m, tt)
    val = np.prod(L[:-1], axis=0) * L[-1] ** 2 / tt
    return _ret(val, t)


def _check_m(m):
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise DomainError(f"m must be an integer >= 1, got {m!r}")


def eval_chain(chain: WeightChain, t):
    """Value of the chain at t in (0, R]; lies in (0, 1]."""
    tt = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(tt) | (tt <= 0) | (tt > chain.R)):
        raise DomainError(f"t must lie in (0, R={chain.R}]")
    z0 = -np.log(tt / chain.R)
    z0 = np.maximum(z0, 0.0)
    return _ret(np.exp(chain.log_from_z(z0)), t)


def chain_antiderivative(chain: WeightChain, T):
    """Exact value of int_0^T (1/x) chain(x) dx for the Square tail, i.e. L_m(T/R)."""
    if not isinstance(chain.tail, Square):
        raise UnsupportedTailError("chain_antiderivative is defined for the Square tail only")
    T = float(T)
    if not (0 < T <= chain.R):
        raise DomainError(f"T must lie in (0, R={chain.R}]")
    return eval_L(chain.m, min(T / chain.R, 1.0))


def chain_tail_mass(chain: WeightChain, x):
    """Closed form of int_0^x (1/y) chain(y) dy for any tail, possibly +inf.

    Writing the integral in z_m (Power/Square) or z_{m+1} (RhoStar) it becomes
    int exp(-(beta-1) z) dz, finite exactly when beta > 1.
    """
    xx = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(xx) | (xx < 0) | (xx > chain.R)):
        raise DomainError(f"x must lie in [0, R={chain.R}]")
    tail = chain.tail
    if isinstance(tail, Square):
        beta, level = 2.0, chain.m
    elif isinstance(tail, Power):
        beta, level = tail.beta, chain.m
    else:
        beta, level = tail.beta, chain.m + 1
    if beta <= 1.0:
        out = np.where(xx > 0, np.inf, 0.0)
        return _ret(out, x)
    z = _z_levels(np.maximum(_z0(xx / chain.R), 0.0), level)[-1]
    out = np.exp(-(beta - 1.0) * z) / (beta - 1.0)
    return _ret(out, x)


_CASCADE_TOP = 1e300


def _exponents(chain):
    """e_j with chain = exp(-sum_j e_j z_j), j = 1..depth."""
    e = [1.0] * (chain.m - 1)
    tail = chain.tail
    if isinstance(tail, Square):
        e.append(2.0)
    elif isinstance(tail, Power):
        e.append(float(tail.beta))
    else:
        e.extend([1.0, float(tail.beta)])
    return e


def chain_tail_mass_quadrature(chain: WeightChain, x, rtol=1e-10):
    """Adaptive-quadrature value of int_0^x (1/y) chain(y) dy.

    Independent of the closed form: the integral is taken in z_0 = -ln(y/R)
    on [z_0(x), 1e300] with a further ln substitution, and whatever lies beyond
    is re-expressed in z_1 = log1p(z_0) (where dz_1 = L_1 dz_0), and so on
    until the last level, whose integrand decays exponentially.
    Returns (value, abs_error_estimate).
    """
    x = float(x)
    if not (0 < x <= chain.R):
        raise DomainError(f"x must lie in (0, R={chain.R}]")
    e = _exponents(chain)
    depth = len(e)
    if e[-1] <= 1.0:
        return math.inf, 0.0
    start = max(-math.log(x / chain.R), 0.0)
    total, err = 0.0, 0.0
    for level in range(depth + 1):
        # density in z_level: coefficients e_j - 1 for j <= level, e_j above
        coef = [e[j - 1] - (1.0 if j <= level else 0.0) for j in range(level, depth + 1) if j >= 1]
        offset = 1 if level == 0 else 0

        def log_density(zl, coef=coef, offset=offset):
            z = zl
            out = 0.0
            if offset:
                z = math.log1p(z)
            for i, c in enumerate(coef):
                if i:
                    z = math.log1p(z)
                out -= c * z
            return out

        opts = dict(epsabs=0.0, epsrel=rtol, limit=500)
        if level == depth:
            val, er = integrate.quad(lambda zl: math.exp(log_density(zl)), start, np.inf, **opts)
        elif start >= _CASCADE_TOP:
            start = math.log1p(start)
            continue
        else:
            vtop = math.log(_CASCADE_TOP)
            g = lambda v: math.exp(log_density(math.exp(v)) + v)  # noqa: E731
            if start < 1.0:
                v0, e0 = integrate.quad(lambda zl: math.exp(log_density(zl)), start, 1.0, **opts)
                v1, e1 = integrate.quad(g, 0.0, vtop, **opts)
                val, er = v0 + v1, e0 + e1
            else:
                val, er = integrate.quad(g, math.log(start), vtop, **opts)
            start = math.log1p(_CASCADE_TOP)
        if not np.isfinite(val):
            raise QuadratureError(f"tail quadrature failed at level {level}")
        total += val
        err += er
    if err > 1e3 * rtol * abs(total) + 1e-300:
        raise QuadratureError(f"tail quadrature stalled: value {total}, error {err}")
    return total, err


# ---------------------------------------------------------------------------
# lattice sequence Y_m(k)


def _check_k(k):
    if isinstance(k, bool) or int(k) != k or k > -1:
        raise DomainError(f"lattice index k must be an integer <= -1, got {k!r}")


def _y_levels(m, k):
    """[y_1, ..., y_m] with Y_1 = exp(-y_1) = 1/(-k) and y_j = log1p(y_{j-1})."""
    y = [math.log(-k)]
    for _ in range(m - 1):
        y.append(math.log1p(y[-1]))
    return y


def eval_Y(m, k):
    """Y_1(k) = 1/(-k), Y_m(k) = 1/(1 - ln Y_{m-1}(k))."""
    _check_m(m)
    _check_k(k)
    if m == 1:
        return 1.0 / (-k)
    return 1.0 / (1.0 + _y_levels(m - 1, k)[-1])


def Y_gap(m, k):
    """Y_m(k) - Y_m(k-1) without cancellation (m >= 2)."""
    _check_m(m)
    _check_k(k)
    if m < 2:
        raise DomainError("Y_gap needs m >= 2")
    a = _y_levels(m - 1, k)
    b = _y_levels(m - 1, k - 1)
    d = math.log1p(1.0 / (-k))  # y_1(k-1) - y_1(k)
    for j in range(m - 2):
        d = math.log1p(d / (1.0 + a[j]))
    return d / ((1.0 + a[-1]) * (1.0 + b[-1]))


def check_Y_gap(m, k):
    """Both sides of Y_m(k) - Y_m(k-1) >= Y_1(k)...Y_{m-1}(k) Y_m(k)^2 / 2^{m+1}."""
    lhs = Y_gap(m, k)
    ys = [eval_Y(j, k) for j in range(1, m + 1)]
    rhs = math.prod(ys[:-1]) * ys[-1] ** 2 / 2.0 ** (m + 1)
    return lhs, rhs, bool(lhs >= rhs)


def check_L_below_Y(m, k, R, samples=100):
    """True iff L_m(x/R) < Y_m(k) at ``samples`` points of A_k = [3^k, 3^{k+1})."""
    _check_m(m)
    _check_k(k)
    if not R > 1:
        raise DomainError(f"R must exceed 1, got {R!r}")
    if samples < 2:
        raise DomainError("need at least 2 samples")
    lo = 3.0**k
    hi = np.nextafter(3.0 ** (k + 1), 0.0)
    x = np.linspace(lo, hi, int(samples))
    return bool(np.all(eval_L(m, x / R) < eval_Y(m, k)))


# ---------------------------------------------------------------------------
# estimates used by the corollaries


def theta_domination_constant(theta):
    """C(theta) with L_m^theta <= C(theta) L_{m+1}^2 on (0, 1).

    For theta > 1 the exponent is split as n + r with r in (0, 1] and the
    constant of r is used.
    """
    theta = float(theta)
    if not (np.isfinite(theta) and theta > 0):
        raise DomainError(f"theta must be positive, got {theta!r}")
    r = theta if theta <= 1 else theta - (math.ceil(theta) - 1)
    return (2.0 / r) ** 2 * math.exp(r - 2.0)


def theta_domination_sides(m, theta, t):
    """(L_m^theta(t), C(theta) L_{m+1}^2(t)) on arrays of t in (0, 1)."""
    t = _as_unit(t, lo_open=True, hi_open=True)
    c = theta_domination_constant(theta)
    L = eval_L_sequence(m + 1, t)
    return L[m - 1] ** theta, c * L[m] ** 2


def check_theta_domination(m, theta, t_grid):
    """True iff L_m^theta <= C(theta) L_{m+1}^2 at every grid point.

    The bound is attained at one interior point, so a relative slack of 1e-12
    absorbs rounding there.
    """
    lhs, rhs = theta_domination_sides(m, theta, t_grid)
    return bool(np.all(lhs <= rhs * (1.0 + 1e-12)))


def check_L_lower_bound_at_inv_R(m, R):
    """(L_m(1/R), 1/((m+1)R), holds) for R > 1."""
    if not R > 1:
        raise DomainError(f"R must exceed 1, got {R!r}")
    value = eval_L(m, 1.0 / R)
    bound = 1.0 / ((m + 1) * R)
    return value, bound, bool(value >= bound)


def eval_rho_star(m, beta, t):
    """rho*(t) = beta ln(1 - ln L_m(t)) / ln(1 - ln L_{m-1}(t)), L_0(t) = t."""
    _check_m(m)
    if not (np.isfinite(beta) and beta > 0):
        raise DomainError(f"beta must be positive, got {beta!r}")
    tt = _as_unit(t, lo_open=True, hi_open=True)
    z = _z_levels(_z0(tt), m + 1)
    return _ret(beta * z[m + 1] / z[m], t)
