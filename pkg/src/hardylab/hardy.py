"""Boundary-weighted Hardy integrals and the verifiers built on them.

The weight is delta^{-s} times the iterated-log chain evaluated at delta/R
(s = 1 for the BV inequality).  Every integrator grades its nodes toward the
boundary in cells of ratio 3 with Gauss-Legendre in ln(delta), and closes the
innermost layer with the exact tail mass of the chain times the boundary trace
of |u - c|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import stats

from ._quad import composite_nodes, gauss_legendre
from .errors import DivergenceError, DomainError, GeometryError, QuadratureError
from .functions import (
    SmoothBump,
    TensorProfile,
    TestFunction,
    _as_tf,
    _region_1d,
    _sign_change_roots,
    average,
    l1_norm,
    tv_seminorm,
)
from .geometry import AxisBox, Interval, Polygon2D, Rectangle
from .logweights import (
    Power,
    RhoStar,
    Square,
    WeightChain,
    chain_tail_mass,
    eval_L,
    theta_domination_constant,
)
from .seminorms import bbm_constant, gagliardo, measured_poincare_constant

BV = "BV"
_LN3 = math.log(3.0)
_GRADED_LAYERS = 40
_NODES = 12
DEFAULT_CEILING_FACTOR = 1e6


# ---------------------------------------------------------------------------
# cases and reports


@dataclass(frozen=True)
class HardyCase:
    """One weighted integral: u, the domain, the weight chain and the exponent s.

    ``region`` restricts the integration to a subset of the domain (an interval
    in 1D, a rectangle touching the flat bottom of an AxisBox in 2D).  ``eps``
    drops the collar {delta < eps}.
    """

    u: TestFunction
    domain: object
    chain: WeightChain
    s: Union[float, str] = BV
    centered: bool = True
    alpha: Optional[float] = None
    region: Optional[object] = None
    eps: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "u", _as_tf(self.u))
        if self.s != BV and not (isinstance(self.s, (int, float)) and 0 < self.s < 1):
            raise DomainError(f"s must lie in (0, 1) or be 'BV', got {self.s!r}")
        if isinstance(self.domain, AxisBox) and self.domain.d == 1:
            raise GeometryError("use Interval for one-dimensional domains")
        if self.u.dim != getattr(self.domain, "dim", None):
            raise GeometryError("function and domain dimensions differ")
        if not self.domain.inradius < self.chain.R:
            raise DomainError(
                f"delta reaches {self.domain.inradius} >= R = {self.chain.R}; need delta < R on the domain"
            )
        if self.eps is not None and not self.eps > 0:
            raise DomainError("collar cutoff eps must be positive")

    @property
    def exponent(self):
        return 1.0 if self.s == BV else float(self.s)

    def with_chain(self, chain):
        return HardyCase(self.u, self.domain, chain, self.s, self.centered, self.alpha, self.region, self.eps)

    def to_dict(self):
        reg = self.region
        if isinstance(reg, Rectangle):
            reg = reg.to_dict()
        elif reg is not None:
            reg = list(map(float, reg))
        return {
            "u": self.u.to_dict(),
            "domain": self.domain.to_dict(),
            "chain": self.chain.to_dict(),
            "s": self.s,
            "centered": self.centered,
            "alpha": self.alpha,
            "region": reg,
            "eps": self.eps,
        }


@dataclass
class VerificationReport:
    lhs: float
    rhs_components: dict
    measured_constant: float
    paper_constant_form: str
    passed: bool
    oracle: str
    m: Optional[int] = None
    s: Union[float, str, None] = None
    R: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "m": self.m,
            "s": self.s,
            "R": self.R,
            "alpha": self.alpha,
            "beta": self.beta,
            "lhs": self.lhs,
            "rhs_components": dict(self.rhs_components),
            "measured_constant": self.measured_constant,
            "paper_constant_form": self.paper_constant_form,
            "pass": self.passed,
            "oracle": self.oracle,
            "extra": dict(self.extra),
        }


# ---------------------------------------------------------------------------
# weight evaluation


def _log_weight(chain, nu, s):
    """ln(nu^{1-s} chain(nu)): the weight in the variable ln(nu)."""
    z0 = np.maximum(math.log(chain.R) - np.log(nu), 0.0)
    return (1.0 - s) * np.log(nu) + chain.log_from_z(z0)


def _depth_layers(s):
    """Layers of ratio 3 below the top cell; the s < 1 tail is below e^{-30}."""
    if s >= 1.0:
        return _GRADED_LAYERS
    return max(_GRADED_LAYERS, int(math.ceil(30.0 / ((1.0 - s) * _LN3))))


def _log_rule(lo, hi, breaks=(), n=_NODES):
    """Nodes and d(nu) weights on [lo, hi]: GL in ln(nu), ratio-3 cells, split at breaks."""
    vlo, vhi = math.log(lo), math.log(hi)
    ncell = max(1, int(math.ceil((vhi - vlo) / _LN3)))
    edges = np.linspace(vlo, vhi, ncell + 1)
    b = np.log([x for x in breaks if lo < x < hi])
    edges = np.unique(np.concatenate([edges, b]))
    v, wv = composite_nodes(edges, n)
    nu = np.exp(v)
    return nu, wv * nu


def _tail(chain, s, nu0, trace):
    """Contribution of (0, nu0): |u - c| is frozen at its boundary trace."""
    if trace == 0.0:
        return 0.0
    if s < 1.0:
        return 0.0  # bounded by trace * nu0^{1-s}/(1-s) < trace * e^{-30}
    mass = float(chain_tail_mass(chain, nu0))
    return trace * mass


def _check_ceiling(value, ceiling, what):
    if ceiling is not None and value > ceiling:
        raise DivergenceError(f"{what}: value {value:.6g} exceeds the divergence ceiling {ceiling:.6g}", value)


# ---------------------------------------------------------------------------
# integrators


def _lhs_interval(case, c, n):
    u = case.u
    dom = case.domain
    D = dom.D
    a, b = (0.0, 2 * D) if case.region is None else _region_1d(case.region)
    if not (0.0 <= a < b <= 2 * D):
        raise GeometryError("integration region must lie inside the interval")
    s = case.exponent
    chain = case.chain
    d = u.descriptor
    f = lambda x: d(x) - c  # noqa: E731
    xbreaks = list(d.breakpoints()) + list(_sign_change_roots(f, a, b, u.grid))
    total, tail = 0.0, 0.0
    # left half: nu = x; right half: nu = 2D - x
    for lo_x, hi_x, left in ((a, min(b, D), True), (max(a, D), b, False)):
        if not hi_x > lo_x:
            continue
        to_x = (lambda v: v) if left else (lambda v: 2 * D - v)
        if left:
            nlo, nhi = lo_x, hi_x
            nb = xbreaks
        else:
            nlo, nhi = 2 * D - hi_x, 2 * D - lo_x
            nb = [2 * D - x for x in xbreaks]
        touches = nlo == 0.0
        top = nhi
        if case.eps is not None:
            nlo = max(nlo, case.eps)
            touches = False
            if nlo >= nhi:
                continue
        if touches:
            nlo = top * 3.0 ** (-_depth_layers(s))
        nu, w = _log_rule(nlo, nhi, nb, n)
        vals = np.abs(f(to_x(nu))) * np.exp(_log_weight(chain, nu, s) - np.log(nu))
        total += float(np.dot(w, vals))
        if touches:
            trace = abs(float(f(np.array([to_x(0.0)]))[0]))
            tail += _tail(chain, s, nlo, trace)
    return total, tail


def _nu_max_pieces(poly):
    """Per edge: (a, t, n, L, rows (c_i, alpha_i, 1 - beta_i)) describing nu_max(tau)."""
    a, t, nrm, L = poly.edge_frames()
    out = []
    for j in range(len(a)):
        rows = []
        for i in range(len(a)):
            if i == j:
                continue
            beta = float(np.dot(nrm[i], nrm[j]))
            ci = float(np.dot(nrm[i], a[j] - a[i]))
            al = float(np.dot(nrm[i], t[j]))
            rows.append((ci, al, 1.0 - beta))
        out.append((a[j], t[j], nrm[j], float(L[j]), np.array(rows)))
    return out


def _nu_max(rows, tau):
    tau = np.asarray(tau, dtype=float)
    ok = rows[:, 2] > 1e-14
    r = rows[ok]
    vals = (r[:, 0][:, None] + r[:, 1][:, None] * tau[None, :]) / r[:, 2][:, None]
    return np.maximum(vals.min(axis=0), 0.0)


def _tau_breaks(rows, L, eps):
    """Kinks of nu_max on (0, L), plus its eps crossings."""
    ok = rows[:, 2] > 1e-14
    r = rows[ok]
    p = r[:, 1] / r[:, 2]
    q = r[:, 0] / r[:, 2]
    br = []
    for i in range(len(r)):
        for k in range(i + 1, len(r)):
            if abs(p[i] - p[k]) > 1e-14:
                br.append((q[k] - q[i]) / (p[i] - p[k]))
        if eps is not None and abs(p[i]) > 1e-14:
            br.append((eps - q[i]) / p[i])
    br = np.array([x for x in br if 1e-14 * L < x < L * (1 - 1e-14)])
    return np.unique(np.concatenate([[0.0], br, [L]]))


def _graded_cell(lo, hi, grade_lo, grade_hi, n):
    """GL on [lo, hi], geometrically graded toward the ends where nu_max vanishes."""
    if grade_lo and grade_hi:
        mid = 0.5 * (lo + hi)
        x1, w1 = _graded_cell(lo, mid, True, False, n)
        x2, w2 = _graded_cell(mid, hi, False, True, n)
        return np.concatenate([x1, x2]), np.concatenate([w1, w2])
    if not (grade_lo or grade_hi):
        return composite_nodes(np.array([lo, hi]), n)
    width = hi - lo
    r, w = _log_rule(width * 3.0**-_GRADED_LAYERS, width, (), n)
    if grade_lo:
        return lo + r, w
    return hi - r, w


def _lhs_polygon(case, c, n):
    poly = case.domain.to_polygon() if isinstance(case.domain, AxisBox) else case.domain
    if not poly.is_convex:
        raise GeometryError("the polygon integrator needs a convex polygon")
    s = case.exponent
    chain = case.chain
    d = case.u.descriptor
    eps = case.eps
    K = _depth_layers(s)
    total, tail = 0.0, 0.0
    for a, t, nrm, L, rows in _nu_max_pieces(poly):
        edges = _tau_breaks(rows, L, eps)
        taus, wts = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            nm = _nu_max(rows, np.array([lo, hi]))
            floor = 1e-12 * L if eps is None else eps * (1 + 1e-12)
            tx, tw = _graded_cell(lo, hi, nm[0] <= floor, nm[1] <= floor, n)
            taus.append(tx)
            wts.append(tw)
        taus = np.concatenate(taus)
        wts = np.concatenate(wts)
        numax = _nu_max(rows, taus)
        for tau, wt, top in zip(taus, wts, numax):
            lo = top * 3.0**-K if eps is None else eps
            if not top > lo:
                continue
            nu, w = _log_rule(lo, top, (), n)
            x = a + tau * t + nu[:, None] * nrm
            vals = np.abs(d(x) - c) * np.exp(_log_weight(chain, nu, s) - np.log(nu))
            total += wt * float(np.dot(w, vals))
            if eps is None:
                trace = abs(float(d((a + tau * t)[None, :])[0]) - c)
                tail += wt * _tail(chain, s, lo, trace)
    return total, tail


def _lhs_flat_strip(case, c, n):
    """Rectangle region sitting on the flat bottom of the domain, where delta = x_2 - y0."""
    reg = case.region
    dom = case.domain
    s = case.exponent
    chain = case.chain
    d = case.u.descriptor
    prof = d.profile if isinstance(d, TensorProfile) else None
    xbreaks = [] if prof is None else [x for x in prof.breakpoints() if reg.x0 < x < reg.x1]
    x1, w1 = composite_nodes(np.unique(np.concatenate([np.linspace(reg.x0, reg.x1, 65), xbreaks])), n)
    H = reg.y1 - reg.y0
    lo = H * 3.0 ** -_depth_layers(s) if case.eps is None else case.eps
    nu, w2 = _log_rule(lo, H, (), n)
    X = np.stack(np.broadcast_arrays(x1[:, None], reg.y0 + nu[None, :]), -1)
    # the region must see the flat bottom as its nearest boundary
    probe = X[:: max(1, len(x1) // 17), :: max(1, len(nu) // 17)].reshape(-1, 2)
    dist = dom.distance(probe)
    if not np.allclose(dist, probe[:, 1] - reg.y0, rtol=1e-12, atol=1e-300):
        raise GeometryError("delta differs from the height above the flat bottom on this region")
    vals = np.abs(d(X) - c) * np.exp(_log_weight(chain, nu, s) - np.log(nu))[None, :]
    total = float(w1 @ vals @ w2)
    tail = 0.0
    if case.eps is None:
        trace = np.abs(d(np.stack([x1, np.full_like(x1, reg.y0)], -1)) - c)
        tail = float(np.dot(w1, trace)) * _tail(chain, s, lo, 1.0)
    return total, tail


def _centering(case):
    if not case.centered:
        return 0.0
    return average(case.u, case.domain)


def weighted_lhs(case: HardyCase, n=_NODES, ceiling=None, detail=False):
    """int |u - c| delta^{-s} L_1(delta/R) ... tail(L_m(delta/R)) dx.

    c = (u)_Omega when ``case.centered``, else 0.  Raises DivergenceError when
    the chain has infinite tail mass and the boundary trace of |u - c| is
    nonzero, or when the value exceeds ``ceiling``.
    """
    c = _centering(case)
    dom = case.domain
    if isinstance(dom, Interval):
        total, tail = _lhs_interval(case, c, n)
    elif case.region is not None:
        if not isinstance(case.region, Rectangle) or not isinstance(dom, AxisBox):
            raise GeometryError("2D regions must be rectangles inside an AxisBox")
        total, tail = _lhs_flat_strip(case, c, n)
    elif isinstance(dom, (AxisBox, Polygon2D)):
        total, tail = _lhs_polygon(case, c, n)
    else:
        raise GeometryError(f"weighted_lhs does not support {type(dom).__name__}")
    if math.isinf(tail):
        raise DivergenceError("boundary trace of |u - c| is nonzero and the weight has infinite tail mass")
    value = total + tail
    if math.isnan(value):
        raise QuadratureError("NaN encountered in the weighted integrand")
    if not math.isfinite(value):
        raise DivergenceError("weighted integral is not finite", value)
    _check_ceiling(value, ceiling, "weighted_lhs")
    if detail:
        return value, {"graded": total, "tail": tail, "center": c}
    return value


def default_ceiling(case, tv=None):
    """1e6 x the BV-scale right-hand side 2^m [u]_BV."""
    if tv is None:
        tv = tv_seminorm(case.u, case.domain)
    return DEFAULT_CEILING_FACTOR * 2.0**case.chain.m * max(tv, 1e-300)


# ---------------------------------------------------------------------------
# Theorem-level verifiers


def _domain_D(dom):
    return dom.D if isinstance(dom, Interval) else None


def measured_c1_poin(s_list=(0.5,), extra=()):
    """Measured one-dimensional Poincare constant: max over a fixed battery on (0, 1)."""
    from .functions import ClampedLinear, Linear, Step

    battery = [
        TestFunction(Linear()),
        TestFunction(Step((0.5,), (1.0,))),
        TestFunction(Step((0.3,), (1.0,))),
        TestFunction(SmoothBump((0.5,), 0.3, 1.0)),
        TestFunction(SmoothBump((0.5,), 0.5, 1.0)),
        TestFunction(ClampedLinear(0.4, 0.6)),
    ] + list(extra)
    return measured_poincare_constant(battery, list(s_list))


def verify_main(u, domain, m, R, tail=Square(), c1=None, tv=None, explicit=True):
    """Theorem-1.1 check for one m: measured constant lhs / (2^m [u]_BV).

    In 1D the explicit form C_1 C_BV (2^{m+4} + 4 + 3 2^{m+3}) [u]_BV is also
    evaluated with the measured one-dimensional Poincare constant.
    """
    u = _as_tf(u)
    case = HardyCase(u, domain, WeightChain(m, R, tail), BV, True)
    if tv is None:
        tv = tv_seminorm(u, domain)
    if tv <= 0:
        lhs = weighted_lhs(case)
        return VerificationReport(lhs, {"tv": 0.0}, 0.0, "C*2^m", lhs <= 1e-12, "quadrature", m, BV, R)
    lhs = weighted_lhs(case, ceiling=default_ceiling(case, tv))
    measured = lhs / (2.0**m * tv)
    rhs = {"tv": tv, "2^m*tv": 2.0**m * tv}
    passed = math.isfinite(measured)
    extra = {}
    if explicit and isinstance(domain, Interval):
        if c1 is None:
            c1 = measured_c1_poin((0.5, 0.7, 0.9, 0.99))
        explicit = c1 * bbm_constant(1) * (2.0 ** (m + 4) + 4 + 3 * 2.0 ** (m + 3)) * tv
        rhs["explicit_1d"] = explicit
        extra["c1_poin"] = c1
        passed = passed and lhs <= explicit
    return VerificationReport(lhs, rhs, measured, "C*2^m", passed, "quadrature", m, BV, R, extra=extra)


@dataclass
class SweepReport:
    reports: list
    max_constant: float
    spearman: float
    passed: bool

    def to_dict(self):
        return {
            "reports": [r.to_dict() for r in self.reports],
            "max_constant": self.max_constant,
            "spearman": self.spearman,
            "pass": self.passed,
        }


def spearman_trend(ms, values):
    """Spearman correlation; 0 for constant sequences (no trend)."""
    v = np.asarray(values, dtype=float)
    if len(v) < 2 or np.ptp(v) == 0:
        return 0.0
    return float(stats.spearmanr(ms, v)[0])


def verify_main_sweep(u, domain, ms, R, **kw):
    """Measured constants over an m-sweep: bounded by their max, with no upward trend."""
    u = _as_tf(u)
    if "tv" not in kw:
        kw["tv"] = tv_seminorm(u, domain)
    if isinstance(domain, Interval) and kw.get("explicit", True) and kw.get("c1") is None:
        kw["c1"] = measured_c1_poin((0.5, 0.7, 0.9, 0.99))
    reps = [verify_main(u, domain, m, R, **kw) for m in ms]
    consts = [r.measured_constant for r in reps]
    rho = spearman_trend(list(ms), consts)
    passed = all(r.passed for r in reps) and rho <= 0 and all(map(math.isfinite, consts))
    return SweepReport(reps, max(consts), rho, passed)


def _flat_form(c1, s, m, sem, l1):
    return c1 * (2.0 ** (3 * s + m) + 2.0**s) * (1 - s) * sem + 2.0 ** (m + 1) * 3.0**s * l1


def _interval_form(c1, s, m, sem, l1, D):
    return c1 * (2.0 ** (3 * s + m + 1) + 2.0 ** (s + 1)) * (1 - s) * sem + 2.0 ** (m + 2) * 3.0**s / D**s * l1


def verify_intermediate(u, domain, s, m, R, c1=None, explicit=True):
    """Theorem-1.5 check: lhs with |u| / delta^s against 2^m ((1-s)[u]_{W^{s,1}} + ||u||_{L^1}).

    ``domain`` may be an Interval(D) (explicit form needs R > D), the flat
    interval (0, 1) given as a tuple (weight x^{-s}, explicit form needs R > 1),
    or a 2D AxisBox / convex polygon.
    """
    u = _as_tf(u)
    if not (0.5 <= s < 1):
        raise DomainError("the fractional inequality is stated for 1/2 <= s < 1")
    flat = isinstance(domain, tuple)
    if flat:
        if tuple(map(float, domain)) != (0.0, 1.0):
            raise GeometryError("the flat interval is (0, 1)")
        case = HardyCase(u, Interval(1.0), WeightChain(m, R), s, False, region=(0.0, 1.0))
        region = (0.0, 1.0)
    else:
        case = HardyCase(u, domain, WeightChain(m, R), s, False)
        region = domain
    lhs = weighted_lhs(case)
    sem = gagliardo(u, region, s).value
    l1 = l1_norm(u, region)
    rhs = {"seminorm_term": 2.0**m * (1 - s) * sem, "l1_term": 2.0**m * l1}
    den = rhs["seminorm_term"] + rhs["l1_term"]
    if den == 0:
        return VerificationReport(lhs, rhs, 0.0, "C*2^m", lhs == 0, "quadrature", m, s, R)
    measured = lhs / den
    passed = math.isfinite(measured)
    extra = {}
    form = "C*2^m"
    if explicit and (flat or isinstance(domain, Interval)):
        if c1 is None:
            c1 = measured_c1_poin((s,))
        if flat:
            if not R > 1:
                raise DomainError("the flat explicit form needs R > 1")
            explicit = _flat_form(c1, s, m, sem, l1)
            form = "C1(2^{3s+m}+2^s)(1-s)[u] + 2^{m+1}3^s||u||"
        else:
            D = domain.D
            if not R > D:
                raise DomainError("the interval explicit form needs R > D")
            explicit = _interval_form(c1, s, m, sem, l1, D)
            form = "C1(2^{3s+m+1}+2^{s+1})(1-s)[u] + 2^{m+2}3^s/D^s||u||"
        rhs["explicit_1d"] = explicit
        extra["c1_poin"] = c1
        passed = passed and lhs <= explicit
    return VerificationReport(lhs, rhs, measured, form, passed, "quadrature", m, s, R, extra=extra)


# ---------------------------------------------------------------------------
# series


@dataclass
class SeriesResult:
    alpha: float
    partial_sums: list
    terms: list
    verdict: str  # Converged | DivergenceWitness | Inconclusive
    m_stop: int
    tail_bound: float
    reference_total: Optional[float] = None
    envelope: Optional[float] = None
    measured_constant: Optional[float] = None

    @property
    def total(self):
        return self.partial_sums[-1] if self.partial_sums else 0.0

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "verdict": self.verdict,
            "m_stop": self.m_stop,
            "total": self.total,
            "tail_bound": self.tail_bound,
            "reference_total": self.reference_total,
            "envelope": self.envelope,
            "measured_constant": self.measured_constant,
            "partial_sums": list(self.partial_sums),
        }


def _boundary_size(dom):
    """Perimeter (2 in 1D): int_Omega w(delta) <= size * int_0^inf w for convex Omega."""
    if isinstance(dom, Interval):
        return 2.0
    poly = dom.to_polygon() if isinstance(dom, AxisBox) else dom
    return poly.perimeter


def _sup_dev(case):
    u = case.u
    sup = u.descriptor.sup_abs()
    if sup is None:
        raise DomainError("series tail bound needs a descriptor with a known sup |u|")
    c = _centering(case)
    return sup + abs(c)


def _closed_form_terms(case):
    """Per-m term generator for the flat-strip counterexample, else None."""
    if not (
        isinstance(case.region, Rectangle)
        and isinstance(case.u.descriptor, TensorProfile)
        and not case.centered
        and case.s == BV
        and isinstance(case.chain.tail, Square)
        and case.eps is None
    ):
        return None
    reg = case.region
    prof = TestFunction(case.u.descriptor.profile)
    norm = l1_norm(prof, (reg.x0, reg.x1))
    H = reg.y1 - reg.y0
    return lambda m: norm * float(eval_L(m, H / case.chain.R))


def series_sum(
    case: HardyCase,
    alpha,
    m_max=10_000,
    tol=1e-6,
    witness_factor=10.0,
    reference_alpha=0.4,
    closed_form="auto",
):
    """Partial sums of sum_{m >= 2} alpha^m lhs_m with a rigorous tail bound.

    lhs_m <= sup|u - c| * |boundary| * L_m(r/R) <= sup|u - c| * |boundary| for
    convex domains (and on the flat strip with |boundary| the bottom length),
    so for alpha < 1 the tail after M is at most that constant times
    alpha^{M+1} / (1 - alpha).  For alpha >= 1 a DivergenceWitness is returned
    once the partial sum exceeds ``witness_factor`` times the total at
    ``reference_alpha``.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if m_max < 2:
        raise DomainError("m_max must be at least 2")
    term_fn = _closed_form_terms(case) if closed_form in ("auto", True) else None
    if closed_form is True and term_fn is None:
        raise DomainError("no closed form for this case")
    if term_fn is None:

        def term_fn(m):
            return weighted_lhs(case.with_chain(WeightChain(m, case.chain.R, case.chain.tail)))

    if isinstance(case.region, Rectangle):
        size = case.region.x1 - case.region.x0
    else:
        size = _boundary_size(case.domain)
    bound_const = _sup_dev(case) * size
    cache = {}

    def term(m):
        if m not in cache:
            cache[m] = term_fn(m)
        return cache[m]

    reference = None
    if alpha >= 1:
        ref = series_sum(case, reference_alpha, m_max=m_max, tol=tol, closed_form=closed_form)
        reference = ref.total
    partial, terms = [], []
    S = 0.0
    verdict = "Inconclusive"
    tail_bound = math.inf
    m = 1
    for m in range(2, m_max + 1):
        tm = term(m)
        terms.append(tm)
        S += alpha**m * tm
        partial.append(S)
        if alpha < 1:
            tail_bound = bound_const * alpha ** (m + 1) / (1 - alpha)
            if tail_bound < tol:
                verdict = "Converged"
                break
        elif reference is not None and S > witness_factor * reference:
            verdict = "DivergenceWitness"
            break
    result = SeriesResult(alpha, partial, terms, verdict, m, tail_bound, reference)
    if alpha < 0.5:
        tv = tv_seminorm(case.u, case.domain)
        if tv > 0:
            consts = [t / (2.0**mm * tv) for mm, t in zip(range(2, m + 1), terms)]
            cmax = max(consts)
            result.measured_constant = cmax
            result.envelope = cmax * 4 * alpha**2 / (1 - 2 * alpha) * tv
    return result


# ---------------------------------------------------------------------------
# corollaries


def corollary_beta_verify(u, domain, m, R, beta, eps=None):
    """Power-tail weight L_1 ... L_{m-1} L_m^beta.

    beta > 1: checks lhs_beta(m) <= C(beta - 1) lhs_Square(m + 1), the valid
    form of the pointwise reduction, and reports lhs / (2^m [u]_BV) together
    with both C(beta) and C(beta - 1).  beta <= 1: the integral diverges for
    u with nonzero boundary trace; with ``eps`` the collar {delta < eps} is
    dropped and the truncated value is reported.
    """
    u = _as_tf(u)
    if not beta > 0:
        raise DomainError("beta must be positive")
    chain = WeightChain(m, R, Power(beta))
    tv = tv_seminorm(u, domain)
    case = HardyCase(u, domain, chain, BV, True, eps=eps)
    if beta <= 1:
        # failure side: pass means the divergence was witnessed
        try:
            lhs = weighted_lhs(case)
        except DivergenceError as exc:
            return VerificationReport(
                math.inf, {"tv": tv}, math.inf, "C(beta)*2^m", True, "tail-mass", m, BV, R, beta=beta,
                extra={"verdict": "divergence", "reason": str(exc)},
            )
        measured = lhs / (2.0**m * tv) if tv > 0 else math.inf
        verdict = "truncated" if eps is not None else "no divergence"
        return VerificationReport(
            lhs, {"tv": tv}, measured, "C(beta)*2^m", eps is not None, "quadrature", m, BV, R, beta=beta,
            extra={"verdict": verdict, "eps": eps},
        )
    lhs = weighted_lhs(case, ceiling=default_ceiling(case, tv) if tv > 0 else None)
    nxt = weighted_lhs(HardyCase(u, domain, WeightChain(m + 1, R, Square()), BV, True, eps=eps))
    c_beta = theta_domination_constant(beta)
    c_beta1 = theta_domination_constant(beta - 1)
    reduced = c_beta1 * nxt
    measured = lhs / (2.0**m * tv) if tv > 0 else 0.0
    passed = lhs <= reduced * (1 + 1e-9) + 1e-300
    return VerificationReport(
        lhs,
        {"tv": tv, "reduced_bound": reduced, "lhs_square_next": nxt},
        measured,
        "C(beta)*2^m",
        passed,
        "quadrature",
        m,
        BV,
        R,
        beta=beta,
        extra={"C_theta_beta": c_beta, "C_theta_beta_minus_1": c_beta1, "verdict": "bounded"},
    )


def corollary_rho_verify(u, domain, m, R, beta, eps=None):
    """Tail L_m^{1+rho*}: identical to L_m L_{m+1}^beta, i.e. the Power(beta) chain at m + 1.

    beta > 1 uses the RhoStar tail and checks the identity against the Power
    chain; beta <= 1 (where rho* is not admissible) evaluates the equivalent
    Power(beta) chain at m + 1, which diverges for nonzero boundary trace.
    """
    u = _as_tf(u)
    tv = tv_seminorm(u, domain)
    if beta <= 1:
        rep = corollary_beta_verify(u, domain, m + 1, R, beta, eps=eps)
        rep.m = m
        rep.extra["equivalent_chain"] = f"Power({beta}) at m+1"
        return rep
    case = HardyCase(u, domain, WeightChain(m, R, RhoStar(beta)), BV, True, eps=eps)
    lhs = weighted_lhs(case, ceiling=default_ceiling(case, tv) if tv > 0 else None)
    same = weighted_lhs(case.with_chain(WeightChain(m + 1, R, Power(beta))))
    resid = abs(lhs - same) / max(abs(same), 1e-300)
    measured = lhs / (2.0**m * tv) if tv > 0 else 0.0
    return VerificationReport(
        lhs,
        {"tv": tv, "power_chain_lhs": same},
        measured,
        "C*2^m",
        bool(resid < 1e-10 and math.isfinite(measured)),
        "quadrature",
        m,
        BV,
        R,
        beta=beta,
        extra={"identity_residual": resid},
    )


# ---------------------------------------------------------------------------
# collar sweep and the flat-strip counterexample


@dataclass
class CollarSweep:
    eps: list
    lhs: list
    closed_form_increments: list
    monotone: bool
    growth: float

    def to_dict(self):
        return {
            "eps": list(self.eps),
            "lhs": list(self.lhs),
            "closed_form_increments": list(self.closed_form_increments),
            "monotone": self.monotone,
            "growth": self.growth,
        }


def collar_sweep(u, domain, m, R, beta, eps_list):
    """Truncated lhs over {delta > eps} for a shrinking collar.

    For beta = 1 and |u - c| equal to a constant T on the collar, successive
    differences are T |boundary| (z_m(eps_2) - z_m(eps_1)) with
    z_0 = ln(R/eps), z_j = ln(1 + z_{j-1}); these are reported alongside.
    """
    u = _as_tf(u)
    eps_list = sorted(eps_list, reverse=True)
    vals = []
    for e in eps_list:
        case = HardyCase(u, domain, WeightChain(m, R, Power(beta)), BV, True, eps=e)
        vals.append(weighted_lhs(case))
    zm = []
    for e in eps_list:
        z = math.log(R / e)
        for _ in range(m):
            z = math.log1p(z)
        zm.append(z)
    incs = [b - a for a, b in zip(zm[:-1], zm[1:])]
    monotone = all(b > a for a, b in zip(vals[:-1], vals[1:]))
    growth = vals[-1] / vals[0] if vals[0] > 0 else math.inf
    return CollarSweep(eps_list, vals, incs, monotone, growth)


def counterexample_case(m=2, R=math.e, n=1, profile=None):
    """u(x) = u'(x_1) on (-2n, 2n) x (0, 2), integrated over (-n, n) x (0, 1)."""
    if profile is None:
        profile = SmoothBump((0.0,), 0.8 * n, 1.0)
    dom = AxisBox(2, 2 * n, 2.0)
    region = Rectangle(-n, n, 0.0, 1.0)
    return HardyCase(TestFunction(TensorProfile(profile)), dom, WeightChain(m, R), BV, False, region=region)


def counterexample_closed_form(case):
    """Chain-rule value ||u'||_{L^1} L_m(H/R) and the alternative reading with an extra 1/R."""
    fn = _closed_form_terms(case)
    if fn is None:
        raise DomainError("not a flat-strip tensor case")
    v = fn(case.chain.m)
    return {"chain_rule": v, "with_1_over_R": v / case.chain.R}


def counterexample_lower_bound(case, alpha):
    """||u'|| alpha^m / ((m + 1) R^2): the weaker of the two prefactor readings."""
    reg = case.region
    norm = l1_norm(TestFunction(case.u.descriptor.profile), (reg.x0, reg.x1))
    m, R = case.chain.m, case.chain.R
    return norm * alpha**m / ((m + 1) * R * R)
