"""Derivative-free search for functions with a large Hardy ratio.

The objectives are the measured constants of the verifiers: lhs / (2^m [u]_BV)
for the BV inequality and lhs / (2^m ((1-s)[u]_{W^{s,1}} + ||u||_{L^1})) for
the fractional one.  Both are invariant under u -> c u, so amplitude
parameters are quotiented out of the search vector.  Results are empirical
lower bounds on the best constants, never certificates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import optimize

from .errors import DegenerateFamilyError, DomainError
from .functions import PiecewiseLinear, SmoothBump, Sum, TestFunction, _region_1d, l1_norm, tv_seminorm
from .geometry import Interval
from .hardy import BV, HardyCase, verify_intermediate, verify_main, weighted_lhs
from .logweights import WeightChain
from .seminorms import gagliardo_1d

MIN_BUDGET = 100
MIN_RESTARTS = 3


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class BumpMixture:
    """K bumps inside a 1D domain; per bump (center, radius fraction, amplitude).

    The radius is the fraction times the distance from the center to the
    nearer endpoint, so every parameter vector in the box keeps the support
    inside the domain.  The first amplitude is the free scale.
    """

    K: int = 1
    domain: object = Interval(1.0)
    min_fraction: float = 0.05
    amplitude_bound: float = 2.0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise DomainError("BumpMixture needs K >= 1")

    @property
    def region(self):
        return _region_1d(self.domain)

    def bounds(self):
        a, b = self.region
        pad = 1e-3 * (b - a)
        out = []
        for _ in range(self.K):
            out += [(a + pad, b - pad), (self.min_fraction, 1.0), (-self.amplitude_bound, self.amplitude_bound)]
        return out

    @property
    def scale_index(self):
        return 2

    def build(self, p):
        a, b = self.region
        p = np.asarray(p, dtype=float)
        terms = []
        for k in range(self.K):
            c, f, amp = p[3 * k : 3 * k + 3]
            r = f * min(c - a, b - c)
            terms.append(SmoothBump((float(c),), float(r), float(amp)))
        if self.K == 1:
            return TestFunction(terms[0], known_tv=2.0 * abs(terms[0].amplitude))
        return TestFunction(Sum(tuple(terms)))


@dataclass(frozen=True)
class SplineProfile:
    """Piecewise-linear profile with values at n interior knots of a uniform grid, zero at both ends."""

    n: int = 5
    domain: object = Interval(1.0)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("SplineProfile needs at least one interior knot")

    def bounds(self):
        return [(-1.0, 1.0)] * self.n

    @property
    def scale_index(self):
        return None

    def build(self, p):
        a, b = _region_1d(self.domain)
        knots = np.linspace(a, b, self.n + 2)
        d = PiecewiseLinear(tuple(map(float, knots)), (0.0,) + tuple(map(float, p)) + (0.0,))
        return TestFunction(d, known_tv=d.total_variation())


@dataclass(frozen=True)
class FixedFunction:
    """A singleton family: no free parameters."""

    u: TestFunction
    domain: object = Interval(1.0)

    def bounds(self):
        return []

    @property
    def scale_index(self):
        return None

    def build(self, p):
        return self.u


Family = Union[BumpMixture, SplineProfile, FixedFunction]


# ---------------------------------------------------------------------------
# objectives


@dataclass(frozen=True)
class Main:
    m: int
    R: float

    def ratio(self, u, domain, fine):
        tv = tv_seminorm(u, domain)
        if not tv > 0:
            return 0.0
        if fine:
            return verify_main(u, domain, self.m, self.R, tv=tv, explicit=False).measured_constant
        lhs = weighted_lhs(HardyCase(u, domain, WeightChain(self.m, self.R), BV, True), n=8)
        return lhs / (2.0**self.m * tv)


@dataclass(frozen=True)
class Intermediate:
    s: float
    m: int
    R: float

    def ratio(self, u, domain, fine):
        if fine:
            return verify_intermediate(u, domain, self.s, self.m, self.R, explicit=False).measured_constant
        lhs = weighted_lhs(HardyCase(u, domain, WeightChain(self.m, self.R), self.s, False), n=8)
        sem = gagliardo_1d(u, domain, self.s, rtol=1e-6).value
        den = 2.0**self.m * ((1 - self.s) * sem + l1_norm(u, domain))
        return lhs / den if den > 0 else 0.0


Objective = Union[Main, Intermediate]


# ---------------------------------------------------------------------------
# search


@dataclass
class RestartTrace:
    seed: int
    best_ratio: float
    best_params: list
    evaluations: int
    trace: list  # best-so-far after each evaluation


@dataclass
class ExtremalResult:
    best_params: list
    best_ratio: float
    evaluations: int
    seed: int
    restart_dispersion: float
    restarts: list = field(default_factory=list)
    search_ratio: Optional[float] = None

    def to_dict(self):
        return {
            "best_params": list(map(float, self.best_params)),
            "best_ratio": self.best_ratio,
            "search_ratio": self.search_ratio,
            "evaluations": self.evaluations,
            "seed": self.seed,
            "restart_dispersion": self.restart_dispersion,
            "restart_ratios": [r.best_ratio for r in self.restarts],
            "trace_lengths": [len(r.trace) for r in self.restarts],
        }


def _free_mask(family):
    n = len(family.bounds())
    mask = np.ones(n, dtype=bool)
    idx = family.scale_index
    if idx is not None:
        mask[idx] = False
    return mask


def _fixed_values(family):
    # scale parameters sit at the upper end of their box
    return np.array([hi for lo, hi in family.bounds()], dtype=float)


def _embed(family, q):
    mask = _free_mask(family)
    p = _fixed_values(family)
    p[mask] = q
    return p


def _evaluate(family, objective, p, fine=False):
    u = family.build(p)
    v = objective.ratio(u, family.domain, fine)
    if not math.isfinite(v):
        raise DomainError(f"non-finite objective at parameters {list(p)}")
    return v


def _one_restart(family, objective, budget, seq):
    rng = np.random.default_rng(seq)
    bounds = np.array(family.bounds(), dtype=float).reshape(-1, 2)
    mask = _free_mask(family)
    fb = bounds[mask]
    trace = []
    best = [-math.inf, None]

    def f(q):
        v = _evaluate(family, objective, _embed(family, q))
        if v > best[0]:
            best[0], best[1] = v, np.array(q, dtype=float)
        trace.append(best[0])
        return -v

    seed_int = int(seq.generate_state(1)[0])
    if len(fb) == 0:
        f(np.empty(0))
        return RestartTrace(seed_int, best[0], [], 1, trace)
    x0 = rng.uniform(fb[:, 0], fb[:, 1])
    optimize.minimize(
        f,
        x0,
        method="Nelder-Mead",
        bounds=[tuple(b) for b in fb],
        options={"maxfev": budget, "xatol": 1e-8, "fatol": 1e-12, "adaptive": len(fb) > 3},
    )
    return RestartTrace(seed_int, best[0], [float(x) for x in _embed(family, best[1])], len(trace), trace)


def maximize_ratio(family: Family, objective: Objective, budget=500, restarts=5, seed=0, workers=1):
    """Nelder-Mead in the parameter box with uniform random restarts.

    Each restart draws its start from its own SeedSequence child, so results
    do not depend on ``workers``.  The incumbent is re-evaluated with the
    verifier at full accuracy and that value is returned as ``best_ratio``.
    """
    single = len(family.bounds()) == 0
    if not single:
        if budget < MIN_BUDGET:
            raise DomainError(f"budget must be at least {MIN_BUDGET} evaluations per restart")
        if restarts < MIN_RESTARTS:
            raise DomainError(f"need at least {MIN_RESTARTS} restarts")
    children = np.random.SeedSequence(seed).spawn(1 if single else restarts)
    if workers > 1 and len(children) > 1:
        with ThreadPoolExecutor(workers) as ex:
            runs = list(ex.map(lambda c: _one_restart(family, objective, budget, c), children))
    else:
        runs = [_one_restart(family, objective, budget, c) for c in children]
    ratios = np.array([r.best_ratio for r in runs])
    if np.all(ratios == 0):
        raise DegenerateFamilyError("every sampled ratio is zero")
    k = int(np.argmax(ratios))  # first max in restart order
    params = runs[k].best_params
    final = _evaluate(family, objective, np.asarray(params, dtype=float), fine=True)
    fine_ratios = [_evaluate(family, objective, np.asarray(r.best_params, dtype=float), fine=True) for r in runs]
    mean = float(np.mean(fine_ratios))
    dispersion = float(np.std(fine_ratios) / mean) if mean > 0 else math.inf
    return ExtremalResult(
        params, final, int(sum(r.evaluations for r in runs)), seed, dispersion, runs, float(ratios[k])
    )


def recompute_ratio(family, objective, params):
    """The verifier's measured constant at ``params``, from scratch."""
    u = family.build(np.asarray(params, dtype=float))
    if isinstance(objective, Main):
        return verify_main(u, family.domain, objective.m, objective.R, explicit=False).measured_constant
    return verify_intermediate(u, family.domain, objective.s, objective.m, objective.R, explicit=False).measured_constant


def constant_growth_profile(family, objective_for_m, ms, budget=500, restarts=5, seed=0, workers=1):
    """Rows (m, best_ratio, raw_ratio): best measured constant and lhs / seminorm = best_ratio 2^m."""
    rows = []
    for m in ms:
        res = maximize_ratio(family, objective_for_m(m), budget, restarts, seed, workers)
        rows.append(
            {
                "m": int(m),
                "best_ratio": res.best_ratio,
                "raw_ratio": res.best_ratio * 2.0**m,
                "restart_dispersion": res.restart_dispersion,
                "evaluations": res.evaluations,
            }
        )
    return rows
