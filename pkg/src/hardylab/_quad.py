"""Small quadrature helpers shared by the integrators."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def gauss_legendre(n):
    """Nodes and weights of the n-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_nodes(edges, n):
    """Composite Gauss-Legendre rule over consecutive cells given by ``edges``.

    Returns flat node and weight arrays.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(n)
    a = edges[:-1, None]
    h = np.diff(edges)[:, None]
    return (a + h * x).ravel(), (h * w).ravel()


def log_graded_rule(lo, hi, n):
    """Gauss-Legendre in v = ln(x) on [lo, hi] with cells of ratio 3.

    Returns nodes x and weights for dx (i.e. already multiplied by the Jacobian x).
    """
    if not (0.0 < lo < hi):
        raise ValueError("log_graded_rule needs 0 < lo < hi")
    vlo, vhi = np.log(lo), np.log(hi)
    ncell = max(1, int(np.ceil((vhi - vlo) / np.log(3.0))))
    edges = np.linspace(vlo, vhi, ncell + 1)
    v, wv = composite_nodes(edges, n)
    x = np.exp(v)
    return x, wv * x
