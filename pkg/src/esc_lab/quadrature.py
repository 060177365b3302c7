"""Fixed quadrature rules used by the dither validators and the averaging code."""

import math

import numpy as np


def simpson_weights(n, a, b):
    """Nodes and weights of the composite Simpson rule with ``n`` intervals.

    ``n`` must be even. Returns ``(nodes, weights)`` with ``n + 1`` entries each.
    """
    if n < 2 or n % 2:
        raise ValueError(f"Simpson rule needs an even interval count, got {n}")
    nodes = np.linspace(a, b, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return nodes, w * ((b - a) / (3.0 * n))


def gauss_legendre_unit(n):
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def simpson(f, a, b, n=4096):
    """Composite Simpson integral of a vectorized ``f`` over ``[a, b]``.

    Values may carry trailing axes; the sum runs over the first axis only and
    uses compensated summation so the result does not depend on BLAS
    reduction order.
    """
    nodes, w = simpson_weights(n, a, b)
    vals = np.asarray(f(nodes), dtype=float)
    weighted = w.reshape((-1,) + (1,) * (vals.ndim - 1)) * vals
    if weighted.ndim == 1:
        return math.fsum(weighted)
    flat = weighted.reshape(weighted.shape[0], -1)
    out = np.array([math.fsum(flat[:, k]) for k in range(flat.shape[1])])
    return out.reshape(weighted.shape[1:])
