"""Composite Gauss-Legendre quadrature with adaptive panel refinement.

Integrands throughout the package are smooth exponentials (possibly matrix
valued), so fixed-order Gauss-Legendre panels converge extremely fast; the
error estimate is the difference between a run and the same run with the
panel count doubled.
"""

import numpy as np


class QuadratureError(RuntimeError):
    """Raised when refinement cannot meet the requested tolerance."""


def gauss_legendre_rule(npts):
    """Nodes and weights on [-1, 1]."""
    return np.polynomial.legendre.leggauss(npts)


def panel_nodes(a, b, panels, npts):
    """All nodes and weights for `panels` equal panels of [a, b].

    Returns (nodes, weights) as flat arrays of length panels*npts.
    """
    x, w = gauss_legendre_rule(npts)
    edges = np.linspace(a, b, panels + 1)
    h = (edges[1:] - edges[:-1]) / 2.0
    mid = (edges[1:] + edges[:-1]) / 2.0
    nodes = (mid[:, None] + h[:, None] * x[None, :]).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate_adaptive(f, a, b, panels=32, npts=8, rel_tol=1e-10,
                       abs_tol=0.0, max_doublings=10, vector=False):
    """Integrate f on [a, b], doubling panels until the estimate settles.

    f maps a scalar t to a scalar (or to an ndarray when vector=True).
    Convergence requires err <= rel_tol * |value| + abs_tol; the absolute
    term lets callers whose integrand carries evaluation noise (e.g.
    cancellation inside a matrix exponential) declare a floor below which
    disagreement is meaningless.  Returns (value, error_estimate).
    """
    if b < a:
        raise ValueError("integration interval is reversed")
    if b == a:
        zero = f(a) * 0.0 if vector else 0.0
        return zero, 0.0

    def run(k):
        nodes, weights = panel_nodes(a, b, k, npts)
        if vector:
            acc = None
            for t, w in zip(nodes, weights):
                term = w * f(t)
                acc = term if acc is None else acc + term
            return acc
        return sum(w * f(t) for t, w in zip(nodes, weights))

    prev = run(panels)
    for _ in range(max_doublings):
        panels *= 2
        cur = run(panels)
        err = np.linalg.norm(np.asarray(cur - prev))
        scale = max(np.linalg.norm(np.asarray(cur)), 1e-300)
        if err <= rel_tol * scale + abs_tol:
            return cur, float(err)
        prev = cur
    raise QuadratureError(
        f"quadrature failed to reach rel_tol={rel_tol} after "
        f"{max_doublings} refinements (last estimate {err:.3e})")
