"""Quadrature rules for integrands with inverse-square-root endpoints."""
from __future__ import annotations

import numpy as np
from scipy import integrate

__all__ = ["chebyshev_gauss", "arcsine_mean", "periodic_angle_mean"]


def chebyshev_gauss(n: int):
    """Nodes and weights for  int_{-1}^{1} f(y) / sqrt(1 - y^2) dy.

    With y = sin(t) this is the midpoint rule in t, so weights are all pi/n.
    """
    j = np.arange(1, n + 1)
    nodes = np.cos((2 * j - 1) * np.pi / (2 * n))
    return nodes, np.full(n, np.pi / n)


def arcsine_mean(f, n: int = 2048, richardson: bool = True):
    """Mean of ``f(y)`` under the arcsine density 1/(pi sqrt(1 - y^2)) on (-1, 1).

    ``f`` takes an array of nodes.  Logarithmic endpoint singularities leave
    an O(1/n) midpoint error with no log factor, so one Richardson step
    (2 Q_2n - Q_n) lifts it to O(1/n^2).  Returns ``(value, error_estimate)``,
    the estimate being the change between extrapolants built at n and 2n.
    """
    q = []
    for size in (n, 2 * n, 4 * n):
        y, w = chebyshev_gauss(size)
        q.append(np.dot(w, f(y)) / np.pi)
    if not richardson:
        return q[2], abs(q[2] - q[1])
    r1 = 2.0 * q[1] - q[0]
    r2 = 2.0 * q[2] - q[1]
    return r2, abs(r2 - r1)


def periodic_angle_mean(g, singular=(0.5 * np.pi, 1.5 * np.pi), epsabs=1e-11, epsrel=1e-11, limit=200):
    """(1/2pi) int_0^{2pi} g(theta) dtheta with breakpoints at ``singular``.

    Adaptive Gauss-Kronrod (QUADPACK) handles integrable log singularities at
    the breakpoints.  Returns ``(value, abserr)``.
    """
    val, err = integrate.quad(g, 0.0, 2.0 * np.pi, points=list(singular), epsabs=epsabs, epsrel=epsrel, limit=limit)
    return val / (2.0 * np.pi), err / (2.0 * np.pi)
