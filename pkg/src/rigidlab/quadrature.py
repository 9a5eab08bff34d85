"""Quadrature rules and the classical RK4 stepper shared across modules."""

from __future__ import annotations

import numpy as np

__all__ = [
    "periodic_trapezoid",
    "gauss_legendre_nodes",
    "gauss_legendre",
    "rk4_path",
]


def periodic_trapezoid(samples, period=2.0 * np.pi, axis=-1):
    """Integral of a smooth periodic function from uniform samples (no
    duplicated endpoint); spectrally accurate.  Complex samples allowed."""
    samples = np.asarray(samples)
    if not np.iscomplexobj(samples):
        samples = samples.astype(float)
    if samples.shape[axis] == 0:
        raise ValueError("periodic_trapezoid needs at least one sample")
    return np.mean(samples, axis=axis) * period


def gauss_legendre_nodes(a, b, cells=8, nodes=16):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    if cells < 1 or nodes < 1:
        raise ValueError("cells and nodes must be positive")
    x0, w0 = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, cells + 1)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        xs.append(lo + half * (x0 + 1.0))
        ws.append(half * w0)
    return np.concatenate(xs), np.concatenate(ws)


def gauss_legendre(f, a, b, cells=8, nodes=16):
    """Composite Gauss-Legendre integral of a callable on [a, b];
    exact for polynomials of degree 2*nodes - 1 per cell."""
    x, w = gauss_legendre_nodes(a, b, cells, nodes)
    return float(np.sum(w * np.asarray(f(x), dtype=float)))


def rk4_path(rhs, y0, t0, t1, steps):
    """Classical RK4 integration returning the whole path.

    ``rhs(t, y)`` maps to dy/dt; ``y0`` may be any array shape.  Returns
    (t_nodes, states) with states of shape (steps + 1,) + y0.shape.
    """
    y = np.array(y0, dtype=float)
    t_nodes = np.linspace(t0, t1, steps + 1)
    h = (t1 - t0) / steps
    out = np.empty((steps + 1,) + y.shape)
    out[0] = y
    for k in range(steps):
        t = t_nodes[k]
        k1 = np.asarray(rhs(t, y))
        k2 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k1))
        k3 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k2))
        k4 = np.asarray(rhs(t + h, y + h * k3))
        y = y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        out[k + 1] = y
    return t_nodes, out
