"""Independent numeric oracles used across the test suite.

These deliberately avoid the symbolic engine: history convolutions are
evaluated by trapezoid quadrature, dispersion relations by dense linear
algebra, so that symbolic results are checked against something that
cannot share their bugs.
"""

import numpy as np


def z_num(f_vals, t, mu):
    """Z[f; mu](t_k) = int_0^{t_k} e^{mu (t_k - s)} f(s) ds by trapezoid.

    Evaluated as e^{mu t} * cumulative-integral of e^{-mu s} f(s); stable
    for the short horizons and moderate rates the tests use.
    """
    t = np.asarray(t, dtype=float)
    g = np.exp(-mu * t) * np.asarray(f_vals, dtype=float)
    dt = np.diff(t)
    inner = np.concatenate(([0.0], np.cumsum(0.5 * dt * (g[1:] + g[:-1]))))
    return np.exp(mu * t) * inner


def ddt_num(vals, t):
    """Centred finite-difference time derivative."""
    return np.gradient(np.asarray(vals, dtype=float), np.asarray(t, dtype=float))


def heat_exchanger_slow_rate(k):
    """Slow eigenvalue of [[0, ik], [ik, -1]] via the quadratic formula."""
    return (-1.0 + np.sqrt(1.0 - 4.0 * k * k)) / 2.0


def heat_exchanger_fast_rate(k):
    return (-1.0 - np.sqrt(1.0 - 4.0 * k * k)) / 2.0


def heat_exchanger_eig_2x2(k):
    """Eigenvalues of the full heat-exchanger symbol by dense linalg."""
    m = np.array([[0.0, 1j * k], [1j * k, -1.0]])
    return np.linalg.eigvals(m)


def poly_mul_coeffs(a, b):
    """Long multiplication of coefficient lists (independent of the engine)."""
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out
