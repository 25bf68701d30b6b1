"""Fixed-step classical RK4 for the extremal Hamiltonian system.

    phi' = H0'(psi),     psi' = U'(phi + p)

with ``H0'(x) = b + s2 x + sum_i w_i k_i exp(k_i x)`` and ``U'`` a polynomial
(ascending coefficients ``du``).
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _h0p(x, b, s2, ks, ws):
    out = b + s2 * x
    for i in range(ks.size):
        out += ws[i] * ks[i] * math.exp(ks[i] * x)
    return out


@njit(cache=True)
def _poly(c, x):
    out = 0.0
    for i in range(c.size - 1, -1, -1):
        out = out * x + c[i]
    return out


@njit(cache=True)
def integrate(T, n_steps, psi0, p, b, s2, ks, ws, du):
    h = T / n_steps
    phi = np.empty(n_steps + 1)
    psi = np.empty(n_steps + 1)
    x, y = 0.0, psi0
    phi[0] = x
    psi[0] = y
    for i in range(n_steps):
        k1x = _h0p(y, b, s2, ks, ws)
        k1y = _poly(du, x + p)
        k2x = _h0p(y + 0.5 * h * k1y, b, s2, ks, ws)
        k2y = _poly(du, x + 0.5 * h * k1x + p)
        k3x = _h0p(y + 0.5 * h * k2y, b, s2, ks, ws)
        k3y = _poly(du, x + 0.5 * h * k2x + p)
        k4x = _h0p(y + h * k3y, b, s2, ks, ws)
        k4y = _poly(du, x + h * k3x + p)
        x += h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
        y += h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0
        phi[i + 1] = x
        psi[i + 1] = y
    return phi, psi


@njit(cache=True)
def endpoint(T, n_steps, psi0, p, b, s2, ks, ws, du):
    h = T / n_steps
    x, y = 0.0, psi0
    for i in range(n_steps):
        k1x = _h0p(y, b, s2, ks, ws)
        k1y = _poly(du, x + p)
        k2x = _h0p(y + 0.5 * h * k1y, b, s2, ks, ws)
        k2y = _poly(du, x + 0.5 * h * k1x + p)
        k3x = _h0p(y + 0.5 * h * k2y, b, s2, ks, ws)
        k3y = _poly(du, x + 0.5 * h * k2x + p)
        k4x = _h0p(y + h * k3y, b, s2, ks, ws)
        k4y = _poly(du, x + h * k3x + p)
        x += h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
        y += h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0
        if not (math.isfinite(x) and math.isfinite(y)):
            return math.nan, math.nan
    return x, y
