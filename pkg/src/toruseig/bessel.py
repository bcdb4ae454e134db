"""Bessel functions J_nu of integer order for the ball kernels.

Power series for x <= 20, Hankel's asymptotic expansion beyond.  The target
is 1e-8 absolute on the normalised kernels, not full double precision.
"""

from __future__ import annotations

import math

import numpy as np

SERIES_SWITCH = 20.0


def _series(nu: int, x: np.ndarray) -> np.ndarray:
    half = x / 2.0
    term = half**nu / math.factorial(nu)
    total = term.copy()
    q = -half * half
    k = 0
    while True:
        k += 1
        term = term * q / (k * (k + nu))
        total += term
        if k > 8 and np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
        if k > 200:
            break
    return total


def _hankel(nu: int, x: np.ndarray) -> np.ndarray:
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    coeff = 1.0
    prev = np.full_like(x, np.inf)
    k = 0
    while k < 60:
        k += 1
        coeff *= (mu - (2 * k - 1) ** 2) / (k * 8.0)
        term = coeff / x**k
        # asymptotic series: stop at the smallest term
        if np.all(np.abs(term) >= prev) or coeff == 0.0:
            break
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            q = q + sign * term
        else:
            p = p + sign * term
        prev = np.abs(term)
        if np.all(prev < 1e-17):
            break
    omega = x - (nu / 2.0 + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(omega) - q * np.sin(omega))


def jn(nu: int, x) -> np.ndarray | float:
    """J_nu(x) for integer nu >= 0 and x >= 0."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0):
        raise ValueError("jn is implemented for x >= 0")
    flat = arr.ravel()
    out = np.empty_like(flat)
    small = flat <= SERIES_SWITCH
    if small.any():
        out[small] = _series(nu, flat[small])
    if (~small).any():
        out[~small] = _hankel(nu, flat[~small])
    out = out.reshape(arr.shape)
    return float(out) if np.ndim(x) == 0 else out
