"""Independent reference computations used by the tests.

Nothing here calls into the package's integrators, assemblers or solvers:
the oracles rebuild each object from point samples of the potential and
dense linear algebra.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.linalg


def xcoeffs_by_quadrature(V, t: float, k_max: int, n_grid: int = 256) -> np.ndarray:
    """``V^(k; t)`` for |k| <= k_max from a trapezoid rule on point samples."""
    x = 2.0 * np.pi * np.arange(n_grid) / n_grid - np.pi
    values = V.evaluate(x, t)
    k = np.arange(-k_max, k_max + 1)
    return np.exp(-1j * np.outer(k, x)) @ values / n_grid


def galerkin_hamiltonian(V, t: float, band: int) -> np.ndarray:
    """``diag(j^2) + [V^(j - j')]`` assembled entry by entry."""
    vhat = xcoeffs_by_quadrature(V, t, 2 * band)
    size = 2 * band + 1
    H = np.zeros((size, size), dtype=complex)
    for a in range(size):
        for b in range(size):
            H[a, b] = vhat[(a - b) + 2 * band]
        H[a, a] += (a - band) ** 2
    return H


def magnus4(V, u0: np.ndarray, t0: float, t1: float, steps: int) -> np.ndarray:
    """Fourth-order Magnus (two Gauss points) for ``i u' = H(t) u`` with dense ``expm``."""
    band = (len(u0) - 1) // 2
    h = (t1 - t0) / steps
    c1, c2 = 0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6
    u = np.array(u0, dtype=complex)
    for k in range(steps):
        a = t0 + k * h
        A1 = -1j * galerkin_hamiltonian(V, a + c1 * h, band)
        A2 = -1j * galerkin_hamiltonian(V, a + c2 * h, band)
        omega = 0.5 * h * (A1 + A2) + (math.sqrt(3) / 12) * h * h * (A2 @ A1 - A1 @ A2)
        u = scipy.linalg.expm(omega) @ u
    return u


def magnus4_propagator(V, band: int, t0: float, t1: float, steps: int) -> np.ndarray:
    eye = np.eye(2 * band + 1, dtype=complex)
    return np.column_stack([magnus4(V, eye[:, i], t0, t1, steps) for i in range(2 * band + 1)])


def floquet_dense(T: float, J: int, N: int, kernel: dict[tuple[int, int], complex]) -> np.ndarray:
    """Brute-force ``H[(j,n),(j',n')] = delta (j^2 + n/T) + kernel(j - j', n - n')``.

    Sites are ordered with j outermost, matching the lattice flattening.
    """
    sites = [(j, n) for j in range(-J, J + 1) for n in range(-N, N + 1)]
    H = np.zeros((len(sites), len(sites)), dtype=complex)
    for p, (j, n) in enumerate(sites):
        for q, (jj, nn) in enumerate(sites):
            H[p, q] = kernel.get((j - jj, n - nn), 0.0)
            if p == q:
                H[p, q] += j * j + n / T
    return H


def hs_norm_quadrature(func, s: int, n_grid: int = 512) -> float:
    """``||u||_{H^s}`` for integer s from derivatives taken by finite Fourier sums on samples.

    ``(1+j^2)^s = sum_k binom(s, k) j^(2k)``, so the squared norm is
    ``sum_k binom(s, k) ||d^k u||^2_{L2}`` with the normalized measure.
    """
    x = 2.0 * np.pi * np.arange(n_grid) / n_grid
    values = np.asarray(func(x), dtype=complex)
    total = 0.0
    for k in range(s + 1):
        deriv = np.fft.ifft(np.fft.fft(values) * (1j * np.fft.fftfreq(n_grid, d=1.0 / n_grid)) ** k)
        total += math.comb(s, k) * float(np.mean(np.abs(deriv) ** 2))
    return math.sqrt(total)
