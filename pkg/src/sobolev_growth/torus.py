"""Fourier-space fields on the circle and on the space-time torus.

A :class:`TorusField` stores the coefficients ``c_j`` of

    u(x) = sum_{|j| <= j_max} c_j exp(i j x),      x in [-pi, pi),

as a dense complex vector ordered ``j = -j_max, ..., j_max``. The matching
collocation grid has ``N = 2 j_max + 1`` points ``x_k = -pi + 2 pi k / N``;
the forward transform carries the ``1/N`` factor, so the l2 norm of the
coefficients equals the root-mean-square of the grid samples.

Sobolev norms use Japanese-bracket weights ``(1 + j^2)^(s/2)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

__all__ = [
    "TorusField",
    "SpaceTimeField",
    "MultiplierProfile",
    "sobolev_weights",
    "hs_norm",
    "multiplier_profile",
    "apply_multiplier",
    "embed_initial",
    "dyadic_slice",
    "dyadic_scales",
    "grid_points",
    "coeffs_to_grid",
    "grid_to_coeffs",
]


def grid_points(j_max: int) -> np.ndarray:
    """Collocation points on [-pi, pi) for a field of band ``j_max``."""
    n = 2 * j_max + 1
    return -np.pi + 2.0 * np.pi * np.arange(n) / n


def _alternating(j_max: int) -> np.ndarray:
    # exp(i j (-pi)) = (-1)^j
    return np.where(np.arange(-j_max, j_max + 1) % 2 == 0, 1.0, -1.0)


def coeffs_to_grid(coeffs: np.ndarray) -> np.ndarray:
    """Evaluate ``sum_j c_j exp(i j x_k)`` on the grid; works on the last axis."""
    coeffs = np.asarray(coeffs)
    n = coeffs.shape[-1]
    j_max = (n - 1) // 2
    shifted = np.fft.ifftshift(coeffs * _alternating(j_max), axes=-1)
    return np.fft.ifft(shifted, axis=-1) * n


def grid_to_coeffs(values: np.ndarray) -> np.ndarray:
    """Inverse of :func:`coeffs_to_grid` (forward FFT with the 1/N factor)."""
    values = np.asarray(values)
    n = values.shape[-1]
    if n % 2 == 0:
        raise ValueError(f"grid size must be odd (2*j_max+1), got {n}")
    j_max = (n - 1) // 2
    c = np.fft.fftshift(np.fft.fft(values, axis=-1), axes=-1) / n
    return c * _alternating(j_max)


@dataclass(frozen=True, eq=False)
class TorusField:
    """Band-limited function on the circle held by its Fourier coefficients."""

    coeffs: np.ndarray
    j_max: int

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if self.j_max < 0:
            raise ValueError(f"j_max must be nonnegative, got {self.j_max}")
        if c.shape != (2 * self.j_max + 1,):
            raise ValueError(
                f"expected {2 * self.j_max + 1} coefficients for j_max={self.j_max}, got shape {c.shape}"
            )
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, j_max: int) -> TorusField:
        return cls(np.zeros(2 * j_max + 1, dtype=complex), j_max)

    @classmethod
    def from_modes(cls, modes: Mapping[int, complex], j_max: int) -> TorusField:
        c = np.zeros(2 * j_max + 1, dtype=complex)
        for j, value in modes.items():
            if abs(j) > j_max:
                raise ValueError(f"mode {j} outside band |j| <= {j_max}")
            c[j + j_max] += value
        return cls(c, j_max)

    @classmethod
    def from_grid(cls, values: np.ndarray) -> TorusField:
        values = np.asarray(values)
        return cls(grid_to_coeffs(values), (values.shape[-1] - 1) // 2)

    @classmethod
    def from_function(cls, func, j_max: int) -> TorusField:
        """Interpolate ``func(x)`` on the collocation grid of band ``j_max``."""
        return cls.from_grid(np.asarray(func(grid_points(j_max)), dtype=complex))

    @classmethod
    def random(cls, j_max: int, rng: np.random.Generator, decay: float = 0.0, real: bool = False) -> TorusField:
        """Gaussian coefficients scaled by ``(1+j^2)^(-decay/2)``."""
        j = np.arange(-j_max, j_max + 1)
        c = rng.standard_normal(j.size) + 1j * rng.standard_normal(j.size)
        c *= (1.0 + j**2) ** (-decay / 2.0)
        field = cls(c, j_max)
        return field.real_part() if real else field

    @classmethod
    def sobolev_datum(cls, j_max: int, s: float) -> TorusField:
        """``c_j ~ (1+j^2)^(-(s+1)/2)``, normalized to unit H^s norm."""
        j = np.arange(-j_max, j_max + 1)
        c = (1.0 + j**2) ** (-(s + 1.0) / 2.0)
        field = cls(c.astype(complex), j_max)
        return field * (1.0 / hs_norm(field, s))

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(-self.j_max, self.j_max + 1)

    @property
    def grid_size(self) -> int:
        return 2 * self.j_max + 1

    def coefficient(self, j: int) -> complex:
        return complex(self.coeffs[j + self.j_max]) if abs(j) <= self.j_max else 0j

    def to_grid(self) -> np.ndarray:
        return coeffs_to_grid(self.coeffs)

    def with_band(self, j_max: int) -> TorusField:
        """Zero-pad or truncate to a new band limit."""
        c = np.zeros(2 * j_max + 1, dtype=complex)
        m = min(j_max, self.j_max)
        c[j_max - m : j_max + m + 1] = self.coeffs[self.j_max - m : self.j_max + m + 1]
        return TorusField(c, j_max)

    def support_limit(self, tol: float = 0.0) -> int:
        """Largest |j| carrying a coefficient of modulus above ``tol``; -1 if none."""
        idx = np.nonzero(np.abs(self.coeffs) > tol)[0]
        if idx.size == 0:
            return -1
        return int(np.max(np.abs(idx - self.j_max)))

    def is_real(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.coeffs - np.conj(self.coeffs[::-1])), initial=0.0) <= tol)

    def real_part(self) -> TorusField:
        """Coefficients of Re u."""
        return TorusField(0.5 * (self.coeffs + np.conj(self.coeffs[::-1])), self.j_max)

    def _binary(self, other: TorusField, op) -> TorusField:
        j_max = max(self.j_max, other.j_max)
        return TorusField(op(self.with_band(j_max).coeffs, other.with_band(j_max).coeffs), j_max)

    def __add__(self, other: TorusField) -> TorusField:
        return self._binary(other, np.add)

    def __sub__(self, other: TorusField) -> TorusField:
        return self._binary(other, np.subtract)

    def __mul__(self, scalar: complex) -> TorusField:
        return TorusField(self.coeffs * scalar, self.j_max)

    __rmul__ = __mul__

    def __neg__(self) -> TorusField:
        return TorusField(-self.coeffs, self.j_max)

    def __repr__(self) -> str:
        return f"TorusField(j_max={self.j_max}, l2={hs_norm(self, 0.0):.6g})"


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Coefficients ``c(j, n)`` of ``sum c(j,n) exp(i(j x + n t / T))``.

    ``coeffs[j + j_max, n + n_max]``; the time period is ``2 pi T``.
    """

    coeffs: np.ndarray
    j_max: int
    n_max: int
    period: float

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (2 * self.j_max + 1, 2 * self.n_max + 1):
            raise ValueError(
                f"coefficient table shape {c.shape} does not match j_max={self.j_max}, n_max={self.n_max}"
            )
        if self.period <= 0:
            raise ValueError(f"period scale T must be positive, got {self.period}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def x_trace(self, t: float) -> TorusField:
        """The spatial function ``x -> psi(x, t)``: sums each j-row against exp(i n t / T)."""
        n = np.arange(-self.n_max, self.n_max + 1)
        return TorusField(self.coeffs @ np.exp(1j * n * t / self.period), self.j_max)


def sobolev_weights(j_max: int, s: float) -> np.ndarray:
    j = np.arange(-j_max, j_max + 1)
    return (1.0 + j.astype(float) ** 2) ** (s / 2.0)


def hs_norm(field: TorusField, s: float) -> float:
    """``(sum_j (1+j^2)^s |c_j|^2)^(1/2)``."""
    if s < 0:
        raise ValueError(f"Sobolev index must be nonnegative, got {s}")
    return float(np.linalg.norm(sobolev_weights(field.j_max, s) * field.coeffs))


@dataclass(frozen=True)
class MultiplierProfile:
    """Smoothed cutoff: 1 for |j| <= J/2, 2(1 - |j|/J) on the ramp, 0 for |j| > J."""

    J: float

    def __post_init__(self):
        if self.J <= 0:
            raise ValueError(f"cutoff scale J must be positive, got {self.J}")

    def __call__(self, j) -> np.ndarray:
        a = np.abs(np.asarray(j, dtype=float))
        return np.clip(2.0 * (1.0 - a / self.J), 0.0, 1.0)


def multiplier_profile(J: float, j) -> np.ndarray:
    return MultiplierProfile(J)(j)


def apply_multiplier(field: TorusField, J: float) -> TorusField:
    if J < 2:
        raise ValueError(f"multiplier scale must satisfy J >= 2, got {J}")
    return TorusField(field.coeffs * multiplier_profile(J, field.frequencies), field.j_max)


def embed_initial(u0: TorusField, T: float, n_max: int, j_max: int | None = None) -> SpaceTimeField:
    """Place ``u0`` on the n = 0 row of a space-time coefficient table."""
    j_max = u0.j_max if j_max is None else j_max
    if n_max < 0:
        raise ValueError(f"n_max must be nonnegative, got {n_max}")
    if u0.support_limit() > j_max:
        raise ValueError(
            f"initial datum has band {u0.support_limit()} but the target rectangle only holds |j| <= {j_max}"
        )
    table = np.zeros((2 * j_max + 1, 2 * n_max + 1), dtype=complex)
    table[:, n_max] = u0.with_band(j_max).coeffs
    return SpaceTimeField(table, j_max, n_max, T)


def _is_power_of_two(R: int) -> bool:
    return isinstance(R, (int, np.integer)) and R >= 1 and (R & (R - 1)) == 0


def dyadic_slice(field: TorusField, R: int) -> TorusField:
    """Keep the coefficients with R/4 < |k| < 4R (open bounds)."""
    if not _is_power_of_two(R):
        raise ValueError(f"dyadic scale must be a power of two, got {R}")
    k = np.abs(field.frequencies)
    keep = (4 * k > R) & (k < 4 * R)
    return TorusField(np.where(keep, field.coeffs, 0), field.j_max)


def dyadic_scales(j_max: int) -> list[int]:
    """Powers of two whose slices can touch a band of size ``j_max``."""
    scales, R = [], 1
    while R < 4 * max(j_max, 1):
        scales.append(R)
        R *= 2
    return scales
