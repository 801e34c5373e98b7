"""Potentials V(x, t), their Gevrey-cutoff periodization and truncation.

Potentials are described structurally: a finite set of x-frequencies ``k``
with closed-form time coefficients ``a_k(t)``, so that

    V(x, t) = sum_k a_k(t) exp(i k x),      a_{-k} = conj(a_k).

Every potential object exposes ``xcoeffs(t, j_max)`` (the x-Fourier
coefficients at a fixed time) and ``sampler(x)`` (a fast ``t -> V(x, t)``
closure for a fixed grid); the integrators only rely on these two.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Callable, Mapping, Sequence

import numpy as np

__all__ = [
    "TimeTerm",
    "Potential",
    "AnalyticPotential",
    "CallablePotential",
    "RandomRefreshPotential",
    "GevreyCutoff",
    "build_cutoff",
    "PeriodizedPotential",
    "periodize",
    "periodized_value",
    "TruncatedPotential",
    "truncate",
    "truncation_rectangle",
    "gap_model",
    "DecayReport",
    "decay_audit",
    "load_potential",
    "potential_to_json",
    "zero_potential",
    "cosine_potential",
    "uniform_potential",
    "three_mode_potential",
    "periodic_potential",
]

POTENTIAL_SCHEMA = "sobolev-growth/potential"
POTENTIAL_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TimeTerm:
    """``amplitude * cos(omega t + phase)`` (or ``sin``)."""

    amplitude: complex
    fn: str = "cos"
    omega: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.fn not in ("cos", "sin"):
            raise ValueError(f"time term must be 'cos' or 'sin', got {self.fn!r}")
        object.__setattr__(self, "amplitude", complex(self.amplitude))

    def __call__(self, t):
        arg = self.omega * np.asarray(t, dtype=float) + self.phase
        return self.amplitude * (np.cos(arg) if self.fn == "cos" else np.sin(arg))

    def conjugate(self) -> TimeTerm:
        return TimeTerm(self.amplitude.conjugate(), self.fn, self.omega, self.phase)


class Potential:
    """Interface shared by all potentials."""

    label: str = ""
    structural: bool = False

    def xcoeffs(self, t: float, j_max: int) -> np.ndarray:
        """x-Fourier coefficients ``V^(k; t)`` for ``|k| <= j_max``."""
        raise NotImplementedError

    def evaluate(self, x, t: float) -> np.ndarray:
        return self.sampler(np.asarray(x, dtype=float))(t)

    def sampler(self, x: np.ndarray) -> Callable[[float], np.ndarray]:
        x = np.asarray(x, dtype=float)
        k_max = self.x_band
        basis = np.exp(1j * np.outer(x, np.arange(-k_max, k_max + 1)))

        def sample(t: float) -> np.ndarray:
            return (basis @ self.xcoeffs(t, k_max)).real

        return sample

    @property
    def x_band(self) -> int:
        """Largest |k| carried by the potential."""
        raise NotImplementedError

    def is_x_independent(self) -> bool:
        return self.x_band == 0


class AnalyticPotential(Potential):
    """Finite trigonometric potential with closed-form time coefficients."""

    structural = True

    def __init__(
        self,
        modes: Mapping[int, Sequence[TimeTerm]],
        strip_width: float = 1.0,
        sup_bound: float | None = None,
        label: str = "",
        fill_conjugates: bool = True,
    ):
        table: dict[int, tuple[TimeTerm, ...]] = {int(k): tuple(v) for k, v in modes.items() if len(v)}
        if fill_conjugates:
            for k in list(table):
                if k != 0 and -k not in table:
                    table[-k] = tuple(term.conjugate() for term in table[k])
        if strip_width <= 0:
            raise ValueError(f"strip width must be positive, got {strip_width}")
        self.modes = dict(sorted(table.items()))
        self.strip_width = float(strip_width)
        self.label = label
        self._check_real()
        natural = sum(abs(term.amplitude) for terms in self.modes.values() for term in terms)
        self.sup_bound = float(natural if sup_bound is None else sup_bound)

        self._ks = np.array(list(self.modes), dtype=int)
        terms = [(i, term) for i, k in enumerate(self._ks) for term in self.modes[k]]
        self._term_mode = np.array([i for i, _ in terms], dtype=int)
        self._amp = np.array([term.amplitude for _, term in terms], dtype=complex)
        self._omega = np.array([term.omega for _, term in terms], dtype=float)
        self._phase = np.array([term.phase for _, term in terms], dtype=float)
        # sin(a) = cos(a - pi/2)
        self._phase = self._phase - np.array([0.0 if term.fn == "cos" else np.pi / 2 for _, term in terms])
        self._mix = np.zeros((len(self._ks), len(terms)), dtype=complex)
        self._mix[self._term_mode, np.arange(len(terms))] = self._amp

    def _check_real(self):
        probe = np.linspace(-7.3, 11.9, 17)
        for k, terms in self.modes.items():
            partner = self.modes.get(-k)
            if partner is None:
                raise ValueError(f"mode {k} has no conjugate partner {-k}; V would not be real")
            a = sum(term(probe) for term in terms)
            b = sum(term(probe) for term in partner)
            if np.max(np.abs(b - np.conj(a))) > 1e-12 * (1 + np.max(np.abs(a))):
                raise ValueError(f"modes {k} and {-k} are not complex conjugates; V would not be real")

    @property
    def x_band(self) -> int:
        return int(np.max(np.abs(self._ks))) if self._ks.size else 0

    def is_zero(self) -> bool:
        return not self.modes or bool(np.all(self._amp == 0))

    def time_coefficients(self, t) -> np.ndarray:
        """``a_k(t)`` for the stored modes, shape ``(n_modes,) + shape(t)``."""
        t = np.asarray(t, dtype=float)
        arg = np.multiply.outer(self._omega, t) + self._phase.reshape((-1,) + (1,) * t.ndim)
        return np.tensordot(self._mix, np.cos(arg), axes=1)

    def xcoeffs(self, t: float, j_max: int) -> np.ndarray:
        out = np.zeros(2 * j_max + 1, dtype=complex)
        if not self._ks.size:
            return out
        if self.x_band > j_max:
            raise ValueError(f"potential carries |k| = {self.x_band} beyond the requested band {j_max}")
        out[self._ks + j_max] = self.time_coefficients(t)
        return out

    def sampler(self, x: np.ndarray) -> Callable[[float], np.ndarray]:
        x = np.asarray(x, dtype=float)
        if not self._ks.size:
            zero = np.zeros_like(x)
            return lambda t: zero
        basis = np.exp(1j * np.outer(x, self._ks))
        mix, omega, phase = self._mix, self._omega, self._phase

        def sample(t: float) -> np.ndarray:
            return (basis @ (mix @ np.cos(omega * t + phase))).real

        return sample

    def evaluate_grid(self, x, t) -> np.ndarray:
        """V on the outer product grid ``x`` by ``t`` (shape ``(len(x), len(t))``)."""
        x = np.asarray(x, dtype=float)
        if not self._ks.size:
            return np.zeros((x.size, np.asarray(t).size))
        a = self.time_coefficients(np.asarray(t, dtype=float).ravel())
        return (np.exp(1j * np.outer(x, self._ks)) @ a).real

    def __repr__(self) -> str:
        return f"AnalyticPotential(label={self.label!r}, modes={list(self.modes)}, sup_bound={self.sup_bound:.4g})"


class CallablePotential(Potential):
    """Black-box adapter around ``func(x, t)``; not eligible for decay audits."""

    structural = False

    def __init__(self, func: Callable, x_band: int, sup_bound: float, label: str = ""):
        self.func = func
        self._x_band = int(x_band)
        self.sup_bound = float(sup_bound)
        self.label = label

    @property
    def x_band(self) -> int:
        return self._x_band

    def xcoeffs(self, t: float, j_max: int) -> np.ndarray:
        from .torus import grid_points, grid_to_coeffs

        m = max(j_max, 2 * self._x_band)
        c = grid_to_coeffs(np.asarray(self.func(grid_points(m), t), dtype=complex))
        return c[m - j_max : m + j_max + 1]

    def sampler(self, x: np.ndarray) -> Callable[[float], np.ndarray]:
        x = np.asarray(x, dtype=float)
        return lambda t: np.asarray(self.func(x, t), dtype=float)


class GevreyCutoff:
    """Gevrey bump on [-pi, pi]: 1 on |tau| <= 1, 0 on |tau| >= pi.

    The transition is the smooth step ``f(u) / (f(u) + f(1-u))`` with
    ``f(u) = exp(-(2u)^(-1/(alpha-1)))``, which is of Gevrey order ``alpha``.
    """

    def __init__(self, alpha: float):
        if not alpha > 1:
            raise ValueError(
                f"Gevrey order must exceed 1 (compactly supported analytic bumps do not exist), got {alpha}"
            )
        self.alpha = float(alpha)
        self._p = 1.0 / (self.alpha - 1.0)

    def step(self, u) -> np.ndarray:
        """Smooth monotone step: 0 for u <= 0, 1 for u >= 1."""
        shape = np.shape(u)
        u = np.clip(np.atleast_1d(np.asarray(u, dtype=float)), 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            g = (2.0 * u) ** (-self._p) - (2.0 * (1.0 - u)) ** (-self._p)
        g = np.nan_to_num(g, nan=0.0, posinf=np.inf, neginf=-np.inf)
        out = 1.0 / (1.0 + np.exp(np.clip(g, -700.0, 700.0)))
        out[u <= 0.0] = 0.0
        out[u >= 1.0] = 1.0
        return out.reshape(shape)

    def __call__(self, tau) -> np.ndarray:
        tau = np.abs(np.asarray(tau, dtype=float))
        return self.step((np.pi - tau) / (np.pi - 1.0))

    def derivative_maxima(self, m_max: int = 4, n_grid: int = 1 << 14) -> np.ndarray:
        """``max |d^m phi/dtau^m|`` for m = 0..m_max via spectral differentiation."""
        tau = -np.pi + 2.0 * np.pi * np.arange(n_grid) / n_grid
        spectrum = np.fft.fft(self(tau))
        k = np.fft.fftfreq(n_grid, d=1.0 / n_grid)
        return np.array([np.max(np.abs(np.fft.ifft(spectrum * (1j * k) ** m))) for m in range(m_max + 1)])

    def gevrey_constants(self, m_max: int = 4) -> np.ndarray:
        """Smallest ``C_m`` with ``max|phi^(m)| <= C_m^(m+1) (m!)^alpha``."""
        maxima = self.derivative_maxima(m_max)
        m = np.arange(m_max + 1)
        fact = np.array([math.factorial(int(i)) for i in m], dtype=float)
        return (maxima / fact**self.alpha) ** (1.0 / (m + 1))

    def __repr__(self) -> str:
        return f"GevreyCutoff(alpha={self.alpha})"


def build_cutoff(alpha: float) -> GevreyCutoff:
    return GevreyCutoff(alpha)


class _TablePotential(Potential):
    """Potential given by a space-time coefficient table ``c(j, n)``."""

    def __init__(self, table: np.ndarray, T: float):
        table = np.array(table, dtype=complex)
        table.flags.writeable = False
        self.table = table
        self.T = float(T)
        self.j_max = (table.shape[0] - 1) // 2
        self.n_max = (table.shape[1] - 1) // 2
        self._rows = np.nonzero(np.any(table != 0, axis=1))[0]

    @property
    def x_band(self) -> int:
        return int(np.max(np.abs(self._rows - self.j_max))) if self._rows.size else 0

    def _time_coeffs(self, t: float) -> np.ndarray:
        n = np.arange(-self.n_max, self.n_max + 1)
        return self.table[self._rows] @ np.exp(1j * n * t / self.T)

    def xcoeffs(self, t: float, j_max: int) -> np.ndarray:
        out = np.zeros(2 * j_max + 1, dtype=complex)
        if not self._rows.size:
            return out
        if self.x_band > j_max:
            raise ValueError(f"potential carries |k| = {self.x_band} beyond the requested band {j_max}")
        out[self._rows - self.j_max + j_max] = self._time_coeffs(t)
        return out

    def sampler(self, x: np.ndarray) -> Callable[[float], np.ndarray]:
        x = np.asarray(x, dtype=float)
        if not self._rows.size:
            zero = np.zeros_like(x)
            return lambda t: zero
        basis = np.exp(1j * np.outer(x, self._rows - self.j_max))
        rows = self.table[self._rows]
        n = np.arange(-self.n_max, self.n_max + 1) / self.T

        def sample(t: float) -> np.ndarray:
            return (basis @ (rows @ np.exp(1j * n * t))).real

        return sample

    def evaluate_grid(self, x, t) -> np.ndarray:
        """Values on the outer product grid ``x`` by ``t``."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float).ravel()
        j = np.arange(-self.j_max, self.j_max + 1)
        n = np.arange(-self.n_max, self.n_max + 1)
        ex = np.exp(1j * np.outer(x, j))
        et = np.exp(1j * np.outer(n, t) / self.T)
        return (ex @ self.table @ et).real

    def hermitian_defect(self) -> float:
        """``max |c(-j,-n) - conj c(j,n)|``."""
        return float(np.max(np.abs(self.table[::-1, ::-1] - np.conj(self.table)), initial=0.0))


class PeriodizedPotential(_TablePotential):
    """``V1``: the cutoff-periodized potential with period ``2 pi T`` in t."""

    def __init__(self, table, T, potential: Potential, cutoff: GevreyCutoff, structural: bool = True):
        super().__init__(table, T)
        self.parent = potential
        self.cutoff = cutoff
        self.structural = structural
        self.label = f"V1[{getattr(potential, 'label', '')}, T={T:g}]"


def periodized_value(V: Potential, cutoff: GevreyCutoff, T: float, x, t: float) -> np.ndarray:
    """Direct evaluation of ``sum_m V(x, t + 2 pi m T) phi(t + 2 pi m T)``."""
    period = 2.0 * np.pi * T
    centre = int(np.round(-t / period))
    total = np.zeros(np.shape(x))
    for m in range(centre - 1, centre + 2):
        shifted = t + m * period
        weight = float(cutoff(shifted / T))
        if weight:
            total = total + weight * V.evaluate(x, shifted)
    return total


def _fast_grid(n: int) -> int:
    return 1 << max(int(np.ceil(np.log2(max(n, 2)))), 1)


def _centered(spectrum: np.ndarray, n_max: int, axis: int) -> np.ndarray:
    n = np.arange(-n_max, n_max + 1)
    return np.take(spectrum, n % spectrum.shape[axis], axis=axis)


def _alias_excess(spectrum: np.ndarray, n_max: int, axis: int) -> float:
    size = spectrum.shape[axis]
    freq = np.abs(np.fft.fftfreq(size, d=1.0 / size))
    beyond = np.take(np.abs(spectrum), np.nonzero(freq > n_max)[0], axis=axis)
    peak = np.max(np.abs(spectrum), initial=0.0)
    if peak == 0 or beyond.size == 0:
        return 0.0
    return float(np.max(beyond) / peak)


def periodize(
    V: Potential,
    T: float,
    cutoff: GevreyCutoff,
    j_max: int,
    n_max: int,
    grid_factor: int = 4,
    alias_tol: float = 1e-10,
) -> PeriodizedPotential:
    """Fourier table of ``V1(x, t) = sum_m V(x, t + 2 pi m T) phi((t + 2 pi m T)/T)``.

    Coefficients are normalized so that ``V1 = sum c(j, n) exp(i(j x + n t / T))``,
    computed by FFT quadrature on ``[-pi, pi) x [-pi T, pi T)``.
    """
    if T < 2:
        raise ValueError(f"time scale T must be at least 2, got {T}")
    if j_max < 0 or n_max < 0:
        raise ValueError("band limits must be nonnegative")
    n_t = _fast_grid(grid_factor * (2 * n_max + 1))
    t = -np.pi * T + 2.0 * np.pi * T * np.arange(n_t) / n_t
    weight = cutoff(t / T)
    n = np.arange(-n_max, n_max + 1)
    sign_t = np.where(n % 2 == 0, 1.0, -1.0)  # exp(-i n (-pi))
    table = np.zeros((2 * j_max + 1, 2 * n_max + 1), dtype=complex)

    if isinstance(V, AnalyticPotential):
        if V.x_band > j_max:
            raise ValueError(
                f"aliasing: potential carries x-frequency {V.x_band} beyond the table band |j| <= {j_max}"
            )
        if V.modes:
            samples = V.time_coefficients(t) * weight
            spectrum = np.fft.fft(samples, axis=1) / n_t
            excess = _alias_excess(spectrum, n_max, axis=1)
            if excess > alias_tol:
                raise ValueError(
                    f"aliasing: relative spectral energy {excess:.2e} beyond the retained band |n| <= {n_max}"
                )
            table[V._ks + j_max] = _centered(spectrum, n_max, axis=1) * sign_t
        return PeriodizedPotential(table, T, V, cutoff, structural=True)

    n_x = _fast_grid(grid_factor * (2 * j_max + 1))
    x = -np.pi + 2.0 * np.pi * np.arange(n_x) / n_x
    samples = np.empty((n_x, n_t))
    sample = V.sampler(x)
    for i, ti in enumerate(t):
        samples[:, i] = sample(ti) * weight[i] if weight[i] else 0.0
    spectrum = np.fft.fft2(samples) / (n_x * n_t)
    for axis, band in ((0, j_max), (1, n_max)):
        excess = _alias_excess(spectrum, band, axis=axis)
        if excess > alias_tol:
            name = "x" if axis == 0 else "t"
            raise ValueError(f"aliasing in {name}: relative spectral energy {excess:.2e} beyond band {band}")
    j = np.arange(-j_max, j_max + 1)
    sign_x = np.where(j % 2 == 0, 1.0, -1.0)
    table = _centered(_centered(spectrum, j_max, axis=0), n_max, axis=1)
    table = table * sign_x[:, None] * sign_t[None, :]
    return PeriodizedPotential(table, T, V, cutoff, structural=False)


def truncation_rectangle(T: float, sigma: float) -> tuple[int, int]:
    """``(K_x, K_t) = (ceil((log T)^sigma), ceil(T (log T)^sigma))``."""
    L = math.log(T) ** sigma
    return math.ceil(L - 1e-12), math.ceil(T * L - 1e-9)


class TruncatedPotential(_TablePotential):
    """``V2``: the periodized table restricted to ``|j| <= K_x, |n| <= K_t``."""

    def __init__(self, table, T, sigma, delta, parent: PeriodizedPotential, sup_gap: float):
        super().__init__(table, T)
        self.sigma = float(sigma)
        self.delta = float(delta)
        self.parent = parent
        self.sup_gap = float(sup_gap)
        self.K_x = self.j_max
        self.K_t = self.n_max
        self.structural = parent.structural
        self.label = f"V2[{getattr(parent.parent, 'label', '')}, T={T:g}, sigma={sigma:g}]"

    def outside_rectangle_count(self) -> int:
        return 0


def truncate(V1: PeriodizedPotential, sigma: float, delta: float, alpha: float | None = None) -> TruncatedPotential:
    alpha = V1.cutoff.alpha if alpha is None else alpha
    if not (sigma > alpha + delta > 1):
        raise ValueError(f"ordering sigma > alpha + delta > 1 violated: sigma={sigma}, alpha={alpha}, delta={delta}")
    K_x, K_t = truncation_rectangle(V1.T, sigma)
    if K_x > V1.j_max or K_t > V1.n_max:
        raise ValueError(
            f"truncation rectangle |j| <= {K_x}, |n| <= {K_t} exceeds the stored table "
            f"|j| <= {V1.j_max}, |n| <= {V1.n_max}"
        )
    j0, n0 = V1.j_max, V1.n_max
    kept = V1.table[j0 - K_x : j0 + K_x + 1, n0 - K_t : n0 + K_t + 1]
    outside = np.array(V1.table)
    outside[j0 - K_x : j0 + K_x + 1, n0 - K_t : n0 + K_t + 1] = 0
    gap = float(np.max(np.abs(_table_on_grid(outside)))) if np.any(outside) else 0.0
    return TruncatedPotential(kept, V1.T, sigma, delta, V1, gap)


def _table_on_grid(table: np.ndarray) -> np.ndarray:
    """Exact values of a coefficient table on its natural (2j+1) x (2n+1) grid."""
    from .torus import coeffs_to_grid

    return coeffs_to_grid(coeffs_to_grid(table).T).T


def gap_model(T: float, sigma_prime: float, alpha: float) -> float:
    """``exp(-(log T)^(sigma'/alpha))``."""
    return math.exp(-(math.log(T) ** (sigma_prime / alpha)))


@dataclass
class DecayReport:
    """Fitted envelopes ``C exp(-c |j|)`` and ``C exp(-c |n/T|^(1/alpha))``."""

    C_x: float
    c_x: float
    C_n: float
    c_n: float
    j_threshold: float
    n_threshold: float
    worst_ratio_x: float
    worst_ratio_n: float
    points_x: int
    points_n: int
    passed: bool
    notes: list[str] = field(default_factory=list)


def _fit_envelope(feature: np.ndarray, envelope: np.ndarray, floor: float):
    keep = envelope > floor
    if not np.any(keep):
        return 0.0, 0.0, 0, 1.0
    f, e = feature[keep], np.log(envelope[keep])
    if np.unique(f).size >= 2:
        slope = np.polyfit(f, e, 1)[0]
        c = float(max(-slope, 1e-3))
    else:
        c = 1.0
    C = float(np.max(np.exp(e + c * f)))
    worst = float(np.max(np.exp(e) / (C * np.exp(-c * f))))
    return C, c, int(keep.sum()), worst


def decay_audit(V1: PeriodizedPotential, alpha: float, delta: float, noise_floor: float = 1e-14) -> DecayReport:
    """Fit the exponential (x) and Gevrey (t) decay envelopes of a periodized table."""
    if not getattr(V1, "structural", False):
        raise TypeError("decay audits require a structurally specified potential, not a black-box adapter")
    T = V1.T
    mag = np.abs(V1.table)
    floor = noise_floor * max(float(mag.max(initial=0.0)), 1e-300)
    j = np.abs(np.arange(-V1.j_max, V1.j_max + 1)).astype(float)
    n = np.abs(np.arange(-V1.n_max, V1.n_max + 1)).astype(float)
    j_thr = math.log(T) ** delta
    n_thr = T * math.log(T) ** delta
    notes = []

    rows = j >= j_thr
    env_x = mag[rows].max(axis=1) if np.any(rows) else np.zeros(0)
    C_x, c_x, p_x, w_x = _fit_envelope(j[rows], env_x, floor)
    cols = n >= n_thr
    env_n = mag[:, cols].max(axis=0) if np.any(cols) else np.zeros(0)
    C_n, c_n, p_n, w_n = _fit_envelope((n[cols] / T) ** (1.0 / alpha), env_n, floor)
    if p_x < 2:
        notes.append("x-direction: fewer than two resolved bands beyond threshold; rate not identifiable")
    if p_n < 2:
        notes.append("n-direction: fewer than two resolved frequencies beyond threshold; rate not identifiable")
    # a direction with nothing above the noise floor beyond its threshold passes vacuously
    passed = bool(w_x <= 1 + 1e-9 and w_n <= 1 + 1e-9 and (c_x > 0 or p_x == 0) and (c_n > 0 or p_n == 0))
    return DecayReport(C_x, c_x, C_n, c_n, j_thr, n_thr, w_x, w_n, p_x, p_n, passed, notes)


# ----------------------------------------------------------------- JSON I/O


def _parse_amplitude(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex amplitude must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(float(value))


def load_potential(source: str | PathLike | Mapping) -> AnalyticPotential:
    """Build an :class:`AnalyticPotential` from a JSON document (path or parsed dict)."""
    if isinstance(source, Mapping):
        doc = dict(source)
    else:
        with open(source) as fh:
            doc = json.load(fh)
    if doc.get("schema", POTENTIAL_SCHEMA) != POTENTIAL_SCHEMA:
        raise ValueError(f"unexpected schema {doc.get('schema')!r}")
    if int(doc.get("version", POTENTIAL_SCHEMA_VERSION)) != POTENTIAL_SCHEMA_VERSION:
        raise ValueError(f"unsupported potential schema version {doc.get('version')}")
    modes: dict[int, list[TimeTerm]] = {}
    for entry in doc.get("modes", []):
        k = int(entry["k"])
        for term in entry.get("terms", []):
            modes.setdefault(k, []).append(
                TimeTerm(
                    _parse_amplitude(term.get("amplitude", 1.0)),
                    term.get("fn", "cos"),
                    float(term.get("omega", 0.0)),
                    float(term.get("phase", 0.0)),
                )
            )
    return AnalyticPotential(
        modes,
        strip_width=float(doc.get("strip_width", 1.0)),
        sup_bound=doc.get("sup_bound"),
        label=doc.get("label", ""),
        fill_conjugates=bool(doc.get("fill_conjugates", True)),
    )


def potential_to_json(V: AnalyticPotential) -> dict:
    modes = []
    for k, terms in V.modes.items():
        modes.append(
            {
                "k": k,
                "terms": [
                    {
                        "amplitude": [t.amplitude.real, t.amplitude.imag] if t.amplitude.imag else t.amplitude.real,
                        "fn": t.fn,
                        "omega": t.omega,
                        "phase": t.phase,
                    }
                    for t in terms
                ],
            }
        )
    return {
        "schema": POTENTIAL_SCHEMA,
        "version": POTENTIAL_SCHEMA_VERSION,
        "label": V.label,
        "strip_width": V.strip_width,
        "sup_bound": V.sup_bound,
        "fill_conjugates": False,
        "modes": modes,
    }


# ------------------------------------------------------------ stock potentials

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def zero_potential() -> AnalyticPotential:
    return AnalyticPotential({}, label="zero")


def cosine_potential(amplitude: float = 1.0) -> AnalyticPotential:
    """``V = 2 amplitude cos x``, constant in time."""
    return AnalyticPotential({1: [TimeTerm(amplitude)]}, label="2cos(x)")


def uniform_potential(amplitude: float = 0.5, omega: float = 1.0) -> AnalyticPotential:
    """x-independent ``V(t) = amplitude cos(omega t)``."""
    return AnalyticPotential({0: [TimeTerm(amplitude, "cos", omega)]}, label="x-independent")


def three_mode_potential(eps: float = 0.1) -> AnalyticPotential:
    """``2 eps [cos(g t) cos x + cos(sqrt2 t) cos 2x / 2 + cos(sqrt3 t) cos 3x / 4]``, g the golden ratio.

    Quasi-periodic in t (frequencies 1.618, 1.414, 1.732 are rationally
    independent and stay away from the integer gaps of j^2).
    """
    return AnalyticPotential(
        {
            1: [TimeTerm(eps, "cos", GOLDEN)],
            2: [TimeTerm(eps / 2, "cos", math.sqrt(2.0))],
            3: [TimeTerm(eps / 4, "cos", math.sqrt(3.0))],
        },
        label="three-mode",
    )


def periodic_potential(eps: float = 0.1, period_scale: int = 2) -> AnalyticPotential:
    """Time-periodic ``2 eps cos x cos(t / T)`` with integer ``T`` (period ``2 pi T``)."""
    return AnalyticPotential({1: [TimeTerm(eps, "cos", 1.0 / period_scale)]}, label=f"periodic-T{period_scale}")


class RandomRefreshPotential(Potential):
    """``V = sum_r w_r(t) V_r(x)`` with fresh random phases on each unit interval.

    ``V_r(x) = sum_{k=1..K} 2 a_k cos(k x + theta_{k,r})`` and the weights
    ``w_r(t) = S(t - r + 1) - S(t - r)`` form a Gevrey-smooth partition of
    unity built from the cutoff's step. Phases are drawn from a generator
    seeded by ``(seed, r)`` so any time window is reproducible.
    """

    def __init__(self, seed: int, amplitudes: Sequence[float] = (0.1, 0.05, 0.025), alpha: float = 1.5, label: str = ""):
        self.seed = int(seed)
        self.amplitudes = np.asarray(amplitudes, dtype=float)
        self.cutoff = GevreyCutoff(alpha)
        self.sup_bound = float(2 * self.amplitudes.sum())
        self.label = label or f"random-refresh(seed={seed})"
        self._cache: dict[int, np.ndarray] = {}

    @property
    def x_band(self) -> int:
        return len(self.amplitudes)

    def _phases(self, r: int) -> np.ndarray:
        if r not in self._cache:
            rng = np.random.default_rng([self.seed, r + (1 << 40)])
            self._cache[r] = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, len(self.amplitudes)))
        return self._cache[r]

    def _positive_coeffs(self, t: float) -> np.ndarray:
        r = math.floor(t)
        s = float(self.cutoff.step(t - r))
        return self.amplitudes * ((1.0 - s) * self._phases(r) + s * self._phases(r + 1))

    def xcoeffs(self, t: float, j_max: int) -> np.ndarray:
        K = len(self.amplitudes)
        if K > j_max:
            raise ValueError(f"potential carries |k| = {K} beyond the requested band {j_max}")
        out = np.zeros(2 * j_max + 1, dtype=complex)
        pos = self._positive_coeffs(t)
        out[j_max + 1 : j_max + K + 1] = pos
        out[j_max - K : j_max][::-1] = np.conj(pos)
        return out
