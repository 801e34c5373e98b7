"""Unitary time integration and a priori estimates for ``i u_t = -u_xx + V u``.

The integrator is Strang splitting written in the interaction picture: with
``v = exp(i j^2 (t - t0)) u^`` one Strang step reads

    v <- P(t_m)^* exp(-i V(x, t_m) h) P(t_m) v,       P(t) = exp(-i j^2 (t - t0)),

where ``t_m`` is the step midpoint and the pointwise phase is applied on the
collocation grid. This is algebraically the usual half-kinetic / potential /
half-kinetic splitting, but the free phases are evaluated at absolute times
rather than accumulated, so ``V = 0`` is reproduced to roundoff for any ``t``.
Every factor is unitary, hence so is each step.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from os import PathLike
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .potential import AnalyticPotential, Potential
from .torus import (
    TorusField,
    coeffs_to_grid,
    grid_points,
    grid_to_coeffs,
    hs_norm,
    multiplier_profile,
    sobolev_weights,
)

__all__ = [
    "FlowConfig",
    "Trajectory",
    "FlowInstabilityError",
    "evolve",
    "evolve_batch",
    "propagator_matrix",
    "galerkin_matrix",
    "DefectBound",
    "defect_bound",
    "measure_flow_norm",
    "dense_flow_norm",
    "commutator_matrix",
    "commutator_norm",
    "tail_persistence",
    "tail_persistence_norm",
    "flow_commutator",
    "flow_commutator_norm",
]

# fourth-order triple-jump weights
_YOSHIDA_OUTER = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_YOSHIDA_INNER = 1.0 - 2.0 * _YOSHIDA_OUTER


@dataclass(frozen=True)
class FlowConfig:
    """Integrator settings.

    Attributes:
        dt: nominal time step; segments between report times are split into
            ``ceil(length / dt)`` equal steps.
        band: spectral band ``j_max``; the collocation grid has ``2 band + 1`` points.
        scheme: 2 (Strang) or 4 (triple-jump composition of Strang).
        substeps_per_report: when ``report_every`` is used, steps between reports.
        drift_tol: abort if the relative L2 drift exceeds this.

    Accuracy budget: the free flow is exact, so the step only has to resolve
    the coupling phases ``(j^2 - j'^2) t`` across one potential mode, i.e.
    ``dt * (2 band K + K^2) < pi`` with ``K`` the x-band of the potential, and
    ``dt * sup|V|`` small.
    """

    dt: float
    band: int
    scheme: int = 2
    substeps_per_report: int = 1
    drift_tol: float = 1e-6

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")
        if self.band < 0:
            raise ValueError(f"band must be nonnegative, got {self.band}")
        if self.scheme not in (2, 4):
            raise ValueError(f"splitting order must be 2 or 4, got {self.scheme}")
        if self.substeps_per_report < 1:
            raise ValueError("substeps_per_report must be at least 1")

    def coupling_phase(self, x_band: int) -> float:
        """``dt * (2 band K + K^2)``: phase swept per step by the fastest coupling."""
        return self.dt * (2 * self.band * x_band + x_band**2)


class FlowInstabilityError(RuntimeError):
    """Raised when the L2 norm drifts beyond tolerance; carries the partial trajectory."""

    def __init__(self, message: str, partial: Trajectory | None = None, time: float | None = None, drift: float | None = None):
        super().__init__(message)
        self.partial = partial
        self.time = time
        self.drift = drift


@dataclass
class Trajectory:
    """States of a flow at increasing times with cached Sobolev norms.

    ``states`` may be ``None`` for long runs that only keep norms; the last
    state is then held in ``final_state``.
    """

    times: np.ndarray
    states: list[TorusField] | None
    s_list: tuple[float, ...] = (0.0, 1.0)
    norms: dict[float, np.ndarray] = field(default_factory=dict)
    steps: int = 0
    final_state: TorusField | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.states is not None:
            if len(self.times) != len(self.states):
                raise ValueError(f"{len(self.times)} times but {len(self.states)} states")
            self.final_state = self.states[-1]
        if len(self.times) > 1 and not (np.all(np.diff(self.times) > 0) or np.all(np.diff(self.times) < 0)):
            raise ValueError("trajectory times must be strictly monotone")
        self.s_list = tuple(float(s) for s in self.s_list)
        for s in self.s_list:
            self.norm(s)

    def norm(self, s: float) -> np.ndarray:
        s = float(s)
        if s not in self.norms:
            if self.states is None:
                raise KeyError(f"norm for s={s} was not recorded and states were not kept")
            self.norms[s] = np.array([hs_norm(u, s) for u in self.states])
        return self.norms[s]

    @property
    def final(self) -> TorusField:
        return self.final_state

    def l2_drift(self) -> float:
        l2 = self.norm(0.0)
        return float(np.max(np.abs(l2 - l2[0])) / l2[0]) if l2[0] > 0 else 0.0

    def coefficient_array(self) -> np.ndarray:
        if self.states is None:
            raise ValueError("states were not kept for this trajectory")
        return np.array([u.coeffs for u in self.states])

    def to_csv(self, path: str | PathLike) -> None:
        """Columns ``t, l2, hs_<s>...``; floats written with ``repr`` for bit-exact round trips."""
        extra = [s for s in self.s_list if s != 0.0]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "l2"] + [f"hs_{s:g}" for s in extra])
            l2 = self.norm(0.0)
            for i, t in enumerate(self.times):
                writer.writerow([repr(float(t)), repr(float(l2[i]))] + [repr(float(self.norm(s)[i])) for s in extra])


def _segment_plan(t0: float, t1: float, dt: float) -> tuple[int, float]:
    length = t1 - t0
    n = max(int(math.ceil(abs(length) / dt - 1e-12)), 1) if length else 0
    return n, (length / n if n else 0.0)


class _Stepper:
    """Interaction-picture splitting on a fixed grid; acts on arrays ``(..., 2 band + 1)``."""

    def __init__(self, V: Potential, config: FlowConfig, t0: float):
        self.config = config
        self.t0 = float(t0)
        self.band = config.band
        self.j2 = np.arange(-self.band, self.band + 1, dtype=float) ** 2
        self.sample = V.sampler(grid_points(self.band))
        self.trivial = isinstance(V, AnalyticPotential) and V.is_zero()
        if config.scheme == 4:
            self.fractions = ((_YOSHIDA_OUTER, 0.5 * _YOSHIDA_OUTER),
                              (_YOSHIDA_INNER, _YOSHIDA_OUTER + 0.5 * _YOSHIDA_INNER),
                              (_YOSHIDA_OUTER, _YOSHIDA_OUTER + _YOSHIDA_INNER + 0.5 * _YOSHIDA_OUTER))
        else:
            self.fractions = ((1.0, 0.5),)

    def advance(self, v: np.ndarray, offset: float, h: float, n: int) -> np.ndarray:
        """``n`` steps of size ``h`` starting at ``t0 + offset``."""
        if self.trivial:
            return v
        for k in range(n):
            start = offset + k * h
            for weight, centre in self.fractions:
                tau = start + centre * h
                phase = np.exp(-1j * self.j2 * tau)
                g = coeffs_to_grid(phase * v)
                g *= np.exp(-1j * (weight * h) * self.sample(self.t0 + tau))
                v = np.conj(phase) * grid_to_coeffs(g)
        return v

    def to_state(self, v: np.ndarray, offset: float) -> np.ndarray:
        return np.exp(-1j * self.j2 * offset) * v

    def to_frame(self, u: np.ndarray, offset: float) -> np.ndarray:
        return np.exp(1j * self.j2 * offset) * u


def _report_grid(t0: float, t1: float, report_times, config: FlowConfig) -> np.ndarray:
    if report_times is None:
        n, h = _segment_plan(t0, t1, config.dt)
        stride = config.substeps_per_report
        idx = list(range(0, n, stride)) + [n]
        return np.array(sorted(set(idx)), dtype=float) * h + t0 if n else np.array([t0])
    times = np.asarray(report_times, dtype=float)
    lo, hi = min(t0, t1), max(t0, t1)
    if np.any(times < lo - 1e-12) or np.any(times > hi + 1e-12):
        raise ValueError(f"report times must lie in [{lo}, {hi}]")
    times = np.unique(np.concatenate([[t0], times, [t1]]))
    return times if t1 >= t0 else times[::-1]


def evolve(
    u0: TorusField,
    V: Potential,
    t0: float,
    t1: float,
    config: FlowConfig,
    report_times: Sequence[float] | None = None,
    s_list: Sequence[float] = (0.0, 1.0),
    keep_states: bool = True,
) -> Trajectory:
    """Integrate from ``t0`` to ``t1`` (either direction), reporting on a time grid.

    Without ``report_times`` the state is recorded every
    ``config.substeps_per_report`` steps. With ``keep_states=False`` only the
    initial and final states are kept (norms are still recorded at every
    report time).
    """
    if u0.support_limit() > config.band:
        raise ValueError(f"initial datum has band {u0.support_limit()} beyond the integrator band {config.band}")
    if V.x_band > 2 * config.band:
        raise ValueError(f"potential x-band {V.x_band} is not resolved by a grid of band {config.band}")
    if config.coupling_phase(V.x_band) > np.pi:
        warnings.warn(
            f"time step {config.dt} under-resolves the coupling phases (dt*(2 band K + K^2) = "
            f"{config.coupling_phase(V.x_band):.2f} > pi)",
            RuntimeWarning,
            stacklevel=2,
        )
    stepper = _Stepper(V, config, t0)
    times = _report_grid(t0, t1, report_times, config)
    s_list = tuple(float(s) for s in s_list)
    if 0.0 not in s_list:
        s_list = (0.0,) + s_list
    weights = {s: sobolev_weights(config.band, s) for s in s_list}

    v = u0.with_band(config.band).coeffs.copy()
    norm0 = float(np.linalg.norm(v))
    states: list[TorusField] = [TorusField(v.copy(), config.band)]
    norms = {s: [float(np.linalg.norm(weights[s] * v))] for s in s_list}
    done = 1
    total_steps = 0
    last = states[0]

    def record() -> Trajectory:
        return Trajectory(
            times[:done], states if keep_states else None, s_list,
            {s: np.array(norms[s]) for s in s_list}, total_steps, last,
        )

    for a, b in zip(times[:-1], times[1:]):
        n, h = _segment_plan(a, b, config.dt)
        v = stepper.advance(v, a - t0, h, n)
        total_steps += n * len(stepper.fractions)
        u = stepper.to_state(v, b - t0)
        l2 = float(np.linalg.norm(u))
        drift = abs(l2 - norm0) / norm0 if norm0 else 0.0
        if drift > config.drift_tol:
            raise FlowInstabilityError(
                f"L2 drift {drift:.3e} exceeds {config.drift_tol:.1e} at t={b:.6g} (dt={config.dt}, band={config.band})",
                record(),
                float(b),
                drift,
            )
        for s in s_list:
            norms[s].append(float(np.linalg.norm(weights[s] * u)))
        last = TorusField(u, config.band)
        if keep_states:
            states.append(last)
        done += 1
    return record()


def evolve_batch(coeffs: np.ndarray, V: Potential, t0: float, t1: float, config: FlowConfig) -> np.ndarray:
    """Propagate every row of ``coeffs`` (shape ``(m, 2 band + 1)``) from t0 to t1."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape[-1] != 2 * config.band + 1:
        raise ValueError(f"rows must have {2 * config.band + 1} coefficients, got {coeffs.shape[-1]}")
    stepper = _Stepper(V, config, t0)
    n, h = _segment_plan(t0, t1, config.dt)
    v = stepper.advance(coeffs.copy(), 0.0, h, n)
    return stepper.to_state(v, t1 - t0)


def galerkin_matrix(V: Potential, t: float, band: int) -> np.ndarray:
    """``diag(j^2) + [V^(j - j')]`` on ``|j|, |j'| <= band``."""
    vhat = V.xcoeffs(t, 2 * band)
    j = np.arange(-band, band + 1)
    H = vhat[(j[:, None] - j[None, :]) + 2 * band].astype(complex)
    H[np.diag_indices_from(H)] += j.astype(float) ** 2
    return H


def _time_independent(V: Potential) -> bool:
    if isinstance(V, AnalyticPotential):
        return bool(np.all(V._omega == 0))
    return False


def propagator_matrix(V: Potential, t0: float, t1: float, config: FlowConfig, method: str = "auto") -> np.ndarray:
    """Matrix of ``S(t0 -> t1)`` on the band (columns are images of unit modes).

    ``method="expm"`` exponentiates the Galerkin matrix and is only valid for
    time-independent potentials; ``"split"`` propagates the identity with the
    splitting scheme; ``"auto"`` picks ``expm`` when it applies.
    """
    if method == "auto":
        method = "expm" if _time_independent(V) else "split"
    if method == "expm":
        if not _time_independent(V):
            raise ValueError("matrix exponential propagator requires a time-independent potential")
        return scipy.linalg.expm(-1j * (t1 - t0) * galerkin_matrix(V, t0, config.band))
    eye = np.eye(2 * config.band + 1, dtype=complex)
    return evolve_batch(eye, V, t0, t1, config).T


class DefectBound(NamedTuple):
    eta_sup: float
    distance_bound: float
    eta: np.ndarray


def defect_bound(trajectory: Trajectory, V: Potential, config: FlowConfig | None = None) -> DefectBound:
    """Defect ``eta = (i d/dt + Delta - V) u~`` of an approximate trajectory.

    Spatial operators are exact (the product with V is a discrete convolution,
    so eta lives on band ``j_max + K``). The time derivative is taken by
    second-order finite differences in the free-flow frame
    ``w = exp(i j^2 t) u~``, where ``i d/dt u~ + Delta u~ = exp(-i j^2 t) i dw/dt``;
    that removes the fast free phases from the differencing.

    Returns ``sup_t ||eta(t)||`` and the guaranteed distance bound
    ``eps * max|t - t_start|``.
    """
    times = trajectory.times
    if len(times) < 3:
        raise ValueError(f"defect estimate needs at least 3 trajectory samples, got {len(times)}")
    band = trajectory.states[0].j_max if config is None else config.band
    K = V.x_band
    wide = band + K
    j2 = np.arange(-band, band + 1, dtype=float) ** 2
    j2w = np.arange(-wide, wide + 1, dtype=float) ** 2
    U = np.array([u.with_band(band).coeffs for u in trajectory.states])
    W = np.exp(1j * np.outer(times - times[0], j2)) * U
    dW = np.gradient(W, times, axis=0, edge_order=2)
    etas = np.empty(len(times))
    for i, t in enumerate(times):
        kinetic = np.zeros(2 * wide + 1, dtype=complex)
        kinetic[K : K + 2 * band + 1] = np.exp(-1j * (t - times[0]) * j2) * 1j * dW[i]
        vhat = V.xcoeffs(t, K)
        product = np.convolve(vhat, U[i])
        etas[i] = np.linalg.norm(kinetic - product)
    eps = float(etas.max())
    return DefectBound(eps, eps * float(np.max(np.abs(times - times[0]))), etas)


def _weighted(M: np.ndarray, band: int, s: float) -> np.ndarray:
    w = sobolev_weights(band, s)
    return w[:, None] * M / w[None, :]


def dense_flow_norm(V: Potential, s: float, t: float, config: FlowConfig, method: str = "auto") -> float:
    """``||S(t)||_{H^s -> H^s}`` on the band from the full propagator matrix."""
    U = propagator_matrix(V, 0.0, t, config, method)
    return float(np.linalg.norm(_weighted(U, config.band, s), 2))


def measure_flow_norm(
    V: Potential,
    s: float,
    t: float,
    config: FlowConfig,
    probes: int = 20,
    iterations: int = 3,
    seed: int = 0,
) -> float:
    """Probed lower bound on ``||S(t)||_{H^s -> H^s}``.

    Runs power iteration on ``A = W S(t) W^-1`` (``W`` the Sobolev weight)
    for an ensemble of random starts, using backward evolution for the
    adjoint, and returns the largest growth ratio seen.
    """
    if s < 0:
        raise ValueError(f"Sobolev index must be nonnegative, got {s}")
    rng = np.random.default_rng(seed)
    band = config.band
    w = sobolev_weights(band, s)
    y = rng.standard_normal((probes, 2 * band + 1)) + 1j * rng.standard_normal((probes, 2 * band + 1))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    best = 0.0
    for _ in range(max(iterations, 1)):
        z = w * evolve_batch(y / w, V, 0.0, t, config)
        best = max(best, float(np.max(np.linalg.norm(z, axis=1))))
        # adjoint of W S W^-1 is W^-1 S^* W and S(0 -> t)^* = S(t -> 0)
        y = evolve_batch(z * w, V, t, 0.0, config) / w
        y /= np.linalg.norm(y, axis=1, keepdims=True)
    z = w * evolve_batch(y / w, V, 0.0, t, config)
    return max(best, float(np.max(np.linalg.norm(z, axis=1))))


def _coefficients_at(V, t: float, size: int) -> np.ndarray:
    if isinstance(V, Potential):
        return V.xcoeffs(t, size)
    vhat = np.asarray(V, dtype=complex)
    k = (vhat.size - 1) // 2
    out = np.zeros(2 * size + 1, dtype=complex)
    m = min(k, size)
    out[size - m : size + m + 1] = vhat[k - m : k + m + 1]
    return out


def commutator_matrix(V, J: float, band: int, t: float = 0.0) -> np.ndarray:
    """``[V, Pi_J](j, j') = V^(j - j') (Pi_J(j') - Pi_J(j))`` on ``|j|, |j'| <= band``.

    ``V`` is a potential (sampled at time ``t``) or an array of x-coefficients
    centred on ``k = 0``.
    """
    vhat = _coefficients_at(V, t, 2 * band)
    j = np.arange(-band, band + 1)
    p = multiplier_profile(J, j)
    return vhat[(j[:, None] - j[None, :]) + 2 * band] * (p[None, :] - p[:, None])


def commutator_norm(V, J: float, s: float, t: float = 0.0, band: int | None = None) -> float:
    """H^s operator norm of the commutator ``[V, Pi_J]``.

    Rows and columns beyond ``J + K`` (``K`` the x-band of V) are identically
    zero, so the default band makes the result exact.
    """
    if band is None:
        K = V.x_band if isinstance(V, Potential) else (np.asarray(V).size - 1) // 2
        band = int(math.ceil(J)) + K + 1
    C = commutator_matrix(V, J, band, t)
    return float(np.linalg.norm(_weighted(C, band, s), 2))


def _regime_check(J: float, s: float, t: float) -> None:
    if J <= abs(t) ** s:
        warnings.warn(f"outside the stated regime J > |t|^s (J={J}, |t|^s={abs(t) ** s:.3g})", RuntimeWarning, stacklevel=3)


def tail_persistence(u0: TorusField, V: Potential, J: float, s: float, t: float, config: FlowConfig) -> float:
    """``||(I - Pi_J) S(t) u0||_{H^s} / ||u0||_{H^s}``."""
    _regime_check(J, s, t)
    u = evolve(u0, V, 0.0, t, config, report_times=[t], s_list=(0.0,), keep_states=False).final
    tail = TorusField(u.coeffs * (1.0 - multiplier_profile(J, u.frequencies)), u.j_max)
    return hs_norm(tail, s) / hs_norm(u0, s)


def flow_commutator(u0: TorusField, V: Potential, J: float, s: float, t: float, config: FlowConfig) -> float:
    """``||S(t) Pi_J u0 - Pi_J S(t) u0||_{H^s} / ||u0||_{H^s}``."""
    _regime_check(J, s, t)
    u0 = u0.with_band(config.band)
    p = multiplier_profile(J, u0.frequencies)
    both = evolve_batch(np.array([u0.coeffs, p * u0.coeffs]), V, 0.0, t, config)
    diff = TorusField(both[1] - p * both[0], config.band)
    return hs_norm(diff, s) / hs_norm(u0, s)


def tail_persistence_norm(V: Potential, J: float, s: float, t: float, config: FlowConfig, method: str = "auto") -> float:
    """``||(I - Pi_J) S(t)||_{H^s -> H^s}``: the worst-case tail ratio over all data."""
    _regime_check(J, s, t)
    U = propagator_matrix(V, 0.0, t, config, method)
    p = multiplier_profile(J, np.arange(-config.band, config.band + 1))
    return float(np.linalg.norm(_weighted((1.0 - p)[:, None] * U, config.band, s), 2))


def flow_commutator_norm(V: Potential, J: float, s: float, t: float, config: FlowConfig, method: str = "auto") -> float:
    """``||[S(t), Pi_J]||_{H^s -> H^s}`` from the dense propagator."""
    _regime_check(J, s, t)
    U = propagator_matrix(V, 0.0, t, config, method)
    p = multiplier_profile(J, np.arange(-config.band, config.band + 1))
    return float(np.linalg.norm(_weighted(U * p[None, :] - p[:, None] * U, config.band, s), 2))
