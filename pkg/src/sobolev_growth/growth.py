"""Long-time growth runs, band diagnostics and exponent fits."""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from os import PathLike
from typing import Any, Mapping, Sequence

import numpy as np

from .flow import FlowConfig, FlowInstabilityError, evolve
from .potential import (
    AnalyticPotential,
    Potential,
    RandomRefreshPotential,
    cosine_potential,
    load_potential,
    periodic_potential,
    three_mode_potential,
    uniform_potential,
    zero_potential,
)
from .torus import TorusField, hs_norm, multiplier_profile

__all__ = [
    "ParameterPack",
    "PACKS",
    "get_pack",
    "ExperimentConfig",
    "GrowthRecord",
    "LogFit",
    "report_grid",
    "make_potential",
    "run_growth",
    "three_band_split",
    "band_iteration_trace",
    "fit_log_exponent",
    "envelope_check",
    "boundedness",
    "tail_growth_score",
    "ScenarioResult",
    "scenario_compare",
]

EXPERIMENT_SCHEMA = "sobolev-growth/experiment"
EXPERIMENT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ParameterPack:
    """Exponents of the construction; the ordering ``sigma > sigma' > 2 alpha + delta > 2`` is enforced."""

    name: str
    alpha: float
    delta: float
    sigma: float
    sigma_prime: float
    A: float
    J_budget: int = 4096

    def __post_init__(self):
        chain = 2 * self.alpha + self.delta
        if not (self.sigma > self.sigma_prime > chain > 2):
            raise ValueError(
                f"parameter pack {self.name!r} violates sigma > sigma' > 2 alpha + delta > 2: "
                f"sigma={self.sigma}, sigma'={self.sigma_prime}, 2 alpha + delta={chain:g}"
            )
        if not self.A > 1:
            raise ValueError(f"parameter pack {self.name!r}: A must exceed 1, got {self.A}")

    def J0(self, T: float) -> float:
        return 4.0 * self.A * math.log(T) ** self.sigma

    def J(self, T: float, s: float) -> tuple[int, float, bool]:
        """``(J used, nominal T^(10 s), capped?)``; the nominal scale is capped by ``J_budget``."""
        nominal = float(T) ** (10.0 * s)
        used = int(min(nominal, self.J_budget))
        used -= used % 2
        return max(used, 2), nominal, nominal > self.J_budget


_PACK_VALUES: dict[str, dict[str, float]] = {
    "default": dict(alpha=1.1, delta=0.2, sigma=3.0, sigma_prime=2.5, A=2.0),
    # listed so that requesting it fails loudly: 2 alpha + delta = 3.5 > sigma
    "desk": dict(alpha=1.5, delta=0.5, sigma=2.5, sigma_prime=2.2, A=2.0),
}
PACKS = tuple(_PACK_VALUES)


def get_pack(name: str) -> ParameterPack:
    if name not in _PACK_VALUES:
        raise KeyError(f"unknown parameter pack {name!r}; known: {', '.join(PACKS)}")
    return ParameterPack(name, **_PACK_VALUES[name])


def make_potential(spec: Any, seed: int = 0) -> Potential:
    """Resolve a potential from a name, a ``{"name": ..., params}`` dict, a JSON path or a potential document."""
    if isinstance(spec, Potential):
        return spec
    if isinstance(spec, (str, PathLike)) and str(spec).endswith(".json"):
        return load_potential(spec)
    if isinstance(spec, Mapping) and "modes" in spec:
        return load_potential(spec)
    if isinstance(spec, str):
        name, params = spec, {}
    elif isinstance(spec, Mapping):
        params = dict(spec)
        name = params.pop("name")
    else:
        raise TypeError(f"cannot build a potential from {spec!r}")
    factories = {
        "zero": zero_potential,
        "cosine": cosine_potential,
        "uniform": uniform_potential,
        "three-mode": three_mode_potential,
        "periodic": periodic_potential,
        "random-refresh": lambda **kw: RandomRefreshPotential(seed=kw.pop("seed", seed), **kw),
    }
    if name not in factories:
        raise KeyError(f"unknown potential {name!r}; known: {', '.join(factories)}")
    return factories[name](**params)


def report_grid(t_final: float, mode: str = "dyadic", tail_points: int = 32) -> np.ndarray:
    """Sampling times: dyadic ``{2^k}`` plus a uniform tail on ``[t_final/2, t_final]``, or uniform."""
    if t_final <= 0:
        raise ValueError(f"t_final must be positive, got {t_final}")
    tail = np.linspace(t_final / 2, t_final, tail_points)
    if mode == "uniform":
        return np.unique(np.concatenate([[0.0], np.linspace(0, t_final, 2 * tail_points + 1)[1:]]))
    if mode != "dyadic":
        raise ValueError(f"unknown report grid {mode!r}")
    k_max = int(math.floor(math.log2(t_final))) if t_final >= 1 else -1
    dyadic = 2.0 ** np.arange(0, k_max + 1) if k_max >= 0 else np.zeros(0)
    return np.unique(np.concatenate([[0.0], dyadic, tail]))


@dataclass
class ExperimentConfig:
    """One growth run. Loadable from a versioned JSON document."""

    potential: Any = "three-mode"
    s_list: tuple[float, ...] = (1.0,)
    t_final: float = 1.0e4
    report: str = "dyadic"
    tail_points: int = 32
    params: str = "default"
    T: float = 16.0
    seed: int = 0
    dt: float = 5e-3
    band: int = 64
    datum_band: int | None = None
    scheme: int = 2
    label: str = ""
    out_dir: str | None = None
    bootstrap: int = 200

    def __post_init__(self):
        self.s_list = tuple(float(s) for s in self.s_list)
        if any(s < 0 for s in self.s_list):
            raise ValueError("Sobolev indices must be nonnegative")
        self.pack = get_pack(self.params)
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")
        if self.datum_band is not None and self.datum_band > self.band:
            raise ValueError("datum band exceeds integrator band")
        self.J_records = {s: self.pack.J(self.T, s) for s in self.s_list}

    @property
    def J0(self) -> float:
        return self.pack.J0(self.T)

    @classmethod
    def from_json(cls, source: str | PathLike | Mapping, **overrides) -> ExperimentConfig:
        if isinstance(source, Mapping):
            doc = dict(source)
        else:
            with open(source) as fh:
                doc = json.load(fh)
        if doc.pop("schema", EXPERIMENT_SCHEMA) != EXPERIMENT_SCHEMA:
            raise ValueError("not an experiment document")
        version = int(doc.pop("version", EXPERIMENT_SCHEMA_VERSION))
        if version != EXPERIMENT_SCHEMA_VERSION:
            raise ValueError(f"unsupported experiment schema version {version}")
        doc.update({k: v for k, v in overrides.items() if v is not None})
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["s_list"] = list(self.s_list)
        if isinstance(d["potential"], Potential):
            d["potential"] = getattr(d["potential"], "label", "custom")
        return {"schema": EXPERIMENT_SCHEMA, "version": EXPERIMENT_SCHEMA_VERSION, **d}

    def flow_config(self) -> FlowConfig:
        return FlowConfig(self.dt, self.band, self.scheme)


@dataclass
class LogFit:
    """Fits of ``log y = log C + varsigma s log log(t+2)`` and ``log y = log C' + eps log(t+1)``."""

    C: float
    varsigma: float
    ci: tuple[float, float]
    rss_log: float
    C_poly: float
    epsilon: float
    rss_poly: float
    selected: str
    score: float  # log(rss_log / rss_poly); positive favours the polynomial model
    samples: int


@dataclass
class GrowthRecord:
    label: str
    times: np.ndarray
    norms: dict[float, np.ndarray]
    l2: dict[float, np.ndarray]
    fits: dict[float, LogFit] = field(default_factory=dict)
    J_records: dict[float, tuple] = field(default_factory=dict)
    partial: bool = False
    error: str | None = None

    @property
    def s_list(self) -> tuple[float, ...]:
        return tuple(self.norms)

    def dyadic_mask(self) -> np.ndarray:
        t = self.times
        k = np.log2(np.where(t > 0, t, 1.0))
        return (t >= 1) & (np.abs(k - np.round(k)) < 1e-12)

    def to_csv(self, path: str | PathLike) -> None:
        """Columns ``t`` then ``hs_<s>`` and ``l2_<s>`` per index; floats via ``repr``. Written atomically."""
        path = os.fspath(path)
        cols = ["t"]
        for s in self.norms:
            cols += [f"hs_{s:g}", f"l2_{s:g}"]
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for i, t in enumerate(self.times):
                if any(i >= len(v) for v in self.norms.values()):
                    break
                row = [repr(float(t))]
                for s in self.norms:
                    row += [repr(float(self.norms[s][i])), repr(float(self.l2[s][i]))]
                writer.writerow(row)
        os.replace(tmp, path)

    def fits_to_csv(self, path: str | PathLike) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["s", "C", "varsigma", "ci_low", "ci_high", "rss_log", "epsilon", "rss_poly", "selected"])
            for s, f in self.fits.items():
                writer.writerow([s, repr(f.C), repr(f.varsigma), repr(f.ci[0]), repr(f.ci[1]), repr(f.rss_log), repr(f.epsilon), repr(f.rss_poly), f.selected])


def _lstsq(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    rss = float(np.sum((y - A @ coef) ** 2))
    return float(coef[0]), float(coef[1]), rss


def fit_log_exponent(
    times,
    norms,
    s: float,
    tail_fraction: float = 0.5,
    n_boot: int = 200,
    seed: int = 0,
    flat_tol: float = 1e-8,
) -> LogFit:
    """Fit the logarithmic growth exponent on the tail of a norm series.

    The tail is the last ``tail_fraction`` of the samples (at least 16 are
    required). The slope against ``s log log(t+2)`` is ``varsigma``; a
    pairs bootstrap with a seeded generator gives a 95% interval. Series
    whose relative spread is below ``flat_tol`` are reported flat with
    ``varsigma = 0`` and a zero-width interval.
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if np.any(norms <= 0):
        raise ValueError("norms must be positive")
    start = int(math.floor(len(times) * (1.0 - tail_fraction)))
    t, y = times[start:], np.log(norms[start:])
    if t.size < 16:
        raise ValueError(f"need at least 16 tail samples for the fit, got {t.size}")
    if np.ptp(y) <= flat_tol:
        C = float(np.exp(np.mean(y)))
        return LogFit(C, 0.0, (0.0, 0.0), 0.0, C, 0.0, 0.0, "flat", 0.0, int(t.size))
    scale = s if s > 0 else 1.0
    x_log = scale * np.log(np.log(t + 2.0))
    x_poly = np.log(t + 1.0)
    a, slope, rss_log = _lstsq(x_log, y)
    b, eps, rss_poly = _lstsq(x_poly, y)
    rng = np.random.default_rng(seed)
    boots = []
    for _ in range(n_boot):
        idx = rng.integers(0, t.size, t.size)
        if np.ptp(x_log[idx]) == 0:
            continue
        boots.append(_lstsq(x_log[idx], y[idx])[1])
    ci = (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5))) if boots else (slope, slope)
    tiny = 1e-300
    score = float(np.log((rss_log + tiny) / (rss_poly + tiny)))
    selected = "polynomial" if rss_poly < rss_log else "logarithmic"
    return LogFit(float(np.exp(a)), slope, ci, rss_log, float(np.exp(b)), eps, rss_poly, selected, score, int(t.size))


def _default_datum(band: int, s: float) -> TorusField:
    return TorusField.sobolev_datum(band, s)


def run_growth(config: ExperimentConfig, potential: Potential | None = None, csv_path: str | PathLike | None = None) -> GrowthRecord:
    """Evolve the default datum for each ``s`` and record ``||u(t)||_{H^s}`` on the report grid.

    Each ``s`` gets its own datum ``u0^(j) ~ (1+j^2)^(-(s+1)/2)`` normalized
    in ``H^s``. On integrator failure the partial record is returned with
    ``partial=True`` (and written when a path is given).
    """
    V = potential if potential is not None else make_potential(config.potential, config.seed)
    times = report_grid(config.t_final, config.report, config.tail_points)
    flow = config.flow_config()
    datum_band = config.datum_band if config.datum_band is not None else config.band // 2
    norms: dict[float, np.ndarray] = {}
    l2: dict[float, np.ndarray] = {}
    record = GrowthRecord(config.label or getattr(V, "label", ""), times, norms, l2, J_records=dict(config.J_records))
    for s in config.s_list:
        u0 = _default_datum(datum_band, s)
        try:
            traj = evolve(u0, V, 0.0, config.t_final, flow, report_times=times[1:], s_list=(0.0, s), keep_states=False)
        except FlowInstabilityError as exc:
            part = exc.partial
            norms[s], l2[s] = part.norm(s), part.norm(0.0)
            record.partial, record.error = True, str(exc)
            break
        norms[s], l2[s] = traj.norm(s), traj.norm(0.0)
        try:
            record.fits[s] = fit_log_exponent(times, norms[s], s, n_boot=config.bootstrap, seed=config.seed)
        except ValueError as exc:
            record.error = f"fit skipped for s={s}: {exc}"
    if csv_path is None and config.out_dir:
        os.makedirs(config.out_dir, exist_ok=True)
        csv_path = os.path.join(config.out_dir, f"growth_{_slug(record.label)}.csv")
    if csv_path is not None:
        record.to_csv(csv_path)
    return record


def _slug(text: str) -> str:
    keep = "".join(c if c.isalnum() else "-" for c in text.lower())
    return "-".join(filter(None, keep.split("-"))) or "run"


def three_band_split(u: TorusField, J: float, J0: float) -> tuple[TorusField, TorusField, TorusField]:
    """``low = Pi_{2 J0} u``, ``mid = (Pi_{J/2} - Pi_{2 J0}) u``, ``high = (I - Pi_{J/2}) u``.

    The parts satisfy ``(low + mid) + high == u`` bit for bit: ``mid`` is
    formed as a remainder, and the rare entries where rounding still breaks
    the identity are repaired at the last-ulp level.
    """
    if not 2 * J0 < J / 2:
        raise ValueError(f"band ordering 2 J0 < J/2 violated (J0={J0}, J={J})")
    c = u.coeffs
    j = u.frequencies
    low = multiplier_profile(2 * J0, j) * c
    high = c - multiplier_profile(J / 2, j) * c
    mid = (c - high) - low
    low, mid, high = _repair_sum(low, mid, high, c)
    return TorusField(low, u.j_max), TorusField(mid, u.j_max), TorusField(high, u.j_max)


def _repair_sum(low: np.ndarray, mid: np.ndarray, high: np.ndarray, target: np.ndarray):
    """Nudge entries so that ``(low + mid) + high == target`` holds exactly.

    Tries a few ulps on ``mid`` first; round-half-even ties can make that
    impossible, in which case ``low`` (then ``high``) takes the remainder,
    which Sterbenz's lemma makes exact.
    """
    parts = [np.array(a, dtype=complex) for a in (low, mid, high)]
    for attr in ("real", "imag"):
        lo, mi, hi = (getattr(p, attr).copy() for p in parts)
        tg = getattr(np.asarray(target, dtype=complex), attr)
        for i in np.nonzero((lo + mi) + hi != tg)[0]:
            for _ in range(8):
                mi[i] = np.nextafter(mi[i], np.inf if (lo[i] + mi[i]) + hi[i] < tg[i] else -np.inf)
                if (lo[i] + mi[i]) + hi[i] == tg[i]:
                    break
            else:
                mi[i] = getattr(np.asarray(mid, dtype=complex), attr)[i]
                lo[i] = (tg[i] - hi[i]) - mi[i]
                if (lo[i] + mi[i]) + hi[i] != tg[i]:
                    lo[i] = getattr(np.asarray(low, dtype=complex), attr)[i]
                    hi[i] = tg[i] - (lo[i] + mi[i])
                if (lo[i] + mi[i]) + hi[i] != tg[i]:  # pragma: no cover - not observed
                    raise ArithmeticError("could not make the band split exact")
        for p, new in zip(parts, (lo, mi, hi)):
            if attr == "real":
                p.real = new
            else:
                p.imag = new
    return parts


@dataclass
class BandStep:
    r: int
    low: float
    mid: float
    high: float
    carried: float  # H^s norm of the low band carried to the next step
    bound: float  # carried norm plus all leakage so far


def band_iteration_trace(
    u0: TorusField,
    V: Potential,
    config: FlowConfig,
    T: float,
    J: float,
    J0: float,
    s: float,
) -> list[BandStep]:
    """Iterate ``u <- Pi_{2 J0} S(r-1, r) u`` for ``r = 1..floor(T)``.

    Each step records the ``H^s`` norms of the three bands of ``S(r-1, r) u``.
    ``bound`` is the carried low-band norm plus the accumulated mid and high
    leakage, i.e. the triangle-inequality majorant of the low-frequency part
    of the flow after ``r`` unit steps.
    """
    u = TorusField(u0.with_band(config.band).coeffs * multiplier_profile(2 * J0, np.arange(-config.band, config.band + 1)), config.band)
    leak = 0.0
    trace = []
    for r in range(1, int(math.floor(T)) + 1):
        w = evolve(u, V, r - 1.0, float(r), config, report_times=[float(r)], s_list=(0.0,), keep_states=False).final
        low, mid, high = three_band_split(w, J, J0)
        m, h = hs_norm(mid, s), hs_norm(high, s)
        leak += m + h
        carried = hs_norm(low, s)
        trace.append(BandStep(r, carried, m, h, carried, carried + leak))
        u = low
    return trace


def envelope_check(times, norms, power: float = 4.0, slack: float = 0.05) -> dict:
    """``||u(t)|| / (log(t+2))^power`` on dyadic times must be non-increasing after its maximum (up to ``slack``).

    A maximum at the last dyadic time means the ratio never turned over, so
    the check fails rather than passing vacuously.
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    k = np.log2(np.where(times > 0, times, 1.0))
    mask = (times >= 1) & (np.abs(k - np.round(k)) < 1e-12)
    t, y = times[mask], norms[mask] / np.log(times[mask] + 2.0) ** power
    peak = int(np.argmax(y))
    after = y[peak:]
    jumps = after[1:] / after[:-1] if after.size > 1 else np.ones(0)
    worst = float(jumps.max()) if jumps.size else 1.0
    turned = peak < y.size - 1 or y.size == 1
    return {"times": t, "ratios": y, "peak_index": peak, "worst_increase": worst, "passed": bool(turned and worst <= 1.0 + slack)}


def boundedness(norms, tail_fraction: float = 0.5, tol: float = 0.05) -> tuple[bool, float]:
    """Bounded verdict: tail sup within ``tol`` of the tail median. Returns (verdict, sup/median)."""
    norms = np.asarray(norms, dtype=float)
    tail = norms[int(math.floor(len(norms) * (1 - tail_fraction))):]
    ratio = float(tail.max() / np.median(tail))
    return ratio <= 1.0 + tol, ratio


def tail_growth_score(norms, tail_fraction: float = 0.5) -> float:
    """``log(median tail norm / initial norm)``."""
    norms = np.asarray(norms, dtype=float)
    tail = norms[int(math.floor(len(norms) * (1 - tail_fraction))):]
    return float(np.log(np.median(tail) / norms[0]))


@dataclass
class ScenarioResult:
    label: str
    s: float
    varsigma: float | None
    ci: tuple[float, float] | None
    selected: str | None
    bounded: bool | None
    sup_over_median: float | None
    growth_score: float | None
    error: str | None = None
    record: GrowthRecord | None = None


def scenario_compare(configs: Sequence[ExperimentConfig], out_path: str | PathLike | None = None) -> list[ScenarioResult]:
    """Run each scenario and tabulate exponent fits and boundedness side by side.

    Failures are isolated per scenario.
    """
    if len(configs) < 2:
        raise ValueError("scenario comparison needs at least two scenarios")
    results = []
    for cfg in configs:
        label = cfg.label or str(cfg.potential)
        try:
            rec = run_growth(cfg)
            s = cfg.s_list[0]
            fit = rec.fits.get(s)
            bounded, ratio = boundedness(rec.norms[s])
            results.append(
                ScenarioResult(
                    label, s,
                    None if fit is None else fit.varsigma,
                    None if fit is None else fit.ci,
                    None if fit is None else fit.selected,
                    bounded, ratio, tail_growth_score(rec.norms[s]), rec.error, rec,
                )
            )
        except Exception as exc:  # isolate the failure, keep the table going
            results.append(ScenarioResult(label, cfg.s_list[0], None, None, None, None, None, None, f"{type(exc).__name__}: {exc}"))
    if out_path is not None:
        with open(out_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario", "s", "varsigma", "ci_low", "ci_high", "model", "bounded", "sup_over_median", "growth_score", "error"])
            for r in results:
                writer.writerow([
                    r.label, r.s,
                    "" if r.varsigma is None else repr(r.varsigma),
                    "" if r.ci is None else repr(r.ci[0]),
                    "" if r.ci is None else repr(r.ci[1]),
                    r.selected or "",
                    "" if r.bounded is None else r.bounded,
                    "" if r.sup_over_median is None else repr(r.sup_over_median),
                    "" if r.growth_score is None else repr(r.growth_score),
                    r.error or "",
                ])
    return results
