"""Euler-Maruyama simulation, quadratic-variation time change and estimators.

Random numbers come from a counter-based generator: the normal used by path
``p`` at step ``k`` is a pure function of ``(seed, p, k)``. Ensembles are cut
into fixed chunks by path index, so results do not depend on how many worker
threads run the chunks.

Two simulation modes exist. :func:`simulate` keeps whole trajectories and is
meant for modest ensembles (time change, plots, tests). :func:`simulate_summary`
streams each path and keeps only the per-path statistics the estimators need;
it can stop every path once its quadratic variation reaches a changed-time
horizon, which is how time-changed functionals are computed at scale.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numba as nb
import numpy as np

from .errors import DomainError, EvaluationError
from .model import CoefficientField, ControlFamily, policy_field
from .numerics import monotone_inverse

__all__ = [
    "SimConfig",
    "SimulatedPath",
    "TimeChangedPath",
    "PathEnsemble",
    "EnsembleSummary",
    "Estimate",
    "DominanceReport",
    "counter_normals",
    "simulate",
    "simulate_summary",
    "time_change",
    "realized_qv",
    "empirical_ruin",
    "empirical_drawdown",
    "dominance_check",
    "export_ensemble",
]

CHUNK = 2048
_U64 = (1 << 64) - 1
# bridge crossing probabilities exp(-a) below e^-50 are ignored
_BRIDGE_CUTOFF = 50.0


# ---------------------------------------------------------------------------
# Counter-based normals
# ---------------------------------------------------------------------------


@nb.njit(inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@nb.njit(inline="always")
def _path_key(seed, path):
    return _mix(seed ^ _mix(np.uint64(path) + np.uint64(0x632BE59BD9B4E019)))


@nb.njit(inline="always")
def _normal_pair(key, j):
    h1 = _mix(key + (np.uint64(j) + np.uint64(1)) * np.uint64(0x9E3779B97F4A7C15))
    h2 = _mix(h1 ^ np.uint64(0xD1B54A32D192ED03))
    u1 = ((h1 >> np.uint64(11)) + np.uint64(1)) * (1.0 / 9007199254740992.0)
    u2 = (h2 >> np.uint64(11)) * (1.0 / 9007199254740992.0)
    r = math.sqrt(-2.0 * math.log(u1))
    t = 2.0 * math.pi * u2
    return r * math.cos(t), r * math.sin(t)


@nb.njit(nogil=True, cache=True)
def _normals_kernel(seed, path, n, out):
    key = _path_key(seed, path)
    for j in range((n + 1) // 2):
        a, b = _normal_pair(key, j)
        out[2 * j] = a
        if 2 * j + 1 < n:
            out[2 * j + 1] = b


def counter_normals(seed: int, path: int, n: int) -> np.ndarray:
    """The first ``n`` standard normals of path ``path`` under ``seed``."""
    out = np.empty(int(n))
    _normals_kernel(np.uint64(int(seed) & _U64), int(path), int(n), out)
    return out


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


@nb.njit(inline="always")
def _coef(x, lo, inv_step, tm, ts):
    n = tm.size
    if n == 1:
        return tm[0], ts[0], True
    pos = (x - lo) * inv_step
    if not (pos >= 0.0 and pos <= n - 1):
        return 0.0, 0.0, False
    i = int(pos)
    if i >= n - 1:
        i = n - 2
    w = pos - i
    return tm[i] + w * (tm[i + 1] - tm[i]), ts[i] + w * (ts[i + 1] - ts[i]), True


@nb.njit(nogil=True, cache=True)
def _summary_kernel(seed, start, stop, x0, dt, n_steps, qv_stop, lo, inv_step, tm, ts,
                    barrier, bridge, stop_on_ruin, alphas,
                    terminal, run_min, run_max, survival, margin_min, qv_end, steps, valid):
    sq = math.sqrt(dt)
    na = alphas.size
    margins = np.empty(na)
    for p in range(start, stop):
        i = p - start
        key = _path_key(seed, p)
        x = x0
        mn = x0
        mx = x0
        qv = 0.0
        surv = 1.0
        if x0 < barrier:
            surv = 0.0
        for a in range(na):
            margins[a] = x0 - alphas[a] * x0
        ok = True
        z1 = 0.0
        k = 0
        while k < n_steps and qv < qv_stop:
            if k % 2 == 0:
                z, z1 = _normal_pair(key, k // 2)
            else:
                z = z1
            m, s, inside = _coef(x, lo, inv_step, tm, ts)
            if not inside or not (s > 0.0):
                ok = False
                break
            xn = x + m * dt + s * sq * z
            if not (abs(xn) < 1e300):
                ok = False
                break
            if surv > 0.0:
                if xn < barrier:
                    surv = 0.0
                elif bridge:
                    e = 2.0 * (x - barrier) * (xn - barrier) / (s * s * dt)
                    if e < _BRIDGE_CUTOFF:
                        surv *= 1.0 - math.exp(-e)
            qv += s * s * dt
            x = xn
            k += 1
            if x < mn:
                mn = x
            if x > mx:
                mx = x
            for a in range(na):
                g = x - alphas[a] * mx
                if g < margins[a]:
                    margins[a] = g
            if stop_on_ruin and surv == 0.0:
                break
        terminal[i] = x
        run_min[i] = mn
        run_max[i] = mx
        survival[i] = surv
        for a in range(na):
            margin_min[i, a] = margins[a]
        qv_end[i] = qv
        steps[i] = k
        valid[i] = ok


@nb.njit(nogil=True, cache=True)
def _path_kernel(seed, start, stop, x0, dt, n_steps, lo, inv_step, tm, ts,
                 values, drifts, sigmas, qv, valid):
    sq = math.sqrt(dt)
    for p in range(start, stop):
        i = p - start
        key = _path_key(seed, p)
        x = x0
        acc = 0.0
        z1 = 0.0
        values[i, 0] = x0
        qv[i, 0] = 0.0
        ok = True
        for k in range(n_steps + 1):
            m, s, inside = _coef(x, lo, inv_step, tm, ts)
            if not inside or not (s > 0.0):
                ok = False
                for r in range(k, n_steps + 1):
                    values[i, r] = np.nan
                    drifts[i, r] = np.nan
                    sigmas[i, r] = np.nan
                    qv[i, r] = np.nan
                break
            drifts[i, k] = m
            sigmas[i, k] = s
            if k == n_steps:
                break
            if k % 2 == 0:
                z, z1 = _normal_pair(key, k // 2)
            else:
                z = z1
            x = x + m * dt + s * sq * z
            acc += s * s * dt
            values[i, k + 1] = x
            qv[i, k + 1] = acc
        valid[i] = ok


# ---------------------------------------------------------------------------
# Configuration and containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """Discretization and ensemble settings.

    ``workers`` only changes how many threads run the fixed path chunks; it
    never changes results. ``state_range`` bounds the coefficient table for
    non-constant fields (paths leaving it are flagged invalid); by default the
    field's own finite domain or a range around ``x0`` scaled by the drift and
    volatility at ``x0`` is used.
    """

    x0: float
    horizon: float
    dt: float
    n_paths: int
    seed: int = 0
    bridge_correction: bool = True
    workers: int = 1
    state_range: tuple[float, float] | None = None
    table_size: int = 8193

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError("dt must be positive")
        if not (math.isfinite(self.horizon) and self.horizon >= self.dt):
            raise DomainError("horizon must be at least dt")
        if self.n_paths < 1:
            raise DomainError("n_paths must be at least 1")
        if not math.isfinite(self.x0):
            raise DomainError("x0 must be finite")
        if self.workers < 1:
            raise DomainError("workers must be at least 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass
class SimulatedPath:
    times: np.ndarray
    values: np.ndarray
    sigmas: np.ndarray
    qv: np.ndarray
    drifts: np.ndarray

    @property
    def martingale(self) -> np.ndarray:
        """``X_t - X_0 - int_0^t mu du`` at the grid times (left-point drift)."""
        dt = np.diff(self.times)
        drift_part = np.concatenate([[0.0], np.cumsum(self.drifts[:-1] * dt)])
        return self.values - self.values[0] - drift_part


@dataclass
class TimeChangedPath:
    changed_times: np.ndarray
    values: np.ndarray
    martingale: np.ndarray
    original_times: np.ndarray


@dataclass
class PathEnsemble:
    cfg: SimConfig
    times: np.ndarray
    values: np.ndarray
    drifts: np.ndarray
    sigmas: np.ndarray
    qv: np.ndarray
    valid: np.ndarray

    def __len__(self):
        return self.values.shape[0]

    @property
    def n_invalid(self) -> int:
        return int((~self.valid).sum())

    def path(self, i: int) -> SimulatedPath:
        return SimulatedPath(self.times, self.values[i], self.sigmas[i], self.qv[i], self.drifts[i])

    def __iter__(self):
        for i in np.flatnonzero(self.valid):
            yield self.path(int(i))


@dataclass
class EnsembleSummary:
    """Per-path statistics from a streamed simulation.

    ``survival`` is the probability of not having crossed ``barrier`` (bridge
    corrected when ``cfg.bridge_correction``); ``margin_min[:, j]`` is the
    running minimum of ``X - alphas[j] * M``. With ``qv_horizon`` set every
    path stopped at the first step whose quadratic variation reached it.
    """

    cfg: SimConfig
    terminal: np.ndarray
    running_min: np.ndarray
    running_max: np.ndarray
    survival: np.ndarray
    margin_min: np.ndarray
    qv_end: np.ndarray
    steps: np.ndarray
    valid: np.ndarray
    barrier: float = -math.inf
    alphas: tuple[float, ...] = ()
    qv_horizon: float | None = None
    stop_on_ruin: bool = False

    def __len__(self):
        return self.terminal.size

    @property
    def n_invalid(self) -> int:
        return int((~self.valid).sum())


class Estimate(NamedTuple):
    prob: float
    stderr: float
    n: int


@dataclass
class DominanceReport:
    functional_name: str
    cdf_grid: np.ndarray
    cdf_a: np.ndarray
    cdf_b: np.ndarray
    max_violation: float
    violation_se: float
    dominant: bool
    n_a: int = 0
    n_b: int = 0
    notes: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Simulation drivers
# ---------------------------------------------------------------------------


def _as_field(field_or_policy) -> CoefficientField:
    if isinstance(field_or_policy, CoefficientField):
        return field_or_policy
    family, policy = field_or_policy
    return policy_field(family, policy)


def _coefficient_table(fld: CoefficientField, cfg: SimConfig):
    if fld.constant is not None:
        m, s = fld.constant
        return 0.0, 0.0, np.array([float(m)]), np.array([float(s)])
    if cfg.state_range is not None:
        lo, hi = map(float, cfg.state_range)
    elif fld.domain.is_finite:
        lo, hi = fld.domain.lo, fld.domain.hi
    else:
        m0 = abs(float(fld.drift(cfg.x0)))
        s0 = float(fld.vol(cfg.x0))
        radius = 5.0 * (m0 * cfg.horizon + 4.0 * s0 * math.sqrt(cfg.horizon)) + 1.0
        lo, hi = cfg.x0 - radius, cfg.x0 + radius
    if not lo < hi:
        raise DomainError("empty state range")
    if fld.table is not None:
        xs, ms, ss = fld.table
        grid = np.linspace(lo, hi, max(cfg.table_size, 4 * len(xs)))
        tm, ts = np.interp(grid, xs, ms), np.interp(grid, xs, ss)
    else:
        grid, tm, ts = fld.tabulate(lo, hi, cfg.table_size)
        grid = np.asarray(grid, dtype=float)
        if grid.size != cfg.table_size or not np.allclose(np.diff(grid), (hi - lo) / (grid.size - 1)):
            tm = np.interp(np.linspace(lo, hi, cfg.table_size), grid, tm)
            ts = np.interp(np.linspace(lo, hi, cfg.table_size), grid, ts)
            grid = np.linspace(lo, hi, cfg.table_size)
    tm = np.ascontiguousarray(tm, dtype=float)
    ts = np.ascontiguousarray(ts, dtype=float)
    if not (np.all(np.isfinite(tm)) and np.all(np.isfinite(ts))):
        bad = int(np.flatnonzero(~(np.isfinite(tm) & np.isfinite(ts)))[0])
        raise EvaluationError("coefficients are not finite on the state range", abscissa=float(grid[bad]))
    return float(lo), (grid.size - 1) / (hi - lo), tm, ts


def _chunks(n: int):
    return [(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]


def _run_chunks(job, n: int, workers: int):
    chunks = _chunks(n)
    if workers == 1 or len(chunks) == 1:
        for c in chunks:
            job(*c)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda c: job(*c), chunks))


def simulate(field_or_policy, cfg: SimConfig) -> PathEnsemble:
    """Whole-trajectory Euler-Maruyama ensemble.

    ``field_or_policy`` is a :class:`CoefficientField` or a
    ``(ControlFamily, policy)`` pair. Memory is ``O(n_paths * n_steps)``.
    """
    fld = _as_field(field_or_policy)
    lo, inv_step, tm, ts = _coefficient_table(fld, cfg)
    n, k = cfg.n_paths, cfg.n_steps
    values = np.empty((n, k + 1))
    drifts = np.empty((n, k + 1))
    sigmas = np.empty((n, k + 1))
    qv = np.empty((n, k + 1))
    valid = np.empty(n, dtype=np.bool_)
    seed = np.uint64(int(cfg.seed) & _U64)

    def job(a, b):
        _path_kernel(seed, a, b, float(cfg.x0), float(cfg.dt), k, lo, inv_step, tm, ts,
                     values[a:b], drifts[a:b], sigmas[a:b], qv[a:b], valid[a:b])

    _run_chunks(job, n, cfg.workers)
    times = np.arange(k + 1) * cfg.dt
    return PathEnsemble(cfg, times, values, drifts, sigmas, qv, valid)


def simulate_summary(field_or_policy, cfg: SimConfig, *, barrier: float | None = None,
                     alphas: Sequence[float] = (), qv_horizon: float | None = None,
                     stop_on_ruin: bool = False) -> EnsembleSummary:
    """Streamed simulation keeping per-path running statistics only.

    With ``qv_horizon`` the paths run until their quadratic variation reaches
    it (the changed-time horizon) instead of until ``cfg.horizon``.
    ``stop_on_ruin`` ends a path once it has crossed ``barrier``; only the
    ruin estimate is meaningful afterwards.
    """
    fld = _as_field(field_or_policy)
    lo, inv_step, tm, ts = _coefficient_table(fld, cfg)
    alphas_arr = np.asarray(tuple(alphas), dtype=float).reshape(-1)
    if np.any((alphas_arr < 0) | (alphas_arr > 1)):
        raise DomainError("drawdown levels must lie in [0, 1]")
    if qv_horizon is not None:
        if not qv_horizon > 0:
            raise DomainError("qv_horizon must be positive")
        s_min = float(ts.min())
        n_steps = int(math.ceil(qv_horizon / (s_min * s_min * cfg.dt))) + 1
        qv_stop = float(qv_horizon)
    else:
        n_steps = cfg.n_steps
        qv_stop = math.inf
    b = -math.inf if barrier is None else float(barrier)
    n = cfg.n_paths
    out = dict(
        terminal=np.empty(n), running_min=np.empty(n), running_max=np.empty(n), survival=np.empty(n),
        margin_min=np.empty((n, alphas_arr.size)), qv_end=np.empty(n), steps=np.empty(n, dtype=np.int64),
        valid=np.empty(n, dtype=np.bool_),
    )
    seed = np.uint64(int(cfg.seed) & _U64)

    def job(a, c):
        _summary_kernel(seed, a, c, float(cfg.x0), float(cfg.dt), n_steps, qv_stop, lo, inv_step, tm, ts,
                        b, bool(cfg.bridge_correction), bool(stop_on_ruin), alphas_arr,
                        out["terminal"][a:c], out["running_min"][a:c], out["running_max"][a:c],
                        out["survival"][a:c], out["margin_min"][a:c], out["qv_end"][a:c],
                        out["steps"][a:c], out["valid"][a:c])

    _run_chunks(job, n, cfg.workers)
    summary = EnsembleSummary(cfg, barrier=b, alphas=tuple(float(a) for a in alphas_arr),
                              qv_horizon=qv_horizon, stop_on_ruin=stop_on_ruin, **out)
    if qv_horizon is not None:
        short = summary.qv_end < qv_horizon
        summary.valid &= ~short
    return summary


# ---------------------------------------------------------------------------
# Time change
# ---------------------------------------------------------------------------


def time_change(path: SimulatedPath, spacing: float | None = None, method: str = "node",
                horizon: float | None = None) -> TimeChangedPath:
    """Resample a path on a uniform grid in quadratic-variation time.

    ``T(t) = inf{u : <M>_u >= t}`` is found with :func:`monotone_inverse`.
    ``method="node"`` reads the path at the first grid node at or after
    ``T(t)`` (a stopping time, which keeps the unit-rate quadratic variation
    of the martingale part unbiased); ``method="linear"`` interpolates
    linearly between nodes. ``spacing`` defaults to the median QV step.
    """
    qv = np.asarray(path.qv, dtype=float)
    if np.any(np.isnan(qv)) or np.any(np.isnan(path.values)):
        raise DomainError("cannot time-change an invalid path")
    steps = np.diff(qv)
    if np.any(steps <= 0):
        raise DomainError("quadratic variation has a flat segment (volatility underflow)")
    if spacing is None:
        spacing = float(np.median(steps))
    end = qv[-1] if horizon is None else float(horizon)
    if end > qv[-1] * (1 + 1e-12):
        raise DomainError("changed-time horizon exceeds the path's quadratic variation")
    n = int(math.floor(end / spacing * (1 + 1e-12))) + 1
    grid = np.arange(n) * spacing
    grid = np.minimum(grid, qv[-1])
    original = monotone_inverse(path.times, qv, grid)
    mart = path.martingale
    if method == "node":
        idx = np.searchsorted(qv, grid - 1e-9 * spacing, side="left")
        idx = np.minimum(idx, qv.size - 1)
        values, mvals = path.values[idx], mart[idx]
    elif method == "linear":
        values = np.interp(original, path.times, path.values)
        mvals = np.interp(original, path.times, mart)
    else:
        raise ValueError(f"unknown method {method!r}")
    return TimeChangedPath(grid, values, mvals, original)


def realized_qv(path: TimeChangedPath) -> np.ndarray:
    """Cumulative sum of squared increments of the changed martingale part."""
    inc = np.diff(path.martingale)
    return np.concatenate([[0.0], np.cumsum(inc * inc)])


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


def _binomial(p: float, n: int) -> Estimate:
    p = min(max(p, 0.0), 1.0)
    return Estimate(p, math.sqrt(p * (1 - p) / n) if n else math.nan, n)


def empirical_ruin(ensemble, barrier_b: float) -> Estimate:
    """Finite-horizon probability that the path falls below ``barrier_b``.

    With bridge correction, each step whose endpoints are both above the
    barrier still crosses it with probability
    ``exp(-2 (X_k - b)(X_{k+1} - b) / (sigma_k^2 dt))``.
    """
    b = float(barrier_b)
    cfg = ensemble.cfg
    if isinstance(ensemble, EnsembleSummary):
        ok = ensemble.valid
        if cfg.bridge_correction or ensemble.stop_on_ruin:
            if ensemble.barrier != b:
                raise DomainError(f"summary was simulated for barrier {ensemble.barrier}, not {b}")
            ruin = 1.0 - ensemble.survival[ok]
        else:
            ruin = np.where(cfg.x0 < b, 1.0, (ensemble.running_min[ok] < b).astype(float))
        return _binomial(float(np.mean(ruin)) if ruin.size else math.nan, int(ok.sum()))

    ok = ensemble.valid
    vals = ensemble.values[ok]
    if cfg.x0 < b:
        return _binomial(1.0, int(ok.sum()))
    crossed = np.any(vals < b, axis=1)
    if not cfg.bridge_correction:
        return _binomial(float(crossed.mean()), int(ok.sum()))
    sig = ensemble.sigmas[ok][:, :-1]
    lo_gap = vals[:, :-1] - b
    hi_gap = vals[:, 1:] - b
    with np.errstate(over="ignore", invalid="ignore"):
        e = 2.0 * lo_gap * hi_gap / (sig * sig * cfg.dt)
        step_cross = np.where((lo_gap >= 0) & (hi_gap >= 0) & (e < _BRIDGE_CUTOFF), np.exp(-e), 0.0)
    survival = np.where(crossed, 0.0, np.prod(1.0 - step_cross, axis=1))
    return _binomial(float(np.mean(1.0 - survival)), int(ok.sum()))


def empirical_drawdown(ensemble, alpha: float) -> Estimate:
    """Probability that ``X_t <= alpha * M_t`` at some grid time (no bridge)."""
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must lie in [0, 1]")
    if ensemble.cfg.x0 < 0:
        raise DomainError("drawdown needs a non-negative initial state")
    if isinstance(ensemble, EnsembleSummary):
        if alpha not in ensemble.alphas:
            raise DomainError(f"summary was not simulated with drawdown level {alpha}")
        if ensemble.stop_on_ruin:
            raise DomainError("summary paths stopped at ruin; drawdown is not available")
        j = ensemble.alphas.index(alpha)
        hit = ensemble.margin_min[ensemble.valid, j] <= 0.0
        return _binomial(float(hit.mean()) if hit.size else math.nan, hit.size)
    vals = ensemble.values[ensemble.valid]
    peak = np.maximum.accumulate(vals, axis=1)
    hit = np.any(vals - alpha * peak <= 0.0, axis=1)
    return _binomial(float(hit.mean()), hit.size)


def _functional_label(functional: str, alpha: float | None) -> str:
    if functional == "drawdown_margin":
        return f"drawdown_margin(alpha={alpha})"
    return functional


def _changed_values(ens: PathEnsemble, spacing: float, horizon: float, functional: str, alpha):
    out = []
    for path in ens:
        tc = time_change(path, spacing=spacing, horizon=horizon)
        v = tc.values
        if functional == "infimum":
            out.append(v.min())
        elif functional == "terminal":
            out.append(v[-1])
        else:
            out.append(np.min(v - alpha * np.maximum.accumulate(v)))
    return np.asarray(out)


def _summary_values(s: EnsembleSummary, functional: str, alpha):
    ok = s.valid
    if functional == "infimum":
        return s.running_min[ok]
    if functional == "terminal":
        return s.terminal[ok]
    if alpha not in s.alphas:
        raise DomainError(f"summary was not simulated with drawdown level {alpha}")
    return s.margin_min[ok, s.alphas.index(alpha)]


def dominance_check(ensemble_a, ensemble_b, functional: str = "infimum", alpha: float | None = None,
                    grid_size: int = 512, changed_horizon: float | None = None) -> DominanceReport:
    """Empirical test of ``functional(a) <=_st functional(b)`` in changed time.

    The CDFs of the per-path functional are compared on a shared grid of
    pooled quantiles. ``dominant`` holds when the largest excess
    ``CDF_b - CDF_a`` stays within three standard errors at that point.

    Summaries must come from :func:`simulate_summary` with the same
    ``qv_horizon``. Whole-path ensembles are time-changed here onto a common
    grid whose spacing is the coarser ensemble's median QV step, up to the
    smallest QV reached by any path (or ``changed_horizon``).
    """
    if functional not in ("infimum", "terminal", "drawdown_margin"):
        raise ValueError(f"unknown functional {functional!r}")
    if functional == "drawdown_margin":
        if alpha is None or not 0.0 <= alpha <= 1.0:
            raise DomainError("drawdown_margin needs alpha in [0, 1]")
    notes = []
    if isinstance(ensemble_a, EnsembleSummary) and isinstance(ensemble_b, EnsembleSummary):
        if ensemble_a.qv_horizon is None or ensemble_a.qv_horizon != ensemble_b.qv_horizon:
            raise DomainError("summaries must share a changed-time (quadratic variation) horizon")
        va = _summary_values(ensemble_a, functional, alpha)
        vb = _summary_values(ensemble_b, functional, alpha)
    elif isinstance(ensemble_a, PathEnsemble) and isinstance(ensemble_b, PathEnsemble):
        if len(ensemble_a) == 0 or len(ensemble_b) == 0:
            raise DomainError("empty ensemble")
        steps = []
        ends = []
        for ens in (ensemble_a, ensemble_b):
            q = ens.qv[ens.valid]
            steps.append(float(np.median(np.diff(q, axis=1))))
            ends.append(float(q[:, -1].min()))
        spacing = max(steps)
        horizon = min(ends) if changed_horizon is None else float(changed_horizon)
        notes.append(f"changed-time horizon {horizon:.6g}, spacing {spacing:.6g}")
        va = _changed_values(ensemble_a, spacing, horizon, functional, alpha)
        vb = _changed_values(ensemble_b, spacing, horizon, functional, alpha)
    else:
        raise TypeError("both ensembles must be PathEnsemble or both EnsembleSummary")
    if va.size == 0 or vb.size == 0:
        raise DomainError("empty ensemble")

    pooled = np.sort(np.concatenate([va, vb]))
    qs = np.linspace(0.0, 1.0, grid_size)
    grid = np.unique(np.quantile(pooled, qs, method="inverted_cdf"))
    sa, sb = np.sort(va), np.sort(vb)
    cdf_a = np.searchsorted(sa, grid, side="right") / sa.size
    cdf_b = np.searchsorted(sb, grid, side="right") / sb.size
    excess = cdf_b - cdf_a
    j = int(np.argmax(excess))
    worst = max(float(excess[j]), 0.0)
    se = math.sqrt(cdf_a[j] * (1 - cdf_a[j]) / sa.size + cdf_b[j] * (1 - cdf_b[j]) / sb.size)
    return DominanceReport(_functional_label(functional, alpha), grid, cdf_a, cdf_b, worst, se,
                           worst <= 3.0 * se, sa.size, sb.size, notes)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

EXPORT_COLUMNS = ("path", "terminal", "running_min", "running_max", "ruin", "ruin_prob", "drawdown", "valid")


def export_ensemble(summary: EnsembleSummary, path, alpha: float | None = None) -> None:
    """Write one CSV row per path.

    ``ruin`` is the discretely observed crossing, ``ruin_prob`` the
    (bridge-corrected when configured) crossing probability and ``drawdown``
    the ``alpha``-drawdown flag (empty when no level is given).
    """
    b = summary.barrier
    j = summary.alphas.index(alpha) if alpha is not None else None
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EXPORT_COLUMNS)
        for i in range(len(summary)):
            ruin = int(summary.running_min[i] < b or summary.cfg.x0 < b)
            dd = "" if j is None else int(summary.margin_min[i, j] <= 0.0)
            w.writerow((
                i,
                repr(float(summary.terminal[i])),
                repr(float(summary.running_min[i])),
                repr(float(summary.running_max[i])),
                ruin,
                repr(float(1.0 - summary.survival[i])),
                dd,
                int(summary.valid[i]),
            ))
