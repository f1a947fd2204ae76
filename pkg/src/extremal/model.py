"""Admissible control sets and the extremal coefficient field.

A control family describes, at every state ``x``, which drift/volatility pairs
are available. The extremal process uses, at every state, the admissible pair
with the largest drift-to-variance ratio ``mu / sigma**2``.

Weak uniqueness of the resulting SDE is a user obligation; it is not checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DomainError, EvaluationError
from .numerics import Interval, Tolerance, maximize_1d, maximize_2d

__all__ = [
    "SIGMA_FLOOR",
    "Parametric1D",
    "Parametric2D",
    "Regime",
    "Regimes",
    "ControlFamily",
    "ControlChoice",
    "CoefficientField",
    "constant_field",
    "tabulated_field",
    "policy_field",
    "extremal_choice",
    "extremal_regime_partition",
    "build_extremal_field",
]

#: controls whose volatility falls below this are dropped from the scan
SIGMA_FLOOR = 1e-8

_WHOLE_LINE = Interval(-math.inf, math.inf)


@dataclass(frozen=True)
class Parametric1D:
    """``K(x) = {(mu(x, u), sigma(x, u)) : u in u_range}``."""

    mu: Callable
    sigma: Callable
    u_range: Interval
    domain: Interval = _WHOLE_LINE


@dataclass(frozen=True)
class Parametric2D:
    """Two control coordinates ``(u1, u2)`` ranging over a box."""

    mu: Callable
    sigma: Callable
    ranges: tuple[Interval, Interval]
    domain: Interval = _WHOLE_LINE


@dataclass(frozen=True)
class Regime:
    mu: Callable
    sigma: Callable


@dataclass(frozen=True)
class Regimes:
    """Finitely many regimes; the controller may switch between them at will."""

    regimes: tuple[Regime, ...]
    domain: Interval = _WHOLE_LINE

    def __post_init__(self):
        object.__setattr__(self, "regimes", tuple(self.regimes))
        if not self.regimes:
            raise DomainError("a regime family needs at least one regime")


ControlFamily = Union[Parametric1D, Parametric2D, Regimes]


@dataclass(frozen=True)
class ControlChoice:
    """The maximizing control at one state and the pair it produces."""

    ratio: float
    control: float | tuple[float, float] | int
    mu: float
    sigma: float


def _ratio(mu, sigma):
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(sigma >= SIGMA_FLOOR, mu / (sigma * sigma), -np.inf)
    r = np.where(np.isnan(mu) | np.isnan(sigma), np.nan, r)
    return r if r.ndim else float(r)


def _evaluate(fn: Callable, x):
    """Call ``fn`` on an array, falling back to element-wise evaluation."""
    if isinstance(x, (float, int)):
        return float(fn(x))
    arr = np.asarray(x, dtype=float)
    try:
        out = np.asarray(fn(arr), dtype=float)
        if out.shape == arr.shape:
            return out if out.ndim else float(out)
        if out.ndim == 0:
            return np.full(arr.shape, float(out)) if arr.ndim else float(out)
        raise ValueError
    except (TypeError, ValueError):
        flat = np.array([float(fn(v)) for v in arr.ravel()])
        return flat.reshape(arr.shape) if arr.ndim else float(flat[0])


class CoefficientField:
    """Drift ``m(x)`` and volatility ``s(x) > 0`` of a one-dimensional diffusion.

    ``m`` and ``s`` may be scalar or vectorized callables; :meth:`drift` and
    :meth:`vol` always accept arrays. ``constant`` is set for state-independent
    fields and ``table`` for fields defined by linear interpolation on a grid;
    the simulator uses either as a fast path.
    """

    def __init__(self, m: Callable, s: Callable, domain: Interval = _WHOLE_LINE, *, constant=None, table=None):
        self.m = m
        self.s = s
        self.domain = domain
        self.constant = constant
        self.table = table

    def drift(self, x):
        return _evaluate(self.m, x)

    def vol(self, x):
        return _evaluate(self.s, x)

    def ratio(self, x):
        """``m(x) / s(x)**2``; raises when ``s`` is not strictly positive."""
        s = self.vol(x)
        if isinstance(s, float):
            if not s > 0:
                raise EvaluationError("volatility must be strictly positive", abscissa=x)
            return self.drift(x) / (s * s)
        if np.any(np.asarray(s) <= 0) or np.any(np.isnan(s)):
            raise EvaluationError("volatility must be strictly positive", abscissa=x)
        return self.drift(x) / (np.asarray(s) ** 2 if np.ndim(s) else s * s)

    def tabulate(self, lo: float, hi: float, n: int = 4096) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.table is not None:
            return self.table
        xs = np.linspace(lo, hi, n)
        return xs, np.asarray(self.drift(xs), dtype=float), np.asarray(self.vol(xs), dtype=float)

    def __repr__(self):
        if self.constant is not None:
            return f"CoefficientField(constant m={self.constant[0]!r}, s={self.constant[1]!r})"
        if self.table is not None:
            return f"CoefficientField(tabulated, {len(self.table[0])} nodes)"
        return f"CoefficientField(m={self.m!r}, s={self.s!r}, domain={self.domain})"


def constant_field(m: float, s: float) -> CoefficientField:
    if not s > 0:
        raise DomainError("volatility must be positive")
    m, s = float(m), float(s)
    return CoefficientField(lambda x: np.full(np.shape(x), m) if np.ndim(x) else m,
                            lambda x: np.full(np.shape(x), s) if np.ndim(x) else s,
                            constant=(m, s))


def tabulated_field(xs: Sequence[float], ms: Sequence[float], ss: Sequence[float]) -> CoefficientField:
    """Piecewise-linear field through ``(x, m, s)`` triples; flat beyond the ends."""
    xs = np.asarray(xs, dtype=float)
    ms = np.asarray(ms, dtype=float)
    ss = np.asarray(ss, dtype=float)
    if xs.ndim != 1 or xs.size < 2 or xs.shape != ms.shape or xs.shape != ss.shape:
        raise DomainError("tabulated field needs matching 1-D arrays with at least two nodes")
    if np.any(np.diff(xs) <= 0):
        raise DomainError("tabulated x must be strictly increasing")
    if np.any(ss <= 0):
        raise DomainError("tabulated volatility must be positive")
    return CoefficientField(
        lambda x: np.interp(x, xs, ms) if np.ndim(x) else float(np.interp(x, xs, ms)),
        lambda x: np.interp(x, xs, ss) if np.ndim(x) else float(np.interp(x, xs, ss)),
        Interval(float(xs[0]), float(xs[-1])),
        table=(xs, ms, ss),
    )


def policy_field(family: ControlFamily, policy) -> CoefficientField:
    """Coefficients obtained by applying a feedback ``policy`` inside ``family``.

    ``policy`` maps state to control (a number, a pair, or a regime index); a
    bare constant is accepted as a constant policy.
    """
    rule = policy if callable(policy) else (lambda x, _c=policy: _c)

    if isinstance(family, Parametric1D):
        def m(x):
            return family.mu(x, rule(x))

        def s(x):
            return family.sigma(x, rule(x))
    elif isinstance(family, Parametric2D):
        def m(x):
            u1, u2 = rule(x)
            return family.mu(x, u1, u2)

        def s(x):
            u1, u2 = rule(x)
            return family.sigma(x, u1, u2)
    else:
        regimes = family.regimes

        def m(x):
            return regimes[int(rule(x))].mu(x)

        def s(x):
            return regimes[int(rule(x))].sigma(x)

    return CoefficientField(m, s, family.domain)


def _check_state(family: ControlFamily, x: float):
    if not (family.domain.lo <= x <= family.domain.hi):
        raise DomainError(f"state {x!r} outside family domain {family.domain}")


def extremal_choice(family: ControlFamily, x: float, tol: Tolerance | None = None, n_grid: int = 1024) -> ControlChoice:
    """Admissible control maximizing ``mu / sigma**2`` at state ``x``.

    Controls with ``sigma < SIGMA_FLOOR`` are excluded. Ties go to the lowest
    regime index or smallest control value.
    """
    x = float(x)
    _check_state(family, x)
    tol = tol or Tolerance(abs_tol=1e-10)

    if isinstance(family, Regimes):
        best = None
        for i, reg in enumerate(family.regimes):
            mu, sigma = float(reg.mu(x)), float(reg.sigma(x))
            r = _ratio(mu, sigma)
            if math.isnan(r):
                raise EvaluationError(f"regime {i} returned NaN at x={x!r}", abscissa=x)
            if r == -math.inf:
                continue
            if best is None or r > best.ratio:
                best = ControlChoice(r, i, mu, sigma)
        if best is None:
            raise EvaluationError(f"every regime has vanishing volatility at x={x!r}", abscissa=x)
        return best

    if isinstance(family, Parametric1D):
        res = maximize_1d(lambda u: _ratio(family.mu(x, u), family.sigma(x, u)), family.u_range, tol, n_grid)
        u = float(res.argmax)
        mu, sigma = float(family.mu(x, u)), float(family.sigma(x, u))
        if sigma < SIGMA_FLOOR:
            raise EvaluationError(f"no control with positive volatility at x={x!r}", abscissa=x)
        return ControlChoice(mu / sigma**2, u, mu, sigma)

    if isinstance(family, Parametric2D):
        res = maximize_2d(lambda a, b: _ratio(family.mu(x, a, b), family.sigma(x, a, b)), family.ranges, tol, n_grid)
        a, b = (float(v) for v in res.argmax)
        mu, sigma = float(family.mu(x, a, b)), float(family.sigma(x, a, b))
        if sigma < SIGMA_FLOOR:
            raise EvaluationError(f"no control with positive volatility at x={x!r}", abscissa=x)
        return ControlChoice(mu / sigma**2, (a, b), mu, sigma)

    raise TypeError(f"not a control family: {type(family).__name__}")


def extremal_regime_partition(regimes: Regimes | Sequence[Regime], grid: Sequence[float]) -> list[int]:
    """Index of the ratio-maximizing regime at each grid point (ties: lowest)."""
    regs = regimes.regimes if isinstance(regimes, Regimes) else tuple(regimes)
    if not regs:
        raise DomainError("a regime family needs at least one regime")
    xs = np.asarray(grid, dtype=float)
    if xs.size == 0:
        raise DomainError("grid must be non-empty")
    ratios = np.vstack([_ratio(_evaluate(r.mu, xs), _evaluate(r.sigma, xs)) for r in regs])
    if np.isnan(ratios).any():
        j = int(np.argwhere(np.isnan(ratios))[0][1])
        raise EvaluationError("regime coefficients returned NaN", abscissa=float(xs[j]))
    if np.all(ratios == -np.inf, axis=0).any():
        j = int(np.argmax(np.all(ratios == -np.inf, axis=0)))
        raise EvaluationError("every regime has vanishing volatility", abscissa=float(xs[j]))
    return [int(i) for i in np.argmax(ratios, axis=0)]


@dataclass
class _ChoiceCache:
    family: ControlFamily
    tol: Tolerance
    n_grid: int
    _lookup: Callable = field(init=False, repr=False)

    def __post_init__(self):
        self._lookup = lru_cache(maxsize=1 << 16)(
            lambda x: extremal_choice(self.family, x, self.tol, self.n_grid)
        )

    def __call__(self, x: float) -> ControlChoice:
        return self._lookup(float(x))


class ExtremalField(CoefficientField):
    """Coefficient field of the extremal process for a control family.

    Pointwise evaluation is exact (memoized per state). :meth:`grid_field`
    memoizes choices on a uniform grid over ``domain`` and returns a tabulated
    field for hot loops such as simulation.
    """

    def __init__(self, family: ControlFamily, domain: Interval, tol: Tolerance, n_grid: int = 1024, grid_size: int = 4096):
        self.family = family
        self.grid_size = grid_size
        self._choice = _ChoiceCache(family, tol, n_grid)
        self._grid: CoefficientField | None = None
        super().__init__(lambda x: self._choice(x).mu, lambda x: self._choice(x).sigma, domain)

    def choice(self, x: float) -> ControlChoice:
        if not (self.domain.lo <= x <= self.domain.hi):
            raise DomainError(f"state {x!r} outside field domain {self.domain}")
        return self._choice(x)

    def grid_field(self) -> CoefficientField:
        if self._grid is None:
            if not self.domain.is_finite:
                raise DomainError("grid memoization needs a finite domain")
            xs = np.linspace(self.domain.lo, self.domain.hi, self.grid_size)
            picks = [self._choice(x) for x in xs]
            self._grid = tabulated_field(xs, [c.mu for c in picks], [c.sigma for c in picks])
        return self._grid

    def tabulate(self, lo: float, hi: float, n: int = 4096):
        if self.domain.is_finite:
            return self.grid_field().table
        return super().tabulate(lo, hi, n)


def build_extremal_field(family: ControlFamily, domain: Interval, tol: Tolerance | None = None, n_grid: int = 1024) -> ExtremalField:
    """Extremal coefficient pair ``(m, s)`` of ``family`` on ``domain``."""
    tol = tol or Tolerance(abs_tol=1e-10)
    if domain.lo < family.domain.lo or domain.hi > family.domain.hi:
        raise DomainError(f"field domain {domain} exceeds family domain {family.domain}")
    return ExtremalField(family, domain, tol, n_grid)
