"""Scale function and minimal ruin probability of the extremal diffusion.

For coefficients ``(m, s)`` and a barrier ``b`` the scale function is

    p(x) = int_b^x exp(-2 int_b^xi m(u)/s(u)^2 du) dxi,

and the minimal probability of ever falling below ``b`` from ``x0`` is
``1 - p(x0) / p(inf)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConvergenceError, DomainError, EvaluationError
from .model import CoefficientField
from .numerics import Interval, Tolerance, integrate

__all__ = ["RuinQuery", "ScaleFunctionResult", "RuinResult", "scale_function", "min_ruin_probability"]

# exp(-2 I) is clamped beyond this exponent
_EXP_CAP = 700.0


@dataclass(frozen=True)
class RuinQuery:
    coeffs: CoefficientField
    barrier_b: float
    x0: float

    def __post_init__(self):
        if not (math.isfinite(self.barrier_b) and math.isfinite(self.x0)):
            raise DomainError("barrier and initial state must be finite")
        if not self.x0 > self.barrier_b:
            raise DomainError(f"need x0 > barrier, got x0={self.x0!r}, b={self.barrier_b!r}")


@dataclass
class ScaleFunctionResult:
    p_x: float
    p_upper: float
    upper: float
    converged: bool = True
    tail_estimate: float = 0.0
    clamped: bool = False
    panels: int = 0
    notes: list[str] = field(default_factory=list)


@dataclass
class RuinResult:
    prob: float
    diag: ScaleFunctionResult

    def __iter__(self):
        yield self.prob
        yield self.diag


class _ScaleSweep:
    """Left-to-right accumulation of ``I(xi)`` and ``p(xi)`` with adaptive panels.

    Each panel ``[xi, xi + h]`` advances ``I`` through its quarter points by
    adaptive quadrature of ``m/s^2`` and compares one- and two-panel Simpson
    estimates of ``int exp(-2 I)``. Partial sums are carried forward, so
    extending the sweep never revisits the interval already covered.
    """

    def __init__(self, coeffs: CoefficientField, b: float, rel_tol: float, inner_tol: Tolerance):
        self.coeffs = coeffs
        self.rel_tol = rel_tol
        self.inner_tol = inner_tol
        self.xi = b
        self.origin = b
        self.inner = 0.0
        self.p = 0.0
        self.h = 1e-2
        self.clamped = False
        self.panels = 0
        self.last_increment = 0.0

    def _inner_increment(self, lo: float, hi: float) -> float:
        if self.coeffs.constant is not None:
            m, s = self.coeffs.constant
            return m / (s * s) * (hi - lo)
        return integrate(self._rate, Interval(lo, hi), self.inner_tol)

    def _rate(self, x: float) -> float:
        r = self.coeffs.ratio(x)
        if not math.isfinite(r):
            raise EvaluationError(f"m/s^2 is not finite at x={x!r} (s -> 0?)", abscissa=x)
        return float(r)

    def _weight(self, inner: float) -> float:
        e = -2.0 * inner
        if e > _EXP_CAP:
            self.clamped = True
            e = _EXP_CAP
        return math.exp(e)

    def advance_to(self, target: float):
        start_p = self.p
        while self.xi < target:
            h = min(self.h, target - self.xi)
            if h <= 1e-13 * max(1.0, abs(self.xi)):
                raise ConvergenceError(f"step size underflow at xi={self.xi!r}", partial=self.p)
            nodes = [self.xi + k * h / 4 for k in range(5)]
            nodes[-1] = self.xi + h
            inners = [self.inner]
            for lo, hi in zip(nodes[:-1], nodes[1:]):
                inners.append(inners[-1] + self._inner_increment(lo, hi))
            g = [self._weight(v) for v in inners]
            coarse = h / 6 * (g[0] + 4 * g[2] + g[4])
            fine = h / 12 * (g[0] + 4 * g[1] + 2 * g[2] + 4 * g[3] + g[4])
            err = abs(fine - coarse) / 15
            # relative to the panel itself and to its share of p accumulated so far
            allowed = self.rel_tol * (abs(fine) + self.p * h / (self.xi - self.origin + h)) + 1e-300
            if err <= allowed:
                self.p += fine + (fine - coarse) / 15
                self.inner = inners[-1]
                self.xi = nodes[-1]
                self.panels += 1
                if h == self.h:
                    self.h = h * (2.0 if err == 0 else min(2.0, 0.9 * (allowed / err) ** 0.2))
            else:
                self.h = h / 2
        self.xi = target
        self.last_increment = self.p - start_p


def scale_function(q: RuinQuery, upper: float, tol: Tolerance | None = None) -> ScaleFunctionResult:
    """``p(x0)`` and ``p(upper)`` for the query's field and barrier.

    ``tol.rel_tol`` bounds the relative error of each outer panel (hence of
    ``p``); the inner integrals run at a tighter tolerance.
    """
    tol = tol or Tolerance(abs_tol=1e-15, rel_tol=1e-11)
    if not upper >= q.x0:
        raise DomainError("upper must be at least x0")
    sweep = _ScaleSweep(q.coeffs, q.barrier_b, tol.rel_tol, Tolerance(abs_tol=tol.abs_tol, rel_tol=tol.rel_tol * 0.1))
    sweep.advance_to(q.x0)
    p_x = sweep.p
    sweep.advance_to(upper)
    res = ScaleFunctionResult(p_x, sweep.p, upper, True, sweep.last_increment, sweep.clamped, sweep.panels)
    if sweep.clamped:
        res.converged = False
        res.notes.append("exp(-2 I) overflowed and was clamped; p is a lower bound")
    return res


def min_ruin_probability(q: RuinQuery, tol: Tolerance | None = None, quad_tol: Tolerance | None = None) -> RuinResult:
    """Minimal ruin probability ``1 - p(x0)/p(inf)``.

    ``p(inf)`` is approximated along ``U_k = x0 + 2^k (x0 - b)`` until the
    relative increment of ``p`` drops below ``tol.rel_tol`` or ``k`` reaches
    ``tol.max_iter`` (60 by default). Without decay, ``p(inf)`` is taken to be
    infinite: the result is 1 with ``converged = False``.
    """
    tol = tol or Tolerance(abs_tol=1e-15, rel_tol=1e-9, max_iter=60)
    quad_tol = quad_tol or Tolerance(abs_tol=1e-15, rel_tol=min(1e-11, tol.rel_tol * 1e-2))
    d = q.x0 - q.barrier_b
    sweep = _ScaleSweep(q.coeffs, q.barrier_b, quad_tol.rel_tol,
                        Tolerance(abs_tol=quad_tol.abs_tol, rel_tol=quad_tol.rel_tol * 0.1))
    sweep.advance_to(q.x0)
    p_x = sweep.p
    upper = q.x0
    for k in range(tol.max_iter + 1):
        upper = q.x0 + (2.0**k) * d
        sweep.advance_to(upper)
        rel = sweep.last_increment / sweep.p if sweep.p > 0 else math.inf
        if sweep.clamped:
            break
        if rel < tol.rel_tol:
            diag = ScaleFunctionResult(p_x, sweep.p, upper, True, sweep.last_increment, False, sweep.panels)
            prob = min(max(1.0 - p_x / sweep.p, 0.0), 1.0)
            return RuinResult(prob, diag)
    diag = ScaleFunctionResult(p_x, sweep.p, upper, False, sweep.last_increment, sweep.clamped, sweep.panels)
    if sweep.clamped:
        diag.notes.append("exp(-2 I) overflowed: p grows without useful bound, p(inf) treated as infinite")
    else:
        diag.notes.append("increments of p did not decay: p(inf) treated as infinite")
    return RuinResult(1.0, diag)
