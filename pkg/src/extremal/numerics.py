"""Numerical kernels: quadrature, bounded maximizers, Lambert W, monotone inversion.

Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, DomainError, EvaluationError

__all__ = [
    "Interval",
    "Tolerance",
    "Maximum",
    "Maximum2D",
    "integrate",
    "maximize_1d",
    "maximize_2d",
    "lambert_w0",
    "monotone_inverse",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_INV_E = math.exp(-1.0)


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]``.

    Infinite endpoints are representable; operations that need a bounded
    range check ``is_finite`` themselves.
    """

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise DomainError("interval endpoints must not be NaN")
        if not self.lo < self.hi:
            raise DomainError(f"interval requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_iter: int = 100_000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError("abs_tol must be positive")
        if not self.rel_tol >= 0:
            raise DomainError("rel_tol must be non-negative")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")


class Maximum(NamedTuple):
    argmax: float
    value: float
    flat: bool = False


class Maximum2D(NamedTuple):
    argmax: tuple[float, float]
    value: float
    flat: bool = False


def _checked(y: float, x) -> float:
    y = float(y)
    if math.isnan(y):
        raise EvaluationError(f"function returned NaN at x={x!r}", abscissa=x)
    return y


def _evaluate_many(f: Callable, points: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` on an array, vectorized when ``f`` supports it."""
    try:
        with np.errstate(all="ignore"):
            values = np.asarray(f(points), dtype=float)
        if values.shape != points.shape:
            raise ValueError
    except (TypeError, ValueError):
        values = np.array([float(f(p)) for p in points], dtype=float)
    bad = np.isnan(values)
    if bad.any():
        x = points[np.argmax(bad)]
        raise EvaluationError(f"function returned NaN at x={x!r}", abscissa=float(x))
    return values


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


def integrate(f: Callable[[float], float], interval: Interval, tol: Tolerance | None = None) -> float:
    """Adaptive Simpson quadrature with interval-halving error estimates.

    The accepted panels satisfy ``|S2 - S1| / 15 <= eps * width / total_width``
    with ``eps = max(abs_tol, rel_tol * |I|)``, where ``|I|`` comes from a
    coarse pre-pass. Richardson correction is applied to accepted panels.

    Raises:
        EvaluationError: ``f`` returned NaN or an infinite value.
        ConvergenceError: more than ``tol.max_iter`` subdivisions were needed;
            ``partial`` carries the estimate assembled so far.
    """
    tol = tol or Tolerance()
    if not interval.is_finite:
        raise DomainError("integrate requires a finite interval")
    a, b = float(interval.lo), float(interval.hi)

    def ev(x: float) -> float:
        y = _checked(f(x), x)
        if math.isinf(y):
            raise EvaluationError(f"integrand is infinite at x={x!r}", abscissa=x)
        return y

    # coarse pass: 4 Simpson panels to scale the relative tolerance
    xs = [a + (b - a) * k / 8 for k in range(9)]
    xs[-1] = b
    ys = [ev(x) for x in xs]
    h = (b - a) / 8
    coarse = h / 3 * (ys[0] + ys[-1] + 4 * sum(ys[1:-1:2]) + 2 * sum(ys[2:-1:2]))
    eps = max(tol.abs_tol, tol.rel_tol * abs(coarse))
    total_width = b - a

    # stack of panels (lo, hi, f_lo, f_mid, f_hi, simpson)
    stack = []
    for i in range(0, 8, 2):
        lo, mid, hi = xs[i], xs[i + 1], xs[i + 2]
        s = (hi - lo) / 6 * (ys[i] + 4 * ys[i + 1] + ys[i + 2])
        stack.append((lo, hi, ys[i], ys[i + 1], ys[i + 2], s))

    result = 0.0
    splits = 0
    while stack:
        lo, hi, flo, fmid, fhi, whole = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = ev(lm), ev(rm)
        left = (mid - lo) / 6 * (flo + 4 * flm + fmid)
        right = (hi - mid) / 6 * (fmid + 4 * frm + fhi)
        delta = left + right - whole
        local = eps * (hi - lo) / total_width
        if abs(delta) <= 15 * local or (hi - lo) <= 4 * np.spacing(max(abs(lo), abs(hi), 1.0)):
            result += left + right + delta / 15
            continue
        splits += 1
        if splits > tol.max_iter:
            partial = result + left + right + sum(p[5] for p in stack)
            raise ConvergenceError(
                f"adaptive Simpson did not converge within {tol.max_iter} subdivisions", partial=partial
            )
        stack.append((lo, mid, flo, flm, fmid, left))
        stack.append((mid, hi, fmid, frm, fhi, right))
    return result


# ---------------------------------------------------------------------------
# Maximization
# ---------------------------------------------------------------------------


def _golden_max(f: Callable[[float], float], lo: float, hi: float, xtol: float, max_iter: int):
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = _checked(f(c), c), _checked(f(d), d)
    for _ in range(max_iter):
        if hi - lo <= xtol:
            break
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = _checked(f(c), c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = _checked(f(d), d)
    return (c, fc) if fc >= fd else (d, fd)


def maximize_1d(
    f: Callable[[float], float],
    interval: Interval,
    tol: Tolerance | None = None,
    n_grid: int = 1024,
) -> Maximum:
    """Global maximum of ``f`` on a closed interval.

    A uniform scan of ``n_grid`` points locates the best cell; golden-section
    search then refines inside the two neighbouring cells. Unimodality is not
    assumed. ``-inf`` values mark inadmissible points and are skipped; ties
    resolve to the smallest argument.

    Returns a :class:`Maximum`; ``flat`` is set (with the midpoint as argmax)
    when every scanned value is identical.
    """
    tol = tol or Tolerance(abs_tol=1e-10)
    if not interval.is_finite:
        raise DomainError("maximize_1d requires a finite interval")
    grid = np.linspace(interval.lo, interval.hi, max(int(n_grid), 3))
    values = _evaluate_many(f, grid)
    if not np.isfinite(values).any() and not (values == np.inf).any():
        raise EvaluationError("no admissible point in the scanned interval")
    finite = values[np.isfinite(values)]
    if finite.size == values.size and finite.max() == finite.min():
        mid = 0.5 * (interval.lo + interval.hi)
        return Maximum(mid, _checked(f(mid), mid), True)

    i = int(np.argmax(values))
    best_x, best_f = float(grid[i]), float(values[i])
    if not math.isfinite(best_f):
        return Maximum(best_x, best_f)
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, grid.size - 1)])

    def g(x: float) -> float:
        return float(f(x))

    x, fx = _golden_max(g, lo, hi, tol.abs_tol, tol.max_iter)
    for cand in (lo, hi):
        fc = _checked(g(cand), cand)
        if fc > fx:
            x, fx = cand, fc
    if fx > best_f or (fx == best_f and x < best_x):
        best_x, best_f = x, fx
    return Maximum(best_x, best_f)


def maximize_2d(
    f: Callable[[float, float], float],
    box: tuple[Interval, Interval],
    tol: Tolerance | None = None,
    n_grid: int = 1024,
) -> Maximum2D:
    """Maximum of ``f(a, b)`` over a rectangle: grid scan then Nelder-Mead.

    ``n_grid`` is the total number of scan points, split evenly across both
    axes. The simplex search works on the box-clipped objective, so maxima on
    the boundary are reached as well.
    """
    tol = tol or Tolerance(abs_tol=1e-10)
    bx, by = box
    if not (bx.is_finite and by.is_finite):
        raise DomainError("maximize_2d requires a finite box")
    k = max(int(round(math.sqrt(n_grid))), 3)
    gx = np.linspace(bx.lo, bx.hi, k)
    gy = np.linspace(by.lo, by.hi, k)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    try:
        with np.errstate(all="ignore"):
            values = np.asarray(f(X, Y), dtype=float)
        if values.shape != X.shape:
            raise ValueError
    except (TypeError, ValueError):
        values = np.array([[float(f(x, y)) for y in gy] for x in gx])
    if np.isnan(values).any():
        i, j = np.argwhere(np.isnan(values))[0]
        raise EvaluationError("function returned NaN", abscissa=(float(gx[i]), float(gy[j])))
    finite = values[np.isfinite(values)]
    if finite.size == 0 and not (values == np.inf).any():
        raise EvaluationError("no admissible point in the scanned box")
    if finite.size == values.size and finite.max() == finite.min():
        mid = (0.5 * (bx.lo + bx.hi), 0.5 * (by.lo + by.hi))
        return Maximum2D(mid, _checked(f(*mid), mid), True)

    i, j = np.unravel_index(int(np.argmax(values)), values.shape)
    best = (float(gx[i]), float(gy[j]))
    best_f = float(values[i, j])
    if not math.isfinite(best_f):
        return Maximum2D(best, best_f)

    lo = np.array([bx.lo, by.lo])
    hi = np.array([bx.hi, by.hi])

    def neg(p: np.ndarray) -> float:
        q = np.clip(p, lo, hi)
        v = float(f(q[0], q[1]))
        if math.isnan(v):
            raise EvaluationError("function returned NaN", abscissa=(q[0], q[1]))
        return -v

    step = np.array([gx[1] - gx[0], gy[1] - gy[0]])
    x = np.array(best)
    for _ in range(3):  # restarts guard against simplex collapse
        # steps point into the box; a clipped vertex would flatten the simplex
        inward = np.where(x + step > hi, -step, step)
        simplex = np.array([x, x + [inward[0], 0.0], x + [0.0, inward[1]]])
        res = minimize(
            neg,
            x,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "xatol": tol.abs_tol,
                "fatol": 1e-15,
                "maxiter": tol.max_iter,
                "maxfev": tol.max_iter,
            },
        )
        x_new = np.clip(res.x, lo, hi)
        if np.allclose(x_new, x, rtol=0, atol=tol.abs_tol * 10):
            x = x_new
            break
        x = x_new
        step = step / 16
    fx = -neg(x)
    if fx >= best_f:
        return Maximum2D((float(x[0]), float(x[1])), fx)
    return Maximum2D(best, best_f)


# ---------------------------------------------------------------------------
# Lambert W, principal branch
# ---------------------------------------------------------------------------


def lambert_w0(x: float) -> float:
    """Upper (principal) branch of Lambert's W: the ``w >= -1`` with ``w e^w = x``.

    Initial guess from the branch-point series near ``-1/e``, ``log1p`` in the
    middle range and the two-term logarithmic asymptote for large ``x``;
    Halley's iteration finishes.
    """
    x = float(x)
    if math.isnan(x):
        raise DomainError("lambert_w0 of NaN")
    if x < -_INV_E:
        raise DomainError(f"lambert_w0 requires x >= -1/e, got {x!r}")
    if x == 0.0:
        return 0.0
    if x == -_INV_E:
        return -1.0
    if math.isinf(x):
        return math.inf

    if x < -0.25:
        p = math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    elif x < 3.0:
        w = math.log1p(x)
        w = w * (1.0 - math.log1p(w) / (2.0 + w))
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1

    for _ in range(64):
        ew = math.exp(w)
        fw = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * fw / (2.0 * wp1)
        if denom == 0.0:
            break
        w_next = w - fw / denom
        if w_next < -1.0:
            w_next = -1.0
        if abs(w_next - w) <= 4e-16 * max(1.0, abs(w_next)):
            w = w_next
            break
        w = w_next
    return w


# ---------------------------------------------------------------------------
# Monotone inversion
# ---------------------------------------------------------------------------


def monotone_inverse(xs: Sequence[float], ys: Sequence[float], y):
    """Generalized inverse of a nondecreasing piecewise-linear table.

    Returns ``inf{x : table(x) >= y}``, so flat stretches of ``ys`` map back to
    their left endpoint. ``y`` may be a scalar or an array.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size == 0:
        raise DomainError("xs and ys must be 1-D arrays of equal, non-zero length")
    if np.any(np.diff(ys) < 0):
        raise DomainError("ys must be nondecreasing")
    y_arr = np.asarray(y, dtype=float)
    if np.any(np.isnan(y_arr)) or np.any(y_arr < ys[0]) or np.any(y_arr > ys[-1]):
        raise DomainError(f"y outside table range [{ys[0]}, {ys[-1]}]")
    j = np.searchsorted(ys, y_arr, side="left")
    jm = np.maximum(j - 1, 0)
    y0, y1 = ys[jm], ys[j]
    span = y1 - y0
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(span > 0, (y_arr - y0) / span, 1.0)
    out = np.where(j == 0, xs[0], xs[jm] + w * (xs[j] - xs[jm]))
    if np.ndim(y) == 0:
        return float(out)
    return out
