"""Optimal controls for the reinsurance, investment and portfolio problems.

Each solver has a matching ``*_family`` constructor producing the admissible
control family, so the closed forms can be cross-checked against the generic
ratio maximizer in :mod:`extremal.model`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConvergenceError, DomainError, ParameterError
from .model import Parametric1D, Parametric2D
from .numerics import Interval, Tolerance, maximize_1d

__all__ = [
    "PropReinsuranceParams",
    "XlParams",
    "XlVariant",
    "InvestmentParams",
    "CombinedParams",
    "PortfolioParams",
    "prop_reinsurance_optimal",
    "prop_reinsurance_family",
    "xl_exponential_objective",
    "xl_exponential_optimal",
    "xl_family",
    "investment_optimal",
    "investment_ratio",
    "investment_family",
    "combined_optimal",
    "combined_ratio",
    "combined_family",
    "portfolio_optimal",
    "portfolio_ratio",
    "portfolio_family",
]

#: lower end of retention/limit ranges; u = 0 has zero volatility
RETENTION_FLOOR = 1e-6


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be a positive finite number, got {value!r}")


def _loadings(theta, eta):
    if not (math.isfinite(theta) and math.isfinite(eta)):
        raise ParameterError("loadings must be finite")
    if not 0 < eta < theta:
        raise ParameterError(f"need 0 < eta < theta, got eta={eta!r}, theta={theta!r}")


# ---------------------------------------------------------------------------
# Proportional reinsurance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PropReinsuranceParams:
    theta: float
    eta: float
    sigma: float = 1.0

    def __post_init__(self):
        _loadings(self.theta, self.eta)
        _positive("sigma", self.sigma)


def prop_reinsurance_optimal(p: PropReinsuranceParams) -> float:
    """Optimal retention level: ``min(2 (1 - eta/theta), 1)``."""
    return min(2.0 * (1.0 - p.eta / p.theta), 1.0)


def prop_reinsurance_family(p: PropReinsuranceParams, floor: float = RETENTION_FLOOR) -> Parametric1D:
    return Parametric1D(
        mu=lambda x, u: u * p.theta - (p.theta - p.eta),
        sigma=lambda x, u: u * p.sigma,
        u_range=Interval(floor, 1.0),
    )


# ---------------------------------------------------------------------------
# Excess-of-loss reinsurance, exponential claims
# ---------------------------------------------------------------------------


class XlVariant(str, Enum):
    """Denominator used in the XL ratio.

    ``ALTERNATE`` uses ``2 - e^{-lu}(2 + 2ul - u^2 l^2 (l - 1))``;
    ``EXACT_MOMENTS`` is ``l^2 E[min(Z, u)^2] = 2 - e^{-lu}(2 + 2lu)``. They
    coincide when ``lambda == 1``.
    """

    ALTERNATE = "alternate"
    EXACT_MOMENTS = "exact_moments"


@dataclass(frozen=True)
class XlParams:
    theta: float
    eta: float
    lam: float = 1.0

    def __post_init__(self):
        _loadings(self.theta, self.eta)
        _positive("lambda", self.lam)


def _xl_parts(u, p: XlParams, variant):
    variant = XlVariant(variant)
    lam = p.lam
    e = np.exp(-lam * u)
    num = p.theta / lam * (1.0 - e) - (p.theta - p.eta) / lam
    lu = lam * u
    # 1 - e^{-a}(1 + a) loses everything to cancellation for small a
    den = 2.0 * _one_minus_exp_poly(lu)
    if variant is XlVariant.ALTERNATE:
        den = den + e * lu * lu * (lam - 1.0)
    return num, den


def _one_minus_exp_poly(a):
    """``1 - e^{-a} (1 + a)`` evaluated without cancellation."""
    a = np.asarray(a, dtype=float)
    small = a < 0.05
    out = np.empty_like(a)
    big = ~small
    out[big] = -np.expm1(-a[big]) - a[big] * np.exp(-a[big])
    s = a[small]
    # series: a^2/2 - a^3/3 + a^4/8 - a^5/30 + a^6/144 - a^7/840
    out[small] = s * s * (0.5 - s * (1 / 3 - s * (1 / 8 - s * (1 / 30 - s * (1 / 144 - s / 840)))))
    return out if out.ndim else float(out)


def xl_exponential_objective(u, p: XlParams, variant=XlVariant.EXACT_MOMENTS):
    """Drift-to-variance ratio under an XL limit ``u`` with Exp(lambda) claims."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0):
        raise DomainError("XL limit must be positive; u = 0 leaves no volatility")
    num, den = _xl_parts(u_arr, p, variant)
    out = num / den
    return out if np.ndim(out) else float(out)


def xl_family(p: XlParams, variant=XlVariant.EXACT_MOMENTS, u_max: float | None = None) -> Parametric1D:
    """Family with drift = numerator and sigma**2 = denominator of the objective."""
    u_max = u_max if u_max is not None else 40.0 / p.lam

    def mu(x, u):
        return _xl_parts(np.asarray(u, dtype=float), p, variant)[0]

    def sigma(x, u):
        return np.sqrt(np.maximum(_xl_parts(np.asarray(u, dtype=float), p, variant)[1], 0.0))

    return Parametric1D(mu=mu, sigma=sigma, u_range=Interval(RETENTION_FLOOR / p.lam, u_max))


def xl_exponential_optimal(p: XlParams, variant=XlVariant.EXACT_MOMENTS, tol: Tolerance | None = None,
                           n_grid: int = 1024) -> float:
    """Maximizing XL limit, found numerically.

    The search range ``(eps, u_max]`` starts at ``4 / lambda`` and doubles
    while the scan's best point sits in the last grid cell. The objective
    tends to ``eta / (2 lambda)`` as ``u -> inf``; a best value not above that
    limit means the supremum is only approached at infinity.
    """
    tol = tol or Tolerance(abs_tol=1e-11)
    lo = RETENTION_FLOOR / p.lam
    u_max = 4.0 / p.lam
    limit = p.eta / (2.0 * p.lam)

    def f(u):
        return xl_exponential_objective(u, p, variant)

    for _ in range(61):
        res = maximize_1d(f, Interval(lo, u_max), tol, n_grid)
        cell = (u_max - lo) / (n_grid - 1)
        if res.argmax < u_max - 1.5 * cell and res.value > limit * (1 + 1e-12):
            return float(res.argmax)
        u_max *= 2.0
    raise ConvergenceError("no interior maximum found", partial=float(res.argmax))


# ---------------------------------------------------------------------------
# Investment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvestmentParams:
    eta: float
    m: float
    sigma_s: float
    sigma_i: float

    def __post_init__(self):
        _positive("sigma_s", self.sigma_s)
        _positive("sigma_i", self.sigma_i)
        if not math.isfinite(self.eta):
            raise ParameterError("eta must be finite")
        if not math.isfinite(self.m) or self.m == 0:
            raise ParameterError("asset drift m must be finite and non-zero")


def investment_ratio(u, p: InvestmentParams):
    return (p.eta + u * p.m) / (p.sigma_s**2 + p.sigma_i**2 * u * u)


def investment_optimal(p: InvestmentParams) -> float:
    """Amount held in the risky asset maximizing ``(eta + u m)/(s_S^2 + s_I^2 u^2)``."""
    root = math.hypot(p.eta * p.sigma_i, p.m * p.sigma_s)
    u = (root - p.eta * p.sigma_i) / (p.m * p.sigma_i)
    # first-order check on the closed form: stationary and a local max
    h = 1e-4 * max(1.0, abs(u))
    r0 = investment_ratio(u, p)
    assert r0 >= investment_ratio(u - h, p) - 1e-12 and r0 >= investment_ratio(u + h, p) - 1e-12
    return u


def investment_family(p: InvestmentParams, bound: float | None = None) -> Parametric1D:
    if bound is None:
        bound = 10.0 * (p.sigma_s / p.sigma_i + abs(p.eta) / abs(p.m) + 1.0)
    return Parametric1D(
        mu=lambda x, u: p.eta + u * p.m,
        sigma=lambda x, u: np.sqrt(p.sigma_s**2 + p.sigma_i**2 * np.asarray(u, dtype=float) ** 2),
        u_range=Interval(-bound, bound),
    )


# ---------------------------------------------------------------------------
# Reinsurance and investment combined
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CombinedParams:
    theta: float
    eta: float
    m: float
    sigma_s: float
    sigma_i: float

    def __post_init__(self):
        _positive("sigma_s", self.sigma_s)
        _positive("sigma_i", self.sigma_i)
        _loadings(self.theta, self.eta)
        if not math.isfinite(self.m):
            raise ParameterError("m must be finite")
        bound = self.eta + math.sqrt(self.eta**2 + self.m**2 * self.sigma_s**2 / self.sigma_i**2)
        if self.theta > bound * (1 + 1e-12):
            raise ParameterError(
                f"theta={self.theta!r} exceeds eta + sqrt(eta^2 + m^2 s_S^2 / s_I^2) = {bound!r}"
            )


def combined_ratio(a, b, p: CombinedParams):
    return (b * p.theta - (p.theta - p.eta) + p.m * a) / (p.sigma_s**2 * b * b + p.sigma_i**2 * a * a)


def combined_optimal(p: CombinedParams) -> tuple[float, float]:
    """Investment amount ``A*`` and retention ``b*`` (capped at 1)."""
    d = p.m**2 * p.sigma_s**2 + p.theta**2 * p.sigma_i**2
    gap = p.theta - p.eta
    a_star = 2.0 * p.m * p.sigma_s**2 * gap / d
    b_free = 2.0 * p.theta * p.sigma_i**2 * gap / d
    # the assumption's boundary gives exactly 1; absorb rounding there
    b_star = 1.0 if b_free >= 1.0 - 1e-12 else b_free
    return a_star, b_star


def combined_family(p: CombinedParams, a_bound: float | None = None) -> Parametric2D:
    if a_bound is None:
        a_bound = max(10.0 * abs(combined_optimal(p)[0]), 1.0)

    def sigma(x, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return np.sqrt(p.sigma_s**2 * b * b + p.sigma_i**2 * a * a)

    return Parametric2D(
        mu=lambda x, a, b: b * p.theta - (p.theta - p.eta) + p.m * a,
        sigma=sigma,
        ranges=(Interval(-a_bound, a_bound), Interval(0.0, 1.0)),
    )


# ---------------------------------------------------------------------------
# Portfolio of risky assets with full investment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PortfolioParams:
    mu: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        if mu.ndim != 1 or a.shape != (mu.size, mu.size):
            raise ParameterError(f"covariance must be {mu.size}x{mu.size}, got {a.shape}")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(a))):
            raise ParameterError("portfolio parameters must be finite")
        if not np.allclose(a, a.T, rtol=1e-12, atol=1e-14):
            raise ParameterError("covariance matrix must be symmetric")
        try:
            np.linalg.cholesky(a)
        except np.linalg.LinAlgError as exc:
            raise ParameterError("covariance matrix is not positive definite") from exc
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "a", a)

    @property
    def n(self) -> int:
        return self.mu.size


def portfolio_ratio(pi, p: PortfolioParams) -> float:
    """Log-wealth drift over variance: ``pi'mu / pi'a pi - 1/2``."""
    pi = np.asarray(pi, dtype=float)
    return float(pi @ p.mu / (pi @ p.a @ pi) - 0.5)


def portfolio_optimal(p: PortfolioParams, tol: Tolerance | None = None, n_grid: int = 4096) -> np.ndarray:
    """Fully invested weights maximizing ``pi'mu / pi'a pi``.

    Stationarity under ``sum(pi) = 1`` restricts candidates to
    ``pi(c) ∝ a^{-1}(mu - c 1)``; at the optimum ``c`` equals minus the
    portfolio mean, so the scan over ``c`` is centred on the drift range.
    The ``c -> ±inf`` limit, the minimum-variance portfolio, is also tried.
    """
    tol = tol or Tolerance(abs_tol=1e-12)
    n = p.n
    if n == 1:
        return np.ones(1)
    if np.ptp(p.mu) == 0 and p.mu[0] < 0:
        # every portfolio has the same negative mean: the ratio creeps up to 0 as weights diverge
        raise ConvergenceError("ratio supremum 0 is only approached as the weights diverge",
                               partial=np.full(n, 1.0 / n))
    inv_mu = np.linalg.solve(p.a, p.mu)
    inv_one = np.linalg.solve(p.a, np.ones(n))
    sum_mu, sum_one = inv_mu.sum(), inv_one.sum()

    def weights(c):
        v = inv_mu - c * inv_one
        return v / v.sum()

    def objective(c):
        c = np.asarray(c, dtype=float)
        v = inv_mu[:, None] - np.atleast_1d(c)[None, :] * inv_one[:, None]
        norm = sum_mu - np.atleast_1d(c) * sum_one
        with np.errstate(divide="ignore", invalid="ignore"):
            w = v / norm
            mean = p.mu @ w
            var = np.einsum("ik,ij,jk->k", w, p.a, w)
            r = np.where(np.abs(norm) > 1e-12 * (abs(sum_mu) + abs(sum_one) + 1.0), mean / var, -np.inf)
        return r if np.ndim(c) else float(r[0])

    spread = float(p.mu.max() - p.mu.min())
    scale = max(spread, float(np.abs(p.mu).max()), 1e-3)
    reach = float(np.abs(p.mu).max()) + 10.0 * scale
    res = maximize_1d(objective, Interval(-reach, reach), tol, n_grid)

    candidates = []
    if math.isfinite(res.value):
        candidates.append((res.value, weights(res.argmax)))
    mvp = inv_one / sum_one
    candidates.append((float(mvp @ p.mu / (mvp @ p.a @ mvp)), mvp))
    best = max(candidates, key=lambda t: t[0])[1]
    best = np.asarray(best, dtype=float)
    best[-1] = 1.0 - best[:-1].sum()
    return best


def portfolio_family(p: PortfolioParams, bound: float = 1000.0):
    """Log-wealth control family for two or three assets.

    Weights are parametrized by the first ``n - 1`` coordinates; the last one
    absorbs the full-investment constraint. Weights are unconstrained in
    principle and optimal ones can be large when drifts nearly coincide, so
    the search box is wide.
    """
    mu, a = p.mu, p.a
    if p.n == 2:
        def parts(u):
            u = np.asarray(u, dtype=float)
            w = np.stack([u, 1.0 - u])
            mean = np.tensordot(mu, w, axes=1)
            var = np.einsum("i...,ij,j...->...", w, a, w)
            return mean - 0.5 * var, np.sqrt(var)

        return Parametric1D(mu=lambda x, u: parts(u)[0], sigma=lambda x, u: parts(u)[1],
                            u_range=Interval(-bound, bound))
    if p.n == 3:
        def parts2(u1, u2):
            u1 = np.asarray(u1, dtype=float)
            u2 = np.asarray(u2, dtype=float)
            w = np.stack(np.broadcast_arrays(u1, u2, 1.0 - u1 - u2))
            mean = np.tensordot(mu, w, axes=1)
            var = np.einsum("i...,ij,j...->...", w, a, w)
            return mean - 0.5 * var, np.sqrt(var)

        return Parametric2D(mu=lambda x, u1, u2: parts2(u1, u2)[0], sigma=lambda x, u1, u2: parts2(u1, u2)[1],
                            ranges=(Interval(-bound, bound), Interval(-bound, bound)))
    raise ParameterError("portfolio families are only built for two or three assets")
