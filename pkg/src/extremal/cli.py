"""Command-line front end.

Each run reads one model document (JSON or YAML, a path or inline text),
prints a JSON report on standard output and, for ``simulate``, writes the
per-path ensemble as CSV. Exit codes: 0 success, 2 invalid input, 3
numerical non-convergence (the report is still printed).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .closed_forms import (
    CombinedParams,
    InvestmentParams,
    PortfolioParams,
    PropReinsuranceParams,
    XlParams,
    XlVariant,
    combined_family,
    combined_optimal,
    investment_family,
    investment_optimal,
    portfolio_family,
    portfolio_optimal,
    portfolio_ratio,
    prop_reinsurance_family,
    prop_reinsurance_optimal,
    xl_exponential_objective,
    xl_exponential_optimal,
    xl_family,
)
from .errors import ConvergenceError, ExtremalError, ParameterError
from .model import (
    CoefficientField,
    Parametric1D,
    Parametric2D,
    Regime,
    Regimes,
    build_extremal_field,
    constant_field,
    extremal_choice,
    extremal_regime_partition,
    policy_field,
    tabulated_field,
)
from .montecarlo import (
    SimConfig,
    dominance_check,
    empirical_drawdown,
    empirical_ruin,
    export_ensemble,
    simulate_summary,
)
from .numerics import Interval
from .ruin import RuinQuery, min_ruin_probability

SCHEMA_VERSION = "1"
FAMILIES = ("prop_reinsurance", "xl_exponential", "investment", "combined", "portfolio",
            "custom_regimes", "custom_tabulated")
CLOSED_FORM = FAMILIES[:5]
EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3


class SpecError(ParameterError):
    """Invalid model document; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ModelSpec:
    family: str
    params: dict[str, Any] = field(default_factory=dict)
    tabulated: list | None = None
    regimes: list | None = None
    variant: str = XlVariant.EXACT_MOMENTS.value

    def canonical(self) -> dict:
        out = {"family": self.family, "params": self.params}
        if self.tabulated is not None:
            out["tabulated"] = self.tabulated
        if self.regimes is not None:
            out["regimes"] = self.regimes
        if self.family == "xl_exponential":
            out["variant"] = self.variant
        return out

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


_REQUIRED = {
    "prop_reinsurance": ("theta", "eta"),
    "xl_exponential": ("theta", "eta"),
    "investment": ("eta", "m", "sigma_s", "sigma_i"),
    "combined": ("theta", "eta", "m", "sigma_s", "sigma_i"),
    "portfolio": ("mu", "a"),
}


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(where, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise SpecError(where, "must be finite")
    return float(value)


def _triples(rows, where: str) -> list[list[float]]:
    if not isinstance(rows, list) or len(rows) < 2:
        raise SpecError(where, "needs at least two (x, m, s) rows")
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, (list, tuple)) or len(row) != 3:
            raise SpecError(f"{where}[{i}]", "expected an (x, m, s) triple")
        out.append([_number(v, f"{where}[{i}]") for v in row])
    xs = [r[0] for r in out]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise SpecError(where, "x values must be strictly increasing")
    if any(r[2] <= 0 for r in out):
        raise SpecError(where, "s values must be positive")
    return out


def _coefficients(entry, where: str) -> list[list[float]] | dict[str, float]:
    """A coefficient table: ``(x, m, s)`` triples or a constant ``{m, s}``."""
    if isinstance(entry, dict):
        if "tabulated" in entry:
            return _triples(entry["tabulated"], f"{where}.tabulated")
        missing = {"m", "s"} - set(entry)
        if missing:
            raise SpecError(where, f"missing {sorted(missing)}")
        m, s = _number(entry["m"], f"{where}.m"), _number(entry["s"], f"{where}.s")
        if s <= 0:
            raise SpecError(f"{where}.s", "must be positive")
        return {"m": m, "s": s}
    return _triples(entry, where)


def parse_spec(doc: Any) -> ModelSpec:
    if not isinstance(doc, dict):
        raise SpecError("spec", "expected a mapping")
    family = doc.get("family")
    if family not in FAMILIES:
        raise SpecError("family", f"expected one of {', '.join(FAMILIES)}, got {family!r}")
    params = doc.get("params") or {}
    if not isinstance(params, dict):
        raise SpecError("params", "expected a mapping")
    spec = ModelSpec(family, dict(params))
    for key in _REQUIRED.get(family, ()):
        if key not in params:
            raise SpecError(f"params.{key}", "required")
    for key, value in params.items():
        if isinstance(value, list):
            np.asarray(value, dtype=float)
        else:
            _number(value, f"params.{key}")
    if family == "xl_exponential":
        variant = doc.get("variant", XlVariant.EXACT_MOMENTS.value)
        if variant not in {v.value for v in XlVariant}:
            raise SpecError("variant", f"unknown XL variant {variant!r}")
        spec.variant = variant
    elif family == "custom_tabulated":
        if "tabulated" in doc:
            spec.tabulated = _triples(doc["tabulated"], "tabulated")
        elif not {"m", "s"} <= set(params):
            raise SpecError("tabulated", "required (or constant params m and s)")
    elif family == "custom_regimes":
        regimes = doc.get("regimes")
        if not isinstance(regimes, list) or not regimes:
            raise SpecError("regimes", "needs a non-empty list of coefficient tables")
        spec.regimes = [_coefficients(r, f"regimes[{i}]") for i, r in enumerate(regimes)]
    return spec


def load_spec(source: str) -> ModelSpec:
    """Parse a spec from a file path or inline JSON/YAML text."""
    path = Path(source)
    try:
        text = path.read_text() if path.is_file() else source
    except OSError as exc:
        raise SpecError("spec", str(exc)) from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError("spec", f"not valid JSON/YAML: {exc}") from exc
    return parse_spec(doc)


# ---------------------------------------------------------------------------
# Binding specs to families and fields
# ---------------------------------------------------------------------------


def _build(cls, spec: ModelSpec, **extra):
    try:
        return cls(**{k: v for k, v in spec.params.items()}, **extra)
    except TypeError as exc:
        raise SpecError("params", str(exc)) from exc


def _params(spec: ModelSpec):
    f = spec.family
    if f == "prop_reinsurance":
        return _build(PropReinsuranceParams, spec)
    if f == "xl_exponential":
        return _build(XlParams, spec)
    if f == "investment":
        return _build(InvestmentParams, spec)
    if f == "combined":
        return _build(CombinedParams, spec)
    if f == "portfolio":
        try:
            return PortfolioParams(np.asarray(spec.params["mu"], dtype=float),
                                   np.asarray(spec.params["a"], dtype=float))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ParameterError):
                raise
            raise SpecError("params", str(exc)) from exc
    raise SpecError("family", f"{f} has no closed-form parameters")


def _regime(entry) -> Regime:
    if isinstance(entry, dict):
        m, s = entry["m"], entry["s"]
        return Regime(mu=lambda x, _m=m: np.full(np.shape(x), _m) if np.ndim(x) else _m,
                      sigma=lambda x, _s=s: np.full(np.shape(x), _s) if np.ndim(x) else _s)
    xs, ms, ss = map(np.asarray, zip(*entry))
    return Regime(mu=lambda x: np.interp(x, xs, ms), sigma=lambda x: np.interp(x, xs, ss))


def family_of(spec: ModelSpec):
    f = spec.family
    if f == "custom_regimes":
        return Regimes(tuple(_regime(r) for r in spec.regimes))
    if f == "custom_tabulated":
        raise SpecError("family", "custom_tabulated has no control to choose")
    p = _params(spec)
    if f == "prop_reinsurance":
        return prop_reinsurance_family(p)
    if f == "xl_exponential":
        return xl_family(p, XlVariant(spec.variant))
    if f == "investment":
        return investment_family(p)
    if f == "combined":
        return combined_family(p)
    if p.n == 1:
        raise SpecError("params.mu", "a single asset leaves no control to choose")
    return portfolio_family(p)


def optimal_control(spec: ModelSpec):
    """Closed-form optimal control in the family's own parametrization."""
    p = _params(spec)
    f = spec.family
    if f == "prop_reinsurance":
        return prop_reinsurance_optimal(p)
    if f == "xl_exponential":
        return xl_exponential_optimal(p, XlVariant(spec.variant))
    if f == "investment":
        return investment_optimal(p)
    if f == "combined":
        return combined_optimal(p)
    pi = portfolio_optimal(p)
    return float(pi[0]) if p.n == 2 else (float(pi[0]), float(pi[1]))


def _parse_policy(text: str | None, spec: ModelSpec):
    if text is None or text == "extremal":
        return None
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise SpecError("--policy", f"expected 'extremal' or comma-separated numbers, got {text!r}") from exc
    if spec.family == "custom_regimes":
        if len(values) != 1 or not values[0].is_integer() or not 0 <= values[0] < len(spec.regimes):
            raise SpecError("--policy", f"expected a regime index in [0, {len(spec.regimes)})")
        return int(values[0])
    return values[0] if len(values) == 1 else tuple(values)


def _check_admissible(family, policy):
    if isinstance(family, Parametric1D):
        if isinstance(policy, tuple) or not (family.u_range.lo <= policy <= family.u_range.hi):
            raise SpecError("--policy", f"control must be a number in [{family.u_range.lo}, {family.u_range.hi}]")
    elif isinstance(family, Parametric2D):
        if not (isinstance(policy, tuple) and len(policy) == 2):
            raise SpecError("--policy", "expected two comma-separated controls")
        for v, r in zip(policy, family.ranges):
            if not r.lo <= v <= r.hi:
                raise SpecError("--policy", f"control {v} outside [{r.lo}, {r.hi}]")


def _portfolio_field(p: PortfolioParams, policy) -> CoefficientField:
    if policy is None:
        pi = portfolio_optimal(p)
    else:
        free = np.atleast_1d(np.asarray(policy, dtype=float))
        if free.size != p.n - 1:
            raise SpecError("--policy", f"expected {p.n - 1} weights (the last asset takes the rest)")
        pi = np.append(free, 1.0 - free.sum())
    var = float(pi @ p.a @ pi)
    return constant_field(float(pi @ p.mu) - 0.5 * var, math.sqrt(var))


def coefficient_field(spec: ModelSpec, policy=None) -> CoefficientField:
    """Field driven by ``policy`` (a constant control) or the extremal field."""
    f = spec.family
    if f == "custom_tabulated":
        if policy is not None:
            raise SpecError("--policy", "custom_tabulated has no control to override")
        if spec.tabulated is None:
            return constant_field(float(spec.params["m"]), float(spec.params["s"]))
        return tabulated_field(*zip(*spec.tabulated))
    if f == "portfolio":
        return _portfolio_field(_params(spec), policy)
    family = family_of(spec)
    if f == "custom_regimes":
        if policy is not None:
            entry = spec.regimes[policy]
            if isinstance(entry, dict):
                return constant_field(entry["m"], entry["s"])
            return tabulated_field(*zip(*entry))
        if all(isinstance(r, dict) for r in spec.regimes):
            best = max(range(len(spec.regimes)), key=lambda i: (spec.regimes[i]["m"] / spec.regimes[i]["s"] ** 2, -i))
            return constant_field(spec.regimes[best]["m"], spec.regimes[best]["s"])
        xs = [r[0] for entry in spec.regimes if not isinstance(entry, dict) for r in entry]
        return build_extremal_field(family, Interval(min(xs), max(xs))).grid_field()
    control = optimal_control(spec) if policy is None else policy
    _check_admissible(family, control)
    # closed-form families have state-independent coefficients
    field_ = policy_field(family, control)
    m, s = float(field_.drift(0.0)), float(field_.vol(0.0))
    if not s > 0:
        raise SpecError("--policy", "control gives zero volatility")
    return constant_field(m, s)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


@dataclass
class RunReport:
    command: str
    inputs: dict
    outputs: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    seed: int | None = None
    spec_hash: str | None = None
    version: str = __version__
    schema: str = SCHEMA_VERSION
    exit_code: int = EXIT_OK

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "command": self.command,
            "version": self.version,
            "seed": self.seed,
            "spec_hash": self.spec_hash,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "diagnostics": self.diagnostics,
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else str(float(x))
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def cmd_optimal(spec: ModelSpec) -> RunReport:
    """Closed-form optimum, its ratio, and a generic-maximizer cross-check."""
    if spec.family not in CLOSED_FORM:
        raise SpecError("family", f"optimal needs a closed-form family, got {spec.family}")
    report = RunReport("optimal", {"spec": spec.canonical()}, spec_hash=spec.digest())
    p = _params(spec)
    if spec.family == "portfolio" and p.n == 1:
        report.outputs = {"pi": [1.0], "ratio": float(portfolio_ratio(np.ones(1), p))}
        return report
    control = optimal_control(spec) if spec.family != "portfolio" or p.n <= 3 else None
    fld = coefficient_field(spec)
    m, s = fld.constant
    ratio = m / (s * s)
    out: dict[str, Any] = {}
    if spec.family == "combined":
        out["A_star"], out["b_star"] = control
    elif spec.family == "portfolio":
        pi = portfolio_optimal(p)
        out["pi"] = pi.tolist()
    else:
        out["u_star"] = control
    out["ratio"] = ratio
    if spec.family == "xl_exponential":
        out["objective"] = float(xl_exponential_objective(control, p, XlVariant(spec.variant)))
    report.outputs = out
    if control is None:
        report.diagnostics = {"generic_check": "skipped: more than three assets"}
        return report
    generic = extremal_choice(family_of(spec), 0.0)
    gen_control = np.atleast_1d(np.asarray(generic.control, dtype=float))
    report.diagnostics = {
        "generic_control": gen_control.tolist(),
        "generic_ratio": generic.ratio,
        "control_residual": float(np.max(np.abs(gen_control - np.atleast_1d(np.asarray(control, dtype=float))))),
        "ratio_residual": abs(generic.ratio - ratio),
    }
    return report


def cmd_ruin(spec: ModelSpec, x0: float, barrier: float, policy=None) -> RunReport:
    fld = coefficient_field(spec, policy)
    result = min_ruin_probability(RuinQuery(fld, barrier, x0))
    report = RunReport("ruin", {"spec": spec.canonical(), "x0": x0, "barrier": barrier, "policy": policy},
                       spec_hash=spec.digest())
    d = result.diag
    report.outputs = {"ruin_probability": result.prob, "p_x0": d.p_x}
    if fld.constant is not None:
        report.outputs["ratio"] = fld.constant[0] / fld.constant[1] ** 2
    report.diagnostics = {"converged": d.converged, "p_upper": d.p_upper, "upper": d.upper,
                          "tail_increment": d.tail_estimate, "clamped": d.clamped, "panels": d.panels,
                          "notes": d.notes}
    if not d.converged:
        report.exit_code = EXIT_NONCONVERGED
    return report


def cmd_simulate(spec: ModelSpec, cfg: SimConfig, barrier: float, alpha: float | None = None,
                 policy=None, out: str | None = None) -> RunReport:
    fld = coefficient_field(spec, policy)
    alphas = () if alpha is None else (alpha,)
    summary = simulate_summary(fld, cfg, barrier=barrier, alphas=alphas)
    ruin = empirical_ruin(summary, barrier)
    report = RunReport("simulate", {"spec": spec.canonical(), "config": _cfg_dict(cfg), "barrier": barrier,
                                    "alpha": alpha, "policy": policy, "out": out},
                       seed=cfg.seed, spec_hash=spec.digest())
    ok = summary.valid
    report.outputs = {
        "ruin_probability": ruin.prob,
        "ruin_stderr": ruin.stderr,
        "mean_terminal": float(summary.terminal[ok].mean()) if ok.any() else math.nan,
    }
    if alpha is not None:
        if cfg.x0 < 0:
            raise SpecError("--x0", "drawdown needs a non-negative initial state")
        dd = empirical_drawdown(summary, alpha)
        report.outputs.update(drawdown_probability=dd.prob, drawdown_stderr=dd.stderr)
    report.diagnostics = {"n_valid": int(ok.sum()), "n_invalid": summary.n_invalid}
    if out is not None:
        export_ensemble(summary, out, alpha)
    return report


def cmd_dominance(spec: ModelSpec, policy_a, policy_b, cfg: SimConfig, functional: str,
                  alpha: float | None = None) -> RunReport:
    """Compare two policies after each is run in its own quadratic-variation clock.

    The claim tested is that ``policy_a`` dominates ``policy_b``: the
    functional under ``policy_a`` is stochastically larger. ``cfg.horizon``
    is the changed-time horizon and ``cfg.dt`` the changed-time step; each
    ensemble uses ``dt / s(x0)**2`` in original time. Both ensembles share
    ``cfg.seed``.
    """
    summaries = []
    alphas = (alpha,) if functional == "drawdown_margin" else ()
    for policy in (policy_a, policy_b):
        fld = coefficient_field(spec, policy)
        s0 = float(fld.vol(cfg.x0))
        own = SimConfig(cfg.x0, cfg.horizon / s0**2, cfg.dt / s0**2, cfg.n_paths, cfg.seed,
                        cfg.bridge_correction, cfg.workers)
        summaries.append(simulate_summary(fld, own, alphas=alphas, qv_horizon=cfg.horizon))
    rep = dominance_check(summaries[1], summaries[0], functional, alpha)
    report = RunReport("dominance", {"spec": spec.canonical(), "config": _cfg_dict(cfg), "policy_a": policy_a,
                                     "policy_b": policy_b, "functional": functional, "alpha": alpha},
                       seed=cfg.seed, spec_hash=spec.digest())
    report.outputs = {"functional": rep.functional_name, "dominant": rep.dominant,
                      "max_violation": rep.max_violation, "violation_se": rep.violation_se,
                      "cdf_grid": rep.cdf_grid, "cdf_a": rep.cdf_b, "cdf_b": rep.cdf_a}
    report.diagnostics = {"claim": "policy_a dominates policy_b", "n_a": rep.n_b, "n_b": rep.n_a,
                          "n_invalid": [s.n_invalid for s in summaries]}
    return report


def cmd_regimes(spec: ModelSpec, grid) -> RunReport:
    if spec.family != "custom_regimes":
        raise SpecError("family", "regimes needs a custom_regimes spec")
    family = family_of(spec)
    grid = np.asarray(grid, dtype=float)
    labels = extremal_regime_partition(family, grid)
    runs = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            runs.append({"regime": labels[start], "from": float(grid[start]), "to": float(grid[i - 1])})
            start = i
    report = RunReport("regimes", {"spec": spec.canonical(), "grid": grid}, spec_hash=spec.digest())
    report.outputs = {"partition": labels, "intervals": runs}
    return report


def _cfg_dict(cfg: SimConfig) -> dict:
    return {"x0": cfg.x0, "horizon": cfg.horizon, "dt": cfg.dt, "n_paths": cfg.n_paths, "seed": cfg.seed,
            "bridge_correction": cfg.bridge_correction}


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------


def _grid(text: str):
    parts = [float(v) for v in text.split(",")]
    if len(parts) == 3 and parts[2].is_integer() and parts[2] >= 2:
        return np.linspace(parts[0], parts[1], int(parts[2]))
    raise argparse.ArgumentTypeError("expected lo,hi,n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="extremal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--spec", required=True, help="model document: file path or inline JSON/YAML")
        return p

    def sim_flags(p, horizon_help):
        p.add_argument("--x0", type=float, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--paths", type=int, default=10_000)
        p.add_argument("--dt", type=float, default=1e-3)
        p.add_argument("--horizon", type=float, default=10.0, help=horizon_help)
        p.add_argument("--workers", type=int, default=1, help="threads running path chunks (results do not change)")
        p.add_argument("--no-bridge", action="store_true", help="disable the bridge crossing correction")

    common(sub.add_parser("optimal", help="closed-form optimal control"))

    p = common(sub.add_parser("ruin", help="minimal ruin probability"))
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--barrier", type=float, default=0.0)
    p.add_argument("--policy", default=None, help="'extremal' (default) or a fixed control")

    p = common(sub.add_parser("simulate", help="Monte Carlo ruin and drawdown"))
    sim_flags(p, "time horizon")
    p.add_argument("--barrier", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=None, help="drawdown level in [0, 1]")
    p.add_argument("--policy", default=None)
    p.add_argument("--out", default=None, help="CSV file for the per-path ensemble")

    p = common(sub.add_parser("dominance", help="stochastic dominance of two policies"))
    sim_flags(p, "horizon in quadratic-variation time")
    p.add_argument("--policy", action="append", default=None,
                   help="give twice; tests whether the first policy dominates the second")
    p.add_argument("--functional", choices=("infimum", "terminal", "drawdown_margin"), default="infimum")
    p.add_argument("--alpha", type=float, default=None)

    p = common(sub.add_parser("regimes", help="extremal regime on a state grid"))
    p.add_argument("--grid", type=_grid, required=True, help="lo,hi,n")
    return parser


def _sim_config(args) -> SimConfig:
    return SimConfig(args.x0, args.horizon, args.dt, args.paths, args.seed, not args.no_bridge, args.workers)


def run(argv=None) -> tuple[int, dict]:
    """Execute a command; returns ``(exit_code, report_dict)``."""
    args = build_parser().parse_args(argv)
    try:
        spec = load_spec(args.spec)
        if args.command == "optimal":
            report = cmd_optimal(spec)
        elif args.command == "ruin":
            report = cmd_ruin(spec, args.x0, args.barrier, _parse_policy(args.policy, spec))
        elif args.command == "simulate":
            report = cmd_simulate(spec, _sim_config(args), args.barrier, args.alpha,
                                  _parse_policy(args.policy, spec), args.out)
        elif args.command == "dominance":
            pols = args.policy or []
            if len(pols) != 2:
                raise SpecError("--policy", "dominance needs exactly two --policy values")
            if args.functional == "drawdown_margin" and args.alpha is None:
                raise SpecError("--alpha", "required for drawdown_margin")
            report = cmd_dominance(spec, _parse_policy(pols[0], spec), _parse_policy(pols[1], spec),
                                   _sim_config(args), args.functional, args.alpha)
        else:
            report = cmd_regimes(spec, args.grid)
    except SpecError as exc:
        return EXIT_INVALID, {"command": args.command, "error": {"field": exc.field, "message": str(exc)}}
    except ConvergenceError as exc:
        return EXIT_NONCONVERGED, {"command": args.command, "error": {"field": None, "message": str(exc)},
                                   "partial": _jsonable(exc.partial)}
    except (ExtremalError, ValueError) as exc:
        return EXIT_INVALID, {"command": args.command, "error": {"field": None, "message": str(exc)}}
    return report.exit_code, _jsonable(report.to_dict())


def main(argv=None) -> int:
    code, doc = run(argv)
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")
    if "error" in doc:
        print(f"error: {doc['error']['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
