import json
import math

import pytest

from extremal.cli import load_spec, main, run

PROP = '{"family": "prop_reinsurance", "params": {"theta": 2, "eta": 1, "sigma": 1}}'
COMBINED = '{"family": "combined", "params": {"theta": 2, "eta": 1, "m": 1, "sigma_s": 1, "sigma_i": 1}}'
INVEST = '{"family": "investment", "params": {"eta": 1, "m": 1, "sigma_s": 1, "sigma_i": 1}}'
XL = '{"family": "xl_exponential", "params": {"theta": 2, "eta": 1, "lam": 1}}'
UNIT = '{"family": "custom_tabulated", "params": {"m": 1, "s": 1}}'
DRIFTLESS = '{"family": "custom_tabulated", "params": {"m": 0, "s": 1}}'
REGIMES = '{"family": "custom_regimes", "regimes": [[[-2, 2, 1], [2, -2, 1]], {"m": 0, "s": 1}]}'


def sim_args(spec=UNIT, *extra, paths=2000, horizon=3.0):
    return ["simulate", "--spec", spec, "--x0", "1", "--paths", str(paths), "--dt", "0.01",
            "--horizon", str(horizon), *extra]


class TestOptimal:
    def test_prop_reinsurance(self):
        code, doc = run(["optimal", "--spec", PROP])
        assert code == 0
        assert doc["outputs"]["u_star"] == 1.0
        assert doc["outputs"]["ratio"] == pytest.approx(1.0, abs=1e-12)
        assert doc["diagnostics"]["ratio_residual"] < 1e-8

    def test_combined(self):
        _, doc = run(["optimal", "--spec", COMBINED])
        assert doc["outputs"]["A_star"] == pytest.approx(0.4, abs=1e-12)
        assert doc["outputs"]["b_star"] == pytest.approx(0.8, abs=1e-12)
        assert doc["diagnostics"]["control_residual"] < 1e-5

    def test_single_asset_portfolio(self):
        code, doc = run(["optimal", "--spec", '{"family": "portfolio", "params": {"mu": [0.1], "a": [[0.04]]}}'])
        assert code == 0 and doc["outputs"]["pi"] == [1.0]

    def test_xl_reports_objective(self):
        _, doc = run(["optimal", "--spec", XL])
        assert doc["outputs"]["u_star"] == pytest.approx(1.59362426004004, abs=1e-6)
        assert doc["outputs"]["objective"] == pytest.approx(doc["outputs"]["ratio"], rel=1e-12)

    def test_report_echoes_inputs(self):
        _, doc = run(["optimal", "--spec", PROP])
        assert doc["schema"] and doc["version"]
        assert doc["spec_hash"] == load_spec(PROP).digest()
        assert doc["inputs"]["spec"]["family"] == "prop_reinsurance"


class TestValidation:
    def test_missing_parameter_names_field(self):
        code, doc = run(["optimal", "--spec", '{"family": "prop_reinsurance", "params": {"theta": 2}}'])
        assert code == 2
        assert doc["error"]["field"] == "params.eta"

    def test_unknown_family(self):
        code, doc = run(["optimal", "--spec", '{"family": "nope"}'])
        assert code == 2 and doc["error"]["field"] == "family"

    def test_non_increasing_table(self):
        spec = '{"family": "custom_tabulated", "tabulated": [[0, 1, 1], [0, 1, 1]]}'
        code, doc = run(["ruin", "--spec", spec, "--x0", "1"])
        assert code == 2 and doc["error"]["field"].startswith("tabulated")

    def test_barrier_above_state(self):
        code, _ = run(["ruin", "--spec", UNIT, "--x0", "1", "--barrier", "2"])
        assert code == 2

    def test_inadmissible_policy(self):
        code, doc = run(["ruin", "--spec", PROP, "--x0", "1", "--policy", "1.5"])
        assert code == 2 and doc["error"]["field"] == "--policy"

    def test_spec_from_yaml_file(self, tmp_path):
        f = tmp_path / "m.yaml"
        f.write_text("family: prop_reinsurance\nparams: {theta: 2, eta: 1}\n")
        assert run(["optimal", "--spec", str(f)])[1]["outputs"]["u_star"] == 1.0


class TestRuin:
    def test_unit_constant_field(self):
        code, doc = run(["ruin", "--spec", UNIT, "--x0", "1"])
        assert code == 0
        assert doc["outputs"]["ruin_probability"] == pytest.approx(math.exp(-2), abs=1e-10)
        assert doc["diagnostics"]["converged"]

    def test_driftless_is_nonconverged(self):
        code, doc = run(["ruin", "--spec", DRIFTLESS, "--x0", "1"])
        assert code == 3
        assert doc["outputs"]["ruin_probability"] == 1.0
        assert doc["diagnostics"]["converged"] is False

    def test_investment_extremal_field(self):
        # constant ratio (1 + sqrt 2) / 2 at the optimal share sqrt 2 - 1
        _, doc = run(["ruin", "--spec", INVEST, "--x0", "1"])
        assert doc["outputs"]["ratio"] == pytest.approx((1 + math.sqrt(2)) / 2, abs=1e-12)
        assert doc["outputs"]["ruin_probability"] == pytest.approx(math.exp(-(1 + math.sqrt(2))), abs=1e-10)

    def test_suboptimal_policy_is_worse(self):
        best = run(["ruin", "--spec", PROP, "--x0", "1"])[1]["outputs"]["ruin_probability"]
        worse = run(["ruin", "--spec", PROP, "--x0", "1", "--policy", "0.3"])[1]["outputs"]["ruin_probability"]
        assert worse > best


class TestSimulate:
    def test_seed_repeat_is_identical(self):
        assert run(sim_args()) == run(sim_args())

    def test_workers_do_not_change_export(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(sim_args(UNIT, "--out", str(a), "--alpha", "0.5", "--workers", "1", paths=5000))
        run(sim_args(UNIT, "--out", str(b), "--alpha", "0.5", "--workers", "3", paths=5000))
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().splitlines()[0] == "path,terminal,running_min,running_max,ruin,ruin_prob,drawdown,valid"

    def test_probabilities_in_unit_interval(self):
        _, doc = run(sim_args(UNIT, "--alpha", "0.5"))
        for key in ("ruin_probability", "drawdown_probability"):
            assert 0.0 <= doc["outputs"][key] <= 1.0

    def test_policy_override_raises_ruin(self):
        best = run(sim_args(PROP, paths=20_000, horizon=10))[1]["outputs"]
        worse = run(sim_args(PROP, "--policy", "0.3", paths=20_000, horizon=10))[1]["outputs"]
        gap = worse["ruin_probability"] - best["ruin_probability"]
        assert gap > 3 * math.hypot(best["ruin_stderr"], worse["ruin_stderr"])

    def test_close_to_exact_value(self):
        out = run(sim_args(UNIT, paths=20_000, horizon=20))[1]["outputs"]
        assert abs(out["ruin_probability"] - math.exp(-2)) < 4 * out["ruin_stderr"] + 5e-3


class TestDominance:
    def base(self, *pols, functional="infimum", extra=(), paths=5000):
        args = ["dominance", "--spec", PROP, "--x0", "1", "--paths", str(paths), "--dt", "0.01",
                "--horizon", "3", "--functional", functional, *extra]
        for p in pols:
            args += ["--policy", p]
        return run(args)

    def test_identical_policies(self):
        code, doc = self.base("0.5", "0.5")
        assert code == 0
        assert doc["outputs"]["max_violation"] == 0.0 and doc["outputs"]["dominant"]

    def test_extremal_dominates_suboptimal(self):
        assert self.base("extremal", "0.3", paths=20_000)[1]["outputs"]["dominant"]

    def test_reverse_is_not_dominant(self):
        assert not self.base("0.3", "extremal", paths=20_000)[1]["outputs"]["dominant"]

    def test_drawdown_margin(self):
        _, doc = self.base("extremal", "0.3", functional="drawdown_margin", extra=("--alpha", "0.5"), paths=20_000)
        assert doc["outputs"]["dominant"]

    def test_needs_two_policies(self):
        code, doc = self.base("extremal")
        assert code == 2 and doc["error"]["field"] == "--policy"

    def test_margin_needs_alpha(self):
        code, doc = self.base("extremal", "0.3", functional="drawdown_margin")
        assert code == 2 and doc["error"]["field"] == "--alpha"


class TestRegimes:
    def test_partition_switches_once(self):
        code, doc = run(["regimes", "--spec", REGIMES, "--grid=-2,2,9"])
        assert code == 0
        # first regime has drift -x, the second drift 0
        assert doc["outputs"]["partition"] == [0, 0, 0, 0, 0, 1, 1, 1, 1]
        assert [r["regime"] for r in doc["outputs"]["intervals"]] == [0, 1]

    def test_rejects_other_families(self):
        assert run(["regimes", "--spec", PROP, "--grid", "0,1,3"])[0] == 2


def test_main_prints_json(capsys):
    code = main(["ruin", "--spec", UNIT, "--x0", "1"])
    doc = json.loads(capsys.readouterr().out)
    assert code == 0 and doc["command"] == "ruin"
