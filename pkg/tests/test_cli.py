import json
from pathlib import Path

import pytest

from valstrat.cli import fmt_gamma, main, run_command
from valstrat.gamma import Gamma

DATA = Path(__file__).parent / "data"


def g(e):
    return json.dumps(Gamma.of(e).to_json())


ZERO = json.dumps(Gamma.zero().to_json())


def test_format_gamma():
    assert fmt_gamma(Gamma.of(0)) == "1"
    assert fmt_gamma(Gamma.zero()) == "0"
    assert fmt_gamma(Gamma.of(3) / Gamma.of(2)) == "<1>"


def test_series_eval_reports_valuation():
    code, out = run_command(["series", "eval", "--x", '"t^(3/2)+2*t^2"'])
    assert code == 0
    assert "val: <3/2>" in out


def test_series_root():
    code, out = run_command(["series", "root", "--x", '"t^3"', "--k", "2"])
    assert code == 0
    assert "val: <3/2>" in out


def test_delta_of_coordinate_lines():
    code, out = run_command(["delta", "--u", '[["1", "0"]]', "--w", '[["1", "t"]]'])
    assert code == 0
    assert out == "delta: <1>"


def test_risometry_rejects_doubling():
    code, out = run_command(["risometry", "check", "--points", str(DATA / "doubling.json")])
    assert code == 1
    assert out.startswith("violation")


def test_risometry_accepts_translation():
    code, _ = run_command(["risometry", "check", "--points", str(DATA / "translation.json")])
    assert code == 0


def test_critfn_single_lambda():
    lam = f"[{g(1)}, {ZERO}]"
    code, out = run_command(["critfn", "--strat", "cusp:3,2", "--lambda", lam])
    assert code == 0
    assert out.endswith("{1, <1>, <3/2>}")


def test_valchain_validate(tmp_path):
    code, out = run_command(["valchain", "validate", "--strat", "cusp:3,2",
                             "--chain", str(DATA / "chain_good.json")])
    assert code == 0
    assert "lambdas: <4>, <1>, Inf" in out
    code, out = run_command(["valchain", "validate", "--strat", "cusp:3,2",
                             "--chain", str(DATA / "chain_bad.json")])
    assert code == 1
    assert "condition 4" in out


def test_nested_writes_json(tmp_path):
    dest = tmp_path / "out.json"
    code, out = run_command(["nested", "--grid", str(DATA / "identity_grid.json"), "--json", str(dest)])
    assert code == 0
    assert "all properties hold" in out
    assert json.loads(dest.read_text())["ok"] is True


def test_taylor_threshold_exit_codes():
    assert run_command(["taylor", "--family", "hier1", "--order", "3"])[0] == 0
    code, out = run_command(["taylor", "--family", "hier1", "--order", "4"])
    assert code == 1
    assert "violation" in out


def test_malformed_json_names_location():
    code, out = run_command(["delta", "--u", '[["1", "0"]', "--w", '[["1", "0"]]'])
    assert code == 2
    assert "line 1" in out and "column" in out


def test_unknown_subcommand_is_input_error():
    assert run_command(["frobnicate"])[0] == 2


def test_non_positive_precision():
    code, _ = run_command(["series", "eval", "--x", '"t"', "--precision", "0"])
    assert code == 2


def test_output_is_deterministic():
    argv = ["taylor", "--family", "hier2", "--order", "4", "--seed", "5"]
    assert run_command(argv) == run_command(argv)


def test_main_prints(capsys):
    assert main(["series", "eval", "--x", '"t"']) == 0
    assert "val: <1>" in capsys.readouterr().out


@pytest.mark.parametrize("family", ["square", "identity"])
def test_taylor_named_families(family):
    assert run_command(["taylor", "--family", family, "--order", "2"])[0] == 0
