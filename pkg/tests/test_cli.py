import json

import jsonschema
import pytest

from maxorder.cli import SCHEMAS, main
from maxorder.config import ConfigError, RunConfig, parse_config


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMAS[doc["command"]])
    return code, doc


def test_rho_golden(capsys):
    code, out, _ = run(capsys, "rho", "--system", "unitary", "--set", "analysis.bound=7")
    assert code == 0
    assert out == (
        "p,rho,status\n"
        "2,1.5,exact-by-hint\n"
        "3,1.3333333333333333,exact-by-hint\n"
        "5,1.2,exact-by-hint\n"
        "7,1.1428571428571428,exact-by-hint\n"
    )


def test_rho_scan_bounded_and_inf(capsys, tmp_path):
    cfg = tmp_path / "t.ini"
    cfg.write_text("[function]\nkind = table\ndefault = 1\n[function.table]\n3,2 = 1.5\n")
    code, out, _ = run(capsys, "rho", "--config", str(cfg), "--set", "analysis.bound=5")
    assert code == 0
    assert out.splitlines()[2] == "3,1.5,scan-bounded"
    code, out, _ = run(capsys, "rho", "--function", "phi", "--system", "pathological",
                       "--set", "system.N=2,2000", "--set", "analysis.bound=2")
    assert out.splitlines()[1] == "2,inf,exact-by-hint"


def test_phi_golden(capsys):
    code, out, _ = run(capsys, "phi", "--system", "exponential", "--set", "analysis.p=3",
                       "--set", "analysis.nu_max=4")
    assert code == 0
    assert out == "p,nu,phi\n3,0,1\n3,1,3\n3,2,6\n3,3,24\n3,4,72\n"
    code, out, _ = run(capsys, "phi", "--system", "unitary", "--set", "analysis.n_list=12,36")
    assert out == "n,phi\n12,6\n36,24\n"


def test_phi_unsolvable_exit(capsys):
    code, _, err = run(capsys, "phi", "--system", "table", "--set", "system.table.3,2=0,1",
                       "--set", "analysis.p=3", "--set", "analysis.nu_max=3")
    assert code == 1
    assert "2 not in AE_3(2)" in err


def test_constant_json(capsys):
    code, doc = run_json(capsys, "constant", "--system", "unitary", "--cutoff", "10000")
    assert code == 0
    assert doc["constant_lower"] <= 1.0827621932609246 <= doc["constant_upper"]
    assert doc["certified"] and doc["hypothesis_audit"]["passed"]
    assert doc["assertion_flags"]["upper_bound_route"] == "unconditional-convergence"
    assert doc["assertion_flags"]["route_machine_checked"] is False


def test_constant_minimal(capsys):
    code, doc = run_json(capsys, "constant", "--function", "phi", "--cutoff", "10000")
    assert code == 0 and doc["kind"] == "minimal"
    assert doc["constant_lower"] <= 0.5614594835668851 <= doc["constant_upper"]


def test_constant_audit_failure(capsys):
    code, doc = run_json(capsys, "constant", "--function", "table", "--set", "function.default=1",
                         "--cutoff", "100")
    assert code == 1
    assert doc["hypothesis_audit"]["passed"] is False
    assert doc["hypothesis_audit"]["prime"] == 2
    assert "uncertified: no tail envelope" in doc["notes"]


def test_champion_csv(capsys):
    code, out, _ = run(capsys, "champion", "--x-grid", "1000,10000")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "x,log_n,ratio,target,deviation"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["1000", "10000"]


def test_scan_golden(capsys):
    code, out, _ = run(capsys, "scan", "--set", "analysis.n_max=100")
    assert code == 0
    assert [ln.split(",")[0] for ln in out.splitlines()] == ["n", "16", "18", "24"]


def test_counterexample_resource_ceiling(capsys):
    code, doc = run_json(capsys, "counterexample", "--set", "analysis.exclude=mod 4:3",
                         "--set", "analysis.declared_thin=false", "--set", "analysis.prime_bound=100000",
                         "--set", "analysis.heights=100,1000")
    assert code == 3
    assert doc["complete"] is False
    assert doc["schedule"][0]["p"] == 3
    assert doc["scan"]["heights_non_increasing"]


def test_counterexample_needs_fat_set(capsys):
    code, _, err = run(capsys, "counterexample")
    assert code == 2


def test_check(capsys):
    code, doc = run_json(capsys, "check", "--system", "exponential", "--set", "analysis.bound=500")
    assert code == 0
    assert doc["witness"]["verdict"] == "multiplicative-up-to-bound"
    assert doc["reconstruction"]["ok"]


def test_check_unsolvable_system(capsys):
    code, doc = run_json(capsys, "check", "--system", "table", "--set", "system.table.2,3=0,1",
                         "--set", "analysis.bound=100")
    assert code == 1
    assert doc["reconstruction"]["first_failure"] == 8


@pytest.mark.parametrize("argv", [
    ["rho", "--system", "nosuch"],
    ["rho", "--set", "analysis.nosuch=1"],
    ["rho", "--set", "nosection.key=1"],
    ["rho", "--set", "analysis.cutoff=abc"],
    ["rho", "--cutoff", "100000000"],
    ["rho", "--x-grid", "100,10"],
    ["rho", "--system", "pathological"],
    ["constant", "--set", "analysis.exclude=mod 4:3"],
    ["rho", "--config", "/nonexistent.ini"],
])
def test_config_errors_exit_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "config error" in err


def test_invalid_system_exit_two(capsys):
    code, _, _ = run(capsys, "phi", "--system", "table", "--set", "system.table.3,2=0,5",
                     "--set", "analysis.p=3")
    assert code == 2


def test_print_effective_config_round_trip(capsys):
    code, out, _ = run(capsys, "rho", "--system", "unitary", "--cutoff", "5000",
                       "--set", "analysis.exclude=2,3", "--print-effective-config")
    assert code == 0
    cfg = parse_config(out)
    assert cfg.system == "unitary" and cfg.cutoff == 5000 and cfg.exclude == "2,3"
    assert cfg.to_ini() == out


def test_defaults_round_trip():
    cfg = RunConfig()
    assert parse_config(cfg.to_ini()) == cfg


def test_parse_rejects_unknown_section():
    with pytest.raises(ConfigError):
        parse_config("[nosuch]\na = 1\n")


@pytest.mark.parametrize("argv", [
    ["constant", "--system", "exponential", "--cutoff", "2000", "--format", "json"],
    ["champion", "--x-grid", "1000,2000"],
    ["rho", "--function", "phi", "--format", "json"],
])
def test_output_deterministic(capsys, argv):
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second


def test_out_file(tmp_path, capsys):
    path = tmp_path / "o.csv"
    code, out, _ = run(capsys, "scan", "--set", "analysis.n_max=100", "--out", str(path))
    assert code == 0 and out == ""
    assert path.read_text().startswith("n,ratio\n16,")
