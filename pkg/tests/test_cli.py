import json
import subprocess
import sys

import pytest

from weilspin import cli
from weilspin import secant as S
from weilspin.errors import ConfigError
from weilspin.suites import FAMILIES, FamilyResult

FLAG = {"field": {"t": 3, "q": "1"}, "rank_d": 4, "unit_f": ["2", "1"]}


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_dims_default_flagship(capsys):
    code, out, _ = run(capsys, "dims")
    assert code == 0
    doc = json.loads(out)
    assert doc["dims"] == {"dimB": 4, "dimHW": 4, "dimA2": 2, "BB": [4, 8, 4], "dimKB1": 4, "dimH11alg": 9}


def test_criterion_flagship(capsys, tmp_path):
    code, out, _ = run(capsys, "criterion", "--config", write(tmp_path, FLAG))
    assert code == 0
    crit = json.loads(out)["criterion"]
    assert crit["r"] == "-56/1" and crit["verdict"] == "pass"
    assert crit["kb1"]["member"] is False


def test_negative_control_exit_1(capsys, tmp_path):
    cfg = dict(FLAG, classes={"beta": "alpha0"})
    code, out, _ = run(capsys, "criterion", "--config", write(tmp_path, cfg))
    assert code == 1
    crit = json.loads(out)["criterion"]
    assert crit["r"] == "-8/1" and crit["hw_nonzero"] is False


def test_zero_rank_exit_3(capsys, tmp_path, flagship):
    terms = S.secant_basis(flagship).vectors[3].to_json()
    cfg = dict(FLAG, classes={"beta": terms})
    code, out, _ = run(capsys, "criterion", "--config", write(tmp_path, cfg))
    assert code == 3
    assert json.loads(out)["criterion"]["r"] == "0/1"


@pytest.mark.parametrize(
    "doc, path",
    [
        ({"field": {"t": 12, "q": "1"}, "rank_d": 4}, "field.t"),
        ({"field": {"t": 3, "q": "1"}, "rank_d": 3}, "rank_d"),
        ({"field": {"t": 3, "q": "-2"}, "rank_d": 4}, "field.q"),
        ({"field": {"t": 3, "q": "1"}, "rank_d": 4, "colour": 1}, "colour"),
        ({"field": {"t": 3, "q": "1"}, "rank_d": 4, "checks": ["nope"]}, "checks[0]"),
        ({"field": {"t": 3, "q": "1"}, "rank_d": 4, "classes": {"alpha": "gamma"}}, "classes.alpha"),
    ],
)
def test_config_errors(capsys, tmp_path, doc, path):
    code, out, err = run(capsys, "dims", "--config", write(tmp_path, doc))
    assert code == 2 and out == ""
    assert err.startswith(f"config error: {path}:")


def test_class_outside_b(capsys, tmp_path):
    cfg = dict(FLAG, classes={"beta": [{"mask": 1, "coeff": ["1", "0", "0", "0"]}]})
    code, _, err = run(capsys, "criterion", "--config", write(tmp_path, cfg))
    assert code == 2 and "classes.beta" in err


def test_unreadable_config(capsys, tmp_path):
    code, _, err = run(capsys, "dims", "--config", str(tmp_path / "missing.json"))
    assert code == 2 and "cannot read" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "dims", "--config", str(bad))
    assert code == 2 and "invalid JSON" in err


def test_t12_message():
    with pytest.raises(ConfigError) as exc:
        cli.parse_config({"field": {"t": 12, "q": "1"}, "rank_d": 4})
    assert "squarefree" in str(exc.value)


def test_defaults_and_round_trip(tmp_path):
    cfg = cli.load_config(write(tmp_path, {"field": {"t": 3, "q": "1"}, "rank_d": 4}))
    assert (cfg.theta, cfg.seed, cfg.case_count) == ("darboux", 0, 100)
    full = dict(FLAG, classes={"alpha": "alpha0"}, checks=["tau_b"], seed=4, case_count=7)
    cfg = cli.parse_config(full)
    again = cli.load_config(write(tmp_path, cfg.to_json(), "again.json"))
    assert again == cfg
    assert again.classes == {"alpha": "alpha0", "beta": "betaprime"}


def test_e2_criterion_skipped(capsys, tmp_path):
    code, out, _ = run(capsys, "criterion", "--config", write(tmp_path, {"field": {"t": 0, "q": "1"}, "rank_d": 4}))
    assert code == 0
    assert "skipped" in json.loads(out)["criterion"]


def test_suite_deterministic_and_md(capsys, tmp_path):
    cfg = write(tmp_path, {"field": {"t": 0, "q": "1"}, "rank_d": 2, "case_count": 5})
    first = run(capsys, "suite", "--config", cfg, "--seed", "1")
    second = run(capsys, "suite", "--config", cfg, "--seed", "1")
    assert first[0] == 0 and first[1] == second[1]
    code, md, _ = run(capsys, "suite", "--config", cfg, "--format", "md")
    firsts = [line.split("|")[1].strip() for line in md.splitlines() if line.startswith("| ")]
    assert all(firsts.count(name) == 1 for name in FAMILIES)


def test_failed_row_has_counterexample():
    rep = cli.RunReport("suite", {"field": {}})
    bad = FamilyResult("tau_b", "tau(B) = B", cases=1).fail(x=[{"mask": 3, "coeff": ["1/1", "0/1", "0/1", "0/1"]}])
    rep.sections["suite"] = {"tau_b": bad.to_json()}
    rep.passed = False
    md = cli.emit_markdown(rep)
    row = next(line for line in md.splitlines() if line.startswith("| tau_b"))
    assert "FAIL" in row and '"mask": 3' in row
    assert rep.exit_code == 1


def test_hodge_command(capsys):
    code, out, _ = run(capsys, "hodge")
    assert code == 0
    doc = json.loads(out)["hodge"]
    assert doc["omega"]["member"] and doc["hodgeB"] == [True] * 4


def test_timings_only_on_request(capsys):
    _, out, _ = run(capsys, "dims")
    assert "timings" not in json.loads(out)
    _, out, _ = run(capsys, "dims", "--timings")
    assert "total" in json.loads(out)["timings"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "weilspin", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("weilspin ")
