import csv
import json

import numpy as np
import pytest

from varfrac.cli import fmt_float, main, to_json


def run(tmp_path, *argv, config=None):
    out = tmp_path / "out"
    args = list(argv) + ["--out", str(out)]
    if config is not None:
        path = tmp_path / "cfg.yaml"
        path.write_text(config)
        args += ["--config", str(path)]
    code = main(args)
    return code, json.loads((out / "report.json").read_text()), out


def test_fmt_float_roundtrips():
    for x in (0.1, 1 / 3, 1e-300, -2.5e17):
        assert float(fmt_float(x)) == x
    assert to_json({"a": float("nan")}) == '{\n  "a": "NaN"\n}'


@pytest.mark.parametrize("command", ["validate-kernel", "norm", "seminorm", "compare-spaces",
                                     "operator-probe"])
def test_default_commands_pass(tmp_path, command):
    code, rep, _ = run(tmp_path, command)
    assert code == 0 and rep["status"] == "pass" and rep["command"] == command


def test_properties_default(tmp_path):
    code, rep, _ = run(tmp_path, "properties")
    assert code == 0 and rep["failed"] == [] and rep["count"] == len(rep["invariants"])


def test_asymmetric_kernel_rejected(tmp_path):
    cfg = "seed: 1\nkernel: {kind: custom, expr: 'r^(-1 - 0.3*p) * (1.5 + 0.5*sin(x))'}\n"
    code, rep, _ = run(tmp_path, "validate-kernel", config=cfg)
    assert code == 1
    assert rep["status"] in ("fail", "invalid")


def test_zero_source_gives_zero_solution(tmp_path):
    code, rep, out = run(tmp_path, "solve", "--seed", "3",
                         config="seed: 3\nproblem: {f: '0'}\n")
    assert code == 0 and rep["residual"] == 0.0
    with open(out / "solution.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(float(r["value"]) == 0.0 for r in rows)


def test_embedding_scan_writes_samples(tmp_path):
    code, rep, out = run(tmp_path, "embedding-scan")
    assert code == 0
    with open(out / "samples.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) > 1
    assert all(np.isfinite(float(v)) for r in rows[1:] for v in r[1:] if v)


def test_malformed_yaml(tmp_path):
    code, rep, _ = run(tmp_path, "norm", config="grid: [unclosed\n")
    assert code == 2 and rep["status"] == "config-error"


def test_unknown_section(tmp_path):
    code, _, _ = run(tmp_path, "norm", config="seed: 1\nbogus: 3\n")
    assert code == 2


def test_bad_expression(tmp_path):
    code, _, _ = run(tmp_path, "solve", config="seed: 1\nproblem: {f: '__import__(1)'}\n")
    assert code == 2


def test_missing_seed_for_random_command(tmp_path):
    code, rep, _ = run(tmp_path, "norm", config="samples: 3\n")
    assert code == 2 and "seed" in rep["error"]


def test_theta_too_small_fails_hypotheses(tmp_path):
    cfg = "seed: 1\nproblem: {kirchhoff: {theta: 2.0}}\n"
    code, rep, _ = run(tmp_path, "solve-kirchhoff", config=cfg)
    assert code == 1 and not rep["hypotheses"]["ok"]


def test_kirchhoff_report_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert main(["solve-kirchhoff", "--out", str(a / "o")]) == 0
    assert main(["solve-kirchhoff", "--out", str(b / "o")]) == 0
    for name in ("report.json", "solution.csv", "samples.csv"):
        assert (a / "o" / name).read_bytes() == (b / "o" / name).read_bytes()
