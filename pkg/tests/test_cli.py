import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from bvlab.cli.main import main

PASSING = [
    ["check-master", "yang-mills-su2-d2.thy"],
    ["check-master", "scalar.thy"],
    ["brst-apply", "yang-mills-su2-d2.thy", "--expr", "A[0,1]", "--expr", "cbar[2]"],
    ["layers", "maxwell.thy"],
    ["gauge-fix", "yang-mills-su2-d2.thy"],
    ["homotopy-verify", "maxwell.thy", "--max-degree", "3"],
    ["--hbar-order", "3", "homotopy-verify", "kt-toy.modes", "--max-degree", "3", "--perturb"],
    ["--hbar-order", "3", "extend", "kt-toy.modes", "--expr", "A*c*af(c)", "--exact"],
    ["--hbar-order", "2", "extend", "scalar.thy", "--expr", "af(phi)", "--exact", "--coupling", "lam"],
    ["ward", "oscillator.modes", "--generator", "x^2+p^2", "--expr", "x^2", "--expr", "x*p^2"],
    ["free-brst-ward", "kt-toy.modes", "--expr", "A^2", "--expr", "A*c*cbar"],
    ["--max-n", "3", "rcl", "pair.modes", "--f", "q^2*p + psi*chi", "--g", "q", "--h", "p*psi"],
    ["--max-n", "3", "glz", "pair.modes", "--f", "q^3", "--g", "q*p", "--h", "chi"],
    ["--max-n", "3", "pa-check", "oscillator.modes", "--expr", "x^2*p", "--mode", "x"],
    ["--max-n", "3", "consistency", "kt-toy.modes", "--expr", "A^2 + A*c*cbar"],
    ["--hbar-order", "3", "linfty", "kt-toy.modes", "--anomaly", "zero", "--expr", "A^2"],
    ["--hbar-order", "3", "linfty", "kt-toy.modes", "--anomaly", "computed", "--expr", "A^2", "--expr", "c"],
    ["--hbar-order", "3", "linfty", "kt-toy.modes", "--anomaly", "transport", "--expr", "A*B"],
    ["--hbar-order", "3", "contact", "kt-toy.modes", "--expr", "A*c*af(c)", "--exact", "--shift", "cbar"],
]


def invoke(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


@pytest.mark.parametrize("args", PASSING, ids=lambda a: " ".join(x for x in a if not x.startswith("-"))[:60])
def test_commands_pass(args):
    result = invoke(args)
    assert result.exit_code == 0, result.output
    assert ": PASS" in result.output.splitlines()[0]


def test_failing_check_gives_exit_one(tmp_path):
    broken = tmp_path / "broken.thy"
    source = (
        "theory broken\ndimension 2\njet-order 3\nspacetime mu\n"
        "field phi parity=0 ghost=0 role=field\nfield c parity=1 ghost=1 role=ghost\n"
        "action = -1/2*d(phi,mu)*d(phi,mu)\nextension = c*phi*af(phi)\n"
    )
    broken.write_text(source)
    result = invoke(["check-master", str(broken)])
    assert result.exit_code == 1


def test_json_reports_are_deterministic(tmp_path):
    outputs = []
    for i in range(2):
        path = tmp_path / f"report{i}.json"
        result = invoke(["--json", str(path), "--max-n", "3", "rcl", "pair.modes", "--f", "q^3", "--g", "p"])
        assert result.exit_code == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    data = json.loads(outputs[0])
    assert data["command"] == "rcl"
    assert all(c["status"] == "pass" for c in data["checks"])


def test_ward_report_records_vanishing_higher_orders(tmp_path):
    path = tmp_path / "ward.json"
    result = invoke(["--json", str(path), "ward", "oscillator.modes", "--generator", "x^2+p^2", "--expr", "x^2*p^2"])
    assert result.exit_code == 0
    ids = {c["id"]: c["status"] for c in json.loads(path.read_text())["checks"]}
    assert ids["D3=0[x^2*p^2]"] == "pass" and ids["D4=0[x^2*p^2]"] == "pass"


def test_input_errors_exit_with_status_two():
    cmd = [sys.executable, "-m", "bvlab.cli.main", "brst-apply", "scalar.thy", "--expr", "phi +"]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 2
    assert "column 6" in proc.stderr


def test_missing_file_is_a_usage_error():
    result = CliRunner().invoke(main, ["check-master", "no-such-file.thy"])
    assert result.exit_code == 2
