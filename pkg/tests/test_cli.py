import json
import subprocess
import sys

import pytest

from confsym import fixture_path
from confsym.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_curvature_flat_text(capsys):
    code, out, _ = run(capsys, "curvature", fixture_path("flat3"), "--tensor", "riemann")
    assert code == 0 and "all components zero" in out


def test_curvature_sphere_scalar_json(capsys):
    code, out, _ = run(capsys, "curvature", fixture_path("sphere3"), "--tensor", "scalar", "--json")
    rep = json.loads(out)
    assert code == 0 and rep["schema"] == "confsym.report/1"
    assert rep["components"] == [{"index": "", "value": "6"}]
    assert len(rep["input_sha256"]) == 64


def test_json_is_byte_identical_across_runs(capsys):
    a = run(capsys, "obs", fixture_path("stackel"), "--symbol", "K", "--json")[1]
    b = run(capsys, "obs", fixture_path("stackel"), "--symbol", "K", "--json")[1]
    assert a == b
    assert "wall_ms" not in a


def test_obs_stackel_not_closed(capsys):
    code, out, _ = run(capsys, "obs", fixture_path("stackel"), "--symbol", "K", "--json")
    rep = json.loads(out)
    assert code == 0 and rep["closed"] is False
    assert [c["index"] for c in rep["d_obs_flat"]] == ["_x2,_x3"]


def test_classify_stackel_obstructed(capsys):
    code, out, _ = run(capsys, "classify", fixture_path("stackel"), "--symbol", "K")
    assert code == 0 and "verdict: obstructed" in out


def test_classify_dipirro_hatted(capsys):
    code, out, _ = run(
        capsys, "classify", fixture_path("dipirro"), "--symbol", "K", "--hat-metric", "1/(2*(gamma+c))", "--json"
    )
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "symmetry" and rep["closed"] is True
    assert rep["potential_coefficients"]["Ric(K)"] == "3/16"
    assert rep["potential_coefficients"]["Sc*TrK"] == "-1/16"


@pytest.mark.parametrize(
    "argv",
    [
        ["obs", "FIX", "--symbol", "NOPE"],
        ["classify", "FIX", "--symbol", "K", "--potential", "nope"],
        ["curvature", "/nonexistent/file.geo", "--tensor", "ricci"],
        ["curvature", "FIX", "--tensor", "bogus"],
    ],
)
def test_input_errors_exit_2(capsys, argv):
    argv = [fixture_path("stackel") if a == "FIX" else a for a in argv]
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_malformed_geometry_exit_2(capsys, tmp_path):
    p = tmp_path / "bad.geo"
    p.write_text("manifold { dim = 3; coords = [x1, x2, x3]; }\nmetric g { g[1,1] = w(x1); }\n")
    code, _, err = run(capsys, "curvature", str(p), "--tensor", "ricci")
    assert code == 2 and "2:21" in err and "undeclared" in err


def test_paper_suite_filter_and_exit_code(capsys):
    code, out, _ = run(capsys, "paper-suite", "--filter", "^stackel\\.conformal_killing$", "--json")
    rep = json.loads(out)
    assert code == 0
    assert [c["name"] for c in rep["checks"]] == ["stackel.conformal_killing"]
    assert rep["summary"] == {"failed": 0, "total": 1}
    assert "wall_ms" not in rep["checks"][0]


def test_paper_suite_failing_check_exits_1(capsys):
    code, out, _ = run(capsys, "paper-suite", "--filter", "^beta\\.n3\\.m0m0$")
    assert code == 1 and "FAIL" in out


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "confsym.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("confsym ")
