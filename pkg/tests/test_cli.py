import json
import subprocess
import sys

import pytest

from crfem.cli import run


def call(capsys, *argv):
    code = run(list(argv))
    return code, capsys.readouterr().out


def call_json(capsys, *argv):
    code, out = call(capsys, *argv)
    return code, json.loads(out)


def test_counts_table(capsys):
    code, rep = call_json(capsys, "counts", "--d", "3", "--k", "33", "--r", "4,8,16")
    assert code == 0 and rep["status"] == "pass"
    assert [row["total"] for row in rep["result"]["table"]] == [544, 1280, 1440, 3876]
    assert rep["result"]["total"] == 7140
    assert rep["params"] == {"d": 3, "k": 33, "kind": "primal", "r": [4, 8, 16]}


def test_counts_text(capsys):
    code, out = call(capsys, "counts", "--d", "2", "--k", "5", "--r", "1,2", "--format", "text")
    assert code == 0
    assert "vertex" in out and "total 21" in out and out.rstrip().endswith("status: pass")


def test_check_assumption(capsys):
    code, rep = call_json(capsys, "check-assumption", "--r", "1,3", "--k", "6")
    assert code == 1 and rep["result"]["verdict"] == "invalid: k < 2*r_d+1"
    code, rep = call_json(capsys, "check-assumption", "--r", "1,2", "--k", "5")
    assert code == 0 and rep["result"]["valid"]


def test_decompose_single_and_table(capsys):
    code, rep = call_json(capsys, "decompose", "--alpha", "0,7,7,16", "--r", "3,6,14")
    assert code == 0 and rep["result"]["s"] == 3
    code, rep = call_json(capsys, "decompose", "--alpha", "0,7,7,16", "--r", "3,6,14",
                          "--kind", "dual")
    assert code == 0 and rep["result"]["s"] == 1
    code, rep = call_json(capsys, "decompose", "--d", "2", "--k", "5", "--r", "1,2")
    assert code == 0 and rep["result"]["total"] == 21


@pytest.mark.parametrize("family", ["fe", "interp"])
def test_unisolvency(capsys, family):
    code, rep = call_json(capsys, "unisolvency", "--d", "2", "--k", "9", "--r", "2,4",
                          "--family", family, "--simplex", "random", "--mode", "modular")
    assert code == 0 and rep["result"]["verdict"] == "nonsingular"


def test_unisolvency_structure(capsys):
    code, rep = call_json(capsys, "unisolvency", "--d", "2", "--k", "5", "--r", "1,2",
                          "--structure")
    assert code == 0
    assert rep["result"]["block_triangularity"]["ok"] and rep["result"]["equivalence"]["ok"]


@pytest.mark.parametrize("argv", [
    ["counts", "--d", "2", "--k", "5", "--r", "1,2,3"],
    ["counts", "--d", "2", "--k", "6", "--r", "1,3"],
    ["counts", "--d", "2", "--k", "5"],
    ["nonsense"],
    ["counts", "--d", "2", "--k", "5", "--r", "a,b"],
    ["derham", "--generate", "hexagon", "--k", "5", "--r", "1,2"],
    ["check-continuity", "--k", "5", "--r", "1,2"],
    ["mesh-info", "--mesh", "/nonexistent/mesh.json"],
])
def test_usage_errors_exit_2(capsys, argv):
    code = run(argv)
    capsys.readouterr()
    assert code == 2


def test_same_seed_same_bytes(capsys):
    argv = ["unisolvency", "--d", "2", "--k", "9", "--r", "2,4", "--simplex", "random",
            "--mode", "modular", "--seed", "17"]
    _, a = call(capsys, *argv)
    _, b = call(capsys, *argv)
    assert a == b


def test_basis_writes_file(capsys, tmp_path):
    out = tmp_path / "basis.json"
    code, rep = call_json(capsys, "basis", "--d", "1", "--k", "3", "--r", "1", "--out", str(out))
    assert code == 0 and rep["result"]["size"] == 4
    doc = json.loads(out.read_text())
    assert len(doc["dofs"]) == 4 and len(doc["basis"]) == 4
    # 1 - 3x^2 + 2x^3 = lambda_0^3 + 3 lambda_0^2 lambda_1
    assert doc["basis"][0] == ["1", "3", "0", "0"]


def test_basis_unwritable(capsys):
    code = run(["basis", "--d", "1", "--k", "3", "--r", "1", "--out", "/nonexistent/dir/x.json"])
    capsys.readouterr()
    assert code == 2


def test_check_continuity(capsys):
    code, rep = call_json(capsys, "check-continuity", "--d", "2", "--k", "5", "--r", "1,2",
                          "--trials", "3")
    assert code == 0
    assert [r["family"] for r in rep["result"]["reports"]] == ["fe", "interp"]


def test_check_continuity_patch_file(capsys, tmp_path):
    path = tmp_path / "patch.json"
    path.write_text(json.dumps({"dim": 2, "vertices": [[0, 0], [1, 0], [0, 1], [1, 1]],
                                "cells": [[0, 1, 2], [1, 2, 3]]}))
    code, rep = call_json(capsys, "check-continuity", "--patch", str(path), "--k", "5",
                          "--r", "1,2", "--family", "fe", "--trials", "2")
    assert code == 0 and rep["result"]["reports"][0]["shared_functionals"] == 13


def test_interpolate(capsys, tmp_path):
    poly = tmp_path / "u.json"
    poly.write_text(json.dumps([[[5], 1]]))
    code, rep = call_json(capsys, "interpolate", "--d", "1", "--k", "3", "--r", "1",
                          "--poly", str(poly))
    assert code == 0 and rep["result"]["dofs_match"] and rep["result"]["reproduced"] is None
    poly.write_text(json.dumps([[[2, 1], "1/3"], [[0, 0], 2]]))
    code, rep = call_json(capsys, "interpolate", "--d", "2", "--k", "5", "--r", "1,2",
                          "--poly", str(poly))
    assert code == 0 and rep["result"]["reproduced"]


def test_derham_generated(capsys):
    code, rep = call_json(capsys, "derham", "--generate", "square:2", "--k", "5", "--r", "1,2")
    assert code == 0 and rep["result"]["alternating_sum"] == 1
    code, rep = call_json(capsys, "derham", "--generate", "annulus", "--k", "5", "--r", "1,2")
    assert code == 0 and not rep["result"]["asserted"]


def test_mesh_info(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"dim": 2, "vertices": [[0, 0], [1, 0], [0, 1], [1, 1]],
                                "cells": [[0, 1, 2], [1, 2, 3]]}))
    code, rep = call_json(capsys, "mesh-info", "--mesh", str(path), "--k", "5", "--r", "1,2")
    assert code == 0 and rep["result"]["counts"] == {"0": 4, "1": 5, "2": 2}
    assert rep["result"]["global_dim"] == 29
    path.write_text(json.dumps({"dim": 2, "vertices": [[0, 0], [1, 0], [2, 0]],
                                "cells": [[0, 1, 2]]}))
    code, rep = call_json(capsys, "mesh-info", "--mesh", str(path))
    assert code == 1 and rep["result"]["error"] == "degenerate"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "crfem", "counts", "--d", "1", "--k", "3",
                           "--r", "1", "--format", "text"], capture_output=True, text=True)
    assert proc.returncode == 0 and "total 4" in proc.stdout
