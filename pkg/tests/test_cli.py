"""Tests for the command-line interface: exit codes, outputs, determinism."""

import json
import os

import numpy as np
import pytest

from eigenfem import export_triangle, generate_structured
from eigenfem.cli import main


def run(argv):
    return main(argv)


def test_analyze_certified_exit_zero(tmp_path):
    code = run(["analyze", "--problem", "ex5_1", "--mesh", "mesh45",
                "--J", "41", "--out", str(tmp_path)])
    assert code == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["conditions"]["strict_pass"] is True
    assert rep["certificate"]["certified_irreducible_m_matrix"] is True
    assert rep["config"]["problem"] == "ex5_1"
    assert (tmp_path / "per_edge.csv").exists()
    assert (tmp_path / "per_element.csv").exists()


def test_analyze_weak_exit_two(tmp_path):
    # right triangles with D = I sit exactly on the bound: weak pass only
    code = run(["analyze", "--problem", "laplace", "--mesh", "mesh45",
                "--J", "5", "--out", str(tmp_path)])
    assert code == 2


def test_analyze_fail_exit_three(tmp_path):
    code = run(["analyze", "--problem", "ex5_1", "--mesh", "mesh135",
                "--J", "11", "--out", str(tmp_path)])
    assert code == 3
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["conditions"]["nonobtuse_weak"] is False


def test_analyze_unknown_problem_exit_one(tmp_path):
    code = run(["analyze", "--problem", "nope", "--mesh", "mesh45",
                "--J", "5", "--out", str(tmp_path)])
    assert code == 1


def test_analyze_missing_J_exit_one(tmp_path):
    code = run(["analyze", "--problem", "laplace", "--mesh", "mesh45",
                "--out", str(tmp_path)])
    assert code == 1


def test_solve_outputs(tmp_path, capsys):
    code = run(["solve", "--problem", "ex5_1", "--mesh", "mesh45",
                "--J", "21", "--k", "6", "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "lambda_1" in out and "certificate" in out
    assert len([ln for ln in out.strip().splitlines()]) == 5

    ev = (tmp_path / "eigenvalues.csv").read_text().splitlines()
    assert ev[0].startswith("# config:")
    assert ev[1].split(",") == ["index", "re", "im", "modulus", "residual",
                                "converged"]
    assert len(ev) == 2 + 6

    props = json.loads((tmp_path / "properties.json").read_text())
    assert props["properties"]["sign_preserving"] is True
    assert props["k_converged"] == 6

    vtk = (tmp_path / "principal.vtk").read_text().splitlines()
    assert vtk[0] == "# vtk DataFile Version 3.0"
    assert "DATASET UNSTRUCTURED_GRID" in vtk
    n_pts = 21 * 21
    pd = vtk.index(f"POINT_DATA {n_pts}")
    vals = np.array([float(x) for x in vtk[pd + 3:pd + 3 + n_pts]])
    # boundary vertices carry exactly 0, the peak is exactly 1
    m = generate_structured("mesh45", 21)
    assert np.all(vals[m.boundary] == 0.0)
    assert abs(vals.max() - 1.0) <= 1e-12


def test_solve_reports_failed_certificate_without_crashing(tmp_path):
    code = run(["solve", "--problem", "ex5_1", "--mesh", "mesh135",
                "--J", "11", "--k", "4", "--out", str(tmp_path)])
    assert code == 0
    props = json.loads((tmp_path / "properties.json").read_text())
    assert props["certificate"]["certified_irreducible_m_matrix"] is False


def test_solve_determinism(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    for out in (out1, out2):
        assert run(["solve", "--problem", "ex5_2", "--mesh", "mesh45",
                    "--J", "11", "--k", "4", "--out", str(out)]) == 0
    # the embedded config differs only in the output directory; everything
    # after the config line must be byte-identical
    e1 = (out1 / "eigenvalues.csv").read_text().splitlines()[1:]
    e2 = (out2 / "eigenvalues.csv").read_text().splitlines()[1:]
    assert e1 == e2, "eigenvalues.csv not deterministic"
    v1 = (out1 / "principal.vtk").read_bytes()
    v2 = (out2 / "principal.vtk").read_bytes()
    assert v1 == v2, "principal.vtk not byte-identical"
    # properties.json embeds the out dir in config; compare all other keys
    p1 = json.loads((out1 / "properties.json").read_text())
    p2 = json.loads((out2 / "properties.json").read_text())
    p1["config"].pop("out")
    p2["config"].pop("out")
    assert p1 == p2


def test_converge_output(tmp_path):
    code = run(["converge", "--problem", "laplace", "--mesh", "mesh45",
                "--J", "5,9,17", "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "convergence.csv").read_text().splitlines()
    assert lines[0].startswith("# config:")
    assert lines[1].split(",")[0] == "J"
    assert len(lines) == 2 + 3
    last = lines[-1].split(",")
    assert float(last[4]) < float(lines[2].split(",")[4])  # error decreased


def test_converge_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("EIGENFEM_THREADS", "2")
    code = run(["converge", "--problem", "laplace", "--mesh", "mesh45",
                "--J", "5,9,17", "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "convergence.csv").read_text().splitlines()
    Js = [int(l.split(",")[0]) for l in lines[2:]]
    assert Js == [5, 9, 17]  # ordered by J regardless of worker count


def test_converge_bad_J_list(tmp_path):
    code = run(["converge", "--problem", "laplace", "--mesh", "mesh45",
                "--J", "9,5", "--out", str(tmp_path)])
    assert code == 1


def test_import_mesh_path(tmp_path):
    m = generate_structured("mesh45", 9)
    node_text, ele_text = export_triangle(m)
    node = tmp_path / "m.node"
    ele = tmp_path / "m.ele"
    node.write_text(node_text)
    ele.write_text(ele_text)
    out = tmp_path / "out"
    code = run(["analyze", "--problem", "ex5_1", "--mesh", "import",
                "--node", str(node), "--ele", str(ele), "--out", str(out)])
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["mesh"]["n_vertices"] == 81


def test_import_missing_file(tmp_path):
    code = run(["analyze", "--problem", "ex5_1", "--mesh", "import",
                "--node", str(tmp_path / "none.node"),
                "--ele", str(tmp_path / "none.ele"), "--out", str(tmp_path)])
    assert code == 1


def test_problem_json_descriptor(tmp_path):
    spec = {"label": "iso", "diffusion": [[1.0, 0.0], [0.0, 1.0]],
            "convection": [0.0, 0.0], "reaction": 0.0}
    path = tmp_path / "prob.json"
    path.write_text(json.dumps(spec))
    code = run(["solve", "--problem", str(path), "--mesh", "mesh45",
                "--J", "11", "--k", "2", "--out", str(tmp_path)])
    assert code == 0
    props = json.loads((tmp_path / "properties.json").read_text())
    assert abs(props["lambda_1"]["re"] - 2 * np.pi ** 2) <= 0.5


def test_solver_failure_exit_four(tmp_path, monkeypatch):
    # force a solver failure by patching solve_smallest to raise
    import eigenfem.cli as cli_mod
    from eigenfem import EigenSolveError

    def boom(*a, **kw):
        raise EigenSolveError("synthetic failure")

    monkeypatch.setattr(cli_mod, "solve_smallest", boom)
    code = run(["solve", "--problem", "laplace", "--mesh", "mesh45",
                "--J", "5", "--out", str(tmp_path)])
    assert code == 4
