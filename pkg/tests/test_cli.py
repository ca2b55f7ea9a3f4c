import json

import numpy as np
import pytest
from click.testing import CliRunner

from cggm.cli import cli, main
from cggm.graph import ColoredGraph, three_vertex
from cggm.linalg import Dataset


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    three_vertex("e").write("e.json")
    three_vertex("c").write("c.json")
    return tmp_path


def run(*args):
    return CliRunner().invoke(cli, list(args), catch_exceptions=False)


def test_gen_is_deterministic(workdir):
    r = run("--seed", "7", "gen", "--kmat", "star:8", "-n", "1000", "--out", "a.csv")
    assert r.exit_code == 0
    run("--seed", "7", "gen", "--kmat", "star:8", "-n", "1000", "--out", "b.csv")
    assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()
    assert Dataset.from_csv("a.csv").X.shape == (1000, 8)
    run("gen", "--kmat", "star:8", "-n", "0", "--out", "z.csv")
    assert (workdir / "z.csv").read_text().startswith("x1,")


def test_gen_matrix_file(workdir):
    np.savetxt("k.csv", np.array([[2.0, 0.5], [0.5, 1.0]]), delimiter=",")
    assert run("gen", "--kmat", "k.csv", "-n", "4", "--out", "d.csv", "--no-header").exit_code == 0
    np.savetxt("bad.csv", np.array([[1.0, 2.0], [2.0, 1.0]]), delimiter=",")
    assert main(["gen", "--kmat", "bad.csv", "-n", "4", "--out", "d.csv"]) == 2


def test_norm_const(workdir):
    r = run("norm-const", "--graph", "e.json", "--delta", "5")
    assert r.exit_code == 0
    value = float(r.output)
    assert r.output.strip() == f"{value:.3f}"
    assert main(["norm-const", "--graph", "e.json", "--dmat", "missing.csv"]) == 2


def test_bf_and_select_and_metrics(workdir):
    run("--seed", "1", "gen", "--kmat", "pair-ec:1", "-n", "100", "--out", "d.csv")
    r = run("--seed", "2", "bf", "--data", "d.csv", "--g1", "e.json", "--g2", "c.json",
            "--iters", "2000", "--burnin", "100", "--replicates", "2")
    assert r.exit_code == 0
    lines = r.output.splitlines()
    assert lines[0].startswith("value ") and lines[2].startswith("counts ")
    assert sum(map(int, lines[2].split()[1:])) == 2 * 1900

    r = run("select", "--data", "d.csv", "--iters", "1000", "--burnin", "100", "--out", "sel.json")
    assert r.exit_code == 0
    g = ColoredGraph.read("sel.json")
    assert g.p == 3

    r = run("metrics", "--true", "c.json", "--est", "sel.json", "--est", "e.json")
    assert r.exit_code == 0 and "Acc_all" in r.output and "IP:" in r.output


def test_replicate_and_runs_dir(workdir):
    r = run("--threads", "2", "replicate", "--kmat", "sel:8", "--reps", "3", "--iters", "800",
            "--burnin", "100", "--out-dir", "runs")
    assert r.exit_code == 0, r.output
    assert "percentage" in r.output
    assert len(list((workdir / "runs").glob("*.json"))) == 3
    truth = ColoredGraph(3, [[1, 2, 3]], [])
    truth.write("t.json")
    r = run("metrics", "--true", "t.json", "--runs-dir", "runs")
    assert r.exit_code == 0


def test_exit_codes(workdir):
    assert main(["bogus"]) == 2
    assert main(["gen", "--kmat", "nope", "-n", "3", "--out", "x.csv"]) == 2
    json.dump({"p": 3, "vertex_classes": [[1, 2]]}, open("bad.json", "w"))
    assert main(["norm-const", "--graph", "bad.json"]) == 2
    # too few rows for the regressions is a numerical failure
    run("gen", "--kmat", "pair-ec:1", "-n", "3", "--out", "tiny.csv")
    assert main(["select", "--data", "tiny.csv"]) == 3
    assert main(["bf", "--data", "tiny.csv", "--g1", "e.json", "--g2", "e.json"]) == 2
