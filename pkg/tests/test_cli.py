from __future__ import annotations

import io
import os
import subprocess
import sys

import pytest

from vmds import __version__
from vmds.cli import main
from vmds.model import deserialize, serialize
from vmds.search import parse_certificate


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def f1(tmp_path, figure1):
    path = tmp_path / "figure1.vmds"
    path.write_text(serialize(*figure1))
    return str(path)


def test_verify_figure1(capsys, f1):
    code, out, _ = run(capsys, "verify", f1)
    assert code == 0
    assert out == "MDS: pass; bandwidth: pass; access: fail; update: fail\n"


def test_verify_shortenings(capsys, tmp_path, fig12, fig34):
    for fixture, expected in [(fig12, "access: pass; update: fail"), (fig34, "access: fail; update: pass")]:
        path = tmp_path / "x.vmds"
        path.write_text(serialize(*fixture))
        code, out, _ = run(capsys, "verify", str(path))
        assert code == 0 and expected in out


def test_verify_reports_failures(capsys, tmp_path, figure1):
    code_, scheme = figure1
    bad = serialize(code_, scheme).replace("S 1 1\n1 0", "S 1 1\n0 1", 1)
    path = tmp_path / "bad.vmds"
    path.write_text(bad)
    code, out, _ = run(capsys, "verify", "-v", str(path))
    assert code == 1
    assert out.startswith("MDS: pass; bandwidth: fail")
    assert "violation" in out


def test_verify_without_scheme(capsys, tmp_path, figure1):
    path = tmp_path / "bare.vmds"
    path.write_text(serialize(figure1[0]))
    code, out, _ = run(capsys, "verify", str(path))
    assert code == 0 and "bandwidth: n/a" in out


def test_construct_then_verify_through_a_pipe(tmp_path):
    env = dict(os.environ)
    built = subprocess.run(
        [sys.executable, "-m", "vmds", "construct", "figure1"], capture_output=True, text=True, check=True, env=env
    )
    checked = subprocess.run(
        [sys.executable, "-m", "vmds", "verify", "-"], input=built.stdout, capture_output=True, text=True, env=env
    )
    assert checked.returncode == 0
    assert checked.stdout.startswith("MDS: pass; bandwidth: pass")


def test_bounds(capsys):
    assert run(capsys, "bounds", "--l", "4", "--r", "2", "--family", "general")[1] == "24\n"
    assert run(capsys, "bounds", "--l", "4", "--r", "2", "--family", "diagonal")[1] == "2\n"
    assert run(capsys, "bounds", "--l", "4", "--r", "2", "--family", "access", "--constant")[1] == "4\n"
    assert run(capsys, "bounds", "--l", "4", "--r", "2", "--family", "access", "--non-constant")[1] == "5\n"
    code, _, err = run(capsys, "bounds", "--l", "3", "--r", "2")
    assert code == 2 and err.startswith("error:")


def test_repair_node3_zero(capsys, f1):
    code, out, _ = run(capsys, "repair", f1, "--node", "3", "--zero")
    assert code == 0
    assert "total bw=5 access=10" in out
    assert out.rstrip().endswith("reconstructed=[0,0]")


def test_repair_with_data_file(capsys, tmp_path, f1):
    data = tmp_path / "data.txt"
    data.write_text("1 5\n2 6  # node 2\n3 0\n4 1\n")
    code, out, _ = run(capsys, "repair", f1, "--node", "2", "--data", str(data))
    assert code == 0 and out.rstrip().endswith("reconstructed=[2,6]")


def test_repair_random_is_deterministic(capsys, f1):
    first = run(capsys, "repair", f1, "--node", "4", "--random", "11")
    assert first[0] == 0
    assert run(capsys, "repair", f1, "--node", "4", "--random", "11") == first


def test_repair_errors(capsys, tmp_path, f1):
    assert run(capsys, "repair", f1, "--node", "9", "--zero")[0] == 1
    data = tmp_path / "short.txt"
    data.write_text("1 2\n")
    assert run(capsys, "repair", f1, "--node", "1", "--data", str(data))[0] == 2
    assert run(capsys, "repair", f1, "--node", "1")[0] == 2


def test_construct_kinds(capsys, tmp_path, f1):
    out = tmp_path / "out.vmds"
    assert run(capsys, "construct", "diagonal", "--r", "2", "--t", "2", "--p", "5", "-o", str(out))[0] == 0
    code, scheme = deserialize(out.read_text())
    assert (code.k, code.l) == (2, 4) and code.is_diagonal()
    assert run(capsys, "construct", "transform", f1, "-o", str(out))[0] == 0
    assert deserialize(out.read_text())[0].k == 3
    assert run(capsys, "construct", "transform", f1, "--deleted", "1", "-o", str(out))[0] == 0
    assert run(capsys, "construct", "shorten", f1, "--keep", "3,4", "-o", str(out))[0] == 0
    assert deserialize(out.read_text())[0].is_diagonal()
    assert run(capsys, "construct", "random", "--k", "2", "--r", "2", "--l", "2", "--p", "7", "-o", str(out))[0] == 0
    assert deserialize(out.read_text())[1] is None


def test_construct_failure_leaves_no_file(capsys, tmp_path):
    out = tmp_path / "never.vmds"
    code, _, err = run(capsys, "construct", "diagonal", "--r", "2", "--t", "1", "--p", "2", "-o", str(out))
    assert code == 1 and "error" in err
    assert not out.exists()
    assert os.listdir(tmp_path) == []


def test_write_replaces_atomically(capsys, tmp_path, f1):
    out = tmp_path / "doc.vmds"
    out.write_text("old")
    assert run(capsys, "construct", "shorten", f1, "--keep", "1", "-o", str(out))[0] == 0
    assert deserialize(out.read_text())[0].k == 1
    assert sorted(os.listdir(tmp_path)) == ["doc.vmds", "figure1.vmds"]


def test_analyze(capsys, tmp_path, f1, diag22):
    transformed = tmp_path / "t.vmds"
    run(capsys, "construct", "transform", f1, "-o", str(transformed))
    code, out, _ = run(capsys, "analyze", str(transformed), "--diagnostic", "intersections")
    assert code == 0 and "verdict pass" in out
    code, out, _ = run(capsys, "analyze", str(transformed), "--diagnostic", "detcriterion", "-v")
    assert code == 0 and "verdict pass" in out
    code, out, _ = run(capsys, "analyze", str(transformed), "--diagnostic", "degrees")
    assert code == 1 and out.startswith("degrees ")
    path = tmp_path / "d.vmds"
    path.write_text(serialize(*diag22))
    code, out, _ = run(capsys, "analyze", str(path), "--diagnostic", "partitions")
    assert code == 0 and "verdict pass" in out


def test_analyze_needs_constant_scheme(capsys, f1):
    code, _, err = run(capsys, "analyze", f1, "--diagnostic", "intersections")
    assert code == 2 and "constant" in err


def test_search(capsys, tmp_path):
    out = tmp_path / "cert.txt"
    argv = ["search", "--l", "2", "--r", "2", "--p", "5", "--family", "diagonal", "--constant", "-o", str(out)]
    assert run(capsys, *argv)[0] == 0
    cert = parse_certificate(out.read_text())
    assert (cert.achieved_k, cert.exhausted) == (1, True)
    code, _, _ = run(capsys, "search", "--l", "2", "--r", "2", "--p", "7", "--family", "access", "--budget", "100")
    assert code == 1


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["verify"],
        ["bounds", "--l", "x", "--r", "2"],
        ["search", "--l", "2", "--r", "2", "--p", "5", "--budget", "0"],
        ["construct", "shorten", "missing.vmds", "--keep", "1"],
    ],
)
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_parse_error_exit_code(capsys, tmp_path):
    path = tmp_path / "garbage.vmds"
    path.write_text("vmds v1\nfield 7 1\nparams 2 2\n")
    code, _, err = run(capsys, "verify", str(path))
    assert code == 2 and "line" in err


def test_invariant_violation_is_usage_error(capsys, tmp_path, figure1):
    text = serialize(*figure1).replace("C 2 1\n1 5\n0 3", "C 2 1\n0 0\n0 0", 1)
    path = tmp_path / "singular.vmds"
    path.write_text(text)
    assert run(capsys, "verify", str(path))[0] == 2


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0 and __version__ in out


def test_stdin_dash(capsys, monkeypatch, figure1):
    monkeypatch.setattr(sys, "stdin", io.StringIO(serialize(*figure1)))
    assert run(capsys, "verify", "-")[0] == 0
