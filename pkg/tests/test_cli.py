import json

import pytest

from mvdlib.cli import main
from mvdlib.io import parse_text


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def star_file(tmp_path, capsys):
    path = tmp_path / "star.txt"
    assert run(capsys, "gen", "star", "--m", "3", "--out", str(path))[0] == 0
    return path


def test_gen_kinds(tmp_path, capsys):
    for kind, extra in (("hypercube", ["--d", "2"]), ("random-ultra", ["--n", "6"]),
                        ("random-metric", ["--n", "5"]), ("planted-cc", ["--sizes", "3,3"])):
        code, out, _ = run(capsys, "--seed", "4", "gen", kind, *extra)
        assert code == 0 and out.startswith("mvdlib-instance 1\n")
        parse_text(out)


def test_validate(star_file, capsys):
    code, out, _ = run(capsys, "validate", str(star_file))
    assert code == 1 and "violations 3" in out
    code, out, _ = run(capsys, "validate", "--mode", "ultra", str(star_file))
    assert code == 1


def test_repair_pivot_trace(star_file, tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    pivots = tmp_path / "p.txt"
    pivots.write_text("3 2 4\n")
    out_file = tmp_path / "y.txt"
    code, out, _ = run(capsys, "repair", str(star_file), "--algo", "pivot-metric", "--pivots", str(pivots),
                       "--trace", str(trace), "--out", str(out_file))
    assert code == 0 and "cost" in out
    steps = [json.loads(s) for s in trace.read_text().splitlines()]
    assert [s["pivot"] for s in steps] == [3, 2, 4]
    assert run(capsys, "validate", str(out_file))[0] == 0


def test_repair_all_algos(star_file, capsys):
    for algo in ("pivot-metric", "pivot-ultra", "cc-ultra"):
        code, out, err = run(capsys, "--seed", "1", "repair", str(star_file), "--algo", algo)
        assert code == 0, err
    # star m=3 has 6 distinct levels, over the builtin solver's default limit
    code, _, err = run(capsys, "repair", str(star_file), "--algo", "lp-ultra")
    assert code == 1 and "too large" in err
    code, out, err = run(capsys, "repair", str(star_file), "--algo", "lp-ultra", "--force")
    assert code == 0, err
    code, out, _ = run(capsys, "repair", str(star_file), "--algo", "lp-ultra", "--solver", "scipy")
    assert "lp_objective" in out


def test_repair_insufficient_pivots(star_file, tmp_path, capsys):
    pivots = tmp_path / "p.txt"
    pivots.write_text("0\n")
    code, _, err = run(capsys, "repair", str(star_file), "--algo", "pivot-metric", "--pivots", str(pivots))
    assert code == 1 and "insufficient pivots" in err


def test_oracle_cmd(star_file, capsys):
    code, out, _ = run(capsys, "oracle", str(star_file))
    lines = out.splitlines()
    assert code == 0 and lines[0] == "cost 1" and lines[1] == "S 0-1"
    assert parse_text("\n".join(lines[2:]) + "\n").instance.distances[0, 1] == 2


def test_cc_cmd(tmp_path, capsys):
    path = tmp_path / "g.txt"
    run(capsys, "gen", "planted-cc", "--sizes", "4,4", "--flip", "0", "--out", str(path))
    code, out, _ = run(capsys, "cc", str(path))
    assert code == 0 and out.splitlines()[:4] == ["clusters 2", "cost 0", "0 1 2 3", "4 5 6 7"]


def test_bad_file(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("nonsense\n")
    code, _, err = run(capsys, "validate", str(path))
    assert code == 1 and "line 1" in err


def test_bench_deterministic(tmp_path, capsys):
    args = ["bench", "--algo", "pivot-metric", "--gen", "star:m=4", "--seeds", "20"]
    j1, j2 = tmp_path / "a.json", tmp_path / "b.json"
    c1, out1, _ = run(capsys, *args, "--json", str(j1))
    c2, out2, _ = run(capsys, "--threads", "4", *args, "--json", str(j2))
    assert c1 == c2 == 0 and out1 == out2 and j1.read_bytes() == j2.read_bytes()


def test_exit_code_two_on_invalid_output(star_file, capsys, monkeypatch):
    from mvdlib import cli
    from mvdlib.core import RepairResult

    monkeypatch.setattr(cli, "_repair", lambda args, inst: RepairResult.build(inst, inst.distances))
    code, _, err = run(capsys, "repair", str(star_file), "--algo", "pivot-metric")
    assert code == 2 and "failed validation" in err
