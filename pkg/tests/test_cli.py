import json
import math
import subprocess
import sys

import pytest

from hybridsem.cli import main, parse_grid, parse_init, parse_times, read_csv
from hybridsem.demos import DEMOS, zeno_cosine_limit

BALL = "vars p, v;\n(p' = v, v' = -9.8 & p <= 0 /\\ v <= 0) ; v := -0.5 * v\n"


def invoke(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def ball_file(tmp_path):
    path = tmp_path / "ball.hyb"
    path.write_text(BALL)
    return path


# ---------------------------------------------------------------- argument helpers


def test_parse_grid_includes_stop():
    assert parse_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert len(parse_grid("0:1.5:0.01")) == 151


@pytest.mark.parametrize("bad", ["0:1", "1:0:0.5", "0:1:0", "-1:1:1", "a:b:c"])
def test_parse_grid_rejects(bad):
    with pytest.raises(ValueError):
        parse_grid(bad)


def test_parse_times_and_init():
    assert parse_times("0,0.5,2") == [0.0, 0.5, 2.0]
    with pytest.raises(ValueError):
        parse_times("1,0")
    assert list(parse_init("v=2,p=1", ("p", "v"))) == [1.0, 2.0]
    assert list(parse_init("3,4", ("p", "v"))) == [3.0, 4.0]
    assert list(parse_init(None, ("p", "v"))) == [0.0, 0.0]
    with pytest.raises(ValueError):
        parse_init("q=1", ("p", "v"))


# ---------------------------------------------------------------- check


def test_check_ok(capsys, ball_file):
    code, out, _ = invoke(capsys, "check", str(ball_file))
    assert code == 0 and "ok" in out


@pytest.mark.parametrize(
    "text,kind,loc",
    [("vars x; y := 1\n", "scope", "1:9"), ("vars x;\nwhile x <= 1 { x := 1\n", "syntax", "3:1")],
)
def test_check_reports_location(capsys, tmp_path, text, kind, loc):
    path = tmp_path / "bad.hyb"
    path.write_text(text)
    code, _, err = invoke(capsys, "check", str(path))
    assert code == 1
    assert err.startswith(f"{path}:{loc}: {kind} error")


def test_missing_file_is_usage_error(capsys, tmp_path):
    code, _, err = invoke(capsys, "check", str(tmp_path / "none.hyb"))
    assert code == 2 and "cannot read" in err


# ---------------------------------------------------------------- run and demo


def test_run_csv(capsys, ball_file):
    code, out, _ = invoke(capsys, "run", str(ball_file), "--init", "p=1,v=0", "--times", "0,0.2,1")
    assert code == 0
    names, rows, summary = read_csv(out)
    assert names == ["p", "v"]
    assert [r[2] for r in rows] == ["def", "def", "def"]
    assert abs(rows[1][1][0] - (1 - 4.9 * 0.04)) <= 1e-9
    assert summary["classification"]["kind"] == "Terminates"


def test_bouncing_ball_demo_turns_zeno(capsys):
    code, out, _ = invoke(capsys, "demo", "bouncing-ball")
    names, rows, summary = read_csv(out)
    assert len(rows) == 151
    statuses = [s for _, _, s in rows]
    first_zeno = statuses.index("zeno")
    assert all(s == "def" for s in statuses[:first_zeno]) and all(s == "zeno" for s in statuses[first_zeno:])
    assert abs(rows[first_zeno][0] - 1.3553) <= 0.01
    assert summary["classification"]["kind"] == "Zeno"
    assert abs(summary["classification"]["sup_estimate"] - 1.3552618543578767) <= 1e-9


def test_counting_demo_duration(capsys):
    _, out, _ = invoke(capsys, "demo", "while-x-le-10", "--format", "json")
    doc = json.loads(out)
    assert doc["summary"]["duration"] == {"kind": "Exact", "value": 11.0}
    assert doc["summary"]["classification"]["final"] == [11.0]


def test_zero_time_loop_demo_diverges(capsys):
    _, out, _ = invoke(capsys, "demo", "while-true-increment")
    _, rows, summary = read_csv(out)
    assert all(values is None and status == "div" for _, values, status in rows)
    assert summary["classification"] == {"kind": "DivergesAt", "at": 0.0, "evidence": "guard-true-instantaneous"}
    assert summary["duration"]["value"] == "inf"


def test_budget_surfaces_as_rows(capsys):
    code, out, _ = invoke(capsys, "demo", "cruise-controller", "--budget", "20")
    _, rows, summary = read_csv(out)
    assert code == 0
    assert rows[0][2] == "def" and rows[-1][2] == "budget"
    assert summary["classification"]["kind"] == "Unknown"


def test_demo_list_and_source(capsys):
    _, out, _ = invoke(capsys, "demo", "--list")
    assert all(name in out for name in DEMOS)
    _, out, _ = invoke(capsys, "demo", "bouncing-ball", "--source")
    assert "v := -0.5 * v" in out


def test_unknown_demo_is_usage_error(capsys):
    code, _, err = invoke(capsys, "demo", "nope")
    assert code == 2 and "unknown demo" in err


def test_invalid_config_is_usage_error(capsys, ball_file):
    code, _, _ = invoke(capsys, "run", str(ball_file), "--budget", "0")
    assert code == 2


def test_out_file(capsys, tmp_path, ball_file):
    dest = tmp_path / "out.csv"
    invoke(capsys, "run", str(ball_file), "--init", "1,0", "--out", str(dest))
    assert dest.read_text().startswith("t,p,v,status\n")


# ---------------------------------------------------------------- formats and determinism


@pytest.mark.parametrize("name", sorted(DEMOS))
def test_csv_and_json_agree(capsys, name):
    _, csv_text, _ = invoke(capsys, "demo", name, "--budget", "5000")
    _, json_text, _ = invoke(capsys, "demo", name, "--budget", "5000", "--format", "json")
    names, rows, summary = read_csv(csv_text)
    doc = json.loads(json_text)
    assert doc["variables"] == names and doc["summary"] == summary
    assert [(r["t"], r["values"], r["status"]) for r in doc["rows"]] == [(t, v, s) for t, v, s in rows]


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_output_is_deterministic(capsys, fmt):
    outs = [invoke(capsys, "demo", "bouncing-ball", "--format", fmt)[1] for _ in range(2)]
    assert outs[0] == outs[1]


def test_zeno_cosine_demo_matches_closed_form(capsys):
    _, out, _ = invoke(capsys, "demo", "zeno-cosine", "--times", "0.1,0.3,0.7")
    _, rows, _ = read_csv(out)
    for t, values, status in rows:
        assert status == "def" and math.isclose(values[0], zeno_cosine_limit(t), abs_tol=1e-9)


# ---------------------------------------------------------------- laws


def test_laws_suite_passes(capsys):
    code, out, _ = invoke(capsys, "laws", "--suite", "fixpoint", "--cases", "50", "--seed", "42")
    assert code == 0 and out.rstrip().endswith("suite fixpoint: ok")


def test_laws_is_deterministic(capsys):
    a = invoke(capsys, "laws", "--suite", "retraction", "--cases", "30", "--seed", "5")[1]
    b = invoke(capsys, "laws", "--suite", "retraction", "--cases", "30", "--seed", "5")[1]
    assert a == b and "witness embedding-vs-bind: ok" in a


def test_unknown_suite(capsys):
    assert invoke(capsys, "laws", "--suite", "nope")[0] == 2


def test_module_entry_point(tmp_path, ball_file):
    proc = subprocess.run([sys.executable, "-m", "hybridsem", "check", str(ball_file)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "ok" in proc.stdout
