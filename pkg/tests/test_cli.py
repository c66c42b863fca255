import csv
import io
import os
import subprocess
import sys
from importlib.resources import files

import pytest

from compeq.cli import GameFileError, parse_game_file, serialize_game, shipped_game
from compeq.cli.main import ExperimentConfig, main
from compeq.reports import RESULT_HEADER

FIG1 = str(files("compeq") / "data" / "fig1.game")

FORGETFUL = """players=2
player=1 infoset=first
  action=x player=1 infoset=later
    action=p terminal u=(1,0)
    action=q terminal u=(0,1)
  action=y player=1 infoset=later
    action=p terminal u=(0,0)
    action=q terminal u=(1,1)
"""


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    rd = csv.reader(io.StringIO(text))
    header = next(rd)
    return header, list(rd)


def test_config_invariants():
    with pytest.raises(ValueError):
        ExperimentConfig("x", [8], 0, 0, 0.05)
    with pytest.raises(ValueError):
        ExperimentConfig("x", [16, 8], 10, 0, 0.05)
    with pytest.raises(ValueError):
        ExperimentConfig("x", [8], 10, 2**64, 0.05)


def test_check_ne_on_shipped_file(capsys):
    code, out, err = run(capsys, "check-ne", FIG1, "--profile", "uniform-open", "--eps", "0")
    header, rows = rows_of(out)
    assert code == 0 and tuple(header) == tuple(RESULT_HEADER)
    assert rows and all(r[-1] == "true" for r in rows)
    assert "0 failed" in err


def test_verify_representation_exhaustive(capsys):
    code, out, _ = run(capsys, "verify-representation", "commitment-game", "--n", "8", "--mode", "exhaustive")
    assert code == 0


def test_indist_canonical(capsys):
    code, out, _ = run(capsys, "indist-test", "commitment-game", "--partition", "canonical", "--n-list", "16,32",
                       "--trials", "400")
    assert code == 0 and len(rows_of(out)[1]) > 0


def test_indist_cheat_is_reported_as_detected(capsys):
    code, out, _ = run(capsys, "indist-test", "variant-prime", "--profile", "cheat", "--n-list", "10,12",
                       "--trials", "200")
    (row,) = rows_of(out)[1]
    assert code == 0 and row[2] == "min:cheat-advantage" and "replay-known-key" in row[3]
    assert float(row[4]) >= 0.9


def test_usage_errors(capsys):
    for argv in (["corr-eq", "--trials", "0"], ["corr-eq", "--n-list", "16,8"], ["verify-representation", "nope"],
                 ["no-such-command"], ["corr-eq", "--n", "8", "--n-list", "8,16"]):
        with pytest.raises(SystemExit) as e:
            main(argv)
        assert e.value.code == 2, argv
    capsys.readouterr()


def test_io_errors(tmp_path, capsys):
    assert run(capsys, "validate-game", str(tmp_path / "missing.game"))[0] == 3
    code, _, err = run(capsys, "check-ne", FIG1, "--out", str(tmp_path / "no" / "such" / "dir.csv"))
    assert code == 3 and "cannot write" in err


def test_validate_game(tmp_path, capsys):
    assert run(capsys, "validate-game", FIG1)[0] == 0
    bad = tmp_path / "forgetful.game"
    bad.write_text(FORGETFUL)
    code, out, _ = run(capsys, "validate-game", str(bad))
    assert code == 1 and "min:perfect-recall,forgetful.game,0.000000" in out.replace(str(bad), "forgetful.game")
    bad.write_text(FORGETFUL.replace("players=2", "players=2\nplayer=1"))
    code, _, err = run(capsys, "validate-game", str(bad))
    assert code == 3 and "line 2" in err
    with pytest.raises(GameFileError):
        parse_game_file(bad.read_text())


def test_out_file_matches_stdout(tmp_path, capsys):
    args = ["corr-eq", "--n-list", "8,10", "--trials", "60", "--seed", "7"]
    _, out, _ = run(capsys, *args)
    target = tmp_path / "r.csv"
    _, nothing, _ = run(capsys, *args, "--out", str(target))
    assert nothing == "" and target.read_text() == out


def test_seed_from_environment(monkeypatch, capsys):
    args = ["corr-eq", "--n-list", "8,10", "--trials", "40"]
    _, explicit, _ = run(capsys, *args, "--seed", "11")
    monkeypatch.setenv("COMPGAME_SEED", "11")
    _, from_env, _ = run(capsys, *args)
    monkeypatch.setenv("COMPGAME_SEED", "12")
    _, other, _ = run(capsys, *args)
    assert explicit == from_env != other


def _cli(*argv, hashseed="0"):
    env = {**os.environ, "PYTHONHASHSEED": hashseed}
    return subprocess.run([sys.executable, "-m", "compeq.cli.main", *argv], capture_output=True, env=env,
                          check=False)


def test_byte_identical_across_runs_and_workers():
    # 1100 trials span two chunks of work
    args = ["corr-eq", "--n-list", "8,10", "--trials", "1100", "--seq-trials", "300", "--seed", "7"]
    a = _cli(*args, hashseed="1")
    b = _cli(*args, hashseed="2")
    c = _cli(*args, "--workers", "2", hashseed="3")
    assert a.returncode == 0, a.stderr
    assert a.stdout == b.stdout == c.stdout


def test_serialize_round_trip_of_shipped_game():
    g = shipped_game()
    assert serialize_game(parse_game_file(serialize_game(g))) == serialize_game(g)
