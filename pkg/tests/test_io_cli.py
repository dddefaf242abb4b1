import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from swerect.cli import main
from swerect.core import Grid, State
from swerect.io import emit_series, emit_snapshot, load_series, load_snapshot
from swerect.scenarios import linear_scenario

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_zero_snapshot(tmp_path):
    path = emit_snapshot(State.zeros(Grid.square(3)), tmp_path / "z.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,u,v,phi" and len(lines) == 10
    assert all(line.split(",")[2:] == ["0", "0", "0"] for line in lines[1:])
    # row-major with i outer
    assert [line.split(",")[:2] for line in lines[1:4]] == [["0", "0"], ["0", "0.5"], ["0", "1"]]


@given(arrays(float, (3, 4, 5), elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
def test_snapshot_round_trip(tmp_path_factory, data):
    g = Grid(1.3, 0.7, 4, 5)
    s = State(g, data)
    back = load_snapshot(emit_snapshot(s, tmp_path_factory.mktemp("snap") / "s.csv"))
    assert back.grid == g and np.array_equal(back.data, s.data)


def test_energy_series_schema(tmp_path):
    _, _, rep = linear_scenario("constant", samples=5)
    path = emit_series(rep, tmp_path / "e.csv", "energy")
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema=energy version=1" and lines[1] == "t,I0,l2,bound_ok"
    schema, cols = load_series(path)
    assert schema == "energy" and np.allclose(cols["I0"], rep.I0, rtol=1e-15)


def test_series_length_mismatch(tmp_path):
    with pytest.raises(ValueError):
        emit_series({"t": [0, 1], "x": [1]}, tmp_path / "bad.csv", "x")


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out)])
    summary = json.loads((out / "summary.json").read_text()) if (out / "summary.json").exists() else None
    return code, summary, out


def test_check_command(tmp_path, capsys):
    code, summary, out = run(tmp_path, "check", "--config", str(CONFIGS / "regime.cfg"))
    assert code == 0 and summary["checks"]["supercritical"]
    assert "margin" in capsys.readouterr().out
    assert (out / "state.csv").exists()


def test_subcritical_check_exits_2(tmp_path):
    cfg = tmp_path / "sub.cfg"
    cfg.write_text("[scenario]\nname = constant\nstate = 1.0, 1.0, 0.5\n")
    code, summary, _ = run(tmp_path, "check", "--config", str(cfg))
    assert code == 2 and summary["checks"]["supercritical"] is False


def test_oversized_picard_exits_2_with_report(tmp_path):
    code, summary, _ = run(tmp_path, "picard", "--config", str(CONFIGS / "bump_oversized.cfg"))
    assert code == 2 and summary["error"] == "RegimeLost"


def test_usage_errors(tmp_path, capsys):
    assert main(["check", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert "usage" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["check"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate", "--config", "x"])
    assert exc.value.code == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("[scenario]\nname = nonsense\n")
    assert main(["linear", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
    bad.write_text("[params]\ng = heavy\n")
    assert main(["check", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
    bad.write_text("not an ini file")
    assert main(["check", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1


@pytest.mark.parametrize(
    "command,config",
    [
        ("stationary", "stationary.cfg"),
        ("linear", "linear_varying.cfg"),
        ("resolvent", "resolvent.cfg"),
        ("energy", "energy.cfg"),
    ],
)
def test_commands_succeed_and_are_deterministic(tmp_path, command, config):
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main([command, "--config", str(CONFIGS / config), "--out", str(a)]) == 0
    assert main([command, "--config", str(CONFIGS / config), "--out", str(b)]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir()) and "summary.json" in files
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SWERECT_OUT", str(tmp_path / "env"))
    assert main(["check", "--config", str(CONFIGS / "regime.cfg")]) == 0
    assert (tmp_path / "env" / "summary.json").exists()


def test_converge_command(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("[params]\nf = 0.05\n[scenario]\nname = linear\ngrids = 33, 65\nt_end = 0.1\n")
    code, summary, out = run(tmp_path, "converge", "--config", str(cfg))
    assert code == 0
    assert (out / "convergence.csv").read_text().splitlines()[1] == "h,dx,dt,error,order"
