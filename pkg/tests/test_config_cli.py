import pytest

from rabigates import acceptance, cli
from rabigates.config import build_config, parse_text
from rabigates.errors import ConfigError


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_parse_errors():
    with pytest.raises(ConfigError):
        parse_text("experiment = cat_run\nbogus.key = 1")
    with pytest.raises(ConfigError):
        parse_text("experiment = cat_run\ndim = 10\ndim = 20")
    with pytest.raises(ConfigError):
        parse_text("dim = 10")
    with pytest.raises(ConfigError):
        parse_text("experiment = cat_run\ndim = ten")
    with pytest.raises(ConfigError):
        build_config(parse_text("experiment = schedule_check"))


def test_defaults_and_units():
    cfg = build_config(parse_text("experiment = cat_run  # trailing comment\nunits.omega_hz = 2*pi*200e6"))
    assert cfg.dim == 60 and cfg.params.g == 0.1
    assert cfg.seconds(1.0) == pytest.approx(0.796e-9, rel=1e-3)
    prog = parse_text("experiment = schedule_check\nschedule.program = 1:0.2; 2:0.1:0.5:minus_x")
    assert prog["schedule.program"][1].branch == "minus_x"


CAT = """experiment = cat_run
dim = 20
cat.mode = analytic
gate.n = 2
gate.gamma = 0.5
"""


def test_cli_writes_deterministic_csv(tmp_path, capsys):
    cfg = _write(tmp_path, CAT)
    assert cli.main([str(cfg), "--out", str(tmp_path / "a"), "--workers", "1"]) == 0
    assert cli.main([str(cfg), "--out", str(tmp_path / "b"), "--workers", "1"]) == 0
    a = (tmp_path / "a" / "cat_run.csv").read_bytes()
    assert a == (tmp_path / "b" / "cat_run.csv").read_bytes()
    text = a.decode()
    lines = text.splitlines()
    header = next(i for i, ln in enumerate(lines) if not ln.startswith("#"))
    assert header > 0 and lines[header] == "quantity,value"
    assert "# version: " in text and "# config.dim: 20" in text and "# reduction: analytic" in text


def test_cli_convergence_metadata(tmp_path):
    cfg = _write(tmp_path, CAT + "convergence = true\n")
    assert cli.main([str(cfg), "--out", str(tmp_path), "--dim", "16", "--workers", "1"]) == 0
    text = (tmp_path / "cat_run.csv").read_text()
    assert "# config.dim: 16" in text
    assert "# convergence.dim2.cat_run.energy: " in text


def test_cli_wigner_map_workers_agree(tmp_path):
    text = """experiment = wigner_map
dim = 20
wigner.state = ideal
wigner.energy = 0.5
grid.q_min = -3
grid.q_max = 3
grid.p_min = -3
grid.p_max = 3
grid.n_q = 64
grid.n_p = 64
"""
    cfg = _write(tmp_path, text)
    assert cli.main([str(cfg), "--out", str(tmp_path / "one"), "--workers", "1"]) == 0
    assert cli.main([str(cfg), "--out", str(tmp_path / "two"), "--workers", "2"]) == 0
    one = (tmp_path / "one" / "wigner_map.csv").read_text()
    assert one == (tmp_path / "two" / "wigner_map.csv").read_text()
    rows = [ln for ln in one.splitlines() if not ln.startswith("#")]
    assert rows[0] == "q,p,W" and len(rows) == 1 + 64 * 64


def test_cli_validation_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "experiment = nowhere\n")
    assert cli.main([str(cfg), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error kind=validation type=ConfigError")
    assert cli.main([str(tmp_path / "missing.cfg")]) == 2
    assert cli.main(["--bogus-flag"]) == 2


def test_cli_numeric_exit_code(tmp_path, capsys):
    text = CAT + "grid.q_min = -1\ngrid.q_max = 1\ngrid.p_min = -1\ngrid.p_max = 1\ngrid.n_q = 64\ngrid.n_p = 64\n"
    cfg = _write(tmp_path, text)
    assert cli.main([str(cfg), "--out", str(tmp_path), "--workers", "1"]) == 4
    assert "error kind=numeric type=GridError" in capsys.readouterr().err


def test_cli_accept_exit_code(tmp_path, monkeypatch):
    failing = acceptance.CriterionResult(1, "stub", [acceptance.Check("x", [0.0], "1", False)])
    monkeypatch.setattr(acceptance, "run_all", lambda: [failing])
    cfg = _write(tmp_path, CAT)
    assert cli.main([str(cfg), "--out", str(tmp_path), "--workers", "1", "--accept"]) == 3
    passing = acceptance.CriterionResult(1, "stub", [acceptance.Check("x", [1.0], "1", True)])
    monkeypatch.setattr(acceptance, "run_all", lambda: [passing])
    assert cli.main([str(cfg), "--out", str(tmp_path), "--workers", "1", "--accept"]) == 0
