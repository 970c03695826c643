import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsllab.errors import ConfigError
from qsllab.expcli import cli, config, experiments
from qsllab.expcli.emit import emit_csv, format_csv, read_csv
from qsllab.expcli.fit import FitDomainError, powerlaw_fit, window_study
from qsllab.expcli.svg import render_svg


# -------------------------------------------------------------- config --

def test_parse_text_types_and_aliases():
    v = config.parse_text("""
        # scaling run
        experiment = fig2-scaling
        N-list = 128, 182; 256 , 362
        T = 1e3   # trailing comment
        fit_top = 4
    """)
    assert v == {"experiment": "fig2-scaling", "N_list": (128, 182, 256, 362), "T": 1000.0, "fit_top": 4}


@pytest.mark.parametrize("text", ["bogus = 1", "N = 3.5", "T = fast", "just words"])
def test_parse_text_errors(text):
    with pytest.raises(ConfigError):
        config.parse_text(text)


@pytest.mark.parametrize("values", [
    {"experiment": "nope"},
    {"experiment": "fig2-trace", "N": 101},
    {"experiment": "fig2-scaling", "N_list": (128, 256, 512)},
    {"experiment": "custom"},
    {"experiment": "custom", "model": "tfim", "N": 10},
    {"experiment": "fig1-traces", "T": -1.0},
    {"experiment": "fig1-traces", "emit": "png"},
    {"experiment": "fig1-traces", "protocol": "random"},
    {"experiment": "fig3-quench", "steps": 1},
])
def test_build_rejects(values):
    with pytest.raises(ConfigError):
        config.build(values)


def test_build_layers_and_dumps_round_trip():
    cfg = config.build({"experiment": "fig2-trace", "N": 100}, {"N": 200, "T": None})
    assert cfg.N == 200 and cfg.T == 1000.0 and cfg.protocol == "linear"
    again = config.build(config.parse_text(config.dumps(cfg)))
    assert again == cfg


def test_missing_config_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        config.load(tmp_path / "absent.cfg")


# ---------------------------------------------------------------- fits --

def test_powerlaw_fit_examples():
    f = powerlaw_fit([(n, 3 * n ** 0.5) for n in (10, 20, 40, 80, 160)])
    assert abs(f.exponent - 0.5) < 1e-12 and abs(f.intercept - np.log(3)) < 1e-12 and f.residual < 1e-12
    assert abs(powerlaw_fit([(n, 2.0) for n in (1, 2, 3, 4)]).exponent) < 1e-15
    f = powerlaw_fit([(n, n ** -1.0) for n in (1, 2, 4, 8, 16, 32)], window=(4, 32))
    assert f.n_points == 4 and f.window == (4.0, 32.0)


def test_powerlaw_fit_domain():
    with pytest.raises(FitDomainError):
        powerlaw_fit([(1, 1), (2, 2), (3, 3)])
    with pytest.raises(FitDomainError):
        powerlaw_fit([(1, 1), (2, 2), (3, 0), (4, 1)])


@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_powerlaw_recovers_exponent(alpha, c):
    f = powerlaw_fit([(n, c * n ** alpha) for n in (5, 9, 17, 33, 65)])
    assert abs(f.exponent - alpha) < 1e-9


def test_window_study_counts():
    pts = [(n, n ** 0.3) for n in (1, 2, 4, 8, 16, 32)]
    study = window_study(pts)
    assert len(study) == 3 + 2 + 1
    assert all(abs(f.exponent - 0.3) < 1e-12 for f in study)


# ---------------------------------------------------------- CSV and SVG --

def test_csv_round_trip_bytes(tmp_path):
    cols = {"t": np.linspace(0, 1, 7), "x": np.exp(np.linspace(-40, 3, 7)), "neg": -np.arange(7) / 3}
    p = emit_csv(cols, tmp_path / "a.csv")
    back = read_csv(p)
    for k in cols:
        assert np.array_equal(back[k], cols[k])
    p2 = emit_csv(back, tmp_path / "b.csv")
    assert open(p, "rb").read() == open(p2, "rb").read()
    assert b"\r" not in open(p, "rb").read()


def test_csv_header_only_and_mismatch(tmp_path):
    assert format_csv({"t": [], "g": []}) == "t,g\n"
    p = emit_csv({"t": [], "g": []}, tmp_path / "e.csv")
    back = read_csv(p)
    assert list(back) == ["t", "g"] and back["t"].size == 0
    with pytest.raises(ValueError):
        format_csv({"a": [1, 2], "b": [1]})


def test_svg_stable_and_valid():
    x = np.linspace(1, 10, 50)
    a = render_svg(x, {"a": x ** 2, "b<&>": x}, title="t", logx=True, logy=True)
    b = render_svg(x, {"a": x ** 2, "b<&>": x}, title="t", logx=True, logy=True)
    assert a == b
    root = ET.fromstring(a)
    assert root.tag.endswith("svg")
    ET.fromstring(render_svg(x, {"s": np.sin(x)}, markers=True))


# ---------------------------------------------------------------- CLI --

def test_cli_ok_and_outputs(tmp_path, capsys):
    out = tmp_path / "o"
    code = cli.main(["custom", "--model", "two_level", "--T", "20", "--out", str(out), "--emit", "both"])
    assert code == cli.EXIT_OK
    names = {p.name for p in out.iterdir()}
    assert {"summary.txt", "config.txt"} <= names
    assert any(n.endswith(".csv") for n in names) and any(n.endswith(".svg") for n in names)
    assert "status = PASS" in capsys.readouterr().out


def test_cli_config_file_and_errors(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("experiment = custom\nmodel = quench\nN = 50\nJ = 1\nh_field = 1\nt_max = 1\n")
    assert cli.main(["--config", str(cfgfile), "--out", str(tmp_path / "q")]) == cli.EXIT_OK
    assert cli.main(["fig2-trace", "--N", "101", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert cli.main(["--config", str(bad)]) == cli.EXIT_CONFIG


def test_cli_numeric_failure(tmp_path):
    # four grid points over T = 200 cannot keep the RK4 norm
    code = cli.main(["custom", "--model", "two_level", "--T", "200", "--steps", "4", "--out", str(tmp_path)])
    assert code == cli.EXIT_NUMERIC


def test_cli_violation_writes_report(tmp_path, monkeypatch):
    def failing(cfg):
        res = experiments.RunResult(cfg.experiment)
        res.check("forced", 1.0, 1e-8)
        return res

    monkeypatch.setattr(cli, "compute", failing)
    code = cli.main(["custom", "--model", "two_level", "--T", "5", "--out", str(tmp_path)])
    assert code == cli.EXIT_VIOLATION
    assert "FAIL" in (tmp_path / "violations.txt").read_text()
    assert not list(tmp_path.glob("*.csv"))


def test_runs_are_byte_deterministic(tmp_path):
    args = ["fig1-scatter", "--n-seeds", "6", "--seed", "3", "--T", "20"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    for p in (tmp_path / "a").glob("*.csv"):
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_scaling_serial_matches_parallel(tmp_path):
    args = ["fig2-scaling", "--N-list", "8,10,12,14", "--T", "20", "--steps", "201"]
    assert cli.main(args + ["--out", str(tmp_path / "s")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "p"), "--workers", "3"]) == 0
    for p in (tmp_path / "s").glob("*.csv"):
        assert p.read_bytes() == (tmp_path / "p" / p.name).read_bytes()
