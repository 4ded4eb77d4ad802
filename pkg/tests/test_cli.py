import csv
import json
from pathlib import Path

import pytest

from leafpress.cli import CSV_COLUMNS, main
from leafpress.config import expand_sweep, from_dict, load_config, parse_text
from leafpress.errors import ConfigError

from conftest import LOG_LAMBDA_U

MODEL = "matrix = [[2, 1], [1, 1]]\n"
SMALL = """\
# small cat-map experiment
name = "{name}"
model = "cat.model"
potential = {{ flavor = "unstable-norm-power", t = 1.0 }}
base = [0.1234, 0.5678]
delta = 0.25
K = 32768
n_window = "4..8"
eps_ladder = [0.125, 0.0833]
gamma_ladder = [0.05]
output_dir = "out"
"""


def write_cfg(tmp_path, name="small", extra=""):
    (tmp_path / "cat.model").write_text(MODEL)
    path = tmp_path / f"{name}.cfg"
    path.write_text(SMALL.format(name=name) + extra)
    return path


# parsing


def test_parse_values():
    d = parse_text('a = 1\nb = [0.1, 0.2]\n# c = 3\nd = { flavor = "birkhoff", phi = "cos1" }\ne = true\n')
    assert d == {"a": 1, "b": [0.1, 0.2], "d": {"flavor": "birkhoff", "phi": "cos1"}, "e": True}


@pytest.mark.parametrize(
    "text,line",
    [("a = 1\nb 2\n", 2), ("a = 1\n\nb = [1,\n", 3), ("1a = 3\n", 1), ("a = 1\na = 2\n", 2)],
)
def test_parse_errors_have_line_numbers(text, line):
    with pytest.raises(ConfigError, match=f"line {line}:"):
        parse_text(text)


def test_unknown_key():
    with pytest.raises(ConfigError, match="unknown key"):
        from_dict({"colour": 1})


def test_load_config_resolves_model(tmp_path):
    cfg = load_config(write_cfg(tmp_path))
    assert cfg.matrix == ((2, 1), (1, 1))
    assert cfg.n_window == (4, 5, 6, 7, 8)
    assert cfg.potential == {"flavor": "unstable-norm-power", "t": 1.0}
    assert Path(cfg.output_dir) == (tmp_path / "out").resolve()


def test_seed_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("LEAFPRESS_SEED", "42")
    assert load_config(write_cfg(tmp_path)).seed == 42
    monkeypatch.setenv("LEAFPRESS_SEED", "x")
    with pytest.raises(ConfigError):
        load_config(write_cfg(tmp_path))


def test_sweep_expansion(tmp_path):
    cfg = load_config(write_cfg(tmp_path, extra="sweep_gamma_ladder = [[0.2], [0.1]]\nsweep_delta = [0.2, 0.25]\n"))
    entries = expand_sweep(cfg)
    assert len(entries) == 4
    assert {(e.delta, e.gamma_ladder) for e in entries} == {(d, (g,)) for d in (0.2, 0.25) for g in (0.2, 0.1)}
    assert len({e.name for e in entries}) == 4


# commands


def test_model_info(capsys):
    assert main(["model-info", "--matrix", "[[2,1],[1,1]]"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["lambda_u"] == pytest.approx(2.6180339887)


def test_model_info_identity_exit_1(capsys):
    assert main(["model-info", "--matrix", "[[1,0],[0,1]]"]) == 1
    assert "NotPartiallyHyperbolic" in capsys.readouterr().err


def test_model_info_bad_literal_exit_3():
    assert main(["model-info", "--matrix", "[[1,0],"]) == 3


def test_config_error_exit_3(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("name = 'x'\nK = \n")
    assert main(["pressure", "--config", str(path)]) == 3
    assert "line 2" in capsys.readouterr().err


def test_unknown_potential_lists_catalog(tmp_path, capsys):
    path = write_cfg(tmp_path).read_text().replace("unstable-norm-power", "quadratic")
    (tmp_path / "q.cfg").write_text(path)
    assert main(["pressure", "--config", str(tmp_path / "q.cfg")]) == 3
    assert "catalog" in capsys.readouterr().err


def test_pressure_outputs_and_reproducibility(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["pressure", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    doc = json.loads((out / "small.json").read_text())
    res = doc["results"][0]
    assert res["kind"] == "spanning"
    assert abs(res["value"] - 2 * LOG_LAMBDA_U) <= 0.10
    assert set(res["fit"]) == {"slope", "intercept", "residual"}
    assert doc["config"]["K"] == 32768
    with open(out / "small.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == CSV_COLUMNS
    assert len(rows) == len(res["grid"])
    assert (out / "small.report.txt").exists() and (out / "small.meta.json").exists()
    first = {p: (out / f"small{p}").read_bytes() for p in (".json", ".csv", ".report.txt")}
    assert main(["pressure", "--config", str(cfg)]) == 0
    assert all((out / f"small{p}").read_bytes() == b for p, b in first.items())


@pytest.mark.parametrize("kind,count", [("bowen", 1), ("capacity", 2)])
def test_pressure_kinds(tmp_path, kind, count):
    assert main(["pressure", "--config", str(write_cfg(tmp_path)), "--kind", kind]) == 0
    doc = json.loads((tmp_path / "out" / "small.json").read_text())
    assert len(doc["results"]) == count


def test_entropy_and_lyapunov(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["entropy", "--config", str(cfg)]) == 0
    doc = json.loads((tmp_path / "out" / "small.json").read_text())
    assert [r["kind"] for r in doc["results"]] == ["entropy-partition", "entropy-brinkatok"]
    assert main(["lyapunov", "--config", str(cfg), "--name", "ly"]) == 0
    doc = json.loads((tmp_path / "out" / "ly.json").read_text())
    assert doc["results"][0]["value"] == pytest.approx(LOG_LAMBDA_U, abs=1e-9)


def test_verify_exit_codes(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["verify", "--config", str(cfg), "--checks", "formula,coincidence"]) == 0
    strict = write_cfg(tmp_path, "strict", "tolerance = 1e-6\n")
    assert main(["verify", "--config", str(strict), "--checks", "formula"]) == 2
    assert main(["verify", "--config", str(cfg), "--checks", "nonsense"]) == 3


def test_sweep_jobs_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, "sw", "sweep_gamma_ladder = [[0.2], [0.05]]\n")
    assert main(["sweep", "--config", str(cfg), "--jobs", "1", "--out-dir", str(tmp_path / "a")]) == 0
    assert main(["sweep", "--config", str(cfg), "--jobs", "2", "--out-dir", str(tmp_path / "b")]) == 0
    for name in ("sw_000", "sw_001"):
        for suffix in (".csv", ".report.txt"):
            assert (tmp_path / "a" / f"{name}{suffix}").read_bytes().replace(str(tmp_path / "a").encode(), b"") == (
                tmp_path / "b" / f"{name}{suffix}"
            ).read_bytes().replace(str(tmp_path / "b").encode(), b"")
