import json
import shutil
from pathlib import Path

import pytest

from ptl.cli import main
from ptl.config import ConfigError, load_config
from ptl.io import SCHEMAS

SMOKE = Path(__file__).resolve().parent.parent / "configs" / "smoke"

MOMENTS = """[model]
kind = dimer
lambda = 0.5

[experiment]
kind = moments
q_grid = 1, 2
T_grid = 10, 30
points_per_width = 2
tol = 3e-2
samples = 3
seed = 5
"""


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _run(kind, cfg, out, *extra):
    return main([kind, "--config", cfg, "--out", str(out), *extra])


def test_moments_run_writes_csv_and_manifest(tmp_path):
    assert _run("moments", _write(tmp_path, MOMENTS), tmp_path / "o") == 0
    lines = (tmp_path / "o" / "moments.csv").read_text().splitlines()
    assert lines[0].split(",") == SCHEMAS["moments"]
    assert len(lines) == 1 + 2 * 2
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["exit_status"] == 0
    assert man["config"]["experiment"]["seed"] == 5
    assert len(man["config_hash"]) == 64


def test_thread_count_does_not_change_bytes(tmp_path):
    cfg = _write(tmp_path, MOMENTS)
    assert _run("moments", cfg, tmp_path / "a", "--threads", "1") == 0
    assert _run("moments", cfg, tmp_path / "b", "--threads", "3") == 0
    a = (tmp_path / "a" / "moments.csv").read_bytes()
    assert a == (tmp_path / "b" / "moments.csv").read_bytes()
    ha = json.loads((tmp_path / "a" / "manifest.json").read_text())["config_hash"]
    hb = json.loads((tmp_path / "b" / "manifest.json").read_text())["config_hash"]
    assert ha == hb


def test_manifest_rerun_reproduces(tmp_path):
    assert _run("moments", _write(tmp_path, MOMENTS), tmp_path / "a") == 0
    assert _run("moments", str(tmp_path / "a" / "manifest.json"), tmp_path / "b") == 0
    assert ((tmp_path / "a" / "moments.csv").read_bytes()
            == (tmp_path / "b" / "moments.csv").read_bytes())


def test_seed_override(tmp_path):
    cfg = _write(tmp_path, MOMENTS)
    assert _run("moments", cfg, tmp_path / "a") == 0
    assert _run("moments", cfg, tmp_path / "b", "--seed", "6") == 0
    assert ((tmp_path / "a" / "moments.csv").read_bytes()
            != (tmp_path / "b" / "moments.csv").read_bytes())
    man = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert man["config"]["experiment"]["seed"] == 6


@pytest.mark.parametrize("edit, key", [
    (("seed = 5", "seed = 5\nwidth = 3"), "width"),
    (("lambda = 0.5", "lambda = 0.5\nbogus = 1"), "bogus"),
    (("q_grid = 1, 2", "q_grid = 1, -2"), "q_grid"),
    (("kind = moments", "kind = lyapunov"), "kind"),
    (("T_grid = 10, 30\n", ""), "T_grid"),
])
def test_invalid_configs_exit_2(tmp_path, capsys, edit, key):
    cfg = _write(tmp_path, MOMENTS.replace(*edit))
    assert _run("moments", cfg, tmp_path / "o") == 2
    assert key in capsys.readouterr().err
    assert not (tmp_path / "o" / "manifest.json").exists()


def test_zero_hopping_named(tmp_path, capsys):
    text = MOMENTS.replace("kind = dimer\nlambda = 0.5",
                           "kind = polymer\nt_plus = 1, 0\nv_plus = 0, 0\n"
                           "t_minus = 1\nv_minus = 0.5")
    assert _run("moments", _write(tmp_path, text), tmp_path / "o") == 2
    assert "t_plus[1]" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert _run("moments", str(tmp_path / "nope.ini"), tmp_path / "o") == 2


def test_spectral_window_rejected_before_running(tmp_path, capsys):
    text = MOMENTS.replace("tol = 3e-2", "route = spectral\nwindow = 50")
    assert _run("moments", _write(tmp_path, text), tmp_path / "o") == 2
    assert "window" in capsys.readouterr().err


def test_bound_violation_exits_3(tmp_path):
    text = """[model]
kind = anderson

[experiment]
kind = verify-bounds
bounds = transfer
instances = 5
energies = -1.5
etas = 0.05
N_list = 60
seed = 13
"""
    assert _run("verify-bounds", _write(tmp_path, text), tmp_path / "o") == 3
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["exit_status"] == 3 and man["messages"]


def test_plot_data(tmp_path):
    assert _run("moments", _write(tmp_path, MOMENTS), tmp_path / "o") == 0
    assert main(["plot", str(tmp_path / "o" / "moments.csv"), "--kind", "moments"]) == 0
    dat = sorted(p.name for p in (tmp_path / "o").glob("*.dat"))
    assert len(dat) == 2


def test_plot_empty_and_mismatched(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text(",".join(SCHEMAS["exponents"]) + "\n")
    assert main(["plot", str(empty), "--kind", "exponents"]) == 0
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["plot", str(bad), "--kind", "exponents"]) == 2


def test_density_file_relative_to_config(tmp_path):
    d = tmp_path / "cfg"
    d.mkdir()
    shutil.copy(SMOKE / "borel.ini", d)
    shutil.copy(SMOKE / "semicircle.dat", d)
    cfg = load_config(d / "borel.ini")
    assert Path(cfg.params["density_file"]) == (d / "semicircle.dat").resolve()
    assert main(["borel", "--config", str(d / "borel.ini"), "--out", str(tmp_path / "o")]) == 0


def test_unknown_section(tmp_path):
    with pytest.raises(ConfigError, match="extra"):
        load_config(_write(tmp_path, MOMENTS + "\n[extra]\na = 1\n"))


@pytest.mark.parametrize("ini", sorted(p.name for p in SMOKE.glob("*.ini")
                                       if p.stem in ("critical_scan", "ids", "lyapunov")))
def test_smoke_configs_deterministic(tmp_path, ini):
    cfg = load_config(SMOKE / ini)
    kind = cfg.kind
    assert _run(kind, str(SMOKE / ini), tmp_path / "a", "--threads", "1") == 0
    assert _run(kind, str(SMOKE / ini), tmp_path / "b", "--threads", "2") == 0
    for f in (tmp_path / "a").glob("*.csv"):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
