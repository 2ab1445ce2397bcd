"""Config parsing, plan printing, and the pipeline subcommands.

One tiny three-points-per-branch pipeline run is shared by the subcommand
tests; everything else works on config text alone, so the module stays in
the seconds range.
"""

import json
from argparse import Namespace
from pathlib import Path

import numpy as np
import pytest

from gaitcurves.cli import (
    DEFAULT_TAU_GUESS,
    DEFAULT_V_SELECT,
    DEFAULT_X0_GUESS,
    ConfigError,
    _effective_slice_cfg,
    _selected_slices,
    load_config,
    main,
)
from gaitcurves.dynamics import ModelParams
from gaitcurves.library import import_library

TINY = """
[continuation]
target_points_per_branch = 3

[[slices]]
id = "cv"
kind = "constant_velocity"
"""


def _write(tmp_path, text, name="config.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_config_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, ""))
    assert cfg.params == ModelParams().nondimensional()
    assert cfg.continuation.h0 == 0.02
    assert cfg.continuation.target_points_per_branch == 25
    assert cfg.passive_x0 == DEFAULT_X0_GUESS
    assert cfg.passive_tau == DEFAULT_TAU_GUESS
    assert cfg.passive_v == DEFAULT_V_SELECT
    assert cfg.slices == ()


def test_load_config_model_and_slices(tmp_path):
    text = """
[model]
leg_length = 2.0
gravity = 9.81
nondimensional = false

[passive]
x0_guess = [0.1, -0.8, -0.5, 0.3]
tau_guess = 1.1
v_avg = 0.65

[[slices]]
id = "cv"
kind = "constant_velocity"
gamma_des = 0.1

[[slices]]
id = "cs"
kind = "constant_slope"
v_des = 2.5

  [slices.continuation]
  h_max = 0.5
"""
    cfg = load_config(_write(tmp_path, text))
    assert cfg.params.leg_length == 2.0
    assert cfg.params.gravity == 9.81
    assert cfg.passive_x0 == (0.1, -0.8, -0.5, 0.3)
    assert cfg.passive_tau == 1.1
    assert cfg.passive_v == 0.65
    cv, cs = cfg.slices
    assert cv.seed == "passive"
    assert cv.gamma_des == 0.1
    assert cs.seed == "eps0:cv"
    assert cs.v_des == 2.5
    assert cs.overrides == {"h_max": 0.5}
    assert cfg.slice_ids() == ["cv", "cs"]


@pytest.mark.parametrize("text,needle", [
    ("[bogus]\nx = 1\n", "bogus"),
    ("[model]\nlegg_length = 1.0\n", "legg_length"),
    ("[continuation]\nstep = 0.1\n", "step"),
    ("[passive]\nspeed = 1.0\n", "speed"),
    ('[[slices]]\nid = "a"\nkind = "constant_velocity"\ncolor = "red"\n', "color"),
    ('[[slices]]\nid = "a"\nkind = "constant_velocity"\n'
     "  [slices.continuation]\n  warp = 2\n", "warp"),
])
def test_unknown_keys_rejected_by_name(tmp_path, text, needle):
    with pytest.raises(ConfigError, match=needle):
        load_config(_write(tmp_path, text))


@pytest.mark.parametrize("text,needle", [
    ('[model]\nleg_length = "long"\n', "number"),
    ("[model]\nleg_length = true\n", "number"),
    ("[model]\nnondimensional = 3\n", "boolean"),
    ("[model]\nleg_mass = -1.0\n", "leg_mass"),
    ("[continuation]\ntarget_points_per_branch = 2.5\n", "integer"),
    ("[continuation]\nh_min = 0.5\nh_max = 0.2\n", "h_min"),
    ("[passive]\nx0_guess = [1.0, 2.0]\n", "x0_guess"),
    ("slices = 3\n", "array of tables"),
])
def test_config_value_errors(tmp_path, text, needle):
    with pytest.raises(ConfigError, match=needle):
        load_config(_write(tmp_path, text))


def test_config_syntax_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[model\n"))


@pytest.mark.parametrize("text,needle", [
    ('[[slices]]\nkind = "constant_velocity"\n', "'id'"),
    ('[[slices]]\nid = "a"\nkind = "constant_velocity"\n'
     '[[slices]]\nid = "a"\nkind = "constant_velocity"\n', "duplicate"),
    ('[[slices]]\nid = "a"\nkind = "sideways"\n', "kind"),
    ('[[slices]]\nid = "a"\nkind = "constant_velocity"\nv_des = 1.0\n', "v_des"),
    ('[[slices]]\nid = "a"\nkind = "constant_slope"\nv_des = 1.0\ngamma_des = 0.1\n',
     "gamma_des"),
    ('[[slices]]\nid = "a"\nkind = "constant_slope"\n', "v_des"),
    ('[[slices]]\nid = "a"\nkind = "constant_velocity"\nseed = "nope"\n', "seed"),
    ('[[slices]]\nid = "a"\nkind = "constant_velocity"\nseed = "eps0:b"\n'
     '[[slices]]\nid = "b"\nkind = "constant_velocity"\n', "earlier"),
])
def test_slice_declaration_errors(tmp_path, text, needle):
    with pytest.raises(ConfigError, match=needle):
        load_config(_write(tmp_path, text))


def test_selected_slices(repro):
    assert [s.slice_id for s in _selected_slices(repro, None)] == ["cv", "cs"]
    assert [s.slice_id for s in _selected_slices(repro, "cv")] == ["cv"]
    assert [s.slice_id for s in _selected_slices(repro, "cs")] == ["cv", "cs"]
    with pytest.raises(ConfigError, match="mystery"):
        _selected_slices(repro, "mystery")


def test_cli_flags_beat_per_slice_tables(repro):
    sc = repro.slices[0]
    file_only = _effective_slice_cfg(repro, sc, None)
    assert file_only.h_max == 1.0  # per-slice table applies
    args = Namespace(points=7, h0=0.005, fixed_h=None)
    merged = _effective_slice_cfg(repro, sc, args)
    assert merged.target_points_per_branch == 7
    assert merged.h0 == 0.005
    assert merged.h_max == 1.0  # not overridden, table value survives
    with pytest.raises(ConfigError):
        _effective_slice_cfg(repro, sc, Namespace(points=0, h0=None, fixed_h=None))


def test_dry_run_prints_plan_without_writing(tmp_path, capsys):
    cfg_path = _write(tmp_path, TINY)
    out = tmp_path / "out"
    rc = main(["run", "--config", str(cfg_path), "--out", str(out),
               "--dry-run", "--points", "9"])
    assert rc == 0
    plan = capsys.readouterr().out
    assert "stage find-passive:" in plan
    assert "stage passive-family: points=9/branch" in plan
    assert "stage slice cv: constant_velocity gamma_des=0 seed=passive points=9/branch" in plan
    assert "curve_cv.csv" in plan
    assert not out.exists()


def test_main_error_exits(tmp_path, capsys):
    rc = main(["run", "--config", str(tmp_path / "missing.toml"),
               "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err

    bad = _write(tmp_path, "[model]\nwings = 2\n")
    rc = main(["run", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "wings" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    """One shared three-point pipeline run plus its config path."""
    root = tmp_path_factory.mktemp("cli")
    cfg_path = _write(root, TINY)
    out = root / "out"
    rc = main(["run", "--config", str(cfg_path), "--out", str(out),
               "--dump-trajectories"])
    return {"rc": rc, "cfg": cfg_path, "out": out, "root": root}


def test_run_writes_all_outputs(tiny_run):
    assert tiny_run["rc"] == 0
    out = tiny_run["out"]
    for name in ("library.json", "curve_passive.csv", "stats_passive.txt",
                 "curve_cv.csv", "stats_cv.txt"):
        assert (out / name).is_file(), name
    assert not (out / "failure_manifest.json").exists()
    # trajectory dumps use sanitized ids
    assert (out / "traj_passive_seed.csv").is_file()
    assert (out / "traj_cv_+001.csv").is_file()

    records, slices, provenance = import_library(out / "library.json")
    ids = [r.gait_id for r in records]
    assert "passive/seed" in ids
    assert "cv/seed" in ids
    assert "cv/+003" in ids
    assert [s.slice_id for s in slices] == ["cv"]
    assert provenance["config"]["slices"][0]["id"] == "cv"
    # 7 passive + 7 slice records and no distinguished point at this budget
    assert len(records) == 14

    stats_text = (tiny_run["out"] / "stats_cv.txt").read_text()
    assert stats_text.startswith("slice: cv\npoints: 7\n")
    assert "near-passive points:" in stats_text
    assert "near-passive" not in (out / "stats_passive.txt").read_text()


def test_stats_subcommand(tiny_run, capsys):
    rc = main(["stats", str(tiny_run["out"] / "library.json")])
    assert rc == 0
    text = capsys.readouterr().out
    assert "slice: passive" in text
    assert "slice: cv" in text
    # --out works too and writes the files
    dest = tiny_run["root"] / "stats_again"
    dest.mkdir()
    rc = main(["stats", "--out", str(tiny_run["out"])])
    assert rc == 0
    capsys.readouterr()


def test_export_plot_subcommand(tiny_run, capsys):
    dest = tiny_run["root"] / "plots"
    rc = main(["export-plot", str(tiny_run["out"] / "library.json"),
               "--out", str(dest)])
    assert rc == 0
    assert (dest / "curve_passive.csv").is_file()
    assert (dest / "curve_cv.csv").is_file()
    capsys.readouterr()
    # the slice curve file matches the pipeline's own export byte for byte
    assert ((dest / "curve_cv.csv").read_bytes()
            == (tiny_run["out"] / "curve_cv.csv").read_bytes())
    # no library path and no --out is a usage error
    assert main(["export-plot"]) == 2
    capsys.readouterr()


def test_validate_subcommand(tiny_run, capsys):
    rc = main(["validate", str(tiny_run["out"] / "library.json"),
               "--config", str(tiny_run["cfg"])])
    assert rc == 0
    assert "ok: 14 records consistent" in capsys.readouterr().out

    # corrupt one stored state and the check names the record
    doc = json.loads((tiny_run["out"] / "library.json").read_text())
    doc["records"][3]["x0"][0] += 1e-3
    bad = tiny_run["root"] / "corrupt.json"
    bad.write_text(json.dumps(doc))
    rc = main(["validate", str(bad)])
    assert rc == 1
    out = capsys.readouterr().out
    assert "FAIL" in out
    assert doc["records"][3]["gait_id"] in out


def test_find_passive_subcommand(tiny_run, capsys):
    dest = tiny_run["root"] / "fp"
    rc = main(["find-passive", "--config", str(tiny_run["cfg"]),
               "--out", str(dest)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "tau = " in text
    assert "gamma = " in text
    assert "|P| = " in text
    records, _, _ = import_library(dest / "library.json")
    assert len(records) == 1
    assert records[0].gait_id == "passive/seed"
    assert np.isnan(records[0].epsilon)
    assert records[0].cost == 0.0

    # a single point is not enough for statistics: reported, exit 1
    rc = main(["stats", str(dest / "library.json")])
    assert rc == 1
    assert "at least 4 points" in capsys.readouterr().err


def test_failure_manifest_on_unreachable_seed(tmp_path, capsys):
    text = TINY + """
[[slices]]
id = "cs"
kind = "constant_slope"
v_des = 3.0
"""
    cfg_path = _write(tmp_path, text)
    out = tmp_path / "out"
    rc = main(["run", "--config", str(cfg_path), "--out", str(out)])
    assert rc == 1
    manifest = json.loads((out / "failure_manifest.json").read_text())
    assert manifest["problems"][0]["stage"] == "slice:cs"
    assert "epsilon = 0" in manifest["problems"][0]["error"]
    assert "curve_cv.csv" in manifest["written"]
    # partial results are still on disk and importable
    records, _, _ = import_library(out / "library.json")
    assert any(r.slice_id == "cv" for r in records)
    assert not any(r.slice_id == "cs" for r in records)


def test_trace_subcommand_and_thread_determinism(tiny_run):
    out1 = tiny_run["root"] / "t1"
    out2 = tiny_run["root"] / "t2"
    rc1 = main(["trace", "--config", str(tiny_run["cfg"]), "--out", str(out1),
                "cv", "--threads", "1"])
    rc2 = main(["trace", "--config", str(tiny_run["cfg"]), "--out", str(out2),
                "cv", "--threads", "2"])
    assert rc1 == 0 and rc2 == 0
    for name in ("curve_cv.csv", "curve_passive.csv", "library.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    # and the trace output matches the full run, which used the same budget
    assert ((out1 / "curve_cv.csv").read_bytes()
            == (tiny_run["out"] / "curve_cv.csv").read_bytes())
