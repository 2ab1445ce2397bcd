"""Command-line front end.

Reads a declarative TOML config describing the model, the tracer settings,
and an ordered list of slices, then orchestrates the chain

    find-passive -> trace passive family -> pick member by speed
        -> trace slice 1 -> pick its epsilon = 0 gait -> trace slice 2 -> ...

and persists the resulting gait library (JSON), per-curve plot data (CSV),
and statistics reports.  Subcommands also cover the individual stages and
library maintenance (stats, export-plot, validate).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .continuation import (
    ContinuationConfig,
    _passive_record,
    distinguished_points,
    find_passive_gait,
    locate_passive_speed,
    trace_passive_family,
    trace_slice,
)
from .dynamics import ModelParams, TrajectoryPoint
from .gaitmaps import AugmentedPoint, OperatingPoint, evaluate_step
from .library import (
    LibraryFormatError,
    StatisticsError,
    constant_slope_slice,
    constant_velocity_slice,
    curve_statistics,
    export_curve_csv,
    export_library,
    format_statistics,
    import_library,
    near_passive_ids,
    params_digest,
    validate_records,
)
from .simulate import integrate_step, write_trajectory_csv


class ConfigError(ValueError):
    """Raised for malformed or contradictory configuration input."""


# -- configuration ---------------------------------------------------------

_MODEL_KEYS = ("leg_length", "hip_mass", "leg_mass", "leg_com_from_hip", "gravity")
_CONT_KEYS = tuple(f.name for f in fields(ContinuationConfig))
_INT_CONT_KEYS = (
    "target_points_per_branch",
    "newton_max_iters",
    "corrector_max_retries",
    "n_substeps",
)
_SLICE_KINDS = ("constant_velocity", "constant_slope")

DEFAULT_X0_GUESS = (0.05, -0.9, -0.6, 0.37)
DEFAULT_TAU_GUESS = 1.3
DEFAULT_V_SELECT = 0.7


def _check_keys(table, allowed, where):
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{where}: unknown key {key!r}")


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _integer(value, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


@dataclass(frozen=True)
class SliceConfig:
    """One declared slice: identity, kind, seed selector, targets."""

    slice_id: str
    kind: str
    seed: str
    gamma_des: float = 0.0
    v_des: float = 0.0
    overrides: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    """Fully validated configuration for a pipeline run."""

    params: ModelParams
    continuation: ContinuationConfig
    passive_x0: tuple
    passive_tau: float
    passive_v: float
    slices: tuple
    raw: dict

    def slice_ids(self):
        return [s.slice_id for s in self.slices]


def _continuation_from_table(table, where, base):
    _check_keys(table, _CONT_KEYS, where)
    kwargs = {}
    for key, value in table.items():
        if key in _INT_CONT_KEYS:
            kwargs[key] = _integer(value, f"{where}.{key}")
        else:
            kwargs[key] = _number(value, f"{where}.{key}")
    try:
        return replace(base, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _model_from_table(table):
    _check_keys(table, _MODEL_KEYS + ("nondimensional",), "[model]")
    kwargs = {k: _number(table[k], f"[model].{k}") for k in _MODEL_KEYS if k in table}
    nondim = table.get("nondimensional", True)
    if not isinstance(nondim, bool):
        raise ConfigError(f"[model].nondimensional: expected a boolean, got {nondim!r}")
    try:
        params = ModelParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[model]: {exc}") from exc
    return params.nondimensional() if nondim else params


def _slice_from_table(table, index, previous_ids):
    where = f"[[slices]] #{index + 1}"
    _check_keys(table, ("id", "kind", "seed", "gamma_des", "v_des", "continuation"), where)
    slice_id = table.get("id")
    if not isinstance(slice_id, str) or not slice_id:
        raise ConfigError(f"{where}: 'id' must be a nonempty string")
    if slice_id in previous_ids:
        raise ConfigError(f"{where}: duplicate slice id {slice_id!r}")
    where = f"[[slices]] {slice_id!r}"
    kind = table.get("kind")
    if kind not in _SLICE_KINDS:
        raise ConfigError(f"{where}: 'kind' must be one of {list(_SLICE_KINDS)}, got {kind!r}")
    if kind == "constant_velocity":
        if "v_des" in table:
            raise ConfigError(f"{where}: 'v_des' does not apply to a constant_velocity slice")
        gamma_des = _number(table.get("gamma_des", 0.0), f"{where}.gamma_des")
        v_des = 0.0
    else:
        if "gamma_des" in table:
            raise ConfigError(f"{where}: 'gamma_des' does not apply to a constant_slope slice")
        if "v_des" not in table:
            raise ConfigError(f"{where}: a constant_slope slice requires 'v_des'")
        gamma_des = 0.0
        v_des = _number(table["v_des"], f"{where}.v_des")
    if previous_ids:
        seed = table.get("seed", f"eps0:{previous_ids[-1]}")
    else:
        seed = table.get("seed", "passive")
    if not isinstance(seed, str):
        raise ConfigError(f"{where}: 'seed' must be a string")
    if seed != "passive":
        if not seed.startswith("eps0:"):
            raise ConfigError(
                f"{where}: 'seed' must be \"passive\" or \"eps0:<slice id>\", got {seed!r}"
            )
        ref = seed[len("eps0:"):]
        if ref not in previous_ids:
            raise ConfigError(f"{where}: seed references {ref!r}, which is not an earlier slice")
    overrides = table.get("continuation", {})
    if not isinstance(overrides, dict):
        raise ConfigError(f"{where}.continuation: expected a table")
    return SliceConfig(
        slice_id=slice_id,
        kind=kind,
        seed=seed,
        gamma_des=gamma_des,
        v_des=v_des,
        overrides=overrides,
    )


def load_config(path) -> RunConfig:
    """Parse and validate a TOML config file.

    Unknown keys anywhere are rejected by name; slice continuation
    overrides are validated eagerly so a dry run catches them too.
    """
    with open(path, "rb") as f:
        try:
            doc = tomllib.load(f)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    _check_keys(doc, ("model", "continuation", "passive", "slices"), "config")

    params = _model_from_table(doc.get("model", {}))
    base = _continuation_from_table(doc.get("continuation", {}), "[continuation]",
                                    ContinuationConfig())

    passive = doc.get("passive", {})
    _check_keys(passive, ("x0_guess", "tau_guess", "v_avg"), "[passive]")
    x0_guess = passive.get("x0_guess", list(DEFAULT_X0_GUESS))
    if not isinstance(x0_guess, list) or len(x0_guess) != 4:
        raise ConfigError("[passive].x0_guess: expected a list of 4 numbers")
    x0_guess = tuple(_number(v, "[passive].x0_guess") for v in x0_guess)
    tau_guess = _number(passive.get("tau_guess", DEFAULT_TAU_GUESS), "[passive].tau_guess")
    v_select = _number(passive.get("v_avg", DEFAULT_V_SELECT), "[passive].v_avg")

    raw_slices = doc.get("slices", [])
    if not isinstance(raw_slices, list):
        raise ConfigError("config: 'slices' must be an array of tables")
    slices = []
    ids: list = []
    for i, table in enumerate(raw_slices):
        sc = _slice_from_table(table, i, ids)
        _continuation_from_table(sc.overrides, f"[[slices]] {sc.slice_id!r}.continuation", base)
        slices.append(sc)
        ids.append(sc.slice_id)

    return RunConfig(
        params=params,
        continuation=base,
        passive_x0=x0_guess,
        passive_tau=tau_guess,
        passive_v=v_select,
        slices=tuple(slices),
        raw=doc,
    )


def _apply_cli_overrides(cfg: ContinuationConfig, args) -> ContinuationConfig:
    """Command-line flags win over both the base config and per-slice tables."""
    kwargs = {}
    if getattr(args, "points", None) is not None:
        kwargs["target_points_per_branch"] = args.points
    if getattr(args, "h0", None) is not None:
        kwargs["h0"] = args.h0
    if getattr(args, "fixed_h", None) is not None:
        kwargs["fixed_h"] = args.fixed_h
    if not kwargs:
        return cfg
    try:
        return replace(cfg, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"command line overrides: {exc}") from exc


def _effective_slice_cfg(run_cfg: RunConfig, sc: SliceConfig, args) -> ContinuationConfig:
    cfg = _continuation_from_table(
        sc.overrides, f"[[slices]] {sc.slice_id!r}.continuation", run_cfg.continuation
    )
    return _apply_cli_overrides(cfg, args)


# -- pipeline --------------------------------------------------------------

def _log(message):
    print(message, file=sys.stderr, flush=True)


def _traj_filename(gait_id):
    return "traj_" + gait_id.replace("/", "_") + ".csv"


def _dump_trajectories(records, params, n_steps, out_dir, written):
    for rec in records:
        name = _traj_filename(rec.gait_id)
        result = integrate_step(rec.trajectory_point, params, n_steps)
        write_trajectory_csv(out_dir / name, result)
        written.append(name)


def _selected_slices(run_cfg: RunConfig, upto):
    """The config slices up to and including `upto` (all when upto is None).

    Seeds chain through earlier slices, so tracing one slice means running
    the prefix that ends at it.
    """
    if upto is None:
        return list(run_cfg.slices)
    ids = run_cfg.slice_ids()
    if upto not in ids:
        raise ConfigError(f"no slice {upto!r} in config (have {ids})")
    return list(run_cfg.slices[: ids.index(upto) + 1])


def print_plan(run_cfg: RunConfig, selected, out_dir, args, stream=None):
    p = run_cfg.params
    w = (stream if stream is not None else sys.stdout).write
    w(f"model: leg_length={p.leg_length:g} hip_mass={p.hip_mass:g} "
      f"leg_mass={p.leg_mass:g} leg_com_from_hip={p.leg_com_from_hip:g} "
      f"gravity={p.gravity:g} digest={params_digest(p)}\n")
    base = _apply_cli_overrides(run_cfg.continuation, args)
    w(f"stage find-passive: x0_guess={list(run_cfg.passive_x0)} "
      f"tau_guess={run_cfg.passive_tau:g}\n")
    w(f"stage passive-family: points={base.target_points_per_branch}/branch "
      f"h0={base.h0:g} h_max={base.h_max:g}\n")
    w(f"stage select-seed: passive member with v_avg={run_cfg.passive_v:g}\n")
    outputs = ["library.json", "curve_passive.csv", "stats_passive.txt"]
    for sc in selected:
        cfg = _effective_slice_cfg(run_cfg, sc, args)
        target = (f"gamma_des={sc.gamma_des:g}" if sc.kind == "constant_velocity"
                  else f"v_des={sc.v_des:g}")
        w(f"stage slice {sc.slice_id}: {sc.kind} {target} seed={sc.seed} "
          f"points={cfg.target_points_per_branch}/branch h0={cfg.h0:g} "
          f"h_max={cfg.h_max:g}"
          + (f" fixed_h={cfg.fixed_h:g}" if cfg.fixed_h is not None else "")
          + "\n")
        outputs += [f"curve_{sc.slice_id}.csv", f"stats_{sc.slice_id}.txt"]
    w(f"out dir: {out_dir}\n")
    w("outputs: " + " ".join(outputs) + "\n")


def run_pipeline(run_cfg: RunConfig, out_dir, args, upto=None, log=_log) -> int:
    """Execute the configured chain and persist results.

    Returns the process exit status: 0 only if every selected slice
    completed with both branches free of singular terminations.  Failures
    leave partial outputs in place plus a failure manifest.
    """
    selected = _selected_slices(run_cfg, upto)
    threads = getattr(args, "threads", 1) or 1
    dump = bool(getattr(args, "dump_trajectories", False))
    base = _apply_cli_overrides(run_cfg.continuation, args)
    for sc in selected:
        _effective_slice_cfg(run_cfg, sc, args)  # fail before writing anything

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    problems = []
    written: list = []
    records: list = []
    specs: list = []
    stage = "find-passive"
    try:
        log(f"[find-passive] guess x0={list(run_cfg.passive_x0)} tau={run_cfg.passive_tau:g}")
        gait = find_passive_gait(run_cfg.passive_x0, run_cfg.passive_tau,
                                 run_cfg.params, base)
        ev = evaluate_step(gait, run_cfg.params, base.n_substeps)
        log(f"[find-passive] gamma={np.degrees(ev.gamma_raw):+.4f}deg "
            f"v_avg={ev.v_avg:.6f} tau={gait.tau:.6f} |P|={np.abs(ev.P).max():.2e}")

        stage = "passive-family"
        family = trace_passive_family(gait, run_cfg.params, base, progress=log)
        fam_records = family.all_records()
        records += fam_records
        export_curve_csv(fam_records, out_dir / "curve_passive.csv")
        written.append("curve_passive.csv")
        fam_stats = curve_statistics(fam_records)
        (out_dir / "stats_passive.txt").write_text(
            format_statistics("passive", fam_stats), encoding="utf-8")
        written.append("stats_passive.txt")
        if dump:
            _dump_trajectories(fam_records, run_cfg.params, base.n_substeps,
                               out_dir, written)

        eps0: dict = {}
        for sc in selected:
            stage = f"slice:{sc.slice_id}"
            scfg = _effective_slice_cfg(run_cfg, sc, args)
            if sc.seed == "passive":
                seed_c = locate_passive_speed(family, run_cfg.passive_v,
                                              run_cfg.params, scfg)
                sev = evaluate_step(seed_c, run_cfg.params, scfg.n_substeps)
                seed = AugmentedPoint(c=seed_c, lam=np.zeros(6), epsilon=1.0)
                seed_p = OperatingPoint(gamma=sev.gamma_raw, v_avg=sev.v_avg)
                seed_ref = f"passive/v_avg={run_cfg.passive_v:g}"
            else:
                ref = sc.seed[len("eps0:"):]
                if ref not in eps0:
                    raise ConfigError(
                        f"slice {sc.slice_id!r}: seed slice {ref!r} produced no "
                        f"epsilon = 0 gait")
                rec0, pt0 = eps0[ref]
                seed = AugmentedPoint(c=pt0.c, lam=pt0.lam, epsilon=1.0)
                seed_p = OperatingPoint(gamma=rec0.gamma_rad, v_avg=rec0.v_avg)
                seed_ref = rec0.gait_id
            if sc.kind == "constant_velocity":
                spec = constant_velocity_slice(sc.slice_id, seed_p,
                                               gamma_des=sc.gamma_des, seed_ref=seed_ref)
            else:
                spec = constant_slope_slice(sc.slice_id, seed_p, v_des=sc.v_des,
                                            seed_ref=seed_ref)
            specs.append(spec)
            log(f"[{sc.slice_id}] seed gamma={np.degrees(seed_p.gamma):+.4f}deg "
                f"v_avg={seed_p.v_avg:.6f} ({seed_ref})")
            trace = trace_slice(seed, spec, run_cfg.params, scfg,
                                progress=log, threads=threads)
            for branch in trace.branches:
                sign = "+" if branch.direction > 0 else "-"
                log(f"[{sc.slice_id}/{sign}] terminated: {branch.termination} "
                    f"({len(branch.points)} points)")
                if branch.termination == "singular_point":
                    problems.append({
                        "stage": stage,
                        "error": f"branch {sign} terminated at a singular point",
                    })
            pairs = distinguished_points(trace)
            if pairs:
                eps0[sc.slice_id] = pairs[0]
                rec0 = pairs[0][0]
                log(f"[{sc.slice_id}] eps=0 gait: gamma={rec0.gamma_deg:+.6f}deg "
                    f"v_avg={rec0.v_avg:.6f} tau={rec0.tau:.6f} J={rec0.cost:.6f}")
            curve_records = trace.all_records()
            stats = curve_statistics(curve_records)
            near = near_passive_ids(curve_records)
            (out_dir / f"stats_{sc.slice_id}.txt").write_text(
                format_statistics(sc.slice_id, stats, near_passive=near),
                encoding="utf-8")
            written.append(f"stats_{sc.slice_id}.txt")
            all_slice_records = curve_records + list(trace.distinguished)
            export_curve_csv(all_slice_records, out_dir / f"curve_{sc.slice_id}.csv")
            written.append(f"curve_{sc.slice_id}.csv")
            records += all_slice_records
            if dump:
                _dump_trajectories(all_slice_records, run_cfg.params,
                                   scfg.n_substeps, out_dir, written)
    except Exception as exc:  # noqa: BLE001 - every stage failure becomes a manifest entry
        problems.append({"stage": stage, "error": f"{type(exc).__name__}: {exc}"})

    export_library(records, out_dir / "library.json", run_cfg.params,
                   slices=specs, config=run_cfg.raw)
    written.append("library.json")

    if problems:
        manifest = {"problems": problems, "written": sorted(written)}
        (out_dir / "failure_manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")
        log(f"FAILED: {len(problems)} problem(s); manifest in failure_manifest.json")
        return 1
    log(f"done: {len(records)} records in {out_dir}")
    return 0


# -- subcommands -----------------------------------------------------------

def _cmd_find_passive(args):
    run_cfg = load_config(args.config)
    base = _apply_cli_overrides(run_cfg.continuation, args)
    gait = find_passive_gait(run_cfg.passive_x0, run_cfg.passive_tau,
                             run_cfg.params, base)
    ev = evaluate_step(gait, run_cfg.params, base.n_substeps)
    print(f"x0 = {np.array2string(gait.x0, separator=', ')}")
    print(f"tau = {gait.tau!r}")
    print(f"gamma = {np.degrees(ev.gamma_raw):+.6f} deg")
    print(f"v_avg = {ev.v_avg:.10f}")
    print(f"|P| = {np.abs(ev.P).max():.3e}")
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        y = np.concatenate([gait.x0, [gait.tau]])
        rec = _passive_record("passive", 0, 0, y, ev, ev.gamma_raw)
        export_library([rec], out_dir / "library.json", run_cfg.params,
                       config=run_cfg.raw)
        print(f"wrote {out_dir / 'library.json'}")
    return 0


def _cmd_trace(args):
    run_cfg = load_config(args.config)
    upto = args.slice or (run_cfg.slices[0].slice_id if run_cfg.slices else None)
    if upto is None:
        raise ConfigError("config declares no slices")
    selected = _selected_slices(run_cfg, upto)
    if args.dry_run:
        print_plan(run_cfg, selected, Path(args.out), args)
        return 0
    return run_pipeline(run_cfg, args.out, args, upto=upto)


def _cmd_run(args):
    run_cfg = load_config(args.config)
    if args.dry_run:
        print_plan(run_cfg, list(run_cfg.slices), Path(args.out), args)
        return 0
    return run_pipeline(run_cfg, args.out, args)


def _library_path(args):
    if args.library is not None:
        return Path(args.library)
    if args.out is not None:
        return Path(args.out) / "library.json"
    raise ConfigError("give a library path or --out DIR")


def _group_by_slice(records):
    groups: dict = {}
    for rec in records:
        groups.setdefault(rec.slice_id, []).append(rec)
    return groups


def _cmd_stats(args):
    records, _, _ = import_library(_library_path(args))
    out_dir = Path(args.out) if args.out is not None else None
    status = 0
    for slice_id, group in _group_by_slice(records).items():
        trace_points = [r for r in group if not r.gait_id.endswith("/eps0")]
        try:
            stats = curve_statistics(trace_points)
        except StatisticsError as exc:
            print(f"slice {slice_id}: {exc}", file=sys.stderr)
            status = 1
            continue
        actuated = any(np.any(np.asarray(r.a) != 0.0) for r in trace_points)
        near = near_passive_ids(trace_points) if actuated else None
        text = format_statistics(slice_id, stats, near_passive=near)
        sys.stdout.write(text)
        if out_dir is not None:
            (out_dir / f"stats_{slice_id}.txt").write_text(text, encoding="utf-8")
    return status


def _cmd_export_plot(args):
    if args.out is None:
        raise ConfigError("export-plot requires --out DIR")
    records, _, _ = import_library(_library_path(args))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for slice_id, group in _group_by_slice(records).items():
        path = out_dir / f"curve_{slice_id}.csv"
        export_curve_csv(group, path)
        print(f"wrote {path}")
    return 0


def _cmd_validate(args):
    expected = None
    if args.config is not None:
        expected = load_config(args.config).params
    path = _library_path(args)
    records, slices, provenance = import_library(path, expected_params=expected)
    params = ModelParams(**provenance["params"])
    cont = provenance.get("config", {}).get("continuation", {})
    tol = float(cont.get("tol", 1e-8))
    n_steps = int(cont.get("n_substeps", 30))
    failures = validate_records(records, slices, params, tol=tol, n_steps=n_steps)
    for gait_id, check, stored, recomputed in failures:
        print(f"FAIL {gait_id}: {check} stored={stored!r} recomputed={recomputed!r}")
    if failures:
        print(f"{len(failures)} of {len(records)} records failed re-validation")
        return 1
    print(f"ok: {len(records)} records consistent")
    return 0


# -- argument parsing ------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="gaitcurves",
        description="Trace families of energetically optimal compass-gait walking gaits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", required=True, metavar="PATH",
                       help="TOML config file")

    def add_out(p, required=False):
        p.add_argument("--out", required=required, metavar="DIR", default=None,
                       help="output directory")

    def add_trace_flags(p):
        p.add_argument("--points", type=int, metavar="N", default=None,
                       help="override target points per branch")
        p.add_argument("--h0", type=float, metavar="X", default=None,
                       help="override initial arclength step")
        p.add_argument("--fixed-h", dest="fixed_h", type=float, metavar="X",
                       default=None, help="disable step adaptation, use this step")
        p.add_argument("--threads", type=int, metavar="N", default=1,
                       help="2 runs the two branches of each trace concurrently")
        p.add_argument("--dump-trajectories", action="store_true",
                       help="write traj_<id>.csv for every recorded gait")
        p.add_argument("--dry-run", action="store_true",
                       help="validate config and print the plan, touch no files")

    p = sub.add_parser("find-passive", help="find the zero-torque periodic gait near the configured guess")
    add_config(p)
    add_out(p)
    p.add_argument("--points", type=int, metavar="N", default=None, help=argparse.SUPPRESS)
    p.add_argument("--h0", type=float, metavar="X", default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=_cmd_find_passive)

    p = sub.add_parser("trace", help="trace one configured slice (and the stages it depends on)")
    add_config(p)
    add_out(p, required=True)
    p.add_argument("slice", nargs="?", default=None, metavar="SLICE_ID",
                   help="slice to trace (default: first in config)")
    add_trace_flags(p)
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("run", help="run the full configured pipeline")
    add_config(p)
    add_out(p, required=True)
    add_trace_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("stats", help="statistics reports for a gait library")
    p.add_argument("library", nargs="?", default=None, metavar="LIBRARY",
                   help="library.json path (default: <out>/library.json)")
    add_out(p)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("export-plot", help="write per-slice plot CSVs from a gait library")
    p.add_argument("library", nargs="?", default=None, metavar="LIBRARY",
                   help="library.json path (default: <out>/library.json)")
    add_out(p)
    p.set_defaults(func=_cmd_export_plot)

    p = sub.add_parser("validate", help="re-check a stored library against recomputed residuals")
    p.add_argument("library", nargs="?", default=None, metavar="LIBRARY",
                   help="library.json path (default: <out>/library.json)")
    add_out(p)
    p.add_argument("--config", default=None, metavar="PATH",
                   help="config whose model parameters the library should match")
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, LibraryFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
