"""Chain two slices, persist the gait library, and read it back.

The full study is a chain: the passive family seeds a constant-velocity
slice, whose level-ground gait in turn seeds a constant-slope slice that
sweeps the walking speed.  Everything recorded along the way goes into a
single JSON library with provenance (model parameters and their digest,
slice specs, code version), and each curve also exports as a flat CSV
for plotting.  Reading the library back re-validates every record by
recomputing its residuals from scratch.

Budgets are kept small here so the whole demo runs in about a minute;
the shipped reproduction config does the same chain at full size.
"""

import os
import tempfile

import numpy as np

from gaitcurves.continuation import (
    ContinuationConfig,
    distinguished_points,
    find_passive_gait,
    locate_passive_speed,
    trace_passive_family,
    trace_slice,
)
from gaitcurves.dynamics import ModelParams
from gaitcurves.gaitmaps import AugmentedPoint, OperatingPoint, evaluate_step
from gaitcurves.library import (
    constant_slope_slice,
    constant_velocity_slice,
    export_curve_csv,
    export_library,
    import_library,
    near_passive_ids,
    validate_records,
)
from gaitcurves.simulate import integrate_step, write_trajectory_csv

params = ModelParams().nondimensional()
# Just enough points for the plus branch to cross level ground.
cfg = ContinuationConfig(h_max=1.4, target_points_per_branch=23)

gait = find_passive_gait([0.05, -0.9, -0.6, 0.37], 1.3, params, cfg)
family = trace_passive_family(gait, params, cfg)
seed_c = locate_passive_speed(family, 0.7, params, cfg)
ev = evaluate_step(seed_c, params)

spec_cv = constant_velocity_slice(
    "cv", OperatingPoint(gamma=ev.gamma_raw, v_avg=ev.v_avg), seed_ref="passive/v_avg=0.7")
trace_cv = trace_slice(AugmentedPoint(c=seed_c, lam=np.zeros(6), epsilon=1.0),
                       spec_cv, params, cfg)
rec0, pt0 = distinguished_points(trace_cv)[0]
print("level-ground gait %s: v_avg %.6f, tau %.4f" % (rec0.gait_id, rec0.v_avg, rec0.tau))

# Same slope, now sweep the speed toward a (never reached) target of 3.
spec_cs = constant_slope_slice(
    "cs", OperatingPoint(gamma=rec0.gamma_rad, v_avg=rec0.v_avg), v_des=3.0,
    seed_ref=rec0.gait_id)
trace_cs = trace_slice(AugmentedPoint(c=pt0.c, lam=pt0.lam, epsilon=1.0),
                       spec_cs, params, ContinuationConfig(h_max=1.4, target_points_per_branch=12))

records = (family.all_records() + trace_cv.all_records() + list(trace_cv.distinguished)
           + trace_cs.all_records())
print("library: %d records" % len(records))
print("near-passive points on the cv curve:",
      list(near_passive_ids(trace_cv.all_records())) or "none")

out = tempfile.mkdtemp(prefix="gaitlib_")
lib_path = os.path.join(out, "library.json")
export_library(records, lib_path, params, slices=[spec_cv, spec_cs])
export_curve_csv(trace_cv.all_records(), os.path.join(out, "curve_cv.csv"))
export_curve_csv(trace_cs.all_records(), os.path.join(out, "curve_cs.csv"))

# One sampled trajectory, to show what the per-gait dump looks like.
traj_path = os.path.join(out, "traj_cv_eps0.csv")
write_trajectory_csv(traj_path, integrate_step(rec0.trajectory_point, params))

loaded, slices, provenance = import_library(lib_path, expected_params=params)
assert len(loaded) == len(records)
print("reloaded %d records, code version %s, params digest %s" % (
    len(loaded), provenance["code_version"], provenance["params_digest"]))

failures = validate_records(loaded, slices, params)
print("re-validation failures:", failures or "none")
print("\nfiles in %s:" % out)
for name in sorted(os.listdir(out)):
    print(" ", name)
