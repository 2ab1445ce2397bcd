"""Continue optimal gaits from a passive seed to level ground and beyond.

A passive gait is a free lunch: zero actuation cost, but only on its own
particular downhill slope.  This script treats that gait as the endpoint
of a family of energetically optimal actuated gaits, all walking at the
same average speed, parameterized by the slope.  Tracing the optimality
system with pseudo-arclength continuation pulls the slope toward level
ground and then uphill, passing through the cheapest actuated gaits on
the way.

The interesting structure is all in the middle: approaching level ground
the step duration first collapses to quick short steps before recovering,
and the exactly-level gait (epsilon = 0) is emitted as a distinguished
record.  Walking uphill costs an order of magnitude more than walking
down, which the quartile coloring makes obvious.
"""

import numpy as np

from gaitcurves.continuation import (
    ContinuationConfig,
    find_passive_gait,
    locate_passive_speed,
    trace_passive_family,
    trace_slice,
)
from gaitcurves.dynamics import ModelParams
from gaitcurves.gaitmaps import AugmentedPoint, OperatingPoint, evaluate_step
from gaitcurves.library import constant_velocity_slice, curve_statistics, format_statistics

params = ModelParams().nondimensional()
cfg = ContinuationConfig(h_max=0.2)

gait = find_passive_gait([0.05, -0.9, -0.6, 0.37], 1.3, params, cfg)
family = trace_passive_family(gait, params, cfg)
seed_c = locate_passive_speed(family, 0.7, params, cfg)
ev = evaluate_step(seed_c, params)
print("seed: slope %+.4f deg, v_avg %.4f, tau %.4f" % (
    np.degrees(ev.gamma_raw), ev.v_avg, seed_c.tau))

# Target: the same speed on level ground.  The generous step cap lets the
# 25-point branches cross level ground and reach uphill slopes.
spec = constant_velocity_slice("cv", OperatingPoint(gamma=ev.gamma_raw, v_avg=ev.v_avg))
seed = AugmentedPoint(c=seed_c, lam=np.zeros(6), epsilon=1.0)
trace = trace_slice(seed, spec, params, ContinuationConfig(h_max=1.0))

records = trace.all_records()
stats = curve_statistics(records)
print()
print(format_statistics("cv", stats))

for rec in trace.distinguished:
    print("level-ground gait: slope %+.2e deg, v_avg %.6f, tau %.4f, J %.4f" % (
        rec.gamma_deg, rec.v_avg, rec.tau, rec.cost))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed, skipping the plot")
    raise SystemExit(0)

gam = np.array([r.gamma_deg for r in records])
tau = np.array([r.tau for r in records])
quart = np.array([r.quartile for r in records])

fig, ax = plt.subplots(figsize=(7, 4.5))
colors = {1: "#2166ac", 2: "#67a9cf", 3: "#ef8a62", 4: "#b2182b"}
for q in (1, 2, 3, 4):
    m = quart == q
    ax.plot(gam[m], tau[m], "o", ms=4, color=colors[q], label="cost quartile %d" % q)
ax.plot(gam, tau, "-", lw=0.6, color="0.6", zorder=0)
for rec in trace.distinguished:
    ax.plot(rec.gamma_deg, rec.tau, "k*", ms=14, label="level ground")
ax.set_xlabel("slope [deg]")
ax.set_ylabel("step duration")
ax.set_title("constant-velocity slice, v_avg = 0.7")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig("constant_velocity_slice.png", dpi=150)
print("wrote constant_velocity_slice.png")
