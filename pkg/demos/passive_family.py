"""Find a passive downhill gait and walk the whole zero-torque family.

A compass-gait walker rolling down a constant slope has periodic gaits
that need no actuation at all: the energy gained going downhill exactly
balances what each heel strike dissipates.  Starting from a rough guess
this script pins one such gait with Newton's method, then continues the
one-parameter family it belongs to in both directions and plots slope
against speed and step duration.  The family folds several times, so one
speed can correspond to several distinct slopes.
"""

import numpy as np

from gaitcurves.continuation import (
    ContinuationConfig,
    find_passive_gait,
    locate_passive_speed,
    trace_passive_family,
)
from gaitcurves.dynamics import ModelParams
from gaitcurves.gaitmaps import evaluate_step

params = ModelParams().nondimensional()
cfg = ContinuationConfig(h_max=0.2)

# The guess does not need to be good: the swing leg starts ahead of the
# stance leg with both falling forward, and the step takes about 1.3
# time units.
gait = find_passive_gait([0.05, -0.9, -0.6, 0.37], 1.3, params, cfg)
ev = evaluate_step(gait, params)
print("passive gait from the guess:")
print("  x0    =", np.array2string(gait.x0, precision=6))
print("  tau   = %.6f" % gait.tau)
print("  slope = %+.4f deg" % np.degrees(ev.gamma_raw))
print("  v_avg = %.6f" % ev.v_avg)
print("  |P|   = %.2e" % np.abs(ev.P).max())

family = trace_passive_family(gait, params, cfg)
records = family.all_records()
print("\nfamily: %d members, terminations %s / %s" % (
    len(records), family.branches[0].termination, family.branches[1].termination))
print("  slope range %.2f .. %.2f deg" % (
    min(r.gamma_deg for r in records), max(r.gamma_deg for r in records)))
print("  speed range %.4f .. %.4f" % (
    min(r.v_avg for r in records), max(r.v_avg for r in records)))

# The family crosses v_avg = 0.7 more than once; this picks the crossing
# nearest the seed, which is the ordinary walking gait.
member = locate_passive_speed(family, 0.7, params, cfg)
mev = evaluate_step(member, params)
print("\nmember with v_avg = 0.7: slope %+.4f deg, tau %.4f" % (
    np.degrees(mev.gamma_raw), member.tau))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("\nmatplotlib not installed, skipping the plots")
    raise SystemExit(0)

gam = np.array([r.gamma_deg for r in records])
v = np.array([r.v_avg for r in records])
tau = np.array([r.tau for r in records])

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.plot(gam, v, ".-", lw=0.8, ms=3)
ax1.plot(np.degrees(mev.gamma_raw), mev.v_avg, "r*", ms=12, label="v = 0.7 member")
ax1.set_xlabel("slope [deg]")
ax1.set_ylabel("average speed")
ax1.legend()
ax2.plot(gam, tau, ".-", lw=0.8, ms=3)
ax2.set_xlabel("slope [deg]")
ax2.set_ylabel("step duration")
fig.suptitle("zero-torque gait family")
fig.tight_layout()
fig.savefig("passive_family.png", dpi=150)
print("\nwrote passive_family.png")
