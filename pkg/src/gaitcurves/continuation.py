"""Pseudo-arclength continuation of periodic gaits.

Two curve families are traced by the same predictor-corrector engine:

* the passive family, zero-torque gaits solving the 4-equation
  periodicity system in the 5 unknowns (x0, tau), and
* optimality slices, roots of the 14-equation homotopy system in the 15
  unknowns (c, lam, epsilon).

Each branch walks the curve with tangent prediction, bordered Newton
correction, and contraction-based step adaptation.  Slice traces watch
for the epsilon = 0 crossing and refine it to a distinguished record
holding the exactly-constrained optimal gait.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ModelParams, TrajectoryPoint, transversality_rate
from .simulate import IntegrationBlowupError
from .gaitmaps import (
    AugmentedPoint,
    DegenerateStepError,
    StepEval,
    cost_closed_form,
    evaluate_step,
    foc_system,
    homotopy_system,
    seed_foc_residual,
    unwrap_angle,
    _stationarity,
)
from .library import ClassificationError, GaitRecord, SliceSpec, classify_gait

__all__ = [
    "ContinuationConfig",
    "CorrectorError",
    "SingularPointError",
    "FinderError",
    "SeedError",
    "CorrectorStats",
    "CurveBranch",
    "FamilyTrace",
    "SliceTrace",
    "compute_tangent",
    "correct",
    "adapt_step",
    "find_passive_gait",
    "trace_passive_family",
    "locate_passive_speed",
    "trace_slice",
]


class CorrectorError(RuntimeError):
    """Newton corrector failed to converge for one predicted point."""


class SingularPointError(RuntimeError):
    """Curve Jacobian lost rank; the one-dimensional tangent is undefined."""


class FinderError(RuntimeError):
    """A root search (passive gait, speed pinning) did not converge."""


class SeedError(ValueError):
    """Slice seed does not satisfy its own residual to tolerance."""


@dataclass(frozen=True)
class ContinuationConfig:
    """Knobs of the predictor-corrector engine.

    fixed_h disables step adaptation; epsilon_min / epsilon_max terminate
    a slice branch once the homotopy parameter leaves the window (the
    parameter itself is unconstrained and may pass through the window).
    """

    h0: float = 0.02
    h_min: float = 1e-4
    h_max: float = 0.2
    target_points_per_branch: int = 25
    newton_max_iters: int = 20
    tol: float = 1e-8
    contraction_target: float = 0.5
    corrector_max_retries: int = 6
    n_substeps: int = 30
    fixed_h: float | None = None
    epsilon_min: float | None = None
    epsilon_max: float | None = None

    def __post_init__(self):
        if self.h0 == 0.0 or not np.isfinite(self.h0):
            raise ValueError("h0 must be nonzero and finite")
        if not 0.0 < self.h_min <= self.h_max:
            raise ValueError("need 0 < h_min <= h_max")
        if self.target_points_per_branch < 1:
            raise ValueError("target_points_per_branch must be positive")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.fixed_h is not None and self.fixed_h <= 0.0:
            raise ValueError("fixed_h must be positive when given")


@dataclass
class CorrectorStats:
    iterations: int
    kappa: float
    residual_norm: float
    arc_residual: float


@dataclass
class CurveBranch:
    """One directed half of a traced curve, seed excluded.

    tangents[i] is the unit tangent at points[i]; step_sizes[i] the
    arclength step that produced it.  termination is one of point_budget,
    epsilon_bound, step_underflow, singular_point, taxonomy_bound.
    """

    direction: int
    points: list
    tangents: list
    step_sizes: list
    corrector_stats: list
    termination: str


@dataclass
class FamilyTrace:
    seed_record: GaitRecord
    seed_tangent: np.ndarray
    branches: tuple

    def all_records(self):
        minus, plus = self.branches
        return list(reversed(minus.points)) + [self.seed_record] + list(plus.points)


@dataclass
class SliceTrace:
    spec: SliceSpec
    seed: AugmentedPoint
    seed_record: GaitRecord
    seed_tangent: np.ndarray
    branches: tuple
    distinguished: list

    def all_records(self):
        minus, plus = self.branches
        return list(reversed(minus.points)) + [self.seed_record] + list(plus.points)


# -- engine primitives -----------------------------------------------------


def compute_tangent(jac, prev_tangent=None, orientation=None):
    """Unit vector spanning the null space of an m x (m+1) curve Jacobian.

    The sign makes the inner product with prev_tangent positive; without a
    previous tangent the orientation vector plays that role.  A smallest
    singular value below 1e-10 of the largest signals a rank-deficient
    Jacobian (branch point or fold tangency) and raises SingularPointError.
    """
    jac = np.asarray(jac, dtype=float)
    m, n = jac.shape
    if n != m + 1:
        raise ValueError(f"expected m x (m+1) Jacobian, got {jac.shape}")
    _, s, vt = np.linalg.svd(jac)
    if s[0] == 0.0 or s[-1] < 1e-10 * s[0]:
        raise SingularPointError(
            f"curve Jacobian is rank deficient (sigma_min/sigma_max = "
            f"{s[-1] / s[0] if s[0] else 0.0:.2e})"
        )
    t = vt[-1]
    ref = prev_tangent if prev_tangent is not None else orientation
    if ref is not None and float(np.dot(t, ref)) < 0.0:
        t = -t
    return t


def correct(z_pred, z_base, tangent, h, system, cfg: ContinuationConfig):
    """Newton iteration on the residual plus the arclength constraint
    tangent . (z - z_base) - h = 0.

    system(z) returns (residual, jacobian) with jacobian of shape
    m x (m+1).  Returns (z, stats); raises CorrectorError on divergence,
    non-finite values, or running out of iterations.  A predictor that
    already satisfies both equations is returned unchanged with zero
    iterations.
    """
    z = np.array(z_pred, dtype=float)
    scale = 1.0 + float(np.linalg.norm(z_base))
    step_norms = []
    for iteration in range(cfg.newton_max_iters + 1):
        try:
            r, jac = system(z)
        except (
            IntegrationBlowupError,
            DegenerateStepError,
            ValueError,
            FloatingPointError,
        ) as exc:
            raise CorrectorError(f"evaluation failed at the iterate: {exc}") from exc
        if not np.all(np.isfinite(r)):
            raise CorrectorError("residual is not finite")
        arc = float(np.dot(tangent, z - z_base)) - h
        r_norm = float(np.abs(r).max())
        if r_norm <= cfg.tol and abs(arc) <= 1e-10:
            # contraction of the first two corrections: measures how well
            # the predictor landed, which is what the step size controls
            kappa = step_norms[1] / step_norms[0] if len(step_norms) >= 2 else 0.0
            return z, CorrectorStats(iteration, float(kappa), r_norm, arc)
        if iteration == cfg.newton_max_iters:
            break
        full = np.vstack([jac, tangent])
        rhs = np.concatenate([r, [arc]])
        try:
            dz = np.linalg.solve(full, -rhs)
        except np.linalg.LinAlgError as exc:
            raise CorrectorError(f"bordered system is singular: {exc}") from exc
        if not np.all(np.isfinite(dz)) or float(np.linalg.norm(dz)) > 10.0 * scale:
            raise CorrectorError("Newton step diverged")
        z = z + dz
        step_norms.append(float(np.linalg.norm(dz)))
    raise CorrectorError(
        f"no convergence in {cfg.newton_max_iters} iterations "
        f"(residual {r_norm:.2e}, arc {arc:.2e})"
    )


def adapt_step(h, kappa, cfg: ContinuationConfig):
    """Next arclength step from the observed Newton contraction ratio.

    The magnitude is scaled by sqrt(target / kappa), clamped to a factor
    of two per point and to [h_min, h_max]; the sign of h is preserved.
    """
    kappa = max(float(kappa), 1e-6)
    factor = math.sqrt(cfg.contraction_target / kappa)
    factor = min(2.0, max(0.5, factor))
    mag = min(cfg.h_max, max(cfg.h_min, abs(h) * factor))
    return math.copysign(mag, h)


def _trace_branch(system, z0, t0, h_signed, cfg: ContinuationConfig, accept,
                  epsilon_index=None, crossing=None, progress=None, label=""):
    """Walk one branch from z0 along t0.  accept(z, r, jac, tangent, stats, h)
    builds and stores the point record; crossing(z_prev, tangent, h, z_new)
    fires when the epsilon component changes sign between accepted points."""
    z, t = np.array(z0, dtype=float), np.array(t0, dtype=float)
    h = float(h_signed)
    if cfg.fixed_h is not None:
        h = math.copysign(cfg.fixed_h, h)
    n_accepted = 0
    termination = "point_budget"
    while n_accepted < cfg.target_points_per_branch:
        retries = 0
        while True:
            try:
                z_new, stats = correct(z + h * t, z, t, h, system, cfg)
                break
            except CorrectorError:
                retries += 1
                if retries > cfg.corrector_max_retries or abs(h) / 2.0 < cfg.h_min:
                    return "step_underflow"
                h /= 2.0
        r_new, jac_new = system(z_new)
        try:
            t_new = compute_tangent(jac_new, prev_tangent=t)
        except SingularPointError:
            return "singular_point"
        try:
            accept(z_new, r_new, jac_new, t_new, stats, h)
        except ClassificationError:
            # The point walked past the slope taxonomy (|slope| beyond 90
            # degrees).  Drop it and stop the branch rather than recording a
            # gait no classifier accepts.
            return "taxonomy_bound"
        n_accepted += 1
        if progress is not None:
            progress(label, n_accepted, z_new, stats, h, jac_new)
        if (
            crossing is not None
            and epsilon_index is not None
            and z[epsilon_index] * z_new[epsilon_index] < 0.0
        ):
            crossing(z, t, h, z_new)
        if epsilon_index is not None:
            eps = z_new[epsilon_index]
            if (cfg.epsilon_min is not None and eps < cfg.epsilon_min) or (
                cfg.epsilon_max is not None and eps > cfg.epsilon_max
            ):
                return "epsilon_bound"
        z, t = z_new, t_new
        if cfg.fixed_h is None:
            h = adapt_step(h, stats.kappa, cfg)
        else:
            h = math.copysign(cfg.fixed_h, h)
    return termination


# -- passive gaits ---------------------------------------------------------


def find_passive_gait(x0_guess, tau_guess, params: ModelParams,
                      cfg: ContinuationConfig | None = None) -> TrajectoryPoint:
    """Newton search for a zero-torque periodic gait near the guess.

    The periodicity map has 4 equations in the 5 unknowns (x0, tau), so
    each update is the minimum-norm least-squares step.  The converged
    gait must shrink the swing-foot height transversally at impact;
    otherwise FinderError is raised.
    """
    cfg = cfg or ContinuationConfig()
    y = np.concatenate([np.asarray(x0_guess, dtype=float).reshape(4), [float(tau_guess)]])
    last = np.inf
    for _ in range(cfg.newton_max_iters):
        if y[4] <= 1e-3:
            raise FinderError("step duration collapsed during the search")
        ev = evaluate_step(TrajectoryPoint(y[:4], y[4], np.zeros(3)), params, cfg.n_substeps)
        last = float(np.abs(ev.P).max())
        if last <= cfg.tol:
            point = TrajectoryPoint(y[:4], y[4], np.zeros(3))
            rate = transversality_rate(ev.result.x_end_pre, params)
            if not (rate < -1e-8 * params.speed_scale):
                raise FinderError(
                    f"converged orbit touches down tangentially (rate {rate:.2e})"
                )
            return point
        step, *_ = np.linalg.lstsq(ev.dP_dc[:, :5], -ev.P, rcond=None)
        norm = float(np.linalg.norm(step))
        if norm > 0.5:
            step *= 0.5 / norm
        y = y + step
    raise FinderError(f"no passive gait near the guess (residual {last:.2e})")


def _passive_record(slice_id, branch, index, y, ev: StepEval, gamma_unwrapped) -> GaitRecord:
    sign = {1: "+", -1: "-", 0: "0"}[branch]
    gait_id = f"{slice_id}/seed" if branch == 0 else f"{slice_id}/{sign}{index:03d}"
    return GaitRecord(
        gait_id=gait_id,
        slice_id=slice_id,
        branch=branch,
        index=index,
        epsilon=float("nan"),
        x0=y[:4].copy(),
        tau=float(y[4]),
        a=np.zeros(3),
        lam=np.zeros(6),
        gamma_rad=float(gamma_unwrapped),
        gamma_deg=float(np.degrees(gamma_unwrapped)),
        v_avg=float(ev.v_avg),
        cost=0.0,
        res_periodicity=float(np.abs(ev.P).max()),
        res_stationarity=0.0,
        res_homotopy=float("nan"),
        classification=classify_gait(float(gamma_unwrapped)),
        condition_number=float("nan"),
    )


def trace_passive_family(seed: TrajectoryPoint, params: ModelParams,
                         cfg: ContinuationConfig | None = None,
                         slice_id: str = "passive", progress=None) -> FamilyTrace:
    """Continue the zero-torque family through the seed in both directions.

    Unknowns are (x0, tau); the curve Jacobian is the exact 4 x 5
    periodicity sensitivity.  Records carry zero cost and multipliers by
    construction.  The branch stepped with +|h0| moves toward increasing
    step duration.
    """
    cfg = cfg or ContinuationConfig()
    if not seed.is_passive:
        raise SeedError("passive family seed must have zero torque coefficients")

    def make_system():
        def system(y):
            ev = evaluate_step(
                TrajectoryPoint(y[:4], y[4], np.zeros(3)), params, cfg.n_substeps
            )
            system.last_eval = ev
            return ev.P, ev.dP_dc[:, :5]

        system.last_eval = None
        return system

    y0 = np.concatenate([seed.x0, [seed.tau]])
    ev0 = evaluate_step(seed, params, cfg.n_substeps)
    if float(np.abs(ev0.P).max()) > cfg.tol:
        raise SeedError(
            f"seed periodicity residual {float(np.abs(ev0.P).max()):.2e} exceeds tol"
        )
    _, jac0 = make_system()(y0)
    orientation = np.zeros(5)
    orientation[4] = 1.0
    t0 = compute_tangent(jac0, orientation=orientation)
    seed_record = _passive_record(slice_id, 0, 0, y0, ev0, ev0.gamma_raw)

    def make_branch(direction):
        prev_gamma = [ev0.gamma_raw]
        system = make_system()
        branch = CurveBranch(direction, [], [], [], [], "")

        def accept(z_new, r_new, jac_new, t_new, stats, h):
            ev = system.last_eval
            gamma = unwrap_angle(ev.gamma_raw, prev_gamma[0])
            prev_gamma[0] = gamma
            rec = _passive_record(slice_id, direction, len(branch.points) + 1, z_new, ev, gamma)
            branch.points.append(rec)
            branch.tangents.append(t_new.copy())
            branch.step_sizes.append(h)
            branch.corrector_stats.append(stats)

        def report(label, idx, z_new, stats, h, jac_new):
            if progress is not None:
                rec = branch.points[-1]
                progress(
                    f"[{label}] {idx:03d} gamma={rec.gamma_deg:+8.3f}deg "
                    f"v={rec.v_avg:6.4f} tau={rec.tau:6.4f} h={h:+.4f} it={stats.iterations}"
                )

        term = _trace_branch(
            system,
            y0,
            t0,
            direction * abs(cfg.h0),
            cfg,
            accept,
            progress=report,
            label=f"{slice_id}/{'+' if direction > 0 else '-'}",
        )
        branch.termination = term
        return branch

    minus = make_branch(-1)
    plus = make_branch(+1)
    return FamilyTrace(seed_record=seed_record, seed_tangent=t0, branches=(minus, plus))


def locate_passive_speed(trace: FamilyTrace, v_target: float, params: ModelParams,
                         cfg: ContinuationConfig | None = None) -> TrajectoryPoint:
    """Member of a traced passive family with the requested average speed.

    The family can fold, so several members may share one speed; of all
    consecutive record pairs that bracket the target this picks the one
    nearest the seed along the curve, then polishes it with a square
    Newton solve on periodicity plus the speed pin.  Raises FinderError
    when no bracket exists.
    """
    cfg = cfg or ContinuationConfig()
    records = trace.all_records()
    seed_pos = len(trace.branches[0].points)
    best = None
    for i, (a, b) in enumerate(zip(records[:-1], records[1:])):
        if (a.v_avg - v_target) * (b.v_avg - v_target) <= 0.0:
            dist = min(abs(i - seed_pos), abs(i + 1 - seed_pos))
            if best is None or dist < best[0]:
                best = (dist, a, b)
    if best is None:
        raise FinderError(
            f"family speeds do not bracket v = {v_target} "
            f"(range {min(r.v_avg for r in records):.3f} to "
            f"{max(r.v_avg for r in records):.3f})"
        )
    _, a, b = best
    y = np.concatenate([0.5 * (a.x0 + b.x0), [0.5 * (a.tau + b.tau)]])
    return _pin_passive_speed(y, v_target, params, cfg)


def _pin_passive_speed(y, v_target, params, cfg) -> TrajectoryPoint:
    for _ in range(cfg.newton_max_iters):
        ev = evaluate_step(TrajectoryPoint(y[:4], y[4], np.zeros(3)), params, cfg.n_substeps)
        r = np.concatenate([ev.P, [ev.v_avg - v_target]])
        if float(np.abs(r).max()) <= cfg.tol:
            return TrajectoryPoint(y[:4], y[4], np.zeros(3))
        jac = np.vstack([ev.dP_dc[:, :5], ev.dv_dc[:5]])
        y = y + np.linalg.solve(jac, -r)
    raise FinderError(f"speed pinning stalled (residual {float(np.abs(r).max()):.2e})")


# -- optimality slices -----------------------------------------------------


def _slice_record(spec: SliceSpec, branch, index, z, ev: StepEval, gamma_unwrapped,
                  res_m, cond) -> GaitRecord:
    sign = {1: "+", -1: "-", 0: "0"}[branch]
    if branch == 0:
        gait_id = f"{spec.slice_id}/seed"
    else:
        gait_id = f"{spec.slice_id}/{sign}{index:03d}"
    c, lam, eps = z[:8], z[8:14], float(z[14])
    stat = _stationarity(ev, lam)
    return GaitRecord(
        gait_id=gait_id,
        slice_id=spec.slice_id,
        branch=branch,
        index=index,
        epsilon=eps,
        x0=c[:4].copy(),
        tau=float(c[4]),
        a=c[5:8].copy(),
        lam=lam.copy(),
        gamma_rad=float(gamma_unwrapped),
        gamma_deg=float(np.degrees(gamma_unwrapped)),
        v_avg=float(ev.v_avg),
        cost=float(cost_closed_form(TrajectoryPoint(c[:4], c[4], c[5:8]))),
        res_periodicity=float(np.abs(ev.P).max()),
        res_stationarity=float(np.abs(stat).max()),
        res_homotopy=float(res_m),
        classification=classify_gait(float(gamma_unwrapped)),
        condition_number=float(cond),
    )


def _refine_epsilon_zero(spec, z_lo, t, h_hi, z_hi, system14, cfg, prev_gamma, params):
    """Distinguished record at epsilon = 0, found between two accepted
    points whose epsilon components straddle zero.

    Regula falsi on the arclength offset brings |epsilon| under 1e-4; the
    square 14-equation optimality system with epsilon frozen at zero then
    polishes the point to full tolerance.
    """
    lo, hi = 0.0, float(h_hi)
    f_lo, f_hi = float(z_lo[14]), float(z_hi[14])
    z_mid = z_hi
    for _ in range(40):
        sigma = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        sigma = min(max(sigma, lo + 1e-6 * (hi - lo)), hi - 1e-6 * (hi - lo))
        z_mid, _ = correct(z_lo + sigma * t, z_lo, t, sigma, system14, cfg)
        f_mid = float(z_mid[14])
        if abs(f_mid) <= 1e-4:
            break
        # Illinois weighting on the retained endpoint keeps the sequence
        # from stalling on one side
        if f_mid * f_lo < 0.0:
            hi, f_hi = sigma, f_mid
            f_lo *= 0.5
        else:
            lo, f_lo = sigma, f_mid
            f_hi *= 0.5
    # square polish with epsilon pinned to zero
    w = z_mid[:14].copy()
    p_des = spec.desired_point
    for _ in range(cfg.newton_max_iters):
        r, jac, ev = foc_system(
            TrajectoryPoint.from_vector(w[:8]), w[8:14], p_des, params,
            prev_gamma=prev_gamma, n_steps=cfg.n_substeps,
        )
        if float(np.abs(r).max()) <= cfg.tol:
            break
        w = w + np.linalg.solve(jac, -r)
    else:
        raise FinderError(
            f"epsilon=0 polish stalled (residual {float(np.abs(r).max()):.2e})"
        )
    gamma = unwrap_angle(ev.gamma_raw, prev_gamma)
    cond = float(np.linalg.cond(jac))
    z0 = np.concatenate([w, [0.0]])
    rec = _slice_record(spec, 0, 0, z0, ev, gamma, 0.0, cond)
    rec.gait_id = f"{spec.slice_id}/eps0"
    return rec, AugmentedPoint.from_vector(z0)


def trace_slice(seed: AugmentedPoint, spec: SliceSpec, params: ModelParams,
                cfg: ContinuationConfig | None = None, progress=None,
                threads: int = 1) -> SliceTrace:
    """Trace one slice of the optimal-gait manifold through its seed.

    The seed sits at epsilon = 1, where the homotopy residual vanishes
    identically; it must itself be a converged gait (periodic, and
    stationary under its multipliers) or SeedError is raised.  Both
    branches run the arclength engine; the branch started with -|h0|
    moves toward decreasing epsilon.  A sign change of epsilon inside
    either branch is refined into a distinguished record satisfying the
    plain first-order system at the desired operating point.
    """
    cfg = cfg or ContinuationConfig()
    p_des = spec.desired_point
    seed_res = seed_foc_residual(seed, p_des, params, n_steps=cfg.n_substeps)
    seed_ev = evaluate_step(seed.c, params, cfg.n_substeps)
    res_p = float(np.abs(seed_res[:4]).max())
    res_stat = float(np.abs(seed_res[6:]).max())
    if res_p > cfg.tol:
        raise SeedError(f"seed periodicity residual {res_p:.2e} exceeds tol")
    if res_stat > 10.0 * cfg.tol:
        raise SeedError(f"seed stationarity residual {res_stat:.2e} exceeds 10x tol")
    if abs(seed.epsilon - 1.0) > 1e-12:
        raise SeedError("slice seed must sit at epsilon = 1")
    gamma_seed = seed_ev.gamma_raw

    def make_system(prev_gamma_cell):
        def system(z):
            r, jac, ev = homotopy_system(
                AugmentedPoint.from_vector(z),
                seed,
                p_des,
                params,
                seed_residual=seed_res,
                prev_gamma=prev_gamma_cell[0],
                n_steps=cfg.n_substeps,
            )
            system.last_eval = ev
            return r, jac

        system.last_eval = None
        return system

    z_seed = AugmentedPoint(seed.c, seed.lam, 1.0).as_vector()
    seed_cell = [gamma_seed]
    seed_system = make_system(seed_cell)
    _, jac_seed = seed_system(z_seed)
    orientation = np.zeros(15)
    orientation[14] = -1.0
    t0 = compute_tangent(jac_seed, orientation=orientation)
    cond_seed = float(np.linalg.cond(jac_seed[:, :14]))
    seed_record = _slice_record(spec, 0, 0, z_seed, seed_ev, gamma_seed, 0.0, cond_seed)

    distinguished = []

    def make_branch(direction):
        prev_cell = [gamma_seed]
        system = make_system(prev_cell)
        branch = CurveBranch(direction, [], [], [], [], "")

        def accept(z_new, r_new, jac_new, t_new, stats, h):
            ev = system.last_eval
            gamma = unwrap_angle(ev.gamma_raw, prev_cell[0])
            prev_cell[0] = gamma
            cond = float(np.linalg.cond(jac_new[:, :14]))
            rec = _slice_record(
                spec, direction, len(branch.points) + 1, z_new, ev, gamma,
                float(np.abs(r_new).max()), cond,
            )
            branch.points.append(rec)
            branch.tangents.append(t_new.copy())
            branch.step_sizes.append(h)
            branch.corrector_stats.append(stats)

        def crossing(z_prev, t_used, h_used, z_new):
            rec, point = _refine_epsilon_zero(
                spec, z_prev, t_used, h_used, z_new, system, cfg, prev_cell[0], params
            )
            distinguished.append((rec, point))
            if progress is not None:
                progress(
                    f"[{spec.slice_id}/eps0] gamma={rec.gamma_deg:+8.3f}deg "
                    f"v={rec.v_avg:6.4f} tau={rec.tau:6.4f} J={rec.cost:.3e}"
                )

        def report(label, idx, z_new, stats, h, jac_new):
            if progress is not None:
                rec = branch.points[-1]
                progress(
                    f"[{label}] {idx:03d} eps={rec.epsilon:+7.4f} "
                    f"gamma={rec.gamma_deg:+8.3f}deg v={rec.v_avg:6.4f} "
                    f"tau={rec.tau:6.4f} J={rec.cost:.3e} h={h:+.4f} "
                    f"it={stats.iterations} cond={rec.condition_number:.1e}"
                )

        term = _trace_branch(
            system,
            z_seed,
            t0,
            direction * abs(cfg.h0),
            cfg,
            accept,
            epsilon_index=14,
            crossing=crossing,
            progress=report,
            label=f"{spec.slice_id}/{'+' if direction > 0 else '-'}",
        )
        branch.termination = term
        return branch

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=2) as pool:
            f_minus = pool.submit(make_branch, -1)
            f_plus = pool.submit(make_branch, +1)
            minus, plus = f_minus.result(), f_plus.result()
    else:
        minus = make_branch(-1)
        plus = make_branch(+1)

    return SliceTrace(
        spec=spec,
        seed=seed,
        seed_record=seed_record,
        seed_tangent=t0,
        branches=(minus, plus),
        distinguished=[rec for rec, _ in distinguished],
    )


def distinguished_points(trace: SliceTrace):
    """(record, AugmentedPoint) pairs for the refined epsilon = 0 gaits.

    Exposed separately because the records list in the trace carries only
    the records; chaining a second slice needs the full point.
    """
    # rebuilt from the records: c and lam are stored losslessly
    out = []
    for rec in trace.distinguished:
        point = AugmentedPoint(c=rec.trajectory_point, lam=rec.lam, epsilon=0.0)
        out.append((rec, point))
    return out
