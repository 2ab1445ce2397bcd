"""Periodicity, operating-point, cost, and first-order-optimality maps.

The maps combine into the residual whose root curves the continuation
traces:

* P(c) = x_f - flip(x0), zero for a periodic step (a gait);
* Phi_p(c) = (gamma(c) - gamma_des, v_avg(c) - v_des), the operating-point
  mismatch, with slope and speed read off the contact-to-contact
  displacement at the end of the step;
* J(c), the integral of the squared hip torque;
* the stationarity condition grad J + (dP/dc)^T lam_P + (dPhi/dc)^T lam_Phi
  of the equality-constrained problem min J s.t. P = 0, Phi_p = 0.

P, Phi, and the stationarity block stack into a 14-dimensional residual in
the unknowns (c, lam).  The homotopy deformation subtracts epsilon times
the residual frozen at a seed point, which leaves the seed an exact root
at epsilon = 1 and recovers the target problem at epsilon = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import FLIP, ModelParams, TrajectoryPoint, control_basis, flip_map, foot_positions
from .simulate import DEFAULT_SUBSTEPS, Sensitivities, StepResult, integrate_step, integrate_with_sensitivities

__all__ = [
    "OperatingPoint",
    "AugmentedPoint",
    "DegenerateStepError",
    "unwrap_angle",
    "periodicity_residual",
    "slope_and_speed",
    "cost",
    "cost_closed_form",
    "cost_gradient",
    "operating_residual",
    "foc_residual",
    "foc_system",
    "homotopy_residual",
    "homotopy_jacobian",
    "homotopy_system",
    "StepEval",
    "evaluate_step",
]

N_UNKNOWNS = 15  # c (8) + lam (6) + epsilon
N_RESIDUAL = 14  # P (4) + Phi (2) + stationarity (8)

# Per-coordinate step for the finite-difference rows of the Jacobian
# (second derivatives of the step map enter only there).
FD_STEP = 1e-5

DEGENERATE_STEP_LENGTH = 1e-10


class DegenerateStepError(RuntimeError):
    """Step displacement too short to define a slope."""


@dataclass(frozen=True)
class OperatingPoint:
    """Target pair (slope gamma in radians, average speed along the slope).

    gamma may live outside (-pi, pi] when it comes from an unwrapped curve.
    """

    gamma: float
    v_avg: float

    def as_array(self) -> np.ndarray:
        return np.array([self.gamma, self.v_avg])


@dataclass(frozen=True)
class AugmentedPoint:
    """Unknown of the continuation: trajectory point, multipliers, epsilon."""

    c: TrajectoryPoint
    lam: np.ndarray
    epsilon: float

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float).reshape(6)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    def as_vector(self) -> np.ndarray:
        """(q1, q2, dq1, dq2, tau, a1..a3, lam1..lam6, epsilon)."""
        return np.concatenate([self.c.as_vector(), self.lam, [self.epsilon]])

    @staticmethod
    def from_vector(v) -> "AugmentedPoint":
        v = np.asarray(v, dtype=float).reshape(N_UNKNOWNS)
        return AugmentedPoint(c=TrajectoryPoint.from_vector(v[:8]), lam=v[8:14], epsilon=v[14])


def unwrap_angle(angle: float, reference: float | None) -> float:
    """Shift angle by a multiple of 2 pi to land nearest the reference."""
    if reference is None:
        return float(angle)
    return float(angle + 2.0 * np.pi * np.round((reference - angle) / (2.0 * np.pi)))


# -- step evaluation with first derivatives --------------------------------


@dataclass
class StepEval:
    """Everything the optimality residual needs from one integrated step."""

    c: TrajectoryPoint
    result: StepResult
    sens: Sensitivities
    P: np.ndarray  # (4,)
    displacement: np.ndarray  # (2,) contact-to-contact
    gamma_raw: float  # atan2 of the displacement, in (-pi, pi]
    v_avg: float
    dP_dc: np.ndarray  # (4, 8)
    dgamma_dc: np.ndarray  # (8,)
    dv_dc: np.ndarray  # (8,)


def evaluate_step(c: TrajectoryPoint, p: ModelParams, n_steps: int = DEFAULT_SUBSTEPS) -> StepEval:
    """Integrate one step and assemble P, slope, speed, and their gradients."""
    result, sens = integrate_with_sensitivities(c, p, n_steps)
    P = result.x_f - flip_map(c.x0)
    dP_dc = np.column_stack([sens.d_xf_d_x0 - FLIP, sens.d_xf_d_tau, sens.d_xf_d_a])

    _, _, swing = foot_positions(result.x_end_pre, p)
    d = swing
    nd = float(np.hypot(d[0], d[1]))
    if nd < DEGENERATE_STEP_LENGTH * p.leg_length:
        raise DegenerateStepError(f"step displacement {nd:.3e} is degenerate")
    gamma_raw = float(np.arctan2(d[1], d[0]))
    v_avg = nd / c.tau

    # d(displacement)/d(x_pre): the swing-foot position depends on q only.
    q1, q2 = result.x_end_pre[0], result.x_end_pre[1]
    l = p.leg_length
    dd_dxpre = np.zeros((2, 4))
    dd_dxpre[:, 0] = (-l * np.cos(q1), -l * np.sin(q1))
    dd_dxpre[:, 1] = (l * np.cos(q2), l * np.sin(q2))
    X_pre = np.column_stack([sens.d_xpre_d_x0, sens.d_xpre_d_tau, sens.d_xpre_d_a])
    dd_dc = dd_dxpre @ X_pre  # (2, 8)

    dgamma_dd = np.array([-d[1], d[0]]) / nd**2
    dv_dd = d / (nd * c.tau)
    dgamma_dc = dgamma_dd @ dd_dc
    dv_dc = dv_dd @ dd_dc
    dv_dc[4] += -nd / c.tau**2  # explicit tau in v = |d|/tau

    return StepEval(
        c=c,
        result=result,
        sens=sens,
        P=P,
        displacement=d,
        gamma_raw=gamma_raw,
        v_avg=v_avg,
        dP_dc=dP_dc,
        dgamma_dc=dgamma_dc,
        dv_dc=dv_dc,
    )


# -- the individual maps ---------------------------------------------------


def periodicity_residual(c: TrajectoryPoint, p: ModelParams, n_steps: int = DEFAULT_SUBSTEPS) -> np.ndarray:
    """P(c) = x_f - flip(x0); zero exactly on gaits."""
    result = integrate_step(c, p, n_steps)
    return result.x_f - flip_map(c.x0)


def slope_and_speed(
    c: TrajectoryPoint,
    p: ModelParams,
    prev_gamma: float | None = None,
    n_steps: int = DEFAULT_SUBSTEPS,
) -> OperatingPoint:
    """Slope and average speed of the step, from the displacement between
    the old and new contact points at t = tau.

    The slope angle is unwrapped to be continuous with prev_gamma when one
    is given; otherwise it lies in (-pi, pi].
    """
    result = integrate_step(c, p, n_steps)
    _, _, swing = foot_positions(result.x_end_pre, p)
    nd = float(np.hypot(swing[0], swing[1]))
    if nd < DEGENERATE_STEP_LENGTH * p.leg_length:
        raise DegenerateStepError(f"step displacement {nd:.3e} is degenerate")
    gamma = unwrap_angle(float(np.arctan2(swing[1], swing[0])), prev_gamma)
    return OperatingPoint(gamma=gamma, v_avg=nd / c.tau)


def cost(c: TrajectoryPoint, n_steps: int = DEFAULT_SUBSTEPS) -> float:
    """J = integral of u(t)^2 over the step, by composite Simpson quadrature
    on the integration grid.

    For the Fourier torque this quadrature is exact up to rounding as long
    as the grid resolves the first harmonic, so it agrees with the closed
    form tau (a1^2/4 + a2^2/2 + a3^2/2) to full precision.
    """
    n = int(n_steps)
    if n % 2 != 0:
        raise ValueError("Simpson quadrature needs an even substep count")
    t = np.arange(n + 1) / n * c.tau
    u = control_basis(t, c.tau) @ c.a
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    h = c.tau / n
    return float(h / 3.0 * (w @ u**2))


def cost_closed_form(c: TrajectoryPoint) -> float:
    """Exact value of the torque-squared integral for the Fourier input."""
    a1, a2, a3 = c.a
    return c.tau * (a1**2 / 4.0 + a2**2 / 2.0 + a3**2 / 2.0)


def cost_gradient(c: TrajectoryPoint) -> np.ndarray:
    """Gradient of J with respect to (x0, tau, a); zero in the state slots."""
    a1, a2, a3 = c.a
    g = np.zeros(8)
    g[4] = a1**2 / 4.0 + a2**2 / 2.0 + a3**2 / 2.0
    g[5] = c.tau * a1 / 2.0
    g[6] = c.tau * a2
    g[7] = c.tau * a3
    return g


def operating_residual(
    c: TrajectoryPoint,
    p_target: OperatingPoint,
    p: ModelParams,
    prev_gamma: float | None = None,
    n_steps: int = DEFAULT_SUBSTEPS,
) -> np.ndarray:
    """Phi_p(c) = (gamma(c) - gamma_target, v_avg(c) - v_target)."""
    actual = slope_and_speed(c, p, prev_gamma, n_steps)
    return np.array([actual.gamma - p_target.gamma, actual.v_avg - p_target.v_avg])


# -- stacked optimality residual ------------------------------------------


def _stationarity(ev: StepEval, lam: np.ndarray) -> np.ndarray:
    """grad J + (dP/dc)^T lam_P + (dPhi/dc)^T lam_Phi, an 8-vector."""
    dPhi_dc = np.vstack([ev.dgamma_dc, ev.dv_dc])
    return cost_gradient(ev.c) + ev.dP_dc.T @ lam[:4] + dPhi_dc.T @ lam[4:]


def _foc_from_eval(ev: StepEval, lam: np.ndarray, p_target: OperatingPoint, prev_gamma) -> np.ndarray:
    gamma = unwrap_angle(ev.gamma_raw, prev_gamma)
    out = np.empty(N_RESIDUAL)
    out[:4] = ev.P
    out[4] = gamma - p_target.gamma
    out[5] = ev.v_avg - p_target.v_avg
    out[6:] = _stationarity(ev, lam)
    return out


def foc_residual(
    c: TrajectoryPoint,
    lam,
    p_target: OperatingPoint,
    p: ModelParams,
    prev_gamma: float | None = None,
    n_steps: int = DEFAULT_SUBSTEPS,
) -> np.ndarray:
    """First-order-optimality residual, a 14-vector: P, Phi, stationarity."""
    lam = np.asarray(lam, dtype=float).reshape(6)
    ev = evaluate_step(c, p, n_steps)
    return _foc_from_eval(ev, lam, p_target, prev_gamma)


def foc_system(
    c: TrajectoryPoint,
    lam,
    p_target: OperatingPoint,
    p: ModelParams,
    prev_gamma: float | None = None,
    n_steps: int = DEFAULT_SUBSTEPS,
):
    """Residual and 14x14 Jacobian of the optimality system in (c, lam).

    The P and Phi rows and all lam-columns are assembled from the step
    sensitivities.  The c-block of the stationarity rows carries second
    derivatives of the step map and is computed by central finite
    differences of the analytic stationarity vector, with per-coordinate
    steps 1e-5 * max(1, |c_i|).
    """
    lam = np.asarray(lam, dtype=float).reshape(6)
    ev = evaluate_step(c, p, n_steps)
    residual = _foc_from_eval(ev, lam, p_target, prev_gamma)

    dPhi_dc = np.vstack([ev.dgamma_dc, ev.dv_dc])
    jac = np.zeros((N_RESIDUAL, N_RESIDUAL))
    jac[:4, :8] = ev.dP_dc
    jac[4:6, :8] = dPhi_dc
    # Stationarity rows: linear in lam with exact coefficient blocks.
    jac[6:, 8:12] = ev.dP_dc.T
    jac[6:, 12:] = dPhi_dc.T

    cvec = c.as_vector()
    for i in range(8):
        h = FD_STEP * max(1.0, abs(cvec[i]))
        e = np.zeros(8)
        e[i] = h
        ev_plus = evaluate_step(TrajectoryPoint.from_vector(cvec + e), p, n_steps)
        ev_minus = evaluate_step(TrajectoryPoint.from_vector(cvec - e), p, n_steps)
        jac[6:, i] = (_stationarity(ev_plus, lam) - _stationarity(ev_minus, lam)) / (2.0 * h)

    return residual, jac, ev


# -- homotopy --------------------------------------------------------------


def seed_foc_residual(
    seed: AugmentedPoint,
    p_des: OperatingPoint,
    p: ModelParams,
    n_steps: int = DEFAULT_SUBSTEPS,
) -> np.ndarray:
    """The frozen residual of the seed, the epsilon-weighted offset of the
    homotopy.  For a passive seed only the operating rows are nonzero."""
    return foc_residual(seed.c, seed.lam, p_des, p, prev_gamma=None, n_steps=n_steps)


def homotopy_residual(
    z: AugmentedPoint,
    seed: AugmentedPoint,
    p_des: OperatingPoint,
    p: ModelParams,
    seed_residual: np.ndarray | None = None,
    prev_gamma: float | None = None,
    n_steps: int = DEFAULT_SUBSTEPS,
) -> np.ndarray:
    """M_eps(c, lam) = R(c, lam) - eps * R(seed), R the optimality residual
    at the target operating point.  The seed is an exact root at eps = 1."""
    if seed_residual is None:
        seed_residual = seed_foc_residual(seed, p_des, p, n_steps)
    r = foc_residual(z.c, z.lam, p_des, p, prev_gamma, n_steps)
    return r - z.epsilon * seed_residual


def homotopy_system(
    z: AugmentedPoint,
    seed: AugmentedPoint,
    p_des: OperatingPoint,
    p: ModelParams,
    seed_residual: np.ndarray | None = None,
    prev_gamma: float | None = None,
    n_steps: int = DEFAULT_SUBSTEPS,
):
    """Residual and 14x15 Jacobian of the homotopy map in (c, lam, eps).

    The eps-column is exactly minus the frozen seed residual.
    """
    if seed_residual is None:
        seed_residual = seed_foc_residual(seed, p_des, p, n_steps)
    r, jac_cl, ev = foc_system(z.c, z.lam, p_des, p, prev_gamma, n_steps)
    residual = r - z.epsilon * seed_residual
    jac = np.column_stack([jac_cl, -seed_residual])
    return residual, jac, ev


def homotopy_jacobian(
    z: AugmentedPoint,
    seed: AugmentedPoint,
    p_des: OperatingPoint,
    p: ModelParams,
    seed_residual: np.ndarray | None = None,
    prev_gamma: float | None = None,
    n_steps: int = DEFAULT_SUBSTEPS,
) -> np.ndarray:
    """14x15 Jacobian of homotopy_residual at z."""
    _, jac, _ = homotopy_system(z, seed, p_des, p, seed_residual, prev_gamma, n_steps)
    return jac
