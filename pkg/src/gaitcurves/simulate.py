"""Hybrid step integration and first-order sensitivities.

A step is integrated with the classical explicit RK4 scheme on a fixed grid
of equal substeps over [0, tau] (30 by default), with the hip torque
evaluated at the RK4 stage times.  The plastic impact is applied once, at
t = tau.

Sensitivities are the exact derivatives of this discrete map: each RK4
stage is differentiated through the chain rule, carrying d(state)/d(x0,
tau, a) along the trajectory, then composed with the impact Jacobian.
Because the stage times are fixed fractions of tau, the substep length
h = tau/n carries all of the tau-dependence, including the dependence of
the Fourier basis on the step duration.  The result agrees with finite
differences of integrate_step to rounding error, not just to O(h^2) model
error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import (
    ModelParams,
    TrajectoryPoint,
    TRANSVERSALITY_MIN_RATE,
    control_basis,
    impact_jacobian,
    impact_map,
    transversality_rate,
    vector_field,
    vector_field_jacobian,
)

__all__ = [
    "DEFAULT_SUBSTEPS",
    "IntegrationBlowupError",
    "StepResult",
    "Sensitivities",
    "integrate_step",
    "step_sensitivities",
    "integrate_with_sensitivities",
    "write_trajectory_csv",
]

DEFAULT_SUBSTEPS = 30


class IntegrationBlowupError(RuntimeError):
    """Raised when the state stops being finite during a step."""

    def __init__(self, substep: int):
        self.substep = substep
        super().__init__(f"state became non-finite at substep {substep}")


@dataclass
class StepResult:
    """Integrated step: pre-impact end state, post-impact state, and the
    sampled trajectory at the substep nodes (n+1 rows, node 0 is x0)."""

    x_end_pre: np.ndarray
    x_f: np.ndarray
    times: np.ndarray
    trajectory: np.ndarray
    controls: np.ndarray
    transversality_rate: float
    transversality_ok: bool


@dataclass
class Sensitivities:
    """Derivatives of the step with respect to (x0, tau, a).

    The d_xf_* blocks are for the post-impact state; the d_xpre_* blocks
    for the state at t = tau just before impact.  f_end_pre is the vector
    field at the pre-impact state (useful for time derivatives), and
    impact_jac the impact-map Jacobian there.
    """

    d_xf_d_x0: np.ndarray
    d_xf_d_tau: np.ndarray
    d_xf_d_a: np.ndarray
    d_xpre_d_x0: np.ndarray
    d_xpre_d_tau: np.ndarray
    d_xpre_d_a: np.ndarray
    x_end_pre: np.ndarray
    f_end_pre: np.ndarray
    impact_jac: np.ndarray


def _check_finite(x, i):
    if not np.all(np.isfinite(x)):
        raise IntegrationBlowupError(i)


def integrate_step(c: TrajectoryPoint, p: ModelParams, n_steps: int = DEFAULT_SUBSTEPS) -> StepResult:
    """Integrate one step of the hybrid dynamics.

    RK4 with n_steps equal substeps on [0, tau]; impact applied at the end.
    """
    n = int(n_steps)
    if n < 1:
        raise ValueError("n_steps must be at least 1")
    h = c.tau / n
    a = c.a
    x = c.x0.copy()
    traj = np.empty((n + 1, 4))
    traj[0] = x
    # Basis at the substep fractions; the half-step values sit in between.
    full = control_basis(np.arange(n + 1) / n * c.tau, c.tau)
    half = control_basis((np.arange(n) + 0.5) / n * c.tau, c.tau)
    # Divergence shows up as an explicit IntegrationBlowupError; the
    # intermediate overflow warnings on the way there are just noise.
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            u1 = full[i] @ a
            u_mid = half[i] @ a
            u4 = full[i + 1] @ a
            k1 = vector_field(x, u1, p)
            k2 = vector_field(x + 0.5 * h * k1, u_mid, p)
            k3 = vector_field(x + 0.5 * h * k2, u_mid, p)
            k4 = vector_field(x + h * k3, u4, p)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            _check_finite(x, i + 1)
            traj[i + 1] = x

    rate = transversality_rate(x, p)
    ok = bool(np.isfinite(rate) and rate < -TRANSVERSALITY_MIN_RATE * p.speed_scale)
    x_f = impact_map(x, p)
    return StepResult(
        x_end_pre=x,
        x_f=x_f,
        times=np.arange(n + 1) * h,
        trajectory=traj,
        controls=full @ a,
        transversality_rate=rate,
        transversality_ok=ok,
    )


def integrate_with_sensitivities(
    c: TrajectoryPoint, p: ModelParams, n_steps: int = DEFAULT_SUBSTEPS
):
    """One pass producing both the StepResult and the Sensitivities.

    Carries X = d(state)/d(x0, tau, a) as a 4x8 matrix along the substeps.
    Column layout: x0 (4), tau (1), a (3).
    """
    n = int(n_steps)
    if n < 1:
        raise ValueError("n_steps must be at least 1")
    h = c.tau / n
    a = c.a
    x = c.x0.copy()
    X = np.zeros((4, 8))
    X[:, :4] = np.eye(4)
    dh = np.zeros(8)
    dh[4] = 1.0 / n  # h = tau/n

    traj = np.empty((n + 1, 4))
    traj[0] = x

    s_full = np.arange(n + 1) / n
    s_half = (np.arange(n) + 0.5) / n
    # control_basis at fixed fractions of tau; tau itself cancels out of the
    # basis arguments, so du/dtau = 0 at the stage times.
    basis_full = control_basis(s_full, 1.0)
    basis_half = control_basis(s_half, 1.0)

    du = np.zeros((3, 8))  # du/d(x0,tau,a) for the three distinct stage times
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            b1, bm, b4 = basis_full[i], basis_half[i], basis_full[i + 1]
            u1, u_mid, u4 = b1 @ a, bm @ a, b4 @ a
            du[0, 5:] = b1
            du[1, 5:] = bm
            du[2, 5:] = b4

            k1 = vector_field(x, u1, p)
            A1, bu1 = vector_field_jacobian(x, u1, p)
            dk1 = A1 @ X + np.outer(bu1, du[0])

            xs = x + 0.5 * h * k1
            dxs = X + 0.5 * h * dk1 + 0.5 * np.outer(k1, dh)
            k2 = vector_field(xs, u_mid, p)
            A2, bu2 = vector_field_jacobian(xs, u_mid, p)
            dk2 = A2 @ dxs + np.outer(bu2, du[1])

            xs = x + 0.5 * h * k2
            dxs = X + 0.5 * h * dk2 + 0.5 * np.outer(k2, dh)
            k3 = vector_field(xs, u_mid, p)
            A3, bu3 = vector_field_jacobian(xs, u_mid, p)
            dk3 = A3 @ dxs + np.outer(bu3, du[1])

            xs = x + h * k3
            dxs = X + h * dk3 + np.outer(k3, dh)
            k4 = vector_field(xs, u4, p)
            A4, bu4 = vector_field_jacobian(xs, u4, p)
            dk4 = A4 @ dxs + np.outer(bu4, du[2])

            ksum = k1 + 2.0 * k2 + 2.0 * k3 + k4
            x = x + (h / 6.0) * ksum
            X = X + (h / 6.0) * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4) + np.outer(ksum / 6.0, dh)
            _check_finite(x, i + 1)
            traj[i + 1] = x

    u_end = basis_full[n] @ a
    f_pre = vector_field(x, u_end, p)
    D = impact_jacobian(x, p)
    X_post = D @ X

    rate = transversality_rate(x, p)
    ok = bool(np.isfinite(rate) and rate < -TRANSVERSALITY_MIN_RATE * p.speed_scale)
    x_f = impact_map(x, p)

    result = StepResult(
        x_end_pre=x,
        x_f=x_f,
        times=np.arange(n + 1) * h,
        trajectory=traj,
        controls=basis_full @ a,
        transversality_rate=rate,
        transversality_ok=ok,
    )
    sens = Sensitivities(
        d_xf_d_x0=X_post[:, :4],
        d_xf_d_tau=X_post[:, 4],
        d_xf_d_a=X_post[:, 5:],
        d_xpre_d_x0=X[:, :4],
        d_xpre_d_tau=X[:, 4],
        d_xpre_d_a=X[:, 5:],
        x_end_pre=x,
        f_end_pre=f_pre,
        impact_jac=D,
    )
    return result, sens


def step_sensitivities(
    c: TrajectoryPoint, p: ModelParams, n_steps: int = DEFAULT_SUBSTEPS
) -> Sensitivities:
    """Derivatives of the step map with respect to (x0, tau, a)."""
    _, sens = integrate_with_sensitivities(c, p, n_steps)
    return sens


def write_trajectory_csv(path, result: StepResult):
    """Dump the sampled step to CSV with columns t, q1, q2, dq1, dq2, u."""
    rows = np.column_stack([result.times, result.trajectory, result.controls])
    with open(path, "w", encoding="utf-8") as f:
        f.write("t,q1,q2,dq1,dq2,u\n")
        for row in rows:
            f.write(",".join(repr(float(v)) for v in row) + "\n")
