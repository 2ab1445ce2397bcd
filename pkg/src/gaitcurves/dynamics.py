"""Compass-gait walker model: parameters, control signal, continuous dynamics,
plastic impact, and the leg-flip map.

Conventions used throughout:

* Minimal coordinates q = (q1, q2) are the absolute angles of the stance and
  swing leg, measured counterclockwise from the vertical through the stance
  foot.  The stance foot is pinned at the origin of a gravity-aligned frame.
* The state is x = (q1, q2, dq1, dq2).
* The robot is three point masses: m_H at the hip, and one mass m_l per leg
  located a distance b_eff below the hip along the leg.
* A single actuator u acts at the hip, pushing the legs apart with equal and
  opposite torques: generalized forces (-u, +u).
* The impact map changes velocities only.  Leg relabeling is a separate map
  (flip_map) so that both pieces can be tested on their own.

All functions broadcast over a leading batch dimension where that is cheap to
support; a state array of shape (4,) or (N, 4) is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "ModelParams",
    "TrajectoryPoint",
    "eval_control",
    "control_basis",
    "vector_field",
    "vector_field_jacobian",
    "impact_map",
    "impact_velocity_map",
    "impact_jacobian",
    "flip_map",
    "FLIP",
    "foot_positions",
    "swing_foot_velocity",
    "kinetic_energy",
    "potential_energy",
    "total_energy",
    "transversality_rate",
]

# Hip torque enters the two absolute-angle equations with opposite signs:
# a positive u accelerates the swing leg forward and pushes back on the
# stance leg.
B_TORQUE = np.array([-1.0, 1.0])

# Minimum swing-foot approach speed (in units of the model's speed scale)
# for an impact to count as transversal.
TRANSVERSALITY_MIN_RATE = 1e-8


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the walker plus derived scales.

    ``leg_com_from_hip`` is the distance of each leg's point mass from the
    hip, measured along the leg toward the foot.
    """

    leg_length: float = 1.0
    hip_mass: float = 10.0
    leg_mass: float = 5.0
    leg_com_from_hip: float = 0.5
    gravity: float = 9.81

    def __post_init__(self):
        if not (self.leg_length > 0):
            raise ValueError("leg_length must be positive")
        if not (self.gravity > 0):
            raise ValueError("gravity must be positive")
        if self.hip_mass < 0:
            raise ValueError("hip_mass must be nonnegative")
        if not (self.leg_mass > 0):
            raise ValueError("leg_mass must be positive")
        if not (0.0 < self.leg_com_from_hip <= self.leg_length):
            raise ValueError("leg_com_from_hip must lie in (0, leg_length]")

    # -- derived scales ---------------------------------------------------

    @property
    def total_mass(self) -> float:
        return 2.0 * self.leg_mass + self.hip_mass

    @property
    def time_scale(self) -> float:
        return float(np.sqrt(self.leg_length / self.gravity))

    @property
    def speed_scale(self) -> float:
        return self.leg_length / self.time_scale

    @property
    def torque_scale(self) -> float:
        return self.total_mass * self.leg_length**2 / self.time_scale**2

    @property
    def cost_scale(self) -> float:
        return self.torque_scale**2 * self.time_scale

    def nondimensional(self) -> "ModelParams":
        """Return the same walker with leg length, gravity, and total mass
        scaled to one.  Lengths divide by leg_length, masses by total_mass;
        gravity becomes one by choice of the time unit."""
        return replace(
            self,
            leg_length=1.0,
            hip_mass=self.hip_mass / self.total_mass,
            leg_mass=self.leg_mass / self.total_mass,
            leg_com_from_hip=self.leg_com_from_hip / self.leg_length,
            gravity=1.0,
        )


@dataclass(frozen=True)
class TrajectoryPoint:
    """One step of the walker: post-impact state x0, duration tau, and the
    control coefficients a = (a1, a2, a3).  A zero coefficient vector means
    the step is passive."""

    x0: np.ndarray
    tau: float
    a: np.ndarray

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float).reshape(4)
        a = np.asarray(self.a, dtype=float).reshape(3)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "a", a)
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not (np.all(np.isfinite(x0)) and np.isfinite(self.tau) and np.all(np.isfinite(a))):
            raise ValueError("trajectory point must be finite")

    @property
    def is_passive(self) -> bool:
        return bool(np.all(self.a == 0.0))

    def as_vector(self) -> np.ndarray:
        """Pack as (q1, q2, dq1, dq2, tau, a1, a2, a3)."""
        return np.concatenate([self.x0, [self.tau], self.a])

    @staticmethod
    def from_vector(v) -> "TrajectoryPoint":
        v = np.asarray(v, dtype=float).reshape(8)
        return TrajectoryPoint(x0=v[:4], tau=v[4], a=v[5:8])


# -- control ---------------------------------------------------------------


def control_basis(t, tau):
    """Fourier basis (up to the first harmonic) evaluated at time t in [0, tau].

    Returns an array with trailing dimension 3: (1/2, cos(2 pi t/tau),
    sin(2 pi t/tau)).  u(t) = a . basis.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    t = np.asarray(t, dtype=float)
    w = 2.0 * np.pi * t / tau
    out = np.empty(t.shape + (3,))
    out[..., 0] = 0.5
    out[..., 1] = np.cos(w)
    out[..., 2] = np.sin(w)
    return out


def eval_control(a, t, tau):
    """Hip torque u(t) = a1/2 + a2 cos(2 pi t/tau) + a3 sin(2 pi t/tau)."""
    a = np.asarray(a, dtype=float)
    return control_basis(t, tau) @ a


# -- continuous dynamics ---------------------------------------------------


def _mass_terms(q1, q2, p: ModelParams):
    """Mass matrix entries and the common geometric factors."""
    l = p.leg_length
    b = p.leg_com_from_hip
    al = l - b
    mH, ml = p.hip_mass, p.leg_mass
    c12 = np.cos(q1 - q2)
    m11 = mH * l**2 + ml * (al**2 + l**2)
    m12 = -ml * l * b * c12
    m22 = ml * b**2
    return m11, m12, m22, c12, al


def vector_field(x, u, p: ModelParams):
    """Right-hand side (dq, ddq) of M(q) ddq + v(q, dq) + G(q) = B u.

    x may have shape (4,) or (N, 4); u scalar or (N,).
    """
    x = np.asarray(x, dtype=float)
    q1, q2, dq1, dq2 = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    l = p.leg_length
    b = p.leg_com_from_hip
    mH, ml = p.hip_mass, p.leg_mass
    g = p.gravity

    m11, m12, m22, c12, al = _mass_terms(q1, q2, p)
    s12 = np.sin(q1 - q2)
    K = ml * l * b

    # rhs = B u - v(q, dq) - G(q)
    r1 = -u + K * s12 * dq2**2 + (mH * l + ml * (al + l)) * g * np.sin(q1)
    r2 = u - K * s12 * dq1**2 - ml * b * g * np.sin(q2)

    det = m11 * m22 - m12 * m12
    dd1 = (m22 * r1 - m12 * r2) / det
    dd2 = (m11 * r2 - m12 * r1) / det

    out = np.empty_like(x)
    out[..., 0] = dq1
    out[..., 1] = dq2
    out[..., 2] = dd1
    out[..., 3] = dd2
    return out


def vector_field_jacobian(x, u, p: ModelParams):
    """Closed-form A = df/dx (4x4) and b_u = df/du (4,) at a single state.

    Derived by differentiating ddq = M(q)^-1 (B u - v - G):
    d(ddq)/dq_i = M^-1 (dr/dq_i - dM/dq_i ddq), d(ddq)/ddq_i = M^-1 dr/ddq_i.
    """
    x = np.asarray(x, dtype=float)
    q1, q2, dq1, dq2 = x
    l = p.leg_length
    b = p.leg_com_from_hip
    mH, ml = p.hip_mass, p.leg_mass
    g = p.gravity

    m11, m12, m22, c12, al = _mass_terms(q1, q2, p)
    s12 = np.sin(q1 - q2)
    K = ml * l * b
    M = np.array([[m11, m12], [m12, m22]])
    Minv = np.linalg.inv(M)

    r = np.array(
        [
            -u + K * s12 * dq2**2 + (mH * l + ml * (al + l)) * g * np.sin(q1),
            u - K * s12 * dq1**2 - ml * b * g * np.sin(q2),
        ]
    )
    ddq = Minv @ r

    dM_dq1 = np.array([[0.0, K * s12], [K * s12, 0.0]])
    dM_dq2 = -dM_dq1

    dr_dq1 = np.array(
        [
            K * c12 * dq2**2 + (mH * l + ml * (al + l)) * g * np.cos(q1),
            -K * c12 * dq1**2,
        ]
    )
    dr_dq2 = np.array(
        [
            -K * c12 * dq2**2,
            K * c12 * dq1**2 - ml * b * g * np.cos(q2),
        ]
    )
    dr_ddq1 = np.array([0.0, -2.0 * K * s12 * dq1])
    dr_ddq2 = np.array([2.0 * K * s12 * dq2, 0.0])

    A = np.zeros((4, 4))
    A[0, 2] = 1.0
    A[1, 3] = 1.0
    A[2:, 0] = Minv @ (dr_dq1 - dM_dq1 @ ddq)
    A[2:, 1] = Minv @ (dr_dq2 - dM_dq2 @ ddq)
    A[2:, 2] = Minv @ dr_ddq1
    A[2:, 3] = Minv @ dr_ddq2

    b_u = np.zeros(4)
    b_u[2:] = Minv @ B_TORQUE
    return A, b_u


# -- impact ----------------------------------------------------------------


def _impact_matrices(c12, p: ModelParams):
    """The two 2x2 matrices of the plastic-impact impulse equations.

    Row 1: angular momentum of the trailing leg about the hip.
    Row 2: angular momentum of the whole robot about the impact point.
    Post-impact rates solve A_plus dq+ = A_minus dq-.  Both matrices depend
    on the configuration only through cos(q1 - q2).
    """
    l = p.leg_length
    b = p.leg_com_from_hip
    al = l - b
    mH, ml = p.hip_mass, p.leg_mass
    a_plus = np.array(
        [
            [b, -l * c12],
            [ml * b * (b - l * c12), mH * l**2 + ml * al**2 + ml * l * (l - b * c12)],
        ]
    )
    a_minus = np.array(
        [
            [-al, 0.0],
            [mH * l**2 * c12 + 2.0 * ml * al * l * c12 - ml * al * b, -ml * al * b],
        ]
    )
    return a_plus, a_minus


def impact_velocity_map(q1, q2, p: ModelParams):
    """W(q) with dq+ = W dq- across the plastic impact."""
    c12 = np.cos(q1 - q2)
    a_plus, a_minus = _impact_matrices(c12, p)
    return np.linalg.solve(a_plus, a_minus)


def impact_map(x, p: ModelParams):
    """Post-impact state: positions unchanged, velocities through W(q).

    The swing foot becomes the new contact point; no relabeling happens here.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xs = np.atleast_2d(x)
    out = xs.copy()
    for i, xi in enumerate(xs):
        W = impact_velocity_map(xi[0], xi[1], p)
        out[i, 2:] = W @ xi[2:]
    return out[0] if single else out


def impact_jacobian(x, p: ModelParams):
    """4x4 Jacobian of impact_map at x.

    Block form [[I, 0], [d(W dq)/dq, W]].  W depends on q only through
    cos(q1 - q2), so dW/dq1 = -sin(q1 - q2) W' and dW/dq2 = +sin(q1 - q2) W'
    with W' = dW/dc12 = A+^-1 (dA-/dc12 - dA+/dc12 W).
    """
    x = np.asarray(x, dtype=float)
    q1, q2 = x[0], x[1]
    dq = x[2:]
    l = p.leg_length
    b = p.leg_com_from_hip
    al = l - b
    mH, ml = p.hip_mass, p.leg_mass

    c12 = np.cos(q1 - q2)
    s12 = np.sin(q1 - q2)
    a_plus, a_minus = _impact_matrices(c12, p)
    W = np.linalg.solve(a_plus, a_minus)

    d_a_plus = np.array([[0.0, -l], [-ml * b * l, -ml * l * b]])
    d_a_minus = np.array([[0.0, 0.0], [mH * l**2 + 2.0 * ml * al * l, 0.0]])
    W_c = np.linalg.solve(a_plus, d_a_minus - d_a_plus @ W)

    D = np.zeros((4, 4))
    D[0, 0] = 1.0
    D[1, 1] = 1.0
    D[2:, 0] = (-s12 * W_c) @ dq
    D[2:, 1] = (s12 * W_c) @ dq
    D[2:, 2:] = W
    return D


# -- leg exchange ----------------------------------------------------------

FLIP = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
    ]
)


def flip_map(x):
    """Exchange leg roles: (q1, q2, dq1, dq2) -> (q2, q1, dq2, dq1)."""
    x = np.asarray(x, dtype=float)
    return x[..., [1, 0, 3, 2]]


# -- geometry and energy ---------------------------------------------------


def foot_positions(x, p: ModelParams):
    """(stance_foot, hip, swing_foot) as 2-vectors in the inertial frame."""
    x = np.asarray(x, dtype=float)
    q1, q2 = x[..., 0], x[..., 1]
    l = p.leg_length
    hip = np.stack([-l * np.sin(q1), l * np.cos(q1)], axis=-1)
    swing = hip + np.stack([l * np.sin(q2), -l * np.cos(q2)], axis=-1)
    stance = np.zeros_like(hip)
    return stance, hip, swing


def swing_foot_velocity(x, p: ModelParams):
    """Inertial velocity of the swing foot."""
    x = np.asarray(x, dtype=float)
    q1, q2, dq1, dq2 = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    l = p.leg_length
    return np.stack(
        [
            -l * np.cos(q1) * dq1 + l * np.cos(q2) * dq2,
            -l * np.sin(q1) * dq1 + l * np.sin(q2) * dq2,
        ],
        axis=-1,
    )


def kinetic_energy(x, p: ModelParams):
    x = np.asarray(x, dtype=float)
    q1, q2, dq1, dq2 = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    m11, m12, m22, _, _ = _mass_terms(q1, q2, p)
    return 0.5 * (m11 * dq1**2 + 2.0 * m12 * dq1 * dq2 + m22 * dq2**2)


def potential_energy(x, p: ModelParams):
    """Gravitational potential, zero level at the stance foot."""
    x = np.asarray(x, dtype=float)
    q1, q2 = x[..., 0], x[..., 1]
    l = p.leg_length
    b = p.leg_com_from_hip
    al = l - b
    mH, ml = p.hip_mass, p.leg_mass
    return p.gravity * ((mH * l + ml * (al + l)) * np.cos(q1) - ml * b * np.cos(q2))


def total_energy(x, p: ModelParams):
    return kinetic_energy(x, p) + potential_energy(x, p)


def transversality_rate(x_pre, p: ModelParams):
    """Signed normal approach rate of the swing foot at the end of a step.

    The ground line is inferred from the contact-to-contact displacement d:
    its unit normal is d/|d| rotated by +90 degrees (points away from the
    ground for a forward step).  A transversal impact needs the swing foot
    to move toward the ground, i.e. a rate below -1e-8 in speed-scale units.
    Returns the rate; callers compare against the threshold.
    """
    x_pre = np.asarray(x_pre, dtype=float)
    _, _, swing = foot_positions(x_pre, p)
    d = swing
    norm = float(np.hypot(d[0], d[1]))
    if norm < 1e-10 * p.leg_length:
        return np.nan
    e_n = np.array([-d[1], d[0]]) / norm
    v = swing_foot_velocity(x_pre, p)
    return float(v @ e_n)
