"""End-to-end acceptance checks, one test per numbered criterion.

These run against the session-scoped artifacts built from the shipped
reproduction config: the passive gait and family, the constant-velocity
slice through the v = 0.7 member, and the constant-slope slice chained
from its level-ground gait.  The terminal summary prints one line per
criterion (see conftest).
"""

import time

import numpy as np
import pytest

from gaitcurves.continuation import distinguished_points
from gaitcurves.dynamics import (
    TrajectoryPoint,
    flip_map,
    impact_map,
    kinetic_energy,
    total_energy,
)
from gaitcurves.gaitmaps import (
    AugmentedPoint,
    cost_closed_form,
    cost_gradient,
    evaluate_step,
    homotopy_residual,
    homotopy_system,
    periodicity_residual,
    seed_foc_residual,
    unwrap_angle,
)
from gaitcurves.library import (
    curve_statistics,
    export_curve_csv,
    export_library,
    import_library,
    validate_records,
)
from gaitcurves.simulate import integrate_step, integrate_with_sensitivities


def test_criterion_1_passive_finder(params, repro, passive_timed):
    gait = passive_timed.value
    assert passive_timed.seconds < 5.0
    assert np.max(np.abs(periodicity_residual(gait, params))) <= 1e-8
    np.testing.assert_array_equal(gait.a, np.zeros(3))
    assert cost_closed_form(gait) == 0.0
    assert np.linalg.norm(cost_gradient(gait)) <= 1e-7


def test_criterion_2_seed_identity_and_level_ground(repro, cv_trace):
    seed = cv_trace.seed
    spec = cv_trace.spec
    p_des = spec.desired_point
    frozen = seed_foc_residual(seed, p_des, repro.params,
                               n_steps=repro.continuation.n_substeps)
    m_at_seed = homotopy_residual(seed, seed, p_des, repro.params,
                                  seed_residual=frozen,
                                  n_steps=repro.continuation.n_substeps)
    assert np.max(np.abs(m_at_seed)) <= 1e-12

    pairs = distinguished_points(cv_trace)
    assert pairs, "the slice must reach epsilon = 0"
    rec, point = pairs[0]
    assert point.epsilon == 0.0
    assert abs(rec.gamma_rad) <= 1e-6
    assert abs(rec.v_avg - 0.7) <= 1e-6


def test_criterion_3_published_operating_window(params, repro, cv_seed):
    ev = evaluate_step(cv_seed, params, repro.continuation.n_substeps)
    assert ev.v_avg == pytest.approx(0.7, abs=1e-8)
    gamma_deg = np.degrees(ev.gamma_raw)
    assert abs(gamma_deg - (-24.9)) <= 1.0
    assert abs(cv_seed.tau - 1.28) <= 0.05


def test_criterion_4_slice_ranges_and_runtime(cv_timed, cs_timed):
    cv, cs = cv_timed.value, cs_timed.value
    assert cv_timed.seconds < 600.0
    assert cs_timed.seconds < 600.0

    cv_records = cv.all_records()
    assert len(cv_records) == 51
    gammas = [r.gamma_deg for r in cv_records]
    taus = [r.tau for r in cv_records]
    assert min(gammas) < -150.0
    assert max(gammas) > 10.0
    assert min(taus) < 0.5
    assert max(taus) > 2.0

    cs_records = cs.all_records()
    assert len(cs_records) == 51
    speeds = [r.v_avg for r in cs_records]
    assert min(speeds) < 0.3
    assert max(speeds) > 1.8


def test_criterion_5_cost_asymmetry(cv_trace):
    stats = curve_statistics(cv_trace.all_records())
    med = stats.median_cost_by_type
    assert "uphill_walking" in med
    assert "downhill_walking" in med
    assert med["uphill_walking"] >= 5.0 * med["downhill_walking"]
    q1 = stats.quartile_bounds[0]
    assert 0.004 / 2.0 <= q1 <= 0.004 * 2.0


def test_criterion_6_sensitivities_vs_central_differences(params):
    rng = np.random.default_rng(2026)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        x0 = rng.uniform(-1.0, 1.0, size=4) * np.array([0.45, 0.45, 1.4, 1.4])
        tau = rng.uniform(0.6, 1.4)
        a = rng.uniform(-0.5, 0.5, size=3)
        c = TrajectoryPoint(x0, tau, a)
        _, sens = integrate_with_sensitivities(c, params, 30)
        got_pre = np.hstack([sens.d_xpre_d_x0, sens.d_xpre_d_tau[:, None],
                             sens.d_xpre_d_a])
        got_post = np.hstack([sens.d_xf_d_x0, sens.d_xf_d_tau[:, None],
                              sens.d_xf_d_a])
        base = c.as_vector()
        fd_pre = np.empty((4, 8))
        fd_post = np.empty((4, 8))
        for j in range(8):
            h = 1e-6 * max(1.0, abs(base[j]))
            vp = base.copy(); vp[j] += h
            vm = base.copy(); vm[j] -= h
            rp = integrate_step(TrajectoryPoint.from_vector(vp), params, 30)
            rm = integrate_step(TrajectoryPoint.from_vector(vm), params, 30)
            fd_pre[:, j] = (rp.x_end_pre - rm.x_end_pre) / (2 * h)
            fd_post[:, j] = (rp.x_f - rm.x_f) / (2 * h)
        for got, fd in ((got_pre, fd_pre), (got_post, fd_post)):
            err = np.abs(got - fd)
            bound = 1e-5 * np.abs(fd) + 1e-8
            worst = max(worst, float((err / bound).max()))
            assert np.all(err <= bound)
    assert time.perf_counter() - t0 < 120.0
    assert worst <= 1.0


def test_criterion_7_integrator_and_impact_properties(params, passive_gait):
    # passive energy drift at the working grid resolution
    res = integrate_step(passive_gait, params, n_steps=30)
    e = np.array([total_energy(x, params) for x in res.trajectory])
    assert np.max(np.abs(e - e[0])) / abs(e[0]) <= 1e-6

    # plastic impacts never add kinetic energy (post state read in the
    # new stance chart)
    rng = np.random.default_rng(7)
    x = rng.uniform(-1.0, 1.0, size=(1000, 4)) * np.array([0.6, 0.6, 2.0, 2.0])
    ke_pre = kinetic_energy(x, params)
    ke_post = kinetic_energy(flip_map(impact_map(x, params)), params)
    assert np.all(ke_post <= ke_pre * (1.0 + 1e-10) + 1e-12)

    # observed convergence order of the fixed-step integrator
    probe = TrajectoryPoint([0.22, -0.32, -0.45, -0.25], 0.9, [0.12, -0.3, 0.25])
    ref = integrate_step(probe, params, 640).x_end_pre
    errs = [np.max(np.abs(integrate_step(probe, params, n).x_end_pre - ref))
            for n in (10, 20, 40)]
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    assert min(orders) >= 3.5

    # leg relabeling is an exact involution
    y = rng.uniform(-1.0, 1.0, size=(100, 4))
    np.testing.assert_array_equal(flip_map(flip_map(y)), y)


def _check_curve(trace, repro):
    params = repro.params
    n_steps = repro.continuation.n_substeps
    spec = trace.spec
    p_des = spec.desired_point
    frozen = seed_foc_residual(trace.seed, p_des, params, n_steps=n_steps)

    def rebuild(rec, eps):
        return AugmentedPoint(c=rec.trajectory_point, lam=rec.lam, epsilon=eps)

    for branch in trace.branches:
        prev_t = trace.seed_tangent
        for rec, tangent in zip(branch.points, branch.tangents):
            z = rebuild(rec, rec.epsilon)
            r, jac, ev = homotopy_system(
                z, trace.seed, p_des, params, seed_residual=frozen,
                prev_gamma=rec.gamma_rad, n_steps=n_steps)
            assert np.max(np.abs(r)) <= 1e-8, rec.gait_id
            assert np.max(np.abs(jac @ tangent)) <= 1e-6, rec.gait_id
            assert float(np.dot(prev_t, tangent)) > 0.0, rec.gait_id
            prev_t = tangent
            # the operating point follows the published schedule
            target = spec.target_at(rec.epsilon)
            gamma = unwrap_angle(ev.gamma_raw, rec.gamma_rad)
            assert abs(gamma - target.gamma) <= 1e-7, rec.gait_id
            assert abs(ev.v_avg - target.v_avg) <= 1e-7, rec.gait_id

    for rec in trace.distinguished:
        ev = evaluate_step(rec.trajectory_point, params, n_steps)
        target = spec.target_at(0.0)
        gamma = unwrap_angle(ev.gamma_raw, rec.gamma_rad)
        assert abs(gamma - target.gamma) <= 1e-7, rec.gait_id
        assert abs(ev.v_avg - target.v_avg) <= 1e-7, rec.gait_id


def test_criterion_8_pointwise_curve_consistency(repro, cv_trace, cs_trace):
    _check_curve(cv_trace, repro)
    _check_curve(cs_trace, repro)


def test_criterion_9_persistence_round_trip(tmp_path, repro, family, cv_trace, cs_trace):
    records = (family.all_records() + cv_trace.all_records()
               + list(cv_trace.distinguished) + cs_trace.all_records()
               + list(cs_trace.distinguished))
    slices = [cv_trace.spec, cs_trace.spec]
    path = tmp_path / "library.json"
    export_library(records, path, repro.params, slices=slices)
    loaded, loaded_slices, _ = import_library(path, expected_params=repro.params)

    assert len(loaded) == len(records)
    for a, b in zip(records, loaded):
        assert a.gait_id == b.gait_id
        np.testing.assert_array_equal(a.x0, b.x0)
        np.testing.assert_array_equal(a.a, b.a)
        np.testing.assert_array_equal(a.lam, b.lam)
        assert a.tau == b.tau
        assert a.gamma_rad == b.gamma_rad
        assert a.v_avg == b.v_avg
        assert a.cost == b.cost
        assert (a.epsilon == b.epsilon
                or (np.isnan(a.epsilon) and np.isnan(b.epsilon)))
        assert a.classification == b.classification
    assert loaded_slices == slices

    failures = validate_records(loaded, loaded_slices, repro.params,
                                tol=repro.continuation.tol,
                                n_steps=repro.continuation.n_substeps)
    assert failures == []

    csv_a = tmp_path / "curve_a.csv"
    csv_b = tmp_path / "curve_b.csv"
    export_curve_csv(cv_trace.all_records(), csv_a)
    export_curve_csv(cv_trace.all_records(), csv_b)
    assert csv_a.read_bytes() == csv_b.read_bytes()
    path2 = tmp_path / "library2.json"
    export_library(records, path2, repro.params, slices=slices)
    assert path.read_bytes() == path2.read_bytes()
