from dataclasses import replace

import numpy as np
import pytest

from radialtv import DiscreteMeasure, RecoveryConfig, forward_sample, recover, recover_noisy, recovery_errors
from radialtv.exceptions import InvalidParams, NotInjective, NoValidSubset, ShapeError
from radialtv.experiments import arc_instance, evaluate_recovery
from radialtv.instances import add_noise
from radialtv.recovery import build_system, sign_consistency, solve_amplitudes, verify_certificate

from conftest import full_scheme, random_measure, unit_dirs


@pytest.fixture(scope="module")
def arc_case():
    m, scheme = arc_instance(3, 6, 0.2181, seed=11, trial=0)
    y = forward_sample(m, scheme)
    return m, scheme, y, recover(y, scheme)


def collision_instance():
    # the two atoms project onto the same point along the first direction,
    # where their opposite amplitudes cancel
    th0 = unit_dirs([0.3])[0]
    perp = np.array([-th0[1], th0[0]])
    base = np.array([0.05, -0.02])
    m = DiscreteMeasure(np.stack([base + 0.15 * perp, base - 0.15 * perp]), [1.0, -1.0])
    return m, full_scheme(unit_dirs([0.3, 1.2, 2.3]), 12)


def test_build_system_single_point_at_origin():
    A = build_system(unit_dirs([0.1, 0.5]), np.arange(-2, 3), np.zeros((1, 2)))
    assert A.shape == (10, 1)
    assert np.allclose(A, 1.0)


def test_build_system_reproduces_samples(rng):
    m = random_measure(rng, 4)
    s = full_scheme(unit_dirs([0.1, 1.0, 2.0]), 6)
    A = build_system(s.directions, s.freqs, m.positions)
    assert np.allclose(A @ m.amplitudes, forward_sample(m, s).ravel(), atol=1e-12)


def test_spurious_far_point_gets_zero_amplitude(rng):
    m = random_measure(rng, 3)
    s = full_scheme(unit_dirs([0.1, 1.0, 2.0]), 8)
    support = np.vstack([m.positions, [[0.3, -0.3]]])
    a, smin, resid = solve_amplitudes(build_system(s.directions, s.freqs, support), forward_sample(m, s))
    assert np.allclose(a[:3], m.amplitudes, atol=1e-8)
    assert abs(a[3]) <= 1e-8
    assert resid <= 1e-10


def test_duplicate_column_not_injective():
    pts = np.array([[0.1, 0.1], [0.1, 0.1]])
    A = build_system(unit_dirs([0.0, 1.0]), np.arange(-3, 4), pts)
    with pytest.raises(NotInjective):
        solve_amplitudes(A, np.ones(A.shape[0]))


def test_solve_amplitudes_shape_check():
    A = build_system(unit_dirs([0.0]), np.arange(-1, 2), np.zeros((1, 2)))
    with pytest.raises(ShapeError):
        solve_amplitudes(A, np.ones(4))


def test_arc_instance_three_atoms(arc_case):
    m, scheme, y, res = arc_case
    assert scheme.bandwidth == 10
    err_pos, err_amp = recovery_errors(m, res.measure)
    assert err_pos <= 1e-5 and err_amp <= 1e-5
    assert res.certificate_ok
    assert res.diagnostics["duality_gap"] <= 1e-5
    ev = evaluate_recovery(m, res)
    assert ev["sup_max"] <= 1 + 1e-6
    assert ev["interp_err"] <= 1e-4


def test_round_trip_residual(arc_case):
    m, scheme, y, res = arc_case
    assert np.linalg.norm(forward_sample(res.measure, scheme) - y) <= 1e-6 * np.linalg.norm(y)


def test_sign_check_detects_flipped_amplitude(arc_case):
    m, scheme, y, res = arc_case
    polys = [res.per_direction[i].polynomial() for i in res.subset_used]
    a = res.measure.amplitudes.copy()
    ok, _ = sign_consistency(a, res.measure.positions, polys, res.directions_used)
    assert ok
    a[0] = -a[0]
    ok, err = sign_consistency(a, res.measure.positions, polys, res.directions_used)
    assert not ok and err > 1.0


def test_certificate_breaches(arc_case):
    m, scheme, y, res = arc_case
    sols = [res.per_direction[i].solution for i in res.subset_used]
    pts, amps = res.measure.positions, res.measure.amplitudes
    assert verify_certificate(sols, res.directions_used, pts, amps)
    inflated = [replace(sols[0], c=1.05 * sols[0].c)] + sols[1:]
    assert not verify_certificate(inflated, res.directions_used, pts, amps)
    # a sign pattern of the remaining atoms that the certificate does not interpolate
    assert not verify_certificate(sols, res.directions_used, pts[1:], -amps[1:])


def test_certificate_interpolation_breach_at_missing_atom(arc_case):
    m, scheme, y, res = arc_case
    sols = [res.per_direction[i].solution for i in res.subset_used]
    pts, amps = res.measure.positions, res.measure.amplitudes
    # the atom removed from the support is replaced by a far point with its sign
    far = np.array([[0.0, 0.45]]) if np.linalg.norm(pts[0] - [0.0, 0.45]) > 0.05 else np.array([[0.0, -0.45]])
    assert not verify_certificate(sols, res.directions_used, np.vstack([far, pts[1:]]), amps)


def test_single_spike_bandwidth_one():
    m = DiscreteMeasure([[0.17, -0.31]], [1.5 - 0.5j])
    s = full_scheme(unit_dirs([0.2, 1.4, 2.6]), 1)
    res = recover(forward_sample(m, s), s)
    err_pos, err_amp = recovery_errors(m, res.measure)
    assert err_pos <= 1e-10 and err_amp <= 1e-10


def test_collision_needs_smaller_subsets():
    m, s = collision_instance()
    y = forward_sample(m, s)
    assert np.abs(y[:, 0]).max() < 1e-12
    with pytest.raises(NoValidSubset) as info:
        recover(y, s, RecoveryConfig(lprime=3))
    assert info.value.diagnostics["attempts"]
    res = recover(y, s, RecoveryConfig(lprime=2))
    assert res.subset_used == (1, 2)
    assert max(recovery_errors(m, res.measure)) <= 1e-6


def test_atom_order_does_not_matter(rng):
    m = random_measure(rng, 3)
    s = full_scheme(unit_dirs([0.1, 1.0, 2.0]), 16)
    perm = DiscreteMeasure(m.positions[::-1], m.amplitudes[::-1])
    a = recover(forward_sample(m, s), s).measure
    b = recover(forward_sample(perm, s), s).measure
    assert np.allclose(a.positions, b.positions, atol=1e-9)
    assert np.allclose(a.amplitudes, b.amplitudes, atol=1e-9)


def test_subset_monotonicity(arc_case):
    m, scheme, y, res = arc_case
    sub = scheme.subset(res.subset_used)
    again = recover(y[:, list(res.subset_used)], sub, RecoveryConfig(lprime=len(res.subset_used)))
    assert np.allclose(again.support.points, res.support.points, atol=1e-8)


def test_noisy_recovery_small_instance():
    m = DiscreteMeasure([[0.1, 0.2], [-0.2, -0.05], [0.25, -0.2]], [1.0, -1.5j, 1.2])
    s = full_scheme(unit_dirs([0.0, np.pi / 3, 2 * np.pi / 3]), 10)
    y = add_noise(forward_sample(m, s), 0.15, seed=4)
    res = recover_noisy(y, s, noise_level=0.15)
    assert res.certificate_ok is None
    assert max(recovery_errors(m, res.measure)) <= 0.05


def test_noisy_single_spike():
    m = DiscreteMeasure([[0.12, 0.03]], [2.0])
    s = full_scheme(unit_dirs([0.0, np.pi / 3, 2 * np.pi / 3]), 4)
    y = add_noise(forward_sample(m, s), 0.15, seed=9)
    res = recover_noisy(y, s, noise_level=0.15)
    assert max(recovery_errors(m, res.measure)) <= 0.05


def test_small_lambda_matches_noiseless(arc_case):
    m, scheme, y, res = arc_case
    lam = 1e-6 * np.linalg.norm(y)
    noisy = recover_noisy(y, scheme, RecoveryConfig(lam=lam))
    assert noisy.measure.M == res.measure.M
    assert recovery_errors(res.measure, noisy.measure)[0] <= 1e-4


def test_config_and_input_validation(arc_case):
    m, scheme, y, res = arc_case
    with pytest.raises(InvalidParams):
        RecoveryConfig(lam=-1.0)
    with pytest.raises(InvalidParams):
        recover(y, scheme, RecoveryConfig(lprime=1))
    with pytest.raises(InvalidParams):
        recover(y, scheme, RecoveryConfig(lam=0.1))
    with pytest.raises(ShapeError):
        recover(y[:, :2], scheme)


def test_recovery_errors_count_mismatch():
    a = DiscreteMeasure([[0.0, 0.0]], [1.0])
    b = DiscreteMeasure([[0.0, 0.0], [0.1, 0.0]], [1.0, 1.0])
    assert recovery_errors(a, b) == (float("inf"), float("inf"))
