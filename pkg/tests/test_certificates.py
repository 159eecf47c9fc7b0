import numpy as np
import pytest
from scipy.linalg import null_space

from radialtv import DiscreteMeasure, is_nondegenerate, vanishing_derivatives
from radialtv.certificates import interpolation_system
from radialtv.exceptions import InfeasibleInterpolation, InvalidParams
from radialtv.experiments import arc_instance

from conftest import full_scheme, unit_dirs

DIRS = unit_dirs([0.0, np.pi / 3, 2 * np.pi / 3])


def three_atoms():
    return DiscreteMeasure([[0.1, 0.2], [-0.2, -0.05], [0.25, -0.2]], [1.0, -1.0j, 1.0])


def test_single_spike_interpolates():
    m = DiscreteMeasure([[0.1, -0.2]], [2.0j])
    s = full_scheme(DIRS, 4)
    pc = vanishing_derivatives(m, s)
    assert abs(pc(m.positions[0]) - 1j) <= 1e-10
    rep = is_nondegenerate(pc, m, s)
    assert rep.nondegenerate
    assert rep.sup_estimate <= 1 + 1e-6


def test_constraints_hold():
    m = three_atoms()
    s = full_scheme(DIRS, 10)
    pc = vanishing_derivatives(m, s)
    v, g, _ = pc.derivatives(m.positions)
    assert np.abs(v - m.signs()).max() <= 1e-8
    assert np.abs(g).max() <= 1e-8


def test_scaled_precertificate_is_degenerate():
    m = DiscreteMeasure([[0.1, -0.2]], [1.0])
    s = full_scheme(DIRS, 4)
    pc = vanishing_derivatives(m, s)
    assert not is_nondegenerate(pc.scaled(1.05), m, s).nondegenerate


def test_minimum_norm_property(rng):
    m = three_atoms()
    s = full_scheme(DIRS, 6)
    pc = vanishing_derivatives(m, s)
    F, _ = interpolation_system(m, s)
    Z = null_space(F)
    base = np.linalg.norm(pc.q)
    for _ in range(5):
        z = Z @ (rng.normal(size=Z.shape[1]) + 1j * rng.normal(size=Z.shape[1]))
        other = pc.q.reshape(-1) + 0.1 * z
        assert np.linalg.norm(F @ other - F @ pc.q.reshape(-1)) <= 1e-8
        assert np.linalg.norm(other) >= base - 1e-8


def test_basis_invariance():
    m = three_atoms()
    s = full_scheme(DIRS, 8)
    a = 0.4
    R = np.array([[np.cos(a), np.sin(a)], [-np.sin(a), np.cos(a)]])
    q1 = vanishing_derivatives(m, s).q
    q2 = vanishing_derivatives(m, s, basis=R).q
    assert np.abs(q1 - q2).max() <= 1e-8
    with pytest.raises(InvalidParams):
        vanishing_derivatives(m, s, basis=2 * R)


def test_recoverable_instance_is_nondegenerate():
    m, s = arc_instance(3, 6, 0.2181, seed=11, trial=0)
    rep = is_nondegenerate(vanishing_derivatives(m, s), m, s)
    assert rep.nondegenerate
    assert rep.margin_outside > 0


def test_near_collision_is_degenerate():
    m = DiscreteMeasure([[0.1, 0.1], [0.1 + 1e-6, 0.1], [-0.2, 0.0]], [1.0, 1.0, -1.0])
    s = full_scheme(DIRS, 8)
    try:
        pc = vanishing_derivatives(m, s)
    except InfeasibleInterpolation:
        return
    assert not is_nondegenerate(pc, m, s).nondegenerate


def test_too_few_samples():
    m = three_atoms()
    s = full_scheme(DIRS[:1], 1)
    with pytest.raises(InfeasibleInterpolation):
        vanishing_derivatives(m, s)


def test_grid_resolution_default():
    m = DiscreteMeasure([[0.0, 0.0]], [1.0])
    s = full_scheme(DIRS, 100)
    rep = is_nondegenerate(vanishing_derivatives(m, s), m, s)
    assert rep.grid_resolution == 800
    assert rep.info["r_excl"] == pytest.approx(1 / 400)
