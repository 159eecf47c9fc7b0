import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radialtv import UnivariateDualProblem, solve_univariate_dual, sup_norm
from radialtv.exceptions import ShapeError
from radialtv.sdp import default_lambda, verify_bounded


def samples(ts, amps, N, freqs=None):
    k = np.arange(-N, N + 1) if freqs is None else np.asarray(freqs)
    return np.exp(-2j * np.pi * np.outer(k, ts)) @ np.asarray(amps, dtype=complex), k


def solve(ts, amps, N, lam=0.0, freqs=None):
    y, k = samples(ts, amps, N, freqs)
    return solve_univariate_dual(UnivariateDualProblem(y, k, N, lam), tol=1e-11), y, k


def test_single_spike_objective_is_tv_norm():
    sol, _, _ = solve([0.2], [1.0], 4)
    assert sol.objective == pytest.approx(1.0, abs=1e-8)


def test_two_separated_spikes():
    sol, y, k = solve([0.1, 0.6], [1.0, -1.0], 8)
    assert sol.objective == pytest.approx(2.0, abs=1e-8)
    p = sol.polynomial()
    # the certificate interpolates the signs
    assert p(0.1) == pytest.approx(1.0, abs=1e-5)
    assert p(0.6) == pytest.approx(-1.0, abs=1e-5)


def test_zero_data():
    sol = solve_univariate_dual(UnivariateDualProblem(np.zeros(5), np.arange(-2, 3), 2))
    assert sol.objective == 0.0
    assert np.all(sol.c == 0)


def test_weak_duality_and_feasibility():
    rng = np.random.default_rng(3)
    ts = np.array([0.05, 0.31, 0.72])
    amps = rng.uniform(1, 2, 3) * np.exp(2j * np.pi * rng.uniform(size=3))
    sol, y, k = solve(ts, amps, 12)
    # any feasible c gives <c, y> <= ||a||_1
    assert sol.objective <= np.abs(amps).sum() + 1e-7
    assert sol.objective == pytest.approx(np.abs(amps).sum(), rel=1e-7)
    assert sup_norm(sol.polynomial()) <= 1 + 1e-6
    assert sol.min_eigenvalue() >= -1e-8
    assert sol.trace_residuals().max() <= 1e-8
    assert verify_bounded(sol.c, 12)["ok"]


def test_regularized_objective_is_monotone_in_lambda():
    ts, amps, N = [0.1, 0.45], [1.0, 1.0j], 6
    y, k = samples(ts, amps, N)
    norms = []
    for lam in [0.0, 0.05, 0.2, 1.0]:
        sol = solve_univariate_dual(UnivariateDualProblem(y, k, N, lam), tol=1e-10)
        norms.append(np.linalg.norm(sol.c))
        assert sup_norm(sol.polynomial()) <= 1 + 1e-6
    # a heavier penalty shrinks the certificate
    assert all(a >= b - 1e-8 for a, b in zip(norms, norms[1:]))


def test_subsampled_frequencies():
    N = 10
    freqs = np.array([-10, -7, -3, 0, 2, 5, 9])
    sol, y, k = solve([0.3], [2.0], N, freqs=freqs)
    assert sol.objective == pytest.approx(2.0, abs=1e-7)
    assert sol.c.size == 2 * N + 1


def test_conjugate_symmetric_real_data_gives_hermitian_polynomial():
    # real amplitudes at symmetric positions make the data real
    sol, y, k = solve([0.2, 0.8], [1.0, 1.0], 5)
    assert np.allclose(y.imag, 0, atol=1e-12)
    c = sol.c
    assert np.allclose(c, np.conj(c[::-1]), atol=1e-7)


def test_round_off_stall_returns_best_iterate():
    # this direction stalls near a 1e-12 gap and later loses definiteness
    from radialtv import forward_sample
    from radialtv.experiments import arc_instance

    m, s = arc_instance(3, 6, 0.2181, 2024, 35, 0.5)
    y = forward_sample(m, s)[:, 1]
    sol = solve_univariate_dual(UnivariateDualProblem(y, s.freqs, s.bandwidth), tol=1e-12)
    assert sol.info["status"] in ("optimal", "stalled", "breakdown")
    assert max(sol.gap, sol.primal_residual, sol.dual_residual) <= 1e-7
    assert sol.objective == pytest.approx(np.abs(m.amplitudes).sum(), abs=1e-7)


def test_default_lambda():
    y = np.full(4, 0.5)
    assert default_lambda(y) == pytest.approx(1e-2)
    assert default_lambda(y, 0.15) == pytest.approx(0.1)
    assert default_lambda(y, 0.015) == pytest.approx(default_lambda(y))


def test_problem_validation():
    with pytest.raises(ShapeError):
        UnivariateDualProblem(np.ones(3), np.arange(-2, 3), 2)
    with pytest.raises(ShapeError):
        UnivariateDualProblem(np.ones(3), np.array([0, 1, 3]), 2)
    with pytest.raises(ShapeError):
        UnivariateDualProblem(np.ones(3), np.arange(-1, 2), 1, lam=-1.0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.floats(0.5, 3), st.floats(0, 1))
def test_single_spike_property(t0, mod, phase):
    a = mod * np.exp(2j * np.pi * phase)
    sol, _, _ = solve([t0], [a], 3)
    assert sol.objective == pytest.approx(mod, rel=1e-7)
    assert sol.polynomial()(t0) == pytest.approx(a / mod, abs=1e-4)
