import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radialtv import TrigPolynomial, extremal_points, sup_norm
from radialtv.exceptions import DegeneratePolynomial, ShapeError
from radialtv.rooting import eval_trig


def cos_poly():
    return TrigPolynomial([0.5, 0.0, 0.5])


def test_cosine_extremal_set():
    ext = extremal_points(cos_poly())
    assert ext.points == pytest.approx([0.0, 0.5], abs=1e-9)
    assert ext.moduli == pytest.approx([1.0, 1.0], abs=1e-12)


def test_pure_exponential_is_degenerate():
    with pytest.raises(DegeneratePolynomial):
        extremal_points(TrigPolynomial([0.0, 0.0, 1.0]))


def test_zero_polynomial_has_empty_set():
    assert len(extremal_points(TrigPolynomial(np.zeros(5)))) == 0


def test_strictly_below_one_has_empty_set():
    assert len(extremal_points(TrigPolynomial([0.3, 0.1, 0.3]))) == 0


def test_even_length_rejected():
    with pytest.raises(ShapeError):
        TrigPolynomial(np.ones(4))


def test_global_phase_invariance():
    p = cos_poly()
    q = p.scaled(np.exp(0.7j))
    assert extremal_points(q).points == pytest.approx(extremal_points(p).points, abs=1e-9)


def test_shift_moves_extremal_points():
    # p(t - s) multiplies c_k by exp(-2i pi k s)
    s = 0.137
    k = np.arange(-1, 2)
    p = TrigPolynomial(np.array([0.5, 0.0, 0.5]) * np.exp(-2j * np.pi * k * s))
    assert extremal_points(p).points == pytest.approx(sorted([s, s + 0.5]), abs=1e-9)


def test_fejer_type_certificate():
    # squared Fejer kernel normalised to peak 1 has a single maximum
    N = 6
    k = np.arange(-N, N + 1)
    c = (N + 1 - np.abs(k)).astype(complex)
    c /= c.sum()
    pts = extremal_points(TrigPolynomial(c)).points
    assert pts == pytest.approx([0.0], abs=1e-7)


def test_sup_norm_against_dense_grid(rng):
    for _ in range(10):
        N = int(rng.integers(1, 12))
        c = rng.normal(size=2 * N + 1) + 1j * rng.normal(size=2 * N + 1)
        p = TrigPolynomial(c)
        dense = np.abs(eval_trig(p, np.linspace(0, 1, 200001))).max()
        est = sup_norm(p)
        assert est >= dense - 1e-9
        assert est <= dense + 1e-6 * dense


def test_derivatives_match_finite_differences(rng):
    p = TrigPolynomial(rng.normal(size=7) + 1j * rng.normal(size=7))
    t, h = 0.31, 1e-6
    v, dv, d2v = p.derivatives(t)
    assert dv[0] == pytest.approx((p(t + h) - p(t - h)) / (2 * h), rel=1e-6)
    assert d2v[0] == pytest.approx((p(t + h) - 2 * p(t) + p(t - h)) / h ** 2, rel=1e-3)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1))
def test_shifted_fejer_peak_is_found(t0, phase):
    N = 4
    k = np.arange(-N, N + 1)
    c = (N + 1 - np.abs(k)) / (N + 1) ** 2 * np.exp(-2j * np.pi * k * t0) * np.exp(2j * np.pi * phase)
    pts = extremal_points(TrigPolynomial(c)).points
    assert len(pts) == 1
    d = abs(pts[0] - t0 % 1.0)
    assert min(d, 1 - d) < 1e-6
