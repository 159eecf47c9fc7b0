import math
from itertools import combinations

import numpy as np
import pytest
from scipy import integrate, stats

from radialtv.exceptions import InvalidParams, Unsupported
from radialtv.instances import (
    EnsembleSpec,
    Stream,
    add_noise,
    arc_interval,
    bandwidth_noisy,
    bandwidth_separated,
    bandwidth_random,
    finite_min_separation,
    gen_amplitudes,
    gen_directions,
    gen_positions,
    separation_level_lower,
    separation_level_upper,
    projection_cdf,
    projection_density,
    projection_density_bound,
    projection_density_sq_norm,
    separated_positions,
    separation_mc,
    subsample_freqs,
    torus_min_distance,
)
from radialtv.model import arc_direction


def test_stream_determinism_and_independence():
    a = Stream(7, 1).uniform(5)
    assert np.array_equal(a, Stream(7, 1).uniform(5))
    assert not np.array_equal(a, Stream(7, 2).uniform(5))
    assert np.all((a > 0) & (a < 1))


def test_ensemble_determinism():
    spec = EnsembleSpec("skewed", "real_range", M=4, seed=99)
    m1, m2 = spec.draw(3), spec.draw(3)
    assert np.array_equal(m1.positions, m2.positions)
    assert np.array_equal(m1.amplitudes, m2.amplitudes)
    assert not np.array_equal(m1.positions, spec.draw(4).positions)
    assert EnsembleSpec.from_dict(spec.to_dict()) == spec


def test_uniform_ball_mean_norm():
    x = gen_positions("uniform_ball", 1000, 2, 5)
    r = np.linalg.norm(x, axis=1)
    assert r.max() <= 0.5
    assert r.mean() == pytest.approx(1 / 3, abs=0.01)


def test_skewed_angle_spread():
    x = gen_positions("skewed", 4000, 2, 6)
    ang = np.arctan(x[:, 1] / x[:, 0])
    assert np.std(ang) == pytest.approx(math.sqrt(0.005), rel=0.1)
    with pytest.raises(Unsupported):
        gen_positions("skewed", 3, 3, 0)


def test_amplitude_laws():
    a = gen_amplitudes("unit_circle_signs", 500, 1)
    assert np.all((np.abs(a) >= 1) & (np.abs(a) <= 2))
    b = gen_amplitudes("real_range", 500, 1)
    assert np.all(b.imag == 0) and np.abs(b).max() <= 55


def test_direction_families():
    fixed = gen_directions("fixed_d2", ts=[0, 1 / 3, 2 / 3])
    assert np.allclose(fixed, arc_direction([0, 1 / 3, 2 / 3]))
    arc = gen_directions("arc", 3, K=6, count=3)
    t = np.arccos(np.clip(arc[:, 1], -1, 1)) / np.pi
    lo, hi = arc_interval(6)
    assert np.all((t >= lo) & (t <= hi))
    V = gen_directions("vandermonde", d=3, ts=[0.1, 0.5, -0.7, 1.3])
    assert np.allclose(np.linalg.norm(V, axis=1), 1)
    for idx in combinations(range(4), 3):
        assert np.linalg.svd(V[list(idx)], compute_uv=False)[-1] > 1e-3
    with pytest.raises(InvalidParams):
        gen_directions("vandermonde", d=2, ts=[0.1, 0.1])
    with pytest.raises(InvalidParams):
        gen_directions("spiral")


def test_bandwidth_rules():
    assert bandwidth_separated(0.2181) == 10
    assert bandwidth_separated(0.0253) == 80
    assert bandwidth_separated(float("inf")) == 1
    assert bandwidth_noisy(0.1208) == 9
    assert bandwidth_random(2, 2, 0.5) == 16
    assert bandwidth_random(1, 2, 0.5) == 1
    assert bandwidth_random(4, 2, 0.1) > bandwidth_random(3, 2, 0.1)
    for bad in (0.0, -1.0):
        with pytest.raises(InvalidParams):
            bandwidth_separated(bad)
    with pytest.raises(InvalidParams):
        bandwidth_random(3, 2, 1.5)


def test_subsample_freqs():
    assert np.array_equal(subsample_freqs(5, 11, 0), np.arange(-5, 6))
    one = subsample_freqs(5, 1, 0)
    assert one.size == 1 and abs(one[0]) <= 5
    half = subsample_freqs(80, math.ceil(161 / 2), 3)
    assert half.size == 81 and np.unique(half).size == 81 and np.all(np.diff(half) > 0)
    with pytest.raises(InvalidParams):
        subsample_freqs(5, 12, 0)


def test_add_noise_relative_level():
    y = np.arange(12, dtype=complex).reshape(4, 3)
    z = add_noise(y, 0.15, 2)
    assert np.linalg.norm(z - y) == pytest.approx(0.15 * np.linalg.norm(y))


def test_separated_positions_hit_target():
    dirs = gen_directions("fixed_d2", ts=[0, 1 / 3, 2 / 3])
    pos = separated_positions(4, 0.0704, 3, dirs=dirs)
    assert finite_min_separation(pos, dirs) == pytest.approx(0.0704, abs=1e-9)
    assert np.linalg.norm(pos, axis=1).max() <= 0.5


def test_two_points_on_circle():
    # P(nu >= delta) = 1 - 2 delta for two uniform points on the circle
    res = separation_mc(2, 1, [0.1], 4000, seed=1)
    assert res["ci_low"][0] <= 0.8 <= res["ci_high"][0]


def test_projection_density():
    assert projection_density(2, 0.0) == pytest.approx(4 / math.pi)
    assert projection_density(3, 0.5) == 0.0
    assert projection_density(2, 0.7) == 0.0
    for d in range(2, 7):
        val, _ = integrate.quad(lambda t: projection_density(d, t), -0.5, 0.5, epsabs=1e-13, epsrel=1e-13)
        assert abs(val - 1) <= 1e-10
        assert projection_density_sq_norm(d) <= projection_density_bound(d)
        assert projection_cdf(d, 0.0) == pytest.approx(0.5)


def test_projection_ks():
    x = gen_positions("uniform_ball", 20000, 2, 8)
    t = x @ np.array([0.6, 0.8])
    assert stats.kstest(t, lambda s: projection_cdf(2, s)).statistic < 0.02


def test_torus_distance_wraps():
    Z = np.array([[0.01, 0.5], [0.99, 0.5], [0.5, 0.0]])
    assert torus_min_distance(Z) == pytest.approx(0.02)


def test_separation_levels():
    assert separation_level_lower(0.1, 5, 2) == pytest.approx(math.sqrt(0.2 / (20 * math.pi)))
    assert separation_level_upper(1.0, 5, 2) == pytest.approx(2 * math.sqrt(1 / (19 * math.pi)))


def test_median_separation_scaling():
    dirs = gen_directions("fixed_d2", ts=[0, 1 / 3, 2 / 3])
    Ms = [4, 8, 16, 32]
    med = []
    for M in Ms:
        vals = [finite_min_separation(gen_positions("uniform_ball", M, 2, s), dirs) for s in range(300)]
        med.append(np.median(vals))
    slope = np.polyfit(np.log(Ms), np.log(med), 1)[0]
    assert -2.4 <= slope <= -1.6
