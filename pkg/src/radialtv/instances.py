"""Seeded ensembles, sampling-design rules and Monte-Carlo separation checks.

Random draws come from :class:`Stream`, a Philox-4x64 counter generator
keyed by ``(seed, stream id)`` with the counter starting at zero.  Uniform
doubles are ``((raw >> 11) + 0.5) * 2**-53`` and Gaussians are obtained by
the inverse normal CDF, so every ensemble is a fixed function of the seed.
Per-trial seeds are ``seed ^ trial``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import betainc, gamma, ndtri

from .exceptions import InvalidParams, Unsupported
from .model import DiscreteMeasure, arc_direction, min_separation, torus_distance

__all__ = [
    "Stream",
    "EnsembleSpec",
    "STREAM_POSITIONS",
    "STREAM_AMPLITUDES",
    "STREAM_DIRECTIONS",
    "STREAM_FREQS",
    "STREAM_NOISE",
    "trial_seed",
    "gen_positions",
    "gen_amplitudes",
    "gen_measure",
    "gen_directions",
    "arc_interval",
    "separated_positions",
    "finite_min_separation",
    "bandwidth_separated",
    "bandwidth_random",
    "bandwidth_noisy",
    "subsample_freqs",
    "add_noise",
    "ball_volume",
    "projection_density",
    "projection_cdf",
    "projection_density_sq_norm",
    "projection_density_bound",
    "torus_min_distance",
    "separation_mc",
    "separation_level_lower",
    "separation_level_upper",
]

MASK64 = (1 << 64) - 1
STREAM_POSITIONS = 1
STREAM_AMPLITUDES = 2
STREAM_DIRECTIONS = 3
STREAM_FREQS = 4
STREAM_NOISE = 5
STREAM_MC = 6

SKEW_ANGLE_VAR = 0.005
REAL_RANGE = (-55.0, 55.0)


class Stream:
    """Uniform and Gaussian draws from Philox-4x64 keyed by ``(seed, stream)``."""

    def __init__(self, seed: int, stream: int = 0):
        key = np.array([int(seed) & MASK64, int(stream) & MASK64], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key)

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0):
        n = 1 if size is None else int(np.prod(size))
        raw = self._bitgen.random_raw(n)
        u = ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0 ** -53
        u = low + (high - low) * u
        return float(u[0]) if size is None else u.reshape(size)

    def normal(self, size=None, mean: float = 0.0, std: float = 1.0):
        u = self.uniform(size)
        return mean + std * ndtri(u)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.uniform(n), kind="stable")


def trial_seed(seed: int, trial: int) -> int:
    return (int(seed) ^ int(trial)) & MASK64


@dataclass(frozen=True)
class EnsembleSpec:
    """Position and amplitude laws of a random measure.

    ``kind``: ``uniform_ball`` or ``skewed`` positions.  ``amplitudes``:
    ``unit_circle_signs`` (uniform phase, modulus uniform in
    ``params["modulus"]``, default ``(1, 2)``) or ``real_range`` (uniform in
    ``params["range"]``, default ``(-55, 55)``).
    """

    kind: str = "uniform_ball"
    amplitudes: str = "unit_circle_signs"
    M: int = 3
    d: int = 2
    seed: int = 0
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleSpec":
        return cls(**data)

    def draw(self, trial: int = 0) -> DiscreteMeasure:
        return gen_measure(self, trial)


def gen_positions(kind: str, M: int, d: int, seed: int, params: dict | None = None) -> np.ndarray:
    """``(M, d)`` positions in the ball of radius 1/2."""
    params = params or {}
    if M < 1:
        raise InvalidParams("M must be >= 1")
    rs = Stream(seed, STREAM_POSITIONS)
    if kind == "uniform_ball":
        out = np.empty((M, d))
        filled = 0
        while filled < M:
            cand = rs.uniform((M, d), -0.5, 0.5)
            cand = cand[np.linalg.norm(cand, axis=1) <= 0.5]
            take = min(M - filled, cand.shape[0])
            out[filled:filled + take] = cand[:take]
            filled += take
        return out
    if kind == "skewed":
        if d != 2:
            raise Unsupported("the skewed ensemble is two-dimensional")
        var = float(params.get("angle_var", SKEW_ANGLE_VAR))
        beta = rs.normal(M, std=math.sqrt(var))
        alpha = rs.uniform(M, -0.5, 0.5)
        return alpha[:, None] * np.stack([np.cos(beta), np.sin(beta)], axis=1)
    raise InvalidParams(f"unknown position law {kind!r}")


def gen_amplitudes(kind: str, M: int, seed: int, params: dict | None = None) -> np.ndarray:
    params = params or {}
    rs = Stream(seed, STREAM_AMPLITUDES)
    if kind == "unit_circle_signs":
        lo, hi = params.get("modulus", (1.0, 2.0))
        phase = rs.uniform(M)
        mod = rs.uniform(M, lo, hi)
        return mod * np.exp(2j * np.pi * phase)
    if kind == "real_range":
        lo, hi = params.get("range", REAL_RANGE)
        a = rs.uniform(M, lo, hi)
        return a.astype(complex)
    raise InvalidParams(f"unknown amplitude law {kind!r}")


def gen_measure(spec: EnsembleSpec, trial: int = 0) -> DiscreteMeasure:
    s = trial_seed(spec.seed, trial)
    pos = gen_positions(spec.kind, spec.M, spec.d, s, spec.params)
    amp = gen_amplitudes(spec.amplitudes, spec.M, s, spec.params)
    return DiscreteMeasure(pos, amp)


def arc_interval(K: int) -> tuple[float, float]:
    """``t`` range of the arc ``|t - 1/2| <= 1/K``."""
    if K < 1:
        raise InvalidParams("K must be >= 1")
    return (0.5 - 1.0 / K, 0.5 + 1.0 / K)


def _check_distinct(ts):
    ts = np.asarray(ts, dtype=float).ravel()
    if np.unique(ts).size != ts.size:
        raise InvalidParams("direction parameters must be distinct")
    return ts


def gen_directions(kind: str, seed: int = 0, **params) -> np.ndarray:
    """Unit directions, one per row.

    * ``arc``: ``count`` distinct ``t`` uniform in ``|t - 1/2| <= 1/K``;
      rows ``(sin(pi t), cos(pi t))``.
    * ``fixed_d2``: the listed ``ts``.
    * ``vandermonde``: rows ``v / ||v||`` with ``v = (1, t, ..., t^(d-1))``.
    * ``uniform_sphere``: ``count`` normalized Gaussian vectors in ``R^d``.
    """
    rs = Stream(seed, STREAM_DIRECTIONS)
    if kind == "arc":
        K, count = int(params["K"]), int(params.get("count", 3))
        lo, hi = arc_interval(K)
        ts = rs.uniform(count, lo, hi)
        while np.unique(ts).size != count:
            ts = rs.uniform(count, lo, hi)
        return arc_direction(ts)
    if kind == "fixed_d2":
        return arc_direction(_check_distinct(params["ts"]))
    if kind == "vandermonde":
        d = int(params["d"])
        ts = _check_distinct(params["ts"])
        V = ts[:, None] ** np.arange(d)[None, :]
        return V / np.linalg.norm(V, axis=1, keepdims=True)
    if kind == "uniform_sphere":
        d = int(params["d"])
        count = int(params.get("count", d + 1))
        G = rs.normal((count, d))
        return G / np.linalg.norm(G, axis=1, keepdims=True)
    raise InvalidParams(f"unknown direction family {kind!r}")


def finite_min_separation(positions, dirs) -> float:
    """``min over the given directions`` of the projected separation."""
    pos = np.asarray(positions, dtype=float)
    return min(min_separation(pos @ th) for th in np.atleast_2d(dirs))


def _pair_lower_bound(deltas: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Lower bounds of ``inf_t |<delta, theta(t)>|_T`` over the grid span (Lipschitz slack)."""
    vals = torus_distance(deltas @ arc_direction(grid).T, 0.0)
    h = grid[1] - grid[0] if grid.size > 1 else 0.0
    return vals.min(axis=1) - np.pi * np.linalg.norm(deltas, axis=1) * h


def separated_positions(
    M: int,
    target: float,
    seed: int,
    arc: tuple[float, float] | None = None,
    dirs=None,
    max_tries: int = 2_000_000,
    restart_after: int = 2000,
) -> np.ndarray:
    """Uniform-ball positions whose projected separation equals ``target``.

    Points are placed one at a time and rejected until every new pair is
    separated by at least ``target`` (over the arc of directions, or over
    the finite set ``dirs``); after ``restart_after`` consecutive rejections
    the placement starts over.  The configuration is then shrunk towards the
    origin by the largest factor, found by bisection, at which the
    separation is still ``>= target``, which pins it to ``target``.
    """
    from .model import arc_min_separation

    if (arc is None) == (dirs is None):
        raise InvalidParams("give exactly one of arc or dirs")
    if target <= 0:
        raise InvalidParams("target separation must be positive")
    rs = Stream(seed, STREAM_POSITIONS)
    if arc is not None:
        n = max(int(np.ceil((arc[1] - arc[0]) * 4096)), 1) + 1
        grid = np.linspace(arc[0], arc[1], n)

        def pair_ok(deltas):
            return _pair_lower_bound(deltas, grid) >= target

        def sep(P):
            return arc_min_separation(DiscreteMeasure(P, np.ones(P.shape[0])), arc)
    else:
        D = np.atleast_2d(np.asarray(dirs, dtype=float))

        def pair_ok(deltas):
            return torus_distance(deltas @ D.T, 0.0).min(axis=1) >= target

        def sep(P):
            return finite_min_separation(P, D)

    d = 2 if dirs is None else np.atleast_2d(dirs).shape[1]
    pts = np.empty((0, d))
    tries = stalled = 0
    while pts.shape[0] < M:
        tries += 1
        stalled += 1
        if tries > max_tries:
            raise InvalidParams(f"could not place {M} points with separation {target}")
        if stalled > restart_after:
            # greedy placement can wall itself in; start over
            pts = np.empty((0, d))
            stalled = 0
        x = rs.uniform(d, -0.5, 0.5)
        if np.linalg.norm(x) > 0.5:
            continue
        if pts.shape[0] and not np.all(pair_ok(pts - x)):
            continue
        pts = np.vstack([pts, x])
        stalled = 0
    if M == 1:
        return pts
    lo, hi = 0.0, 1.0
    if sep(pts) < target:
        # the grid bound is conservative, so this only guards rounding
        raise InvalidParams("placement produced an under-separated configuration")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if sep(mid * pts) >= target:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-13:
            break
    return hi * pts


def bandwidth_separated(nu_min: float) -> int:
    """``ceil(2 / nu_min)``, at least 1; ``inf`` (single atom) gives 1."""
    nu = float(nu_min)
    if not nu > 0 or math.isnan(nu):
        raise InvalidParams("separation must be positive")
    if math.isinf(nu):
        return 1
    return max(int(math.ceil(2.0 / nu)), 1)


def bandwidth_noisy(nu_min: float) -> int:
    """``ceil(1 / nu_min)``, at least 1."""
    nu = float(nu_min)
    if not nu > 0 or math.isnan(nu):
        raise InvalidParams("separation must be positive")
    if math.isinf(nu):
        return 1
    return max(int(math.ceil(1.0 / nu)), 1)


def bandwidth_random(M: int, d: int, delta: float) -> int:
    """``ceil(4 (d + 1) M (M - 1) / (delta sqrt(pi (2d - 1))))``; 1 when ``M == 1``."""
    if M < 1 or d < 1:
        raise InvalidParams("need M >= 1 and d >= 1")
    if not 0 < delta < 1:
        raise InvalidParams("delta must lie in (0, 1)")
    if M == 1:
        return 1
    val = 4 * (d + 1) * M * (M - 1) / (delta * math.sqrt(math.pi * (2 * d - 1)))
    return int(math.ceil(val))


def subsample_freqs(N: int, m: int, seed: int) -> np.ndarray:
    """``m`` distinct sorted indices drawn uniformly from ``{-N, ..., N}``."""
    if N < 1 or not 1 <= m <= 2 * N + 1:
        raise InvalidParams(f"need 1 <= m <= 2N+1, got m={m}, N={N}")
    perm = Stream(seed, STREAM_FREQS).permutation(2 * N + 1)
    return np.sort(perm[:m]) - N


def add_noise(y, level: float, seed: int) -> np.ndarray:
    """``y + level * ||y|| * n / ||n||`` with ``n`` complex Gaussian."""
    y = np.asarray(y, dtype=complex)
    rs = Stream(seed, STREAM_NOISE)
    n = rs.normal(y.shape) + 1j * rs.normal(y.shape)
    return y + level * np.linalg.norm(y) * n / np.linalg.norm(n)


def ball_volume(d: int, r: float = 1.0) -> float:
    return math.pi ** (d / 2) / gamma(d / 2 + 1) * r ** d


def projection_density(d: int, t):
    """Density of ``<theta, x>`` for ``x`` uniform in the ball of radius 1/2 in ``R^d``."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) <= 0.5
    base = np.clip(0.25 - t * t, 0.0, None)
    val = 2.0 ** d * base ** ((d - 1) / 2) * ball_volume(d - 1) / ball_volume(d)
    val = np.where(inside, val, 0.0)
    return float(val) if val.ndim == 0 else val


def projection_cdf(d: int, t):
    """CDF of the projection: ``t + 1/2`` follows Beta((d+1)/2, (d+1)/2)."""
    t = np.clip(np.asarray(t, dtype=float), -0.5, 0.5)
    a = (d + 1) / 2
    return betainc(a, a, t + 0.5)


def projection_density_sq_norm(d: int) -> float:
    """``int f^2`` by adaptive quadrature."""
    val, _ = integrate.quad(lambda s: projection_density(d, s) ** 2, -0.5, 0.5, epsabs=1e-13, epsrel=1e-13)
    return float(val)


def projection_density_bound(d: int) -> float:
    return (2 * d + 2) / math.sqrt(math.pi * (2 * d - 1))


def torus_min_distance(Z: np.ndarray) -> float:
    """Minimum pairwise wrapped Euclidean distance of points in ``[0, 1)^d``."""
    Z = np.asarray(Z, dtype=float)
    if Z.shape[0] < 2:
        return float("inf")
    diff = np.abs(Z[:, None, :] - Z[None, :, :])
    diff = np.minimum(diff, 1.0 - diff)
    dist = np.sqrt((diff ** 2).sum(-1))
    iu = np.triu_indices(Z.shape[0], 1)
    return float(dist[iu].min())


def separation_level_lower(rho: float, M: int, d: int, f_sq_norm: float = 1.0) -> float:
    """Separation level with ``P(nu >= delta) >= 1 - rho``."""
    return (2 * rho / (M * (M - 1) * ball_volume(d) * f_sq_norm)) ** (1 / d)


def separation_level_upper(t: float, M: int, d: int) -> float:
    """Separation level with ``P(nu >= delta) <= exp(-t)``."""
    return 2 * (t / ((M * M - M - 1) * ball_volume(d))) ** (1 / d)


def separation_mc(M: int, d: int, deltas, trials: int, seed: int, alpha: float = 0.05) -> dict:
    """Empirical ``P(nu(Z) >= delta)`` for ``M`` uniform points on the torus ``T^d``.

    Returns the separation samples, the estimate per ``delta`` and Wilson
    intervals at level ``1 - alpha``.
    """
    from statsmodels.stats.proportion import proportion_confint

    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    nus = np.empty(trials)
    for i in range(trials):
        Z = Stream(trial_seed(seed, i), STREAM_MC).uniform((M, d))
        nus[i] = torus_min_distance(Z)
    counts = (nus[:, None] >= deltas[None, :]).sum(axis=0)
    lo, hi = proportion_confint(counts, trials, alpha=alpha, method="wilson")
    return {
        "deltas": deltas,
        "p_hat": counts / trials,
        "ci_low": np.atleast_1d(lo),
        "ci_high": np.atleast_1d(hi),
        "counts": counts,
        "trials": trials,
        "nu": nus,
    }
