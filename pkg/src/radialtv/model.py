"""Point-source measures, radial-line Fourier sampling and torus geometry.

Sources live in the closed ball of radius 1/2 in R^d.  A sampling scheme
takes the Fourier transform of the measure at ``k * theta`` for integer
frequencies ``k`` and unit directions ``theta``::

    y[k, theta] = sum_j a_j exp(-2i pi k <theta, x_j>)

Measurement arrays are stored with shape ``(T, L)``: rows follow the
frequency list, columns the direction list.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import DomainViolation, EmptyInput, InvalidParams, ShapeError, Unsupported

__all__ = [
    "EPS_DOM",
    "DiscreteMeasure",
    "SamplingScheme",
    "forward_sample",
    "adjoint_apply",
    "to_torus",
    "torus_distance",
    "min_separation",
    "project_point",
    "projected_min_separation",
    "arc_direction",
    "arc_min_separation",
    "tv_norm",
]

EPS_DOM = 1e-9
ARC_GRID_PER_UNIT = 4096


@dataclass(frozen=True)
class DiscreteMeasure:
    """``sum_j amplitudes[j] * delta(positions[j])``.

    ``positions`` has shape ``(M, d)``.  Positions must be pairwise
    distinct; membership of the domain is checked by the sampling operator.
    """

    positions: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float, ndmin=2)
        amp = np.array(self.amplitudes, dtype=complex).ravel()
        if pos.ndim != 2 or pos.shape[0] != amp.size:
            raise ShapeError(f"{pos.shape[0]} positions but {amp.size} amplitudes")
        if amp.size == 0:
            raise EmptyInput("a measure needs at least one atom")
        if pos.shape[0] > 1:
            same = np.all(pos[:, None, :] == pos[None, :, :], axis=-1)
            np.fill_diagonal(same, False)
            if same.any():
                raise InvalidParams("atom positions must be pairwise distinct")
        pos.setflags(write=False)
        amp.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def M(self) -> int:
        return self.amplitudes.size

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def signs(self) -> np.ndarray:
        return self.amplitudes / np.abs(self.amplitudes)

    def in_domain(self, eps: float = EPS_DOM) -> bool:
        return bool(np.all(np.linalg.norm(self.positions, axis=1) <= 0.5 + eps))

    def check_domain(self, eps: float = EPS_DOM):
        norms = np.linalg.norm(self.positions, axis=1)
        if np.any(norms > 0.5 + eps):
            j = int(np.argmax(norms))
            raise DomainViolation(f"atom {j} has norm {norms[j]:.6g} > 1/2")

    def sorted(self) -> "DiscreteMeasure":
        """Atoms in lexicographic order of position."""
        order = np.lexsort(self.positions.T[::-1])
        return DiscreteMeasure(self.positions[order], self.amplitudes[order])


@dataclass(frozen=True)
class SamplingScheme:
    """Directions ``(L, d)``, strictly increasing frequencies in ``[-N, N]``, bandwidth ``N``."""

    directions: np.ndarray
    freqs: np.ndarray
    bandwidth: int

    def __post_init__(self):
        dirs = np.array(self.directions, dtype=float, ndmin=2)
        freqs = np.array(self.freqs, dtype=int).ravel()
        N = int(self.bandwidth)
        if N < 1:
            raise InvalidParams("bandwidth must be >= 1")
        if dirs.shape[0] == 0 or freqs.size == 0:
            raise EmptyInput("need at least one direction and one frequency")
        if np.any(np.abs(np.linalg.norm(dirs, axis=1) - 1.0) > 1e-12):
            raise InvalidParams("directions must be unit vectors")
        if np.any(np.abs(freqs) > N):
            raise InvalidParams("frequency outside [-N, N]")
        if np.any(np.diff(freqs) <= 0):
            raise InvalidParams("frequencies must be strictly increasing")
        for i, j in combinations(range(dirs.shape[0]), 2):
            if abs(abs(dirs[i] @ dirs[j]) - 1.0) <= 1e-12:
                raise InvalidParams(f"directions {i} and {j} are equal or antipodal")
        dirs.setflags(write=False)
        freqs.setflags(write=False)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "bandwidth", N)

    @property
    def L(self) -> int:
        return self.directions.shape[0]

    @property
    def T(self) -> int:
        return self.freqs.size

    @property
    def d(self) -> int:
        return self.directions.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.T, self.L)

    def full_band(self) -> bool:
        return self.T == 2 * self.bandwidth + 1

    def subset(self, idx) -> "SamplingScheme":
        return SamplingScheme(self.directions[list(idx)], self.freqs, self.bandwidth)


def forward_sample(measure: DiscreteMeasure, scheme: SamplingScheme) -> np.ndarray:
    """Fourier samples of ``measure`` on the radial lines; shape ``(T, L)``."""
    measure.check_domain()
    if measure.d != scheme.d:
        raise ShapeError(f"measure lives in R^{measure.d}, scheme in R^{scheme.d}")
    proj = scheme.directions @ measure.positions.T  # (L, M)
    phase = np.multiply.outer(scheme.freqs.astype(float), proj)  # (T, L, M)
    return np.exp(-2j * np.pi * phase) @ measure.amplitudes


def adjoint_apply(q, scheme: SamplingScheme, x):
    """``sum_{k, theta} q[k, theta] exp(2i pi k <theta, x>)`` at one point or rows of points."""
    q = np.asarray(q, dtype=complex)
    if q.shape != scheme.shape:
        raise ShapeError(f"coefficients have shape {q.shape}, scheme expects {scheme.shape}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != scheme.d:
        raise ShapeError("point dimension does not match the scheme")
    k = scheme.freqs.astype(float)
    out = np.zeros(pts.shape[0], dtype=complex)
    for ell in range(scheme.L):
        t = pts @ scheme.directions[ell]
        out += np.exp(2j * np.pi * np.multiply.outer(t, k)) @ q[:, ell]
    return complex(out[0]) if single else out


def to_torus(t):
    """Canonical representative in ``[0, 1)``."""
    r = np.mod(t, 1.0)
    # tiny negative inputs round to exactly 1.0
    r = np.where(r >= 1.0, 0.0, r)
    return float(r) if np.ndim(r) == 0 else r


def torus_distance(s, t):
    d = np.mod(np.abs(np.asarray(s, dtype=float) - np.asarray(t, dtype=float)), 1.0)
    d = np.minimum(d, 1.0 - d)
    return float(d) if np.ndim(d) == 0 else d


def min_separation(points) -> float:
    """Smallest pairwise torus distance; ``inf`` for a single point."""
    pts = np.asarray(points, dtype=float).ravel()
    if pts.size == 0:
        raise EmptyInput("no points")
    if pts.size == 1:
        return float("inf")
    s = np.sort(to_torus(pts))
    gaps = np.diff(np.append(s, s[0] + 1.0))
    return float(max(gaps.min(), 0.0))


def project_point(x, theta) -> float:
    return to_torus(float(np.dot(x, theta)))


def projected_min_separation(measure: DiscreteMeasure, theta) -> float:
    return min_separation(measure.positions @ np.asarray(theta, dtype=float))


def arc_direction(t):
    """Unit vector ``(sin(pi t), cos(pi t))``; vectorized over ``t``."""
    t = np.asarray(t, dtype=float)
    return np.stack([np.sin(np.pi * t), np.cos(np.pi * t)], axis=-1)


def arc_min_separation(measure: DiscreteMeasure, arc: tuple[float, float]) -> float:
    """Infimum over ``t`` in ``arc`` of the projected separation along ``arc_direction(t)``.

    Each pairwise function ``t -> |<x_j - x_k, theta(t)>|_T`` is sampled on a
    grid of 4096 points per unit of ``t``; every grid-local minimum that could
    still beat the global grid minimum (Lipschitz bound) is refined by a
    bounded scalar minimization on its two neighbouring cells.
    """
    if measure.d != 2:
        raise Unsupported("arc infimum only implemented for d = 2")
    lo, hi = float(arc[0]), float(arc[1])
    if hi < lo:
        raise InvalidParams("arc must satisfy lo <= hi")
    if measure.M == 1:
        return float("inf")
    if hi == lo:
        return projected_min_separation(measure, arc_direction(lo))

    n = max(int(np.ceil((hi - lo) * ARC_GRID_PER_UNIT)), 1) + 1
    grid = np.linspace(lo, hi, n)
    h = grid[1] - grid[0]
    iu, ju = np.triu_indices(measure.M, 1)
    deltas = measure.positions[iu] - measure.positions[ju]  # (P, 2)
    vals = torus_distance(deltas @ arc_direction(grid).T, 0.0)  # (P, n)
    best = float(vals.min())
    # |d/dt <delta, theta(t)>| <= pi |delta|
    slack = np.pi * np.linalg.norm(deltas, axis=1) * h

    def pair_fn(delta):
        return lambda t: float(torus_distance(delta @ arc_direction(t), 0.0))

    for p in range(deltas.shape[0]):
        v = vals[p]
        if v.min() - slack[p] > best:
            continue
        left = np.r_[np.inf, v[:-1]]
        right = np.r_[v[1:], np.inf]
        cand = np.flatnonzero((v <= left) & (v <= right) & (v - slack[p] <= best))
        f = pair_fn(deltas[p])
        for i in cand:
            a, b = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
            res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 1e-12})
            best = min(best, float(res.fun))
    return best


def tv_norm(measure: DiscreteMeasure) -> float:
    return float(np.abs(measure.amplitudes).sum())
