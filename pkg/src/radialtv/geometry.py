"""Candidate support from per-direction extremal sets.

Each extremal value ``t`` of direction ``theta`` defines the hyperplane
``{z : <theta, z> = t}``.  The candidate support is the set of points of
the ball of radius 1/2 lying on one hyperplane of every direction.  It is
built by intersecting ``d`` directions exhaustively and filtering the
intersection points with the remaining directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import CombinatorialCap, InvalidParams, NonSpanningDirections
from .model import torus_distance

__all__ = ["CandidateSupport", "candidate_support", "best_conditioned_subset"]

MERGE_TOL = 1e-8
DOMAIN_SLACK = 1e-6
COMBINATORIAL_CAP = 10**7


@dataclass(frozen=True)
class CandidateSupport:
    """Points ``(K, d)`` with provenance.

    ``provenance[i]`` holds one ``(direction index, extremal index)`` pair per
    direction used.  ``stage_count`` is the number of intersection points
    inside the domain after the first ``d`` directions.
    """

    points: np.ndarray
    provenance: tuple = ()
    truncated: bool = False
    stage_count: int = 0
    basis: tuple = ()
    info: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return self.points.shape[0]


def best_conditioned_subset(dirs: np.ndarray) -> tuple[tuple[int, ...], float]:
    """The ``d`` rows of ``dirs`` whose matrix has the largest smallest singular value."""
    dirs = np.asarray(dirs, dtype=float)
    L, d = dirs.shape
    best, best_s = None, -1.0
    for idx in combinations(range(L), d):
        s = np.linalg.svd(dirs[list(idx)], compute_uv=False)[-1]
        if s > best_s:
            best, best_s = idx, s
    return best, float(best_s)


def _lifts(values: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Real representatives in ``[-1/2 - tol, 1/2 + tol]`` of torus values, with source indices."""
    v = np.asarray(values, dtype=float)
    cand = np.concatenate([v - 1.0, v, v + 1.0])
    src = np.tile(np.arange(v.size), 3)
    keep = np.abs(cand) <= 0.5 + tol
    return cand[keep], src[keep]


def _points_of(ext) -> np.ndarray:
    return np.asarray(getattr(ext, "points", ext), dtype=float).ravel()


def candidate_support(
    dirs,
    extremals,
    mode: str = "exact",
    tol: float = 1e-6,
    lam: float | None = None,
    merge_tol: float = MERGE_TOL,
    cap: int = COMBINATORIAL_CAP,
    on_cap: str = "raise",
) -> CandidateSupport:
    """Intersect unions of hyperplanes defined by extremal sets.

    ``extremals[i]`` is an ``ExtremalSet`` (or array of torus points) for
    ``dirs[i]``.  In ``"exact"`` mode the remaining directions keep a point
    when its projection is within ``tol`` (torus distance) of an extremal
    value; ``"neighborhood"`` mode uses ``lam`` instead.  If the
    enumeration would exceed ``cap`` tuples, ``CombinatorialCap`` is raised,
    or with ``on_cap="truncate"`` only the first ``cap`` tuples are used and
    the result is flagged ``truncated``.
    """
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    L, d = dirs.shape
    ext = [_points_of(e) for e in extremals]
    if len(ext) != L:
        raise InvalidParams(f"{L} directions but {len(ext)} extremal sets")
    if L < d:
        raise NonSpanningDirections(f"need at least d={d} directions, got {L}")
    if mode == "exact":
        match_tol = tol
    elif mode == "neighborhood":
        if lam is None or lam < 0:
            raise InvalidParams("neighborhood mode needs lam >= 0")
        match_tol = lam
    else:
        raise InvalidParams(f"unknown mode {mode!r}")

    basis, smin = best_conditioned_subset(dirs)
    if smin < 1e-10:
        raise NonSpanningDirections(f"directions do not span R^{d} (sigma_min={smin:.3g})")
    rest = [i for i in range(L) if i not in basis]
    B = dirs[list(basis)]

    lifts = [_lifts(ext[i], tol) for i in basis]
    sizes = [lv.size for lv, _ in lifts]
    total = int(np.prod(sizes, dtype=float)) if sizes else 0
    truncated = False
    if total > cap:
        if on_cap != "truncate":
            raise CombinatorialCap(f"{total} hyperplane tuples exceed the cap {cap}")
        truncated = True
    empty = CandidateSupport(np.empty((0, d)), (), truncated, 0, tuple(basis))
    if total == 0:
        return empty

    grids = np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")
    combo = np.stack([g.ravel() for g in grids], axis=1)
    if truncated:
        combo = combo[:cap]
    n_tuples = int(combo.shape[0])
    rhs = np.stack([lifts[i][0][combo[:, i]] for i in range(d)], axis=0)  # (d, n)
    Z = np.linalg.solve(B, rhs).T
    inside = np.linalg.norm(Z, axis=1) <= 0.5 + DOMAIN_SLACK
    Z, combo = Z[inside], combo[inside]
    prov = [
        [(basis[i], int(lifts[i][1][combo[r, i]])) for i in range(d)] for r in range(Z.shape[0])
    ]
    stage_pts, stage_prov = _merge(Z, prov, merge_tol)
    stage_count = stage_pts.shape[0]

    keep = np.ones(stage_count, dtype=bool)
    for i in rest:
        vals = ext[i]
        if vals.size == 0:
            keep[:] = False
            break
        proj = stage_pts @ dirs[i]
        dist = torus_distance(proj[:, None], vals[None, :])
        nearest = dist.argmin(axis=1)
        ok = dist[np.arange(stage_count), nearest] <= match_tol
        keep &= ok
        for r in np.flatnonzero(keep):
            stage_prov[r].append((i, int(nearest[r])))
    pts = stage_pts[keep]
    prov = [tuple(stage_prov[r]) for r in np.flatnonzero(keep)]
    if rest and pts.shape[0]:
        pts = _refit(pts, prov, dirs, ext)

    order = np.lexsort(pts.T[::-1]) if pts.size else np.arange(0)
    return CandidateSupport(
        points=pts[order],
        provenance=tuple(prov[r] for r in order),
        truncated=truncated,
        stage_count=int(stage_count),
        basis=tuple(basis),
        info={"sigma_min": smin, "tuples": n_tuples},
    )


def _refit(pts: np.ndarray, prov: list, dirs: np.ndarray, ext: list) -> np.ndarray:
    """Least-squares point on the matched hyperplanes of every direction."""
    out = pts.copy()
    for r, pairs in enumerate(prov):
        rows = np.array([dirs[i] for i, _ in pairs])
        proj = rows @ pts[r]
        target = np.array([ext[i][j] for i, j in pairs])
        # lift each extremal value to the representative nearest the projection
        rhs = proj + ((target - proj + 0.5) % 1.0 - 0.5)
        out[r] = np.linalg.lstsq(rows, rhs, rcond=None)[0]
    return out


def _merge(Z: np.ndarray, prov: list, merge_tol: float):
    """Drop points within ``merge_tol`` of an earlier kept point (lexicographic order)."""
    if Z.shape[0] == 0:
        return Z, []
    order = np.lexsort(Z.T[::-1])
    neighbours = cKDTree(Z).query_ball_point(Z, merge_tol)
    taken = np.zeros(Z.shape[0], dtype=bool)
    kept = []
    for r in order:
        if not any(taken[k] for k in neighbours[r]):
            taken[r] = True
            kept.append(int(r))
    return Z[kept], [list(prov[k]) for k in kept]
