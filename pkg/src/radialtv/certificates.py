"""Vanishing-derivatives precertificate and its nondegeneracy test.

With the measure known, the precertificate is the minimum-norm ``q`` with

    (Phi^* q)(x_j) = sgn(a_j),   grad (Phi^* q)(x_j) = 0,

where ``(Phi^* q)(x) = sum_{k, theta} q[k, theta] exp(2i pi k <theta, x>)``.
It is nondegenerate when ``|Phi^* q| <= 1`` on the domain and stays
strictly below one away from the sources.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import maximum_filter

from .exceptions import InfeasibleInterpolation, InvalidParams, Unsupported
from .model import DiscreteMeasure, SamplingScheme

__all__ = [
    "Precertificate",
    "NondegeneracyReport",
    "interpolation_system",
    "vanishing_derivatives",
    "is_nondegenerate",
]

RCOND = 1e-10
RESIDUAL_TOL = 1e-6
SUP_TOL = 1e-6
MARGIN_TOL = 1e-6
CANDIDATE_LEVEL = 0.9


@dataclass(frozen=True)
class Precertificate:
    """Coefficients ``q`` of shape ``(T, L)`` on the scheme's frequencies and directions."""

    q: np.ndarray
    basis: np.ndarray
    solve_residual: float
    directions: np.ndarray
    freqs: np.ndarray
    bandwidth: int

    def scaled(self, factor: float) -> "Precertificate":
        return replace(self, q=self.q * factor)

    def __call__(self, x):
        v, _, _ = self.derivatives(x, order=0)
        return v if np.ndim(x) > 1 else complex(v[0])

    def derivatives(self, x, order: int = 2):
        """Values ``(n,)``, gradients ``(n, d)`` and Hessians ``(n, d, d)`` at rows of ``x``."""
        X = np.atleast_2d(np.asarray(x, dtype=float))
        n, d = X.shape
        k = self.freqs.astype(float)
        val = np.zeros(n, dtype=complex)
        grad = np.zeros((n, d), dtype=complex)
        hess = np.zeros((n, d, d), dtype=complex)
        for ell, th in enumerate(self.directions):
            E = np.exp(2j * np.pi * np.outer(X @ th, k))  # (n, T)
            w = 2j * np.pi * k
            qc = self.q[:, ell]
            val += E @ qc
            if order >= 1:
                g1 = E @ (w * qc)
                grad += g1[:, None] * th[None, :]
            if order >= 2:
                g2 = E @ (w * w * qc)
                hess += g2[:, None, None] * np.outer(th, th)[None]
        return val, grad, hess


@dataclass(frozen=True)
class NondegeneracyReport:
    sup_estimate: float
    nondegenerate: bool
    margin_outside: float
    grid_resolution: int
    info: dict = field(default_factory=dict, compare=False)


def _orthonormal(basis, d: int) -> np.ndarray:
    if basis is None:
        return np.eye(d)
    V = np.asarray(basis, dtype=float)
    if V.shape != (d, d) or not np.allclose(V @ V.T, np.eye(d), atol=1e-10):
        raise InvalidParams("basis must be d orthonormal rows")
    return V


def interpolation_system(measure: DiscreteMeasure, scheme: SamplingScheme, basis=None):
    """Stacked ``((d+1) M, T L)`` matrix and right-hand side.

    Columns follow ``q.reshape(-1)`` (frequency major).  The first ``M`` rows
    interpolate the signs; block ``l`` of the next ``d M`` rows is the
    derivative along ``basis[l]``.
    """
    V = _orthonormal(basis, scheme.d)
    k = scheme.freqs.astype(float)
    proj = measure.positions @ scheme.directions.T  # (M, L)
    E = np.exp(2j * np.pi * proj[:, None, :] * k[None, :, None])  # (M, T, L)
    rows = [E.reshape(measure.M, -1)]
    for v in V:
        dirv = scheme.directions @ v  # (L,)
        D = 2j * np.pi * k[None, :, None] * dirv[None, None, :] * E
        rows.append(D.reshape(measure.M, -1))
    F = np.vstack(rows)
    rhs = np.concatenate([measure.signs(), np.zeros(scheme.d * measure.M, dtype=complex)])
    return F, rhs


def vanishing_derivatives(measure: DiscreteMeasure, scheme: SamplingScheme, basis=None,
                          rcond: float = RCOND, residual_tol: float = RESIDUAL_TOL) -> Precertificate:
    """Minimum-norm solution of the interpolation system by pseudo-inverse."""
    if measure.d != scheme.d:
        raise InvalidParams("measure and scheme dimensions differ")
    n_rows = (scheme.d + 1) * measure.M
    if scheme.T * scheme.L < n_rows:
        raise InfeasibleInterpolation(f"{scheme.T * scheme.L} unknowns for {n_rows} constraints")
    F, rhs = interpolation_system(measure, scheme, basis)
    q = np.linalg.pinv(F, rcond=rcond) @ rhs
    resid = float(np.linalg.norm(F @ q - rhs))
    if resid > residual_tol:
        raise InfeasibleInterpolation(f"interpolation residual {resid:.3g} exceeds {residual_tol:g}")
    return Precertificate(
        q=q.reshape(scheme.T, scheme.L),
        basis=_orthonormal(basis, scheme.d),
        solve_residual=resid,
        directions=scheme.directions,
        freqs=scheme.freqs,
        bandwidth=scheme.bandwidth,
    )


def _grid_values(pc: Precertificate, g: np.ndarray) -> np.ndarray:
    """``|eta|`` on the tensor grid ``g^d`` using separable exponentials."""
    d = pc.directions.shape[1]
    k = pc.freqs.astype(float)
    n = g.size
    out = np.zeros((n,) * d, dtype=complex)
    for ell, th in enumerate(pc.directions):
        facs = [np.exp(2j * np.pi * np.outer(k, th[a] * g)) for a in range(d)]  # (T, n) each
        qc = pc.q[:, ell]
        if d == 2:
            out += (facs[0] * qc[:, None]).T @ facs[1]
        else:
            BC = (facs[1][:, :, None] * facs[2][:, None, :]).reshape(k.size, -1)
            out += ((facs[0] * qc[:, None]).T @ BC).reshape(n, n, n)
    return np.abs(out)


def _refine(pc: Precertificate, X: np.ndarray, h: float, steps: int = 12) -> np.ndarray:
    """Newton ascent on ``|eta|^2`` from each row of ``X``; moves limited to ``2 h``."""
    X0 = X.copy()
    X = X.copy()
    for _ in range(steps):
        v, g, H = pc.derivatives(X)
        grad = 2 * np.real(np.conj(v)[:, None] * g)
        hess = 2 * np.real(np.einsum("ni,nj->nij", np.conj(g), g) + np.conj(v)[:, None, None] * H)
        step = np.zeros_like(X)
        for r in range(X.shape[0]):
            w = np.linalg.eigvalsh(hess[r])
            if w.max() < 0:
                step[r] = -np.linalg.solve(hess[r], grad[r])
        X = X + step
        if np.abs(step).max(initial=0.0) < 1e-14:
            break
    drift = np.linalg.norm(X - X0, axis=1)
    out = np.linalg.norm(X, axis=1) > 0.5
    before = np.abs(pc.derivatives(X0, order=0)[0])
    after = np.abs(pc.derivatives(X, order=0)[0])
    bad = (drift > 2 * h) | out | (after < before)
    X[bad] = X0[bad]
    return X


def is_nondegenerate(pc: Precertificate, measure: DiscreteMeasure, scheme: SamplingScheme | None = None,
                     grid_per_axis: int | None = None, r_excl: float | None = None,
                     sup_tol: float = SUP_TOL, margin_tol: float = MARGIN_TOL) -> NondegeneracyReport:
    """Grid search plus Newton refinement of ``|eta|`` over the ball of radius 1/2.

    The grid has ``max(512, 8N)`` points per axis in 2-D and ``max(128, 4N)``
    in 3-D.  Nondegenerate means ``sup |eta| <= 1 + sup_tol`` and
    ``|eta| < 1 - margin_tol`` farther than ``r_excl = 1/(4N)`` from every
    source.
    """
    d = pc.directions.shape[1]
    N = pc.bandwidth if scheme is None else scheme.bandwidth
    if d == 2:
        n = grid_per_axis or max(512, 8 * N)
    elif d == 3:
        n = grid_per_axis or max(128, 4 * N)
    else:
        raise Unsupported("nondegeneracy grid search needs d = 2 or 3")
    if r_excl is None:
        r_excl = 1.0 / (4 * N)
    g = np.linspace(-0.5, 0.5, n)
    h = g[1] - g[0]
    vals = _grid_values(pc, g)
    mesh = np.stack(np.meshgrid(*([g] * d), indexing="ij"), axis=-1)
    inside = np.linalg.norm(mesh, axis=-1) <= 0.5
    vals = np.where(inside, vals, -np.inf)

    peaks = (vals == maximum_filter(vals, size=3, mode="nearest")) & inside & (vals >= CANDIDATE_LEVEL)
    cand = mesh[peaks]
    cand = np.vstack([cand, measure.positions]) if cand.size else measure.positions.copy()
    refined = _refine(pc, cand, h)
    ref_vals = np.abs(pc.derivatives(refined, order=0)[0])

    def far(P):
        dist = np.linalg.norm(P[:, None, :] - measure.positions[None, :, :], axis=-1)
        return dist.min(axis=1) > r_excl

    sup_est = float(max(vals.max(), ref_vals.max()))
    grid_far = far(mesh[inside])
    outside_max = float(vals[inside][grid_far].max(initial=0.0))
    ref_far = far(refined)
    if ref_far.any():
        outside_max = max(outside_max, float(ref_vals[ref_far].max()))
    margin = 1.0 - outside_max
    ok = sup_est <= 1.0 + sup_tol and margin > margin_tol
    return NondegeneracyReport(
        sup_estimate=sup_est,
        nondegenerate=bool(ok),
        margin_outside=float(margin),
        grid_resolution=int(n),
        info={"r_excl": r_excl, "candidates": int(cand.shape[0])},
    )
