"""Splitting recovery: per-direction certificates, candidate support, amplitudes.

Step 1 solves the univariate dual program on every radial line and
extracts the points where its polynomial reaches modulus one.  Step 2 runs
over direction subsets of size ``lprime`` in lexicographic order, builds
the candidate support from their extremal sets, fits amplitudes on all
samples and accepts the first subset whose fitted signs agree with the
averaged per-direction polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._parallel import pmap
from .exceptions import (
    InvalidParams,
    NoValidSubset,
    NotInjective,
    RadialTVError,
    ShapeError,
)
from .geometry import CandidateSupport, candidate_support
from .model import DiscreteMeasure, SamplingScheme
from .rooting import ExtremalSet, TrigPolynomial, eval_trig, extremal_points, sup_norm
from .sdp import DualSolution, UnivariateDualProblem, default_lambda, solve_univariate_dual

__all__ = [
    "RecoveryConfig",
    "DirectionFit",
    "RecoveryResult",
    "build_system",
    "solve_amplitudes",
    "sign_consistency",
    "verify_certificate",
    "recover",
    "recover_noisy",
    "recovery_errors",
    "solve_directions",
    "amplitude_zscores",
]


@dataclass(frozen=True)
class RecoveryConfig:
    """Knobs of the splitting recovery.

    ``lprime=None`` uses all directions.  ``lam > 0`` selects the
    regularized program and neighbourhood matching; the neighbourhood
    radius defaults to ``lam / (||y||_2 N)``: ``lam`` is in data units and
    projection errors shrink like the noise level over the bandwidth.
    ``sign_tol=None`` means ``1e-4`` for exact data and ``0.1`` for noisy
    data.  Candidates whose amplitude is below
    ``prune_z`` least-squares standard errors (data noise or, for exact
    data, round-off) are dropped one at a time.
    """

    lprime: int | None = None
    lam: float = 0.0
    sdp_tol: float = 1e-12
    sdp_max_iter: int = 200
    sign_tol: float | None = None
    residual_tol: float = 1e-6
    sigma_min_ratio: float = 1e-8
    amp_prune: float = 1e-8
    prune_z: float = 5.0
    modulus_tol: float = 1e-4
    cluster_tol: float = 1e-6
    support_tol: float = 1e-6
    radius: float | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidParams("lam must be nonnegative")
        if self.lprime is not None and self.lprime < 1:
            raise InvalidParams("lprime must be positive")
        if self.sdp_tol <= 0:
            raise InvalidParams("sdp_tol must be positive")

    @property
    def noisy(self) -> bool:
        return self.lam > 0

    def effective_sign_tol(self) -> float:
        if self.sign_tol is not None:
            return self.sign_tol
        return 0.1 if self.noisy else 1e-4


@dataclass(frozen=True)
class DirectionFit:
    """Outcome of step 1 on one radial line; ``error`` is set when it failed."""

    index: int
    solution: DualSolution | None
    extremals: ExtremalSet | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def polynomial(self) -> TrigPolynomial:
        return self.solution.polynomial()


@dataclass(frozen=True)
class RecoveryResult:
    measure: DiscreteMeasure
    subset_used: tuple
    directions_used: np.ndarray
    per_direction: tuple
    certificate_ok: bool | None
    support: CandidateSupport
    diagnostics: dict = field(default_factory=dict)


def build_system(dirs, freqs, support) -> np.ndarray:
    """``A[(k, theta), j] = exp(-2i pi k <theta, x_j>)``, rows ordered ``k`` major then ``theta``."""
    pts = np.asarray(getattr(support, "points", support), dtype=float)
    pts = np.atleast_2d(pts)
    if pts.shape[0] == 0:
        raise InvalidParams("empty support")
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    k = np.asarray(freqs, dtype=float)
    proj = dirs @ pts.T  # (L, M)
    A = np.exp(-2j * np.pi * np.multiply.outer(k, proj))  # (T, L, M)
    return A.reshape(-1, pts.shape[0])


def solve_amplitudes(A: np.ndarray, y, sigma_ratio: float = 1e-8):
    """Least squares ``A a = vec(y)``; returns ``(a, sigma_min, residual)``.

    Raises ``NotInjective`` when ``sigma_min < sigma_ratio * sigma_max``.
    """
    b = np.asarray(y, dtype=complex).reshape(-1)
    if A.shape[0] != b.size:
        raise ShapeError(f"system has {A.shape[0]} rows, data has {b.size} entries")
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    smax, smin = float(s[0]), float(s[-1])
    if A.shape[1] > A.shape[0] or smin < sigma_ratio * smax:
        raise NotInjective(f"sigma_min={smin:.3g} vs sigma_max={smax:.3g}")
    a = Vh.conj().T @ ((U.conj().T @ b) / s)
    residual = float(np.linalg.norm(A @ a - b))
    return a, smin, residual


def amplitude_zscores(A: np.ndarray, y, amps: np.ndarray, residual: float) -> np.ndarray:
    """``|a_j|`` over its least-squares standard error under white noise."""
    n, k = A.shape
    dof = max(n - k, 1)
    sigma = residual / np.sqrt(dof)
    cov = np.linalg.pinv(A.conj().T @ A)
    se = sigma * np.sqrt(np.maximum(np.real(np.diag(cov)), 0.0))
    return np.abs(amps) / np.where(se > 0, se, np.finfo(float).tiny)


def _prune_insignificant(dirs, freqs, pts, y, amps, smin, resid, config):
    """Drop the least significant candidate until every amplitude clears ``prune_z``."""
    while pts.shape[0] > 1:
        A = build_system(dirs, freqs, pts)
        z = amplitude_zscores(A, y, amps, resid)
        j = int(np.argmin(z))
        if z[j] >= config.prune_z:
            break
        pts = np.delete(pts, j, axis=0)
        amps, smin, resid = solve_amplitudes(build_system(dirs, freqs, pts), y, config.sigma_min_ratio)
    return pts, amps, smin, resid


def _signs(a: np.ndarray) -> np.ndarray:
    return a / np.abs(a)


def certificate_values(points, polys, dirs) -> np.ndarray:
    """``mean_theta p_theta(<theta, x>)`` at each point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.zeros(pts.shape[0], dtype=complex)
    for p, th in zip(polys, dirs):
        vals += eval_trig(p, pts @ np.asarray(th, dtype=float))
    return vals / len(polys)


def sign_consistency(amplitudes, support, polys, dirs, tol: float = 1e-4):
    """``(ok, max_error)`` comparing ``sgn(a_j)`` with the averaged polynomials at ``x_j``."""
    a = np.asarray(amplitudes, dtype=complex)
    pts = np.asarray(getattr(support, "points", support), dtype=float)
    if a.size == 0:
        return False, float("inf")
    err = float(np.max(np.abs(_signs(a) - certificate_values(pts, polys, dirs))))
    return err <= tol, err


def verify_certificate(solutions, dirs, support, amplitudes, sup_tol: float = 1e-6, interp_tol: float = 1e-4) -> bool:
    """Check ``sup |p_theta| <= 1 + sup_tol`` and ``p_theta(<theta, x_j>) = sgn(a_j)`` on every line."""
    pts = np.atleast_2d(np.asarray(getattr(support, "points", support), dtype=float))
    sg = _signs(np.asarray(amplitudes, dtype=complex))
    for sol, th in zip(solutions, dirs):
        p = sol.polynomial() if hasattr(sol, "polynomial") else TrigPolynomial(sol)
        if sup_norm(p) > 1 + sup_tol:
            return False
        if np.max(np.abs(eval_trig(p, pts @ np.asarray(th, dtype=float)) - sg)) > interp_tol:
            return False
    return True


def _fit_direction(args) -> DirectionFit:
    idx, y_col, scheme, config, lam = args
    try:
        sol = solve_univariate_dual(
            UnivariateDualProblem(y_col, scheme.freqs, scheme.bandwidth, lam),
            tol=config.sdp_tol,
            max_iter=config.sdp_max_iter,
        )
        ext = extremal_points(sol.polynomial(), config.modulus_tol, config.cluster_tol)
    except RadialTVError as exc:
        return DirectionFit(idx, None, None, f"{type(exc).__name__}: {exc}")
    return DirectionFit(idx, sol, ext)


def _check_inputs(y, scheme: SamplingScheme) -> np.ndarray:
    y = np.asarray(y, dtype=complex)
    if y.shape != scheme.shape:
        raise ShapeError(f"measurements have shape {y.shape}, scheme expects {scheme.shape}")
    return y


def solve_directions(y, scheme: SamplingScheme, config: RecoveryConfig | None = None) -> tuple:
    """Step 1 on every radial line: dual program and extremal set."""
    config = config or RecoveryConfig()
    y = _check_inputs(y, scheme)
    return tuple(pmap(_fit_direction, [(i, y[:, i], scheme, config, config.lam) for i in range(scheme.L)]))


def _run(y, scheme: SamplingScheme, config: RecoveryConfig, fits=None) -> RecoveryResult:
    y = _check_inputs(y, scheme)
    L, d = scheme.L, scheme.d
    lprime = L if config.lprime is None else config.lprime
    if not d <= lprime <= L:
        raise InvalidParams(f"lprime must lie in [{d}, {L}], got {lprime}")
    noisy = config.noisy
    if fits is None:
        fits = solve_directions(y, scheme, config)
    elif len(fits) != L:
        raise InvalidParams(f"{len(fits)} direction fits for {L} directions")
    valid = [f.index for f in fits if f.ok]
    sign_tol = config.effective_sign_tol()
    ynorm = float(np.linalg.norm(y))
    radius = config.radius if config.radius is not None else (config.lam / (ynorm * scheme.bandwidth) if ynorm > 0 else 0.0)
    A_full = None

    attempts = []
    for subset in combinations(valid, lprime):
        sub_dirs = scheme.directions[list(subset)]
        note = {"subset": subset}
        attempts.append(note)
        try:
            cs = candidate_support(
                sub_dirs,
                [fits[i].extremals for i in subset],
                mode="neighborhood" if noisy else "exact",
                tol=config.support_tol,
                lam=radius if noisy else None,
            )
        except RadialTVError as exc:
            note["failure"] = f"{type(exc).__name__}: {exc}"
            continue
        note["candidates"] = len(cs)
        if len(cs) == 0:
            note["failure"] = "empty candidate support"
            continue
        try:
            A_full = build_system(scheme.directions, scheme.freqs, cs)
            amps, smin, resid = solve_amplitudes(A_full, y, config.sigma_min_ratio)
        except NotInjective as exc:
            note["failure"] = f"NotInjective: {exc}"
            continue
        keep = np.abs(amps) > config.amp_prune * np.abs(amps).max()
        pts = cs.points[keep]
        if not keep.all():
            amps, smin, resid = solve_amplitudes(build_system(scheme.directions, scheme.freqs, pts), y,
                                                 config.sigma_min_ratio)
        if pts.shape[0] > 1:
            pts, amps, smin, resid = _prune_insignificant(scheme.directions, scheme.freqs, pts, y, amps, smin, resid, config)
        rel_resid = resid / ynorm if ynorm > 0 else resid
        note.update(sigma_min=smin, residual=resid, kept=int(pts.shape[0]))
        if not noisy and rel_resid > config.residual_tol:
            note["failure"] = f"relative residual {rel_resid:.3g} exceeds {config.residual_tol:g}"
            continue
        polys = [fits[i].polynomial() for i in subset]
        ok, sign_err = sign_consistency(amps, pts, polys, sub_dirs, sign_tol)
        note["sign_error"] = sign_err
        if not ok:
            note["failure"] = f"sign mismatch {sign_err:.3g}"
            continue

        measure = DiscreteMeasure(pts, amps).sorted()
        sols = [fits[i].solution for i in subset]
        dual_value = float(np.mean([np.vdot(s.c[scheme.freqs + scheme.bandwidth], y[:, i]).real
                                    for s, i in zip(sols, subset)]))
        cert_ok = None if noisy else verify_certificate(sols, sub_dirs, measure.positions, measure.amplitudes)
        diagnostics = {
            "residual": resid,
            "relative_residual": rel_resid,
            "sigma_min": smin,
            "sign_error": sign_err,
            "candidates": len(cs),
            "stage_count": cs.stage_count,
            "dual_value": dual_value,
            "tv_norm": float(np.abs(measure.amplitudes).sum()),
            "duality_gap": abs(dual_value - float(np.abs(measure.amplitudes).sum())),
            "objectives": [f.solution.objective if f.ok else None for f in fits],
            "direction_errors": {f.index: f.error for f in fits if not f.ok},
            "attempts": attempts,
            "radius": radius if noisy else None,
            "lam": config.lam,
        }
        return RecoveryResult(
            measure=measure,
            subset_used=tuple(subset),
            directions_used=sub_dirs,
            per_direction=tuple(fits),
            certificate_ok=cert_ok,
            support=cs,
            diagnostics=diagnostics,
        )

    raise NoValidSubset(
        f"no subset of {lprime} directions out of {len(valid)} usable passed the checks",
        diagnostics={
            "attempts": attempts,
            "direction_errors": {f.index: f.error for f in fits if not f.ok},
            "objectives": [f.solution.objective if f.ok else None for f in fits],
        },
    )


def recover(y, scheme: SamplingScheme, config: RecoveryConfig | None = None, fits=None) -> RecoveryResult:
    """Exact-data recovery; raises ``NoValidSubset`` when no subset certifies.

    ``fits`` may carry the output of ``solve_directions`` for the same data
    and program settings, to try several subset sizes without re-solving.
    """
    config = config or RecoveryConfig()
    if config.noisy:
        raise InvalidParams("recover expects lam == 0; use recover_noisy")
    return _run(y, scheme, config, fits)


def recover_noisy(y, scheme: SamplingScheme, config: RecoveryConfig | None = None,
                  noise_level: float | None = None) -> RecoveryResult:
    """Noisy-data variant: regularized programs and neighbourhood matching.

    When ``config.lam`` is zero the weight ``default_lambda(y, noise_level)``
    is used.
    """
    config = config or RecoveryConfig()
    if not config.noisy:
        config = replace(config, lam=default_lambda(y, noise_level))
    return _run(y, scheme, config)


def recovery_errors(truth: DiscreteMeasure, estimate: DiscreteMeasure) -> tuple[float, float]:
    """``(Err_pos, Err_amp)`` after optimal matching of atoms.

    ``Err_pos`` is the Euclidean norm of the stacked position differences,
    ``Err_amp`` the relative 2-norm amplitude error.  Different atom counts
    give infinite errors.
    """
    if truth.M != estimate.M or truth.d != estimate.d:
        return float("inf"), float("inf")
    cost = np.linalg.norm(truth.positions[:, None, :] - estimate.positions[None, :, :], axis=2)
    rows, cols = linear_sum_assignment(cost)
    err_pos = float(np.linalg.norm(truth.positions[rows] - estimate.positions[cols]))
    err_amp = float(np.linalg.norm(truth.amplitudes[rows] - estimate.amplitudes[cols])
                    / np.linalg.norm(truth.amplitudes))
    return err_pos, err_amp
