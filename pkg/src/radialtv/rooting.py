"""Trigonometric polynomials on the torus and their modulus-one points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .exceptions import DegeneratePolynomial, ShapeError

__all__ = ["TrigPolynomial", "ExtremalSet", "eval_trig", "extremal_points", "sup_norm"]


@dataclass(frozen=True)
class TrigPolynomial:
    """``p(t) = sum_{k=-N}^{N} coeffs[k + N] * exp(2i pi k t)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        if c.size % 2 == 0:
            raise ShapeError("coefficient vector must have odd length 2N+1")
        object.__setattr__(self, "coeffs", c)

    @property
    def bandwidth(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def freqs(self) -> np.ndarray:
        N = self.bandwidth
        return np.arange(-N, N + 1)

    def __call__(self, t):
        return eval_trig(self, t)

    def derivatives(self, t):
        """``p, p', p''`` at the points ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = self.freqs
        E = np.exp(2j * np.pi * np.outer(t, k))
        w = 2j * np.pi * k
        p = E @ self.coeffs
        dp = E @ (w * self.coeffs)
        d2p = E @ (w * w * self.coeffs)
        return p, dp, d2p

    def scaled(self, factor: complex) -> "TrigPolynomial":
        return TrigPolynomial(self.coeffs * factor)


@dataclass(frozen=True)
class ExtremalSet:
    points: np.ndarray
    moduli: np.ndarray

    def __len__(self):
        return self.points.size


def eval_trig(p: TrigPolynomial, t):
    t_arr = np.asarray(t, dtype=float)
    vals = np.exp(2j * np.pi * np.multiply.outer(t_arr, p.freqs)) @ p.coeffs
    return vals if t_arr.ndim else complex(vals)


def _refine_max(p: TrigPolynomial, t: np.ndarray, steps: int = 8, window: float | None = None) -> np.ndarray:
    """Newton iterations on ``d/dt |p|^2 = 0`` toward nearby local maxima."""
    N = max(p.bandwidth, 1)
    if window is None:
        window = 0.25 / N
    t0 = np.array(t, dtype=float)
    t = t0.copy()
    for _ in range(steps):
        v, dv, d2v = p.derivatives(t)
        f1 = 2 * np.real(np.conj(v) * dv)
        f2 = 2 * (np.abs(dv) ** 2 + np.real(np.conj(v) * d2v))
        ok = f2 < 0
        step = np.where(ok, -f1 / np.where(ok, f2, -1.0), 0.0)
        t = t + step
        if np.all(np.abs(step) < 1e-15):
            break
    # abandon refinements that wandered off or decreased |p|
    drift = np.abs((t - t0 + 0.5) % 1.0 - 0.5)
    worse = np.abs(eval_trig(p, t)) < np.abs(eval_trig(p, t0))
    t = np.where((drift > window) | worse, t0, t)
    return t % 1.0


def _algebraic_coefficients(c: np.ndarray) -> np.ndarray:
    """Ascending coefficients of ``X^{2N} (1 - sum_m r_m X^m)``, ``r`` the autocorrelation."""
    N = (c.size - 1) // 2
    r = np.convolve(c, np.conj(c[::-1]))  # r[i] is the lag m = i - 2N
    a = -r
    a[2 * N] += 1.0
    return a


def _polish(coeffs_desc: np.ndarray, roots: np.ndarray, steps: int = 5) -> tuple[np.ndarray, np.ndarray]:
    deriv = np.polyder(coeffs_desc)
    absc = np.abs(coeffs_desc)

    def resid(z):
        scale = np.polyval(absc, np.abs(z))
        return np.abs(np.polyval(coeffs_desc, z)) / np.where(scale > 0, scale, 1.0)

    z = roots.copy()
    res = np.full(z.shape, np.inf)
    # only roots that could end up near the unit circle are worth polishing
    active = np.abs(np.abs(z) - 1.0) < 0.5
    with np.errstate(over="ignore", invalid="ignore"):
        res[active] = resid(z[active])
    bad = active & (res > 1e-8)
    for _ in range(steps):
        if not bad.any():
            break
        zb = z[bad]
        d = np.polyval(deriv, zb)
        upd = np.where(d != 0, np.polyval(coeffs_desc, zb) / np.where(d != 0, d, 1.0), 0.0)
        znew = zb - upd
        better = resid(znew) < resid(zb)
        zb = np.where(better, znew, zb)
        z[bad] = zb
        res[active] = resid(z[active])
        bad = active & (res > 1e-8)
    return z, res


def extremal_points(p: TrigPolynomial, modulus_tol: float = 1e-4, cluster_tol: float = 1e-6) -> ExtremalSet:
    """Points of the torus where ``|p|`` reaches one.

    The roots of the self-inversive algebraic polynomial associated with
    ``1 - |p|^2`` are computed as eigenvalues of its (balanced) companion
    matrix; roots within ``modulus_tol`` of the unit circle are mapped to
    the torus, moved to the nearby local maximum of ``|p|``, merged when
    closer than ``cluster_tol`` and kept only if ``|p| >= 1 - 10 *
    modulus_tol`` there.
    """
    c = p.coeffs
    if not np.any(c):
        return ExtremalSet(np.empty(0), np.empty(0))
    a = _algebraic_coefficients(c)
    amax = np.abs(a).max()
    if amax < 1e-12:
        raise DegeneratePolynomial("|p| is identically one")
    nz = np.flatnonzero(np.abs(a) > 1e-13 * amax)
    a = a[nz[0]:nz[-1] + 1]
    if a.size < 2:
        return ExtremalSet(np.empty(0), np.empty(0))
    desc = a[::-1]
    comp = sla.companion(desc)
    comp, _ = sla.matrix_balance(comp, permute=False)
    roots = np.linalg.eigvals(comp)
    roots, res = _polish(desc, roots)
    near = np.abs(np.abs(roots) - 1.0) <= modulus_tol
    if not near.any():
        return ExtremalSet(np.empty(0), np.empty(0))
    roots, res = roots[near], res[near]
    t = (np.angle(roots) / (2 * np.pi)) % 1.0
    t = _refine_max(p, t)

    order = np.argsort(t)
    t, res = t[order], res[order]
    weights = 1.0 / (res + 1e-300)
    clusters = [[0]]
    for i in range(1, t.size):
        if t[i] - t[clusters[-1][-1]] <= cluster_tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    if len(clusters) > 1 and (t[clusters[0][0]] + 1.0 - t[clusters[-1][-1]]) <= cluster_tol:
        first = clusters.pop(0)
        clusters[-1].extend(first)
    pts = []
    for cl in clusters:
        tc = t[cl]
        # unwrap around the first member before averaging
        tc = tc[0] + ((tc - tc[0] + 0.5) % 1.0 - 0.5)
        pts.append(float(np.average(tc, weights=weights[cl])) % 1.0)
    pts = np.sort(np.array(pts))
    mods = np.abs(eval_trig(p, pts))
    keep = mods >= 1.0 - 10 * modulus_tol
    return ExtremalSet(pts[keep], mods[keep])


def sup_norm(p: TrigPolynomial, grid_size: int | None = None) -> float:
    """``max_t |p(t)|`` from an equispaced grid plus Newton refinement of local maxima."""
    N = p.bandwidth
    if grid_size is None:
        grid_size = 16 * N + 16
    G = int(max(grid_size, 8 * N + 8))
    spec = np.zeros(G, dtype=complex)
    spec[p.freqs % G] += p.coeffs
    vals = np.abs(np.fft.ifft(spec) * G)
    if N == 0:
        return float(vals.max())
    locmax = np.flatnonzero((vals >= np.roll(vals, 1)) & (vals >= np.roll(vals, -1)))
    if locmax.size == 0:
        return float(vals.max())
    t = _refine_max(p, locmax / G, window=2.0 / G)
    return float(max(vals.max(), np.abs(eval_trig(p, t)).max()))
