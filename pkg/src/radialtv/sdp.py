"""Per-direction univariate dual SDP (bounded real lemma form).

For samples ``y`` of a measure on the torus at integer frequencies ``freqs``
the dual problem reads::

    maximize    Re <y, c> - lam * ||c||^2
    subject to  [[Q, c], [c^H, 1]] >= 0,
                sum_i Q[i, i + j] = delta_j    for j = 0 .. 2N,
                c_k = 0                        for k not in freqs,

with ``Q`` Hermitian of size 2N+1 and ``c`` indexed by ``k + N``.  The
constraint set is exactly ``{c : sup_t |sum_k c_k exp(2i pi k t)| <= 1}``.

The solver is a primal-dual interior point method (HKM direction,
Mehrotra predictor-corrector) acting on the block matrix
``X = [[Q, c], [c^H, 1]]``.  The linear constraints are shifted identity
patterns, so the Schur complement is assembled from FFT cross-correlations
in ``O(n^2 log n)`` instead of the generic ``O(m n^3)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import sparse
from scipy.sparse import linalg as spla
from scipy.signal import fftconvolve

from .exceptions import InvalidParams, MaxIterationsExceeded, NumericalBreakdown, ShapeError

__all__ = [
    "UnivariateDualProblem",
    "DualSolution",
    "solve_univariate_dual",
    "verify_bounded",
    "default_lambda",
]

EPS_PSD = 1e-8
GAMMA = 0.9
# blocks at least this large get Lanczos step lengths
LANCZOS_MIN = 160
# iterations without improvement before an accurate-enough run is stopped
STALL_ITERS = 5


@dataclass(frozen=True)
class UnivariateDualProblem:
    """Samples along one radial line plus the frequency support.

    ``lam == 0`` is the noiseless program; ``lam > 0`` adds the
    ``-lam * ||c||^2`` regularizer of the robust variant.
    """

    y: np.ndarray
    freqs: np.ndarray
    bandwidth: int
    lam: float = 0.0

    def __post_init__(self):
        y = np.asarray(self.y, dtype=complex).ravel()
        freqs = np.asarray(self.freqs, dtype=int).ravel()
        if y.shape != freqs.shape:
            raise ShapeError(f"y has {y.size} entries but there are {freqs.size} frequencies")
        if self.bandwidth < 1:
            raise ShapeError("bandwidth must be >= 1")
        if np.any(np.abs(freqs) > self.bandwidth):
            raise ShapeError("frequency index outside [-N, N]")
        if np.any(np.diff(freqs) <= 0):
            raise ShapeError("frequencies must be strictly increasing")
        if self.lam < 0:
            raise ShapeError("lam must be nonnegative")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "freqs", freqs)


@dataclass(frozen=True)
class DualSolution:
    """Certificate coefficients ``c`` (index ``k + N``) and the matrix ``Q``.

    ``primal_residual`` measures violation of the linear constraints on the
    block matrix, ``dual_residual`` that of the companion (Toeplitz) program;
    both are relative.  ``gap`` is the relative duality gap.
    """

    c: np.ndarray
    Q: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    bandwidth: int
    info: dict = field(default_factory=dict, compare=False)

    def polynomial(self):
        from .rooting import TrigPolynomial

        return TrigPolynomial(self.c)

    def block_matrix(self) -> np.ndarray:
        n = self.Q.shape[0]
        B = np.empty((n + 1, n + 1), dtype=complex)
        B[:n, :n] = self.Q
        B[:n, n] = self.c
        B[n, :n] = self.c.conj()
        B[n, n] = 1.0
        return B

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.block_matrix())[0])

    def trace_residuals(self) -> np.ndarray:
        """``|sum_i Q[i, i+j] - delta_j|`` for ``j = 0 .. 2N``."""
        n = self.Q.shape[0]
        sums = np.array([np.trace(self.Q, offset=j) for j in range(n)])
        sums[0] -= 1.0
        return np.abs(sums)

    def csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf).writerow(
            [repr(self.objective), repr(self.primal_residual), repr(self.dual_residual), self.iterations]
        )
        return buf.getvalue().strip()


def default_lambda(y, noise_level: float | None = None) -> float:
    """Regularization weight for noisy runs.

    ``1e-2 * ||y||`` without further information; with a known relative
    noise level ``||w|| / ||y||`` it is ``2/3 * noise_level * ||y||``
    (the two agree at 1.5% noise).
    """
    ynorm = float(np.linalg.norm(np.asarray(y).ravel()))
    if noise_level is None:
        return 1e-2 * ynorm
    if noise_level < 0:
        raise InvalidParams("noise level must be nonnegative")
    return 2.0 / 3.0 * noise_level * ynorm


class _ToeplitzOperator:
    """Real and imaginary parts of the diagonal sums ``sum_i G[i, i + j]`` of an ``nq x nq`` block.

    Operator ``j`` (``j = 0..nq-1``) reads ``Re``, operator ``nq - 1 + j``
    (``j >= 1``) reads ``Im``; both act through ``<A, G> = Re tr(A G)``.
    """

    def __init__(self, nq: int):
        self.nq = nq
        self.m = 2 * nq - 1
        # sparse map from operators to diagonal offsets s in [-(nq-1), nq-1]
        rows, cols, vals = [0], [nq - 1], [1.0 + 0j]
        for j in range(1, nq):
            rows += [j, j]
            cols += [nq - 1 + j, nq - 1 - j]
            vals += [0.5, 0.5]
        for j in range(1, nq):
            r = nq - 1 + j
            rows += [r, r]
            cols += [nq - 1 + j, nq - 1 - j]
            vals += [0.5j, -0.5j]
        self.coef = sparse.csr_matrix((vals, (rows, cols)), shape=(self.m, 2 * nq - 1))

    def apply(self, G: np.ndarray) -> np.ndarray:
        v = _diag_sums(G)
        return np.concatenate([v.real, v[1:].imag])

    def adjoint(self, w: np.ndarray) -> np.ndarray:
        nq = self.nq
        row = np.empty(nq, dtype=complex)
        row[0] = w[0]
        row[1:] = 0.5 * (w[1:nq] + 1j * w[nq:])
        return sla.toeplitz(row.conj(), row)

    def schur(self, G: np.ndarray, Y: np.ndarray) -> np.ndarray:
        # H[s, u] = tr(D_s G D_u Y), D_s the ones on diagonal offset s
        corr = fftconvolve(G[::-1, ::-1], Y.T, mode="full")
        H = corr[::-1, :]
        CH = self.coef @ H
        return (self.coef @ CH.T).T.real


def _diag_sums(G: np.ndarray) -> np.ndarray:
    """``[sum_i G[i, i + j] for j in range(n)]``."""
    n = G.shape[0]
    idx = np.arange(n)
    # row-major flat index of G[i, i + j] is i * (n + 1) + j
    flat = G.reshape(-1)
    return np.array([flat[idx[: n - j] * (n + 1) + j].sum() for j in range(n)])


class _BoundedRealOperator:
    """Linear constraint map of the bounded real lemma and its Schur products.

    Operators (all Hermitian, acting through ``<A, X> = Re tr(A X)``):

    * Toeplitz real parts ``j = 0..2N`` and imaginary parts ``j = 1..2N`` of
      the diagonal sums of the ``Q`` block;
    * "column" operators ``(r, part)`` reading ``Re X[r, e]`` or
      ``Im X[r, e]`` where ``e`` is the border index (``r == e`` reads the
      corner entry).
    """

    def __init__(self, nq: int, col_rows: np.ndarray, col_parts: np.ndarray):
        self.nq = nq
        self.n = nq + 1
        self.e = nq
        self.n_toep = 2 * nq - 1
        self.col_rows = np.asarray(col_rows, dtype=int)
        # beta = 1/2 for real part, i/2 for imaginary part
        self.col_beta = np.where(np.asarray(col_parts) == 0, 0.5, 0.5j)
        self.m = self.n_toep + self.col_rows.size

        self.toep = _ToeplitzOperator(nq)

    def apply(self, X: np.ndarray) -> np.ndarray:
        nq, e = self.nq, self.e
        col = X[self.col_rows, e]
        colvals = np.where(self.col_beta.imag == 0, col.real, col.imag)
        return np.concatenate([self.toep.apply(X[:nq, :nq]), colvals])

    def adjoint(self, w: np.ndarray) -> np.ndarray:
        nq = self.nq
        out = self.adjoint_cols(w[self.n_toep:])
        out[:nq, :nq] += self.toep.adjoint(w[:self.n_toep])
        return out

    def adjoint_cols(self, wc: np.ndarray) -> np.ndarray:
        e = self.e
        out = np.zeros((self.n, self.n), dtype=complex)
        # column operator r is beta * e_r e_e^T + conj(beta) * e_e e_r^T
        contrib = self.col_beta * wc
        np.add.at(out[:, e], self.col_rows, contrib)
        np.add.at(out[e, :], self.col_rows, np.conj(contrib))
        return out

    def schur(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """``K[a, b] = Re tr(A_a X A_b Y)`` for all operator pairs."""
        nq, e = self.nq, self.e
        Ktt = self.toep.schur(X[:nq, :nq], Y[:nq, :nq])

        rows = self.col_rows
        if rows.size == 0:
            return Ktt
        beta = self.col_beta
        # T1[s, r] = sum_a Y[e, a] X[a + s, r];  T2[s, r] = sum_a Y[r, a] X[a + s, e]
        u = Y[e, :nq]
        V = X[:nq, rows]
        T1 = fftconvolve(u[::-1, None], V, mode="full", axes=0)
        U = Y[rows, :nq]
        x = X[:nq, e]
        T2 = fftconvolve(U, x[::-1][None, :], mode="full", axes=1)[:, ::-1].T
        T = beta[None, :] * T1 + np.conj(beta)[None, :] * T2
        Ktc = (self.toep.coef @ T).real

        br = beta[:, None]
        bt = beta[None, :]
        Xe_t = X[e, rows][None, :]
        Ye_r = Y[e, rows][:, None]
        Xrt = X[np.ix_(rows, rows)]
        Ytr = Y[np.ix_(rows, rows)].T
        Xr_e = X[rows, e][:, None]
        Yt_e = Y[rows, e][None, :]
        Kcc = (
            br * bt * Xe_t * Ye_r
            + br * np.conj(bt) * X[e, e] * Ytr
            + np.conj(br) * bt * Xrt * Y[e, e]
            + np.conj(br) * np.conj(bt) * Xr_e * Yt_e
        ).real

        K = np.empty((self.m, self.m))
        nt = self.n_toep
        K[:nt, :nt] = Ktt
        K[:nt, nt:] = Ktc
        K[nt:, :nt] = Ktc.T
        K[nt:, nt:] = Kcc
        return K


def _max_step(L: np.ndarray, D: np.ndarray) -> float:
    """Largest ``a`` with ``L L^H + a D`` positive semidefinite.

    Large blocks use a Lanczos estimate of the smallest eigenvalue of
    ``L^-1 D L^-H``, shifted down by its residual norm so the step never
    overshoots; small blocks, or a failed Lanczos run, use a dense solve.
    """
    n = L.shape[0]
    if n >= LANCZOS_MIN:
        lmin = _lanczos_min(L, D)
        if lmin is not None:
            return np.inf if lmin >= 0 else -1.0 / lmin
    W = sla.solve_triangular(L, D, lower=True)
    W = sla.solve_triangular(L, W.conj().T, lower=True)
    W = 0.5 * (W + W.conj().T)
    lmin = np.linalg.eigvalsh(W)[0]
    if lmin >= 0:
        return np.inf
    return -1.0 / lmin


def _lanczos_min(L: np.ndarray, D: np.ndarray) -> float | None:
    """Lower bound on ``lambda_min(L^-1 D L^-H)`` from a few Lanczos steps, or None."""
    n = L.shape[0]
    LH = L.conj().T

    def mv(v):
        u = sla.solve_triangular(LH, v, lower=False, check_finite=False)
        return sla.solve_triangular(L, D @ u, lower=True, check_finite=False)

    op = spla.LinearOperator((n, n), matvec=mv, dtype=complex)
    try:
        vals, vecs = spla.eigsh(op, k=1, which="SA", tol=1e-4, maxiter=20 * n, v0=np.ones(n, dtype=complex))
    except spla.ArpackNoConvergence:
        return None
    v = vecs[:, 0]
    lam = float(vals[0])
    resid = float(np.linalg.norm(mv(v) - lam * v) / np.linalg.norm(v))
    scale = max(abs(lam), 1.0)
    if resid > 1e-2 * scale:
        return None
    return lam - resid


class _Best:
    """Iterate with the smallest residual seen so far."""

    def __init__(self):
        self.merit, self.it, self.state = np.inf, 0, None

    def update(self, merit: float, it: int, state) -> None:
        if merit < self.merit:
            self.merit, self.it, self.state = merit, it, state


def _chol(A: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(0.5 * (A + A.conj().T))
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown(f"{what} lost positive definiteness") from exc


def solve_univariate_dual(
    problem: UnivariateDualProblem,
    tol: float = 1e-10,
    max_iter: int = 200,
    breakdown_tol: float = 1e-7,
) -> DualSolution:
    """Solve the univariate dual SDP to relative accuracy ``tol``.

    Near ``tol`` round-off can stall the iterates or make them lose
    definiteness; the best iterate seen is then returned if it meets
    ``breakdown_tol`` (status ``"stalled"`` or ``"breakdown"``).  Otherwise
    ``MaxIterationsExceeded`` or ``NumericalBreakdown`` is raised.
    """
    N = int(problem.bandwidth)
    nq = 2 * N + 1
    n = nq + 1
    e = nq
    freqs = problem.freqs
    yfull = np.zeros(nq, dtype=complex)
    yfull[freqs + N] = problem.y
    scale = float(np.linalg.norm(yfull))
    if scale == 0.0:
        Q = np.eye(nq, dtype=complex) / nq
        return DualSolution(
            c=np.zeros(nq, dtype=complex), Q=Q, objective=0.0, primal_residual=0.0,
            dual_residual=0.0, gap=0.0, iterations=0, bandwidth=N,
        )
    yn = yfull / scale
    lam = float(problem.lam) / scale

    in_gamma = np.zeros(nq, dtype=bool)
    in_gamma[freqs + N] = True
    if lam == 0 and _is_conjugate_symmetric(yn, in_gamma):
        return _solve_real_form(problem, yn, in_gamma, scale, tol, max_iter, breakdown_tol)
    zero_rows = np.flatnonzero(~in_gamma)
    # constraint column operators: corner, then Re/Im for zeroed coefficients
    c_rows = np.concatenate([[e], np.repeat(zero_rows, 2)])
    c_parts = np.concatenate([[0], np.tile([0, 1], zero_rows.size)])
    op = _BoundedRealOperator(nq, c_rows, c_parts)
    m = op.m
    b = np.zeros(m)
    b[0] = 1.0
    b[op.n_toep] = 1.0

    if lam > 0:
        g_rows = np.flatnonzero(in_gamma)
        pop = _BoundedRealOperator(nq, np.repeat(g_rows, 2), np.tile([0, 1], g_rows.size))
        ext = _BoundedRealOperator(
            nq, np.concatenate([c_rows, pop.col_rows]), np.concatenate([c_parts, np.tile([0, 1], g_rows.size)])
        )
        n_p = pop.col_rows.size
    else:
        pop = ext = None
        n_p = 0

    # objective matrix for minimization: <C, X> = -Re sum conj(y_r) X[r, e]
    C = np.zeros((n, n), dtype=complex)
    C[:nq, e] = -0.5 * yn
    C[e, :nq] = -0.5 * yn.conj()

    def quad_grad(X):
        if lam == 0:
            return 0.0, np.zeros((n, n), dtype=complex)
        col = np.where(in_gamma, X[:nq, e], 0)
        Gm = np.zeros((n, n), dtype=complex)
        Gm[:nq, e] = lam * col
        Gm[e, :nq] = lam * col.conj()
        # gradient of lam*||c||^2 under <A, X> = Re tr(A X) is 2*lam*P*P X
        return lam * float(np.vdot(col, col).real), Gm

    norm_b = 1.0 + np.linalg.norm(b)
    norm_C = 1.0 + np.linalg.norm(C)
    X = np.eye(n, dtype=complex) * float(n) ** 0.5
    S = np.eye(n, dtype=complex) * float(n) ** 0.5
    w = np.zeros(m)
    status = None
    best = _Best()
    it = 0
    for it in range(1, max_iter + 1):
        qval, qgrad = quad_grad(X)
        rp = b - op.apply(X)
        Rd = C + qgrad - op.adjoint(w) - S
        pobj = float(np.vdot(C, X).real) + qval
        dobj = float(b @ w) - qval
        mu = float(np.vdot(X, S).real) / n
        pinf = np.linalg.norm(rp) / norm_b
        dinf = np.linalg.norm(Rd) / norm_C
        relgap = n * mu / (1.0 + abs(pobj) + abs(dobj))
        merit = max(pinf, dinf, relgap)
        best.update(merit, it, (X, w, S, pinf, dinf, relgap, mu))
        if merit <= tol:
            status = "optimal"
            break
        if best.merit <= breakdown_tol and it - best.it >= STALL_ITERS:
            status = "stalled"
            break

        try:
            LX = _chol(X, "primal iterate")
            LS = _chol(S, "dual iterate")
        except NumericalBreakdown:
            if best.merit <= breakdown_tol:
                status = "breakdown"
                break
            raise
        Sinv = sla.cho_solve((LS, True), np.eye(n, dtype=complex))
        Sinv = 0.5 * (Sinv + Sinv.conj().T)

        if lam > 0:
            K = ext.schur(X, Sinv)
        else:
            K = op.schur(X, Sinv)
        try:
            if lam > 0:
                lu = sla.lu_factor(_coupled_matrix(K, m, n_p, lam))
            else:
                cf = sla.cho_factor(K + 1e-14 * np.trace(K) / m * np.eye(m))
        except (np.linalg.LinAlgError, ValueError) as exc:
            if best.merit <= breakdown_tol:
                status = "breakdown"
                break
            raise NumericalBreakdown("Schur complement is singular") from exc

        XRS = _sym(X @ Rd @ Sinv)

        def direction(G):
            F = G - XRS
            if lam > 0:
                AF = ext.apply(F)
                rhs = np.concatenate([rp - AF[:m], -AF[m:]])
                sol = sla.lu_solve(lu, rhs)
                dw, dv = sol[:m], sol[m:]
                dS = Rd - op.adjoint(dw) + 2 * lam * pop.adjoint_cols(dv)
            else:
                dw = sla.cho_solve(cf, rp - op.apply(F))
                dS = Rd - op.adjoint(dw)
            dS = _sym(dS)
            dX = _sym(G - X @ dS @ Sinv)
            return dX, dw, dS

        # predictor
        dXa, dwa, dSa = direction(-X)
        ap = min(1.0, _max_step(LX, dXa))
        ad = min(1.0, _max_step(LS, dSa))
        if lam > 0:
            ap = ad = min(ap, ad)
        mu_aff = float(np.vdot(X + ap * dXa, S + ad * dSa).real) / n
        sigma = min(1.0, (mu_aff / mu) ** 3)
        # corrector
        G = sigma * mu * Sinv - X - _sym(dXa @ dSa @ Sinv)
        dX, dw, dS = direction(G)
        gamma = GAMMA
        ap = min(1.0, gamma * _max_step(LX, dX))
        ad = min(1.0, gamma * _max_step(LS, dS))
        if lam > 0:
            ap = ad = min(ap, ad)
        X = X + ap * dX
        w = w + ad * dw
        S = S + ad * dS

    if status is None:
        if best.merit > breakdown_tol:
            raise MaxIterationsExceeded(
                f"interior point did not reach tol={tol} in {max_iter} iterations "
                f"(pinf={pinf:.2e}, dinf={dinf:.2e}, gap={relgap:.2e})"
            )
        status = "stalled"
    if status != "optimal":
        X, w, S, pinf, dinf, relgap, mu = best.state

    X = _sym(X)
    c = X[:nq, e].copy()
    c[~in_gamma] = 0.0
    Q = X[:nq, :nq] / X[e, e].real
    c = c / X[e, e].real
    objective = float(np.vdot(yfull, c).real) - float(problem.lam) * float(np.vdot(c, c).real)
    return DualSolution(
        c=c,
        Q=Q,
        objective=objective,
        primal_residual=float(pinf),
        dual_residual=float(dinf),
        gap=float(relgap),
        iterations=it,
        bandwidth=N,
        info={"scale": scale, "mu": mu, "status": status, "formulation": "complex"},
    )


def _is_conjugate_symmetric(yn: np.ndarray, in_gamma: np.ndarray) -> bool:
    if not np.array_equal(in_gamma, in_gamma[::-1]):
        return False
    return bool(np.linalg.norm(yn - yn[::-1].conj()) <= 1e-12)


def _solve_real_form(problem, yn, in_gamma, scale, tol, max_iter, breakdown_tol) -> DualSolution:
    """Same program for conjugate-symmetric data, where the optimal ``p`` can be taken real.

    ``|p| <= 1`` for real ``p`` is ``1 - p >= 0`` and ``1 + p >= 0``; each
    is a Gram (sum of squares) condition on an ``(N+1) x (N+1)`` Hermitian
    matrix, so the solver works on two blocks of half the size.  ``Q`` of
    the bounded real form is rebuilt from the Gram matrix of
    ``(1 - p)(1 + p)`` afterwards.
    """
    N = int(problem.bandwidth)
    nq = 2 * N + 1
    nb = N + 1
    yn = 0.5 * (yn + yn[::-1].conj())
    top = _ToeplitzOperator(nb)
    offsets = np.concatenate([np.arange(nb), np.arange(1, nb)])
    shared = in_gamma[N + offsets]

    # offsets in the support tie the two blocks (sum of diagonal sums is
    # 2 delta_j); offsets outside it force c_j = 0, i.e. both sums equal delta_j
    r1, r2, b = [], [], []
    for a in range(top.m):
        rhs = 1.0 if a == 0 else 0.0
        if shared[a]:
            r1.append(a)
            r2.append(a)
            b.append(2 * rhs)
        else:
            r1.append(a)
            r2.append(-1)
            b.append(rhs)
            r1.append(-1)
            r2.append(a)
            b.append(rhs)
    b = np.array(b)
    m = b.size

    def selector(cols):
        cols = np.asarray(cols)
        keep = np.flatnonzero(cols >= 0)
        return sparse.csr_matrix((np.ones(keep.size), (keep, cols[keep])), shape=(m, top.m))

    P = [selector(r1), selector(r2)]
    PT = [Pi.T.tocsr() for Pi in P]

    weights = np.full(nb, 2.0)
    weights[0] = 1.0
    z = 0.5 * weights * np.conj(yn[N:])
    Hz = sla.toeplitz(z, np.zeros(nb))
    C1 = _sym(Hz)
    C = [C1, -C1]

    def apply(Xs):
        return P[0] @ top.apply(Xs[0]) + P[1] @ top.apply(Xs[1])

    def adjoint(w):
        return [top.adjoint(PT[0] @ w), top.adjoint(PT[1] @ w)]

    def dot(As, Bs):
        return float(sum(np.vdot(A_, B_).real for A_, B_ in zip(As, Bs)))

    n = 2 * nb
    norm_b = 1.0 + np.linalg.norm(b)
    norm_C = 1.0 + np.sqrt(2.0) * np.linalg.norm(C1)
    X = [np.eye(nb, dtype=complex) * float(nb) ** 0.5 for _ in range(2)]
    S = [np.eye(nb, dtype=complex) * float(nb) ** 0.5 for _ in range(2)]
    w = np.zeros(m)
    status = None
    best = _Best()
    it = 0
    for it in range(1, max_iter + 1):
        rp = b - apply(X)
        Aw = adjoint(w)
        Rd = [C[i] - Aw[i] - S[i] for i in range(2)]
        pobj = dot(C, X)
        dobj = float(b @ w)
        mu = dot(X, S) / n
        pinf = np.linalg.norm(rp) / norm_b
        dinf = np.sqrt(sum(np.linalg.norm(R) ** 2 for R in Rd)) / norm_C
        relgap = n * mu / (1.0 + abs(pobj) + abs(dobj))
        merit = max(pinf, dinf, relgap)
        best.update(merit, it, (X, w, S, pinf, dinf, relgap, mu))
        if merit <= tol:
            status = "optimal"
            break
        if best.merit <= breakdown_tol and it - best.it >= STALL_ITERS:
            status = "stalled"
            break
        try:
            LX = [_chol(Xi, "primal iterate") for Xi in X]
            LS = [_chol(Si, "dual iterate") for Si in S]
        except NumericalBreakdown:
            if best.merit <= breakdown_tol:
                status = "breakdown"
                break
            raise
        Sinv = [_sym(sla.cho_solve((L, True), np.eye(nb, dtype=complex))) for L in LS]
        K = np.zeros((m, m))
        for i in range(2):
            Kt = top.schur(X[i], Sinv[i])
            K += P[i] @ (P[i] @ Kt.T).T
        try:
            cf = sla.cho_factor(K + 1e-14 * np.trace(K) / m * np.eye(m))
        except (np.linalg.LinAlgError, ValueError) as exc:
            if best.merit <= breakdown_tol:
                status = "breakdown"
                break
            raise NumericalBreakdown("Schur complement is singular") from exc
        XRS = [_sym(X[i] @ Rd[i] @ Sinv[i]) for i in range(2)]

        def direction(G):
            F = [G[i] - XRS[i] for i in range(2)]
            dw = sla.cho_solve(cf, rp - apply(F))
            Ad = adjoint(dw)
            dS = [_sym(Rd[i] - Ad[i]) for i in range(2)]
            dX = [_sym(G[i] - X[i] @ dS[i] @ Sinv[i]) for i in range(2)]
            return dX, dw, dS

        def steps(dX, dS, gamma=1.0):
            ap = min(1.0, gamma * min(_max_step(LX[i], dX[i]) for i in range(2)))
            ad = min(1.0, gamma * min(_max_step(LS[i], dS[i]) for i in range(2)))
            return ap, ad

        dXa, dwa, dSa = direction([-Xi for Xi in X])
        ap, ad = steps(dXa, dSa)
        mu_aff = dot([X[i] + ap * dXa[i] for i in range(2)], [S[i] + ad * dSa[i] for i in range(2)]) / n
        sigma = min(1.0, (mu_aff / mu) ** 3)
        G = [sigma * mu * Sinv[i] - X[i] - _sym(dXa[i] @ dSa[i] @ Sinv[i]) for i in range(2)]
        dX, dw, dS = direction(G)
        ap, ad = steps(dX, dS, GAMMA)
        X = [X[i] + ap * dX[i] for i in range(2)]
        w = w + ad * dw
        S = [S[i] + ad * dS[i] for i in range(2)]

    if status is None:
        if best.merit > breakdown_tol:
            raise MaxIterationsExceeded(
                f"interior point did not reach tol={tol} in {max_iter} iterations "
                f"(pinf={pinf:.2e}, dinf={dinf:.2e}, gap={relgap:.2e})"
            )
        status = "stalled"
    if status != "optimal":
        X, w, S, pinf, dinf, relgap, mu = best.state

    G1, G2 = (_sym(Xi) for Xi in X)
    half = 0.5 * (_diag_sums(G2) - _diag_sums(G1))
    half[0] = half[0].real
    c = np.concatenate([half[:0:-1].conj(), half])
    c[~in_gamma] = 0.0
    # Gram matrix of (1 - p)(1 + p) = 1 - |p|^2, transposed to the bounded real convention
    Q = _sym(fftconvolve(G1, G2, mode="full").T + np.outer(c, c.conj()))
    objective = float(np.vdot(yn, c).real) * scale
    return DualSolution(
        c=c,
        Q=Q,
        objective=objective,
        primal_residual=float(pinf),
        dual_residual=float(dinf),
        gap=float(relgap),
        iterations=it,
        bandwidth=N,
        info={"scale": scale, "mu": mu, "status": status, "formulation": "real"},
    )


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.conj().T)


def _coupled_matrix(K: np.ndarray, m: int, n_p: int, lam: float) -> np.ndarray:
    Kc = np.empty_like(K)
    Kc[:m, :m] = K[:m, :m]
    Kc[:m, m:] = -2 * lam * K[:m, m:]
    Kc[m:, :m] = K[m:, :m]
    Kc[m:, m:] = -2 * lam * K[m:, m:] - np.eye(n_p)
    return Kc


def verify_bounded(c, N: int, grid_size: int | None = None) -> dict:
    """Independent check of ``sup |p| <= 1`` on a grid with parabolic refinement."""
    from .rooting import TrigPolynomial, sup_norm

    c = np.asarray(c, dtype=complex)
    if c.size != 2 * N + 1:
        raise ShapeError("coefficient vector must have length 2N+1")
    if grid_size is None:
        grid_size = 16 * N + 16
    sup = sup_norm(TrigPolynomial(c), grid_size=max(grid_size, 8 * N))
    return {"sup_estimate": sup, "ok": bool(sup <= 1 + 1e-6)}
