"""Trial runners behind the CLI sweeps and the acceptance checks.

Every trial is a pure function of ``(seed, trial index)``: the instance of
trial ``i`` is drawn with seed ``seed ^ i`` and is shared by every cell of a
sweep (common random numbers across bandwidths and subset sizes).
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from ._parallel import pmap
from .certificates import is_nondegenerate, vanishing_derivatives
from .exceptions import RadialTVError
from .instances import (
    EnsembleSpec,
    add_noise,
    arc_interval,
    bandwidth_noisy,
    bandwidth_separated,
    gen_amplitudes,
    gen_directions,
    separated_positions,
    subsample_freqs,
    trial_seed,
)
from .model import DiscreteMeasure, SamplingScheme, arc_min_separation, forward_sample
from .recovery import RecoveryConfig, recover, recover_noisy, recovery_errors, solve_directions
from .rooting import eval_trig, sup_norm

__all__ = [
    "ARC_CELLS",
    "NOISY_CELLS",
    "FIXED_TS",
    "SKEW_TS",
    "SUCCESS_TOL",
    "freq_subset",
    "arc_instance",
    "noisy_instance",
    "evaluate_recovery",
    "arc_trial",
    "noisy_trial",
    "sweep_success",
    "success_se",
]

# (M, K) -> separation of the arc instances
ARC_CELLS = {(3, 6): 0.2181, (5, 6): 0.1309, (20, 15): 0.0253}
# M -> separation over the fixed directions for the noisy runs
NOISY_CELLS = {3: 0.1208, 4: 0.0704, 5: 0.0395}
FIXED_TS = (0.0, 1.0 / 3.0, 2.0 / 3.0)
SKEW_TS = (0.5 - 1.0 / 7.0, 0.5, 0.5 + 1.0 / 7.0)
SUCCESS_TOL = 1e-4


def success_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n > 0 else float("nan")


def freq_subset(N: int, fraction: float, seed: int) -> np.ndarray:
    """All of ``{-N..N}`` when ``fraction >= 1``, else ``ceil(fraction (2N+1))`` random indices."""
    if fraction >= 1.0:
        return np.arange(-N, N + 1)
    m = max(1, int(math.ceil(fraction * (2 * N + 1) - 1e-12)))
    return subsample_freqs(N, m, seed)


def arc_instance(M: int, K: int, nu: float, seed: int, trial: int, fraction: float = 1.0, count: int = 3):
    """Separated instance sampled along ``count`` random directions of the arc ``|t - 1/2| <= 1/K``.

    ``N = ceil(2 / nu_min)`` with ``nu_min`` the arc infimum of the instance.
    """
    s = trial_seed(seed, trial)
    arc = arc_interval(K)
    pos = separated_positions(M, nu, s, arc=arc)
    m = DiscreteMeasure(pos, gen_amplitudes("unit_circle_signs", M, s))
    N = bandwidth_separated(arc_min_separation(m, arc))
    dirs = gen_directions("arc", s, K=K, count=count)
    return m, SamplingScheme(dirs, freq_subset(N, fraction, s), N)


def noisy_instance(M: int, nu: float, level: float, seed: int, trial: int, ts=FIXED_TS):
    """Instance separated by ``nu`` over fixed directions, ``N = ceil(1/nu)``, relative noise ``level``."""
    s = trial_seed(seed, trial)
    dirs = gen_directions("fixed_d2", ts=list(ts))
    pos = separated_positions(M, nu, s, dirs=dirs)
    m = DiscreteMeasure(pos, gen_amplitudes("unit_circle_signs", M, s))
    N = bandwidth_noisy(nu)
    scheme = SamplingScheme(dirs, np.arange(-N, N + 1), N)
    y = add_noise(forward_sample(m, scheme), level, s)
    return m, scheme, y


def evaluate_recovery(truth: DiscreteMeasure, result, tol: float = SUCCESS_TOL) -> dict:
    """Errors and certificate diagnostics of one successful run."""
    err_pos, err_amp = recovery_errors(truth, result.measure)
    fits = {f.index: f for f in result.per_direction}
    polys = [fits[i].polynomial() for i in result.subset_used]
    sups = [sup_norm(p) for p in polys]
    signs = result.measure.amplitudes / np.abs(result.measure.amplitudes)
    interp = max(
        float(np.abs(eval_trig(p, result.measure.positions @ th) - signs).max())
        for p, th in zip(polys, result.directions_used)
    )
    return {
        "status": "ok",
        "err_pos": err_pos,
        "err_amp": err_amp,
        "success": bool(max(err_pos, err_amp) <= tol),
        "duality_gap": result.diagnostics["duality_gap"],
        "certificate_ok": result.certificate_ok,
        "sup_max": float(max(sups)),
        "interp_err": interp,
        "subset": tuple(result.subset_used),
        "recovered_M": result.measure.M,
    }


def _failed(exc: Exception) -> dict:
    return {
        "status": type(exc).__name__,
        "err_pos": float("inf"),
        "err_amp": float("inf"),
        "success": False,
        "message": str(exc),
    }


def arc_trial(M: int, K: int, nu: float, seed: int, trial: int, fraction: float = 1.0,
              lprime: int = 3, tol: float = SUCCESS_TOL, config: RecoveryConfig | None = None) -> dict:
    m, scheme = arc_instance(M, K, nu, seed, trial, fraction)
    config = replace(config or RecoveryConfig(), lprime=lprime)
    row = {"M": M, "K": K, "N": scheme.bandwidth, "T": scheme.T, "trial": trial}
    try:
        res = recover(forward_sample(m, scheme), scheme, config)
    except RadialTVError as exc:
        row.update(_failed(exc))
        return row
    row.update(evaluate_recovery(m, res, tol))
    return row


def noisy_trial(M: int, nu: float, level: float, seed: int, trial: int, lam: float | None = None,
                tol: float = 0.05) -> dict:
    m, scheme, y = noisy_instance(M, nu, level, seed, trial)
    cfg = RecoveryConfig(lam=lam) if lam else RecoveryConfig()
    row = {"M": M, "N": scheme.bandwidth, "trial": trial, "noise_level": level}
    try:
        res = recover_noisy(y, scheme, cfg, noise_level=level)
    except RadialTVError as exc:
        row.update(_failed(exc))
        return row
    err_pos, err_amp = recovery_errors(m, res.measure)
    row.update(status="ok", err_pos=err_pos, err_amp=err_amp, success=bool(max(err_pos, err_amp) <= tol),
               lam=res.diagnostics["lam"], recovered_M=res.measure.M)
    return row


def _sweep_trial(args) -> list[dict]:
    spec, trial, Ns, ts, lprimes, fraction, precert, seed, tol = args
    m = spec.draw(trial)
    s = trial_seed(seed, trial)
    dirs = gen_directions("fixed_d2", ts=list(ts))
    out = []
    for N in Ns:
        scheme = SamplingScheme(dirs, freq_subset(N, fraction, s), N)
        y = forward_sample(m, scheme)
        fits = solve_directions(y, scheme)
        row = {"M": spec.M, "N": N, "trial": trial}
        for lp in lprimes:
            try:
                res = recover(y, scheme, RecoveryConfig(lprime=lp), fits=fits)
                e = max(recovery_errors(m, res.measure))
                row[f"recovered_L{lp}"] = bool(e <= tol)
            except RadialTVError:
                row[f"recovered_L{lp}"] = False
        if precert:
            try:
                pc = vanishing_derivatives(m, scheme)
                row["nondegenerate"] = is_nondegenerate(pc, m, scheme).nondegenerate
            except RadialTVError:
                row["nondegenerate"] = False
        out.append(row)
    return out


def sweep_success(spec: EnsembleSpec, Ns, trials: int, ts=FIXED_TS, lprimes=(3,), fraction: float = 1.0,
                  precert: bool = False, seed: int | None = None, tol: float = SUCCESS_TOL):
    """Recovery (and optionally precertificate) success fractions per bandwidth.

    Returns ``(cells, trial_rows)``; each cell has ``N``, ``M``,
    ``fraction_recovered_L{l}`` for every subset size, their standard errors
    and, with ``precert``, ``fraction_nondegenerate``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seed = spec.seed if seed is None else seed
    Ns = [int(n) for n in Ns]
    jobs = [(spec, t, Ns, ts, tuple(lprimes), fraction, precert, seed, tol) for t in range(trials)]
    rows = [r for chunk in pmap(_sweep_trial, jobs) for r in chunk]
    cells = []
    for N in Ns:
        sel = [r for r in rows if r["N"] == N]
        cell = {"N": N, "M": spec.M, "trials": len(sel)}
        for lp in lprimes:
            p = float(np.mean([r[f"recovered_L{lp}"] for r in sel]))
            cell[f"fraction_recovered_L{lp}"] = p
            cell[f"se_L{lp}"] = success_se(p, len(sel))
        if precert:
            p = float(np.mean([r["nondegenerate"] for r in sel]))
            cell["fraction_nondegenerate"] = p
            cell["se_nondegenerate"] = success_se(p, len(sel))
        cells.append(cell)
    return cells, rows
