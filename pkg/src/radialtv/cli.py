"""Command-line front end.

Exit codes: 0 success, 1 invalid arguments or parameters, 2 no direction
subset certifies the recovery, 3 unreadable/unwritable/malformed files.
Parallelism across trials is capped by the RADIALTV_THREADS environment
variable (default 1).

CSV outputs start with ``# schema_version`` and ``# manifest`` comment
lines.  Columns:

* sepmc: M, d, bound (whp_lower or tail_upper), param (rho or t),
  delta, bound_value, p_hat, ci_low, ci_high, passed
* sweep-success: N, M, trials, fraction_recovered_L<l>, se_L<l> per
  subset size, fraction_nondegenerate, se_nondegenerate (with --precert)
* noisy-demo: M, N, trial, noise_level, lam, err_pos, err_amp, success
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import __version__
from .exceptions import NoValidSubset, RadialTVError
from .io import Instance, InputError, RunManifest, content_hash, load_instance, save_instance, to_jsonable, write_csv, write_json

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_USAGE, EXIT_NO_SUBSET, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _manifest(args, command: str, inputs=None, t0: float | None = None) -> RunManifest:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "out", "timings")}
    m = RunManifest(command=command, config=to_jsonable(cfg), seed=getattr(args, "seed", None),
                    input_hash=content_hash(inputs) if inputs is not None else None)
    if getattr(args, "timings", False) and t0 is not None:
        m.timings = {"wall_seconds": time.perf_counter() - t0}
    return m


def _emit_json(args, obj):
    if args.out:
        write_json(args.out, obj)
    else:
        import json

        print(json.dumps(to_jsonable(obj), indent=1, sort_keys=True))


# ---------------------------------------------------------------- gen

def cmd_gen(args) -> int:
    from .experiments import ARC_CELLS, FIXED_TS, NOISY_CELLS, SKEW_TS, arc_instance, freq_subset, noisy_instance
    from .instances import EnsembleSpec, add_noise, gen_directions, trial_seed
    from .model import SamplingScheme, forward_sample

    t0 = time.perf_counter()
    fam, M = args.family, args.M
    noise = args.noise
    y = None
    if fam == "arc":
        nu = args.nu if args.nu is not None else ARC_CELLS.get((M, args.K))
        if nu is None:
            raise InvalidArgs("--nu is required for this (M, K)")
        m, scheme = arc_instance(M, args.K, nu, args.seed, args.trial, args.fraction)
    elif fam == "noisy":
        nu = args.nu if args.nu is not None else NOISY_CELLS.get(M)
        if nu is None:
            raise InvalidArgs("--nu is required for this M")
        m, scheme, y = noisy_instance(M, nu, noise, args.seed, args.trial)
    else:
        if args.N is None:
            raise InvalidArgs(f"--N is required for family {fam}")
        kind = "uniform_ball" if fam == "uniform" else "skewed"
        spec = EnsembleSpec(kind, "real_range", M, 2, seed=args.seed)
        m = spec.draw(args.trial)
        ts = args.ts if args.ts else (FIXED_TS if fam == "uniform" else SKEW_TS)
        dirs = gen_directions("fixed_d2", ts=ts)
        s = trial_seed(args.seed, args.trial)
        scheme = SamplingScheme(dirs, freq_subset(args.N, args.fraction, s), args.N)
    if noise > 0 and y is None:
        y = add_noise(forward_sample(m, scheme), noise, trial_seed(args.seed, args.trial))
    inst = Instance(scheme, m, y, noise if noise > 0 else None, extra={"family": fam})
    man = _manifest(args, "gen", t0=t0)
    if args.out:
        save_instance(args.out, inst, man)
    else:
        _emit_json(args, inst.to_dict(man))
    print(f"generated M={m.M} N={scheme.bandwidth} T={scheme.T} L={scheme.L}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- recover

def _result_dict(res, inst: Instance) -> dict:
    from .io import measure_to_dict
    from .recovery import recovery_errors

    diag = dict(res.diagnostics)
    out = {
        "schema": "radialtv.result",
        "version": 1,
        "status": "ok",
        "measure": measure_to_dict(res.measure),
        "subset_used": list(res.subset_used),
        "directions_used": res.directions_used.tolist(),
        "certificate_ok": res.certificate_ok,
        "objectives": diag.pop("objectives", None),
        "diagnostics": diag,
    }
    if inst.measure is not None:
        ep, ea = recovery_errors(inst.measure, res.measure)
        out["errors"] = {"err_pos": ep, "err_amp": ea}
    return out


def cmd_recover(args) -> int:
    from .recovery import RecoveryConfig, recover, recover_noisy
    from .sdp import default_lambda

    t0 = time.perf_counter()
    inst = load_instance(args.instance)
    y = inst.data()
    lam = args.lam
    noisy = (lam is not None and lam > 0) or (lam is None and inst.noise_level)
    cfg = RecoveryConfig(lprime=args.lprime, lam=lam or 0.0, sdp_tol=args.tol)
    try:
        if noisy:
            if not cfg.noisy:
                cfg = RecoveryConfig(lprime=args.lprime, lam=default_lambda(y, inst.noise_level), sdp_tol=args.tol)
            res = recover_noisy(y, inst.scheme, cfg)
        else:
            res = recover(y, inst.scheme, cfg)
    except NoValidSubset as exc:
        print(f"no valid subset: {exc}", file=sys.stderr)
        for a in (exc.diagnostics or {}).get("attempts", []):
            print(f"  subset {tuple(a['subset'])}: {a.get('failure')}", file=sys.stderr)
        if args.out:
            write_json(args.out, {"schema": "radialtv.result", "version": 1, "status": "NoValidSubset",
                                  "message": str(exc), "diagnostics": exc.diagnostics or {},
                                  "manifest": _manifest(args, "recover", inst.to_dict()).to_dict()})
        return EXIT_NO_SUBSET
    out = _result_dict(res, inst)
    out["manifest"] = _manifest(args, "recover", inst.to_dict(), t0).to_dict()
    if args.out:
        write_json(args.out, out)
    print(f"recovered {res.measure.M} atoms with directions {tuple(res.subset_used)}")
    for x, a in zip(res.measure.positions, res.measure.amplitudes):
        print(f"  x = {np.array2string(x, precision=8)}  a = {a:.8g}")
    if "errors" in out:
        print(f"Err_pos = {out['errors']['err_pos']:.3e}  Err_amp = {out['errors']['err_amp']:.3e}")
    if res.certificate_ok is not None:
        print(f"certificate_ok = {res.certificate_ok}")
    return EXIT_OK


# ---------------------------------------------------------------- certify

def cmd_certify(args) -> int:
    from .certificates import _grid_values, is_nondegenerate, vanishing_derivatives

    inst = load_instance(args.instance)
    if inst.measure is None:
        raise InvalidArgs("certify needs an instance with a measure")
    pc = vanishing_derivatives(inst.measure, inst.scheme)
    rep = is_nondegenerate(pc, inst.measure, inst.scheme, grid_per_axis=args.grid, r_excl=args.r_excl,
                           margin_tol=args.margin)
    out = {
        "schema": "radialtv.certificate",
        "version": 1,
        "nondegenerate": rep.nondegenerate,
        "sup_estimate": rep.sup_estimate,
        "margin_outside": rep.margin_outside,
        "grid_resolution": rep.grid_resolution,
        "solve_residual": pc.solve_residual,
        "q": pc.q,
        "manifest": _manifest(args, "certify", inst.to_dict()).to_dict(),
    }
    if args.out:
        write_json(args.out, out)
    if args.grid_csv:
        if inst.scheme.d != 2:
            raise InvalidArgs("--grid-csv needs d = 2")
        n = args.grid_csv_points
        g = np.linspace(-0.5, 0.5, n)
        vals = _grid_values(pc, g)
        rows = [{"x1": g[i], "x2": g[j], "abs_eta": vals[i, j]} for i in range(n) for j in range(n)]
        write_csv(args.grid_csv, rows, ["x1", "x2", "abs_eta"], _manifest(args, "certify", inst.to_dict()))
    print(f"nondegenerate = {rep.nondegenerate}  sup = {rep.sup_estimate:.8f}  margin = {rep.margin_outside:.3e}")
    return EXIT_OK


# ---------------------------------------------------------------- mindist

def cmd_mindist(args) -> int:
    from .instances import arc_interval, bandwidth_noisy, bandwidth_separated
    from .model import arc_min_separation, projected_min_separation

    inst = load_instance(args.instance)
    if inst.measure is None:
        raise InvalidArgs("mindist needs an instance with a measure")
    m = inst.measure
    per_dir = [projected_min_separation(m, th) for th in inst.scheme.directions]
    out = {"per_direction": per_dir, "min_over_directions": min(per_dir)}
    arc = tuple(args.arc) if args.arc else (arc_interval(args.K) if args.K else None)
    if arc is not None:
        out["arc"] = list(arc)
        out["arc_min_separation"] = arc_min_separation(m, arc)
    nu = out.get("arc_min_separation", out["min_over_directions"])
    if nu > 0:
        out["N_exact"] = bandwidth_separated(nu)
        out["N_noisy"] = bandwidth_noisy(nu)
    out["manifest"] = _manifest(args, "mindist", inst.to_dict()).to_dict()
    _emit_json(args, out)
    return EXIT_OK


# ---------------------------------------------------------------- sepmc

def sepmc_rows(Ms, d: int, trials: int, seed: int, rhos=(0.1, 0.3, 0.5), ts=(0.5, 1.0, 2.0)) -> list[dict]:
    from .instances import separation_level_lower, separation_level_upper, separation_mc

    rows = []
    for M in Ms:
        d4 = [separation_level_lower(r, M, d) for r in rhos]
        d5 = [separation_level_upper(t, M, d) for t in ts]
        mc = separation_mc(M, d, d4 + d5, trials, seed)
        for i, r in enumerate(rhos):
            p = mc["p_hat"][i]
            rows.append({"M": M, "d": d, "bound": "whp_lower", "param": r, "delta": d4[i],
                         "bound_value": 1 - r, "p_hat": p, "ci_low": mc["ci_low"][i], "ci_high": mc["ci_high"][i],
                         "passed": bool(p >= 1 - r)})
        for i, t in enumerate(ts):
            j = len(rhos) + i
            p, lo = mc["p_hat"][j], mc["ci_low"][j]
            rows.append({"M": M, "d": d, "bound": "tail_upper", "param": t, "delta": d5[i],
                         "bound_value": float(np.exp(-t)), "p_hat": p, "ci_low": lo, "ci_high": mc["ci_high"][j],
                         "passed": bool(lo <= np.exp(-t))})
    return rows


SEPMC_COLUMNS = ["M", "d", "bound", "param", "delta", "bound_value", "p_hat", "ci_low", "ci_high", "passed"]


def cmd_sepmc(args) -> int:
    t0 = time.perf_counter()
    rows = sepmc_rows(args.M, args.d, args.trials, args.seed)
    text = write_csv(args.out, rows, SEPMC_COLUMNS, _manifest(args, "sepmc", t0=t0))
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- sweep-success

def cmd_sweep_success(args) -> int:
    from .experiments import FIXED_TS, SKEW_TS, sweep_success
    from .instances import EnsembleSpec

    t0 = time.perf_counter()
    kind = "uniform_ball" if args.ensemble == "uniform" else "skewed"
    ts = args.ts if args.ts else (FIXED_TS if args.ensemble == "uniform" else SKEW_TS)
    cells = []
    for M in args.M:
        spec = EnsembleSpec(kind, "real_range", M, 2, seed=args.seed)
        c, _ = sweep_success(spec, args.N, args.trials, ts=ts, lprimes=args.lprime, fraction=args.fraction,
                             precert=args.precert)
        cells.extend(c)
    cols = ["N", "M", "trials"]
    for lp in args.lprime:
        cols += [f"fraction_recovered_L{lp}", f"se_L{lp}"]
    if args.precert:
        cols += ["fraction_nondegenerate", "se_nondegenerate"]
    text = write_csv(args.out, cells, cols, _manifest(args, "sweep-success", t0=t0))
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- noisy-demo

def cmd_noisy_demo(args) -> int:
    from ._parallel import pmap
    from .experiments import NOISY_CELLS, noisy_trial

    t0 = time.perf_counter()
    jobs = [(M, t) for M in args.M for t in range(args.trials)]
    for M in args.M:
        if M not in NOISY_CELLS and args.nu is None:
            raise InvalidArgs(f"--nu is required for M={M}")
    rows = pmap(lambda job: noisy_trial(job[0], args.nu or NOISY_CELLS[job[0]], args.noise, args.seed, job[1],
                                        lam=args.lam), jobs)
    cols = ["M", "N", "trial", "noise_level", "lam", "err_pos", "err_amp", "success"]
    text = write_csv(args.out, rows, cols, _manifest(args, "noisy-demo", t0=t0))
    if not args.out:
        sys.stdout.write(text)
    for M in args.M:
        sel = [r for r in rows if r["M"] == M]
        ep = max(r["err_pos"] for r in sel)
        ea = max(r["err_amp"] for r in sel)
        ok = sum(r["success"] for r in sel)
        print(f"M={M}: {ok}/{len(sel)} trials with Err below 0.05 (max Err_pos {ep:.4f}, max Err_amp {ea:.4f})",
              file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- parser

class InvalidArgs(RadialTVError, ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="radialtv", description="Point-source recovery from Fourier samples on radial lines.")
    p.add_argument("--version", action="version", version=f"radialtv {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        if seed:
            sp.add_argument("--seed", type=int, default=0, help="base seed; trial i uses seed ^ i")
        sp.add_argument("--out", default=None, help="output file (stdout when omitted)")
        sp.add_argument("--timings", action="store_true", help="record wall-clock time in the manifest")

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--family", choices=["arc", "noisy", "uniform", "skewed"], default="arc")
    g.add_argument("--M", type=int, default=3)
    g.add_argument("--K", type=int, default=6, help="arc half-width 1/K (family arc)")
    g.add_argument("--nu", type=float, default=None, help="target separation (families arc, noisy)")
    g.add_argument("--N", type=int, default=None, help="bandwidth (families uniform, skewed)")
    g.add_argument("--ts", type=float, nargs="+", default=None, help="direction parameters t")
    g.add_argument("--fraction", type=float, default=1.0, help="fraction of -N..N sampled")
    g.add_argument("--noise", type=float, default=0.0, help="relative noise level")
    g.add_argument("--trial", type=int, default=0)
    common(g)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("recover", help="run the splitting recovery on an instance")
    r.add_argument("instance")
    r.add_argument("--lprime", type=int, default=None, help="subset size L' (default: all directions)")
    r.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="regularization weight; > 0 selects the noisy variant")
    r.add_argument("--tol", type=float, default=1e-12, help="interior-point tolerance")
    common(r, seed=False)
    r.set_defaults(func=cmd_recover)

    c = sub.add_parser("certify", help="vanishing-derivatives precertificate of an instance")
    c.add_argument("instance")
    c.add_argument("--grid", type=int, default=None, help="grid points per axis")
    c.add_argument("--r-excl", type=float, default=None, help="exclusion radius (default 1/(4N))")
    c.add_argument("--margin", type=float, default=1e-6, help="required margin below 1 outside the sources")
    c.add_argument("--grid-csv", default=None, help="dump |eta| on a grid to this CSV")
    c.add_argument("--grid-csv-points", type=int, default=128)
    common(c, seed=False)
    c.set_defaults(func=cmd_certify)

    md = sub.add_parser("mindist", help="projected separations of an instance")
    md.add_argument("instance")
    md.add_argument("--arc", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    md.add_argument("--K", type=int, default=None, help="arc |t - 1/2| <= 1/K")
    common(md, seed=False)
    md.set_defaults(func=cmd_mindist)

    s = sub.add_parser("sepmc", help="Monte-Carlo check of the separation bounds on the torus")
    s.add_argument("--M", type=int, nargs="+", default=[5, 10, 20])
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--trials", type=int, default=2000)
    common(s)
    s.set_defaults(func=cmd_sepmc)

    w = sub.add_parser("sweep-success", help="success fraction against bandwidth")
    w.add_argument("--ensemble", choices=["uniform", "skewed"], default="uniform")
    w.add_argument("--M", type=int, nargs="+", default=[3, 4])
    w.add_argument("--N", type=int, nargs="+", default=[4, 8, 16, 32])
    w.add_argument("--ts", type=float, nargs="+", default=None)
    w.add_argument("--lprime", type=int, nargs="+", default=[2, 3])
    w.add_argument("--fraction", type=float, default=1.0)
    w.add_argument("--trials", type=int, default=200)
    w.add_argument("--precert", action="store_true", help="also report precertificate nondegeneracy")
    common(w)
    w.set_defaults(func=cmd_sweep_success)

    n = sub.add_parser("noisy-demo", help="noisy recovery on separated instances")
    n.add_argument("--M", type=int, nargs="+", default=[3, 4, 5])
    n.add_argument("--nu", type=float, default=None)
    n.add_argument("--noise", type=float, default=0.15)
    n.add_argument("--lambda", dest="lam", type=float, default=None)
    n.add_argument("--trials", type=int, default=1)
    common(n)
    n.set_defaults(func=cmd_noisy_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except (InputError, OSError) as exc:
        print(f"radialtv: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NoValidSubset as exc:
        print(f"radialtv: {exc}", file=sys.stderr)
        return EXIT_NO_SUBSET
    except RadialTVError as exc:
        print(f"radialtv: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
