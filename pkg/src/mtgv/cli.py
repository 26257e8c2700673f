"""Batch command-line surface: denoise, synthesize, evaluate, gradcheck, compare.

Exit codes: 0 success, 1 gradcheck failure, 2 bad arguments, 3 input parse
errors, 4 solver degeneracy overflow.  All flags can also be supplied via
``--config FILE`` holding ``key value`` lines with the same names.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import gradients, tuples
from .cppa import (DegeneracyOverflowError, StagewiseSchedule, TgvParams,
                   alphas_from_rs, denoise_bivariate, denoise_tv,
                   denoise_univariate)
from .functionals import TgvWeights
from .grid import Grid
from .manifolds import CIRCLE, SPD3, SPHERE2, Euclidean, ManifoldError, get_manifold
from .mvdio import MvdFormatError, read_mvd, write_mvd
from .proximal import ProxInnerParams
from .reference import cp_tgv_denoise, unwrap_circle, wrap_to_circle
from .synth import (DwiProtocol, delta_snr, dwi_forward, fit_tensors,
                    make_phantom, make_rng, rician_corrupt,
                    tangent_gaussian_noise, vonmises_noise)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_DEGENERATE = 4


def _read_config(path):
    out = {}
    try:
        with open(path, "r", encoding="ascii") as fh:
            for ln in fh:
                ln = ln.split("#", 1)[0].strip()
                if not ln:
                    continue
                if "=" in ln:
                    key, val = ln.split("=", 1)
                else:
                    parts = ln.split(None, 1)
                    if len(parts) != 2:
                        raise ValueError(f"bad config line: {ln!r}")
                    key, val = parts
                out[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise MvdFormatError(f"cannot read config {path}: {exc}") from exc
    return out


def _params_from_args(args) -> TgvParams:
    if args.alpha0 is not None or args.alpha1 is not None:
        if args.alpha0 is None or args.alpha1 is None:
            raise ValueError("--alpha0 and --alpha1 must be given together")
        weights = TgvWeights(alpha0=args.alpha0, alpha1=args.alpha1)
    else:
        if args.r is None:
            raise ValueError("provide --r and --s, or --alpha0 and --alpha1")
        weights = alphas_from_rs(args.r, args.s)
    return TgvParams(
        weights=weights, variant=args.variant, outer_iters=args.iters,
        lambda0=args.lambda0, tau=args.tau,
        stagewise=StagewiseSchedule() if args.stagewise else None,
        seed=args.seed, trace_every=args.trace_every,
        inner=ProxInnerParams(inner_iters=args.inner_iters,
                              inner_step0=args.inner_step0,
                              inner_tau=args.inner_tau))


def _write_trace(path, trace):
    with open(path, "w", encoding="ascii", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["cycle", "lambda", "data_term", "tgv_term", "total"])
        for row in trace:
            wr.writerow([int(row[0])] + ["%.17g" % v for v in row[1:]])


def _write_report(path, lines):
    with open(path, "w", encoding="ascii") as fh:
        for ln in lines:
            fh.write(ln + "\n")


def cmd_denoise(args) -> int:
    h = read_mvd(args.input)
    if args.r is not None and args.r == 0.0 and args.alpha0 is None:
        # zero regularization: the model returns the input verbatim
        write_mvd(h, args.output)
        if args.trace:
            _write_trace(args.trace, [(0, 0.0, 0.0, 0.0, 0.0)])
        if args.report:
            _write_report(args.report, ["method tgv", "r 0", "note identity"])
        return EXIT_OK
    params = _params_from_args(args)
    if args.method == "tv":
        if args.tv_alpha is None:
            raise ValueError("--tv-alpha is required with --method tv")
        rep = (denoise_tv(h, args.tv_alpha, params))
    elif h.ndim == 1:
        rep = denoise_univariate(h, params)
    else:
        rep = denoise_bivariate(h, params)
    write_mvd(rep.u, args.output)
    if args.trace:
        _write_trace(args.trace, rep.trace)
    report = [f"method {args.method}",
              f"cycles {rep.cycles}",
              f"perturbations {rep.perturbations}",
              "final_data_term %.17g" % rep.trace[-1, 2],
              "final_reg_term %.17g" % rep.trace[-1, 3],
              "final_total %.17g" % rep.trace[-1, 4]]
    if args.truth:
        truth = read_mvd(args.truth)
        report.append("delta_snr_db %.17g" % delta_snr(truth, h, rep.u))
    if args.report:
        _write_report(args.report, report)
    for ln in report:
        print(ln)
    return EXIT_OK


def cmd_synthesize(args) -> int:
    truth, info = make_phantom(args.kind, args.size, seed=args.seed)
    rng = make_rng(args.seed + 1)
    if args.noise == "none":
        noisy = truth.copy()
    elif args.noise == "vonmises":
        noisy = vonmises_noise(truth, args.kappa, rng)
    elif args.noise == "gaussian":
        noisy = tangent_gaussian_noise(truth, args.sigma, rng)
    elif args.noise == "rician":
        if truth.manifold.name != "spd3":
            raise ValueError("rician noise runs the DWI pipeline (spd3 phantoms only)")
        proto = DwiProtocol(b=args.b, a0=args.a0)
        dwis = rician_corrupt(dwi_forward(truth, proto), args.sigma, rng)
        noisy = fit_tensors(dwis, proto)
    else:
        raise ValueError(f"unknown noise model {args.noise!r}")
    write_mvd(noisy, args.output)
    if args.truth_output:
        write_mvd(truth, args.truth_output)
    print(f"kind {info['kind']}")
    print(f"sites {noisy.size}")
    print("valid_fraction %.6f" % noisy.valid_fraction())
    return EXIT_OK


def cmd_evaluate(args) -> int:
    truth = read_mvd(args.truth)
    noisy = read_mvd(args.noisy)
    result = read_mvd(args.result)
    val = delta_snr(truth, noisy, result)
    print("delta_snr_db %.17g" % val)
    return EXIT_OK


def _gradcheck_batteries(manifolds, n, h, seed):
    rng = make_rng(seed)
    rows = []
    for mf in manifolds:
        checks = [("grad_d_s", 4, gradients.grad_d_s,
                   lambda m, q: tuples.d_s_points(m, q[2], q[3], q[0], q[1])),
                  ("grad_d_pt", 4, gradients.grad_d_pt,
                   lambda m, q: tuples.d_pt_points(m, q[2], q[3], q[0], q[1])),
                  ("grad_d_s_sym", 7, gradients.grad_d_s_sym,
                   lambda m, q: tuples.d_s_sym(m, *q))]
        for name, nvar, gradfun, dfun in checks:
            worst = 0.0
            count = 0
            while count < n:
                c = mf.random_point(rng)
                pts = [mf.exp(c, mf.random_tangent(rng, c, scale=0.4))
                       for _ in range(nvar)]
                val, g = gradfun(mf, *pts)
                if val < 1e-3:
                    continue
                count += 1
                gl = g.stack()
                for slot in range(nvar):
                    def f(pp, slot=slot):
                        q = list(pts)
                        q[slot] = pp
                        return dfun(mf, q)
                    fd = gradients.fd_grad(mf, f, pts[slot], h=h)
                    num = float(np.max(np.abs(fd - gl[slot])))
                    den = max(float(np.max(np.abs(fd))), 1e-8)
                    worst = max(worst, num / den)
            rows.append((name, mf.name, worst))
    return rows


def cmd_gradcheck(args) -> int:
    if args.manifold == "all":
        manifolds = [CIRCLE, SPHERE2, SPD3, Euclidean(2)]
    else:
        manifolds = [get_manifold(args.manifold)]
    rows = _gradcheck_batteries(manifolds, args.n, args.h, args.seed)
    print(f"{'function':<14} {'manifold':<12} {'max_rel_err':>12}")
    ok = True
    for name, mfname, err in rows:
        print(f"{name:<14} {mfname:<12} {err:12.3e}")
        ok &= err < 1e-4
    print("RESULT", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_compare(args) -> int:
    noisy = read_mvd(args.input)
    if noisy.manifold.name != "circle" or noisy.ndim != 1:
        raise ValueError("compare expects a 1D circle-valued input")
    truth = read_mvd(args.truth) if args.truth else None
    try:
        flat = unwrap_circle(noisy)
    except ManifoldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    params = _params_from_args(args)
    rep_tgv = denoise_univariate(noisy, params)
    u_cp, _ = cp_tgv_denoise(flat, params.weights, iters=args.cp_iters,
                             gap_tol=1e-6)
    u_cp_circ = Grid(CIRCLE, wrap_to_circle(u_cp))
    rep_tv = denoise_tv(noisy, args.tv_alpha, params)

    linf = float(np.max(CIRCLE.dist(rep_tgv.u.points, u_cp_circ.points)))
    print(f"{'method':<14} {'delta_snr_db':>14}")
    for name, grid in (("cppa_tgv", rep_tgv.u), ("cp_flat_tgv", u_cp_circ),
                       ("cppa_tv", rep_tv.u)):
        if truth is not None:
            print(f"{name:<14} {delta_snr(truth, noisy, grid):14.6f}")
        else:
            print(f"{name:<14} {'n/a':>14}")
    print("linf_cppa_vs_cp %.17g" % linf)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mtgv",
                                 description="Manifold TGV denoising toolbox")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_solver_flags(p):
        p.add_argument("--r", type=float, default=None)
        p.add_argument("--s", type=float, default=0.3)
        p.add_argument("--alpha0", type=float, default=None)
        p.add_argument("--alpha1", type=float, default=None)
        p.add_argument("--variant", choices=("schild", "pt"), default="schild")
        p.add_argument("--iters", type=int, default=1000)
        p.add_argument("--lambda0", type=float, default=0.3)
        p.add_argument("--tau", type=float, default=0.55)
        p.add_argument("--stagewise", action="store_true")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trace-every", type=int, default=10)
        p.add_argument("--inner-iters", type=int, default=5)
        p.add_argument("--inner-step0", type=float, default=0.3)
        p.add_argument("--inner-tau", type=float, default=0.55)
        p.add_argument("--config", type=str, default=None)

    p = sub.add_parser("denoise", help="TGV/TV denoising of an MVD grid")
    add_solver_flags(p)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--trace", default=None, help="energy trace CSV path")
    p.add_argument("--report", default=None)
    p.add_argument("--method", choices=("tgv", "tv"), default="tgv")
    p.add_argument("--tv-alpha", type=float, default=None)
    p.set_defaults(fn=cmd_denoise)

    p = sub.add_parser("synthesize", help="generate phantom + noise fixtures")
    p.add_argument("--kind", required=True)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", choices=("none", "vonmises", "gaussian", "rician"),
                   default="none")
    p.add_argument("--kappa", type=float, default=5.0)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--a0", type=float, default=1.0)
    p.add_argument("--output", required=True)
    p.add_argument("--truth-output", default=None)
    p.add_argument("--config", type=str, default=None)
    p.set_defaults(fn=cmd_synthesize)

    p = sub.add_parser("evaluate", help="delta-SNR of a result against truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--noisy", required=True)
    p.add_argument("--result", required=True)
    p.add_argument("--config", type=str, default=None)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference battery")
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--manifold", default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", type=str, default=None)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("compare", help="manifold CPPA vs flat CP on S^1 data")
    add_solver_flags(p)
    p.add_argument("--input", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--tv-alpha", type=float, default=0.5)
    p.add_argument("--cp-iters", type=int, default=100000)
    p.set_defaults(fn=cmd_compare)

    ap.sub_map = dict(sub.choices)
    return ap


def _inject_config_defaults(ap, argv):
    """Load --config (if present) as subcommand defaults; flags still win."""
    if "--config" not in argv:
        return
    path = argv[argv.index("--config") + 1]
    conf = _read_config(path)
    cmd = next((a for a in argv if not a.startswith("-")), None)
    sp = ap.sub_map.get(cmd)
    if sp is None:
        return
    typed = {}
    for action in sp._actions:
        if action.dest in conf:
            raw = conf[action.dest]
            if isinstance(action, argparse._StoreTrueAction):
                typed[action.dest] = raw not in ("0", "false", "False")
            else:
                typed[action.dest] = (action.type or str)(raw)
    sp.set_defaults(**typed)


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    ap = build_parser()
    try:
        _inject_config_defaults(ap, argv)
    except (MvdFormatError, IndexError, ValueError) as exc:
        print(f"error: bad config ({exc})", file=sys.stderr)
        return EXIT_PARSE
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except MvdFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DegeneracyOverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ValueError, ManifoldError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
