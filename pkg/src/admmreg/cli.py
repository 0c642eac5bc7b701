"""Command-line entry point: one subcommand per experiment.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 solver failure,
4 failed self-check.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import experiments as ex
from . import fileio
from .admm import X_SOLVERS, AdmmConfig, run
from .errors import ParameterError, SolverFailure, UnsupportedCombinationError
from .metrics import psnr
from .oracle import MAX_DIM
from .penalty import Penalty

log = logging.getLogger("admmreg")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2, 3, 4
PSNR_PEAK = 1.0  # unit-scale images; equals 255 on the 8-bit scale


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError("{}: {}".format(self.prog, message))


def _float_list(text):
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, got {!r}".format(text))
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _psf_spec(text):
    parts = text.split(":")
    try:
        if parts[0] == "motion" and len(parts) == 3:
            return ("motion", float(parts[1]), float(parts[2]))
        if parts[0] == "gaussian" and len(parts) == 3:
            return ("gaussian", int(parts[1]), float(parts[2]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(
        "psf must look like motion:LEN:ANGLE or gaussian:SIZE:SIGMA, got {!r}".format(text))


def read_config(path):
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError("{}:{}: expected key=value".format(path, lineno))
            key, value = (t.strip() for t in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _solver_options(max_iter):
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("solver")
    g.add_argument("--rho1", type=float, default=1000.0)
    g.add_argument("--rho2", type=float, default=10.0)
    g.add_argument("--tau", type=float, default=1.0001)
    g.add_argument("--nu", type=float, default=1e-3)
    g.add_argument("--max-iter", type=int, default=max_iter)
    g.add_argument("--x-solver", choices=X_SOLVERS, default="auto")
    g.add_argument("--cg-tol", type=float, default=1e-10)
    g.add_argument("--cg-max-iter", type=int, default=500)
    g.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    g.add_argument("--out", default=None, help="output directory (default: out/<command>)")
    g.add_argument("--config", default=None, help="key=value file overriding defaults")
    g.add_argument("--timing", action="store_true",
                   help="record wall-clock times (outputs are then not reproducible)")
    return p


def _image_options():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("problem")
    g.add_argument("--image", default=None, help="8-bit binary PGM ground truth")
    g.add_argument("--size", type=int, default=128, help="phantom size when no image is given")
    g.add_argument("--psf", type=_psf_spec, default="motion:15:50")
    g.add_argument("--regularizer", choices=ex.REGULARIZERS, default="tv")
    g.add_argument("--delta", type=float, default=None, help="noise norm")
    g.add_argument("--noise-rms", type=float, default=ex.IMAGE_NOISE_RMS,
                   help="per-pixel noise RMS, used when --delta is absent")
    return p


def build_parser():
    parser = _Parser(prog="admmreg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("deconv1d", parents=[_solver_options(20000)],
                       help="sparse 1D deconvolution with the Gaussian heat kernel")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--gamma", type=float, default=0.01)
    p.add_argument("--rel-noise", type=float, default=1e-2)
    p.add_argument("--delta", type=float, default=None, help="absolute noise norm (overrides --rel-noise)")
    p.add_argument("--quadrature-weight", type=float, default=1.0)
    p.set_defaults(func=cmd_deconv1d)

    p = sub.add_parser("deblur", parents=[_solver_options(2000), _image_options()],
                       help="TV or framelet deblurring")
    p.add_argument("--png", action="store_true", help="also write PNG copies of the images")
    p.set_defaults(func=cmd_deblur)

    p = sub.add_parser("semiconv", parents=[_solver_options(500), _image_options()],
                       help="run without stopping and locate the PSNR peak")
    p.set_defaults(func=cmd_semiconv)

    p = sub.add_parser("sweep", parents=[_solver_options(5000), _image_options()],
                       help="sensitivity to rho1 and rho2")
    p.add_argument("--rho1-list", type=_float_list, default=",".join(map(str, ex.RHO1_GRID)))
    p.add_argument("--rho2-list", type=_float_list, default=",".join(map(str, ex.RHO2_GRID)))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-check", parents=[_solver_options(100000)],
                       help="compare exact-data ADMM with the brute-force oracle")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config(known.config)
    subparsers = parser._subparsers._group_actions[0].choices
    dests = set()
    for sp in subparsers.values():
        dests.update(a.dest for a in sp._actions)
    unknown = sorted(set(values) - dests)
    if unknown:
        raise UsageError("unknown config keys: {}".format(", ".join(unknown)))
    for sp in subparsers.values():
        own = {a.dest for a in sp._actions}
        sp.set_defaults(**{k: v for k, v in values.items() if k in own})


def _config_from(args, delta):
    return AdmmConfig(rho1=args.rho1, rho2=args.rho2, tau=args.tau, delta=delta,
                      max_iter=args.max_iter, x_solver=args.x_solver,
                      cg_tol=args.cg_tol, cg_max_iter=args.cg_max_iter)


def _out_dir(args):
    return args.out or os.path.join("out", args.command)


def _summary(result, cfg, args, x_true=None, peak=None, **extra):
    x = result.state.x
    out = {
        "k_stop": result.k_stop,
        "stop_reason": result.stop_reason,
        "rho1": cfg.rho1,
        "rho2": cfg.rho2,
        "tau": cfg.tau,
        "delta": cfg.delta,
        "threshold": cfg.threshold,
        "final_psnr": psnr(x, x_true, peak) if (x_true is not None and peak) else None,
        "final_err": float(np.linalg.norm(x - x_true)) if x_true is not None else None,
        "wall_time_ms": result.wall_time_ms if args.timing else None,
        "seed": args.seed,
    }
    out.update(extra)
    return out


def _image_instance(args):
    image = fileio.read_pgm(args.image) if args.image else None
    shape = image.shape if image is not None else (args.size, args.size)
    psf = ex.gen_psf(*args.psf)
    if any(p > s for p, s in zip(psf.shape, shape)):
        raise ParameterError("psf {} does not fit the image {}".format(psf.shape, shape))
    delta = args.delta
    if delta is None:
        delta = args.noise_rms * float(np.sqrt(np.prod(shape)))
    return ex.gen_deblur(image=image, n=args.size, psf=psf, regularizer=args.regularizer,
                         delta=delta, seed=args.seed, nu=args.nu)


def cmd_deconv1d(args):
    inst = ex.gen_deconv1d(n=args.n, gamma=args.gamma, rel_noise=args.rel_noise, seed=args.seed,
                           nu=args.nu, quadrature_weight=args.quadrature_weight)
    if args.delta is not None:
        inst.delta = args.delta
        inst.b_obs = ex.add_noise(inst.b_exact, args.delta, args.seed)
    cfg = _config_from(args, inst.delta)
    res = run(inst.A, inst.W, inst.b_obs, inst.penalty, cfg, ground_truth=inst.x_true)
    out = _out_dir(args)
    fileio.write_trace_csv(os.path.join(out, "trace.csv"), res.trace)
    fileio.write_csv(os.path.join(out, "reconstruction.csv"), ("i", "x_true", "x_rec", "b_obs"),
                     zip(range(args.n), inst.x_true, res.state.x, inst.b_obs))
    summary = _summary(res, cfg, args, inst.x_true,
                       rel_err=float(np.linalg.norm(res.state.x - inst.x_true) / np.linalg.norm(inst.x_true))
                       if np.any(inst.x_true) else None)
    fileio.write_json(os.path.join(out, "summary.json"), summary)
    print("deconv1d: k={} ({}), error {:.4g}".format(res.k_stop, res.stop_reason, summary["final_err"]))
    return EXIT_OK


def _frame_tightness(W, seed):
    u = np.random.default_rng(seed).standard_normal(W.domain_shape)
    return float(np.linalg.norm(W.adjoint(W.apply(u)) - u) / np.linalg.norm(u))


def cmd_deblur(args):
    inst = _image_instance(args)
    extra = {"regularizer": args.regularizer, "psf": list(args.psf),
             "degraded_psnr": psnr(inst.b_obs, inst.x_true, PSNR_PEAK)}
    if args.regularizer.startswith("frame"):
        extra["frame_tightness_error"] = _frame_tightness(inst.W, args.seed)
        if extra["frame_tightness_error"] > 1e-10:
            log.error("W*W = I check failed: %.3e", extra["frame_tightness_error"])
            return EXIT_CHECK
    cfg = _config_from(args, inst.delta)
    res = run(inst.A, inst.W, inst.b_obs, inst.penalty, cfg,
              ground_truth=inst.x_true, psnr_peak=PSNR_PEAK)
    out = _out_dir(args)
    fileio.write_trace_csv(os.path.join(out, "trace.csv"), res.trace)
    images = {"truth": inst.x_true, "degraded": inst.b_obs, "restored": res.state.x}
    for name, img in images.items():
        fileio.write_pgm(os.path.join(out, name + ".pgm"), img)
        if args.png:
            fileio.write_png(os.path.join(out, name + ".png"), img)
    summary = _summary(res, cfg, args, inst.x_true, PSNR_PEAK, **extra)
    fileio.write_json(os.path.join(out, "summary.json"), summary)
    print("deblur[{}]: k={} ({}), PSNR {:.2f} dB (degraded {:.2f} dB)".format(
        args.regularizer, res.k_stop, res.stop_reason, summary["final_psnr"], extra["degraded_psnr"]))
    return EXIT_OK


def cmd_semiconv(args):
    inst = _image_instance(args)
    cfg = _config_from(args, inst.delta)
    scan = ex.semiconvergence_scan(inst, cfg, max_iter=args.max_iter, psnr_peak=PSNR_PEAK)
    out = _out_dir(args)
    fileio.write_trace_csv(os.path.join(out, "trace.csv"), scan.trace)
    gap = abs(scan.k_delta - scan.k_peak_psnr) if scan.k_delta is not None else None
    summary = _summary(scan.result, cfg, args, inst.x_true, PSNR_PEAK,
                       regularizer=args.regularizer, k_peak_psnr=scan.k_peak_psnr,
                       k_min_err=scan.k_min_err, k_delta=scan.k_delta, k_gap=gap,
                       peak_psnr=scan.trace[scan.k_peak_psnr - 1].psnr)
    fileio.write_json(os.path.join(out, "summary.json"), summary)
    print("semiconv: PSNR peak at k={}, rule would stop at k={}, ran {} iterations".format(
        scan.k_peak_psnr, scan.k_delta, len(scan.trace)))
    return EXIT_OK


def cmd_sweep(args):
    inst = _image_instance(args)
    cfg = _config_from(args, inst.delta)
    rows = ex.sensitivity_sweep(inst, args.rho1_list, args.rho2_list, cfg, psnr_peak=PSNR_PEAK)
    out = _out_dir(args)
    fileio.write_csv(os.path.join(out, "sweep.csv"), ex.SweepRow.CSV_HEADER,
                     ([r.rho1, r.rho2, r.psnr, r.k_stop, r.stop_reason,
                       r.wall_ms if args.timing else None] for r in rows))
    mono = ex.rows_monotone(rows)
    fileio.write_json(os.path.join(out, "summary.json"), {
        "rows": len(rows),
        "delta": inst.delta,
        "tau": cfg.tau,
        "rho1_list": list(args.rho1_list),
        "rho2_list": list(args.rho2_list),
        "k_nonincreasing_in_rho1": {repr(k): v for k, v in mono.items()},
        "all_rows_monotone": all(mono.values()),
        "seed": args.seed,
    })
    print("sweep: {} runs, k monotone in rho1 for {}/{} rows".format(
        len(rows), sum(mono.values()), len(mono)))
    return EXIT_OK


def cmd_oracle_check(args):
    if not 1 <= args.n <= MAX_DIM:
        raise UsageError("oracle-check needs 1 <= n <= {}".format(MAX_DIM))
    if not 1 <= args.m <= args.n:
        raise UsageError("oracle-check needs 1 <= m <= n")
    if args.trials < 0:
        raise UsageError("trials must be >= 0")
    cfg = _config_from(args, 0.0)
    f = Penalty(args.nu, 1.0)
    rows, failed = [], []
    for trial in range(args.trials):
        rng = np.random.default_rng([args.seed, trial])
        A, b = ex.random_consistent_system(args.m, args.n, rng)
        chk = ex.certify_against_oracle(A, b, f, cfg, tol=args.tol)
        rows.append((trial, chk.k, chk.err, chk.passed))
        if not chk.passed:
            failed.append("{}:{}".format(args.seed, trial))
    out = _out_dir(args)
    fileio.write_csv(os.path.join(out, "oracle.csv"), ("trial", "k", "err", "passed"), rows)
    max_err = max((r[2] for r in rows), default=None)
    fileio.write_json(os.path.join(out, "summary.json"), {
        "trials": args.trials, "n": args.n, "m": args.m, "tol": args.tol,
        "max_err": max_err, "max_k": max((r[1] for r in rows), default=None),
        "failed_seeds": failed, "seed": args.seed,
    })
    print("oracle-check: {} trials, max error {}".format(args.trials, max_err))
    if failed:
        print("failing seeds (seed:trial): " + " ".join(failed), file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except (UsageError, ParameterError, UnsupportedCombinationError) as exc:
        print("usage error: {}".format(exc), file=sys.stderr)
        return EXIT_USAGE
    except (OSError, fileio.PGMError) as exc:
        print("I/O error: {}".format(exc), file=sys.stderr)
        return EXIT_IO
    except SolverFailure as exc:
        print("solver failure: {}".format(exc), file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
