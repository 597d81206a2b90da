"""Command line front end.

Subcommands: ``gram``, ``select``, ``outliers``, ``synth``, ``bench``.
Every structured output is JSON; matrices are CSV.  A ``--config`` file of
``key = value`` lines (keys are long flag names) supplies defaults that
explicit flags override.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
"""

import argparse
import json
import math
import os
import sys
import time
import warnings

import numpy as np

from repsel import __version__
from repsel.errors import DataError, NumericalError, ReprselError
from repsel.evaluate import outlier_f1
from repsel.io import read_kernel, read_samples, write_matrix, write_samples
from repsel.kernel import KERNEL_KINDS, KernelSpec, build_gram, median_heuristic_gamma, validate_psd
from repsel.selection import SelectionConfig, detect_outliers, select
from repsel.sketch import SketchConfig, solve_sketched
from repsel.solver import SolverConfig, lambda_critical, objective, solve
from repsel.synthdata import DATASETS, OUTLIER_KINDS, make_dataset

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3

# rbf width used when --gamma is absent: gamma = c / (m * median squared distance)
# with c given by --gamma-scale; see README for why outlier runs use a sharper kernel
DEFAULTS = {
    "kernel": "rbf",
    "gamma_scale": 1.0,
    "lambda_alpha": 5.0,
    "rho": 1.0,
    "tol_abs": 1e-6,
    "tol_rel": 1e-4,
    "max_iter": 10000,
    "tau": 0.95,
    "theta": 0.9,
}


class UsageError(ReprselError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sketch_triplet(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected r,rhat,iterations")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError("sketch values must be integers") from None


def _int_list(text):
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma separated integers") from None


def _mode(text):
    kind, _, val = text.partition(":")
    try:
        if kind == "threshold":
            theta = float(val)
            if not 0.0 <= theta <= 1.0:
                raise ValueError
            return ("threshold", theta)
        if kind == "topk":
            k = int(val)
            if k < 0:
                raise ValueError
            return ("topk", k)
    except ValueError:
        pass
    raise argparse.ArgumentTypeError("mode must be threshold:THETA (0..1) or topk:K (K >= 0)")


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def read_config(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _add_kernel_args(p):
    p.add_argument("--kernel", choices=KERNEL_KINDS, help="similarity (default rbf)")
    p.add_argument("--gamma", type=float, help="rbf width; default is the median heuristic")
    p.add_argument("--gamma-scale", type=float,
                   help="multiplier on the median-heuristic gamma (default 1)")
    p.add_argument("--psd-repair", type=_bool, help="clip negative eigenvalues (default: on for precomputed)")
    p.add_argument("--labels", type=_bool, nargs="?", const=True,
                   help="input CSV has a trailing integer label column")


def _add_solver_args(p):
    p.add_argument("--gram", help="precomputed kernel CSV instead of a sample CSV")
    p.add_argument("--lambda-alpha", type=float, help="lambda as a multiple of lambda_critical (default 5)")
    p.add_argument("--lambda", dest="lam", type=float, help="absolute lambda; overrides --lambda-alpha")
    p.add_argument("--rho", type=float, help="ADMM penalty (default 1)")
    p.add_argument("--tol-abs", type=float)
    p.add_argument("--tol-rel", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--sketch", type=_sketch_triplet, help="r,rhat,iterations for the randomized solver")
    p.add_argument("--strict", type=_bool, nargs="?", const=True,
                   help="exit 3 when ADMM does not converge")


def build_parser():
    parser = _Parser(prog="repsel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"repsel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="key = value file of default flag values")
        p.add_argument("--seed", type=int, help="global seed (default 0)")
        p.add_argument("-o", "--output", help="output path (default stdout)")

    p = sub.add_parser("gram", help="compute a kernel matrix CSV")
    p.add_argument("input")
    _add_kernel_args(p)
    p.add_argument("--report", help="also write a JSON report (kernel parameters, PSD check) here")
    common(p)

    p = sub.add_parser("select", help="select representatives")
    p.add_argument("input", nargs="?")
    _add_kernel_args(p)
    _add_solver_args(p)
    p.add_argument("--tau", type=float, help="diversity pruning threshold (default 0.95)")
    p.add_argument("--theta", type=float, help="OP rejection threshold (default 0.9)")
    p.add_argument("--max-k", type=int)
    common(p)

    p = sub.add_parser("outliers", help="score and flag outliers")
    p.add_argument("input", nargs="?")
    _add_kernel_args(p)
    _add_solver_args(p)
    p.add_argument("--mode", type=_mode, help="threshold:THETA or topk:K (default threshold:0.9)")
    common(p)

    p = sub.add_parser("synth", help="generate a labelled synthetic dataset")
    p.add_argument("--dataset", choices=sorted(DATASETS))
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--outliers", choices=sorted(OUTLIER_KINDS))
    p.add_argument("--ambient", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--repeat-fraction", type=float)
    p.add_argument("--structured-rank", type=int, help="subspace rank of structured outliers (default 2)")
    common(p)

    p = sub.add_parser("bench", help="time full versus sketched solves")
    p.add_argument("--sizes", type=_int_list, help="comma separated sample counts")
    p.add_argument("--outlier-fraction", type=float)
    _add_kernel_args(p)
    _add_solver_args(p)
    common(p)
    return parser


SYNTH_DEFAULTS = {"dataset": "swissroll", "n1": 400, "n2": 0, "outliers": "uniform",
                  "ambient": 50, "noise": 0.0, "repeat_fraction": 0.1, "structured_rank": 2}
BENCH_DEFAULTS = {"sizes": [500, 1000, 2000], "outlier_fraction": 0.01}


def parse_args(argv):
    """Parse flags, fill gaps from ``--config`` and built-in defaults."""
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    if args.config:
        by_dest = {a.dest: a for a in sub._actions}
        for key, raw in read_config(args.config).items():
            action = by_dest.get(key) or by_dest.get({"lambda": "lam"}.get(key, key))
            if action is None or action.dest in ("help", "config"):
                raise UsageError(f"unknown config key {key!r} for command {args.command}")
            if getattr(args, action.dest) is not None:
                continue  # explicit flag wins
            try:
                value = action.type(raw) if action.type else raw
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"bad config value for {key}: {exc}") from None
            if action.choices and value not in action.choices:
                raise UsageError(f"bad config value for {key}: {raw!r}")
            setattr(args, action.dest, value)
    fill = dict(DEFAULTS, seed=0, strict=False, labels=False)
    fill.update(SYNTH_DEFAULTS if args.command == "synth" else {})
    fill.update(BENCH_DEFAULTS if args.command == "bench" else {})
    for key, value in fill.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    if args.command == "outliers" and args.mode is None:
        args.mode = ("threshold", 0.9)
    return args


def effective_config(args):
    cfg = {}
    for key, value in sorted(vars(args).items()):
        if key in ("config", "output", "report"):
            continue
        if isinstance(value, tuple):
            value = list(value)
        cfg[key] = value
    return cfg


def dump_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_head(args, inputs):
    return {
        "tool": {"name": "repsel", "version": __version__},
        "command": args.command,
        "config": effective_config(args),
        "input": inputs,
    }


def _kernel_spec(args, D=None):
    gamma = args.gamma
    if args.kernel == "rbf" and gamma is None and D is not None:
        gamma = args.gamma_scale * median_heuristic_gamma(D)
    return KernelSpec(args.kernel, gamma=gamma, psd_repair=args.psd_repair)


def load_kernel(args):
    """Returns ``(K, labels, input_info, kernel_info)``."""
    if getattr(args, "gram", None):
        raw, digest = read_kernel(args.gram)
        K = build_gram(raw, KernelSpec("precomputed", psd_repair=args.psd_repair))
        info = {"file": os.path.basename(args.gram), "sha256": digest, "n_samples": K.shape[0]}
        return K, None, info, {"kind": "precomputed"}
    if not args.input:
        raise UsageError("give an input CSV or --gram")
    table = read_samples(args.input, labels=bool(args.labels))
    if args.kernel == "precomputed":
        K = build_gram(table.data.T, _kernel_spec(args))
        kinfo = {"kind": "precomputed"}
    else:
        spec = _kernel_spec(args, table.data)
        K = build_gram(table.data, spec)
        kinfo = {"kind": spec.kind, "gamma": spec.gamma}
    info = {"file": os.path.basename(args.input), "sha256": table.sha256,
            "n_samples": int(table.data.shape[1]), "n_features": int(table.data.shape[0])}
    return K, table.labels, info, kinfo


def _solver_config(args, K):
    lam_crit = lambda_critical(K)
    lam = args.lam if args.lam is not None else args.lambda_alpha * lam_crit
    cfg = SolverConfig(lam, rho=args.rho, tol_abs=args.tol_abs, tol_rel=args.tol_rel,
                       max_iter=args.max_iter)
    return cfg, lam_crit


def run_solver(args, K):
    """Full or sketched solve; returns ``(rep, diag, sketch_state, solver_info)``."""
    cfg, lam_crit = _solver_config(args, K)
    state = None
    if args.sketch:
        r, r_hat, its = args.sketch
        sk = SketchConfig(r=min(r, K.shape[0]), r_hat=r_hat, iterations=its, seed=args.seed)
        rep, state, diag = solve_sketched(K, sk, cfg)
    else:
        rep, diag = solve(K, K, cfg)
    info = {"lambda": cfg.lam, "lambda_critical": lam_crit, "diagnostics": diag.to_dict()}
    return rep, diag, state, info


def _convergence_warnings(args, diag, notes):
    if not diag.converged:
        msg = f"ADMM stopped after {diag.iterations} iterations without meeting the tolerance"
        if args.strict:
            raise NumericalError(msg)
        notes.append(msg)


def cmd_gram(args):
    if args.kernel == "precomputed":
        raw, digest = read_kernel(args.input)
        K = build_gram(raw, KernelSpec("precomputed", psd_repair=args.psd_repair))
        info = {"file": os.path.basename(args.input), "sha256": digest, "n_samples": K.shape[0]}
        kinfo = {"kind": "precomputed"}
    else:
        K, _, info, kinfo = load_kernel(args)
    rep = validate_psd(K)
    report = _report_head(args, info)
    report["kernel"] = dict(kinfo, min_eigenvalue=rep.min_eigenvalue, is_psd=rep.is_psd)
    write_matrix(args.output or sys.stdout, K)
    if args.report:
        dump_json(report, args.report)
    return 0


def cmd_select(args):
    K, labels, info, kinfo = load_kernel(args)
    notes = []
    rep, diag, state, sinfo = run_solver(args, K)
    _convergence_warnings(args, diag, notes)
    config = SelectionConfig(diversity_tau=args.tau, outlier_theta=args.theta, max_k=args.max_k)
    result = select(K, rep, config)
    if not result.influence:
        notes.append("no non-zero representation rows: lambda is at or below lambda_critical")
    report = _report_head(args, info)
    report.update(kernel=kinfo, solver=sinfo, converged=diag.converged,
                  selection=result.to_dict(), sketch=state.to_dict() if state else None)
    if labels is not None:
        report["metrics"] = {"outlier_f1": outlier_f1(labels, result.rejected_as_outliers).to_dict(),
                             "outliers_among_representatives": int(np.sum(labels[result.representatives] < 0))}
    report["warnings"] = notes + (state.warnings if state else [])
    dump_json(report, args.output)
    return 0


def cmd_outliers(args):
    K, labels, info, kinfo = load_kernel(args)
    notes = []
    rep, diag, state, sinfo = run_solver(args, K)
    _convergence_warnings(args, diag, notes)
    kind, value = args.mode
    if not np.any(rep.row_norms() > 0):
        notes.append("no non-zero representation rows: nothing can be flagged; raise lambda")
        flagged, scores = [], {}
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out = detect_outliers(rep, theta=value if kind == "threshold" else None,
                                  top_k=value if kind == "topk" else None)
        notes.extend(out.warnings)
        flagged, scores = out.flagged, out.scores
    report = _report_head(args, info)
    report.update(kernel=kinfo, solver=sinfo, converged=diag.converged,
                  sketch=state.to_dict() if state else None)
    report["outliers"] = [int(i) for i, _ in flagged]
    report["op_scores"] = {str(i): float(s) for i, s in sorted(scores.items())}
    if labels is not None:
        report["metrics"] = {"outlier_f1": outlier_f1(labels, report["outliers"]).to_dict()}
    report["warnings"] = notes + (state.warnings if state else [])
    dump_json(report, args.output)
    return 0


def cmd_synth(args):
    ds = make_dataset(args.dataset, args.n1, args.n2, args.outliers, args.ambient,
                      noise=args.noise, seed=args.seed, repeat_fraction=args.repeat_fraction,
                      structured_rank=args.structured_rank)
    write_samples(args.output or sys.stdout, ds.data, ds.labels)
    return 0


def _bench_point(K, labels, cfg, sketch, seed):
    t0 = time.perf_counter()
    rep_f, diag_f = solve(K, K, cfg)
    t_full = time.perf_counter() - t0
    r, r_hat, its = sketch
    n = K.shape[0]
    sk = SketchConfig(r=min(r, n), r_hat=min(r_hat, n - min(r, n)), iterations=its, seed=seed)
    t0 = time.perf_counter()
    rep_s, state, diag_s = solve_sketched(K, sk, cfg)
    t_sketch = time.perf_counter() - t0
    # sketched solution zero-padded to the full problem
    obj_s = objective(K, K, rep_s.dense(), cfg.lam)
    n_out = int(np.sum(labels < 0))
    f1 = {}
    for name, rep in (("full", rep_f), ("sketched", rep_s)):
        if np.any(rep.row_norms() > 0):
            flagged = detect_outliers(rep, top_k=n_out).indices if n_out else []
        else:
            flagged = []
        f1[name] = outlier_f1(labels, flagged).f1
    return {
        "n": n,
        "full": {"objective": diag_f.objective, "iterations": diag_f.iterations,
                 "converged": diag_f.converged, "outlier_f1": f1["full"]},
        "sketched": {"objective": obj_s, "iterations": [h["solver_iterations"] for h in state.history],
                     "converged": diag_s.converged, "outlier_f1": f1["sketched"],
                     "history": state.history},
        "objective_gap": obj_s - diag_f.objective,
        "timing": {"full_seconds": t_full, "sketched_seconds": t_sketch},
    }


def cmd_bench(args):
    if not args.sizes:
        raise UsageError("--sizes must list at least one size")
    sketch = args.sketch or (200, 20, 3)
    rows = []
    for size in args.sizes:
        n2 = int(round(args.outlier_fraction * size))
        ds = make_dataset("swissroll", size - n2, n2, "uniform", 50, seed=args.seed)
        spec = _kernel_spec(args, ds.data)
        K = build_gram(ds.data, spec)
        cfg, lam_crit = _solver_config(args, K)
        row = _bench_point(K, ds.labels, cfg, sketch, args.seed)
        row.update(lam=cfg.lam, lambda_critical=lam_crit, gamma=spec.gamma)
        rows.append(row)
    report = _report_head(args, {"dataset": "swissroll", "outlier_fraction": args.outlier_fraction})
    report["sketch"] = list(sketch)
    report["results"] = rows
    report["scaling"] = _scaling(rows)
    dump_json(report, args.output)
    return 0


def _scaling(rows):
    """Log-log slope of wall time versus n, per solver."""
    if len(rows) < 2:
        return None
    n = np.log([r["n"] for r in rows])
    out = {}
    for key in ("full_seconds", "sketched_seconds"):
        t = np.log([max(r["timing"][key], 1e-9) for r in rows])
        out[key.replace("_seconds", "_exponent")] = float(np.polyfit(n, t, 1)[0])
    return out


COMMANDS = {"gram": cmd_gram, "select": cmd_select, "outliers": cmd_outliers,
            "synth": cmd_synth, "bench": cmd_bench}


def main(argv=None):
    try:
        try:
            args = parse_args(argv)
        except SystemExit as exc:  # argparse usage errors, --help, --version
            return exc.code
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"repsel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"repsel: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"repsel: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
