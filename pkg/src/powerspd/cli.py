"""Command-line interface.

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
"""
import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import PowerSPDError
from .field import alpha_map_csv, estimate_alpha_map, load_field, normalize_subjects, profile_csv, \
    smooth_alpha_profile, write_field
from .likelihood import AlphaGrid
from .metrics import dist_power, dist_procrustes_power
from .simulation import SimDesign, run_coverage, simulate_field
from .spd import as_symmetric, unvech, vech
from .stats import fractional_anisotropy, frechet_mean, interpolate

SCHEMA_VERSION = 1


def _bounded(kind, lo=None, hi=None, lo_open=False):
    def convert(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from None
        if kind is float and not np.isfinite(value):
            raise argparse.ArgumentTypeError(f"value must be finite: {text!r}")
        if lo is not None and (value <= lo if lo_open else value < lo):
            raise argparse.ArgumentTypeError(f"value must be {'>' if lo_open else '>='} {lo}: {text!r}")
        if hi is not None and value > hi:
            raise argparse.ArgumentTypeError(f"value must be <= {hi}: {text!r}")
        return value
    return convert


finite = _bounded(float)
positive = _bounded(float, 0, lo_open=True)
positive_int = _bounded(int, 1)
nonneg_int = _bounded(int, 0)


def _numbers(text):
    try:
        return np.array([float(v) for v in re.split(r"[,\s]+", text.strip()) if v])
    except ValueError:
        raise ValueError(f"expected comma-separated numbers: {text!r}") from None


def _float_list(count=None):
    def convert(text):
        try:
            values = _numbers(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
        if count is not None and len(values) != count:
            raise argparse.ArgumentTypeError(f"expected {count} numbers, got {len(values)}")
        return values
    return convert


def parse_tensor(text, dim=None):
    """Parse a tensor literal.

    Accepted forms: ``I`` (identity, dimension ``dim`` or 3), ``diag(a,b,...)``,
    or comma-separated numbers: 3 or 6 in upper-triangle row-major order for
    ``m = 2`` or ``3``, or 4 or 9 for a full row-major matrix.
    """
    s = text.strip()
    if s in ("I", "eye"):
        return np.eye(dim or 3)
    m = re.fullmatch(r"diag\((.*)\)", s)
    if m:
        return np.diag(_numbers(m.group(1)))
    values = _numbers(s.strip("[]()"))
    if len(values) in (3, 6):
        return unvech(values)
    if len(values) in (4, 9):
        k = int(round(np.sqrt(len(values))))
        return as_symmetric(values.reshape(k, k), "tensor")
    raise ValueError(f"cannot parse tensor literal {text!r}")


def _parse_tensors(literals, input_file=None):
    texts = list(literals)
    if input_file is not None:
        for line in Path(input_file).read_text(encoding="utf-8").splitlines():
            if line.strip() and not line.lstrip().startswith("#"):
                texts.append(line.strip())
    explicit = [parse_tensor(t) for t in texts if t.strip() not in ("I", "eye")]
    dim = explicit[0].shape[0] if explicit else None
    return [parse_tensor(t, dim) for t in texts]


def _fmt(x):
    return f"{x:.12g}"


def _fmt_matrix(M):
    return "\n".join(" ".join(_fmt(v) for v in row) for row in np.atleast_2d(M))


def _json_document(command, result):
    return json.dumps({"schema_version": SCHEMA_VERSION, "command": command, "result": result},
                      indent=2, sort_keys=True) + "\n"


def _emit(text, output):
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _grid_args(p):
    p.add_argument("--grid-lo", type=finite, default=-0.1)
    p.add_argument("--grid-hi", type=finite, default=0.7)
    p.add_argument("--grid-step", type=positive, default=0.02)
    p.add_argument("--ci-drop", type=positive, default=2.0,
                   help="log-likelihood drop defining the interval (default 2)")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=nonneg_int, default=0)
    common.add_argument("--threads", type=positive_int, default=1)
    common.add_argument("--output", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="powerspd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo coverage of the alpha interval")
    p.add_argument("--n-v", type=positive_int, default=4)
    p.add_argument("--n-s", type=positive_int, default=5)
    p.add_argument("--reps", type=positive_int, default=1000)
    p.add_argument("--alpha-true", type=finite, default=0.3)
    p.add_argument("--sigma2", type=positive, default=0.02)
    p.add_argument("--mu", type=_float_list(6), default=None,
                   help="true mean as 6 comma-separated upper-triangle entries (default diag(2,1,1))")
    _grid_args(p)

    p = sub.add_parser("fit", parents=[common], help="alpha map of a tensor field")
    p.add_argument("input")
    p.add_argument("--input-format", choices=("csv", "jsonl"), default=None)
    _grid_args(p)
    p.add_argument("--spacing", type=positive, default=2.0, help="grid spacing in mm")
    p.add_argument("--radius", type=positive, default=0.7, help="ball radius in mm")
    p.add_argument("--n-v-min", type=positive_int, default=15)
    p.add_argument("--offset", type=_float_list(3), default=np.zeros(3), help="grid origin x,y,z in mm")
    p.add_argument("--normalize", choices=("on", "off"), default="on")
    p.add_argument("--smooth-bandwidth", type=nonneg_int, default=3)
    p.add_argument("--profile-output", default=None,
                   help="smoothed profile CSV (default <output stem>_profile.csv)")

    p = sub.add_parser("compute", parents=[common], help="distances, means, FA and interpolation")
    p.add_argument("op", choices=("dist", "mean", "fa", "interp"))
    p.add_argument("tensors", nargs="*")
    p.add_argument("--input", default=None, help="file with one tensor literal per line")
    p.add_argument("--alpha", type=finite, default=0.5)
    p.add_argument("--metric", choices=("euclidean-power", "log-euclidean", "procrustes-power"),
                   default="euclidean-power")
    p.add_argument("--t", type=_bounded(float, 0.0, 1.0), default=0.5)

    p = sub.add_parser("synth-field", parents=[common], help="write a synthetic tensor field CSV")
    p.add_argument("--n-subjects", type=positive_int, default=9)
    p.add_argument("--extent", type=_float_list(3), default=np.array([10.0, 6.0, 4.0]))
    p.add_argument("--pitch", type=positive, default=0.34)
    p.add_argument("--alpha-true", type=finite, default=0.3)
    p.add_argument("--sigma2", type=positive, default=0.02)
    p.add_argument("--mean-norm", type=positive, default=None)
    return parser


def _grid(args, parser):
    if args.grid_lo > args.grid_hi:
        parser.error("--grid-lo must not exceed --grid-hi")
    return AlphaGrid(args.grid_lo, args.grid_hi, args.grid_step)


def cmd_simulate(args, parser):
    kwargs = {} if args.mu is None else {"mu": args.mu}
    if args.n_v * args.n_s <= 6:
        parser.error("--n-v * --n-s must exceed 6")
    design = SimDesign(n_v=args.n_v, n_s=args.n_s, replications=args.reps, alpha_true=args.alpha_true,
                       sigma2=args.sigma2, grid=_grid(args, parser), ci_drop=args.ci_drop,
                       seed=args.seed, **kwargs)
    report = run_coverage(design, n_jobs=args.threads)
    if args.format == "json":
        text = _json_document("simulate", report.to_dict())
    else:
        text = report.to_csv()
    _emit(text, args.output)
    return 0


def cmd_fit(args, parser):
    grid = _grid(args, parser)
    field = load_field(args.input, args.input_format)
    if args.normalize == "on":
        field = normalize_subjects(field)
    entries = estimate_alpha_map(field, grid, spacing=args.spacing, radius=args.radius,
                                 n_v_min=args.n_v_min, ci_drop=args.ci_drop, offset=args.offset,
                                 n_jobs=args.threads)
    smoothed = smooth_alpha_profile(entries, args.smooth_bandwidth)
    fitted = [e.alpha_hat for e in entries if e.fit is not None]
    summary = {
        "neighborhoods": len(entries),
        "failed": sum(e.fit is None for e in entries),
        "alpha_hat_min": min(fitted) if fitted else None,
        "alpha_hat_max": max(fitted) if fitted else None,
        "normalize": args.normalize,
        "smoother": "running_mean",
        "smooth_window": 2 * args.smooth_bandwidth + 1,
    }

    output = Path(args.output or "alpha_map.csv")
    if args.format == "json":
        result = dict(summary)
        result["alpha_map"] = [
            {"center": e.center.tolist(), "n": e.n, "alpha_hat": e.alpha_hat, "ci_lo": e.ci_lo,
             "ci_hi": e.ci_hi, "status": e.status} for e in entries
        ]
        result["profile"] = [
            {"index": i, "alpha_smooth": r[0], "ci_lo_smooth": r[1], "ci_hi_smooth": r[2]}
            for i, r in enumerate(smoothed.tolist())
        ]
        text = _json_document("fit", result).replace("NaN", "null")
        output.write_text(text, encoding="utf-8")
        sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
        return 0

    profile_path = Path(args.profile_output or output.with_name(output.stem + "_profile.csv"))
    output.write_text(alpha_map_csv(entries), encoding="utf-8")
    profile_path.write_text(profile_csv(smoothed), encoding="utf-8")
    lo = _fmt(summary["alpha_hat_min"]) if fitted else "nan"
    hi = _fmt(summary["alpha_hat_max"]) if fitted else "nan"
    print(f"neighborhoods={len(entries)} failed={summary['failed']} alpha_hat_range=[{lo}, {hi}] "
          f"smoother=running_mean(window={summary['smooth_window']})")
    return 0


def cmd_compute(args, parser):
    try:
        tensors = _parse_tensors(args.tensors, args.input)
    except ValueError as exc:
        parser.error(str(exc))
    need = {"dist": 2, "interp": 2}.get(args.op)
    if need is not None and len(tensors) != need:
        parser.error(f"{args.op} needs exactly {need} tensors, got {len(tensors)}")
    if not tensors:
        parser.error(f"{args.op} needs at least one tensor")

    alpha = 0.0 if args.metric == "log-euclidean" else args.alpha
    result = {"op": args.op, "alpha": alpha}
    if args.op == "dist":
        if args.metric == "procrustes-power":
            d, R = dist_procrustes_power(tensors[0], tensors[1], alpha)
            result.update(value=float(d), rotation=R.tolist())
        else:
            result["value"] = float(dist_power(tensors[0], tensors[1], alpha))
        text = _fmt(result["value"])
    elif args.op == "fa":
        values = [float(fractional_anisotropy(S, alpha)) for S in tensors]
        result["value"] = values
        text = "\n".join(_fmt(v) for v in values)
    elif args.op == "mean":
        M = frechet_mean(np.array(tensors), alpha).mean
        result.update(value=M.tolist(), vech=vech(M).tolist())
        text = _fmt_matrix(M)
    else:
        M = interpolate(tensors[0], tensors[1], args.t, alpha)
        result.update(value=M.tolist(), vech=vech(M).tolist(), t=args.t)
        text = _fmt_matrix(M)

    if args.format == "json":
        _emit(_json_document("compute", result), args.output)
    else:
        _emit(text + "\n", args.output)
    return 0


def cmd_synth_field(args, parser):
    if args.output is None:
        parser.error("synth-field requires --output")
    design = SimDesign(alpha_true=args.alpha_true, sigma2=args.sigma2, replications=1)
    field = simulate_field(design, n_subjects=args.n_subjects, extent=tuple(args.extent),
                           pitch=args.pitch, mean_norm=args.mean_norm, seed=args.seed)
    write_field(field, args.output)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "compute": cmd_compute,
    "synth-field": cmd_synth_field,
}


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if extra:
        # tensor literals may follow the options of `compute`
        if args.command != "compute" or any(e.startswith("--") for e in extra):
            parser.error(f"unrecognized arguments: {' '.join(extra)}")
        args.tensors = list(args.tensors) + extra
    try:
        return COMMANDS[args.command](args, parser)
    except (PowerSPDError, ValueError, OSError) as exc:
        print(f"powerspd: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
