"""gpcs command line: estimate, scan, simulate, power.

Exit codes: 0 ok, 2 invalid arguments, 3 I/O, 4 parse, 5 numerical,
6 non-convergence under --strict.
"""
import argparse
import datetime
import itertools
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .core import BivariateSample
from .errors import GpcsError, InputError, InvalidArguments, NonConvergence
from .inference import BootstrapMode, VarianceVariant, bootstrap_ci, plugin_ci
from .io import SCHEMA_VERSION, ingest_csv, read_table, to_csv, to_json
from .klines import KlinesConfig
from .measures import r2_gs, r2_gu, r2_gu_auto
from .parallel import default_threads, parallel_map, spawn_seeds
from .power import DEFAULT_MEASURES, PatternSpec, gcs_measure, permutation_power
from .simgen import METHODS, MixtureSpec, builtin_setting, coverage_experiment

log = logging.getLogger("gpcs")

CI_CHOICES = ("plugin-p1", "plugin-p2", "bootstrap", "none")
MEASURE_CHOICES = ("r2", "dcor", "gcs")


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(t) for t in text.split(",") if t.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"cannot parse list {text!r}") from None
    return parse


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("GPCS_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise InvalidArguments(f"GPCS_SEED={env!r} is not an integer") from None
    return 0


def _threads(args):
    return args.threads if args.threads and args.threads > 0 else default_threads()


def _emit(args, text):
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise InputError(f"cannot write {args.output}: {exc}") from None
    else:
        sys.stdout.write(text)


def _header(command, seed):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "version": __version__,
        "seed": seed,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def _config(args, seed):
    return KlinesConfig(restarts=args.restarts, max_iterations=args.max_iterations, seed=seed)


def _interval(args, sample, est, seed, config, threads):
    if args.ci == "none":
        return None
    if args.ci == "bootstrap":
        mode = BootstrapMode(args.bootstrap_mode)
        return bootstrap_ci(sample, B=args.b, mode=mode, level=args.level, seed=seed,
                            k=est.k, config=config, estimate=est, threads=threads)
    variant = (VarianceVariant.GAUSSIAN_CLOSED_FORM if args.ci == "plugin-p1"
               else VarianceVariant.GENERAL_MOMENTS)
    return plugin_ci(est, est.n, args.level, variant)


def cmd_estimate(args):
    seed = _seed(args)
    threads = _threads(args)
    sample, info = ingest_csv(args.input, args.x, args.y, args.label)
    config = _config(args, seed)
    if args.label:
        est = r2_gs(sample)
    elif args.k is not None:
        est = r2_gu(sample, args.k, config)
    elif args.k_max is not None:
        est = r2_gu_auto(sample, args.k_max, config)
    else:
        raise InvalidArguments("give --label (specified) or --k / --k-max (unspecified)")
    if est.fit is not None and not est.fit.converged:
        if args.strict:
            raise NonConvergence("best K-lines restart hit the iteration cap")
        log.warning("best K-lines restart did not converge within %d iterations",
                    args.max_iterations)
    ci = _interval(args, sample, est, seed, config, threads)
    report = _header("estimate", seed)
    report.update({
        "input": os.path.basename(args.input),
        "x": args.x,
        "y": args.y,
        "label": args.label,
        "dropped_rows": info["dropped_rows"],
        "label_map": info["label_map"],
        "value": est.value,
        "scenario": est.scenario.value,
        "k": est.k,
        "chosen_k": est.k,
        "n": est.n,
        "components": [c.to_dict() for c in est.components],
        "objective": None if est.fit is None else est.fit.objective,
        "converged": None if est.fit is None else est.fit.converged,
        "ci": None if ci is None else ci.to_dict(),
    })
    if args.format == "csv":
        row = {k: report[k] for k in ("x", "y", "scenario", "k", "n", "value", "seed")}
        if ci is not None:
            row.update(ci_lower=ci.lower, ci_upper=ci.upper, se=ci.se)
        _emit(args, to_csv([row]))
    else:
        _emit(args, to_json(report))
    return 0


def _scan_pair(args, table, measures, config, pair_seed, i, j):
    x = table.rows[:, i]
    y = table.rows[:, j]
    row = {"x": table.columns[i], "y": table.columns[j]}
    for name in measures:
        if name == "r2":
            row["r2"] = DEFAULT_MEASURES["r2"]((x, y))
        elif name == "dcor":
            row["dcor"] = DEFAULT_MEASURES["dcor"]((x, y))
        else:
            cfg = config.with_seed(pair_seed)
            est = r2_gu((x, y), args.k, cfg) if args.k_max is None else \
                r2_gu_auto((x, y), args.k_max, cfg)
            row["gcs"] = est.value
            row["chosen_k"] = est.k
            ci = _interval(args, BivariateSample(x, y), est, pair_seed, cfg, 1)
            if ci is not None:
                row["ci_lower"], row["ci_upper"], row["se"] = ci.lower, ci.upper, ci.se
    return row


def cmd_scan(args):
    seed = _seed(args)
    threads = _threads(args)
    table = read_table(args.input, args.columns, args.label)
    if table.rows.shape[1] < 2:
        raise InvalidArguments("scan needs at least 2 numeric columns")
    measures = args.measures
    for m in measures:
        if m not in MEASURE_CHOICES:
            raise InvalidArguments(f"unknown measure {m!r}; choose from {MEASURE_CHOICES}")
    pairs = list(itertools.combinations(range(table.rows.shape[1]), 2))
    seeds = spawn_seeds(seed, len(pairs))
    config = _config(args, seed)

    def work(item):
        (i, j), s = item
        try:
            return _scan_pair(args, table, measures, config, s, i, j)
        except GpcsError as exc:
            log.warning("pair (%s, %s) failed: %s", table.columns[i], table.columns[j], exc)
            return None

    rows = parallel_map(work, zip(pairs, seeds), threads)
    failures = sum(r is None for r in rows)
    rows = [r for r in rows if r is not None]
    key = "gcs" if "gcs" in measures else measures[0]
    rows.sort(key=lambda r: -r[key])
    if args.format == "csv":
        fields = ["x", "y"] + measures
        if "gcs" in measures:
            fields.append("chosen_k")
            if args.ci != "none":
                fields += ["ci_lower", "ci_upper", "se"]
        _emit(args, to_csv(rows, fields))
    else:
        report = _header("scan", seed)
        report.update({"input": os.path.basename(args.input), "measures": measures,
                       "dropped_rows": table.dropped, "pairs": len(pairs),
                       "failures": failures, "results": rows})
        _emit(args, to_json(report))
    return 0


def cmd_simulate(args):
    seed = _seed(args)
    threads = _threads(args)
    if (args.setting is None) == (args.spec is None):
        raise InvalidArguments("give exactly one of --setting or --spec")
    if args.reps < 100:
        raise InvalidArguments("--reps must be >= 100")
    if args.spec:
        try:
            with open(args.spec, encoding="utf-8") as fh:
                spec_dict = json.load(fh)
        except FileNotFoundError:
            raise InputError(f"spec file not found: {args.spec}") from None
        except json.JSONDecodeError as exc:
            from .errors import ParseError
            raise ParseError(f"invalid JSON in {args.spec}: {exc}") from None
        spec = MixtureSpec.from_dict(spec_dict)
        setting = spec
    else:
        spec = builtin_setting(args.setting)
        setting = args.setting
    for m in args.methods:
        if m not in METHODS:
            raise InvalidArguments(f"unknown method {m!r}; choose from {METHODS}")
    config = _config(args, seed)
    reports = []
    for n in args.n:
        reports += coverage_experiment(setting, n, args.reps, args.scenario, args.methods,
                                       seed=seed, config=config, k_mode=args.k_mode,
                                       k_max=args.k_max, bootstrap_b=args.b,
                                       level=args.level, threads=threads)
    records = [dict(setting=r.setting_id, **r.to_dict()) for r in reports]
    if args.format == "csv":
        _emit(args, to_csv(records, ["setting", "n", "scenario", "method", "coverage",
                                     "target", "reps", "covered", "failures", "k_mode",
                                     "mean_width"]))
    else:
        report = _header("simulate", seed)
        report.update({"spec": spec.to_dict(), "level": args.level, "reports": records})
        _emit(args, to_json(report))
    return 0


def cmd_power(args):
    seed = _seed(args)
    threads = _threads(args)
    if args.b < 200:
        raise InvalidArguments("--b must be >= 200")
    measures = {}
    for m in args.measures:
        if m == "gcs":
            measures["gcs"] = gcs_measure(args.k, _config(args, seed))
        elif m in DEFAULT_MEASURES:
            measures[m] = DEFAULT_MEASURES[m]
        else:
            raise InvalidArguments(f"unknown measure {m!r}; choose from {MEASURE_CHOICES}")
    records = []
    for n in args.n:
        for sigma in args.sigma:
            spec = PatternSpec(args.pattern, sigma, x_sd=args.x_sd)
            for rep in permutation_power(spec, measures, n, args.b, args.alpha, seed, threads):
                records.append(rep.to_dict())
    if args.format == "csv":
        _emit(args, to_csv(records, ["measure", "pattern", "n", "sigma", "alpha",
                                     "threshold", "power", "B"]))
    else:
        report = _header("power", seed)
        report.update({"reports": records})
        _emit(args, to_json(report))
    return 0


def _common(p, fmt="json"):
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (default: $GPCS_SEED, else 0)")
    p.add_argument("--threads", type=int, default=0, help="worker threads (0 = all cores)")
    p.add_argument("--format", choices=("json", "csv"), default=fmt)
    p.add_argument("--output", "-o", default=None, help="write here instead of stdout")
    p.add_argument("--restarts", type=int, default=30, help="K-lines restarts")
    p.add_argument("--max-iterations", type=int, default=100)
    p.add_argument("--strict", action="store_true",
                   help="fail (exit 6) when K-lines does not converge")


def _ci_opts(p, default="plugin-p1"):
    p.add_argument("--ci", choices=CI_CHOICES, default=default)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--b", type=int, default=1000, help="bootstrap replicates")
    p.add_argument("--bootstrap-mode", choices=("parametric", "nonparametric"),
                   default="nonparametric")


def build_parser():
    parser = argparse.ArgumentParser(prog="gpcs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gpcs {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="measure and interval for one variable pair")
    p.add_argument("--input", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--label", default=None, help="membership column (specified scenario)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--k", type=int, default=None)
    g.add_argument("--k-max", type=int, default=None)
    _ci_opts(p)
    _common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("scan", help="all column pairs of a matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--columns", type=_csv_list(str), default=None)
    p.add_argument("--label", default=None, help="column to exclude from the scan")
    p.add_argument("--measures", type=_csv_list(str), default=["gcs"])
    g = p.add_mutually_exclusive_group()
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--k-max", type=int, default=None)
    _ci_opts(p, default="none")
    _common(p, fmt="csv")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("simulate", help="confidence-interval coverage experiment")
    p.add_argument("--setting", type=int, default=None)
    p.add_argument("--spec", default=None, help="JSON mixture spec file")
    p.add_argument("--n", type=_csv_list(int), default=[100])
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--scenario", choices=("specified", "unspecified"), default="specified")
    p.add_argument("--methods", type=_csv_list(str.lower), default=["asymp", "p1"])
    p.add_argument("--k-mode", choices=("true", "aic"), default="true")
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--b", type=int, default=200, help="bootstrap replicates")
    _common(p, fmt="csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("power", help="permutation power comparison")
    p.add_argument("--pattern", choices=("two_lines", "linear", "parabola", "piecewise", "none"),
                   required=True)
    p.add_argument("--n", type=_csv_list(int), default=[50])
    p.add_argument("--sigma", type=_csv_list(float), default=[1.0])
    p.add_argument("--b", type=int, default=1000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--x-sd", type=float, default=5.0)
    p.add_argument("--measures", type=_csv_list(str), default=["r2", "dcor", "gcs"])
    p.add_argument("--k", type=int, default=2)
    _common(p, fmt="csv")
    p.set_defaults(func=cmd_power)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="gpcs: %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except GpcsError as exc:
        print(f"gpcs: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"gpcs: error: {exc}", file=sys.stderr)
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
