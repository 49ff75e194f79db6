"""Command-line pipeline: simulate, estimate, extract, replay, chronology, correlate.

Exit codes: 0 success, 1 validation problem, 2 numerical failure.  All
diagnostics go to stderr; data goes to files and stdout only.
"""

from __future__ import annotations

import argparse
import datetime as dt
import sys
from pathlib import Path as FsPath

from . import chronology, covid, fileio, vintage
from .errors import NumericalError, ValidationError
from .estimate import EstimateOptions, estimate_mle
from .model import default_params, simulate
from .vintage import (FixedParams, ReestimatePerVintage, evaluation_mode,
                      ingest_vintages, replay)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _stamp_slug(stamp: dt.datetime) -> str:
    return stamp.strftime("%Y%m%dT%H%M%S")


def _out_dir(path) -> FsPath:
    out = FsPath(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate(args) -> int:
    spec = fileio.read_spec(args.spec)
    if args.params:
        params, _ = fileio.read_params(args.params, spec)
    else:
        params = default_params(spec)
    result = simulate(spec, params, seed=args.seed,
                      shock_scale=args.shock_scale, init=args.init)
    out = _out_dir(args.out)
    fileio.write_observations(out, result.observations)
    grid = spec.grid()
    factor_rows = [(grid.day_at(i).date, float(v)) for i, v in enumerate(result.factor)]
    fileio.write_series_csv(out / "factor.csv", factor_rows, header=("date", "value"))
    return 0


def _cmd_estimate(args) -> int:
    spec = fileio.read_spec(args.spec)
    obs = fileio.read_observations(args.data)
    init = None
    if args.init:
        init, _ = fileio.read_params(args.init, spec)
    opts = EstimateOptions(optimizer=args.optimizer, max_iter=args.max_iter,
                           tol=args.tol, seed=args.seed)
    report = estimate_mle(spec, obs, init=init, options=opts)
    fileio.write_params(report.params, args.out, scaling=report.scaling)
    print(f"log_likelihood = {report.log_likelihood!r}")
    print(f"iterations = {report.iterations}")
    print(f"converged = {str(report.converged).lower()}")
    return 0


def _cmd_extract(args) -> int:
    spec = fileio.read_spec(args.spec)
    params, scaling = fileio.read_params(args.params, spec)
    obs = fileio.read_observations(args.data)
    pull = (dt.datetime.fromisoformat(args.pull) if args.pull
            else dt.datetime.combine(obs.latest_period_end() or spec.grid_end, dt.time()))
    dataset = vintage.VintageDataset(pull_timestamp=pull, observations=obs)
    path = vintage.extract_path(spec, params, dataset, scaling=scaling)
    fileio.write_path_csv(path, args.out)
    return 0


def _cmd_replay(args) -> int:
    spec = fileio.read_spec(args.spec)
    archive = ingest_vintages(args.vintages) if args.vintages else []
    if args.mode == "pseudo-real-time":
        datasets = evaluation_mode(args.mode, vintages=archive)
    else:
        if not args.data:
            raise ValidationError(f"--mode {args.mode} needs --data with the final dataset")
        final = fileio.read_observations(args.data)
        datasets = evaluation_mode(args.mode, final_data=final, vintages=archive)

    if args.reestimate_per_vintage:
        init = None
        if args.params:
            init, _ = fileio.read_params(args.params, spec)
        policy = ReestimatePerVintage(init=init, options=EstimateOptions(seed=args.seed))
    else:
        if not args.params:
            raise ValidationError("replay needs --params unless --reestimate-per-vintage is set")
        params, scaling = fileio.read_params(args.params, spec)
        policy = FixedParams(params=params, scaling=scaling)

    paths, dots = replay(spec, policy, datasets, jobs=args.jobs)
    out = _out_dir(args.out)
    for p in paths:
        fileio.write_path_csv(p, out / f"path_{_stamp_slug(p.pull_timestamp)}.csv")
    fileio.write_dots_csv(dots, out / "dots.csv")
    if args.svg:
        from . import plots
        plots.path_plot(paths, out / "path_plot.svg", comparison=paths[-1])
        plots.dot_plot(dots, out / "dot_plot.svg", comparison=paths[-1])
    return 0


def _cmd_chronology(args) -> int:
    path = fileio.read_path_csv(args.path)
    if args.table == "builtin":
        table = chronology.NBER_TABLE
    else:
        table = _read_table_csv(args.table)
    rows = chronology.episode_report(path, table)
    header = ["peak", "trough", "duration", "depth", "severity"]
    widths = [8, 8, 8, 9, 9]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in rows:
        cells = [row["peak"], row["trough"], str(row["duration"]),
                 "" if row["depth"] is None else f"{row['depth']:.2f}",
                 "" if row["severity"] is None else f"{row['severity']:.2f}"]
        print("  ".join(c.ljust(w) for c, w in zip(cells, widths)))
    if args.out:
        import csv as _csv
        with open(args.out, "w", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(["peak", "trough", "peak_announced", "trough_announced",
                        "duration", "depth", "severity"])
            for row in rows:
                w.writerow([
                    row["peak"], row["trough"], row["peak_announced"],
                    row["trough_announced"], row["duration"],
                    "" if row["depth"] is None else repr(row["depth"]),
                    "" if row["severity"] is None else repr(row["severity"]),
                ])
    return 0


def _read_table_csv(path) -> chronology.RecessionTable:
    import csv as _csv

    episodes = []
    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        head = next(reader, None)
        if head is None or [c.strip() for c in head[:2]] != ["peak", "trough"]:
            raise ValidationError(f"{path}: expected header 'peak,trough'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                episodes.append(chronology.RecessionEpisode(
                    peak_month=chronology.parse_month(row[0]),
                    trough_month=chronology.parse_month(row[1]),
                ))
            except (ValidationError, IndexError) as e:
                raise ValidationError(f"{path}:{lineno}: {e}") from None
    return chronology.RecessionTable(episodes=tuple(episodes))


def _cmd_correlate(args) -> int:
    path = fileio.read_path_csv(args.path)
    deaths = covid.DailySeries.from_pairs(
        fileio.read_series_csv(args.deaths, header=("date", "value"))
    )
    result = covid.covid_pipeline(path, deaths, k=args.lead, lam=args.hp_lambda)
    out = _out_dir(args.out)
    with open(out / "aligned.csv", "w", newline="") as fh:
        import csv as _csv
        w = _csv.writer(fh)
        w.writerow(["date", "ads", "comparison"])
        for date, a, b in zip(result.dates(), result.index_values, result.smoothed_values):
            w.writerow([date.isoformat(), repr(float(a)), repr(float(b))])
    with open(out / "summary.csv", "w", newline="") as fh:
        import csv as _csv
        w = _csv.writer(fh)
        w.writerow(["lead", "lambda", "correlation"])
        w.writerow([args.lead, repr(float(args.hp_lambda)), repr(result.correlation)])
    if args.svg:
        from . import plots
        plots.dual_axis_plot(result, out / "comparison.svg")
    print(f"correlation = {result.correlation!r}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="bcindex",
                     description="Daily business-conditions index toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a factor path and observations")
    p.add_argument("--spec", required=True)
    p.add_argument("--params")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shock-scale", type=float, default=1.0)
    p.add_argument("--init", choices=["stationary", "zero"], default="stationary")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("estimate", help="maximum-likelihood fit")
    p.add_argument("--spec", required=True)
    p.add_argument("--data", required=True, help="directory with one CSV per indicator")
    p.add_argument("--init", help="params file to start from")
    p.add_argument("--optimizer", choices=["simplex", "quasi-newton"], default="simplex")
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="params file to write")
    p.set_defaults(fn=_cmd_estimate)

    p = sub.add_parser("extract", help="smoothed index path for one dataset")
    p.add_argument("--spec", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--pull", help="pull timestamp (default: latest period end)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_extract)

    p = sub.add_parser("replay", help="per-vintage paths and the dot series")
    p.add_argument("--spec", required=True)
    p.add_argument("--vintages", help="vintage archive directory")
    p.add_argument("--params", help="fixed params file (from estimate)")
    p.add_argument("--reestimate-per-vintage", action="store_true")
    p.add_argument("--mode", choices=list(vintage.EVALUATION_MODES),
                   default="pseudo-real-time")
    p.add_argument("--data", help="final revised dataset directory (final-* modes)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--svg", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_replay)

    p = sub.add_parser("chronology", help="recession duration/depth/severity report")
    p.add_argument("--path", required=True, help="path CSV (date,ads,std)")
    p.add_argument("--table", default="builtin", help="'builtin' or a peak,trough CSV")
    p.add_argument("--out", help="report CSV")
    p.set_defaults(fn=_cmd_chronology)

    p = sub.add_parser("correlate", help="lead-k HP-smoothed correlation against the index")
    p.add_argument("--path", required=True)
    p.add_argument("--deaths", required=True, help="daily CSV (date,value)")
    p.add_argument("--lead", type=int, default=20)
    p.add_argument("--lambda", dest="hp_lambda", type=float, default=1.0e7)
    p.add_argument("--svg", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_correlate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())
