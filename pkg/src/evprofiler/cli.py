"""Batch command-line front end.

Every subcommand reads artifacts, writes its output plus a run manifest, and
(for the report-producing commands) renders a PNG figure next to the
delimited output unless --no-figures is given.  Exit codes: 0 success,
1 runtime failure, 2 usage error, 3 artifact version mismatch.  Failures
print a single machine-parseable line to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from collections import Counter
from pathlib import Path

from . import __version__, artifacts, plots
from .artifacts import ArtifactVersionError
from .data_model import RecordError
from .evaluation import (
    DEFAULT_NOF_LIST,
    DEFAULT_TRAIN_SIZES,
    AssemblyError,
    ExperimentConfig,
    compare_legacy,
    run_profiling,
    sweep_degradation,
    sweep_nof,
    sweep_train_size,
)
from .extraction import TailParams, extract_fleet
from .features import FeatureTable
from .synth import generate_fleet


def _out_path(raw: str) -> Path:
    path = Path(raw)
    base = os.environ.get("EVPROFILER_OUT_DIR")
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _parse_q_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _manifest(args, command: str, inputs, outputs, started: float) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func" and not callable(v)}
    config = {k: (list(v) if isinstance(v, tuple) else v) for k, v in config.items()}
    out = Path(str(outputs[0]) + ".manifest.json")
    artifacts.save_manifest(
        out,
        command=command,
        config=config,
        inputs=inputs,
        outputs=outputs,
        seed=getattr(args, "seed", None),
        tool_version=__version__,
        wall_clock_s=round(time.monotonic() - started, 3),
    )


def _report_skips(report_counter: Counter) -> str:
    if not report_counter:
        return "none"
    return ", ".join(f"{reason}={count}" for reason, count in sorted(report_counter.items()))


def cmd_ingest(args) -> int:
    started = time.monotonic()
    out = _out_path(args.out)
    if args.acn:
        fleet, report = artifacts.ingest_acn(args.acn, cutoff_date=args.cutoff)
        src = args.acn
    else:
        fleet, report = artifacts.ingest_canonical(args.canonical, cutoff_date=args.cutoff)
        src = args.canonical
    if args.min_tailed > 0:
        from .data_model import filter_eligible

        fleet = filter_eligible(fleet, args.min_tailed, TailParams())
    artifacts.save_fleet(fleet, out)
    _manifest(args, "ingest", [src], [out], started)
    print(
        f"ingested {fleet.n_sessions} sessions from {len(fleet.ev_ids)} EVs "
        f"(skipped: {_report_skips(report.skipped)}) -> {out}"
    )
    return 0


def cmd_synth(args) -> int:
    started = time.monotonic()
    out = _out_path(args.out)
    fleet, truth = generate_fleet(
        n_evs=args.evs,
        sessions_per_ev=args.sessions,
        signature_spread=args.spread,
        seed=args.seed,
        period=args.period,
    )
    artifacts.save_fleet(fleet, out)
    truth_path = Path(str(out) + ".truth.json")
    artifacts.save_truth(truth, truth_path)
    _manifest(args, "synth", [], [out, truth_path], started)
    print(f"generated {fleet.n_sessions} sessions for {len(fleet.ev_ids)} EVs -> {out}")
    return 0


def cmd_extract(args) -> int:
    started = time.monotonic()
    out = _out_path(args.out)
    fleet = artifacts.load_fleet(args.fleet)
    params = TailParams(
        n_avg=args.n_avg,
        epsilon=args.epsilon,
        t_max=args.t_max,
        zero_threshold=args.zero_threshold,
        min_tail_len=args.min_tail_len,
    )
    records, skipped = extract_fleet(fleet, params)
    if args.min_sessions > 0:
        counts = Counter(r.ev_id for r in records)
        keep = {ev for ev, n in counts.items() if n >= args.min_sessions}
        dropped = len(counts) - len(keep)
        records = [r for r in records if r.ev_id in keep]
    else:
        dropped = 0
    artifacts.save_tails(records, params, out)
    _manifest(args, "extract", [args.fleet], [out], started)
    evs = len({r.ev_id for r in records})
    print(
        f"extracted {len(records)} tails across {evs} EVs "
        f"({skipped} sessions without usable tail, {dropped} EVs below "
        f"--min-sessions {args.min_sessions}) -> {out}"
    )
    return 0


def cmd_featurize(args) -> int:
    started = time.monotonic()
    out = _out_path(args.out)
    records, _params = artifacts.load_tails(args.tails)
    mode = "legacy" if args.legacy else "modern"
    table = FeatureTable.from_records(records, mode=mode)
    artifacts.save_feature_table(table, out)
    _manifest(args, "featurize", [args.tails], [out], started)
    print(f"featurized {table.n_rows} sessions x {len(table.names)} {mode} features -> {out}")
    return 0


def _experiment_config(args, model=None, q_values=None) -> ExperimentConfig:
    return ExperimentConfig(
        model=model if model is not None else args.model,
        q_values=q_values if q_values is not None else args.q,
        nof=args.nof,
        train_fraction=args.train_fraction,
        iterations=args.iterations,
        folds=args.folds,
        seed=args.seed,
    )


def cmd_evaluate(args) -> int:
    started = time.monotonic()
    out = _out_path(args.out)
    table = artifacts.load_feature_table(args.features)
    config = _experiment_config(args)
    reports = run_profiling(config, table, jobs=args.jobs)
    artifacts.save_report(reports, out, extra_meta={"command": "evaluate"})
    outputs = [out]
    if args.figures:
        fig_path = out.with_suffix(".png")
        plots.plot_report(reports, fig_path)
        outputs.append(fig_path)
    _manifest(args, "evaluate", [args.features], outputs, started)
    for report in reports:
        agg = report.aggregate_mean
        print(
            f"q={report.q:g} model={report.model} nof={report.nof}: "
            f"precision={agg.precision:.3f} recall={agg.recall:.3f} "
            f"f1={agg.f1:.3f} g_mean={agg.g_mean:.3f} (n_evs={report.n_evs})"
        )
    print(f"report -> {out}")
    return 0


def cmd_sweep(args) -> int:
    started = time.monotonic()
    out = _out_path(args.out)
    table = artifacts.load_feature_table(args.features)
    outputs = [out]
    if args.what == "nof":
        result = sweep_nof(_experiment_config(args), table, nof_list=args.nof_list, jobs=args.jobs)
        plot = plots.plot_nof_sweep
    elif args.what == "train-size":
        result = sweep_train_size(
            _experiment_config(args),
            table,
            sizes=args.sizes,
            min_charges=args.min_charges,
            jobs=args.jobs,
        )
        plot = plots.plot_train_size_sweep
    elif args.what == "degradation":
        result = sweep_degradation(
            _experiment_config(args),
            table,
            train_fracs=args.train_fracs,
            window=args.window,
            top_n=args.top_n,
            jobs=args.jobs,
        )
        plot = plots.plot_degradation_sweep
    else:  # q: every requested model across the q list
        rows = []
        for model in args.models:
            config = _experiment_config(args, model=model)
            for report in run_profiling(config, table, jobs=args.jobs):
                rows.extend(r for r in report.rows() if r["scope"] == "aggregate")
        from .evaluation import SweepResult

        result = SweepResult(kind="q", rows=rows, meta={"models": list(args.models)})
        plot = plots.plot_q_sweep
    artifacts.save_sweep(result.rows, result.kind, out, extra_meta=result.meta)
    if args.figures:
        fig_path = out.with_suffix(".png")
        plot(result.rows, fig_path)
        outputs.append(fig_path)
    _manifest(args, f"sweep {args.what}", [args.features], outputs, started)
    print(f"sweep {args.what}: {len(result.rows)} rows -> {out}")
    return 0


def cmd_compare_legacy(args) -> int:
    started = time.monotonic()
    out = _out_path(args.out)
    records, _params = artifacts.load_tails(args.tails)
    modern = FeatureTable.from_records(records, mode="modern")
    legacy = FeatureTable.from_records(records, mode="legacy")
    result = compare_legacy(_experiment_config(args), modern, legacy, jobs=args.jobs)
    artifacts.save_sweep(result.rows, result.kind, out, extra_meta=result.meta)
    outputs = [out]
    if args.figures:
        fig_path = out.with_suffix(".png")
        plots.plot_legacy_comparison(result.rows, fig_path)
        outputs.append(fig_path)
    _manifest(args, "compare-legacy", [args.tails], outputs, started)
    print(f"compare-legacy: {len(result.rows)} rows -> {out}")
    return 0


def _add_experiment_flags(sub, default_q="1") -> None:
    sub.add_argument("--q", type=_parse_q_list, default=_parse_q_list(default_q), help="comma-separated q ratios")
    sub.add_argument("--nof", type=int, default=100, help="features kept by chi2 selection")
    sub.add_argument("--iterations", type=int, default=None, help="default 100 (25 for rf/ada)")
    sub.add_argument("--train-fraction", type=float, default=0.8)
    sub.add_argument("--folds", type=int, default=3)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--jobs", type=int, default=1, help="parallel workers (per-EV tasks)")
    sub.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evprofiler",
        description="EV charging-session profiling toolkit",
    )
    parser.add_argument("--version", action="version", version=f"evprofiler {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("ingest", help="build a fleet artifact from raw session data")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--acn", help="ACN-Data API response document (JSON)")
    src.add_argument("--canonical", help="canonical session file (JSONL)")
    p.add_argument("--out", required=True)
    p.add_argument("--cutoff", default=None, help="drop sessions connected after this instant")
    p.add_argument("--min-tailed", type=int, default=0, help="keep EVs with >= N tailed sessions (0 = off)")
    p.set_defaults(func=cmd_ingest)

    p = commands.add_parser("synth", help="generate a synthetic fleet with ground truth")
    p.add_argument("--evs", type=int, default=20)
    p.add_argument("--sessions", type=int, default=30)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--period", type=float, default=20.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = commands.add_parser("extract", help="extract tails and delta series from a fleet")
    p.add_argument("--fleet", required=True)
    p.add_argument("--n-avg", type=int, default=25)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--t-max", type=int, default=10)
    p.add_argument("--zero-threshold", type=float, default=0.1)
    p.add_argument("--min-tail-len", type=int, default=None)
    p.add_argument("--min-sessions", type=int, default=8, help="eligibility: tailed sessions per EV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = commands.add_parser("featurize", help="feature table from a tails artifact")
    p.add_argument("--tails", required=True)
    p.add_argument("--legacy", action="store_true", help="18-feature legacy mode")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = commands.add_parser("evaluate", help="per-EV profiling report for one model")
    p.add_argument("--features", required=True)
    p.add_argument("--model", choices=("svm", "knn", "dt", "lr", "rf", "ada"), default="knn")
    p.add_argument("--out", required=True)
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = commands.add_parser("sweep", help="experiment sweeps")
    p.add_argument("what", choices=("nof", "train-size", "q", "degradation"))
    p.add_argument("--features", required=True)
    p.add_argument("--model", choices=("svm", "knn", "dt", "lr", "rf", "ada"), default="knn")
    p.add_argument("--models", type=lambda s: tuple(s.split(",")), default=("svm", "knn", "dt", "lr", "rf", "ada"), help="models for the q sweep")
    p.add_argument("--nof-list", type=_parse_int_list, default=DEFAULT_NOF_LIST)
    p.add_argument("--sizes", type=_parse_int_list, default=DEFAULT_TRAIN_SIZES)
    p.add_argument("--min-charges", type=int, default=70)
    p.add_argument("--train-fracs", type=_parse_float_list, default=(0.3, 0.6))
    p.add_argument("--window", type=float, default=0.05)
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--out", required=True)
    _add_experiment_flags(p, default_q="1,2,3,4,5")
    p.set_defaults(func=cmd_sweep)

    p = commands.add_parser("compare-legacy", help="modern vs legacy pipeline on shared splits")
    p.add_argument("--tails", required=True)
    p.add_argument("--model", choices=("svm", "knn", "dt", "lr", "rf", "ada"), default="knn")
    p.add_argument("--out", required=True)
    _add_experiment_flags(p, default_q="1,3,5")
    p.set_defaults(func=cmd_compare_legacy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ArtifactVersionError as exc:
        print(f'error code=version_mismatch message="{exc}"', file=sys.stderr)
        return 3
    except (AssemblyError, RecordError, ValueError, OSError) as exc:
        code = type(exc).__name__.lower()
        print(f'error code={code} message="{exc}"', file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
