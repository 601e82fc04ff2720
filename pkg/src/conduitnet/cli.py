"""Command-line front end.

Subcommands cover the full pipeline (`run`), individual stages that
reproduce the corresponding slice of a run byte for byte, the
synthetic-data generator, a beta sweep, and figure-ready reductions
(histogram bins, per-sector cartogram data) that also render PNG
figures next to their CSVs unless --no-figure is given.

Exit codes: 0 success, 1 computation failed, 2 bad input.  Failures
print one JSON line to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import ComputationError, InputError
from .ingest import DEFAULT_TAX_RATE
from .multilayer import ALPHA_DEFAULT, BETA_DEFAULT, REPORT_THRESHOLD_DEFAULT, beta_sweep
from .pipeline import (
    AnalysisParams,
    check_inputs,
    input_paths,
    load_network,
    pipeline_digest,
    run_conduit_stage,
    run_load_stage,
    run_multilayer_stage,
    run_pipeline,
    run_sink_stage,
    run_value_stage,
    write_run_outputs,
    write_sweep_summary,
)
from .report import (
    cartogram_rows,
    compute_histogram,
    multilayer_filename,
    propagated_digest,
    read_conduit_scores,
    read_load_scores,
    read_multilayer_rows,
    read_score_column,
    write_cartogram_csv,
    write_conduit_scores,
    write_histogram_csv,
    write_load_scores,
    write_multilayer_scores,
    write_sink_scores,
)
from .scoring import SINK_THRESHOLD_DEFAULT
from .synth import config_from_mapping, generate, parse_config_file, write_bundle
from .taxrouting import MAX_HOPS_DEFAULT


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=ALPHA_DEFAULT,
                   help="conduit weight in the multilayer fusion (default 1.0)")
    p.add_argument("--beta", type=float, action="append", default=None,
                   help="load weight; repeatable for a sweep (default 0.5)")
    p.add_argument("--sink-threshold", type=float, default=SINK_THRESHOLD_DEFAULT,
                   help="pairs scoring strictly above become sinks (default 10.0)")
    p.add_argument("--report-threshold", type=float, default=REPORT_THRESHOLD_DEFAULT,
                   help="multilayer score flagging threshold (default 2.0)")
    p.add_argument("--routing-cost", choices=("additive", "multiplicative"),
                   default="additive", help="tax-layer edge cost model")
    p.add_argument("--max-hops", type=int, default=MAX_HOPS_DEFAULT,
                   help="route hop cap for load centrality (default 4)")
    p.add_argument("--inject-all", action="store_true",
                   help="every firm injects its income, not just chain ends")
    p.add_argument("--v-total-mode", choices=("received", "injected"), default="received",
                   help="normalization total: value received anywhere or value injected")
    p.add_argument("--ratios-as-percent", action="store_true",
                   help="ownership ratios are given as 0-100 percent")
    p.add_argument("--rates-as-percent", action="store_true",
                   help="withholding rates are given as 0-100 percent")
    p.add_argument("--default-tax-rate", type=float, default=DEFAULT_TAX_RATE,
                   help="statutory rate filling unspecified self-pairs (default 0.30)")


def _params(args: argparse.Namespace) -> AnalysisParams:
    betas = tuple(args.beta) if args.beta else (BETA_DEFAULT,)
    return AnalysisParams(
        alpha=args.alpha,
        betas=betas,
        sink_threshold=args.sink_threshold,
        report_threshold=args.report_threshold,
        routing_cost=args.routing_cost,
        max_hops=args.max_hops,
        inject_all=args.inject_all,
        v_total_mode=args.v_total_mode,
        ratios_as_percent=args.ratios_as_percent,
        rates_as_percent=args.rates_as_percent,
        default_tax_rate=args.default_tax_rate,
    )


def _prepared(args):
    paths = input_paths(args.input_dir)
    check_inputs(paths)
    params = _params(args)
    manifest, digest = pipeline_digest(paths, params)
    return paths, params, manifest, digest


def cmd_run(args) -> int:
    paths, params, manifest, digest = _prepared(args)
    result = run_pipeline(paths, params)
    written = write_run_outputs(result, args.out, manifest, params, args.dump_flows)
    print(f"wrote {len(written)} files to {args.out} (manifest_digest={digest[:12]}...)")
    print(f"sinks: {len(result.sinks)}  conduit pairs: {len(result.conduit_scores)}"
          f"  v_total: {result.flow.v_total:.6g}")
    return 0


def cmd_compute_sink(args) -> int:
    paths, params, _, digest = _prepared(args)
    network, gdp, reports = load_network(paths, params)
    result = run_value_stage(network, gdp, reports, params)
    run_sink_stage(result, params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sink_scores(out / "sink_scores.csv", result.sink_scores, digest)
    print(f"wrote {out / 'sink_scores.csv'} ({len(result.sink_scores)} pairs,"
          f" {len(result.sinks)} sinks at threshold {params.sink_threshold:g})")
    return 0


def cmd_compute_conduit(args) -> int:
    paths, params, _, digest = _prepared(args)
    network, gdp, reports = load_network(paths, params)
    result = run_value_stage(network, gdp, reports, params)
    run_sink_stage(result, params)
    run_conduit_stage(result, params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_conduit_scores(out / "conduit_scores.csv", result.conduit_scores, digest)
    for note in result.conduit_notes:
        print(f"note: {note}")
    print(f"wrote {out / 'conduit_scores.csv'} ({len(result.conduit_scores)} pairs)")
    return 0


def cmd_compute_load(args) -> int:
    paths, params, _, digest = _prepared(args)
    network, gdp, reports = load_network(paths, params)
    result = run_value_stage(network, gdp, reports, params)
    run_load_stage(result, params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_load_scores(out / "load_scores.csv", result.load, digest)
    diag = result.routing_diag
    print(f"wrote {out / 'load_scores.csv'} ({len(result.load)} jurisdictions,"
          f" {diag.unreachable_count} unreachable packets)")
    return 0


def _write_multilayer_set(out: Path, sweep, digest) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for entry in sweep.entries:
        write_multilayer_scores(out / multilayer_filename(entry.beta), entry.scores, digest)
    write_sweep_summary(out / "beta_sweep.csv", sweep, digest)


def cmd_compute_multilayer(args) -> int:
    conduits = read_conduit_scores(args.conduit_csv)
    loads = read_load_scores(args.load_csv)
    digest = propagated_digest([args.conduit_csv, args.load_csv])
    betas = list(args.beta) if args.beta else [BETA_DEFAULT]
    load_std = {sc.jurisdiction: sc.l_std for sc in loads}
    sweep = beta_sweep(conduits, load_std, args.alpha, betas, args.report_threshold)
    out = Path(args.out)
    _write_multilayer_set(out, sweep, digest)
    for entry in sweep.entries:
        print(f"beta={entry.beta:g}: {len(entry.scores)} pairs,"
              f" {entry.report.excluded_pairs} excluded,"
              f" {len(entry.flagged)} above {args.report_threshold:g}")
    return 0


def cmd_sweep_beta(args) -> int:
    paths, params, _, digest = _prepared(args)
    result = run_pipeline(paths, params)
    out = Path(args.out)
    _write_multilayer_set(out, result.sweep, digest)
    for entry in result.sweep.entries:
        counts = ", ".join(f">{t:g}: {n}" for t, n in sorted(entry.counts.items()))
        print(f"beta={entry.beta:g}: {counts}")
    return 0


def cmd_synth(args) -> int:
    values: dict[str, str] = {}
    if args.config:
        values.update(parse_config_file(args.config))
    flag_map = {
        "seed": args.seed,
        "n_jurisdictions": args.n_jurisdictions,
        "n_sectors": args.n_sectors,
        "n_firms": args.n_firms,
        "chain_depth_min": args.chain_depth_min,
        "chain_depth_max": args.chain_depth_max,
        "planted_sinks": args.planted_sinks,
        "planted_conduits": args.planted_conduits,
        "zero_tax_clique": args.zero_tax_clique,
    }
    for key, val in flag_map.items():
        if val is not None:
            values[key] = str(val)
    config = config_from_mapping(values)
    bundle = generate(config)
    written = write_bundle(bundle, args.out)
    print(f"wrote {', '.join(str(written[k]) for k in sorted(written))}")
    print(f"firms: {len(bundle.firms)}  links: {len(bundle.links)}"
          f"  jurisdictions: {len(bundle.tax.codes)}")
    return 0


def cmd_histogram(args) -> int:
    values = read_score_column(args.scores_csv, args.column)
    bins = compute_histogram(values, args.bin_width)
    digest = propagated_digest([args.scores_csv])
    src = Path(args.scores_csv)
    out = Path(args.out) if args.out else src.parent
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{src.stem}_hist.csv"
    write_histogram_csv(csv_path, bins, digest)
    print(f"wrote {csv_path} ({len(bins)} bins from {len(values)} values)")
    if not args.no_figure:
        from .figures import render_histogram

        png_path = out / f"{src.stem}_hist.png"
        render_histogram(bins, png_path, title=src.stem,
                         xlabel=args.column or "score")
        print(f"wrote {png_path}")
    return 0


def cmd_cartogram_data(args) -> int:
    rows4 = read_multilayer_rows(args.multilayer_csv)
    entries = [(pair, m) for pair, _, _, m in rows4]
    rows, warnings = cartogram_rows(entries, args.sector)
    digest = propagated_digest([args.multilayer_csv])
    src = Path(args.multilayer_csv)
    out = Path(args.out) if args.out else src.parent
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{src.stem}_sector{args.sector.upper()}.csv"
    write_cartogram_csv(csv_path, rows, digest)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {csv_path} ({len(rows)} jurisdictions)")
    if not args.no_figure:
        from .figures import render_cartogram

        png_path = out / f"{src.stem}_sector{args.sector.upper()}.png"
        render_cartogram(rows, png_path, args.sector.upper())
        print(f"wrote {png_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conduitnet",
        description="Sink, conduit, and tax-load centralities over firm ownership networks",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def stage(name: str, help_: str, fn) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        p.add_argument("input_dir", help="directory with firms/ownership/tax/gdp CSVs")
        p.add_argument("--out", required=True, help="output directory")
        _add_pipeline_flags(p)
        p.set_defaults(func=fn)
        return p

    p = stage("run", "full pipeline: sink, conduit, load, multilayer", cmd_run)
    p.add_argument("--dump-flows", action="store_true",
                   help="also write per-firm in/out values")
    stage("compute-sink", "value propagation and sink scores only", cmd_compute_sink)
    stage("compute-conduit", "conduit scores against the sink set", cmd_compute_conduit)
    stage("compute-load", "withholding-tax load centrality only", cmd_compute_load)
    stage("sweep-beta", "multilayer ranking across several betas", cmd_sweep_beta)

    p = sub.add_parser("compute-multilayer",
                       help="fuse existing conduit and load score files")
    p.add_argument("--conduit-csv", required=True)
    p.add_argument("--load-csv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=ALPHA_DEFAULT)
    p.add_argument("--beta", type=float, action="append", default=None)
    p.add_argument("--report-threshold", type=float, default=REPORT_THRESHOLD_DEFAULT)
    p.set_defaults(func=cmd_compute_multilayer)

    p = sub.add_parser("synth", help="generate a seeded synthetic input bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-jurisdictions", type=int)
    p.add_argument("--n-sectors", type=int)
    p.add_argument("--n-firms", type=int)
    p.add_argument("--chain-depth-min", type=int)
    p.add_argument("--chain-depth-max", type=int)
    p.add_argument("--planted-sinks", help="comma-separated CODE:SECTOR pairs")
    p.add_argument("--planted-conduits", help="comma-separated CODE:SECTOR pairs")
    p.add_argument("--zero-tax-clique", help="comma-separated jurisdiction codes")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("histogram", help="fixed-width bin counts for a score column")
    p.add_argument("scores_csv")
    p.add_argument("--bin-width", type=float, required=True)
    p.add_argument("--column", help="column name (default: last)")
    p.add_argument("--out", help="output directory (default: next to input)")
    p.add_argument("--no-figure", action="store_true", help="skip the PNG")
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("cartogram-data",
                       help="per-jurisdiction multilayer scores for one sector")
    p.add_argument("multilayer_csv")
    p.add_argument("--sector", required=True)
    p.add_argument("--out", help="output directory (default: next to input)")
    p.add_argument("--no-figure", action="store_true", help="skip the PNG")
    p.set_defaults(func=cmd_cartogram_data)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
