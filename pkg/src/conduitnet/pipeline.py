"""End-to-end orchestration shared by the CLI subcommands.

The full run and the stage subcommands call the same functions in the
same order with the same parameter record, so a stage invoked on its
own produces byte-identical files to the corresponding slice of a full
run (the output digest covers input bytes plus parameters plus the
tool version, never wall-clock time).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import InputError
from .ingest import (
    DEFAULT_TAX_RATE,
    IngestReport,
    fmt_float,
    parse_firms,
    parse_gdp,
    parse_ownership,
    parse_tax_matrix,
)
from .model import MultilayerNetwork, PairKey, build_network
from .multilayer import (
    ALPHA_DEFAULT,
    BETA_DEFAULT,
    REPORT_THRESHOLD_DEFAULT,
    BetaSweep,
    beta_sweep,
)
from .report import (
    build_manifest,
    multilayer_filename,
    write_conduit_scores,
    write_diagnostics,
    write_load_scores,
    write_manifest,
    write_multilayer_scores,
    write_sink_scores,
)
from .scoring import (
    SINK_THRESHOLD_DEFAULT,
    ConduitAnalysis,
    ConduitScore,
    SinkScore,
    compute_sink_scores,
    identify_sinks,
)
from .taxrouting import (
    MAX_HOPS_DEFAULT,
    LoadScore,
    RoutingCostModel,
    RoutingDiagnostics,
    load_scores,
)
from .valueflow import CycleReport, ValueFlowResult, condense_cycles, propagate_value

INPUT_NAMES = ("firms", "ownership", "tax", "gdp")


@dataclass(frozen=True)
class AnalysisParams:
    alpha: float = ALPHA_DEFAULT
    betas: tuple[float, ...] = (BETA_DEFAULT,)
    sink_threshold: float = SINK_THRESHOLD_DEFAULT
    report_threshold: float = REPORT_THRESHOLD_DEFAULT
    routing_cost: str = "additive"
    max_hops: int = MAX_HOPS_DEFAULT
    inject_all: bool = False
    v_total_mode: str = "received"
    ratios_as_percent: bool = False
    rates_as_percent: bool = False
    default_tax_rate: float = DEFAULT_TAX_RATE

    def to_mapping(self) -> dict:
        out = asdict(self)
        out["betas"] = list(self.betas)
        return out


def input_paths(directory) -> dict[str, Path]:
    """The four canonical input files inside a bundle directory."""
    d = Path(directory)
    return {name: d / f"{name}.csv" for name in INPUT_NAMES}


def check_inputs(paths: dict[str, Path]) -> None:
    for name in INPUT_NAMES:
        p = paths[name]
        if not p.is_file():
            raise InputError(f"missing input file: {p}")


@dataclass
class PipelineResult:
    network: MultilayerNetwork
    gdp: dict[str, float]
    ingest_reports: dict[str, IngestReport]
    cycle_report: CycleReport
    flow: ValueFlowResult
    sink_scores: list[SinkScore] = field(default_factory=list)
    sinks: set[PairKey] = field(default_factory=set)
    conduit_scores: list[ConduitScore] = field(default_factory=list)
    conduit_notes: list[str] = field(default_factory=list)
    load: list[LoadScore] = field(default_factory=list)
    routing_diag: RoutingDiagnostics | None = None
    sweep: BetaSweep | None = None


def load_network(paths: dict[str, Path], params: AnalysisParams):
    """Parse and validate the four inputs into a built network."""
    check_inputs(paths)
    firms, firms_rep = parse_firms(paths["firms"])
    links, own_rep = parse_ownership(
        paths["ownership"], ratios_as_percent=params.ratios_as_percent
    )
    tax = parse_tax_matrix(
        paths["tax"],
        rates_as_percent=params.rates_as_percent,
        default_rate=params.default_tax_rate,
    )
    gdp = parse_gdp(paths["gdp"])
    network = build_network(firms, links, tax, gdp)
    reports = {"firms": firms_rep, "ownership": own_rep}
    return network, gdp, reports


def run_value_stage(network: MultilayerNetwork, gdp, reports, params: AnalysisParams):
    view, cycle_report = condense_cycles(network)
    flow = propagate_value(view, inject_all=params.inject_all, v_total_mode=params.v_total_mode)
    return PipelineResult(network, gdp, reports, cycle_report, flow)


def run_sink_stage(result: PipelineResult, params: AnalysisParams) -> None:
    result.sink_scores = compute_sink_scores(result.flow, result.gdp)
    result.sinks = identify_sinks(result.sink_scores, params.sink_threshold)


def run_conduit_stage(result: PipelineResult, params: AnalysisParams) -> None:
    analysis = ConduitAnalysis(result.flow, result.gdp, result.sinks)
    result.conduit_scores, result.conduit_notes = analysis.scores()


def run_load_stage(result: PipelineResult, params: AnalysisParams) -> None:
    result.load, result.routing_diag = load_scores(
        result.network.tax, RoutingCostModel(params.routing_cost), params.max_hops
    )


def run_multilayer_stage(result: PipelineResult, params: AnalysisParams) -> None:
    load_std = {sc.jurisdiction: sc.l_std for sc in result.load}
    result.sweep = beta_sweep(
        result.conduit_scores,
        load_std,
        params.alpha,
        list(params.betas),
        params.report_threshold,
    )


def run_pipeline(paths: dict[str, Path], params: AnalysisParams) -> PipelineResult:
    network, gdp, reports = load_network(paths, params)
    result = run_value_stage(network, gdp, reports, params)
    run_sink_stage(result, params)
    run_conduit_stage(result, params)
    run_load_stage(result, params)
    run_multilayer_stage(result, params)
    return result


def pipeline_digest(paths: dict[str, Path], params: AnalysisParams) -> tuple[dict, str]:
    manifest = build_manifest(paths, params.to_mapping())
    return manifest, manifest["digest"]


def _ingest_section(rep: IngestReport) -> dict:
    return {
        "rows_read": rep.rows_read,
        "rows_retained": rep.rows_retained,
        "dropped": dict(sorted(rep.drop_reasons.items())),
        "warnings": list(rep.warnings),
    }


COMPONENT_SAMPLE_CAP = 100


def diagnostics_payload(result: PipelineResult, params: AnalysisParams, digest: str) -> dict:
    """Everything a run dropped, merged, collapsed, skipped, or clamped."""
    build = result.network.report
    cycles = result.cycle_report
    payload = {
        "manifest_digest": digest,
        "params": params.to_mapping(),
        "ingest": {name: _ingest_section(rep) for name, rep in result.ingest_reports.items()},
        "build": {
            "links_dropped_unknown_firm": build.links_dropped_unknown_firm,
            "links_dropped_self": build.links_dropped_self,
            "links_merged": build.links_merged,
            "warnings": list(build.warnings),
        },
        "cycles": {
            "n_collapsed": cycles.n_collapsed,
            "n_firms_in_cycles": cycles.n_firms_in_cycles,
            "components_sample": [list(c) for c in cycles.components[:COMPONENT_SAMPLE_CAP]],
            "warnings": list(cycles.warnings),
        },
        "value_flow": {
            "v_total": result.flow.v_total,
            "v_total_mode": result.flow.v_total_mode,
            "injected_total": float(result.flow.injection.sum()),
            "n_nodes": int(result.flow.view.n_nodes),
        },
        "sinks": {
            "threshold": params.sink_threshold,
            "pairs": [[p.jurisdiction, p.sector] for p in sorted(result.sinks)],
        },
        "conduit": {
            "pairs_scored": len(result.conduit_scores),
            "notes": list(result.conduit_notes),
        },
    }
    if result.routing_diag is not None:
        payload["routing"] = {
            "unreachable_count": result.routing_diag.unreachable_count,
            "unreachable_sample": [list(p) for p in result.routing_diag.unreachable_sample],
            "fallback_pairs": result.routing_diag.fallback_pairs,
        }
    if result.sweep is not None:
        payload["multilayer"] = {
            f"{entry.beta:g}": {
                "excluded_pairs": entry.report.excluded_pairs,
                "clamped_pairs": entry.report.clamped_pairs,
                "counts_above": {f"{t:g}": n for t, n in sorted(entry.counts.items())},
                "flagged": len(entry.flagged),
            }
            for entry in result.sweep.entries
        }
    return payload


def write_flow_dump(path, result: PipelineResult, digest: str | None = None) -> None:
    """Per-node in/out values (collapsed cycles appear as one node)."""
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        if digest:
            fh.write(f"# manifest_digest={digest}\n")
        w = csv.writer(fh)
        w.writerow(["firm_id", "in_value", "out_value"])
        for key in result.flow.view.keys:
            w.writerow([
                key,
                fmt_float(result.flow.in_value[key]),
                fmt_float(result.flow.out_value[key]),
            ])


def write_run_outputs(
    result: PipelineResult,
    outdir,
    manifest: dict,
    params: AnalysisParams,
    dump_flows: bool = False,
) -> dict[str, Path]:
    """Write the full output set for a pipeline result."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    digest = manifest["digest"]
    written: dict[str, Path] = {}

    p = out / "sink_scores.csv"
    write_sink_scores(p, result.sink_scores, digest)
    written["sink_scores"] = p

    p = out / "conduit_scores.csv"
    write_conduit_scores(p, result.conduit_scores, digest)
    written["conduit_scores"] = p

    p = out / "load_scores.csv"
    write_load_scores(p, result.load, digest)
    written["load_scores"] = p

    if result.sweep is not None:
        for entry in result.sweep.entries:
            p = out / multilayer_filename(entry.beta)
            write_multilayer_scores(p, entry.scores, digest)
            written[f"multilayer_beta{entry.beta:g}"] = p
        p = out / "beta_sweep.csv"
        write_sweep_summary(p, result.sweep, digest)
        written["beta_sweep"] = p

    if dump_flows:
        p = out / "firm_flows.csv"
        write_flow_dump(p, result, digest)
        written["firm_flows"] = p

    p = out / "manifest.json"
    write_manifest(p, manifest)
    written["manifest"] = p

    p = out / "diagnostics.json"
    write_diagnostics(p, diagnostics_payload(result, params, digest))
    written["diagnostics"] = p
    return written


def write_sweep_summary(path, sweep: BetaSweep, digest: str | None = None) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        if digest:
            fh.write(f"# manifest_digest={digest}\n")
        w = csv.writer(fh)
        w.writerow(["beta", "pairs_scored", "above_1.0", "above_1.5", "above_2.0", "flagged"])
        for entry in sweep.entries:
            w.writerow([
                fmt_float(entry.beta),
                str(len(entry.scores)),
                str(entry.counts[1.0]),
                str(entry.counts[1.5]),
                str(entry.counts[2.0]),
                str(len(entry.flagged)),
            ])
