"""Delimited outputs, run manifest, and figure-ready data reductions.

Every number is serialized with 17 significant digits so float64
values survive a write/read round trip; all row orders are sorted.
Output files start with a `# manifest_digest=` comment tying them to
the manifest, whose digest covers input content digests, analysis
parameters, and the tool version (not file timestamps, so regenerated
but byte-identical inputs keep the same digest).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

from . import __version__
from .errors import InputError
from .ingest import fmt_float
from .isocodes import normalize_sector
from .model import PairKey
from .multilayer import MultilayerScore
from .scoring import ConduitScore, SinkScore
from .taxrouting import LoadScore

SINK_HEADER = ["jurisdiction", "sector", "S"]
CONDUIT_HEADER = ["jurisdiction", "sector", "c_out_raw", "c_in_raw", "C_out", "C_in", "C"]
LOAD_HEADER = ["jurisdiction", "l_raw", "L"]
MULTILAYER_HEADER = ["jurisdiction", "sector", "M_out", "M_in", "M"]
HISTOGRAM_HEADER = ["bin_low", "bin_high", "count"]
CARTOGRAM_HEADER = ["jurisdiction", "M"]


def read_manifest_digest(path) -> str | None:
    """Manifest digest recorded in a file's leading comment lines, if
    any; lets derived outputs keep their provenance."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                return None
            if line.startswith("# manifest_digest="):
                return line.partition("=")[2].strip()
    return None


def propagated_digest(paths: list) -> str | None:
    """Common digest across intermediate inputs; None when absent,
    error when they disagree (files from different runs)."""
    digests = {p: read_manifest_digest(p) for p in paths}
    present = {d for d in digests.values() if d is not None}
    if len(present) > 1:
        raise InputError(
            "input files carry different manifest digests: "
            + ", ".join(f"{p}={d or 'none'}" for p, d in sorted(digests.items(), key=lambda kv: str(kv[0])))
        )
    return next(iter(present), None)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(inputs: dict[str, Path], params: dict, seed: int | None = None) -> dict:
    """Run manifest; its digest identifies (input bytes, params, version)."""
    entries = {}
    for name in sorted(inputs):
        p = Path(inputs[name])
        stat = p.stat()
        entries[name] = {
            "path": str(p),
            "sha256": sha256_file(p),
            "bytes": stat.st_size,
            "mtime_ns": stat.st_mtime_ns,
        }
    core = {
        "inputs": {name: entries[name]["sha256"] for name in entries},
        "params": params,
        "version": __version__,
    }
    if seed is not None:
        core["seed"] = seed
    digest = hashlib.sha256(
        json.dumps(core, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()
    return {
        "digest": digest,
        "version": __version__,
        "params": params,
        "inputs": entries,
    }


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_diagnostics(path, diagnostics: dict) -> None:
    Path(path).write_text(
        json.dumps(diagnostics, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _open_out(path, digest: str | None):
    fh = open(path, "w", encoding="utf-8", newline="")
    if digest:
        fh.write(f"# manifest_digest={digest}\n")
    return fh


def _cell(x: float | None) -> str:
    return "" if x is None else fmt_float(x)


def write_sink_scores(path, scores: list[SinkScore], digest: str | None = None) -> None:
    with _open_out(path, digest) as fh:
        w = csv.writer(fh)
        w.writerow(SINK_HEADER)
        for sc in sorted(scores, key=lambda s: s.pair):
            w.writerow([sc.pair.jurisdiction, sc.pair.sector, fmt_float(sc.s)])


def write_conduit_scores(path, scores: list[ConduitScore], digest: str | None = None) -> None:
    with _open_out(path, digest) as fh:
        w = csv.writer(fh)
        w.writerow(CONDUIT_HEADER)
        for sc in sorted(scores, key=lambda s: s.pair):
            w.writerow([
                sc.pair.jurisdiction, sc.pair.sector,
                fmt_float(sc.c_out_raw), fmt_float(sc.c_in_raw),
                _cell(sc.c_out_std), _cell(sc.c_in_std), _cell(sc.c_combined),
            ])


def write_load_scores(path, scores: list[LoadScore], digest: str | None = None) -> None:
    with _open_out(path, digest) as fh:
        w = csv.writer(fh)
        w.writerow(LOAD_HEADER)
        for sc in sorted(scores, key=lambda s: s.jurisdiction):
            w.writerow([sc.jurisdiction, fmt_float(sc.l_raw), fmt_float(sc.l_std)])


def multilayer_filename(beta: float) -> str:
    return f"multilayer_scores_beta{beta:g}.csv"


def write_multilayer_scores(
    path, scores: list[MultilayerScore], digest: str | None = None
) -> None:
    """Rows ranked by combined score (the natural reading order)."""
    with _open_out(path, digest) as fh:
        w = csv.writer(fh)
        w.writerow(MULTILAYER_HEADER)
        for sc in sorted(scores, key=lambda s: (-s.m, s.pair)):
            w.writerow([
                sc.pair.jurisdiction, sc.pair.sector,
                fmt_float(sc.m_out), fmt_float(sc.m_in), fmt_float(sc.m),
            ])


def _read_rows(path, expected_header: list[str], label: str) -> list[list[str]]:
    rows: list[list[str]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None:
            raise InputError(f"{label} file {path} is empty")
        if [h.strip() for h in header] != expected_header:
            raise InputError(
                f"{label} file {path} has header {header}, expected {expected_header}"
            )
        for row in reader:
            if row:
                rows.append(row)
    return rows


def _num(cell: str, where: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise InputError(f"non-numeric value {cell!r} in {where}") from None


def read_sink_scores(path) -> list[SinkScore]:
    return [
        SinkScore(PairKey(r[0], r[1]), _num(r[2], "sink scores"))
        for r in _read_rows(path, SINK_HEADER, "sink scores")
    ]


def read_conduit_scores(path) -> list[ConduitScore]:
    """Inverse of write_conduit_scores; blank cells become None."""
    out = []
    for r in _read_rows(path, CONDUIT_HEADER, "conduit scores"):
        opt = [None if c == "" else _num(c, "conduit scores") for c in r[4:7]]
        out.append(ConduitScore(
            PairKey(r[0], r[1]),
            _num(r[2], "conduit scores"), _num(r[3], "conduit scores"),
            opt[0], opt[1], opt[2],
        ))
    return out


def read_load_scores(path) -> list[LoadScore]:
    return [
        LoadScore(r[0], _num(r[1], "load scores"), _num(r[2], "load scores"))
        for r in _read_rows(path, LOAD_HEADER, "load scores")
    ]


def read_multilayer_rows(path) -> list[tuple[PairKey, float, float, float]]:
    """(pair, M_out, M_in, M) rows from a multilayer scores file."""
    return [
        (
            PairKey(r[0], r[1]),
            _num(r[2], "multilayer scores"), _num(r[3], "multilayer scores"),
            _num(r[4], "multilayer scores"),
        )
        for r in _read_rows(path, MULTILAYER_HEADER, "multilayer scores")
    ]


def read_score_column(path, column: str | None = None) -> list[float]:
    """Numeric column from any scores CSV ('#' lines skipped); defaults
    to the last column."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None:
            raise InputError(f"scores file {path} is empty")
        header = [h.strip() for h in header]
        name = column if column is not None else header[-1]
        if name not in header:
            raise InputError(f"no column {name!r} in {path} (have {header})")
        idx = header.index(name)
        values = []
        for row in reader:
            if not row:
                continue
            if row[idx] == "":
                continue
            values.append(_num(row[idx], f"column {name} of {path}"))
    return values


def compute_histogram(values: list[float], bin_width: float) -> list[tuple[float, float, int]]:
    """Fixed-width bins anchored at zero: value v lands in
    [k*w, (k+1)*w) with k = floor(v/w); negative values get negative
    bins.  Returns the contiguous occupied range (empty input, no bins).
    """
    if bin_width <= 0:
        raise InputError(f"bin width must be positive, got {bin_width!r}")
    if not values:
        return []
    idx = [math.floor(v / bin_width) for v in values]
    lo, hi = min(idx), max(idx)
    counts = {k: 0 for k in range(lo, hi + 1)}
    for k in idx:
        counts[k] += 1
    return [(k * bin_width, (k + 1) * bin_width, counts[k]) for k in range(lo, hi + 1)]


def write_histogram_csv(path, bins: list[tuple[float, float, int]], digest: str | None = None):
    with _open_out(path, digest) as fh:
        w = csv.writer(fh)
        w.writerow(HISTOGRAM_HEADER)
        for low, high, count in bins:
            w.writerow([fmt_float(low), fmt_float(high), str(count)])


def cartogram_rows(
    entries: list[tuple[PairKey, float]], sector: str
) -> tuple[list[tuple[str, float]], list[str]]:
    """Per-jurisdiction combined multilayer score for one sector,
    ready for external cartogram tooling."""
    code = normalize_sector(sector)
    rows = sorted((pair.jurisdiction, m) for pair, m in entries if pair.sector == code)
    warnings = []
    if not rows:
        warnings.append(f"sector {code} has no scored pairs")
    return rows, warnings


def write_cartogram_csv(path, rows: list[tuple[str, float]], digest: str | None = None):
    with _open_out(path, digest) as fh:
        w = csv.writer(fh)
        w.writerow(CARTOGRAM_HEADER)
        for jur, m in rows:
            w.writerow([jur, fmt_float(m)])
