"""CSV ingest for the four input files: firms, ownership, tax, GDP.

Firms and ownership are parsed leniently: rows missing required fields
or violating range constraints are dropped and counted per reason, so
one bad export row cannot abort a million-row load.  The tax matrix
and GDP files are small and curated, so they parse strictly.

Canonical writers are provided for every input so that a parse ->
write -> parse cycle reproduces identical structures.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .errors import InputError
from .isocodes import normalize_jurisdiction, normalize_sector
from .model import Firm, OwnershipLink, TaxNetwork

FIRMS_HEADER = ["firm_id", "jurisdiction", "sector", "operating_income"]
OWNERSHIP_HEADER = ["shareholder_id", "owned_id", "ratio"]
TAX_HEADER = ["from", "to", "rate"]
GDP_HEADER = ["jurisdiction", "gdp"]

DEFAULT_TAX_RATE = 0.30


@dataclass
class IngestReport:
    """Per-file parse accounting: rows read, dropped (by reason), warnings."""

    filename: str
    rows_read: int = 0
    drop_reasons: Counter = field(default_factory=Counter)
    warnings: list[str] = field(default_factory=list)

    @property
    def rows_dropped(self) -> int:
        return sum(self.drop_reasons.values())

    @property
    def rows_retained(self) -> int:
        return self.rows_read - self.rows_dropped


def fmt_float(x: float) -> str:
    # 17 significant digits round-trips IEEE doubles exactly.
    return format(float(x), ".17g")


def _open_rows(path_or_stream, expected_header: Sequence[str], label: str):
    """Yield data rows after validating the header; '#' lines are skipped."""
    if hasattr(path_or_stream, "read"):
        stream: TextIO = path_or_stream
        close = False
    else:
        try:
            stream = open(path_or_stream, "r", encoding="utf-8", newline="")
        except OSError as exc:
            raise InputError(f"cannot read {label} file: {exc}") from exc
        close = True
    try:
        reader = csv.reader(line for line in stream if not line.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{label} file is empty (missing header)") from None
        if [h.strip().lower() for h in header] != list(expected_header):
            raise InputError(
                f"{label} file has header {header!r}, expected {list(expected_header)!r}"
            )
        yield from reader
    finally:
        if close:
            stream.close()


def parse_firms(path_or_stream) -> tuple[list[Firm], IngestReport]:
    """Parse firms.csv rows into Firm records, dropping bad rows.

    A row is dropped when the id, jurisdiction, sector, or operating
    income is missing or unparseable, or when the id repeats an earlier
    row; each drop increments a reason counter in the report.
    """
    name = getattr(path_or_stream, "name", str(path_or_stream))
    report = IngestReport(filename=name)
    firms: list[Firm] = []
    seen: set[str] = set()
    for row in _open_rows(path_or_stream, FIRMS_HEADER, "firms"):
        if not row or all(not c.strip() for c in row):
            continue
        report.rows_read += 1
        if len(row) != len(FIRMS_HEADER):
            report.drop_reasons["wrong field count"] += 1
            continue
        fid, jur, sec, income = (c.strip() for c in row)
        if not fid:
            report.drop_reasons["missing firm_id"] += 1
            continue
        if not jur:
            report.drop_reasons["missing jurisdiction"] += 1
            continue
        if not sec:
            report.drop_reasons["missing sector"] += 1
            continue
        if not income:
            report.drop_reasons["missing operating_income"] += 1
            continue
        try:
            jur_code = normalize_jurisdiction(jur)
        except InputError:
            report.drop_reasons["invalid jurisdiction"] += 1
            continue
        try:
            sec_code = normalize_sector(sec)
        except InputError:
            report.drop_reasons["invalid sector"] += 1
            continue
        try:
            value = float(income)
        except ValueError:
            report.drop_reasons["invalid operating_income"] += 1
            continue
        if not np.isfinite(value):
            report.drop_reasons["invalid operating_income"] += 1
            continue
        if fid in seen:
            report.drop_reasons["duplicate firm_id"] += 1
            continue
        seen.add(fid)
        firms.append(Firm(fid, jur_code, sec_code, value))
    return firms, report


def parse_ownership(
    path_or_stream, ratios_as_percent: bool = False
) -> tuple[list[OwnershipLink], IngestReport]:
    """Parse ownership.csv rows into shareholder->owned links.

    Ratios must land in (0, 1] after the optional percent conversion;
    out-of-range ratios, self-loops and incomplete rows are dropped and
    counted.
    """
    name = getattr(path_or_stream, "name", str(path_or_stream))
    report = IngestReport(filename=name)
    links: list[OwnershipLink] = []
    for row in _open_rows(path_or_stream, OWNERSHIP_HEADER, "ownership"):
        if not row or all(not c.strip() for c in row):
            continue
        report.rows_read += 1
        if len(row) != len(OWNERSHIP_HEADER):
            report.drop_reasons["wrong field count"] += 1
            continue
        sh, ow, ratio = (c.strip() for c in row)
        if not sh or not ow:
            report.drop_reasons["missing firm id"] += 1
            continue
        if not ratio:
            report.drop_reasons["missing ratio"] += 1
            continue
        try:
            r = float(ratio)
        except ValueError:
            report.drop_reasons["invalid ratio"] += 1
            continue
        if ratios_as_percent:
            r /= 100.0
        if not np.isfinite(r) or not (0.0 < r <= 1.0):
            report.drop_reasons["out-of-range ratio"] += 1
            continue
        if sh == ow:
            report.drop_reasons["self-loop"] += 1
            continue
        links.append(OwnershipLink(sh, ow, r))
    return links, report


def parse_tax_matrix(
    path_or_stream,
    rates_as_percent: bool = False,
    default_rate: float = DEFAULT_TAX_RATE,
) -> TaxNetwork:
    """Parse tax.csv in long form (from,to,rate) or square-matrix form.

    The returned network carries a complete rate function over all
    ordered pairs of listed jurisdictions.  Pairs absent from the file
    are filled with the origin's domestic statutory rate when a
    diagonal entry (from == to) was provided, else with
    ``default_rate``.  Rates outside [0, 1] are an error: this file is
    small and curated, so strictness beats silent repair.
    """
    if hasattr(path_or_stream, "read"):
        text = path_or_stream.read()
    else:
        try:
            with open(path_or_stream, "r", encoding="utf-8", newline="") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read tax file: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines:
        raise InputError("tax file is empty (missing header)")
    rows = list(csv.reader(io.StringIO("\n".join(lines))))
    header = [h.strip().lower() for h in rows[0]]

    def convert(raw: str, where: str) -> float:
        try:
            r = float(raw)
        except ValueError:
            raise InputError(f"tax rate {raw!r} at {where} is not numeric") from None
        if rates_as_percent:
            r /= 100.0
        if not np.isfinite(r) or not (0.0 <= r <= 1.0):
            raise InputError(f"tax rate {r!r} at {where} outside [0, 1]")
        return r

    given: dict[tuple[str, str], float] = {}
    if header == TAX_HEADER:
        for row in rows[1:]:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise InputError(f"malformed tax row {row!r}")
            a = normalize_jurisdiction(row[0])
            b = normalize_jurisdiction(row[1])
            key = (a, b)
            if key in given:
                raise InputError(f"duplicate tax rate for pair {a}->{b}")
            given[key] = convert(row[2].strip(), f"{a}->{b}")
    elif len(rows[0]) >= 2:
        # Square form: first column lists origins, header lists destinations.
        dests = [normalize_jurisdiction(c) for c in rows[0][1:]]
        for row in rows[1:]:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(dests) + 1:
                raise InputError(f"malformed tax matrix row {row!r}")
            a = normalize_jurisdiction(row[0])
            for b, cell in zip(dests, row[1:]):
                if not cell.strip():
                    continue
                if (a, b) in given:
                    raise InputError(f"duplicate tax rate for pair {a}->{b}")
                given[(a, b)] = convert(cell.strip(), f"{a}->{b}")
    else:
        raise InputError("unknown tax file format")

    codes = sorted({a for a, _ in given} | {b for _, b in given})
    if not codes:
        raise InputError("tax file lists no jurisdictions")
    idx = {c: i for i, c in enumerate(codes)}
    m = np.zeros((len(codes), len(codes)))
    for a in codes:
        domestic = given.get((a, a))
        for b in codes:
            if a == b:
                m[idx[a], idx[b]] = 0.0 if domestic is None else domestic
                continue
            r = given.get((a, b))
            if r is None:
                r = domestic if domestic is not None else default_rate
            m[idx[a], idx[b]] = r
    return TaxNetwork(codes, m)


def parse_gdp(path_or_stream) -> dict[str, float]:
    """Parse gdp.csv into a jurisdiction -> positive GDP map (strict)."""
    out: dict[str, float] = {}
    for row in _open_rows(path_or_stream, GDP_HEADER, "gdp"):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise InputError(f"malformed gdp row {row!r}")
        code = normalize_jurisdiction(row[0])
        if code in out:
            raise InputError(f"duplicate GDP entry for {code}")
        try:
            g = float(row[1])
        except ValueError:
            raise InputError(f"GDP value {row[1]!r} for {code} is not numeric") from None
        if not np.isfinite(g) or g <= 0:
            raise InputError(f"GDP for {code} must be positive, got {g!r}")
        out[code] = g
    return out


def write_firms_csv(firms: Iterable[Firm], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIRMS_HEADER)
        for f in firms:
            w.writerow([f.id, f.jurisdiction, f.sector, fmt_float(f.operating_income)])


def write_ownership_csv(links: Iterable[OwnershipLink], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(OWNERSHIP_HEADER)
        for ln in links:
            w.writerow([ln.shareholder, ln.owned, fmt_float(ln.ratio)])


def write_tax_csv(tax: TaxNetwork, path) -> None:
    """Write the complete rate function in canonical long form."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TAX_HEADER)
        for a in tax.codes:
            for b in tax.codes:
                w.writerow([a, b, fmt_float(tax.rate(a, b))])


def write_gdp_csv(gdp: Mapping[str, float], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(GDP_HEADER)
        for code in sorted(gdp):
            w.writerow([code, fmt_float(gdp[code])])
