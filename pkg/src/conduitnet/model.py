"""Core domain model: firms, ownership links, the withholding-tax layer,
and the multilayer network that couples them.

The ownership layer is a directed graph over firms whose links point
from shareholder to owned firm and carry the shareholding ratio.  The
tax layer is a dense directed matrix of withholding rates between
jurisdictions.  The interlayer coupling is total: every firm maps to
exactly one jurisdiction present in the tax layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import InputError
from .isocodes import SECTOR_CODES

RATIO_SUM_TOLERANCE = 1e-9


class PairKey(NamedTuple):
    """Hashable jurisdiction x sector aggregation key."""

    jurisdiction: str
    sector: str


@dataclass(frozen=True)
class Jurisdiction:
    code: str
    gdp: float | None = None
    name: str = ""


@dataclass(frozen=True)
class Sector:
    code: str
    label: str = ""


@dataclass(frozen=True, slots=True)
class Firm:
    id: str
    jurisdiction: str
    sector: str
    operating_income: float


@dataclass(frozen=True, slots=True)
class OwnershipLink:
    shareholder: str
    owned: str
    ratio: float


def pair_of(firm: Firm) -> PairKey:
    """Aggregation key of a firm."""
    return PairKey(firm.jurisdiction, firm.sector)


class TaxNetwork:
    """Dense directed withholding-rate matrix over jurisdictions.

    Codes are kept in sorted order; ``rate(a, b)`` is the withholding
    rate levied on payments from jurisdiction ``a`` to ``b``.  Diagonal
    entries are stored (ingest uses them as statutory defaults) but are
    never used for routing.
    """

    def __init__(self, codes: Iterable[str], rates: np.ndarray):
        self.codes: tuple[str, ...] = tuple(codes)
        if len(set(self.codes)) != len(self.codes):
            raise InputError("duplicate jurisdiction codes in tax network")
        rates = np.asarray(rates, dtype=float)
        n = len(self.codes)
        if rates.shape != (n, n):
            raise InputError(
                f"rate matrix shape {rates.shape} does not match {n} jurisdictions"
            )
        if np.isnan(rates).any() or (rates < 0).any() or (rates > 1).any():
            raise InputError("withholding rates must lie in [0, 1]")
        self.rates = rates
        self.index: dict[str, int] = {c: i for i, c in enumerate(self.codes)}

    def __contains__(self, code: str) -> bool:
        return code in self.index

    def __len__(self) -> int:
        return len(self.codes)

    def rate(self, origin: str, destination: str) -> float:
        return float(self.rates[self.index[origin], self.index[destination]])

    @classmethod
    def from_rate_map(
        cls, rates: Mapping[tuple[str, str], float], codes: Iterable[str] | None = None
    ) -> "TaxNetwork":
        """Build from a {(origin, destination): rate} mapping.

        Pairs absent from the mapping default to rate 0.  The code set
        defaults to every code appearing in the mapping.
        """
        if codes is None:
            seen = {a for a, _ in rates} | {b for _, b in rates}
            codes = sorted(seen)
        else:
            codes = sorted(set(codes))
        idx = {c: i for i, c in enumerate(codes)}
        m = np.zeros((len(codes), len(codes)))
        for (a, b), r in rates.items():
            m[idx[a], idx[b]] = r
        return cls(codes, m)


@dataclass
class BuildReport:
    """Bookkeeping from :func:`build_network` (dropped links, warnings)."""

    links_dropped_unknown_firm: int = 0
    links_dropped_self: int = 0
    links_merged: int = 0
    warnings: list[str] = field(default_factory=list)


class MultilayerNetwork:
    """Ownership layer + tax layer + total firm->jurisdiction coupling."""

    def __init__(
        self,
        firms: Mapping[str, Firm],
        links: tuple[OwnershipLink, ...],
        tax: TaxNetwork,
        jurisdictions: Mapping[str, Jurisdiction],
        report: BuildReport,
    ):
        self.firms = dict(firms)
        self.links = links
        self.tax = tax
        self.jurisdictions = dict(jurisdictions)
        self.report = report

    @property
    def interlayer(self) -> dict[str, str]:
        """Total firm id -> jurisdiction code coupling map."""
        return {fid: f.jurisdiction for fid, f in self.firms.items()}

    def gdp_of(self, code: str) -> float:
        g = self.jurisdictions[code].gdp
        if g is None:
            raise InputError(f"jurisdiction {code} has no GDP value")
        return g

    def world_gdp(self) -> float:
        """Sum of all known GDP values across the tax layer."""
        return float(
            sum(j.gdp for j in self.jurisdictions.values() if j.gdp is not None)
        )

    def pairs(self) -> list[PairKey]:
        """Sorted jurisdiction x sector pairs occupied by at least one firm."""
        return sorted({pair_of(f) for f in self.firms.values()})


def build_network(
    firms: Iterable[Firm],
    links: Iterable[OwnershipLink],
    tax: TaxNetwork,
    gdp: Mapping[str, float],
) -> MultilayerNetwork:
    """Assemble and validate a multilayer network.

    Firms referencing jurisdictions absent from the tax layer, invalid
    sectors, or duplicate ids are rejected with an error naming the
    firm.  Links whose endpoints are not registered firms are dropped
    and counted; self-ownership links are dropped with a warning;
    duplicate links over the same ordered firm pair are merged by
    summing their ratios, capped at 1.0 with a warning.  GDP must be
    positive for every jurisdiction that hosts a firm (those values
    appear in normalization denominators).
    """
    report = BuildReport()

    firm_map: dict[str, Firm] = {}
    for f in firms:
        if f.id in firm_map:
            raise InputError(f"duplicate firm id {f.id!r}")
        if f.jurisdiction not in tax:
            raise InputError(
                f"firm {f.id!r} references jurisdiction {f.jurisdiction!r}"
                " absent from the tax layer"
            )
        if f.sector not in SECTOR_CODES:
            raise InputError(f"firm {f.id!r} has invalid sector {f.sector!r}")
        if not np.isfinite(f.operating_income):
            raise InputError(f"firm {f.id!r} has non-finite operating income")
        firm_map[f.id] = f

    jurisdictions: dict[str, Jurisdiction] = {}
    referenced = {f.jurisdiction for f in firm_map.values()}
    for code in tax.codes:
        g = gdp.get(code)
        if code in referenced:
            if g is None:
                raise InputError(f"jurisdiction {code} hosts firms but has no GDP")
            if not np.isfinite(g) or g <= 0:
                raise InputError(f"jurisdiction {code} has non-positive GDP {g!r}")
        jurisdictions[code] = Jurisdiction(code=code, gdp=g)

    merged: dict[tuple[str, str], float] = {}
    for ln in links:
        if not (0.0 < ln.ratio <= 1.0) or not np.isfinite(ln.ratio):
            raise InputError(
                f"link {ln.shareholder!r}->{ln.owned!r} has ratio {ln.ratio!r}"
                " outside (0, 1]"
            )
        if ln.shareholder not in firm_map or ln.owned not in firm_map:
            report.links_dropped_unknown_firm += 1
            continue
        if ln.shareholder == ln.owned:
            report.links_dropped_self += 1
            report.warnings.append(f"dropped self-ownership link on {ln.owned!r}")
            continue
        key = (ln.shareholder, ln.owned)
        if key in merged:
            report.links_merged += 1
            total = merged[key] + ln.ratio
            if total > 1.0:
                report.warnings.append(
                    f"merged duplicate links {key[0]!r}->{key[1]!r} sum to"
                    f" {total:.6g}; capped at 1.0"
                )
                total = 1.0
            merged[key] = total
        else:
            merged[key] = ln.ratio

    inbound: dict[str, float] = {}
    for (sh, ow), r in merged.items():
        inbound[ow] = inbound.get(ow, 0.0) + r
    for ow, total in sorted(inbound.items()):
        if total > 1.0 + RATIO_SUM_TOLERANCE:
            report.warnings.append(
                f"inbound ratios of firm {ow!r} sum to {total:.6g} > 1"
            )

    final_links = tuple(
        OwnershipLink(sh, ow, r) for (sh, ow), r in sorted(merged.items())
    )
    return MultilayerNetwork(firm_map, final_links, tax, jurisdictions, report)
