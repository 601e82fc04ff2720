"""Seeded synthetic network generator with planted structure.

Generates firm/ownership/tax/GDP data in the ingest schemas, shaped so
that known pairs come out as sinks and conduits:

  * each planted sink pair hosts a single top firm into which most
    shareholding chains converge with high ratios, giving it a large
    retained inflow while its jurisdiction (hosting only that firm)
    keeps a small GDP;
  * each planted conduit pair occupies the penultimate firm of those
    chains, so nearly every value packet crosses it on the way into
    the sink (outward credit), plus the first firm of a low-ratio
    leakage segment out of the sink top (inward credit);
  * a second, weaker leakage firm in a random pair keeps the inward
    credit population standardizable;
  * remaining chains are unplanted noise ending in random pairs, and
    an optional jurisdiction clique gets all-zero withholding rates.

All randomness comes from one Philox counter-based stream, so a config
fully determines the output bytes on any platform.  Distributions are
invented (log-normal incomes, ratios drawn as 1.0 or uniform 0.5-1.0,
GDP proportional to hosted-firm count with mild noise); they are
tuning, not an empirical claim.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .ingest import write_firms_csv, write_gdp_csv, write_ownership_csv, write_tax_csv
from .isocodes import SECTOR_CODES
from .model import Firm, OwnershipLink, PairKey, TaxNetwork

LEAK_PRIMARY_RATIO = 0.20  # sink -> planted conduit leakage
LEAK_NOISE_RATIO = 0.10  # sink -> random-pair leakage


def jurisdiction_code(i: int) -> str:
    """Deterministic synthetic 3-letter code: JAA, JAB, ..."""
    letters = string.ascii_uppercase
    return "J" + letters[i // 26] + letters[i % 26]


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    n_jurisdictions: int = 12
    n_sectors: int = 5
    n_firms: int = 200
    chain_depth_min: int = 3
    chain_depth_max: int = 6
    planted_sinks: tuple[PairKey, ...] = ()
    planted_conduits: tuple[PairKey, ...] = ()
    zero_tax_clique: frozenset[str] = frozenset()


@dataclass
class SynthBundle:
    config: SynthConfig
    firms: list[Firm]
    links: list[OwnershipLink]
    tax: TaxNetwork
    gdp: dict[str, float]
    notes: list[str] = field(default_factory=list)


def _validate(config: SynthConfig) -> list[str]:
    if config.n_jurisdictions < 2 or config.n_jurisdictions > 676:
        raise InputError("n_jurisdictions must be between 2 and 676")
    if not 1 <= config.n_sectors <= len(SECTOR_CODES):
        raise InputError(f"n_sectors must be between 1 and {len(SECTOR_CODES)}")
    if config.n_firms < 2:
        raise InputError("n_firms must be at least 2")
    if config.chain_depth_min < 2 or config.chain_depth_max < config.chain_depth_min:
        raise InputError("chain depths must satisfy 2 <= min <= max")
    codes = [jurisdiction_code(i) for i in range(config.n_jurisdictions)]
    sectors = sorted(SECTOR_CODES)[: config.n_sectors]
    code_set, sector_set = set(codes), set(sectors)
    for p in (*config.planted_sinks, *config.planted_conduits):
        if p.jurisdiction not in code_set:
            raise InputError(f"planted pair references unknown jurisdiction {p.jurisdiction}")
        if p.sector not in sector_set:
            raise InputError(f"planted pair references unknown sector {p.sector}")
    if config.planted_conduits and not config.planted_sinks:
        raise InputError("planted conduits need at least one planted sink to feed")
    if set(config.planted_sinks) & set(config.planted_conduits):
        raise InputError("a pair cannot be planted as both sink and conduit")
    sink_jurs = {p.jurisdiction for p in config.planted_sinks}
    conduit_jurs = {p.jurisdiction for p in config.planted_conduits}
    if sink_jurs & conduit_jurs:
        raise InputError("planted sink and conduit pairs must use distinct jurisdictions")
    if config.n_jurisdictions - len(sink_jurs) - len(conduit_jurs) < 1:
        raise InputError("not enough jurisdictions left for unplanted firms")
    for c in config.zero_tax_clique:
        if c not in code_set:
            raise InputError(f"zero-tax clique references unknown jurisdiction {c}")
    reserved = len(config.planted_sinks) * 3  # top + two leakage firms each
    per_chain = config.chain_depth_max + 1
    if config.n_firms < reserved + per_chain:
        raise InputError("n_firms too small for the requested planted structure")
    return codes


def generate(config: SynthConfig) -> SynthBundle:
    """Build the synthetic network for a config; same config, same output."""
    codes = _validate(config)
    sectors = sorted(SECTOR_CODES)[: config.n_sectors]
    rng = np.random.Generator(np.random.Philox(config.seed))

    sink_jurs = {p.jurisdiction for p in config.planted_sinks}
    conduit_jurs = {p.jurisdiction for p in config.planted_conduits}
    open_codes = [c for c in codes if c not in sink_jurs and c not in conduit_jurs]

    firms: list[Firm] = []
    links: list[OwnershipLink] = []
    counter = 0

    def new_firm(pair: PairKey, income: float) -> str:
        nonlocal counter
        counter += 1
        fid = f"F{counter:07d}"
        firms.append(Firm(fid, pair.jurisdiction, pair.sector, float(income)))
        return fid

    def random_pairs(n: int) -> list[PairKey]:
        ji = rng.integers(0, len(open_codes), n)
        si = rng.integers(0, len(sectors), n)
        return [PairKey(open_codes[j], sectors[s]) for j, s in zip(ji, si)]

    def ratios(n: int) -> np.ndarray:
        coins = rng.random(n)
        spread = rng.uniform(0.5, 1.0, n)
        return np.where(coins < 0.5, 1.0, spread)

    # Sink tops and their leakage segments come first so they exist
    # even at minimal firm budgets.
    sink_tops: list[str] = []
    for i, sp in enumerate(config.planted_sinks):
        top = new_firm(sp, rng.lognormal(0.0, 0.5) * 10.0)
        sink_tops.append(top)
        cp = config.planted_conduits[i % len(config.planted_conduits)] if config.planted_conduits else None
        leak1 = new_firm(cp if cp else random_pairs(1)[0], rng.lognormal(0.0, 0.5) * 10.0)
        links.append(OwnershipLink(leak1, top, LEAK_PRIMARY_RATIO))
        leak2 = new_firm(random_pairs(1)[0], rng.lognormal(0.0, 0.5) * 10.0)
        links.append(OwnershipLink(leak2, top, LEAK_NOISE_RATIO))

    chain_idx = 0
    while config.n_firms - counter >= config.chain_depth_max + 1:
        depth = int(rng.integers(config.chain_depth_min, config.chain_depth_max + 1))
        # deterministic 3-in-4 round-robin keeps the PRNG stream layout
        # independent of the share tuning
        is_sink_chain = bool(config.planted_sinks) and chain_idx % 4 != 3
        incomes = rng.lognormal(0.0, 0.5, depth) * 10.0
        ws = ratios(depth)
        if is_sink_chain:
            # source -> mids -> conduit penultimate -> shared sink top
            pairs = random_pairs(depth - 1)
            if config.planted_conduits:
                pairs.append(config.planted_conduits[chain_idx % len(config.planted_conduits)])
            else:
                pairs.extend(random_pairs(1))
            ids = [new_firm(p, inc) for p, inc in zip(pairs, incomes)]
            top = sink_tops[chain_idx % len(sink_tops)]
            for lower, upper, w in zip(ids, ids[1:], ws):
                links.append(OwnershipLink(upper, lower, float(w)))
            links.append(OwnershipLink(top, ids[-1], float(max(ws[-1], 0.8))))
        else:
            pairs = random_pairs(depth + 1)
            ids = [new_firm(p, inc) for p, inc in zip(pairs, incomes)]
            ids.append(new_firm(pairs[-1], rng.lognormal(0.0, 0.5) * 10.0))
            for lower, upper, w in zip(ids, ids[1:], np.append(ws, ws[-1])):
                links.append(OwnershipLink(upper, lower, float(w)))
        chain_idx += 1

    while counter < config.n_firms:  # leftovers become isolated sources
        new_firm(random_pairs(1)[0], rng.lognormal(0.0, 0.5) * 10.0)

    counts = {c: 0 for c in codes}
    for f in firms:
        counts[f.jurisdiction] += 1
    noise = rng.uniform(0.9, 1.1, len(codes))
    gdp = {c: float((counts[c] + 0.5) * 10.0 * noise[i]) for i, c in enumerate(codes)}

    V = len(codes)
    rates = rng.uniform(0.05, 0.40, (V, V))
    np.fill_diagonal(rates, 0.0)
    if config.zero_tax_clique:
        member = np.array([c in config.zero_tax_clique for c in codes])
        rates[np.ix_(member, member)] = 0.0
    tax = TaxNetwork(codes, rates)

    notes = [
        f"chains generated: {chain_idx}",
        f"firms: {counter} (cap {config.n_firms})",
    ]
    return SynthBundle(config, firms, links, tax, gdp, notes)


def write_bundle(bundle: SynthBundle, outdir) -> dict[str, Path]:
    """Write the four ingest-schema CSVs; byte-deterministic."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "firms": out / "firms.csv",
        "ownership": out / "ownership.csv",
        "tax": out / "tax.csv",
        "gdp": out / "gdp.csv",
    }
    write_firms_csv(bundle.firms, paths["firms"])
    write_ownership_csv(bundle.links, paths["ownership"])
    write_tax_csv(bundle.tax, paths["tax"])
    write_gdp_csv(bundle.gdp, paths["gdp"])
    return paths


def parse_config_file(path) -> dict[str, str]:
    """Flat key=value config; '#' comments and blank lines ignored."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InputError(f"bad config line (expected key=value): {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def config_from_mapping(values: dict[str, str]) -> SynthConfig:
    """Build a config from flat string keys (file or CLI form)."""
    def pairs(raw: str) -> tuple[PairKey, ...]:
        out = []
        for item in raw.split(","):
            item = item.strip()
            if not item:
                continue
            if ":" not in item:
                raise InputError(f"planted pair must look like CODE:SECTOR, got {item!r}")
            j, _, s = item.partition(":")
            out.append(PairKey(j.strip(), s.strip()))
        return tuple(out)

    known = {
        "seed", "n_jurisdictions", "n_sectors", "n_firms",
        "chain_depth_min", "chain_depth_max",
        "planted_sinks", "planted_conduits", "zero_tax_clique",
    }
    unknown = set(values) - known
    if unknown:
        raise InputError(f"unknown synth config keys: {', '.join(sorted(unknown))}")
    if "seed" not in values:
        raise InputError("synth config requires a seed")
    try:
        kwargs = {
            k: int(values[k])
            for k in ("seed", "n_jurisdictions", "n_sectors", "n_firms",
                      "chain_depth_min", "chain_depth_max")
            if k in values
        }
    except ValueError as exc:
        raise InputError(f"non-integer synth config value: {exc}") from None
    if "planted_sinks" in values:
        kwargs["planted_sinks"] = pairs(values["planted_sinks"])
    if "planted_conduits" in values:
        kwargs["planted_conduits"] = pairs(values["planted_conduits"])
    if "zero_tax_clique" in values:
        kwargs["zero_tax_clique"] = frozenset(
            c.strip() for c in values["zero_tax_clique"].split(",") if c.strip()
        )
    return SynthConfig(**kwargs)
