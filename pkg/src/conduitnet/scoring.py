"""Sink and conduit centralities over jurisdiction x sector pairs.

A pair is sink-like when much more value enters its firms than leaves
them, relative to the network total and corrected by the jurisdiction's
share of world GDP.  Pairs above a threshold form the sink set; the
remaining pairs are then scored as conduits by how much chain value
they pass into sinks (outward) and carry away from sinks (inward).

Crediting rules for conduits, per chain:
  * outward: the value entering the first sink-pair firm of a chain is
    credited once to each distinct non-sink pair occupied by firms
    strictly between the source and that sink firm;
  * inward: on the segment after a chain's last sink-pair firm, each
    pair is credited the value entering its first firm on the segment.

Sums over all chains are computed without enumeration: two linear
passes give, per firm, the sink-free arriving mass R and the post-sink
arriving mass G, plus a backward multiplier F (value fraction that
continues from a firm into its first downstream sink).  The
credited-once-per-chain rule is then enforced per pair by propagating
a "taint" mass from the pair's firms through the DAG: mass that
reaches a pair member after already crossing the pair is subtracted.
This costs O(reachable edges) per pair instead of O(chains).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ComputationError, InputError, ZeroTotalValueError, ZeroVarianceError
from .model import PairKey
from .valueflow import ValueFlowResult

SINK_THRESHOLD_DEFAULT = 10.0


@dataclass(frozen=True)
class SinkScore:
    pair: PairKey
    s: float


@dataclass(frozen=True)
class ConduitScore:
    pair: PairKey
    c_out_raw: float
    c_in_raw: float
    c_out_std: float | None
    c_in_std: float | None
    c_combined: float | None


def standardize_series(xs: Sequence[float]) -> list[float]:
    """Shift and scale a series to mean 1 and population standard
    deviation 1: y = (x - mean)/sigma + 1.  Order-preserving."""
    arr = np.asarray(list(xs), dtype=float)
    if arr.size < 2:
        raise ZeroVarianceError("need at least 2 values to standardize")
    mu = arr.mean()
    sigma = arr.std()  # population, ddof=0
    # large all-equal series can leave sigma a rounding residue > 0
    if sigma == 0.0 or not np.isfinite(sigma) or (arr == arr[0]).all():
        raise ZeroVarianceError("all-equal series cannot be standardized")
    return [float(v) for v in (arr - mu) / sigma + 1.0]


def combine_euclidean(a: float, b: float) -> float:
    """Euclidean combination sqrt(a^2 + b^2)/sqrt(2); maps (1, 1) to 1."""
    return math.hypot(a, b) / math.sqrt(2.0)


def _gdp_factor(gdp: Mapping[str, float], jurisdiction: str) -> float:
    try:
        gj = gdp[jurisdiction]
    except KeyError:
        raise InputError(f"missing GDP for jurisdiction {jurisdiction}") from None
    if gj <= 0:
        raise InputError(f"GDP for {jurisdiction} must be positive, got {gj!r}")
    return sum(gdp.values()) / gj


def sink_centrality(flow: ValueFlowResult, gdp: Mapping[str, float], pair: PairKey) -> float:
    """Net value retained by a pair, normalized by the network total and
    weighted by the inverse world-GDP share of its jurisdiction."""
    if flow.v_total <= 0:
        raise ZeroTotalValueError("total network value is not positive")
    net = flow.pair_in.get(pair, 0.0) - flow.pair_out.get(pair, 0.0)
    return net / flow.v_total * _gdp_factor(gdp, pair.jurisdiction)


def compute_sink_scores(flow: ValueFlowResult, gdp: Mapping[str, float]) -> list[SinkScore]:
    """Sink centrality for every occupied, unambiguous pair."""
    return [SinkScore(p, sink_centrality(flow, gdp, p)) for p in flow.view.pair_keys]


def identify_sinks(
    scores: Iterable[SinkScore], threshold: float = SINK_THRESHOLD_DEFAULT
) -> set[PairKey]:
    """Pairs scoring strictly above the threshold."""
    return {sc.pair for sc in scores if sc.s > threshold}


class ConduitAnalysis:
    """Shared state for conduit scoring against a fixed sink set.

    Builds the three linear passes once; per-pair raw credits then cost
    one sparse taint propagation each.
    """

    def __init__(self, flow: ValueFlowResult, gdp: Mapping[str, float], sinks: set[PairKey]):
        if flow.v_total <= 0:
            raise ZeroTotalValueError("total network value is not positive")
        self.flow = flow
        self.gdp = dict(gdp)
        self.sinks = set(sinks)
        view = flow.view
        self.view = view
        n = view.n_nodes

        sink_pair_ids = np.array(
            [i for i, p in enumerate(view.pair_keys) if p in self.sinks], dtype=np.int64
        )
        self.is_sink = np.zeros(n, dtype=bool)
        if len(sink_pair_ids):
            self.is_sink = np.isin(view.pair_index, sink_pair_ids)

        inj = flow.injection
        # R: value arriving with no sink-pair firm earlier on the chain
        # (a chain ends, for outward crediting, at its first sink firm).
        R = np.zeros(n)
        for src, dst, w in view.forward_levels():
            fwd = inj[src] + np.where(self.is_sink[src], 0.0, R[src])
            np.add.at(R, dst, fwd * w)
        self.first_entry_mass = R

        # F: per unit of value continuing from a firm, how much enters
        # its first downstream sink firm, summed over continuations.
        F = np.zeros(n)
        for src, dst, w in view.backward_levels():
            contrib = w * np.where(self.is_sink[dst], 1.0, F[dst])
            np.add.at(F, src, contrib)
        self.sink_multiplier = F

        # G: value arriving on segments strictly after a chain's most
        # recent sink firm.  Sinks re-emit their full available value
        # (injection + everything received); non-sink firms relay.
        avail = inj + flow.in_arr
        G = np.zeros(n)
        for src, dst, w in view.forward_levels():
            fwd = np.where(self.is_sink[src], avail[src], G[src])
            np.add.at(G, dst, fwd * w)
        self.post_exit_mass = G

        self._members_cache: dict[int, np.ndarray] = {}

    def _members(self, pair_id: int) -> np.ndarray:
        m = self._members_cache.get(pair_id)
        if m is None:
            m = np.flatnonzero(self.view.pair_index == pair_id)
            self._members_cache[pair_id] = m
        return m

    def _taint(self, members: np.ndarray, base: np.ndarray) -> dict[int, float]:
        """Propagate pair-visited mass forward and record what arrives
        back at pair members.

        Seeds carry each member's full pass-through mass (rule: once a
        chain crosses the pair it stays credited, whatever it visited
        before).  Mass is absorbed at sink firms and at pair members;
        everything else relays multiplied by the shareholding ratio.
        """
        view = self.view
        member_set = set(int(g) for g in members)
        pending: dict[int, dict[int, float]] = {}

        def push(node: int, amt: float) -> None:
            lvl = int(view.level[node])
            bucket = pending.setdefault(lvl, {})
            bucket[node] = bucket.get(node, 0.0) + amt

        for g in members:
            b = base[g]
            if b == 0.0:
                continue
            dsts, ws = view.out_edges(int(g))
            for d, w in zip(dsts.tolist(), ws.tolist()):
                push(d, b * w)

        arrived: dict[int, float] = {}
        while pending:
            lvl = min(pending)
            bucket = pending.pop(lvl)
            for node in sorted(bucket):
                amt = bucket[node]
                if node in member_set:
                    arrived[node] = arrived.get(node, 0.0) + amt
                    continue
                if self.is_sink[node]:
                    continue
                dsts, ws = view.out_edges(node)
                for d, w in zip(dsts.tolist(), ws.tolist()):
                    push(d, amt * w)
        return arrived

    def raw(self, pair: PairKey, direction: str) -> float:
        """Raw conduit centrality of a pair, before standardization."""
        if direction not in ("out", "in"):
            raise ValueError(f"direction must be 'out' or 'in', got {direction!r}")
        if pair in self.sinks:
            return 0.0  # sink and conduit are disjoint roles
        try:
            pair_id = self.view.pair_keys.index(pair)
        except ValueError:
            return 0.0  # pair hosts no attributable firm
        members = self._members(pair_id)
        if direction == "out":
            base = self.first_entry_mass
            arrived = self._taint(members, base)
            credit = sum(
                (base[g] - arrived.get(int(g), 0.0)) * self.sink_multiplier[g]
                for g in members
            )
        else:
            base = self.post_exit_mass
            arrived = self._taint(members, base)
            credit = sum(base[g] - arrived.get(int(g), 0.0) for g in members)
        return credit / self.flow.v_total * _gdp_factor(self.gdp, pair.jurisdiction)

    def scores(self) -> tuple[list[ConduitScore], list[str]]:
        """Score every pair with a nonzero raw credit in either direction.

        Standardization runs per direction over the pairs with nonzero
        raw credit there; a direction with fewer than two such pairs is
        left unstandardized (noted), since mean/sigma are undefined.
        The combined score exists only where both directions do.
        """
        notes: list[str] = []
        pairs = [p for p in self.view.pair_keys if p not in self.sinks]
        raw_out = {p: self.raw(p, "out") for p in pairs}
        raw_in = {p: self.raw(p, "in") for p in pairs}
        out_pop = [p for p in pairs if raw_out[p] != 0.0]
        in_pop = [p for p in pairs if raw_in[p] != 0.0]

        def _std(pop: list[PairKey], raws: dict[PairKey, float], label: str):
            if len(pop) < 2:
                notes.append(
                    f"{label} conduit: {len(pop)} pair(s) with nonzero credit;"
                    " standardization skipped"
                )
                return {}
            vals = standardize_series([raws[p] for p in pop])
            return dict(zip(pop, vals))

        std_out = _std(out_pop, raw_out, "outward")
        std_in = _std(in_pop, raw_in, "inward")

        out: list[ConduitScore] = []
        for p in pairs:
            if raw_out[p] == 0.0 and raw_in[p] == 0.0:
                continue
            so = std_out.get(p)
            si = std_in.get(p)
            comb = combine_euclidean(so, si) if so is not None and si is not None else None
            out.append(ConduitScore(p, raw_out[p], raw_in[p], so, si, comb))
        return out, notes


def conduit_raw(
    flow: ValueFlowResult,
    sinks: set[PairKey],
    pair: PairKey,
    direction: str,
    gdp: Mapping[str, float] | None = None,
) -> float:
    """One-shot raw conduit credit; see :class:`ConduitAnalysis` for bulk use.

    With ``gdp`` omitted the GDP weighting factor is taken as 1, which
    exposes the bare credited-value ratio.
    """
    if gdp is None:
        gdp = {pair.jurisdiction: 1.0}
    return ConduitAnalysis(flow, gdp, sinks).raw(pair, direction)


def require_positive_total(flow: ValueFlowResult) -> None:
    """Guard used by pipeline stages before normalizing by V_total."""
    if flow.v_total <= 0:
        raise ZeroTotalValueError("total network value is not positive")
