"""Brute-force reference implementations for small networks.

Each oracle recomputes a pipeline quantity by exhaustive enumeration,
sharing no propagation code with the production engines, so the two
can be checked against each other in tests.  All are exponential and
hard-capped to toy sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ComputationError
from .model import MultilayerNetwork, PairKey, pair_of
from .taxrouting import MAX_HOPS_DEFAULT, RoutingCostModel, tied

VALUE_FLOW_NODE_CAP = 20
LOAD_NODE_CAP = 8


@dataclass
class OracleFlow:
    in_value: dict[str, float]
    out_value: dict[str, float]
    injection: dict[str, float]
    v_total: float
    pair_in: dict[PairKey, float]
    pair_out: dict[PairKey, float]


def _flow_edges(network: MultilayerNetwork) -> dict[str, list[tuple[str, float]]]:
    """Dividend-flow adjacency: owned firm -> (shareholder, ratio)."""
    out: dict[str, list[tuple[str, float]]] = {}
    for link in network.links:
        out.setdefault(link.owned, []).append((link.shareholder, link.ratio))
    for edges in out.values():
        edges.sort()
    return out


def oracle_value_flow(
    network: MultilayerNetwork,
    inject_all: bool = False,
    v_total_mode: str = "received",
) -> OracleFlow:
    """Value propagation by explicit chain enumeration.

    Every injected income is walked down every shareholding chain,
    multiplying by each ratio; arriving amounts accumulate per firm.
    Acyclic networks only; chains longer than the firm count signal a
    cycle and abort.
    """
    firms = network.firms
    if len(firms) > VALUE_FLOW_NODE_CAP:
        raise ComputationError(
            f"value-flow oracle is capped at {VALUE_FLOW_NODE_CAP} firms, got {len(firms)}"
        )
    edges = _flow_edges(network)
    shareholders = {link.shareholder for link in network.links}
    injection = {
        fid: firm.operating_income
        for fid, firm in network.firms.items()
        if inject_all or fid not in shareholders
    }
    in_value = {fid: 0.0 for fid in firms}
    out_value = {fid: 0.0 for fid in firms}

    def walk(fid: str, value: float, depth: int) -> None:
        if depth > len(firms):
            raise ComputationError("value-flow oracle requires an acyclic network")
        for nxt, ratio in edges.get(fid, ()):
            amount = value * ratio
            out_value[fid] += amount
            in_value[nxt] += amount
            walk(nxt, amount, depth + 1)

    for fid in sorted(injection):
        if injection[fid] != 0.0:
            walk(fid, injection[fid], 0)

    if v_total_mode == "received":
        v_total = sum(in_value.values())
    elif v_total_mode == "injected":
        v_total = sum(injection.values())
    else:
        raise ValueError(f"unknown v_total mode {v_total_mode!r}")

    pair_in: dict[PairKey, float] = {}
    pair_out: dict[PairKey, float] = {}
    for fid, firm in firms.items():
        p = pair_of(firm)
        pair_in[p] = pair_in.get(p, 0.0) + in_value[fid]
        pair_out[p] = pair_out.get(p, 0.0) + out_value[fid]
    return OracleFlow(in_value, out_value, injection, v_total, pair_in, pair_out)


def oracle_conduit_credits(
    network: MultilayerNetwork,
    sinks: set[PairKey],
    inject_all: bool = False,
) -> tuple[dict[PairKey, float], dict[PairKey, float]]:
    """Conduit credit sums (raw value units) by chain enumeration.

    Outward: each injected value is walked until the first firm in a
    sink pair; the value entering that firm is credited once to every
    distinct pair occupied strictly between the start and the sink.
    Inward: every sink-pair firm re-emits its full available value
    (injection plus everything received); walking until the next sink
    firm, each pair is credited the value entering its first firm on
    the segment.  Returned sums are not normalized by total value or
    GDP weighting.
    """
    firms = network.firms
    if len(firms) > VALUE_FLOW_NODE_CAP:
        raise ComputationError(
            f"conduit oracle is capped at {VALUE_FLOW_NODE_CAP} firms, got {len(firms)}"
        )
    edges = _flow_edges(network)
    base = oracle_value_flow(network, inject_all=inject_all)
    is_sink = {fid: pair_of(f) in sinks for fid, f in firms.items()}

    credit_out: dict[PairKey, float] = {}
    credit_in: dict[PairKey, float] = {}

    def walk_out(fid: str, value: float, interior: frozenset, depth: int) -> None:
        if depth > len(firms):
            raise ComputationError("conduit oracle requires an acyclic network")
        for nxt, ratio in edges.get(fid, ()):
            amount = value * ratio
            if is_sink[nxt]:
                for p in interior:
                    credit_out[p] = credit_out.get(p, 0.0) + amount
            else:
                walk_out(nxt, amount, interior | {pair_of(firms[nxt])}, depth + 1)

    for fid in sorted(base.injection):
        inj = base.injection[fid]
        if inj != 0.0:
            walk_out(fid, inj, frozenset(), 0)

    def walk_in(fid: str, value: float, seen: frozenset, depth: int) -> None:
        if depth > len(firms):
            raise ComputationError("conduit oracle requires an acyclic network")
        for nxt, ratio in edges.get(fid, ()):
            amount = value * ratio
            if is_sink[nxt]:
                continue
            p = pair_of(firms[nxt])
            seen2 = seen
            if p not in seen:
                credit_in[p] = credit_in.get(p, 0.0) + amount
                seen2 = seen | {p}
            walk_in(nxt, amount, seen2, depth + 1)

    for fid in sorted(firms):
        if is_sink[fid]:
            avail = base.injection.get(fid, 0.0) + base.in_value[fid]
            if avail != 0.0:
                walk_in(fid, avail, frozenset(), 0)

    return credit_out, credit_in


def oracle_load(
    tax,
    cost: RoutingCostModel = RoutingCostModel("additive"),
    max_hops: int = MAX_HOPS_DEFAULT,
) -> dict[str, float]:
    """Load centrality by enumerating every simple path per packet.

    All simple paths of at most max_hops hops are listed per ordered
    pair; the minimal-cost ones (cost ties per the shared tolerance)
    form a prefix tree down which the unit packet splits equally,
    crediting interior arrivals.
    """
    codes = tax.codes
    V = len(codes)
    if V > LOAD_NODE_CAP:
        raise ComputationError(f"load oracle is capped at {LOAD_NODE_CAP} jurisdictions, got {V}")
    C = cost.cost_matrix(tax)
    load = {c: 0.0 for c in codes}

    for o in range(V):
        for d in range(V):
            if o == d:
                continue
            paths: list[tuple[float, tuple[int, ...]]] = []

            def dfs(u: int, visited: frozenset, cost_so_far: float, path: tuple):
                if len(path) - 1 >= max_hops:
                    return
                for v in range(V):
                    if v in visited:
                        continue
                    c2 = cost_so_far + C[u, v]
                    if not np.isfinite(c2):
                        continue
                    if v == d:
                        paths.append((c2, path + (v,)))
                    else:
                        dfs(v, visited | {v}, c2, path + (v,))

            dfs(o, frozenset({o}), 0.0, (o,))
            if not paths:
                continue
            best = min(c for c, _ in paths)
            minimal = [p for c, p in paths if tied(c, best)]

            def split(group: list[tuple[int, ...]], depth: int, mass: float):
                branches: dict[int, list[tuple[int, ...]]] = {}
                for p in group:
                    branches.setdefault(p[depth + 1], []).append(p)
                share = mass / len(branches)
                for nxt, sub in sorted(branches.items()):
                    if nxt != d:
                        load[codes[nxt]] += share
                        split(sub, depth + 1, share)

            split(minimal, 0, 1.0)

    return load
