"""Load centrality over the withholding-tax layer.

One unit dividend packet is routed between every ordered jurisdiction
pair along minimal-cost routes; a jurisdiction's raw load is the total
packet mass transiting it (endpoints excluded).  Routes are simple
paths of at most ``max_hops`` hops; the cap keeps the route set finite
when zero-rate cliques (EU-directive style) make arbitrarily long
zero-cost detours tie with the direct link, and is this module's main
modeling knob.  At every node a packet splits equally among the next
hops that still lie on some minimal route.

Engine: per destination, hop-indexed minimal costs are computed with a
layered Bellman recurrence, then all packets are advanced together as
a mass matrix over (origin, current node).  That propagation follows
cost-tight transitions without tracking visited nodes, which is exact
whenever a packet's minimal route is unique.  Packets that touch a
cost tie or revisit a node fall back to an explicit recursive route
search with the simple-path rule; on tie-free matrices (generic random
rates) the fallback never triggers, and dense tie structures such as
large zero-rate cliques make it combinatorial, which is documented
here rather than hidden.

Costs: additive mode uses the rate itself; multiplicative mode uses
-log(1 - rate), the compounding-faithful variant, where rate = 1 cuts
the edge entirely (infinite cost).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ComputationError
from .model import TaxNetwork
from .scoring import standardize_series

MAX_HOPS_DEFAULT = 4

# Cost-tie tolerance: two routes tie when their costs agree to within
# this absolute/relative slack.  Shared with the reference
# implementation in oracles so both define the same route sets.
TIE_ATOL = 1e-10
TIE_RTOL = 1e-10


def tied(a: float, b: float) -> bool:
    """Tie test for route costs (see TIE_ATOL/TIE_RTOL)."""
    return abs(a - b) <= TIE_ATOL + TIE_RTOL * abs(b)


@dataclass(frozen=True)
class RoutingCostModel:
    """Edge-cost model for the tax layer: 'additive' or 'multiplicative'."""

    mode: str = "additive"

    def __post_init__(self):
        if self.mode not in ("additive", "multiplicative"):
            raise ValueError(f"unknown routing cost mode {self.mode!r}")

    def cost_matrix(self, tax: TaxNetwork) -> np.ndarray:
        """Dense cost matrix; diagonal is infinite (no self-hops)."""
        rates = tax.rates
        if self.mode == "additive":
            cost = rates.astype(float).copy()
        else:
            with np.errstate(divide="ignore"):
                cost = -np.log1p(-rates.astype(float))
            cost[rates >= 1.0] = np.inf
        np.fill_diagonal(cost, np.inf)
        return cost


@dataclass(frozen=True)
class LoadScore:
    jurisdiction: str
    l_raw: float
    l_std: float


@dataclass
class RoutingDiagnostics:
    """Routing bookkeeping: packets that could not be delivered and
    packets that needed the explicit route search."""

    unreachable_count: int = 0
    unreachable_sample: list[tuple[str, str]] = field(default_factory=list)
    fallback_pairs: int = 0

    SAMPLE_CAP = 100


def _hop_costs(C: np.ndarray, dest: int, max_hops: int) -> np.ndarray:
    """dist[h][u] = minimal cost of a walk u -> dest using <= h hops.

    Cycle costs are nonnegative, so these walk minima equal the
    simple-path minima and serve as exact bounds for the route search.
    """
    V = C.shape[0]
    dist = np.full((max_hops + 1, V), np.inf)
    dist[0, dest] = 0.0
    for h in range(1, max_hops + 1):
        via = C + dist[h - 1][None, :]
        dist[h] = np.minimum(dist[h - 1], via.min(axis=1))
    return dist


def _route_split_credit(
    C: np.ndarray, dist: np.ndarray, origin: int, dest: int, max_hops: int
) -> dict[int, float]:
    """Exact per-packet crediting under the simple-path rule.

    Recursively splits the packet equally among next hops from which a
    minimal-cost completion avoiding the visited set still exists,
    crediting each interior arrival.  Exponential in adversarial tie
    structures; bounded by max_hops in depth.
    """
    V = C.shape[0]
    total = dist[max_hops][origin]
    credit: dict[int, float] = {}
    eps = TIE_ATOL

    def completion_exists(v: int, avoid: frozenset, hops: int, need: float) -> bool:
        # simple path v -> dest, <= hops hops, cost ~= need, avoiding `avoid`
        if hops <= 0:
            return False
        if tied(C[v, dest], need):
            return True
        if hops == 1:
            return False
        for w in range(V):
            if w == dest or w == v or w in avoid:
                continue
            need2 = need - C[v, w]
            if need2 < -eps:
                continue
            if dist[hops - 1][w] > need2 + eps + TIE_RTOL * abs(need2):
                continue
            if completion_exists(w, avoid | {v}, hops - 1, need2):
                return True
        return False

    def branches(u: int, avoid: frozenset, hops: int, remaining: float) -> list[int]:
        out = []
        for v in range(V):
            if v == u or v in avoid:
                continue
            if v == dest:
                if tied(C[u, v], remaining):
                    out.append(v)
                continue
            need = remaining - C[u, v]
            if need < -eps:
                continue
            if dist[hops - 1][v] > need + eps + TIE_RTOL * abs(need):
                continue
            if completion_exists(v, avoid | {u}, hops - 1, need):
                out.append(v)
        return out

    def descend(u: int, avoid: frozenset, hops: int, remaining: float, mass: float):
        br = branches(u, avoid, hops, remaining)
        if not br:
            raise ComputationError(
                "route search found no continuation; inconsistent cost tables"
            )
        share = mass / len(br)
        for v in br:
            if v == dest:
                continue  # delivered, endpoints earn no credit
            credit[v] = credit.get(v, 0.0) + share
            descend(v, avoid | {u}, hops - 1, remaining - C[u, v], share)

    descend(origin, frozenset(), max_hops, total, 1.0)
    return credit


def load_centrality(
    tax: TaxNetwork,
    cost: RoutingCostModel = RoutingCostModel("additive"),
    max_hops: int = MAX_HOPS_DEFAULT,
) -> tuple[dict[str, float], RoutingDiagnostics]:
    """Raw load per jurisdiction from routing all ordered packets.

    Returns the load map and a diagnostics report (undeliverable
    packets under multiplicative rate-1 cuts, fallback counts).
    """
    if max_hops < 1:
        raise ValueError("max_hops must be at least 1")
    V = len(tax.codes)
    C = cost.cost_matrix(tax)
    load = np.zeros(V)
    diag = RoutingDiagnostics()
    idx = np.arange(V)

    for dest in range(V):
        dist = _hop_costs(C, dest, max_hops)
        finite = np.isfinite(dist[max_hops])
        origins = (idx != dest) & finite
        for o in idx[(idx != dest) & ~finite]:
            diag.unreachable_count += 1
            if len(diag.unreachable_sample) < RoutingDiagnostics.SAMPLE_CAP:
                diag.unreachable_sample.append((tax.codes[o], tax.codes[dest]))
        if not origins.any():
            continue

        mass = np.zeros((V, V))
        mass[origins, origins] = 1.0
        arrived = np.zeros((V, V))
        visited = mass > 0
        impure = np.zeros(V, dtype=bool)  # packets that hit a tie or revisit

        for k in range(max_hops):
            rem = max_hops - k
            target = dist[rem][:, None]
            with np.errstate(invalid="ignore"):
                via = C + dist[rem - 1][None, :]
                tight = np.abs(via - target) <= TIE_ATOL + TIE_RTOL * np.abs(target)
            tight[~np.isfinite(dist[rem]), :] = False
            tight[dest, :] = False
            deg = tight.sum(axis=1)

            active = mass > 0
            branching = deg > 1
            if branching.any():
                impure |= (active & branching[None, :]).any(axis=1)

            split = np.where(deg[:, None] > 0, tight / np.maximum(deg, 1)[:, None], 0.0)
            newmass = mass @ split
            nz = newmass > 0
            impure |= (nz & visited).any(axis=1)
            visited |= nz
            arrived += newmass
            mass = newmass
            if not mass.any():
                break

        clean = origins & ~impure
        if clean.any():
            credits = arrived[clean].copy()
            credits[:, dest] = 0.0
            clean_idx = idx[clean]
            credits[np.arange(len(clean_idx)), clean_idx] = 0.0
            load += credits.sum(axis=0)
        for o in idx[origins & impure]:
            diag.fallback_pairs += 1
            for node, m in _route_split_credit(C, dist, int(o), dest, max_hops).items():
                load[node] += m

    return {c: float(load[i]) for i, c in enumerate(tax.codes)}, diag


def standardize_load(l_raw: dict[str, float]) -> dict[str, float]:
    """Standardize raw loads to mean 1, population sigma 1."""
    codes = sorted(l_raw)
    std = standardize_series([l_raw[c] for c in codes])
    return dict(zip(codes, std))


def load_scores(
    tax: TaxNetwork,
    cost: RoutingCostModel = RoutingCostModel("additive"),
    max_hops: int = MAX_HOPS_DEFAULT,
) -> tuple[list[LoadScore], RoutingDiagnostics]:
    """Raw + standardized load for every jurisdiction in the tax layer."""
    raw, diag = load_centrality(tax, cost, max_hops)
    std = standardize_load(raw)
    scores = [LoadScore(c, raw[c], std[c]) for c in sorted(raw)]
    return scores, diag
