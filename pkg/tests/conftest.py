"""Shared builders for small hand-constructed networks."""

import numpy as np
import pytest

from conduitnet import Firm, OwnershipLink, TaxNetwork, build_network


def make_tax(codes, rates=None):
    codes = sorted(codes)
    if rates is None:
        return TaxNetwork(codes, np.zeros((len(codes), len(codes))))
    if isinstance(rates, dict):
        return TaxNetwork.from_rate_map(rates, codes)
    return TaxNetwork(codes, np.asarray(rates, dtype=float))


def make_network(firm_rows, link_rows=(), rates=None, gdp=None, extra_codes=()):
    """Network from (id, jur, sector, income) and (shareholder, owned, ratio)
    tuples; zero-rate tax layer and unit GDP unless given."""
    firms = [Firm(*r) for r in firm_rows]
    codes = sorted({f.jurisdiction for f in firms} | set(extra_codes))
    tax = rates if isinstance(rates, TaxNetwork) else make_tax(codes, rates)
    if gdp is None:
        gdp = {c: 1.0 for c in codes}
    links = [OwnershipLink(*r) for r in link_rows]
    return build_network(firms, links, tax, gdp)


@pytest.fixture
def chain_network():
    # K(100) owned 50% by A, A owned 80% by B
    return make_network(
        [
            ("K", "AAA", "C", 100.0),
            ("A", "BBB", "K", 0.0),
            ("B", "CCC", "K", 0.0),
        ],
        [("A", "K", 0.5), ("B", "A", 0.8)],
    )


def random_dag_parts(rng, max_nodes=15, jur_pool=("AAA", "BBB", "CCC", "DDD"),
                     sector_pool=("A", "B", "C")):
    """Random acyclic firm/link tuples; edge i<j means firm j owns firm i."""
    n = int(rng.integers(2, max_nodes + 1))
    firm_rows = [
        (
            f"N{i:02d}",
            jur_pool[int(rng.integers(0, len(jur_pool)))],
            sector_pool[int(rng.integers(0, len(sector_pool)))],
            float(rng.uniform(0.0, 100.0)),
        )
        for i in range(n)
    ]
    link_rows = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.35:
                link_rows.append((f"N{j:02d}", f"N{i:02d}", float(rng.uniform(0.05, 1.0))))
    return firm_rows, link_rows
