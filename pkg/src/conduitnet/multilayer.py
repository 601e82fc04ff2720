"""Fusion of conduit and load centralities into multilayer scores.

Each direction is a weighted geometric mean of the pair's standardized
conduit centrality (weight alpha) and its jurisdiction's standardized
load centrality (weight beta); the two directions combine through the
same root-mean-square used for conduit scores.  Standardized inputs
can be zero or negative, where fractional powers are undefined, so
inputs are clamped to a small positive floor and every clamped pair is
counted in the run report.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InputError
from .model import PairKey
from .scoring import ConduitScore, combine_euclidean

EPSILON = 1e-6
ALPHA_DEFAULT = 1.0
BETA_DEFAULT = 0.5
SWEEP_THRESHOLDS = (1.0, 1.5, 2.0)
REPORT_THRESHOLD_DEFAULT = 2.0


@dataclass(frozen=True)
class MultilayerScore:
    pair: PairKey
    m_out: float
    m_in: float
    m: float
    alpha: float
    beta: float


@dataclass
class MultilayerReport:
    """Pairs dropped for missing a standardized conduit direction, and
    pairs whose inputs had to be clamped to the positive floor."""

    excluded_pairs: int = 0
    clamped_pairs: int = 0


def _check_weights(alpha: float, beta: float) -> None:
    if alpha + beta == 0:
        raise InputError("alpha + beta must be nonzero")
    if alpha <= 0:
        raise InputError("alpha must be positive")
    if beta < 0:
        raise InputError("beta must be nonnegative")


def multilayer_component(c_std: float, l_std: float, alpha: float, beta: float) -> float:
    """Weighted geometric mean of one conduit direction with the load.

    Inputs below EPSILON are clamped up to it before exponentiation.
    """
    _check_weights(alpha, beta)
    c = max(c_std, EPSILON)
    l = max(l_std, EPSILON)
    return (c**alpha * l**beta) ** (1.0 / (alpha + beta))


def multilayer_score(
    conduit: ConduitScore, load_std: float, alpha: float, beta: float
) -> MultilayerScore:
    """Fuse one pair's conduit directions with its jurisdiction load."""
    if conduit.c_out_std is None or conduit.c_in_std is None:
        raise InputError(
            f"pair {conduit.pair.jurisdiction}x{conduit.pair.sector} is missing a "
            "standardized conduit direction"
        )
    m_out = multilayer_component(conduit.c_out_std, load_std, alpha, beta)
    m_in = multilayer_component(conduit.c_in_std, load_std, alpha, beta)
    return MultilayerScore(conduit.pair, m_out, m_in, combine_euclidean(m_in, m_out), alpha, beta)


def multilayer_scores(
    conduits: list[ConduitScore],
    load_std: dict[str, float],
    alpha: float = ALPHA_DEFAULT,
    beta: float = BETA_DEFAULT,
) -> tuple[list[MultilayerScore], MultilayerReport]:
    """Multilayer scores for every pair carrying both conduit directions.

    Pairs missing a direction are skipped and counted; results are
    ranked by combined score, ties broken by pair key.
    """
    _check_weights(alpha, beta)
    report = MultilayerReport()
    out: list[MultilayerScore] = []
    for score in conduits:
        if score.c_out_std is None or score.c_in_std is None:
            report.excluded_pairs += 1
            continue
        jur = score.pair.jurisdiction
        if jur not in load_std:
            raise InputError(f"no load centrality for jurisdiction {jur}")
        l = load_std[jur]
        if min(score.c_out_std, score.c_in_std, l) < EPSILON:
            report.clamped_pairs += 1
        out.append(multilayer_score(score, l, alpha, beta))
    out.sort(key=lambda s: (-s.m, s.pair))
    return out, report


@dataclass
class BetaSweepEntry:
    beta: float
    scores: list[MultilayerScore]
    counts: dict[float, int]
    flagged: list[MultilayerScore]
    report: MultilayerReport


@dataclass
class BetaSweep:
    alpha: float
    report_threshold: float
    entries: list[BetaSweepEntry] = field(default_factory=list)


def beta_sweep(
    conduits: list[ConduitScore],
    load_std: dict[str, float],
    alpha: float,
    betas: list[float],
    report_threshold: float = REPORT_THRESHOLD_DEFAULT,
) -> BetaSweep:
    """Rank pairs at each beta and count how many clear the fixed
    thresholds (1.0 / 1.5 / 2.0, strict) plus the report threshold."""
    if not betas:
        raise InputError("beta sweep needs at least one beta")
    sweep = BetaSweep(alpha=alpha, report_threshold=report_threshold)
    seen = set()
    for beta in betas:
        if beta in seen:
            continue
        seen.add(beta)
        scores, rep = multilayer_scores(conduits, load_std, alpha, beta)
        counts = {t: sum(1 for s in scores if s.m > t) for t in SWEEP_THRESHOLDS}
        flagged = [s for s in scores if s.m > report_threshold]
        sweep.entries.append(BetaSweepEntry(beta, scores, counts, flagged, rep))
    return sweep
