"""Discounted Beta reputation: evidence updates, scores, uncertainty,
separation prediction, correlated-error bound, and anti-manipulation gates.

A peer's trust state is an evidence pair (alpha, beta). Every adjudicated
outcome ages the old evidence by a factor ``aging`` and adds one unit of
new evidence, so the score alpha/(alpha+beta) tracks recent behaviour while
1/(alpha+beta) quantifies how much evidence backs it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from scipy.stats import chi2


@dataclass(frozen=True)
class BetaReputation:
    """Discounted positive/negative evidence masses for one peer and domain."""

    alpha: float = 1.0
    beta: float = 1.0
    interactions: int = 0
    domain: str = "vision"

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("evidence masses must stay strictly positive")


@dataclass(frozen=True)
class ReputationParams:
    aging: float = 0.95              # evidence decay per outcome, in (0, 1]
    r0: float = 0.5                  # score of a fresh identity
    cooldown_cycles: int = 100       # newcomer lockout from sensitive ops
    uncertainty_gate: float = 0.1    # max uncertainty admitted to sensitive ops
    eligibility_floor: float = 0.3   # min score to vote in consensus
    collusion_p: float = 0.01        # per-pair significance for the vote scan

    def __post_init__(self):
        if not 0 < self.aging <= 1:
            raise ValueError("aging factor must be in (0, 1]")
        if not 0 <= self.eligibility_floor <= 1:
            raise ValueError("eligibility floor must be in [0, 1]")


@dataclass(frozen=True)
class SeparationParams:
    """Inputs of the closed-form expected honest/Byzantine score gap."""

    p_h_eff: float   # effective per-round success rate of honest nodes
    p_b_eff: float   # effective per-round success rate of Byzantine nodes
    aging: float
    rounds: int


def update(rep: BetaReputation, outcome: int, params: ReputationParams) -> BetaReputation:
    """Fold one adjudicated binary outcome into the evidence pair.

    alpha' = aging * alpha + outcome, beta' = aging * beta + (1 - outcome).
    """
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
    lam = params.aging
    return replace(
        rep,
        alpha=lam * rep.alpha + outcome,
        beta=lam * rep.beta + (1 - outcome),
        interactions=rep.interactions + 1,
    )


def score(rep: BetaReputation) -> float:
    """Trust score alpha/(alpha+beta) in (0, 1)."""
    return rep.alpha / (rep.alpha + rep.beta)


def uncertainty(rep: BetaReputation) -> float:
    """Evidence-mass uncertainty 1/(alpha+beta); 0.5 for a fresh identity."""
    return 1.0 / (rep.alpha + rep.beta)


def expected_gap(sp: SeparationParams) -> float:
    """Closed-form expected score gap after ``rounds`` outcomes.

    (p_h - p_b) * S_T / (2*aging^T + S_T) with S_T the geometric sum of
    aging factors; 0 at T=0 and -> (p_h - p_b) as T grows.
    """
    if sp.rounds < 0:
        raise ValueError("rounds must be >= 0")
    if sp.rounds == 0:
        return 0.0
    lam = sp.aging
    if lam == 1.0:
        s_t = float(sp.rounds)
    else:
        s_t = (1.0 - lam ** sp.rounds) / (1.0 - lam)
    return (sp.p_h_eff - sp.p_b_eff) * s_t / (2.0 * lam ** sp.rounds + s_t)


def effective_error(eta: float, rho: float, m: int) -> float:
    """Upper bound on majority-vote error with m equicorrelated evaluators.

    eta + rho * eta * (1 - eta) * (m - 1) / m. The bound is used as the
    operative effective error throughout the simulator.
    """
    if not 0 <= eta <= 1:
        raise ValueError("eta must be in [0, 1]")
    if not 0 <= rho < 1:
        raise ValueError("rho must be in [0, 1)")
    if m < 1:
        raise ValueError("m must be >= 1")
    return eta + rho * eta * (1.0 - eta) * (m - 1) / m


def is_gated(
    rep: BetaReputation,
    age_cycles: int,
    params: ReputationParams,
    high_sensitivity: bool,
) -> bool:
    """True when a peer is blocked from a sensitive operation class.

    High-sensitivity operations (aggregation coordination, quorums >= 0.75)
    reject peers still in the newcomer cooldown or with too little evidence.
    Low-sensitivity operations are never gated here.
    """
    if age_cycles < 0:
        raise ValueError("age_cycles must be >= 0")
    if not high_sensitivity:
        return False
    return age_cycles < params.cooldown_cycles or uncertainty(rep) > params.uncertainty_gate


MIN_SCAN_VOTES = 20


def collusion_scan(
    votes: Mapping[object, Sequence[int]],
    params: ReputationParams,
) -> set[tuple]:
    """Flag node pairs whose vote histories are statistically dependent.

    Builds the 2x2 contingency table of joint votes for every pair and
    applies the (Yates-uncorrected) chi-squared independence test with one
    degree of freedom; pairs with p < collusion_p are flagged. Returns an
    empty set when any node has fewer than MIN_SCAN_VOTES recorded votes.
    Degenerate tables (a node that never varies its vote) carry no signal
    and are skipped.
    """
    histories = {}
    for node, hist in votes.items():
        arr = list(hist)
        if any(v not in (0, 1) for v in arr):
            raise ValueError(f"non-binary vote history for node {node!r}")
        histories[node] = arr
    if not histories or min(len(h) for h in histories.values()) < MIN_SCAN_VOTES:
        return set()

    flagged = set()
    for a, b in itertools.combinations(sorted(histories, key=repr), 2):
        ha, hb = histories[a], histories[b]
        n = min(len(ha), len(hb))
        t11 = t10 = t01 = t00 = 0
        for va, vb in zip(ha[:n], hb[:n]):
            if va and vb:
                t11 += 1
            elif va:
                t10 += 1
            elif vb:
                t01 += 1
            else:
                t00 += 1
        row1, row0 = t11 + t10, t01 + t00
        col1, col0 = t11 + t01, t10 + t00
        if 0 in (row1, row0, col1, col0):
            continue
        stat = n * (t11 * t00 - t10 * t01) ** 2 / (row1 * row0 * col1 * col0)
        if chi2.sf(stat, df=1) < params.collusion_p:
            flagged.add((a, b))
    return flagged
