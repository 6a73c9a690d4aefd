"""Reputation-weighted graduated-quorum BFT with fixed-weight decision epochs.

Voting weights are snapshotted when a proposal is created and never change
until the epoch commits or aborts, which is what makes the safety bound of
the weighted quorum hold per epoch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .adjudication import schedule_hash
from .reputation import ReputationParams

QUORUMS = {
    "fl_round_result": 0.67,
    "model_checkpoint": 0.75,
    "architecture_change": 0.80,
    "protocol_update": 0.90,
}

HIGH_SENSITIVITY_QUORUM = 0.75

DEFAULT_K_L = 10
VIEW_TIMEOUT_S = 5.0  # doubled per consecutive view change
REPUTATION_PROOF_OVERHEAD = 0.12  # extra latency vs. plain weighted PBFT


def quorum_threshold(op_class: str) -> float:
    try:
        return QUORUMS[op_class]
    except KeyError:
        raise ValueError(f"unknown operation class {op_class!r}") from None


def is_high_sensitivity(op_class: str) -> bool:
    """Operation classes whose quorum is at or above 0.75 gate newcomers."""
    return quorum_threshold(op_class) >= HIGH_SENSITIVITY_QUORUM


@dataclass(frozen=True)
class Proposal:
    id: int                 # content hash, collision-free per run
    op_class: str
    content_digest: int
    proposer: object
    round_num: int

    def __post_init__(self):
        quorum_threshold(self.op_class)


@dataclass(frozen=True)
class VoterState:
    """What the snapshot needs to know about a candidate voter."""

    node: object
    score: float
    uncertainty: float
    age_cycles: int


@dataclass(frozen=True)
class WeightSnapshot:
    """Frozen per-voter weights for one decision epoch."""

    weights: Mapping[object, float]

    @property
    def total(self) -> float:
        return sum(self.weights.values())


def snapshot_weights(
    voters: Iterable[VoterState],
    op_class: str,
    params: ReputationParams,
) -> WeightSnapshot:
    """Snapshot of eligible voters for a proposal of the given class.

    A voter is included when its score clears the eligibility floor and,
    for high-sensitivity classes, it passes the cooldown and uncertainty
    gates. Weight equals the score at snapshot time.
    """
    high = is_high_sensitivity(op_class)
    weights = {}
    for v in voters:
        if v.score < params.eligibility_floor:
            continue
        if high and (
            v.age_cycles < params.cooldown_cycles or v.uncertainty > params.uncertainty_gate
        ):
            continue
        weights[v.node] = v.score
    if not weights:
        raise ValueError(f"no eligible voters for {op_class!r}")
    return WeightSnapshot(weights=weights)


PENDING, COMMITTED, ABORTED = "pending", "committed", "aborted"


@dataclass
class EpochState:
    proposal: Proposal
    snapshot: WeightSnapshot
    approvals: set = field(default_factory=set)
    rejections: set = field(default_factory=set)
    status: str = PENDING
    view: int = 0
    leader: object = None
    rejected_votes: list = field(default_factory=list)  # votes from outside the snapshot

    def add_vote(self, node, approve: bool) -> bool:
        """Record a vote. Votes from outside the snapshot or duplicates are
        logged and ignored; they never fail the epoch."""
        if node not in self.snapshot.weights or node in self.approvals or node in self.rejections:
            self.rejected_votes.append((node, approve))
            return False
        (self.approvals if approve else self.rejections).add(node)
        return True

    @property
    def approval_weight(self) -> float:
        return sum(self.snapshot.weights[n] for n in self.approvals)

    @property
    def rejection_weight(self) -> float:
        return sum(self.snapshot.weights[n] for n in self.rejections)


def tally(epoch: EpochState) -> str:
    """Commit when approval weight reaches the quorum; abort as soon as the
    remaining uncast weight cannot reach it; stay pending otherwise."""
    if epoch.status != PENDING:
        return epoch.status
    q = quorum_threshold(epoch.proposal.op_class)
    total = epoch.snapshot.total
    approved = epoch.approval_weight
    if approved / total >= q:
        epoch.status = COMMITTED
    elif (approved + (total - approved - epoch.rejection_weight)) / total < q:
        epoch.status = ABORTED
    return epoch.status


def elect_leader(
    reputations: Mapping[object, float],
    k_l: int = DEFAULT_K_L,
    round_num: int = 0,
    view: int = 0,
):
    """Leader = rank (round + view) mod min(k_l, count) of the top-k_l
    reputation rotation; ties break by node-id hash."""
    if not reputations:
        raise ValueError("need at least one eligible node")
    ranked = sorted(reputations, key=lambda n: (-reputations[n], schedule_hash("leader", n)))
    return ranked[(round_num + view) % min(k_l, len(ranked))]


def view_change(epoch: EpochState, timeout_elapsed: bool, k_l: int = DEFAULT_K_L) -> EpochState:
    """Promote the next leader in the rotation after a timeout.

    Votes persist: they attach to the proposal id, which is unchanged.
    """
    if epoch.status != PENDING:
        raise ValueError("view change on a terminal epoch")
    if not timeout_elapsed:
        return epoch
    epoch.view += 1
    epoch.leader = elect_leader(
        epoch.snapshot.weights, k_l=k_l, round_num=epoch.proposal.round_num, view=epoch.view
    )
    return epoch


@dataclass(frozen=True)
class EpochRecord:
    """One finished epoch of a run trace, as consumed by the safety oracle."""

    round_num: int
    op_class: str
    content_digest: int
    status: str


@dataclass(frozen=True)
class SafetyVerdict:
    ok: bool
    violations: tuple = ()


def check_safety(trace: Sequence[EpochRecord]) -> SafetyVerdict:
    """Offline oracle: a violation is two committed proposals that conflict,
    i.e. share (round, op_class) but differ in content digest."""
    committed: dict[tuple, set] = {}
    for rec in trace:
        if rec.status == COMMITTED:
            committed.setdefault((rec.round_num, rec.op_class), set()).add(rec.content_digest)
    violations = tuple(key for key, digests in committed.items() if len(digests) > 1)
    return SafetyVerdict(ok=not violations, violations=violations)


def consensus_latency_s(mean_rtt_ms: float, views: int = 0) -> float:
    """Simulated decision latency: three message rounds of weighted PBFT,
    plus the reputation-proof round modeled as a fixed 12% adder, plus
    exponentially backed-off view-change timeouts."""
    base = 3.0 * mean_rtt_ms / 1000.0
    timeouts = sum(VIEW_TIMEOUT_S * 2**i for i in range(views))
    return base * (1.0 + REPUTATION_PROOF_OVERHEAD) + timeouts
