"""Rep-FedAvg weighting and aggregation.

Weights join data size and reputation: alpha_k = n_k * r_k / sum_j n_j * r_j.
Scores are rescaled by their maximum before weighting, so a uniform
reputation vector cancels exactly and the weights reduce bitwise to plain
data-proportional FedAvg.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class UpdateDelta:
    node: object
    delta: np.ndarray
    n_k: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.delta)):
            raise ValueError(f"non-finite update from node {self.node!r}")
        if self.n_k <= 0:
            raise ValueError("n_k must be positive")


@dataclass
class RoundResult:
    round_num: int
    success: bool
    accepted_model: np.ndarray | None = None
    outcomes: dict = field(default_factory=dict)        # node -> adjudicated o_t
    val_acc_before: float = 0.0
    val_acc_after: float = 0.0
    test_acc: float = 0.0
    round_time_s: float = 0.0
    completed_in_time: bool = False
    min_updates_met: bool = False
    quorum_approved: bool = False
    no_regression: bool = False
    updates_collected: int = 0
    leader: object = None
    views: int = 0
    consensus_latency_s: float = 0.0
    oracle_verdict: int | None = None
    failure_reason: str = ""

    def __post_init__(self):
        if self.success and self.accepted_model is None:
            raise ValueError("a successful round must carry the accepted model")


def aggregation_weights(
    updates: Sequence[UpdateDelta],
    reputations: Mapping[object, float],
) -> dict:
    """Joint data-reputation weights, normalized to sum to 1.

    Raises when no update carries trusted mass (all reputations zero), in
    which case the caller marks the round failed.
    """
    if not updates:
        raise ValueError("no updates to weight")
    scores = np.array([reputations[u.node] for u in updates], dtype=float)
    if scores.min() < 0:
        raise ValueError("reputations must be nonnegative")
    r_max = scores.max()
    if r_max <= 0:
        raise ValueError("no trusted mass: all reputations are zero")
    sizes = np.array([u.n_k for u in updates], dtype=float)
    mass = sizes * (scores / r_max)
    total = mass.sum()
    return {u.node: float(m / total) for u, m in zip(updates, mass)}


def rep_fedavg(
    global_model: np.ndarray,
    updates: Sequence[UpdateDelta],
    weights: Mapping[object, float],
) -> np.ndarray:
    """w^{t+1} = w^t + sum_k alpha_k * delta_k."""
    total = sum(weights[u.node] for u in updates)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {total}")
    out = global_model.copy()
    for u in updates:
        if u.delta.shape != global_model.shape:
            raise ValueError(f"dimension mismatch for node {u.node!r}")
        out += weights[u.node] * u.delta
    return out


def run_round(state, t: int) -> RoundResult:
    """One FL round: select, train in parallel, collect, weight, aggregate,
    submit to consensus, and only on approval adjudicate and update trust.

    A round is successful when it completes within the timeout, collects the
    minimum update count, wins the quorum, and does not regress on the
    public validation benchmark; the four conditions are logged separately.
    """
    import math

    cfg = state.config
    state.probe_all()
    rep_snapshot = state.reputation_snapshot()  # weights freeze at round start
    val_before = state.val_accuracy(state.global_model)

    def failed(reason: str, collected: int = 0, round_time: float = 0.0,
               completed: bool = False, min_met: bool = False) -> RoundResult:
        return RoundResult(
            round_num=t,
            success=False,
            outcomes={},
            val_acc_before=val_before,
            val_acc_after=val_before,
            test_acc=state.test_accuracy(state.global_model),
            round_time_s=round_time,
            completed_in_time=completed,
            min_updates_met=min_met,
            quorum_approved=False,
            no_regression=False,
            updates_collected=collected,
            failure_reason=reason,
        )

    participants = state.select(t)
    if not participants:
        return failed("no eligible training candidates")

    updates, timings, diagnostics = state.compute_updates(t, participants)
    min_updates = cfg.min_updates if cfg.min_updates > 0 else math.ceil(len(participants) / 2)
    min_met = len(updates) >= min_updates
    if updates and len(updates) == len(timings):
        collection_time = max(timings[u.node] for u in updates)
    else:
        collection_time = state.collect_timeout_s  # waited out the stragglers
    if diagnostics:
        return failed("; ".join(diagnostics), len(updates), collection_time)
    if not min_met:
        return failed("insufficient updates", len(updates),
                      state.collect_timeout_s, completed=False, min_met=False)

    try:
        candidate = state.aggregate(updates, rep_snapshot)
    except ValueError as exc:
        return failed(str(exc), len(updates), collection_time, completed=True, min_met=True)

    oracle = int(state.val_accuracy(candidate) >= val_before)
    if cfg.validation_gate:
        committed, proposal_model, record = state.consensus_decide(t, candidate, oracle)
    else:
        # plain FL loop (baseline arms): every aggregate lands unchecked
        committed, proposal_model = True, candidate
        record = {"leader": None, "views": 0, "latency_s": 0.0}

    outcomes: dict = {}
    gossip_time = 0.0
    if committed:
        # adjudication judges each delta against the round-start model
        outcomes = state.adjudicate_participants(t, updates)
        state.apply_outcomes(outcomes)
        state.global_model = proposal_model
        if record["leader"] is not None:
            gossip = state.gossip_checkpoint(t, record["leader"])
            if gossip:
                gossip_time = gossip["gossip_time_s"]

    val_after = state.val_accuracy(state.global_model)
    no_regression = (val_after >= val_before) if committed else bool(oracle)
    success = committed and min_met and no_regression
    round_time = collection_time + record["latency_s"] + gossip_time
    state.sim_time_s += round_time

    return RoundResult(
        round_num=t,
        success=success,
        accepted_model=state.global_model if committed else None,
        outcomes=outcomes,
        val_acc_before=val_before,
        val_acc_after=val_after,
        test_acc=state.test_accuracy(state.global_model),
        round_time_s=round_time,
        completed_in_time=True,
        min_updates_met=min_met,
        quorum_approved=committed,
        no_regression=no_regression,
        updates_collected=len(updates),
        leader=record["leader"],
        views=record["views"],
        consensus_latency_s=record["latency_s"],
        oracle_verdict=oracle,
        failure_reason="" if success else ("quorum rejected" if not committed else "validation regression"),
    )
