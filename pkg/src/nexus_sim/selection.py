"""Reputation-aware participant selection and capability-profile probing."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .adjudication import schedule_hash

RTT_MAX_MS = 200.0  # normalization ceiling for the latency factor


@dataclass(frozen=True)
class CapabilityProfile:
    cap: float = 1.0        # hardware capability match in [0, 1]
    load: float = 0.0       # current utilization in [0, 1]
    lat: float = 0.0        # normalized network latency in [0, 1]
    verified_at: int = -1   # round of the last successful probe
    stale: bool = False     # probe failed; cap treated as 0 until re-probed

    def __post_init__(self):
        for name in ("cap", "load", "lat"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


@dataclass(frozen=True)
class SelectionWeights:
    w_cap: float = 0.4
    w_load: float = 0.2
    w_lat: float = 0.1
    w_rep: float = 0.3

    def __post_init__(self):
        ws = (self.w_cap, self.w_load, self.w_lat, self.w_rep)
        if any(w < 0 for w in ws):
            raise ValueError("selection weights must be nonnegative")
        if abs(sum(ws) - 1.0) > 1e-9:
            raise ValueError(f"selection weights must sum to 1, got {sum(ws)}")


def normalize_latency(rtt_ms: float) -> float:
    return min(rtt_ms / RTT_MAX_MS, 1.0)


def score_candidate(profile: CapabilityProfile, reputation: float, weights: SelectionWeights) -> float:
    """w1*cap + w2*(1-load) + w3*(1-lat) + w4*reputation."""
    if not 0.0 <= reputation <= 1.0:
        raise ValueError("reputation must be in [0, 1]")
    cap = 0.0 if profile.stale else profile.cap
    return (
        weights.w_cap * cap
        + weights.w_load * (1.0 - profile.load)
        + weights.w_lat * (1.0 - profile.lat)
        + weights.w_rep * reputation
    )


def select_participants(
    candidates: Sequence[tuple],
    k_train: int,
    weights: SelectionWeights,
    round_num: int,
) -> list:
    """Top-k_train candidates by score.

    ``candidates`` rows are (node_id, CapabilityProfile, reputation). Ties
    break by the hash of (round, node id), keeping runs schedule-independent.
    """
    if len(candidates) < k_train:
        raise ValueError(
            f"insufficient candidates: need {k_train}, have {len(candidates)}"
        )
    ranked = sorted(
        candidates,
        key=lambda c: (-score_candidate(c[1], c[2], weights), schedule_hash(round_num, c[0])),
    )
    return [node for node, _, _ in ranked[:k_train]]


def probe_capability(node, round_num: int) -> CapabilityProfile:
    """Challenge-response probe of a node's announced profile.

    In simulation the probe is always-detecting: an announced capability is
    clamped down to the node's true capability, so capability inflation
    never pays. Offline nodes yield a stale profile whose capability
    contributes zero until a later probe succeeds.
    """
    if not node.alive:
        return replace(node.profile, stale=True, verified_at=node.profile.verified_at)
    cap = min(node.announced_cap, node.true_cap)
    return replace(node.profile, cap=cap, stale=False, verified_at=round_num)
