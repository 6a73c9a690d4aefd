"""Comparison arms: robust aggregators and alternative consensus weightings.

These exist so experiment presets can pit the reputation pipeline against
the standard open-network design points under identical scenarios.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from .aggregation import UpdateDelta, aggregation_weights, rep_fedavg
from .consensus import WeightSnapshot

AGGREGATORS = ("rep_fedavg", "fedavg", "trimmed_mean", "krum", "median", "honest_only")
CONSENSUS_WEIGHTINGS = ("reputation", "equal", "stake", "puzzle")


def fedavg(global_model: np.ndarray, updates: Sequence[UpdateDelta]) -> np.ndarray:
    """Plain data-weighted averaging (uniform trust)."""
    weights = aggregation_weights(updates, {u.node: 1.0 for u in updates})
    return rep_fedavg(global_model, updates, weights)


def trimmed_mean(
    global_model: np.ndarray,
    updates: Sequence[UpdateDelta],
    byzantine_bound: int,
) -> np.ndarray:
    """Coordinate-wise mean after trimming the byzantine_bound highest and
    lowest values per coordinate."""
    stack = np.stack([u.delta for u in updates])
    b = min(byzantine_bound, (len(updates) - 1) // 2)
    s = np.sort(stack, axis=0)
    trimmed = s[b : len(updates) - b] if b > 0 else s
    return global_model + trimmed.mean(axis=0)


def coordinate_median(global_model: np.ndarray, updates: Sequence[UpdateDelta]) -> np.ndarray:
    stack = np.stack([u.delta for u in updates])
    return global_model + np.median(stack, axis=0)


def krum(
    global_model: np.ndarray,
    updates: Sequence[UpdateDelta],
    byzantine_bound: int,
) -> np.ndarray:
    """Single-nearest-update selection: pick the delta with the smallest sum
    of squared distances to its n - f - 2 closest peers."""
    n = len(updates)
    stack = np.stack([u.delta for u in updates])
    f = min(byzantine_bound, n - 3) if n > 3 else 0
    closest = max(n - f - 2, 1)
    dists = ((stack[:, None, :] - stack[None, :, :]) ** 2).sum(axis=2)
    scores = []
    for i in range(n):
        others = np.delete(dists[i], i)
        others.sort()
        scores.append(others[:closest].sum())
    return global_model + stack[int(np.argmin(scores))]


def snapshot_equal(voters: Iterable) -> WeightSnapshot:
    """Open-admission PBFT: one vote per identity, no history."""
    weights = {v: 1.0 for v in voters}
    if not weights:
        raise ValueError("no voters")
    return WeightSnapshot(weights=weights)


def snapshot_stake(stakes: Mapping[object, float]) -> WeightSnapshot:
    """Votes proportional to a fixed initial stake; cannot adapt to behaviour."""
    weights = {n: s for n, s in stakes.items() if s > 0}
    if not weights:
        raise ValueError("no staked voters")
    return WeightSnapshot(weights=weights)


def snapshot_puzzle(voters: Iterable, admitted: Iterable) -> WeightSnapshot:
    """Puzzle-gated admission: identities that paid the per-identity
    computational cost vote with equal weight."""
    admitted = set(admitted)
    weights = {v: 1.0 for v in voters if v in admitted}
    if not weights:
        raise ValueError("no admitted voters")
    return WeightSnapshot(weights=weights)
