"""Pluggable attacker behaviours.

All transformations are pure and deterministic given the injected random
stream, so adding attackers never perturbs honest nodes' results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import norm

ATTACK_KINDS = ("none", "gradient_flip", "alie", "backdoor", "sybil", "unreliable", "farming")


@dataclass(frozen=True)
class AttackSpec:
    kind: str = "none"
    byzantine_fraction: float = 0.0
    alie_z: float | None = 1.0          # None = derive from attacker counts
    trigger_indices: tuple = (0, 1, 2)
    trigger_value: float = 4.0
    target_label: int = 0
    poison_fraction: float = 0.5
    sybil_count: int = 0
    failure_prob: float = 0.4
    delivery_failure_prob: float = 0.0  # chance a Byzantine round is dropped entirely
    farming_onset_round: int = 0
    attack_lr_factor: float = 1.0       # attackers may train hotter before flipping

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if not 0.0 <= self.byzantine_fraction < 1.0:
            raise ValueError("byzantine_fraction must be in [0, 1)")
        if not 0.0 <= self.failure_prob <= 1.0:
            raise ValueError("failure_prob must be in [0, 1]")


def gradient_flip(delta: np.ndarray) -> np.ndarray:
    """Negate the local update."""
    return -delta


def compute_alie_z(n_total: int, n_attackers: int) -> float:
    """z for the stealthy colluding update, from the inverse normal CDF.

    Chooses the largest deviation whose per-coordinate value still looks
    like a plausible honest update to a majority-based filter, given the
    attacker/total split.
    """
    s = n_total // 2 + 1 - n_attackers
    s = max(s, 1)
    frac = (n_total - n_attackers - s) / (n_total - n_attackers)
    frac = min(max(frac, 1e-6), 1 - 1e-6)
    return float(norm.ppf(frac))


def alie_craft(deltas: Sequence[np.ndarray], z: float) -> np.ndarray:
    """Colluders' shared crafted update: coordinate-wise mean + z * std of
    their own pre-attack updates. With a single colluder there is no
    variance estimate, so the node falls back to flipping its update."""
    if len(deltas) < 2:
        return gradient_flip(deltas[0])
    stack = np.stack(deltas)
    return stack.mean(axis=0) + z * stack.std(axis=0)


def backdoor_poison(
    features: np.ndarray,
    labels: np.ndarray,
    trigger_indices: Sequence[int],
    trigger_value: float,
    target_label: int,
    fraction: float,
    rng,
) -> tuple[np.ndarray, np.ndarray]:
    """Overwrite trigger features and relabel a fraction of the local shard."""
    idx = np.asarray(trigger_indices, dtype=int)
    if len(idx) and (idx.min() < 0 or idx.max() >= features.shape[1]):
        raise ValueError("trigger indices outside feature dimension")
    features = features.copy()
    labels = labels.copy()
    n_poison = int(round(fraction * len(labels)))
    chosen = rng.permutation(len(labels))[:n_poison]
    features[np.ix_(chosen, idx)] = trigger_value
    labels[chosen] = target_label
    return features, labels


def unreliable_fails(failure_prob: float, rng) -> bool:
    """Per-round coin for an unreliable node: True = submit garbage."""
    if not 0.0 <= failure_prob <= 1.0:
        raise ValueError("failure_prob must be in [0, 1]")
    return bool(rng.random() < failure_prob)


def craft_random_delta(dim: int, typical_norm: float, rng) -> np.ndarray:
    """Uniformly random direction scaled to the honest-typical norm, so the
    garbage is not trivially filtered by a norm check."""
    v = rng.normal(size=dim)
    n = np.linalg.norm(v)
    if n == 0:
        return v
    return v * (typical_norm / n)


def is_farming_active(spec: AttackSpec, round_num: int) -> bool:
    """Reputation farmers act honestly until their onset round."""
    return spec.kind == "farming" and round_num >= spec.farming_onset_round


def inject_sybils(net, count: int, rng) -> list[int]:
    """Flood the overlay with fresh identities.

    Each sybil gets a regular node id and joins the DHT like any peer, so
    it participates in routing and gossip; trust state starts at the prior
    (score 0.5, maximal uncertainty, age zero). Voting behaviour (approve
    the adversary's proposals, reject honest ones) is applied by the
    simulation engine. Returns the new node ids.
    """
    from . import network

    ids = []
    for i in range(count):
        nid = network.make_node_id(rng)
        provider, region = network.REGIONS[i % len(network.REGIONS)]
        network.attach_node(net, nid, provider, region, rng)
        ids.append(nid)
    return ids
