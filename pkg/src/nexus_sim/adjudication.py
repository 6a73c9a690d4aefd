"""Decentralized outcome adjudication.

Each submitted model update is judged by m evaluators on hash-assigned
validation shards; the majority of their (noisy, possibly correlated)
verdicts is the binary outcome that feeds the reputation update.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import learner

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def _fnv1a(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def _key_bytes(key) -> bytes:
    if isinstance(key, (int, np.integer)):
        return int(key).to_bytes(32, "big", signed=False)
    if isinstance(key, str):
        return key.encode("utf-8")
    if isinstance(key, bytes):
        return key
    raise TypeError(f"unsupported hash key type: {type(key)!r}")


def schedule_hash(*parts) -> int:
    """Public 64-bit schedule hash (FNV-1a over network-byte-order fields)."""
    buf = b"".join(
        struct.pack(">Q", p) if isinstance(p, (int, np.integer)) and 0 <= p < 2**64
        else _key_bytes(p)
        for p in parts
    )
    return _fnv1a(buf)


@dataclass(frozen=True)
class NoiseModel:
    """Per-evaluator error rate and equicorrelation among evaluator errors."""

    eta: float = 0.15
    rho: float = 0.22

    def __post_init__(self):
        if not 0 <= self.eta <= 0.5:
            raise ValueError("eta must be in [0, 0.5]")
        if not 0 <= self.rho < 1:
            raise ValueError("rho must be in [0, 1)")


@dataclass(frozen=True)
class EvaluatorVote:
    evaluator: object
    shard: int
    verdict: int
    true_quality: int  # simulation ground truth, hidden from the protocol


def assign_shards(t: int, k, m: int, num_shards: int) -> list[int]:
    """Deterministic distinct shard indices for adjudication (t, k).

    index_i = H(t || k || i) mod num_shards, collisions resolved by linear
    probing so the m indices are pairwise distinct.
    """
    if num_shards < m:
        raise ValueError(f"num_shards={num_shards} < m={m}")
    out: list[int] = []
    used = set()
    for i in range(m):
        idx = schedule_hash(t, k, i) % num_shards
        while idx in used:
            idx = (idx + 1) % num_shards
        used.add(idx)
        out.append(idx)
    return out


def select_evaluators(
    candidates: Sequence[tuple],
    m: int,
    t: int,
    seed: int,
    target=None,
    previous: frozenset = frozenset(),
) -> list:
    """Pick m evaluators maximizing region diversity, deterministically.

    ``candidates`` is a sequence of (node_id, region). The evaluated node is
    always excluded; evaluators used for the same target in the previous
    adjudication are avoided when enough alternatives exist. Regions are
    visited round-robin in hash-shuffled order, taking the hash-first
    candidate of each region.
    """
    pool = [(node, region) for node, region in candidates if node != target]
    if len(pool) < m:
        raise ValueError(f"insufficient evaluators: need {m}, have {len(pool)}")
    fresh = [(n, r) for n, r in pool if n not in previous]
    if len(fresh) >= m:
        pool = fresh

    by_region: dict[object, list] = {}
    for node, region in pool:
        by_region.setdefault(region, []).append(node)
    for region, nodes in by_region.items():
        nodes.sort(key=lambda n: schedule_hash("eval", seed, t, n))
    regions = sorted(by_region, key=lambda r: schedule_hash("region", seed, t, r))

    chosen: list = []
    depth = 0
    while len(chosen) < m:
        progressed = False
        for region in regions:
            nodes = by_region[region]
            if depth < len(nodes):
                chosen.append(nodes[depth])
                progressed = True
                if len(chosen) == m:
                    break
        if not progressed:
            break
        depth += 1
    return chosen[:m]


def simulate_votes(true_quality: int, noise: NoiseModel, m: int, rng) -> list[int]:
    """Draw m evaluator verdicts for a shared ground truth.

    With probability rho all evaluators copy one common Bernoulli(eta) error
    bit, otherwise each draws an independent Bernoulli(eta) error; the
    verdict is the ground truth XORed with the error.
    """
    return apply_vote_noise([true_quality] * m, noise, rng)


def apply_vote_noise(qualities: Sequence[int], noise: NoiseModel, rng) -> list[int]:
    """Equicorrelated-noise verdicts for per-evaluator ground truths."""
    m = len(qualities)
    if rng.random() < noise.rho:
        err = [int(rng.random() < noise.eta)] * m
    else:
        err = [int(rng.random() < noise.eta) for _ in range(m)]
    return [q ^ e for q, e in zip(qualities, err)]


def adjudicate(verdicts: Sequence[int]) -> int:
    """Strict-majority aggregation of an odd number (>= 3) of verdicts."""
    n = len(verdicts)
    if n < 3 or n % 2 == 0:
        raise ValueError(f"need an odd number >= 3 of verdicts, got {n}")
    return int(sum(verdicts) > n / 2)


def judge_update(global_model: np.ndarray, delta: np.ndarray, shard) -> int:
    """Ground-truth quality: does applying the update keep shard accuracy?

    Returns 1 iff accuracy of (model + delta) on the shard does not drop
    below the current model's accuracy (ties count as positive).
    """
    if global_model.shape != delta.shape:
        raise ValueError("delta dimension does not match model")
    before = learner.evaluate(global_model, shard.features, shard.labels)
    after = learner.evaluate(global_model + delta, shard.features, shard.labels)
    return int(after >= before)


def agreement_probability(eta: float, rho: float) -> float:
    """P(two evaluators of the same adjudication agree) under the noise model."""
    base = eta * eta + (1.0 - eta) ** 2
    return rho + (1.0 - rho) * base


def measure_agreement(
    vote_log: Sequence[tuple],
    eta: float,
    min_common: int = 20,
) -> tuple[float, float]:
    """Pairwise agreement rate of co-adjudications and the rho it implies.

    ``vote_log`` rows are (adjudication_key, evaluator, verdict). The implied
    correlation is solved from the same equicorrelated relation the vote
    sampler uses, by bisection with eta taken from configuration.
    """
    by_adj: dict[object, list] = {}
    for key, evaluator, verdict in vote_log:
        by_adj.setdefault(key, []).append((evaluator, verdict))

    pair_counts: dict[tuple, list[int]] = {}
    for entries in by_adj.values():
        entries = sorted(entries, key=lambda e: repr(e[0]))
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                (ea, va), (eb, vb) = entries[i], entries[j]
                stat = pair_counts.setdefault((ea, eb), [0, 0])
                stat[0] += 1
                stat[1] += int(va == vb)

    usable = [(n, eq) for n, eq in pair_counts.values() if n >= min_common]
    if not usable:
        raise ValueError("insufficient data: no evaluator pair with enough co-adjudications")
    total = sum(n for n, _ in usable)
    equal = sum(eq for _, eq in usable)
    agreement = equal / total

    lo, hi = 0.0, 1.0
    if agreement <= agreement_probability(eta, 0.0):
        return agreement, 0.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if agreement_probability(eta, mid) < agreement:
            lo = mid
        else:
            hi = mid
    return agreement, (lo + hi) / 2


def majority_error_independent(eta: float, m: int) -> float:
    """Exact binomial majority-vote error for independent evaluators."""
    from math import comb

    need = m // 2 + 1
    return sum(comb(m, k) * eta**k * (1 - eta) ** (m - k) for k in range(need, m + 1))
