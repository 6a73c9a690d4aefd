"""Simulated P2P substrate: identities, Kademlia buckets with
reputation-aware eviction, iterative lookup, gossip, latency, and churn.

State is owned by the caller's event loop; nothing here spawns threads or
keeps hidden globals.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

ID_BITS = 256
DEFAULT_K = 20
DEFAULT_ALPHA = 3
DEFAULT_FANOUT = 6
DEFAULT_TTL = 7
DEFAULT_QUEUE_CAPACITY = 64
LOOPBACK_MS = 1.0

# (provider, region) pairs of the simulated multi-cloud testbed.
REGIONS = (
    ("gcp", "us-c1"), ("gcp", "eu-w1"), ("gcp", "asia-e1"),
    ("aws", "us-e1"), ("aws", "eu-w2"), ("aws", "ap-se1"),
    ("oracle", "us-ash"), ("oracle", "eu-fra"), ("oracle", "ap-tok"),
)


def make_node_id(rng) -> int:
    """256-bit identifier: hash of a simulated public key."""
    pk = rng.bytes(32)
    return int.from_bytes(hashlib.sha256(pk).digest(), "big")


def xor_distance(a: int, b: int) -> int:
    return a ^ b


EVICTION_MARGIN = 0.15


@dataclass
class KBucket:
    """Contact list for one distance prefix, with reputation-margin eviction."""

    capacity: int = DEFAULT_K
    contacts: list = field(default_factory=list)        # node ids, oldest first
    reputations: dict = field(default_factory=dict)     # id -> reputation at insert


def bucket_insert(bucket: KBucket, contact: int, contact_reputation: float):
    """Insert a contact, possibly evicting the lowest-reputation incumbent.

    A full bucket admits the newcomer only when its reputation exceeds the
    weakest incumbent's by more than the eviction margin (0.15); otherwise
    the newcomer is dropped. Returns (bucket, evicted id or None).
    """
    if contact in bucket.reputations:
        bucket.reputations[contact] = contact_reputation
        return bucket, None
    if len(bucket.contacts) < bucket.capacity:
        bucket.contacts.append(contact)
        bucket.reputations[contact] = contact_reputation
        return bucket, None
    weakest = min(bucket.contacts, key=lambda c: (bucket.reputations[c], c))
    if contact_reputation > bucket.reputations[weakest] + EVICTION_MARGIN:
        bucket.contacts.remove(weakest)
        del bucket.reputations[weakest]
        bucket.contacts.append(contact)
        bucket.reputations[contact] = contact_reputation
        return bucket, weakest
    return bucket, None


@dataclass
class NetNode:
    node_id: int
    provider: str
    region: str
    alive: bool = True
    buckets: dict = field(default_factory=dict)  # prefix index -> KBucket

    def contacts(self) -> list[int]:
        out: list[int] = []
        for idx in sorted(self.buckets):
            out.extend(self.buckets[idx].contacts)
        return out


def bucket_index(own_id: int, other_id: int) -> int:
    d = xor_distance(own_id, other_id)
    if d == 0:
        raise ValueError("a node does not bucket itself")
    return d.bit_length() - 1


@dataclass
class Network:
    """All live and parked simulated nodes plus the latency model."""

    nodes: dict = field(default_factory=dict)     # id -> NetNode (alive or not)
    k: int = DEFAULT_K
    parked: dict = field(default_factory=dict)    # id -> round the node departed

    def alive_ids(self) -> list[int]:
        return [nid for nid, node in sorted(self.nodes.items()) if node.alive]

    def add_contact(self, owner_id: int, contact_id: int, reputation: float = 0.5):
        if owner_id == contact_id:
            return
        node = self.nodes[owner_id]
        idx = bucket_index(owner_id, contact_id)
        bucket = node.buckets.setdefault(idx, KBucket(capacity=self.k))
        bucket_insert(bucket, contact_id, reputation)


def build_network(
    node_ids: Sequence[int],
    regions: Mapping[int, tuple],
    rng,
    k: int = DEFAULT_K,
    reputations: Mapping[int, float] | None = None,
) -> Network:
    """Populate routing tables: every node fills each nonempty bucket range
    with up to k peers sampled from that range."""
    net = Network(k=k)
    for nid in node_ids:
        provider, region = regions[nid]
        net.nodes[nid] = NetNode(node_id=nid, provider=provider, region=region)
    ids = sorted(node_ids)
    rep = reputations or {}
    for nid in ids:
        ranges: dict[int, list[int]] = {}
        for other in ids:
            if other == nid:
                continue
            ranges.setdefault(bucket_index(nid, other), []).append(other)
        for idx, members in ranges.items():
            if len(members) > k:
                chosen = rng.choice(len(members), size=k, replace=False)
                members = [members[i] for i in chosen]
            for member in members:
                net.add_contact(nid, member, rep.get(member, 0.5))
    return net


def attach_node(net: Network, nid: int, provider: str, region: str, rng,
                reputations: Mapping[int, float] | None = None):
    """Wire a joining node into the overlay (its buckets and a few peers')."""
    net.nodes[nid] = NetNode(node_id=nid, provider=provider, region=region)
    rep = reputations or {}
    ids = [i for i in net.alive_ids() if i != nid]
    if not ids:
        return
    ranges: dict[int, list[int]] = {}
    for other in ids:
        ranges.setdefault(bucket_index(nid, other), []).append(other)
    for idx, members in ranges.items():
        if len(members) > net.k:
            chosen = rng.choice(len(members), size=net.k, replace=False)
            members = [members[i] for i in chosen]
        for member in members:
            net.add_contact(nid, member, rep.get(member, 0.5))
    # announce to a sample of peers so the newcomer is discoverable
    sample = rng.choice(len(ids), size=min(net.k, len(ids)), replace=False)
    for i in sample:
        net.add_contact(ids[i], nid, rep.get(nid, 0.5))


def lookup(
    net: Network,
    origin: int,
    target: int,
    alpha: int = DEFAULT_ALPHA,
    k: int = DEFAULT_K,
) -> tuple[list[int], int]:
    """Standard iterative Kademlia lookup.

    Queries the alpha closest known peers, merges their k closest contacts,
    and repeats until no closer node appears. Returns (k closest found,
    iteration count). A disconnected target yields the best-effort set.
    """
    if origin == target:
        return [origin], 0
    known = set(net.nodes[origin].contacts())
    known.discard(origin)
    if not known:
        raise ValueError("origin has no contacts")
    queried = set()
    hops = 0
    best = min(xor_distance(c, target) for c in known)
    while True:
        frontier = [
            c for c in sorted(known, key=lambda c: xor_distance(c, target))
            if c not in queried and net.nodes[c].alive
        ][:alpha]
        if not frontier:
            break
        hops += 1
        for peer in frontier:
            queried.add(peer)
            neighbours = sorted(
                net.nodes[peer].contacts(), key=lambda c: xor_distance(c, target)
            )[:k]
            known.update(neighbours)
        known.discard(origin)
        new_best = min(xor_distance(c, target) for c in known)
        if new_best >= best:
            break
        best = new_best
        if best == 0:
            break
    closest = sorted(known, key=lambda c: xor_distance(c, target))[:k]
    return closest, hops


@dataclass(frozen=True)
class GossipMessage:
    payload_digest: int      # versioned Merkle root stand-in
    origin: int
    ttl: int = DEFAULT_TTL
    sender_reputation: float = 0.5


def gossip_broadcast(
    net: Network,
    origin: int,
    fanout: int = DEFAULT_FANOUT,
    ttl: int = DEFAULT_TTL,
    rng=None,
    rounds: int = 8,
    reputations: Mapping[int, float] | None = None,
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY,
) -> list[float]:
    """Epidemic push broadcast; returns the coverage fraction after each round.

    Every round processes nodes in a fresh shuffled order; each infected
    node forwards to ``fanout`` contacts, decrementing the TTL per hop.
    Deliveries land immediately, so nodes later in the order relay within
    the same round (rounds are synchronous sweeps over live state, which is
    what lets a fanout-6 broadcast saturate a thousand nodes in about three
    rounds). Duplicate receipts are ignored. Each node accepts at most
    ``queue_capacity`` receipts per round; under overflow, messages from
    low-reputation senders are dropped first.
    """
    if not net.nodes[origin].alive:
        raise ValueError("origin must be alive")
    rep = reputations or {}
    alive = net.alive_ids()
    ttl_of: dict[int, int] = {origin: ttl}
    trace: list[float] = []
    for _ in range(rounds):
        order = rng.permutation(len(alive))
        inboxes: dict[int, list[float]] = {}
        for pos in order:
            nid = alive[pos]
            t = ttl_of.get(nid)
            if t is None or t <= 0:
                continue
            node = net.nodes[nid]
            contacts = [c for c in node.contacts() if net.nodes[c].alive]
            if not contacts:
                continue
            n_targets = min(fanout, len(contacts))
            picks = rng.choice(len(contacts), size=n_targets, replace=False)
            sender_rep = rep.get(nid, 0.5)
            for p in picks:
                tgt = contacts[p]
                queue = inboxes.setdefault(tgt, [])
                if not queue_admit(queue, sender_rep, queue_capacity):
                    continue
                if tgt not in ttl_of:
                    ttl_of[tgt] = t - 1
                elif t - 1 > ttl_of[tgt]:
                    # the payload is a known duplicate, but a copy that
                    # travelled fewer hops refreshes the forwarding budget
                    ttl_of[tgt] = t - 1
        trace.append(len(ttl_of) / max(len(alive), 1))
    return trace


def queue_admit(accepted: list[float], sender_rep: float, capacity: int) -> bool:
    """Admission to a node's per-round inbound queue.

    Under overflow the lowest-sender-reputation message is dropped first:
    a full queue admits a receipt only by displacing a strictly
    lower-reputation one. ``accepted`` is mutated in place.
    """
    if len(accepted) < capacity:
        accepted.append(sender_rep)
        return True
    lowest = min(range(len(accepted)), key=accepted.__getitem__)
    if sender_rep > accepted[lowest]:
        accepted[lowest] = sender_rep
        return True
    return False


@dataclass(frozen=True)
class LatencyModel:
    intra_region_median_ms: float = 12.0
    same_provider_median_ms: float = 40.0
    cross_provider_median_ms: float = 87.0
    jitter_cv: float = 0.2

    def median_for(self, a: NetNode, b: NetNode) -> float:
        if a.provider == b.provider:
            if a.region == b.region:
                return self.intra_region_median_ms
            return self.same_provider_median_ms
        return self.cross_provider_median_ms


def sample_latency(model: LatencyModel, a: NetNode, b: NetNode, rng) -> float:
    """Log-normal RTT in ms with the pair's configured median and ~20% CV."""
    if a.node_id == b.node_id:
        return LOOPBACK_MS
    median = model.median_for(a, b)
    sigma = np.sqrt(np.log1p(model.jitter_cv**2))
    return float(median * np.exp(rng.normal(0.0, sigma)))


@dataclass(frozen=True)
class ChurnEvent:
    kind: str      # "depart" | "arrive" | "return"
    node_id: int


def churn_step(
    net: Network,
    rate_per_min: float,
    dt_min: float,
    rng,
    round_num: int,
    cooldown_cycles: int = 100,
    spawn_node: Callable[[], int] | None = None,
) -> list[ChurnEvent]:
    """Poisson departures and arrivals at the given per-minute rate.

    Departing nodes are parked and keep their identity; an arrival revives
    the oldest parked node still inside the cooldown window (its state,
    including reputation kept by the caller, survives), otherwise a fresh
    node is spawned via ``spawn_node``.
    """
    if rate_per_min < 0:
        raise ValueError("rate must be >= 0")
    events: list[ChurnEvent] = []
    alive = net.alive_ids()
    lam = rate_per_min * len(alive) * dt_min
    n_depart = int(rng.poisson(lam)) if lam > 0 else 0
    n_arrive = int(rng.poisson(lam)) if lam > 0 else 0

    n_depart = min(n_depart, len(alive))
    if n_depart:
        for i in rng.choice(len(alive), size=n_depart, replace=False):
            nid = alive[i]
            net.nodes[nid].alive = False
            net.parked[nid] = round_num
            events.append(ChurnEvent("depart", nid))

    for _ in range(n_arrive):
        returnable = sorted(
            nid for nid, when in net.parked.items()
            if round_num - when <= cooldown_cycles
        )
        if returnable:
            nid = returnable[0]
            del net.parked[nid]
            net.nodes[nid].alive = True
            events.append(ChurnEvent("return", nid))
        elif spawn_node is not None:
            nid = spawn_node()
            events.append(ChurnEvent("arrive", nid))
    return events
