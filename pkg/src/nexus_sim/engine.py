"""Simulation state and the deterministic scenario runner.

`build_state` constructs the whole world (nodes, overlay, data, trust
tables) from a ScenarioConfig; `run_scenario` advances it round by round
through the Rep-FedAvg pipeline and collects the metric time series.
All randomness flows through named substreams of the run seed.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import adjudication, adversary, baselines, consensus, learner, network, reputation, selection
from .aggregation import RoundResult, UpdateDelta, run_round
from .config import ScenarioConfig
from .rng import derive_seed, substream

FOUNDING_AGE_CYCLES = 200  # founders predate the run; sybils join at age 0
REFERENCE_SHARD_SIZE = 200  # shard size that trains in base_train_s at cap 1.0


@dataclass
class SimNode:
    node_id: int
    provider: str
    region: str
    gpu: bool
    role: str                      # honest | byzantine | unreliable | sybil
    true_cap: float
    announced_cap: float
    base_load: float
    lat_factor: float              # normalized RTT to the reference region
    rtt_ms: float                  # median RTT to the coordinator region
    profile: selection.CapabilityProfile
    joined_round: int
    shard: learner.Shard | None = None
    alive: bool = True
    stake: float = 1.0
    puzzle_admitted: bool = True
    load: float = 0.0


class ReputationTable:
    """Per-node, per-domain Beta evidence with a cross-domain fallback."""

    def __init__(self, params: reputation.ReputationParams):
        self.params = params
        self._table: dict[int, dict[str, reputation.BetaReputation]] = {}

    def rep(self, node: int, domain: str) -> reputation.BetaReputation:
        return self._table.get(node, {}).get(domain, reputation.BetaReputation(domain=domain))

    def score(self, node: int, domain: str) -> float:
        domains = self._table.get(node)
        if not domains:
            return self.params.r0
        if domain in domains:
            return reputation.score(domains[domain])
        return float(np.mean([reputation.score(r) for r in domains.values()]))

    def uncertainty(self, node: int, domain: str) -> float:
        return reputation.uncertainty(self.rep(node, domain))

    def record(self, node: int, domain: str, outcome: int):
        rep = self.rep(node, domain)
        self._table.setdefault(node, {})[domain] = reputation.update(
            rep, outcome, self.params
        )

    def reset(self, node: int):
        self._table.pop(node, None)


@dataclass
class SimState:
    config: ScenarioConfig
    nodes: dict
    net: network.Network
    reputations: ReputationTable
    global_model: np.ndarray
    val_shard: learner.Shard
    test_shard: learner.Shard
    val_subshards: list
    ledger: learner.PrivacyLedger
    mean_rtt_ms: float
    collect_timeout_s: float
    round_num: int = 0
    sim_time_s: float = 0.0
    epoch_counter: int = 0
    consensus_log: list = field(default_factory=list)
    vote_history: dict = field(default_factory=dict)
    adjudication_log: list = field(default_factory=list)
    prev_evaluators: dict = field(default_factory=dict)
    last_selected: set = field(default_factory=set)
    gossip_stats: list = field(default_factory=list)
    churn_counts: list = field(default_factory=list)
    collusion_flags: int = 0

    # -- randomness ---------------------------------------------------------

    def rng(self, *labels):
        return substream(self.config.seed, *labels)

    # -- trust views --------------------------------------------------------

    def score_of(self, node: int) -> float:
        return self.reputations.score(node, self.config.domain)

    def age_cycles(self, node: int) -> int:
        return self.round_num - self.nodes[node].joined_round

    def reputation_snapshot(self) -> dict:
        return {nid: self.score_of(nid) for nid in sorted(self.nodes)}

    def voter_states(self) -> list:
        out = []
        for nid in sorted(self.nodes):
            node = self.nodes[nid]
            if not node.alive:
                continue
            out.append(
                consensus.VoterState(
                    node=nid,
                    score=self.score_of(nid),
                    uncertainty=self.reputations.uncertainty(nid, self.config.domain),
                    age_cycles=self.age_cycles(nid),
                )
            )
        return out

    def build_snapshot(self, op_class: str) -> consensus.WeightSnapshot:
        mode = self.config.consensus_weighting
        voters = self.voter_states()
        if mode == "reputation":
            return consensus.snapshot_weights(voters, op_class, self.config.reputation)
        ids = [v.node for v in voters]
        if mode == "equal":
            return baselines.snapshot_equal(ids)
        if mode == "puzzle":
            admitted = [nid for nid in ids if self.nodes[nid].puzzle_admitted]
            return baselines.snapshot_puzzle(ids, admitted)
        if mode == "stake":
            return baselines.snapshot_stake({nid: self.nodes[nid].stake for nid in ids})
        raise ValueError(f"unknown consensus weighting {mode!r}")

    # -- selection ----------------------------------------------------------

    def probe_all(self):
        for nid in sorted(self.nodes):
            node = self.nodes[nid]
            decayed = max(node.base_load, node.load * 0.5)
            # a node that just trained is fully busy for the next round, which
            # rotates selection across the candidate pool instead of letting
            # early reputation leaders monopolize the slots
            node.load = 1.0 if nid in self.last_selected else min(decayed, 1.0)
            probed = selection.probe_capability(node, self.round_num)
            node.profile = replace(
                probed, load=node.load, lat=node.lat_factor
            )

    def trainer_candidates(self) -> list:
        return [
            (nid, self.nodes[nid].profile, self.score_of(nid))
            for nid in sorted(self.nodes)
            if self.nodes[nid].gpu and self.nodes[nid].alive and self.nodes[nid].shard is not None
        ]

    def select(self, t: int) -> list:
        candidates = self.trainer_candidates()
        k = min(self.config.k_train, len(candidates))
        if k == 0:
            return []
        strategy = self.config.selection_strategy
        if strategy == "random":
            rng = self.rng("select", t)
            idx = rng.choice(len(candidates), size=k, replace=False)
            chosen = [candidates[i][0] for i in sorted(idx)]
        else:
            weights = {
                "reputation": self.config.selection_weights,
                "capability": selection.SelectionWeights(1.0, 0.0, 0.0, 0.0),
                "load_balanced": selection.SelectionWeights(0.0, 1.0, 0.0, 0.0),
            }[strategy]
            chosen = selection.select_participants(candidates, k, weights, t)
        self.last_selected = set(chosen)
        return chosen

    # -- local training and attacks ------------------------------------------

    def honest_delta(self, nid: int, t: int) -> tuple[np.ndarray, int]:
        node = self.nodes[nid]
        cfg = self.config
        dp = cfg.dp
        if self.roleplay(nid, t) in ("gradient_flip", "alie") and cfg.attack.attack_lr_factor != 1.0:
            # attackers do not honour the client-side DP/clipping protocol:
            # they train hot and unclipped so the negated update carries real
            # mass instead of fading with the honest updates
            dp = replace(
                dp,
                learning_rate=dp.learning_rate * cfg.attack.attack_lr_factor,
                clip_norm=math.inf,
                noise_multiplier=0.0,
                weight_decay=0.0,
            )
        model, steps = learner.local_train_dpsgd(
            self.global_model,
            node.shard,
            dp,
            self.rng("train", t, nid),
            classes=cfg.learner.classes,
            d=cfg.learner.dim,
        )
        return model - self.global_model, steps

    def compute_updates(self, t: int, participants: list) -> tuple[list, dict, list]:
        """Local training plus adversarial transformations.

        Returns (updates, per-node completion time, diagnostics). Honest
        deltas are computed first so colluders can estimate their statistics
        without perturbing honest streams.
        """
        cfg = self.config
        spec = cfg.attack
        deltas: dict[int, np.ndarray] = {}
        steps_of: dict[int, int] = {}
        diagnostics: list[str] = []
        for nid in sorted(participants):
            try:
                deltas[nid], steps_of[nid] = self.honest_delta(nid, t)
            except RuntimeError as exc:
                diagnostics.append(f"node {nid}: {exc}")
        honest_norms = [
            float(np.linalg.norm(d))
            for nid, d in deltas.items()
            if self.nodes[nid].role == "honest"
        ]
        typical_norm = float(np.median(honest_norms)) if honest_norms else 1.0

        flippers = [n for n in participants if self.roleplay(n, t) == "gradient_flip"]
        alie_nodes = [n for n in participants if self.roleplay(n, t) == "alie"]
        if alie_nodes:
            z = spec.alie_z
            if z is None:
                z = adversary.compute_alie_z(len(participants), len(alie_nodes))
            crafted = adversary.alie_craft([deltas[n] for n in alie_nodes if n in deltas], z)
            for n in alie_nodes:
                if n in deltas:
                    deltas[n] = crafted.copy()
        for n in flippers:
            if n in deltas:
                deltas[n] = adversary.gradient_flip(deltas[n])
        for n in participants:
            if self.roleplay(n, t) == "unreliable" and n in deltas:
                if adversary.unreliable_fails(spec.failure_prob, self.rng("fail", t, n)):
                    deltas[n] = adversary.craft_random_delta(
                        len(self.global_model), typical_norm, self.rng("garbage", t, n)
                    )

        updates, timings = [], {}
        for nid in sorted(participants):
            if nid not in deltas:
                continue
            node = self.nodes[nid]
            if not node.alive:
                continue
            if node.role == "byzantine" and spec.delivery_failure_prob > 0:
                if self.rng("deliver", t, nid).random() < spec.delivery_failure_prob:
                    continue
            train_time = (
                cfg.timing.base_train_s
                * (node.shard.n / REFERENCE_SHARD_SIZE)
                / max(node.true_cap, 0.1)
            )
            done_at = train_time + node.rtt_ms / 1000.0
            timings[nid] = done_at
            if done_at > self.collect_timeout_s:
                continue
            updates.append(UpdateDelta(node=nid, delta=deltas[nid], n_k=node.shard.n))
            self.ledger.record(nid, steps_of[nid], min(1.0, cfg.dp.batch / node.shard.n))
        return updates, timings, diagnostics

    def roleplay(self, nid: int, t: int) -> str:
        """Effective behaviour of a node this round."""
        node = self.nodes[nid]
        kind = self.config.attack.kind
        if node.role == "unreliable":
            return "unreliable"
        if node.role != "byzantine":
            return "honest"
        if kind == "farming":
            return "gradient_flip" if adversary.is_farming_active(self.config.attack, t) else "honest"
        if kind in ("gradient_flip", "alie", "backdoor"):
            return kind if kind != "backdoor" else "honest"  # poison lives in the shard
        return "honest"

    # -- aggregation ---------------------------------------------------------

    def aggregate(self, updates: list, rep_snapshot: dict) -> np.ndarray:
        cfg = self.config
        mode = cfg.aggregator
        byz_bound = max(1, int(math.ceil(cfg.attack.byzantine_fraction * len(updates))))
        if mode == "rep_fedavg":
            from .aggregation import aggregation_weights, rep_fedavg

            weights = aggregation_weights(updates, rep_snapshot)
            return rep_fedavg(self.global_model, updates, weights)
        if mode == "fedavg":
            return baselines.fedavg(self.global_model, updates)
        if mode == "trimmed_mean":
            return baselines.trimmed_mean(self.global_model, updates, byz_bound)
        if mode == "krum":
            return baselines.krum(self.global_model, updates, byz_bound)
        if mode == "median":
            return baselines.coordinate_median(self.global_model, updates)
        if mode == "honest_only":
            honest = [u for u in updates if self.nodes[u.node].role == "honest"]
            return baselines.fedavg(self.global_model, honest or updates)
        raise ValueError(f"unknown aggregator {mode!r}")

    # -- consensus -----------------------------------------------------------

    def consensus_decide(self, t: int, candidate: np.ndarray, oracle: int):
        """One fixed-weight decision epoch for this round's aggregate.

        Returns (committed, proposal payload or corrupted stand-in, record).
        """
        cfg = self.config
        op_class = cfg.quorum_class
        snapshot = self.build_snapshot(op_class)
        views = 0
        leader = consensus.elect_leader(snapshot.weights, cfg.k_l, t, view=0)
        while not self.nodes[leader].alive:
            views += 1
            leader = consensus.elect_leader(snapshot.weights, cfg.k_l, t, view=views)

        leader_node = self.nodes[leader]
        adversarial_leader = leader_node.role == "sybil" or (
            leader_node.role == "byzantine"
            and cfg.attack.kind in ("alie", "farming")
            and self.roleplay(leader, t) != "honest"
        )
        if adversarial_leader:
            proposal_model = self.global_model - (candidate - self.global_model)
            oracle = int(
                learner.evaluate(proposal_model, self.val_shard.features, self.val_shard.labels)
                >= learner.evaluate(self.global_model, self.val_shard.features, self.val_shard.labels)
            )
        else:
            proposal_model = candidate

        digest = adjudication.schedule_hash("digest", t, leader, int(oracle))
        self.epoch_counter += 1
        proposal = consensus.Proposal(
            id=self.epoch_counter, op_class=op_class,
            content_digest=digest, proposer=leader, round_num=t,
        )
        epoch = consensus.EpochState(proposal=proposal, snapshot=snapshot, leader=leader)

        vote_rng = self.rng("vote", t)
        for nid in sorted(snapshot.weights):
            node = self.nodes[nid]
            if not node.alive:
                continue
            colluding = node.role == "sybil" or (
                node.role == "byzantine"
                and cfg.attack.kind in ("alie", "farming")
                and self.roleplay(nid, t) != "honest"
            )
            if colluding:
                # colluders coordinate: back the attacker, block the honest —
                # which also makes their vote histories identical and hence
                # visible to the chi-squared scan
                approve = adversarial_leader
            else:
                flip = vote_rng.random() < cfg.vote_eta
                approve = bool(oracle) ^ flip
            epoch.add_vote(nid, approve)
            self.vote_history.setdefault(nid, []).append(int(approve))
        status = consensus.tally(epoch)
        if status == consensus.PENDING:
            status = consensus.ABORTED
            epoch.status = status

        committed = status == consensus.COMMITTED
        latency = consensus.consensus_latency_s(self.mean_rtt_ms, views)
        record = {
            "round": t,
            "epoch": self.epoch_counter,
            "op_class": op_class,
            "quorum": consensus.quorum_threshold(op_class),
            "total_weight": snapshot.total,
            "approval_weight": epoch.approval_weight,
            "status": status,
            "views": views,
            "latency_s": latency,
            "oracle": oracle,
            "match": int(committed == bool(oracle)),
            "digest": digest,
            "leader": leader,
        }
        self.consensus_log.append(record)
        return committed, proposal_model, record

    # -- adjudication ---------------------------------------------------------

    def adjudicate_participants(self, t: int, updates: list) -> dict:
        cfg = self.config
        participants = {u.node for u in updates}

        def eligible(nid, exclude_participants):
            node = self.nodes[nid]
            return (
                node.alive
                and (not exclude_participants or nid not in participants)
                and self.score_of(nid) >= cfg.reputation.eligibility_floor
            )

        pool = [
            (nid, self.nodes[nid].region)
            for nid in sorted(self.nodes)
            if eligible(nid, exclude_participants=True)
        ]
        if len(pool) <= cfg.m_evaluators:
            # tiny evaluator bench: fellow participants may judge (never the
            # target itself, which select_evaluators enforces)
            pool = [
                (nid, self.nodes[nid].region)
                for nid in sorted(self.nodes)
                if eligible(nid, exclude_participants=False)
            ]
        outcomes = {}
        for u in sorted(updates, key=lambda u: u.node):
            evaluators = adjudication.select_evaluators(
                pool,
                cfg.m_evaluators,
                t,
                cfg.seed,
                target=u.node,
                previous=self.prev_evaluators.get(u.node, frozenset()),
            )
            shard_ids = adjudication.assign_shards(
                t, u.node, cfg.m_evaluators, len(self.val_subshards)
            )
            qualities = [
                adjudication.judge_update(self.global_model, u.delta, self.val_subshards[s])
                for s in shard_ids
            ]
            verdicts = adjudication.apply_vote_noise(
                qualities, cfg.noise, self.rng("adjudicate", t, u.node)
            )
            outcome = adjudication.adjudicate(verdicts)
            outcomes[u.node] = outcome
            self.prev_evaluators[u.node] = frozenset(evaluators)
            for ev, shard_id, quality, verdict in zip(evaluators, shard_ids, qualities, verdicts):
                self.adjudication_log.append(
                    ((t, u.node), ev, verdict, shard_id, quality)
                )
        return outcomes

    def apply_outcomes(self, outcomes: dict):
        for nid in sorted(outcomes):
            self.reputations.record(nid, self.config.domain, outcomes[nid])

    # -- anti-collusion --------------------------------------------------------

    def collusion_scan_maybe(self, t: int):
        cfg = self.config
        if cfg.scan_interval <= 0 or t == 0 or t % cfg.scan_interval != 0:
            return
        window = {
            nid: hist[-cfg.scan_window:]
            for nid, hist in self.vote_history.items()
            if self.nodes[nid].alive and len(hist) >= reputation.MIN_SCAN_VOTES
        }
        if len(window) < 2:
            return
        n_pairs = len(window) * (len(window) - 1) // 2
        # per-pair significance is Bonferroni-adjusted across the pair count:
        # shared ground truth correlates honest votes whenever decisions are
        # mixed, and at the raw per-pair level that correlation alone clears
        # p<0.01 for a measurable share of honest pairs
        params = replace(
            cfg.reputation, collusion_p=cfg.reputation.collusion_p / max(n_pairs, 1)
        )
        flagged_pairs = reputation.collusion_scan(window, params)
        flagged_nodes = sorted({n for pair in flagged_pairs for n in pair})
        for nid in flagged_nodes:
            self.reputations.record(nid, self.config.domain, 0)
            self.collusion_flags += 1

    # -- infrastructure metrics -------------------------------------------------

    def gossip_checkpoint(self, t: int, origin: int):
        cfg = self.config
        if not cfg.record_gossip:
            return None
        reps = self.reputation_snapshot()
        trace = network.gossip_broadcast(
            self.net,
            origin,
            fanout=cfg.gossip_fanout,
            ttl=cfg.gossip_ttl,
            rng=self.rng("gossip", t),
            rounds=max(cfg.gossip_ttl, 4),
            reputations=reps,
            queue_capacity=cfg.gossip_queue_capacity,
        )
        rounds_to_99 = next((i + 1 for i, c in enumerate(trace) if c >= 0.99), 0)
        period = (
            cfg.timing.gossip_base_period_s
            + cfg.timing.gossip_rtt_factor * self.mean_rtt_ms / 1000.0
        )
        stats = {
            "round": t,
            "coverage_r3": trace[2] if len(trace) > 2 else trace[-1],
            "rounds_to_99": rounds_to_99,
            "gossip_time_s": rounds_to_99 * period if rounds_to_99 else 0.0,
        }
        self.gossip_stats.append(stats)
        return stats

    # -- churn -------------------------------------------------------------------

    def churn_tick(self, t: int):
        cfg = self.config
        if cfg.churn_rate_per_min <= 0:
            self.churn_counts.append({"round": t, "departures": 0, "arrivals": 0, "returns": 0})
            return
        rng = self.rng("churn", t)
        fresh: list[int] = []

        def spawn() -> int:
            nid = network.make_node_id(rng)
            provider, region = network.REGIONS[int(rng.integers(0, len(network.REGIONS)))]
            network.attach_node(self.net, nid, provider, region, rng)
            self.nodes[nid] = make_sim_node(
                nid, provider, region, gpu=False, role="honest",
                joined_round=t, rng=rng, latency=cfg.latency,
            )
            fresh.append(nid)
            return nid

        events = network.churn_step(
            self.net,
            cfg.churn_rate_per_min,
            cfg.round_minutes,
            rng,
            round_num=t,
            cooldown_cycles=cfg.reputation.cooldown_cycles,
            spawn_node=spawn,
        )
        departures = arrivals = returns = 0
        for ev in events:
            if ev.kind == "depart":
                departures += 1
                if ev.node_id in self.nodes:
                    self.nodes[ev.node_id].alive = False
            elif ev.kind == "return":
                returns += 1
                self.nodes[ev.node_id].alive = True  # identity and trust state survive
            else:
                arrivals += 1
        self.churn_counts.append(
            {"round": t, "departures": departures, "arrivals": arrivals, "returns": returns}
        )

    # -- oracles -------------------------------------------------------------------

    def val_accuracy(self, model: np.ndarray) -> float:
        return learner.evaluate(model, self.val_shard.features, self.val_shard.labels)

    def test_accuracy(self, model: np.ndarray) -> float:
        return learner.evaluate(model, self.test_shard.features, self.test_shard.labels)


def make_sim_node(nid, provider, region, gpu, role, joined_round, rng, latency,
                  uniform_cap: bool = False) -> SimNode:
    true_cap = 1.0 if uniform_cap else float(rng.uniform(0.3, 1.0)) if gpu else float(rng.uniform(0.05, 0.3))
    announced = true_cap
    if role in ("byzantine", "unreliable"):
        announced = min(1.0, true_cap + 0.4)  # inflators; probes clamp this away
    base_load = float(rng.uniform(0.0, 0.3))
    ref_provider, ref_region = network.REGIONS[0]
    ref = network.NetNode(node_id=-1, provider=ref_provider, region=ref_region)
    own = network.NetNode(node_id=nid, provider=provider, region=region)
    rtt = network.LatencyModel().median_for(own, ref) if latency is None else latency.median_for(own, ref)
    return SimNode(
        node_id=nid,
        provider=provider,
        region=region,
        gpu=gpu,
        role=role,
        true_cap=true_cap,
        announced_cap=announced,
        base_load=base_load,
        lat_factor=selection.normalize_latency(rtt),
        rtt_ms=rtt,
        profile=selection.CapabilityProfile(cap=true_cap, load=base_load),
        joined_round=joined_round,
    )


def load_task(cfg: ScenarioConfig, nodes: dict, gpu_ids, task_seed: int):
    """Generate one training task: dataset, per-node shards (with any
    backdoor poisoning applied), and the public validation benchmark split
    into hash-addressable sub-shards."""
    ds = learner.generate_dataset(
        classes=cfg.learner.classes,
        d=cfg.learner.dim,
        n=cfg.learner.n_examples,
        class_separation=cfg.learner.class_separation,
        seed=task_seed,
    )
    train, val, test = learner.split_dataset(
        ds, cfg.learner.val_fraction, cfg.learner.test_fraction, seed=task_seed
    )
    shards = learner.partition_dirichlet(
        train, len(gpu_ids), cfg.learner.alpha_dir, seed=task_seed,
        classes=cfg.learner.classes,
    )
    poison_rng = substream(task_seed, "poison")
    for nid, shard in zip(gpu_ids, shards):
        if cfg.attack.kind == "backdoor" and nodes[nid].role == "byzantine":
            fx, fy = adversary.backdoor_poison(
                shard.features, shard.labels,
                cfg.attack.trigger_indices, cfg.attack.trigger_value,
                cfg.attack.target_label, cfg.attack.poison_fraction, poison_rng,
            )
            shard = learner.Shard(features=fx, labels=fy)
        nodes[nid].shard = shard

    n_sub = max(cfg.learner.num_val_shards, cfg.m_evaluators)
    splits = np.array_split(np.arange(val.n), n_sub)
    val_subshards = [
        learner.Shard(features=val.features[idx], labels=val.labels[idx]) for idx in splits
    ]
    return val, test, val_subshards


def build_state(cfg: ScenarioConfig) -> SimState:
    rng = substream(cfg.seed, "build")
    n_total = cfg.pools.total

    ids = sorted(network.make_node_id(rng) for _ in range(n_total))
    region_cycle = network.REGIONS[:1] if cfg.single_region else network.REGIONS
    regions = {nid: region_cycle[i % len(region_cycle)] for i, nid in enumerate(ids)}
    net = network.build_network(ids, regions, rng, k=cfg.dht_k)

    gpu_ids = ids[: cfg.pools.gpu]
    byz_count = int(round(cfg.attack.byzantine_fraction * len(gpu_ids)))
    byz_rng = substream(cfg.seed, "byzantine_pick")
    byz_ids = set(
        gpu_ids[i] for i in byz_rng.choice(len(gpu_ids), size=byz_count, replace=False)
    ) if byz_count else set()

    nodes = {}
    for i, nid in enumerate(ids):
        gpu = nid in set(gpu_ids)
        if nid in byz_ids:
            role = "unreliable" if cfg.attack.kind == "unreliable" else "byzantine"
        else:
            role = "honest"
        provider, region = regions[nid]
        nodes[nid] = make_sim_node(
            nid, provider, region, gpu=gpu, role=role,
            joined_round=-FOUNDING_AGE_CYCLES, rng=rng, latency=cfg.latency,
            uniform_cap=cfg.uniform_caps,
        )

    val, test, val_subshards = load_task(cfg, nodes, gpu_ids, task_seed=cfg.seed)

    pair_rng = substream(cfg.seed, "rtt")
    samples = []
    node_list = list(nodes.values())
    for _ in range(min(200, n_total * 2)):
        a, b = pair_rng.choice(len(node_list), size=2, replace=False)
        na, nb = node_list[a], node_list[b]
        samples.append(
            cfg.latency.median_for(
                network.NetNode(na.node_id, na.provider, na.region),
                network.NetNode(nb.node_id, nb.provider, nb.region),
            )
        )
    mean_rtt = float(np.mean(samples))

    if cfg.timing.collect_timeout_s > 0:
        timeout = cfg.timing.collect_timeout_s
    else:
        # stand-in for "3x the median benign round": median honest train time
        # plus delivery at the mean RTT
        train_times = [
            cfg.timing.base_train_s * (n.shard.n / REFERENCE_SHARD_SIZE) / max(n.true_cap, 0.1)
            for n in nodes.values() if n.shard is not None
        ]
        timeout = 3.0 * (float(np.median(train_times)) + mean_rtt / 1000.0)

    reputations = ReputationTable(cfg.reputation)
    if cfg.founder_warm_obs > 0:
        # founders predate the run with a benign track record, so a single
        # noisy adjudication cannot crater an established identity
        for nid in ids:
            for _ in range(cfg.founder_warm_obs):
                reputations.record(nid, cfg.domain, 1)

    state = SimState(
        config=cfg,
        nodes=nodes,
        net=net,
        reputations=reputations,
        global_model=learner.init_model(cfg.learner.classes, cfg.learner.dim),
        val_shard=val,
        test_shard=test,
        val_subshards=val_subshards,
        ledger=learner.PrivacyLedger(),
        mean_rtt_ms=mean_rtt,
        collect_timeout_s=timeout,
    )
    return state


def inject_sybils_into_state(state: SimState, count: int, t: int):
    """Open-admission identity flood: fresh ids, prior trust, adversarial votes."""
    cfg = state.config
    rng = state.rng("sybil", t)
    new_ids = adversary.inject_sybils(state.net, count, rng)
    admitted_budget = int(math.floor(cfg.sybil.puzzle_admission_ratio * count))
    for i, nid in enumerate(sorted(new_ids)):
        net_node = state.net.nodes[nid]
        node = make_sim_node(
            nid, net_node.provider, net_node.region, gpu=False, role="sybil",
            joined_round=t, rng=rng, latency=cfg.latency,
        )
        # every identity posts the same kind of bond; the adversary skimps
        # per identity, which is what staking costs are supposed to force
        node.stake = cfg.sybil.stake_multiplier
        node.puzzle_admitted = i < admitted_budget
        state.nodes[nid] = node


@dataclass
class RunMetrics:
    """Per-round time series plus the logs the CSV outputs are built from."""

    config: ScenarioConfig
    rounds: list = field(default_factory=list)          # per-round dicts
    reputation_rows: list = field(default_factory=list)
    consensus_rows: list = field(default_factory=list)
    network_rows: list = field(default_factory=list)
    adjudication_rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def success_rate(self) -> float:
        if not self.rounds:
            return 0.0
        return float(np.mean([r["success"] for r in self.rounds]))

    def final_test_accuracy(self) -> float:
        return self.rounds[-1]["test_acc"] if self.rounds else 0.0

    def validation_correctness(self) -> float | None:
        if not self.consensus_rows:
            return None
        return float(np.mean([r["match"] for r in self.consensus_rows]))


ROUNDS_COLUMNS = [
    "round", "success", "completed_in_time", "min_updates_met", "quorum_approved",
    "no_regression", "updates_collected", "val_acc_before", "val_acc_after",
    "test_acc", "round_time_s", "leader", "views", "consensus_latency_s",
    "epsilon", "failure_reason",
]
REPUTATION_COLUMNS = ["round", "node", "role", "score", "uncertainty"]
CONSENSUS_COLUMNS = [
    "round", "epoch", "op_class", "quorum", "total_weight", "approval_weight",
    "status", "views", "latency_s", "oracle", "match",
]
NETWORK_COLUMNS = [
    "round", "alive", "departures", "arrivals", "returns",
    "gossip_coverage_r3", "gossip_rounds_to_99", "gossip_time_s", "mean_rtt_ms",
]
ADJUDICATION_COLUMNS = ["round", "target", "evaluator", "shard", "true_quality", "verdict"]


def run_scenario(cfg: ScenarioConfig) -> RunMetrics:
    """Execute the configured scenario; bitwise reproducible given the seed."""
    state = build_state(cfg)
    metrics = RunMetrics(config=cfg)

    gpu_ids = [nid for nid in sorted(state.nodes) if state.nodes[nid].gpu]
    for t in range(cfg.rounds):
        state.round_num = t
        if cfg.episode_rounds > 0 and t > 0 and t % cfg.episode_rounds == 0:
            # a fresh task enters the pipeline; the model carries over (and
            # re-trains), as does every trust trajectory — task turnover is
            # what keeps update quality observable round after round
            episode = t // cfg.episode_rounds
            task_seed = derive_seed(cfg.seed, "episode", episode)
            state.val_shard, state.test_shard, state.val_subshards = load_task(
                cfg, state.nodes, gpu_ids, task_seed=task_seed
            )
        state.churn_tick(t)
        if cfg.sybil.count and t == cfg.sybil.injection_round:
            inject_sybils_into_state(state, cfg.sybil.count, t)

        result = run_round(state, t)
        state.collusion_scan_maybe(t)

        eps = (
            state.ledger.worst_epsilon(cfg.dp.noise_multiplier, cfg.dp.delta)
            if cfg.dp.noise_multiplier > 0
            else 0.0
        )
        churn = state.churn_counts[-1] if state.churn_counts else {}
        gossip = state.gossip_stats[-1] if state.gossip_stats and state.gossip_stats[-1]["round"] == t else {}

        metrics.rounds.append(
            {
                "round": t,
                "success": int(result.success),
                "completed_in_time": int(result.completed_in_time),
                "min_updates_met": int(result.min_updates_met),
                "quorum_approved": int(result.quorum_approved),
                "no_regression": int(result.no_regression),
                "updates_collected": result.updates_collected,
                "val_acc_before": round(result.val_acc_before, 6),
                "val_acc_after": round(result.val_acc_after, 6),
                "test_acc": round(result.test_acc, 6),
                "round_time_s": round(result.round_time_s, 3),
                "leader": result.leader,
                "views": result.views,
                "consensus_latency_s": round(result.consensus_latency_s, 4),
                "epsilon": round(eps, 4) if math.isfinite(eps) else "inf",
                "failure_reason": result.failure_reason,
            }
        )
        for nid in sorted(state.nodes):
            node = state.nodes[nid]
            metrics.reputation_rows.append(
                {
                    "round": t,
                    "node": nid,
                    "role": node.role,
                    "score": round(state.score_of(nid), 6),
                    "uncertainty": round(
                        state.reputations.uncertainty(nid, cfg.domain), 6
                    ),
                }
            )
        metrics.network_rows.append(
            {
                "round": t,
                "alive": sum(n.alive for n in state.nodes.values()),
                "departures": churn.get("departures", 0),
                "arrivals": churn.get("arrivals", 0),
                "returns": churn.get("returns", 0),
                "gossip_coverage_r3": round(gossip.get("coverage_r3", 0.0), 4),
                "gossip_rounds_to_99": gossip.get("rounds_to_99", 0),
                "gossip_time_s": round(gossip.get("gossip_time_s", 0.0), 3),
                "mean_rtt_ms": round(state.mean_rtt_ms, 3),
            }
        )

    metrics.consensus_rows = [
        {k: rec[k] for k in CONSENSUS_COLUMNS} for rec in state.consensus_log
    ]
    metrics.adjudication_rows = [
        {
            "round": key[0],
            "target": key[1],
            "evaluator": evaluator,
            "shard": shard_id,
            "true_quality": quality,
            "verdict": verdict,
        }
        for key, evaluator, verdict, shard_id, quality in state.adjudication_log
    ]
    metrics.summary = summarize(state, metrics)
    return metrics


def summarize(state: SimState, metrics: RunMetrics) -> dict:
    cfg = state.config
    by_role: dict[str, list[float]] = {}
    for nid in sorted(state.nodes):
        by_role.setdefault(state.nodes[nid].role, []).append(state.score_of(nid))
    corr = metrics.validation_correctness()
    eps = state.ledger.worst_epsilon(cfg.dp.noise_multiplier, cfg.dp.delta) \
        if cfg.dp.noise_multiplier > 0 else 0.0
    return {
        "rounds": cfg.rounds,
        "round_success_rate": round(metrics.success_rate(), 4),
        "final_val_accuracy": metrics.rounds[-1]["val_acc_after"] if metrics.rounds else 0.0,
        "final_test_accuracy": metrics.final_test_accuracy(),
        "validation_correctness": round(corr, 4) if corr is not None else "absent",
        "median_score_by_role": {
            role: round(float(np.median(scores)), 4) for role, scores in sorted(by_role.items())
        },
        "worst_case_epsilon": round(eps, 4) if math.isfinite(eps) else "inf",
        "r_max": state.ledger.r_max,
        "collusion_flags": state.collusion_flags,
        "mean_round_time_s": round(
            float(np.mean([r["round_time_s"] for r in metrics.rounds])), 3
        ) if metrics.rounds else 0.0,
        "p95_round_time_s": round(
            float(np.percentile([r["round_time_s"] for r in metrics.rounds], 95)), 3
        ) if metrics.rounds else 0.0,
    }


def _write_csv(path: str, columns: list[str], rows: list[dict]):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})


def write_outputs(metrics: RunMetrics, out_dir: str):
    """Write rounds/reputation/consensus/network CSVs plus summary.txt."""
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(os.path.join(out_dir, "rounds.csv"), ROUNDS_COLUMNS, metrics.rounds)
    _write_csv(
        os.path.join(out_dir, "reputation.csv"), REPUTATION_COLUMNS, metrics.reputation_rows
    )
    _write_csv(
        os.path.join(out_dir, "consensus.csv"), CONSENSUS_COLUMNS, metrics.consensus_rows
    )
    _write_csv(os.path.join(out_dir, "network.csv"), NETWORK_COLUMNS, metrics.network_rows)
    _write_csv(
        os.path.join(out_dir, "adjudication.csv"), ADJUDICATION_COLUMNS,
        metrics.adjudication_rows,
    )
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        for key, value in metrics.summary.items():
            fh.write(f"{key}: {json.dumps(value) if isinstance(value, dict) else value}\n")


def validation_correctness(metrics: RunMetrics) -> float | None:
    """Fraction of consensus decisions agreeing with the benchmark oracle."""
    return metrics.validation_correctness()
