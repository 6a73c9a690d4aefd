"""Experiment presets: desk-scale reproductions of the ten evaluation
scenarios, each expanded into named comparison arms.

The default scale keeps 100 nodes (20-node GPU training pool); `scale`
multiplies the population toward the thousand-node setting. Attack
fractions, quorum thresholds, and reputation parameters stay unscaled.

Shared calibration notes for the toy task:
  - Data is a separable Gaussian mixture; accuracy saturates within a
    couple of aggregated rounds, so scenarios that need per-round update
    quality to stay observable rotate a fresh task in every few rounds
    (episode_rounds) instead of grinding a converged model.
  - Per-example clipping at 0.5 plus weight decay keeps local updates and
    model scale commensurate across a whole run, and founders carry a
    small prior track record so a single noisy adjudication cannot crater
    an established identity.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .adjudication import NoiseModel
from .adversary import AttackSpec
from .config import (
    LearnerConfig,
    PoolConfig,
    ScenarioConfig,
    SybilConfig,
    TimingConfig,
)
from .learner import DPConfig

EXPERIMENT_IDS = tuple(f"exp{i}" for i in range(1, 11))

BASE_SEED = 20_240_501


@dataclass(frozen=True)
class ExperimentSpec:
    exp_id: str
    title: str
    arms: tuple          # of (arm_name, ScenarioConfig)
    notes: str = ""

    def arm(self, name: str) -> ScenarioConfig:
        for arm_name, cfg in self.arms:
            if arm_name == name:
                return cfg
        raise KeyError(name)


def _base(scale: int, seed: int = BASE_SEED) -> ScenarioConfig:
    return ScenarioConfig(
        seed=seed,
        rounds=40,
        k_train=10 * scale,
        pools=PoolConfig(gpu=20 * scale, cpu=80 * scale),
        learner=LearnerConfig(
            n_examples=4000 * scale, class_separation=6.0, alpha_dir=1e6,
            num_val_shards=8,
        ),
        dp=DPConfig(noise_multiplier=0.0, clip_norm=0.5, batch=8,
                    local_epochs=1, learning_rate=0.1, weight_decay=0.1),
        noise=NoiseModel(eta=0.15, rho=0.22),
        vote_eta=0.15,
        founder_warm_obs=1,
    )


def experiment_preset(exp_id: str, scale: int = 1) -> ExperimentSpec:
    """Return the named experiment expanded into its comparison arms."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    builders = {
        "exp1": _exp1, "exp2": _exp2, "exp3": _exp3, "exp4": _exp4, "exp5": _exp5,
        "exp6": _exp6, "exp7": _exp7, "exp8": _exp8, "exp9": _exp9, "exp10": _exp10,
    }
    if exp_id not in builders:
        raise ValueError(f"unknown experiment id {exp_id!r}")
    return builders[exp_id](scale)


def _exp1(scale: int) -> ExperimentSpec:
    # aggregator comparison in a plain FL loop (no quorum gate), so baseline
    # methods are not quietly rescued by the trust pipeline's validation;
    # extreme label skew is what lets a flipped update cancel a class
    base = replace(
        _base(scale, seed=BASE_SEED + 10),
        rounds=40,
        validation_gate=False,
        learner=replace(_base(scale).learner, alpha_dir=0.05),
    )
    flip = AttackSpec(kind="gradient_flip", byzantine_fraction=0.2)
    arms = []
    for agg in ("rep_fedavg", "fedavg", "trimmed_mean", "krum"):
        arms.append((f"{agg}_benign", replace(base, aggregator=agg)))
        arms.append((f"{agg}_flip20", replace(base, aggregator=agg, attack=flip)))
    arms.append(("honest_only_flip20", replace(base, aggregator="honest_only", attack=flip)))
    return ExperimentSpec(
        "exp1", "FL convergence and robustness under gradient flipping",
        tuple(arms),
        notes="final test accuracy per aggregator; flipped updates cancel their "
              "class twins under extreme label skew",
    )


def _exp2(scale: int) -> ExperimentSpec:
    base = replace(
        _base(scale),
        rounds=40,
        scan_interval=10,
        scan_window=60,
        learner=replace(_base(scale).learner, alpha_dir=0.05),
    )
    attacks = {
        "flip": AttackSpec(kind="gradient_flip", byzantine_fraction=0.2),
        "alie": AttackSpec(kind="alie", byzantine_fraction=0.2, alie_z=1.0),
        "backdoor": AttackSpec(
            kind="backdoor", byzantine_fraction=0.2,
            trigger_indices=(0, 1, 2), trigger_value=4.0, target_label=0,
            poison_fraction=0.5,
        ),
    }
    arms = []
    for attack_name, spec in attacks.items():
        for agg in ("rep_fedavg", "fedavg", "trimmed_mean", "krum"):
            arms.append((f"{attack_name}_{agg}", replace(base, aggregator=agg, attack=spec)))
    return ExperimentSpec(
        "exp2", "Multi-attack resilience (clean test accuracy under attack)",
        tuple(arms),
        notes="backdoor arms report clean accuracy; ALIE colluders vote together "
              "and are exposed to the chi-squared scan",
    )


def _exp3(scale: int) -> ExperimentSpec:
    # plain FL loop: the tradeoff concerns learner utility, and the quorum
    # gate would otherwise filter the noise damage out of the model instead
    # of letting it show up in accuracy
    base = replace(
        _base(scale),
        rounds=30,
        validation_gate=False,
        learner=replace(_base(scale).learner, class_separation=4.0),
        dp=DPConfig(noise_multiplier=0.0, clip_norm=0.5, batch=16,
                    local_epochs=2, learning_rate=0.05, weight_decay=0.05),
    )
    arms = tuple(
        (f"sigma_{str(sig).replace('.', 'p')}",
         replace(base, dp=replace(base.dp, noise_multiplier=sig)))
        for sig in (0.0, 0.5, 1.1, 2.0)
    )
    return ExperimentSpec(
        "exp3", "Record-level DP utility tradeoff over the noise multiplier",
        arms,
        notes="accuracy declines monotonically with sigma; the accountant "
              "reports the worst-case per-node epsilon",
    )


def _exp4(scale: int) -> ExperimentSpec:
    base = replace(
        _base(scale),
        rounds=40,
        episode_rounds=8,
        min_updates=8 * scale,
        timing=TimingConfig(base_train_s=5.0, collect_timeout_s=8.0),
        attack=AttackSpec(kind="unreliable", byzantine_fraction=0.2, failure_prob=0.4),
    )
    arms = tuple(
        (strategy, replace(base, selection_strategy=strategy))
        for strategy in ("random", "capability", "load_balanced", "reputation")
    )
    return ExperimentSpec(
        "exp4", "Participant selection impact with 20% unreliable candidates",
        arms,
        notes="an 8s collection window punishes slow picks; unreliable picks "
              "cost quorum rejections; success needs 8 of 10 updates in time",
    )


def _exp5(scale: int) -> ExperimentSpec:
    base = replace(
        _base(scale),
        rounds=80,
        k_train=12 * scale,
        founder_warm_obs=12,
        quorum_class="model_checkpoint",
        record_gossip=False,
    )
    honest = 100 * scale
    arms = []
    for pct in (0, 10, 20, 30):
        sybil = SybilConfig(count=honest * pct // 100, injection_round=24)
        for weighting in ("reputation", "puzzle", "equal", "stake"):
            arms.append(
                (f"sybil{pct}_{weighting}",
                 replace(base, sybil=sybil, consensus_weighting=weighting))
            )
    return ExperimentSpec(
        "exp5", "Model validation correctness under open-admission Sybil attack",
        tuple(arms),
        notes="checkpoint-class quorum (0.75); founders carry 12 prior "
              "adjudications so they clear the uncertainty gate while fresh "
              "sybils stay locked out",
    )


def _exp6(scale: int) -> ExperimentSpec:
    base = replace(_base(scale), rounds=40)
    arms = []
    for alpha in (0.1, 0.3, 0.5, 1.0):
        lrn = replace(base.learner, alpha_dir=alpha)
        arms.append((f"alpha_{str(alpha).replace('.', 'p')}_rep",
                     replace(base, learner=lrn, aggregator="rep_fedavg")))
        arms.append((f"alpha_{str(alpha).replace('.', 'p')}_fedavg",
                     replace(base, learner=lrn, aggregator="fedavg")))
    return ExperimentSpec(
        "exp6", "Non-IID sensitivity across Dirichlet concentrations",
        tuple(arms),
    )


def _exp7(scale: int) -> ExperimentSpec:
    arms = []
    for n in (64, 256, 1024):
        gpu = max(8, n // 5)
        arms.append(
            (f"n{n}",
             replace(
                 _base(1),
                 rounds=3,
                 k_train=max(4, gpu // 2),
                 pools=PoolConfig(gpu=gpu, cpu=n - gpu),
                 learner=replace(_base(1).learner, n_examples=40 * gpu),
             ))
        )
    return ExperimentSpec(
        "exp7", "Infrastructure scalability: routing hops and gossip convergence",
        tuple(arms),
        notes="paired with dedicated lookup sampling; training is incidental here",
    )


def _exp8(scale: int) -> ExperimentSpec:
    base = replace(_base(scale), rounds=20)
    return ExperimentSpec(
        "exp8", "Cross-cloud deployment overhead",
        (
            ("intra_cloud", replace(base, single_region=True)),
            ("cross_cloud", base),
        ),
        notes="compare round time, gossip convergence time, and consensus latency",
    )


def _exp9(scale: int) -> ExperimentSpec:
    base = replace(_base(scale), rounds=40, churn_rate_per_min=0.10, episode_rounds=8)
    return ExperimentSpec(
        "exp9", "Churn resilience at 10%/min Poisson node turnover",
        (
            ("reputation", base),
            ("random", replace(base, selection_strategy="random")),
        ),
        notes="departing nodes keep scores when returning inside the cooldown window",
    )


def _exp10(scale: int) -> ExperimentSpec:
    n = 100 * scale
    base = replace(
        _base(scale),
        rounds=100,
        k_train=45 * scale,
        pools=PoolConfig(gpu=n, cpu=0),
        learner=LearnerConfig(
            n_examples=60 * n, class_separation=6.0, alpha_dir=1e6, num_val_shards=8
        ),
        dp=DPConfig(noise_multiplier=0.0, clip_norm=0.5, batch=8,
                    local_epochs=1, learning_rate=0.1, weight_decay=0.0),
        attack=AttackSpec(
            kind="gradient_flip", byzantine_fraction=0.2, delivery_failure_prob=0.4
        ),
        uniform_caps=True,
        record_gossip=False,
        episode_rounds=8,
        founder_warm_obs=1,
    )
    return ExperimentSpec(
        "exp10", "Reputation trajectory separation with 20% Byzantine nodes",
        (("dynamics", base),),
        notes="every node trains so every node accrues evidence; Byzantine nodes "
              "corrupt delivered updates and drop 40% of their rounds; a fresh "
              "task rotates in every 8 rounds so update quality stays observable "
              "instead of dissolving into post-convergence ties",
    )
