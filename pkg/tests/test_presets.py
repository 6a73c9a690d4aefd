import pytest

from nexus_sim.presets import EXPERIMENT_IDS, experiment_preset


class TestPresetCatalog:
    def test_all_ids_build(self):
        for exp_id in EXPERIMENT_IDS:
            spec = experiment_preset(exp_id)
            assert spec.arms, exp_id

    def test_unknown_id(self):
        with pytest.raises(ValueError, match="unknown experiment id"):
            experiment_preset("exp11")

    def test_scale_multiplies_population(self):
        desk = experiment_preset("exp1").arms[0][1]
        big = experiment_preset("exp1", scale=10).arms[0][1]
        assert big.pools.total == 10 * desk.pools.total
        assert big.k_train == 10 * desk.k_train


class TestExp4:
    def test_strategy_sweep_with_unreliable_nodes(self):
        spec = experiment_preset("exp4")
        names = {name for name, _ in spec.arms}
        assert names == {"random", "capability", "load_balanced", "reputation"}
        for _, cfg in spec.arms:
            assert cfg.attack.kind == "unreliable"
            assert cfg.attack.byzantine_fraction == pytest.approx(0.2)
            assert cfg.attack.failure_prob == pytest.approx(0.4)


class TestExp5:
    def test_sybil_counts_and_weightings(self):
        spec = experiment_preset("exp5")
        counts = {cfg.sybil.count for _, cfg in spec.arms}
        assert counts == {0, 10, 20, 30}  # 0/10/20/30% of 100 honest nodes
        weightings = {cfg.consensus_weighting for _, cfg in spec.arms}
        assert weightings == {"reputation", "puzzle", "equal", "stake"}
        assert len(spec.arms) == 16

    def test_checkpoint_quorum_class(self):
        spec = experiment_preset("exp5")
        assert all(cfg.quorum_class == "model_checkpoint" for _, cfg in spec.arms)


class TestExp6:
    def test_dirichlet_sweep(self):
        spec = experiment_preset("exp6")
        alphas = {cfg.learner.alpha_dir for _, cfg in spec.arms}
        assert alphas == {0.1, 0.3, 0.5, 1.0}
        aggs = {cfg.aggregator for _, cfg in spec.arms}
        assert aggs == {"rep_fedavg", "fedavg"}


class TestExp10:
    def test_byzantine_share_and_failure(self):
        cfg = experiment_preset("exp10").arm("dynamics")
        assert cfg.pools.total == 100
        assert cfg.attack.byzantine_fraction == pytest.approx(0.2)
        assert cfg.attack.delivery_failure_prob == pytest.approx(0.4)
        assert cfg.reputation.aging == pytest.approx(0.95)
        assert cfg.noise.eta == pytest.approx(0.15)
        assert cfg.noise.rho == pytest.approx(0.22)
        assert cfg.m_evaluators == 3


class TestArmsAreValidScenarios:
    @pytest.mark.parametrize("exp_id", EXPERIMENT_IDS)
    def test_configs_validate(self, exp_id):
        for name, cfg in experiment_preset(exp_id).arms:
            assert cfg.seed is not None
            assert cfg.rounds >= 0, f"{exp_id}/{name}"
