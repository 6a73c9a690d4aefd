import numpy as np
import pytest

from nexus_sim.adjudication import (
    NoiseModel,
    adjudicate,
    agreement_probability,
    apply_vote_noise,
    assign_shards,
    judge_update,
    majority_error_independent,
    measure_agreement,
    select_evaluators,
    simulate_votes,
)
from nexus_sim.learner import DPConfig, Shard, generate_dataset, init_model, local_train_dpsgd
from nexus_sim.rng import substream


class TestAssignShards:
    def test_deterministic(self):
        assert assign_shards(5, 12345, 3, 16) == assign_shards(5, 12345, 3, 16)

    def test_exhaustive_when_tight(self):
        assert sorted(assign_shards(9, 7, 3, 3)) == [0, 1, 2]

    def test_indices_distinct_and_in_range(self):
        for t in range(30):
            idx = assign_shards(t, t * 31 + 7, 5, 12)
            assert len(set(idx)) == 5
            assert all(0 <= i < 12 for i in idx)

    def test_rejects_too_few_shards(self):
        with pytest.raises(ValueError):
            assign_shards(0, 0, 4, 3)

    def test_roughly_uniform_over_many_schedules(self):
        num_shards = 8
        counts = np.zeros(num_shards)
        trials = 10_000
        for t in range(trials):
            for i in assign_shards(t, t * 1_000_003 + 17, 3, num_shards):
                counts[i] += 1
        expected = counts.sum() / num_shards
        assert np.all(np.abs(counts - expected) <= 0.10 * expected)


class TestSelectEvaluators:
    def make_candidates(self):
        return [(f"n{i}", f"region{i % 3}") for i in range(9)]

    def test_one_per_region_when_spread(self):
        chosen = select_evaluators(self.make_candidates(), 3, t=1, seed=0)
        regions = {int(n[1:]) % 3 for n in chosen}
        assert len(regions) == 3

    def test_single_region_takes_all(self):
        cands = [("a", "r0"), ("b", "r0"), ("c", "r0")]
        assert sorted(select_evaluators(cands, 3, t=0, seed=0)) == ["a", "b", "c"]

    def test_target_never_selected(self):
        cands = self.make_candidates()
        for t in range(10):
            assert "n4" not in select_evaluators(cands, 3, t=t, seed=1, target="n4")

    def test_deterministic(self):
        cands = self.make_candidates()
        assert select_evaluators(cands, 3, 5, 9) == select_evaluators(cands, 3, 5, 9)

    def test_previous_pairings_avoided_when_possible(self):
        cands = self.make_candidates()
        first = select_evaluators(cands, 3, t=1, seed=2, target="n0")
        second = select_evaluators(
            cands, 3, t=2, seed=2, target="n0", previous=frozenset(first)
        )
        assert not set(first) & set(second)

    def test_insufficient_candidates(self):
        with pytest.raises(ValueError, match="insufficient evaluators"):
            select_evaluators([("a", "r0"), ("b", "r0")], 3, 0, 0)


class TestSimulateVotes:
    def test_noiseless_votes_match_truth(self):
        rng = substream(0, "v")
        noise = NoiseModel(eta=0.0, rho=0.0)
        for q in (0, 1):
            assert simulate_votes(q, noise, 3, rng) == [q] * 3

    def test_independent_majority_error_matches_binomial(self):
        rng = substream(1, "mc")
        noise = NoiseModel(eta=0.15, rho=0.0)
        trials = 200_000
        wrong = 0
        for _ in range(trials):
            wrong += adjudicate(simulate_votes(1, noise, 3, rng)) == 0
        exact = majority_error_independent(0.15, 3)
        assert exact == pytest.approx(0.06075, abs=1e-9)  # 3 eta^2 (1-eta) + eta^3
        se = np.sqrt(exact * (1 - exact) / trials)
        assert wrong / trials == pytest.approx(exact, abs=3 * se + 2e-3)

    def test_full_correlation_collapses_to_single_draw(self):
        rng = substream(2, "mc")
        noise = NoiseModel(eta=0.15, rho=0.999999)
        trials = 100_000
        wrong = sum(
            adjudicate(simulate_votes(1, noise, 3, rng)) == 0 for _ in range(trials)
        )
        assert wrong / trials == pytest.approx(0.15, abs=0.004)

    def test_apply_vote_noise_respects_per_shard_truth(self):
        rng = substream(3, "v")
        noise = NoiseModel(eta=0.0, rho=0.0)
        assert apply_vote_noise([1, 0, 1], noise, rng) == [1, 0, 1]


class TestAdjudicate:
    def test_majorities(self):
        assert adjudicate([1, 1, 0]) == 1
        assert adjudicate([0, 0, 1]) == 0
        assert adjudicate([1, 1, 1]) == 1

    def test_symmetry_under_permutation(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            verdicts = list((rng.random(5) < 0.5).astype(int))
            shuffled = list(rng.permutation(verdicts))
            assert adjudicate(verdicts) == adjudicate(shuffled)

    def test_rejects_even_or_short(self):
        for bad in ([], [1, 0], [1], [1, 0, 1, 0]):
            with pytest.raises(ValueError):
                adjudicate(bad)


@pytest.fixture(scope="module")
def trained_setup():
    ds = generate_dataset(classes=4, d=8, n=1200, class_separation=8.0, seed=11)
    shard = Shard(features=ds.features, labels=ds.labels)
    model = init_model(4, 8)
    dp = DPConfig(clip_norm=float("inf"), noise_multiplier=0.0, batch=32,
                  local_epochs=8, learning_rate=0.2)
    trained, _ = local_train_dpsgd(model, shard, dp, substream(0, "judge"), classes=4, d=8)
    return trained, shard


class TestJudgeUpdate:
    def test_zero_delta_is_positive(self, trained_setup):
        model, shard = trained_setup
        assert judge_update(model, np.zeros_like(model), shard) == 1

    def test_destroying_converged_model_is_negative(self, trained_setup):
        model, shard = trained_setup
        assert judge_update(model, -model, shard) == 0

    def test_true_gradient_step_is_positive(self, trained_setup):
        _, shard = trained_setup
        fresh = init_model(4, 8)
        dp = DPConfig(clip_norm=float("inf"), noise_multiplier=0.0, batch=32,
                      local_epochs=1, learning_rate=0.2)
        stepped, _ = local_train_dpsgd(fresh, shard, dp, substream(1, "judge"), classes=4, d=8)
        assert judge_update(fresh, stepped - fresh, shard) == 1

    def test_dimension_mismatch(self, trained_setup):
        model, shard = trained_setup
        with pytest.raises(ValueError):
            judge_update(model, np.zeros(len(model) + 1), shard)


class TestMeasureAgreement:
    def log_from_votes(self, eta, rho, n_adj, seed):
        rng = substream(seed, "agree")
        noise = NoiseModel(eta=eta, rho=rho)
        log = []
        for a in range(n_adj):
            truth = a % 2
            for ev, verdict in enumerate(simulate_votes(truth, noise, 3, rng)):
                log.append((a, f"e{ev}", verdict))
        return log

    def test_identical_logs_agree_fully(self):
        log = [(a, e, a % 2) for a in range(30) for e in ("x", "y")]
        agreement, _ = measure_agreement(log, eta=0.15)
        assert agreement == 1.0

    def test_round_trip_recovers_rho(self):
        for rho in (0.0, 0.22, 0.5):
            log = self.log_from_votes(0.15, rho, 40_000, seed=int(rho * 100))
            agreement, implied = measure_agreement(log, eta=0.15)
            assert implied == pytest.approx(rho, abs=0.05)
            assert agreement == pytest.approx(agreement_probability(0.15, rho), abs=0.01)

    def test_fair_coin_logs_agree_half(self):
        rng = substream(9, "coin")
        log = []
        for a in range(20_000):
            for ev in range(2):
                log.append((a, f"e{ev}", int(rng.random() < 0.5)))
        agreement, _ = measure_agreement(log, eta=0.5)
        assert agreement == pytest.approx(0.5, abs=0.01)

    def test_insufficient_data(self):
        with pytest.raises(ValueError, match="insufficient"):
            measure_agreement([(0, "a", 1), (0, "b", 1)], eta=0.15)
