import numpy as np
import pytest

from nexus_sim.aggregation import UpdateDelta, aggregation_weights, rep_fedavg
from nexus_sim.baselines import coordinate_median, fedavg, krum, trimmed_mean


def updates_from(deltas, sizes):
    return [
        UpdateDelta(node=f"n{i}", delta=np.asarray(d, dtype=float), n_k=s)
        for i, (d, s) in enumerate(zip(deltas, sizes))
    ]


class TestAggregationWeights:
    def test_reputation_dominates_equal_sizes(self):
        ups = updates_from([[1.0], [1.0]], [100, 100])
        w = aggregation_weights(ups, {"n0": 0.8, "n1": 0.2})
        assert w["n0"] == pytest.approx(0.8)
        assert w["n1"] == pytest.approx(0.2)

    def test_equal_reputation_reduces_to_fedavg(self):
        ups = updates_from([[1.0], [1.0], [1.0]], [50, 30, 20])
        w = aggregation_weights(ups, {"n0": 0.37, "n1": 0.37, "n2": 0.37})
        assert w["n0"] == pytest.approx(0.5)
        assert w["n1"] == pytest.approx(0.3)
        assert w["n2"] == pytest.approx(0.2)

    def test_products_balance(self):
        ups = updates_from([[0.0], [0.0]], [200, 100])
        w = aggregation_weights(ups, {"n0": 0.5, "n1": 1.0})
        assert w["n0"] == pytest.approx(0.5)
        assert w["n1"] == pytest.approx(0.5)

    def test_weights_sum_to_one_and_bounded(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 12))
            ups = updates_from([[0.0]] * n, rng.integers(1, 500, size=n))
            reps = {f"n{i}": float(rng.random()) for i in range(n)}
            reps["n0"] = max(reps["n0"], 1e-3)
            w = aggregation_weights(ups, reps)
            assert sum(w.values()) == pytest.approx(1.0, abs=1e-12)
            assert all(0.0 <= v <= 1.0 for v in w.values())

    def test_zero_trust_everywhere_is_an_error(self):
        ups = updates_from([[1.0]], [10])
        with pytest.raises(ValueError, match="no trusted mass"):
            aggregation_weights(ups, {"n0": 0.0})

    def test_uniform_reputation_bitwise_equals_data_weights(self):
        # scores are rescaled by their max, so any uniform vector cancels exactly
        sizes = [37, 113, 59, 91]
        ups = updates_from([[0.0]] * 4, sizes)
        for r in (0.5, 0.6724, 0.553377):
            w_rep = aggregation_weights(ups, {u.node: r for u in ups})
            w_data = aggregation_weights(ups, {u.node: 1.0 for u in ups})
            for node in w_rep:
                assert w_rep[node] == w_data[node]  # bitwise


class TestRepFedavg:
    def test_zero_deltas_fixed_point(self):
        model = np.arange(5, dtype=float)
        ups = updates_from([np.zeros(5), np.zeros(5)], [10, 10])
        out = rep_fedavg(model, ups, {"n0": 0.5, "n1": 0.5})
        assert np.array_equal(out, model)

    def test_single_update_telescopes(self):
        model = np.zeros(3)
        local = np.array([1.0, -2.0, 3.0])
        ups = [UpdateDelta(node="a", delta=local - model, n_k=5)]
        out = rep_fedavg(model, ups, {"a": 1.0})
        assert np.allclose(out, local)

    def test_opposite_deltas_cancel(self):
        model = np.ones(4)
        v = np.array([0.5, -1.0, 2.0, 0.0])
        ups = updates_from([v, -v], [10, 10])
        out = rep_fedavg(model, ups, {"n0": 0.5, "n1": 0.5})
        assert np.allclose(out, model)

    def test_unnormalized_weights_rejected(self):
        ups = updates_from([[1.0]], [10])
        with pytest.raises(ValueError):
            rep_fedavg(np.zeros(1), ups, {"n0": 0.5})

    def test_dimension_mismatch_rejected(self):
        ups = [UpdateDelta(node="a", delta=np.zeros(3), n_k=5)]
        with pytest.raises(ValueError):
            rep_fedavg(np.zeros(4), ups, {"a": 1.0})

    def test_attenuation_tracks_reputation_decay(self):
        # once attacker trust has collapsed, the aggregate is close to the
        # honest-only average
        rng = np.random.default_rng(1)
        model = np.zeros(16)
        honest = [rng.normal(0.5, 0.1, size=16) for _ in range(8)]
        attacks = [-h for h in honest[:2]]
        ups = updates_from(honest + attacks, [100] * 10)
        reps = {f"n{i}": (0.9 if i < 8 else 0.03) for i in range(10)}
        w = aggregation_weights(ups, reps)
        mixed = rep_fedavg(model, ups, w)
        honest_only = fedavg(model, ups[:8])
        honest_delta_norm = np.linalg.norm(honest_only - model)
        assert np.linalg.norm(mixed - honest_only) <= 0.10 * honest_delta_norm


class TestBaselineAggregators:
    def test_fedavg_is_size_weighted(self):
        model = np.zeros(2)
        ups = updates_from([[1.0, 0.0], [0.0, 1.0]], [300, 100])
        out = fedavg(model, ups)
        assert np.allclose(out, [0.75, 0.25])

    def test_trimmed_mean_drops_extremes(self):
        model = np.zeros(1)
        ups = updates_from([[0.9], [1.0], [1.1], [100.0], [-100.0]], [1] * 5)
        out = trimmed_mean(model, ups, byzantine_bound=1)
        assert out[0] == pytest.approx(1.0)

    def test_median_robust_to_minority(self):
        model = np.zeros(1)
        ups = updates_from([[1.0], [1.1], [0.9], [50.0], [60.0]], [1] * 5)
        assert coordinate_median(model, ups)[0] == pytest.approx(1.1)

    def test_krum_picks_a_clustered_update(self):
        rng = np.random.default_rng(2)
        model = np.zeros(8)
        cluster = [rng.normal(1.0, 0.05, size=8) for _ in range(6)]
        outliers = [rng.normal(-20.0, 0.05, size=8) for _ in range(2)]
        ups = updates_from(cluster + outliers, [1] * 8)
        out = krum(model, ups, byzantine_bound=2)
        assert np.linalg.norm(out - np.ones(8)) < 1.0
