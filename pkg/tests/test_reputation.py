import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nexus_sim.reputation import (
    BetaReputation,
    ReputationParams,
    SeparationParams,
    collusion_scan,
    effective_error,
    expected_gap,
    is_gated,
    score,
    uncertainty,
    update,
)

PARAMS = ReputationParams()


def run_updates(outcomes, aging=0.95):
    rep = BetaReputation()
    params = ReputationParams(aging=aging)
    for o in outcomes:
        rep = update(rep, o, params)
    return rep


class TestUpdate:
    def test_single_positive_outcome(self):
        rep = update(BetaReputation(), 1, PARAMS)
        assert rep.alpha == pytest.approx(1.95)
        assert rep.beta == pytest.approx(0.95)
        assert rep.interactions == 1

    def test_no_aging_is_beta_bernoulli_counting(self):
        rep = update(BetaReputation(), 0, ReputationParams(aging=1.0))
        assert (rep.alpha, rep.beta) == (1.0, 2.0)

    def test_hundred_successes_drive_score_high(self):
        # alpha's fixed point is 1/(1 - aging) = 20 while beta decays to 0
        rep = run_updates([1] * 100)
        assert score(rep) > 0.95

    def test_rejects_non_binary_outcome(self):
        with pytest.raises(ValueError):
            update(BetaReputation(), 2, PARAMS)


class TestScoreAndUncertainty:
    def test_fresh_prior(self):
        rep = BetaReputation()
        assert score(rep) == 0.5
        assert uncertainty(rep) == 0.5

    def test_score_after_one_success(self):
        assert score(BetaReputation(alpha=1.95, beta=0.95)) == pytest.approx(
            0.6724137931, abs=1e-9
        )

    def test_symmetric_masses_score_half(self):
        for k in (0.3, 1.0, 7.5):
            assert score(BetaReputation(alpha=k, beta=k)) == 0.5

    def test_uncertainty_arithmetic(self):
        assert uncertainty(BetaReputation(alpha=6, beta=6)) == pytest.approx(1 / 12)

    def test_uncertainty_decreases_with_unaged_evidence(self):
        params = ReputationParams(aging=1.0)
        rep = BetaReputation()
        for o in (0, 1, 1, 0, 1):
            nxt = update(rep, o, params)
            assert uncertainty(nxt) < uncertainty(rep)
            rep = nxt

    @given(st.lists(st.integers(min_value=0, max_value=1), max_size=300))
    def test_score_strictly_inside_unit_interval(self, outcomes):
        rep = run_updates(outcomes)
        assert 0.0 < score(rep) < 1.0

    @given(st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=200))
    def test_no_aging_matches_posterior_mean(self, outcomes):
        rep = run_updates(outcomes, aging=1.0)
        posterior = (1 + sum(outcomes)) / (2 + len(outcomes))
        assert score(rep) == pytest.approx(posterior, abs=1e-12)

    @given(st.lists(st.integers(min_value=0, max_value=1), max_size=100))
    def test_prepended_success_never_lowers_score(self, outcomes):
        assert score(run_updates([1] + outcomes)) >= score(run_updates(outcomes)) - 1e-12

    def test_identical_histories_identical_scores(self):
        a = run_updates([1, 0, 1, 1, 0])
        b = run_updates([1, 0, 1, 1, 0])
        assert score(a) == score(b)


class TestExpectedGap:
    def test_zero_rounds(self):
        assert expected_gap(SeparationParams(0.9, 0.2, 0.95, 0)) == 0.0

    def test_one_round_closed_form(self):
        gap = expected_gap(SeparationParams(0.9, 0.2, 0.95, 1))
        assert gap == pytest.approx(0.7 / 2.9, abs=1e-12)

    def test_limit_is_success_rate_difference(self):
        gap = expected_gap(SeparationParams(0.9, 0.2, 0.95, 100000))
        assert gap == pytest.approx(0.7, abs=1e-9)

    def test_monte_carlo_agreement_small(self):
        # empirical mean gap of discounted-Bernoulli trajectories vs closed form
        rng = np.random.default_rng(7)
        n, t, lam = 1000, 10, 0.95
        for p_h, p_b in [(0.9, 0.2), (0.8, 0.4)]:
            gaps = []
            for p in (p_h, p_b):
                alpha = np.ones(n)
                beta = np.ones(n)
                for _ in range(t):
                    o = rng.random(n) < p
                    alpha = lam * alpha + o
                    beta = lam * beta + ~o
                gaps.append((alpha / (alpha + beta)).mean())
            expected = expected_gap(SeparationParams(p_h, p_b, lam, t))
            assert gaps[0] - gaps[1] == pytest.approx(expected, abs=0.02)


class TestEffectiveError:
    def test_paper_operating_points(self):
        assert effective_error(0.15, 0.3, 3) == pytest.approx(0.1755, abs=5e-5)
        assert effective_error(0.15, 0.22, 3) == pytest.approx(0.1687, abs=5e-5)

    def test_uncorrelated_case(self):
        for m in (1, 3, 9):
            assert effective_error(0.15, 0.0, m) == 0.15

    def test_monotone_in_rho_and_m(self):
        rhos = np.linspace(0, 0.9, 10)
        vals = [effective_error(0.3, r, 5) for r in rhos]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        ms = range(1, 12)
        vals = [effective_error(0.3, 0.5, m) for m in ms]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


class TestGating:
    def test_fresh_node_blocked_from_sensitive_ops(self):
        assert is_gated(BetaReputation(), 0, PARAMS, high_sensitivity=True)

    def test_proven_node_passes_both_gates(self):
        rep = run_updates([1] * 15, aging=1.0)  # u = 1/17 < 0.1
        assert uncertainty(rep) < 0.1
        assert not is_gated(rep, 150, PARAMS, high_sensitivity=True)

    def test_low_sensitivity_never_gated(self):
        assert not is_gated(BetaReputation(), 0, PARAMS, high_sensitivity=False)

    def test_aged_but_uncertain_node_still_blocked(self):
        rep = BetaReputation(alpha=2.0, beta=2.0)  # u = 0.25
        assert is_gated(rep, 500, PARAMS, high_sensitivity=True)


class TestCollusionScan:
    def test_identical_histories_flagged(self):
        rng = np.random.default_rng(0)
        shared = list((rng.random(100) < 0.5).astype(int))
        votes = {"a": shared, "b": list(shared), "c": list((rng.random(100) < 0.5).astype(int))}
        flagged = collusion_scan(votes, PARAMS)
        assert ("a", "b") in flagged

    def test_independent_coins_unflagged(self):
        rng = np.random.default_rng(42)
        votes = {
            f"n{i}": list((rng.random(100) < 0.5).astype(int)) for i in range(6)
        }
        assert collusion_scan(votes, PARAMS) == set()

    def test_below_minimum_votes_returns_empty(self):
        votes = {"a": [1] * 19, "b": [1] * 19}
        assert collusion_scan(votes, PARAMS) == set()

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            collusion_scan({"a": [0, 2] * 15, "b": [0, 1] * 15}, PARAMS)

    def test_constant_voters_carry_no_signal(self):
        votes = {"a": [1] * 40, "b": [1] * 40}
        assert collusion_scan(votes, PARAMS) == set()
