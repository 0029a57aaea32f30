"""
Tests for closed forms, the threshold-policy chains, Algorithm 1 and the oracles.
"""

import math

import numpy as np
import pytest
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from utils.access_protocols import grant_based_rho
from utils.aoi_analysis import (
    INFINITE_AAOI, PROB_EDGE, algorithm1_aaoi, analysis_row, baseline_aaoi, baseline_steady_state,
    baseline_transition_matrix, brute_force_steady_state, effective_activation,
    grant_based_threshold_rho, joint_horizon, joint_transition_matrix, periodic_policy_aaoi,
    solve_threshold_pairs, threshold_steady_state, threshold_transition_matrix
)
from utils.errors import ConvergenceError, DomainError, TruncationError
from utils.scheduling import ThresholdPolicy

RHO = 0.6065


class TestBaseline:
    """Memoryless activation: AAoI = 1/(eps*rho)."""

    def test_base_point(self):
        """eps=0.05 at the base-point rho gives about 32.976."""
        assert baseline_aaoi(0.05, RHO) == pytest.approx(32.976, abs=1e-3), "Base-point baseline AAoI"

    def test_always_successful(self):
        """Updating every slot keeps the AoI at one."""
        assert baseline_aaoi(1.0, 1.0) == 1.0, "eps = rho = 1 should give AAoI 1"

    def test_zero_rate_is_infinite(self):
        """No activation or no success never refreshes the AoI."""
        assert baseline_aaoi(0.0, 0.5) == INFINITE_AAOI, "eps = 0 should be infinite"
        assert baseline_aaoi(0.5, 0.0) == math.inf, "rho = 0 should be infinite"

    def test_out_of_domain(self):
        """Probabilities outside [0, 1] are rejected."""
        with pytest.raises(DomainError):
            baseline_aaoi(-0.1, 0.5)
        with pytest.raises(DomainError):
            baseline_aaoi(2.0, 0.9)

    def test_steady_state_mass_and_mean(self):
        """Geometric interval law: unit mass, mean 1/p_u, strictly decreasing."""
        dist = baseline_steady_state(0.03)
        assert math.fsum(dist.probs) == pytest.approx(1.0, abs=1e-12), "Mass should be one"
        assert dist.mean() == pytest.approx(1 / 0.03, rel=1e-10), "Mean should be 1/p_u"
        assert np.all(np.diff(dist.probs) < 0), "Probabilities should decrease"

    def test_steady_state_matches_power_iteration(self):
        """Rows below the truncation cap of the explicit chain are exact."""
        exact = baseline_steady_state(0.1).probs[:199]
        brute = brute_force_steady_state(baseline_transition_matrix(0.1, 200))[:199]
        assert np.allclose(exact, brute, rtol=0, atol=1e-12), "Closed form should match power iteration"


class TestThresholdSteadyState:
    """Stationary law of the inactivity interval."""

    def test_flat_then_geometric(self):
        """Flat up to sleep_thr + 1, then ratio 1 - base_prob."""
        probs = threshold_steady_state(ThresholdPolicy(2, 6, 0.5)).probs
        ratios = probs[1:] / probs[:-1]
        assert np.allclose(ratios, [1.0, 1.0, 0.5, 0.5, 0.5]), f"Unexpected ratios {ratios}"
        assert math.fsum(probs) == pytest.approx(1.0, abs=1e-15), "Mass should be one"

    def test_periodic_activation(self):
        """sleep_thr = force_thr - 1 activates once per period whatever base_prob is."""
        assert effective_activation(ThresholdPolicy(19, 20, 0.3)) == pytest.approx(0.05, abs=1e-15), \
            "Period 20 should activate 5% of the time"

    def test_no_sleep_wide_force_is_geometric(self):
        """sleep_thr = 0 and a far force_thr reduce to the memoryless geometric law."""
        pol = ThresholdPolicy(0, 450, 0.05)
        probs = threshold_steady_state(pol).probs
        assert np.allclose(probs[1:] / probs[:-1], 0.95), "Ratio should be 1 - base_prob throughout"
        assert effective_activation(pol) == pytest.approx(0.05, rel=1e-8), "Activation should be base_prob"

    @pytest.mark.parametrize('base_prob', [0.05, 0.2, 0.5])
    def test_matches_power_iteration_everywhere(self, base_prob):
        """Every pair with force_thr <= 50, to 1e-10 per entry."""
        worst = 0.0
        for force_thr in range(1, 51):
            for sleep_thr in range(force_thr):
                pol = ThresholdPolicy(sleep_thr, force_thr, base_prob)
                exact = threshold_steady_state(pol).probs
                brute = brute_force_steady_state(threshold_transition_matrix(pol))
                worst = max(worst, float(np.max(np.abs(exact - brute))))
        assert worst < 1e-10, f"Worst entry error {worst:.2e}"


class TestThresholdPairs:
    """Pairs with the same long-run activation as eps."""

    def test_periodic_pair_included(self):
        """Period 1/eps is always a solution."""
        pairs = solve_threshold_pairs(0.05, 20)
        assert (19, 20) in {(p.sleep_thr, p.force_thr) for p in pairs}, "Periodic pair (19, 20) should be listed"

    def test_edge_solutions_collapse_to_periodic_pair(self):
        """With force_thr capped at 1/eps the only solution is the periodic pair."""
        pairs = solve_threshold_pairs(0.05, 20)
        assert [(p.sleep_thr, p.force_thr) for p in pairs] == [(19, 20)], \
            f"Expected only the periodic pair, got {[(p.sleep_thr, p.force_thr) for p in pairs]}"

    def test_no_pair_sits_on_a_probability_edge(self):
        """Reported base probabilities are interior solutions."""
        for pair in solve_threshold_pairs(0.05, 40):
            assert PROB_EDGE < pair.base_prob < 1.0 - PROB_EDGE, f"{pair} sits on an edge"

    def test_all_pairs_hit_target(self):
        """Every reported pair activates at eps within tolerance."""
        pairs = solve_threshold_pairs(0.05, 40)
        assert len(pairs) > 20, f"Only {len(pairs)} pairs found"
        for pair in pairs:
            assert abs(pair.activation - 0.05) <= 1e-6, f"{pair} misses the target"
            assert pair.force_thr >= 20, f"{pair} cannot reach eps below 1/force_thr"
            assert abs(effective_activation(pair.policy()) - 0.05) <= 1e-6, f"{pair} policy misses the target"

    def test_target_out_of_range(self):
        """Target activation must lie strictly inside (0, 1)."""
        with pytest.raises(DomainError):
            solve_threshold_pairs(0.0, 10)


class TestAlgorithm1:
    """Joint (AoI, interval) chain."""

    def test_sawtooth_with_certain_success(self):
        """Period 20, rho = 1: AoI cycles 1..20, mean 10.5."""
        aaoi, table = algorithm1_aaoi(ThresholdPolicy(19, 20, 0.5), 1.0)
        assert aaoi == pytest.approx(10.5, abs=1e-12), "Sawtooth mean should be 10.5"
        assert table.horizon == 20, "One period of rows suffices"

    def test_matches_renewal_closed_form(self):
        """Periodic pair agrees with the renewal-reward formula."""
        pol = ThresholdPolicy(19, 20, 0.5)
        expected = periodic_policy_aaoi(20, RHO)
        assert expected == pytest.approx(23.48, abs=0.01), "Renewal value at the base point"
        aaoi, _ = algorithm1_aaoi(pol, RHO)
        assert aaoi == pytest.approx(expected, rel=1e-6), "Joint chain should match the renewal formula"

    def test_degenerate_policy_recovers_baseline(self):
        """sleep_thr = 0, force_thr = 450, base_prob = eps matches 1/(eps*rho) within 0.5%."""
        aaoi, _ = algorithm1_aaoi(ThresholdPolicy(0, 450, 0.05), RHO)
        assert aaoi == pytest.approx(baseline_aaoi(0.05, RHO), rel=0.005), \
            f"AAoI {aaoi:.6f} should match the memoryless value"

    @pytest.mark.parametrize('sleep_thr, force_thr, base_prob', [(5, 25, 0.1), (19, 20, 0.5), (0, 8, 0.3)])
    def test_decreasing_in_rho(self, sleep_thr, force_thr, base_prob):
        """A more reliable channel never ages the information more."""
        pol = ThresholdPolicy(sleep_thr, force_thr, base_prob)
        values = [algorithm1_aaoi(pol, rho)[0] for rho in np.linspace(0.1, 1.0, 10)]
        assert all(b < a for a, b in zip(values, values[1:])), f"{values} should decrease in rho"

    def test_first_entry_and_mass(self):
        """pi_{1,1} = rho * activation; table is a probability law."""
        pol = ThresholdPolicy(3, 9, 0.35)
        aaoi, table = algorithm1_aaoi(pol, 0.4)
        stationary = threshold_steady_state(pol).probs
        assert table.table[0, 0] == pytest.approx(0.4 * np.dot(stationary, pol.activity_probs()), rel=1e-12), \
            "First entry should be rho times the activation probability"
        assert np.all(table.table >= 0), "Entries should be nonnegative"
        assert math.fsum(table.aoi_marginal()) + table.tail_mass == pytest.approx(1.0, abs=1e-9), \
            "Marginal plus tail should be one"
        assert table.tail_mass <= 1e-10, "Tail should be below the default tolerance"
        assert aaoi >= 1.0, "AAoI is at least one slot"

    def test_interval_marginal_recovers_stationary_law(self):
        """Summing out the AoI gives the interval chain's law."""
        pol = ThresholdPolicy(2, 7, 0.4)
        _, table = algorithm1_aaoi(pol, 0.5, tail_tol=1e-13)
        assert np.allclose(table.interval_marginal(), threshold_steady_state(pol).probs, atol=1e-10), \
            "Interval marginal should equal the stationary law"

    def test_matches_joint_chain_power_iteration(self):
        """Recursion agrees with brute force on the explicit joint chain."""
        pol = ThresholdPolicy(1, 4, 0.3)
        cap = 60
        _, table = algorithm1_aaoi(pol, 0.5)
        brute = brute_force_steady_state(joint_transition_matrix(pol, 0.5, cap)).reshape(cap, 4)
        assert np.allclose(table.table[:cap - 1], brute[:cap - 1], rtol=0, atol=1e-10), \
            "Recursion should match power iteration"

    def test_threshold_beats_baseline_at_same_activation(self):
        """Best feasible pair at eps = 0.05 is at least 23% below the memoryless AAoI."""
        baseline = baseline_aaoi(0.05, RHO)
        best = min(analysis_row(p.policy(), RHO)['aaoi'] for p in solve_threshold_pairs(0.05, 30))
        assert best <= 0.77 * baseline, f"Best {best:.3f} vs baseline {baseline:.3f}"

    def test_horizon(self):
        """One period with certain success, m periods otherwise."""
        pol = ThresholdPolicy(0, 5, 0.5)
        assert joint_horizon(pol, 1.0, 1e-10) == 5, "rho = 1 needs one period"
        assert joint_horizon(pol, 0.5, 1e-3) == 5 * 10, "(1/2)^10 < 1e-3 needs ten periods"

    def test_truncation_error_when_capped(self):
        """A horizon cap that leaves too much tail raises."""
        with pytest.raises(TruncationError) as exc:
            algorithm1_aaoi(ThresholdPolicy(0, 10, 0.5), 0.01, horizon_cap=50)
        assert exc.value.tail_mass > 1e-10, "Reported tail should exceed the tolerance"

    def test_rho_out_of_range(self):
        """rho = 0 has no stationary AoI."""
        with pytest.raises(DomainError):
            algorithm1_aaoi(ThresholdPolicy(0, 10, 0.5), 0.0)

    def test_grant_based_rho_for_threshold_policy(self):
        """Contention rho depends only on the long-run activation."""
        pol = ThresholdPolicy(19, 20, 0.5)
        assert grant_based_threshold_rho(2000, 200, pol) == pytest.approx(grant_based_rho(2000, 200, 0.05)), \
            "Periodic pair at 0.05 should contend like eps = 0.05"

    def test_analysis_row_fields(self):
        """Row layout used by sweeps and the CLI."""
        row = analysis_row(ThresholdPolicy(19, 20, 0.5), 1.0)
        assert list(row) == ['sleep_thr', 'force_thr', 'base_prob', 'activation', 'rho', 'aaoi', 'horizon', 'tail_mass'], \
            f"Unexpected columns {list(row)}"
        assert row['aaoi'] == pytest.approx(10.5), "Row should carry the AAoI"


class TestPowerIteration:
    """Brute-force oracle."""

    def test_rejects_non_stochastic(self):
        """Rows must sum to one."""
        with pytest.raises(DomainError):
            brute_force_steady_state(np.array([[0.5, 0.4], [0.0, 1.0]]))

    def test_periodic_chain_converges(self):
        """A pure 2-cycle has no power-iteration limit, its lazy version does."""
        pi = brute_force_steady_state(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(pi, [0.5, 0.5]), f"Expected uniform law, got {pi}"

    def test_round_cap(self):
        """Zero tolerance cannot be met in three rounds."""
        P = np.array([[0.9, 0.1], [0.2, 0.8]])
        with pytest.raises(ConvergenceError):
            brute_force_steady_state(P, tol=0.0, max_rounds=3)
