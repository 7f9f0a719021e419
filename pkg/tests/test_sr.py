"""Stochastic ruler tests, including the exact-chain occupancy oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simopt import (
    BudgetStop,
    ConfigError,
    GaussianNoise,
    OptimalPerformanceStop,
    SeedPolicy,
    SrConfig,
    SyntheticObjective,
    derive_trial_policy,
    flat_index,
    mk_schedule_default,
    neighborhood_n1,
    run_sr,
    solution_at,
    space_from_axes,
)
from simopt.sr import accept_from_draws, acceptance_threshold
from problems import grid5x5_space, make_sr_grid_objective


class TestMkSchedule:
    def test_exact_power_of_five(self):
        # ln(125)/ln(5) and ln(625)/ln(5) are integers; the ceiling must not
        # be pushed up by float round-off.
        assert mk_schedule_default(115) == 3
        assert mk_schedule_default(615) == 4

    def test_first_stage(self):
        assert mk_schedule_default(0) == 2

    def test_nondecreasing(self):
        values = [mk_schedule_default(k) for k in range(2000)]
        assert all(a <= b for a, b in zip(values, values[1:]))


class TestAcceptRule:
    def test_all_pass_accepts(self):
        h = iter([0.9, 0.8])
        u = iter([0.5, 0.7])
        accepted, tests = accept_from_draws(lambda: next(h), lambda: next(u), 2, 1.0)
        assert accepted and tests == 2

    def test_second_test_fails(self):
        h = iter([0.9, 0.6])
        u = iter([0.5, 0.7])
        accepted, tests = accept_from_draws(lambda: next(h), lambda: next(u), 2, 1.0)
        assert not accepted and tests == 2

    def test_early_exit_on_first_failure(self):
        h = iter([0.1, 99.0])
        u = iter([0.5, 0.0])
        accepted, tests = accept_from_draws(lambda: next(h), lambda: next(u), 5, 1.0)
        assert not accepted and tests == 1

    def test_tie_counts_as_failure(self):
        accepted, _ = accept_from_draws(lambda: 0.5, lambda: 0.5, 1, 1.0)
        assert not accepted

    def test_modified_threshold(self):
        # alpha 0.8, M=3: ceil(2.4) = 3 successes needed, so two passes then
        # a failure still rejects.
        assert acceptance_threshold(3, 0.8) == 3
        h = iter([0.9, 0.9, 0.1])
        u = iter([0.5, 0.5, 0.5])
        accepted, tests = accept_from_draws(lambda: next(h), lambda: next(u), 3, 0.8)
        assert not accepted and tests == 3

    def test_modified_early_accept(self):
        # alpha 0.5, M=4: 2 successes decide acceptance without more draws.
        assert acceptance_threshold(4, 0.5) == 2
        h = iter([0.9, 0.9, 0.0, 0.0])
        accepted, tests = accept_from_draws(lambda: next(h), lambda: 0.5, 4, 0.5)
        assert accepted and tests == 2

    @given(st.data())
    @settings(max_examples=100, deadline=None)
    def test_alpha_one_reproduces_original_rule(self, data):
        m = data.draw(st.integers(1, 8))
        hs = data.draw(st.lists(st.floats(0, 1), min_size=m, max_size=m))
        us = data.draw(st.lists(st.floats(0, 1), min_size=m, max_size=m))
        h_iter, u_iter = iter(hs), iter(us)
        accepted, tests = accept_from_draws(lambda: next(h_iter), lambda: next(u_iter), m, 1.0)
        should_accept = all(h > u for h, u in zip(hs, us))
        assert accepted == should_accept
        failures = [i for i, (h, u) in enumerate(zip(hs, us)) if h <= u]
        assert tests == (m if should_accept else failures[0] + 1)


class TestRunSr:
    def test_two_point_space_candidate_is_other(self):
        space = space_from_axes([("a", [0, 1])])
        obj = SyntheticObjective(space, [0.2, 0.8], GaussianNoise(0.0))
        config = SrConfig(
            ruler=(0, 1),
            stop=BudgetStop(max_stages=20, max_evals=10_000),
            neighborhood="n1",
            initial=(0,),
        )
        trace = run_sr(obj, space, config, SeedPolicy(5))
        for stage in trace.stages:
            assert stage.candidate != stage.current

    def test_target_start_terminates_immediately(self):
        space = grid5x5_space()
        obj = make_sr_grid_objective()
        config = SrConfig(
            ruler=(0, 1),
            stop=OptimalPerformanceStop(target=(2, 2)),
            initial=(2, 2),
        )
        trace = run_sr(obj, space, config, SeedPolicy(1))
        assert trace.stopped == "target_reached"
        assert trace.stages_count == 0
        assert trace.evaluations_used == 0

    def test_moves_stay_in_neighborhood(self):
        space = grid5x5_space()
        obj = make_sr_grid_objective()
        config = SrConfig(ruler=(0, 1), stop=BudgetStop(max_evals=500), initial=(0, 0))
        trace = run_sr(obj, space, config, SeedPolicy(77))
        from simopt import neighborhood_n2

        x = trace.initial
        for stage in trace.stages:
            assert stage.current == x
            assert stage.candidate in neighborhood_n2(space, x)
            if stage.accepted:
                x = stage.candidate
        assert x == trace.final

    def test_budget_exact(self):
        space = grid5x5_space()
        obj = make_sr_grid_objective()
        config = SrConfig(ruler=(0, 1), stop=BudgetStop(max_evals=137))
        trace = run_sr(obj, space, config, SeedPolicy(8))
        assert trace.evaluations_used <= 137
        assert obj.evaluations_used == trace.evaluations_used
        assert trace.initial_value is not None
        assert trace.final_value is not None

    def test_stage_evals_bounded_by_mk(self):
        space = grid5x5_space()
        obj = make_sr_grid_objective()
        config = SrConfig(ruler=(0, 1), stop=BudgetStop(max_evals=800))
        trace = run_sr(obj, space, config, SeedPolicy(21))
        for stage in trace.stages:
            assert stage.evals_used <= mk_schedule_default(stage.k)

    def test_early_exit_saves_evaluations(self):
        space = grid5x5_space()
        obj = make_sr_grid_objective()
        config = SrConfig(ruler=(0, 1), stop=BudgetStop(max_evals=1500))
        trace = run_sr(obj, space, config, SeedPolicy(4))
        rejected = [s for s in trace.stages if not s.accepted]
        assert rejected
        mean_evals = sum(s.evals_used for s in rejected) / len(rejected)
        mean_budget = sum(mk_schedule_default(s.k) for s in rejected) / len(rejected)
        assert mean_evals < mean_budget

    def test_determinism(self):
        space = grid5x5_space()
        results = []
        for _ in range(2):
            obj = make_sr_grid_objective()
            config = SrConfig(ruler=(0, 1), stop=BudgetStop(max_evals=400))
            trace = run_sr(obj, space, config, SeedPolicy(123))
            results.append([(s.k, s.current, s.candidate, s.accepted) for s in trace.stages])
        assert results[0] == results[1]

    def test_budget_below_one_stage_rejected(self):
        with pytest.raises(ConfigError):
            BudgetStop(max_evals=1)


class TestCandidateUniformity:
    def test_chi_square_over_neighborhood(self):
        from scipy.stats import chisquare
        from simopt import neighborhood_n2
        from simopt.objective import STREAM_CANDIDATE, derive_stream

        space = grid5x5_space()
        x = (1, 3)
        neigh = sorted(neighborhood_n2(space, x))
        stream = derive_stream(SeedPolicy(2718), STREAM_CANDIDATE)
        counts = [0] * len(neigh)
        for _ in range(100_000):
            counts[stream.randint(len(neigh))] += 1
        _, p = chisquare(counts)
        assert p > 0.001


def zero_noise_chain_matrix(space, values, m_tests):
    """Exact one-stage transition matrix under the everything-else
    neighborhood for a zero-noise objective: a candidate valued v is accepted
    with probability v**M against a U(0,1) ruler."""
    n = space.cardinality
    T = np.zeros((n, n))
    for i in range(n):
        x = solution_at(space, i)
        neigh = sorted(neighborhood_n1(space, x))
        pick = 1.0 / len(neigh)
        for z in neigh:
            j = flat_index(space, z)
            accept = values[j] ** m_tests
            T[i, j] += pick * accept
            T[i, i] += pick * (1.0 - accept)
    return T


class TestChainOccupancyOracle:
    def test_reaches_and_holds_optimum(self):
        # Zero noise, optimum 0.95, everything else 0.05: compute the exact
        # probability of sitting at the optimum after 500 stages, then check
        # the solver against both the oracle and the 99/100 bar.
        space = grid5x5_space()
        values = [0.05] * 25
        opt = 12
        values[opt] = 0.95
        start = 0

        dist = np.zeros(25)
        dist[start] = 1.0
        for k in range(500):
            dist = dist @ zero_noise_chain_matrix(space, values, mk_schedule_default(k))
        oracle_p = dist[opt]
        assert oracle_p > 0.99

        obj = SyntheticObjective(space, values, GaussianNoise(0.0))
        hits = 0
        base = SeedPolicy(40_404)
        for trial in range(100):
            config = SrConfig(
                ruler=(0, 1),
                stop=BudgetStop(max_stages=500),
                neighborhood="n1",
                initial=solution_at(space, start),
            )
            trace = run_sr(obj, space, config, derive_trial_policy(base, trial))
            hits += flat_index(space, trace.final) == opt
        assert hits >= 99


class TestAlphaTrendPaired:
    def test_modified_rule_not_slower(self):
        space = grid5x5_space()
        base = SeedPolicy(909)
        stages = {1.0: [], 0.8: []}
        for trial in range(12):
            policy = derive_trial_policy(base, trial)
            for alpha in (1.0, 0.8):
                obj = make_sr_grid_objective()
                config = SrConfig(
                    ruler=(0, 1),
                    stop=OptimalPerformanceStop(target=(2, 2)),
                    alpha=alpha,
                )
                trace = run_sr(obj, space, config, policy)
                stages[alpha].append(trace.stages_count)
        assert sum(stages[0.8]) <= sum(stages[1.0])
