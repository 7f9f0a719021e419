"""Adaptive hyperbox tests."""

import math

import pytest

from simopt import (
    AhConfig,
    ConfigError,
    GaussianNoise,
    SeedPolicy,
    SyntheticObjective,
    ah_alloc_default,
    derive_trial_policy,
    flat_index,
    hyperbox_bounds,
    run_ah,
    sample_mpa,
    space_from_axes,
)
from simopt.rng import XorShift64Star
from problems import ah_grid_means, grid5x5_space, local_optima, make_ah_grid_objective


class TestAllocSchedule:
    def test_first_iteration_floored_to_one(self):
        assert ah_alloc_default(1) == 1

    def test_second_iteration(self):
        # 5 * (ln 2)^1.01 = 3.45..., ceiling 4.
        assert ah_alloc_default(2) == 4

    def test_capped_at_five(self):
        assert ah_alloc_default(3) == 5
        assert ah_alloc_default(100) == 5

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            ah_alloc_default(0)


class TestHyperboxBounds:
    def test_lone_incumbent_spans_axes(self):
        space = space_from_axes([("a", list(range(7))), ("b", list(range(3)))])
        bounds = hyperbox_bounds([(3, 1)], (3, 1), space)
        assert bounds == [(0, 6), (0, 2)]

    def test_tightest_bracketing_coordinates(self):
        space = space_from_axes([("a", list(range(13)))])
        visited = [(2,), (5,), (9,)]
        assert hyperbox_bounds(visited, (5,), space) == [(2, 9)]

    def test_equal_coordinate_does_not_constrain(self):
        space = space_from_axes([("a", list(range(9))), ("b", list(range(9)))])
        visited = [(4, 4), (4, 7)]
        assert hyperbox_bounds(visited, (4, 4), space) == [(0, 8), (0, 7)]

    def test_incumbent_must_be_visited(self):
        space = space_from_axes([("a", [0, 1])])
        with pytest.raises(ValueError):
            hyperbox_bounds([(0,)], (1,), space)


class TestSampleMpa:
    def test_forced_when_exactly_m_available(self):
        space = space_from_axes([("a", list(range(4)))])
        got = sample_mpa([(0, 3)], space, 3, (1,), XorShift64Star(5))
        assert sorted(got) == [(0,), (2,), (3,)]

    def test_singleton_box_returns_empty(self):
        space = space_from_axes([("a", list(range(4)))])
        assert sample_mpa([(2, 2)], space, 3, (2,), XorShift64Star(5)) == []

    def test_distinct_and_inside_box(self):
        space = space_from_axes([("a", list(range(10))), ("b", list(range(10)))])
        stream = XorShift64Star(7)
        got = sample_mpa([(2, 8), (1, 5)], space, 5, (4, 3), stream)
        assert len(got) == len(set(got)) == 5
        for p in got:
            assert 2 <= p[0] <= 8 and 1 <= p[1] <= 5
            assert p != (4, 3)

    def test_uniform_over_ten_point_area(self):
        from scipy.stats import chisquare

        space = space_from_axes([("a", list(range(11)))])
        stream = XorShift64Star(99)
        counts = {i: 0 for i in range(11) if i != 5}
        draws = 100_000
        for _ in range(draws):
            (p,) = sample_mpa([(0, 10)], space, 1, (5,), stream)
            counts[p[0]] += 1
        expected = draws / 10
        sigma = math.sqrt(draws * (1 / 10) * (9 / 10))
        for c in counts.values():
            assert abs(c - expected) < 3.5 * sigma
        _, p_value = chisquare(list(counts.values()))
        assert p_value > 0.001


class TestRunAh:
    def test_zero_noise_switches_and_stays(self):
        space = space_from_axes([("a", [0, 1])])
        obj = SyntheticObjective(space, [0.0, 1.0], GaussianNoise(0.0))
        config = AhConfig(budget=60, m=1, initial=(0,))
        result = run_ah(obj, space, config, SeedPolicy(2))
        assert result.incumbent == (1,)
        assert result.iterations[0].incumbent == 1
        assert all(it.incumbent == 1 for it in result.iterations)

    def test_exact_accounting(self):
        space = grid5x5_space()
        obj = make_ah_grid_objective()
        log = []
        config = AhConfig(budget=500)
        result = run_ah(obj, space, config, SeedPolicy(10), on_eval=lambda o, k: log.append((o, k)))
        expected = config.alloc(1) + sum(it.alloc * len(it.batch) for it in result.iterations)
        assert result.evaluations_used == expected == len(log) == obj.evaluations_used
        assert result.evaluations_used <= config.budget

    def test_cumulative_means_match_observations(self):
        space = grid5x5_space()
        obj = make_ah_grid_objective()
        values: dict[int, list[float]] = {}

        def on_eval(obs, k):
            values.setdefault(flat_index(space, obs.solution), []).append(obs.value)

        result = run_ah(obj, space, AhConfig(budget=400), SeedPolicy(4), on_eval=on_eval)
        for sid, vals in values.items():
            assert result.state.counts[sid] == len(vals)
            assert result.state.means[sid] == pytest.approx(math.fsum(vals) / len(vals), abs=0)

    def test_incumbent_inside_its_box(self):
        space = grid5x5_space()
        obj = make_ah_grid_objective()
        result = run_ah(obj, space, AhConfig(budget=600), SeedPolicy(6))
        incumbent = None
        for it in result.iterations:
            if incumbent is not None:
                for d, (lo, hi) in enumerate(it.box):
                    assert lo <= incumbent[d] <= hi
            from simopt import solution_at

            incumbent = solution_at(space, it.incumbent)

    def test_box_shrinks_when_interior_points_land(self):
        space = grid5x5_space()
        obj = make_ah_grid_objective()
        result = run_ah(obj, space, AhConfig(budget=800), SeedPolicy(12))
        prev = None
        for it in result.iterations:
            if prev is not None and it.incumbent == prev.incumbent:
                inside = all(
                    plo < lo or hi < phi
                    for (lo, hi), (plo, phi) in zip(it.box, prev.box)
                )
                for (lo, hi), (plo, phi) in zip(it.box, prev.box):
                    if inside:
                        assert hi - lo <= phi - plo
            prev = it

    def test_budget_too_small_rejected(self):
        space = grid5x5_space()
        obj = make_ah_grid_objective()
        with pytest.raises(ConfigError):
            run_ah(obj, space, AhConfig(budget=3), SeedPolicy(1))

    def test_finds_local_optimum_often(self):
        space = grid5x5_space()
        means = ah_grid_means()
        optima = local_optima(space, means)
        assert optima == {12}
        hits = 0
        base = SeedPolicy(606)
        for trial in range(20):
            obj = make_ah_grid_objective()
            result = run_ah(obj, space, AhConfig(budget=2000), derive_trial_policy(base, trial))
            hits += flat_index(space, result.incumbent) in optima
        assert hits >= 17  # acceptance runs the full 100-trial version

    def test_determinism(self):
        space = grid5x5_space()
        runs = []
        for _ in range(2):
            obj = make_ah_grid_objective()
            result = run_ah(obj, space, AhConfig(budget=700), SeedPolicy(31))
            runs.append([(it.k, it.box, it.batch, it.incumbent) for it in result.iterations])
        assert runs[0] == runs[1]
