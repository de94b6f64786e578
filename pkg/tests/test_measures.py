import random
from fractions import Fraction

import pytest

from helpers import random_instance
from pbcontrol import (
    ControlQuery,
    Goal,
    Operation,
    PbError,
    Rule,
    TieBreakOrder,
    baseline_add_measure,
    baseline_cost_measure,
    cheapest_deletion,
    compute_strength_report,
    count_solutions,
    make_instance,
    min_deletion_size,
    pearson,
    rivalry,
    rivalry_matrix,
    win_probability,
)
from pbcontrol.reductions import Rx3cInstance, build_phragmen_ccdc


class TestMinDeletionSize:
    def test_one_deletion_suffices(self, example1):
        assert min_deletion_size(example1, Rule.GREEDY_AV, "c2") == 1

    def test_funded_project_needs_nothing(self, example1):
        assert min_deletion_size(example1, Rule.GREEDY_AV, "c1") == 0

    def test_guard_grid_needs_two_deletions(self):
        built = build_phragmen_ccdc(Rx3cInstance(1, (frozenset({1, 2, 3}),) * 3))
        assert (
            min_deletion_size(built.instance, Rule.PHRAGMEN, "p", built.tiebreak, cap=2)
            == 2
        )

    def test_cap_limits_the_search(self, example1):
        hard = make_instance(
            [("a", 1), ("b", 1), ("c", 1), ("p", 2)],
            [{"a"}, {"a"}, {"b"}, {"b"}, {"c"}, {"c"}, {"p"}],
            budget=3,
        )
        assert min_deletion_size(hard, Rule.GREEDY_AV, "p", cap=1) is None
        assert min_deletion_size(hard, Rule.GREEDY_AV, "p", cap=3) == 2


class TestCheapestDeletion:
    def test_three_project_example(self, example1):
        result = cheapest_deletion(example1, Rule.GREEDY_AV, "c2")
        assert result == (frozenset({"c1"}), 1)

    def test_funded_project_gets_empty_set(self, example1):
        assert cheapest_deletion(example1, Rule.GREEDY_AV, "c1") == (frozenset(), 0)

    def test_dp_matches_brute_force_min_cost(self):
        rng = random.Random(9000)
        checked = 0
        for _ in range(60):
            inst = random_instance(rng)
            rule = rng.choice([Rule.GREEDY_AV, Rule.GREEDY_COST])
            dist = rng.choice(inst.project_ids)
            dp_result = cheapest_deletion(inst, rule, dist)
            # independent exhaustive minimum over all deletion subsets
            from itertools import combinations

            from pbcontrol import evaluate

            deletable = [p for p in inst.project_ids if p != dist]
            best = None
            for k in range(len(deletable) + 1):
                for combo in combinations(deletable, k):
                    out = evaluate(rule, inst.without_projects(combo))
                    if dist in out.funded:
                        cost = sum(inst.cost_of(p) for p in combo)
                        if best is None or cost < best:
                            best = cost
            if best is None:
                assert dp_result is None
            else:
                assert dp_result is not None and dp_result[1] == best
                checked += 1
        assert checked > 10


class TestWinProbability:
    def test_half_of_singletons_work(self, example1):
        wp = win_probability(example1, Rule.GREEDY_AV, "c2", 1)
        assert wp.value == Fraction(1, 2)
        assert wp.exact and wp.trials == 2

    def test_zero_removals_for_a_loser(self, example1):
        assert win_probability(example1, Rule.GREEDY_AV, "c2", 0).value == 0

    def test_sole_survivor_always_wins(self, example1):
        wp = win_probability(example1, Rule.GREEDY_AV, "p", 2)
        assert wp.value == 1

    def test_r_out_of_range(self, example1):
        with pytest.raises(PbError):
            win_probability(example1, Rule.GREEDY_AV, "c2", 3)

    def test_sampled_mode_is_tagged_and_seeded(self, example1):
        wp1 = win_probability(example1, Rule.GREEDY_AV, "c2", 1, sample_size=64, seed=5)
        wp2 = win_probability(example1, Rule.GREEDY_AV, "c2", 1, sample_size=64, seed=5)
        assert not wp1.exact and wp1.seed == 5 and wp1.trials == 64
        assert wp1 == wp2
        with pytest.raises(PbError, match="seed"):
            win_probability(example1, Rule.GREEDY_AV, "c2", 1, sample_size=10)

    def test_positive_probability_iff_exact_size_witness_exists(self):
        rng = random.Random(77)
        for _ in range(40):
            inst = random_instance(rng)
            dist = rng.choice(inst.project_ids)
            r = rng.randint(0, min(2, inst.m - 1))
            wp = win_probability(inst, Rule.GREEDY_COST, dist, r)
            q = ControlQuery(Rule.GREEDY_COST, Goal.CONSTRUCTIVE, Operation.DELETE, dist, r)
            n_wins = count_solutions(inst, q, r)
            assert (wp.value > 0) == (n_wins > 0)
            assert wp.value == Fraction(n_wins, wp.trials)


class TestRivalry:
    def test_deleting_the_rival_flips_the_outcome(self, example1):
        assert rivalry(example1, Rule.GREEDY_AV, "c2", "c1", 0) == 1

    def test_deleting_a_bystander_does_not(self, example1):
        assert rivalry(example1, Rule.GREEDY_AV, "c2", "p", 0) == 0

    def test_r_zero_values_are_boolean(self):
        rng = random.Random(31337)
        for _ in range(20):
            inst = random_instance(rng)
            if inst.m < 2:
                continue
            p, q = rng.sample(list(inst.project_ids), 2)
            assert rivalry(inst, Rule.GREEDY_AV, p, q, 0) in (0, 1)

    def test_identical_projects_rejected(self, example1):
        with pytest.raises(PbError):
            rivalry(example1, Rule.GREEDY_AV, "c2", "c2", 0)

    def test_inert_rival_equals_plain_subset_probability(self):
        # q has no approvals and unit cost: removing it changes nothing,
        # so rivalry equals the win probability over the remaining pool
        inst = make_instance(
            [("a", 1), ("b", 2), ("x", 1), ("t", 1)],
            [{"a"}, {"a"}, {"b"}, {"b"}, {"t"}],
            budget=2,
        )
        from itertools import combinations

        from pbcontrol import evaluate

        val = rivalry(inst, Rule.GREEDY_AV, "t", "x", 1)
        rest = [pid for pid in inst.project_ids if pid not in ("t", "x")]
        wins = 0
        total = 0
        for combo in combinations(rest, 1):
            total += 1
            if "t" in evaluate(Rule.GREEDY_AV, inst.without_projects(combo)).funded:
                wins += 1
        assert val == Fraction(wins, total)

    def test_matrix_covers_losing_rows(self, example1):
        matrix = rivalry_matrix(example1, Rule.GREEDY_AV, 0)
        assert matrix.rows == ("c2",)
        assert matrix.cols == ("c1", "c2", "p")
        assert matrix.entries[("c2", "c1")] == 1


class TestBaselineMeasures:
    def test_cost_reduction_on_the_expensive_loser(self, example1):
        # c2 wins once its cost drops to 1 (it fits after c1)
        assert baseline_cost_measure(example1, Rule.GREEDY_AV, "c2") == Fraction(1, 2)

    def test_cost_measure_of_winner_is_one(self, example1):
        assert baseline_cost_measure(example1, Rule.GREEDY_AV, "c1") == 1

    def test_cost_measure_zero_when_hopeless(self):
        inst = make_instance(
            [("a", 1), ("p", 5)], [{"a"}, {"a"}], budget=1
        )
        assert baseline_cost_measure(inst, Rule.GREEDY_AV, "p") == 0

    def test_add_measure_with_favourable_tiebreak(self, example1):
        tb = TieBreakOrder(order=("c2", "c1", "p"))
        assert baseline_add_measure(example1, Rule.GREEDY_AV, "c2", tb) == Fraction(1, 2)

    def test_add_measure_of_winner_is_one(self, example1):
        assert baseline_add_measure(example1, Rule.GREEDY_AV, "c1") == 1

    def test_add_measure_zero_for_unaffordable_project(self):
        inst = make_instance([("a", 1), ("p", 9)], [{"a"}], budget=2)
        assert baseline_add_measure(inst, Rule.GREEDY_AV, "p", cap=10) == 0


class TestPearson:
    def test_identical_vectors(self):
        assert pearson([0, Fraction(1, 2), 1], [0, Fraction(1, 2), 1]) == pytest.approx(1.0)

    def test_perfect_anticorrelation(self):
        assert pearson([0, 1], [1, 0]) == pytest.approx(-1.0)

    def test_matches_direct_formula(self):
        rng = random.Random(12)
        xs = [rng.random() for _ in range(100)]
        ys = [0.3 * x + rng.random() for x in xs]
        mx = sum(xs) / len(xs)
        my = sum(ys) / len(ys)
        cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
        sx = sum((x - mx) ** 2 for x in xs) ** 0.5
        sy = sum((y - my) ** 2 for y in ys) ** 0.5
        assert pearson(xs, ys) == pytest.approx(cov / (sx * sy), abs=1e-12)

    def test_zero_variance_is_an_error(self):
        with pytest.raises(PbError):
            pearson([1, 1, 1], [0, 1, 2])

    def test_length_mismatch(self):
        with pytest.raises(PbError):
            pearson([1, 2], [1])


class TestStrengthReport:
    def test_funded_projects_get_sentinels(self, example1):
        report = compute_strength_report(example1, Rule.GREEDY_AV, r_max=2)
        by_id = {p.project: p for p in report.projects}
        assert by_id["c1"].funded and by_id["c1"].min_deletions == 0
        assert by_id["c1"].cheapest_deletion_cost == 0
        assert by_id["c1"].win_probability == {}
        assert not by_id["c2"].funded
        assert by_id["c2"].min_deletions == 1
        assert by_id["c2"].win_probability[1].value == Fraction(1, 2)

    def test_min_deletions_zero_iff_funded(self, example1):
        report = compute_strength_report(example1, Rule.GREEDY_AV, r_max=1)
        for p in report.projects:
            assert (p.min_deletions == 0) == p.funded

    def test_baselines_included_on_request(self, example1):
        report = compute_strength_report(
            example1, Rule.GREEDY_AV, r_max=1, include_baselines=True
        )
        by_id = {p.project: p for p in report.projects}
        assert by_id["c2"].baseline_cost == Fraction(1, 2)
        assert by_id["c2"].baseline_add is not None

    def test_cost_ratio_of_cheapest_set(self, example1):
        report = compute_strength_report(example1, Rule.GREEDY_AV, r_max=1)
        by_id = {p.project: p for p in report.projects}
        assert by_id["c2"].cheapest_deletion_cost == 1
        assert by_id["c2"].cost_ratio == Fraction(2, 1)

    def test_report_identical_for_any_worker_count(self, example1):
        one = compute_strength_report(example1, Rule.GREEDY_AV, r_max=2, jobs=1)
        two = compute_strength_report(example1, Rule.GREEDY_AV, r_max=2, jobs=2)
        assert one == two


class TestNormalizationHooks:
    def test_cost_measure_accepts_custom_scale(self, example1):
        raw = baseline_cost_measure(
            example1, Rule.GREEDY_AV, "c2", normalize=lambda c, cost: Fraction(c)
        )
        assert raw == 1  # the winning reduced cost itself

    def test_add_measure_accepts_custom_scale(self, example1):
        tb = TieBreakOrder(order=("c2", "c1", "p"))
        raw = baseline_add_measure(
            example1, Rule.GREEDY_AV, "c2", tb, normalize=lambda k: Fraction(k)
        )
        assert raw == 1  # the number of added voters itself
