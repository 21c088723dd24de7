import json
import math

import numpy as np
import pytest

from netgen import random_network
from stdroute import (
    LinkUtilitySpec,
    TwoRouteScenario,
    ValidationError,
    build_two_route_network,
    bundled_network_text,
    closed_form_ratios,
    dominance_class,
    equivalence_report,
    extremeness_check,
    initial_state,
    link_choice_prob,
    load_network,
    path_probabilities,
    pipeline_ratios,
    ratio_table,
    scenario_grid,
    solve_value_functions,
    successor_states,
)
from stdroute.comparison import LINK_APPROACH, LINK_ROUTE2, LINK_ROUTE3


def max_ratio_diff(scenario) -> float:
    table = ratio_table(scenario)
    closed = (*table.closed_form.recursive, *table.closed_form.nonrecursive)
    numeric = (*table.pipeline.recursive, *table.pipeline.nonrecursive)
    return max(abs(c - n) for c, n in zip(closed, numeric))


class TestScenario:
    def test_domain_constraints(self):
        with pytest.raises(ValidationError):
            TwoRouteScenario(a=0, b=2, x=0.5, y=0.5, p=0.5)
        with pytest.raises(ValidationError):
            TwoRouteScenario(a=2, b=2, x=-2.5, y=0.5, p=0.5)
        with pytest.raises(ValidationError):
            TwoRouteScenario(a=2, b=2, x=0.5, y=-2.5, p=0.5)
        with pytest.raises(ValidationError):
            TwoRouteScenario(a=2, b=2, x=0.5, y=0.5, p=1.0)


class TestBuild:
    def test_reference_scenario_reproduces_the_bundled_network(self, net, spp, unit_utility):
        build = build_two_route_network(TwoRouteScenario(a=3, b=2, x=-1, y=0, p=0.5))
        assert build.time_scale == 1
        bspp = build.support_points
        # junction-period times: route 2 takes (3, 2), route 3 takes (2, 2)
        assert bspp.time_at(1, 1, LINK_ROUTE2) == 3
        assert bspp.time_at(2, 1, LINK_ROUTE2) == 2
        assert bspp.time_at(1, 1, LINK_ROUTE3) == 2
        assert bspp.time_at(2, 1, LINK_ROUTE3) == 2
        assert np.allclose(bspp.probabilities, [0.5, 0.5])
        # junction behavior matches the bundled network's choice probabilities
        vf_built = solve_value_functions(
            build.network, bspp, build.utility, initial=build.initial_state
        )
        vf_bundled = solve_value_functions(net, spp, unit_utility)
        for (built_state, _), (bundled_state, _) in zip(
            successor_states(build.network, bspp, build.initial_state, LINK_APPROACH),
            successor_states(net, spp, initial_state(net, spp), 1),
        ):
            for a in (LINK_ROUTE2, LINK_ROUTE3):
                assert link_choice_prob(vf_built, built_state, a) == pytest.approx(
                    link_choice_prob(vf_bundled, bundled_state, a), abs=1e-12
                )

    def test_zero_offsets_make_routes_identical_per_state(self):
        build = build_two_route_network(TwoRouteScenario(a=2, b=3, x=0, y=0, p=0.4))
        bspp = build.support_points
        for r in (1, 2):
            assert bspp.time_at(r, 1, LINK_ROUTE2) == bspp.time_at(r, 1, LINK_ROUTE3)

    def test_route2_dominant_when_offsets_positive(self):
        build = build_two_route_network(TwoRouteScenario(a=2, b=2, x=1, y=1, p=0.5))
        bspp = build.support_points
        for r in (1, 2):
            assert bspp.time_at(r, 1, LINK_ROUTE2) < bspp.time_at(r, 1, LINK_ROUTE3)

    def test_fractional_values_are_scaled(self):
        build = build_two_route_network(TwoRouteScenario(a=2, b=2, x=-1.8, y=0.3, p=0.5))
        assert build.time_scale == 10
        assert build.support_points.time_at(1, 1, LINK_ROUTE3) == 2
        assert build.support_points.time_at(2, 1, LINK_ROUTE3) == 23
        assert build.utility.beta == (-0.1,)

    def test_unrepresentable_values_rejected(self):
        with pytest.raises(ValidationError, match="denominator"):
            build_two_route_network(TwoRouteScenario(a=2, b=2, x=math.pi, y=0.5, p=0.5))


class TestRatioTable:
    def test_zero_offsets_equalize_the_models(self):
        table = ratio_table(TwoRouteScenario(a=2, b=3, x=0, y=0, p=0.3))
        for ratios in (table.closed_form.recursive, table.closed_form.nonrecursive):
            assert ratios == pytest.approx((1.0, 1.0, 1.0), abs=1e-12)
        assert extremeness_check(table.scenario) == "equal"

    def test_reference_scenario_state_ratio(self, vf):
        from stdroute import EventCollection, State

        table = ratio_table(TwoRouteScenario(a=3, b=2, x=-1, y=0, p=0.5))
        assert table.closed_form.recursive.state1 == pytest.approx(math.exp(-1), abs=1e-12)
        v1 = State(1, 1, EventCollection((1,)))
        observed = link_choice_prob(vf, v1, 2) / link_choice_prob(vf, v1, 3)
        assert table.closed_form.recursive.state1 == pytest.approx(observed, abs=1e-12)

    def test_closed_form_matches_pipeline_on_random_scenarios(self):
        rng = np.random.default_rng(89)
        for _ in range(25):
            scenario = TwoRouteScenario(
                a=float(rng.integers(1, 5)),
                b=float(rng.integers(1, 5)),
                x=round(float(rng.uniform(-0.9, 5)), 1),
                y=round(float(rng.uniform(-0.9, 5)), 1),
                p=float(rng.uniform(0.05, 0.95)),
            )
            assert max_ratio_diff(scenario) < 1e-10

    def test_nonrecursive_state_ratios_depend_on_p(self):
        scenario = TwoRouteScenario(a=2, b=2, x=1.0, y=2.0, p=0.3)
        closed = closed_form_ratios(scenario)
        assert closed.nonrecursive.state1 == pytest.approx(math.exp(0.3), abs=1e-12)
        assert closed.nonrecursive.state2 == pytest.approx(math.exp(1.4), abs=1e-12)


class TestDominance:
    def test_paper_cases(self):
        assert dominance_class(TwoRouteScenario(a=2, b=2, x=1, y=2, p=0.5)) == "route2_dominant"
        assert dominance_class(TwoRouteScenario(a=2, b=2, x=0, y=0, p=0.5)) == "equal"
        assert dominance_class(TwoRouteScenario(a=2, b=2, x=1, y=-0.5, p=0.5)) == "nondominated"
        assert dominance_class(TwoRouteScenario(a=2, b=2, x=-1, y=-0.5, p=0.5)) == "route3_dominant"


class TestExtremeness:
    def test_dominant_cases_favor_the_recursive_model(self):
        for x in (0.1, 0.5, 1.0, 2.0, 5.0):
            for y in (0.1, 1.0, 3.0):
                for p in (0.05, 0.5, 0.95):
                    s = TwoRouteScenario(a=2, b=2, x=x, y=y, p=p)
                    assert extremeness_check(s) == "recursive_more_extreme"

    def test_reference_scenario_margins(self):
        # marginal route-2 masses 0.6155 (recursive) vs 0.5612 (non-recursive)
        s = TwoRouteScenario(a=3, b=2, x=-1, y=0, p=0.5)
        closed = closed_form_ratios(s)
        rec_margin = (closed.recursive.marginal - 1) / (closed.recursive.marginal + 1)
        nr_margin = (closed.nonrecursive.marginal - 1) / (closed.nonrecursive.marginal + 1)
        assert abs(rec_margin) == pytest.approx(2 * 0.6155 - 1, abs=1e-4)
        assert abs(nr_margin) == pytest.approx(2 * 0.5612 - 1, abs=1e-4)
        assert extremeness_check(s) == "recursive_more_extreme"

    def test_odds_inequalities_on_the_positive_grid(self):
        for x in np.linspace(0.1, 5, 8):
            for y in np.linspace(0.1, 5, 8):
                for p in np.linspace(0.05, 0.95, 7):
                    closed = closed_form_ratios(TwoRouteScenario(a=2, b=2, x=x, y=y, p=p))
                    assert closed.recursive.state1 > closed.nonrecursive.state1 > 1
                    assert closed.recursive.state2 > closed.nonrecursive.state2 > 1

    def test_nondominated_can_go_either_way(self):
        verdicts = set()
        for x in np.linspace(0.1, 3, 10):
            for y in np.linspace(-1.5, -0.1, 10):
                for p in (0.1, 0.3, 0.5, 0.7, 0.9):
                    s = TwoRouteScenario(a=2, b=2, x=float(x), y=float(y), p=p)
                    verdicts.add(extremeness_check(s))
        assert "recursive_more_extreme" in verdicts
        assert "nonrecursive_more_extreme" in verdicts


class TestEquivalenceReport:
    def test_single_scenario_variant_splits_evenly(self, unit_utility):
        doc = json.loads(bundled_network_text())
        doc["support_points"] = [doc["support_points"][1] | {"probability": 1.0}]
        net, spp = load_network(json.dumps(doc))
        report = equivalence_report(net, spp, unit_utility)
        assert report.deterministic
        assert report.path_probability_max_diff < 1e-10
        vf = solve_value_functions(net, spp, unit_utility)
        assert path_probabilities(vf) == pytest.approx({(1, 2): 0.5, (1, 3): 0.5})

    def test_random_deterministic_networks(self, unit_utility):
        rng = np.random.default_rng(97)
        for _ in range(5):
            net, spp = random_network(rng, support_count=1)
            report = equivalence_report(net, spp, unit_utility)
            assert report.deterministic
            assert report.path_probability_max_diff < 1e-10

    def test_bundled_network_divergence_shrinks(self, net, spp, unit_utility):
        report = equivalence_report(net, spp, unit_utility)
        assert not report.deterministic
        assert report.divergence_monotone
        assert report.sequence_divergences[-1] < 1e-9

    def test_small_scale_concentrates_on_the_faster_route(self, net, spp, unit_utility):
        from stdroute import EventCollection, State

        vf = solve_value_functions(net, spp, unit_utility.with_mu(1e-4))
        assert link_choice_prob(vf, State(1, 1, EventCollection((1,))), 3) >= 0.999


class TestGrid:
    def test_default_grid_size_and_bounds(self):
        grid = scenario_grid()
        assert len(grid) >= 500
        assert min(s.x for s in grid) == -1.8
        assert max(s.x for s in grid) == 5.0
        assert {s.p for s in grid} == {0.05, 0.275, 0.5, 0.725, 0.95}
