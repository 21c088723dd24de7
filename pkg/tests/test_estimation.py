import json
import math

import numpy as np
import pytest

from stdroute import (
    EstimationError,
    EventCollection,
    Link,
    LinkUtilitySpec,
    ObservationSet,
    State,
    StateSequence,
    StdNetwork,
    SupportPointSet,
    ValidationError,
    enumerate_policies,
    enumerate_sequences,
    fit,
    initial_state,
    log_likelihood,
    sample_sequence_counts,
    sample_sequence_counts_nr,
    solve_value_functions,
)
from stdroute.estimation import _LikelihoodCaches
from stdroute.numerics import finite_difference_gradient


def branch_sequence(net, spp, s0, via, link):
    for seq in enumerate_sequences(net, spp, s0):
        if seq.states[1].ev == EventCollection((via,)) and seq.states[2].link == link:
            return seq
    raise AssertionError


class TestLogLikelihood:
    def test_single_observation_recursive(self, net, spp, s0):
        seq = branch_sequence(net, spp, s0, via=1, link=2)
        value = log_likelihood("recursive", net, spp, ObservationSet((seq,)), [-1.0])
        assert value == pytest.approx(math.log(1 / (2 * (1 + math.e))), abs=1e-12)

    def test_single_observation_nonrecursive(self, net, spp, s0):
        seq = branch_sequence(net, spp, s0, via=1, link=2)
        value = log_likelihood("nonrecursive", net, spp, ObservationSet((seq,)), [-1.0])
        expected = math.log(math.exp(-3.5) / (2 * (math.exp(-3.5) + math.exp(-3))))
        assert value == pytest.approx(expected, abs=1e-12)

    def test_empty_observation_set(self, net, spp):
        assert log_likelihood("recursive", net, spp, ObservationSet(()), [-1.0]) == 0.0

    def test_permutation_invariance(self, net, spp, s0):
        seqs = list(enumerate_sequences(net, spp, s0))
        forward = ObservationSet(tuple(seqs * 3))
        backward = ObservationSet(tuple(reversed(seqs * 3)))
        for model in ("recursive", "nonrecursive"):
            assert log_likelihood(model, net, spp, forward, [-0.8]) == log_likelihood(
                model, net, spp, backward, [-0.8]
            )

    def test_cached_and_uncached_agree_bitwise(self, net, spp, s0):
        obs = ObservationSet(tuple(enumerate_sequences(net, spp, s0)))
        caches = _LikelihoodCaches()
        first = log_likelihood("recursive", net, spp, obs, [-1.3], _caches=caches)
        second = log_likelihood("recursive", net, spp, obs, [-1.3], _caches=caches)
        fresh = log_likelihood("recursive", net, spp, obs, [-1.3])
        assert first == second == fresh

    def test_non_finite_likelihood_names_the_observation(self, net, spp, s0):
        seq = branch_sequence(net, spp, s0, via=1, link=2)
        with pytest.raises(EstimationError, match="observation 0"):
            log_likelihood("recursive", net, spp, ObservationSet((seq,)), [float("nan")])

    def test_unknown_model_rejected(self, net, spp):
        with pytest.raises(ValidationError):
            log_likelihood("mixed", net, spp, ObservationSet(()), [-1.0])

    def test_gradient_matches_independent_step_size(self, net, spp, s0):
        obs = ObservationSet(tuple(enumerate_sequences(net, spp, s0)) * 5)
        for model in ("recursive", "nonrecursive"):
            f = lambda b: log_likelihood(model, net, spp, obs, b)
            g_fine = finite_difference_gradient(f, np.array([-1.0]), rel_step=1e-6)
            g_coarse = finite_difference_gradient(f, np.array([-1.0]), rel_step=1e-5)
            assert g_fine[0] == pytest.approx(g_coarse[0], rel=1e-4, abs=1e-8)


class TestFit:
    def test_interior_optimum_satisfies_first_order_condition(self):
        # three parallel routes with times 1, 2, 3; observing the middle one
        # puts the maximum-likelihood coefficient at an interior point
        net = StdNetwork(
            nodes=("o", "z"),
            links=(Link(0, "o", "o"), Link(1, "o", "z"), Link(2, "o", "z"), Link(3, "o", "z")),
            origin_link=0,
            destination_link=1,
            horizon=1,
        )
        spp = SupportPointSet(
            link_ids=(1, 2, 3),
            travel_times=np.array([[[1, 2, 3]]]),
            probabilities=np.array([1.0]),
        )
        s0 = initial_state(net, spp)
        ev = EventCollection((1,))
        seq = StateSequence((s0, State(2, 2, ev)))
        result = fit("recursive", net, spp, ObservationSet((seq,)), beta0=[-1.0])
        assert result.converged
        assert result.gradient_norm < 1e-6
        assert result.beta_hat[0] == pytest.approx(0.0, abs=1e-4)

    def test_recovery_smoke(self, net, spp, vf):
        counts = sample_sequence_counts(vf, 2000, seed=1)
        obs = ObservationSet.from_counts(counts)
        result = fit("recursive", net, spp, obs, beta0=[-0.5])
        assert result.converged
        assert abs(result.beta_hat[0] + 1.0) < 0.15
        assert result.std_errors is not None and result.std_errors[0] > 0
        assert abs(result.beta_hat[0] + 1.0) < 4 * result.std_errors[0]

    def test_same_data_fits_match_across_models(self, net, spp, s0, cs, vf, unit_utility):
        # the fitted likelihoods coincide on this network: both models can
        # reproduce any split between the two informative sequences
        counts = sample_sequence_counts(vf, 4000, seed=6)
        obs = ObservationSet.from_counts(counts)
        rec = fit("recursive", net, spp, obs, beta0=[-0.5], compute_std_errors=False)
        nr = fit("nonrecursive", net, spp, obs, beta0=[-0.5], compute_std_errors=False)
        assert rec.log_likelihood >= nr.log_likelihood - 1e-6

    def test_empty_observations_rejected(self, net, spp):
        with pytest.raises(EstimationError):
            fit("recursive", net, spp, ObservationSet(()), beta0=[-1.0])

    def test_trips_may_start_mid_network(self, net, spp, s0):
        # a traveler first observed at the junction contributes a term from
        # its own initial state
        full = branch_sequence(net, spp, s0, via=1, link=2)
        partial = StateSequence(full.states[1:])
        obs = ObservationSet((full, partial))
        value = log_likelihood("recursive", net, spp, obs, [-1.0])
        expected = math.log(1 / (2 * (1 + math.e))) + math.log(1 / (1 + math.e))
        assert value == pytest.approx(expected, abs=1e-12)
        nr_value = log_likelihood("nonrecursive", net, spp, obs, [-1.0])
        # from the junction state the policy choice set has two one-step
        # policies with utilities -3 and -2
        expected_nr = math.log(math.exp(-3.5) / (2 * (math.exp(-3.5) + math.exp(-3)))) + math.log(
            math.exp(-3) / (math.exp(-3) + math.exp(-2))
        )
        assert nr_value == pytest.approx(expected_nr, abs=1e-12)


class TestObservationIO:
    def test_round_trip_with_explicit_knowledge(self, net, spp, s0):
        obs = ObservationSet(tuple(enumerate_sequences(net, spp, s0)))
        parsed = ObservationSet.from_json(obs.to_json(), net, spp)
        assert parsed.observations == obs.observations

    def test_reconstruction_from_times(self, net, spp, s0):
        seq = branch_sequence(net, spp, s0, via=1, link=2)
        records = [
            {
                "traveler_id": "n1",
                "states": [{"link": s.link, "time": s.time} for s in seq.states],
            }
        ]
        parsed = ObservationSet.from_json(json.dumps(records), net, spp)
        assert parsed.observations == (seq,)

    def test_ambiguous_reconstruction_rejected(self, net, spp, s0):
        # the route with identical times in both scenarios cannot reveal
        # which junction state occurred
        seq = branch_sequence(net, spp, s0, via=2, link=3)
        records = [
            {"states": [{"link": s.link, "time": s.time} for s in seq.states]}
        ]
        with pytest.raises(ValidationError, match="ambiguous"):
            ObservationSet.from_json(json.dumps(records), net, spp)

    def test_impossible_times_rejected(self, net, spp):
        records = [
            {"states": [{"link": 0, "time": 0}, {"link": 1, "time": 9}]}
        ]
        with pytest.raises(ValidationError, match="no scenario"):
            ObservationSet.from_json(json.dumps(records), net, spp)

    def test_invalid_sequence_rejected(self, net, spp):
        records = [
            {
                "states": [
                    {"link": 0, "time": 0, "ev_members": [1, 2]},
                    {"link": 3, "time": 1, "ev_members": [1]},
                ]
            }
        ]
        with pytest.raises(ValidationError, match="observation 0"):
            ObservationSet.from_json(json.dumps(records), net, spp)
