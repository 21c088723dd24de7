"""Adaptive routing-policy choice models on stochastic time-dependent networks.

Two logit formulations of the same trip: a link-level model that applies
a logit at every decision state with expected downstream values from a
log-sum recursion, and an origin-level model that applies one logit over
an enumerated set of routing policies. The package solves, simulates,
estimates, and compares both.
"""

from .comparison import (
    EquivalenceReport,
    ModelRatios,
    RatioTable,
    RouteRatios,
    TwoRouteBuild,
    TwoRouteScenario,
    build_two_route_network,
    closed_form_ratios,
    dominance_class,
    equivalence_report,
    extremeness_check,
    pipeline_ratios,
    ratio_table,
    scenario_grid,
)
from .errors import (
    EstimationError,
    HorizonError,
    NetworkFormatError,
    PoiConsistencyError,
    PolicyExplosionError,
    StdRouteError,
    UnreachableDestinationError,
    ValidationError,
)
from .estimation import EstimationResult, ObservationSet, fit, log_likelihood
from .network import (
    DecisionGraph,
    EventCollection,
    Link,
    State,
    StdNetwork,
    SupportPointSet,
    bundled_network_text,
    decision_graph,
    event_collections_at,
    initial_state,
    load_bundled_network,
    load_network,
    load_network_file,
    successor_states,
    transition_prob,
    travel_time,
)
from .nonrecursive import (
    path_probabilities_nr,
    policy_choice_prob,
    policy_choice_probs,
    policy_utilities,
    sample_sequence_counts_nr,
    sample_sequence_nr,
    sequence_likelihood_nr,
    sequence_log_likelihood_nr,
    sequence_prob_given_policy,
    sequence_probabilities_nr,
)
from .policy import (
    PolicyChoiceSet,
    RoutingPolicy,
    StateSequence,
    contains,
    enumerate_policies,
    enumerate_sequences,
    optimal_policy,
    policy_expected_utility,
    policy_outcomes,
    rollout_policy,
)
from .recursive import (
    choice_distribution,
    link_choice_prob,
    path_probabilities,
    sample_sequence,
    sample_sequence_counts,
    sequence_likelihood,
    sequence_likelihood_value_form,
    sequence_log_likelihood,
    sequence_probabilities,
    solve_value_functions,
)
from .utility import LinkUtilitySpec, ValueFunction, travel_time_attributes

__version__ = "0.1.0"

__all__ = [
    "DecisionGraph",
    "EquivalenceReport",
    "EstimationError",
    "EstimationResult",
    "EventCollection",
    "HorizonError",
    "Link",
    "LinkUtilitySpec",
    "ModelRatios",
    "NetworkFormatError",
    "ObservationSet",
    "PoiConsistencyError",
    "PolicyChoiceSet",
    "PolicyExplosionError",
    "RatioTable",
    "RouteRatios",
    "RoutingPolicy",
    "State",
    "StateSequence",
    "StdNetwork",
    "StdRouteError",
    "SupportPointSet",
    "TwoRouteBuild",
    "TwoRouteScenario",
    "UnreachableDestinationError",
    "ValidationError",
    "ValueFunction",
    "build_two_route_network",
    "bundled_network_text",
    "choice_distribution",
    "closed_form_ratios",
    "contains",
    "decision_graph",
    "dominance_class",
    "enumerate_policies",
    "enumerate_sequences",
    "equivalence_report",
    "event_collections_at",
    "extremeness_check",
    "fit",
    "initial_state",
    "link_choice_prob",
    "load_bundled_network",
    "load_network",
    "load_network_file",
    "log_likelihood",
    "optimal_policy",
    "path_probabilities",
    "path_probabilities_nr",
    "pipeline_ratios",
    "policy_choice_prob",
    "policy_choice_probs",
    "policy_expected_utility",
    "policy_outcomes",
    "policy_utilities",
    "ratio_table",
    "rollout_policy",
    "sample_sequence",
    "sample_sequence_counts",
    "sample_sequence_counts_nr",
    "sample_sequence_nr",
    "scenario_grid",
    "sequence_likelihood",
    "sequence_likelihood_nr",
    "sequence_likelihood_value_form",
    "sequence_log_likelihood",
    "sequence_log_likelihood_nr",
    "sequence_prob_given_policy",
    "sequence_probabilities",
    "sequence_probabilities_nr",
    "solve_value_functions",
    "successor_states",
    "transition_prob",
    "travel_time",
    "travel_time_attributes",
]
