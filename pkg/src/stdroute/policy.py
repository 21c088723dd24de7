"""Routing policies: adaptive state-to-link decision rules and state sequences."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from .errors import PolicyExplosionError, ValidationError
from .network import (
    DecisionGraph,
    State,
    StdNetwork,
    SupportPointSet,
    decision_graph,
    event_collections_at,
    successor_states,
    travel_time,
)
from .utility import LinkUtilitySpec, ValueFunction

DEFAULT_POLICY_CAP = 10**6


@dataclass(frozen=True)
class StateSequence:
    """Observed trajectory: states from a departure state to the destination."""

    states: tuple[State, ...]

    @property
    def initial_state(self) -> State:
        return self.states[0]

    @property
    def final_state(self) -> State:
        return self.states[-1]

    @property
    def links(self) -> tuple[int, ...]:
        return tuple(s.link for s in self.states)

    @property
    def path(self) -> tuple[int, ...]:
        """Traversed links, excluding the dummy link the trip starts on."""
        return tuple(s.link for s in self.states[1:])

    def label(self) -> str:
        return ">".join(s.label() for s in self.states)

    def validate(self, net: StdNetwork, spp: SupportPointSet) -> None:
        """Check that every transition is feasible and the trip ends at the destination."""
        if len(self.states) < 2:
            raise ValidationError("a state sequence needs at least a departure and an arrival")
        first = self.states[0]
        if first.ev not in event_collections_at(spp, first.time):
            raise ValidationError(f"initial knowledge state {first.ev} is not a partition class")
        for i in range(len(self.states) - 1):
            cur, nxt = self.states[i], self.states[i + 1]
            if nxt.link not in net.outgoing(cur.link):
                raise ValidationError(
                    f"step {i}: link {nxt.link} is not an outgoing link of link {cur.link}"
                )
            tau = travel_time(net, spp, nxt.link, cur)
            if nxt.time != cur.time + tau:
                raise ValidationError(
                    f"step {i}: arrival time {nxt.time} does not match {cur.time} + {tau}"
                )
            if nxt.ev not in event_collections_at(spp, nxt.time):
                raise ValidationError(f"step {i}: knowledge state {nxt.ev} is not a partition class")
            if not set(nxt.ev.members) & set(cur.ev.members):
                raise ValidationError(f"step {i}: knowledge state {nxt.ev} is incompatible with {cur.ev}")
        if not net.is_destination(self.final_state.link):
            raise ValidationError("sequence does not end at the destination")


@dataclass(frozen=True)
class RoutingPolicy:
    """Mapping from decision states to next links.

    The domain is exactly the set of states reachable from the initial
    state under the policy's own decisions; every induced leaf is at the
    destination. Two policies are equal when their decision maps are.
    """

    initial_state: State
    decisions: tuple[tuple[State, int], ...]

    def __post_init__(self) -> None:
        canon = tuple(sorted(self.decisions, key=lambda item: item[0].sort_key))
        object.__setattr__(self, "decisions", canon)

    @classmethod
    def from_map(cls, initial: State, mapping: dict[State, int]) -> "RoutingPolicy":
        return cls(initial_state=initial, decisions=tuple(mapping.items()))

    @cached_property
    def decision_map(self) -> dict[State, int]:
        return dict(self.decisions)

    def next_link(self, state: State) -> int:
        try:
            return self.decision_map[state]
        except KeyError:
            raise ValidationError(f"policy has no decision for state {state}") from None


@dataclass(frozen=True, eq=False)
class PolicyChoiceSet:
    """Ordered routing policies sharing one initial state."""

    network: StdNetwork
    support_points: SupportPointSet
    initial_state: State
    policies: tuple[RoutingPolicy, ...]

    def __len__(self) -> int:
        return len(self.policies)

    def index_of(self, policy: RoutingPolicy) -> int:
        try:
            return self.policies.index(policy)
        except ValueError:
            raise ValidationError("policy is not a member of the choice set") from None


def _policy_count(graph: DecisionGraph) -> dict[State, int]:
    counts: dict[State, int] = {}
    for state in sorted(graph.states, key=lambda s: s.sort_key, reverse=True):
        if state in graph.terminal:
            counts[state] = 1
            continue
        total = 0
        for a in sorted(graph.choices[state]):
            branch = 1
            for nxt, _ in graph.choices[state][a]:
                branch *= counts[nxt]
            total += branch
        counts[state] = total
    return counts


def enumerate_policies(
    net: StdNetwork,
    spp: SupportPointSet,
    initial: State,
    cap: int = DEFAULT_POLICY_CAP,
) -> PolicyChoiceSet:
    """All distinct routing policies from an initial state, deterministically ordered.

    Policies are built recursively: choose an outgoing link, then combine
    one sub-policy per possible next knowledge state. Links are explored
    in ascending id and knowledge states in canonical partition order, so
    the result order is reproducible. Raises
    :class:`PolicyExplosionError` when the count would exceed ``cap``.
    """
    graph = decision_graph(net, spp, initial)
    counts = _policy_count(graph)
    if counts[initial] > cap:
        raise PolicyExplosionError(
            f"{counts[initial]} routing policies exceed the cap of {cap}"
        )

    memo: dict[State, list[dict[State, int]]] = {}

    def options(state: State) -> list[dict[State, int]]:
        if state in graph.terminal:
            return [{}]
        if state in memo:
            return memo[state]
        result = []
        for a in sorted(graph.choices[state]):
            branch_options = [options(nxt) for nxt, _ in graph.choices[state][a]]
            for combo in itertools.product(*branch_options):
                merged: dict[State, int] = {state: a}
                for sub in combo:
                    merged.update(sub)
                result.append(merged)
        memo[state] = result
        return result

    policies = tuple(RoutingPolicy.from_map(initial, m) for m in options(initial))
    return PolicyChoiceSet(
        network=net, support_points=spp, initial_state=initial, policies=policies
    )


def policy_outcomes(
    net: StdNetwork, spp: SupportPointSet, policy: RoutingPolicy
) -> tuple[tuple[StateSequence, float], ...]:
    """Leaves of the policy's state tree as (sequence, probability) pairs; mass sums to 1."""
    leaves: list[tuple[StateSequence, float]] = []

    def walk(prefix: tuple[State, ...], prob: float) -> None:
        state = prefix[-1]
        if net.is_destination(state.link):
            leaves.append((StateSequence(prefix), prob))
            return
        a = policy.next_link(state)
        for nxt, p in successor_states(net, spp, state, a):
            walk(prefix + (nxt,), prob * p)

    walk((policy.initial_state,), 1.0)
    return tuple(leaves)


def rollout_policy(
    net: StdNetwork, spp: SupportPointSet, policy: RoutingPolicy, scenario: int
) -> StateSequence:
    """Trajectory produced by a policy when nature plays one fixed scenario."""
    state = policy.initial_state
    if scenario not in state.ev:
        raise ValidationError(f"scenario {scenario} is incompatible with {state.ev}")
    states = [state]
    while not net.is_destination(state.link):
        a = policy.next_link(state)
        nxt = [s for s, _ in successor_states(net, spp, state, a) if scenario in s.ev]
        state = nxt[0]
        states.append(state)
    return StateSequence(tuple(states))


def policy_expected_utility(
    net: StdNetwork,
    spp: SupportPointSet,
    policy: RoutingPolicy,
    utility: LinkUtilitySpec,
) -> float:
    """Probability-weighted deterministic utility accumulated over the policy's state tree."""
    total = 0.0
    for seq, prob in policy_outcomes(net, spp, policy):
        accumulated = sum(
            utility.value(net, spp, seq.states[i + 1].link, seq.states[i])
            for i in range(len(seq.states) - 1)
        )
        total += prob * accumulated
    return total


def contains(policy: RoutingPolicy, seq: StateSequence) -> bool:
    """Whether the policy reproduces the sequence's link choice at every decision state."""
    if seq.initial_state != policy.initial_state:
        raise ValidationError("sequence and policy have different initial states")
    decisions = policy.decision_map
    for i in range(len(seq.states) - 1):
        if decisions.get(seq.states[i]) != seq.states[i + 1].link:
            return False
    return True


def optimal_policy(
    net: StdNetwork,
    spp: SupportPointSet,
    initial: State,
    utility: LinkUtilitySpec,
) -> tuple[RoutingPolicy, ValueFunction]:
    """Backward induction with a max step: the deterministic-choice optimum.

    Ties are broken toward the lowest link id so the result is
    reproducible. Returns the policy restricted to states it actually
    visits, plus the max-based value table over all reachable states.
    """
    graph = decision_graph(net, spp, initial)
    values: dict[State, float] = {}
    best: dict[State, int] = {}
    for state in sorted(graph.states, key=lambda s: s.sort_key, reverse=True):
        if state in graph.terminal:
            values[state] = 0.0
            continue
        best_value = None
        best_link = None
        for a in sorted(graph.choices[state]):
            q = utility.value(net, spp, a, state) + sum(
                p * values[nxt] for nxt, p in graph.choices[state][a]
            )
            if best_value is None or q > best_value:
                best_value = q
                best_link = a
        values[state] = best_value
        best[state] = best_link

    decisions: dict[State, int] = {}
    stack = [initial]
    while stack:
        state = stack.pop()
        if net.is_destination(state.link) or state in decisions:
            continue
        a = best[state]
        decisions[state] = a
        stack.extend(nxt for nxt, _ in graph.choices[state][a])

    policy = RoutingPolicy.from_map(initial, decisions)
    vf = ValueFunction(
        network=net, support_points=spp, utility=utility, initial=initial, values=values
    )
    return policy, vf


def enumerate_sequences(
    net: StdNetwork,
    spp: SupportPointSet,
    initial: State,
    cap: int = DEFAULT_POLICY_CAP,
) -> tuple[StateSequence, ...]:
    """Every feasible state sequence from the initial state to the destination."""
    graph = decision_graph(net, spp, initial)

    counts: dict[State, int] = {}
    for state in sorted(graph.states, key=lambda s: s.sort_key, reverse=True):
        if state in graph.terminal:
            counts[state] = 1
        else:
            counts[state] = sum(
                counts[nxt]
                for a in graph.choices[state]
                for nxt, _ in graph.choices[state][a]
            )
    if counts[initial] > cap:
        raise PolicyExplosionError(f"{counts[initial]} state sequences exceed the cap of {cap}")

    sequences: list[StateSequence] = []

    def walk(prefix: tuple[State, ...]) -> None:
        state = prefix[-1]
        if state in graph.terminal:
            sequences.append(StateSequence(prefix))
            return
        for a in sorted(graph.choices[state]):
            for nxt, _ in graph.choices[state][a]:
                walk(prefix + (nxt,))

    walk((initial,))
    return tuple(sequences)
