"""Link-level logit model: log-sum value recursion, choice probabilities, likelihoods.

At every decision state the traveler picks an outgoing link by a
multinomial logit over (instantaneous utility + expected downstream
value), where the downstream value is the expectation of the solved value
function over the possible next knowledge states. Because travel times
are strictly positive, time orders the state space and one backward pass
over decreasing time solves the value system exactly.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import HorizonError, ValidationError
from .network import (
    State,
    StdNetwork,
    SupportPointSet,
    decision_graph,
    initial_state as default_initial_state,
    successor_states,
    transition_prob,
)
from .numerics import log_softmax, logsumexp, softmax
from .policy import DEFAULT_POLICY_CAP, StateSequence, enumerate_sequences
from .utility import LinkUtilitySpec, ValueFunction


def solve_value_functions(
    net: StdNetwork,
    spp: SupportPointSet,
    utility: LinkUtilitySpec,
    initial: State | None = None,
) -> ValueFunction:
    """Solve the expected-maximum-utility table over all states reachable from ``initial``.

    Each state's value is mu times the shifted log-sum-exp of
    (utility + expected downstream value) / mu over its outgoing links;
    destination states are worth 0.
    """
    if initial is None:
        initial = default_initial_state(net, spp)
    graph = decision_graph(net, spp, initial)
    mu = utility.mu
    values: dict[State, float] = {}
    for state in sorted(graph.states, key=lambda s: s.sort_key, reverse=True):
        if state in graph.terminal:
            values[state] = 0.0
            continue
        exponents = []
        for a in sorted(graph.choices[state]):
            downstream = sum(p * values[nxt] for nxt, p in graph.choices[state][a])
            exponents.append((utility.value(net, spp, a, state) + downstream) / mu)
        values[state] = mu * logsumexp(exponents)
    return ValueFunction(
        network=net, support_points=spp, utility=utility, initial=initial, values=values
    )


def _choice_exponents(vf: ValueFunction, state: State) -> tuple[tuple[int, ...], list[float]]:
    net, spp, utility = vf.network, vf.support_points, vf.utility
    links = net.outgoing(state.link)
    if not links:
        raise ValidationError(f"state {state} has no outgoing links")
    exponents = [
        (utility.value(net, spp, a, state) + vf.expected_downstream(a, state)) / utility.mu
        for a in links
    ]
    return links, exponents


def choice_distribution(vf: ValueFunction, state: State) -> dict[int, float]:
    """Logit probabilities over the outgoing links of a state; sums to 1."""
    links, exponents = _choice_exponents(vf, state)
    probs = softmax(exponents)
    return {a: float(p) for a, p in zip(links, probs)}


def link_choice_prob(vf: ValueFunction, state: State, a: int) -> float:
    """Probability of choosing outgoing link ``a`` at ``state``."""
    dist = choice_distribution(vf, state)
    if a not in dist:
        raise ValidationError(f"link {a} is not an outgoing link of link {state.link}")
    return dist[a]


def sequence_log_likelihood(vf: ValueFunction, seq: StateSequence) -> float:
    """Log of the sequence likelihood: sum of log choice and log transition terms."""
    seq.validate(vf.network, vf.support_points)
    total = 0.0
    for i in range(len(seq.states) - 1):
        cur, nxt = seq.states[i], seq.states[i + 1]
        links, exponents = _choice_exponents(vf, cur)
        log_probs = log_softmax(exponents)
        total += float(log_probs[links.index(nxt.link)])
        total += math.log(transition_prob(vf.support_points, nxt.ev, cur.ev))
    return total


def sequence_likelihood(vf: ValueFunction, seq: StateSequence) -> float:
    """Probability of observing a full state sequence.

    Product over steps of (link choice probability) times (knowledge
    transition probability). The choice term embeds an expectation of the
    value function over all possible next knowledge states, not just the
    observed one, so adjacent values do not cancel.
    """
    seq.validate(vf.network, vf.support_points)
    prob = 1.0
    for i in range(len(seq.states) - 1):
        cur, nxt = seq.states[i], seq.states[i + 1]
        prob *= link_choice_prob(vf, cur, nxt.link)
        prob *= transition_prob(vf.support_points, nxt.ev, cur.ev)
    return prob


def sequence_likelihood_value_form(vf: ValueFunction, seq: StateSequence) -> float:
    """Same likelihood written with the current state's value in the denominator.

    exp((utility + expected downstream value - state value) / mu) per
    step; equal to :func:`sequence_likelihood` because each value is the
    log-sum of its own choice exponents.
    """
    seq.validate(vf.network, vf.support_points)
    net, spp, utility = vf.network, vf.support_points, vf.utility
    prob = 1.0
    for i in range(len(seq.states) - 1):
        cur, nxt = seq.states[i], seq.states[i + 1]
        numerator = (
            utility.value(net, spp, nxt.link, cur) + vf.expected_downstream(nxt.link, cur)
        ) / utility.mu
        prob *= math.exp(numerator - vf[cur] / utility.mu)
        prob *= transition_prob(spp, nxt.ev, cur.ev)
    return prob


def sequence_probabilities(
    vf: ValueFunction, cap: int = DEFAULT_POLICY_CAP
) -> dict[StateSequence, float]:
    """Likelihood of every feasible sequence from the solved initial state."""
    sequences = enumerate_sequences(vf.network, vf.support_points, vf.initial, cap=cap)
    return {seq: sequence_likelihood(vf, seq) for seq in sequences}


def path_probabilities(
    vf: ValueFunction, cap: int = DEFAULT_POLICY_CAP
) -> dict[tuple[int, ...], float]:
    """Sequence likelihoods aggregated by traversed link path."""
    totals: dict[tuple[int, ...], float] = {}
    for seq, prob in sequence_probabilities(vf, cap=cap).items():
        totals[seq.path] = totals.get(seq.path, 0.0) + prob
    return dict(sorted(totals.items()))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_sequence(vf: ValueFunction, seed=None) -> StateSequence:
    """Generate one trajectory: sample a link, then a next knowledge state, until arrival."""
    rng = _as_rng(seed)
    net, spp = vf.network, vf.support_points
    t_max = net.trip_horizon(spp)
    state = vf.initial
    states = [state]
    while not net.is_destination(state.link):
        if state.time > t_max:
            raise HorizonError(f"sampled trajectory exceeded the trip horizon {t_max}")
        dist = choice_distribution(vf, state)
        links = list(dist)
        a = links[rng.choice(len(links), p=np.array([dist[l] for l in links]))]
        succ = successor_states(net, spp, state, a)
        idx = rng.choice(len(succ), p=np.array([p for _, p in succ]))
        state = succ[idx][0]
        states.append(state)
    return StateSequence(tuple(states))


def _successor_distributions(vf: ValueFunction):
    """Index the reachable states and combine choice and transition probabilities."""
    graph = decision_graph(vf.network, vf.support_points, vf.initial)
    states = list(graph.states)
    index = {s: i for i, s in enumerate(states)}
    terminal = np.array([s in graph.terminal for s in states])
    successors: list[list[tuple[int, float]]] = [[] for _ in states]
    for state in graph.decision_states():
        dist = choice_distribution(vf, state)
        combined = [
            (index[nxt], dist[a] * p)
            for a in sorted(graph.choices[state])
            for nxt, p in graph.choices[state][a]
        ]
        successors[index[state]] = combined
    return states, index, terminal, successors


def sample_sequence_counts(vf: ValueFunction, n: int, seed=None) -> dict[StateSequence, int]:
    """Frequencies of ``n`` independent sampled trajectories.

    Vectorized over walkers: every active walker draws its next state
    from the combined (link choice x knowledge transition) distribution
    of its current state. Identical trajectories are returned as counts.
    """
    rng = _as_rng(seed)
    states, index, terminal, successors = _successor_distributions(vf)
    width = max((len(s) for s in successors), default=1)
    n_states = len(states)
    cum = np.ones((n_states, width))
    nxt = np.zeros((n_states, width), dtype=np.int64)
    for i, succ in enumerate(successors):
        if not succ:
            nxt[i, :] = i
            continue
        probs = np.array([p for _, p in succ])
        cum[i, : len(succ)] = np.cumsum(probs)
        cum[i, len(succ) - 1] = 1.0 + 1e-12  # guard against cumulative rounding
        cum[i, len(succ):] = 1.0 + 1e-12
        nxt[i, : len(succ)] = [j for j, _ in succ]
        nxt[i, len(succ):] = succ[-1][0]
    # longest possible trajectory bounds the walk
    max_steps = n_states
    base = n_states + 1

    # path codes are base-(n_states+1) digit strings; fall back to Python
    # integers when they cannot fit in 63 bits
    use_object = (max_steps + 1) * math.log2(base) >= 62
    codes = np.zeros(n, dtype=object if use_object else np.int64)
    if use_object:
        codes[:] = [0] * n
    cur = np.full(n, index[vf.initial], dtype=np.int64)
    alive = ~terminal[cur]
    steps = 0
    while alive.any():
        steps += 1
        if steps > max_steps:
            raise HorizonError("sampled trajectories did not all terminate")
        rows = cur[alive]
        u = rng.random(rows.size)
        pick = (u[:, None] >= cum[rows]).sum(axis=1)
        chosen = nxt[rows, pick]
        codes[alive] = codes[alive] * base + (chosen + 1)
        cur[alive] = chosen
        alive[alive] = ~terminal[chosen]

    unique, counts = np.unique(codes, return_counts=True)
    result: dict[StateSequence, int] = {}
    for code, count in zip(unique, counts):
        digits = []
        value = int(code)
        while value:
            value, digit = divmod(value, base)
            digits.append(digit - 1)
        digits.reverse()
        seq = StateSequence(tuple([vf.initial] + [states[d] for d in digits]))
        result[seq] = int(count)
    return dict(sorted(result.items(), key=lambda item: item[0].label()))
