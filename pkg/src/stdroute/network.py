"""Stochastic time-dependent network with a scenario-based travel-time distribution.

The network is a directed graph whose link travel times are jointly
distributed, time-indexed random variables. The joint distribution is a
finite list of scenarios: scenario ``r`` fixes the travel time of every
link at every period, and carries a probability ``p_r``. Beyond the last
stochastic period travel times are static, so period lookups clamp to the
final period.

A traveler with full online information observes every realized travel
time up to (and including) the current period. The scenarios still
compatible with what has been seen form the traveler's knowledge state,
here an :class:`EventCollection`. Decisions happen at the end of a link,
so the decision node is a :class:`State` ``(link, arrival time, event
collection)``.

Network file format (JSON):

    {
      "nodes": ["a", "b", "c"],
      "links": [{"id": 0, "from": "a", "to": "a"}, ...],
      "origin_link": 0,
      "destination_link": 2,
      "horizon": 2,
      "support_points": [
        {"probability": 0.5, "travel_times": {"1": [1, 1], "2": [2, 3], ...}},
        ...
      ]
    }

``origin_link`` is a dummy link with zero travel time; the trip starts at
its head node. ``destination_link`` is any link entering the destination
node; every link into that node is absorbing. ``travel_times`` maps each
traversable link id to its per-period times (the origin dummy may be
omitted). Travel times are strictly positive integers, which makes time
strictly increase along any trajectory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import (
    HorizonError,
    NetworkFormatError,
    PoiConsistencyError,
    UnreachableDestinationError,
    ValidationError,
)

PROBABILITY_TOL = 1e-12


@dataclass(frozen=True)
class EventCollection:
    """Set of scenario indices (1-based) compatible with the observed history."""

    members: tuple[int, ...]

    def __post_init__(self) -> None:
        canon = tuple(sorted(set(int(m) for m in self.members)))
        if not canon:
            raise ValidationError("event collection must be non-empty")
        if canon[0] < 1:
            raise ValidationError("scenario indices are 1-based")
        object.__setattr__(self, "members", canon)

    @property
    def is_singleton(self) -> bool:
        return len(self.members) == 1

    def __contains__(self, r: int) -> bool:
        return r in self.members

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __repr__(self) -> str:
        return "EV{%s}" % ",".join(str(m) for m in self.members)


@dataclass(frozen=True)
class State:
    """Decision node: current link, arrival time at its end, and knowledge state."""

    link: int
    time: int
    ev: EventCollection

    @property
    def sort_key(self) -> tuple[int, int, tuple[int, ...]]:
        return (self.time, self.link, self.ev.members)

    def label(self) -> str:
        return "(%d,%d,{%s})" % (self.link, self.time, ";".join(str(m) for m in self.ev))

    def __repr__(self) -> str:
        return "State" + self.label()


@dataclass(frozen=True)
class Link:
    id: int
    tail: str
    head: str


@dataclass(frozen=True, eq=False)
class SupportPointSet:
    """Joint discrete distribution of all link travel times over all periods.

    ``travel_times`` has shape (R, K, m): scenario, period, link column.
    Columns follow ``link_ids`` (every traversable link, ascending id; the
    origin dummy is excluded because it is never traversed). Scenario
    indices are 1-based everywhere in the public API.
    """

    link_ids: tuple[int, ...]
    travel_times: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.travel_times)
        probs = np.asarray(self.probabilities, dtype=float)
        if times.ndim != 3:
            raise ValidationError("travel_times must have shape (R, K, m)")
        if not np.issubdtype(times.dtype, np.integer):
            if not np.all(times == np.floor(times)):
                raise ValidationError("travel times must be positive integers")
            times = times.astype(np.int64)
        if times.shape[2] != len(self.link_ids):
            raise ValidationError("travel_times columns do not match link_ids")
        if times.shape[0] != probs.shape[0]:
            raise ValidationError("probabilities do not match the number of support points")
        if np.any(times < 1):
            raise ValidationError("travel times must be >= 1 (zero or negative time found)")
        if np.any(probs <= 0):
            raise ValidationError("support point probabilities must be strictly positive")
        total = probs.sum()
        if abs(total - 1.0) > PROBABILITY_TOL:
            raise ValidationError(f"support point probabilities sum to {total!r}, expected 1")
        times = times.copy()
        probs = probs.copy()
        times.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "travel_times", times)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "_columns", {a: i for i, a in enumerate(self.link_ids)})
        object.__setattr__(self, "_partitions", {})

    @property
    def size(self) -> int:
        """Number of support points R."""
        return self.travel_times.shape[0]

    @property
    def horizon(self) -> int:
        """Number of stochastic periods K."""
        return self.travel_times.shape[1]

    def column(self, link_id: int) -> int:
        try:
            return self._columns[link_id]
        except KeyError:
            raise ValidationError(f"link {link_id} has no travel-time distribution") from None

    def time_at(self, scenario: int, t: int, link_id: int) -> int:
        """Travel time of a link in one scenario, clamping to the static tail."""
        period = min(t, self.horizon - 1)
        return int(self.travel_times[scenario - 1, period, self.column(link_id)])

    def mass(self, members: Iterable[int]) -> float:
        return float(sum(self.probabilities[r - 1] for r in members))


def event_collections_at(spp: SupportPointSet, t: int) -> tuple[EventCollection, ...]:
    """Partition of scenarios by equality of all realized travel times up to time ``t``.

    Two scenarios share a class when their full per-link travel-time
    vectors agree at every period 0..min(t, K-1). The partition at t+1
    refines (or equals) the one at t, and it is cached per clamped period.
    """
    if t < 0:
        raise ValidationError("time period must be non-negative")
    period = min(t, spp.horizon - 1)
    cache: dict[int, tuple[EventCollection, ...]] = spp._partitions
    if period not in cache:
        groups: dict[bytes, list[int]] = {}
        for r in range(1, spp.size + 1):
            key = spp.travel_times[r - 1, : period + 1, :].tobytes()
            groups.setdefault(key, []).append(r)
        classes = sorted((tuple(g) for g in groups.values()), key=lambda g: g[0])
        cache[period] = tuple(EventCollection(c) for c in classes)
    return cache[period]


def transition_prob(spp: SupportPointSet, ev_next: EventCollection, ev: EventCollection) -> float:
    """Probability of moving to knowledge state ``ev_next`` from ``ev``.

    Ratio of scenario mass in the intersection to the mass of ``ev``;
    disjoint collections give 0.
    """
    common = set(ev_next.members) & set(ev.members)
    if not common:
        return 0.0
    return spp.mass(common) / spp.mass(ev.members)


@dataclass(frozen=True, eq=False)
class StdNetwork:
    """Directed link graph with a dummy origin link and an absorbing destination node."""

    nodes: tuple[str, ...]
    links: tuple[Link, ...]
    origin_link: int
    destination_link: int
    horizon: int

    def __post_init__(self) -> None:
        ids = [l.id for l in self.links]
        if len(set(ids)) != len(ids):
            raise ValidationError("link identifiers must be unique")
        node_set = set(self.nodes)
        for l in self.links:
            if l.tail not in node_set or l.head not in node_set:
                raise ValidationError(f"link {l.id} references unknown node {l.tail!r} or {l.head!r}")
        by_id = {l.id: l for l in self.links}
        if self.origin_link not in by_id:
            raise ValidationError(f"origin link {self.origin_link} is not a network link")
        if self.destination_link not in by_id:
            raise ValidationError(f"destination link {self.destination_link} is not a network link")
        if self.horizon < 1:
            raise ValidationError("horizon must be at least 1 period")
        object.__setattr__(self, "_by_id", by_id)
        dest_node = by_id[self.destination_link].head
        for l in self.links:
            if l.tail == dest_node:
                raise ValidationError(
                    f"destination node {dest_node!r} must be absorbing but link {l.id} leaves it"
                )
        if by_id[self.origin_link].head == dest_node:
            raise ValidationError("origin link may not end at the destination node")

    @cached_property
    def destination_node(self) -> str:
        return self._by_id[self.destination_link].head

    @cached_property
    def adjacency(self) -> Mapping[int, tuple[int, ...]]:
        """Outgoing links per link: those whose tail is the link's head node, ascending id.

        The dummy origin link only places the traveler at its head node;
        it can never be chosen, so it appears in no adjacency list.
        """
        out: dict[str, list[int]] = {n: [] for n in self.nodes}
        for l in self.links:
            if l.id != self.origin_link:
                out[l.tail].append(l.id)
        return {l.id: tuple(sorted(out[l.head])) for l in self.links}

    def link(self, link_id: int) -> Link:
        try:
            return self._by_id[link_id]
        except KeyError:
            raise ValidationError(f"unknown link {link_id}") from None

    def outgoing(self, link_id: int) -> tuple[int, ...]:
        return self.adjacency[link_id]

    def is_destination(self, link_id: int) -> bool:
        return self.link(link_id).head == self.destination_node

    def trip_horizon(self, spp: SupportPointSet) -> int:
        """Upper bound on arrival times: horizon plus one static-tail traversal per link."""
        tail_max = int(spp.travel_times[:, -1, :].max())
        return self.horizon + len(self.links) * tail_max


def travel_time(net: StdNetwork, spp: SupportPointSet, a: int, state: State) -> int:
    """Realized travel time of outgoing link ``a`` at ``state``.

    Deterministic under full online information: all scenarios in the
    state's knowledge set must agree, otherwise the state was built
    outside the canonical partition.
    """
    if a not in net.outgoing(state.link):
        raise ValidationError(f"link {a} is not an outgoing link of link {state.link}")
    times = {spp.time_at(r, state.time, a) for r in state.ev}
    if len(times) > 1:
        raise PoiConsistencyError(
            f"scenarios {state.ev} disagree on the time of link {a} at t={state.time}: {sorted(times)}"
        )
    return times.pop()


def successor_states(
    net: StdNetwork, spp: SupportPointSet, state: State, a: int
) -> list[tuple[State, float]]:
    """Possible next states after taking link ``a``, with their probabilities.

    One successor per knowledge class at the arrival time that intersects
    the current knowledge set; probabilities sum to 1.
    """
    t_next = state.time + travel_time(net, spp, a, state)
    current = set(state.ev.members)
    result = []
    for ev_next in event_collections_at(spp, t_next):
        if current & set(ev_next.members):
            result.append((State(a, t_next, ev_next), transition_prob(spp, ev_next, state.ev)))
    return result


def is_partition_state(spp: SupportPointSet, state: State) -> bool:
    """Whether the state's knowledge set is a class of the canonical partition at its time."""
    return state.ev in event_collections_at(spp, state.time)


def initial_state(net: StdNetwork, spp: SupportPointSet, t0: int = 0) -> State:
    """Departure state at the end of the origin dummy link.

    Requires a single knowledge class at the departure period (travel
    times at period ``t0`` identical across scenarios), as any split
    would make the departure knowledge state ambiguous.
    """
    classes = event_collections_at(spp, t0)
    if len(classes) != 1:
        raise ValidationError(
            "travel times differ across scenarios at the departure period; "
            "the departure knowledge state is ambiguous"
        )
    return State(net.origin_link, t0, classes[0])


@dataclass(frozen=True, eq=False)
class DecisionGraph:
    """All states reachable from an initial state, with per-link successor lists."""

    initial: State
    states: tuple[State, ...]
    terminal: frozenset[State]
    choices: Mapping[State, Mapping[int, tuple[tuple[State, float], ...]]]

    def decision_states(self) -> tuple[State, ...]:
        return tuple(s for s in self.states if s not in self.terminal)


def decision_graph(net: StdNetwork, spp: SupportPointSet, initial: State) -> DecisionGraph:
    """Expand the reachable state space under every possible choice.

    Time strictly increases along transitions, so the expansion is finite
    whenever trajectories stay within the trip horizon. Raises
    :class:`HorizonError` past the horizon and
    :class:`UnreachableDestinationError` at dead-end states.
    """
    t_max = net.trip_horizon(spp)
    seen: dict[State, None] = {initial: None}
    terminal: set[State] = set()
    choices: dict[State, dict[int, tuple[tuple[State, float], ...]]] = {}
    stack = [initial]
    while stack:
        state = stack.pop()
        if net.is_destination(state.link):
            terminal.add(state)
            continue
        if state.time > t_max:
            raise HorizonError(
                f"state {state} exceeds the trip horizon {t_max} without reaching the destination"
            )
        outgoing = net.outgoing(state.link)
        if not outgoing:
            raise UnreachableDestinationError(f"state {state} has no outgoing links")
        per_link: dict[int, tuple[tuple[State, float], ...]] = {}
        for a in outgoing:
            succ = tuple(successor_states(net, spp, state, a))
            per_link[a] = succ
            for nxt, _ in succ:
                if nxt not in seen:
                    seen[nxt] = None
                    stack.append(nxt)
        choices[state] = per_link
    states = tuple(sorted(seen, key=lambda s: s.sort_key))
    return DecisionGraph(
        initial=initial, states=states, terminal=frozenset(terminal), choices=choices
    )


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise NetworkFormatError(message)


def load_network(text: str) -> tuple[StdNetwork, SupportPointSet]:
    """Parse and validate a network document (see the module docstring for the format)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None

    _require(isinstance(doc, dict), "top level must be an object")
    for key in ("nodes", "links", "origin_link", "destination_link", "horizon", "support_points"):
        _require(key in doc, f"missing required key {key!r}")

    nodes = doc["nodes"]
    _require(
        isinstance(nodes, list) and all(isinstance(n, str) for n in nodes),
        "'nodes' must be a list of strings",
    )

    links = []
    _require(isinstance(doc["links"], list), "'links' must be a list")
    for i, entry in enumerate(doc["links"]):
        _require(isinstance(entry, dict), f"links[{i}] must be an object")
        for key in ("id", "from", "to"):
            _require(key in entry, f"links[{i}] is missing {key!r}")
        _require(isinstance(entry["id"], int), f"links[{i}].id must be an integer")
        links.append(Link(id=entry["id"], tail=entry["from"], head=entry["to"]))
    links.sort(key=lambda l: l.id)

    _require(isinstance(doc["origin_link"], int), "'origin_link' must be a link id")
    _require(isinstance(doc["destination_link"], int), "'destination_link' must be a link id")
    _require(
        isinstance(doc["horizon"], int) and doc["horizon"] >= 1,
        "'horizon' must be a positive integer",
    )

    net = StdNetwork(
        nodes=tuple(nodes),
        links=tuple(links),
        origin_link=doc["origin_link"],
        destination_link=doc["destination_link"],
        horizon=doc["horizon"],
    )

    traversable = tuple(sorted(l.id for l in links if l.id != net.origin_link))
    points = doc["support_points"]
    _require(isinstance(points, list) and points, "'support_points' must be a non-empty list")
    k = net.horizon
    times = np.zeros((len(points), k, len(traversable)), dtype=np.int64)
    probs = np.zeros(len(points), dtype=float)
    col = {a: i for i, a in enumerate(traversable)}
    for r, entry in enumerate(points):
        _require(isinstance(entry, dict), f"support_points[{r}] must be an object")
        _require("probability" in entry, f"support_points[{r}] is missing 'probability'")
        _require("travel_times" in entry, f"support_points[{r}] is missing 'travel_times'")
        probs[r] = float(entry["probability"])
        table = entry["travel_times"]
        _require(isinstance(table, dict), f"support_points[{r}].travel_times must be a mapping")
        seen_links = set()
        for raw_id, row in table.items():
            try:
                link_id = int(raw_id)
            except ValueError:
                raise NetworkFormatError(
                    f"support_points[{r}].travel_times key {raw_id!r} is not a link id"
                ) from None
            if link_id == net.origin_link:
                continue  # dummy origin has zero time and is never traversed
            _require(
                link_id in col,
                f"support_points[{r}].travel_times references unknown link {link_id}",
            )
            _require(
                isinstance(row, list) and len(row) == k,
                f"support_points[{r}].travel_times[{link_id}] must list {k} periods",
            )
            for t, value in enumerate(row):
                _require(
                    isinstance(value, int),
                    f"support_points[{r}].travel_times[{link_id}][{t}] must be an integer",
                )
                times[r, t, col[link_id]] = value
            seen_links.add(link_id)
        missing = set(traversable) - seen_links
        _require(
            not missing,
            f"support_points[{r}].travel_times is missing links {sorted(missing)}",
        )

    spp = SupportPointSet(link_ids=traversable, travel_times=times, probabilities=probs)
    return net, spp


def load_network_file(path) -> tuple[StdNetwork, SupportPointSet]:
    with open(path, "r", encoding="utf-8") as fh:
        return load_network(fh.read())


def bundled_network_text(name: str = "two_route.json") -> str:
    """Text of a network document shipped with the package."""
    return resources.files("stdroute").joinpath(f"data/{name}").read_text(encoding="utf-8")


def load_bundled_network(name: str = "two_route.json") -> tuple[StdNetwork, SupportPointSet]:
    return load_network(bundled_network_text(name))
