"""Link utility specification and value-function container."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Mapping

from .errors import ValidationError
from .network import State, StdNetwork, SupportPointSet, successor_states, travel_time

AttributeExtractor = Callable[[StdNetwork, SupportPointSet, int, State], tuple[float, ...]]


def travel_time_attributes(
    net: StdNetwork, spp: SupportPointSet, a: int, state: State
) -> tuple[float, ...]:
    """Default single attribute: the realized travel time of the chosen link."""
    return (float(travel_time(net, spp, a, state)),)


@dataclass(frozen=True, eq=False)
class LinkUtilitySpec:
    """Deterministic link utility beta . attributes with logit scale ``mu``.

    The default is a single travel-time attribute with coefficient -1, so
    utility equals negative travel time.
    """

    beta: tuple[float, ...] = (-1.0,)
    mu: float = 1.0
    attributes: AttributeExtractor = travel_time_attributes

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if not self.mu > 0:
            raise ValidationError("scale parameter mu must be strictly positive")

    def value(self, net: StdNetwork, spp: SupportPointSet, a: int, state: State) -> float:
        attrs = self.attributes(net, spp, a, state)
        if len(attrs) != len(self.beta):
            raise ValidationError(
                f"attribute vector has {len(attrs)} entries but beta has {len(self.beta)}"
            )
        return sum(b * v for b, v in zip(self.beta, attrs))

    def with_beta(self, beta) -> "LinkUtilitySpec":
        return replace(self, beta=tuple(float(b) for b in beta))

    def with_mu(self, mu: float) -> "LinkUtilitySpec":
        return replace(self, mu=float(mu))


@dataclass(frozen=True, eq=False)
class ValueFunction:
    """Expected utility-to-go per state, solved for one network/utility pair.

    Terminal states (at the destination node) map to 0. The container
    keeps the inputs it was solved from so probability queries need no
    extra arguments.
    """

    network: StdNetwork
    support_points: SupportPointSet
    utility: LinkUtilitySpec
    initial: State
    values: Mapping[State, float]

    def __getitem__(self, state: State) -> float:
        try:
            return self.values[state]
        except KeyError:
            raise ValidationError(f"no value stored for state {state}") from None

    def get(self, state: State, default: float | None = None):
        return self.values.get(state, default)

    def expected_downstream(self, a: int, state: State) -> float:
        """Expectation of the value over the possible next knowledge states after link ``a``."""
        return sum(
            p * self[nxt]
            for nxt, p in successor_states(self.network, self.support_points, state, a)
        )
