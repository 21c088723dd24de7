"""Random small-network generator for property and oracle tests.

Networks are layered (origin node, one or two middle nodes, destination)
with forward links only, so the destination is reachable from every
state and every policy terminates. Travel times at the departure period
are identical across scenarios, keeping the departure knowledge state
unambiguous.
"""

from __future__ import annotations

import numpy as np

from stdroute import Link, StdNetwork, SupportPointSet


def random_network(
    rng: np.random.Generator,
    max_links: int = 6,
    max_support: int = 3,
    max_horizon: int = 3,
    support_count: int | None = None,
) -> tuple[StdNetwork, SupportPointSet]:
    n_mid = int(rng.integers(1, 3))
    nodes = ["o"] + [f"m{i}" for i in range(1, n_mid + 1)] + ["z"]

    # spine guarantees reachability; extras add parallel and skip links
    required = [("o", "m1"), ("m1", "z")]
    if n_mid == 2:
        required.append(("m2", "z"))
    optional = [("o", "z"), ("o", "m1"), ("m1", "z")]
    if n_mid == 2:
        optional += [("o", "m2"), ("m1", "m2"), ("m2", "z"), ("m1", "z")]

    # traversable links, dummy excluded
    budget = int(rng.integers(len(required), max(max_links, len(required) + 1)))
    pairs = list(required)
    extras = list(optional)
    rng.shuffle(extras)
    for pair in extras:
        if len(pairs) >= budget:
            break
        pairs.append(pair)

    links = [Link(0, "o", "o")]
    links += [Link(i + 1, tail, head) for i, (tail, head) in enumerate(pairs)]

    net = StdNetwork(
        nodes=tuple(nodes),
        links=tuple(links),
        origin_link=0,
        destination_link=next(l.id for l in links if l.head == "z"),
        horizon=int(rng.integers(2, max_horizon + 1)),
    )

    r = support_count if support_count is not None else int(rng.integers(1, max_support + 1))
    m = len(pairs)
    for _ in range(50):
        times = rng.integers(1, 4, size=(r, net.horizon, m))
        times[:, 0, :] = times[0, 0, :]  # common departure period
        if r == 1 or len({times[i].tobytes() for i in range(r)}) == r:
            break
    else:
        raise AssertionError("could not draw distinct support points")

    probs = rng.random(r) + 0.2
    probs = probs / probs.sum()
    spp = SupportPointSet(
        link_ids=tuple(l.id for l in links if l.id != 0),
        travel_times=times,
        probabilities=probs,
    )
    return net, spp
