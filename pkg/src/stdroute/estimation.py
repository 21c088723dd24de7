"""Maximum-likelihood estimation of utility coefficients from observed trajectories.

Either model can be fitted. The scale parameter is held fixed (it is not
separately identified from a single attribute's coefficient); the
coefficient vector is estimated by quasi-Newton ascent with
central-difference gradients.

Observation file format (JSON): a list of records

    [{"traveler_id": "n1",
      "states": [{"link": 0, "time": 0, "ev_members": [1, 2]}, ...]},
     ...]

``ev_members`` may be omitted, in which case knowledge states are
reconstructed from the realized travel times implied by the link/time
pairs: the scenarios compatible with every observed increment must fall
inside a single knowledge class at each step, otherwise the record is
rejected as ambiguous.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import minimize

from .errors import EstimationError, NetworkFormatError, ValidationError
from .network import (
    EventCollection,
    State,
    StdNetwork,
    SupportPointSet,
    event_collections_at,
)
from .numerics import finite_difference_gradient
from .nonrecursive import sequence_log_likelihood_nr
from .policy import PolicyChoiceSet, StateSequence, enumerate_policies
from .recursive import sequence_log_likelihood, solve_value_functions
from .utility import LinkUtilitySpec, ValueFunction, travel_time_attributes

Model = Literal["recursive", "nonrecursive"]


@dataclass(frozen=True)
class ObservationSet:
    """Observed state sequences, one per traveler."""

    observations: tuple[StateSequence, ...]
    traveler_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.traveler_ids and len(self.traveler_ids) != len(self.observations):
            raise ValidationError("traveler_ids do not match the number of observations")

    def __len__(self) -> int:
        return len(self.observations)

    def validate(self, net: StdNetwork, spp: SupportPointSet) -> None:
        for i, seq in enumerate(self.observations):
            try:
                seq.validate(net, spp)
            except ValidationError as exc:
                raise ValidationError(f"observation {i}: {exc}") from None

    def grouped(self) -> dict[StateSequence, int]:
        """Distinct sequences with multiplicities; identical trips share one likelihood term."""
        counts: dict[StateSequence, int] = {}
        for seq in self.observations:
            counts[seq] = counts.get(seq, 0) + 1
        return counts

    @classmethod
    def from_counts(cls, counts: dict[StateSequence, int]) -> "ObservationSet":
        observations = []
        for seq, count in counts.items():
            observations.extend([seq] * count)
        return cls(observations=tuple(observations))

    @classmethod
    def from_json(cls, text: str, net: StdNetwork, spp: SupportPointSet) -> "ObservationSet":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise NetworkFormatError(
                f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from None
        if not isinstance(doc, list):
            raise NetworkFormatError("observation document must be a list of records")
        observations = []
        ids = []
        for i, record in enumerate(doc):
            if not isinstance(record, dict) or "states" not in record:
                raise NetworkFormatError(f"record {i} must be an object with a 'states' list")
            ids.append(str(record.get("traveler_id", i)))
            observations.append(_parse_states(record["states"], net, spp, i))
        obs = cls(observations=tuple(observations), traveler_ids=tuple(ids))
        obs.validate(net, spp)
        return obs

    def to_json(self) -> str:
        records = []
        for i, seq in enumerate(self.observations):
            traveler = self.traveler_ids[i] if self.traveler_ids else str(i)
            records.append(
                {
                    "traveler_id": traveler,
                    "states": [
                        {"link": s.link, "time": s.time, "ev_members": list(s.ev.members)}
                        for s in seq.states
                    ],
                }
            )
        return json.dumps(records, indent=2)


def _parse_states(raw, net: StdNetwork, spp: SupportPointSet, record_index: int) -> StateSequence:
    if not isinstance(raw, list) or len(raw) < 2:
        raise NetworkFormatError(f"record {record_index}: 'states' must list at least two states")
    entries = []
    explicit = True
    for entry in raw:
        if not isinstance(entry, dict) or "link" not in entry or "time" not in entry:
            raise NetworkFormatError(
                f"record {record_index}: each state needs 'link' and 'time'"
            )
        entries.append((int(entry["link"]), int(entry["time"]), entry.get("ev_members")))
        explicit = explicit and entry.get("ev_members") is not None
    if explicit:
        states = tuple(
            State(link, time, EventCollection(tuple(members)))
            for link, time, members in entries
        )
        return StateSequence(states)
    return _reconstruct_sequence(entries, net, spp, record_index)


def _reconstruct_sequence(entries, net, spp, record_index) -> StateSequence:
    """Recover knowledge states from link/time pairs via the realized increments."""
    compatible = set(range(1, spp.size + 1))
    for i in range(len(entries) - 1):
        link, time, _ = entries[i]
        next_link, next_time, _ = entries[i + 1]
        tau = next_time - time
        compatible &= {
            r for r in range(1, spp.size + 1) if spp.time_at(r, time, next_link) == tau
        }
    if not compatible:
        raise ValidationError(
            f"record {record_index}: observed travel times match no scenario"
        )
    states = []
    for link, time, _ in entries:
        classes = [
            ev for ev in event_collections_at(spp, time) if compatible <= set(ev.members)
        ]
        if not classes:
            raise ValidationError(
                f"record {record_index}: knowledge state at t={time} is ambiguous "
                "(compatible scenarios span several classes); provide ev_members"
            )
        states.append(State(link, time, classes[0]))
    return StateSequence(tuple(states))


@dataclass(frozen=True)
class EstimationResult:
    """Outcome of one maximum-likelihood fit."""

    model: str
    beta_hat: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    gradient_norm: float
    std_errors: np.ndarray | None = None


class _LikelihoodCaches:
    """Per-fit caches: choice sets per initial state, value functions per coefficient vector."""

    def __init__(self) -> None:
        self.choice_sets: dict[State, PolicyChoiceSet] = {}
        self.value_functions: dict[tuple[State, bytes], ValueFunction] = {}


def log_likelihood(
    model: Model,
    net: StdNetwork,
    spp: SupportPointSet,
    obs: ObservationSet,
    beta,
    mu: float = 1.0,
    attributes=travel_time_attributes,
    _caches: _LikelihoodCaches | None = None,
) -> float:
    """Sum of log sequence probabilities under the chosen model.

    The recursive model re-solves its value functions for each
    coefficient vector; the non-recursive model re-evaluates policy
    utilities over cached choice sets. A non-finite contribution aborts
    with the index of the offending observation.
    """
    if model not in ("recursive", "nonrecursive"):
        raise ValidationError(f"unknown model {model!r}")
    if not len(obs):
        return 0.0
    caches = _caches if _caches is not None else _LikelihoodCaches()
    beta_arr = np.asarray(beta, dtype=float)
    utility = LinkUtilitySpec(beta=tuple(beta_arr), mu=mu, attributes=attributes)
    first_index: dict[StateSequence, int] = {}
    for i, seq in enumerate(obs.observations):
        first_index.setdefault(seq, i)

    total = 0.0
    for seq, count in obs.grouped().items():
        s0 = seq.initial_state
        if model == "recursive":
            key = (s0, beta_arr.tobytes())
            if key not in caches.value_functions:
                caches.value_functions[key] = solve_value_functions(net, spp, utility, initial=s0)
            term = sequence_log_likelihood(caches.value_functions[key], seq)
        else:
            if s0 not in caches.choice_sets:
                caches.choice_sets[s0] = enumerate_policies(net, spp, s0)
            term = sequence_log_likelihood_nr(seq, caches.choice_sets[s0], utility)
        if not np.isfinite(term):
            raise EstimationError(
                f"observation {first_index[seq]} has zero or non-finite probability "
                f"under the {model} model at beta={beta_arr.tolist()}"
            )
        total += count * term
    return total


GRADIENT_TOL = 1e-6
MAX_ITERATIONS = 200
GRADIENT_STEP = 1e-6


def fit(
    model: Model,
    net: StdNetwork,
    spp: SupportPointSet,
    obs: ObservationSet,
    beta0,
    mu: float = 1.0,
    attributes=travel_time_attributes,
    compute_std_errors: bool = True,
) -> EstimationResult:
    """Maximize the log likelihood over the coefficient vector.

    Parameters
    ----------
    model : "recursive" or "nonrecursive"
    beta0 : initial coefficient vector
    mu : fixed logit scale (not estimated)
    compute_std_errors : report standard errors from the inverse
        negative finite-difference Hessian at the optimum

    Convergence requires the gradient infinity norm to drop below 1e-6
    within 200 iterations; otherwise the best iterate is returned with
    ``converged`` False.
    """
    if not len(obs):
        raise EstimationError("cannot fit an empty observation set")
    obs.validate(net, spp)
    caches = _LikelihoodCaches()
    x0 = np.asarray(beta0, dtype=float)

    def objective(beta: np.ndarray) -> float:
        return -log_likelihood(model, net, spp, obs, beta, mu, attributes, _caches=caches)

    def gradient(beta: np.ndarray) -> np.ndarray:
        return finite_difference_gradient(objective, beta, rel_step=GRADIENT_STEP)

    result = minimize(
        objective,
        x0,
        jac=gradient,
        method="BFGS",
        options={"gtol": GRADIENT_TOL, "maxiter": MAX_ITERATIONS},
    )
    beta_hat = np.asarray(result.x, dtype=float)
    grad_norm = float(np.max(np.abs(gradient(beta_hat))))
    converged = bool(result.success or grad_norm < GRADIENT_TOL)

    std_errors = None
    if compute_std_errors:
        std_errors = _std_errors(objective, beta_hat)

    return EstimationResult(
        model=model,
        beta_hat=beta_hat,
        log_likelihood=float(-result.fun),
        iterations=int(result.nit),
        converged=converged,
        gradient_norm=grad_norm,
        std_errors=std_errors,
    )


def _std_errors(objective, beta_hat: np.ndarray, rel_step: float = 1e-4) -> np.ndarray | None:
    """Standard errors from the finite-difference Hessian of the negative log likelihood."""
    p = beta_hat.size
    hessian = np.empty((p, p))
    for j in range(p):
        h = rel_step * max(1.0, abs(beta_hat[j]))
        up = beta_hat.copy()
        down = beta_hat.copy()
        up[j] += h
        down[j] -= h
        grad_up = finite_difference_gradient(objective, up, rel_step=rel_step)
        grad_down = finite_difference_gradient(objective, down, rel_step=rel_step)
        hessian[j] = (grad_up - grad_down) / (2.0 * h)
    hessian = 0.5 * (hessian + hessian.T)
    try:
        covariance = np.linalg.inv(hessian)
    except np.linalg.LinAlgError:
        return None
    diag = np.diag(covariance)
    if not np.all(np.isfinite(diag)) or np.any(diag <= 0):
        return None
    return np.sqrt(diag)
