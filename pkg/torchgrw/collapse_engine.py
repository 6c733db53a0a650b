#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
r"""
Stochastic trajectories of the lattice dynamics.

Three dynamics share one loop. Every elementary motion picks an RL pair,
crosses its vertex and applies the vertex's R-matrix; then

* ``grw`` realizes values on the two outgoing links by hitting the state,
  first the L link, then the R link, each value drawn from the hit norms;
* ``samols`` draws the two values from the Born rule conditioned on the
  values already realized on the rest of the surface, leaving the state alone;
* ``unitary`` realizes nothing.

Each motion consumes exactly four uniforms ``[pair, gate, alpha_L, alpha_R]``
from the run's ``torch.Generator`` whatever the dynamics, so a record replays
from ``(config, seed)`` alone.
"""

import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, NamedTuple, Optional, Tuple

import torch

from .config_inspector import RunConfigInspector
from .errors import GuardrailExceededError
from .lattice import (
    CausalDag,
    Surface,
    Vertex,
    apply_motion,
    build_dag,
    initial_surface,
    is_natural_labeling,
    random_motions,
    rl_pairs,
)
from .quantum import (
    DTYPE,
    NullConditionError,
    VertexOutcome,
    apply_unitary,
    born_probabilities,
    check_norm,
    conditional_weights,
    link_hit,
    link_jump_distribution,
    sample_bit,
    sample_index,
    sample_vertex_hit,
)
from .run_config import GENERATOR_ID, MAX_HALF_WIDTH, DynamicsKind, RunConfig
from .utils import stats
from .utils.tensor_utils import basis_bits


UNIFORMS_PER_STEP = 4


class EventStatus(str, Enum):
    REALIZED = "realized"
    SKIPPED = "skipped"
    UNREALIZED = "unrealized"


@dataclass(frozen=True)
class Event:
    r"""
    What happened at one crossed vertex.

    ``norm_l`` and ``norm_r`` are the hit normalizations ``N_L`` and ``N_R``
    of a realized grw event; they are ``None`` for every other event.
    """

    ordinal: int
    slot_pair: Tuple[int, int]
    status: EventStatus
    outcome: Optional[VertexOutcome] = None
    norm_l: Optional[float] = None
    norm_r: Optional[float] = None


AmplitudeRows = Tuple[Tuple[int, float, float], ...]


@dataclass(frozen=True)
class RunRecord:
    r"""
    The reproducible artifact of a run.

    ``final_state``, when kept, lists the nonzero amplitudes as
    ``(index, re, im)`` rows.
    """

    config: RunConfig
    generator: str
    events: Tuple[Event, ...]
    motions: Tuple[int, ...]
    samols_initial: Optional[Tuple[int, ...]] = None
    final_state: Optional[AmplitudeRows] = None

    @property
    def seed(self) -> int:
        return self.config.seed

    def outcomes(self) -> List[Optional[VertexOutcome]]:
        return [event.outcome for event in self.events]

    def final_psi(self) -> Optional[torch.Tensor]:
        if self.final_state is None:
            return None
        psi = torch.zeros(1 << self.config.num_slots, dtype=DTYPE)
        for index, re, im in self.final_state:
            psi[index] = complex(re, im)
        return psi

    def validate(self) -> None:
        r"""
        Checks the record against its own invariants.

        Raises
        ------
        ValueError
            If the events do not match the motions, or the motions are not a
            valid natural labeling of the crossed vertices.
        """
        if len(self.events) != len(self.motions) or len(self.events) != self.config.steps:
            raise ValueError(
                f"Record holds {len(self.events)} events and {len(self.motions)} motions "
                f"for a run of {self.config.steps} steps"
            )
        _, dag, labeling = build_dag(self.config.geometry, self.motions)
        if not is_natural_labeling(labeling, dag):
            raise ValueError("Recorded motions are not a natural labeling")
        for event, vertex in zip(self.events, labeling):
            if event.ordinal != vertex.ordinal or tuple(event.slot_pair) != vertex.slot_pair:
                raise ValueError(f"Event {event.ordinal} does not match vertex {vertex}")
        if (self.samols_initial is not None) != (self.config.dynamics == DynamicsKind.SAMOLS):
            raise ValueError("Only samols records carry an initial configuration")


@dataclass
class Trajectory:
    r"""
    A run in progress.
    """

    surface: Surface
    psi: torch.Tensor
    dag: CausalDag
    events: List[Event] = field(default_factory=list)
    motions: List[int] = field(default_factory=list)
    realized: Optional[List[int]] = None


OnEventFunc = Callable[["CollapseEngine", Vertex, torch.Tensor, torch.Tensor, Event], None]


class CollapseEngine:
    r"""
    Runs one trajectory of the configured dynamics.

    Example
    -------
        >>> engine = CollapseEngine(RunConfig(half_width=2, steps=4, x=0.5, seed=7))
        >>> record = engine.run()
        >>> len(record.events)
        4
    """

    def __init__(
        self,
        config: RunConfig,
        collapse_probability_func: Optional[Callable[[List[Event]], float]] = None,
    ):
        r"""
        Parameters
        ----------
        config: RunConfig
            The run's configuration; validated with :class:`RunConfigInspector`.
        collapse_probability_func: Optional[Callable[[List[Event]], float]]
            Gives the collapse probability of the next vertex from the events
            so far; defaults to the constant ``config.p``.

        Raises
        ------
        GuardrailExceededError
            If ``config.half_width`` is above ``MAX_HALF_WIDTH``.
        InvalidConfigException
            If the config fails validation.
        """
        if isinstance(config.half_width, int) and config.half_width > MAX_HALF_WIDTH:
            raise GuardrailExceededError("half width", config.half_width, MAX_HALF_WIDTH)
        RunConfigInspector().validate(config)

        self.config = config
        self.spec = config.jump_spec
        self.assignment = config.assignment()
        self.collapse_probability_func = collapse_probability_func
        self.on_event_func: Optional[OnEventFunc] = None
        self._set_seed(config.seed)

        self.trajectory = Trajectory(
            surface=initial_surface(config.geometry),
            psi=config.initial_psi(),
            dag=CausalDag(config.geometry),
        )
        self.samols_initial: Optional[Tuple[int, ...]] = None
        if config.dynamics == DynamicsKind.SAMOLS:
            self.samols_initial = self._sample_initial_configuration()
            self.trajectory.realized = list(self.samols_initial)

    def _set_seed(self, seed: int):
        r"""
        Creates the run's private generator; no global random state is touched.
        """
        self.generator = torch.Generator()
        self.generator.manual_seed(seed)

    def set_on_event_func(self, func: Optional[OnEventFunc]):
        r"""
        Sets a function called after every realized vertex with the engine,
        the vertex, the state before the hits, the four outcome probabilities
        of that state and the new event.
        """
        self.on_event_func = func

    def _uniforms(self, count: int = UNIFORMS_PER_STEP) -> List[float]:
        return torch.rand(count, generator=self.generator, dtype=torch.float64).tolist()

    def _sample_initial_configuration(self) -> Tuple[int, ...]:
        u = self._uniforms(1)[0]
        index = sample_index(born_probabilities(self.trajectory.psi), u)
        return tuple(basis_bits(index, self.config.num_slots))

    def _choose_slot(self, u: float) -> int:
        step = len(self.trajectory.motions)
        if self.config.schedule is not None:
            return self.config.schedule[step]
        pairs = rl_pairs(self.trajectory.surface)
        return pairs[min(int(u * len(pairs)), len(pairs) - 1)]

    def _cross(self, u: float, check: bool = True) -> Vertex:
        t = self.trajectory
        slot = self._choose_slot(u)
        t.surface, vertex = apply_motion(t.surface, slot, t.dag)
        t.psi = apply_unitary(
            t.psi, vertex.slot_pair, self.assignment.matrix(vertex), check=check
        )
        t.motions.append(slot)
        return vertex

    def step(self) -> Event:
        r"""
        Performs one elementary motion of the configured dynamics.
        """
        u = self._uniforms()
        if self.config.dynamics == DynamicsKind.GRW:
            event = self.step_grw(u)
        elif self.config.dynamics == DynamicsKind.SAMOLS:
            event = self.step_samols(u)
        else:
            event = self.step_unitary(u)
        self.trajectory.events.append(event)
        return event

    def step_unitary(self, u: List[float]) -> Event:
        vertex = self._cross(u[0])
        return Event(vertex.ordinal, vertex.slot_pair, EventStatus.UNREALIZED)

    def step_grw(self, u: List[float]) -> Event:
        r"""
        One grw motion: unitary evolution, then with the collapse probability
        a hit on the L link followed by a hit on the R link.
        """
        t = self.trajectory
        # the hit checks the norm on its own Born pass
        vertex = self._cross(u[0], check=False)
        p = (
            self.collapse_probability_func(t.events)
            if self.collapse_probability_func is not None
            else self.config.p
        )
        if not u[1] < p:
            check_norm(t.psi)
            return Event(vertex.ordinal, vertex.slot_pair, EventStatus.SKIPPED)

        pre_hit = t.psi
        hit = sample_vertex_hit(pre_hit, vertex.slot_pair, self.spec, u[2], u[3])
        t.psi = hit.psi

        event = Event(
            vertex.ordinal,
            vertex.slot_pair,
            EventStatus.REALIZED,
            hit.outcome,
            hit.norm_l,
            hit.norm_r,
        )
        stats.update(
            stats.StatType.DYNAMICS,
            norm_l=event.norm_l,
            norm_r=event.norm_r,
            probability=(event.norm_l * event.norm_r) ** 2,
        )
        if self.on_event_func is not None:
            self.on_event_func(self, vertex, pre_hit, hit.probabilities, event)
        return event

    def step_samols(self, u: List[float]) -> Event:
        r"""
        One samols motion: unitary evolution, then the two new values are drawn
        from the Born rule conditioned on the realized rest of the surface.
        """
        t = self.trajectory
        vertex = self._cross(u[0])
        slot_l, slot_r = vertex.slot_pair
        fixed = {
            slot: value
            for slot, value in enumerate(t.realized)
            if slot not in vertex.slot_pair
        }
        weights = conditional_weights(t.psi, fixed, vertex.slot_pair)
        if float(weights.sum()) <= 0.0:
            raise NullConditionError(
                f"Realized configuration {t.realized} has zero weight at vertex {vertex}"
            )
        outcome = VertexOutcome.from_index(sample_index(weights, u[2]))
        t.realized[slot_l], t.realized[slot_r] = outcome.alpha_L, outcome.alpha_R
        event = Event(vertex.ordinal, vertex.slot_pair, EventStatus.REALIZED, outcome)
        if self.on_event_func is not None:
            self.on_event_func(self, vertex, t.psi, weights / weights.sum(), event)
        return event

    def run(self, include_state: bool = False) -> RunRecord:
        r"""
        Performs the remaining steps of the configured run and returns its record.
        """
        while len(self.trajectory.events) < self.config.steps:
            self.step()
        return self.record(include_state)

    def record(self, include_state: bool = False) -> RunRecord:
        t = self.trajectory
        return RunRecord(
            config=self.config,
            generator=GENERATOR_ID,
            events=tuple(t.events),
            motions=tuple(t.motions),
            samols_initial=self.samols_initial,
            final_state=amplitude_rows(t.psi) if include_state else None,
        )


def amplitude_rows(psi: torch.Tensor) -> AmplitudeRows:
    r"""
    Nonzero amplitudes of ``psi`` as ``(index, re, im)`` rows.
    """
    indices = (psi != 0).nonzero().flatten().tolist()
    values = psi[indices].tolist()
    return tuple((i, v.real, v.imag) for i, v in zip(indices, values))


def run(config: RunConfig, include_state: bool = False) -> RunRecord:
    r"""
    Runs ``config`` to completion. The record is a pure function of the config
    (seed included).

    Example
    -------
        >>> record = run(RunConfig(half_width=1, steps=0))
        >>> record.events
        ()
    """
    return CollapseEngine(config).run(include_state)


def replay(record: RunRecord) -> RunRecord:
    r"""
    Re-runs the record's config; equal to ``record`` unless the record was
    tampered with.
    """
    return run(record.config, include_state=record.final_state is not None)


class BatchResult(NamedTuple):
    r"""
    Outcomes of many grw trajectories along one motion sequence.

    ``outcomes[b, k]`` is the outcome index of vertex ``k`` in trajectory
    ``b``, or ``-1`` when the vertex was skipped.
    """

    motions: Tuple[int, ...]
    outcomes: torch.Tensor


def batch_run(config: RunConfig, batch_size: int, chunk_size: int = 50000) -> BatchResult:
    r"""
    Samples ``batch_size`` grw trajectories at once along one motion sequence.

    The motion sequence is ``config.schedule`` when set, otherwise it is drawn
    from the seed. The random stream differs from :func:`run`, so the rows are
    not the records :func:`run` would produce for any seed; they follow the
    same law.

    Parameters
    ----------
    config: RunConfig
        A grw or unitary config.
    batch_size: int
        Number of trajectories.
    chunk_size: int
        Trajectories held in memory at once.
    """
    if config.dynamics == DynamicsKind.SAMOLS:
        raise ValueError("batch_run samples grw or unitary dynamics only")
    if config.half_width > MAX_HALF_WIDTH:
        raise GuardrailExceededError("half width", config.half_width, MAX_HALF_WIDTH)
    RunConfigInspector().validate(config)

    generator = torch.Generator()
    generator.manual_seed(config.seed)
    if config.schedule is not None:
        motions = tuple(config.schedule[: config.steps])
    else:
        motions = tuple(random_motions(config.geometry, config.steps, generator))
    _, _, vertices = build_dag(config.geometry, motions)
    assignment = config.assignment()
    matrices = [assignment.matrix(v) for v in vertices]
    spec = config.jump_spec
    psi0 = config.initial_psi()

    chunks = []
    for start in range(0, batch_size, chunk_size):
        size = min(chunk_size, batch_size - start)
        psi = psi0.unsqueeze(0).repeat(size, 1)
        outcomes = torch.full((size, len(vertices)), -1, dtype=torch.long)
        for k, (vertex, U) in enumerate(zip(vertices, matrices)):
            u = torch.rand((size, 3), generator=generator, dtype=torch.float64)
            psi = apply_unitary(psi, vertex.slot_pair, U, batch_first=True)
            if config.dynamics != DynamicsKind.GRW:
                continue
            gate = u[:, 0] < config.p
            alphas = []
            for slot, column in zip(vertex.slot_pair, (1, 2)):
                probs = link_jump_distribution(psi, slot, spec, batch_first=True)
                alpha = sample_bit(probs[:, 0] / probs.sum(dim=1), u[:, column])
                hit, _ = link_hit(psi, slot, alpha, spec, batch_first=True)
                psi = torch.where(gate.unsqueeze(1), hit, psi)
                alphas.append(alpha)
            outcomes[:, k] = torch.where(gate, 2 * alphas[0] + alphas[1], outcomes[:, k])
        chunks.append(outcomes)

    outcomes = torch.cat(chunks) if chunks else torch.zeros((0, len(vertices)), dtype=torch.long)
    return BatchResult(motions, outcomes)


def realized_configuration(record: RunRecord) -> Optional[Tuple[int, ...]]:
    r"""
    Field values realized on the final surface of a samols record.
    """
    if record.samols_initial is None:
        return None
    values = list(record.samols_initial)
    for event in record.events:
        i, j = event.slot_pair
        values[i], values[j] = event.outcome.alpha_L, event.outcome.alpha_R
    return tuple(values)


def warn_ignored_collapse_settings(config: RunConfig) -> None:
    r"""
    Warns when collapse settings accompany a dynamics that ignores them.
    """
    if config.dynamics != DynamicsKind.GRW:
        warnings.warn(
            f"Collapse settings x and p are ignored by {config.dynamics.value} dynamics"
        )
