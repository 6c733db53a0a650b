#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
r"""
Exact history probabilities and the checks built on them.

The probability that the vertices of a natural labeling ``v_1, ..., v_n``
realize the outcomes ``a_1, ..., a_n`` is

.. math::
    P(a_1, \dots, a_n) = |J(a_n) U(v_n) \cdots J(a_1) U(v_1) \Psi_0|^2

Because slots never move, every operator acts on the same ``2N``-qubit space
whatever the labeling, and nothing here needs a dag: the natural-labeling and
past-closure checks read the link identities of the vertices.

Operators are materialized as explicit ``4^N x 4^N`` matrices only up to
``MAX_OPERATOR_HALF_WIDTH``; everything else works on state vectors, batched
over outcome branches.
"""

import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from scipy.stats import chisquare

from .collapse_engine import batch_run
from .errors import GRWLatticeError, GuardrailExceededError
from .lattice import (
    MAX_LINEAR_EXTENSION_SIZE,
    CausalDag,
    PartialStem,
    Vertex,
    build_dag,
    causal_past,
    check_natural_labeling,
    is_spacelike,
    linear_extensions,
    ordered_labeling,
    stem_closure,
)
from .quantum import (
    ALL_OUTCOMES,
    DTYPE,
    REAL_DTYPE,
    JumpSpec,
    SlotPair,
    VertexOutcome,
    apply_unitary,
    born_probabilities,
    jump_table,
    pair_jump_matrix,
    vertex_hit,
    vertex_jump_probabilities,
)
from .rmatrix import RMatrixAssignment, random_assignment
from .run_config import DynamicsKind, RunConfig
from .utils import stats
from .utils.tensor_utils import num_qubits, slot_bit_table


MAX_ENUMERATION_SIZE = 8
MAX_OPERATOR_HALF_WIDTH = 5
DISTRIBUTION_TOLERANCE = 1e-10
OPERATOR_TOLERANCE = 1e-12

Outcomes = Union[Mapping[Vertex, VertexOutcome], Sequence[VertexOutcome]]


class NotSpacelikeError(GRWLatticeError):
    r"""
    Raised when two regions that must be spacelike separated are not.
    """

    pass


@dataclass
class CheckReport:
    r"""
    Result of one verification.

    ``max_deviation`` is the largest absolute difference found; the check
    passes iff it is at most ``tolerance`` (or, for witness searches, iff a
    witness was found). ``witness`` describes a failing (or, for searches,
    the found) instance so it can be replayed.
    """

    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    details: Dict[str, Any] = field(default_factory=dict)
    witness: Optional[Dict[str, Any]] = None


def _report(
    name: str,
    deviation: float,
    tolerance: float,
    details: Optional[Dict[str, Any]] = None,
    witness: Optional[Dict[str, Any]] = None,
) -> CheckReport:
    passed = deviation <= tolerance
    stats.update(stats.StatType.DEVIATION, **{name: deviation})
    return CheckReport(
        name, passed, deviation, tolerance, details or {}, None if passed else witness
    )


def _as_spec(x: Union[float, JumpSpec]) -> JumpSpec:
    return x if isinstance(x, JumpSpec) else JumpSpec(float(x))


def _outcome_list(labeling: Sequence[Vertex], outcomes: Outcomes) -> List[VertexOutcome]:
    if isinstance(outcomes, Mapping):
        if set(outcomes) != set(labeling):
            raise ValueError("Outcomes must be keyed exactly by the labeled vertices")
        return [VertexOutcome(*outcomes[v]) for v in labeling]
    if len(outcomes) != len(labeling):
        raise ValueError(
            f"Expected {len(labeling)} outcomes, got {len(outcomes)}"
        )
    return [VertexOutcome(*o) for o in outcomes]


def check_history_labeling(labeling: Sequence[Vertex], max_size: int) -> None:
    r"""
    Checks that ``labeling`` is a natural labeling of a partial stem of at
    most ``max_size`` vertices.

    Raises
    ------
    GuardrailExceededError
        If the labeling is too long.
    NotNaturalLabelingError
        If a vertex comes before one of its predecessors.
    ValueError
        If some in-link is neither on the initial surface nor produced by a
        labeled vertex.
    """
    if len(labeling) > max_size:
        raise GuardrailExceededError("history", len(labeling), max_size)
    check_natural_labeling(labeling)
    produced = {link for v in labeling for link in v.out_links}
    for vertex in labeling:
        for link in vertex.in_links:
            if link.segment > 0 and link not in produced:
                raise ValueError(
                    f"Vertex {vertex} needs link {link}, which no labeled vertex produces"
                )


########################
# HISTORIES
########################


@dataclass(frozen=True)
class History:
    r"""
    Realized outcomes on every vertex of a partial stem.
    """

    stem: PartialStem
    outcomes: Mapping[Vertex, VertexOutcome]

    def __post_init__(self):
        if set(self.outcomes) != set(self.stem.vertices):
            raise ValueError("History outcomes must be keyed exactly by the stem vertices")

    def __str__(self):
        return " ".join(str(self.outcomes[v]) for v in self.stem.sorted())


@dataclass
class HistoryDistribution:
    r"""
    Exact distribution over the outcome assignments of a partial stem.

    ``probs`` has one axis of size 4 per vertex, in creation order of
    ``vertices``, indexed by :attr:`VertexOutcome.index`.
    """

    vertices: Tuple[Vertex, ...]
    probs: torch.Tensor

    def total(self) -> float:
        return float(self.probs.sum())

    def probability(self, outcomes: Outcomes) -> float:
        index = tuple(o.index for o in _outcome_list(self.vertices, outcomes))
        return float(self.probs[index])

    def marginal(self, vertices: Iterable[Vertex]) -> "HistoryDistribution":
        r"""
        Sums out every vertex not in ``vertices``.
        """
        keep = set(vertices)
        if not keep <= set(self.vertices):
            raise ValueError("Marginal vertices must belong to the distribution")
        summed = [k for k, v in enumerate(self.vertices) if v not in keep]
        probs = self.probs.sum(dim=summed) if summed else self.probs
        return HistoryDistribution(
            tuple(v for v in self.vertices if v in keep), probs
        )

    def max_deviation(self, other: "HistoryDistribution") -> float:
        if self.vertices != other.vertices:
            raise ValueError("Distributions are over different vertex sets")
        return float((self.probs - other.probs).abs().max())

    def items(self) -> Iterable[Tuple[History, float]]:
        stem = PartialStem(frozenset(self.vertices))
        for index in itertools.product(range(4), repeat=len(self.vertices)):
            outcomes = {
                v: VertexOutcome.from_index(i) for v, i in zip(self.vertices, index)
            }
            yield History(stem, outcomes), float(self.probs[index])

    def table(self) -> List[Tuple[str, float]]:
        r"""
        Rows ``(outcome string, probability)``; the outcome string lists the
        ``alpha_L alpha_R`` values of every vertex in creation order.
        """
        return [(str(history), p) for history, p in self.items()]


def _canonical(labeling: Sequence[Vertex], probs: torch.Tensor) -> HistoryDistribution:
    order = sorted(range(len(labeling)), key=lambda k: labeling[k].ordinal)
    vertices = tuple(labeling[k] for k in order)
    return HistoryDistribution(vertices, probs.permute(order) if order else probs)


########################
# OPERATORS
########################


def jump_diagonal(
    num_slots: int, slot_pair: SlotPair, outcome: VertexOutcome, spec: JumpSpec
) -> torch.Tensor:
    r"""
    Diagonal of ``J(outcome)`` acting on ``slot_pair`` as a ``(2 ** num_slots,)``
    real tensor.
    """
    bits = slot_bit_table(num_slots, slot_pair)
    table = jump_table(spec)
    return table[bits[:, 0], outcome.alpha_L] * table[bits[:, 1], outcome.alpha_R]


def _check_operator_size(num_slots: int) -> None:
    if num_slots // 2 > MAX_OPERATOR_HALF_WIDTH:
        raise GuardrailExceededError(
            "explicit operator half width", num_slots // 2, MAX_OPERATOR_HALF_WIDTH
        )


def unitary_operator(num_slots: int, slot_pair: SlotPair, U: torch.Tensor) -> torch.Tensor:
    r"""
    ``U`` on ``slot_pair`` as an explicit matrix on the whole surface.
    """
    _check_operator_size(num_slots)
    eye = torch.eye(1 << num_slots, dtype=DTYPE)
    return apply_unitary(eye, slot_pair, U, batch_first=True, check=False).T


def jump_operator(
    num_slots: int, slot_pair: SlotPair, outcome: VertexOutcome, spec: JumpSpec
) -> torch.Tensor:
    _check_operator_size(num_slots)
    return torch.diag(jump_diagonal(num_slots, slot_pair, outcome, spec)).to(DTYPE)


def kraus_sum(spec: JumpSpec) -> torch.Tensor:
    r"""
    ``sum_a J(a)^dagger J(a)`` on a vertex pair; the identity for every ``X``.
    """
    total = torch.zeros(4, 4, dtype=DTYPE)
    for outcome in ALL_OUTCOMES:
        J = pair_jump_matrix(spec, outcome)
        total = total + J.conj().T @ J
    return total


########################
# HISTORY PROBABILITY
########################


def history_probability(
    labeling: Sequence[Vertex],
    outcomes: Outcomes,
    assignment: RMatrixAssignment,
    psi0: torch.Tensor,
    x: Union[float, JumpSpec],
    max_size: int = MAX_LINEAR_EXTENSION_SIZE,
) -> float:
    r"""
    Probability of one outcome assignment, as the squared norm of the
    alternating product of R-matrices and jumps applied to ``psi0``.

    Parameters
    ----------
    labeling: Sequence[Vertex]
        A natural labeling of a partial stem.
    outcomes: Outcomes
        One outcome per vertex, as a mapping or aligned with ``labeling``.
    assignment: RMatrixAssignment
        R-matrices of the vertices.
    psi0: torch.Tensor
        State on the initial surface.
    x: Union[float, JumpSpec]
        Collapse strength.

    Returns
    -------
    float
        A probability in ``[0, 1]``.

    Example
    -------
        >>> from torchgrw.lattice import LatticeGeometry
        >>> from torchgrw.rmatrix import UniformAssignment, identity_matrix
        >>> from torchgrw.quantum import basis_state
        >>> _, _, labeling = build_dag(LatticeGeometry(1), [0])
        >>> p = history_probability(labeling, [VertexOutcome(0, 0)],
        ...     UniformAssignment(identity_matrix()), basis_state(2, 0), 0.5)
        >>> round(p, 12)
        0.64
    """
    check_history_labeling(labeling, max_size)
    spec = _as_spec(x)
    num_slots = num_qubits(psi0)
    psi = psi0
    for vertex, outcome in zip(labeling, _outcome_list(labeling, outcomes)):
        psi = apply_unitary(psi, vertex.slot_pair, assignment.matrix(vertex), check=False)
        psi = psi * jump_diagonal(num_slots, vertex.slot_pair, outcome, spec)
    return float(born_probabilities(psi).sum())


def sequential_history_probability(
    labeling: Sequence[Vertex],
    outcomes: Outcomes,
    assignment: RMatrixAssignment,
    psi0: torch.Tensor,
    x: Union[float, JumpSpec],
    max_size: int = MAX_LINEAR_EXTENSION_SIZE,
) -> float:
    r"""
    The same probability as :func:`history_probability`, built as the
    product of each outcome's probability given the earlier ones, the way
    the sampler draws them.
    """
    check_history_labeling(labeling, max_size)
    spec = _as_spec(x)
    psi = psi0
    probability = 1.0
    for vertex, outcome in zip(labeling, _outcome_list(labeling, outcomes)):
        psi = apply_unitary(psi, vertex.slot_pair, assignment.matrix(vertex))
        conditional = float(
            vertex_jump_probabilities(psi, vertex.slot_pair, spec)[outcome.index]
        )
        if conditional <= 0.0:
            return 0.0
        probability *= conditional
        psi, _ = vertex_hit(psi, vertex.slot_pair, outcome, spec)
    return probability


def heisenberg_history(
    labeling: Sequence[Vertex],
    outcomes: Outcomes,
    assignment: RMatrixAssignment,
    x: Union[float, JumpSpec],
    num_slots: int,
) -> List[torch.Tensor]:
    r"""
    Heisenberg-picture jump operators ``J_{v_1}, ..., J_{v_n}`` on the initial
    surface, ``J_{v_k} = W_k^dagger J(a_k) W_k`` with
    ``W_k = U(v_k) ... U(v_1)``.
    """
    _check_operator_size(num_slots)
    check_history_labeling(labeling, MAX_LINEAR_EXTENSION_SIZE)
    spec = _as_spec(x)
    W = torch.eye(1 << num_slots, dtype=DTYPE)
    operators = []
    for vertex, outcome in zip(labeling, _outcome_list(labeling, outcomes)):
        W = unitary_operator(num_slots, vertex.slot_pair, assignment.matrix(vertex)) @ W
        J = jump_operator(num_slots, vertex.slot_pair, outcome, spec)
        operators.append(W.conj().T @ J @ W)
    return operators


def heisenberg_jump(
    k: int,
    labeling: Sequence[Vertex],
    outcomes: Outcomes,
    assignment: RMatrixAssignment,
    x: Union[float, JumpSpec],
    num_slots: int,
) -> torch.Tensor:
    r"""
    Heisenberg-picture jump operator of the ``k``-th vertex (1-based) of
    ``labeling``, as an explicit matrix on the initial surface.
    """
    if not 1 <= k <= len(labeling):
        raise ValueError(f"k must lie in [1, {len(labeling)}], got {k}")
    prefix = list(labeling[:k])
    prefix_outcomes = _outcome_list(labeling, outcomes)[:k]
    return heisenberg_history(prefix, prefix_outcomes, assignment, x, num_slots)[-1]


def heisenberg_probability(
    labeling: Sequence[Vertex],
    outcomes: Outcomes,
    assignment: RMatrixAssignment,
    psi0: torch.Tensor,
    x: Union[float, JumpSpec],
) -> float:
    r"""
    The history probability as ``|J_{v_n} ... J_{v_1} psi0|^2`` with
    Heisenberg-picture operators.
    """
    num_slots = num_qubits(psi0)
    operators = heisenberg_history(labeling, outcomes, assignment, x, num_slots)
    psi = psi0
    for J in operators:
        psi = J @ psi
    return float(born_probabilities(psi).sum())


def probability_agreement_check(
    labeling: Sequence[Vertex],
    assignment: RMatrixAssignment,
    psi0: torch.Tensor,
    x: Union[float, JumpSpec],
    tolerance: float = OPERATOR_TOLERANCE,
) -> CheckReport:
    r"""
    Evaluates every atom of ``labeling`` with :func:`history_probability`,
    :func:`sequential_history_probability` and, when the surface is small
    enough for explicit operators, :func:`heisenberg_probability`.
    """
    check_history_labeling(labeling, MAX_ENUMERATION_SIZE)
    use_heisenberg = num_qubits(psi0) // 2 <= MAX_OPERATOR_HALF_WIDTH
    deviation = 0.0
    worst = None
    for outcomes in itertools.product(ALL_OUTCOMES, repeat=len(labeling)):
        values = [
            history_probability(labeling, outcomes, assignment, psi0, x),
            sequential_history_probability(labeling, outcomes, assignment, psi0, x),
        ]
        if use_heisenberg:
            values.append(heisenberg_probability(labeling, outcomes, assignment, psi0, x))
        spread = max(values) - min(values)
        if spread > deviation:
            deviation, worst = spread, [str(o) for o in outcomes]
    return _report(
        "probability_agreement",
        deviation,
        tolerance,
        {"atoms": 4 ** len(labeling), "heisenberg": use_heisenberg},
        {"labeling": [str(v) for v in labeling], "outcomes": worst},
    )


########################
# ENUMERATION
########################


def _labeling_probs(
    labeling: Sequence[Vertex],
    assignment: RMatrixAssignment,
    psi0: torch.Tensor,
    spec: JumpSpec,
) -> torch.Tensor:
    r"""
    Probabilities of all ``4 ** n`` atoms, axes in labeling order.

    Branches are kept unnormalized in one batch; branch ``b`` followed by
    outcome ``o`` becomes row ``4 * b + o``.
    """
    num_slots = num_qubits(psi0)
    psi = psi0.unsqueeze(0)
    for vertex in labeling:
        psi = apply_unitary(
            psi, vertex.slot_pair, assignment.matrix(vertex), batch_first=True, check=False
        )
        diagonals = torch.stack(
            [jump_diagonal(num_slots, vertex.slot_pair, o, spec) for o in ALL_OUTCOMES]
        )
        psi = (psi.unsqueeze(1) * diagonals.unsqueeze(0)).reshape(-1, psi.shape[-1])
    probs = born_probabilities(psi).sum(dim=-1)
    return probs.reshape([4] * len(labeling)) if labeling else probs.reshape(())


def enumerate_distribution(
    stem: PartialStem,
    labeling: Optional[Sequence[Vertex]],
    assignment: RMatrixAssignment,
    psi0: torch.Tensor,
    x: Union[float, JumpSpec],
    max_size: int = MAX_ENUMERATION_SIZE,
) -> HistoryDistribution:
    r"""
    Exact distribution over all outcome assignments of ``stem``, computed
    along ``labeling`` (the stem in creation order if ``None``).

    Raises
    ------
    GuardrailExceededError
        If the stem has more than ``max_size`` vertices.
    """
    labeling = tuple(labeling) if labeling is not None else stem.sorted()
    if set(labeling) != set(stem.vertices) or len(labeling) != len(stem):
        raise ValueError("Labeling must list every stem vertex exactly once")
    check_history_labeling(labeling, max_size)
    probs = _labeling_probs(labeling, assignment, psi0, _as_spec(x))
    return _canonical(labeling, probs)


########################
# THEOREM CHECKS
########################


def gamma_independence_check(
    stem: PartialStem,
    dag: CausalDag,
    assignment: RMatrixAssignment,
    psi0: torch.Tensor,
    x: Union[float, JumpSpec],
    tolerance: float = DISTRIBUTION_TOLERANCE,
) -> CheckReport:
    r"""
    Enumerates the distribution along every natural labeling of ``stem`` and
    reports the largest spread of any atom across labelings.
    """
    distributions = [
        enumerate_distribution(stem, labeling, assignment, psi0, x)
        for labeling in linear_extensions(stem, dag)
    ]
    stacked = torch.stack([d.probs for d in distributions])
    deviation = float((stacked.max(dim=0).values - stacked.min(dim=0).values).max())
    total_error = max(abs(d.total() - 1.0) for d in distributions)
    return _report(
        "gamma_independence",
        max(deviation, total_error),
        tolerance,
        {"extensions": len(distributions), "stem_size": len(stem)},
        {"stem": [str(v) for v in stem.sorted()], "x": _as_spec(x).X},
    )


def commutator_norm(
    u: Vertex,
    v: Vertex,
    outcome_u: VertexOutcome,
    outcome_v: VertexOutcome,
    assignment: RMatrixAssignment,
    x: Union[float, JumpSpec],
    num_slots: int,
) -> float:
    spec = _as_spec(x)
    A = jump_operator(num_slots, u.slot_pair, outcome_u, spec) @ unitary_operator(
        num_slots, u.slot_pair, assignment.matrix(u)
    )
    B = jump_operator(num_slots, v.slot_pair, outcome_v, spec) @ unitary_operator(
        num_slots, v.slot_pair, assignment.matrix(v)
    )
    return float(torch.linalg.matrix_norm(A @ B - B @ A, ord=2))


def commutator_check(
    u: Vertex,
    v: Vertex,
    outcomes: Optional[Tuple[VertexOutcome, VertexOutcome]],
    assignment: RMatrixAssignment,
    x: Union[float, JumpSpec],
    num_slots: int,
) -> float:
    r"""
    Spectral norm of ``[J(a_u) U(u), J(a_v) U(v)]``; with ``outcomes=None``
    the largest norm over all 16 outcome pairs.
    """
    pairs = [outcomes] if outcomes is not None else itertools.product(ALL_OUTCOMES, repeat=2)
    return max(
        commutator_norm(u, v, a, b, assignment, x, num_slots) for a, b in pairs
    )


def no_signaling_check(
    dag: CausalDag,
    region_a: Iterable[Vertex],
    region_b: Iterable[Vertex],
    assignment_1: RMatrixAssignment,
    assignment_2: RMatrixAssignment,
    psi0: torch.Tensor,
    x: Union[float, JumpSpec],
    labeling: Optional[Sequence[Vertex]] = None,
    tolerance: float = DISTRIBUTION_TOLERANCE,
) -> CheckReport:
    r"""
    Checks that the outcome distribution on ``B`` and its causal past does not
    depend on the R-matrices of a spacelike region ``A``.

    Both assignments must agree everywhere but on ``A``. The joint
    distribution of the closure of ``A`` and ``B`` is enumerated under each
    assignment, by default along a labeling that lists ``P(B)``, then ``B``,
    then the rest, and ``A`` is summed out.

    Raises
    ------
    NotSpacelikeError
        If some vertex of ``A`` is not spacelike to some vertex of ``B``.
    """
    region_a, region_b = frozenset(region_a), frozenset(region_b)
    for a in region_a:
        for b in region_b:
            if not is_spacelike(dag, a, b):
                raise NotSpacelikeError(f"Vertices {a} and {b} are not spacelike")

    stem = stem_closure(dag, region_a | region_b)
    if not assignment_1.differs_only_on(assignment_2, stem.vertices, region_a):
        raise ValueError("Assignments must agree outside region A")
    past_b = causal_past(dag, region_b)
    if labeling is None:
        labeling = ordered_labeling(dag, past_b, region_b, stem.vertices)
    observed = past_b | region_b

    first = enumerate_distribution(stem, labeling, assignment_1, psi0, x).marginal(observed)
    second = enumerate_distribution(stem, labeling, assignment_2, psi0, x).marginal(observed)
    deviation = first.max_deviation(second) if observed else 0.0
    return _report(
        "no_signaling",
        deviation,
        tolerance,
        {
            "stem_size": len(stem),
            "observed": len(observed),
            "region_a": len(region_a),
            "region_b": len(region_b),
        },
        {
            "region_a": sorted(str(v) for v in region_a),
            "region_b": sorted(str(v) for v in region_b),
        },
    )


def kraus_check(
    psi: torch.Tensor,
    slot_pair: SlotPair,
    x: Union[float, JumpSpec],
    tolerance: float = OPERATOR_TOLERANCE,
) -> CheckReport:
    r"""
    Checks that the four outcome probabilities of a vertex event sum to one,
    and that the jump operators satisfy ``sum J^dagger J = 1``.
    """
    spec = _as_spec(x)
    probs = vertex_jump_probabilities(psi, slot_pair, spec)
    state_error = float((probs.sum(dim=-1) - 1.0).abs().max())
    operator_error = float((kraus_sum(spec) - torch.eye(4, dtype=DTYPE)).abs().max())
    return _report(
        "kraus",
        max(state_error, operator_error),
        tolerance,
        {"state_error": state_error, "operator_error": operator_error},
        {"slot_pair": list(slot_pair), "x": spec.X},
    )


########################
# SAMOLS DYNAMICS
########################


@dataclass(frozen=True)
class SamolsValues:
    r"""
    A full samols history: field values on every slot of the initial surface
    (slot 0 first) and the outcome of every crossed vertex.
    """

    initial: Tuple[int, ...]
    outcomes: Outcomes


@dataclass
class SamolsDistribution:
    r"""
    Exact joint distribution of the initial configuration and the vertex
    outcomes of a samols run along a fixed labeling.

    ``probs[c, a_1, ..., a_n]`` is the probability of initial basis
    configuration ``c`` followed by outcomes ``a_k`` on ``labeling[k]``;
    ``final[c, a_1, ..., a_n]`` is the basis index of the configuration then
    realized on the current surface.
    """

    labeling: Tuple[Vertex, ...]
    probs: torch.Tensor
    final: torch.Tensor

    def surface_marginal(self) -> torch.Tensor:
        r"""
        Distribution of the realized configuration on the final surface.
        """
        size = self.probs.shape[0]
        return torch.zeros(size, dtype=REAL_DTYPE).scatter_add_(
            0, self.final.flatten(), self.probs.flatten()
        )

    def max_deviation(self, other: "SamolsDistribution") -> float:
        r"""
        Largest atom difference, with outcome axes matched by vertex.
        """
        if set(self.labeling) != set(other.labeling):
            raise ValueError("Distributions are over different vertex sets")
        order = [0] + [1 + other.labeling.index(v) for v in self.labeling]
        return float((self.probs - other.probs.permute(order)).abs().max())

    def total(self) -> float:
        return float(self.probs.sum())

    def table(self) -> List[Tuple[str, float]]:
        r"""
        Rows ``(atom string, probability)``; the atom string gives the initial
        field values, slot 0 first, then ``|`` and the outcome of every vertex
        in labeling order.
        """
        num_slots = self.probs.shape[0].bit_length() - 1
        rows = []
        for index in itertools.product(
            range(self.probs.shape[0]), *([range(4)] * len(self.labeling))
        ):
            config, outcomes = index[0], index[1:]
            values = "".join(str((config >> s) & 1) for s in range(num_slots))
            label = " ".join(
                [values, "|"] + [str(VertexOutcome.from_index(i)) for i in outcomes]
            )
            rows.append((label, float(self.probs[index])))
        return rows


def samols_distribution(
    labeling: Sequence[Vertex],
    assignment: RMatrixAssignment,
    psi0: torch.Tensor,
    max_size: int = MAX_ENUMERATION_SIZE,
) -> SamolsDistribution:
    r"""
    Enumerates every samols history along ``labeling``.

    Atoms are carried as a batch of (realized configuration, probability);
    each vertex splits every atom four ways with the Born rule conditioned
    on the configuration off the vertex's pair.
    """
    check_history_labeling(labeling, max_size)
    num_slots = num_qubits(psi0)
    configs = torch.arange(1 << num_slots)
    probs = born_probabilities(psi0)
    psi = psi0
    for vertex in labeling:
        psi = apply_unitary(psi, vertex.slot_pair, assignment.matrix(vertex))
        i, j = vertex.slot_pair
        base = configs & ~((1 << i) | (1 << j))
        candidates = torch.stack(
            [base | (o.alpha_L << i) | (o.alpha_R << j) for o in ALL_OUTCOMES], dim=1
        )
        weights = born_probabilities(psi)[candidates]
        totals = weights.sum(dim=1, keepdim=True)
        conditional = torch.where(
            totals > 0, weights / totals.clamp_min(1e-300), torch.zeros_like(weights)
        )
        probs = (probs.unsqueeze(1) * conditional).flatten()
        configs = candidates.flatten()
    shape = [1 << num_slots] + [4] * len(labeling)
    return SamolsDistribution(tuple(labeling), probs.reshape(shape), configs.reshape(shape))


def samols_history_probability(
    labeling: Sequence[Vertex],
    values: SamolsValues,
    assignment: RMatrixAssignment,
    psi0: torch.Tensor,
) -> float:
    r"""
    Probability of a full samols history along ``labeling``: the Born weight
    of the initial configuration times the conditional Born probability of
    every vertex outcome given the configuration realized before it.
    """
    check_history_labeling(labeling, MAX_LINEAR_EXTENSION_SIZE)
    num_slots = num_qubits(psi0)
    if len(values.initial) != num_slots:
        raise ValueError(f"Initial configuration must give {num_slots} values")
    realized = list(values.initial)
    index = sum(bit << slot for slot, bit in enumerate(realized))
    probability = float(born_probabilities(psi0)[index])
    psi = psi0
    for vertex, outcome in zip(labeling, _outcome_list(labeling, values.outcomes)):
        if probability <= 0.0:
            return 0.0
        psi = apply_unitary(psi, vertex.slot_pair, assignment.matrix(vertex))
        i, j = vertex.slot_pair
        base = sum(bit << slot for slot, bit in enumerate(realized) if slot not in (i, j))
        weights = born_probabilities(psi)[
            [base | (o.alpha_L << i) | (o.alpha_R << j) for o in ALL_OUTCOMES]
        ]
        probability *= float(weights[outcome.index] / weights.sum())
        realized[i], realized[j] = outcome.alpha_L, outcome.alpha_R
    return probability


def samols_marginal_check(
    labeling: Sequence[Vertex],
    assignment: RMatrixAssignment,
    psi0: torch.Tensor,
    tolerance: float = DISTRIBUTION_TOLERANCE,
) -> CheckReport:
    r"""
    After every prefix of ``labeling``, compares the distribution of the
    realized configuration on the current surface with the Born rule of the
    current state.
    """
    deviation = 0.0
    psi = psi0
    for k in range(len(labeling) + 1):
        if k > 0:
            vertex = labeling[k - 1]
            psi = apply_unitary(psi, vertex.slot_pair, assignment.matrix(vertex))
        marginal = samols_distribution(labeling[:k], assignment, psi0).surface_marginal()
        deviation = max(deviation, float((marginal - born_probabilities(psi)).abs().max()))
    return _report(
        "samols_marginal",
        deviation,
        tolerance,
        {"steps": len(labeling)},
        {"labeling": [str(v) for v in labeling]},
    )


def samols_gamma_witness(
    stem: PartialStem,
    dag: CausalDag,
    psi0: torch.Tensor,
    seed: int = 0,
    trials: int = 20,
    threshold: float = 1e-6,
) -> CheckReport:
    r"""
    Searches random R-matrices for an instance where the samols distribution
    of ``stem`` depends on the natural labeling.

    The report passes iff a witness with deviation above ``threshold`` is
    found; ``witness`` then holds the seed of its R-matrices.
    """
    labelings = list(linear_extensions(stem, dag))
    best = 0.0
    for trial in range(trials):
        trial_seed = seed + 1000 * trial
        assignment = random_assignment(stem.vertices, trial_seed)
        distributions = [
            samols_distribution(labeling, assignment, psi0) for labeling in labelings
        ]
        deviation = max(
            (distributions[0].max_deviation(d) for d in distributions[1:]), default=0.0
        )
        best = max(best, deviation)
        if deviation > threshold:
            stats.update(stats.StatType.DEVIATION, samols_gamma=deviation)
            return CheckReport(
                "samols_gamma_witness",
                True,
                deviation,
                threshold,
                {"trials": trial + 1, "extensions": len(labelings)},
                {
                    "seed": trial_seed,
                    "stem": [str(v) for v in stem.sorted()],
                    "deviation": deviation,
                },
            )
    return CheckReport(
        "samols_gamma_witness",
        False,
        best,
        threshold,
        {"trials": trials, "extensions": len(labelings)},
    )


########################
# SAMPLER FIDELITY
########################


def sampler_fidelity_check(
    config: RunConfig,
    samples: int,
    significance: float = 1e-3,
    min_expected: float = 5.0,
) -> CheckReport:
    r"""
    Chi-square test of sampled grw histories against the exact distribution.

    ``samples`` trajectories are drawn with
    :func:`~torchgrw.collapse_engine.batch_run` along the config's motion
    sequence and compared atom by atom with :func:`enumerate_distribution`;
    atoms expected fewer than ``min_expected`` times are pooled into one bin.
    The report passes iff the p-value exceeds ``significance``.
    """
    if config.dynamics != DynamicsKind.GRW or config.p != 1.0:
        raise ValueError("Sampler fidelity is checked on grw runs with p = 1")
    result = batch_run(config, samples)
    _, dag, labeling = build_dag(config.geometry, result.motions)
    stem = PartialStem(frozenset(labeling))
    exact = enumerate_distribution(
        stem, labeling, config.assignment(), config.initial_psi(), config.x
    )
    n = len(labeling)
    weights = torch.tensor([4 ** (n - 1 - k) for k in range(n)], dtype=torch.long)
    atoms = (result.outcomes * weights).sum(dim=1)
    observed = torch.bincount(atoms, minlength=4 ** n).double().numpy()
    # canonical order is creation order, which is the labeling here
    expected_probs = exact.probs.flatten().numpy()
    expected = expected_probs * samples

    impossible = (expected_probs <= 0) & (observed > 0)
    if impossible.any():
        return CheckReport(
            "sampler_fidelity",
            False,
            float("inf"),
            significance,
            {"impossible_atoms": int(impossible.sum())},
            {"seed": config.seed, "motions": list(result.motions)},
        )

    small = expected < min_expected
    f_obs = np.append(observed[~small], observed[small].sum())
    f_exp = np.append(expected[~small], expected[small].sum())
    keep = f_exp > 0
    f_obs, f_exp = f_obs[keep], f_exp[keep]
    f_exp = f_exp * (f_obs.sum() / f_exp.sum())
    _, pvalue = chisquare(f_obs, f_exp)
    deviation = float(np.abs(observed / samples - expected_probs).max())
    stats.update(stats.StatType.DEVIATION, sampler_fidelity=deviation)
    passed = bool(pvalue > significance)
    return CheckReport(
        "sampler_fidelity",
        passed,
        deviation,
        significance,
        {"pvalue": float(pvalue), "bins": int(len(f_obs)), "samples": samples},
        None if passed else {"seed": config.seed, "motions": list(result.motions)},
    )
