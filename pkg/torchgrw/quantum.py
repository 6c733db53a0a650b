#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
r"""
State-vector algebra on the Hilbert space of a spacelike surface.

States are ``torch.complex128`` tensors of shape ``(2 ** (2N),)``, or
``(B, 2 ** (2N))`` when ``batch_first=True``; basis index ``sum(b_i * 2 ** i)``
where ``b_i`` is the field value on the link in slot ``i``.

Two-qubit operators on a slot pair ``(i, i + 1)`` use row and column index
``2 * b_i + b_{i+1}``. For an R-matrix the columns are the ingoing pair
``(R, L)`` and the rows the outgoing pair ``(L, R)``; both live in the same
two slots, so no relabeling is needed.

A hit multiplies amplitudes by the jump factor

.. math::
    j_{\alpha \hat{\alpha}} = \frac{\delta_{\alpha\hat{\alpha}}
    + (1 - \delta_{\alpha\hat{\alpha}}) X}{\sqrt{1 + X^2}}

and renormalizes. The four operators ``J(a_L, a_R)`` obtained on a vertex are
Kraus operators: the squares of their diagonals sum to one.
"""

import math
from dataclasses import dataclass
from typing import Dict, NamedTuple, Sequence, Tuple, Union

import torch

from .errors import GRWLatticeError
from .utils.tensor_utils import basis_index, num_qubits, slot_dim, slot_marginal


DTYPE = torch.complex128
REAL_DTYPE = torch.float64
NORM_TOLERANCE = 1e-10
UNITARY_TOLERANCE = 1e-12

SlotPair = Tuple[int, int]

# swaps the roles of the two qubits in a 4 x 4 operator index
_PAIR_ORDER = [0, 2, 1, 3]


class ImpossibleOutcomeError(GRWLatticeError):
    r"""
    Raised when a hit selects a value of zero probability.

    Only reachable at ``X = 0``, where it means the sampler picked an outcome
    it should never have picked.
    """

    pass


class NullConditionError(GRWLatticeError):
    r"""
    Raised when the Born rule is conditioned on an event of probability zero.
    """

    pass


class NormDriftError(GRWLatticeError):
    r"""
    Raised when a state leaves the unit sphere by more than the tolerance.
    """

    pass


class NonUnitaryError(GRWLatticeError):
    r"""
    Raised when a matrix used as an R-matrix fails the ``U^dagger U = 1`` check.
    """

    pass


@dataclass(frozen=True)
class JumpSpec:
    r"""
    Collapse strength of the jump factor. ``X = 1`` means no collapse at all,
    ``X = 0`` a projective measurement of every realized link.
    """

    X: float

    def __post_init__(self):
        if not 0.0 <= self.X <= 1.0:
            raise ValueError(f"Jump parameter X must lie in [0, 1], got {self.X}")

    @property
    def normalization(self) -> float:
        return 1.0 / math.sqrt(1.0 + self.X * self.X)


class VertexOutcome(NamedTuple):
    r"""
    Realized field values on the outgoing ``(L, R)`` links of a vertex.
    """

    alpha_L: int
    alpha_R: int

    @property
    def index(self) -> int:
        return 2 * self.alpha_L + self.alpha_R

    @classmethod
    def from_index(cls, index: int) -> "VertexOutcome":
        if not 0 <= index < 4:
            raise ValueError(f"Vertex outcome index must be in [0, 4), got {index}")
        return cls(index >> 1, index & 1)

    def __str__(self):
        return f"{self.alpha_L}{self.alpha_R}"


ALL_OUTCOMES = tuple(VertexOutcome.from_index(i) for i in range(4))


########################
# STATE CONSTRUCTION
########################


def basis_state(n: int, bits: Union[int, Sequence[int]]) -> torch.Tensor:
    r"""
    Returns the basis state with field value ``bits[i]`` on slot ``i``
    (``bits`` may also be the basis index itself).
    """
    index = bits if isinstance(bits, int) else basis_index(bits)
    if isinstance(bits, int) and not 0 <= index < 1 << n:
        raise ValueError(f"Basis index {index} is outside a state of {n} slots")
    if not isinstance(bits, int) and len(bits) != n:
        raise ValueError(f"Expected {n} field values, got {len(bits)}")
    psi = torch.zeros(1 << n, dtype=DTYPE)
    psi[index] = 1.0
    return psi


def product_state(qubits: Sequence[Sequence[complex]]) -> torch.Tensor:
    r"""
    Returns the normalized product of one 2-vector per slot, slot 0 first.
    """
    psi = torch.ones(1, dtype=DTYPE)
    for slot, qubit in enumerate(qubits):
        q = torch.as_tensor(list(qubit), dtype=DTYPE)
        if q.shape != (2,):
            raise ValueError(f"Qubit on slot {slot} must have 2 amplitudes, got {len(qubit)}")
        # slot i carries weight 2 ** i, so it is the leading kron factor
        psi = torch.kron(q, psi)
    return normalize(psi)


def amplitude_state(amplitudes: Sequence[complex]) -> torch.Tensor:
    r"""
    Returns the normalized state with the given amplitudes.
    """
    psi = torch.as_tensor(list(amplitudes), dtype=DTYPE)
    num_qubits(psi)
    return normalize(psi)


def normalize(psi: torch.Tensor, batch_first: bool = False) -> torch.Tensor:
    norm = psi.norm(dim=-1, keepdim=batch_first)
    if bool((norm <= 0).any()):
        raise ValueError("Cannot normalize a zero state")
    return psi / norm


def born_probabilities(psi: torch.Tensor) -> torch.Tensor:
    if psi.is_complex():
        return torch.view_as_real(psi).square().sum(dim=-1)
    return psi.square()


def check_norm(psi: torch.Tensor, tolerance: float = NORM_TOLERANCE) -> None:
    r"""
    Raises :class:`NormDriftError` if any state is off the unit sphere by
    more than ``tolerance``.
    """
    check_total(born_probabilities(psi).sum(dim=-1), tolerance)


def check_total(total: torch.Tensor, tolerance: float = NORM_TOLERANCE) -> None:
    r"""
    Same as :func:`check_norm`, given the total Born weight of each state.
    """
    drift = (torch.as_tensor(total, dtype=REAL_DTYPE) - 1.0).abs().max()
    if float(drift) > tolerance:
        raise NormDriftError(
            f"State norm drifted by {float(drift):.3e}, above the tolerance {tolerance}"
        )


def check_unitary(U: torch.Tensor, tolerance: float = UNITARY_TOLERANCE) -> torch.Tensor:
    r"""
    Validates a ``4 x 4`` R-matrix and returns it as ``complex128``.

    Raises
    ------
    NonUnitaryError
        If the shape is wrong or ``U^dagger U`` differs from the identity by
        more than ``tolerance`` in any entry.
    """
    U = torch.as_tensor(U, dtype=DTYPE)
    if U.shape != (4, 4):
        raise NonUnitaryError(f"R-matrix must be 4x4, got shape {tuple(U.shape)}")
    deviation = (U.conj().T @ U - torch.eye(4, dtype=DTYPE)).abs().max()
    if float(deviation) > tolerance:
        raise NonUnitaryError(
            f"Matrix is not unitary: max |U^dagger U - 1| = {float(deviation):.3e}"
        )
    return U


def check_slot_pair(slot_pair: SlotPair, n: int) -> None:
    i, j = slot_pair
    if not 0 <= i < n or j != (i + 1) % n or i == j:
        raise ValueError(
            f"Slots {slot_pair} are not an adjacent pair of a surface with {n} slots"
        )


########################
# UNITARY EVOLUTION
########################


def apply_unitary(
    psi: torch.Tensor,
    slot_pair: SlotPair,
    U: torch.Tensor,
    batch_first: bool = False,
    check: bool = True,
) -> torch.Tensor:
    r"""
    Applies a two-qubit operator to the slots of ``slot_pair``.

    Parameters
    ----------
    psi: torch.Tensor
        State of shape ``(2 ** n,)``, or ``(B, 2 ** n)`` if ``batch_first``.
    slot_pair: Tuple[int, int]
        Adjacent slots ``(i, i + 1 mod n)``.
    U: torch.Tensor
        ``4 x 4`` operator, index ``2 * b_i + b_{i+1}``.
    batch_first: bool
        Whether ``psi`` carries a leading batch dimension.
    check: bool
        If set, the result must have unit norm within ``1e-10``; only
        disable it to apply non-unitary operators.

    Returns
    -------
    torch.Tensor
        The transformed state, same shape as ``psi``.

    Example
    -------
        >>> psi = basis_state(2, [0, 1])
        >>> swap = torch.eye(4, dtype=DTYPE)[[0, 2, 1, 3]]
        >>> apply_unitary(psi, (0, 1), swap).nonzero().item() == basis_index([1, 0])
        True
    """
    n = num_qubits(psi, batch_first)
    check_slot_pair(slot_pair, n)
    i, j = slot_pair
    gate = torch.as_tensor(U, dtype=DTYPE)

    if j == i + 1:
        # slot i + 1 is the dimension just before slot i, so the pair is a
        # contiguous block of 4 with index 2 * b_{i+1} + b_i
        view = psi.reshape(-1, 4, 1 << i)
        out = torch.matmul(gate[_PAIR_ORDER][:, _PAIR_ORDER], view)
    else:
        # wrapped pair (n - 1, 0): the outermost and innermost dimensions
        view = psi.reshape(-1, 2, 1 << (n - 2), 2)
        out = torch.einsum("pqrs,zrms->zpmq", gate.reshape(2, 2, 2, 2), view)
    out = out.reshape(psi.shape)
    if check:
        check_norm(out)
    return out


########################
# JUMPS AND HITS
########################


def jump_factor(spec: JumpSpec, alpha: int, alpha_hat: int) -> float:
    r"""
    Returns ``j(alpha, alpha_hat)``.

    Example
    -------
        >>> round(jump_factor(JumpSpec(0.5), 1, 1), 6)
        0.894427
        >>> round(jump_factor(JumpSpec(0.5), 0, 1), 6)
        0.447214
    """
    return (1.0 if alpha == alpha_hat else spec.X) * spec.normalization


def jump_table(spec: JumpSpec) -> torch.Tensor:
    r"""
    Real ``2 x 2`` table ``T[alpha, alpha_hat] = j(alpha, alpha_hat)``.
    """
    return torch.tensor(
        [[jump_factor(spec, a, h) for h in (0, 1)] for a in (0, 1)], dtype=REAL_DTYPE
    )


def jump_matrix(spec: JumpSpec, alpha_hat: int) -> torch.Tensor:
    r"""
    Diagonal single-link jump operator. For ``alpha_hat = 1`` it is
    ``diag(X, 1) / sqrt(1 + X^2)`` and for ``alpha_hat = 0`` its flip.
    """
    return torch.diag(jump_table(spec)[:, alpha_hat]).to(DTYPE)


def pair_jump_matrix(spec: JumpSpec, outcome: VertexOutcome) -> torch.Tensor:
    r"""
    Diagonal ``4 x 4`` vertex jump operator ``J(outcome)`` on the outgoing pair.
    """
    return torch.kron(
        jump_matrix(spec, outcome.alpha_L), jump_matrix(spec, outcome.alpha_R)
    )


def link_jump_distribution(
    psi: torch.Tensor, slot: int, spec: JumpSpec, batch_first: bool = False
) -> torch.Tensor:
    r"""
    Returns ``[N(0) ** 2, N(1) ** 2]`` for a hit on ``slot``, shape ``(2,)``
    (``(B, 2)`` if batched).
    """
    marginal = slot_marginal(born_probabilities(psi), [slot], batch_first)
    return marginal @ (jump_table(spec) ** 2)


def _slot_view(psi: torch.Tensor, slot: int, batch_first: bool) -> torch.Tensor:
    # (rows, higher slots, slot, lower slots); one row unless batched
    rows = psi.shape[0] if batch_first else 1
    return psi.reshape(rows, -1, 2, 1 << slot)


def _hit_weights(
    slot: int, alpha_hat: Union[int, torch.Tensor], spec: JumpSpec
) -> torch.Tensor:
    table = jump_table(spec)
    if isinstance(alpha_hat, torch.Tensor):
        return table[:, alpha_hat.long()].T.reshape(-1, 1, 2, 1)
    return table[:, alpha_hat].reshape(1, 1, 2, 1)


def link_hit(
    psi: torch.Tensor,
    slot: int,
    alpha_hat: Union[int, torch.Tensor],
    spec: JumpSpec,
    batch_first: bool = False,
) -> Tuple[torch.Tensor, torch.Tensor]:
    r"""
    Hits ``slot`` with realized value ``alpha_hat`` and renormalizes.

    Parameters
    ----------
    psi: torch.Tensor
        Normalized state, ``(2 ** n,)`` or ``(B, 2 ** n)``.
    slot: int
        The hit link's slot.
    alpha_hat: Union[int, torch.Tensor]
        Realized value; a ``(B,)`` tensor gives one value per batch row.
    spec: JumpSpec
        Collapse strength.

    Returns
    -------
    Tuple[torch.Tensor, torch.Tensor]
        The normalized post-hit state and the normalization ``N`` with
        ``N ** 2 = sum(j ** 2 |psi| ** 2)`` (a ``(B,)`` tensor if batched).

    Raises
    ------
    ImpossibleOutcomeError
        If ``N = 0``.
    """
    n = num_qubits(psi, batch_first)
    slot_dim(slot, n)
    hit = (_slot_view(psi, slot, batch_first) * _hit_weights(slot, alpha_hat, spec))
    hit = hit.reshape(psi.shape)
    norm = hit.norm(dim=-1)
    if bool((norm <= 0).any()):
        raise ImpossibleOutcomeError(
            f"Realized value {alpha_hat} on slot {slot} has zero probability"
        )
    divisor = norm.unsqueeze(-1) if batch_first else norm
    return hit / divisor, norm


def vertex_jump_probabilities(
    psi: torch.Tensor, slot_pair: SlotPair, spec: JumpSpec, batch_first: bool = False
) -> torch.Tensor:
    r"""
    Returns ``N(outcome) ** 2`` for the four vertex outcomes, indexed by
    :attr:`VertexOutcome.index`; shape ``(4,)`` or ``(B, 4)``.
    """
    n = num_qubits(psi, batch_first)
    check_slot_pair(slot_pair, n)
    marginal = slot_marginal(born_probabilities(psi), slot_pair, batch_first)
    squared = jump_table(spec) ** 2
    probs = torch.einsum("...ab,ax,by->...xy", marginal, squared, squared)
    return probs.reshape(probs.shape[:-2] + (4,))


def vertex_jump_distribution(
    psi: torch.Tensor, slot_pair: SlotPair, spec: JumpSpec
) -> Dict[VertexOutcome, float]:
    r"""
    Returns the probability of each vertex outcome.

    Example
    -------
        >>> dist = vertex_jump_distribution(basis_state(2, 0), (0, 1), JumpSpec(0.5))
        >>> [round(dist[o], 12) for o in ALL_OUTCOMES]
        [0.64, 0.16, 0.16, 0.04]
    """
    probs = vertex_jump_probabilities(psi, slot_pair, spec)
    return {outcome: float(probs[outcome.index]) for outcome in ALL_OUTCOMES}


def vertex_hit(
    psi: torch.Tensor,
    slot_pair: SlotPair,
    outcome: VertexOutcome,
    spec: JumpSpec,
    batch_first: bool = False,
) -> Tuple[torch.Tensor, torch.Tensor]:
    r"""
    Realizes ``outcome`` on the outgoing pair: a hit on the L slot followed
    by a hit on the R slot.

    Returns
    -------
    Tuple[torch.Tensor, torch.Tensor]
        The post-hit state and ``N = N_L * N_R``, whose square is the outcome's
        probability.
    """
    check_slot_pair(slot_pair, num_qubits(psi, batch_first))
    psi, norm_l = link_hit(psi, slot_pair[0], outcome.alpha_L, spec, batch_first)
    psi, norm_r = link_hit(psi, slot_pair[1], outcome.alpha_R, spec, batch_first)
    return psi, norm_l * norm_r


class VertexHit(NamedTuple):
    psi: torch.Tensor
    outcome: VertexOutcome
    norm_l: float
    norm_r: float
    probabilities: torch.Tensor


def sample_vertex_hit(
    psi: torch.Tensor, slot_pair: SlotPair, spec: JumpSpec, u_l: float, u_r: float
) -> VertexHit:
    r"""
    Draws the L value with ``u_l``, then the R value with ``u_r``, and hits the
    state with both.

    The law, the norms and the post-hit state are those of :func:`link_hit` on
    the L slot followed by the R slot, but the state is read once: a single
    Born pass gives the pair marginal, which also serves as the norm check,
    and one rescale applies both jumps.

    Returns
    -------
    VertexHit
        The post-hit state, the outcome, ``N_L``, ``N_R`` and the four outcome
        probabilities of ``psi`` indexed by :attr:`VertexOutcome.index`.

    Raises
    ------
    NormDriftError
        If ``psi`` is off the unit sphere.
    ImpossibleOutcomeError
        If the drawn outcome has zero probability.
    """
    n = num_qubits(psi)
    check_slot_pair(slot_pair, n)
    marginal = slot_marginal(born_probabilities(psi), slot_pair)
    check_total(marginal.sum())

    table = jump_table(spec)
    squared = table ** 2
    joint = squared.T @ marginal @ squared
    probs_l = joint.sum(dim=1)
    alpha_l = sample_bit(float(probs_l[0] / probs_l.sum()), u_l)
    probs_r = joint[alpha_l]
    alpha_r = sample_bit(float(probs_r[0] / probs_r.sum()), u_r)
    probability = float(joint[alpha_l, alpha_r])
    if not probability > 0.0:
        raise ImpossibleOutcomeError(
            f"Outcome {alpha_l}{alpha_r} on slots {slot_pair} has zero probability"
        )
    norm_l = math.sqrt(float(probs_l[alpha_l]))
    norm_r = math.sqrt(probability) / norm_l

    weights = torch.outer(table[:, alpha_l], table[:, alpha_r]) / (norm_l * norm_r)
    i, j = slot_pair
    if j == i + 1:
        hit = psi.reshape(-1, 4, 1 << i) * weights.T.reshape(1, 4, 1)
    else:
        hit = psi.reshape(-1, 2, 1 << (n - 2), 2) * weights.reshape(1, 2, 1, 2)
    return VertexHit(
        hit.reshape(psi.shape),
        VertexOutcome(alpha_l, alpha_r),
        norm_l,
        norm_r,
        joint.reshape(4),
    )


########################
# BORN RULE
########################


def conditional_weights(
    psi: torch.Tensor, fixed: Dict[int, int], free: Sequence[int]
) -> torch.Tensor:
    r"""
    Unnormalized Born weights of every assignment of ``free`` given ``fixed``;
    entry ``k`` has ``free[m] = (k >> (len(free) - 1 - m)) & 1``, so for a
    pair the index is ``2 * value_0 + value_1``.
    """
    n = num_qubits(psi)
    free = list(free)
    if len(set(free)) != len(free) or not 1 <= len(free) <= 2:
        raise ValueError(f"Expected one or two distinct free slots, got {free}")
    if set(fixed) & set(free) or set(fixed) | set(free) != set(range(n)):
        raise ValueError(
            f"Fixed slots {sorted(fixed)} and free slots {free} must partition "
            f"the {n} slots"
        )
    base = basis_index([fixed.get(slot, 0) for slot in range(n)])
    indices = []
    for k in range(1 << len(free)):
        index = base
        for m, slot in enumerate(free):
            index |= ((k >> (len(free) - 1 - m)) & 1) << slot
        indices.append(index)
    return born_probabilities(psi)[indices]


def born_conditional(
    psi: torch.Tensor, fixed: Dict[int, int], free: Sequence[int]
) -> Dict[Tuple[int, ...], float]:
    r"""
    Conditional Born distribution of the ``free`` slots given the values of
    every other slot.

    Raises
    ------
    NullConditionError
        If the fixed values have zero Born weight.

    Example
    -------
        >>> bell = amplitude_state([1, 0, 0, 1])
        >>> born_conditional(bell, {0: 0}, [1])
        {(0,): 1.0, (1,): 0.0}
    """
    weights = conditional_weights(psi, fixed, free)
    total = weights.sum()
    if float(total) <= 0.0:
        raise NullConditionError(f"Conditioning on {fixed} has zero Born weight")
    probs = weights / total
    width = len(free)
    return {
        tuple((k >> (width - 1 - m)) & 1 for m in range(width)): float(probs[k])
        for k in range(1 << width)
    }


def sample_index(probs: torch.Tensor, u: float) -> int:
    r"""
    Inverse-CDF draw from a discrete distribution with one uniform in ``[0, 1)``.
    """
    cdf = torch.cumsum(probs / probs.sum(), dim=0)
    index = int(torch.searchsorted(cdf, torch.tensor([u], dtype=cdf.dtype), right=True))
    return min(index, probs.shape[0] - 1)


def sample_bit(prob_zero: Union[float, torch.Tensor], u: Union[float, torch.Tensor]):
    r"""
    Returns 0 when ``u < prob_zero``, otherwise 1; works elementwise on tensors.
    """
    if isinstance(u, torch.Tensor):
        return (u >= prob_zero).long()
    return 0 if u < prob_zero else 1

