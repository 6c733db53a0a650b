#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
"""
Utils for addressing link slots inside flat state-vector tensors.

A state over ``n`` slots has ``2 ** n`` amplitudes with basis index
``sum(b_i * 2 ** i)``. Viewed as a ``[2] * n`` tensor (row major), slot ``i``
lives in dimension ``n - 1 - i``. Batched states carry a leading batch
dimension, so every helper takes ``batch_first`` to shift the slot dims by one.
"""
from typing import Dict, Iterable, List, Sequence, Tuple

import torch


def num_qubits(psi: torch.Tensor, batch_first: bool = False) -> int:
    r"""
    Returns the number of slots a (possibly batched) flat state spans.

    Raises
    ------
    ValueError
        If the last dimension is not a power of two.
    """
    size = psi.shape[-1]
    n = size.bit_length() - 1
    if size < 1 or 1 << n != size:
        raise ValueError(f"State of size {size} is not a power of two")
    expected_dim = 2 if batch_first else 1
    if psi.dim() != expected_dim:
        raise ValueError(
            f"Expected a state of {expected_dim} dimension(s), got shape {tuple(psi.shape)}"
        )
    return n


def slot_dim(slot: int, n: int, batch_first: bool = False) -> int:
    r"""
    Dimension of ``slot`` in the ``[2] * n`` view of a state.

    Example
    -------
        >>> slot_dim(0, 4)
        3
        >>> slot_dim(0, 4, batch_first=True)
        4
    """
    if not 0 <= slot < n:
        raise ValueError(f"Slot {slot} is outside a state of {n} slots")
    return n - 1 - slot + (1 if batch_first else 0)


def as_qubit_tensor(psi: torch.Tensor, batch_first: bool = False) -> torch.Tensor:
    r"""
    Views a flat state as a ``[2] * n`` tensor (``[B] + [2] * n`` if batched).
    """
    n = num_qubits(psi, batch_first)
    shape = ([psi.shape[0]] if batch_first else []) + [2] * n
    return psi.reshape(shape)


def basis_bits(index: int, n: int) -> Tuple[int, ...]:
    r"""
    Field values ``(b_0, ..., b_{n-1})`` of basis state ``index``.

    Example
    -------
        >>> basis_bits(6, 3)
        (0, 1, 1)
    """
    return tuple((index >> slot) & 1 for slot in range(n))


def basis_index(bits: Sequence[int]) -> int:
    r"""
    Inverse of :func:`basis_bits`.
    """
    index = 0
    for slot, bit in enumerate(bits):
        if bit not in (0, 1):
            raise ValueError(f"Field value on slot {slot} must be 0 or 1, got {bit}")
        index |= bit << slot
    return index


def slot_bit_table(n: int, slots: Iterable[int]) -> torch.Tensor:
    r"""
    Returns a ``(2 ** n, len(slots))`` integer table of field values, one row
    per basis index.
    """
    indices = torch.arange(1 << n)
    return torch.stack([(indices >> slot) & 1 for slot in slots], dim=-1)


def slot_marginal(
    probs: torch.Tensor, slots: Sequence[int], batch_first: bool = False
) -> torch.Tensor:
    r"""
    Sums a (possibly batched) probability vector over every slot not in ``slots``.

    Parameters
    ----------
    probs: torch.Tensor
        Real tensor of shape ``(2 ** n,)`` or ``(B, 2 ** n)``.
    slots: Sequence[int]
        Slots to keep, in the order their dimensions should appear.

    Returns
    -------
    torch.Tensor
        Tensor of shape ``[2] * len(slots)`` (with a leading batch dimension if
        ``batch_first``); entry ``[a, b, ...]`` is the weight of
        ``slots[0] = a, slots[1] = b, ...``.
    """
    n = num_qubits(probs, batch_first)
    view = as_qubit_tensor(probs, batch_first)
    kept = [slot_dim(slot, n, batch_first) for slot in slots]
    offset = 1 if batch_first else 0
    summed = [d for d in range(offset, n + offset) if d not in kept]
    marginal = view.sum(dim=summed) if summed else view
    # the remaining dims are in increasing order; reorder them to follow ``slots``
    remaining = [d for d in range(offset, n + offset) if d in kept]
    order = list(range(offset)) + [offset + remaining.index(d) for d in kept]
    return marginal.permute(order)


def configuration_weights(
    probs: torch.Tensor, configurations: List[Dict[int, int]]
) -> torch.Tensor:
    r"""
    Total Born weight of each partial configuration ``{slot: value}``.
    """
    n = num_qubits(probs)
    weights = []
    for configuration in configurations:
        mask = torch.ones(1 << n, dtype=torch.bool)
        indices = torch.arange(1 << n)
        for slot, value in configuration.items():
            mask &= ((indices >> slot) & 1) == value
        weights.append(probs[mask].sum())
    return torch.stack(weights) if weights else torch.zeros(0, dtype=probs.dtype)
