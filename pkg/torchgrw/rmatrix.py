#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
r"""
R-matrices and the rules that assign one to every vertex of the lattice.

An assignment is queried with a :class:`~torchgrw.lattice.Vertex` and answers
with a ``4 x 4`` unitary. In a conventional field theory the matrix is the same
everywhere (:class:`UniformAssignment`); :class:`RegionAssignment` lets
regions of the lattice, keyed by slot pair and per-pair motion ordinal, use a
different matrix.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import torch
from scipy.stats import unitary_group

from .lattice import Vertex
from .quantum import DTYPE, check_unitary


class RMatrixKind(IntEnum):
    r"""
    The R-matrices a config file can name.

    1. IDENTITY: links pass through the vertex untouched.
    2. SWAP: the two values are exchanged, so each keeps travelling on its null line.
    3. RANDOM_UNITARY: a Haar-random unitary drawn from a seed.
    4. EXPLICIT: sixteen complex entries given by the user.
    """
    IDENTITY = 1
    SWAP = 2
    RANDOM_UNITARY = 3
    EXPLICIT = 4


def identity_matrix() -> torch.Tensor:
    return torch.eye(4, dtype=DTYPE)


def swap_matrix() -> torch.Tensor:
    r"""
    Maps ``|b_i, b_{i+1}>`` to ``|b_{i+1}, b_i>``.
    """
    return torch.eye(4, dtype=DTYPE)[[0, 2, 1, 3]]


def random_unitary(seed: int) -> torch.Tensor:
    r"""
    Draws a Haar-random ``4 x 4`` unitary; the same seed always gives the
    same matrix.
    """
    matrix = unitary_group.rvs(4, random_state=np.random.default_rng(seed))
    return check_unitary(torch.from_numpy(np.asarray(matrix, dtype=np.complex128)))


@dataclass(frozen=True)
class RMatrixSpec:
    r"""
    Serializable description of one R-matrix.
    """

    kind: RMatrixKind = RMatrixKind.IDENTITY
    seed: Optional[int] = None
    entries: Optional[Tuple[complex, ...]] = None

    def __post_init__(self):
        if self.kind == RMatrixKind.RANDOM_UNITARY and self.seed is None:
            raise ValueError("A random_unitary R-matrix needs a seed")
        if self.kind == RMatrixKind.EXPLICIT and (
            self.entries is None or len(self.entries) != 16
        ):
            raise ValueError("An explicit R-matrix needs exactly 16 entries")

    def build(self) -> torch.Tensor:
        if self.kind == RMatrixKind.IDENTITY:
            return identity_matrix()
        if self.kind == RMatrixKind.SWAP:
            return swap_matrix()
        if self.kind == RMatrixKind.RANDOM_UNITARY:
            return random_unitary(self.seed)
        return check_unitary(
            torch.tensor(list(self.entries), dtype=DTYPE).reshape(4, 4)
        )


@dataclass(frozen=True)
class RegionOverrideSpec:
    r"""
    Serializable :class:`RegionOverride`. ``last_ordinal = None`` leaves the
    region open towards the future.
    """

    name: str
    slot: int
    first_ordinal: int
    last_ordinal: Optional[int]
    matrix: RMatrixSpec

    def build(self) -> "RegionOverride":
        return RegionOverride(
            self.slot, self.first_ordinal, self.last_ordinal, self.matrix.build()
        )


class RMatrixAssignment(ABC):
    r"""
    Abstract rule giving the R-matrix of every vertex.
    """

    @abstractmethod
    def matrix(self, vertex: Vertex) -> torch.Tensor:
        r"""
        Returns the ``4 x 4`` unitary of ``vertex``. A concrete subclass
        must implement this.
        """
        pass

    def with_vertex(self, vertex: Vertex, U: torch.Tensor) -> "RegionAssignment":
        r"""
        Returns a copy of this assignment where ``vertex`` alone uses ``U``.
        """
        slot, ordinal = vertex.location
        return RegionAssignment(self, [RegionOverride(slot, ordinal, ordinal, U)])

    def differs_only_on(
        self,
        other: "RMatrixAssignment",
        vertices: Iterable[Vertex],
        region: Iterable[Vertex],
        tolerance: float = 0.0,
    ) -> bool:
        r"""
        True iff both assignments give the same matrix at every vertex of
        ``vertices`` outside ``region``.
        """
        region = set(region)
        return all(
            float((self.matrix(v) - other.matrix(v)).abs().max()) <= tolerance
            for v in vertices
            if v not in region
        )


class UniformAssignment(RMatrixAssignment):
    r"""
    The same R-matrix at every vertex.

    Example
    -------
        >>> assignment = UniformAssignment(swap_matrix())
    """

    def __init__(self, U: torch.Tensor):
        self.U = check_unitary(U)

    def matrix(self, vertex: Vertex) -> torch.Tensor:
        return self.U


@dataclass
class RegionOverride:
    r"""
    Replaces the R-matrix of the vertices crossed at slot pair
    ``(slot, slot + 1)`` whose pair ordinal lies in
    ``[first_ordinal, last_ordinal]``.
    """

    slot: int
    first_ordinal: int
    last_ordinal: Optional[int]
    U: torch.Tensor = field(repr=False)

    def __post_init__(self):
        self.U = check_unitary(self.U)
        if self.first_ordinal < 0 or (
            self.last_ordinal is not None and self.last_ordinal < self.first_ordinal
        ):
            raise ValueError(
                f"Invalid ordinal range [{self.first_ordinal}, {self.last_ordinal}]"
            )

    def covers(self, vertex: Vertex) -> bool:
        slot, ordinal = vertex.location
        return (
            slot == self.slot
            and self.first_ordinal <= ordinal
            and (self.last_ordinal is None or ordinal <= self.last_ordinal)
        )


class RegionAssignment(RMatrixAssignment):
    r"""
    A base assignment with region overrides; when overrides overlap the one
    listed last wins.
    """

    def __init__(self, base: RMatrixAssignment, overrides: Sequence[RegionOverride]):
        self.base = base
        self.overrides: List[RegionOverride] = list(overrides)

    def matrix(self, vertex: Vertex) -> torch.Tensor:
        for override in reversed(self.overrides):
            if override.covers(vertex):
                return override.U
        return self.base.matrix(vertex)

    def with_vertex(self, vertex: Vertex, U: torch.Tensor) -> "RegionAssignment":
        slot, ordinal = vertex.location
        return RegionAssignment(
            self.base, self.overrides + [RegionOverride(slot, ordinal, ordinal, U)]
        )


def random_assignment(
    vertices: Iterable[Vertex], seed: int, base: Optional[RMatrixAssignment] = None
) -> RegionAssignment:
    r"""
    Gives each of ``vertices`` its own Haar-random unitary, seeded with
    ``seed + vertex.ordinal``; other vertices fall back to ``base``
    (identity by default).
    """
    base = base if base is not None else UniformAssignment(identity_matrix())
    overrides = [
        RegionOverride(
            v.slot_pair[0], v.pair_ordinal, v.pair_ordinal, random_unitary(seed + v.ordinal)
        )
        for v in vertices
    ]
    return RegionAssignment(base, overrides)


def build_assignment(
    spec: RMatrixSpec, overrides: Sequence[RegionOverrideSpec] = ()
) -> RMatrixAssignment:
    r"""
    Builds the assignment described by a config: ``spec`` everywhere,
    except in the override regions.
    """
    uniform = UniformAssignment(spec.build())
    if not overrides:
        return uniform
    return RegionAssignment(uniform, [override.build() for override in overrides])
