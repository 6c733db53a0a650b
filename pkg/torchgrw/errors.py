#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
r"""
Exception hierarchy shared by the lattice, quantum, oracle and CLI layers.

Every error raised on purpose by ``torchgrw`` derives from
:class:`GRWLatticeError`, so callers (the CLI in particular) can tell a
physics or validation failure apart from a programming error.
"""


class GRWLatticeError(Exception):
    r"""
    Base class for all errors raised by ``torchgrw``.
    """

    pass


class GuardrailExceededError(GRWLatticeError):
    r"""
    Raised when an exact computation would exceed a configured resource bound
    (enumeration size, operator dimension, lattice width).
    """

    def __init__(self, what: str, size: int, bound: int):
        super().__init__(f"{what} has size {size}, above the configured bound {bound}")
        self.what = what
        self.size = size
        self.bound = bound
