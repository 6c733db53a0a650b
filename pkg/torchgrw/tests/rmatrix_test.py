#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved

import unittest

import torch
from torchgrw.lattice import LatticeGeometry, build_dag
from torchgrw.quantum import DTYPE, NonUnitaryError
from torchgrw.rmatrix import (
    RegionAssignment,
    RegionOverride,
    RegionOverrideSpec,
    RMatrixKind,
    RMatrixSpec,
    UniformAssignment,
    build_assignment,
    identity_matrix,
    random_assignment,
    random_unitary,
    swap_matrix,
)


class rmatrix_test(unittest.TestCase):
    def setUp(self):
        # the last motion crosses slot 0 a second time
        _, self.dag, self.vertices = build_dag(LatticeGeometry(2), [0, 2, 1, 3, 0])

    def test_random_unitary_is_seeded(self):
        self.assertTrue(torch.equal(random_unitary(4), random_unitary(4)))
        self.assertFalse(torch.equal(random_unitary(4), random_unitary(5)))
        U = random_unitary(4)
        self.assertTrue(
            torch.allclose(U.conj().T @ U, torch.eye(4, dtype=DTYPE), atol=1e-12)
        )

    def test_spec_build(self):
        self.assertTrue(torch.equal(RMatrixSpec().build(), identity_matrix()))
        self.assertTrue(torch.equal(RMatrixSpec(RMatrixKind.SWAP).build(), swap_matrix()))
        entries = tuple(complex(v) for v in swap_matrix().flatten().tolist())
        explicit = RMatrixSpec(RMatrixKind.EXPLICIT, entries=entries)
        self.assertTrue(torch.equal(explicit.build(), swap_matrix()))

    def test_spec_payloads(self):
        with self.assertRaises(ValueError):
            RMatrixSpec(RMatrixKind.RANDOM_UNITARY)
        with self.assertRaises(ValueError):
            RMatrixSpec(RMatrixKind.EXPLICIT, entries=(1,) * 4)
        with self.assertRaises(NonUnitaryError):
            RMatrixSpec(RMatrixKind.EXPLICIT, entries=(1,) * 16).build()

    def test_uniform(self):
        assignment = UniformAssignment(swap_matrix())
        for vertex in self.vertices:
            self.assertTrue(torch.equal(assignment.matrix(vertex), swap_matrix()))

    def test_region_override(self):
        a, b, _, _, e = self.vertices
        override = RegionOverride(0, 1, None, swap_matrix())
        self.assertFalse(override.covers(a))
        self.assertTrue(override.covers(e))
        self.assertFalse(override.covers(b))

    def test_region_bad_range(self):
        with self.assertRaises(ValueError):
            RegionOverride(0, 2, 1, swap_matrix())

    def test_last_override_wins(self):
        a = self.vertices[0]
        assignment = RegionAssignment(
            UniformAssignment(identity_matrix()),
            [
                RegionOverride(0, 0, None, swap_matrix()),
                RegionOverride(0, 0, 0, random_unitary(1)),
            ],
        )
        self.assertTrue(torch.equal(assignment.matrix(a), random_unitary(1)))
        self.assertTrue(torch.equal(assignment.matrix(self.vertices[4]), swap_matrix()))

    def test_with_vertex(self):
        base = UniformAssignment(identity_matrix())
        b = self.vertices[1]
        changed = base.with_vertex(b, random_unitary(2))
        self.assertTrue(torch.equal(changed.matrix(b), random_unitary(2)))
        self.assertTrue(changed.differs_only_on(base, self.vertices, [b]))
        self.assertFalse(changed.differs_only_on(base, self.vertices, []))
        again = changed.with_vertex(self.vertices[0], swap_matrix())
        self.assertTrue(torch.equal(again.matrix(b), random_unitary(2)))

    def test_random_assignment(self):
        first = random_assignment(self.vertices[:2], seed=9)
        second = random_assignment(self.vertices[:2], seed=9)
        for vertex in self.vertices:
            self.assertTrue(torch.equal(first.matrix(vertex), second.matrix(vertex)))
        self.assertTrue(torch.equal(first.matrix(self.vertices[2]), identity_matrix()))
        self.assertFalse(
            torch.equal(first.matrix(self.vertices[0]), first.matrix(self.vertices[1]))
        )

    def test_build_assignment(self):
        override = RegionOverrideSpec("hot", 1, 0, 0, RMatrixSpec(RMatrixKind.SWAP))
        assignment = build_assignment(RMatrixSpec(), [override])
        self.assertTrue(torch.equal(assignment.matrix(self.vertices[2]), swap_matrix()))
        self.assertTrue(torch.equal(assignment.matrix(self.vertices[0]), identity_matrix()))
        self.assertIsInstance(build_assignment(RMatrixSpec()), UniformAssignment)


if __name__ == "__main__":
    unittest.main()
