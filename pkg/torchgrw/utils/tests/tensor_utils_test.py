#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved

import unittest

import torch
from torchgrw.utils.tensor_utils import (
    as_qubit_tensor,
    basis_bits,
    basis_index,
    configuration_weights,
    num_qubits,
    slot_bit_table,
    slot_dim,
    slot_marginal,
)


class tensor_utils_test(unittest.TestCase):
    def setUp(self):
        generator = torch.Generator()
        generator.manual_seed(0)
        self.probs = torch.rand(8, generator=generator, dtype=torch.float64)
        self.probs /= self.probs.sum()

    def test_num_qubits(self):
        self.assertEqual(num_qubits(self.probs), 3)
        self.assertEqual(num_qubits(self.probs.expand(5, 8), batch_first=True), 3)
        with self.assertRaises(ValueError):
            num_qubits(torch.zeros(6))
        with self.assertRaises(ValueError):
            num_qubits(torch.zeros(2, 8))

    def test_basis_bits(self):
        self.assertEqual(basis_bits(6, 3), (0, 1, 1))
        for index in range(16):
            self.assertEqual(basis_index(basis_bits(index, 4)), index)
        with self.assertRaises(ValueError):
            basis_index([0, 2])

    def test_slot_dim(self):
        self.assertEqual(slot_dim(0, 4), 3)
        self.assertEqual(slot_dim(0, 4, batch_first=True), 4)
        with self.assertRaises(ValueError):
            slot_dim(4, 4)

    def test_qubit_view(self):
        view = as_qubit_tensor(self.probs)
        # slot 0 is the last dimension
        self.assertEqual(float(view[0, 0, 1]), float(self.probs[1]))
        self.assertEqual(float(view[1, 0, 0]), float(self.probs[4]))

    def test_bit_table(self):
        table = slot_bit_table(3, [2, 0])
        self.assertEqual(table[1].tolist(), [0, 1])
        self.assertEqual(table[4].tolist(), [1, 0])

    def test_slot_marginal(self):
        marginal = slot_marginal(self.probs, [2, 0])
        self.assertEqual(tuple(marginal.shape), (2, 2))
        for a in (0, 1):
            for b in (0, 1):
                expected = sum(
                    float(self.probs[i])
                    for i in range(8)
                    if basis_bits(i, 3)[2] == a and basis_bits(i, 3)[0] == b
                )
                self.assertAlmostEqual(float(marginal[a, b]), expected, places=12)

    def test_batched_slot_marginal(self):
        batch = torch.stack([self.probs, self.probs.flip(0)])
        marginal = slot_marginal(batch, [1, 0], batch_first=True)
        self.assertEqual(tuple(marginal.shape), (2, 2, 2))
        self.assertTrue(torch.allclose(marginal[0], slot_marginal(self.probs, [1, 0])))

    def test_configuration_weights(self):
        weights = configuration_weights(self.probs, [{}, {0: 1}, {0: 1, 2: 0}])
        self.assertAlmostEqual(float(weights[0]), 1.0, places=12)
        self.assertAlmostEqual(
            float(weights[1]), float(self.probs[1::2].sum()), places=12
        )
        self.assertAlmostEqual(
            float(weights[2]), float(self.probs[1] + self.probs[3]), places=12
        )


if __name__ == "__main__":
    unittest.main()
