#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved

import math
import unittest

import torch
from torchgrw.quantum import (
    ALL_OUTCOMES,
    DTYPE,
    ImpossibleOutcomeError,
    JumpSpec,
    NonUnitaryError,
    NormDriftError,
    NullConditionError,
    VertexOutcome,
    amplitude_state,
    apply_unitary,
    basis_state,
    born_conditional,
    born_probabilities,
    check_norm,
    check_unitary,
    jump_factor,
    link_hit,
    link_jump_distribution,
    pair_jump_matrix,
    product_state,
    sample_bit,
    sample_index,
    sample_vertex_hit,
    vertex_hit,
    vertex_jump_distribution,
    vertex_jump_probabilities,
)
from torchgrw.rmatrix import random_unitary, swap_matrix
from torchgrw.utils.tensor_utils import basis_bits, basis_index


def random_state(n: int, seed: int) -> torch.Tensor:
    generator = torch.Generator()
    generator.manual_seed(seed)
    real = torch.randn(1 << n, generator=generator, dtype=torch.float64)
    imag = torch.randn(1 << n, generator=generator, dtype=torch.float64)
    psi = torch.complex(real, imag)
    return psi / psi.norm()


def dense_operator(U: torch.Tensor, slot_pair, n: int) -> torch.Tensor:
    i, j = slot_pair
    dense = torch.zeros((1 << n, 1 << n), dtype=DTYPE)
    for column in range(1 << n):
        bits = basis_bits(column, n)
        for row in range(1 << n):
            out = basis_bits(row, n)
            if any(out[k] != bits[k] for k in range(n) if k not in slot_pair):
                continue
            dense[row, column] = U[2 * out[i] + out[j], 2 * bits[i] + bits[j]]
    return dense


class quantum_state_test(unittest.TestCase):
    def test_basis_state(self):
        psi = basis_state(4, [0, 1, 1, 0])
        self.assertEqual(int(psi.abs().argmax()), 6)
        self.assertEqual(psi.dtype, DTYPE)
        with self.assertRaises(ValueError):
            basis_state(2, [0, 1, 1])
        with self.assertRaises(ValueError):
            basis_state(2, 4)

    def test_product_state_slot_order(self):
        # slot 0 in |1>, slot 1 in |0>
        psi = product_state([[0, 1], [1, 0]])
        self.assertAlmostEqual(float(psi[basis_index([1, 0])].abs()), 1.0, places=12)

    def test_amplitude_state_normalizes(self):
        psi = amplitude_state([1, 0, 0, 1])
        self.assertAlmostEqual(float(psi.norm()), 1.0, places=12)
        with self.assertRaises(ValueError):
            amplitude_state([1, 0, 0])
        with self.assertRaises(ValueError):
            amplitude_state([0, 0, 0, 0])

    def test_check_norm(self):
        check_norm(basis_state(2, 0))
        with self.assertRaises(NormDriftError):
            check_norm(basis_state(2, 0) * 1.01)

    def test_check_unitary(self):
        check_unitary(random_unitary(3))
        with self.assertRaises(NonUnitaryError):
            check_unitary(2 * torch.eye(4, dtype=DTYPE))
        with self.assertRaises(NonUnitaryError):
            check_unitary(torch.eye(2, dtype=DTYPE))


class quantum_unitary_test(unittest.TestCase):
    def test_identity(self):
        psi = random_state(4, 0)
        out = apply_unitary(psi, (1, 2), torch.eye(4, dtype=DTYPE))
        self.assertTrue(torch.allclose(out, psi, atol=1e-14))

    def test_swap(self):
        psi = basis_state(4, [0, 1, 0, 0])
        out = apply_unitary(psi, (1, 2), swap_matrix())
        self.assertEqual(int(out.abs().argmax()), basis_index([0, 0, 1, 0]))

    def test_swap_wraps_around(self):
        psi = basis_state(4, [1, 0, 0, 0])
        out = apply_unitary(psi, (3, 0), swap_matrix())
        self.assertEqual(int(out.abs().argmax()), basis_index([0, 0, 0, 1]))

    def test_pair_index_order(self):
        # a U acting as X on the first slot of the pair only
        X_first = torch.kron(
            torch.tensor([[0, 1], [1, 0]], dtype=DTYPE), torch.eye(2, dtype=DTYPE)
        )
        out = apply_unitary(basis_state(2, [0, 0]), (0, 1), X_first)
        self.assertEqual(int(out.abs().argmax()), basis_index([1, 0]))

    def test_batched_matches_single(self):
        U = random_unitary(5)
        batch = torch.stack([random_state(4, s) for s in range(3)])
        out = apply_unitary(batch, (2, 3), U, batch_first=True)
        for b in range(3):
            single = apply_unitary(batch[b], (2, 3), U)
            self.assertTrue(torch.allclose(out[b], single, atol=1e-14))

    def test_matches_dense_operator(self):
        psi = random_state(4, 7)
        for seed, pair in enumerate([(0, 1), (1, 2), (2, 3), (3, 0)]):
            U = random_unitary(seed)
            expected = dense_operator(U, pair, 4) @ psi
            self.assertTrue(torch.allclose(apply_unitary(psi, pair, U), expected, atol=1e-14))

    def test_batched_wrapped_pair(self):
        U = random_unitary(6)
        batch = torch.stack([random_state(4, s) for s in range(3)])
        out = apply_unitary(batch, (3, 0), U, batch_first=True)
        for b in range(3):
            single = apply_unitary(batch[b], (3, 0), U)
            self.assertTrue(torch.allclose(out[b], single, atol=1e-14))

    def test_non_adjacent_pair(self):
        with self.assertRaises(ValueError):
            apply_unitary(random_state(4, 0), (0, 2), swap_matrix())

    def test_norm_preserved(self):
        psi = random_state(6, 1)
        for seed, pair in enumerate([(0, 1), (5, 0), (2, 3)]):
            psi = apply_unitary(psi, pair, random_unitary(seed))
        self.assertAlmostEqual(float(psi.norm()), 1.0, places=12)


class quantum_jump_test(unittest.TestCase):
    def test_jump_factor(self):
        self.assertAlmostEqual(jump_factor(JumpSpec(0.5), 1, 1), 0.894427, places=6)
        self.assertAlmostEqual(jump_factor(JumpSpec(0.5), 0, 1), 0.447214, places=6)
        self.assertEqual(jump_factor(JumpSpec(0.0), 1, 1), 1.0)
        self.assertEqual(jump_factor(JumpSpec(0.0), 1, 0), 0.0)
        for alpha in (0, 1):
            for alpha_hat in (0, 1):
                self.assertAlmostEqual(
                    jump_factor(JumpSpec(1.0), alpha, alpha_hat), 1 / math.sqrt(2)
                )

    def test_bad_spec(self):
        with self.assertRaises(ValueError):
            JumpSpec(1.5)

    def test_hit_projects_at_zero(self):
        psi = basis_state(2, [1, 0])
        out, norm = link_hit(psi, 0, 1, JumpSpec(0.0))
        self.assertTrue(torch.allclose(out, psi))
        self.assertAlmostEqual(float(norm), 1.0)

    def test_hit_is_trivial_at_one(self):
        psi = random_state(4, 2)
        out, norm = link_hit(psi, 3, 0, JumpSpec(1.0))
        self.assertTrue(torch.allclose(out, psi, atol=1e-14))
        self.assertAlmostEqual(float(norm), 1 / math.sqrt(2), places=12)

    def test_hit_on_bell_state(self):
        bell = amplitude_state([1, 0, 0, 1])
        out, norm = link_hit(bell, 0, 0, JumpSpec(0.5))
        self.assertAlmostEqual(float(norm) ** 2, 0.5, places=12)
        expected = torch.tensor([0.8, 0.0, 0.0, 0.2], dtype=torch.float64)
        self.assertTrue(torch.allclose(born_probabilities(out), expected, atol=1e-12))

    def test_impossible_outcome(self):
        with self.assertRaises(ImpossibleOutcomeError):
            link_hit(basis_state(2, [0, 0]), 0, 1, JumpSpec(0.0))

    def test_vertex_distribution(self):
        dist = vertex_jump_distribution(basis_state(2, 0), (0, 1), JumpSpec(0.5))
        expected = [0.64, 0.16, 0.16, 0.04]
        for outcome, p in zip(ALL_OUTCOMES, expected):
            self.assertAlmostEqual(dist[outcome], p, places=12)

    def test_vertex_distribution_uniform_at_one(self):
        dist = vertex_jump_distribution(random_state(4, 3), (1, 2), JumpSpec(1.0))
        for outcome in ALL_OUTCOMES:
            self.assertAlmostEqual(dist[outcome], 0.25, places=12)

    def test_vertex_distribution_projective(self):
        dist = vertex_jump_distribution(basis_state(4, [0, 1, 1, 0]), (1, 2), JumpSpec(0.0))
        self.assertEqual(dist[VertexOutcome(1, 1)], 1.0)
        self.assertEqual(sum(dist.values()), 1.0)

    def test_chain_rule(self):
        # N_L ** 2 * N_R ** 2 of the sequential hits is the pair probability
        spec = JumpSpec(0.3)
        psi = random_state(4, 4)
        probs = vertex_jump_probabilities(psi, (3, 0), spec)
        for outcome in ALL_OUTCOMES:
            _, norm = vertex_hit(psi, (3, 0), outcome, spec)
            self.assertAlmostEqual(float(norm) ** 2, float(probs[outcome.index]), places=12)

    def test_vertex_hit_matches_pair_matrix(self):
        spec = JumpSpec(0.7)
        psi = random_state(2, 5)
        outcome = VertexOutcome(1, 0)
        out, norm = vertex_hit(psi, (0, 1), outcome, spec)
        # pair index 2 * b_0 + b_1 against basis index b_0 + 2 * b_1
        perm = [0, 2, 1, 3]
        J = pair_jump_matrix(spec, outcome)
        expected = (J @ psi[perm])[perm]
        self.assertTrue(torch.allclose(out * norm, expected, atol=1e-14))

    def test_sampled_hit_matches_link_hits(self):
        spec = JumpSpec(0.4)
        psi = random_state(4, 8)
        uniforms = [(0.0, 0.0), (0.3, 0.9), (0.7, 0.2), (0.99, 0.99)]
        for pair in [(0, 1), (2, 3), (3, 0)]:
            probs = vertex_jump_probabilities(psi, pair, spec)
            for u_l, u_r in uniforms:
                hit = sample_vertex_hit(psi, pair, spec, u_l, u_r)
                out, norm = vertex_hit(psi, pair, hit.outcome, spec)
                self.assertTrue(torch.allclose(hit.psi, out, atol=1e-12))
                self.assertAlmostEqual(hit.norm_l * hit.norm_r, float(norm), places=12)
                self.assertTrue(torch.allclose(hit.probabilities, probs, atol=1e-14))

    def test_sampled_hit_follows_uniforms(self):
        # product state with P(slot 0 = 0) = 0.64 and slot 1 fixed to 0
        psi = product_state([[0.8, 0.6], [1, 0]])
        spec = JumpSpec(0.0)
        self.assertEqual(sample_vertex_hit(psi, (0, 1), spec, 0.5, 0.5).outcome, (0, 0))
        self.assertEqual(sample_vertex_hit(psi, (0, 1), spec, 0.7, 0.5).outcome, (1, 0))

    def test_sampled_hit_checks_norm(self):
        with self.assertRaises(NormDriftError):
            sample_vertex_hit(2 * random_state(2, 0), (0, 1), JumpSpec(0.5), 0.1, 0.1)

    def test_batched_link_hit(self):
        spec = JumpSpec(0.6)
        batch = torch.stack([random_state(3, s) for s in range(4)])
        alphas = torch.tensor([0, 1, 1, 0])
        out, norms = link_hit(batch, 1, alphas, spec, batch_first=True)
        for b in range(4):
            single, norm = link_hit(batch[b], 1, int(alphas[b]), spec)
            self.assertTrue(torch.allclose(out[b], single, atol=1e-14))
            self.assertAlmostEqual(float(norms[b]), float(norm), places=14)

    def test_hit_at_one_leaves_state(self):
        psi = random_state(4, 6)
        out, _ = vertex_hit(psi, (1, 2), VertexOutcome(0, 1), JumpSpec(1.0))
        self.assertTrue(torch.allclose(out, psi, atol=1e-14))

    def test_link_distribution_batched(self):
        batch = torch.stack([random_state(2, s) for s in range(4)])
        probs = link_jump_distribution(batch, 1, JumpSpec(0.5), batch_first=True)
        self.assertEqual(tuple(probs.shape), (4, 2))
        self.assertTrue(torch.allclose(probs.sum(dim=1), torch.ones(4, dtype=torch.float64)))


class quantum_born_test(unittest.TestCase):
    def test_plain_born(self):
        psi = random_state(2, 7)
        conditional = born_conditional(psi, {}, [0, 1])
        probs = born_probabilities(psi)
        self.assertAlmostEqual(
            conditional[(1, 0)], float(probs[basis_index([1, 0])]), places=12
        )

    def test_product_state_independence(self):
        psi = product_state([[0.6, 0.8], [1, 1j], [0.28, 0.96], [1, 2]])
        first = born_conditional(psi, {2: 0, 3: 0}, [0, 1])
        second = born_conditional(psi, {2: 1, 3: 1}, [0, 1])
        for key in first:
            self.assertAlmostEqual(first[key], second[key], places=12)

    def test_bell_conditional(self):
        bell = amplitude_state([1, 0, 0, 1])
        self.assertEqual(born_conditional(bell, {0: 0}, [1]), {(0,): 1.0, (1,): 0.0})

    def test_null_condition(self):
        with self.assertRaises(NullConditionError):
            born_conditional(basis_state(2, 0), {0: 1}, [1])

    def test_bad_partition(self):
        with self.assertRaises(ValueError):
            born_conditional(basis_state(4, 0), {0: 1}, [1, 2])


class quantum_sampling_test(unittest.TestCase):
    def test_sample_index(self):
        probs = torch.tensor([0.25, 0.0, 0.75], dtype=torch.float64)
        self.assertEqual(sample_index(probs, 0.1), 0)
        self.assertEqual(sample_index(probs, 0.25), 2)
        self.assertEqual(sample_index(probs, 0.999999), 2)

    def test_sample_bit(self):
        self.assertEqual(sample_bit(0.3, 0.29), 0)
        self.assertEqual(sample_bit(0.3, 0.3), 1)
        u = torch.tensor([0.1, 0.5, 0.9])
        self.assertEqual(sample_bit(torch.tensor(0.5), u).tolist(), [0, 1, 1])


if __name__ == "__main__":
    unittest.main()
