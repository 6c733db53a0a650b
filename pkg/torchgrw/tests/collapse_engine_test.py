#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved

import dataclasses
import time
import unittest
from collections import Counter

import numpy as np
import torch
from scipy.stats import chisquare
from torchgrw.collapse_engine import (
    CollapseEngine,
    EventStatus,
    batch_run,
    realized_configuration,
    replay,
    run,
    warn_ignored_collapse_settings,
)
from torchgrw.config_inspector import InvalidConfigException
from torchgrw.errors import GuardrailExceededError
from torchgrw.lattice import PartialStem, build_dag, is_natural_labeling
from torchgrw.oracle import enumerate_distribution
from torchgrw.quantum import (
    ALL_OUTCOMES,
    VertexOutcome,
    apply_unitary,
    born_probabilities,
    vertex_jump_probabilities,
)
from torchgrw.rmatrix import RMatrixKind, RMatrixSpec
from torchgrw.run_config import DynamicsKind, InitialStateSpec, RunConfig, StateKind


class collapse_engine_test(unittest.TestCase):
    def setUp(self):
        self.config = RunConfig(
            half_width=2,
            steps=12,
            x=0.5,
            rmatrix=RMatrixSpec(RMatrixKind.RANDOM_UNITARY, seed=1),
            seed=42,
        )

    def test_zero_steps(self):
        config = dataclasses.replace(self.config, steps=0)
        record = run(config, include_state=True)
        self.assertEqual(record.events, ())
        self.assertTrue(torch.equal(record.final_psi(), config.initial_psi()))

    def test_determinism(self):
        first = run(self.config, include_state=True)
        second = run(self.config, include_state=True)
        self.assertEqual(first, second)
        self.assertEqual(replay(first), first)

    def test_seeds_differ(self):
        first = run(self.config)
        second = run(self.config.with_seed(43))
        self.assertNotEqual(first.events, second.events)

    def test_global_generator_untouched(self):
        torch.manual_seed(0)
        expected = torch.rand(3)
        torch.manual_seed(0)
        run(self.config)
        self.assertTrue(torch.equal(torch.rand(3), expected))

    def test_record_is_valid(self):
        record = run(self.config)
        record.validate()
        _, dag, labeling = build_dag(self.config.geometry, record.motions)
        self.assertTrue(is_natural_labeling(labeling, dag))
        self.assertTrue(all(e.status == EventStatus.REALIZED for e in record.events))

    def test_norms_give_probability(self):
        seen = []

        def on_event(engine, vertex, pre_hit, probs, event):
            seen.append((float(probs[event.outcome.index]), event))
            expected = vertex_jump_probabilities(pre_hit, vertex.slot_pair, engine.spec)
            self.assertTrue(torch.allclose(probs, expected))

        engine = CollapseEngine(self.config)
        engine.set_on_event_func(on_event)
        engine.run()
        self.assertEqual(len(seen), self.config.steps)
        for probability, event in seen:
            self.assertAlmostEqual((event.norm_l * event.norm_r) ** 2, probability, places=12)

    def test_unitary_at_x_one(self):
        grw = dataclasses.replace(self.config, x=1.0)
        unitary = dataclasses.replace(self.config, dynamics=DynamicsKind.UNITARY)
        first = run(grw, include_state=True)
        second = run(unitary, include_state=True)
        self.assertEqual(first.motions, second.motions)
        self.assertTrue(
            torch.allclose(first.final_psi(), second.final_psi(), atol=1e-12)
        )
        self.assertTrue(all(e.outcome is None for e in second.events))

    def test_echo_at_x_zero(self):
        config = RunConfig(
            half_width=2,
            steps=20,
            x=0.0,
            initial_state=InitialStateSpec(StateKind.BASIS, basis="0110"),
            seed=5,
        )
        bits = [0, 1, 1, 0]
        for event in run(config).events:
            i, j = event.slot_pair
            self.assertEqual(event.outcome, VertexOutcome(bits[i], bits[j]))

    def test_skipped_events(self):
        never = run(dataclasses.replace(self.config, p=0.0), include_state=True)
        self.assertTrue(all(e.status == EventStatus.SKIPPED for e in never.events))
        unitary = run(
            dataclasses.replace(self.config, dynamics=DynamicsKind.UNITARY),
            include_state=True,
        )
        self.assertEqual(never.final_state, unitary.final_state)

    def test_sparse_collapse(self):
        config = dataclasses.replace(self.config, p=0.5, steps=200)
        statuses = Counter(e.status for e in run(config).events)
        self.assertGreater(statuses[EventStatus.SKIPPED], 50)
        self.assertGreater(statuses[EventStatus.REALIZED], 50)

    def test_collapse_probability_func(self):
        # only the first vertex is realized
        engine = CollapseEngine(self.config, lambda events: 1.0 if not events else 0.0)
        record = engine.run()
        self.assertEqual(record.events[0].status, EventStatus.REALIZED)
        self.assertTrue(all(e.status == EventStatus.SKIPPED for e in record.events[1:]))

    def test_schedule(self):
        config = dataclasses.replace(self.config, steps=4, schedule=(2, 0, 3, 1))
        self.assertEqual(run(config).motions, (2, 0, 3, 1))

    def test_invalid_config(self):
        with self.assertRaises(InvalidConfigException):
            run(dataclasses.replace(self.config, x=2.0))

    def test_half_width_guardrail(self):
        with self.assertRaises(GuardrailExceededError):
            CollapseEngine(RunConfig(half_width=14))

    def test_one_step_frequencies(self):
        config = RunConfig(half_width=1, steps=1, x=0.5)
        counts = Counter(run(config.with_seed(s)).events[0].outcome for s in range(4000))
        expected = [0.64, 0.16, 0.16, 0.04]
        observed = [counts[o] for o in ALL_OUTCOMES]
        _, pvalue = chisquare(observed, [4000 * p for p in expected])
        self.assertGreater(pvalue, 1e-3)

    def test_history_frequencies(self):
        # joint outcomes of four vertices of the diamond, seed by seed
        config = RunConfig(
            half_width=2,
            steps=4,
            x=0.5,
            schedule=(0, 2, 1, 3),
            rmatrix=RMatrixSpec(RMatrixKind.RANDOM_UNITARY, seed=3),
        )
        _, _, labeling = build_dag(config.geometry, config.schedule)
        exact = enumerate_distribution(
            PartialStem(frozenset(labeling)),
            labeling,
            config.assignment(),
            config.initial_psi(),
            config.x,
        )
        samples = 6000
        observed = np.zeros(4 ** 4)
        for seed in range(samples):
            atom = 0
            for event in run(config.with_seed(seed)).events:
                atom = 4 * atom + event.outcome.index
            observed[atom] += 1
        expected = exact.probs.flatten().numpy() * samples
        small = expected < 5
        f_obs = np.append(observed[~small], observed[small].sum())
        f_exp = np.append(expected[~small], expected[small].sum())
        keep = f_exp > 0
        _, pvalue = chisquare(f_obs[keep], f_exp[keep] * (samples / f_exp.sum()))
        self.assertGreater(pvalue, 1e-3)

    def test_warn_ignored_collapse_settings(self):
        with self.assertWarns(UserWarning):
            warn_ignored_collapse_settings(
                RunConfig(half_width=1, dynamics=DynamicsKind.SAMOLS)
            )


class collapse_engine_samols_test(unittest.TestCase):
    def test_initial_configuration(self):
        config = RunConfig(
            half_width=2,
            steps=6,
            dynamics=DynamicsKind.SAMOLS,
            initial_state=InitialStateSpec(StateKind.BASIS, basis="1011"),
            seed=2,
        )
        record = run(config)
        record.validate()
        self.assertEqual(record.samols_initial, (1, 0, 1, 1))
        # identity R-matrices on a basis state: every value is echoed
        self.assertEqual(realized_configuration(record), (1, 0, 1, 1))

    def test_state_is_never_hit(self):
        config = RunConfig(
            half_width=1,
            steps=3,
            dynamics=DynamicsKind.SAMOLS,
            rmatrix=RMatrixSpec(RMatrixKind.RANDOM_UNITARY, seed=3),
            initial_state=InitialStateSpec(StateKind.AMPLITUDES, amplitudes=(1, 1, 1, 1)),
            seed=0,
        )
        samols = run(config, include_state=True)
        unitary = run(
            dataclasses.replace(config, dynamics=DynamicsKind.UNITARY), include_state=True
        )
        self.assertTrue(torch.allclose(samols.final_psi(), unitary.final_psi(), atol=1e-12))

    def test_one_step_born_frequencies(self):
        config = RunConfig(
            half_width=1,
            steps=1,
            dynamics=DynamicsKind.SAMOLS,
            rmatrix=RMatrixSpec(RMatrixKind.RANDOM_UNITARY, seed=8),
        )
        psi = apply_unitary(config.initial_psi(), (0, 1), config.rmatrix.build())
        born = born_probabilities(psi)
        counts = Counter(run(config.with_seed(s)).events[0].outcome for s in range(4000))
        # basis index b_0 + 2 * b_1 for the outcome (b_0, b_1)
        expected = [float(born[o.alpha_L + 2 * o.alpha_R]) * 4000 for o in ALL_OUTCOMES]
        observed = [counts[o] for o in ALL_OUTCOMES]
        kept = [k for k, e in enumerate(expected) if e > 0]
        _, pvalue = chisquare(
            [observed[k] for k in kept], [expected[k] for k in kept]
        )
        self.assertGreater(pvalue, 1e-3)

    def test_batch_run_rejects_samols(self):
        with self.assertRaises(ValueError):
            batch_run(RunConfig(half_width=1, steps=1, dynamics=DynamicsKind.SAMOLS), 10)


class collapse_engine_batch_test(unittest.TestCase):
    def test_shape_and_motions(self):
        config = RunConfig(half_width=2, steps=5, x=0.5, p=0.5, seed=1)
        result = batch_run(config, 1000, chunk_size=300)
        self.assertEqual(tuple(result.outcomes.shape), (1000, 5))
        self.assertEqual(len(result.motions), 5)
        self.assertTrue(bool(((result.outcomes >= -1) & (result.outcomes < 4)).all()))
        self.assertTrue(bool((result.outcomes == -1).any()))

    def test_batch_echo(self):
        config = RunConfig(
            half_width=1,
            steps=4,
            x=0.0,
            initial_state=InitialStateSpec(StateKind.BASIS, basis="10"),
        )
        result = batch_run(config, 50)
        # values stay on their slots; the second vertex sits on slots (1, 0)
        self.assertTrue(bool((result.outcomes[:, 0] == 2).all()))
        self.assertTrue(bool((result.outcomes[:, 1] == 1).all()))


class collapse_engine_performance_test(unittest.TestCase):
    def test_half_width_eight(self):
        config = RunConfig(
            half_width=8,
            steps=200,
            x=0.5,
            rmatrix=RMatrixSpec(RMatrixKind.RANDOM_UNITARY, seed=0),
        )
        self.assertEqual(len(run(config).events), 200)

    def test_half_width_ten(self):
        config = RunConfig(
            half_width=10,
            steps=1000,
            x=0.5,
            rmatrix=RMatrixSpec(RMatrixKind.RANDOM_UNITARY, seed=0),
        )
        engine = CollapseEngine(config)
        start = time.perf_counter()
        record = engine.run()
        elapsed = time.perf_counter() - start
        self.assertEqual(len(record.events), 1000)
        self.assertLess(elapsed, 60.0)
        self.assertAlmostEqual(float(engine.trajectory.psi.norm()), 1.0, places=9)


if __name__ == "__main__":
    unittest.main()
