#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved


import dataclasses
import unittest

import torch
from torchgrw import config_inspector as ci
from torchgrw.rmatrix import RegionOverrideSpec, RMatrixKind, RMatrixSpec
from torchgrw.run_config import (
    DynamicsKind,
    InitialStateSpec,
    RunConfig,
    StateKind,
    config_from_dict,
    config_to_dict,
    describe,
)


class config_inspector_test(unittest.TestCase):
    def setUp(self):
        self.config = RunConfig(half_width=2, steps=6, x=0.5, seed=3)

    def test_valid(self):
        self.assertTrue(ci.RunConfigInspector().validate(self.config))

    def test_raises_exception(self):
        inspector = ci.RunConfigInspector()
        with self.assertRaises(ci.InvalidConfigException):
            inspector.validate(dataclasses.replace(self.config, steps=-1))

    def test_returns_False(self):
        inspector = ci.RunConfigInspector(should_throw=False)
        self.assertFalse(inspector.validate(dataclasses.replace(self.config, x=1.5)))
        self.assertFalse(inspector.validate(dataclasses.replace(self.config, p=-0.1)))
        self.assertFalse(inspector.validate(dataclasses.replace(self.config, seed=-1)))

    def test_collapse_violators_are_named(self):
        inspector = ci.RunConfigInspector(should_throw=False)
        inspector.validate(dataclasses.replace(self.config, x=2.0, p=3.0))
        collapse = next(i for i in inspector.inspectors if i.name == "collapse")
        self.assertEqual(collapse.violators, ["x", "p"])

    def test_violators_reset_between_calls(self):
        inspector = ci.RunConfigInspector(should_throw=False)
        inspector.validate(dataclasses.replace(self.config, x=2.0))
        self.assertTrue(inspector.validate(self.config))

    def test_bad_initial_state(self):
        config = dataclasses.replace(
            self.config, initial_state=InitialStateSpec(StateKind.BASIS, basis="01")
        )
        with self.assertRaises(ci.InvalidConfigException) as context:
            ci.RunConfigInspector().validate(config)
        self.assertIn("Initial state", str(context.exception))

    def test_non_unitary_override(self):
        override = RegionOverrideSpec(
            "bad", 0, 0, None, RMatrixSpec(RMatrixKind.EXPLICIT, entries=(1,) * 16)
        )
        config = dataclasses.replace(self.config, overrides=(override,))
        inspector = ci.RunConfigInspector(should_throw=False)
        self.assertFalse(inspector.validate(config))
        rmatrix = next(i for i in inspector.inspectors if i.name == "rmatrix")
        self.assertEqual(rmatrix.violators, ["rmatrix.override.bad"])

    def test_override_outside_surface(self):
        override = RegionOverrideSpec("far", 7, 0, None, RMatrixSpec())
        config = dataclasses.replace(self.config, overrides=(override,))
        self.assertFalse(ci.RunConfigInspector(should_throw=False).validate(config))

    def test_schedule(self):
        inspector = ci.RunConfigInspector(should_throw=False)
        self.assertFalse(
            inspector.validate(dataclasses.replace(self.config, schedule=(0, 2)))
        )
        self.assertFalse(
            inspector.validate(
                dataclasses.replace(self.config, schedule=(0, 2, 1, 3, 0, 9))
            )
        )
        self.assertTrue(
            inspector.validate(
                dataclasses.replace(self.config, schedule=(0, 2, 1, 3, 0, 2))
            )
        )


class run_config_test(unittest.TestCase):
    def test_default_state(self):
        config = RunConfig(half_width=2)
        self.assertEqual(config.initial_state.basis, "0000")
        self.assertEqual(float(config.initial_psi()[0].real), 1.0)

    def test_cat_state(self):
        psi = InitialStateSpec.cat(4).build(4)
        self.assertAlmostEqual(float(psi[0].abs() ** 2), 0.5, places=12)
        self.assertAlmostEqual(float(psi[15].abs() ** 2), 0.5, places=12)

    def test_product_state(self):
        spec = InitialStateSpec(StateKind.PRODUCT, qubits=((0, 1), (1, 0)))
        psi = spec.build(2)
        self.assertEqual(int(psi.abs().argmax()), 1)

    def test_dict_round_trip(self):
        config = RunConfig(
            half_width=2,
            steps=5,
            dynamics=DynamicsKind.SAMOLS,
            x=0.25,
            p=0.75,
            rmatrix=RMatrixSpec(RMatrixKind.RANDOM_UNITARY, seed=4),
            overrides=(
                RegionOverrideSpec("a", 2, 1, 3, RMatrixSpec(RMatrixKind.SWAP)),
            ),
            initial_state=InitialStateSpec(
                StateKind.AMPLITUDES, amplitudes=(0.6, 0, 0.8j) + (0,) * 13
            ),
            seed=12,
            schedule=(0, 2, 1, 3, 0),
        )
        self.assertEqual(config_from_dict(config_to_dict(config)), config)

    def test_with_seed(self):
        config = RunConfig(half_width=1, seed=1)
        self.assertEqual(config.with_seed(5).seed, 5)
        self.assertEqual(config.seed, 1)

    def test_describe(self):
        self.assertIn("N=2", describe(RunConfig(half_width=2)))

    def test_assignment(self):
        config = RunConfig(half_width=1, rmatrix=RMatrixSpec(RMatrixKind.SWAP))
        swap = RMatrixSpec(RMatrixKind.SWAP).build()
        self.assertTrue(torch.equal(config.assignment().U, swap))


if __name__ == "__main__":
    unittest.main()
