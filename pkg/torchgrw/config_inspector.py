#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved

import math
from typing import Any, Iterable, Tuple

from .errors import GRWLatticeError
from .quantum import NonUnitaryError
from .run_config import RunConfig
from .utils.inspection import Inspector


class InvalidConfigException(GRWLatticeError):
    r"""
    Exception class to be thrown in case
    the given run configuration is invalid.
    """

    pass


class RunConfigInspector:
    r"""
    Class to validate if a given ``RunConfig`` can be run by the collapse engine.

    Active checks are listed in the ``RunConfigInspector.inspectors`` attribute.
    """

    def __init__(self, should_throw: bool = True):
        r"""
        Parameters
        ----------
        should_throw: bool, optional
           Whether the inspector should throw an exception or return False in case of
           validation error
        """
        self.should_throw = should_throw

        self.inspectors = [
            Inspector(
                name="half_width",
                predicate=_half_width_check,
                message="Half width must be a positive integer",
            ),
            Inspector(
                name="steps",
                predicate=lambda config: isinstance(config.steps, int)
                and config.steps >= 0,
                message="Number of steps must be a non-negative integer",
            ),
            Inspector(
                name="collapse",
                predicate=_unit_interval_check,
                items=_collapse_parameters,
                message="Collapse parameters must lie in [0, 1]",
            ),
            Inspector(
                name="seed",
                predicate=lambda config: isinstance(config.seed, int)
                and 0 <= config.seed < 2 ** 64,
                message="Seed must be an integer in [0, 2**64)",
            ),
            Inspector(
                name="initial_state",
                predicate=_initial_state_check,
                message="Initial state cannot be built",
            ),
            # every matrix a config names must be unitary
            Inspector(
                name="rmatrix",
                predicate=_unitary_check,
                items=_named_matrices,
                message="R-matrices must be unitary",
            ),
            Inspector(
                name="override_regions",
                predicate=_override_region_check,
                items=_named_overrides,
                message="Override regions must name a slot of the surface",
            ),
            Inspector(
                name="schedule",
                predicate=_schedule_check,
                message="Schedule must cover every step with slots of the surface",
            ),
        ]

    def validate(self, config: RunConfig) -> bool:
        r"""
        Runs the validation on the config.

        Validation comprises a series of individual
        :class:`Inspectors <torchgrw.utils.inspection.Inspector>`,
        each checking one predicate.
        Depending on ``should_throw`` flag in the constructor, will either return
        False or throw :class:`~torchgrw.config_inspector.InvalidConfigException`
        in case of validation failure.

        Parameters
        ----------
            config: RunConfig
                The config to validate.

        Returns
        ----------
        bool
            True if successful. False if validation fails and ``should_throw == False``

        Raises
        ------
        InvalidConfigException
            If the validation fails and ``should_throw == True``. Exception message will
            contain the details of validation failure reason.

        Example
        -------
            >>> inspector = RunConfigInspector()
            >>> inspector.validate(RunConfig(half_width=2, steps=4))
            True
            >>> inspector.validate(RunConfig(half_width=2, steps=-1))
            # InvalidConfigException is thrown.
        """
        for inspector in self.inspectors:
            inspector.violators.clear()
        valid = all([inspector.validate(config) for inspector in self.inspectors])
        if self.should_throw and not valid:
            message = "Run configuration is invalid."
            for inspector in self.inspectors:
                if inspector.violators:
                    message += f"\n{inspector.message}: {inspector.violators}"
            raise InvalidConfigException(message)
        return valid


def _half_width_check(config: RunConfig) -> bool:
    return isinstance(config.half_width, int) and config.half_width >= 1


def _unit_interval_check(value: Any) -> bool:
    return isinstance(value, (int, float)) and 0.0 <= value <= 1.0


def _collapse_parameters(config: RunConfig) -> Iterable[Tuple[str, float]]:
    yield "x", config.x
    yield "p", config.p


def _initial_state_check(config: RunConfig) -> bool:
    psi = config.initial_psi()
    return math.isclose(float(psi.norm()), 1.0, abs_tol=1e-10)


def _named_matrices(config: RunConfig) -> Iterable[Tuple[str, Any]]:
    yield "rmatrix", config.rmatrix
    for override in config.overrides:
        yield f"rmatrix.override.{override.name}", override.matrix


def _unitary_check(spec: Any) -> bool:
    try:
        spec.build()
    except NonUnitaryError:
        return False
    return True


def _named_overrides(config: RunConfig) -> Iterable[Tuple[str, Any]]:
    for override in config.overrides:
        yield f"rmatrix.override.{override.name}", (config, override)


def _override_region_check(item: Tuple[RunConfig, Any]) -> bool:
    config, override = item
    return 0 <= override.slot < config.num_slots and (
        override.last_ordinal is None or override.last_ordinal >= override.first_ordinal
    )


def _schedule_check(config: RunConfig) -> bool:
    if config.schedule is None:
        return True
    return len(config.schedule) >= config.steps and all(
        isinstance(slot, int) and 0 <= slot < config.num_slots
        for slot in config.schedule
    )
