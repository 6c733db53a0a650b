#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
r"""
Run configuration: everything a trajectory is a deterministic function of.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple

import torch

from .lattice import LatticeGeometry
from .quantum import JumpSpec, amplitude_state, basis_state, product_state
from .rmatrix import (
    RegionOverrideSpec,
    RMatrixAssignment,
    RMatrixKind,
    RMatrixSpec,
    build_assignment,
)


MAX_HALF_WIDTH = 13
GENERATOR_ID = "torch.Generator/mt19937"


class DynamicsKind(str, Enum):
    GRW = "grw"
    SAMOLS = "samols"
    UNITARY = "unitary"


class StateKind(str, Enum):
    BASIS = "basis"
    PRODUCT = "product"
    AMPLITUDES = "amplitudes"


@dataclass(frozen=True)
class InitialStateSpec:
    r"""
    Serializable description of the state on the initial surface.

    ``basis`` is a string of field values, slot 0 first; ``qubits`` holds one
    2-vector per slot; ``amplitudes`` lists all ``2 ** (2N)`` amplitudes in
    basis-index order. Only the payload matching ``kind`` is used.
    """

    kind: StateKind = StateKind.BASIS
    basis: Optional[str] = None
    qubits: Optional[Tuple[Tuple[complex, complex], ...]] = None
    amplitudes: Optional[Tuple[complex, ...]] = None

    @classmethod
    def zeros(cls, num_slots: int) -> "InitialStateSpec":
        return cls(StateKind.BASIS, basis="0" * num_slots)

    @classmethod
    def cat(cls, num_slots: int) -> "InitialStateSpec":
        r"""
        ``(|0...0> + |1...1>) / sqrt(2)``, the superposition of the two
        uniform configurations.
        """
        amplitudes = [0j] * (1 << num_slots)
        amplitudes[0] = amplitudes[-1] = 1 + 0j
        return cls(StateKind.AMPLITUDES, amplitudes=tuple(amplitudes))

    def build(self, num_slots: int) -> torch.Tensor:
        r"""
        Returns the normalized initial state over ``num_slots`` slots.

        Raises
        ------
        ValueError
            If the payload is missing, has the wrong size or is not normalizable.
        """
        if self.kind == StateKind.BASIS:
            if self.basis is None or len(self.basis) != num_slots:
                raise ValueError(
                    f"Basis state must give {num_slots} field values, got {self.basis!r}"
                )
            return basis_state(num_slots, [int(c) for c in self.basis])
        if self.kind == StateKind.PRODUCT:
            if self.qubits is None or len(self.qubits) != num_slots:
                raise ValueError(f"Product state must give {num_slots} qubits")
            return product_state(self.qubits)
        if self.amplitudes is None or len(self.amplitudes) != 1 << num_slots:
            raise ValueError(f"Amplitude state must give {1 << num_slots} amplitudes")
        return amplitude_state(self.amplitudes)


@dataclass(frozen=True)
class RunConfig:
    r"""
    Configuration of a run of the lattice dynamics.

    Parameters
    ----------
    half_width: int
        ``N``; surfaces cut ``2N`` links.
    steps: int
        Number of elementary motions.
    dynamics: DynamicsKind
        ``grw``, ``samols`` or ``unitary``.
    x: float
        Collapse strength ``X`` of the jump factor (grw only).
    p: float
        Probability that a crossed vertex realizes values (grw only).
    rmatrix: RMatrixSpec
        R-matrix used at every vertex outside the override regions.
    overrides: Tuple[RegionOverrideSpec, ...]
        Region overrides, later ones winning.
    initial_state: Optional[InitialStateSpec]
        State on the initial surface; ``None`` means ``|0...0>``.
    seed: int
        Seed of the run's generator.
    schedule: Optional[Tuple[int, ...]]
        Fixed motion sequence; when set it replaces the random pair choice.
    """

    half_width: int
    steps: int = 0
    dynamics: DynamicsKind = DynamicsKind.GRW
    x: float = 0.5
    p: float = 1.0
    rmatrix: RMatrixSpec = field(default_factory=RMatrixSpec)
    overrides: Tuple[RegionOverrideSpec, ...] = ()
    initial_state: Optional[InitialStateSpec] = None
    seed: int = 0
    schedule: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.initial_state is None and isinstance(self.half_width, int):
            object.__setattr__(
                self, "initial_state", InitialStateSpec.zeros(2 * self.half_width)
            )

    @property
    def geometry(self) -> LatticeGeometry:
        return LatticeGeometry(self.half_width)

    @property
    def num_slots(self) -> int:
        return 2 * self.half_width

    @property
    def jump_spec(self) -> JumpSpec:
        return JumpSpec(self.x)

    def assignment(self) -> RMatrixAssignment:
        return build_assignment(self.rmatrix, self.overrides)

    def initial_psi(self) -> torch.Tensor:
        return self.initial_state.build(self.num_slots)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed)


########################
# DICT CONVERSION
########################


def _complex_to_list(value: complex) -> Sequence[float]:
    value = complex(value)
    return [value.real, value.imag]


def _list_to_complex(value: Sequence[float]) -> complex:
    return complex(float(value[0]), float(value[1]))


def _rmatrix_to_dict(spec: RMatrixSpec) -> Dict[str, Any]:
    return {
        "kind": spec.kind.name.lower(),
        "seed": spec.seed,
        "entries": None
        if spec.entries is None
        else [_complex_to_list(e) for e in spec.entries],
    }


def _rmatrix_from_dict(data: Dict[str, Any]) -> RMatrixSpec:
    entries = data.get("entries")
    return RMatrixSpec(
        kind=RMatrixKind[data["kind"].upper()],
        seed=data.get("seed"),
        entries=None if entries is None else tuple(_list_to_complex(e) for e in entries),
    )


def config_to_dict(config: RunConfig) -> Dict[str, Any]:
    r"""
    Converts a config into plain JSON-compatible data; complex numbers become
    ``[re, im]`` pairs. :func:`config_from_dict` inverts it exactly.
    """
    state = config.initial_state
    return {
        "half_width": config.half_width,
        "steps": config.steps,
        "dynamics": config.dynamics.value,
        "x": config.x,
        "p": config.p,
        "rmatrix": _rmatrix_to_dict(config.rmatrix),
        "overrides": [
            {
                "name": o.name,
                "slot": o.slot,
                "first_ordinal": o.first_ordinal,
                "last_ordinal": o.last_ordinal,
                "matrix": _rmatrix_to_dict(o.matrix),
            }
            for o in config.overrides
        ],
        "initial_state": {
            "kind": state.kind.value,
            "basis": state.basis,
            "qubits": None
            if state.qubits is None
            else [[_complex_to_list(a) for a in q] for q in state.qubits],
            "amplitudes": None
            if state.amplitudes is None
            else [_complex_to_list(a) for a in state.amplitudes],
        },
        "seed": config.seed,
        "schedule": None if config.schedule is None else list(config.schedule),
    }


def config_from_dict(data: Dict[str, Any]) -> RunConfig:
    state = data["initial_state"]
    qubits = state.get("qubits")
    amplitudes = state.get("amplitudes")
    schedule = data.get("schedule")
    return RunConfig(
        half_width=int(data["half_width"]),
        steps=int(data["steps"]),
        dynamics=DynamicsKind(data["dynamics"]),
        x=float(data["x"]),
        p=float(data["p"]),
        rmatrix=_rmatrix_from_dict(data["rmatrix"]),
        overrides=tuple(
            RegionOverrideSpec(
                name=o["name"],
                slot=int(o["slot"]),
                first_ordinal=int(o["first_ordinal"]),
                last_ordinal=o["last_ordinal"],
                matrix=_rmatrix_from_dict(o["matrix"]),
            )
            for o in data.get("overrides", [])
        ),
        initial_state=InitialStateSpec(
            kind=StateKind(state["kind"]),
            basis=state.get("basis"),
            qubits=None
            if qubits is None
            else tuple(tuple(_list_to_complex(a) for a in q) for q in qubits),
            amplitudes=None
            if amplitudes is None
            else tuple(_list_to_complex(a) for a in amplitudes),
        ),
        seed=int(data["seed"]),
        schedule=None if schedule is None else tuple(int(s) for s in schedule),
    )


def describe(config: RunConfig) -> str:
    r"""
    One-line human readable summary used by CLI diagnostics.
    """
    return (
        f"N={config.half_width} steps={config.steps} "
        f"dynamics={config.dynamics.value} x={config.x} p={config.p} seed={config.seed}"
    )
