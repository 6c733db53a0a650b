#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
r"""
INI config files for the command line front end.

The grammar is documented in ``docs/config.md``. A minimal file:

.. code-block:: ini

    [lattice]
    n = 2

    [dynamics]
    kind = grw
    steps = 10
    x = 0.5
    seed = 7

Complex numbers use Python literal syntax (``0.6``, ``0.6+0.8j``, ``1j``).
"""

import configparser
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from .collapse_engine import warn_ignored_collapse_settings
from .config_inspector import InvalidConfigException, RunConfigInspector
from .rmatrix import RegionOverrideSpec, RMatrixKind, RMatrixSpec
from .run_config import DynamicsKind, InitialStateSpec, RunConfig, StateKind


OVERRIDE_PREFIX = "rmatrix.override."
EXPERIMENT_NAMES = ("macro_collapse", "noise_profile", "kent")

_SECTION_KEYS = {
    "lattice": {"n"},
    "dynamics": {"kind", "steps", "x", "p", "seed", "schedule"},
    "state": {"kind", "basis", "qubits", "amplitudes"},
    "state.alt": {"kind", "basis", "qubits", "amplitudes"},
    "rmatrix": {"kind", "seed", "entries"},
    "output": {"dir", "format", "keep_state"},
    "experiment": {"name", "runs", "events", "early", "window", "samples"},
}
_OVERRIDE_KEYS = {"slot", "first", "last", "kind", "seed", "entries"}


class ConfigFileError(InvalidConfigException):
    r"""
    Raised when a config file does not follow the grammar.
    """

    pass


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "."
    format: str = "text"
    keep_state: bool = False


@dataclass(frozen=True)
class ExperimentSpec:
    r"""
    Parameters of ``grw_lattice experiment``; which ones are used depends on
    ``name``.
    """

    name: str
    runs: int = 20
    events: int = 100000
    early: Tuple[str, ...] = ()
    window: int = 1
    samples: int = 200000


@dataclass(frozen=True)
class ConfigFile:
    run: RunConfig
    output: OutputSpec = field(default_factory=OutputSpec)
    experiment: Optional[ExperimentSpec] = None
    alt_state: Optional[InitialStateSpec] = None


########################
# VALUES
########################


def _format_complex(value: complex) -> str:
    value = complex(value)
    if value.imag == 0:
        return repr(value.real)
    return repr(value).strip("()")


def _parse_complex(token: str) -> complex:
    return complex(token.replace(" ", ""))


def _parse_complex_list(text: str) -> Tuple[complex, ...]:
    return tuple(_parse_complex(token) for token in text.split())


def _format_complex_list(values) -> str:
    return " ".join(_format_complex(v) for v in values)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(f"Expected a boolean, got {text!r}")


########################
# PARSING
########################


def _check_keys(name: str, section: configparser.SectionProxy, allowed: set) -> None:
    unknown = set(section.keys()) - allowed
    if unknown:
        raise ConfigFileError(f"Unknown keys in [{name}]: {sorted(unknown)}")


def _parse_state(section: configparser.SectionProxy) -> InitialStateSpec:
    kind = StateKind(section.get("kind", "basis"))
    if kind == StateKind.BASIS:
        return InitialStateSpec(kind, basis=section["basis"].strip())
    if kind == StateKind.PRODUCT:
        qubits = tuple(
            tuple(_parse_complex_list(q)) for q in section["qubits"].split(";") if q.strip()
        )
        if any(len(q) != 2 for q in qubits):
            raise ValueError("Every product-state qubit needs exactly 2 amplitudes")
        return InitialStateSpec(kind, qubits=qubits)
    return InitialStateSpec(kind, amplitudes=_parse_complex_list(section["amplitudes"]))


def _parse_rmatrix(section: configparser.SectionProxy) -> RMatrixSpec:
    kind = RMatrixKind[section.get("kind", "identity").strip().upper()]
    seed = section.get("seed")
    entries = section.get("entries")
    return RMatrixSpec(
        kind=kind,
        seed=None if seed is None else int(seed),
        entries=None if entries is None else _parse_complex_list(entries),
    )


def _parse_override(name: str, section: configparser.SectionProxy) -> RegionOverrideSpec:
    last = section.get("last")
    return RegionOverrideSpec(
        name=name,
        slot=int(section["slot"]),
        first_ordinal=int(section.get("first", "0")),
        last_ordinal=None if last is None else int(last),
        matrix=_parse_rmatrix(section),
    )


def _parse_experiment(section: configparser.SectionProxy) -> ExperimentSpec:
    name = section["name"].strip()
    if name not in EXPERIMENT_NAMES:
        raise ValueError(f"Unknown experiment {name!r}, expected one of {EXPERIMENT_NAMES}")
    return ExperimentSpec(
        name=name,
        runs=section.getint("runs", 20),
        events=section.getint("events", 100000),
        early=tuple(section.get("early", "").split()),
        window=section.getint("window", 1),
        samples=section.getint("samples", 200000),
    )


def parse_config(text: str, validate: bool = True) -> ConfigFile:
    r"""
    Parses a config file.

    Parameters
    ----------
    text: str
        The INI document.
    validate: bool
        Whether to run :class:`~torchgrw.config_inspector.RunConfigInspector`
        on the parsed config.

    Raises
    ------
    ConfigFileError
        If the document is not valid INI, names an unknown section or key, or
        a value cannot be read.
    InvalidConfigException
        If the parsed config fails validation.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigFileError(f"Malformed config file: {e}") from e

    for name in parser.sections():
        if name.startswith(OVERRIDE_PREFIX):
            _check_keys(name, parser[name], _OVERRIDE_KEYS)
        elif name in _SECTION_KEYS:
            _check_keys(name, parser[name], _SECTION_KEYS[name])
        else:
            raise ConfigFileError(f"Unknown section [{name}]")
    if not parser.has_section("lattice"):
        raise ConfigFileError("Missing section [lattice]")

    try:
        config = _parse_run_config(parser)
        output = OutputSpec()
        if parser.has_section("output"):
            section = parser["output"]
            output = OutputSpec(
                dir=section.get("dir", "."),
                format=section.get("format", "text"),
                keep_state=_parse_bool(section.get("keep_state", "false")),
            )
            if output.format not in ("text", "image"):
                raise ValueError(f"Unknown output format {output.format!r}")
        experiment = (
            _parse_experiment(parser["experiment"])
            if parser.has_section("experiment")
            else None
        )
        alt_state = (
            _parse_state(parser["state.alt"]) if parser.has_section("state.alt") else None
        )
    except (KeyError, ValueError) as e:
        raise ConfigFileError(f"Bad config value: {e}") from e

    dynamics = parser["dynamics"] if parser.has_section("dynamics") else {}
    if "x" in dynamics or "p" in dynamics:
        warn_ignored_collapse_settings(config)
    if validate:
        RunConfigInspector().validate(config)
    return ConfigFile(config, output, experiment, alt_state)


def _parse_run_config(parser: configparser.ConfigParser) -> RunConfig:
    half_width = parser["lattice"].getint("n")
    if half_width is None:
        raise KeyError("n")
    kwargs: Dict[str, Any] = {"half_width": half_width}
    if parser.has_section("dynamics"):
        section = parser["dynamics"]
        kwargs["dynamics"] = DynamicsKind(section.get("kind", "grw").strip())
        kwargs["steps"] = section.getint("steps", 0)
        kwargs["x"] = section.getfloat("x", 0.5)
        kwargs["p"] = section.getfloat("p", 1.0)
        kwargs["seed"] = section.getint("seed", 0)
        if "schedule" in section:
            kwargs["schedule"] = tuple(
                int(s) for s in section["schedule"].replace(",", " ").split()
            )
    if parser.has_section("state"):
        kwargs["initial_state"] = _parse_state(parser["state"])
    if parser.has_section("rmatrix"):
        kwargs["rmatrix"] = _parse_rmatrix(parser["rmatrix"])
    kwargs["overrides"] = tuple(
        _parse_override(name[len(OVERRIDE_PREFIX) :], parser[name])
        for name in parser.sections()
        if name.startswith(OVERRIDE_PREFIX)
    )
    return RunConfig(**kwargs)


def load_config(path: Union[str, Path], validate: bool = True) -> ConfigFile:
    return parse_config(Path(path).read_text(encoding="utf8"), validate)


########################
# SERIALIZATION
########################


def _state_items(state: InitialStateSpec) -> Dict[str, str]:
    items = {"kind": state.kind.value}
    if state.kind == StateKind.BASIS:
        items["basis"] = state.basis
    elif state.kind == StateKind.PRODUCT:
        items["qubits"] = "; ".join(_format_complex_list(q) for q in state.qubits)
    else:
        items["amplitudes"] = _format_complex_list(state.amplitudes)
    return items


def _rmatrix_items(spec: RMatrixSpec) -> Dict[str, str]:
    items = {"kind": spec.kind.name.lower()}
    if spec.seed is not None:
        items["seed"] = str(spec.seed)
    if spec.entries is not None:
        items["entries"] = _format_complex_list(spec.entries)
    return items


def serialize_config(config_file: ConfigFile) -> str:
    r"""
    Writes ``config_file`` back as INI text; ``parse_config`` of the result
    gives an equal :class:`ConfigFile`.
    """
    config = config_file.run
    parser = configparser.ConfigParser(interpolation=None)
    parser["lattice"] = {"n": str(config.half_width)}
    dynamics = {
        "kind": config.dynamics.value,
        "steps": str(config.steps),
        "seed": str(config.seed),
    }
    if config.dynamics == DynamicsKind.GRW or (config.x, config.p) != (0.5, 1.0):
        dynamics.update(x=repr(float(config.x)), p=repr(float(config.p)))
    if config.schedule is not None:
        dynamics["schedule"] = ", ".join(str(s) for s in config.schedule)
    parser["dynamics"] = dynamics
    parser["state"] = _state_items(config.initial_state)
    parser["rmatrix"] = _rmatrix_items(config.rmatrix)
    for override in config.overrides:
        items = {"slot": str(override.slot), "first": str(override.first_ordinal)}
        if override.last_ordinal is not None:
            items["last"] = str(override.last_ordinal)
        items.update(_rmatrix_items(override.matrix))
        parser[OVERRIDE_PREFIX + override.name] = items
    output = config_file.output
    parser["output"] = {
        "dir": output.dir,
        "format": output.format,
        "keep_state": str(output.keep_state).lower(),
    }
    if config_file.experiment is not None:
        experiment = config_file.experiment
        parser["experiment"] = {
            "name": experiment.name,
            "runs": str(experiment.runs),
            "events": str(experiment.events),
            "early": " ".join(experiment.early),
            "window": str(experiment.window),
            "samples": str(experiment.samples),
        }
    if config_file.alt_state is not None:
        parser["state.alt"] = _state_items(config_file.alt_state)
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()
