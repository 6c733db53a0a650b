#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved

"""
Command-line front end for the lattice collapse dynamics.

Subcommands run trajectories, print exact history distributions, run the
verification suites, render records and run the experiments.

Example
-------

To sample 100 trajectories of a config and write their records:

>>>  python -m torchgrw.scripts.grw_lattice simulate --config run.ini --count 100 --out runs

Exit status is 0 on success, 1 when a verification or experiment fails and 2
on usage, config or input errors.
"""
import argparse
import csv
import dataclasses
import json
import sys
import warnings
from collections import Counter
from pathlib import Path
from typing import List, Optional

import torch
from torchgrw.collapse_engine import run
from torchgrw.config_file import ConfigFile, ExperimentSpec, load_config
from torchgrw.config_inspector import InvalidConfigException
from torchgrw.errors import GRWLatticeError, GuardrailExceededError
from torchgrw.experiments import (
    ExperimentReport,
    kent_state_dependence,
    macro_collapse,
    noise_profile,
)
from torchgrw.lattice import PartialStem, build_dag, random_motions
from torchgrw.oracle import enumerate_distribution, samols_distribution
from torchgrw.quantum import ALL_OUTCOMES, VertexOutcome
from torchgrw.record_file import RecordCorruptError, read_record, write_record
from torchgrw.render import diagram_from_record, render_text, write_image
from torchgrw.run_config import DynamicsKind
from torchgrw.verification import SUITES, run_suite
from tqdm import tqdm


EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

SUMMARY_COLUMNS = [str(o) for o in ALL_OUTCOMES] + ["skipped", "unrealized"]


def _load(config_path: str, seed: Optional[int]) -> ConfigFile:
    config_file = load_config(config_path)
    if seed is not None:
        warnings.warn(
            f"--seed {seed} overrides the config file seed {config_file.run.seed}; "
            "records will not replay from the config file alone"
        )
        config_file = dataclasses.replace(config_file, run=config_file.run.with_seed(seed))
    return config_file


def cmd_simulate(config_file: ConfigFile, count: int, out_dir: Optional[str]) -> int:
    """
    Writes ``count`` records, run ``i`` seeded with ``seed + i``, and a
    ``summary.tsv`` of outcome counts per vertex.
    """
    config = config_file.run
    out = Path(out_dir if out_dir is not None else config_file.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    counts = [Counter() for _ in range(config.steps)]
    for i in tqdm(range(count), desc="simulate", disable=count < 10):
        record = run(config.with_seed(config.seed + i), config_file.output.keep_state)
        write_record(record, out / f"record_{i:05d}.json")
        for event in record.events:
            key = str(event.outcome) if event.outcome is not None else event.status.value
            counts[event.ordinal][key] += 1

    with open(out / "summary.tsv", "w", encoding="utf8", newline="") as f:
        writer = csv.writer(f, delimiter="\t", lineterminator="\n")
        writer.writerow(["vertex"] + SUMMARY_COLUMNS)
        for ordinal, counter in enumerate(counts):
            writer.writerow([ordinal] + [counter[c] for c in SUMMARY_COLUMNS])
    print(f"Wrote {count} records to {out}")
    return EXIT_OK


def cmd_oracle(config_file: ConfigFile, stem: Optional[int], out: Optional[str]) -> int:
    """
    Prints the exact distribution of the first ``stem`` vertices of the
    config's motion sequence, 12 significant digits per atom. Samols configs
    print the joint distribution of initial configuration and outcomes.
    """
    config = config_file.run
    samols = config.dynamics == DynamicsKind.SAMOLS
    if not samols and (config.dynamics != DynamicsKind.GRW or config.p != 1.0):
        warnings.warn("The oracle evaluates grw histories with every vertex realized")
    if config.schedule is not None:
        motions = list(config.schedule[: config.steps])
    else:
        generator = torch.Generator()
        generator.manual_seed(config.seed)
        motions = random_motions(config.geometry, config.steps, generator)
    size = config.steps if stem is None else stem
    if not 0 <= size <= len(motions):
        raise ValueError(f"Stem size {size} must lie in [0, {len(motions)}]")
    _, _, labeling = build_dag(config.geometry, motions[:size])
    if samols:
        distribution = samols_distribution(
            labeling, config.assignment(), config.initial_psi()
        )
    else:
        distribution = enumerate_distribution(
            PartialStem(frozenset(labeling)),
            labeling,
            config.assignment(),
            config.initial_psi(),
            config.x,
        )
    lines = ["# vertices: " + " ".join(str(v) for v in labeling)]
    if samols:
        lines.append("# samols: initial values | outcomes")
    lines += [f"{label}: {prob:.12g}" for label, prob in distribution.table()]
    lines.append(f"total: {distribution.total():.12g}")
    text = "\n".join(lines) + "\n"
    if out is not None:
        Path(out).write_text(text, encoding="utf8")
    print(text, end="")
    return EXIT_OK


def cmd_verify(
    suite: str, config_file: Optional[ConfigFile], seed: int, out: Optional[str]
) -> int:
    """
    Runs a verification suite; failing witnesses are printed as JSON lines.
    """
    config = config_file.run if config_file is not None else None
    reports = run_suite(suite, config, seed)
    witnesses = []
    for report in reports:
        status = "PASS" if report.passed else "FAIL"
        print(
            f"{report.name}: {status} max_deviation={report.max_deviation:.3e} "
            f"tolerance={report.tolerance:.1e}"
        )
        if not report.passed:
            witnesses.append(
                json.dumps(
                    {"check": report.name, "details": report.details, "witness": report.witness},
                    sort_keys=True,
                )
            )
    for line in witnesses:
        print(line)
    if out is not None and witnesses:
        Path(out).write_text("\n".join(witnesses) + "\n", encoding="utf8")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILURE


def cmd_render(record_path: str, fmt: str, out: Optional[str]) -> int:
    record = read_record(record_path)
    diagram = diagram_from_record(record)
    if fmt == "image":
        path = out if out is not None else str(Path(record_path).with_suffix(".png"))
        write_image(diagram, path)
        print(f"Wrote {path}")
    else:
        text = render_text(diagram)
        if out is not None:
            Path(out).write_text(text, encoding="utf8")
        print(text, end="")
    return EXIT_OK


def _parse_outcomes(tokens) -> List[VertexOutcome]:
    outcomes = []
    for token in tokens:
        if len(token) != 2 or set(token) - {"0", "1"}:
            raise ValueError(f"Outcome {token!r} must be two field values, e.g. 01")
        outcomes.append(VertexOutcome(int(token[0]), int(token[1])))
    return outcomes


def run_experiment(name: str, config_file: ConfigFile) -> ExperimentReport:
    config = config_file.run
    spec = config_file.experiment or ExperimentSpec(name)
    if name == "macro_collapse":
        return macro_collapse(config, spec.runs)
    if name == "noise_profile":
        return noise_profile(config, spec.events)
    if config_file.alt_state is None:
        raise InvalidConfigException("The kent experiment needs a [state.alt] section")
    other = dataclasses.replace(config, initial_state=config_file.alt_state)
    return kent_state_dependence(
        config, other, _parse_outcomes(spec.early), spec.window, spec.samples
    )


def cmd_experiment(name: str, config_file: ConfigFile, out: Optional[str]) -> int:
    """
    Runs an experiment and writes ``report.json`` and ``traces.csv`` to ``out``
    (the report alone goes to stdout when ``out`` is not given).
    """
    report = run_experiment(name, config_file)
    document = json.dumps(
        {
            "name": report.name,
            "parameters": report.parameters,
            "statistics": report.statistics,
            "verdict": report.verdict,
        },
        sort_keys=True,
        indent=2,
    )
    if out is not None:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(document + "\n", encoding="utf8")
        with open(out_dir / "traces.csv", "w", encoding="utf8", newline="") as f:
            columns = list(report.traces)
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            writer.writerows(zip(*(report.traces[c] for c in columns)))
    print(document)
    return EXIT_FAILURE if report.verdict == "fail" else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Path of the INI run config")
    common.add_argument(
        "--seed", type=int, default=None, help="Override the config seed (warns)"
    )
    common.add_argument("--out", help="Output file or directory")

    parser = argparse.ArgumentParser(
        description="Collapse dynamics on the light-cone lattice"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser("simulate", parents=[common], help="Sample run records")
    simulate.add_argument("--count", type=int, default=1, help="Number of runs (default: 1)")

    oracle = subparsers.add_parser(
        "oracle", parents=[common], help="Exact history distribution of a stem"
    )
    oracle.add_argument(
        "--stem",
        type=int,
        default=None,
        help="Number of leading vertices of the motion sequence (default: all steps)",
    )

    verify = subparsers.add_parser("verify", parents=[common], help="Run a verification suite")
    verify.add_argument("suite", choices=sorted(SUITES) + ["all"])

    render = subparsers.add_parser("render", parents=[common], help="Draw a record")
    render.add_argument("record", help="Path of a record file")
    render.add_argument("--format", choices=["text", "image"], default="text")

    experiment = subparsers.add_parser("experiment", parents=[common], help="Run an experiment")
    experiment.add_argument("name", choices=["macro_collapse", "noise_profile", "kent"])
    return parser


def _require_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> ConfigFile:
    if args.config is None:
        parser.error(f"{args.command} needs --config")
    return _load(args.config, args.seed)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            if args.count < 0:
                parser.error("--count must be non-negative")
            return cmd_simulate(_require_config(parser, args), args.count, args.out)
        if args.command == "oracle":
            return cmd_oracle(_require_config(parser, args), args.stem, args.out)
        if args.command == "verify":
            config_file = _load(args.config, args.seed) if args.config else None
            seed = args.seed if args.seed is not None else 0
            return cmd_verify(args.suite, config_file, seed, args.out)
        if args.command == "render":
            return cmd_render(args.record, args.format, args.out)
        return cmd_experiment(args.name, _require_config(parser, args), args.out)
    except (
        InvalidConfigException,
        RecordCorruptError,
        GuardrailExceededError,
        ValueError,
        OSError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except GRWLatticeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
