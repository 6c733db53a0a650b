#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
r"""
Verification suites: the oracle checks run over a configured instance and
over seeded random instances.

Every suite returns a list of :class:`~torchgrw.oracle.CheckReport`; a suite
passes iff all its reports pass.
"""

from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import torch

from .lattice import (
    CausalDag,
    LatticeGeometry,
    PartialStem,
    Vertex,
    build_dag,
    is_spacelike,
    random_motions,
    stem_closure,
)
from .oracle import (
    MAX_ENUMERATION_SIZE,
    OPERATOR_TOLERANCE,
    CheckReport,
    _report,
    commutator_check,
    gamma_independence_check,
    heisenberg_jump,
    kraus_check,
    no_signaling_check,
    probability_agreement_check,
    samols_gamma_witness,
    samols_marginal_check,
)
from .quantum import ALL_OUTCOMES, DTYPE, normalize
from .rmatrix import RMatrixAssignment, build_assignment, random_assignment, random_unitary
from .run_config import RunConfig
from .utils import stats


DIAMOND = (0, 2, 1, 3)
# some causally related pair must reach this commutator norm, or the
# spacelike commutation check proves nothing
RELATED_COMMUTATOR_THRESHOLD = 1e-6
MAX_REGION_SIZE = 3


def random_state(num_slots: int, generator: torch.Generator) -> torch.Tensor:
    r"""
    A random normalized state with Gaussian amplitudes.
    """
    real = torch.randn(1 << num_slots, generator=generator, dtype=torch.float64)
    imag = torch.randn(1 << num_slots, generator=generator, dtype=torch.float64)
    return normalize(torch.complex(real, imag).to(DTYPE))


def _randint(generator: torch.Generator, low: int, high: int) -> int:
    return int(torch.randint(low, high, (1,), generator=generator))


def _random_subset(
    vertices: Sequence[Vertex], generator: torch.Generator, max_size: int
) -> List[Vertex]:
    size = _randint(generator, 1, min(max_size, len(vertices)) + 1)
    chosen = torch.randperm(len(vertices), generator=generator)[:size]
    return [vertices[i] for i in sorted(chosen.tolist())]


def _uniform(generator: torch.Generator) -> float:
    return float(torch.rand(1, generator=generator, dtype=torch.float64))


def _random_instance(
    generator: torch.Generator, half_widths: Sequence[int], max_steps: int
) -> Tuple[int, CausalDag, Tuple[Vertex, ...]]:
    half_width = half_widths[_randint(generator, 0, len(half_widths))]
    geometry = LatticeGeometry(half_width)
    steps = _randint(generator, 1, max_steps + 1)
    motions = random_motions(geometry, steps, generator)
    _, dag, labeling = build_dag(geometry, motions)
    return half_width, dag, labeling


def _configured_stem(config: RunConfig, max_steps: int) -> Tuple[CausalDag, Tuple[Vertex, ...]]:
    geometry = config.geometry
    if config.schedule is not None:
        motions = config.schedule[: min(config.steps, max_steps)]
    else:
        generator = torch.Generator()
        generator.manual_seed(config.seed)
        motions = random_motions(geometry, min(config.steps, max_steps), generator)
    _, dag, labeling = build_dag(geometry, motions)
    return dag, labeling


def _fold(name: str, reports: List[CheckReport], tolerance: float) -> CheckReport:
    worst = max(reports, key=lambda r: (not r.passed, r.max_deviation))
    return CheckReport(
        name,
        all(r.passed for r in reports),
        max(r.max_deviation for r in reports),
        tolerance,
        {"instances": len(reports)},
        None if worst.passed else worst.witness,
    )


########################
# SUITES
########################


def kraus_suite(config: Optional[RunConfig], seed: int, instances: int = 100) -> List[CheckReport]:
    generator = torch.Generator()
    generator.manual_seed(seed)
    reports = []
    if config is not None:
        reports.append(kraus_check(config.initial_psi(), (0, 1), config.x))
    for k in range(instances):
        half_width = _randint(generator, 1, 4)
        n = 2 * half_width
        psi = random_state(n, generator)
        slot = _randint(generator, 0, n)
        x = (0.0, 0.25, 0.5, 1.0)[k % 4]
        reports.append(kraus_check(psi, (slot, (slot + 1) % n), x))
    return [_fold("kraus", reports, OPERATOR_TOLERANCE)]


def gamma_suite(
    config: Optional[RunConfig],
    seed: int,
    instances: int = 20,
    related_threshold: float = RELATED_COMMUTATOR_THRESHOLD,
) -> List[CheckReport]:
    r"""
    Labeling independence on the diamond and random stems, and spacelike
    commutation of the vertex operators.

    The commutator report fails unless every spacelike pair commutes and some
    causally related pair has a commutator norm above ``related_threshold``;
    its witness names the related pair of largest norm.
    """
    generator = torch.Generator()
    generator.manual_seed(seed)
    gamma_reports = []

    _, dag, labeling = build_dag(LatticeGeometry(2), DIAMOND)
    psi0 = random_state(4, generator)
    gamma_reports.append(
        gamma_independence_check(
            PartialStem(frozenset(labeling)), dag, random_assignment(labeling, seed), psi0, 0.5
        )
    )
    if config is not None and config.steps > 0 and config.half_width <= 3:
        dag, labeling = _configured_stem(config, 6)
        gamma_reports.append(
            gamma_independence_check(
                PartialStem(frozenset(labeling)),
                dag,
                config.assignment(),
                config.initial_psi(),
                config.x,
            )
        )
    for k in range(instances):
        half_width, dag, labeling = _random_instance(generator, (2, 3), 6)
        gamma_reports.append(
            gamma_independence_check(
                PartialStem(frozenset(labeling)),
                dag,
                random_assignment(labeling, seed + 97 * k),
                random_state(2 * half_width, generator),
                _uniform(generator),
            )
        )

    return [
        _fold("gamma_independence", gamma_reports, gamma_reports[0].tolerance),
        _commutator_report(generator, seed, instances, related_threshold),
    ]


def _commutator_report(
    generator: torch.Generator, seed: int, instances: int, related_threshold: float
) -> CheckReport:
    spacelike_pairs = related_pairs = 0
    worst_spacelike = (0.0, None)
    best_related = (0.0, None)
    for k in range(instances):
        half_width, dag, labeling = _random_instance(generator, (2, 3), 6)
        assignment = random_assignment(labeling, seed + 89 * k)
        x = _uniform(generator)
        for i, u in enumerate(labeling):
            for v in labeling[i + 1 :]:
                norm = commutator_check(u, v, None, assignment, x, 2 * half_width)
                pair = {"instance": k, "x": x, "pair": [str(u), str(v)], "norm": norm}
                if is_spacelike(dag, u, v):
                    spacelike_pairs += 1
                    worst_spacelike = max(worst_spacelike, (norm, pair), key=lambda t: t[0])
                else:
                    related_pairs += 1
                    best_related = max(best_related, (norm, pair), key=lambda t: t[0])

    deviation = worst_spacelike[0]
    commuting = deviation <= OPERATOR_TOLERANCE
    nontrivial = best_related[0] > related_threshold
    stats.update(stats.StatType.DEVIATION, spacelike_commutator=deviation)
    witness: Dict[str, Any] = {"seed": seed}
    if not commuting:
        witness["spacelike"] = worst_spacelike[1]
    if best_related[1] is not None:
        witness["related"] = best_related[1]
    return CheckReport(
        "spacelike_commutator",
        commuting and nontrivial,
        deviation,
        OPERATOR_TOLERANCE,
        {
            "spacelike_pairs": spacelike_pairs,
            "related_pairs": related_pairs,
            "related_max_norm": best_related[0],
            "related_threshold": related_threshold,
        },
        witness,
    )


def heisenberg_suite(
    config: Optional[RunConfig], seed: int, instances: int = 4
) -> List[CheckReport]:
    r"""
    Agreement of the three probability evaluations on the diamond stem, and
    invariance of Heisenberg jump operators under spacelike R-matrix changes.
    """
    generator = torch.Generator()
    generator.manual_seed(seed)
    geometry = LatticeGeometry(2)
    _, dag, labeling = build_dag(geometry, DIAMOND)
    agreement = []
    invariance = 0.0
    for k in range(instances):
        assignment = random_assignment(labeling, seed + 31 * k)
        psi0 = random_state(geometry.num_slots, generator)
        x = _uniform(generator)
        agreement.append(probability_agreement_check(labeling, assignment, psi0, x))
        invariance = max(
            invariance,
            _heisenberg_invariance(dag, labeling, assignment, x, geometry.num_slots, seed + k),
        )
    if config is not None and config.steps > 0 and config.half_width <= 2:
        _, configured = _configured_stem(config, 4)
        agreement.append(
            probability_agreement_check(
                configured, config.assignment(), config.initial_psi(), config.x
            )
        )
    return [
        _fold("probability_agreement", agreement, OPERATOR_TOLERANCE),
        _report(
            "heisenberg_invariance",
            invariance,
            OPERATOR_TOLERANCE,
            {"instances": instances},
            {"seed": seed},
        ),
    ]


def _heisenberg_invariance(
    dag: CausalDag,
    labeling: Sequence[Vertex],
    assignment: RMatrixAssignment,
    x: float,
    num_slots: int,
    seed: int,
) -> float:
    deviation = 0.0
    outcomes = [ALL_OUTCOMES[(3 * k + seed) % 4] for k in range(len(labeling))]
    for k, vertex in enumerate(labeling, start=1):
        reference = heisenberg_jump(k, labeling, outcomes, assignment, x, num_slots)
        for other in labeling:
            if is_spacelike(dag, vertex, other):
                changed = assignment.with_vertex(other, random_unitary(seed + other.ordinal + 7))
                J = heisenberg_jump(k, labeling, outcomes, changed, x, num_slots)
                deviation = max(deviation, float((J - reference).abs().max()))
    return deviation


def nosignal_suite(
    config: Optional[RunConfig], seed: int, instances: int = 50
) -> List[CheckReport]:
    r"""
    External no-signaling on random spacelike regions of up to
    ``MAX_REGION_SIZE`` vertices, with region A's R-matrices replaced by
    random ones, plus the configured run when ``config`` is given (see
    :func:`configured_no_signaling`).
    """
    generator = torch.Generator()
    generator.manual_seed(seed)
    configured = configured_no_signaling(config) if config is not None else None
    reports = [configured] if configured is not None else []
    target = len(reports) + instances
    attempts = 0
    while len(reports) < target:
        attempts += 1
        half_width, dag, labeling = _random_instance(generator, (2, 3), 6)
        regions = _random_regions(dag, labeling, generator)
        if regions is None:
            continue
        region_a, region_b = regions
        first = random_assignment(labeling, seed + attempts)
        second = first
        for a in region_a:
            second = second.with_vertex(a, random_unitary(seed + 5000 + attempts + a.ordinal))
        reports.append(
            no_signaling_check(
                dag,
                region_a,
                region_b,
                first,
                second,
                random_state(2 * half_width, generator),
                _uniform(generator),
            )
        )
    report = _fold("no_signaling", reports, reports[0].tolerance)
    report.details.update(
        configured=configured is not None,
        largest_region_a=max(r.details["region_a"] for r in reports),
        largest_region_b=max(r.details["region_b"] for r in reports),
    )
    return [report]


def configured_no_signaling(config: RunConfig) -> Optional[CheckReport]:
    r"""
    No-signaling on the first vertices of the configured run.

    Region A is the set of vertices covered by the config's R-matrix
    overrides, compared against the same run without them; without overrides
    it is the first vertex, given a random R-matrix. Region B is every vertex
    spacelike to all of A. Returns ``None`` when either region is empty.
    """
    if config.steps == 0 or config.half_width > 3:
        return None
    dag, labeling = _configured_stem(config, 6)
    first = config.assignment()
    if config.overrides:
        overrides = [override.build() for override in config.overrides]
        region_a = [v for v in labeling if any(o.covers(v) for o in overrides)]
        second = build_assignment(config.rmatrix)
    else:
        region_a = [labeling[0]]
        second = first.with_vertex(labeling[0], random_unitary(config.seed))
    region_b = [v for v in labeling if all(is_spacelike(dag, v, a) for a in region_a)]
    if not region_a or not region_b:
        return None
    return no_signaling_check(
        dag, region_a, region_b, first, second, config.initial_psi(), config.x
    )


def _random_regions(
    dag: CausalDag, labeling: Sequence[Vertex], generator: torch.Generator
) -> Optional[Tuple[List[Vertex], List[Vertex]]]:
    b = labeling[_randint(generator, 0, len(labeling))]
    candidates = [v for v in labeling if is_spacelike(dag, v, b)]
    if not candidates:
        return None
    region_a = _random_subset(candidates, generator, MAX_REGION_SIZE)
    others = [
        v for v in labeling if v != b and all(is_spacelike(dag, v, a) for a in region_a)
    ]
    region_b = [b]
    if others:
        region_b += _random_subset(others, generator, MAX_REGION_SIZE - 1)
    if len(stem_closure(dag, region_a + region_b)) > MAX_ENUMERATION_SIZE:
        return None
    return region_a, region_b


def samols_suite(
    config: Optional[RunConfig], seed: int, instances: int = 10
) -> List[CheckReport]:
    r"""
    Born-rule marginals of samols histories, and a witness that samols
    distributions depend on the labeling.
    """
    generator = torch.Generator()
    generator.manual_seed(seed)
    geometry = LatticeGeometry(2)
    marginals = []
    configured = config is not None and 0 < config.steps and config.half_width <= 3
    if configured:
        _, configured_labeling = _configured_stem(config, 3)
        marginals.append(
            samols_marginal_check(
                configured_labeling, config.assignment(), config.initial_psi()
            )
        )
    for k in range(instances):
        steps = _randint(generator, 1, 4)
        _, _, labeling = build_dag(geometry, random_motions(geometry, steps, generator))
        marginals.append(
            samols_marginal_check(
                labeling,
                random_assignment(labeling, seed + 13 * k),
                random_state(geometry.num_slots, generator),
            )
        )
    _, dag, labeling = build_dag(geometry, DIAMOND)
    # the diamond lives on N = 2, so only a config of that width lends its state
    configured_state = config is not None and config.half_width == 2
    if configured_state:
        psi0 = config.initial_psi()
    else:
        psi0 = random_state(geometry.num_slots, generator)
    witness = samols_gamma_witness(PartialStem(frozenset(labeling)), dag, psi0, seed)
    witness.details["configured_state"] = configured_state
    marginal = _fold("samols_marginal", marginals, marginals[0].tolerance)
    marginal.details["configured"] = configured
    return [marginal, witness]


SUITES: Dict[str, Callable[[Optional[RunConfig], int], List[CheckReport]]] = {
    "kraus": kraus_suite,
    "gamma": gamma_suite,
    "heisenberg": heisenberg_suite,
    "nosignal": nosignal_suite,
    "samols": samols_suite,
}


def run_suite(name: str, config: Optional[RunConfig] = None, seed: int = 0) -> List[CheckReport]:
    r"""
    Runs the suite ``name`` (or every suite for ``"all"``).

    Raises
    ------
    ValueError
        If the suite is unknown.
    """
    if name == "all":
        return [report for suite in SUITES.values() for report in suite(config, seed)]
    if name not in SUITES:
        raise ValueError(f"Unknown suite {name!r}, expected one of {sorted(SUITES)} or 'all'")
    return SUITES[name](config, seed)
