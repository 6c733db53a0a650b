#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
r"""
Physics experiments built on the collapse engine and the exact oracle.

Each experiment returns an :class:`ExperimentReport`: the parameters it ran
with, scalar statistics, a verdict and per-step traces (columns of equal
length) that the CLI writes as CSV.
"""

import dataclasses
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from scipy.stats import norm
from tqdm import tqdm

from .collapse_engine import CollapseEngine, batch_run
from .errors import GRWLatticeError
from .lattice import PartialStem, build_dag, random_motions
from .oracle import MAX_ENUMERATION_SIZE, enumerate_distribution
from .quantum import (
    ALL_OUTCOMES,
    JumpSpec,
    SlotPair,
    VertexOutcome,
    born_probabilities,
    vertex_hit,
    vertex_jump_probabilities,
)
from .rmatrix import RMatrixKind, RMatrixSpec
from .run_config import DynamicsKind, InitialStateSpec, RunConfig
from .utils import stats
from .utils.tensor_utils import basis_index


COLLAPSE_THRESHOLD = 1e-6
WHITE_NOISE_SIGMAS = 3.0


class IncompatibleHistoryError(GRWLatticeError):
    r"""
    Raised when a conditioning history has probability zero.
    """

    pass


@dataclass
class ExperimentReport:
    name: str
    parameters: Dict[str, Any]
    statistics: Dict[str, Any]
    verdict: str
    traces: Dict[str, List[Any]] = field(default_factory=dict)


def _require_grw(config: RunConfig, experiment: str) -> None:
    if config.dynamics != DynamicsKind.GRW or config.p != 1.0:
        raise ValueError(f"The {experiment} experiment runs grw dynamics with p = 1")


########################
# BRANCH WEIGHTS
########################


def expected_branch_weight(
    psi: torch.Tensor,
    slot_pair: SlotPair,
    x: Union[float, JumpSpec],
    configuration: Union[int, Sequence[int]],
) -> float:
    r"""
    Expected Born weight of ``configuration`` after a vertex event on
    ``slot_pair``, averaged over the four outcomes.

    Grw hits are a martingale for the weight of every basis configuration, so
    this equals the weight before the event.

    Example
    -------
        >>> psi = amplitude_state([0.6, 0, 0, 0.8])
        >>> round(expected_branch_weight(psi, (0, 1), 0.5, 0), 12)
        0.36
    """
    spec = x if isinstance(x, JumpSpec) else JumpSpec(float(x))
    index = configuration if isinstance(configuration, int) else basis_index(configuration)
    probs = vertex_jump_probabilities(psi, slot_pair, spec)
    expected = 0.0
    for outcome, prob in zip(ALL_OUTCOMES, probs.tolist()):
        if prob <= 0.0:
            continue
        hit, _ = vertex_hit(psi, slot_pair, outcome, spec)
        expected += prob * float(born_probabilities(hit)[index])
    return expected


def macro_collapse(
    config: RunConfig, runs: int, threshold: float = COLLAPSE_THRESHOLD
) -> ExperimentReport:
    r"""
    Follows the weight ``w`` of the all-zeros configuration along ``runs``
    grw trajectories started from the cat state with identity R-matrices.

    The initial state and the R-matrices of ``config`` are replaced; run
    ``r`` uses seed ``config.seed + r``. A run has collapsed when
    ``min(w, 1 - w) < threshold`` at its last step.
    """
    _require_grw(config, "macro collapse")
    base = dataclasses.replace(
        config,
        initial_state=InitialStateSpec.cat(config.num_slots),
        rmatrix=RMatrixSpec(RMatrixKind.IDENTITY),
        overrides=(),
    )
    trace_run, trace_step, trace_weight = [], [], []
    finals = []
    for r in tqdm(range(runs), desc="macro collapse", disable=runs < 10):
        engine = CollapseEngine(base.with_seed(config.seed + r))
        weight = float(born_probabilities(engine.trajectory.psi)[0])
        trace_run.append(r)
        trace_step.append(0)
        trace_weight.append(weight)
        for step in range(1, base.steps + 1):
            engine.step()
            weight = float(born_probabilities(engine.trajectory.psi)[0])
            stats.update(stats.StatType.BRANCH_WEIGHT, weight=weight)
            trace_run.append(r)
            trace_step.append(step)
            trace_weight.append(weight)
        finals.append(weight)

    finals = np.array(finals)
    collapsed = np.minimum(finals, 1.0 - finals) < threshold
    return ExperimentReport(
        "macro_collapse",
        {
            "half_width": base.half_width,
            "steps": base.steps,
            "x": base.x,
            "runs": runs,
            "seed": config.seed,
            "threshold": threshold,
        },
        {
            "collapsed_fraction": float(collapsed.mean()) if runs else 0.0,
            "zero_branch_fraction": float((finals > 1.0 - threshold).mean()) if runs else 0.0,
            "mean_final_weight": float(finals.mean()) if runs else 0.5,
        },
        "observational",
        {"run": trace_run, "step": trace_step, "weight": trace_weight},
    )


########################
# NOISE
########################


def _correlation(a: np.ndarray, b: np.ndarray) -> Optional[float]:
    if len(a) < 2 or a.std() == 0 or b.std() == 0:
        return None
    return float(np.corrcoef(a, b)[0, 1])


def judge_slot_bias(
    slot_bias: Sequence[float], slot_counts: Sequence[int]
) -> Tuple[List[Optional[float]], List[int]]:
    r"""
    Binomial bound on the bias of each slot and the slots that exceed it.

    Slots without values get no bound. The two-sided tail of
    ``WHITE_NOISE_SIGMAS`` is shared among the judged slots.
    """
    judged = [s for s, n in enumerate(slot_counts) if n > 0]
    tail = 2 * norm.sf(WHITE_NOISE_SIGMAS) / max(len(judged), 1)
    sigmas = float(norm.isf(tail / 2))
    bounds: List[Optional[float]] = [None] * len(slot_counts)
    for s in judged:
        bounds[s] = sigmas * 0.5 / math.sqrt(slot_counts[s])
    return bounds, [s for s in judged if abs(slot_bias[s] - 0.5) > bounds[s]]


def noise_profile(config: RunConfig, events: int = 100000) -> ExperimentReport:
    r"""
    Bias and nearest-neighbor correlations of the realized field values.

    Vertices are sampled along the config's motion sequence until at least
    ``events`` of them are expected to be realized; with ``p < 1`` skipped
    vertices carry no values and are left out. The pair correlation is
    between the two values of one vertex, the line correlation between the L
    values of consecutive realized vertices.

    At ``x = 1`` every value must be a fair coin independent of its neighbors.
    The verdict is ``"pass"`` iff the pooled bias and both correlations lie
    within three standard errors of white noise and the bias of every slot
    lies within its own binomial bound, widened for the number of slots
    judged. Other ``x`` are observational.
    """
    if config.dynamics != DynamicsKind.GRW:
        raise ValueError("The noise experiment runs grw dynamics")
    if config.steps < 1 or config.p <= 0.0:
        raise ValueError("The noise experiment needs at least one step and p > 0")
    trajectories = math.ceil(events / (config.steps * config.p))
    result = batch_run(config, trajectories)
    _, _, vertices = build_dag(config.geometry, result.motions)
    outcomes = result.outcomes.numpy()
    realized = outcomes >= 0
    alpha_l, alpha_r = outcomes // 2, outcomes % 2

    values = np.concatenate([alpha_l[realized], alpha_r[realized]])
    bias = float(values.mean()) if values.size else float("nan")
    pair = _correlation(alpha_l[realized], alpha_r[realized])
    line = None
    line_pairs = 0
    if config.steps > 1:
        both = realized[:, :-1] & realized[:, 1:]
        line_pairs = int(both.sum())
        line = _correlation(alpha_l[:, :-1][both], alpha_l[:, 1:][both])

    slot_values: Dict[int, List[np.ndarray]] = {s: [] for s in range(config.num_slots)}
    for k, vertex in enumerate(vertices):
        slot_values[vertex.slot_pair[0]].append(alpha_l[realized[:, k], k])
        slot_values[vertex.slot_pair[1]].append(alpha_r[realized[:, k], k])
    slot_samples = [
        np.concatenate(slot_values[s]) if slot_values[s] else np.zeros(0, dtype=np.int64)
        for s in range(config.num_slots)
    ]
    slot_counts = [int(v.size) for v in slot_samples]
    slot_bias = [float(v.mean()) if v.size else float("nan") for v in slot_samples]
    stats.update(stats.StatType.NOISE, bias=bias)

    statistics: Dict[str, Any] = {
        "events": int(realized.sum()),
        "bias": bias,
        "pair_correlation": pair,
        "line_correlation": line,
    }
    slot_bounds: List[Optional[float]] = [None] * config.num_slots
    if config.x == 1.0:
        bound_bias = WHITE_NOISE_SIGMAS * 0.5 / math.sqrt(max(values.size, 1))
        bound_pair = WHITE_NOISE_SIGMAS / math.sqrt(max(int(realized.sum()), 1))
        bound_line = WHITE_NOISE_SIGMAS / math.sqrt(max(line_pairs, 1))
        slot_bounds, biased_slots = judge_slot_bias(slot_bias, slot_counts)

        statistics["bias_bound"] = bound_bias
        statistics["pair_bound"] = bound_pair
        statistics["line_bound"] = bound_line
        statistics["biased_slots"] = biased_slots
        correlations = [(pair, bound_pair)]
        if config.steps > 1:
            correlations.append((line, bound_line))
        passed = (
            abs(bias - 0.5) <= bound_bias
            and all(c is not None and abs(c) <= bound for c, bound in correlations)
            and not biased_slots
        )
        verdict = "pass" if passed else "fail"
    else:
        verdict = "observational"
    return ExperimentReport(
        "noise",
        {
            "half_width": config.half_width,
            "steps": config.steps,
            "x": config.x,
            "p": config.p,
            "seed": config.seed,
            "trajectories": trajectories,
        },
        statistics,
        verdict,
        {
            "slot": list(range(config.num_slots)),
            "events": slot_counts,
            "bias": slot_bias,
            "bound": slot_bounds,
        },
    )


########################
# STATE DEPENDENCE
########################


def _shared_motions(config: RunConfig) -> List[int]:
    if config.schedule is not None:
        return list(config.schedule[: config.steps])
    generator = torch.Generator()
    generator.manual_seed(config.seed)
    return random_motions(config.geometry, config.steps, generator)


def _outcome_indices(outcomes: Sequence[Any]) -> List[int]:
    return [
        o if isinstance(o, int) else VertexOutcome(*o).index for o in outcomes
    ]


def _tv(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(p - q).sum())


def kent_state_dependence(
    config_a: RunConfig,
    config_b: RunConfig,
    early: Sequence[Any],
    window: int,
    samples: int = 200000,
    bootstrap: int = 200,
) -> ExperimentReport:
    r"""
    Total-variation distance between the distributions of a window of later
    outcomes, conditioned on the same early outcomes, for two initial states.

    Both runs follow the motion sequence of ``config_a``; the two configs may
    differ only in their initial state. The first ``len(early)`` vertices are
    conditioned on ``early`` and the following ``window`` vertices are
    observed. The distance is exact when the stem is small enough to
    enumerate; otherwise it is estimated by rejection sampling from
    ``samples`` trajectories per state with a bootstrap confidence interval.

    Raises
    ------
    IncompatibleHistoryError
        If ``early`` has probability zero (or no sample matched it) under
        either state.
    """
    _require_grw(config_a, "state dependence")
    if dataclasses.replace(config_b, initial_state=config_a.initial_state) != config_a:
        raise ValueError("The two configs may differ only in their initial state")
    early = _outcome_indices(early)
    m = len(early)
    if window < 1 or m + window > config_a.steps:
        raise ValueError(
            f"Need 1 <= window and {m} + window <= steps = {config_a.steps}"
        )
    motions = _shared_motions(config_a)[: m + window]
    config_a = dataclasses.replace(config_a, steps=m + window, schedule=tuple(motions))
    config_b = dataclasses.replace(config_b, steps=m + window, schedule=tuple(motions))

    if m + window <= MAX_ENUMERATION_SIZE:
        method = "exact"
        late_a, late_b = (_exact_window(c, motions, early) for c in (config_a, config_b))
        tv = _tv(late_a, late_b)
        ci = (tv, tv)
        acceptance = {}
    else:
        method = "sampled"
        rows_a, rows_b = (_sampled_window(c, samples, early) for c in (config_a, config_b))
        late_a, late_b = (_histogram(rows, window) for rows in (rows_a, rows_b))
        tv = _tv(late_a, late_b)
        ci = _bootstrap_ci(rows_a, rows_b, window, bootstrap, config_a.seed)
        acceptance = {
            "acceptance_a": len(rows_a) / samples,
            "acceptance_b": len(rows_b) / samples,
        }
    stats.update(stats.StatType.EXPERIMENT, tv_distance=tv)
    return ExperimentReport(
        "state_dependence",
        {
            "half_width": config_a.half_width,
            "x": config_a.x,
            "early": [str(ALL_OUTCOMES[o]) for o in early],
            "window": window,
            "motions": motions,
            "method": method,
        },
        {"tv_distance": tv, "ci_low": ci[0], "ci_high": ci[1], **acceptance},
        "observational",
        {
            "atom": window_atoms(window),
            "probability_a": late_a.tolist(),
            "probability_b": late_b.tolist(),
        },
    )


def _exact_window(config: RunConfig, motions: Sequence[int], early: Sequence[int]) -> np.ndarray:
    _, _, labeling = build_dag(config.geometry, motions)
    distribution = enumerate_distribution(
        PartialStem(frozenset(labeling)),
        labeling,
        config.assignment(),
        config.initial_psi(),
        config.x,
    )
    conditioned = distribution.probs[tuple(early)]
    total = float(conditioned.sum())
    if total <= 0.0:
        raise IncompatibleHistoryError(
            f"Early outcomes {early} have probability zero from this initial state"
        )
    return (conditioned / total).flatten().numpy()


def _sampled_window(config: RunConfig, samples: int, early: Sequence[int]) -> np.ndarray:
    outcomes = batch_run(config, samples).outcomes.numpy()
    m = len(early)
    accepted = outcomes[(outcomes[:, :m] == np.array(early, dtype=np.int64)).all(axis=1), m:]
    if len(accepted) == 0:
        raise IncompatibleHistoryError(
            f"No sampled trajectory matched the early outcomes {early}"
        )
    return accepted


def _histogram(rows: np.ndarray, window: int) -> np.ndarray:
    weights = 4 ** np.arange(window - 1, -1, -1)
    atoms = rows @ weights
    return np.bincount(atoms, minlength=4 ** window) / len(rows)


def _bootstrap_ci(
    rows_a: np.ndarray, rows_b: np.ndarray, window: int, rounds: int, seed: int
) -> tuple:
    rng = np.random.default_rng(seed)
    distances = []
    for _ in range(rounds):
        resample_a = rows_a[rng.integers(0, len(rows_a), len(rows_a))]
        resample_b = rows_b[rng.integers(0, len(rows_b), len(rows_b))]
        distances.append(_tv(_histogram(resample_a, window), _histogram(resample_b, window)))
    low, high = np.percentile(distances, [2.5, 97.5])
    return float(low), float(high)


def window_atoms(window: int) -> List[str]:
    r"""
    Labels of the ``4 ** window`` atoms of a window, in index order.
    """
    return [
        " ".join(str(o) for o in outcomes)
        for outcomes in itertools.product(ALL_OUTCOMES, repeat=window)
    ]
