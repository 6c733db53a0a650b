#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
r"""
Sampled statistics for runs, oracle checks and experiments.

Nothing is recorded unless a :class:`Stat` has been registered with :func:`add`;
the engine and the oracle call :func:`update` unconditionally.
"""

import warnings
from enum import IntEnum
from typing import Any, Dict, List, Optional, Tuple


try:
    from torch.utils.tensorboard import SummaryWriter
except ImportError:
    warnings.warn("Tensorboard library was not found. Using dummy SummaryWriter")

    class SummaryWriter:
        def add_scalar(self, *args, **kwargs):
            pass


class StatType(IntEnum):
    r"""
    This enum covers all the stat types we currently support.

    1. DYNAMICS: Per-event hit norms and outcome probabilities of a run
    2. BRANCH_WEIGHT: Born weight of a tracked configuration after each event
    3. NOISE: Bias and correlation of realized values in the noise experiment
    4. DEVIATION: Maximum atom deviation of each oracle check
    5. EXPERIMENT: A namespace where you can attach your own experiment metrics
    """
    DYNAMICS = 1
    BRANCH_WEIGHT = 2
    NOISE = 3
    DEVIATION = 4
    EXPERIMENT = 5


class Stat:
    r"""
    Wrapper around tensorboard's ``SummaryWriter.add_scalar`` that samples
    or averages values before writing them.

    The engine already reports ``StatType.DYNAMICS`` (``norm_l``, ``norm_r``,
    ``probability``) for every realized vertex and the oracle reports
    ``StatType.DEVIATION`` for every check; they only need a registered stat.
    Every written scalar is also kept in ``history``.

    Examples
    --------
    To follow the hit norms of a run, averaged over blocks of 10 events:

        >>> stats.add(Stat(StatType.DYNAMICS, 'hits', frequency=0.1))
        >>> record = run(config)

    An existing ``SummaryWriter`` can be shared:

        >>> stats.set_global_summary_writer(tensorboard.SummaryWriter())

    Experiment code updates its own stats the same way:

        >>> stats.add(Stat(StatType.EXPERIMENT, 'weights'))
        >>> stats.update(StatType.EXPERIMENT, w=0.5)
    """
    summary_writer: Optional[SummaryWriter] = None

    def __init__(
        self,
        stat_type: StatType,
        name: str,
        frequency: float = 1.0,
        reduction: str = "avg",
    ):
        r"""
        Parameters
        ----------
        stat_type:
            Type of the statistic from ``StatType``.
        name:
            Name identifying this ``Stat`` in ``update`` and in tensorboard.
        frequency:
            Fraction of ``log`` calls that write, in ``(0, 1]``.
        reduction:
            ``'avg'`` writes the mean of the values seen since the last write,
            ``'sample'`` writes the latest value.
        """
        if not 0 < frequency <= 1:
            raise ValueError(f"Stat frequency must lie in (0, 1], got {frequency}")
        if reduction not in ("avg", "sample"):
            raise ValueError(f"Unknown reduction {reduction!r}")
        self.type = stat_type
        self.name = name
        self.report = int(1 / frequency)
        self.reduction = reduction
        self.writer = Stat.summary_writer if Stat.summary_writer else SummaryWriter()
        self.history: List[Tuple[int, str, float]] = []
        self.reset()

    def reset(self):
        """
        Resets the accumulated metrics.
        """
        self.named_value: Dict[str, float] = {}
        self.iter = 0

    def log(self, named_value: Dict[str, Any]):
        r"""
        Accumulates one set of values and writes once every ``1 / frequency``
        calls.

        Generally not used directly (use ``update`` instead).
        """
        for k, v in named_value.items():
            v = float(v)
            if self.reduction == "sample" or k not in self.named_value:
                self.named_value[k] = v if self.reduction == "sample" else v / self.report
            else:
                self.named_value[k] += v / self.report
        self.iter += 1
        if self.iter % self.report == 0:
            for k, v in self.named_value.items():
                tag = f"{self.type.name}:{self.name}/{k}"
                self.writer.add_scalar(tag, v, self.iter)
                self.history.append((self.iter, k, v))
            self.named_value = {}


# global variable keeping the list of all the stats.
Stats: List[Stat] = []


def set_global_summary_writer(summary_writer: SummaryWriter):
    """
    Shares an externally created SummaryWriter with every stat created later.
    """
    Stat.summary_writer = summary_writer


def add(*args: Stat):
    r"""
    Adds statistics gathering to the process.
    """
    Stats.extend(args)


def clear():
    r"""
    Clears all stats and stops collecting statistics.
    """
    Stats.clear()


def remove(name: str):
    r"""
    Removes the Stat of name ``name`` from the global statistics gathering.
    """
    Stats[:] = [stat for stat in Stats if stat.name != name]


def _matching(stat_type: Optional[StatType], name: Optional[str]) -> List[Stat]:
    return [
        stat
        for stat in Stats
        if (stat_type is None or stat.type == stat_type)
        and (name is None or stat.name == name)
    ]


def reset(stat_type: Optional[StatType] = None, name: Optional[str] = None):
    r"""
    Resets the stat with given `name` and `stat_type`
    """
    for stat in _matching(stat_type, name):
        stat.reset()


def update(
    stat_type: Optional[StatType] = None,
    name: Optional[str] = None,
    **named_values: float,
):
    r"""
    Updates the stat(s) with the given ``name`` and ``stat_type``

    Parameters
    ----------
        stat_type:
            The type of the stat from ``StatType``. Could be ``None``
            if ``name`` is unique.
        name:
            The name of the stat. Could be ``None`` if there is only one
            stat for the ``stat_type``
        **named_values:
            A set of values with their names
    """
    for stat in _matching(stat_type, name):
        stat.log(named_values)
