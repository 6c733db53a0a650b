#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
r"""
Spacetime diagrams of run records.

Every link segment swept by a run occupies one cell of a grid: the column is
its slot and the row is the time of its lower end, so the links of the initial
surface fill row 0 and the out-links of a vertex at lattice time ``t`` fill
row ``t``. Right movers rise to the right (``/``), left movers to the left
(``\``). Time runs upward in both renderings.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

import torch
from torchvision.utils import save_image

from .collapse_engine import RunRecord
from .lattice import Direction, build_dag, vertex_times


CELL_SIZE = 9

# RGB
COLOR_ZERO = (0.12, 0.35, 0.85)
COLOR_ONE = (0.85, 0.15, 0.15)
COLOR_UNREALIZED = (0.6, 0.6, 0.6)


@dataclass(frozen=True)
class DrawnLink:
    row: int
    col: int
    direction: Direction
    value: Optional[int]


@dataclass(frozen=True)
class SpacetimeDiagram:
    num_slots: int
    links: Tuple[DrawnLink, ...]

    @property
    def num_rows(self) -> int:
        return 1 + max(link.row for link in self.links)


def diagram_from_record(record: RunRecord) -> SpacetimeDiagram:
    r"""
    Lays out the links of ``record``. Initial links carry the samols initial
    configuration when there is one; out-links carry the realized values of
    their vertex, or ``None``.
    """
    geometry = record.config.geometry
    _, dag, labeling = build_dag(geometry, record.motions)
    initial = record.samols_initial
    links = [
        DrawnLink(
            0,
            slot,
            Direction.R if slot % 2 == 0 else Direction.L,
            None if initial is None else initial[slot],
        )
        for slot in range(geometry.num_slots)
    ]
    times = vertex_times(dag)
    for vertex, event in zip(labeling, record.events):
        row = times[vertex] + 1
        slot_l, slot_r = vertex.slot_pair
        outcome = event.outcome
        links.append(
            DrawnLink(row, slot_l, Direction.L, None if outcome is None else outcome.alpha_L)
        )
        links.append(
            DrawnLink(row, slot_r, Direction.R, None if outcome is None else outcome.alpha_R)
        )
    return SpacetimeDiagram(geometry.num_slots, tuple(links))


def render_text(diagram: SpacetimeDiagram) -> str:
    r"""
    Character grid, one character per slot: the realized value, or the link's
    direction when nothing was realized on it.

    Example
    -------
    A single vertex on ``N = 1`` with outcome ``01``::

        0 1
        / \
    """
    grid: List[List[str]] = [[" "] * diagram.num_slots for _ in range(diagram.num_rows)]
    for link in diagram.links:
        if link.value is not None:
            mark = str(link.value)
        else:
            mark = "/" if link.direction == Direction.R else "\\"
        grid[link.row][link.col] = mark
    lines = [" ".join(row).rstrip() for row in reversed(grid)]
    return "\n".join(lines) + "\n"


def _color(value: Optional[int]) -> Tuple[float, float, float]:
    if value is None:
        return COLOR_UNREALIZED
    return COLOR_ONE if value else COLOR_ZERO


def render_image(diagram: SpacetimeDiagram, cell_size: int = CELL_SIZE) -> torch.Tensor:
    r"""
    Pixel raster of shape ``(3, rows * cell_size, num_slots * cell_size)`` on
    a white background; each link is a diagonal colored by its value.
    """
    rows = diagram.num_rows
    image = torch.ones(3, rows * cell_size, diagram.num_slots * cell_size)
    k = torch.arange(cell_size)
    for link in diagram.links:
        top = (rows - 1 - link.row) * cell_size
        left = link.col * cell_size
        if link.direction == Direction.R:
            ys = top + cell_size - 1 - k
        else:
            ys = top + k
        color = torch.tensor(_color(link.value)).unsqueeze(1)
        image[:, ys, left + k] = color
    return image


def link_pixel(
    diagram: SpacetimeDiagram, link: DrawnLink, cell_size: int = CELL_SIZE
) -> Tuple[int, int]:
    r"""
    Row and column of the pixel at the middle of ``link`` in
    :func:`render_image`.
    """
    middle = cell_size // 2
    top = (diagram.num_rows - 1 - link.row) * cell_size
    return top + middle, link.col * cell_size + middle


def write_image(diagram: SpacetimeDiagram, path: Union[str, Path]) -> None:
    save_image(render_image(diagram), str(path))
