#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
r"""
Geometry of the periodic 1+1 null lattice.

Space is periodic of width ``2N``. A spacelike surface cuts ``2N`` links,
``N`` of them right moving (``R``) and ``N`` left moving (``L``). Surfaces are
stored as a cyclic sequence of *slots*; an elementary motion at slot ``i``
replaces the adjacent pair ``(R, L)`` in slots ``(i, i + 1 mod 2N)`` by the
continuation pair ``(L, R)`` and crosses one vertex. Slots never move, so a
link's slot index is also the index of its qubit in the state vector.

Every crossed vertex is appended to a :class:`CausalDag`, which keeps the
causal order as the transitive closure of "produced one of my in-links".

Example
-------
    >>> geometry = LatticeGeometry(2)
    >>> surface = initial_surface(geometry)
    >>> dag = CausalDag(geometry)
    >>> surface, v0 = apply_motion(surface, 0, dag)
    >>> surface, v2 = apply_motion(surface, 2, dag)
    >>> is_spacelike(dag, v0, v2)
    True
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

import torch

from .errors import GRWLatticeError, GuardrailExceededError


MAX_LINEAR_EXTENSION_SIZE = 10


class InvalidMotionError(GRWLatticeError):
    r"""
    Raised when an elementary motion is requested at a slot that does not hold
    an ``R`` link followed by an ``L`` link.
    """

    pass


class UnknownVertexError(GRWLatticeError):
    r"""
    Raised when a vertex is looked up in a dag that did not create it.
    """

    pass


class NotNaturalLabelingError(GRWLatticeError):
    r"""
    Raised when a sequence of vertices lists a vertex before one of its
    causal predecessors.
    """

    pass


class Direction(str, Enum):
    L = "L"
    R = "R"


@dataclass(frozen=True)
class LatticeGeometry:
    r"""
    Periodic null lattice whose spacelike surfaces cut ``2 * half_width`` links.
    """

    half_width: int

    def __post_init__(self):
        if not isinstance(self.half_width, int) or self.half_width < 1:
            raise ValueError(
                f"half_width must be a positive integer, got {self.half_width!r}"
            )

    @property
    def num_slots(self) -> int:
        return 2 * self.half_width

    def next_slot(self, slot: int) -> int:
        return (slot + 1) % self.num_slots


@dataclass(frozen=True, order=True)
class LinkId:
    r"""
    A link of the lattice: the ``segment``-th piece of null line ``line``.

    Lines are numbered by the slot their first link occupies on the initial
    surface; each crossing advances the segment by one.
    """

    direction: Direction
    line: int
    segment: int

    def continuation(self) -> "LinkId":
        return LinkId(self.direction, self.line, self.segment + 1)

    def __str__(self):
        return f"{self.direction.value}{self.line}.{self.segment}"


@dataclass(frozen=True)
class Surface:
    r"""
    A spacelike surface, given by the links it cuts in slot order.
    """

    geometry: LatticeGeometry
    slots: Tuple[LinkId, ...]

    def __post_init__(self):
        if len(self.slots) != self.geometry.num_slots:
            raise ValueError(
                f"A surface of half width {self.geometry.half_width} cuts "
                f"{self.geometry.num_slots} links, got {len(self.slots)}"
            )
        num_left = sum(1 for link in self.slots if link.direction == Direction.L)
        if num_left != self.geometry.half_width:
            raise ValueError(
                f"A surface must cut {self.geometry.half_width} L links and as many "
                f"R links, got pattern {self.pattern_string}"
            )

    @property
    def pattern(self) -> Tuple[Direction, ...]:
        return tuple(link.direction for link in self.slots)

    @property
    def pattern_string(self) -> str:
        return "".join(link.direction.value for link in self.slots)


@dataclass(frozen=True)
class Vertex:
    r"""
    A vertex crossed by an elementary motion.

    ``in_links`` is ``(R, L)`` as found in slots ``slot_pair`` before the
    motion, ``out_links`` is ``(L, R)`` as left in the same slots after it.
    ``pair_ordinal`` counts the vertices crossed earlier at the same slot pair;
    together with ``slot_pair`` it locates the vertex independently of the
    order in which the lattice was swept.
    """

    ordinal: int
    in_links: Tuple[LinkId, LinkId]
    out_links: Tuple[LinkId, LinkId]
    slot_pair: Tuple[int, int]
    pair_ordinal: int

    @property
    def location(self) -> Tuple[int, int]:
        return self.slot_pair[0], self.pair_ordinal

    def __str__(self):
        return f"v{self.ordinal}@{self.slot_pair[0]}.{self.pair_ordinal}"


NaturalLabeling = Tuple[Vertex, ...]


@dataclass(frozen=True)
class PartialStem:
    r"""
    A finite set of vertices that contains its own causal past.

    Build it with :func:`make_stem`, which checks the closure, or with
    :func:`stem_closure`, which adds the missing past.
    """

    vertices: FrozenSet[Vertex]

    def __len__(self):
        return len(self.vertices)

    def __contains__(self, vertex: Vertex) -> bool:
        return vertex in self.vertices

    def sorted(self) -> NaturalLabeling:
        r"""
        Returns the stem in creation order, which is always a natural labeling.
        """
        return tuple(sorted(self.vertices, key=lambda v: v.ordinal))


class CausalDag:
    r"""
    The vertices crossed so far in one run, with their causal order.

    Reachability is maintained incrementally: the strict past of a new vertex
    is the union of its direct predecessors and their pasts.
    """

    def __init__(self, geometry: LatticeGeometry):
        self.geometry = geometry
        self.vertices: List[Vertex] = []
        self.direct_predecessors: Dict[Vertex, FrozenSet[Vertex]] = {}
        self.reachability: Dict[Vertex, FrozenSet[Vertex]] = {}
        self._producers: Dict[LinkId, Vertex] = {}
        self._pair_counts: Dict[int, int] = {}

    def __len__(self):
        return len(self.vertices)

    def __contains__(self, vertex: Vertex) -> bool:
        return vertex in self.reachability

    def __iter__(self) -> Iterator[Vertex]:
        return iter(self.vertices)

    def add_vertex(
        self,
        in_links: Tuple[LinkId, LinkId],
        out_links: Tuple[LinkId, LinkId],
        slot_pair: Tuple[int, int],
    ) -> Vertex:
        r"""
        Appends a vertex and updates the causal order.

        Only :func:`apply_motion` should call this.
        """
        slot = slot_pair[0]
        vertex = Vertex(
            ordinal=len(self.vertices),
            in_links=in_links,
            out_links=out_links,
            slot_pair=slot_pair,
            pair_ordinal=self._pair_counts.get(slot, 0),
        )
        self._pair_counts[slot] = vertex.pair_ordinal + 1

        predecessors = frozenset(
            self._producers[link] for link in in_links if link in self._producers
        )
        past: Set[Vertex] = set(predecessors)
        for predecessor in predecessors:
            past |= self.reachability[predecessor]

        self.vertices.append(vertex)
        self.direct_predecessors[vertex] = predecessors
        self.reachability[vertex] = frozenset(past)
        for link in out_links:
            self._producers[link] = vertex
        return vertex

    def producer(self, link: LinkId) -> Optional[Vertex]:
        r"""
        Returns the vertex whose out-link is ``link``, or None for links of
        the initial surface.
        """
        return self._producers.get(link)

    def past(self, vertex: Vertex) -> FrozenSet[Vertex]:
        if vertex not in self.reachability:
            raise UnknownVertexError(f"Vertex {vertex} does not belong to this dag")
        return self.reachability[vertex]

    def precedes(self, u: Vertex, v: Vertex) -> bool:
        r"""
        True iff ``u`` is strictly in the causal past of ``v``.
        """
        self.past(u)
        return u in self.past(v)

    def pair_count(self, slot: int) -> int:
        return self._pair_counts.get(slot, 0)

    def recompute_reachability(self) -> Dict[Vertex, FrozenSet[Vertex]]:
        r"""
        Recomputes the transitive closure of ``direct_predecessors`` from
        scratch, without using the incrementally maintained relation.
        """
        closure: Dict[Vertex, FrozenSet[Vertex]] = {}
        for vertex in self.vertices:
            stack = list(self.direct_predecessors[vertex])
            seen: Set[Vertex] = set()
            while stack:
                u = stack.pop()
                if u in seen:
                    continue
                seen.add(u)
                stack.extend(self.direct_predecessors[u])
            closure[vertex] = frozenset(seen)
        return closure

    def find(self, slot: int, pair_ordinal: int) -> Vertex:
        r"""
        Looks a vertex up by its location.
        """
        for vertex in self.vertices:
            if vertex.location == (slot, pair_ordinal):
                return vertex
        raise UnknownVertexError(
            f"No vertex at slot {slot} with pair ordinal {pair_ordinal}"
        )


def initial_surface(geometry: LatticeGeometry) -> Surface:
    r"""
    Returns the constant time slice ``RLRL...RL`` made of fresh links.

    The link in slot ``i`` starts null line ``i``; right movers sit in even
    slots, so the RL pairs are at slots ``0, 2, ..., 2N - 2``.
    """
    slots = tuple(
        LinkId(Direction.R if slot % 2 == 0 else Direction.L, slot, 0)
        for slot in range(geometry.num_slots)
    )
    return Surface(geometry, slots)


def rl_pairs(surface: Surface) -> List[int]:
    r"""
    Returns every slot ``i`` holding an R link followed (cyclically) by an L link.
    """
    geometry = surface.geometry
    return [
        slot
        for slot in range(geometry.num_slots)
        if surface.slots[slot].direction == Direction.R
        and surface.slots[geometry.next_slot(slot)].direction == Direction.L
    ]


def apply_motion(surface: Surface, slot: int, dag: CausalDag) -> Tuple[Surface, Vertex]:
    r"""
    Moves ``surface`` up across the vertex sitting on the RL pair at ``slot``.

    Parameters
    ----------
    surface: Surface
        The current surface.
    slot: int
        Slot of the R link of the pair.
    dag: CausalDag
        The run's dag; the crossed vertex is appended to it.

    Returns
    -------
    Tuple[Surface, Vertex]
        The new surface and the crossed vertex.

    Raises
    ------
    InvalidMotionError
        If ``slot`` does not name an RL pair of ``surface``.
    """
    geometry = surface.geometry
    if not 0 <= slot < geometry.num_slots:
        raise InvalidMotionError(
            f"Slot {slot} is outside a surface of {geometry.num_slots} slots"
        )
    right_slot = geometry.next_slot(slot)
    in_right, in_left = surface.slots[slot], surface.slots[right_slot]
    if in_right.direction != Direction.R or in_left.direction != Direction.L:
        raise InvalidMotionError(
            f"Slot {slot} does not hold an RL pair on surface {surface.pattern_string}"
        )

    out_left, out_right = in_left.continuation(), in_right.continuation()
    slots = list(surface.slots)
    slots[slot], slots[right_slot] = out_left, out_right
    vertex = dag.add_vertex(
        in_links=(in_right, in_left),
        out_links=(out_left, out_right),
        slot_pair=(slot, right_slot),
    )
    return Surface(geometry, tuple(slots)), vertex


def build_dag(
    geometry: LatticeGeometry, motions: Iterable[int]
) -> Tuple[Surface, CausalDag, NaturalLabeling]:
    r"""
    Replays a sequence of motion slots from the initial surface.

    Returns
    -------
    Tuple[Surface, CausalDag, NaturalLabeling]
        Final surface, the dag, and the crossed vertices in crossing order.
    """
    surface = initial_surface(geometry)
    dag = CausalDag(geometry)
    for slot in motions:
        surface, _ = apply_motion(surface, slot, dag)
    return surface, dag, tuple(dag.vertices)


def random_motions(
    geometry: LatticeGeometry, steps: int, generator: torch.Generator
) -> List[int]:
    r"""
    Draws a motion sequence choosing uniformly among the RL pairs at each step.
    """
    surface = initial_surface(geometry)
    dag = CausalDag(geometry)
    motions = []
    for _ in range(steps):
        pairs = rl_pairs(surface)
        slot = pairs[int(torch.randint(len(pairs), (1,), generator=generator))]
        surface, _ = apply_motion(surface, slot, dag)
        motions.append(slot)
    return motions


def is_spacelike(dag: CausalDag, u: Vertex, v: Vertex) -> bool:
    r"""
    True iff neither vertex is in the causal past of the other.

    A vertex is never spacelike to itself.
    """
    if u == v:
        dag.past(u)
        return False
    return not dag.precedes(u, v) and not dag.precedes(v, u)


def causal_past(dag: CausalDag, vertices: Iterable[Vertex]) -> FrozenSet[Vertex]:
    r"""
    Returns every vertex strictly preceding some vertex of ``vertices``,
    excluding ``vertices`` themselves.
    """
    vertices = frozenset(vertices)
    past: Set[Vertex] = set()
    for vertex in vertices:
        past |= dag.past(vertex)
    return frozenset(past - vertices)


def make_stem(dag: CausalDag, vertices: Iterable[Vertex]) -> PartialStem:
    r"""
    Wraps ``vertices`` as a :class:`PartialStem`.

    Raises
    ------
    ValueError
        If the set does not contain its own causal past.
    """
    vertices = frozenset(vertices)
    missing = causal_past(dag, vertices)
    if missing:
        raise ValueError(
            f"Vertex set is not past closed, missing {sorted(map(str, missing))}"
        )
    return PartialStem(vertices)


def stem_closure(dag: CausalDag, vertices: Iterable[Vertex]) -> PartialStem:
    r"""
    Returns the smallest partial stem containing ``vertices``.
    """
    vertices = frozenset(vertices)
    return PartialStem(vertices | causal_past(dag, vertices))


def vertex_times(dag: CausalDag) -> Dict[Vertex, int]:
    r"""
    Length of the longest causal chain ending at each vertex; vertices resting
    on the initial surface have time 0.
    """
    times: Dict[Vertex, int] = {}
    for v in dag.vertices:
        predecessors = dag.direct_predecessors[v]
        times[v] = 1 + max((times[u] for u in predecessors), default=-1)
    return times


def vertex_time(dag: CausalDag, vertex: Vertex) -> int:
    if vertex not in dag:
        raise UnknownVertexError(f"Vertex {vertex} does not belong to this dag")
    return vertex_times(dag)[vertex]


def _direct_predecessors_within(
    labeling: Sequence[Vertex], dag: Optional[CausalDag]
) -> Dict[Vertex, Set[Vertex]]:
    members = set(labeling)
    if dag is not None:
        return {v: set(dag.past(v)) & members for v in labeling}
    producers = {link: v for v in labeling for link in v.out_links}
    return {
        v: {producers[link] for link in v.in_links if link in producers}
        for v in labeling
    }


def is_natural_labeling(
    labeling: Sequence[Vertex], dag: Optional[CausalDag] = None
) -> bool:
    r"""
    True iff no vertex of ``labeling`` appears before one of its predecessors.

    Without a dag the predecessors are read off the link identities, which is
    exact for partial stems.
    """
    if len(set(labeling)) != len(labeling):
        return False
    predecessors = _direct_predecessors_within(labeling, dag)
    seen: Set[Vertex] = set()
    for vertex in labeling:
        if not predecessors[vertex] <= seen:
            return False
        seen.add(vertex)
    return True


def check_natural_labeling(
    labeling: Sequence[Vertex], dag: Optional[CausalDag] = None
) -> None:
    r"""
    Raises :class:`NotNaturalLabelingError` unless ``labeling`` is natural.
    """
    if not is_natural_labeling(labeling, dag):
        raise NotNaturalLabelingError(
            f"Sequence {[str(v) for v in labeling]} is not a natural labeling"
        )


def linear_extensions(
    stem: PartialStem,
    dag: CausalDag,
    max_size: int = MAX_LINEAR_EXTENSION_SIZE,
) -> Iterator[NaturalLabeling]:
    r"""
    Enumerates every natural labeling of ``stem``, each exactly once.

    Works by recursive removal of minimal elements, visited in creation
    order so the enumeration order is deterministic.

    Raises
    ------
    GuardrailExceededError
        If the stem has more than ``max_size`` vertices.
    """
    if len(stem) > max_size:
        raise GuardrailExceededError("linear extension stem", len(stem), max_size)

    ordered = stem.sorted()
    predecessors = {v: set(dag.past(v)) & stem.vertices for v in ordered}
    prefix: List[Vertex] = []
    placed: Set[Vertex] = set()

    def extend() -> Iterator[NaturalLabeling]:
        if len(prefix) == len(ordered):
            yield tuple(prefix)
            return
        for vertex in ordered:
            if vertex not in placed and predecessors[vertex] <= placed:
                prefix.append(vertex)
                placed.add(vertex)
                yield from extend()
                placed.remove(vertex)
                prefix.pop()

    yield from extend()


def ordered_labeling(dag: CausalDag, *blocks: Iterable[Vertex]) -> NaturalLabeling:
    r"""
    Concatenates ``blocks`` (each sorted in creation order), skipping vertices
    already listed.

    The result is natural whenever every union of leading blocks is past closed.
    """
    labeling: List[Vertex] = []
    seen: Set[Vertex] = set()
    for block in blocks:
        for vertex in sorted(set(block) - seen, key=lambda v: v.ordinal):
            labeling.append(vertex)
            seen.add(vertex)
    check_natural_labeling(labeling, dag)
    return tuple(labeling)
