#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
r"""
This module includes utils for inspecting configuration objects using
specified predicates and collecting the parts that violate them.
"""
from typing import Any, Callable, Iterable, List, Optional, Tuple

from ..errors import GRWLatticeError


NamedItems = Callable[[Any], Iterable[Tuple[str, Any]]]


def whole(target: Any) -> Iterable[Tuple[str, Any]]:
    r"""
    Default item selector: the target itself, under the name ``"config"``.
    """
    yield "config", target


class Inspector:
    """
    An inspector of objects given a specific predicate. The predicate is
    checked on every named item the ``items`` selector extracts from the
    inspected object.

    Example
    -------
    >>>  inspector = Inspector('positive', lambda x: x > 0)
    >>>  print(inspector.validate(3))
    True
    """

    def __init__(
        self,
        name: str,
        predicate: Callable[[Any], bool],
        items: Optional[NamedItems] = None,
        message: Optional[str] = None,
    ):
        """
        Parameters
        ----------
        name: str
            String to represent the predicate.

        predicate: Callable[[Any], bool]
            Callable boolean function which tests a hypothesis on an item.

        items: Optional[Callable], optional
            Maps the inspected object to ``(name, item)`` pairs; defaults to
            the object itself.

        message: Optional[str], optional
            Optional value to hold a message about violating this predicate.
        """
        self.name = name
        self.predicate = predicate
        self.items = items if items is not None else whole
        self.message = message
        # Names of the items that violated the predicate. The list is not
        # emptied between calls to ``validate``.
        self.violators: List[str] = []

    def validate(self, target: Any) -> bool:
        """
        Checks if every item of ``target`` satisfies the predicate.

        A predicate that raises counts as violated.

        Parameters
        ----------
        target: Any
            Object on which the predicate must be evaluated and satisfied.

        Returns
        -------
        bool
            Boolean flag indicating if the predicate is satisfied.
        """
        valid = True
        for name, item in self.items(target):
            try:
                ok = bool(self.predicate(item))
            except (ValueError, TypeError, LookupError, GRWLatticeError) as e:
                ok = False
                name = f"{name} ({type(e).__name__}: {e})"
            if not ok:
                valid = False
                self.violators.append(name)
        return valid
