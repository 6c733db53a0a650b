#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved
r"""
Run records on disk.

A record file is a JSON document

.. code-block:: json

    {"digest": "sha256:...", "record": {...}, "schema_version": 1}

where ``record`` holds the config echo, the generator id, the motions, the
events and optionally the final amplitudes as ``[index, re, im]`` rows. The
digest is taken over the canonical form of ``record`` (sorted keys, no
whitespace). Floats are written with the shortest representation that reads
back to the same double, so ``parse_record(serialize_record(r)) == r``.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Union

from .collapse_engine import Event, EventStatus, RunRecord
from .errors import GRWLatticeError
from .quantum import VertexOutcome
from .run_config import config_from_dict, config_to_dict


SCHEMA_VERSION = 1


class RecordCorruptError(GRWLatticeError):
    r"""
    Raised when a record file cannot be parsed, its digest does not match, or
    the record breaks its own invariants.
    """

    pass


def _canonical_bytes(body: Dict[str, Any]) -> bytes:
    return json.dumps(body, sort_keys=True, separators=(",", ":"), allow_nan=False).encode(
        "utf8"
    )


def record_digest(body: Dict[str, Any]) -> str:
    return "sha256:" + hashlib.sha256(_canonical_bytes(body)).hexdigest()


def _event_to_dict(event: Event) -> Dict[str, Any]:
    return {
        "ordinal": event.ordinal,
        "slot_pair": list(event.slot_pair),
        "status": event.status.value,
        "outcome": None if event.outcome is None else str(event.outcome),
        "norm_l": event.norm_l,
        "norm_r": event.norm_r,
    }


def _event_from_dict(data: Dict[str, Any]) -> Event:
    outcome = data["outcome"]
    if outcome is not None and (len(outcome) != 2 or set(outcome) - {"0", "1"}):
        raise ValueError(f"Bad outcome {outcome!r}")
    return Event(
        ordinal=int(data["ordinal"]),
        slot_pair=tuple(int(s) for s in data["slot_pair"]),
        status=EventStatus(data["status"]),
        outcome=None if outcome is None else VertexOutcome(int(outcome[0]), int(outcome[1])),
        norm_l=data["norm_l"],
        norm_r=data["norm_r"],
    )


def record_to_dict(record: RunRecord) -> Dict[str, Any]:
    return {
        "config": config_to_dict(record.config),
        "generator": record.generator,
        "motions": list(record.motions),
        "samols_initial": None
        if record.samols_initial is None
        else list(record.samols_initial),
        "events": [_event_to_dict(e) for e in record.events],
        "final_state": None
        if record.final_state is None
        else [list(row) for row in record.final_state],
    }


def record_from_dict(data: Dict[str, Any]) -> RunRecord:
    samols_initial = data["samols_initial"]
    final_state = data["final_state"]
    return RunRecord(
        config=config_from_dict(data["config"]),
        generator=data["generator"],
        events=tuple(_event_from_dict(e) for e in data["events"]),
        motions=tuple(int(m) for m in data["motions"]),
        samols_initial=None
        if samols_initial is None
        else tuple(int(b) for b in samols_initial),
        final_state=None
        if final_state is None
        else tuple((int(i), float(re), float(im)) for i, re, im in final_state),
    )


def serialize_record(record: RunRecord) -> str:
    r"""
    Renders ``record`` as a record file. Equal records give byte-identical
    text.
    """
    body = record_to_dict(record)
    document = {
        "schema_version": SCHEMA_VERSION,
        "digest": record_digest(body),
        "record": body,
    }
    return json.dumps(document, sort_keys=True, indent=2, allow_nan=False) + "\n"


def parse_record(text: str) -> RunRecord:
    r"""
    Parses and validates a record file.

    Raises
    ------
    RecordCorruptError
        If the text is not a record file of a supported schema version, the
        digest does not match the content, or the record is inconsistent.
    """
    try:
        document = json.loads(text)
        version = document["schema_version"]
        body = document["record"]
        digest = document["digest"]
    except (ValueError, KeyError, TypeError) as e:
        raise RecordCorruptError(f"Not a record file: {e}") from e
    if version != SCHEMA_VERSION:
        raise RecordCorruptError(
            f"Unsupported record schema version {version}, expected {SCHEMA_VERSION}"
        )
    if record_digest(body) != digest:
        raise RecordCorruptError("Record digest does not match its content")
    try:
        record = record_from_dict(body)
        record.validate()
    except (ValueError, KeyError, TypeError, GRWLatticeError) as e:
        raise RecordCorruptError(f"Inconsistent record: {e}") from e
    return record


def write_record(record: RunRecord, path: Union[str, Path]) -> None:
    Path(path).write_text(serialize_record(record), encoding="utf8")


def read_record(path: Union[str, Path]) -> RunRecord:
    return parse_record(Path(path).read_text(encoding="utf8"))
