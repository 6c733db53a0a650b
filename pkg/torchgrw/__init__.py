#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved

from . import utils
from .collapse_engine import CollapseEngine, RunRecord, batch_run, replay, run
from .run_config import RunConfig


__all__ = ["CollapseEngine", "RunConfig", "RunRecord", "batch_run", "replay", "run", "utils"]
