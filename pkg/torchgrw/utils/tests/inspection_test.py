#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved

import unittest

from torchgrw.errors import GRWLatticeError
from torchgrw.utils.inspection import Inspector


def fields(target):
    yield from target.items()


def explode(value):
    if value == "boom":
        raise GRWLatticeError("boom")
    return True


class inspection_test(unittest.TestCase):
    def test_whole_target(self):
        inspector = Inspector("positive", lambda x: x > 0)
        self.assertTrue(inspector.validate(3))
        self.assertFalse(inspector.validate(-3))
        self.assertEqual(inspector.violators, ["config"])

    def test_named_items(self):
        inspector = Inspector("probability", lambda v: 0 <= v <= 1, items=fields)
        self.assertFalse(inspector.validate({"x": 0.5, "p": 2.0, "q": -1}))
        self.assertEqual(inspector.violators, ["p", "q"])

    def test_violators_accumulate(self):
        inspector = Inspector("positive", lambda x: x > 0)
        inspector.validate(-1)
        inspector.validate(-2)
        self.assertEqual(len(inspector.violators), 2)

    def test_raising_predicate(self):
        inspector = Inspector("explodes", explode, items=fields)
        self.assertFalse(inspector.validate({"a": "fine", "b": "boom"}))
        self.assertEqual(len(inspector.violators), 1)
        self.assertTrue(inspector.violators[0].startswith("b (GRWLatticeError"))


if __name__ == "__main__":
    unittest.main()
