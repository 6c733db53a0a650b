#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates. All Rights Reserved

import os
import tempfile
import unittest

import torch
from torchgrw.collapse_engine import run
from torchgrw.render import (
    CELL_SIZE,
    COLOR_ONE,
    COLOR_UNREALIZED,
    COLOR_ZERO,
    diagram_from_record,
    link_pixel,
    render_image,
    render_text,
    write_image,
)
from torchgrw.run_config import DynamicsKind, InitialStateSpec, RunConfig, StateKind


def echo_config(steps, basis="01"):
    # x = 0 on a basis state realizes the initial values on every vertex
    return RunConfig(
        half_width=1,
        steps=steps,
        x=0.0,
        initial_state=InitialStateSpec(StateKind.BASIS, basis=basis),
    )


class render_test(unittest.TestCase):
    def test_single_vertex_text(self):
        diagram = diagram_from_record(run(echo_config(1)))
        self.assertEqual(render_text(diagram), "0 1\n/ \\\n")

    def test_stacked_vertices(self):
        diagram = diagram_from_record(run(echo_config(2)))
        self.assertEqual(diagram.num_rows, 3)
        marked = [link for link in diagram.links if link.value is not None]
        self.assertEqual(len(marked), 4)
        self.assertEqual(sorted(link.row for link in marked), [1, 1, 2, 2])

    def test_unrealized_links(self):
        config = RunConfig(half_width=2, steps=3, dynamics=DynamicsKind.UNITARY)
        diagram = diagram_from_record(run(config))
        self.assertTrue(all(link.value is None for link in diagram.links))
        self.assertEqual(len(diagram.links), 4 + 2 * 3)

    def test_samols_initial_row(self):
        config = RunConfig(
            half_width=1,
            steps=1,
            dynamics=DynamicsKind.SAMOLS,
            initial_state=InitialStateSpec(StateKind.BASIS, basis="10"),
        )
        diagram = diagram_from_record(run(config))
        initial = sorted((link.col, link.value) for link in diagram.links if link.row == 0)
        self.assertEqual(initial, [(0, 1), (1, 0)])

    def test_image_colors(self):
        diagram = diagram_from_record(run(echo_config(1)))
        image = render_image(diagram)
        self.assertEqual(tuple(image.shape), (3, 2 * CELL_SIZE, 2 * CELL_SIZE))
        expected = {0: COLOR_ZERO, 1: COLOR_ONE, None: COLOR_UNREALIZED}
        for link in diagram.links:
            row, col = link_pixel(diagram, link)
            self.assertTrue(
                torch.allclose(image[:, row, col], torch.tensor(expected[link.value]))
            )

    def test_write_image(self):
        diagram = diagram_from_record(run(echo_config(2)))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "run.png")
            write_image(diagram, path)
            self.assertGreater(os.path.getsize(path), 0)


if __name__ == "__main__":
    unittest.main()
