# -*- coding: utf-8 -*-
"""A test unit for the command line
"""

import contextlib
import io
import os
import tempfile
import unittest

from pyltm.cli import KEY_CLASSIFIER_TAG, _configure, build_parser, main
from pyltm.data.trace import labels_path, load_labels, load_trace, save_trace
from pyltm.models.lifelong import load_model

CONFIG = """
[dimensions]
n_bits = 8
hidden = 8
thought_width = 8
window = 4
allowed_lengths = 4

[stretcher]
density = 0.05

[bank]
n_programs = 2

[growth]
cost_per_program = 1e6
plateau_steps = 2
max_plateau_steps = 4
trial_steps = 2
max_programs = 3

[training]
batch_size = 8
steps = 2

[memory]
buffer_capacity = 64
max_degree = 8
ef_construction = 32
ef_search = 32

[keyclass]
hidden = 8
epochs = 1

[data]
domains = counter,shift_register
episode_length = 40
repeats = 1

[paths]
trace = {folder}/stream.ltmt
model_out = {folder}/model.ltmm
metrics_out = {folder}/metrics.csv
"""


class TestCommandLine(unittest.TestCase):
    def setUp(self) -> None:
        self.folder = tempfile.TemporaryDirectory()
        self.root = self.folder.name
        self.config = os.path.join(self.root, "desk.ini")
        with open(self.config, "w", encoding="utf-8") as file:
            file.write(CONFIG.format(folder=self.root))

    def path(self, name):
        return os.path.join(self.root, name)

    def run_cli(self, *argv):
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            code = main(list(argv))
        return code, out.getvalue()

    def test_parser(self):
        args = build_parser().parse_args(["predict", "--query", "q.ltmt", "--k", "3", "-vv"])
        assert (args.command, args.k, args.mode, args.verbose) == ("predict", 3, "average", 2)
        with contextlib.redirect_stderr(io.StringIO()), self.assertRaises(SystemExit):
            build_parser().parse_args(["recall"])

    def test_gen(self):
        assert self.run_cli("gen", "--config", self.config)[0] == 0
        frames = load_trace(self.path("stream.ltmt"))
        assert frames.shape == (80, 8)
        labels = load_labels(labels_path(self.path("stream.ltmt")))
        assert labels[:40] == ["counter"] * 40 and labels[40:] == ["shift_register"] * 40

    def test_pipeline(self):
        assert self.run_cli("gen", "--config", self.config)[0] == 0
        assert self.run_cli("train", "--config", self.config)[0] == 0
        learner = load_model(self.path("model.ltmm"))
        assert KEY_CLASSIFIER_TAG in learner.sections_
        assert learner.memory.count() == 20 + 18 + 2
        with open(self.path("metrics.csv"), encoding="utf-8") as file:
            assert len(file.read().splitlines()) == 3
        assert os.path.exists(self.path("metrics.csv.usage.csv"))

        save_trace(load_trace(self.path("stream.ltmt"))[:8], self.path("query.ltmt"))
        code, _ = self.run_cli("recall", "--config", self.config, "--query", self.path("query.ltmt"),
                               "--k", "2", "--out", self.path("recall.ltmt"))
        assert code == 0
        assert load_trace(self.path("recall.ltmt")).shape == (16, 8)
        code, _ = self.run_cli("predict", "--config", self.config, "--query", self.path("query.ltmt"),
                               "--mode", "multi", "--k", "2", "--out", self.path("predict.ltmt"))
        assert code == 0
        assert load_trace(self.path("predict.ltmt")).shape == (16, 8)

        code, text = self.run_cli("stats", "--config", self.config)
        assert code == 0
        assert "programs: 2" in text
        assert "key classifier: yes" in text
        assert "modal mass counter" in text

        code, text = self.run_cli("grow", "--config", self.config)
        assert code == 0
        assert "accepted programs: none" in text
        assert KEY_CLASSIFIER_TAG in load_model(self.path("model.ltmm")).sections_

    def test_errors(self):
        stderr = io.StringIO()
        with contextlib.redirect_stderr(stderr):
            code = main(["recall", "--config", self.config, "--query", self.path("missing.ltmt")])
        assert code == 1
        assert stderr.getvalue().startswith("error:")
        with contextlib.redirect_stderr(io.StringIO()):
            assert main(["train"]) == 1

    def test_seed_override(self):
        args = build_parser().parse_args(["train", "--config", self.config, "--seed", "5", "--trace", "t.ltmt"])
        config = _configure(args)
        assert config.seed == 5
        assert config.paths.trace == "t.ltmt"
        assert config.dimensions.window == 4

    def tearDown(self) -> None:
        self.folder.cleanup()


if __name__ == "__main__":
    unittest.main()
