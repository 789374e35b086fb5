# -*- coding: utf-8 -*-
"""A test unit for experiment configuration
"""

import os
import tempfile
import unittest

from pyltm.config import ExperimentConfig, apply_overrides, dump_config, load_config


class TestConfig(unittest.TestCase):
    def setUp(self) -> None:
        self.folder = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.folder.name, "desk.ini")

    def write(self, text):
        with open(self.path, "w", encoding="utf-8") as file:
            file.write(text)
        return self.path

    def test_defaults(self):
        config = load_config()
        assert config.dimensions.width == 32
        assert config.param_count == 6816
        assert config.stretcher_seed == 0
        assert config.data.domain_names == ("counter", "shift_register", "periodic")

    def test_file(self):
        config = load_config(self.write("[experiment]\nseed = 9\n\n[dimensions]\nwindow = 4\n"
                                        "allowed_lengths = 3, 4\n\n[growth]\nonline = yes\n\n"
                                        "[stretcher]\nseed = 2\n"))
        assert config.seed == 9
        assert config.dimensions.allowed_lengths == (3, 4)
        assert config.growth.online is True
        assert config.stretcher_seed == 2

    def test_overrides(self):
        config = load_config(None, {"training": {"steps": "7"}, "paths": {"trace": "a.ltmt"}})
        assert config.training.steps == 7
        assert config.paths.trace == "a.ltmt"
        for bad in ({"nowhere": {"a": "1"}}, {"training": {"speed": "1"}}, {"experiment": {"name": "x"}},
                    {"growth": {"online": "maybe"}}, {"training": {"steps": "many"}}):
            with self.assertRaises(ValueError):
                apply_overrides(ExperimentConfig(), bad)

    def test_validation(self):
        for bad in ({"dimensions": {"window": "5"}},
                    {"dimensions": {"thought_width": "65"}},
                    {"dimensions": {"allowed_lengths": "0, 7"}},
                    {"stretcher": {"density": "0"}},
                    {"training": {"replay_ratio": "1.5"}},
                    {"training": {"objective": "compress"}},
                    {"growth": {"max_programs": "2"}},
                    {"memory": {"buffer_capacity": "3"}},
                    {"data": {"domains": ","}}):
            with self.assertRaises(ValueError):
                load_config(None, bad)

    def test_dump_round_trip(self):
        config = load_config(None, {"dimensions": {"allowed_lengths": "5, 7"}, "training": {"replay_ratio": "0.1"}})
        copy = load_config(self.write(dump_config(config)))
        assert copy == config

    def tearDown(self) -> None:
        self.folder.cleanup()


if __name__ == "__main__":
    unittest.main()
