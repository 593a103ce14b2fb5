#!/usr/bin/env python

"""Tests for `qdcformer.utils.config` package."""


import importlib
import os
import tempfile
import unittest

import qdcformer.utils.config as cfg


class TestConfig(unittest.TestCase):
    """Tests for `qdcformer.utils.config` package."""

    def test_datadir(self):
        self.assertIsInstance(cfg.datapath, str)
        self.assertIsInstance(cfg.outpath, str)

    def test_numeric_constants(self):
        self.assertEqual(cfg.alpha_floor, 1e-6)
        self.assertEqual(cfg.ln_eps, 1e-5)
        self.assertEqual(cfg.adam_beta1, 0.9)
        self.assertEqual(cfg.q_tie_margin, 1.0)

    def test_train_defaults(self):
        """Every optional TrainConfig key has a default."""
        for key in ("critic_hidden", "critic_updates_per_step", "grad_clip",
                    "q_choice", "max_timestep", "eval_episodes", "reselect"):
            self.assertIn(key, cfg.train_defaults)
        self.assertEqual(cfg.train_defaults["q_choice"], "min")

    def test_ablation_config(self):
        self.assertEqual(cfg.ablation_horizons, [4, 8, 16])
        self.assertEqual(cfg.ablation_config["env"], cfg.ablation_env)

    def test_working_directory_file_wins(self):
        """A partial qdcformer.cfg in the working directory overrides the package file."""
        cwd = os.getcwd()
        with tempfile.TemporaryDirectory() as tmpdir:
            with open(os.path.join(tmpdir, "qdcformer.cfg"), "w") as f:
                f.write("[train]\ngrad_clip = 5.0\n")
            os.chdir(tmpdir)
            try:
                importlib.reload(cfg)
                self.assertEqual(cfg.grad_clip, 5.0)
                self.assertEqual(cfg.train_defaults["grad_clip"], 5.0)
                self.assertEqual(cfg.train_defaults["q_choice"], "min")
            finally:
                os.chdir(cwd)
                importlib.reload(cfg)
        self.assertNotEqual(cfg.grad_clip, 5.0)
