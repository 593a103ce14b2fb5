#!/usr/bin/env python

"""Tests for the qdcformer command line."""


import contextlib
import io
import json
import os
import tempfile
import unittest
from unittest import mock

import numpy as np
from numpy.testing import assert_array_equal

from qdcformer import cli
from qdcformer.autodiff import engine as ad
from qdcformer.json import ckpt_json_handler as ckpt_json
from qdcformer.json import keys
from qdcformer.train import trainer
from qdcformer.train.trainer import metrics_columns
from qdcformer.utils import tools


config_values = {"K": 2, "d": 4, "N": 1, "conv_window": 3, "batch_size": 4,
    "total_steps": 2, "policy_lr": 1e-3, "critic_lr": 1e-3, "gamma": 0.9,
    "polyak_tau": 0.05, "eta": 1.0, "rtg_scale": 1.0, "candidate_count": 3,
    "candidate_max_multiplier": 1.2, "seed": 0, "eval_every": 1, "env": "chain5"}


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.main(list(argv))
    return code, out.getvalue(), err.getvalue()


class TestCommandLine(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.dir = self.tmpdir.name
        self.data = os.path.join(self.dir, "data.jsonl")
        self.config = os.path.join(self.dir, "config.json")
        self.write_config(critic_hidden=8, eval_episodes=1)

    def tearDown(self):
        self.tmpdir.cleanup()

    def write_config(self, drop=None, **extra):
        values = dict(config_values, **extra)
        if drop:
            del values[drop]
        with open(self.config, "w") as f:
            json.dump(values, f)

    def gen_data(self, out=None, seed="0"):
        return run("gen-data", "--env", "chain5", "--policy", "noisy_expert",
            "--episodes", "10", "--seed", seed, "--out", out or self.data)

    def train(self, *extra):
        return run("train", "--config", self.config, "--data", self.data,
            "--out", os.path.join(self.dir, "run"), *extra)

    def test_gen_data(self):
        code, out, _ = self.gen_data()
        self.assertEqual(code, 0)
        self.assertIn("10 episodes", out)
        with open(self.data) as f:
            self.assertEqual(len(f.read().splitlines()), 10)
        other = os.path.join(self.dir, "again.jsonl")
        self.gen_data(other)
        with open(self.data, "rb") as a, open(other, "rb") as b:
            self.assertEqual(a.read(), b.read())

    def test_missing_config_key(self):
        self.gen_data()
        self.write_config(drop="gamma")
        code, _, err = self.train()
        self.assertEqual(code, 1)
        self.assertIn("gamma", err)

    def test_unknown_flag(self):
        code, _, err = run("train", "--bogus")
        self.assertEqual(code, 1)
        self.assertTrue(err)
        self.assertEqual(run("--help-me")[0], 1)

    def test_missing_dataset(self):
        code, _, err = self.train()
        self.assertEqual(code, 1)
        self.assertIn("qdcformer train", err)

    def test_zero_steps(self):
        self.gen_data()
        code, _, _ = self.train("--total-steps", "0")
        self.assertEqual(code, 0)
        with open(os.path.join(self.dir, "run", "metrics.csv")) as f:
            self.assertEqual(f.read().splitlines(), [",".join(metrics_columns)])

    def test_eta_override(self):
        self.gen_data()
        code, _, _ = self.train("--eta", "0")
        self.assertEqual(code, 0)
        metrics = tools.read_dataframe(os.path.join(self.dir, "run", "metrics.csv"))
        self.assertEqual(list(metrics.columns), metrics_columns)
        self.assertEqual(len(metrics), 2)
        assert_array_equal(metrics["alpha"], 0.0)
        config, _, _, _ = ckpt_json.load_checkpoint(
            os.path.join(self.dir, "run", "checkpoint.json"))
        self.assertEqual(config.eta, 0.0)

    def test_non_finite_loss_exit_code(self):
        self.gen_data()
        nan_loss = lambda pred, batch: ad.Tensor(np.nan)
        with mock.patch.object(trainer, "masked_action_error", nan_loss):
            with self.assertLogs("qdcformer", level="ERROR"):
                code, _, err = self.train()
        self.assertEqual(code, 2)
        self.assertIn("Non-finite bc_loss", err)
        self.assertFalse(os.path.exists(os.path.join(self.dir, "run", "checkpoint.json")))

    def test_eval_report(self):
        self.gen_data()
        self.train()
        ckpt = os.path.join(self.dir, "run", "checkpoint.json")
        code, out, _ = run("eval", "--ckpt", ckpt, "--episodes", "2", "--candidates", "1")
        self.assertEqual(code, 0)
        with open(os.path.join(self.dir, "run", "eval_report.json")) as f:
            report = json.load(f)
        self.assertEqual(sorted(report), sorted(keys.report_keys))
        self.assertTrue(0.0 <= report["success_rate"] <= 1.0)
        self.assertIn("normalized_score_mean", out)

    def test_eval_dimension_mismatch(self):
        self.gen_data()
        self.train()
        ckpt = os.path.join(self.dir, "run", "checkpoint.json")
        code, _, err = run("eval", "--ckpt", ckpt, "--env", "maze5x5-open")
        self.assertEqual(code, 1)
        self.assertIn("dimensions", err)

    def test_plot_metrics(self):
        self.gen_data()
        self.train()
        csv = os.path.join(self.dir, "run", "metrics.csv")
        svg = os.path.join(self.dir, "bc.svg")
        code, _, _ = run("plot", "--csv", csv, "--out", svg)
        self.assertEqual(code, 0)
        self.assertTrue(os.path.isfile(svg))
        self.assertEqual(run("plot", "--csv", csv, "--column", "nope")[0], 1)

    def test_export_config(self):
        cwd = os.getcwd()
        os.chdir(self.dir)
        try:
            code, out, _ = run("export-config")
            self.assertEqual(code, 0)
            self.assertTrue(os.path.isfile("qdcformer.cfg"))
            for name in ("data", "output", "plots"):
                self.assertTrue(os.path.isdir(name))
            code, out, _ = run("export-config")
            self.assertIn("Not overwriting", out)
        finally:
            os.chdir(cwd)


class TestCheckpoint(unittest.TestCase):

    def test_round_trip_is_bit_exact(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            data = os.path.join(tmpdir, "data.jsonl")
            config = os.path.join(tmpdir, "config.json")
            with open(config, "w") as f:
                json.dump(dict(config_values, critic_hidden=8, eval_episodes=1), f)
            run("gen-data", "--env", "chain5", "--policy", "random", "--episodes",
                "4", "--out", data)
            run("train", "--config", config, "--data", data, "--out", tmpdir)
            path = os.path.join(tmpdir, "checkpoint.json")
            config, policy, ensemble, stats = ckpt_json.load_checkpoint(path)
            again = os.path.join(tmpdir, "again.json")
            ckpt_json.write_checkpoint(again, config, policy, ensemble, stats)
            with open(path) as a, open(again) as b:
                self.assertEqual(json.load(a), json.load(b))
            self.assertEqual(policy.max_timestep, 10)
            self.assertTrue(np.all(stats.state_std > 0))

    def test_wrong_format(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "ckpt.json")
            with open(path, "w") as f:
                json.dump({"format": "something-else"}, f)
            code, _, err = run("eval", "--ckpt", path)
            self.assertEqual(code, 1)
            self.assertIn("missing keys", err)
