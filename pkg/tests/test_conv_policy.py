#!/usr/bin/env python

"""Tests for `qdcformer.model.conv_policy`."""


import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from qdcformer.autodiff import engine as ad
from qdcformer.data.trajectory import ContextWindow, collate
from qdcformer.model.conv_policy import PolicyModel, bc_loss
from qdcformer.utils import error_check


def make_model(rng, state_dim=2, action_dim=2, K=3, d=4, N=1, conv_window=6,
    max_timestep=20):
    return PolicyModel(state_dim, action_dim, K, d, N, conv_window, max_timestep,
        rtg_scale=10.0, rng=rng)


def make_window(rng, K, state_dim=2, action_dim=2, valid_len=None, start=0):
    valid_len = K if valid_len is None else valid_len
    pad = K - valid_len
    rtgs, states = np.zeros(K), np.zeros((K, state_dim))
    actions, timesteps = np.zeros((K, action_dim)), np.zeros(K, dtype=np.int64)
    rtgs[pad:] = rng.uniform(0, 10, valid_len)
    states[pad:] = rng.standard_normal((valid_len, state_dim))
    actions[pad:] = rng.uniform(-1, 1, (valid_len, action_dim))
    timesteps[pad:] = np.arange(start, start + valid_len)
    return ContextWindow(rtgs=rtgs, states=states, actions=actions,
        rewards=np.zeros(K), timesteps=timesteps, valid_len=valid_len)


def zero_params(params, prefix):
    for name, tensor in params.items():
        if name.startswith(prefix) or prefix in name:
            tensor.data = np.zeros_like(tensor.data)


class TestEmbedding(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(0)

    def test_sequence_length(self):
        for K, rows in ((4, 11), (1, 2)):
            model = make_model(self.rng, K=K)
            tokens = model.interleave_embed(make_window(self.rng, K))
            self.assertEqual(tokens.shape, [rows, 4])

    def test_zero_embeddings_leave_timestep_embedding(self):
        model = make_model(self.rng, K=3)
        for name in ("emb_rtg", "emb_state", "emb_action"):
            zero_params(model.parameters(), name)
        window = make_window(self.rng, 3, start=5)
        window.rtgs[:], window.states[:], window.actions[:] = 0.0, 0.0, 0.0
        tokens = model.interleave_embed(window).data
        table = model.embeddings["emb_timestep.table"].data
        expected = np.repeat(table[5:8], 3, axis=0)[:8]
        assert_array_equal(tokens, expected)

    def test_padded_slots_are_zero_tokens(self):
        model = make_model(self.rng, K=4)
        tokens = model.interleave_embed(make_window(self.rng, 4, valid_len=2)).data
        assert_array_equal(tokens[:6], 0.0)
        self.assertTrue(np.all(np.abs(tokens[6:]).sum(axis=1) > 0))

    def test_timesteps_beyond_table_are_clipped(self):
        model = make_model(self.rng, K=2, max_timestep=4)
        window = make_window(self.rng, 2, start=10)
        self.assertEqual(model.forward(window).shape, [2, 2])


class TestForward(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(1)

    def test_actions_in_box(self):
        model = make_model(self.rng, K=3)
        for p in model.head.values():
            p.data = p.data * 100.0
        out = model.predict(make_window(self.rng, 3))
        self.assertEqual(out.shape, (3, 2))
        self.assertTrue(np.all(np.abs(out) <= 1.0))

    def test_last_action_is_not_an_input(self):
        model = make_model(self.rng, K=3, N=2)
        window = make_window(self.rng, 3)
        base = model.predict(window)
        window.actions[-1] = [5.0, -5.0]
        assert_array_equal(model.predict(window), base)

    def test_causality(self):
        for case in range(100):
            rng = np.random.default_rng(100 + case)
            K = int(rng.integers(2, 5))
            model = make_model(rng, K=K, N=int(rng.integers(1, 3)),
                conv_window=int(rng.integers(1, 8)))
            window = make_window(rng, K, valid_len=int(rng.integers(1, K + 1)))
            base = model.predict(window)
            i = int(rng.integers(0, K - 1))
            window.rtgs[i + 1:] += rng.standard_normal(K - i - 1)
            window.states[i + 1:] += rng.standard_normal((K - i - 1, 2))
            window.actions[i + 1:] += rng.standard_normal((K - i - 1, 2))
            assert_allclose(model.predict(window)[:i + 1], base[:i + 1],
                rtol=1e-12, atol=1e-12)

    def test_residual_collapse(self):
        model = make_model(self.rng, K=3, N=2)
        params = model.parameters()
        for name in params:
            if ".conv." in name or ".ffn." in name:
                params[name].data = np.zeros_like(params[name].data)
        window = make_window(self.rng, 3)
        tokens = model.interleave_embed(window).data
        expected = np.tanh(tokens[[1, 4, 7]] @ params["head.weight"].data
                           + params["head.bias"].data)
        assert_allclose(model.predict(window), expected, rtol=1e-12, atol=1e-14)

    def test_blocks_preserve_shape(self):
        model = make_model(self.rng, K=4, N=2)
        x = model.interleave_embed(collate([make_window(self.rng, 4)] * 2))
        for block in model.blocks:
            y = block.forward(x)
            self.assertEqual(y.shape, x.shape)
            x = y

    def test_dimension_mismatch(self):
        model = make_model(self.rng, K=3, state_dim=2)
        with self.assertRaises(error_check.DimensionError):
            model.forward(make_window(self.rng, 3, state_dim=3))
        with self.assertRaises(error_check.DimensionError):
            model.forward(make_window(self.rng, 4))

    def test_copy_and_load_params(self):
        model = make_model(self.rng, K=2)
        window = make_window(self.rng, 2)
        clone = make_model(np.random.default_rng(99), K=2)
        clone.load_params(model.to_dict())
        assert_array_equal(clone.predict(window), model.predict(window))
        twin = model.copy()
        self.assertFalse(any(p.requires_grad for p in twin.parameters().values()))
        assert_array_equal(twin.predict(window), model.predict(window))


class TestBCLoss(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(2)

    def test_perfect_prediction(self):
        model = make_model(self.rng, K=3)
        zero_params(model.head, "head")
        window = make_window(self.rng, 3)
        window.actions[:] = 0.0
        self.assertEqual(bc_loss(model, collate([window])).item(), 0.0)

    def test_per_dimension_mean(self):
        model = make_model(self.rng, K=1)
        zero_params(model.head, "head")
        window = make_window(self.rng, 1)
        window.actions[:] = 1.0
        self.assertAlmostEqual(bc_loss(model, collate([window])).item(), 1.0, places=12)

    def test_padding_invariance(self):
        model = make_model(self.rng, K=4)
        window = make_window(self.rng, 4, valid_len=2)
        base = bc_loss(model, collate([window])).item()
        window.states[:2] = 7.0
        window.actions[:2] = -0.5
        window.rtgs[:2] = 3.0
        self.assertAlmostEqual(bc_loss(model, collate([window])).item(), base, places=12)

    def test_non_negative(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            model = make_model(rng, K=3)
            batch = collate([make_window(rng, 3, valid_len=v) for v in (1, 2, 3)])
            self.assertGreaterEqual(bc_loss(model, batch).item(), 0.0)

    def test_gradient_matches_finite_differences(self):
        model = PolicyModel(2, 2, K=2, d=4, N=1, conv_window=3, max_timestep=5,
            rtg_scale=5.0, rng=self.rng)
        batch = collate([make_window(self.rng, 2, valid_len=v) for v in (1, 2, 2)])
        params = model.parameters()
        ad.backward(bc_loss(model, batch))
        for name, p in params.items():
            numeric = ad.numerical_gradient(lambda: bc_loss(model, batch).item(), p)
            assert_allclose(p.grad, numeric, rtol=1e-4, atol=1e-8, err_msg=name)
