#!/usr/bin/env python

"""Tests for `qdcformer.model.q_module`."""


import unittest

import numpy as np
from numpy.testing import assert_allclose

from qdcformer.autodiff import engine as ad
from qdcformer.autodiff.optim import Adam
from qdcformer.data.trajectory import (ContextWindow, DatasetStats, Trajectory,
    collate, sample_context)
from qdcformer.envs.chain import ChainMDP
from qdcformer.model.q_module import (QEnsemble, QNetwork, batch_bellman_targets,
    bellman_targets, critic_loss, polyak_update, q_value)
from qdcformer.utils import error_check


class FixedActionPolicy:
    """Target policy stand-in predicting the same action everywhere."""

    def __init__(self, action):
        self.action = np.asarray(action, dtype=np.float64)

    def predict(self, batch):
        B, K = batch.rtgs.shape
        return np.broadcast_to(self.action, (B, K, len(self.action))).copy()


def set_constant(net, value):
    for tensor in net.params.values():
        tensor.data = np.zeros_like(tensor.data)
    net.params["l3.bias"].data = np.array([float(value)])


def make_ensemble(gamma, seed=0, hidden=8, state_dim=1, action_dim=1, tau=0.005):
    rng = np.random.default_rng(seed)
    q1 = QNetwork(state_dim, action_dim, hidden, rng)
    q2 = QNetwork(state_dim, action_dim, hidden, rng)
    return QEnsemble(q1, q2, FixedActionPolicy(np.zeros(action_dim)), gamma, tau)


def make_window(rewards, terminal=False, valid_len=None, seed=0, state_dim=1,
    action_dim=1):
    K = len(rewards)
    valid_len = K if valid_len is None else valid_len
    pad = K - valid_len
    rng = np.random.default_rng(seed)
    states, actions = np.zeros((K, state_dim)), np.zeros((K, action_dim))
    states[pad:] = rng.standard_normal((valid_len, state_dim))
    actions[pad:] = rng.uniform(-1, 1, (valid_len, action_dim))
    r = np.zeros(K)
    r[pad:] = np.asarray(rewards, dtype=np.float64)[pad:]
    timesteps = np.zeros(K, dtype=np.int64)
    timesteps[pad:] = np.arange(10, 10 + valid_len)
    return ContextWindow(rtgs=np.zeros(K), states=states, actions=actions,
        rewards=r, timesteps=timesteps, valid_len=valid_len, terminal=terminal)


class TestBellmanTargets(unittest.TestCase):

    def test_one_step(self):
        ens = make_ensemble(0.9)
        set_constant(ens.q1_target, 2.0)
        set_constant(ens.q2_target, 5.0)
        targets = bellman_targets(ens, make_window([1.0, 0.0]))
        self.assertEqual(len(targets), 1)
        self.assertEqual(targets[0][0], 10)
        self.assertAlmostEqual(targets[0][1], 2.8, places=12)

    def test_two_steps(self):
        ens = make_ensemble(0.5)
        set_constant(ens.q1_target, 4.0)
        set_constant(ens.q2_target, 4.0)
        targets = dict(bellman_targets(ens, make_window([1.0, 1.0, 7.0])))
        self.assertAlmostEqual(targets[10], 2.5, places=12)
        self.assertAlmostEqual(targets[11], 3.0, places=12)

    def test_terminal_final_step(self):
        ens = make_ensemble(0.9)
        set_constant(ens.q1_target, 100.0)
        set_constant(ens.q2_target, 100.0)
        targets = dict(bellman_targets(ens, make_window([1.0, 5.0], terminal=True)))
        self.assertAlmostEqual(targets[10], 1.0 + 0.9 * 5.0, places=12)
        self.assertAlmostEqual(targets[11], 5.0, places=12)

    def test_short_window_has_no_targets(self):
        ens = make_ensemble(0.9)
        self.assertEqual(bellman_targets(ens, make_window([0.0, 1.0], valid_len=1)), [])
        self.assertEqual(bellman_targets(ens,
            make_window([0.0, 1.0], terminal=True, valid_len=1)), [])

    def test_matches_literal_expansion(self):
        rng = np.random.default_rng(3)
        for case in range(60):
            K = int(rng.integers(2, 5))
            gamma = float(rng.uniform(0.5, 0.99))
            ens = make_ensemble(gamma, seed=case, state_dim=2, action_dim=2)
            ens.policy_target = FixedActionPolicy(rng.uniform(-1, 1, 2))
            valid_len = int(rng.integers(2, K + 1))
            window = make_window(rng.standard_normal(K), terminal=bool(case % 3 == 0),
                valid_len=valid_len, seed=case, state_dim=2, action_dim=2)

            boot = window.rewards[-1] if window.terminal else q_value(ens,
                window.states[-1], ens.policy_target.action, "target_min")
            expected = {}
            for m in range(K - valid_len, K - 1):
                total = sum(gamma**(j - m) * window.rewards[j] for j in range(m, K - 1))
                expected[int(window.timesteps[m])] = total + gamma**(K - 1 - m) * boot
            if window.terminal:
                expected[int(window.timesteps[-1])] = window.rewards[-1]

            got = dict(bellman_targets(ens, window))
            self.assertEqual(sorted(got), sorted(expected))
            for m, value in expected.items():
                self.assertAlmostEqual(got[m], value, delta=1e-12)

    def test_batch_mask_covers_valid_history(self):
        ens = make_ensemble(0.9)
        batch = collate([make_window([1, 2, 3, 4], valid_len=3),
                         make_window([1, 2, 3, 4], terminal=True)])
        _, target_mask = batch_bellman_targets(ens, batch)
        self.assertEqual(target_mask.tolist(), [[False, True, True, False],
                                                [True, True, True, True]])


class TestCriticLoss(unittest.TestCase):

    def setUp(self):
        self.ens = make_ensemble(0.9)
        set_constant(self.ens.q1_target, 2.0)
        set_constant(self.ens.q2_target, 2.0)
        self.window = make_window([1.0, 0.0])

    def test_exact_critics(self):
        set_constant(self.ens.q1, 2.8)
        set_constant(self.ens.q2, 2.8)
        self.assertAlmostEqual(critic_loss(self.ens, self.window).item(), 0.0,
            places=12)

    def test_summed_over_critics(self):
        set_constant(self.ens.q1, 3.8)
        set_constant(self.ens.q2, 2.8)
        self.assertAlmostEqual(critic_loss(self.ens, self.window).item(), 1.0,
            places=12)

    def test_targets_receive_no_gradient(self):
        ad.backward(critic_loss(self.ens, self.window))
        for net in (self.ens.q1_target, self.ens.q2_target):
            for tensor in net.params.values():
                self.assertIsNone(tensor.grad)
        self.assertIsNotNone(self.ens.q1.params["l3.bias"].grad)
        self.assertIsNotNone(self.ens.q2.params["l3.bias"].grad)

    def test_no_pairs(self):
        with self.assertRaises(error_check.UsageError):
            critic_loss(self.ens, make_window([0.0, 1.0], valid_len=1))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        for case in range(5):
            ens = make_ensemble(0.95, seed=case, hidden=5, state_dim=2, action_dim=2)
            batch = collate([make_window(rng.standard_normal(3), seed=10 * case + i,
                valid_len=v, state_dim=2, action_dim=2) for i, v in enumerate((2, 3, 3))])
            targets = batch_bellman_targets(ens, batch)
            ad.backward(critic_loss(ens, batch, targets))
            for name, p in ens.parameters().items():
                numeric = ad.numerical_gradient(
                    lambda: critic_loss(ens, batch, targets).item(), p)
                assert_allclose(p.grad, numeric, rtol=1e-4, atol=1e-7, err_msg=name)

    def test_policy_evaluation_on_chain(self):
        env = ChainMDP(5)
        env.reset()
        states, actions, rewards = [], [], []
        done = False
        while not done:
            states.append(env.state)
            actions.append([1.0])
            _, reward, done = env.step(np.array([1.0]))
            rewards.append(reward)
        traj = Trajectory(states, actions, rewards, env.success)
        stats = DatasetStats.from_trajectories([traj])
        batch = collate([sample_context(traj, t, 2, stats) for t in range(len(traj))])

        gamma = 0.99
        ens = QEnsemble(QNetwork(1, 1, 32, np.random.default_rng(0)),
            QNetwork(1, 1, 32, np.random.default_rng(1)),
            FixedActionPolicy([1.0]), gamma, 0.005)
        opt = Adam(ens.parameters().values(), 3e-4)
        oracle = [gamma**(3 - i) for i in range(4)]

        def max_error():
            return max(abs(q_value(ens, stats.normalize(env.encode(i)), [1.0]) - v)
                       for i, v in enumerate(oracle))

        for step in range(20000):
            opt.zero_grad()
            ad.backward(critic_loss(ens, batch))
            opt.step()
            polyak_update(ens)
            if step % 250 == 0 and max_error() < 0.05:
                break
        self.assertLess(max_error(), 0.05)


class TestPolyak(unittest.TestCase):

    def fill(self, net, value):
        for tensor in net.params.values():
            tensor.data = np.full_like(tensor.data, value)

    def test_small_tau(self):
        ens = make_ensemble(0.9)
        self.fill(ens.q1, 1.0)
        self.fill(ens.q1_target, 0.0)
        polyak_update(ens, 0.005)
        for tensor in ens.q1_target.params.values():
            assert_allclose(tensor.data, 0.005, rtol=0, atol=1e-15)

    def test_two_half_steps(self):
        ens = make_ensemble(0.9)
        self.fill(ens.q2, 1.0)
        self.fill(ens.q2_target, 0.0)
        polyak_update(ens, 0.5)
        polyak_update(ens, 0.5)
        for tensor in ens.q2_target.params.values():
            assert_allclose(tensor.data, 0.75, rtol=0, atol=1e-15)

    def test_tau_one_copies_everything(self):
        from qdcformer.model.conv_policy import PolicyModel
        rng = np.random.default_rng(4)
        policy = PolicyModel(1, 1, 2, 4, 1, 3, 10, 1.0, rng)
        ens = QEnsemble.create(policy, 8, 0.9, 0.005, rng)
        for tensor in policy.parameters().values():
            tensor.data = tensor.data + 1.0
        self.fill(ens.q1, 0.3)
        polyak_update(ens, 1.0)
        online, target = policy.parameters(), ens.policy_target.parameters()
        for name in online:
            assert_allclose(target[name].data, online[name].data, rtol=0, atol=0)
        s, a = np.array([0.2]), np.array([-0.4])
        self.assertEqual(q_value(ens, s, a, "target_min"), q_value(ens, s, a, "min"))

    def test_initial_targets_are_copies(self):
        ens = make_ensemble(0.9)
        for name, tensor in ens.q1.params.items():
            assert_allclose(ens.q1_target.params[name].data, tensor.data, rtol=0, atol=0)
            self.assertFalse(ens.q1_target.params[name].requires_grad)

    def test_bad_tau(self):
        ens = make_ensemble(0.9)
        for tau in (0.0, -0.1, 1.5):
            with self.assertRaises(error_check.ConfigError):
                polyak_update(ens, tau)


class TestQValue(unittest.TestCase):

    def test_min_is_pointwise_lower(self):
        rng = np.random.default_rng(8)
        for seed in range(20):
            ens = make_ensemble(0.9, seed=seed, state_dim=2, action_dim=2)
            s, a = rng.standard_normal(2), rng.uniform(-1, 1, 2)
            low = q_value(ens, s, a, "min")
            self.assertLessEqual(low, q_value(ens, s, a, "q1"))
            self.assertLessEqual(low, q_value(ens, s, a, "q2"))

    def test_identical_critics(self):
        ens = make_ensemble(0.9)
        ens.q2.load_params(ens.q1.to_dict())
        s, a = np.array([0.5]), np.array([0.1])
        self.assertEqual(q_value(ens, s, a, "min"), q_value(ens, s, a, "q1"))

    def test_errors(self):
        ens = make_ensemble(0.9)
        with self.assertRaises(error_check.DimensionError):
            q_value(ens, np.zeros(2), np.zeros(1))
        with self.assertRaises(error_check.ConfigError):
            q_value(ens, np.zeros(1), np.zeros(1), "q3")

    def test_estimate_choices(self):
        ens = make_ensemble(0.9)
        set_constant(ens.q1, 2.0)
        set_constant(ens.q2, -1.0)
        s, a = np.zeros((3, 1)), np.zeros((3, 1))
        assert_allclose(ens.estimate(s, a, "q1").data, [2.0] * 3)
        assert_allclose(ens.estimate(s, a, "q2").data, [-1.0] * 3)
        assert_allclose(ens.estimate(s, a).data, [-1.0] * 3)
