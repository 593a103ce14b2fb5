from . import inference
from ..autodiff import engine as ad
from ..autodiff.optim import Adam, clip_grad_norm
from ..data.trajectory import Dataset, collate, sample_batch
from ..envs import make_env, scoring
from ..model.conv_policy import PolicyModel, masked_action_error
from ..model.q_module import (QEnsemble, batch_bellman_targets, critic_loss,
    polyak_update)
from ..utils import config as cfg
from ..utils import error_check
from dataclasses import asdict, dataclass, fields
import datetime
import json
import logging
import pandas as pd
import numpy as np

__author__ = "qdcformer developers"

logger = logging.getLogger("qdcformer")


""" About trainer.py

    The combined training loop. Each step samples one batch of
    windows and runs

        1. critic update(s) on the n-step Bellman targets
        2. policy update on  L = L_DC - alpha * mean Q(s_i, pi(tau)_i)
           with alpha = eta / mean |Q(s, a)| over the logged pairs
        3. Polyak update of both target critics and the target policy

    Metrics are recorded every eval_every steps together with greedy
    evaluation rollouts.

"""

required_keys = ("K", "d", "N", "conv_window", "batch_size", "total_steps",
    "policy_lr", "critic_lr", "gamma", "polyak_tau", "eta", "rtg_scale",
    "candidate_count", "candidate_max_multiplier", "seed", "eval_every", "env")

metrics_columns = ["step", "bc_loss", "q_term", "alpha", "critic_loss",
    "eval_return_mean", "eval_return_std"]


@dataclass
class TrainConfig:
    K: int
    d: int
    N: int
    conv_window: int
    batch_size: int
    total_steps: int
    policy_lr: float
    critic_lr: float
    gamma: float
    polyak_tau: float
    eta: float
    rtg_scale: float
    candidate_count: int
    candidate_max_multiplier: float
    seed: int
    eval_every: int
    env: str
    critic_hidden: int = 64
    critic_updates_per_step: int = 1
    grad_clip: float = 1.0
    q_choice: str = "min"
    max_timestep: int = 0
    eval_episodes: int = 10
    reselect: str = "step"

    @classmethod
    def from_dict(cls, values):
        """ Exactly the required keys, plus any optional key; optional
            keys missing here take the [train] defaults of the config
            files.

        """
        known = {f.name for f in fields(cls)}
        unknown = [k for k in values if k not in known]
        if unknown:
            raise error_check.ConfigError(f"Unknown TrainConfig keys: {unknown}.")
        missing = [k for k in required_keys if k not in values]
        if missing:
            raise error_check.ConfigError(f"TrainConfig is missing keys: {missing}.")
        merged = {k: v for k, v in cfg.train_defaults.items() if k in known}
        merged.update(values)
        config = cls(**merged)
        error_check.error_check_config(config)
        return config

    @classmethod
    def from_json(cls, path):
        with open(path, "r") as infile:
            try:
                values = json.load(infile)
            except json.JSONDecodeError as e:
                raise error_check.ConfigError(f"{path}: could not parse the "
                    f"training config ({e.msg}).")
        if not isinstance(values, dict):
            raise error_check.ConfigError(f"{path}: the training config must be "
                "a JSON object.")
        return cls.from_dict(values)

    def to_dict(self):
        return asdict(self)

    def replace(self, **changes):
        values = self.to_dict()
        values.update(changes)
        return TrainConfig.from_dict(values)


@dataclass
class TrainMetrics:
    """ One logged step. The eval columns are NaN when the run was
        trained with evaluate=False; every other value is finite.

    """
    step: int
    bc_loss: float
    q_term: float
    alpha: float
    critic_loss: float
    eval_return_mean: float
    eval_return_std: float


@dataclass
class TrainResult:
    config: TrainConfig
    policy: PolicyModel
    ensemble: QEnsemble
    stats: object
    metrics: pd.DataFrame
    eval_report: dict = None


def compute_alpha(ensemble, batch, eta, q_choice="min"):
    """ eta / mean |Q| over the valid logged (s, a) pairs, with the
        denominator floored at alpha_floor.

        INPUTS:

        :ensemble: (QEnsemble)
        :batch: (WindowBatch)
        :eta: (float) regularization strength

        OUTPUTS:

        :alpha: (float)

    """
    if len(batch) == 0:
        raise error_check.DatasetError("compute_alpha: empty batch.")
    if eta == 0:
        return 0.0
    with ad.no_grad():
        q = ensemble.estimate(batch.states, batch.actions, choice=q_choice).data
    mean_abs = float(np.abs(q[batch.mask]).mean())
    return float(eta) / max(mean_abs, cfg.alpha_floor)


def policy_objective(model, ensemble, batch, eta, q_choice="min"):
    """ (loss, bc_loss, q_term, alpha) with q_term the mean Q of the
        predicted actions over valid positions. The critics enter frozen.

    """
    pred = model.forward(batch)
    bc = masked_action_error(pred, batch)
    if eta == 0:
        return bc, bc.item(), 0.0, 0.0
    alpha = compute_alpha(ensemble, batch, eta, q_choice)
    q = ensemble.estimate(batch.states, pred, choice=q_choice, frozen=True)
    weights = batch.mask / batch.mask.sum()
    q_term = ad.sum(ad.mul(q, weights))
    loss = bc - ad.scale(q_term, alpha)
    return loss, bc.item(), q_term.item(), alpha


def policy_loss(model, ensemble, batch, eta, q_choice="min"):
    """ bc_loss(batch) - alpha * mean over valid positions of
        Q(s_i, pi(tau)_i). Reduces to bc_loss exactly when eta is 0.

    """
    if len(batch) == 0:
        raise error_check.DatasetError("policy_loss: empty batch.")
    return policy_objective(model, ensemble, batch, eta, q_choice)[0]


def build_models(config, state_dim, action_dim, max_timestep, policy_rng, critic_rng):
    policy = PolicyModel(state_dim, action_dim, config.K, config.d, config.N,
        config.conv_window, max_timestep, config.rtg_scale, policy_rng)
    ensemble = QEnsemble.create(policy, config.critic_hidden, config.gamma,
        config.polyak_tau, critic_rng)
    return policy, ensemble


def _update(optimizer, loss, grad_clip):
    optimizer.zero_grad()
    ad.backward(loss)
    clip_grad_norm(optimizer.params, grad_clip)
    optimizer.step()


def train(config, trajectories, stats=None, env=None, evaluate=True, callback=None):
    """ Train QDC on an offline dataset.

        INPUTS:

        :config: (TrainConfig)
        :trajectories: (list of Trajectory)
        :stats: (DatasetStats) computed from trajectories if None
        :env: environment used for evaluation rollouts; built from
            config.env if None
        :evaluate: (bool) run greedy evaluation rollouts at logged steps;
            without them the eval columns of the metrics are NaN
        :callback: called as callback(step, policy, ensemble) after every
            logged step

        OUTPUTS:

        :result: (TrainResult) with one metrics row per logged step

    """
    error_check.error_check_config(config)
    dataset = Dataset(trajectories, stats)
    env = make_env(config.env) if env is None else env
    error_check.error_check_dims("dataset vs environment (state_dim, action_dim)",
        (env.state_dim, env.action_dim), (dataset.state_dim, dataset.action_dim))

    max_timestep = config.max_timestep
    if max_timestep == 0:
        longest = max(len(traj) for traj in dataset.trajectories)
        max_timestep = max(env.horizon, longest, 1)

    seeds = np.random.SeedSequence(config.seed).spawn(5)
    policy_rng, critic_rng, sample_rng, extra_rng, eval_rng = \
        [np.random.default_rng(s) for s in seeds]

    policy, ensemble = build_models(config, dataset.state_dim, dataset.action_dim,
        max_timestep, policy_rng, critic_rng)
    policy_opt = Adam(policy.parameters().values(), config.policy_lr)
    critic_opt = Adam(ensemble.parameters().values(), config.critic_lr)

    eval_seed = int(eval_rng.integers(2**31))
    random_return = None
    if evaluate and config.total_steps > 0:
        random_return = scoring.random_policy_return(env,
            cfg.random_baseline_episodes, eval_seed)

    logger.info("TIMESTAMP: Starting training on %s for %d steps %s", env.name,
        config.total_steps, datetime.datetime.now())

    rows = []
    report = None
    for step in range(1, config.total_steps + 1):
        batch = collate(sample_batch(dataset, config.batch_size, config.K, sample_rng))

        critic_value = 0.0
        for u in range(config.critic_updates_per_step):
            critic_batch = batch if u == 0 else \
                collate(sample_batch(dataset, config.batch_size, config.K, extra_rng))
            targets = batch_bellman_targets(ensemble, critic_batch)
            if not targets[1].any():
                continue
            loss = critic_loss(ensemble, critic_batch, targets)
            critic_value = loss.item()
            error_check.check_finite(critic_value, step, "critic_loss")
            _update(critic_opt, loss, config.grad_clip)

        loss, bc_value, q_value, alpha = policy_objective(policy, ensemble, batch,
            config.eta, config.q_choice)
        error_check.check_finite(bc_value, step, "bc_loss")
        error_check.check_finite(q_value, step, "q_term")
        error_check.check_finite(loss.item(), step, "policy_loss")
        _update(policy_opt, loss, config.grad_clip)

        polyak_update(ensemble)

        if step % config.eval_every == 0 or step == config.total_steps:
            mean_return, std_return = np.nan, np.nan
            if evaluate:
                report = inference.evaluate_policy(policy, ensemble, env,
                    dataset.stats, config, config.eval_episodes, eval_seed,
                    random_return=random_return)
                mean_return = report["raw_return_mean"]
                std_return = report["raw_return_std"]
            rows.append(TrainMetrics(step, bc_value, q_value, alpha, critic_value,
                mean_return, std_return))
            logger.info("TIMESTAMP: step %d bc_loss %.5g q_term %.5g alpha %.5g "
                "critic_loss %.5g eval_return %.5g %s", step, bc_value, q_value,
                alpha, critic_value, mean_return, datetime.datetime.now())
            if callback is not None:
                callback(step, policy, ensemble)

    metrics = pd.DataFrame([asdict(row) for row in rows], columns=metrics_columns)
    return TrainResult(config=config, policy=policy, ensemble=ensemble,
        stats=dataset.stats, metrics=metrics, eval_report=report)
