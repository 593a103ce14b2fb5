from ..autodiff import engine as ad
from ..data.trajectory import ContextWindow, collate
from ..envs import scoring
from ..utils import config as cfg
from ..utils import error_check
from collections import deque
from concurrent.futures import ThreadPoolExecutor
import logging
import os
import numpy as np

__author__ = "qdcformer developers"

logger = logging.getLogger("qdcformer")


""" About inference.py

    Deployment-time action selection.

    At every step the policy is conditioned on each candidate RTG in
    turn, the candidate actions are scored with min(Q1, Q2) at the
    current state and the best one is executed. Scores closer to the
    best than the twin critics disagree with each other are ties, and
    ties go to the larger candidate. The realized action and its
    candidate enter the rolling context, and every candidate is
    decremented by the realized rewards so a single candidate c behaves
    exactly like conditioning on c.

"""


def candidate_rtgs(stats, count, max_multiplier):
    """ Evenly spaced candidates from return_min up to the stretched
        return_max, inclusive. A single candidate sits at the top.

        The top is return_max + (max_multiplier-1)*|return_max|, which
        is max_multiplier*return_max for non-negative returns and still
        lies above return_max for negative (dense reward) ones.

    """
    if count < 1:
        raise error_check.ConfigError(f"candidate count must be >= 1, got {count}.")
    if max_multiplier < 1:
        raise error_check.ConfigError("candidate max multiplier must be >= 1, got "
            f"{max_multiplier}.")
    top = stats.return_max + (max_multiplier - 1.0) * abs(stats.return_max)
    if count == 1:
        return [float(top)]
    return [float(v) for v in np.linspace(stats.return_min, top, count)]


class RolloutContext:
    """ The last K steps of an episode and the current conditioning RTG.

        States are kept raw and normalized when a window is built.

    """
    def __init__(self, K, state_dim, action_dim, stats):
        self.K = int(K)
        self.state_dim = int(state_dim)
        self.action_dim = int(action_dim)
        self.stats = stats
        self.rtgs = deque(maxlen=self.K)
        self.states = deque(maxlen=self.K)
        self.actions = deque(maxlen=self.K)
        self.timesteps = deque(maxlen=self.K)
        self.rtg = None
        self.choice = None

    def __len__(self):
        return len(self.states)

    def push_state(self, state, timestep):
        state = np.asarray(state, dtype=np.float64)
        error_check.error_check_dims("rollout state", (self.state_dim,), state.shape)
        self.states.append(state)
        self.actions.append(np.zeros(self.action_dim))
        self.rtgs.append(0.0 if self.rtg is None else self.rtg)
        self.timesteps.append(int(timestep))

    def window(self, rtg=None):
        """ ContextWindow of the buffered steps with rtg at the current slot."""
        n = len(self.states)
        if n == 0:
            raise error_check.UsageError("RolloutContext: no state observed yet.")
        pad = self.K - n
        rtgs = np.zeros(self.K)
        states = np.zeros((self.K, self.state_dim))
        actions = np.zeros((self.K, self.action_dim))
        timesteps = np.zeros(self.K, dtype=np.int64)
        rtgs[pad:] = list(self.rtgs)
        rtgs[-1] = self.rtg if rtg is None else rtg
        states[pad:] = self.stats.normalize(np.array(self.states))
        actions[pad:] = np.array(self.actions)
        timesteps[pad:] = list(self.timesteps)
        return ContextWindow(rtgs=rtgs, states=states, actions=actions,
            rewards=np.zeros(self.K), timesteps=timesteps, valid_len=n)

    def record(self, action, reward):
        """ Store the executed action and decrement the conditioning RTG."""
        self.actions[-1] = np.asarray(action, dtype=np.float64)
        self.rtgs[-1] = self.rtg
        self.rtg = self.rtg - reward


def score_candidates(model, ensemble, ctx, candidates, q_choice="min"):
    """ Predicted current action, its Q score and the disagreement
        |Q1 - Q2| of the twin critics for every candidate.

    """
    windows = [ctx.window(rtg=c) for c in candidates]
    batch = collate(windows)
    predicted = model.predict(batch)[:, -1, :]
    if ensemble is None or len(candidates) == 1:
        zeros = np.zeros(len(candidates))
        return predicted, zeros, zeros
    states = batch.states[:, -1, :]
    with ad.no_grad():
        scores = ensemble.estimate(states, predicted, choice=q_choice).data
        spread = np.abs(ensemble.estimate(states, predicted, choice="q1").data
                        - ensemble.estimate(states, predicted, choice="q2").data)
    return predicted, scores, spread


def select_action(model, ensemble, ctx, candidates, q_choice="min", tie_margin=None):
    """ Action of the candidate with the highest Q. Candidates scoring
        within tie_margin times the mean |Q1 - Q2| over the candidates
        of the best score count as tied, and ties go to the larger
        candidate. ctx.rtg and ctx.choice are set to the winner.

    """
    if not candidates:
        raise error_check.ConfigError("select_action: no candidate RTGs.")
    if tie_margin is None:
        tie_margin = cfg.q_tie_margin
    predicted, scores, spread = score_candidates(model, ensemble, ctx, candidates,
        q_choice)
    cutoff = scores.max() - tie_margin * spread.mean()
    tied = [i for i in range(len(candidates)) if scores[i] >= cutoff]
    best = max(tied, key=lambda i: candidates[i])
    ctx.rtg = float(candidates[best])
    ctx.choice = best
    return predicted[best]


def run_episode(model, ensemble, env, config, stats, candidates=None):
    """ One greedy episode.

        INPUTS:

        :model: (PolicyModel)
        :ensemble: (QEnsemble or None) None conditions on the top
            candidate without Q scoring
        :env: environment, reset here
        :config: (TrainConfig) K, candidate settings, reselect, q_choice
        :stats: (DatasetStats) state normalization and candidate grid
        :candidates: (list) overrides the grid built from stats

        OUTPUTS:

        :total: (float) realized return
        :steps: (int) steps taken
        :success: (bool) goal reached

    """
    if candidates is None:
        candidates = candidate_rtgs(stats, config.candidate_count,
            config.candidate_max_multiplier)
    ctx = RolloutContext(config.K, env.state_dim, env.action_dim, stats)
    state = env.reset()
    total = 0.0
    steps = 0
    done = env.done
    while not done:
        ctx.push_state(state, steps)
        if config.reselect == "episode" and ctx.choice is not None:
            pool = [candidates[ctx.choice] - total]
            chosen = ctx.choice
            action = select_action(model, ensemble, ctx, pool, config.q_choice)
            ctx.choice = chosen
        else:
            pool = [c - total for c in candidates]
            action = select_action(model, ensemble, ctx, pool, config.q_choice)
        state, reward, done = env.step(action)
        ctx.record(action, reward)
        total += reward
        steps += 1
    return total, steps, bool(env.success)


def rollout_threads(threads=None):
    if threads is None:
        threads = int(os.environ.get("QDC_THREADS", cfg.default_threads))
    return max(1, int(threads))


def evaluate_policy(model, ensemble, env, stats, config, episodes, seed,
    threads=None, random_return=None):
    """ Greedy rollouts over a frozen snapshot of the model and critics.

        Episodes run in up to QDC_THREADS worker threads, one
        environment copy each, and are merged in episode order.

        OUTPUTS:

        :report: (dict) raw_return_mean, raw_return_std,
            normalized_score_mean, normalized_score_std, success_rate,
            returns, steps_mean, episodes

    """
    if episodes < 1:
        raise error_check.ConfigError("evaluate_policy: episodes must be >= 1.")
    if random_return is None:
        random_return = scoring.random_policy_return(env,
            cfg.random_baseline_episodes, seed)
    optimal = scoring.optimal_return(env)
    candidates = candidate_rtgs(stats, config.candidate_count,
        config.candidate_max_multiplier)

    def one_episode(_):
        return run_episode(model, ensemble, env.copy(), config, stats, candidates)

    n_threads = rollout_threads(threads)
    if n_threads == 1:
        results = [one_episode(i) for i in range(episodes)]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(one_episode, range(episodes)))

    returns = np.array([r[0] for r in results])
    scores = np.array([scoring.normalized_score(r, env, random_return, optimal)
        for r in returns])
    return {"raw_return_mean": float(returns.mean()),
            "raw_return_std": float(returns.std()),
            "normalized_score_mean": float(scores.mean()),
            "normalized_score_std": float(scores.std()),
            "success_rate": float(np.mean([r[2] for r in results])),
            "steps_mean": float(np.mean([r[1] for r in results])),
            "episodes": int(episodes),
            "returns": returns.tolist()}
