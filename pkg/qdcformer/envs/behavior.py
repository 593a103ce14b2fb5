from ..data.trajectory import Trajectory
from ..utils import error_check
from collections import deque
from dataclasses import dataclass
import logging
import numpy as np

__author__ = "qdcformer developers"

logger = logging.getLogger("qdcformer")


""" About behavior.py

    Behavior policies that produce offline datasets.

        random        uniform actions in [-1,1]^action_dim
        noisy_expert  shortest path to the goal
        segment_A     from the start towards the waypoint, then a random
                      walk that never crosses to the goal side of it
        wander_A      a random walk on the start side of the waypoint,
                      starting from a random start-side cell
        segment_B     from the waypoint to the goal
        stitch-mix    wander_A and segment_B episodes alternating 50/50

    Every kind except random replaces its intended action by a uniform
    random one with probability noise. No segment_A or wander_A episode
    can reach the goal, and segment_B never starts at the true start, so
    a stitch-mix dataset holds no single start to goal episode. The
    wander_A moves average out on the start side, so the logged actions
    there do not point at the waypoint.

"""

policy_kinds = ("random", "noisy_expert", "segment_A", "wander_A", "segment_B",
    "stitch-mix")


@dataclass
class BehaviorPolicySpec:
    kind: str
    noise: float = 0.0

    def __post_init__(self):
        if self.kind not in policy_kinds:
            raise error_check.ConfigError(f"Unknown behavior policy {self.kind}. "
                f"Choose from {list(policy_kinds)}.")
        if not 0.0 <= self.noise <= 1.0:
            raise error_check.ConfigError("Behavior noise must lie in [0,1], got "
                f"{self.noise}.")


def _random_action(env, rng):
    return rng.uniform(-1.0, 1.0, size=env.action_dim)


def start_side_cells(env):
    """ Reachable cells that are not closer to the goal than the waypoint."""
    reachable = env.distances_to(env.goal) if hasattr(env, "distances_to") else None
    return [cell for cell in env.cells()
            if (reachable is None or cell in reachable)
            and not env.beyond_waypoint(cell)]


def _intended_action(env, kind, cell, phase, rng):
    if kind == "noisy_expert" or kind == "segment_B":
        return env.shortest_path_action(cell, env.goal)
    if kind == "segment_A" and phase == "approach":
        return env.shortest_path_action(cell, env.waypoint)
    return env.actions[rng.integers(len(env.actions))].copy()


def run_behavior_episode(env, kind, noise, rng):
    """ One episode of a single behavior kind as a Trajectory."""
    start = None
    if kind == "segment_B":
        start = env.waypoint
    elif kind == "wander_A":
        cells = start_side_cells(env)
        start = cells[rng.integers(len(cells))]
    state = env.reset(start=start)
    phase = "wander" if kind == "wander_A" else "approach"
    confined = kind in ("segment_A", "wander_A")
    states, actions, rewards = [], [], []
    done = env.done
    while not done:
        if kind != "random" and env.cell == env.waypoint:
            phase = "wander"
        if kind == "random" or rng.random() < noise:
            action = _random_action(env, rng)
        else:
            action = _intended_action(env, kind, env.cell, phase, rng)
        if confined and env.beyond_waypoint(env.move(env.cell, action)):
            action = np.zeros(env.action_dim)
        states.append(state)
        actions.append(action)
        state, reward, done = env.step(action)
        rewards.append(reward)

    if not rewards:
        raise error_check.EmptyTrajectoryError(f"{env.name}: horizon 0 gives "
            "empty episodes.")
    return Trajectory(states, actions, rewards, terminal=env.success)


def generate_dataset(env, spec, episodes, seed):
    """ Roll out the behavior policy.

        INPUTS:

        :env: (GridMaze or ChainMDP)
        :spec: (BehaviorPolicySpec)
        :episodes: (int) number of episodes
        :seed: (int)

        OUTPUTS:

        :trajectories: (list of Trajectory)

    """
    if episodes < 1:
        raise error_check.ConfigError("generate_dataset: episodes must be >= 1.")
    rng = np.random.default_rng(seed)
    env = env.copy()
    trajectories = []
    for i in range(episodes):
        kind = spec.kind
        if kind == "stitch-mix":
            kind = "wander_A" if i % 2 == 0 else "segment_B"
        trajectories.append(run_behavior_episode(env, kind, spec.noise, rng))
    logger.debug("Generated %d %s episodes on %s", episodes, spec.kind, env.name)
    return trajectories


def logged_transitions_connect(env, trajectories):
    """ True if the logged (state, action) pairs, replayed through the
        deterministic dynamics, contain a path from the start to the goal.

    """
    edges = {}
    for traj in trajectories:
        for state, action in zip(traj.states, traj.actions):
            cell = env.cell_of_state(state)
            nxt = env.move(cell, action)
            edges.setdefault(cell, set()).add(nxt)

    seen = {env.start}
    queue = deque([env.start])
    while queue:
        cell = queue.popleft()
        if cell == env.goal:
            return True
        for nxt in edges.get(cell, ()):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def best_return_from_start(env, trajectories):
    """ Highest logged return among episodes that begin at the start."""
    start_state = env.encode(env.start)
    returns = [traj.episode_return for traj in trajectories
               if np.allclose(traj.states[0], start_state)]
    return max(returns) if returns else None
