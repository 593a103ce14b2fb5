from ..utils import config as cfg
from ..utils import error_check
from dataclasses import dataclass
import json
import os
import numpy as np

__author__ = "qdcformer developers"


""" About trajectory.py

    Episodes of (state, action, reward) with their undiscounted
    return-to-go, the JSON-Lines dataset format, state normalization
    statistics and sampling of K-step context windows.

    Dataset file: one episode per line,

        {"states": [[...], ...], "actions": [[...], ...],
         "rewards": [...], "terminal": true}

    terminal is true when the episode ended in a terminal state and
    false when it ran out of time.

"""


def compute_rtg(rewards):
    """ Undiscounted suffix sums, rtg[t] = rewards[t] + rtg[t+1].

        INPUTS:

        :rewards: (float 1xT array)

        OUTPUTS:

        :rtg: (float 1xT numpy array)

    """
    rewards = np.asarray(rewards, dtype=np.float64)
    if rewards.size == 0:
        raise error_check.EmptyTrajectoryError("compute_rtg: a trajectory needs "
            "at least one reward.")
    # reversed cumsum performs exactly the additions of the recursion
    return np.cumsum(rewards[::-1])[::-1].copy()


class Trajectory:
    """ One logged episode."""

    def __init__(self, states, actions, rewards, terminal):
        self.states = np.array(states, dtype=np.float64)
        self.actions = np.array(actions, dtype=np.float64)
        self.rewards = np.array(rewards, dtype=np.float64)
        self.terminal = bool(terminal)

        T = len(self.rewards)
        if T == 0:
            raise error_check.EmptyTrajectoryError("Trajectory has no steps.")
        if self.states.ndim != 2 or self.actions.ndim != 2 or self.rewards.ndim != 1:
            raise error_check.DatasetError("Trajectory: states and actions must "
                "be lists of vectors and rewards a list of numbers.")
        if len(self.states) != T or len(self.actions) != T:
            raise error_check.DatasetError("Trajectory: states, actions and "
                f"rewards have lengths {len(self.states)}, {len(self.actions)} "
                f"and {T}; they must be equal.")
        self.rtg = compute_rtg(self.rewards)

    def __len__(self):
        return len(self.rewards)

    @property
    def state_dim(self):
        return self.states.shape[1]

    @property
    def action_dim(self):
        return self.actions.shape[1]

    @property
    def episode_return(self):
        return float(self.rtg[0])

    def to_dict(self):
        return {"states": self.states.tolist(),
                "actions": self.actions.tolist(),
                "rewards": self.rewards.tolist(),
                "terminal": self.terminal}


@dataclass
class DatasetStats:
    state_mean: np.ndarray
    state_std: np.ndarray
    return_max: float
    return_min: float

    @classmethod
    def from_trajectories(cls, trajectories):
        if not trajectories:
            raise error_check.DatasetError("Cannot compute statistics of an "
                "empty dataset.")
        all_states = np.concatenate([traj.states for traj in trajectories], axis=0)
        returns = [traj.episode_return for traj in trajectories]
        return cls(state_mean=all_states.mean(axis=0),
                   state_std=np.maximum(all_states.std(axis=0), cfg.std_floor),
                   return_max=float(max(returns)),
                   return_min=float(min(returns)))

    def normalize(self, states):
        return (np.asarray(states, dtype=np.float64) - self.state_mean) / self.state_std

    def to_dict(self):
        return {"state_mean": self.state_mean.tolist(),
                "state_std": self.state_std.tolist(),
                "return_max": self.return_max,
                "return_min": self.return_min}

    @classmethod
    def from_dict(cls, values):
        return cls(state_mean=np.array(values["state_mean"], dtype=np.float64),
                   state_std=np.array(values["state_std"], dtype=np.float64),
                   return_max=float(values["return_max"]),
                   return_min=float(values["return_min"]))


_episode_keys = ("states", "actions", "rewards", "terminal")


def save_dataset(path, trajectories):
    """ Write trajectories as JSON-Lines, one episode per line. Floats
        are written with full precision so a reload is bit-exact.

    """
    directory = os.path.dirname(path)
    if directory and not os.path.isdir(directory):
        os.makedirs(directory)
    with open(path, "w") as outfile:
        for traj in trajectories:
            outfile.write(json.dumps(traj.to_dict()) + "\n")


def load_dataset(path):
    """ Read a JSON-Lines dataset.

        INPUTS:

        :path: (string) dataset file

        OUTPUTS:

        :trajectories: (list of Trajectory)
        :stats: (DatasetStats) over all states and episode returns

    """
    trajectories = []
    with open(path, "r") as infile:
        for lineno, line in enumerate(infile, start=1):
            line = line.strip()
            if line == "":
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise error_check.DatasetError(f"{path}, line {lineno}: could not "
                    f"parse episode ({e.msg}).")
            if not isinstance(record, dict):
                raise error_check.DatasetError(f"{path}, line {lineno}: an episode "
                    "must be a JSON object.")
            missing = [k for k in _episode_keys if k not in record]
            if missing:
                raise error_check.DatasetError(f"{path}, line {lineno}: missing "
                    f"keys {missing}.")
            try:
                traj = Trajectory(record["states"], record["actions"],
                    record["rewards"], record["terminal"])
            except (ValueError, TypeError) as e:
                raise error_check.DatasetError(f"{path}, line {lineno}: {e}")
            if trajectories and (traj.state_dim != trajectories[0].state_dim or
                    traj.action_dim != trajectories[0].action_dim):
                raise error_check.DatasetError(f"{path}, line {lineno}: state or "
                    "action dimension differs from the first episode.")
            trajectories.append(traj)

    if not trajectories:
        raise error_check.DatasetError(f"{path}: dataset is empty.")

    return trajectories, DatasetStats.from_trajectories(trajectories)


def dataset_summary(trajectories):
    returns = [traj.episode_return for traj in trajectories]
    return {"episodes": len(trajectories),
            "return_min": float(min(returns)),
            "return_max": float(max(returns))}


@dataclass
class ContextWindow:
    """ K left-padded steps ending at step t of an episode. Slots
        0..K-valid_len-1 are zero padding.

    """
    rtgs: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    timesteps: np.ndarray
    valid_len: int
    terminal: bool = False

    @property
    def K(self):
        return len(self.rtgs)

    @property
    def mask(self):
        return np.arange(self.K) >= self.K - self.valid_len


def sample_context(traj, t, K, stats):
    """ The window covering steps max(0, t-K+1)..t of traj, left-padded
        to K slots, with normalized states.

    """
    if not 0 <= t < len(traj):
        raise IndexError(f"sample_context: step {t} outside an episode of "
            f"length {len(traj)}.")
    start = max(0, t - K + 1)
    valid = t - start + 1
    pad = K - valid

    rtgs = np.zeros(K)
    states = np.zeros((K, traj.state_dim))
    actions = np.zeros((K, traj.action_dim))
    rewards = np.zeros(K)
    timesteps = np.zeros(K, dtype=np.int64)

    rtgs[pad:] = traj.rtg[start:t + 1]
    states[pad:] = stats.normalize(traj.states[start:t + 1])
    actions[pad:] = traj.actions[start:t + 1]
    rewards[pad:] = traj.rewards[start:t + 1]
    timesteps[pad:] = np.arange(start, t + 1)

    return ContextWindow(rtgs=rtgs, states=states, actions=actions,
        rewards=rewards, timesteps=timesteps, valid_len=valid,
        terminal=traj.terminal and t == len(traj) - 1)


class Dataset:
    """ Trajectories plus statistics, indexed for uniform sampling over
        every (trajectory, step) pair.

    """
    def __init__(self, trajectories, stats=None):
        if not trajectories:
            raise error_check.DatasetError("Cannot sample from an empty dataset.")
        self.trajectories = list(trajectories)
        self.stats = stats if stats is not None else \
            DatasetStats.from_trajectories(self.trajectories)
        self.offsets = np.cumsum([len(traj) for traj in self.trajectories])

    def __len__(self):
        return int(self.offsets[-1])

    @property
    def state_dim(self):
        return self.trajectories[0].state_dim

    @property
    def action_dim(self):
        return self.trajectories[0].action_dim

    def locate(self, flat_index):
        i = int(np.searchsorted(self.offsets, flat_index, side="right"))
        start = 0 if i == 0 else int(self.offsets[i - 1])
        return i, int(flat_index) - start


def sample_batch(dataset, batch_size, K, rng):
    """ batch_size windows drawn uniformly over all (trajectory, t)
        pairs with the numpy Generator rng.

    """
    if len(dataset.trajectories) == 0:
        raise error_check.DatasetError("sample_batch: empty dataset.")
    draws = rng.integers(0, len(dataset), size=batch_size)
    windows = []
    for flat_index in draws:
        i, t = dataset.locate(flat_index)
        windows.append(sample_context(dataset.trajectories[i], t, K,
            dataset.stats))
    return windows


@dataclass
class WindowBatch:
    rtgs: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    timesteps: np.ndarray
    mask: np.ndarray
    terminal: np.ndarray

    def __len__(self):
        return len(self.rtgs)

    @property
    def K(self):
        return self.rtgs.shape[1]


def collate(windows):
    """ Stack windows into [B, K, ...] arrays."""
    if not windows:
        raise error_check.DatasetError("collate: no windows.")
    return WindowBatch(
        rtgs=np.stack([w.rtgs for w in windows]),
        states=np.stack([w.states for w in windows]),
        actions=np.stack([w.actions for w in windows]),
        rewards=np.stack([w.rewards for w in windows]),
        timesteps=np.stack([w.timesteps for w in windows]),
        mask=np.stack([w.mask for w in windows]),
        terminal=np.array([w.terminal for w in windows], dtype=bool))
