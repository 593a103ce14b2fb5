from ..utils import error_check
import numpy as np

__author__ = "qdcformer developers"


class ChainMDP:
    """ Deterministic chain 0 .. n_states-1 starting at 0.

        A positive action moves right, anything else moves left (0 is a
        wall on the left). Reaching n_states-1 pays 1 and ends the
        episode. The state is the position scaled to [-1, 1].

    """
    state_dim = 1
    action_dim = 1

    def __init__(self, n_states=5, horizon=None, name=None):
        self.n_states = int(n_states)
        if self.n_states < 2:
            raise error_check.ConfigError("ChainMDP needs at least 2 states.")
        self.horizon = 2 * self.n_states if horizon is None else int(horizon)
        self.name = name or f"chain{self.n_states}"
        self.start = 0
        self.goal = self.n_states - 1
        self.waypoint = self.n_states // 2
        self.actions = [np.array([1.0]), np.array([-1.0])]
        self.reset()

    def copy(self):
        return ChainMDP(self.n_states, self.horizon, self.name)

    def cells(self):
        return list(range(self.n_states))

    def encode(self, cell):
        return np.array([2.0 * cell / (self.n_states - 1) - 1.0])

    def cell_of_state(self, state):
        return int(round((state[0] + 1.0) * (self.n_states - 1) / 2.0))

    def move(self, cell, action):
        if float(action[0]) > 0:
            return min(cell + 1, self.n_states - 1)
        return max(cell - 1, 0)

    def transition(self, cell, action):
        nxt = self.move(cell, action)
        reached = nxt == self.goal
        return nxt, (1.0 if reached else 0.0), reached

    def shortest_path_action(self, cell, target):
        return np.array([1.0]) if target > cell else np.array([-1.0])

    def beyond_waypoint(self, cell):
        return cell > self.waypoint

    def reset(self, start=None):
        self.cell = self.start if start is None else int(start)
        self.t = 0
        self.success = False
        self.done = self.horizon == 0
        return self.state

    @property
    def state(self):
        return self.encode(self.cell)

    def step(self, action):
        if self.done:
            raise error_check.UsageError(f"{self.name}: step() called after the "
                "episode ended; call reset().")
        self.cell, reward, self.success = self.transition(self.cell, action)
        self.t += 1
        self.done = self.success or self.t >= self.horizon
        return self.state, reward, self.done
