from ..utils import error_check
from collections import deque
import json
import os
import numpy as np

__author__ = "qdcformer developers"


""" About gridmaze.py

    Deterministic grid maze with continuous-looking encodings.

    State: the agent cell (x, y) mapped linearly to [-1,1]^2.
    Action: a vector in [-1,1]^2 snapped to its dominant axis (ties go
    to x); the zero vector stays put. Moves into a wall or off the grid
    leave the agent where it is.

    Rewards:
        sparse: 1 on reaching the goal, else 0
        dense:  -(Manhattan distance of the new cell to the goal)/(width+height)

    An episode ends at the goal or when the horizon runs out.

"""

template_dir = os.path.join(os.path.dirname(__file__), "templates")
builtin_mazes = ("maze5x5-open", "maze7x7-umaze", "maze9x9-medium")

_moves = ((1, 0), (-1, 0), (0, 1), (0, -1), (0, 0))


def snap_action(action):
    """ Dominant-axis cardinal move (dx, dy) of a continuous action."""
    ax, ay = float(action[0]), float(action[1])
    if ax == 0.0 and ay == 0.0:
        return (0, 0)
    if abs(ax) >= abs(ay):
        return (1 if ax > 0 else -1, 0)
    return (0, 1 if ay > 0 else -1)


class GridMaze:
    """ INPUTS:

        :width, height: (int) grid size
        :walls: (list of [x,y]) blocked cells
        :start, goal: ([x,y]) cells
        :reward_mode: (string) "sparse" or "dense"
        :horizon: (int) maximum steps per episode
        :waypoint: ([x,y] or None) cell where the two stitching
            segments meet; defaults to the middle of the shortest
            start to goal path
        :name: (string) label used in logs and reports

    """
    state_dim = 2
    action_dim = 2

    def __init__(self, width, height, walls, start, goal, reward_mode="sparse",
        horizon=50, waypoint=None, name="maze"):
        self.width = int(width)
        self.height = int(height)
        self.walls = {tuple(int(v) for v in cell) for cell in walls}
        self.start = tuple(int(v) for v in start)
        self.goal = tuple(int(v) for v in goal)
        self.reward_mode = reward_mode
        self.horizon = int(horizon)
        self.name = name

        if self.width < 1 or self.height < 1:
            raise error_check.ConfigError(f"{name}: grid must be at least 1x1.")
        if reward_mode not in ("sparse", "dense"):
            raise error_check.ConfigError(f"{name}: reward_mode must be sparse "
                f"or dense, got {reward_mode}.")
        if self.horizon < 0:
            raise error_check.ConfigError(f"{name}: horizon must be >= 0.")
        for label, cell in (("start", self.start), ("goal", self.goal)):
            if not self.is_free(cell):
                raise error_check.ConfigError(f"{name}: {label} {cell} is a wall "
                    "or outside the grid.")

        self._distances = {}
        self.actions = [np.array(m, dtype=np.float64) for m in _moves]
        if self.start not in self.distances_to(self.goal):
            raise error_check.ConfigError(f"{name}: goal {self.goal} is not "
                f"reachable from start {self.start}.")

        if waypoint is None:
            path = self.shortest_path(self.start, self.goal)
            waypoint = path[len(path) // 2]
        self.waypoint = tuple(int(v) for v in waypoint)
        if self.waypoint not in self.distances_to(self.goal):
            raise error_check.ConfigError(f"{name}: waypoint {self.waypoint} is "
                "not a free cell connected to the goal.")

        self.reset()

    def to_dict(self):
        return {"width": self.width, "height": self.height,
                "walls": sorted([list(c) for c in self.walls]),
                "start": list(self.start), "goal": list(self.goal),
                "reward_mode": self.reward_mode, "horizon": self.horizon,
                "waypoint": list(self.waypoint)}

    def copy(self):
        return GridMaze(name=self.name, **self.to_dict())

    ############### GEOMETRY ###############
    def is_free(self, cell):
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height \
            and (x, y) not in self.walls

    def cells(self):
        return [(x, y) for y in range(self.height) for x in range(self.width)
                if (x, y) not in self.walls]

    def move(self, cell, action):
        dx, dy = snap_action(action)
        target = (cell[0] + dx, cell[1] + dy)
        return target if self.is_free(target) else cell

    def distances_to(self, target):
        """ Breadth-first step counts from every reachable cell to target."""
        target = tuple(target)
        if target not in self._distances:
            dist = {target: 0}
            queue = deque([target])
            while queue:
                cell = queue.popleft()
                for dx, dy in _moves[:4]:
                    nxt = (cell[0] + dx, cell[1] + dy)
                    if self.is_free(nxt) and nxt not in dist:
                        dist[nxt] = dist[cell] + 1
                        queue.append(nxt)
            self._distances[target] = dist
        return self._distances[target]

    def shortest_path_action(self, cell, target):
        """ Cardinal action that moves one step closer to target, or the
            zero action when already there.

        """
        dist = self.distances_to(target)
        cell = tuple(cell)
        if cell == tuple(target) or cell not in dist:
            return np.zeros(2)
        for action in self.actions[:4]:
            if dist.get(self.move(cell, action), np.inf) < dist[cell]:
                return action.copy()
        return np.zeros(2)

    def shortest_path(self, source, target):
        path = [tuple(source)]
        while path[-1] != tuple(target):
            path.append(self.move(path[-1], self.shortest_path_action(path[-1], target)))
        return path

    def beyond_waypoint(self, cell):
        """True for cells closer to the goal than the waypoint is."""
        dist = self.distances_to(self.goal)
        return dist.get(tuple(cell), np.inf) < dist[self.waypoint]

    ############### ENCODING ###############
    def encode(self, cell):
        sx = 2.0 * cell[0] / (self.width - 1) - 1.0 if self.width > 1 else 0.0
        sy = 2.0 * cell[1] / (self.height - 1) - 1.0 if self.height > 1 else 0.0
        return np.array([sx, sy])

    def cell_of_state(self, state):
        x = int(round((state[0] + 1.0) * (self.width - 1) / 2.0))
        y = int(round((state[1] + 1.0) * (self.height - 1) / 2.0))
        return (x, y)

    def reward(self, cell):
        if self.reward_mode == "sparse":
            return 1.0 if cell == self.goal else 0.0
        manhattan = abs(cell[0] - self.goal[0]) + abs(cell[1] - self.goal[1])
        return -manhattan / (self.width + self.height)

    def transition(self, cell, action):
        """ (next cell, reward, goal reached) without touching the
            episode state.

        """
        nxt = self.move(cell, action)
        return nxt, self.reward(nxt), nxt == self.goal

    ############### EPISODE ###############
    def reset(self, start=None):
        self.cell = self.start if start is None else tuple(start)
        self.t = 0
        self.success = False
        self.done = self.horizon == 0
        return self.state

    @property
    def state(self):
        return self.encode(self.cell)

    def step(self, action):
        """ Returns (next_state, reward, terminal). terminal is true at
            the goal and when the horizon is exhausted; success tells
            the two apart.

        """
        if self.done:
            raise error_check.UsageError(f"{self.name}: step() called after the "
                "episode ended; call reset().")
        self.cell, reward, self.success = self.transition(self.cell, action)
        self.t += 1
        self.done = self.success or self.t >= self.horizon
        return self.state, reward, self.done


def load_maze(name_or_path, reward_mode=None):
    """ A built-in maze by name or a maze JSON document by path.

        {"width", "height", "walls": [[x,y], ...], "start", "goal",
         "reward_mode", "horizon", "waypoint" (optional)}

    """
    if name_or_path in builtin_mazes:
        path = os.path.join(template_dir, name_or_path + ".json")
        name = name_or_path
    elif os.path.isfile(name_or_path):
        path = name_or_path
        name = os.path.splitext(os.path.basename(name_or_path))[0]
    else:
        raise error_check.ConfigError(f"Unknown environment {name_or_path}. "
            f"Built-in mazes are {list(builtin_mazes)}.")

    with open(path, "r") as infile:
        try:
            spec = json.load(infile)
        except json.JSONDecodeError as e:
            raise error_check.ConfigError(f"{path}: could not parse maze ({e.msg}).")

    required = ("width", "height", "walls", "start", "goal", "reward_mode", "horizon")
    missing = [k for k in required if k not in spec]
    if missing:
        raise error_check.ConfigError(f"{path}: maze is missing keys {missing}.")
    if reward_mode is not None:
        spec["reward_mode"] = reward_mode
    return GridMaze(spec["width"], spec["height"], spec["walls"], spec["start"],
        spec["goal"], reward_mode=spec["reward_mode"], horizon=spec["horizon"],
        waypoint=spec.get("waypoint"), name=name)
