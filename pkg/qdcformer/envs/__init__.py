"""Toy environments, behavior-policy datasets and scoring."""
from ..utils import error_check
from .chain import ChainMDP
from .gridmaze import GridMaze, builtin_mazes, load_maze
import re


def make_env(name, reward_mode=None):
    """ Environment by name: a built-in maze, a maze JSON path, or
        chain<n> for a ChainMDP with n states.

    """
    match = re.fullmatch(r"chain(\d+)", str(name))
    if match:
        if reward_mode not in (None, "sparse"):
            raise error_check.ConfigError("ChainMDP only has sparse rewards.")
        return ChainMDP(int(match.group(1)))
    return load_maze(name, reward_mode=reward_mode)
