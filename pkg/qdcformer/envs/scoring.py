from ..utils import config as cfg
from ..utils import error_check
import numpy as np

__author__ = "qdcformer developers"


""" About scoring.py

    Exact optimal return by finite-horizon dynamic programming, the
    uniform random policy baseline and the normalized score

        100*(raw - random)/(optimal - random)

"""


def optimal_return(env):
    """ Best undiscounted return from env.start within env.horizon steps.

        V_0(c) = 0
        V_h(c) = max_a [ r(c,a) + (0 if c' is the goal else V_{h-1}(c')) ]

        Raises CapabilityError when cells x horizon exceeds
        max_search_states.

    """
    cached = getattr(env, "_optimal_return", None)
    if cached is not None:
        return cached

    cells = env.cells()
    size = len(cells) * max(env.horizon, 1)
    if size > cfg.max_search_states:
        raise error_check.CapabilityError(f"{env.name}: {size} (cell, steps "
            f"remaining) pairs exceed the exact search limit of "
            f"{cfg.max_search_states}.")

    index = {cell: i for i, cell in enumerate(cells)}
    # one-step model over the discrete action set
    next_index = np.zeros((len(cells), len(env.actions)), dtype=np.int64)
    reward = np.zeros((len(cells), len(env.actions)))
    absorbing = np.zeros((len(cells), len(env.actions)), dtype=bool)
    for i, cell in enumerate(cells):
        for j, action in enumerate(env.actions):
            nxt, r, reached = env.transition(cell, action)
            next_index[i, j] = index[nxt]
            reward[i, j] = r
            absorbing[i, j] = reached

    value = np.zeros(len(cells))
    for _ in range(env.horizon):
        value = np.max(reward + np.where(absorbing, 0.0, value[next_index]), axis=1)

    result = float(value[index[env.start]])
    env._optimal_return = result
    return result


def random_policy_return(env, episodes, seed):
    """ Mean return of uniform random actions in [-1,1]^action_dim."""
    rng = np.random.default_rng(seed)
    env = env.copy()
    returns = []
    for _ in range(episodes):
        env.reset()
        total = 0.0
        done = env.done
        while not done:
            _, reward, done = env.step(rng.uniform(-1.0, 1.0, size=env.action_dim))
            total += reward
        returns.append(total)
    return float(np.mean(returns))


def normalized_score(raw_return, env, random_return, optimal=None):
    """ 100 at the optimal return, 0 at the random baseline."""
    optimal = optimal_return(env) if optimal is None else optimal
    if not optimal > random_return:
        raise error_check.CapabilityError(f"{env.name}: optimal return {optimal} "
            f"does not exceed the random baseline {random_return}; normalized "
            "score undefined.")
    return 100.0 * (raw_return - random_return) / (optimal - random_return)
