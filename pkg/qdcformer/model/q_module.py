from ..autodiff import engine as ad
from ..data.trajectory import ContextWindow, collate
from ..utils import error_check
import numpy as np

__author__ = "qdcformer developers"


""" About q_module.py

    Twin Q-networks Q1, Q2 on (state, action) pairs, their target
    copies and the target policy, n-step Bellman targets over a context
    window, the critic loss and Polyak averaging of the targets.

    For a window ending at step t, the target at step m < t is

        Qhat_m = sum_{j=m}^{t-1} gamma^(j-m) r_j
                 + gamma^(t-m) min_i Q_i'(s_t, a_hat_t)

    where a_hat_t is the target policy's prediction on the window. If
    step t ended the episode in a terminal state the bootstrap is
    replaced by r_t itself, and step t receives the target r_t.

"""


class QNetwork:
    """ MLP (state_dim+action_dim) -> h -> h -> 1 with ReLU."""

    def __init__(self, state_dim, action_dim, hidden, rng):
        self.state_dim = int(state_dim)
        self.action_dim = int(action_dim)
        self.hidden = int(hidden)
        self.params = {}
        sizes = [(state_dim + action_dim, hidden), (hidden, hidden), (hidden, 1)]
        for i, (fan_in, fan_out) in enumerate(sizes, start=1):
            bound = 1.0 / np.sqrt(fan_in)
            self.params[f"l{i}.weight"] = ad.Tensor(
                rng.uniform(-bound, bound, size=(fan_in, fan_out)), requires_grad=True)
            self.params[f"l{i}.bias"] = ad.Tensor(
                rng.uniform(-bound, bound, size=fan_out), requires_grad=True)

    def parameters(self):
        return dict(self.params)

    def forward(self, states, actions, frozen=False):
        """ Q values [...] for states [..., state_dim] and actions
            [..., action_dim]. With frozen=True the parameters enter as
            constants, so only the inputs can receive a gradient.

        """
        states, actions = ad.as_tensor(states), ad.as_tensor(actions)
        error_check.error_check_dims("Q-network state", (self.state_dim,),
            states.shape[-1:])
        error_check.error_check_dims("Q-network action", (self.action_dim,),
            actions.shape[-1:])
        p = {k: v.detach() for k, v in self.params.items()} if frozen else self.params
        x = ad.concat([states, actions], axis=-1)
        h = ad.relu(x @ p["l1.weight"] + p["l1.bias"])
        h = ad.relu(h @ p["l2.weight"] + p["l2.bias"])
        out = h @ p["l3.weight"] + p["l3.bias"]
        return ad.reshape(out, out.data.shape[:-1])

    def copy(self):
        clone = QNetwork.__new__(QNetwork)
        clone.state_dim, clone.action_dim = self.state_dim, self.action_dim
        clone.hidden = self.hidden
        clone.params = {k: ad.Tensor(v.data) for k, v in self.params.items()}
        return clone

    def to_dict(self):
        return {k: v.data.tolist() for k, v in self.params.items()}

    def load_params(self, values):
        for name, tensor in self.params.items():
            if name not in values:
                raise error_check.ConfigError(f"Q-network parameter {name} missing.")
            array = np.array(values[name], dtype=np.float64)
            error_check.error_check_dims(f"Q-network parameter {name}",
                tensor.data.shape, array.shape)
            tensor.data = array


class QEnsemble:
    """ Online and target critics plus the target policy.

        policy_target only needs a predict(batch) method returning
        [B, K, action_dim] actions; policy is the online policy the
        target tracks under polyak_update (may be None).

    """
    def __init__(self, q1, q2, policy_target, gamma, polyak_tau, policy=None):
        self.q1 = q1
        self.q2 = q2
        self.q1_target = q1.copy()
        self.q2_target = q2.copy()
        self.policy_target = policy_target
        self.policy = policy
        self.gamma = float(gamma)
        self.polyak_tau = float(polyak_tau)

    @classmethod
    def create(cls, policy, hidden, gamma, polyak_tau, rng):
        q1 = QNetwork(policy.state_dim, policy.action_dim, hidden, rng)
        q2 = QNetwork(policy.state_dim, policy.action_dim, hidden, rng)
        return cls(q1, q2, policy.copy(), gamma, polyak_tau, policy=policy)

    @property
    def state_dim(self):
        return self.q1.state_dim

    @property
    def action_dim(self):
        return self.q1.action_dim

    def parameters(self):
        """Online critic parameters, the only ones the critic loss trains."""
        params = {f"q1.{k}": v for k, v in self.q1.params.items()}
        params.update({f"q2.{k}": v for k, v in self.q2.params.items()})
        return params

    def estimate(self, states, actions, choice="min", frozen=False):
        """ Q used for policy improvement: min(Q1, Q2) or Q1 alone. q2
            gives the second critic alone.

        """
        if choice == "q2":
            return self.q2.forward(states, actions, frozen=frozen)
        q1 = self.q1.forward(states, actions, frozen=frozen)
        if choice == "q1":
            return q1
        return ad.min_elementwise(q1, self.q2.forward(states, actions, frozen=frozen))

    def to_dict(self):
        values = {"q1": self.q1.to_dict(), "q2": self.q2.to_dict(),
                  "q1_target": self.q1_target.to_dict(),
                  "q2_target": self.q2_target.to_dict()}
        if hasattr(self.policy_target, "to_dict"):
            values["policy_target"] = self.policy_target.to_dict()
        return values

    def load_params(self, values):
        self.q1.load_params(values["q1"])
        self.q2.load_params(values["q2"])
        self.q1_target.load_params(values["q1_target"])
        self.q2_target.load_params(values["q2_target"])
        if "policy_target" in values and hasattr(self.policy_target, "load_params"):
            self.policy_target.load_params(values["policy_target"])


def batch_bellman_targets(ensemble, batch):
    """ Vectorized n-step targets.

        INPUTS:

        :ensemble: (QEnsemble)
        :batch: (WindowBatch)

        OUTPUTS:

        :targets: (float BxK array) Qhat per slot, 0 where unused
        :target_mask: (bool BxK array) slots that carry a target

    """
    B, K = batch.rewards.shape
    valid_len = batch.mask.sum(axis=1)
    with ad.no_grad():
        a_hat = np.asarray(ensemble.policy_target.predict(batch))[:, -1, :]
        s_t = batch.states[:, -1, :]
        q_next = np.minimum(ensemble.q1_target.forward(s_t, a_hat).data,
                            ensemble.q2_target.forward(s_t, a_hat).data)

    targets = np.zeros((B, K))
    target_mask = np.zeros((B, K), dtype=bool)

    G = np.where(batch.terminal, batch.rewards[:, -1], q_next)
    targets[:, -1] = np.where(batch.terminal, G, 0.0)
    target_mask[:, -1] = batch.terminal & (valid_len >= 2)
    for j in range(K - 2, -1, -1):
        G = batch.rewards[:, j] + ensemble.gamma * G
        targets[:, j] = G
        target_mask[:, j] = batch.mask[:, j]

    targets[~target_mask] = 0.0
    return targets, target_mask


def bellman_targets(ensemble, window):
    """ List of (timestep m, Qhat_m) for one ContextWindow; empty when
        the window holds fewer than two valid steps.

    """
    if window.valid_len < 2:
        return []
    targets, target_mask = batch_bellman_targets(ensemble, collate([window]))
    return [(int(window.timesteps[j]), float(targets[0, j]))
            for j in range(window.K) if target_mask[0, j]]


def critic_loss(ensemble, batch, targets=None):
    """ Sum over Q1 and Q2 of the mean squared residual between Qhat_m
        (a constant) and the online critic at the logged (s_m, a_m),
        averaged over every (window, m) pair of the batch.

    """
    if isinstance(batch, ContextWindow):
        batch = collate([batch])
    if targets is None:
        targets = batch_bellman_targets(ensemble, batch)
    values, target_mask = targets
    count = int(target_mask.sum())
    if count == 0:
        raise error_check.UsageError("critic_loss: no window in the batch has "
            "two valid steps.")
    weights = target_mask / count
    loss = None
    for q in (ensemble.q1, ensemble.q2):
        residual = q.forward(batch.states, batch.actions) - ad.Tensor(values)
        term = ad.sum(ad.mul(ad.mul(residual, residual), weights))
        loss = term if loss is None else loss + term
    return loss


def _blend(online, target, tau):
    for name, t in target.items():
        t.data = tau * online[name].data + (1.0 - tau) * t.data


def polyak_update(ensemble, tau=None):
    """ target <- tau*online + (1-tau)*target for both critics and, when
        the ensemble tracks an online policy, the target policy.

    """
    tau = ensemble.polyak_tau if tau is None else float(tau)
    if not 0 < tau <= 1:
        raise error_check.ConfigError(f"polyak tau must lie in (0,1], got {tau}.")
    _blend(ensemble.q1.params, ensemble.q1_target.params, tau)
    _blend(ensemble.q2.params, ensemble.q2_target.params, tau)
    if ensemble.policy is not None and hasattr(ensemble.policy_target, "parameters"):
        _blend(ensemble.policy.parameters(), ensemble.policy_target.parameters(), tau)


def q_value(ensemble, s, a, which="min"):
    """ Q of a single (state, action) pair from q1, q2, min or
        target_min.

    """
    s = np.asarray(s, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    error_check.error_check_dims("q_value state", (ensemble.state_dim,), s.shape)
    error_check.error_check_dims("q_value action", (ensemble.action_dim,), a.shape)
    with ad.no_grad():
        if which == "q1":
            return ensemble.q1.forward(s, a).item()
        if which == "q2":
            return ensemble.q2.forward(s, a).item()
        if which == "min":
            return min(ensemble.q1.forward(s, a).item(),
                       ensemble.q2.forward(s, a).item())
        if which == "target_min":
            return min(ensemble.q1_target.forward(s, a).item(),
                       ensemble.q2_target.forward(s, a).item())
    raise error_check.ConfigError(f"q_value: unknown evaluation {which}.")
