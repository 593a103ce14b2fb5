from ..autodiff import engine as ad
from ..data.trajectory import ContextWindow, collate
from ..utils import config as cfg
from ..utils import error_check
import numpy as np

__author__ = "qdcformer developers"


""" About conv_policy.py

    Return-conditioned convolutional sequence policy.

    A K-step window is embedded as the token sequence

        R_{t-K+1}, s_{t-K+1}, a_{t-K+1}, ..., R_t, s_t

    of length 3K-1 (the final action is never an input). Each token
    gets the learned embedding of its absolute timestep. N blocks of

        Z = Conv(LN(x)) + x
        out = FFN(LN(Z)) + Z

    follow, where Conv is a depthwise causal convolution over token
    positions and FFN is d -> 4d -> d with GELU. The action head reads
    the hidden vector at every state token and squashes it with tanh,
    giving one action per step of the window.

"""


def _uniform(rng, fan_in, shape):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class ConvBlock:
    """ Token-mixing sub-block followed by the FFN sub-block."""

    def __init__(self, d, conv_window, rng):
        kernel = np.zeros((conv_window, d))
        kernel[conv_window - 1] = 1.0  # current-token tap
        self.params = {
            "ln1.gain": ad.Tensor(np.ones(d), requires_grad=True),
            "ln1.shift": ad.Tensor(np.zeros(d), requires_grad=True),
            "conv.kernel": ad.Tensor(kernel, requires_grad=True),
            "conv.bias": ad.Tensor(np.zeros(d), requires_grad=True),
            "ln2.gain": ad.Tensor(np.ones(d), requires_grad=True),
            "ln2.shift": ad.Tensor(np.zeros(d), requires_grad=True),
            "ffn.w1": ad.Tensor(_uniform(rng, d, (d, 4 * d)), requires_grad=True),
            "ffn.b1": ad.Tensor(np.zeros(4 * d), requires_grad=True),
            "ffn.w2": ad.Tensor(_uniform(rng, 4 * d, (4 * d, d)), requires_grad=True),
            "ffn.b2": ad.Tensor(np.zeros(d), requires_grad=True),
        }

    def forward(self, x):
        p = self.params
        h = ad.layer_norm(x, p["ln1.gain"], p["ln1.shift"], cfg.ln_eps)
        z = x + ad.causal_conv1d(h, p["conv.kernel"], p["conv.bias"])
        h = ad.layer_norm(z, p["ln2.gain"], p["ln2.shift"], cfg.ln_eps)
        h = ad.gelu(h @ p["ffn.w1"] + p["ffn.b1"]) @ p["ffn.w2"] + p["ffn.b2"]
        return z + h


class PolicyModel:
    """ The policy pi_theta.

        INPUTS:

        :state_dim, action_dim: (int) environment dimensions
        :K: (int) context length in steps
        :d: (int) hidden width
        :N: (int) number of conv blocks
        :conv_window: (int) convolution window in tokens
        :max_timestep: (int) rows of the timestep embedding table
        :rtg_scale: (float) RTG tokens are divided by this
        :rng: (numpy Generator) parameter initialization

    """
    def __init__(self, state_dim, action_dim, K, d, N, conv_window, max_timestep,
        rtg_scale, rng):
        self.state_dim = int(state_dim)
        self.action_dim = int(action_dim)
        self.K = int(K)
        self.d = int(d)
        self.N = int(N)
        self.conv_window = int(conv_window)
        self.max_timestep = int(max_timestep)
        self.rtg_scale = float(rtg_scale)

        def linear(name, fan_in, fan_out):
            return {f"{name}.weight": ad.Tensor(_uniform(rng, fan_in, (fan_in, fan_out)),
                        requires_grad=True),
                    f"{name}.bias": ad.Tensor(np.zeros(fan_out), requires_grad=True)}

        self.embeddings = {}
        self.embeddings.update(linear("emb_rtg", 1, d))
        self.embeddings.update(linear("emb_state", state_dim, d))
        self.embeddings.update(linear("emb_action", action_dim, d))
        self.embeddings["emb_timestep.table"] = ad.Tensor(
            cfg.embedding_init_scale * rng.standard_normal((max_timestep, d)),
            requires_grad=True)
        self.blocks = [ConvBlock(d, conv_window, rng) for _ in range(N)]
        self.head = linear("head", d, action_dim)

    def dims(self):
        return {"state_dim": self.state_dim, "action_dim": self.action_dim,
                "K": self.K, "d": self.d, "N": self.N,
                "conv_window": self.conv_window,
                "max_timestep": self.max_timestep, "rtg_scale": self.rtg_scale}

    def parameters(self):
        """Ordered mapping of parameter name to Tensor."""
        params = dict(self.embeddings)
        for i, block in enumerate(self.blocks):
            for name, tensor in block.params.items():
                params[f"blocks.{i}.{name}"] = tensor
        params.update(self.head)
        return params

    def _check_batch(self, batch):
        error_check.error_check_dims("policy window states",
            (self.K, self.state_dim), batch.states.shape[1:])
        error_check.error_check_dims("policy window actions",
            (self.K, self.action_dim), batch.actions.shape[1:])

    def _embed(self, batch):
        self._check_batch(batch)
        B, K, d = len(batch), self.K, self.d
        e = self.embeddings
        timesteps = np.clip(batch.timesteps, 0, self.max_timestep - 1)
        t_emb = ad.embedding_lookup(e["emb_timestep.table"], timesteps)
        keep = np.broadcast_to(batch.mask[..., None], (B, K, d)).astype(np.float64)

        rtg_in = ad.Tensor(batch.rtgs[..., None] / self.rtg_scale)
        r_tok = rtg_in @ e["emb_rtg.weight"] + e["emb_rtg.bias"]
        s_tok = ad.Tensor(batch.states) @ e["emb_state.weight"] + e["emb_state.bias"]
        a_tok = ad.Tensor(batch.actions) @ e["emb_action.weight"] + e["emb_action.bias"]
        tokens = [ad.mul(tok + t_emb, keep) for tok in (r_tok, s_tok, a_tok)]

        seq = ad.reshape(ad.stack(tokens, axis=2), (B, 3 * K, d))
        return seq[:, :3 * K - 1, :]

    def interleave_embed(self, window):
        """ Token matrix of a ContextWindow, [(3K-1), d], or of a
            WindowBatch, [B, (3K-1), d].

        """
        if isinstance(window, ContextWindow):
            return self._embed(collate([window]))[0]
        return self._embed(window)

    def forward(self, window):
        """ Actions in [-1, 1] predicted at every state token:
            [K, action_dim] for a ContextWindow, [B, K, action_dim] for
            a WindowBatch.

        """
        single = isinstance(window, ContextWindow)
        batch = collate([window]) if single else window
        x = self._embed(batch)
        for block in self.blocks:
            x = block.forward(x)
        state_tokens = np.arange(self.K) * 3 + 1
        h = x[:, state_tokens, :]
        actions = ad.tanh(h @ self.head["head.weight"] + self.head["head.bias"])
        return actions[0] if single else actions

    def predict(self, window):
        """forward() as a numpy array, without recording anything."""
        with ad.no_grad():
            return self.forward(window).data.copy()

    def copy(self):
        """A deep copy with gradient tracking turned off."""
        clone = PolicyModel.__new__(PolicyModel)
        clone.__dict__.update({k: v for k, v in self.__dict__.items()
            if k not in ("embeddings", "blocks", "head")})
        clone.embeddings = {k: ad.Tensor(v.data) for k, v in self.embeddings.items()}
        clone.head = {k: ad.Tensor(v.data) for k, v in self.head.items()}
        clone.blocks = []
        for block in self.blocks:
            twin = ConvBlock.__new__(ConvBlock)
            twin.params = {k: ad.Tensor(v.data) for k, v in block.params.items()}
            clone.blocks.append(twin)
        return clone

    def to_dict(self):
        return {name: tensor.data.tolist() for name, tensor in self.parameters().items()}

    def load_params(self, values):
        """ Overwrite every parameter from a name -> nested list mapping."""
        params = self.parameters()
        missing = [name for name in params if name not in values]
        if missing:
            raise error_check.ConfigError(f"Policy parameters missing: {missing}")
        for name, tensor in params.items():
            array = np.array(values[name], dtype=np.float64)
            error_check.error_check_dims(f"policy parameter {name}",
                tensor.data.shape, array.shape)
            tensor.data = array


def bc_loss(model, batch):
    """ Mean over windows of the squared action error averaged over the
        valid positions and the action dimensions of each window.

    """
    if isinstance(batch, ContextWindow):
        batch = collate([batch])
    if len(batch) == 0:
        raise error_check.DatasetError("bc_loss: empty batch.")
    return masked_action_error(model.forward(batch), batch)


def masked_action_error(pred, batch):
    """ bc_loss from predictions [B, K, action_dim] already computed."""
    B, K, A = pred.data.shape
    valid = batch.mask.sum(axis=1).astype(np.float64)
    weights = batch.mask[..., None] / (valid[:, None, None] * A * B)
    weights = np.broadcast_to(weights, (B, K, A)).copy()
    diff = pred - ad.Tensor(batch.actions)
    return ad.sum(ad.mul(ad.mul(diff, diff), weights))
