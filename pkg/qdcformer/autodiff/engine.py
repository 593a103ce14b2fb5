from ..utils import error_check
import contextlib
import itertools
import math
import threading
import numpy as np
from scipy.special import erf

__author__ = "qdcformer developers"


""" About engine.py

    Minimal reverse-mode automatic differentiation over numpy float64
    arrays.

    Every primitive below computes its forward value with numpy and,
    when any input requires a gradient, records a Node holding the
    inputs, the output and a closure mapping the output adjoint to the
    input adjoints. Nodes carry a global creation number. backward()
    collects every node reachable from the loss into a ComputationTape
    ordered by that number (creation order is a topological order) and
    walks it once in reverse.

    Tensors may carry leading batch dimensions. The only broadcasting
    supported is a trailing-shape operand in add/sub/mul (bias add,
    per-channel gains).

"""

_node_counter = itertools.count()
_grad_state = threading.local()


def is_grad_enabled():
    return getattr(_grad_state, "enabled", True)


@contextlib.contextmanager
def no_grad():
    """ Context in which no operation is recorded."""
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


class Node:
    __slots__ = ("seq", "op", "inputs", "output", "backward")

    def __init__(self, op, inputs, output, backward):
        self.seq = next(_node_counter)
        self.op = op
        self.inputs = inputs
        self.output = output
        self.backward = backward

    def __repr__(self):
        return f"Node(seq={self.seq}, op={self.op})"


class Tensor:
    """ A float64 array, an optional gradient and the node that made it."""

    def __init__(self, data, requires_grad=False):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._node = None

    @classmethod
    def _wrap(cls, array):
        """Take ownership of an array without copying it."""
        out = cls.__new__(cls)
        out.data = np.asarray(array, dtype=np.float64)
        out.requires_grad = False
        out.grad = None
        out._node = None
        return out

    @property
    def shape(self):
        return list(self.data.shape)

    @property
    def ndim(self):
        return self.data.ndim

    def item(self):
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        return self.data.copy()

    def detach(self):
        return Tensor._wrap(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __repr__(self):
        return (f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})")

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return index(self, key)


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _make(value, inputs, op, backward_fn):
    out = Tensor._wrap(value)
    if is_grad_enabled() and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out._node = Node(op, inputs, out, backward_fn)
    return out


def _unbroadcast(grad, shape):
    """Sum a gradient back down to the shape of a broadcast operand."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(op, a, b):
    sa, sb = a.data.shape, b.data.shape
    if sa == sb:
        return
    short, long = (sa, sb) if len(sa) <= len(sb) else (sb, sa)
    if len(short) == 0 or long[len(long) - len(short):] == short:
        return
    raise error_check.DimensionError(f"{op}: shapes {list(sa)} and {list(sb)} "
        "do not match.")


def _check_same(op, a, b):
    if a.data.shape != b.data.shape:
        raise error_check.DimensionError(f"{op}: shapes {a.shape} and {b.shape} "
            "do not match.")


############### ELEMENTWISE ###############

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("add", a, b)

    def backward_fn(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _make(a.data + b.data, (a, b), "add", backward_fn)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("sub", a, b)

    def backward_fn(g):
        return _unbroadcast(g, a.data.shape), -_unbroadcast(g, b.data.shape)

    return _make(a.data - b.data, (a, b), "sub", backward_fn)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("mul", a, b)

    def backward_fn(g):
        return (_unbroadcast(g * b.data, a.data.shape),
                _unbroadcast(g * a.data, b.data.shape))

    return _make(a.data * b.data, (a, b), "mul", backward_fn)


def scale(x, c):
    """Multiply by a constant."""
    x = as_tensor(x)
    c = float(c)
    return _make(x.data * c, (x,), "scale", lambda g: (g * c,))


def relu(x):
    x = as_tensor(x)
    positive = x.data > 0
    return _make(np.where(positive, x.data, 0.0), (x,), "relu",
                 lambda g: (g * positive,))


def gelu(x):
    """Exact GELU, x * Phi(x)."""
    x = as_tensor(x)
    cdf = 0.5 * (1.0 + erf(x.data / math.sqrt(2.0)))
    pdf = np.exp(-0.5 * x.data**2) / math.sqrt(2.0 * math.pi)
    return _make(x.data * cdf, (x,), "gelu",
                 lambda g: (g * (cdf + x.data * pdf),))


def tanh(x):
    x = as_tensor(x)
    y = np.tanh(x.data)
    return _make(y, (x,), "tanh", lambda g: (g * (1.0 - y * y),))


def min_elementwise(a, b):
    """ Elementwise minimum. On ties the gradient goes to a."""
    a, b = as_tensor(a), as_tensor(b)
    _check_same("min_elementwise", a, b)
    take_a = a.data <= b.data

    def backward_fn(g):
        return g * take_a, g * ~take_a

    return _make(np.where(take_a, a.data, b.data), (a, b), "min", backward_fn)


############### REDUCTIONS ###############

def sum(x, axis=None):
    x = as_tensor(x)
    shape = x.data.shape

    def backward_fn(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _make(np.sum(x.data, axis=axis), (x,), "sum", backward_fn)


def mean(x, axis=None):
    x = as_tensor(x)
    count = x.data.size if axis is None else x.data.shape[axis]
    return scale(sum(x, axis=axis), 1.0 / count)


def mse(a, b):
    """ Mean squared error over every entry, a scalar Tensor."""
    a, b = as_tensor(a), as_tensor(b)
    _check_same("mse", a, b)
    diff = a.data - b.data
    n = diff.size

    def backward_fn(g):
        ga = g * 2.0 * diff / n
        return ga, -ga

    return _make(np.mean(diff * diff), (a, b), "mse", backward_fn)


############### LINEAR ALGEBRA ###############

def matmul(a, b):
    """ [..., m, k] x [k, n] -> [..., m, n]"""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 1 or b.ndim != 2 or a.data.shape[-1] != b.data.shape[0]:
        raise error_check.DimensionError(f"matmul: inner dimensions of {a.shape} "
            f"and {b.shape} do not match.")
    k, n = b.data.shape

    def backward_fn(g):
        ga = g @ b.data.T
        gb = a.data.reshape(-1, k).T @ g.reshape(-1, n)
        return ga, gb

    return _make(a.data @ b.data, (a, b), "matmul", backward_fn)


def causal_conv1d(x, kernel, bias):
    """ Depthwise causal convolution along the second to last axis.

        x is [..., L, d], kernel is [w, d], bias is [d]. The input is
        left-padded with w-1 zero rows so that

            out[i][c] = sum_j kernel[j][c]*x_padded[i+j][c] + bias[c]

        and out[i] depends only on x rows <= i. kernel[w-1] is the tap
        on the current row.

    """
    x, kernel, bias = as_tensor(x), as_tensor(kernel), as_tensor(bias)
    if kernel.ndim != 2 or kernel.data.shape[0] < 1:
        raise error_check.ConfigError("causal_conv1d: window size must be >= 1, "
            f"kernel has shape {kernel.shape}.")
    w, d = kernel.data.shape
    if x.ndim < 2 or x.data.shape[-1] != d or bias.data.shape != (d,):
        raise error_check.DimensionError(f"causal_conv1d: input {x.shape}, kernel "
            f"{kernel.shape} and bias {bias.shape} do not agree.")
    L = x.data.shape[-2]
    pad = np.zeros(x.data.shape[:-2] + (w - 1, d))
    xp = np.concatenate([pad, x.data], axis=-2)
    out = np.broadcast_to(bias.data, x.data.shape).copy()
    for j in range(w):
        out += kernel.data[j] * xp[..., j:j + L, :]

    def backward_fn(g):
        gxp = np.zeros_like(xp)
        gk = np.zeros_like(kernel.data)
        for j in range(w):
            gxp[..., j:j + L, :] += kernel.data[j] * g
            gk[j] = (g * xp[..., j:j + L, :]).reshape(-1, d).sum(axis=0)
        gb = g.reshape(-1, d).sum(axis=0)
        return gxp[..., w - 1:, :], gk, gb

    return _make(out, (x, kernel, bias), "causal_conv1d", backward_fn)


def layer_norm(x, gain, shift, eps):
    """ Normalize each row over the last axis, then apply gain and shift."""
    x, gain, shift = as_tensor(x), as_tensor(gain), as_tensor(shift)
    d = x.data.shape[-1]
    if gain.data.shape != (d,) or shift.data.shape != (d,):
        raise error_check.DimensionError(f"layer_norm: input {x.shape} with gain "
            f"{gain.shape} and shift {shift.shape}.")
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv = 1.0 / np.sqrt((centered**2).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv

    def backward_fn(g):
        gxhat = g * gain.data
        gx = inv / d * (d * gxhat - gxhat.sum(axis=-1, keepdims=True)
                        - xhat * (gxhat * xhat).sum(axis=-1, keepdims=True))
        ggain = (g * xhat).reshape(-1, d).sum(axis=0)
        gshift = g.reshape(-1, d).sum(axis=0)
        return gx, ggain, gshift

    return _make(xhat * gain.data + shift.data, (x, gain, shift), "layer_norm",
                 backward_fn)


############### SHAPING ###############

def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    try:
        value = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise error_check.DimensionError("concat: shapes "
            f"{[t.shape for t in tensors]} do not agree along axis {axis}.")
    splits = np.cumsum(sizes)[:-1]

    def backward_fn(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(value, tuple(tensors), "concat", backward_fn)


def stack(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    try:
        value = np.stack([t.data for t in tensors], axis=axis)
    except ValueError:
        raise error_check.DimensionError(f"stack: shapes {[t.shape for t in tensors]} "
            "differ.")

    def backward_fn(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return _make(value, tuple(tensors), "stack", backward_fn)


def reshape(x, shape):
    x = as_tensor(x)
    original = x.data.shape
    return _make(x.data.reshape(shape), (x,), "reshape",
                 lambda g: (g.reshape(original),))


def _is_advanced(key):
    keys = key if isinstance(key, tuple) else (key,)
    return any(isinstance(k, (list, np.ndarray)) for k in keys)


def index(x, key):
    """ numpy indexing; the adjoint scatters back with np.add.at."""
    x = as_tensor(x)
    advanced = _is_advanced(key)

    def backward_fn(g):
        gx = np.zeros_like(x.data)
        if advanced:
            np.add.at(gx, key, g)
        else:
            gx[key] = g
        return (gx,)

    return _make(x.data[key], (x,), "index", backward_fn)


def embedding_lookup(table, indices):
    """ Rows of a [n, d] table for an integer index array of any shape."""
    table = as_tensor(table)
    indices = np.asarray(indices, dtype=np.int64)
    if table.ndim != 2:
        raise error_check.DimensionError("embedding_lookup: table must be 2-D, "
            f"got {table.shape}.")
    if indices.size and (indices.min() < 0 or indices.max() >= table.data.shape[0]):
        raise error_check.DimensionError("embedding_lookup: index out of range "
            f"for table {table.shape}.")

    def backward_fn(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, indices, g)
        return (gt,)

    return _make(table.data[indices], (table,), "embedding_lookup", backward_fn)


############### BACKWARD ###############

class ComputationTape:
    """ Nodes reachable from an output, in creation order."""

    def __init__(self, nodes):
        self.nodes = nodes

    @classmethod
    def from_output(cls, output):
        nodes = []
        seen = set()
        pending = [output]
        while pending:
            tensor = pending.pop()
            node = tensor._node
            if node is None or id(node) in seen:
                continue
            seen.add(id(node))
            nodes.append(node)
            pending.extend(node.inputs)
        nodes.sort(key=lambda n: n.seq)
        return cls(nodes)

    def __len__(self):
        return len(self.nodes)

    def backward(self, output, seed=None):
        """ Walk the tape once in reverse, accumulating into the .grad of
            every leaf that requires a gradient.

        """
        if seed is None:
            seed = np.ones_like(output.data)
        if output._node is None:
            if output.requires_grad:
                _accumulate(output, seed)
            return
        adjoints = {id(output): seed}
        for node in reversed(self.nodes):
            g = adjoints.pop(id(node.output), None)
            if g is None:
                continue
            for inp, gi in zip(node.inputs, node.backward(g)):
                if gi is None or not inp.requires_grad:
                    continue
                if inp._node is None:
                    _accumulate(inp, gi)
                elif id(inp) in adjoints:
                    adjoints[id(inp)] = adjoints[id(inp)] + gi
                else:
                    adjoints[id(inp)] = gi


def _accumulate(leaf, g):
    g = np.asarray(g, dtype=np.float64).reshape(leaf.data.shape)
    leaf.grad = g.copy() if leaf.grad is None else leaf.grad + g


def backward(loss):
    """ Accumulate d(loss)/d(leaf) into every leaf that requires a
        gradient. Repeated calls without zeroing add up.

    """
    if loss.data.size != 1:
        raise error_check.UsageError("backward: loss must be a scalar, got shape "
            f"{loss.shape}.")
    ComputationTape.from_output(loss).backward(loss)


def numerical_gradient(f, tensor, h=1e-5):
    """ Central finite differences of the scalar function f() with respect
        to every entry of tensor. tensor.data is perturbed in place and
        restored.

    """
    grad = np.zeros_like(tensor.data)
    for idx in np.ndindex(*tensor.data.shape):
        original = tensor.data[idx]
        tensor.data[idx] = original + h
        plus = float(f())
        tensor.data[idx] = original - h
        minus = float(f())
        tensor.data[idx] = original
        grad[idx] = (plus - minus) / (2.0 * h)
    return grad
