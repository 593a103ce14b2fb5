from ..utils import config as cfg
import math
import numpy as np


def zero_grad(params):
    for p in params:
        p.grad = None


def global_grad_norm(params):
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float(np.sum(p.grad * p.grad))
    return math.sqrt(total)


def clip_grad_norm(params, max_norm):
    """ Rescale all gradients together so that their global L2 norm is
        at most max_norm. Returns the norm before clipping.

    """
    norm = global_grad_norm(params)
    if norm > max_norm:
        factor = max_norm / (norm + 1e-12)
        for p in params:
            if p.grad is not None:
                p.grad = p.grad * factor
    return norm


def adam_step(params, grads, lr, beta1, beta2, eps, step, first_moments,
    second_moments):
    """ One ADAM update with bias correction.

        INPUTS:

        :params: (list of Tensor) updated by assigning new data arrays
        :grads: (list of arrays or None) None counts as a zero gradient
        :lr: (float) learning rate
        :beta1, beta2: (float) moment decay rates
        :eps: (float) denominator offset
        :step: (int) 1-based step count used for bias correction
        :first_moments, second_moments: (lists of arrays) one per
            parameter, updated in place

    """
    correction1 = 1.0 - beta1**step
    correction2 = 1.0 - beta2**step
    for i, p in enumerate(params):
        g = grads[i]
        if g is None:
            g = np.zeros_like(p.data)
        first_moments[i] *= beta1
        first_moments[i] += (1.0 - beta1) * g
        second_moments[i] *= beta2
        second_moments[i] += (1.0 - beta2) * g * g
        m_hat = first_moments[i] / correction1
        v_hat = second_moments[i] / correction2
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    """ Holds the moment buffers and the step count for a list of
        parameters.

    """
    def __init__(self, params, lr, beta1=None, beta2=None, eps=None):
        self.params = list(params)
        self.lr = lr
        self.beta1 = cfg.adam_beta1 if beta1 is None else beta1
        self.beta2 = cfg.adam_beta2 if beta2 is None else beta2
        self.eps = cfg.adam_eps if eps is None else eps
        self.first_moments = [np.zeros_like(p.data) for p in self.params]
        self.second_moments = [np.zeros_like(p.data) for p in self.params]
        self.step_count = 0

    def zero_grad(self):
        zero_grad(self.params)

    def step(self):
        self.step_count += 1
        adam_step(self.params, [p.grad for p in self.params], self.lr,
            self.beta1, self.beta2, self.eps, self.step_count,
            self.first_moments, self.second_moments)
