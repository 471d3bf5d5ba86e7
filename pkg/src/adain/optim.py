"""Adam optimizer with explicit, serializable state."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError


@dataclass
class AdamState:
    """Per-parameter moment buffers plus hyperparameters.

    Defaults: lr=1e-4, beta1=0.9, beta2=0.999, eps_opt=1e-8.
    """

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps_opt: float = 1e-8
    step_count: int = 0
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)

    def __post_init__(self):
        if self.lr <= 0 or self.eps_opt <= 0:
            raise ConfigError(f"lr and eps_opt must be positive, got lr={self.lr}, eps_opt={self.eps_opt}")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError(f"betas must lie in (0,1), got {self.beta1}, {self.beta2}")
        if self.step_count < 0:
            raise ConfigError("step_count must be >= 0")


def adam_step(params, grads, state):
    """One bias-corrected Adam update, in place on ``params``.

    ``params`` is a list of Tensors, ``grads`` a matching list of arrays
    (pass None to read each param's .grad). Deterministic: identical
    inputs give bit-identical results.
    """
    if grads is None:
        grads = [p.grad for p in params]
    if len(grads) != len(params):
        raise DimensionError(f"{len(params)} params but {len(grads)} grads")
    if not state.first_moment:
        state.first_moment = [np.zeros_like(p.data) for p in params]
        state.second_moment = [np.zeros_like(p.data) for p in params]
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if g is None:
            raise DimensionError("missing gradient for a parameter")
        if g.shape != p.data.shape or m.shape != p.data.shape:
            raise DimensionError(f"grad/moment shape {g.shape} does not match param {p.data.shape}")

    state.step_count += 1
    t = state.step_count
    correct1 = 1.0 - state.beta1**t
    correct2 = 1.0 - state.beta2**t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        m_hat = m / correct1
        v_hat = v / correct2
        p.data = p.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps_opt)
    return params, state


class Adam:
    """Convenience wrapper owning an AdamState for a fixed param list."""

    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps_opt=1e-8):
        self.params = list(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps_opt=eps_opt)

    def step(self):
        adam_step(self.params, None, self.state)

    def zero_grad(self):
        for p in self.params:
            p.grad = None
