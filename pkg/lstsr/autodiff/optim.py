import numpy as np

from pydantic import BaseModel, Field, model_validator
from typing import List, Optional, Sequence
from lstsr.autodiff.tensor import Tensor
from lstsr.utils.errors import ShapeError


class AdamState(BaseModel):
    """
    Adam optimizer state.

    Attributes:
        lr (float): Learning rate.
        beta1 (float): First-moment decay. Defaults to 0.9.
        beta2 (float): Second-moment decay. Defaults to 0.999.
        eps (float): Denominator stabilizer. Defaults to 1e-8.
        step (int): Number of updates applied so far.
        m (List[np.ndarray]): First moments, shaped like their parameters.
        v (List[np.ndarray]): Second moments, shaped like their parameters.
    """
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: List[np.ndarray] = Field(default_factory=list)
    v: List[np.ndarray] = Field(default_factory=list)

    class Config:
        arbitrary_types_allowed = True

    @model_validator(mode='after')
    def _check_invariants(self) -> 'AdamState':
        if self.lr <= 0 or self.eps <= 0:
            raise ValueError('Adam lr and eps must be > 0')
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError('Adam betas must lie in [0, 1)')
        if self.step < 0:
            raise ValueError('Adam step must be >= 0')
        return self

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], **kwargs) -> 'AdamState':
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params], **kwargs)


def adam_step(params: Sequence[np.ndarray], grads: Sequence[Optional[np.ndarray]], state: AdamState) -> None:
    """
    One bias-corrected Adam update, applied to `params` in place.

    Moments are allocated on the first call. A `None` gradient counts as zero.

    Raises:
        ShapeError: If parameter, gradient and moment shapes disagree.
    """
    if len(params) != len(grads):
        raise ShapeError(f'got {len(grads)} gradients for {len(params)} parameters')
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    if len(state.m) != len(params):
        raise ShapeError(f'optimizer state tracks {len(state.m)} parameters, got {len(params)}')

    state.step += 1
    correction1 = 1 - state.beta1 ** state.step
    correction2 = 1 - state.beta2 ** state.step
    for param, grad, m, v in zip(params, grads, state.m, state.v):
        if grad is None:
            grad = np.zeros_like(param)
        if not (param.shape == grad.shape == m.shape):
            raise ShapeError(f'parameter {param.shape}, gradient {grad.shape} and moment {m.shape} differ')
        m *= state.beta1
        m += (1 - state.beta1) * grad
        v *= state.beta2
        v += (1 - state.beta2) * grad * grad
        update = state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        param -= update.astype(param.dtype, copy=False)


class Adam:
    """Adam over a fixed list of parameter tensors."""

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.state = AdamState.for_params([p.data for p in self.params],
                                          lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    @property
    def lr(self) -> float:
        return self.state.lr

    @lr.setter
    def lr(self, value: float) -> None:
        if value <= 0:
            raise ValueError(f'learning rate must be > 0, got {value}')
        self.state.lr = value

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        adam_step([p.data for p in self.params], [p.grad for p in self.params], self.state)
