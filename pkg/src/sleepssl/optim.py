"""SGD with momentum and L2 regularization; warmup + cosine decay schedule."""
from __future__ import annotations

import math

import numpy as np

from .autodiff import Tensor


def lr_schedule(epoch: float, total_epochs: int, base_lr: float,
                warmup_epochs: int = 5) -> float:
    """Linear ramp 0 -> base_lr over the warmup, then cosine decay to 0."""
    if epoch <= warmup_epochs:
        if warmup_epochs == 0:
            return base_lr
        return base_lr * epoch / warmup_epochs
    if epoch >= total_epochs:
        return 0.0
    progress = (epoch - warmup_epochs) / (total_epochs - warmup_epochs)
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))


def sgd_momentum_step(
    params: dict[str, Tensor],
    velocity: dict[str, np.ndarray],
    lr: float,
    momentum: float = 0.9,
    l2: float = 1e-4,
) -> None:
    """In-place update: v <- momentum*v + (grad + l2*param); param <- param - lr*v.

    Parameters without a gradient this step are skipped.
    """
    for name, p in params.items():
        if p.grad is None:
            continue
        grad = p.grad + l2 * p.data
        v = velocity.get(name)
        v = grad if v is None else momentum * v + grad
        velocity[name] = v
        p.data = p.data - (lr * v).astype(p.dtype)
