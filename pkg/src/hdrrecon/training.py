"""Mini-batch training loop: forward, HDR loss, backward, ADAM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import TrainingPair
from .losses import LossConfig, blend_mask, hdr_loss
from .network import AdamState, Network, adam_step


@dataclass
class TrainResult:
    net: Network
    losses: list[float]


def make_batches(count: int, batch_size: int, steps: int, rng: np.random.Generator):
    """Yield `steps` index batches sampled with replacement."""
    for _ in range(steps):
        yield rng.integers(0, count, size=batch_size)


def train_step(net: Network, inputs: np.ndarray, targets: np.ndarray,
               alphas: np.ndarray, loss_config: LossConfig, adam: AdamState) -> float:
    """One optimization step on a prepared batch; returns the loss value."""
    net.zero_grad()
    y = net.forward(inputs, training=True)
    value, grad = hdr_loss(y, targets, alphas, loss_config)
    net.backward(grad)
    adam_step(net.parameters(), net.gradients(), adam)
    return value


def train(net: Network, dataset: list[TrainingPair], loss_config: LossConfig,
          steps: int, batch_size: int = 8, lr: float = 5e-5, seed: int = 0,
          stop_ratio: float | None = None, log_every: int = 0) -> TrainResult:
    """Train on a fixed dataset; deterministic given the seed.

    If stop_ratio is set, training stops early once the running loss drops to
    stop_ratio times the first step's loss.
    """
    if not dataset:
        raise ValueError("empty training dataset")
    inputs = np.stack([p.input.data for p in dataset]).astype(net.dtype)
    targets = np.stack([p.target.data for p in dataset]).astype(np.float64)
    alphas = blend_mask(inputs, loss_config.tau)
    adam = AdamState(lr=lr)
    rng = np.random.default_rng(seed)
    losses: list[float] = []
    for idx in make_batches(len(dataset), batch_size, steps, rng):
        value = train_step(net, inputs[idx], targets[idx], alphas[idx], loss_config, adam)
        losses.append(value)
        if log_every and len(losses) % log_every == 0:
            print(f"step {len(losses):6d}  loss {value:.6f}")
        if stop_ratio is not None and value <= stop_ratio * losses[0]:
            break
    return TrainResult(net=net, losses=losses)
