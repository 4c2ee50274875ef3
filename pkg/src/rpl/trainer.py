"""Mini-batch training loop for the relationship-preserving projection.

Per batch: compute both relationship matrices, build the mask from the
high-dimensional one, evaluate the masked discrepancy, and push its
gradient through the network. Everything is seeded and single-threaded,
so a (seed, config, data) triple reproduces the loss trajectory bitwise.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .kernels import RelationshipConfig, relationship_matrix
from .linalg import as_matrix
from .loss import LossConfig, build_mask, chain_grad_to_embedding, discrepancy_grad, mask_entry_count, rpl_loss
from .network import MlpParams, backward, forward

OPTIMIZERS = ("adam", "sgd")
LOSS_SCALES = ("mean", "sum")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 128
    max_epochs: int = 500
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    shuffle: bool = True
    loss_scale: str = "mean"
    early_stop_tol: float | None = None

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 (a single row has no pair relationships)")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}; valid: {OPTIMIZERS}")
        if self.loss_scale not in LOSS_SCALES:
            raise ValueError(f"unknown loss_scale {self.loss_scale!r}; valid: {LOSS_SCALES}")
        if self.early_stop_tol is not None and self.early_stop_tol < 0:
            raise ValueError("early_stop_tol must be nonnegative")


@dataclass
class TrainReport:
    """Outcome of one training run.

    ``pairs_observed`` accumulates batch_size^2 over every processed batch
    (pairs re-observed in later epochs count again), the quantity that
    drives the sampled-error transfer bound. ``final_batch_epsilon_hats``
    holds per-batch squared Frobenius relationship errors of the last
    completed epoch. ``wall_time`` is informational and deliberately kept
    out of serialized reports so reruns stay byte-identical.
    """

    epoch_losses: list[float] = field(default_factory=list)
    final_batch_epsilon_hats: list[float] = field(default_factory=list)
    pairs_observed: int = 0
    wall_time: float = 0.0
    final_params: MlpParams | None = None
    stopped_early: bool = False


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries the report up to the last finite epoch."""

    def __init__(self, message: str, report: TrainReport):
        super().__init__(message)
        self.report = report


def sample_batches(n: int, b: int, seed: int, shuffle: bool) -> list[np.ndarray]:
    """Partition [0, n) into ceil(n/b) index batches for one epoch.

    Batches are full size except possibly the last; with shuffle the
    permutation is drawn deterministically from the seed.
    """
    if b > n:
        raise ValueError(f"batch size {b} exceeds dataset size {n}")
    idx = np.arange(n)
    if shuffle:
        idx = np.random.default_rng(seed).permutation(n)
    return [idx[i : i + b] for i in range(0, n, b)]


class _Optimizer:
    def __init__(self, cfg: TrainConfig, params: MlpParams):
        self.cfg = cfg
        self.t = 0
        if cfg.optimizer == "adam":
            self.m_w = [np.zeros_like(w) for w in params.weights]
            self.v_w = [np.zeros_like(w) for w in params.weights]
            self.m_b = [np.zeros_like(b) for b in params.biases]
            self.v_b = [np.zeros_like(b) for b in params.biases]

    def step(self, params: MlpParams, grad_w, grad_b):
        lr = self.cfg.learning_rate
        if self.cfg.optimizer == "sgd":
            for w, gw in zip(params.weights, grad_w):
                w -= lr * gw
            for b, gb in zip(params.biases, grad_b):
                b -= lr * gb
            return
        self.t += 1
        correction1 = 1.0 - ADAM_BETA1**self.t
        correction2 = 1.0 - ADAM_BETA2**self.t
        for w, gw, m, v in zip(params.weights, grad_w, self.m_w, self.v_w):
            m += (1.0 - ADAM_BETA1) * (gw - m)
            v += (1.0 - ADAM_BETA2) * (gw * gw - v)
            w -= lr * (m / correction1) / (np.sqrt(v / correction2) + ADAM_EPS)
        for b, gb, m, v in zip(params.biases, grad_b, self.m_b, self.v_b):
            m += (1.0 - ADAM_BETA1) * (gb - m)
            v += (1.0 - ADAM_BETA2) * (gb * gb - v)
            b -= lr * (m / correction1) / (np.sqrt(v / correction2) + ADAM_EPS)


def train(
    x,
    target_dim: int,
    rel_cfg: RelationshipConfig,
    loss_cfg: LossConfig,
    train_cfg: TrainConfig,
    params_init: MlpParams,
) -> tuple[MlpParams, TrainReport]:
    """Run the mini-batch loop and return final parameters plus a report.

    The caller's params_init is not mutated. Raises TrainingDiverged (with
    the partial report attached) if the loss stops being finite.
    """
    xm = as_matrix(x, "x")
    n = xm.shape[0]
    if target_dim < 1:
        raise ValueError("target_dim must be >= 1")
    if params_init.input_dim != xm.shape[1]:
        raise ValueError(
            f"network input dim {params_init.input_dim} != data dim {xm.shape[1]}"
        )
    if params_init.output_dim != target_dim:
        raise ValueError(
            f"network output dim {params_init.output_dim} != target_dim {target_dim}"
        )
    if train_cfg.batch_size > n:
        raise ValueError(f"batch_size {train_cfg.batch_size} exceeds n={n}")
    loss_cfg = loss_cfg.resolved(rel_cfg)
    params = params_init.copy()
    optimizer = _Optimizer(train_cfg, params)
    report = TrainReport(final_params=params)
    # one sub-seed per epoch so the batch order is reproducible epoch by epoch
    epoch_seeds = np.random.SeedSequence(train_cfg.seed).generate_state(train_cfg.max_epochs)

    started = time.perf_counter()
    for epoch in range(train_cfg.max_epochs):
        batches = sample_batches(n, train_cfg.batch_size, int(epoch_seeds[epoch]), train_cfg.shuffle)
        batch_losses = []
        batch_eps_hats = []
        for batch_idx in batches:
            xb = xm[batch_idx]
            yb, trace = forward(params, xb)
            if not np.all(np.isfinite(yb)):
                report.wall_time = time.perf_counter() - started
                raise TrainingDiverged(
                    f"embedding became non-finite in epoch {epoch + 1}", report
                )
            r_high = relationship_matrix(xb, rel_cfg)
            with np.errstate(over="ignore"):
                r_low = relationship_matrix(yb, rel_cfg)
            if not np.all(np.isfinite(r_low)):
                report.wall_time = time.perf_counter() - started
                raise TrainingDiverged(
                    f"relationships became non-finite in epoch {epoch + 1}", report
                )
            mask = build_mask(r_high, loss_cfg)
            scale = 1.0
            if train_cfg.loss_scale == "mean":
                scale = 1.0 / max(mask_entry_count(mask), 1)
            loss_value = scale * rpl_loss(r_high, r_low, mask, loss_cfg)
            if not np.isfinite(loss_value):
                report.wall_time = time.perf_counter() - started
                raise TrainingDiverged(
                    f"loss became non-finite in epoch {epoch + 1}", report
                )
            grad_r = scale * discrepancy_grad(r_high, r_low, mask, loss_cfg)
            grad_y = chain_grad_to_embedding(grad_r, yb, rel_cfg, r_low=r_low)
            grad_w, grad_b = backward(params, trace, grad_y)
            optimizer.step(params, grad_w, grad_b)
            batch_losses.append(loss_value)
            batch_eps_hats.append(float(np.sum((r_high - r_low) ** 2)))
            report.pairs_observed += int(len(batch_idx)) ** 2
        if train_cfg.loss_scale == "mean":
            epoch_loss = float(np.mean(batch_losses))
        else:
            epoch_loss = float(np.sum(batch_losses))
        report.epoch_losses.append(epoch_loss)
        report.final_batch_epsilon_hats = batch_eps_hats
        if (
            train_cfg.early_stop_tol is not None
            and len(report.epoch_losses) >= 2
            and abs(report.epoch_losses[-1] - report.epoch_losses[-2]) < train_cfg.early_stop_tol
        ):
            report.stopped_early = True
            break
    report.wall_time = time.perf_counter() - started
    report.final_params = params
    return params, report
