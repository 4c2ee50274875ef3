"""Relationship-preserving loss: discrepancy + mask + gradient.

The loss compares the relationship matrix of a high-dimensional batch
R = phi(X_i, X_j) with that of its embedding Rhat = phi(Y_i, Y_j):

    L = sum_ij w_ij * D(R_ij, Rhat_ij)

where D is one of mse / absolute / kl and w is a mask built from R alone
(so it is constant with respect to Y). The loss is reported as a sum over
all n^2 ordered entries; the trainer may rescale it.

The gradient with respect to Y is assembled in two stages: dL/dRhat per
discrepancy, then the chain rule through the kernel. That split lets the
trainer reuse relationship matrices it already computed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .kernels import COSINE_NORM_FLOOR, RelationshipConfig, relationship_matrix
from .linalg import as_matrix

DISCREPANCIES = ("mse", "absolute", "kl")
MASKINGS = ("none", "topk", "sigmoid", "linear", "gaussian")

KL_SHIFT = 1e-8


@dataclass(frozen=True)
class LossConfig:
    """Discrepancy choice plus masking strategy.

    ``include_diagonal=None`` resolves per kernel: True for dot and
    covariance (the diagonal carries norms / variances), False for cosine
    and rbf (the diagonal is constantly 1 and carries no signal).
    """

    discrepancy: str = "mse"
    masking: str = "none"
    top_k: int | None = None
    alpha: float | None = None
    include_diagonal: bool | None = None

    def __post_init__(self):
        if self.discrepancy not in DISCREPANCIES:
            raise ValueError(f"unknown discrepancy {self.discrepancy!r}; valid: {DISCREPANCIES}")
        if self.masking not in MASKINGS:
            raise ValueError(f"unknown masking {self.masking!r}; valid: {MASKINGS}")
        if self.masking == "topk":
            if self.top_k is None or self.top_k < 1:
                raise ValueError("topk masking requires top_k >= 1")
        if self.masking == "sigmoid":
            if self.alpha is None or not np.isfinite(self.alpha):
                raise ValueError("sigmoid masking requires a finite alpha")

    def resolved(self, rel_cfg: RelationshipConfig) -> "LossConfig":
        """Return a copy with include_diagonal resolved for the given kernel."""
        if self.include_diagonal is not None:
            return self
        return replace(self, include_diagonal=rel_cfg.kind in ("dot", "covariance"))


def build_mask(r_high, cfg: LossConfig) -> np.ndarray:
    """Weight matrix in [0, 1] built from the high-dimensional relationships.

    none     -> all ones.
    topk     -> 1 on the k entries of largest |R|, selected globally over
                the matrix and symmetrized: whenever (i, j) is selected,
                (j, i) is included too. Selection by absolute value keeps
                strong negative relationships.
    sigmoid  -> w_ij = 1 / (1 + exp(-alpha * R_ij)).
    linear   -> w_ij = |R_ij| / max |R|  (this package's convention).
    gaussian -> w_ij = exp(-(R_ij - mu)^2 / (2 s^2)) with mu, s the mean and
                standard deviation of the off-diagonal entries (this
                package's convention): typical-strength relationships get
                the most weight.

    With include_diagonal resolved to False the diagonal is zeroed for
    every strategy, and topk selects among off-diagonal entries only.
    """
    r = as_matrix(r_high, "r_high")
    n, c = r.shape
    if n != c:
        raise ValueError(f"mask requires a square relationship matrix, got {n}x{c}")
    include_diag = cfg.include_diagonal if cfg.include_diagonal is not None else True

    if cfg.masking == "none":
        w = np.ones_like(r)
    elif cfg.masking == "topk":
        eligible = np.ones_like(r, dtype=bool)
        if not include_diag:
            np.fill_diagonal(eligible, False)
        available = int(eligible.sum())
        if cfg.top_k > available:
            raise ValueError(f"top_k={cfg.top_k} exceeds the {available} available entries")
        flat_abs = np.abs(r).ravel()
        flat_ok = eligible.ravel()
        # stable global ranking: by |value| descending, flat index as tie-break
        order = np.lexsort((np.arange(flat_abs.size), -flat_abs))
        order = order[flat_ok[order]]
        w = np.zeros_like(r)
        w.ravel()[order[: cfg.top_k]] = 1.0
        w = np.maximum(w, w.T)
    elif cfg.masking == "sigmoid":
        w = 1.0 / (1.0 + np.exp(-cfg.alpha * r))
    elif cfg.masking == "linear":
        scale_src = np.abs(r).copy()
        if not include_diag:
            np.fill_diagonal(scale_src, 0.0)
        top = scale_src.max()
        w = np.abs(r) / top if top > 0 else np.zeros_like(r)
    else:  # gaussian
        off = ~np.eye(n, dtype=bool)
        mu = float(r[off].mean())
        s = float(r[off].std())
        if s < 1e-300:
            w = np.ones_like(r)
        else:
            w = np.exp(-((r - mu) ** 2) / (2.0 * s * s))
    if not include_diag:
        np.fill_diagonal(w, 0.0)
    return w


def mask_entry_count(mask) -> int:
    """Number of entries with strictly positive weight."""
    return int(np.count_nonzero(np.asarray(mask) > 0))


def _normalized_distribution(r, name: str) -> np.ndarray:
    """Shift a matrix to positivity and normalize it to a distribution.

    The shift is (global minimum + KL_SHIFT), so every entry ends up
    strictly positive; the result sums to 1 over all n^2 entries.
    """
    a = r - r.min() + KL_SHIFT
    total = a.sum()
    if not np.isfinite(total) or total <= 0:
        raise ValueError(f"{name} cannot be normalized into a distribution (sum {total!r})")
    return a / total


def rpl_loss(r_high, r_low, mask, cfg: LossConfig) -> float:
    """Masked discrepancy between two relationship matrices, summed over entries.

    mse and absolute are symmetric in their arguments and nonnegative.
    kl compares normalized matrices P (from r_high) and Q (from r_low) as
    sum w * P * log(P / Q); it is asymmetric, and a masked partial sum can
    be negative even though the full divergence cannot.
    """
    rh = as_matrix(r_high, "r_high")
    rl = as_matrix(r_low, "r_low")
    w = as_matrix(mask, "mask")
    if not (rh.shape == rl.shape == w.shape):
        raise ValueError(f"shape mismatch: {rh.shape}, {rl.shape}, {w.shape}")
    if cfg.discrepancy == "mse":
        return float(np.sum(w * (rh - rl) ** 2))
    if cfg.discrepancy == "absolute":
        return float(np.sum(w * np.abs(rh - rl)))
    p = _normalized_distribution(rh, "r_high")
    q = _normalized_distribution(rl, "r_low")
    return float(np.sum(w * p * np.log(p / q)))


def discrepancy_grad(r_high, r_low, mask, cfg: LossConfig) -> np.ndarray:
    """dL/dRhat for the summed masked discrepancy.

    absolute uses subgradient 0 at exact ties, which keeps the optimizer
    stationary at a perfect fit. kl differentiates through the shift-and-
    normalize construction, including the (subgradient) dependence of the
    global minimum on its first attaining entry.
    """
    rh = as_matrix(r_high, "r_high")
    rl = as_matrix(r_low, "r_low")
    w = as_matrix(mask, "mask")
    if cfg.discrepancy == "mse":
        return 2.0 * w * (rl - rh)
    if cfg.discrepancy == "absolute":
        return w * np.sign(rl - rh)
    p = _normalized_distribution(rh, "r_high")
    a = rl - rl.min() + KL_SHIFT
    total = a.sum()
    if not np.isfinite(total) or total <= 0:
        raise ValueError(f"r_low cannot be normalized into a distribution (sum {total!r})")
    q = a / total
    g_q = -w * p / q
    tau = float(np.sum(g_q * q))
    g_a = (g_q - tau) / total
    grad = g_a.copy()
    argmin = np.unravel_index(np.argmin(rl), rl.shape)
    grad[argmin] -= g_a.sum()
    return grad


def chain_grad_to_embedding(
    grad_r: np.ndarray,
    y: np.ndarray,
    rel_cfg: RelationshipConfig,
    r_low: np.ndarray | None = None,
) -> np.ndarray:
    """Chain dL/dRhat through Rhat_ij = phi(Y_i, Y_j) to get dL/dY.

    Because every entry (i, j) and (j, i) appears in the loss, the
    effective per-pair coefficient is grad_r + grad_r.T. ``r_low`` is the
    precomputed relationship matrix of y, required for the rbf kernel.
    """
    g = as_matrix(grad_r, "grad_r")
    ym = as_matrix(y, "y")
    s = g + g.T
    if rel_cfg.kind == "dot":
        return s @ ym
    if rel_cfg.kind == "covariance":
        centered = ym - ym.mean(axis=0)
        out = s @ centered
        return out - out.mean(axis=0)
    if rel_cfg.kind == "cosine":
        norms = np.linalg.norm(ym, axis=1)
        bad = np.flatnonzero(norms < COSINE_NORM_FLOOR)
        if bad.size:
            raise ValueError(f"cosine gradient undefined: row {bad[0]} has near-zero norm")
        unit = ym / norms[:, None]
        cos = unit @ unit.T
        s0 = s.copy()
        np.fill_diagonal(s0, 0.0)  # diagonal cosine is constant 1
        row_coeff = np.sum(s0 * cos, axis=1)
        return (s0 @ unit - row_coeff[:, None] * unit) / norms[:, None]
    # rbf
    if r_low is None:
        r_low = relationship_matrix(ym, rel_cfg)
    t = -2.0 * rel_cfg.gamma * (s * r_low)
    return t.sum(axis=1)[:, None] * ym - t @ ym


def rpl_loss_grad_y(x_b, y_b, mask, rel_cfg: RelationshipConfig, loss_cfg: LossConfig) -> np.ndarray:
    """dL/dY for the masked relationship loss between batches x_b and y_b."""
    xm = as_matrix(x_b, "x_b")
    ym = as_matrix(y_b, "y_b")
    if xm.shape[0] != ym.shape[0]:
        raise ValueError(f"batch sizes differ: {xm.shape[0]} vs {ym.shape[0]}")
    r_high = relationship_matrix(xm, rel_cfg)
    r_low = relationship_matrix(ym, rel_cfg)
    g = discrepancy_grad(r_high, r_low, mask, loss_cfg)
    return chain_grad_to_embedding(g, ym, rel_cfg, r_low=r_low)
