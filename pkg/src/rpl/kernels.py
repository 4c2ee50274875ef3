"""Relationship kernels: pairwise functions and their sensitivity constants.

A relationship matrix holds phi(X_i, X_j) for every pair of rows of X.
Four kernels are supported:

* ``dot``        -- X_i . X_j, the Gram matrix.
* ``cosine``     -- (X_i . X_j) / (|X_i| |X_j|), angles only.
* ``covariance`` -- dot product after subtracting the column-mean row of X.
* ``rbf``        -- exp(-gamma |X_i - X_j|^2), entries in (0, 1].

Each kernel has a conservative Lipschitz constant on a norm-bounded
domain, used by the bound auditor to relate embedding perturbations to
relationship perturbations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .linalg import as_matrix, sym_eig

KINDS = ("dot", "cosine", "covariance", "rbf")

COSINE_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class RelationshipConfig:
    """Choice of relationship kernel and its parameters.

    ``gamma`` is the rbf width and must be present exactly for ``rbf``.
    ``norm_upper`` bounds row norms from above (dot/covariance constant);
    ``norm_lower`` bounds them away from zero (cosine constant). Both may
    be left unset and filled later from observed data norms.
    """

    kind: str = "dot"
    gamma: float | None = None
    norm_upper: float | None = None
    norm_lower: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown relationship kind {self.kind!r}; valid: {KINDS}")
        if self.kind == "rbf":
            if self.gamma is None or not self.gamma > 0:
                raise ValueError("rbf kernel requires gamma > 0")
        elif self.gamma is not None:
            raise ValueError(f"gamma is only meaningful for the rbf kernel, not {self.kind!r}")
        if self.norm_lower is not None and not self.norm_lower > 0:
            raise ValueError("norm_lower must be positive when present")
        if self.norm_upper is not None and not self.norm_upper > 0:
            raise ValueError("norm_upper must be positive when present")


def relationship_matrix(x, cfg: RelationshipConfig) -> np.ndarray:
    """n x n symmetric matrix of pairwise kernel values over the rows of x."""
    m = as_matrix(x, "x")
    n = m.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 rows to form a relationship matrix, got {n}")
    if cfg.kind == "dot":
        r = m @ m.T
    elif cfg.kind == "covariance":
        centered = m - m.mean(axis=0)
        r = centered @ centered.T
    elif cfg.kind == "cosine":
        norms = np.linalg.norm(m, axis=1)
        bad = np.flatnonzero(norms < COSINE_NORM_FLOOR)
        if bad.size:
            raise ValueError(f"cosine kernel undefined: row {bad[0]} has norm {norms[bad[0]]:.3e}")
        unit = m / norms[:, None]
        r = unit @ unit.T
    else:  # rbf
        sq = np.sum(m * m, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (m @ m.T)
        np.fill_diagonal(d2, 0.0)
        np.clip(d2, 0.0, None, out=d2)
        r = np.exp(-cfg.gamma * d2)
    return 0.5 * (r + r.T)


def cross_relationship(a, b, cfg: RelationshipConfig) -> np.ndarray:
    """Kernel values between rows of a (queries) and rows of b (gallery).

    Covariance centers both sides with the gallery mean, treating the
    gallery as the population whose statistics are known.
    """
    ma = as_matrix(a, "a")
    mb = as_matrix(b, "b")
    if ma.shape[1] != mb.shape[1]:
        raise ValueError(f"column counts differ: {ma.shape[1]} vs {mb.shape[1]}")
    if cfg.kind == "dot":
        return ma @ mb.T
    if cfg.kind == "covariance":
        mean = mb.mean(axis=0)
        return (ma - mean) @ (mb - mean).T
    if cfg.kind == "cosine":
        na = np.linalg.norm(ma, axis=1)
        nb = np.linalg.norm(mb, axis=1)
        for norms, label in ((na, "query"), (nb, "gallery")):
            bad = np.flatnonzero(norms < COSINE_NORM_FLOOR)
            if bad.size:
                raise ValueError(f"cosine kernel undefined: {label} row {bad[0]} has near-zero norm")
        return (ma / na[:, None]) @ (mb / nb[:, None]).T
    sq_a = np.sum(ma * ma, axis=1)
    sq_b = np.sum(mb * mb, axis=1)
    d2 = sq_a[:, None] + sq_b[None, :] - 2.0 * (ma @ mb.T)
    np.clip(d2, 0.0, None, out=d2)
    return np.exp(-cfg.gamma * d2)


def lipschitz_constant(cfg: RelationshipConfig) -> float:
    """Upper bound on |phi(u + h, v) - phi(u, v)| / |h| over the bounded domain.

    dot        -> norm_upper                 (row norms <= norm_upper)
    covariance -> norm_upper                 (dot product on centered rows)
    cosine     -> 2 / norm_lower             (row norms >= norm_lower > 0)
    rbf        -> sqrt(2 * gamma / e)        (global maximal slope)

    The covariance constant reuses the dot-product bound on centered data;
    norm_upper must then bound the centered row norms.
    """
    if cfg.kind in ("dot", "covariance"):
        if cfg.norm_upper is None:
            raise ValueError(f"{cfg.kind} Lipschitz constant requires norm_upper")
        return float(cfg.norm_upper)
    if cfg.kind == "cosine":
        if cfg.norm_lower is None:
            raise ValueError("cosine Lipschitz constant requires norm_lower")
        return 2.0 / float(cfg.norm_lower)
    return math.sqrt(2.0 * cfg.gamma / math.e)


def with_norm_bounds_from_data(cfg: RelationshipConfig, x) -> RelationshipConfig:
    """Fill absent norm bounds with the observed row norms of x.

    Uses the max row norm for norm_upper and the min for norm_lower: the
    tightest constants that are still valid for this dataset. Covariance
    measures the centered rows. Explicitly configured bounds win.
    """
    m = as_matrix(x, "x")
    if cfg.kind == "covariance":
        m = m - m.mean(axis=0)
    norms = np.linalg.norm(m, axis=1)
    out = cfg
    if out.norm_upper is None and norms.max() > 0:
        out = replace(out, norm_upper=float(norms.max()))
    if out.norm_lower is None and norms.min() > 0:
        out = replace(out, norm_lower=float(norms.min()))
    return out


def entrywise_psd_check(r, tol: float = 1e-10) -> bool:
    """True iff the smallest eigenvalue is >= -tol times the largest.

    Gates the kernel-extension audits, which only hold for positive
    semidefinite relationship matrices.
    """
    evals = sym_eig(r).eigenvalues
    return bool(evals[-1] >= -tol * evals[0])
