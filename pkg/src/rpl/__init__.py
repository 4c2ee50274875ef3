"""Relationship-preserving dimensionality reduction with bound auditing.

Train a small projection network to preserve a chosen relationship matrix
(Gram, cosine, covariance, or rbf) of high-dimensional data, then audit
the perturbation-theoretic guarantees (sampled-error transfer, entry-wise
orthogonality, Weyl rank preservation, Davis-Kahan subspace angle) on the
trained embedding.
"""

from .guarantees import (
    AuditConfig,
    BoundReport,
    compute_epsilon,
    full_audit,
    orthogonality_audit,
    rank_audit,
    sample_epsilon_hat,
    serfling_bound,
    subspace_audit,
)
from .kernels import RelationshipConfig, entrywise_psd_check, lipschitz_constant, relationship_matrix
from .loss import LossConfig, build_mask, rpl_loss, rpl_loss_grad_y
from .network import MlpParams, backward, forward, init_params, load_checkpoint, save_checkpoint
from .retrieval import RetrievalReport, metrics_from_ranks, rank_matrix
from .trainer import TrainConfig, TrainingDiverged, TrainReport, sample_batches, train

__version__ = "0.1.0"

__all__ = [
    "AuditConfig",
    "BoundReport",
    "LossConfig",
    "MlpParams",
    "RelationshipConfig",
    "RetrievalReport",
    "TrainConfig",
    "TrainReport",
    "TrainingDiverged",
    "backward",
    "build_mask",
    "compute_epsilon",
    "entrywise_psd_check",
    "forward",
    "full_audit",
    "init_params",
    "lipschitz_constant",
    "load_checkpoint",
    "metrics_from_ranks",
    "orthogonality_audit",
    "rank_audit",
    "rank_matrix",
    "relationship_matrix",
    "rpl_loss",
    "rpl_loss_grad_y",
    "sample_batches",
    "sample_epsilon_hat",
    "save_checkpoint",
    "serfling_bound",
    "subspace_audit",
    "train",
]
