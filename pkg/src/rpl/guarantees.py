"""Numerical audits of the perturbation bounds on a trained embedding.

Let Delta = R(X) - Rhat(Y) and epsilon = |Delta|_F^2. The audited claims:

* Sampled-error transfer (Serfling's inequality for sampling without
  replacement): with probability 1 - delta over a uniform sample S of m
  entry positions, epsilon <= (n^2/m) eps_hat + M^2 n^2 sqrt(2 log(2/delta)/m).
* Entry-wise orthogonality: if X_i . X_j = 0 then |Y_i . Y_j| <= sqrt(eps).
* Weyl displacement: eigenvalues of the two relationship matrices differ
  by at most |Delta|_2 <= sqrt(eps), entry by entry in sorted order.
* Rank preservation: with r = rank(X) and sigma_r its smallest nonzero
  singular value, eps < sigma_r^4 implies the r-th largest eigenvalue of
  G_Y stays >= sigma_r^2 - sqrt(eps) > 0 and the rank of Y is preserved.
* Davis-Kahan angle: under the same hypothesis the largest principal
  angle between the leading rank-r eigenspaces obeys
  sin Theta <= sqrt(eps) / sigma_r^2.

The entry-wise, Weyl, rank and angle checks are theorem-level: a failure
on any input signals an implementation bug, not a property of the data,
so the verdicts include only a float round-off allowance. The Serfling
check is probabilistic and reported as covered / not covered.

For non-dot kernels the rank and angle audits extend to any positive
semidefinite relationship matrix, with sigma_r^2 replaced by the smallest
nonzero eigenvalue of R(X); positive semidefiniteness is gated first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import (
    RelationshipConfig,
    lipschitz_constant,
    relationship_matrix,
    with_norm_bounds_from_data,
)
from .linalg import (
    SpectrumResult,
    as_matrix,
    largest_principal_angle_sine,
    numeric_rank,
    singular_values,
    sym_eig,
)

# relative slack granted to theorem verdicts: the statements are exact in
# real arithmetic, but eigenvalues and norms carry LAPACK round-off
VERDICT_REL_SLACK = 1e-9
VERDICT_ABS_SLACK = 1e-12


def _holds(value: float, bound: float) -> bool:
    return value <= bound + VERDICT_REL_SLACK * abs(bound) + VERDICT_ABS_SLACK


@dataclass(frozen=True)
class AuditConfig:
    """Settings for a full bound audit.

    ``m`` is the number of sampled entry positions for the transfer bound
    (None picks min(1024, n^2); values above n^2 are clamped down);
    ``m_bound`` overrides the entry bound M, which otherwise defaults to
    the observed max |Delta_ij| (set it explicitly for audits that must
    not peek at Delta).
    """

    m: int | None = None
    delta: float = 0.05
    seed: int = 0
    ortho_tol: float = 1e-10
    rank_tol: float = 1e-8
    psd_tol: float = 1e-10
    eigengap_tol: float = 1e-10
    m_bound: float | None = None

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.m is not None and self.m < 1:
            raise ValueError("m must be >= 1")
        for name in ("ortho_tol", "rank_tol", "psd_tol", "eigengap_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.m_bound is not None and self.m_bound < 0:
            raise ValueError("m_bound must be nonnegative")


def compute_epsilon(r_high, r_low) -> float:
    """Squared Frobenius norm of the relationship difference."""
    rh = as_matrix(r_high, "r_high")
    rl = as_matrix(r_low, "r_low")
    if rh.shape != rl.shape:
        raise ValueError(f"shape mismatch: {rh.shape} vs {rl.shape}")
    diff = rh - rl
    return float(np.sum(diff * diff))


def serfling_bound(epsilon_hat: float, n: int, m: int, M: float, delta: float) -> float:
    """Right-hand side of the sampled-error transfer inequality.

    (n^2/m) * eps_hat + M^2 * n^2 * sqrt(2 log(2/delta) / m), valid with
    probability 1 - delta over a uniform without-replacement sample of m
    of the n^2 entry positions, given |Delta_ij| <= M.
    """
    if not 1 <= m <= n * n:
        raise ValueError(f"m must lie in [1, n^2] = [1, {n * n}], got {m}")
    if M < 0:
        raise ValueError("M must be nonnegative")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if epsilon_hat < 0:
        raise ValueError("epsilon_hat must be nonnegative")
    n_sq = float(n * n)
    return (n_sq / m) * epsilon_hat + M * M * n_sq * math.sqrt(2.0 * math.log(2.0 / delta) / m)


def sample_epsilon_hat(delta_matrix, m: int, seed: int = 0) -> tuple[float, np.ndarray]:
    """Draw m entry positions uniformly without replacement; sum Delta_ij^2.

    Returns (eps_hat, pairs) where pairs is an (m, 2) array of (i, j)
    indices. With m = n^2 the estimate recovers epsilon exactly.
    """
    d = as_matrix(delta_matrix, "delta_matrix")
    n = d.shape[0]
    if d.shape[1] != n:
        raise ValueError(f"delta_matrix must be square, got {d.shape}")
    if not 1 <= m <= n * n:
        raise ValueError(f"m must lie in [1, n^2] = [1, {n * n}], got {m}")
    rng = np.random.default_rng(seed)
    flat = rng.choice(n * n, size=m, replace=False)
    eps_hat = float(np.sum(d.ravel()[flat] ** 2))
    pairs = np.column_stack(np.divmod(flat, n))
    return eps_hat, pairs


@dataclass
class OrthogonalityAudit:
    """Entry-wise orthogonality transfer over X-orthogonal row pairs."""

    pairs: list[tuple[int, int, float, bool]] = field(default_factory=list)
    n_pairs: int = 0
    n_violations: int = 0
    worst: float = 0.0
    threshold: float = 0.0
    passed: bool = True


def orthogonality_audit(x, y, epsilon: float, ortho_tol: float = 1e-10) -> OrthogonalityAudit:
    """Check |Y_i . Y_j| <= sqrt(eps) + ortho_tol for X-orthogonal pairs.

    Pairs (i <= j) qualify when |X_i . X_j| <= ortho_tol; the same
    tolerance is added on the right so float-level "zero" dot products in
    X do not produce spurious violations.
    """
    xm = as_matrix(x, "x")
    ym = as_matrix(y, "y")
    if xm.shape[0] != ym.shape[0]:
        raise ValueError(f"row counts differ: {xm.shape[0]} vs {ym.shape[0]}")
    g_x = xm @ xm.T
    g_y = ym @ ym.T
    n = xm.shape[0]
    iu, ju = np.triu_indices(n)
    sel = np.abs(g_x[iu, ju]) <= ortho_tol
    threshold = math.sqrt(max(epsilon, 0.0)) * (1.0 + VERDICT_REL_SLACK) + ortho_tol
    audit = OrthogonalityAudit(threshold=threshold)
    for i, j in zip(iu[sel], ju[sel]):
        value = abs(float(g_y[i, j]))
        ok = value <= threshold
        audit.pairs.append((int(i), int(j), value, ok))
        audit.n_pairs += 1
        audit.worst = max(audit.worst, value)
        if not ok:
            audit.n_violations += 1
    audit.passed = audit.n_violations == 0
    return audit


@dataclass
class WeylAudit:
    """Sorted-eigenvalue displacement between the two relationship matrices."""

    max_displacement: float = 0.0
    bound: float = 0.0
    passed: bool = True


def weyl_audit(eigs_high: np.ndarray, eigs_low: np.ndarray, epsilon: float) -> WeylAudit:
    disp = float(np.max(np.abs(eigs_high - eigs_low)))
    bound = math.sqrt(max(epsilon, 0.0))
    return WeylAudit(max_displacement=disp, bound=bound, passed=_holds(disp, bound))


@dataclass
class RankAudit:
    """Rank-preservation audit in the dot-product (Gram) regime.

    Weyl's inequality guarantees two things once eps < sigma_r^4: the r-th
    largest eigenvalue of G_Y stays above sigma_r^2 - sqrt(eps) > 0, and
    eigenvalues beyond position r stay below sqrt(eps). Rank equality is
    therefore numerically decidable only when those two levels separate,
    i.e. sigma_r^2 - sqrt(eps) > sqrt(eps) (equivalently eps < sigma_r^4/4);
    in the remaining sliver of the hypothesis region only the tail bound
    is asserted and ``rank_decidable`` is False. (Exact rank equality can
    genuinely fail there when k > r: the tail may hold small but nonzero
    directions, so this is a limit of the claim, not of the solver.)
    """

    r: int = 0
    sigma_r: float = 0.0
    k: int = 0
    k_sufficient: bool = False
    condition_met: bool = False  # epsilon < sigma_r^4
    hypothesis_met: bool = False  # k_sufficient and condition_met
    lambda_tail: float = 0.0  # r-th largest eigenvalue of G_Y
    lambda_floor: float = 0.0  # sigma_r^2 - sqrt(epsilon)
    rank_decidable: bool = False
    rank_low: int = 0
    passed: bool | None = None  # None when the hypothesis does not hold


def _perturbation_aware_rank(values: np.ndarray, epsilon: float, rel_tol: float) -> int:
    """Count spectrum entries above max(perturbation floor, relative floor).

    ``values`` are eigenvalues of the perturbed relationship matrix (or
    squared singular values of its factor). Eigenvalues that were zero
    before the perturbation can rise to at most sqrt(eps), so entries at
    or below that level are treated as perturbation noise rather than
    signal; the relative floor handles the eps = 0 case.
    """
    if values.size == 0 or values[0] <= 0:
        return 0
    floor = max(math.sqrt(max(epsilon, 0.0)) * (1.0 + VERDICT_REL_SLACK), rel_tol * values[0])
    return int(np.sum(values > floor))


def rank_audit(x, y, epsilon: float, rank_tol: float = 1e-8) -> RankAudit:
    """Audit rank preservation of Y against the rank of X (dot regime).

    When eps < sigma_r^4 the audit asserts the tail eigenvalue bound and
    rank equality; otherwise it reports the hypothesis failure without
    asserting anything.
    """
    xm = as_matrix(x, "x")
    ym = as_matrix(y, "y")
    if xm.shape[0] != ym.shape[0]:
        raise ValueError(f"row counts differ: {xm.shape[0]} vs {ym.shape[0]}")
    sv_x = singular_values(xm)
    r = numeric_rank(xm, rank_tol)
    audit = RankAudit(r=r, k=ym.shape[1])
    if r == 0:
        return audit
    audit.sigma_r = float(sv_x[r - 1])
    audit.k_sufficient = audit.k >= r
    audit.condition_met = epsilon < audit.sigma_r**4
    audit.hypothesis_met = audit.k_sufficient and audit.condition_met
    sv_y = singular_values(ym)
    eigs_low = sv_y * sv_y
    audit.lambda_tail = float(eigs_low[r - 1]) if r <= eigs_low.size else 0.0
    root_eps = math.sqrt(max(epsilon, 0.0))
    audit.lambda_floor = audit.sigma_r**2 - root_eps
    audit.rank_decidable = audit.lambda_floor > root_eps * (1.0 + 2 * VERDICT_REL_SLACK) + 2 * VERDICT_ABS_SLACK
    audit.rank_low = _perturbation_aware_rank(eigs_low, epsilon, rank_tol)
    if audit.hypothesis_met:
        tail_ok = audit.lambda_tail >= audit.lambda_floor * (1.0 - VERDICT_REL_SLACK) - VERDICT_ABS_SLACK
        audit.passed = bool(tail_ok and (audit.rank_low == r or not audit.rank_decidable))
    return audit


@dataclass
class SubspaceAudit:
    """Largest principal angle between leading rank-r eigenspaces."""

    auditable: bool = False
    reason: str = ""
    sin_theta: float = 0.0
    bound: float = 0.0
    passed: bool | None = None


def _subspace_audit_from_spectra(
    spec_high: SpectrumResult,
    spec_low: SpectrumResult,
    r: int,
    sigma_r_sq: float,
    epsilon: float,
    eigengap_tol: float = 1e-10,
) -> SubspaceAudit:
    n = spec_high.eigenvalues.size
    bound = math.sqrt(max(epsilon, 0.0)) / sigma_r_sq
    if r >= n:
        # both leading eigenspaces are the whole ambient space
        return SubspaceAudit(auditable=True, sin_theta=0.0, bound=bound, passed=True)
    gap = float(spec_high.eigenvalues[r - 1] - spec_high.eigenvalues[r])
    if gap <= eigengap_tol * max(1.0, abs(float(spec_high.eigenvalues[0]))):
        return SubspaceAudit(
            auditable=False,
            reason=f"degenerate eigengap at rank {r}: {gap:.3e}",
            bound=bound,
        )
    # the sine route keeps tiny angles accurate (no arccos cancellation)
    sin_theta = largest_principal_angle_sine(
        spec_high.eigenvectors[:, :r], spec_low.eigenvectors[:, :r]
    )
    # eigenvector noise floor: backward error of the eigensolve over the gap
    scale = max(abs(float(spec_high.eigenvalues[0])), abs(float(spec_low.eigenvalues[0])), 1.0)
    noise_floor = 64.0 * n * np.finfo(float).eps * scale / gap
    return SubspaceAudit(
        auditable=True,
        sin_theta=sin_theta,
        bound=bound,
        passed=sin_theta <= bound * (1.0 + VERDICT_REL_SLACK) + noise_floor + VERDICT_ABS_SLACK,
    )


def subspace_audit(
    r_high,
    r_low,
    r: int,
    sigma_r_sq: float,
    epsilon: float,
    eigengap_tol: float = 1e-10,
) -> SubspaceAudit:
    """Davis-Kahan audit: sin(largest principal angle) <= sqrt(eps)/sigma_r^2.

    The leading rank-r eigenspaces of both relationship matrices are
    extracted and compared. A degenerate eigengap at position r makes the
    eigenspace ill-defined; that case is reported as unauditable rather
    than as a failure.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if not sigma_r_sq > 0:
        raise ValueError("sigma_r_sq must be positive")
    spec_high = sym_eig(as_matrix(r_high, "r_high"))
    spec_low = sym_eig(as_matrix(r_low, "r_low"))
    return _subspace_audit_from_spectra(spec_high, spec_low, r, sigma_r_sq, epsilon, eigengap_tol)


@dataclass
class KernelAudit:
    """Rank and angle audits generalized to a PSD relationship matrix.

    ``rank_decidable`` mirrors the Gram-regime audit: equality of the
    perturbation-aware rank is asserted only when the guaranteed floor
    lambda_r - sqrt(eps) separates from the perturbation ceiling sqrt(eps).
    """

    psd_ok: bool = False
    r: int = 0
    lambda_r_high: float = 0.0
    condition_met: bool = False  # epsilon < lambda_r^2
    lambda_tail: float = 0.0
    lambda_floor: float = 0.0
    rank_decidable: bool = False
    rank_low: int = 0
    rank_passed: bool | None = None
    subspace: SubspaceAudit = field(default_factory=SubspaceAudit)


def kernel_audit(
    r_high,
    r_low,
    rel_cfg: RelationshipConfig,
    rank_tol: float = 1e-8,
    psd_tol: float = 1e-10,
    eigengap_tol: float = 1e-10,
    spectra: tuple[SpectrumResult, SpectrumResult] | None = None,
) -> KernelAudit:
    """Extension audit for non-dot kernels with PSD relationship matrices.

    The data-side scale sigma_r^2 is replaced by the smallest nonzero
    eigenvalue of R(X); everything else mirrors the Gram-regime audits.
    A non-PSD R(X) is outside the guarantee's hypothesis and is reported
    as such without asserting. ``spectra`` lets a caller that already
    decomposed both matrices skip the repeated factorizations.
    """
    rh = as_matrix(r_high, "r_high")
    rl = as_matrix(r_low, "r_low")
    audit = KernelAudit()
    spec_high, spec_low = spectra if spectra is not None else (sym_eig(rh), sym_eig(rl))
    audit.psd_ok = bool(spec_high.eigenvalues[-1] >= -psd_tol * spec_high.eigenvalues[0])
    if not audit.psd_ok:
        return audit
    epsilon = compute_epsilon(rh, rl)
    evals_high = spec_high.eigenvalues
    if evals_high[0] <= 0:
        return audit
    audit.r = int(np.sum(evals_high > rank_tol * evals_high[0]))
    if audit.r == 0:
        return audit
    audit.lambda_r_high = float(evals_high[audit.r - 1])
    audit.condition_met = epsilon < audit.lambda_r_high**2
    audit.lambda_tail = float(spec_low.eigenvalues[audit.r - 1])
    root_eps = math.sqrt(max(epsilon, 0.0))
    audit.lambda_floor = audit.lambda_r_high - root_eps
    audit.rank_decidable = audit.lambda_floor > root_eps * (1.0 + 2 * VERDICT_REL_SLACK) + 2 * VERDICT_ABS_SLACK
    audit.rank_low = _perturbation_aware_rank(spec_low.eigenvalues, epsilon, rank_tol)
    if audit.condition_met:
        tail_ok = audit.lambda_tail >= audit.lambda_floor * (1.0 - VERDICT_REL_SLACK) - VERDICT_ABS_SLACK
        audit.rank_passed = bool(tail_ok and (audit.rank_low == audit.r or not audit.rank_decidable))
        if audit.rank_decidable:
            audit.subspace = _subspace_audit_from_spectra(
                spec_high, spec_low, audit.r, audit.lambda_r_high, epsilon, eigengap_tol
            )
        else:
            audit.subspace = SubspaceAudit(
                auditable=False,
                reason="perturbation too large for a stable rank-r eigenspace of the embedding",
            )
    return audit


@dataclass
class SerflingAudit:
    """Sampled-error transfer record (probabilistic, informational)."""

    epsilon_hat: float = 0.0
    m: int = 0
    m_bound: float = 0.0
    delta: float = 0.0
    rhs: float = 0.0
    covered: bool = True  # epsilon <= rhs for the drawn sample


@dataclass
class BoundReport:
    """Everything a full audit measured, plus per-bound verdicts."""

    kind: str = "dot"
    n: int = 0
    d: int = 0
    k: int = 0
    epsilon: float = 0.0
    epsilon_hat: float = 0.0
    m: int = 0
    m_bound: float = 0.0
    delta_conf: float = 0.0
    serfling_rhs: float = 0.0
    sigma_r: float = 0.0
    r: int = 0
    lambda_tail: float = 0.0
    sin_theta: float | None = None
    rank_condition_met: bool = False
    phi_lipschitz: float | None = None
    serfling: SerflingAudit = field(default_factory=SerflingAudit)
    weyl: WeylAudit = field(default_factory=WeylAudit)
    orthogonality: OrthogonalityAudit | None = None
    rank: RankAudit | None = None
    kernel: KernelAudit | None = None
    subspace: SubspaceAudit = field(default_factory=SubspaceAudit)
    eigs_high: np.ndarray | None = None
    eigs_low: np.ndarray | None = None

    def theorem_verdicts(self) -> dict[str, bool | None]:
        """Theorem-level pass/fail map; None marks hypothesis-not-met cases."""
        verdicts: dict[str, bool | None] = {"weyl": self.weyl.passed}
        verdicts["orthogonality"] = self.orthogonality.passed if self.orthogonality else None
        if self.rank is not None:
            verdicts["rank"] = self.rank.passed
        elif self.kernel is not None:
            verdicts["rank"] = self.kernel.rank_passed if self.kernel.psd_ok else None
        else:
            verdicts["rank"] = None
        verdicts["subspace"] = self.subspace.passed if self.subspace.auditable else None
        return verdicts

    @property
    def all_theorems_pass(self) -> bool:
        return all(v is not False for v in self.theorem_verdicts().values())

    def to_dict(self) -> dict:
        """Plain-python nested dict for report serialization."""
        verdicts = self.theorem_verdicts()
        out = {
            "kind": self.kind,
            "shape": {"n": self.n, "d": self.d, "k": self.k},
            "epsilon": float(self.epsilon),
            "sampled": {
                "epsilon_hat": float(self.epsilon_hat),
                "m": int(self.m),
                "m_bound": float(self.m_bound),
                "delta": float(self.delta_conf),
                "serfling_rhs": float(self.serfling_rhs),
                "covered": bool(self.serfling.covered),
            },
            "spectrum": {
                "sigma_r": float(self.sigma_r),
                "r": int(self.r),
                "lambda_tail": float(self.lambda_tail),
                "rank_condition_met": bool(self.rank_condition_met),
                "leading_eigs_high": [float(v) for v in (self.eigs_high[:32] if self.eigs_high is not None else [])],
                "leading_eigs_low": [float(v) for v in (self.eigs_low[:32] if self.eigs_low is not None else [])],
            },
            "weyl": {
                "max_displacement": float(self.weyl.max_displacement),
                "bound": float(self.weyl.bound),
                "passed": bool(self.weyl.passed),
            },
            "subspace": {
                "auditable": bool(self.subspace.auditable),
                "reason": self.subspace.reason,
                "sin_theta": None if self.sin_theta is None else float(self.sin_theta),
                "bound": float(self.subspace.bound),
                "passed": self.subspace.passed,
            },
            "phi_lipschitz": None if self.phi_lipschitz is None else float(self.phi_lipschitz),
            "verdicts": {k: v for k, v in verdicts.items()},
            "all_theorems_pass": self.all_theorems_pass,
        }
        if self.orthogonality is not None:
            out["orthogonality"] = {
                "n_pairs": self.orthogonality.n_pairs,
                "n_violations": self.orthogonality.n_violations,
                "worst": float(self.orthogonality.worst),
                "threshold": float(self.orthogonality.threshold),
                "passed": bool(self.orthogonality.passed),
            }
        if self.rank is not None:
            out["rank"] = {
                "r": self.rank.r,
                "sigma_r": float(self.rank.sigma_r),
                "k_sufficient": self.rank.k_sufficient,
                "condition_met": self.rank.condition_met,
                "hypothesis_met": self.rank.hypothesis_met,
                "lambda_tail": float(self.rank.lambda_tail),
                "lambda_floor": float(self.rank.lambda_floor),
                "rank_decidable": self.rank.rank_decidable,
                "rank_low": self.rank.rank_low,
                "passed": self.rank.passed,
            }
        if self.kernel is not None:
            out["kernel_extension"] = {
                "psd_ok": self.kernel.psd_ok,
                "r": self.kernel.r,
                "lambda_r_high": float(self.kernel.lambda_r_high),
                "condition_met": self.kernel.condition_met,
                "lambda_tail": float(self.kernel.lambda_tail),
                "lambda_floor": float(self.kernel.lambda_floor),
                "rank_decidable": self.kernel.rank_decidable,
                "rank_low": self.kernel.rank_low,
                "rank_passed": self.kernel.rank_passed,
            }
        return out


def full_audit(x, y, rel_cfg: RelationshipConfig, audit_cfg: AuditConfig | None = None) -> BoundReport:
    """Run every audit on an (original, embedded) pair and aggregate.

    M defaults to the observed max |Delta_ij| unless audit_cfg.m_bound
    overrides it for peek-free audits.
    """
    if audit_cfg is None:
        audit_cfg = AuditConfig()
    xm = as_matrix(x, "x")
    ym = as_matrix(y, "y")
    if xm.shape[0] != ym.shape[0]:
        raise ValueError(f"row counts differ: {xm.shape[0]} vs {ym.shape[0]}")
    n = xm.shape[0]
    r_high = relationship_matrix(xm, rel_cfg)
    r_low = relationship_matrix(ym, rel_cfg)
    delta = r_high - r_low
    epsilon = float(np.sum(delta * delta))

    report = BoundReport(kind=rel_cfg.kind, n=n, d=xm.shape[1], k=ym.shape[1])
    report.epsilon = epsilon
    report.delta_conf = audit_cfg.delta

    m = audit_cfg.m if audit_cfg.m is not None else min(1024, n * n)
    m = min(m, n * n)
    eps_hat, _ = sample_epsilon_hat(delta, m, audit_cfg.seed)
    m_bound = audit_cfg.m_bound if audit_cfg.m_bound is not None else float(np.max(np.abs(delta)))
    rhs = serfling_bound(eps_hat, n, m, m_bound, audit_cfg.delta)
    report.epsilon_hat = eps_hat
    report.m = m
    report.m_bound = m_bound
    report.serfling_rhs = rhs
    report.serfling = SerflingAudit(
        epsilon_hat=eps_hat,
        m=m,
        m_bound=m_bound,
        delta=audit_cfg.delta,
        rhs=rhs,
        covered=_holds(epsilon, rhs),
    )

    spec_high = sym_eig(r_high)
    spec_low = sym_eig(r_low)
    report.eigs_high = spec_high.eigenvalues
    report.eigs_low = spec_low.eigenvalues
    report.weyl = weyl_audit(spec_high.eigenvalues, spec_low.eigenvalues, epsilon)

    sv_x = singular_values(xm)
    r_x = numeric_rank(xm, audit_cfg.rank_tol)
    report.sigma_r = float(sv_x[r_x - 1]) if r_x >= 1 else 0.0

    bounded_cfg = with_norm_bounds_from_data(rel_cfg, xm)
    try:
        report.phi_lipschitz = lipschitz_constant(bounded_cfg)
    except ValueError:
        report.phi_lipschitz = None

    if rel_cfg.kind == "dot":
        report.orthogonality = orthogonality_audit(xm, ym, epsilon, audit_cfg.ortho_tol)
        rank = rank_audit(xm, ym, epsilon, audit_cfg.rank_tol)
        report.rank = rank
        report.r = rank.r
        report.sigma_r = rank.sigma_r
        report.lambda_tail = rank.lambda_tail
        report.rank_condition_met = rank.condition_met
        # the angle bound is theorem-backed when the perturbed spectrum
        # separates (rank_decidable), or when k = r so the embedding's
        # eigenvalue tail is exactly zero and the full eigengap applies
        angle_backed = rank.rank_decidable or ym.shape[1] == rank.r
        if rank.hypothesis_met and rank.r >= 1 and angle_backed:
            report.subspace = _subspace_audit_from_spectra(
                spec_high, spec_low, rank.r, rank.sigma_r**2, epsilon, audit_cfg.eigengap_tol
            )
            if report.subspace.auditable:
                report.sin_theta = report.subspace.sin_theta
        elif rank.hypothesis_met and rank.r >= 1:
            report.subspace = SubspaceAudit(
                auditable=False,
                reason="perturbation too large for a stable rank-r eigenspace of the embedding",
            )
    else:
        kernel = kernel_audit(
            r_high,
            r_low,
            rel_cfg,
            rank_tol=audit_cfg.rank_tol,
            psd_tol=audit_cfg.psd_tol,
            eigengap_tol=audit_cfg.eigengap_tol,
            spectra=(spec_high, spec_low),
        )
        report.kernel = kernel
        report.r = kernel.r
        report.lambda_tail = kernel.lambda_tail
        report.rank_condition_met = kernel.condition_met
        report.subspace = kernel.subspace
        if kernel.subspace.auditable:
            report.sin_theta = kernel.subspace.sin_theta
    return report
