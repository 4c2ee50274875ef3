"""Bound audits: formula values, Monte Carlo behavior, theorem-level checks."""

import math

import numpy as np
import pytest
import yaml

from conftest import make_audit_instance
from rpl.guarantees import (
    AuditConfig,
    compute_epsilon,
    full_audit,
    kernel_audit,
    orthogonality_audit,
    rank_audit,
    sample_epsilon_hat,
    serfling_bound,
    subspace_audit,
)
from rpl.kernels import RelationshipConfig, relationship_matrix
from rpl.linalg import sym_eig
from rpl.report import _pyify


class TestComputeEpsilon:
    def test_identical(self):
        r = np.random.default_rng(0).normal(size=(4, 4))
        assert compute_epsilon(r, r) == 0.0

    def test_identity_difference(self):
        assert compute_epsilon(np.eye(3) * 2, np.eye(3)) == pytest.approx(3.0)

    def test_hand_case(self):
        r = np.array([[1.0, 0.0], [0.0, 1.0]])
        r_hat = np.array([[0.9, 0.1], [0.1, 0.9]])
        assert compute_epsilon(r, r_hat) == pytest.approx(0.04)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            compute_epsilon(np.eye(2), np.eye(3))


class TestSerflingBound:
    def test_full_observation_formula(self):
        # m = n^2 = 16, eps_hat = eps, M = 1, delta = 0.05:
        # bound = eps + 16*sqrt(2*ln(40)/16) = eps + 10.8648122...
        slack = 16.0 * math.sqrt(2.0 * math.log(40.0) / 16.0)
        assert serfling_bound(2.5, n=4, m=16, M=1.0, delta=0.05) == pytest.approx(2.5 + slack, rel=1e-12)
        assert slack == pytest.approx(10.8648122, abs=1e-6)

    def test_limit_shape_at_full_sample(self):
        # eps_hat = 0, m = n^2: the bound collapses to M^2 * n * sqrt(2 log(2/delta))
        n, M, delta = 6, 2.0, 0.1
        expected = M * M * n * math.sqrt(2.0 * math.log(2.0 / delta))
        assert serfling_bound(0.0, n=n, m=n * n, M=M, delta=delta) == pytest.approx(expected, rel=1e-12)

    def test_decreasing_in_m_on_grid(self):
        # fixed underlying eps_hat density: eps_hat grows linearly with m
        n, M, delta = 8, 1.0, 0.05
        density = 0.3
        values = [serfling_bound(density * m, n, m, M, delta) for m in (4, 8, 16, 32, 64)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_slack_term_nonnegative(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(2, 10))
            m = int(rng.integers(1, n * n + 1))
            eps_hat = float(rng.uniform(0, 5))
            rhs = serfling_bound(eps_hat, n, m, 1.0, 0.05)
            assert rhs >= (n * n / m) * eps_hat

    def test_validation(self):
        with pytest.raises(ValueError):
            serfling_bound(1.0, n=3, m=0, M=1.0, delta=0.05)
        with pytest.raises(ValueError):
            serfling_bound(1.0, n=3, m=10, M=1.0, delta=0.05)
        with pytest.raises(ValueError):
            serfling_bound(1.0, n=3, m=4, M=1.0, delta=1.5)

    def test_monte_carlo_coverage(self):
        # violation rate over random matrices and samples stays near delta
        rng = np.random.default_rng(2)
        n, m, M, delta = 8, 16, 1.0, 0.05
        violations = 0
        trials = 1000
        for trial in range(trials):
            d = rng.uniform(-M, M, size=(n, n))
            eps = float(np.sum(d * d))
            eps_hat, _ = sample_epsilon_hat(d, m, seed=trial)
            if eps > serfling_bound(eps_hat, n, m, M, delta):
                violations += 1
        assert violations / trials <= delta + 0.02


class TestSampleEpsilonHat:
    def test_full_observation_recovers_epsilon(self):
        rng = np.random.default_rng(3)
        d = rng.normal(size=(5, 5))
        eps_hat, pairs = sample_epsilon_hat(d, 25, seed=0)
        assert eps_hat == pytest.approx(float(np.sum(d * d)), rel=1e-12)
        assert pairs.shape == (25, 2)

    def test_zero_matrix(self):
        eps_hat, _ = sample_epsilon_hat(np.zeros((6, 6)), 10, seed=4)
        assert eps_hat == 0.0

    def test_pairs_unique(self):
        d = np.random.default_rng(5).normal(size=(7, 7))
        _, pairs = sample_epsilon_hat(d, 30, seed=1)
        flat = pairs[:, 0] * 7 + pairs[:, 1]
        assert len(set(flat.tolist())) == 30

    def test_estimator_unbiased(self):
        # E[(n^2/m) eps_hat] = eps, checked by Monte Carlo mean within 1%
        rng = np.random.default_rng(6)
        n, m = 16, 64
        d = rng.uniform(-1, 1, size=(n, n))
        eps = float(np.sum(d * d))
        total = 0.0
        trials = 10_000
        for trial in range(trials):
            eps_hat, _ = sample_epsilon_hat(d, m, seed=trial)
            total += (n * n / m) * eps_hat
        assert total / trials == pytest.approx(eps, rel=0.01)

    def test_m_validation(self):
        with pytest.raises(ValueError):
            sample_epsilon_hat(np.zeros((3, 3)), 10, seed=0)


class TestOrthogonalityAudit:
    def test_identity_embedding_passes(self):
        x = np.eye(4)
        audit = orthogonality_audit(x, x, epsilon=0.0)
        assert audit.passed and audit.n_pairs > 0 and audit.n_violations == 0

    def test_two_point_hand_case(self):
        # orthogonal x rows collapse to 1-d: |y1.y2| = |c| <= sqrt(eps)
        c = 0.4
        x = np.eye(2)
        y = np.array([[1.0], [c]])
        eps = compute_epsilon(x @ x.T, y @ y.T)
        assert c * c <= eps  # eps includes the off-diagonal term c^2
        audit = orthogonality_audit(x, y, eps)
        assert audit.n_pairs == 1
        assert audit.pairs[0][2] == pytest.approx(c)
        assert audit.passed

    def test_no_qualifying_pairs_is_vacuous_pass(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(6, 3)) + 5.0  # all dot products far from zero
        y = rng.normal(size=(6, 2))
        audit = orthogonality_audit(x, y, epsilon=1.0)
        assert audit.n_pairs == 0 and audit.passed


class TestRankAudit:
    def test_identity_embedding(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(8, 3))
        audit = rank_audit(x, x, epsilon=0.0)
        assert audit.hypothesis_met and audit.passed
        assert audit.rank_low == audit.r == 3
        assert audit.lambda_tail == pytest.approx(audit.sigma_r**2, rel=1e-10)

    def test_perturbed_identity_hand_case(self):
        # X = I3, sigma_r = 1; eps = 0.25 < 1: tail must stay >= 0.5
        x = np.eye(3)
        a = math.sqrt(0.125)
        g_y = np.eye(3)
        g_y[0, 1] = g_y[1, 0] = -a
        spectrum = sym_eig(g_y)
        y = spectrum.eigenvectors @ np.diag(np.sqrt(spectrum.eigenvalues)) @ spectrum.eigenvectors.T
        eps = compute_epsilon(x @ x.T, y @ y.T)
        assert eps == pytest.approx(0.25, rel=1e-9)
        audit = rank_audit(x, y, eps)
        assert audit.hypothesis_met
        assert audit.lambda_tail >= 0.5 - 1e-9
        assert audit.lambda_tail == pytest.approx(1 - a, rel=1e-9)
        assert audit.passed and audit.rank_low == 3

    def test_hypothesis_gate_on_large_epsilon(self):
        x = np.eye(3) * 0.5  # sigma_r^4 = 0.0625
        y = np.random.default_rng(9).normal(size=(3, 3)) * 3
        eps = compute_epsilon(x @ x.T, y @ y.T)
        audit = rank_audit(x, y, eps)
        assert not audit.condition_met
        assert audit.passed is None

    def test_k_too_small_reports_hypothesis_failure(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=(6, 4))  # rank 4
        y = rng.normal(size=(6, 2)) * 1e-6  # k = 2 < r
        audit = rank_audit(x, y, epsilon=1e-9)
        assert not audit.k_sufficient
        assert audit.passed is None


class TestSubspaceAudit:
    def test_identical_matrices(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(6, 2))
        g = x @ x.T
        audit = subspace_audit(g, g, r=2, sigma_r_sq=1.0, epsilon=0.0)
        assert audit.auditable and audit.passed
        assert audit.sin_theta == pytest.approx(0.0, abs=1e-7)

    def test_hand_built_3x3_perturbation(self):
        # diag(4,1,0) perturbed by 0.1 on the (2,3) cross terms, r = 2:
        # eps = 0.02, bound = sqrt(0.02)/1 ~ 0.1414, sin(theta) ~ 0.09854
        a = np.diag([4.0, 1.0, 0.0])
        b = a.copy()
        b[1, 2] = b[2, 1] = 0.1
        eps = compute_epsilon(a, b)
        assert eps == pytest.approx(0.02)
        audit = subspace_audit(a, b, r=2, sigma_r_sq=1.0, epsilon=eps)
        assert audit.auditable
        assert audit.bound == pytest.approx(math.sqrt(0.02), rel=1e-12)
        assert audit.sin_theta == pytest.approx(0.0985376, abs=1e-6)
        assert audit.passed

    def test_degenerate_eigengap_is_unauditable(self):
        a = np.diag([2.0, 1.0, 1.0, 0.0])
        audit = subspace_audit(a, a, r=2, sigma_r_sq=1.0, epsilon=0.01)
        assert not audit.auditable
        assert audit.passed is None
        assert "eigengap" in audit.reason

    def test_full_rank_subspace_trivial(self):
        a = np.diag([3.0, 2.0, 1.0])
        audit = subspace_audit(a, a * 1.01, r=3, sigma_r_sq=1.0, epsilon=0.001)
        assert audit.auditable and audit.passed and audit.sin_theta == 0.0


class TestKernelAudit:
    RBF = RelationshipConfig(kind="rbf", gamma=0.8)

    def test_identical_rbf_matrices_pass(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(8, 3))
        r = relationship_matrix(x, self.RBF)
        audit = kernel_audit(r, r, self.RBF)
        assert audit.psd_ok
        assert audit.condition_met
        assert audit.rank_passed
        assert audit.subspace.passed or not audit.subspace.auditable

    def test_non_psd_input_gates_out(self):
        r_bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
        audit = kernel_audit(r_bad, np.eye(2), self.RBF)
        assert not audit.psd_ok
        assert audit.rank_passed is None

    def test_perturbed_rbf_matrices(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(10, 3))
        r_high = relationship_matrix(x, self.RBF)
        spectrum = sym_eig(r_high)
        lam_r = spectrum.eigenvalues[-1]  # rbf matrices are full rank
        noise = rng.normal(size=(10, 10))
        noise = 0.5 * (noise + noise.T)
        scale = 0.1 * lam_r / np.linalg.norm(noise)
        r_low = r_high + scale * noise
        audit = kernel_audit(r_high, r_low, self.RBF)
        assert audit.psd_ok and audit.condition_met
        assert audit.rank_passed
        if audit.subspace.auditable:
            assert audit.subspace.passed


class TestFullAudit:
    def test_identity_embedding_all_pass(self):
        rng = np.random.default_rng(14)
        x = rng.normal(size=(10, 4))
        report = full_audit(x, x, RelationshipConfig(kind="dot"), AuditConfig(seed=0))
        assert report.epsilon == 0.0
        assert report.all_theorems_pass
        assert report.rank.passed and report.weyl.passed

    def test_random_network_internally_consistent(self):
        # large eps: hypothesis-dependent audits skip, the rest still hold
        rng = np.random.default_rng(15)
        x = rng.normal(size=(12, 5))
        y = rng.normal(size=(12, 3)) * 4
        report = full_audit(x, y, RelationshipConfig(kind="dot"), AuditConfig(seed=1))
        assert report.weyl.passed
        assert report.orthogonality.passed
        assert not report.rank_condition_met
        assert report.all_theorems_pass  # None verdicts do not count as failures

    def test_serfling_echo_fields(self):
        rng = np.random.default_rng(16)
        x = rng.normal(size=(9, 3))
        cfg = AuditConfig(m=17, delta=0.25, seed=3)
        report = full_audit(x, x * 0.99, RelationshipConfig(kind="dot"), cfg)
        assert report.m == 17
        assert report.delta_conf == 0.25
        assert report.serfling_rhs >= (81 / 17) * report.epsilon_hat

    def test_report_round_trip_preserves_verdicts(self, tmp_path):
        rng = np.random.default_rng(17)
        x, y = make_audit_instance(rng)
        report = full_audit(x, y, RelationshipConfig(kind="dot"), AuditConfig(seed=5))
        doc = report.to_dict()
        path = tmp_path / "audit.yaml"
        with open(path, "w") as fh:
            yaml.safe_dump(_pyify(doc), fh, sort_keys=False)
        with open(path) as fh:
            loaded = yaml.safe_load(fh)
        assert loaded["verdicts"] == doc["verdicts"]
        assert loaded["all_theorems_pass"] == doc["all_theorems_pass"]
        assert loaded["epsilon"] == pytest.approx(report.epsilon, rel=1e-12)

    def test_kernel_path_selected_for_rbf(self):
        rng = np.random.default_rng(18)
        x = rng.normal(size=(8, 3))
        cfg = RelationshipConfig(kind="rbf", gamma=1.0)
        report = full_audit(x, x, cfg, AuditConfig(seed=0))
        assert report.kernel is not None and report.kernel.psd_ok
        assert report.orthogonality is None  # dot-regime audit only

    def test_m_bound_override(self):
        rng = np.random.default_rng(19)
        x = rng.normal(size=(6, 3))
        report = full_audit(x, x * 0.9, RelationshipConfig(kind="dot"),
                            AuditConfig(seed=0, m_bound=123.0))
        assert report.m_bound == 123.0

    def test_never_fail_randomized_suite(self):
        rng = np.random.default_rng(20)
        for _ in range(50):
            x, y = make_audit_instance(rng)
            report = full_audit(x, y, RelationshipConfig(kind="dot"), AuditConfig(seed=int(rng.integers(1 << 31))))
            verdicts = report.theorem_verdicts()
            assert all(v is not False for v in verdicts.values()), verdicts
