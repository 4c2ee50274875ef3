"""Dense linear algebra primitives shared by every other module.

Matrices are plain 2-D float64 numpy arrays (row-major). Eigen- and
singular-value work is delegated to LAPACK through ``numpy.linalg``; the
contracts the rest of the package relies on (descending ordering,
orthonormal eigenvectors, reconstruction accuracy) are pinned by the test
suite. Everything here is a pure function, safe to call concurrently.

Design envelope: dense real matrices up to n = 2048.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce input to a non-empty 2-D float64 array and validate finiteness."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got {m.ndim}-D")
    if m.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(m)):
        i, j = np.argwhere(~np.isfinite(m))[0]
        raise ValueError(f"{name} has a non-finite entry at ({i}, {j})")
    return m


@dataclass
class SpectrumResult:
    """Full symmetric eigendecomposition, eigenvalues sorted descending.

    ``eigenvectors`` holds one orthonormal eigenvector per column, aligned
    with ``eigenvalues``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def frobenius_norm(a) -> float:
    """sqrt of the sum of squared entries."""
    m = as_matrix(a)
    return float(np.sqrt(np.sum(m * m)))


def spectral_norm(a) -> float:
    """Largest singular value. Always <= frobenius_norm(a)."""
    m = as_matrix(a)
    return float(np.linalg.svd(m, compute_uv=False)[0])


def sym_eig(a, sym_tol: float = 1e-10) -> SpectrumResult:
    """Eigendecomposition of a symmetric matrix, sorted descending.

    The input must be square and symmetric to within ``sym_tol`` relative
    to its Frobenius norm; the offending entry is named otherwise. The
    matrix is symmetrized exactly before factorization so that round-off
    in the caller's assembly cannot leak through.
    """
    m = as_matrix(a)
    n, c = m.shape
    if n != c:
        raise ValueError(f"sym_eig requires a square matrix, got {n}x{c}")
    scale = np.sqrt(np.sum(m * m))
    asym = np.abs(m - m.T)
    worst = np.unravel_index(np.argmax(asym), asym.shape)
    if asym[worst] > sym_tol * max(scale, 1e-300):
        i, j = worst
        raise ValueError(
            f"sym_eig requires a symmetric matrix; entries ({i},{j})={m[i, j]!r} "
            f"and ({j},{i})={m[j, i]!r} disagree beyond tolerance"
        )
    sym = 0.5 * (m + m.T)
    evals, evecs = np.linalg.eigh(sym)
    order = np.argsort(evals)[::-1]
    return SpectrumResult(eigenvalues=evals[order], eigenvectors=evecs[:, order])


def singular_values(a) -> np.ndarray:
    """All min(rows, cols) singular values, descending."""
    m = as_matrix(a)
    return np.linalg.svd(m, compute_uv=False)


def numeric_rank(a, rel_tol: float = 1e-8) -> int:
    """Count of singular values above ``rel_tol`` times the largest one."""
    if rel_tol <= 0:
        raise ValueError(f"rel_tol must be positive, got {rel_tol}")
    sv = singular_values(a)
    top = sv[0]
    if top == 0.0:
        return 0
    return int(np.sum(sv > rel_tol * top))


def orthonormal_columns(basis, tol: float = 1e-10) -> np.ndarray:
    """Orthonormalize the columns of ``basis`` in place of a QR dependency.

    Modified Gram-Schmidt with one full re-orthogonalization pass, which is
    numerically robust at the sizes this package targets. Raises when a
    column is (numerically) linearly dependent on the previous ones, since
    a rank-deficient basis does not span a subspace of its column count.
    """
    b = as_matrix(basis, "basis")
    n, k = b.shape
    if k > n:
        raise ValueError(f"basis has more columns ({k}) than rows ({n})")
    q = np.empty((n, k))
    for j in range(k):
        v = b[:, j].copy()
        original_norm = np.linalg.norm(v)
        for _ in range(2):
            for i in range(j):
                v -= (q[:, i] @ v) * q[:, i]
        norm = np.linalg.norm(v)
        if norm <= tol * max(original_norm, 1e-300):
            raise ValueError(f"basis column {j} is linearly dependent; cannot orthonormalize")
        q[:, j] = v / norm
    return q


def principal_angles(u_basis, v_basis) -> np.ndarray:
    """Principal angles between the column spans of two bases, ascending.

    Both bases live in the same ambient space (equal row counts). They are
    orthonormalized here, then the angles are the arccosines of the
    singular values of the cross product of the orthonormal bases. The
    last entry is the largest angle.
    """
    u = as_matrix(u_basis, "u_basis")
    v = as_matrix(v_basis, "v_basis")
    if u.shape[0] != v.shape[0]:
        raise ValueError(
            f"bases must share the ambient dimension, got {u.shape[0]} and {v.shape[0]} rows"
        )
    uo = orthonormal_columns(u)
    vo = orthonormal_columns(v)
    cosines = np.linalg.svd(uo.T @ vo, compute_uv=False)
    cosines = np.clip(cosines, 0.0, 1.0)
    # svd returns descending cosines, hence ascending angles
    return np.arccos(cosines)


def largest_principal_angle_sine(u_basis, v_basis) -> float:
    """sin of the largest principal angle, via the projection residual.

    Computed as the spectral norm of (I - V V^T) U for orthonormalized
    bases. Unlike the arccos-of-cosine route, this stays accurate for
    tiny angles, which would otherwise be swamped by the sqrt(eps)
    cancellation floor of arccos near 1.
    """
    u = as_matrix(u_basis, "u_basis")
    v = as_matrix(v_basis, "v_basis")
    if u.shape[0] != v.shape[0]:
        raise ValueError(
            f"bases must share the ambient dimension, got {u.shape[0]} and {v.shape[0]} rows"
        )
    uo = orthonormal_columns(u)
    vo = orthonormal_columns(v)
    residual = uo - vo @ (vo.T @ uo)
    return float(min(np.linalg.svd(residual, compute_uv=False)[0], 1.0))
