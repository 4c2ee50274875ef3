import os
import sys
from pathlib import Path

import numpy as np

SRC = Path(__file__).resolve().parent.parent / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))


def subprocess_env() -> dict:
    """Environment for CLI subprocess tests: make the package importable."""
    env = dict(os.environ)
    env["PYTHONPATH"] = str(SRC) + os.pathsep + env.get("PYTHONPATH", "")
    return env


def make_audit_instance(rng):
    """Random (x, y) pair for the never-fail bound suite.

    Three regimes are mixed: near-exact factorizations of the Gram matrix
    (rank hypothesis met with margin), isometric column transforms
    (epsilon ~ 0), and unrelated random embeddings (hypothesis unmet; the
    entry-wise and Weyl checks still must hold). Data always contains a
    pair of exactly orthogonal rows so the orthogonality audit has real
    work to do.
    """
    n = int(rng.integers(8, 33))
    r = int(rng.integers(1, 5))
    d = int(rng.integers(r, r + 8))
    x = rng.normal(size=(n, r)) @ rng.normal(size=(r, d))
    if n >= 2 and r >= 2:
        # force an exactly orthogonal row pair without changing the row space
        n0 = x[0] / np.linalg.norm(x[0])
        x[1] = x[1] - (x[1] @ n0) * n0
    mode = int(rng.integers(3))
    if mode == 0:
        evals, evecs = np.linalg.eigh(x @ x.T)
        evals = np.clip(evals[::-1][:r], 0.0, None)
        y_star = evecs[:, ::-1][:, :r] * np.sqrt(evals)
        extra = int(rng.integers(0, 3))
        if extra:
            y_star = np.column_stack([y_star, np.zeros((n, extra))])
        sigma_r_sq = evals[r - 1]
        y = None
        for scale in (0.05, 0.01, 0.002, 0.0):
            cand = y_star + scale * np.sqrt(max(sigma_r_sq, 1e-12)) * rng.normal(size=y_star.shape) / np.sqrt(n)
            eps = float(np.sum((x @ x.T - cand @ cand.T) ** 2))
            if eps < 0.1 * sigma_r_sq**2:
                y = cand
                break
        if y is None:
            y = y_star
    elif mode == 1:
        k = int(rng.integers(1, 7))
        y = rng.normal(size=(n, k))
    else:
        q = np.linalg.qr(rng.normal(size=(d, d)))[0]
        y = x @ q
    return x, y
