"""Synthetic manifold generators, high-dimensional lifting, embedding I/O.

Two stress-test point clouds are provided. Their exact parameterizations
are conventions of this package:

* cinnamon roll -- an Archimedean spiral swept along a uniform height:
  (t cos(c t), t sin(c t), z) with t uniform in [0.5, 3.0], z uniform in
  [0, 2], and c chosen so the radial span covers ``turns`` revolutions.
  The latent parameter is t.
* twisted surface -- a band of base radius 2 and half-width 0.5 on a
  regular (u, v) grid, twisted by ``twist`` half-turns per revolution:
  ((2 + v cos(twist u / 2)) cos u, (2 + v cos(twist u / 2)) sin u,
  v sin(twist u / 2)). The latent parameter is u.

Both add optional isotropic Gaussian positional noise and are
deterministic for a fixed seed.

Embedding files are delimited text: UTF-8, newline-delimited, '.' decimal
point, values written with repr so a save/load round trip is exact. The
header line is ``dims <k>`` (plus the token ``ids`` when a leading id
column is present); every following line is one vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix

MANIFOLDS = ("cinnamon-roll", "twisted-surface")

ROLL_T_MIN = 0.5
ROLL_T_MAX = 3.0
ROLL_HEIGHT = 2.0
BAND_RADIUS = 2.0
BAND_HALF_WIDTH = 0.5


@dataclass
class ManifoldSample:
    points: np.ndarray  # (n, ambient_dim)
    latent: np.ndarray  # (n,)
    manifold_tag: str


def generate_cinnamon_roll(n: int, turns: float = 2.0, noise: float = 0.0, seed: int = 0) -> ManifoldSample:
    """Spiral-roll point cloud in R^3 with latent radial parameter t."""
    if n < 8:
        raise ValueError(f"need n >= 8 points, got {n}")
    rng = np.random.default_rng(seed)
    t = rng.uniform(ROLL_T_MIN, ROLL_T_MAX, size=n)
    z = rng.uniform(0.0, ROLL_HEIGHT, size=n)
    c = 2.0 * np.pi * turns / (ROLL_T_MAX - ROLL_T_MIN)
    points = np.column_stack([t * np.cos(c * t), t * np.sin(c * t), z])
    if noise > 0:
        points = points + rng.normal(0.0, noise, size=points.shape)
    return ManifoldSample(points=points, latent=t, manifold_tag="cinnamon-roll")


def roll_angular_rate(turns: float) -> float:
    """Angle multiplier c used by generate_cinnamon_roll."""
    return 2.0 * np.pi * turns / (ROLL_T_MAX - ROLL_T_MIN)


def generate_twisted_surface(n: int, twist: float = 1.0, noise: float = 0.0, seed: int = 0) -> ManifoldSample:
    """Twisted-band point cloud on a regular (u, v) grid with latent u."""
    if n < 8:
        raise ValueError(f"need n >= 8 points, got {n}")
    rng = np.random.default_rng(seed)
    n_v = max(2, int(round(np.sqrt(n / 8.0))))
    n_u = int(np.ceil(n / n_v))
    u = np.linspace(0.0, 2.0 * np.pi, n_u, endpoint=False)
    v = np.linspace(-BAND_HALF_WIDTH, BAND_HALF_WIDTH, n_v)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    uu = uu.ravel()[:n]
    vv = vv.ravel()[:n]
    half_angle = 0.5 * twist * uu
    radial = BAND_RADIUS + vv * np.cos(half_angle)
    points = np.column_stack([radial * np.cos(uu), radial * np.sin(uu), vv * np.sin(half_angle)])
    if noise > 0:
        points = points + rng.normal(0.0, noise, size=points.shape)
    return ManifoldSample(points=points, latent=uu, manifold_tag="twisted-surface")


def lift_to_high_dim(sample: ManifoldSample, target_dim: int, seed: int = 0) -> ManifoldSample:
    """Embed the sample into R^target_dim with a random orthonormal-column map.

    The lift is an isometry, so pairwise dot products (and hence any
    relationship matrix built from them) are preserved up to round-off,
    keeping the original low-dimensional geometry as the ground truth.
    """
    points = as_matrix(sample.points, "points")
    ambient = points.shape[1]
    if target_dim < ambient:
        raise ValueError(f"target_dim {target_dim} is below the ambient dim {ambient}")
    rng = np.random.default_rng(seed)
    gauss = rng.normal(size=(target_dim, ambient))
    q, r = np.linalg.qr(gauss)
    q = q * np.sign(np.diag(r))  # fix the sign convention so the map is unique
    lifted = points @ q.T
    return ManifoldSample(points=lifted, latent=sample.latent.copy(), manifold_tag=sample.manifold_tag)


def save_embeddings(path, matrix, ids=None):
    """Write a matrix (and optional row ids) in the delimited text format."""
    m = as_matrix(matrix, "matrix")
    n, cols = m.shape
    if n == 0:
        raise ValueError("no data rows to write")
    if ids is not None:
        ids = [str(i) for i in ids]
        if len(ids) != n:
            raise ValueError(f"{len(ids)} ids for {n} rows")
        if any((" " in i or "\t" in i) for i in ids):
            raise ValueError("ids must not contain whitespace")
    header = f"dims {cols}" + (" ids" if ids is not None else "")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for i in range(n):
            row = " ".join(repr(float(v)) for v in m[i])
            if ids is not None:
                row = ids[i] + " " + row
            fh.write(row + "\n")


def load_embeddings(path) -> tuple[np.ndarray, list[str] | None]:
    """Read an embedding file; returns (matrix, ids or None).

    Malformed rows (wrong column count, non-numeric or non-finite tokens)
    are rejected with the offending line number.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file, expected a 'dims <k>' header")
    head = lines[0].split()
    if len(head) not in (2, 3) or head[0] != "dims" or (len(head) == 3 and head[2] != "ids"):
        raise ValueError(f"{path}: line 1: malformed header {lines[0]!r}")
    try:
        cols = int(head[1])
    except ValueError:
        raise ValueError(f"{path}: line 1: column count {head[1]!r} is not an integer") from None
    if cols < 1:
        raise ValueError(f"{path}: line 1: column count must be >= 1")
    has_ids = len(head) == 3
    rows = []
    ids = [] if has_ids else None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        tokens = line.split()
        expected = cols + (1 if has_ids else 0)
        if len(tokens) != expected:
            raise ValueError(f"{path}: line {lineno}: expected {expected} tokens, got {len(tokens)}")
        if has_ids:
            ids.append(tokens[0])
            tokens = tokens[1:]
        values = []
        for tok in tokens:
            try:
                v = float(tok)
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric token {tok!r}") from None
            if not np.isfinite(v):
                raise ValueError(f"{path}: line {lineno}: non-finite value {tok!r}")
            values.append(v)
        rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64), ids
