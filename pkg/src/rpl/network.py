"""Projection network: a small MLP with explicit forward and backward passes.

No autodiff framework is involved; gradients are computed by hand so the
training loop stays a pure numpy computation whose determinism and
correctness can be checked against finite differences.

Hidden layers share one activation (tanh / relu / identity); the output
layer is always the identity, so embeddings are unconstrained in scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix

ACTIVATIONS = ("tanh", "relu", "identity")

CHECKPOINT_MAGIC = "rpl-mlp-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class MlpParams:
    """Layer weights and biases of the projection network.

    weights[l] has shape (layer_dims[l], layer_dims[l+1]); biases[l] has
    shape (layer_dims[l+1],).
    """

    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "tanh"

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    def validate(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; valid: {ACTIVATIONS}")
        if len(self.layer_dims) < 2:
            raise ValueError("need at least input and output dims")
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("weights/biases do not match layer_dims")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            want = (self.layer_dims[l], self.layer_dims[l + 1])
            if w.shape != want:
                raise ValueError(f"layer {l} weight shape {w.shape} != {want}")
            if b.shape != (self.layer_dims[l + 1],):
                raise ValueError(f"layer {l} bias shape {b.shape} != ({self.layer_dims[l + 1]},)")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {l} has non-finite parameters")

    def copy(self) -> "MlpParams":
        return MlpParams(
            layer_dims=list(self.layer_dims),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
        )


@dataclass
class ForwardTrace:
    """Per-layer tensors retained by forward() for the backward pass."""

    inputs: list[np.ndarray] = field(default_factory=list)
    activations: list[np.ndarray] = field(default_factory=list)
    output: np.ndarray | None = None


def init_params(layer_dims, activation: str = "tanh", seed: int = 0) -> MlpParams:
    """Deterministic initialization: scaled-uniform weights, zero biases.

    Weights are drawn uniformly from +-sqrt(6 / (fan_in + fan_out)), a
    variance-preserving range for the supported activations.
    """
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2:
        raise ValueError("layer_dims needs at least an input and an output dim")
    if any(d < 1 for d in dims):
        raise ValueError(f"all layer dims must be >= 1, got {dims}")
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}; valid: {ACTIVATIONS}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(layer_dims=dims, weights=weights, biases=biases, activation=activation)


def _apply_activation(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    if kind == "relu":
        return np.maximum(z, 0.0)
    return z


def _activation_grad_from_output(a: np.ndarray, kind: str) -> np.ndarray:
    # derivative expressed through the activation output, which the trace keeps
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "relu":
        return (a > 0.0).astype(a.dtype)
    return np.ones_like(a)


def forward(params: MlpParams, x_b) -> tuple[np.ndarray, ForwardTrace]:
    """Map a batch through the network, keeping the trace for backward()."""
    x = as_matrix(x_b, "x_b")
    if x.shape[1] != params.input_dim:
        raise ValueError(
            f"input has {x.shape[1]} columns but the network expects {params.input_dim}"
        )
    trace = ForwardTrace()
    a = x
    last = params.n_layers - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        trace.inputs.append(a)
        z = a @ w + b
        a = z if l == last else _apply_activation(z, params.activation)
        trace.activations.append(a)
    trace.output = a
    return a, trace


def backward(params: MlpParams, trace: ForwardTrace, grad_y) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Reverse-mode gradients of the forward pass.

    Returns (grad_weights, grad_biases) with the same shapes as the
    parameters, given dL/dY for the batch the trace was recorded on.
    """
    g = as_matrix(grad_y, "grad_y")
    if trace.output is None or len(trace.inputs) != params.n_layers:
        raise ValueError("trace does not match the network (wrong layer count)")
    if g.shape != trace.output.shape:
        raise ValueError(f"grad_y shape {g.shape} != forward output shape {trace.output.shape}")
    grad_w = [None] * params.n_layers
    grad_b = [None] * params.n_layers
    delta = g
    for l in range(params.n_layers - 1, -1, -1):
        a_in = trace.inputs[l]
        if a_in.shape[0] != delta.shape[0] or a_in.shape[1] != params.layer_dims[l]:
            raise ValueError(f"stale trace at layer {l}: input shape {a_in.shape}")
        grad_w[l] = a_in.T @ delta
        grad_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = delta @ params.weights[l].T
            delta = delta * _activation_grad_from_output(trace.activations[l - 1], params.activation)
    return grad_w, grad_b


def save_checkpoint(path, params: MlpParams):
    """Write a versioned text checkpoint (exact round-trip via repr floats).

    Layout (UTF-8, newline-delimited):
        rpl-mlp-checkpoint v1
        activation <tag>
        layer_dims <d0> <d1> ... <dk>
        weights <l>          followed by fan_in rows of fan_out values
        biases <l>           followed by one row of fan_out values
    """
    params.validate()
    lines = [
        f"{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}",
        f"activation {params.activation}",
        "layer_dims " + " ".join(str(d) for d in params.layer_dims),
    ]
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        lines.append(f"weights {l}")
        for row in w:
            lines.append(" ".join(repr(float(v)) for v in row))
        lines.append(f"biases {l}")
        lines.append(" ".join(repr(float(v)) for v in b))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path) -> MlpParams:
    """Read a checkpoint written by save_checkpoint."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith(CHECKPOINT_MAGIC):
        raise ValueError(f"{path}: not a checkpoint file")
    version = lines[0].split()[-1]
    if version != f"v{CHECKPOINT_VERSION}":
        raise ValueError(f"{path}: unsupported checkpoint version {version!r}")
    if not lines[1].startswith("activation ") or not lines[2].startswith("layer_dims "):
        raise ValueError(f"{path}: malformed checkpoint header")
    activation = lines[1].split(maxsplit=1)[1]
    dims = [int(t) for t in lines[2].split()[1:]]
    weights, biases = [], []
    pos = 3
    for l in range(len(dims) - 1):
        fan_in, fan_out = dims[l], dims[l + 1]
        if lines[pos] != f"weights {l}":
            raise ValueError(f"{path}: expected 'weights {l}' at line {pos + 1}")
        pos += 1
        rows = []
        for _ in range(fan_in):
            vals = [float(t) for t in lines[pos].split()]
            if len(vals) != fan_out:
                raise ValueError(f"{path}: line {pos + 1} has {len(vals)} values, expected {fan_out}")
            rows.append(vals)
            pos += 1
        weights.append(np.array(rows, dtype=np.float64))
        if lines[pos] != f"biases {l}":
            raise ValueError(f"{path}: expected 'biases {l}' at line {pos + 1}")
        pos += 1
        vals = [float(t) for t in lines[pos].split()]
        if len(vals) != fan_out:
            raise ValueError(f"{path}: line {pos + 1} has {len(vals)} values, expected {fan_out}")
        biases.append(np.array(vals, dtype=np.float64))
        pos += 1
    params = MlpParams(layer_dims=dims, weights=weights, biases=biases, activation=activation)
    params.validate()
    return params
