"""Dense feed-forward machinery with hand-derived reverse-mode gradients.

Just enough for the pose VAE: Linear / ReLU / Tanh6 (x -> 6*tanh(x))
layers, a tape recording forward intermediates, exact backward passes,
Kaiming-normal initialization, Adam, and JSON serialization. The ReLU
derivative at exactly 0 is taken as 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericError

ACT_RELU = "relu"
ACT_TANH6 = "tanh6"
ACT_LINEAR = "linear"
_ACTIVATIONS = (ACT_RELU, ACT_TANH6, ACT_LINEAR)

FORMAT_VERSION = 1


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray   # (out,)
    activation: str

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)
        if self.activation not in _ACTIVATIONS:
            raise DataError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise DataError("inconsistent layer shapes "
                            f"{self.weights.shape} / {self.biases.shape}")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.biases).all()):
            raise DataError("non-finite layer parameters")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


def kaiming_init(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Normal(0, 2/fan_in) weights."""
    if rows < 1 or cols < 1:
        raise DataError("layer dimensions must be >= 1")
    return rng.normal(0.0, np.sqrt(2.0 / cols), size=(rows, cols))


def bias_init(n: int) -> np.ndarray:
    return np.full(n, 0.01)


def make_layer(in_dim: int, out_dim: int, activation: str,
               rng: np.random.Generator) -> DenseLayer:
    return DenseLayer(weights=kaiming_init(out_dim, in_dim, rng),
                      biases=bias_init(out_dim), activation=activation)


def _activate(pre: np.ndarray, activation: str) -> np.ndarray:
    if activation == ACT_RELU:
        return np.maximum(pre, 0.0)
    if activation == ACT_TANH6:
        return 6.0 * np.tanh(pre)
    return pre


def _activate_grad(pre: np.ndarray, out: np.ndarray, activation: str) -> np.ndarray:
    if activation == ACT_RELU:
        return (pre > 0).astype(float)
    if activation == ACT_TANH6:
        # d/dx 6*tanh(x) = 6*(1 - tanh^2 x) = 6 - out^2 / 6
        return 6.0 - out * out / 6.0
    return np.ones_like(pre)


@dataclass
class Tape:
    """Forward intermediates: per layer (input, pre-activation, output)."""

    records: list[tuple[DenseLayer, np.ndarray, np.ndarray, np.ndarray]] = \
        field(default_factory=list)


def forward(layers: list[DenseLayer], x: np.ndarray,
            tape: Tape | None = None) -> np.ndarray:
    """Run a batch (B, in) or single vector through the stack."""
    h = np.asarray(x, dtype=float)
    squeeze = h.ndim == 1
    if squeeze:
        h = h[None, :]
    for layer in layers:
        if h.shape[1] != layer.in_dim:
            raise DataError(
                f"shape mismatch: input width {h.shape[1]} != {layer.in_dim}")
        pre = h @ layer.weights.T + layer.biases
        out = _activate(pre, layer.activation)
        if tape is not None:
            tape.records.append((layer, h, pre, out))
        h = out
    return h[0] if squeeze else h


def backward(tape: Tape, d_out: np.ndarray, out_grads=None):
    """Exact gradients for every recorded layer.

    Returns (grads, d_input) where grads is a list aligned with the
    recorded layers, each entry (dW, db). When `out_grads` (a list of
    (dW, db) buffers of matching shapes) is given, gradients are written
    into those buffers instead of fresh arrays.
    """
    if not tape.records:
        raise DataError("backward on an empty tape")
    grad = np.asarray(d_out, dtype=float)
    if grad.ndim == 1:
        grad = grad[None, :]
    if out_grads is not None and len(out_grads) != len(tape.records):
        raise DataError("backward: out_grads length mismatch")
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(tape.records)
    for i in range(len(tape.records) - 1, -1, -1):
        layer, inp, pre, out = tape.records[i]
        if grad.shape != out.shape:
            raise DataError(
                f"gradient shape {grad.shape} does not match layer output "
                f"{out.shape}")
        d_pre = grad * _activate_grad(pre, out, layer.activation)
        if out_grads is None:
            grads[i] = (d_pre.T @ inp, d_pre.sum(axis=0))
        else:
            d_w, d_b = out_grads[i]
            np.matmul(d_pre.T, inp, out=d_w)
            np.sum(d_pre, axis=0, out=d_b)
            grads[i] = (d_w, d_b)
        grad = d_pre @ layer.weights
    return grads, grad


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: list[np.ndarray] = field(default_factory=list)
    second_moment: list[np.ndarray] = field(default_factory=list)
    _scratch: list[np.ndarray] = field(default_factory=list, repr=False)

    @classmethod
    def for_params(cls, params: list[np.ndarray], lr: float = 0.001) -> "AdamState":
        return cls(lr=lr,
                   first_moment=[np.zeros_like(p) for p in params],
                   second_moment=[np.zeros_like(p) for p in params],
                   _scratch=[np.empty_like(p) for p in params])


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState) -> None:
    """Bias-corrected Adam update, in place.

    Uses the folded form p -= lr'·m/(sqrt(v) + eps') with
    lr' = lr·sqrt(1-b2^t)/(1-b1^t) and eps' = eps·sqrt(1-b2^t), which is
    algebraically identical to dividing m and v by their bias corrections.
    """
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise DataError("adam: parameter/gradient count mismatch")
    if not state._scratch:
        state._scratch = [np.empty_like(p) for p in params]
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    bc2 = np.sqrt(1 - b2 ** t)
    lr_t = state.lr * bc2 / (1 - b1 ** t)
    eps_t = state.epsilon * bc2
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise DataError(f"adam: shape mismatch at parameter {i}")
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient for parameter {i}")
        m = state.first_moment[i]
        v = state.second_moment[i]
        s = state._scratch[i]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        np.multiply(g, g, out=s)
        s *= 1 - b2
        v += s
        np.sqrt(v, out=s)
        s += eps_t
        np.divide(m, s, out=s)
        s *= lr_t
        p -= s


def layers_to_dict(layers: list[DenseLayer]) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "layers": [{
            "activation": l.activation,
            "shape": [l.out_dim, l.in_dim],
            "weights": l.weights.ravel().tolist(),  # row-major
            "biases": l.biases.tolist(),
        } for l in layers],
    }


def layers_from_dict(data: dict) -> list[DenseLayer]:
    if data.get("format_version") != FORMAT_VERSION:
        raise DataError(
            f"unsupported model format version {data.get('format_version')!r}")
    layers = []
    for spec in data["layers"]:
        out_dim, in_dim = spec["shape"]
        weights = np.asarray(spec["weights"], dtype=float).reshape(out_dim, in_dim)
        layers.append(DenseLayer(weights=weights,
                                 biases=np.asarray(spec["biases"], dtype=float),
                                 activation=spec["activation"]))
    return layers
