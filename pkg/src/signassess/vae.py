"""Per-frame pose VAE: 183 -> (100, 50) -> 10-dim latent and back.

The encoder trunk feeds two linear heads (mean and log-variance); the
decoder mirrors the trunk and ends in 6*tanh so reconstructions live
strictly inside the coordinate range. Training minimizes
alpha*L1_hands + (1-alpha)*L1_body + beta*KLD with the reparameterized
sample z = mu + noise_scale * exp(0.5*logvar) * eps.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, NumericError
from .ioutil import read_json, read_matrix_csv, write_json_atomic, write_matrix_csv
from .nn import (
    ACT_LINEAR,
    ACT_RELU,
    ACT_TANH6,
    AdamState,
    DenseLayer,
    Tape,
    adam_step,
    backward,
    forward,
    layers_from_dict,
    layers_to_dict,
    make_layer,
)
from .skeleton import NodePartition, POSE_DIM

FORMAT_VERSION = 1


@dataclass
class VaeConfig:
    input_dim: int = POSE_DIM
    hidden: tuple[int, ...] = (100, 50)
    latent_dim: int = 10
    alpha: float = 0.9
    beta: float = 0.0001
    lr: float = 0.001
    batch_size: int = 32
    epochs: int = 2000          # desk scale; the reference setting is 100000
    noise_scale: float = 0.001
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise DataError("alpha must be in [0, 1]")
        if self.beta < 0:
            raise DataError("beta must be >= 0")
        if self.latent_dim < 1:
            raise DataError("latent_dim must be >= 1")


@dataclass
class VaeModel:
    trunk: list[DenseLayer]
    head_mu: list[DenseLayer]
    head_logvar: list[DenseLayer]
    decoder: list[DenseLayer]
    config: VaeConfig

    def parameters(self) -> list[np.ndarray]:
        params = []
        for stack in (self.trunk, self.head_mu, self.head_logvar, self.decoder):
            for layer in stack:
                params.append(layer.weights)
                params.append(layer.biases)
        return params


def init_vae(config: VaeConfig) -> VaeModel:
    rng = np.random.default_rng(config.seed)
    dims = (config.input_dim, *config.hidden)
    trunk = [make_layer(dims[i], dims[i + 1], ACT_RELU, rng)
             for i in range(len(dims) - 1)]
    head_mu = [make_layer(dims[-1], config.latent_dim, ACT_LINEAR, rng)]
    head_logvar = [make_layer(dims[-1], config.latent_dim, ACT_LINEAR, rng)]
    rev = (config.latent_dim, *reversed(config.hidden))
    decoder = [make_layer(rev[i], rev[i + 1], ACT_RELU, rng)
               for i in range(len(rev) - 1)]
    decoder.append(make_layer(rev[-1], config.input_dim, ACT_TANH6, rng))
    return VaeModel(trunk=trunk, head_mu=head_mu, head_logvar=head_logvar,
                    decoder=decoder, config=config)


def encode(model: VaeModel, x: np.ndarray,
           tapes: tuple[Tape, Tape, Tape] | None = None):
    """Return (mu, logvar) for a pose vector or batch."""
    t_trunk, t_mu, t_lv = tapes if tapes is not None else (None, None, None)
    h = forward(model.trunk, x, t_trunk)
    mu = forward(model.head_mu, h, t_mu)
    logvar = forward(model.head_logvar, h, t_lv)
    if not (np.isfinite(mu).all() and np.isfinite(logvar).all()):
        raise NumericError("encoder produced non-finite latents")
    return mu, logvar


def reparameterize(mu: np.ndarray, logvar: np.ndarray, eps: np.ndarray,
                   noise_scale: float) -> np.ndarray:
    return mu + noise_scale * np.exp(0.5 * logvar) * eps


def decode(model: VaeModel, z: np.ndarray, tape: Tape | None = None) -> np.ndarray:
    return forward(model.decoder, z, tape)


def vae_loss(x: np.ndarray, x_hat: np.ndarray, mu: np.ndarray,
             logvar: np.ndarray, partition: NodePartition,
             alpha: float, beta: float):
    """Return (total, l1_hands, l1_body, kld).

    The L1 terms are means over their coordinate subsets (and the batch);
    the KLD is summed over latent dimensions per sample, then batch-meaned.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    x_hat = np.atleast_2d(np.asarray(x_hat, dtype=float))
    mu = np.atleast_2d(np.asarray(mu, dtype=float))
    logvar = np.atleast_2d(np.asarray(logvar, dtype=float))
    if x.shape != x_hat.shape:
        raise DataError("x and x_hat shapes differ")
    hand_idx = partition.hand_coords
    body_idx = partition.body_coords
    diff = np.abs(x_hat - x)
    l1_hands = float(diff[:, hand_idx].mean())
    l1_body = float(diff[:, body_idx].mean())
    kld_per_sample = -0.5 * (1 + logvar - mu ** 2 - np.exp(logvar)).sum(axis=1)
    kld = float(kld_per_sample.mean())
    total = alpha * l1_hands + (1 - alpha) * l1_body + beta * kld
    return float(total), l1_hands, l1_body, kld


def _loss_grads(x, x_hat, mu, logvar, partition, alpha, beta):
    """Gradients of the total loss w.r.t. x_hat, mu, logvar."""
    batch = x.shape[0]
    hand_idx = partition.hand_coords
    body_idx = partition.body_coords
    d_xhat = np.zeros_like(x_hat)
    sign = np.sign(x_hat - x)
    d_xhat[:, hand_idx] = alpha * sign[:, hand_idx] / (batch * hand_idx.size)
    d_xhat[:, body_idx] = (1 - alpha) * sign[:, body_idx] / (batch * body_idx.size)
    d_mu = beta * mu / batch
    d_logvar = beta * 0.5 * (np.exp(logvar) - 1.0) / batch
    return d_xhat, d_mu, d_logvar


def loss_and_grads(model: VaeModel, x: np.ndarray, eps: np.ndarray,
                   partition: NodePartition):
    """One forward/backward pass; returns (loss tuple, grads per parameter).

    Gradient list order matches model.parameters().
    """
    cfg = model.config
    t_trunk, t_mu, t_lv, t_dec = Tape(), Tape(), Tape(), Tape()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    mu, logvar = encode(model, x, (t_trunk, t_mu, t_lv))
    z = reparameterize(mu, logvar, eps, cfg.noise_scale)
    x_hat = decode(model, z, t_dec)
    losses = vae_loss(x, x_hat, mu, logvar, partition, cfg.alpha, cfg.beta)
    d_xhat, d_mu, d_logvar = _loss_grads(x, x_hat, mu, logvar, partition,
                                         cfg.alpha, cfg.beta)
    dec_grads, d_z = backward(t_dec, d_xhat)
    # z = mu + noise_scale * exp(0.5*logvar) * eps
    d_mu = d_mu + d_z
    d_logvar = d_logvar + d_z * (0.5 * cfg.noise_scale
                                 * np.exp(0.5 * logvar) * eps)
    mu_grads, d_h_mu = backward(t_mu, d_mu)
    lv_grads, d_h_lv = backward(t_lv, d_logvar)
    trunk_grads, _ = backward(t_trunk, d_h_mu + d_h_lv)
    grads: list[np.ndarray] = []
    for stack in (trunk_grads, mu_grads, lv_grads, dec_grads):
        for d_w, d_b in stack:
            grads.append(d_w)
            grads.append(d_b)
    return losses, grads


def _flatten_parameters(model: VaeModel) -> tuple[np.ndarray, np.ndarray]:
    """Repoint every layer's weights/biases at views into one flat buffer.

    Adam is elementwise, so updating the single concatenated vector is
    identical to updating each parameter array separately; doing it in one
    shot removes a hundred small-array ops per step. Returns the flat
    parameter buffer and a matching flat gradient buffer.
    """
    params = model.parameters()
    total = sum(p.size for p in params)
    flat = np.empty(total)
    flat_grad = np.empty(total)
    offset = 0
    for stack in (model.trunk, model.head_mu, model.head_logvar, model.decoder):
        for layer in stack:
            for name in ("weights", "biases"):
                arr = getattr(layer, name)
                view = flat[offset:offset + arr.size].reshape(arr.shape)
                view[...] = arr
                setattr(layer, name, view)
                offset += arr.size
    return flat, flat_grad


def _grad_views(model: VaeModel, flat_grad: np.ndarray) -> dict:
    """Per-stack (dW, db) views into the flat gradient buffer, laid out in
    model.parameters() order."""
    views: dict = {}
    offset = 0
    for key, stack in (("trunk", model.trunk), ("mu", model.head_mu),
                       ("lv", model.head_logvar), ("dec", model.decoder)):
        pairs = []
        for layer in stack:
            d_w = flat_grad[offset:offset + layer.weights.size].reshape(
                layer.weights.shape)
            offset += layer.weights.size
            d_b = flat_grad[offset:offset + layer.biases.size]
            offset += layer.biases.size
            pairs.append((d_w, d_b))
        views[key] = pairs
    return views


def _loss_and_grads_flat(model: VaeModel, x: np.ndarray, eps: np.ndarray,
                         partition: NodePartition, views: dict):
    """loss_and_grads writing gradients into the flat buffer views."""
    cfg = model.config
    t_trunk, t_mu, t_lv, t_dec = Tape(), Tape(), Tape(), Tape()
    mu, logvar = encode(model, x, (t_trunk, t_mu, t_lv))
    z = reparameterize(mu, logvar, eps, cfg.noise_scale)
    x_hat = decode(model, z, t_dec)
    losses = vae_loss(x, x_hat, mu, logvar, partition, cfg.alpha, cfg.beta)
    d_xhat, d_mu, d_logvar = _loss_grads(x, x_hat, mu, logvar, partition,
                                         cfg.alpha, cfg.beta)
    _, d_z = backward(t_dec, d_xhat, views["dec"])
    d_mu = d_mu + d_z
    d_logvar = d_logvar + d_z * (0.5 * cfg.noise_scale
                                 * np.exp(0.5 * logvar) * eps)
    _, d_h_mu = backward(t_mu, d_mu, views["mu"])
    _, d_h_lv = backward(t_lv, d_logvar, views["lv"])
    backward(t_trunk, d_h_mu + d_h_lv, views["trunk"])
    return losses


@dataclass
class TrainResult:
    model: VaeModel
    trace: list[float] = field(default_factory=list)  # per-epoch mean total loss
    seconds: float = 0.0


def train_vae(poses: np.ndarray, config: VaeConfig,
              partition: NodePartition) -> TrainResult:
    """Train on a pool of pose frames; deterministic in config.seed."""
    poses = np.asarray(poses, dtype=float)
    if poses.ndim != 2 or poses.shape[1] != config.input_dim:
        raise DataError(f"training pool must be (N, {config.input_dim})")
    if poses.shape[0] < config.batch_size:
        raise DataError("training pool smaller than one batch")
    model = init_vae(config)
    flat, flat_grad = _flatten_parameters(model)
    views = _grad_views(model, flat_grad)
    adam = AdamState.for_params([flat], lr=config.lr)
    rng = np.random.default_rng(config.seed + 1)  # batch/noise stream
    n = poses.shape[0]
    trace: list[float] = []
    started = time.perf_counter()
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        batches = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            x = poses[idx]
            eps = rng.standard_normal((x.shape[0], config.latent_dim))
            losses = _loss_and_grads_flat(model, x, eps, partition, views)
            if not np.isfinite(losses[0]):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}, batch {batches}")
            adam_step([flat], [flat_grad], adam)
            epoch_loss += losses[0]
            batches += 1
        trace.append(epoch_loss / batches)
    return TrainResult(model=model, trace=trace,
                       seconds=time.perf_counter() - started)


# ---------------------------------------------------------------------------
# Latent sequences


@dataclass
class LatentSequence:
    sentence_id: str
    signer_id: str
    mu: np.ndarray       # (T, latent_dim)
    logvar: np.ndarray   # (T, latent_dim)

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.logvar = np.asarray(self.logvar, dtype=float)
        if self.mu.shape != self.logvar.shape or self.mu.ndim != 2:
            raise DataError("latent mu/logvar must share shape (T, D)")
        if not (np.isfinite(self.mu).all() and np.isfinite(self.logvar).all()):
            raise DataError("non-finite latent values")

    def __len__(self) -> int:
        return self.mu.shape[0]


def encode_sequence(model: VaeModel, frames: np.ndarray, *,
                    sentence_id: str = "", signer_id: str = "") -> LatentSequence:
    mu, logvar = encode(model, frames)
    return LatentSequence(sentence_id=sentence_id, signer_id=signer_id,
                          mu=np.atleast_2d(mu), logvar=np.atleast_2d(logvar))


def encode_corpus(model: VaeModel, manifest, load_sequence_fn=None):
    """Encode every manifest entry; returns {(sentence, signer): LatentSequence}."""
    from .skeleton import load_sequence as _load
    loader = load_sequence_fn or _load
    out = {}
    for entry in manifest.entries:
        seq = loader(manifest.entry_path(entry), sentence_id=entry.sentence,
                     signer_id=entry.signer)
        out[(entry.sentence, entry.signer)] = encode_sequence(
            model, seq.frames, sentence_id=entry.sentence,
            signer_id=entry.signer)
    return out


def save_latents(seq: LatentSequence, path: str | Path) -> None:
    """CSV rows = frames: latent_dim mu columns then latent_dim logvar columns."""
    write_matrix_csv(path, np.hstack([seq.mu, seq.logvar]))


def load_latents(path: str | Path, *, sentence_id: str = "",
                 signer_id: str = "") -> LatentSequence:
    mat, _ = read_matrix_csv(path)
    if mat.shape[1] % 2 != 0:
        raise DataError(f"{path}: latent CSV must have an even column count")
    d = mat.shape[1] // 2
    return LatentSequence(sentence_id=sentence_id, signer_id=signer_id,
                          mu=mat[:, :d], logvar=mat[:, d:])


# ---------------------------------------------------------------------------
# Model serialization


def save_vae(model: VaeModel, path: str | Path) -> None:
    cfg = model.config
    write_json_atomic(path, {
        "format_version": FORMAT_VERSION,
        "config": {
            "input_dim": cfg.input_dim, "hidden": list(cfg.hidden),
            "latent_dim": cfg.latent_dim, "alpha": cfg.alpha, "beta": cfg.beta,
            "lr": cfg.lr, "batch_size": cfg.batch_size, "epochs": cfg.epochs,
            "noise_scale": cfg.noise_scale, "seed": cfg.seed,
        },
        "trunk": layers_to_dict(model.trunk),
        "head_mu": layers_to_dict(model.head_mu),
        "head_logvar": layers_to_dict(model.head_logvar),
        "decoder": layers_to_dict(model.decoder),
    })


def load_vae(path: str | Path) -> VaeModel:
    data = read_json(path)
    if data.get("format_version") != FORMAT_VERSION:
        raise DataError(
            f"unsupported VAE format version {data.get('format_version')!r}")
    raw = data["config"]
    config = VaeConfig(input_dim=int(raw["input_dim"]),
                       hidden=tuple(raw["hidden"]),
                       latent_dim=int(raw["latent_dim"]),
                       alpha=float(raw["alpha"]), beta=float(raw["beta"]),
                       lr=float(raw["lr"]), batch_size=int(raw["batch_size"]),
                       epochs=int(raw["epochs"]),
                       noise_scale=float(raw["noise_scale"]),
                       seed=int(raw["seed"]))
    return VaeModel(trunk=layers_from_dict(data["trunk"]),
                    head_mu=layers_from_dict(data["head_mu"]),
                    head_logvar=layers_from_dict(data["head_logvar"]),
                    decoder=layers_from_dict(data["decoder"]),
                    config=config)
