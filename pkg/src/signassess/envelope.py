"""Gaussian-process motion envelopes over aligned latent trajectories.

One exact GP per latent dimension, trained on every aligned native
production of a sentence.  Because all K sequences share the reference
time grid, the N = K*T kernel system collapses to a T x T system:

    C = 1_{KxK} (x) F + sn2*I_N          (F = RBF gram on the grid)

    log|C|       = log|K*F + sn2*I_T| + (K-1)*T*log(sn2)
    y^T C^-1 y   = K * ybar^T A ybar + SS / sn2

with A = (K*F + sn2*I_T)^-1, ybar the per-time mean over the K
sequences, and SS the within-time sum of squares.  Posterior queries
reduce the same way.  All quantities are exact, not approximations.
"""

from dataclasses import dataclass, field
from math import lgamma, log, pi
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_solve

from .errors import DataError, NumericError
from .ioutil import read_json, write_json_atomic
from .nn import AdamState, adam_step

FORMAT_VERSION = 1

JITTER_LADDER = (0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)
LOG_PARAM_MIN = log(1e-6)
LOG_PARAM_MAX = log(1e6)
CONFIDENCE_MULTIPLIER = 1.96


@dataclass(frozen=True)
class GpHyperparams:
    lengthscale: float
    outputscale: float   # signal variance s^2
    noise: float         # observation noise variance sn^2

    def __post_init__(self):
        for name in ("lengthscale", "outputscale", "noise"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0.0:
                raise DataError(f"hyperparameter {name} must be finite and > 0, got {v!r}")


@dataclass(frozen=True)
class GpConfig:
    lr: float = 0.1
    tol: float = 1e-3            # stop when |loss_i - loss_{i-1}| < tol
    max_iters: int = 2000
    init_lengthscale: float = 0.2
    outputscale_frac: float = 1.0   # of target variance
    noise_frac: float = 0.05        # of target variance
    prior_concentration: float = 0.1
    prior_rate: float = 0.1
    checkpoint_every: int = 50

    def __post_init__(self):
        if self.lr <= 0 or self.tol <= 0 or self.max_iters < 1:
            raise DataError("gp config: lr, tol must be > 0 and max_iters >= 1")
        if self.prior_concentration <= 0 or self.prior_rate <= 0:
            raise DataError("gp config: gamma prior parameters must be > 0")


@dataclass
class GpModel:
    """Exact GP over a shared time grid with K replicated target rows."""

    times: np.ndarray            # (T,) inputs, normalized to [0, 1]
    targets: np.ndarray          # (K, T) one latent dim of K aligned sequences
    hyperparams: GpHyperparams
    prior: tuple[float, float] = (0.1, 0.1)   # gamma(concentration, rate) on lengthscale
    fit_trace: Optional[tuple] = None          # ((iteration, best objective), ...)
    _cache: Optional[dict] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=float))
        if self.times.ndim != 1 or self.times.size == 0:
            raise DataError("gp model: times must be a non-empty 1-D array")
        if self.targets.shape[1] != self.times.size:
            raise DataError("gp model: targets must have one column per time point")
        if not np.isfinite(self.times).all() or not np.isfinite(self.targets).all():
            raise DataError("gp model: non-finite inputs or targets")

    @property
    def num_points(self) -> int:
        # N of the uncollapsed system
        return self.targets.size

    def factor(self) -> dict:
        if self._cache is None:
            self._cache = _factorize(self.times, self.targets, self.hyperparams)
        return self._cache


def rbf_kernel(t, t2, hp: GpHyperparams):
    """s^2 * exp(-(t - t')^2 / (2 l^2)); broadcasts over arrays."""
    diff = np.asarray(t, dtype=float) - np.asarray(t2, dtype=float)
    return hp.outputscale * np.exp(-0.5 * (diff / hp.lengthscale) ** 2)


def _gram(ta: np.ndarray, tb: np.ndarray, hp: GpHyperparams) -> np.ndarray:
    return rbf_kernel(ta[:, None], tb[None, :], hp)


def _cholesky_with_jitter(m: np.ndarray) -> tuple[np.ndarray, float]:
    for jitter in JITTER_LADDER:
        try:
            shifted = m if jitter == 0.0 else m + jitter * np.eye(m.shape[0])
            return np.linalg.cholesky(shifted), jitter
        except np.linalg.LinAlgError:
            continue
    raise NumericError("kernel system not positive definite after jitter ladder "
                       f"up to {JITTER_LADDER[-1]:g}")


def _factorize(times: np.ndarray, targets: np.ndarray, hp: GpHyperparams) -> dict:
    k_rep, t_len = targets.shape
    ybar = targets.mean(axis=0)
    ss = float(np.sum(targets * targets) - k_rep * np.sum(ybar * ybar))
    gram = _gram(times, times, hp)
    m = k_rep * gram + hp.noise * np.eye(t_len)
    chol, jitter = _cholesky_with_jitter(m)
    alpha = cho_solve((chol, True), ybar)
    return {"k_rep": k_rep, "ybar": ybar, "ss": max(ss, 0.0), "gram": gram,
            "chol": chol, "alpha": alpha, "jitter": jitter,
            "logdet": 2.0 * float(np.sum(np.log(np.diag(chol))))}


def _neg_log_gamma_pdf(value: float, concentration: float, rate: float) -> float:
    return ((1.0 - concentration) * log(value) + rate * value
            - concentration * log(rate) + lgamma(concentration))


def negative_mll(model: GpModel, include_prior: bool = True) -> float:
    """MAP objective: exact negative marginal log likelihood, plus the
    negative log gamma-prior density of the lengthscale unless excluded."""
    f = model.factor()
    hp = model.hyperparams
    k_rep, t_len = model.targets.shape
    quad = k_rep * float(f["ybar"] @ f["alpha"]) + f["ss"] / hp.noise
    logdet = f["logdet"] + (k_rep - 1) * t_len * log(hp.noise)
    nll = 0.5 * quad + 0.5 * logdet + 0.5 * model.num_points * log(2.0 * pi)
    if include_prior:
        nll += _neg_log_gamma_pdf(hp.lengthscale, *model.prior)
    if not np.isfinite(nll):
        raise NumericError("non-finite GP objective")
    return float(nll)


def _objective_and_grads(times: np.ndarray, targets: np.ndarray,
                         log_params: np.ndarray,
                         prior: tuple[float, float]) -> tuple[float, np.ndarray]:
    """MAP objective and its gradient w.r.t. (log l, log s^2, log sn^2)."""
    lengthscale, outputscale, noise = np.exp(log_params)
    hp = GpHyperparams(lengthscale, outputscale, noise)
    k_rep, t_len = targets.shape
    f = _factorize(times, targets, hp)
    alpha, gram = f["alpha"], f["gram"]

    quad = k_rep * float(f["ybar"] @ alpha) + f["ss"] / noise
    logdet = f["logdet"] + (k_rep - 1) * t_len * log(noise)
    obj = 0.5 * quad + 0.5 * logdet + 0.5 * targets.size * log(2.0 * pi)

    inv = cho_solve((f["chol"], True), np.eye(t_len))
    diff = times[:, None] - times[None, :]
    d_gram_log_l = gram * (diff * diff) / lengthscale**2

    def kernel_grad(d_gram: np.ndarray) -> float:
        data = -0.5 * k_rep**2 * float(alpha @ (d_gram @ alpha))
        det = 0.5 * k_rep * float(np.sum(inv * d_gram))   # tr(A dF)
        return data + det

    g_log_l = kernel_grad(d_gram_log_l)
    g_log_s2 = kernel_grad(gram)
    g_log_n2 = noise * (-0.5 * k_rep * float(alpha @ alpha)
                        - f["ss"] / (2.0 * noise**2)
                        + 0.5 * float(np.trace(inv))
                        + (k_rep - 1) * t_len / (2.0 * noise))

    a0, b0 = prior
    obj += _neg_log_gamma_pdf(lengthscale, a0, b0)
    g_log_l += (1.0 - a0) + b0 * lengthscale

    return float(obj), np.array([g_log_l, g_log_s2, g_log_n2])


def fit_gp(times: Sequence[float], targets: np.ndarray,
           config: Optional[GpConfig] = None) -> GpModel:
    """Adam on log-hyperparameters until the objective change drops
    below the tolerance.  Returns the best iterate seen, with a
    checkpoint trace of the running-best objective."""
    cfg = config or GpConfig()
    times = np.asarray(times, dtype=float)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if times.ndim != 1 or times.size < 2:
        raise DataError("fit_gp: need at least 2 time points")
    if targets.shape[1] != times.size:
        raise DataError("fit_gp: targets must have one column per time point")
    if times.min() < 0.0 or times.max() > 1.0:
        raise DataError("fit_gp: times must lie within [0, 1]")
    if not np.isfinite(targets).all():
        raise DataError("fit_gp: non-finite targets")

    scale = max(float(np.var(targets)), 1e-6)
    log_params = np.log([cfg.init_lengthscale,
                         cfg.outputscale_frac * scale,
                         cfg.noise_frac * scale])
    prior = (cfg.prior_concentration, cfg.prior_rate)
    state = AdamState.for_params([log_params], lr=cfg.lr)

    best_obj = np.inf
    best_params = log_params.copy()
    prev_obj = None
    trace = []
    for iteration in range(1, cfg.max_iters + 1):
        obj, grads = _objective_and_grads(times, targets, log_params, prior)
        if not np.isfinite(obj):
            raise NumericError(f"non-finite GP objective at iteration {iteration}")
        if obj < best_obj:
            best_obj = obj
            best_params = log_params.copy()
        if iteration == 1 or iteration % cfg.checkpoint_every == 0:
            trace.append((iteration, best_obj))
        if prev_obj is not None and abs(obj - prev_obj) < cfg.tol:
            break
        prev_obj = obj
        adam_step([log_params], [grads], state)
        np.clip(log_params, LOG_PARAM_MIN, LOG_PARAM_MAX, out=log_params)
    if not trace or trace[-1][0] != iteration:
        trace.append((iteration, best_obj))

    lengthscale, outputscale, noise = np.exp(best_params)
    return GpModel(times=times, targets=targets,
                   hyperparams=GpHyperparams(float(lengthscale), float(outputscale),
                                             float(noise)),
                   prior=prior, fit_trace=tuple(trace))


def posterior(model: GpModel, t_star):
    """Posterior (mean, var_f, var_pred) at query times.

    mean = K f*^T A ybar, var_f = k** - K f*^T A f*, var_pred = var_f + sn^2;
    negative var_f from roundoff is clamped to 0.
    """
    scalar = np.isscalar(t_star) or np.ndim(t_star) == 0
    query = np.atleast_1d(np.asarray(t_star, dtype=float))
    f = model.factor()
    hp = model.hyperparams
    fstar = _gram(query, model.times, hp)          # (M, T)
    mean = f["k_rep"] * (fstar @ f["alpha"])
    solved = cho_solve((f["chol"], True), fstar.T)  # (T, M)
    var_f = hp.outputscale - f["k_rep"] * np.einsum("mt,tm->m", fstar, solved)
    var_f = np.maximum(var_f, 0.0)
    var_pred = var_f + hp.noise
    if scalar:
        return float(mean[0]), float(var_f[0]), float(var_pred[0])
    return mean, var_f, var_pred


def confidence_region(model: GpModel, t_star, variance: str = "function"):
    """95% region mean +/- 1.96 sqrt(var); `variance` picks var_f
    ("function") or var_f + noise ("predictive")."""
    mean, var_f, var_pred = posterior(model, t_star)
    if variance == "function":
        spread = np.sqrt(var_f)
    elif variance == "predictive":
        spread = np.sqrt(var_pred)
    else:
        raise DataError(f"unknown variance kind {variance!r}")
    half = CONFIDENCE_MULTIPLIER * spread
    return mean - half, mean + half


@dataclass
class MotionEnvelope:
    """Per-dimension GPs over one sentence's aligned native trajectories."""

    sentence_id: str
    reference_signer: str
    t_star: int
    models: list          # one GpModel per latent dimension
    reference_trajectory: np.ndarray   # (T*, D) latent means of the reference
    signer_order: tuple

    def __post_init__(self):
        self.reference_trajectory = np.asarray(self.reference_trajectory, dtype=float)
        if self.reference_trajectory.shape != (self.t_star, len(self.models)):
            raise DataError("envelope: reference trajectory shape mismatch")
        grid = self.models[0].times
        for m in self.models[1:]:
            if m.times.shape != grid.shape or not np.array_equal(m.times, grid):
                raise DataError("envelope: dimensions must share one input grid")

    @property
    def num_dims(self) -> int:
        return len(self.models)

    @property
    def times(self) -> np.ndarray:
        return self.models[0].times


def grid_times(t_star: int) -> np.ndarray:
    """Indices 0..T*-1 normalized to [0, 1]."""
    if t_star < 2:
        raise DataError("grid: need at least 2 time points")
    return np.arange(t_star, dtype=float) / (t_star - 1)


def fit_envelope(sentence_id: str, aligned_natives: dict,
                 reference_signer: str, reference_trajectory: np.ndarray,
                 config: Optional[GpConfig] = None) -> MotionEnvelope:
    """Fit one GP per latent dimension to all aligned native sequences.

    aligned_natives maps signer id -> (T*, D) aligned latent means; the
    reference signer's own (unwarped) trajectory is supplied separately
    and kept for aligning test productions later.
    """
    if len(aligned_natives) < 3:
        raise DataError(f"sentence {sentence_id}: need >= 3 aligned natives, "
                        f"got {len(aligned_natives)}")
    signer_order = tuple(sorted(aligned_natives))
    stacked = [np.asarray(aligned_natives[s], dtype=float) for s in signer_order]
    t_star, num_dims = stacked[0].shape
    for signer, seq in zip(signer_order, stacked):
        if seq.shape != (t_star, num_dims):
            raise DataError(f"sentence {sentence_id}: aligned shape mismatch "
                            f"for signer {signer}")
    times = grid_times(t_star)
    models = []
    for d in range(num_dims):
        targets = np.stack([seq[:, d] for seq in stacked])    # (K, T*)
        try:
            models.append(fit_gp(times, targets, config))
        except NumericError as exc:
            raise NumericError(f"sentence {sentence_id} dim {d}: {exc}") from exc
    return MotionEnvelope(sentence_id=sentence_id, reference_signer=reference_signer,
                          t_star=t_star, models=models,
                          reference_trajectory=reference_trajectory,
                          signer_order=signer_order)


def envelope_to_dict(env: MotionEnvelope) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "motion-envelope",
        "sentence": env.sentence_id,
        "reference_signer": env.reference_signer,
        "t_star": env.t_star,
        "signers": list(env.signer_order),
        "reference_trajectory": env.reference_trajectory.tolist(),
        "dimensions": [
            {
                "hyperparams": {
                    "lengthscale": m.hyperparams.lengthscale,
                    "outputscale": m.hyperparams.outputscale,
                    "noise": m.hyperparams.noise,
                },
                "prior": list(m.prior),
                "times": m.times.tolist(),
                "targets": m.targets.tolist(),
            }
            for m in env.models
        ],
    }


def envelope_from_dict(data: dict) -> MotionEnvelope:
    if data.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported envelope format version "
                        f"{data.get('format_version')!r}")
    models = []
    for entry in data["dimensions"]:
        hp = entry["hyperparams"]
        models.append(GpModel(
            times=np.asarray(entry["times"], dtype=float),
            targets=np.asarray(entry["targets"], dtype=float),
            hyperparams=GpHyperparams(hp["lengthscale"], hp["outputscale"],
                                      hp["noise"]),
            prior=tuple(entry.get("prior", (0.1, 0.1))),
        ))
    return MotionEnvelope(
        sentence_id=data["sentence"],
        reference_signer=data["reference_signer"],
        t_star=int(data["t_star"]),
        models=models,
        reference_trajectory=np.asarray(data["reference_trajectory"], dtype=float),
        signer_order=tuple(data["signers"]),
    )


def save_envelope(env: MotionEnvelope, path) -> None:
    write_json_atomic(path, envelope_to_dict(env))


def load_envelope(path) -> MotionEnvelope:
    return envelope_from_dict(read_json(path))
