"""Scoring a test production against a fitted motion envelope.

Two scores: the probability-density measure (mean Gaussian density of
the aligned test values under the per-point posterior) and the
out-of-distribution count (points falling outside the 95% band).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .alignment import DEFAULT_RADIUS, apply_warp, dtw
from .envelope import CONFIDENCE_MULTIPLIER, MotionEnvelope, posterior
from .errors import DataError
from .ioutil import write_json_atomic, write_matrix_csv

FORMAT_VERSION = 1

_VARIANCE_KINDS = ("function", "predictive")


@dataclass(frozen=True)
class ScoringConfig:
    # Both default to the noise-inclusive variance: individual
    # productions scatter around the envelope mean with production
    # noise, and the function-only band is far too tight for them
    # (nearly every in-distribution point lands outside it).
    pd_variance: str = "predictive"
    band_variance: str = "predictive"
    min_run: int = 3
    radius: int = DEFAULT_RADIUS

    def __post_init__(self):
        if self.pd_variance not in _VARIANCE_KINDS:
            raise DataError(f"unknown pd_variance {self.pd_variance!r}")
        if self.band_variance not in _VARIANCE_KINDS:
            raise DataError(f"unknown band_variance {self.band_variance!r}")
        if self.min_run < 1:
            raise DataError("min_run must be >= 1")


@dataclass
class ScoreBreakdown:
    sentence_id: str
    test_id: str
    t_star: int
    num_dims: int
    pd_measure: float
    ood_count: int
    test_values: np.ndarray   # (T*, D) aligned test
    means: np.ndarray         # (T*, D) posterior means
    var_f: np.ndarray
    var_pred: np.ndarray
    density: np.ndarray
    z_distance: np.ndarray    # signed, in units of the band spread
    outside: np.ndarray       # (T*, D) bool

    @property
    def outside_fraction(self) -> float:
        return self.ood_count / (self.t_star * self.num_dims)


@dataclass(frozen=True)
class AnomalyInterval:
    dimension: int
    t_start: int
    t_end: int     # inclusive
    t_peak: int
    peak_z: float


def _grid_stats(env: MotionEnvelope):
    """Posterior mean/var_f/var_pred on the envelope grid, (T*, D) each."""
    cols = [posterior(m, env.times) for m in env.models]
    means = np.stack([c[0] for c in cols], axis=1)
    var_f = np.stack([c[1] for c in cols], axis=1)
    var_pred = np.stack([c[2] for c in cols], axis=1)
    return means, var_f, var_pred


def _check_aligned(env: MotionEnvelope, aligned_test: np.ndarray) -> np.ndarray:
    aligned_test = np.asarray(aligned_test, dtype=float)
    if aligned_test.shape != (env.t_star, env.num_dims):
        raise DataError(f"aligned test shape {aligned_test.shape} does not match "
                        f"envelope grid ({env.t_star}, {env.num_dims})")
    return aligned_test


def _normal_pdf(x: np.ndarray, mean: np.ndarray, var: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * (x - mean) ** 2 / var) / np.sqrt(2.0 * np.pi * var)


def evaluate_points(env: MotionEnvelope, aligned_test: np.ndarray,
                    config: Optional[ScoringConfig] = None,
                    test_id: str = "") -> ScoreBreakdown:
    """Per-point densities, band distances and both summary scores."""
    cfg = config or ScoringConfig()
    aligned_test = _check_aligned(env, aligned_test)
    means, var_f, var_pred = _grid_stats(env)

    pd_var = var_pred if cfg.pd_variance == "predictive" else np.maximum(var_f, 1e-300)
    density = _normal_pdf(aligned_test, means, pd_var)

    band_var = var_pred if cfg.band_variance == "predictive" else var_f
    spread = np.sqrt(np.maximum(band_var, 1e-300))
    z = (aligned_test - means) / spread
    outside = np.abs(z) > CONFIDENCE_MULTIPLIER

    return ScoreBreakdown(
        sentence_id=env.sentence_id,
        test_id=test_id,
        t_star=env.t_star,
        num_dims=env.num_dims,
        pd_measure=float(density.mean()),
        ood_count=int(outside.sum()),
        test_values=aligned_test,
        means=means,
        var_f=var_f,
        var_pred=var_pred,
        density=density,
        z_distance=z,
        outside=outside,
    )


def score_pd(env: MotionEnvelope, aligned_test: np.ndarray,
             config: Optional[ScoringConfig] = None) -> float:
    """Grand mean over (t, d) of the Gaussian density of the test value."""
    return evaluate_points(env, aligned_test, config).pd_measure


def score_ood(env: MotionEnvelope, aligned_test: np.ndarray,
              config: Optional[ScoringConfig] = None) -> int:
    """Number of (t, d) points outside the 95% band."""
    return evaluate_points(env, aligned_test, config).ood_count


def assess(env: MotionEnvelope, test_mu: np.ndarray,
           config: Optional[ScoringConfig] = None,
           test_id: str = "") -> ScoreBreakdown:
    """Warp a raw test trajectory onto the envelope's reference timeline,
    then score it.  `test_mu` is the (T, D) latent mean sequence."""
    cfg = config or ScoringConfig()
    test_mu = np.atleast_2d(np.asarray(test_mu, dtype=float))
    if test_mu.shape[1] != env.num_dims:
        raise DataError(f"test has {test_mu.shape[1]} dims, envelope has "
                        f"{env.num_dims}")
    _, path = dtw(env.reference_trajectory, test_mu, radius=cfg.radius)
    aligned = apply_warp(path, test_mu)
    return evaluate_points(env, aligned, cfg, test_id=test_id)


def locate_anomalies(breakdown: ScoreBreakdown, min_run: int = 3):
    """Maximal runs of >= min_run consecutive outside points per dimension,
    each annotated with its largest-|z| timepoint."""
    found = []
    for d in range(breakdown.num_dims):
        mask = breakdown.outside[:, d]
        t = 0
        while t < breakdown.t_star:
            if not mask[t]:
                t += 1
                continue
            start = t
            while t < breakdown.t_star and mask[t]:
                t += 1
            end = t - 1
            if end - start + 1 >= min_run:
                z_run = breakdown.z_distance[start:t, d]
                peak = start + int(np.argmax(np.abs(z_run)))
                found.append(AnomalyInterval(
                    dimension=d, t_start=start, t_end=end,
                    t_peak=peak, peak_z=float(breakdown.z_distance[peak, d])))
    return found


def breakdown_to_dict(breakdown: ScoreBreakdown, anomalies) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "assessment",
        "sentence": breakdown.sentence_id,
        "test_id": breakdown.test_id,
        "t_star": breakdown.t_star,
        "dims": breakdown.num_dims,
        "pd_measure": breakdown.pd_measure,
        "ood_count": breakdown.ood_count,
        "outside_fraction": breakdown.outside_fraction,
        "anomalies": [
            {"dimension": a.dimension, "t_start": a.t_start, "t_end": a.t_end,
             "t_peak": a.t_peak, "peak_z": a.peak_z}
            for a in anomalies
        ],
    }


def save_scores(breakdown: ScoreBreakdown, anomalies, path) -> None:
    write_json_atomic(path, breakdown_to_dict(breakdown, anomalies))


def save_points_csv(breakdown: ScoreBreakdown, path) -> None:
    """Rows (t, d, test value, mean, var_f, var_pred, outside), t-major."""
    t_len, dims = breakdown.t_star, breakdown.num_dims
    t_idx, d_idx = np.meshgrid(np.arange(t_len), np.arange(dims), indexing="ij")
    table = np.column_stack([
        t_idx.ravel(), d_idx.ravel(),
        breakdown.test_values.ravel(), breakdown.means.ravel(),
        breakdown.var_f.ravel(), breakdown.var_pred.ravel(),
        breakdown.outside.ravel().astype(float),
    ])
    write_matrix_csv(path, table)
