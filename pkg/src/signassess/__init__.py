"""Sign language assessment via motion-distribution modelling.

The pipeline embeds skeleton pose sequences with a small VAE, time-aligns
them to a per-sentence reference with radius-bounded DTW, fits per-dimension
Gaussian-process motion envelopes over the aligned native productions, and
scores test productions by posterior density (PD measure) and confidence-band
exits (OOD count).
"""

__version__ = "0.1.0"

from .errors import (
    AssessError,
    ConfigError,
    DataError,
    IoError,
    NumericError,
)
from .skeleton import (
    NodePartition,
    PoseSequence,
    CorpusManifest,
    default_partition,
    load_manifest,
    load_sequence,
)
from .vae import VaeConfig, VaeModel, LatentSequence, train_vae, encode_sequence
from .reference import select_reference
from .alignment import dtw, apply_warp
from .envelope import (
    GpConfig,
    GpHyperparams,
    GpModel,
    MotionEnvelope,
    confidence_region,
    fit_envelope,
    fit_gp,
    negative_mll,
    posterior,
    rbf_kernel,
)
from .scoring import (
    AnomalyInterval,
    ScoreBreakdown,
    ScoringConfig,
    assess,
    locate_anomalies,
    score_ood,
    score_pd,
)
from .evaluation import (
    RatingRecord,
    aggregate_ratings,
    evaluate_run,
    spearman,
    standardized_beta,
    zscore,
)
from .synth import DeviationSpec, gen_corpus

__all__ = [
    "AnomalyInterval",
    "AssessError",
    "ConfigError",
    "CorpusManifest",
    "DataError",
    "DeviationSpec",
    "GpConfig",
    "GpHyperparams",
    "GpModel",
    "IoError",
    "LatentSequence",
    "MotionEnvelope",
    "NodePartition",
    "NumericError",
    "PoseSequence",
    "RatingRecord",
    "ScoreBreakdown",
    "ScoringConfig",
    "VaeConfig",
    "VaeModel",
    "aggregate_ratings",
    "apply_warp",
    "assess",
    "confidence_region",
    "default_partition",
    "dtw",
    "encode_sequence",
    "evaluate_run",
    "fit_envelope",
    "fit_gp",
    "gen_corpus",
    "load_manifest",
    "load_sequence",
    "locate_anomalies",
    "negative_mll",
    "posterior",
    "rbf_kernel",
    "score_ood",
    "score_pd",
    "select_reference",
    "spearman",
    "standardized_beta",
    "train_vae",
    "zscore",
    "__version__",
]
