"""Rating aggregation and score-vs-rating statistics.

Aggregates component ratings (two-stage mean), standardizes values
within groups, and relates system scores to ratings with standardized
beta coefficients and Spearman rank correlations, per sentence.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DataError

MIN_PAIRS = 3


@dataclass(frozen=True)
class RatingRecord:
    rater_id: str
    signer_id: str
    sentence_id: str
    components: tuple

    def __post_init__(self):
        if len(self.components) == 0:
            raise DataError("rating record needs at least one component score")
        for c in self.components:
            if c not in (1, 2, 3):
                raise DataError(f"component rating {c!r} outside the 1..3 scale")


def aggregate_ratings(records: Sequence[RatingRecord]) -> dict:
    """(sentence, signer) -> mean over raters of each rater's component mean."""
    per_rater = {}
    for rec in records:
        key = (rec.sentence_id, rec.signer_id)
        per_rater.setdefault(key, []).append(
            float(np.mean(rec.components)))
    if not per_rater:
        raise DataError("no rating records")
    return {key: float(np.mean(vals)) for key, vals in sorted(per_rater.items())}


def zscore(values: Sequence[float], groups: Optional[Sequence] = None) -> np.ndarray:
    """Standardize within each group using the sample std (divisor n-1)."""
    values = np.asarray(values, dtype=float)
    if groups is None:
        groups = np.zeros(values.size)
    groups = np.asarray(groups)
    if groups.shape != values.shape:
        raise DataError("zscore: one group label per value required")
    out = np.empty_like(values)
    for g in np.unique(groups):
        mask = groups == g
        chunk = values[mask]
        if chunk.size < 2:
            raise DataError(f"zscore: group {g!r} has fewer than 2 values")
        std = chunk.std(ddof=1)
        if std == 0.0:
            raise DataError(f"zscore: group {g!r} has zero variance")
        out[mask] = (chunk - chunk.mean()) / std
    return out


def standardized_beta(system: Sequence[float], manual: Sequence[float]) -> float:
    """Least-squares slope of manual on system, both standardized first;
    equals the Pearson correlation."""
    system = np.asarray(system, dtype=float)
    manual = np.asarray(manual, dtype=float)
    if system.size != manual.size or system.size < MIN_PAIRS:
        raise DataError(f"standardized beta needs >= {MIN_PAIRS} paired values")
    zs = zscore(system)
    zm = zscore(manual)
    # slope of zm ~ zs: cov / var, and var(zs) = 1 by construction
    return float(np.sum(zs * zm) / np.sum(zs * zs))


def spearman(system: Sequence[float], manual: Sequence[float]) -> float:
    """Pearson correlation of average ranks (ties get mean rank)."""
    system = np.asarray(system, dtype=float)
    manual = np.asarray(manual, dtype=float)
    if system.size != manual.size or system.size < MIN_PAIRS:
        raise DataError(f"spearman needs >= {MIN_PAIRS} paired values")
    rs = rankdata(system)
    rm = rankdata(manual)
    if np.all(rs == rs[0]) or np.all(rm == rm[0]):
        raise DataError("spearman: a variable has all-equal values")
    return float(np.corrcoef(rs, rm)[0, 1])


def proxy_rating(delta: float) -> float:
    """Stand-in rating for synthetic corpora: 3 - delta, clamped to [1, 3].
    A proxy only; never a substitute for human ratings on real data."""
    return float(min(3.0, max(1.0, 3.0 - delta)))


def evaluate_run(scores: dict, ratings: dict) -> dict:
    """Per-sentence beta and Spearman for both score types.

    ``scores`` maps (sentence, signer) -> (pd_measure, ood_count);
    ``ratings`` maps (sentence, signer) -> rating (higher = better).
    OOD counts are expected to correlate negatively.
    """
    keys = sorted(set(scores) & set(ratings))
    if not keys:
        raise DataError("no overlapping (sentence, signer) keys to evaluate")
    by_sentence = {}
    for sentence, signer in keys:
        by_sentence.setdefault(sentence, []).append(signer)

    table = {}
    for sentence, signers in sorted(by_sentence.items()):
        if len(signers) < MIN_PAIRS:
            raise DataError(f"sentence {sentence}: only {len(signers)} rated "
                            f"productions, need >= {MIN_PAIRS}")
        pd_vals = [scores[(sentence, s)][0] for s in signers]
        ood_vals = [float(scores[(sentence, s)][1]) for s in signers]
        rating_vals = [ratings[(sentence, s)] for s in signers]

        def stats(vals):
            # degenerate spread (e.g. identical counts) -> null, not abort
            try:
                return {"beta": standardized_beta(vals, rating_vals),
                        "srcc": spearman(vals, rating_vals)}
            except DataError:
                return {"beta": None, "srcc": None}

        table[sentence] = {"n": len(signers),
                           "pd": stats(pd_vals), "ood": stats(ood_vals)}

    def mean_over(kind: str, stat: str):
        vals = [table[s][kind][stat] for s in table]
        if any(v is None for v in vals):
            return None
        return float(np.mean(vals))

    return {
        "sentences": table,
        "mean": {
            "pd": {"beta": mean_over("pd", "beta"), "srcc": mean_over("pd", "srcc")},
            "ood": {"beta": mean_over("ood", "beta"),
                    "srcc": mean_over("ood", "srcc")},
        },
    }
