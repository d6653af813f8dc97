import numpy as np
import pytest

from signassess.errors import DataError
from signassess.evaluation import (
    RatingRecord,
    aggregate_ratings,
    evaluate_run,
    proxy_rating,
    spearman,
    standardized_beta,
    zscore,
)


def test_zscore_example():
    assert np.allclose(zscore([1.0, 2.0, 3.0]), [-1.0, 0.0, 1.0])


def test_zscore_idempotent(rng):
    x = rng.normal(3.0, 2.5, size=40)
    once = zscore(x)
    twice = zscore(once)
    assert np.abs(twice - once).max() < 1e-12


def test_zscore_groups():
    vals = [1.0, 2.0, 3.0, 10.0, 20.0, 30.0]
    groups = ["a", "a", "a", "b", "b", "b"]
    out = zscore(vals, groups)
    assert np.allclose(out[:3], [-1, 0, 1])
    assert np.allclose(out[3:], [-1, 0, 1])


def test_zscore_errors():
    with pytest.raises(DataError):
        zscore([1.0], None)
    with pytest.raises(DataError, match="zero variance"):
        zscore([2.0, 2.0, 2.0])
    with pytest.raises(DataError):
        zscore([1.0, 2.0], ["a"])


def test_standardized_beta_equals_pearson(rng):
    for _ in range(20):
        x = rng.normal(size=12)
        y = 0.3 * x + rng.normal(size=12)
        beta = standardized_beta(x, y)
        pearson = float(np.corrcoef(x, y)[0, 1])
        assert abs(beta - pearson) < 1e-10


def test_standardized_beta_affine_invariance(rng):
    x = rng.normal(size=15)
    y = rng.normal(size=15)
    a = standardized_beta(x, y)
    b = standardized_beta(5 * x - 3, 0.1 * y + 7)
    assert abs(a - b) < 1e-12


def test_spearman_monotone():
    x = np.array([1.0, 2.0, 5.0, 9.0])
    assert spearman(x, x ** 3) == 1.0
    assert spearman(x, -np.sqrt(x)) == -1.0


def test_spearman_handles_ties():
    # deltas tied in pairs against distinct, perfectly anti-ordered scores
    deltas = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0]
    scores = [6.0, 5.0, 4.0, 3.0, 2.0, 1.0]
    rho = spearman(scores, deltas)
    # ties cap |rho| below 1 even for perfect cross-group ordering
    assert -1.0 < rho < -0.9
    assert np.isclose(spearman(scores, [-d for d in deltas]), -rho)


def test_spearman_shuffled_is_weak(rng):
    x = np.arange(50.0)
    y = x.copy()
    rng.shuffle(y)
    assert abs(spearman(x, y)) < 0.5


def test_correlation_input_validation():
    with pytest.raises(DataError):
        standardized_beta([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(DataError):
        spearman([1.0, 2.0, 3.0], [1.0, 2.0])
    with pytest.raises(DataError, match="all-equal"):
        spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


def test_rating_record_scale():
    RatingRecord("r0", "l00", "s00", (1, 2, 3))
    with pytest.raises(DataError):
        RatingRecord("r0", "l00", "s00", (0, 2))
    with pytest.raises(DataError):
        RatingRecord("r0", "l00", "s00", ())


def test_aggregate_two_stage_mean():
    records = [
        RatingRecord("r0", "l00", "s00", (1, 3)),   # rater mean 2.0
        RatingRecord("r1", "l00", "s00", (3, 3)),   # rater mean 3.0
        RatingRecord("r0", "l01", "s00", (2,)),
    ]
    agg = aggregate_ratings(records)
    assert agg[("s00", "l00")] == 2.5
    assert agg[("s00", "l01")] == 2.0
    with pytest.raises(DataError):
        aggregate_ratings([])


def test_proxy_rating_clamps():
    assert proxy_rating(0.0) == 3.0
    assert proxy_rating(0.5) == 2.5
    assert proxy_rating(2.0) == 1.0
    assert proxy_rating(5.0) == 1.0
    assert proxy_rating(-1.0) == 3.0


def test_evaluate_run_per_sentence():
    # sentence with clean ordering: pd high for good, ood low for good
    scores = {}
    ratings = {}
    for i, (delta, pd, ood) in enumerate([
            (0.0, 0.9, 0), (0.5, 0.7, 3), (1.0, 0.5, 6), (2.0, 0.2, 11)]):
        key = ("s00", f"l{i:02d}")
        scores[key] = (pd, ood)
        ratings[key] = proxy_rating(delta)
    report = evaluate_run(scores, ratings)
    s = report["sentences"]["s00"]
    assert s["n"] == 4
    assert s["pd"]["srcc"] == 1.0
    assert s["ood"]["srcc"] == -1.0
    assert s["pd"]["beta"] > 0.9
    assert report["mean"]["pd"]["srcc"] == 1.0


def test_evaluate_run_degenerate_scores_null():
    scores = {("s00", f"l{i}"): (0.5, 2) for i in range(4)}  # no spread
    ratings = {("s00", f"l{i}"): float(i) for i in range(4)}
    report = evaluate_run(scores, ratings)
    assert report["sentences"]["s00"]["pd"]["srcc"] is None
    assert report["mean"]["pd"]["srcc"] is None


def test_evaluate_run_errors():
    with pytest.raises(DataError, match="overlapping"):
        evaluate_run({("s", "a"): (1.0, 0)}, {("x", "b"): 2.0})
    scores = {("s00", "l00"): (1.0, 0), ("s00", "l01"): (0.5, 1)}
    ratings = {k: 2.0 for k in scores}
    with pytest.raises(DataError, match="need >="):
        evaluate_run(scores, ratings)
