import numpy as np
import pytest

from signassess.errors import DataError
from signassess.skeleton import (
    COORD_RANGE,
    NUM_NODES,
    POSE_DIM,
    NodePartition,
    PoseSequence,
    default_partition,
    load_manifest,
    load_sequence,
    save_sequence,
    validate_corpus,
)


def test_constants():
    assert NUM_NODES == 61
    assert POSE_DIM == 183
    assert COORD_RANGE == 6.0


def test_default_partition_covers_all_nodes(partition):
    partition.validate()
    assert set(partition.hands) | set(partition.body) == set(range(61))
    assert not set(partition.hands) & set(partition.body)


def test_partition_rejects_overlap():
    p = NodePartition(hands=tuple(range(0, 31)), body=tuple(range(30, 61)))
    with pytest.raises(DataError, match="disjoint"):
        p.validate()


def test_partition_rejects_gap():
    p = NodePartition(hands=tuple(range(0, 30)), body=tuple(range(31, 61)))
    with pytest.raises(DataError, match="cover"):
        p.validate()


def test_coord_indices_triplets(partition):
    idx = partition.coord_indices((0, 2))
    assert idx.tolist() == [0, 1, 2, 6, 7, 8]


def test_hand_body_coords_partition_183(partition):
    joined = np.concatenate([partition.hand_coords, partition.body_coords])
    assert sorted(joined.tolist()) == list(range(183))


def test_pose_sequence_validates_shape():
    with pytest.raises(DataError, match="183"):
        PoseSequence("s", "k", "native", np.zeros((4, 10)))


def test_pose_sequence_validates_range():
    frames = np.zeros((3, POSE_DIM))
    frames[1, 5] = 6.5
    with pytest.raises(DataError, match="out of range"):
        PoseSequence("s", "k", "native", frames)


def test_pose_sequence_rejects_nan():
    frames = np.zeros((3, POSE_DIM))
    frames[0, 0] = np.nan
    with pytest.raises(DataError, match="non-finite"):
        PoseSequence("s", "k", "native", frames)


def test_sequence_io_roundtrip(tmp_path, rng):
    frames = rng.uniform(-COORD_RANGE, COORD_RANGE, size=(7, POSE_DIM))
    seq = PoseSequence("s00", "n01", "native", frames)
    p = tmp_path / "seq.csv"
    save_sequence(seq, p)
    back = load_sequence(p, sentence_id="s00", signer_id="n01")
    assert np.allclose(back.frames, frames, atol=1e-9)
    assert len(back) == 7


def test_generated_corpus_validates_clean(tiny_corpus):
    root, manifest = tiny_corpus
    assert validate_corpus(manifest) == []
    # the same result from a re-loaded manifest
    reloaded = load_manifest(root / "manifest.json")
    assert validate_corpus(reloaded) == []
    assert reloaded.native_ids() == ["n00", "n01", "n02", "n03"]
    assert reloaded.learner_ids() == ["l00", "l01", "l02", "l03"]


def test_manifest_role_lookup(tiny_corpus):
    _, manifest = tiny_corpus
    assert manifest.role_of("n00") == "native"
    assert manifest.role_of("l00") == "learner"
    with pytest.raises(DataError):
        manifest.role_of("nope")


def test_validate_corpus_flags_missing_file(tiny_corpus, tmp_path):
    root, _ = tiny_corpus
    manifest = load_manifest(root / "manifest.json")
    manifest.entries[0] = type(manifest.entries[0])(
        manifest.entries[0].sentence, manifest.entries[0].signer,
        "poses/not_there.csv")
    problems = validate_corpus(manifest)
    assert problems and "not_there" in " ".join(problems)
