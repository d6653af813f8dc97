"""Canonical skeleton sequences, corpus manifests, and their file formats.

A pose is a flat vector of 183 coordinates (61 nodes x xyz) in canonical
units, each within [-6, 6]. Pose files are headerless CSV, one frame per
row. The manifest JSON carries the sentence/signer catalogue, the
hand/body node partition, and the file map.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, IoError
from .ioutil import read_json, read_matrix_csv, write_json_atomic, write_matrix_csv

NUM_NODES = 61
POSE_DIM = 3 * NUM_NODES  # 183
COORD_RANGE = 6.0
_RANGE_TOL = 1e-6

ROLE_NATIVE = "native"
ROLE_LEARNER = "learner"


@dataclass(frozen=True)
class NodePartition:
    """Disjoint split of the 61 nodes into hand nodes and body nodes."""

    hands: tuple[int, ...]
    body: tuple[int, ...]

    def validate(self) -> None:
        hands, body = set(self.hands), set(self.body)
        if not hands or not body:
            raise DataError("partition: neither hands nor body may be empty")
        if hands & body:
            raise DataError("partition not disjoint: "
                            f"nodes {sorted(hands & body)} in both groups")
        if hands | body != set(range(NUM_NODES)):
            missing = set(range(NUM_NODES)) - (hands | body)
            extra = (hands | body) - set(range(NUM_NODES))
            raise DataError(
                f"partition must cover nodes 0..{NUM_NODES - 1}: "
                f"missing {sorted(missing)}, extraneous {sorted(extra)}")

    def coord_indices(self, nodes: tuple[int, ...]) -> np.ndarray:
        """Expand node indices into flat coordinate indices (3 per node)."""
        idx = np.asarray(sorted(nodes), dtype=int)
        return (idx[:, None] * 3 + np.arange(3)[None, :]).ravel()

    @functools.cached_property
    def hand_coords(self) -> np.ndarray:
        return self.coord_indices(self.hands)

    @functools.cached_property
    def body_coords(self) -> np.ndarray:
        return self.coord_indices(self.body)


def default_partition() -> NodePartition:
    """Body nodes 0..18, hand nodes 19..60 (2 x 21-keypoint hands)."""
    return NodePartition(hands=tuple(range(19, NUM_NODES)),
                         body=tuple(range(19)))


@dataclass
class PoseSequence:
    """One production: ordered frames of 183 canonical coordinates.

    The corpus contract asks for at least two frames per production;
    single-frame sequences are representable (and serializable) but are
    reported by validate_corpus.
    """

    sentence_id: str
    signer_id: str
    role: str
    frames: np.ndarray  # (T, 183)
    frame_rate: float = 25.0

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=float)
        if self.frames.ndim != 2 or self.frames.shape[1] != POSE_DIM:
            raise DataError(
                f"pose sequence must be (T, {POSE_DIM}), got {self.frames.shape}")
        if self.frames.shape[0] < 1:
            raise DataError("pose sequence must have at least one frame")
        if not np.isfinite(self.frames).all():
            raise DataError("pose sequence contains non-finite coordinates")
        bound = COORD_RANGE + _RANGE_TOL
        if np.abs(self.frames).max() > bound:
            worst = float(np.abs(self.frames).max())
            raise DataError(
                f"coordinate out of range: |{worst}| > {COORD_RANGE}")

    def __len__(self) -> int:
        return self.frames.shape[0]


def load_sequence(path: str | Path, *, sentence_id: str = "",
                  signer_id: str = "", role: str = ROLE_NATIVE,
                  frame_rate: float = 25.0) -> PoseSequence:
    """Load a pose CSV (no header, 183 columns per row)."""
    mat, _ = read_matrix_csv(path, expect_cols=POSE_DIM)
    return PoseSequence(sentence_id=sentence_id, signer_id=signer_id,
                        role=role, frames=mat, frame_rate=frame_rate)


def save_sequence(seq: PoseSequence, path: str | Path) -> None:
    """Write a pose CSV re-loadable with equality well under 1e-9."""
    write_matrix_csv(path, seq.frames)


@dataclass(frozen=True)
class ManifestEntry:
    sentence: str
    signer: str
    path: str


@dataclass
class CorpusManifest:
    sentences: list[str]
    signers: list[tuple[str, str]]  # (signer_id, role)
    entries: list[ManifestEntry]
    partition: NodePartition
    frame_rate: float = 25.0
    root: Path = field(default_factory=Path)

    def role_of(self, signer_id: str) -> str:
        for sid, role in self.signers:
            if sid == signer_id:
                return role
        raise DataError(f"unknown signer id {signer_id!r}")

    def entry_path(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else self.root / p

    def native_ids(self) -> list[str]:
        return [sid for sid, role in self.signers if role == ROLE_NATIVE]

    def learner_ids(self) -> list[str]:
        return [sid for sid, role in self.signers if role == ROLE_LEARNER]


def manifest_to_dict(manifest: CorpusManifest) -> dict:
    return {
        "sentences": list(manifest.sentences),
        "signers": [{"id": sid, "role": role} for sid, role in manifest.signers],
        "partition": {"hands": sorted(manifest.partition.hands),
                      "body": sorted(manifest.partition.body)},
        "entries": [{"sentence": e.sentence, "signer": e.signer, "path": e.path}
                    for e in manifest.entries],
        "frame_rate": manifest.frame_rate,
    }


def save_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    write_json_atomic(path, manifest_to_dict(manifest))


def load_manifest(path: str | Path) -> CorpusManifest:
    path = Path(path)
    raw = read_json(path)
    try:
        partition = NodePartition(hands=tuple(raw["partition"]["hands"]),
                                  body=tuple(raw["partition"]["body"]))
        manifest = CorpusManifest(
            sentences=[str(s) for s in raw["sentences"]],
            signers=[(str(s["id"]), str(s["role"])) for s in raw["signers"]],
            entries=[ManifestEntry(str(e["sentence"]), str(e["signer"]),
                                   str(e["path"])) for e in raw["entries"]],
            partition=partition,
            frame_rate=float(raw.get("frame_rate", 25.0)),
            root=path.parent,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: manifest missing/invalid field: {exc}") from exc
    return manifest


def validate_corpus(manifest: CorpusManifest) -> list[str]:
    """Return a list of human-readable invariant violations (empty = valid)."""
    violations: list[str] = []
    try:
        manifest.partition.validate()
    except DataError as exc:
        violations.append(str(exc))

    roles = {role for _, role in manifest.signers}
    for role in roles - {ROLE_NATIVE, ROLE_LEARNER}:
        violations.append(f"unknown signer role {role!r}")
    seen_signers = set()
    for sid, _ in manifest.signers:
        if sid in seen_signers:
            violations.append(f"duplicate signer id {sid!r}")
        seen_signers.add(sid)

    seen_pairs = set()
    known_sentences = set(manifest.sentences)
    for entry in manifest.entries:
        key = (entry.sentence, entry.signer)
        if key in seen_pairs:
            violations.append(f"duplicate entry for {key}")
            continue
        seen_pairs.add(key)
        if entry.sentence not in known_sentences:
            violations.append(f"entry {key}: unknown sentence id")
        if entry.signer not in seen_signers:
            violations.append(f"entry {key}: unknown signer id")
        fpath = manifest.entry_path(entry)
        if not fpath.is_file():
            violations.append(f"entry {key}: missing file {fpath}")
            continue
        try:
            seq = load_sequence(fpath, sentence_id=entry.sentence,
                                signer_id=entry.signer)
        except (DataError, IoError) as exc:
            violations.append(f"entry {key}: {exc}")
            continue
        if len(seq) < 2:
            violations.append(f"entry {key}: sequence shorter than 2 frames")
    return violations
