"""Pick each sentence's reference production by average cosine similarity.

Variable-length latent trajectories are resampled to the median native
length, flattened time-major, and compared pairwise; the signer with the
highest mean similarity to all others (diagonal excluded) becomes the
sentence's reference signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


def resample_latents(values: np.ndarray, target_len: int) -> np.ndarray:
    """Per-dimension linear interpolation over normalized time.

    Endpoints are preserved exactly; target_len equal to the source length
    returns the values unchanged.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise DataError("resample_latents expects a (T, D) matrix")
    if target_len < 2:
        raise DataError("target_len must be >= 2")
    t_src = values.shape[0]
    if t_src == target_len:
        return values.copy()
    if t_src == 1:
        return np.repeat(values, target_len, axis=0)
    src = np.linspace(0.0, 1.0, t_src)
    dst = np.linspace(0.0, 1.0, target_len)
    out = np.empty((target_len, values.shape[1]))
    for d in range(values.shape[1]):
        out[:, d] = np.interp(dst, src, values[:, d])
    return out


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DataError("cosine_similarity: length mismatch")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise DataError("cosine_similarity: zero-norm input")
    return float(np.clip(a @ b / (norm_a * norm_b), -1.0, 1.0))


@dataclass
class ReferenceChoice:
    sentence_id: str
    reference_signer: str
    scores: dict[str, float]          # signer -> mean similarity to others
    similarity: np.ndarray            # K x K matrix, signer order below
    signer_order: list[str]


def similarity_matrix(flat: np.ndarray) -> np.ndarray:
    """Pairwise cosine matrix of row vectors."""
    k = flat.shape[0]
    sim = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            sim[i, j] = sim[j, i] = cosine_similarity(flat[i], flat[j])
    return sim


def select_reference(sentence_id: str,
                     latents: list[tuple[str, np.ndarray]]) -> ReferenceChoice:
    """Choose the most central signer among (signer_id, mu-matrix) pairs.

    Resamples to the median native length, flattens time-major, builds the
    cosine matrix, and averages each row excluding the diagonal. Ties break
    toward the lowest signer index.
    """
    if len(latents) < 2:
        raise DataError("select_reference needs at least 2 signers")
    lengths = [mat.shape[0] for _, mat in latents]
    target = max(2, int(round(float(np.median(lengths)))))
    flat = np.stack([resample_latents(mat, target).ravel()
                     for _, mat in latents])
    sim = similarity_matrix(flat)
    k = sim.shape[0]
    avg = (sim.sum(axis=1) - sim.diagonal()) / (k - 1)
    best = int(np.argmax(avg))
    order = [sid for sid, _ in latents]
    return ReferenceChoice(
        sentence_id=sentence_id,
        reference_signer=order[best],
        scores={sid: float(a) for sid, a in zip(order, avg)},
        similarity=sim,
        signer_order=order,
    )
