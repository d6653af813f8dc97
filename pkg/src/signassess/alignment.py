"""Radius-bounded multiscale DTW and warp application.

The multiscale scheme follows the classic coarse-to-fine recursion:
halve both sequences, align the halves, project the low-resolution path
back up, dilate it by the radius, and run the banded DP inside that
window. Sequences short enough that the band covers everything go
straight to the full DP. Frame distance is Euclidean over the latent
dimensions and the alignment cost is the sum of distances along the path.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError

DEFAULT_RADIUS = 20

# A warp path is a list of (t_ref, t_test) pairs from (0,0) to
# (T_ref-1, T_test-1) with step increments in {(1,0), (0,1), (1,1)}.
_STEPS = ((1, 0), (0, 1), (1, 1))


def validate_path(path: list[tuple[int, int]], len_ref: int, len_test: int) -> None:
    if not path:
        raise DataError("empty warp path")
    if path[0] != (0, 0):
        raise DataError(f"warp path must start at (0,0), got {path[0]}")
    if path[-1] != (len_ref - 1, len_test - 1):
        raise DataError(
            f"warp path must end at ({len_ref - 1},{len_test - 1}), "
            f"got {path[-1]}")
    for (i0, j0), (i1, j1) in zip(path, path[1:]):
        if (i1 - i0, j1 - j0) not in _STEPS:
            raise DataError(
                f"invalid warp step ({i1 - i0},{j1 - j0}) at ({i0},{j0})")


def _frame_distances(ref: np.ndarray, test: np.ndarray) -> np.ndarray:
    diff = ref[:, None, :] - test[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def _dp_windowed(ref: np.ndarray, test: np.ndarray,
                 window: dict[int, tuple[int, int]] | None):
    """Dynamic program over an optional per-row column window."""
    n, m = ref.shape[0], test.shape[0]
    dist = _frame_distances(ref, test)
    inf = np.inf
    cost = np.full((n, m), inf)
    if window is None:
        window = {i: (0, m - 1) for i in range(n)}
    lo0, hi0 = window[0]
    if lo0 != 0:
        raise DataError("window must include column 0 in row 0")
    cost[0, 0] = dist[0, 0]
    for j in range(1, hi0 + 1):
        cost[0, j] = cost[0, j - 1] + dist[0, j]
    for i in range(1, n):
        lo, hi = window[i]
        row = cost[i - 1]
        this = cost[i]
        for j in range(lo, hi + 1):
            # unwritten cells hold inf, so the window needs no re-checking
            best = row[j]                              # step (1,0)
            if j >= 1:
                diag = row[j - 1]                      # step (1,1)
                if diag < best:
                    best = diag
                horiz = this[j - 1]                    # step (0,1)
                if horiz < best:
                    best = horiz
            if best < inf:
                this[j] = best + dist[i, j]
    if not np.isfinite(cost[n - 1, m - 1]):
        raise DataError("warp window excludes the endpoint")
    # Backtrack.
    path = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while (i, j) != (0, 0):
        best = None
        for di, dj in _STEPS:
            pi, pj = i - di, j - dj
            if pi < 0 or pj < 0:
                continue
            c = cost[pi, pj]
            if np.isfinite(c) and (best is None or c < best[0]):
                best = (c, pi, pj)
        i, j = best[1], best[2]
        path.append((i, j))
    path.reverse()
    return float(cost[n - 1, m - 1]), path


def dtw_full(ref: np.ndarray, test: np.ndarray):
    """Unconstrained O(T^2) DTW; also the brute-force oracle in tests."""
    return _dp_windowed(ref, test, None)


def _reduce_by_half(x: np.ndarray) -> np.ndarray:
    even = x.shape[0] - x.shape[0] % 2
    return (x[0:even:2] + x[1:even:2]) / 2.0


def _expand_window(path, len_ref: int, len_test: int, radius: int):
    """Project a half-resolution path up and dilate it by the radius."""
    marked = set()
    for i, j in path:
        for a in range(-radius, radius + 1):
            for b in range(-radius, radius + 1):
                marked.add((i + a, j + b))
    window = {}
    for i, j in sorted(marked):
        for di in (0, 1):
            for dj in (0, 1):
                cell = (i * 2 + di, j * 2 + dj)
                if 0 <= cell[0] < len_ref and 0 <= cell[1] < len_test:
                    lo, hi = window.get(cell[0], (cell[1], cell[1]))
                    window[cell[0]] = (min(lo, cell[1]), max(hi, cell[1]))
    # Guarantee full coverage and per-row monotone, gap-free ranges.
    window.setdefault(0, (0, 0))
    window[0] = (0, window[0][1])
    last = len_ref - 1
    window.setdefault(last, (len_test - 1, len_test - 1))
    lo, hi = window[last]
    window[last] = (lo, len_test - 1)
    prev_lo, prev_hi = window[0]
    for i in range(1, len_ref):
        lo, hi = window.get(i, (prev_hi, prev_hi))
        lo = max(lo, prev_lo)              # lower edge never steps back
        lo = min(lo, prev_hi + 1, len_test - 1)  # keep the row reachable
        hi = max(hi, min(prev_hi + 1, len_test - 1), lo)
        window[i] = (lo, hi)
        prev_lo, prev_hi = lo, hi
    return window


def dtw(ref: np.ndarray, test: np.ndarray, radius: int = DEFAULT_RADIUS):
    """Multiscale DTW; returns (cost, path)."""
    ref = np.atleast_2d(np.asarray(ref, dtype=float))
    test = np.atleast_2d(np.asarray(test, dtype=float))
    if ref.shape[0] == 0 or test.shape[0] == 0:
        raise DataError("dtw: empty input sequence")
    if ref.shape[1] != test.shape[1]:
        raise DataError("dtw: latent width mismatch")
    if radius < 1:
        raise DataError("dtw: radius must be >= 1")
    min_size = radius + 2
    if min(ref.shape[0], test.shape[0]) <= max(min_size, 2 * radius):
        return dtw_full(ref, test)
    _, coarse_path = dtw(_reduce_by_half(ref), _reduce_by_half(test), radius)
    window = _expand_window(coarse_path, ref.shape[0], test.shape[0], radius)
    return _dp_windowed(ref, test, window)


def apply_warp(path: list[tuple[int, int]], test: np.ndarray) -> np.ndarray:
    """Collapse a warp path onto the reference timeline.

    For each reference index, the output frame is the mean of all test
    frames the path maps to it; output length equals the reference length.
    """
    test = np.atleast_2d(np.asarray(test, dtype=float))
    len_ref = path[-1][0] + 1
    validate_path(path, len_ref, test.shape[0])
    out = np.zeros((len_ref, test.shape[1]))
    counts = np.zeros(len_ref)
    for i, j in path:
        out[i] += test[j]
        counts[i] += 1
    return out / counts[:, None]


def align_corpus(latents: dict, references: dict,
                 radius: int = DEFAULT_RADIUS) -> dict:
    """Align every latent sequence to its sentence reference.

    ``latents`` maps (sentence, signer) -> mu matrix; ``references`` maps
    sentence -> reference signer id. Returns (sentence, signer) -> aligned
    mu matrix of the reference length.
    """
    aligned = {}
    for (sentence, signer), mat in sorted(latents.items()):
        ref_signer = references[sentence]
        ref = latents[(sentence, ref_signer)]
        _, path = dtw(ref, mat, radius)
        aligned[(sentence, signer)] = apply_warp(path, mat)
    return aligned
