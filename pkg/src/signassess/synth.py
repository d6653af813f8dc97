"""Synthetic multi-signer corpus with controllable learner deviations.

The generator builds G smooth latent channels per sentence (low-frequency
high-amplitude body channels, high-frequency low-amplitude hand channels,
mirroring the asymmetry of real signing), renders them to 183-coordinate
poses through a fixed random linear map, and perturbs learner productions
inside a time window with a controllable magnitude ``delta``. Ground-truth
deltas go to a sidecar JSON so the scoring pipeline cannot see them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .ioutil import write_json_atomic
from .rng import substream
from .skeleton import (
    COORD_RANGE,
    CorpusManifest,
    ManifestEntry,
    NodePartition,
    PoseSequence,
    ROLE_LEARNER,
    ROLE_NATIVE,
    default_partition,
    save_manifest,
    save_sequence,
)

MODE_AMPLITUDE = "AmplitudeError"
MODE_WRONG_CHANNEL = "WrongChannel"
MODE_FREEZE = "Freeze"
MODES = (MODE_AMPLITUDE, MODE_WRONG_CHANNEL, MODE_FREEZE)

# Body channels move slowly with large amplitude; hand channels at least
# three times faster with at most half the amplitude, and above 1/8
# cycles/frame so the spectral split is testable.
BODY_FREQ = (0.01, 0.045)
HAND_FREQ = (0.135, 0.2)
BODY_AMP = (0.7, 1.0)
HAND_AMP = (0.2, 0.35)
MAX_SINUSOIDS = 5

# Style variation: narrow gains and a moderate white-noise floor keep the
# native residual close to homoscedastic, which the envelope's stationary
# noise model can calibrate; warp slopes stay well inside the [0.8, 1.25]
# contract so the composed normalized-map slopes also respect it.
GAIN_RANGE = (0.98, 1.02)
SLOPE_RANGE = (0.97, 1.0 / 0.97)
SIGMA_GEN = 0.015
WARP_SEGMENTS = 4

# Deviation shaping: amplitude and wrong-channel errors ramp up and down
# inside the window (cosine ramps over the outer quarters) so magnitude
# grows smoothly with delta instead of step-saturating. A freeze holds the
# window's first frame for the whole window — by definition it does not
# scale with delta, so any delta > 0 freezes outright.
DEV_RAMP = 0.25
AMP_SCALE = 0.65
WRONG_SCALE = 1.2

DEFAULT_DELTAS = (0.0, 0.0, 0.5, 0.5, 1.0, 1.0, 2.0, 2.0)
# Freeze is all-or-nothing (it holds a frame; there is no dose): a frozen
# window measures as a moderate error regardless of its label, so it takes
# the middle-delta slots, and the dose-scalable modes take the extremes
# where their severity actually tracks the label. WrongChannel appears
# only at full blend (delta 2); partial blends between similar channels
# can be a near no-op, which would break the intended severity ordering.
DEFAULT_MODES = (MODE_AMPLITUDE, MODE_WRONG_CHANNEL,
                 MODE_AMPLITUDE, MODE_AMPLITUDE,
                 MODE_FREEZE, MODE_FREEZE,
                 MODE_AMPLITUDE, MODE_WRONG_CHANNEL)
DEFAULT_WINDOW = (0.4, 0.6)


@dataclass(frozen=True)
class SentencePrototype:
    sentence_id: str
    trajectories: np.ndarray  # (T_proto, G), bounded in [-1, 1]
    n_body: int

    @property
    def duration(self) -> int:
        return self.trajectories.shape[0]

    @property
    def channels(self) -> int:
        return self.trajectories.shape[1]


@dataclass(frozen=True)
class SignerStyle:
    """Per-production variation: a time warp, per-channel gains, noise."""

    warp_fractions: np.ndarray   # prototype-time share of each segment
    warp_slopes: np.ndarray      # frames-of-prototype per frame-of-output
    gains: np.ndarray            # (G,)
    sigma: float

    def __post_init__(self):
        slopes = np.asarray(self.warp_slopes, dtype=float)
        if slopes.min() <= 0:
            raise DataError("warp slopes must be positive")
        norm = normalized_warp_slopes(self.warp_fractions, slopes)
        if norm.min() < 0.8 - 1e-9 or norm.max() > 1.25 + 1e-9:
            raise DataError(
                f"normalized warp slopes {norm} outside [0.8, 1.25]")


def normalized_warp_slopes(fractions, slopes) -> np.ndarray:
    """Slopes of the induced [0,1]->[0,1] piecewise-linear map."""
    fractions = np.asarray(fractions, dtype=float)
    slopes = np.asarray(slopes, dtype=float)
    out_frac = fractions / slopes
    return slopes * out_frac.sum()


@dataclass(frozen=True)
class DeviationSpec:
    delta: float
    window: tuple[float, float] = DEFAULT_WINDOW
    mode: str = MODE_AMPLITUDE

    def __post_init__(self):
        if self.delta < 0:
            raise DataError("delta must be >= 0")
        s, e = self.window
        if not (0 <= s < e <= 1):
            raise DataError(f"window {self.window} must satisfy 0<=s<e<=1")
        if self.mode not in MODES:
            raise DataError(f"unknown deviation mode {self.mode!r}")


def identity_style(channels: int) -> SignerStyle:
    return SignerStyle(warp_fractions=np.array([1.0]),
                       warp_slopes=np.array([1.0]),
                       gains=np.ones(channels), sigma=0.0)


def sample_style(rng: np.random.Generator, channels: int, *,
                 segments: int = WARP_SEGMENTS,
                 slope_range: tuple[float, float] = SLOPE_RANGE,
                 gain_range: tuple[float, float] = GAIN_RANGE,
                 sigma: float = SIGMA_GEN) -> SignerStyle:
    return SignerStyle(
        warp_fractions=np.full(segments, 1.0 / segments),
        warp_slopes=rng.uniform(*slope_range, size=segments),
        gains=rng.uniform(*gain_range, size=channels),
        sigma=float(sigma),
    )


def gen_prototype(seed: int, sentence_id: str, t_proto: int = 120,
                  channels: int = 6) -> SentencePrototype:
    """Deterministic per-sentence base trajectories, bounded in [-1, 1]."""
    if t_proto < 20:
        raise DataError("t_proto must be >= 20")
    if channels < 4:
        raise DataError("need at least 4 channels (2 body + 2 hand)")
    rng = substream(seed, "proto", sentence_id)
    n_body = channels // 2
    t = np.arange(t_proto, dtype=float)
    cols = []
    for c in range(channels):
        body = c < n_body
        freq_range = BODY_FREQ if body else HAND_FREQ
        amp_range = BODY_AMP if body else HAND_AMP
        # One frequency per equal sub-band: the spread keeps the channel's
        # autocorrelation decaying within a dozen frames, so a time-shifted
        # copy of the waveform is a genuinely different signal (alignment
        # cannot silently re-phase its way around temporal anomalies).
        n_sin = MAX_SINUSOIDS
        edges = np.linspace(freq_range[0], freq_range[1], n_sin + 1)
        freqs = rng.uniform(edges[:-1], edges[1:])
        phases = rng.uniform(0, 2 * np.pi, size=n_sin)
        weights = rng.uniform(0.5, 1.0, size=n_sin)
        raw = (weights[None, :]
               * np.sin(2 * np.pi * freqs[None, :] * t[:, None]
                        + phases[None, :])).sum(axis=1)
        peak = float(rng.uniform(*amp_range))
        cols.append(raw * (peak / np.abs(raw).max()))
    return SentencePrototype(sentence_id=sentence_id,
                             trajectories=np.column_stack(cols),
                             n_body=n_body)


def make_decoder_map(seed: int, partition: NodePartition, channels: int,
                     n_body: int) -> np.ndarray:
    """Fixed random linear map (183 x G): body channels drive body-node
    coordinates, hand channels drive hand-node coordinates."""
    rng = substream(seed, "decoder")
    mapping = np.zeros((3 * 61, channels))
    body_coords = partition.body_coords
    hand_coords = partition.hand_coords
    mapping[np.ix_(body_coords, np.arange(n_body))] = rng.uniform(
        -1.5, 1.5, size=(body_coords.size, n_body))
    mapping[np.ix_(hand_coords, np.arange(n_body, channels))] = rng.uniform(
        -1.5, 1.5, size=(hand_coords.size, channels - n_body))
    return mapping


def warp_times(style: SignerStyle, t_proto: int) -> np.ndarray:
    """Prototype-time sample positions for each output frame.

    Output length is round(T_proto * sum(fraction/slope)), i.e. the
    prototype duration divided by the mean slope of the warp. Endpoints
    are fixed: the first output frame samples prototype time 0 and the
    last samples T_proto - 1.
    """
    fractions = np.asarray(style.warp_fractions, dtype=float)
    slopes = np.asarray(style.warp_slopes, dtype=float)
    out_frac = fractions / slopes
    length = int(round(t_proto * out_frac.sum()))
    length = max(length, 2)
    u = np.arange(length) / (length - 1)
    out_breaks = np.concatenate([[0.0], np.cumsum(out_frac)]) / out_frac.sum()
    proto_breaks = np.concatenate([[0.0], np.cumsum(fractions)])
    v = np.interp(u, out_breaks, proto_breaks)
    return v * (t_proto - 1)


def _styled_channels(proto: SentencePrototype, style: SignerStyle,
                     rng: np.random.Generator | None) -> np.ndarray:
    pos = warp_times(style, proto.duration)
    i0 = np.floor(pos).astype(int)
    i1 = np.minimum(i0 + 1, proto.duration - 1)
    w = (pos - i0)[:, None]
    seq = (1 - w) * proto.trajectories[i0] + w * proto.trajectories[i1]
    seq = seq * style.gains
    if style.sigma > 0:
        if rng is None:
            raise DataError("noisy style requires an rng")
        seq = seq + rng.normal(0.0, style.sigma, size=seq.shape)
    return seq


def _deviation_profile(n: int, ramp: float = DEV_RAMP) -> np.ndarray:
    """Plateau with cosine ramps over the outer ``ramp`` fraction."""
    if n <= 1:
        return np.ones(max(n, 0))
    u = np.arange(n) / (n - 1)
    phi = np.ones(n)
    lo = u < ramp
    hi = u > 1 - ramp
    phi[lo] = 0.5 * (1 - np.cos(np.pi * u[lo] / ramp))
    phi[hi] = 0.5 * (1 - np.cos(np.pi * (1 - u[hi]) / ramp))
    return phi


def apply_deviation(channels_seq: np.ndarray, dev: DeviationSpec,
                    n_body: int) -> np.ndarray:
    """Perturb the styled channel sequence inside the deviation window.

    AmplitudeError scales the signal by (1 + AMP_SCALE*delta*phi);
    WrongChannel blends each channel toward another channel of its group
    (body->body, hand->hand) by min(WRONG_SCALE*delta*phi, 1); Freeze
    replaces every window frame with the window's first frame.
    """
    if dev.delta == 0:
        return channels_seq
    seq = channels_seq.copy()
    length, g = seq.shape
    s = int(dev.window[0] * length)
    e = int(dev.window[1] * length)
    if e <= s:
        return seq
    phi = _deviation_profile(e - s)
    if dev.mode == MODE_AMPLITUDE:
        seq[s:e] *= (1 + AMP_SCALE * dev.delta * phi)[:, None]
    elif dev.mode == MODE_WRONG_CHANNEL:
        perm = np.r_[np.roll(np.arange(n_body), -1),
                     n_body + np.roll(np.arange(g - n_body), -1)]
        blend = np.minimum(WRONG_SCALE * dev.delta * phi, 1.0)[:, None]
        seq[s:e] = (1 - blend) * seq[s:e] + blend * seq[s:e][:, perm]
    elif dev.mode == MODE_FREEZE:
        seq[s:e] = seq[s]
    return seq


def _render(channels_seq: np.ndarray, decoder_map: np.ndarray,
            sentence_id: str, signer_id: str, role: str) -> PoseSequence:
    frames = np.clip(channels_seq @ decoder_map.T, -COORD_RANGE, COORD_RANGE)
    return PoseSequence(sentence_id=sentence_id, signer_id=signer_id,
                        role=role, frames=frames)


def gen_signer_sequence(proto: SentencePrototype, style: SignerStyle,
                        decoder_map: np.ndarray, *, signer_id: str = "",
                        role: str = ROLE_NATIVE,
                        rng: np.random.Generator | None = None) -> PoseSequence:
    seq = _styled_channels(proto, style, rng)
    return _render(seq, decoder_map, proto.sentence_id, signer_id, role)


def gen_learner_sequence(proto: SentencePrototype, style: SignerStyle,
                         dev: DeviationSpec, decoder_map: np.ndarray, *,
                         signer_id: str = "",
                         rng: np.random.Generator | None = None) -> PoseSequence:
    """Outside the window this matches gen_signer_sequence for the same
    style and rng state; inside, the trajectory is perturbed with
    magnitude proportional to delta."""
    seq = _styled_channels(proto, style, rng)
    seq = apply_deviation(seq, dev, proto.n_body)
    return _render(seq, decoder_map, proto.sentence_id, signer_id,
                   ROLE_LEARNER)


@dataclass
class CorpusTruth:
    """Sidecar ground truth for learners (never stored in pose files)."""

    learners: list[dict] = field(default_factory=list)


def gen_corpus(seed: int, out_dir: str | Path, *, sentences: int = 4,
               natives: int = 6, learners: int = 8,
               deltas: tuple[float, ...] = DEFAULT_DELTAS,
               modes: tuple[str, ...] = DEFAULT_MODES,
               window: tuple[float, float] = DEFAULT_WINDOW,
               t_proto: int = 120, channels: int = 6,
               sigma: float = SIGMA_GEN) -> CorpusManifest:
    """Generate poses + manifest.json + truth.json under ``out_dir``."""
    if sentences < 1:
        raise DataError("need at least one sentence")
    if natives < 3:
        raise DataError("need at least 3 natives for an envelope")
    if len(deltas) != learners or len(modes) != learners:
        raise DataError("deltas and modes must both have one entry per learner")
    out_dir = Path(out_dir)
    partition = default_partition()
    n_body = channels // 2
    decoder_map = make_decoder_map(seed, partition, channels, n_body)

    sentence_ids = [f"s{j:02d}" for j in range(sentences)]
    native_ids = [f"n{k:02d}" for k in range(natives)]
    learner_ids = [f"l{k:02d}" for k in range(learners)]

    entries: list[ManifestEntry] = []
    truth = CorpusTruth()
    for sid in sentence_ids:
        proto = gen_prototype(seed, sid, t_proto=t_proto, channels=channels)
        for kid in native_ids:
            rng = substream(seed, "style", sid, kid)
            style = sample_style(rng, channels, sigma=sigma)
            seq = gen_signer_sequence(proto, style, decoder_map,
                                      signer_id=kid, rng=rng)
            rel = f"poses/{sid}_{kid}.csv"
            save_sequence(seq, out_dir / rel)
            entries.append(ManifestEntry(sid, kid, rel))
        for idx, kid in enumerate(learner_ids):
            rng = substream(seed, "style", sid, kid)
            style = sample_style(rng, channels, sigma=sigma)
            dev = DeviationSpec(delta=float(deltas[idx]), window=window,
                                mode=modes[idx])
            seq = gen_learner_sequence(proto, style, dev, decoder_map,
                                       signer_id=kid, rng=rng)
            rel = f"poses/{sid}_{kid}.csv"
            save_sequence(seq, out_dir / rel)
            entries.append(ManifestEntry(sid, kid, rel))
            truth.learners.append({
                "signer": kid, "sentence": sid, "delta": float(deltas[idx]),
                "mode": modes[idx], "window": [window[0], window[1]],
            })

    manifest = CorpusManifest(
        sentences=sentence_ids,
        signers=[(k, ROLE_NATIVE) for k in native_ids]
                + [(k, ROLE_LEARNER) for k in learner_ids],
        entries=entries,
        partition=partition,
        root=out_dir,
    )
    save_manifest(manifest, out_dir / "manifest.json")
    write_json_atomic(out_dir / "truth.json", {"learners": truth.learners})
    return manifest
