import numpy as np
import pytest

from signassess.errors import DataError
from signassess.skeleton import COORD_RANGE, default_partition, load_sequence
from signassess.synth import (
    BODY_AMP,
    DEFAULT_DELTAS,
    DEFAULT_MODES,
    HAND_AMP,
    MODE_AMPLITUDE,
    MODE_FREEZE,
    MODE_WRONG_CHANNEL,
    DeviationSpec,
    SignerStyle,
    apply_deviation,
    gen_corpus,
    gen_learner_sequence,
    gen_prototype,
    gen_signer_sequence,
    identity_style,
    make_decoder_map,
    normalized_warp_slopes,
    sample_style,
    warp_times,
)
from signassess.rng import substream


def test_prototype_deterministic():
    a = gen_prototype(3, "s00")
    b = gen_prototype(3, "s00")
    assert np.array_equal(a.trajectories, b.trajectories)
    c = gen_prototype(4, "s00")
    assert not np.array_equal(a.trajectories, c.trajectories)


def test_prototype_shape_and_bounds():
    p = gen_prototype(0, "s00", t_proto=80, channels=6)
    assert p.trajectories.shape == (80, 6)
    assert p.duration == 80 and p.channels == 6 and p.n_body == 3
    assert np.abs(p.trajectories).max() <= 1.0 + 1e-12


def test_prototype_amplitude_split():
    # hand channels move less than body channels, per the peak-amplitude draw
    for seed in range(10):
        p = gen_prototype(seed, "sX")
        peaks = np.abs(p.trajectories).max(axis=0)
        assert np.all(peaks[:p.n_body] >= BODY_AMP[0] - 1e-12)
        assert np.all(peaks[:p.n_body] <= BODY_AMP[1] + 1e-12)
        assert np.all(peaks[p.n_body:] >= HAND_AMP[0] - 1e-12)
        assert np.all(peaks[p.n_body:] <= HAND_AMP[1] + 1e-12)


def test_prototype_hand_channels_are_faster():
    """Hand channels concentrate power above 1/8 cycles/frame, body below."""
    for seed in range(5):
        p = gen_prototype(seed, "sY", t_proto=160)
        spec = np.abs(np.fft.rfft(p.trajectories, axis=0)) ** 2
        freqs = np.fft.rfftfreq(p.duration)
        high = spec[freqs > 1 / 8].mean(axis=0)
        assert high[p.n_body:].min() > high[:p.n_body].max()


def test_prototype_input_validation():
    with pytest.raises(DataError):
        gen_prototype(0, "s", t_proto=10)
    with pytest.raises(DataError):
        gen_prototype(0, "s", channels=2)


def test_normalized_warp_slopes_identity():
    norm = normalized_warp_slopes([0.5, 0.5], [1.0, 1.0])
    assert np.allclose(norm, [1.0, 1.0])


def test_style_rejects_extreme_slopes():
    with pytest.raises(DataError, match="0.8"):
        SignerStyle(warp_fractions=np.array([0.5, 0.5]),
                    warp_slopes=np.array([0.5, 1.0]),
                    gains=np.ones(6), sigma=0.0)


def test_sampled_styles_obey_field_bounds(rng):
    for _ in range(50):
        st = sample_style(rng, 6)
        norm = normalized_warp_slopes(st.warp_fractions, st.warp_slopes)
        assert norm.min() >= 0.8 and norm.max() <= 1.25
        assert st.gains.min() >= 0.9 and st.gains.max() <= 1.1


def test_warp_times_endpoints_and_monotone(rng):
    st = sample_style(rng, 6)
    pos = warp_times(st, 120)
    assert pos[0] == 0.0
    assert np.isclose(pos[-1], 119.0)
    assert np.all(np.diff(pos) > 0)


def test_uniform_slope_changes_length():
    st = SignerStyle(warp_fractions=np.array([1.0]),
                     warp_slopes=np.array([0.8]),
                     gains=np.ones(6), sigma=0.0)
    assert warp_times(st, 120).shape[0] == round(120 / 0.8)
    st2 = SignerStyle(warp_fractions=np.array([1.0]),
                      warp_slopes=np.array([1.25]),
                      gains=np.ones(6), sigma=0.0)
    assert warp_times(st2, 120).shape[0] == round(120 / 1.25)


def test_identity_style_reproduces_prototype():
    p = gen_prototype(1, "s00", t_proto=60)
    dmap = make_decoder_map(1, default_partition(), p.channels, p.n_body)
    seq = gen_signer_sequence(p, identity_style(p.channels), dmap,
                              signer_id="n00")
    expect = np.clip(p.trajectories @ dmap.T, -COORD_RANGE, COORD_RANGE)
    assert np.allclose(seq.frames, expect, atol=1e-12)


def test_two_styles_differ():
    p = gen_prototype(1, "s00", t_proto=60)
    dmap = make_decoder_map(1, default_partition(), p.channels, p.n_body)
    a = gen_signer_sequence(p, sample_style(substream(1, "a"), 6), dmap,
                            rng=substream(1, "a2"))
    b = gen_signer_sequence(p, sample_style(substream(1, "b"), 6), dmap,
                            rng=substream(1, "b2"))
    assert a.frames.shape != b.frames.shape or not np.allclose(
        a.frames, b.frames)


def test_decoder_map_respects_partition():
    part = default_partition()
    dmap = make_decoder_map(5, part, 6, 3)
    # body coordinates see only body channels and vice versa
    assert np.all(dmap[np.ix_(part.body_coords, [3, 4, 5])] == 0)
    assert np.all(dmap[np.ix_(part.hand_coords, [0, 1, 2])] == 0)
    assert np.any(dmap[np.ix_(part.body_coords, [0, 1, 2])] != 0)


def test_delta_zero_learner_equals_native():
    p = gen_prototype(2, "s00", t_proto=60)
    dmap = make_decoder_map(2, default_partition(), p.channels, p.n_body)
    st = sample_style(substream(2, "s"), 6)
    dev = DeviationSpec(delta=0.0)
    a = gen_signer_sequence(p, st, dmap, rng=substream(2, "n"))
    b = gen_learner_sequence(p, st, dev, dmap, rng=substream(2, "n"))
    assert np.array_equal(a.frames, b.frames)


def test_deviation_spec_validation():
    with pytest.raises(DataError):
        DeviationSpec(delta=-1.0)
    with pytest.raises(DataError):
        DeviationSpec(delta=1.0, window=(0.6, 0.4))
    with pytest.raises(DataError):
        DeviationSpec(delta=1.0, mode="Teleport")


def test_deviation_outside_window_untouched(rng):
    seq = rng.normal(size=(100, 6))
    for mode in (MODE_AMPLITUDE, MODE_WRONG_CHANNEL, MODE_FREEZE):
        dev = DeviationSpec(delta=1.5, window=(0.4, 0.6), mode=mode)
        out = apply_deviation(seq, dev, n_body=3)
        assert np.array_equal(out[:40], seq[:40])
        assert np.array_equal(out[60:], seq[60:])
        assert not np.array_equal(out[40:60], seq[40:60])


def test_freeze_holds_first_window_frame(rng):
    seq = rng.normal(size=(100, 6))
    dev = DeviationSpec(delta=2.0, window=(0.4, 0.6), mode=MODE_FREEZE)
    out = apply_deviation(seq, dev, n_body=3)
    assert np.all(out[40:60] == seq[40])


def test_deviation_magnitude_monotone_in_delta(rng):
    seq = rng.normal(size=(100, 6))
    for mode in (MODE_AMPLITUDE, MODE_WRONG_CHANNEL):
        last = 0.0
        for delta in (0.25, 0.5, 1.0, 2.0):
            dev = DeviationSpec(delta=delta, window=(0.4, 0.6), mode=mode)
            out = apply_deviation(seq, dev, n_body=3)
            l1 = np.abs(out - seq).mean()
            assert l1 > last, (mode, delta)
            last = l1
    # Freeze carries no dose: any positive delta gives the same hold
    f1 = apply_deviation(seq, DeviationSpec(1.0, mode=MODE_FREEZE), 3)
    f2 = apply_deviation(seq, DeviationSpec(2.0, mode=MODE_FREEZE), 3)
    assert np.array_equal(f1, f2)


def test_gen_corpus_files_and_truth(tiny_corpus):
    root, manifest = tiny_corpus
    poses = sorted((root / "poses").glob("*.csv"))
    # 2 sentences x (4 natives + 4 learners)
    assert len(poses) == 16
    assert (root / "manifest.json").exists()
    assert (root / "truth.json").exists()
    import json
    truth = json.loads((root / "truth.json").read_text())
    assert len(truth["learners"]) == 8
    by_learner = {(r["sentence"], r["signer"]): r for r in truth["learners"]}
    assert by_learner[("s00", "l00")]["delta"] == 0.0
    assert by_learner[("s01", "l03")]["mode"] == "Freeze"


def test_gen_corpus_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for d in (a, b):
        gen_corpus(11, d, sentences=1, natives=3, learners=2,
                   deltas=(0.0, 1.0), modes=(MODE_AMPLITUDE, MODE_FREEZE),
                   t_proto=40)
    for rel in sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file()):
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_gen_corpus_roster_validation(tmp_path):
    with pytest.raises(DataError, match="one entry per learner"):
        gen_corpus(0, tmp_path / "x", learners=3, deltas=(0.0,),
                   modes=(MODE_AMPLITUDE,))


def test_default_roster_modes_consistent():
    assert len(DEFAULT_DELTAS) == len(DEFAULT_MODES) == 8
    top = max(DEFAULT_DELTAS)
    for d, m in zip(DEFAULT_DELTAS, DEFAULT_MODES):
        # freeze has no dose, so it sits strictly inside the delta range
        if m == MODE_FREEZE:
            assert 0.0 < d < top
        # partial wrong-channel blends are unreliable; full blend only
        if m == MODE_WRONG_CHANNEL and d > 0:
            assert d == top


def test_corpus_pose_files_loadable(tiny_corpus):
    root, manifest = tiny_corpus
    e = manifest.entries[0]
    seq = load_sequence(root / e.path, sentence_id=e.sentence,
                        signer_id=e.signer)
    assert seq.frames.shape[1] == 183
