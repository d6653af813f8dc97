"""Generate a small synthetic corpus and poke at its structure.

Shows the two-group channel design (slow/large body vs fast/small hands),
the per-signer style variation, and what each deviation mode does to a
learner's trajectory inside the scripted window.
"""
import tempfile
from pathlib import Path

import numpy as np

from signassess.skeleton import default_partition, load_manifest, load_sequence
from signassess.synth import (DeviationSpec, gen_corpus, gen_learner_sequence,
                              gen_prototype, gen_signer_sequence,
                              identity_style, make_decoder_map, sample_style)
from signassess.rng import substream

SEED = 42

out = Path(tempfile.mkdtemp(prefix="assess_demo_"))
print(f"writing corpus under {out}")

manifest = gen_corpus(SEED, out, sentences=2, natives=4, learners=4,
                      deltas=(0.0, 0.5, 1.0, 2.0),
                      modes=("AmplitudeError", "WrongChannel",
                             "AmplitudeError", "Freeze"),
                      t_proto=100)

print(f"{len(manifest.entries)} pose files, "
      f"{len(manifest.native_ids())} natives, "
      f"{len(manifest.learner_ids())} learners per sentence")

# --- channel statistics of the underlying prototype -----------------------
proto = gen_prototype(SEED, "s00", t_proto=100)
spec = np.abs(np.fft.rfft(proto.trajectories, axis=0)) ** 2
freqs = np.fft.rfftfreq(proto.duration)
high = spec[freqs > 1 / 8].mean(axis=0)
print("\nper-channel peak amplitude:",
      np.round(np.abs(proto.trajectories).max(axis=0), 3))
print("high-frequency power (>1/8 cyc/frame):", np.round(high, 4))
print(f"  body channels 0..{proto.n_body - 1} are slow and large; "
      f"hand channels {proto.n_body}.. are fast and small")

# --- styles stretch time and scale amplitude a little ---------------------
dmap = make_decoder_map(SEED, default_partition(), proto.channels, proto.n_body)
for label in ("a", "b"):
    style = sample_style(substream(SEED, label), proto.channels)
    seq = gen_signer_sequence(proto, style, dmap, signer_id=label,
                              rng=substream(SEED, label, "noise"))
    print(f"style {label}: {len(seq)} frames "
          f"(prototype has {proto.duration}), gains ~ "
          f"{np.round(style.gains, 3)}")

# --- what the deviations look like -----------------------------------------
clean = gen_signer_sequence(proto, identity_style(proto.channels), dmap)
for mode in ("AmplitudeError", "WrongChannel", "Freeze"):
    dev = DeviationSpec(delta=1.5, window=(0.4, 0.6), mode=mode)
    bad = gen_learner_sequence(proto, identity_style(proto.channels), dev, dmap)
    err = np.abs(bad.frames - clean.frames).mean(axis=1)
    t_lo, t_hi = int(0.4 * len(err)), int(0.6 * len(err))
    print(f"{mode:15s} mean |diff| inside window {err[t_lo:t_hi].mean():.3f}, "
          f"outside {np.concatenate([err[:t_lo], err[t_hi:]]).mean():.3f}")

# --- the manifest round-trips and the truth sidecar stays separate ---------
re = load_manifest(out / "manifest.json")
entry = re.entries[0]
seq = load_sequence(re.entry_path(entry), sentence_id=entry.sentence,
                    signer_id=entry.signer)
print(f"\nreloaded {entry.path}: {seq.frames.shape}, "
      f"coords within [{seq.frames.min():.2f}, {seq.frames.max():.2f}]")
print("ground truth lives in truth.json, never in the pose files")
