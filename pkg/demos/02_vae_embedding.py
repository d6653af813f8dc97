"""Train the pose VAE at toy scale and look at the embedding.

The encoder maps 183-dim skeleton frames to 10 latent dims; training
minimizes a hands-weighted L1 reconstruction plus a small KL term.
A few hundred epochs on a tiny pool is enough to see the loss collapse
and the latent trajectories turn smooth.
"""
import tempfile
from pathlib import Path

import numpy as np

from signassess.skeleton import default_partition, load_manifest, load_sequence
from signassess.synth import gen_corpus
from signassess.vae import VaeConfig, encode_sequence, train_vae, vae_loss, decode, encode

SEED = 7

root = Path(tempfile.mkdtemp(prefix="assess_demo_"))
manifest = gen_corpus(SEED, root, sentences=2, natives=4, learners=2,
                      deltas=(0.0, 1.0), modes=("AmplitudeError",) * 2,
                      t_proto=80)

partition = default_partition()
natives = set(manifest.native_ids())
pool = np.vstack([load_sequence(manifest.entry_path(e)).frames
                  for e in manifest.entries if e.signer in natives])
print(f"training pool: {pool.shape[0]} frames x {pool.shape[1]} dims")

config = VaeConfig(epochs=300, seed=SEED)
result = train_vae(pool, config, partition)
print(f"epoch   1: loss {result.trace[0]:.4f}")
print(f"epoch {len(result.trace):3d}: loss {result.trace[-1]:.4f} "
      f"({result.trace[-1] / result.trace[0]:.2%} of initial, "
      f"{result.seconds:.1f}s)")

# reconstruction quality, per coordinate
model = result.model
mu, logvar = encode(model, pool)
recon = decode(model, mu)
_, l1_hands, l1_body, kld = vae_loss(pool, recon, mu, logvar, partition,
                                     config.alpha, config.beta)
print(f"per-coordinate L1: hands {l1_hands:.4f}, body {l1_body:.4f} "
      f"(coordinates live in [-6, 6]); KLD {kld:.2f}")

# latent trajectories are low-dim summaries of the motion
entry = manifest.entries[0]
frames = load_sequence(manifest.entry_path(entry)).frames
lat = encode_sequence(model, frames, sentence_id=entry.sentence,
                      signer_id=entry.signer)
print(f"\n{entry.sentence}/{entry.signer}: {frames.shape} poses -> "
      f"{lat.mu.shape} latent means")
step = np.abs(np.diff(lat.mu, axis=0)).mean()
spread = lat.mu.std()
print(f"latent smoothness: mean |frame-to-frame step| {step:.3f} vs "
      f"overall spread {spread:.3f}")
