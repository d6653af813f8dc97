"""Reference selection, DTW alignment, and the GP motion envelope.

Works directly in a hand-built 2-dim latent space so every step is
visible: pick the most central of four noisy copies of a trajectory,
align the rest onto it, fit one exact GP per dimension, and write an
SVG of the resulting 95% band.
"""
import tempfile
from pathlib import Path

import numpy as np

from signassess.alignment import apply_warp, dtw
from signassess.envelope import (GpConfig, confidence_region, fit_envelope,
                                 posterior)
from signassess.plotting import envelope_svg, save_svg
from signassess.reference import select_reference

rng = np.random.default_rng(3)

# four productions of the same "sentence", different speeds and noise
t_base = np.linspace(0, 2 * np.pi, 60)
signers = {}
for k in range(4):
    length = rng.integers(50, 72)
    t = np.linspace(0, 2 * np.pi, length)
    mat = np.column_stack([np.sin(t), 0.5 * np.cos(2 * t)])
    signers[f"n{k:02d}"] = mat + rng.normal(0, 0.03, size=mat.shape)

choice = select_reference("demo", sorted(signers.items()))
print("lengths:", {k: len(v) for k, v in sorted(signers.items())})
print(f"reference: {choice.reference_signer} "
      f"(mean similarity {choice.scores[choice.reference_signer]:.4f})")

ref = signers[choice.reference_signer]
aligned = {}
for k, mat in sorted(signers.items()):
    cost, path = dtw(ref, mat, radius=20)
    aligned[k] = apply_warp(path, mat)
    print(f"  {k}: {len(mat)} frames -> {len(aligned[k])}, "
          f"alignment cost {cost:.2f}")

env = fit_envelope("demo", aligned, choice.reference_signer, ref,
                   config=GpConfig(max_iters=400))
for d, m in enumerate(env.models):
    hp = m.hyperparams
    print(f"dim {d}: lengthscale {hp.lengthscale:.3f}, "
          f"signal var {hp.outputscale:.4f}, noise var {hp.noise:.5f}")

# the band tracks the data: tight where natives agree, wide where not
mean, var_f, var_pred = posterior(env.models[0], env.times)
lower, upper = confidence_region(env.models[0], env.times,
                                 variance="predictive")
width = upper - lower
print(f"band width: min {width.min():.3f}, max {width.max():.3f}")

svg = envelope_svg(mean=mean, lower=lower, upper=upper,
                   natives={k: v[:, 0] for k, v in aligned.items()},
                   title="demo envelope, dim 0")
out = Path(tempfile.mkdtemp(prefix="assess_demo_")) / "envelope.svg"
save_svg(svg, out)
print(f"wrote {out}")
