"""End-to-end run at reduced scale through the pipeline API.

Equivalent to the CLI chain

    assess synth|train-vae|encode|fit-envelope|score|evaluate --config ...

but driven in-process, with a short VAE schedule so it finishes in
about a minute. Prints the per-sentence rank correlations between the
scores and the (synthetic) quality labels.
"""
import json
import tempfile
import time
from pathlib import Path

from signassess import pipeline
from signassess.config import resolve_config

root = Path(tempfile.mkdtemp(prefix="assess_demo_"))
cfg = resolve_config({
    "seed": 5,
    "paths": {"corpus_dir": str(root / "corpus"),
              "out_dir": str(root / "out")},
    "synth": {"sentences": 2, "natives": 5, "learners": 6,
              "deltas": [0.0, 0.0, 0.5, 1.0, 2.0, 2.0],
              "modes": ["AmplitudeError", "WrongChannel", "AmplitudeError",
                        "WrongChannel", "AmplitudeError", "Freeze"]},
    "vae": {"epochs": 400, "train_pool": "natives"},
})

steps = [("synth", pipeline.run_synth),
         ("train-vae", pipeline.run_train_vae),
         ("encode", pipeline.run_encode),
         ("fit-envelope", pipeline.run_fit_envelope),
         ("score", pipeline.run_score),
         ("evaluate", pipeline.run_evaluate)]
for name, step in steps:
    t0 = time.perf_counter()
    summary = step(cfg)
    print(f"{name:13s} {time.perf_counter() - t0:6.1f}s  "
          + ", ".join(f"{k}={v}" for k, v in list(summary.items())[:2]))

report = json.loads((root / "out" / "report.json").read_text())
print("\nscore-vs-label agreement per sentence:")
for sid, s in sorted(report["sentences"].items()):
    print(f"  {sid}: SRCC(PD, rating) {s['pd']['srcc']:+.3f}   "
          f"SRCC(OOD, rating) {s['ood']['srcc']:+.3f}")
print(f"mean: PD {report['mean']['pd']['srcc']:+.3f}, "
      f"OOD {report['mean']['ood']['srcc']:+.3f} "
      "(PD should rise with rating; OOD should fall)")

# per-learner detail for the first sentence
truth = json.loads((root / "corpus" / "truth.json").read_text())
print("\nsentence s00 learners:")
for rec in truth["learners"]:
    if rec["sentence"] != "s00":
        continue
    scores = json.loads(
        (root / "out" / f"scores_s00_{rec['signer']}.json").read_text())
    print(f"  {rec['signer']} delta={rec['delta']:.1f} "
          f"mode={rec['mode']:14s} PD={scores['pd_measure']:.3f} "
          f"OOD={scores['ood_count']:3d}")
