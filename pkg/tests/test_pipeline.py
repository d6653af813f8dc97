import json

import numpy as np
import pytest

from signassess import pipeline
from signassess.config import resolve_config
from signassess.errors import ConfigError


def _cfg(root, **overrides):
    raw = {
        "seed": 13,
        "paths": {"corpus_dir": str(root / "corpus"),
                  "out_dir": str(root / "out")},
        "synth": {"sentences": 1, "natives": 3, "learners": 3,
                  "deltas": [0.0, 1.0, 2.0],
                  "modes": ["AmplitudeError", "WrongChannel", "Freeze"],
                  "t_proto": 40},
        "vae": {"epochs": 2, "hidden": [16, 8], "latent_dim": 3},
        "gp": {"max_iters": 40},
    }
    for section, vals in overrides.items():
        raw.setdefault(section, {}).update(vals)
    return resolve_config(raw)


@pytest.fixture(scope="module")
def staged(tmp_path_factory):
    root = tmp_path_factory.mktemp("staged")
    cfg = _cfg(root)
    pipeline.run_synth(cfg)
    pipeline.run_train_vae(cfg)
    pipeline.run_encode(cfg)
    return root, cfg


def test_train_pool_selection(staged, tmp_path):
    root, cfg = staged
    summary_all = pipeline.run_train_vae(cfg)
    natives_cfg = _cfg(root, vae={"train_pool": "natives", "epochs": 2,
                                  "hidden": [16, 8], "latent_dim": 3})
    summary_nat = pipeline.run_train_vae(natives_cfg)
    # 3 natives + 3 learners vs 3 natives, roughly 40 frames each
    assert summary_nat["frames"] < summary_all["frames"]
    bad = _cfg(root, vae={"train_pool": "everything", "epochs": 2,
                          "hidden": [16, 8], "latent_dim": 3})
    with pytest.raises(ConfigError, match="train_pool"):
        pipeline.run_train_vae(bad)
    # restore the artifact the remaining tests expect
    pipeline.run_train_vae(cfg)
    pipeline.run_encode(cfg)


def test_jobs_parallel_matches_serial(staged):
    root, cfg = staged
    serial = pipeline.run_encode(cfg, jobs=1)
    one = (root / "out" / "latents" / "s00_l00.csv").read_bytes()
    parallel = pipeline.run_encode(cfg, jobs=4)
    assert serial["encoded"] == parallel["encoded"]
    assert (root / "out" / "latents" / "s00_l00.csv").read_bytes() == one


def test_fit_envelope_then_score_and_report(staged):
    root, cfg = staged
    summary = pipeline.run_fit_envelope(cfg, jobs=2)
    assert summary["sentences"] == 1
    ref = summary["references"]["s00"]
    assert ref in ("n00", "n01", "n02")
    refs = json.loads((root / "out" / "references.json").read_text())
    assert refs["references"]["s00"]["reference_signer"] == ref

    scored = pipeline.run_score(cfg, jobs=2)
    assert scored["scored"] == 3
    report = pipeline.run_evaluate(cfg)
    assert "report" in report
    data = json.loads((root / "out" / "report.json").read_text())
    # the resolved config is echoed for reproducibility
    assert data["config"]["seed"] == 13
    assert data["sentences"]["s00"]["n"] == 3


def test_missing_prerequisites_give_config_errors(tmp_path):
    cfg = _cfg(tmp_path)
    pipeline.run_synth(cfg)
    with pytest.raises(ConfigError, match="run encode first"):
        pipeline.run_fit_envelope(cfg)
    with pytest.raises(ConfigError, match="run score first"):
        pipeline.run_evaluate(cfg)


def test_aligned_files_reference_grid(staged):
    root, cfg = staged
    from signassess.ioutil import read_matrix_csv
    env = json.loads((root / "out" / "envelope_s00.json").read_text())
    t_star = env["t_star"]
    for path in sorted((root / "out" / "aligned").glob("s00_*.csv")):
        mat, comment = read_matrix_csv(path)
        assert mat.shape == (t_star, 6)  # mu and logvar, 3 dims each
        assert "reference signer" in comment
