"""End-to-end orchestration behind the CLI subcommands.

Each step reads what earlier steps wrote under the configured output
directory, so steps can be re-run independently.  All outputs use
stable names:

    corpus_dir/manifest.json, poses/<sentence>_<signer>.csv, truth.json
    out_dir/vae.json, vae_loss.csv
    out_dir/latents/<sentence>_<signer>.csv
    out_dir/references.json, aligned/<sentence>_<signer>.csv
    out_dir/envelope_<sentence>.json
    out_dir/scores_<sentence>_<signer>.json (+ _points.csv)
    out_dir/report.json
    out_dir/plot_<sentence>_<dimension>.svg
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import alignment, envelope as envelope_mod, evaluation, plotting, scoring
from .config import gp_config, scoring_config, vae_config
from .errors import ConfigError, DataError
from .ioutil import read_json, read_matrix_csv, write_json_atomic, write_matrix_csv
from .reference import select_reference
from .skeleton import load_manifest, load_sequence, validate_corpus
from .synth import gen_corpus
from .vae import (encode_sequence, load_latents, load_vae, save_latents,
                  save_vae, train_vae)


def _paths(cfg: dict) -> tuple[Path, Path]:
    return Path(cfg["paths"]["corpus_dir"]), Path(cfg["paths"]["out_dir"])


def _manifest(cfg: dict):
    corpus_dir, _ = _paths(cfg)
    manifest = load_manifest(corpus_dir / "manifest.json")
    problems = validate_corpus(manifest)
    if problems:
        raise DataError("invalid corpus: " + "; ".join(problems))
    return manifest


def _map_jobs(fn, items, jobs: int):
    """Apply fn over items, optionally with a thread pool; order preserved."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def run_synth(cfg: dict, jobs: int = 1) -> dict:
    corpus_dir, _ = _paths(cfg)
    s = cfg["synth"]
    manifest = gen_corpus(cfg["seed"], corpus_dir,
                          sentences=s["sentences"], natives=s["natives"],
                          learners=s["learners"],
                          deltas=tuple(float(d) for d in s["deltas"]),
                          modes=tuple(s["modes"]),
                          window=(float(s["window"][0]), float(s["window"][1])),
                          t_proto=s["t_proto"], channels=s["channels"],
                          sigma=s["sigma"])
    return {"manifest": str(corpus_dir / "manifest.json"),
            "entries": len(manifest.entries)}


def run_train_vae(cfg: dict, jobs: int = 1) -> dict:
    manifest = _manifest(cfg)
    _, out_dir = _paths(cfg)
    pool_kind = cfg["vae"]["train_pool"]
    if pool_kind == "all":
        wanted = {sid for sid, _ in manifest.signers}
    elif pool_kind == "natives":
        wanted = set(manifest.native_ids())
    else:
        raise ConfigError(f"vae.train_pool must be 'all' or 'natives', "
                          f"got {pool_kind!r}")
    pool = [load_sequence(manifest.entry_path(e)).frames
            for e in manifest.entries if e.signer in wanted]
    if not pool:
        raise DataError("no productions to train on")
    frames = np.vstack(pool)
    result = train_vae(frames, vae_config(cfg), manifest.partition)
    save_vae(result.model, out_dir / "vae.json")
    write_matrix_csv(out_dir / "vae_loss.csv",
                     np.asarray(result.trace, dtype=float)[:, None])
    return {"model": str(out_dir / "vae.json"), "frames": int(frames.shape[0]),
            "epochs": len(result.trace),
            "final_loss": float(result.trace[-1]) if result.trace else None,
            "seconds": round(result.seconds, 3)}


def _latent_path(out_dir: Path, sentence: str, signer: str) -> Path:
    return out_dir / "latents" / f"{sentence}_{signer}.csv"


def run_encode(cfg: dict, jobs: int = 1) -> dict:
    manifest = _manifest(cfg)
    _, out_dir = _paths(cfg)
    model = load_vae(out_dir / "vae.json")

    def encode_entry(entry):
        seq = load_sequence(manifest.entry_path(entry))
        latent = encode_sequence(model, seq.frames, sentence_id=entry.sentence,
                                 signer_id=entry.signer)
        return entry, latent

    encoded = _map_jobs(encode_entry, manifest.entries, jobs)
    for entry, latent in encoded:
        save_latents(latent, _latent_path(out_dir, entry.sentence, entry.signer))
    return {"encoded": len(encoded), "dir": str(out_dir / "latents")}


def _load_latent_corpus(cfg: dict, manifest) -> dict:
    _, out_dir = _paths(cfg)
    out = {}
    for entry in manifest.entries:
        path = _latent_path(out_dir, entry.sentence, entry.signer)
        if not path.exists():
            raise ConfigError(f"missing latent file {path}; run encode first")
        out[(entry.sentence, entry.signer)] = load_latents(
            path, sentence_id=entry.sentence, signer_id=entry.signer)
    return out


def run_fit_envelope(cfg: dict, jobs: int = 1) -> dict:
    manifest = _manifest(cfg)
    _, out_dir = _paths(cfg)
    latents = _load_latent_corpus(cfg, manifest)
    natives = manifest.native_ids()
    radius = cfg["dtw"]["radius"]
    gcfg = gp_config(cfg)

    choices = {}
    for sentence in manifest.sentences:
        pairs = [(k, latents[(sentence, k)].mu) for k in natives
                 if (sentence, k) in latents]
        choice = select_reference(sentence, pairs)
        choices[sentence] = choice

    def fit_one(sentence):
        choice = choices[sentence]
        ref_id = choice.reference_signer
        ref_mu = latents[(sentence, ref_id)].mu
        aligned_mu = {}
        aligned_full = {}
        for signer in natives:
            if (sentence, signer) not in latents:
                continue
            latent = latents[(sentence, signer)]
            _, path = alignment.dtw(ref_mu, latent.mu, radius)
            aligned_mu[signer] = alignment.apply_warp(path, latent.mu)
            aligned_full[signer] = np.hstack([
                aligned_mu[signer], alignment.apply_warp(path, latent.logvar)])
        env = envelope_mod.fit_envelope(sentence, aligned_mu, ref_id, ref_mu,
                                        gcfg)
        return sentence, env, aligned_full

    fitted = _map_jobs(fit_one, manifest.sentences, jobs)
    for sentence, env, aligned_full in fitted:
        envelope_mod.save_envelope(env, out_dir / f"envelope_{sentence}.json")
        for signer, mat in sorted(aligned_full.items()):
            write_matrix_csv(out_dir / "aligned" / f"{sentence}_{signer}.csv",
                             mat,
                             header_comment=f"aligned to reference signer "
                                            f"{env.reference_signer}")
    write_json_atomic(out_dir / "references.json", {
        "references": {
            s: {"reference_signer": c.reference_signer, "scores": c.scores}
            for s, c in sorted(choices.items())
        },
    })
    return {"sentences": len(fitted),
            "references": {s: c.reference_signer
                           for s, c in sorted(choices.items())}}


def run_score(cfg: dict, jobs: int = 1) -> dict:
    manifest = _manifest(cfg)
    _, out_dir = _paths(cfg)
    latents = _load_latent_corpus(cfg, manifest)
    scfg = scoring_config(cfg)
    learners = set(manifest.learner_ids())

    envelopes = {}
    for sentence in manifest.sentences:
        path = out_dir / f"envelope_{sentence}.json"
        if not path.exists():
            raise ConfigError(f"missing {path}; run fit-envelope first")
        envelopes[sentence] = envelope_mod.load_envelope(path)

    tasks = [(e.sentence, e.signer) for e in manifest.entries
             if e.signer in learners]

    def score_one(key):
        sentence, signer = key
        breakdown = scoring.assess(envelopes[sentence], latents[key].mu,
                                   scfg, test_id=signer)
        anomalies = scoring.locate_anomalies(breakdown, scfg.min_run)
        return key, breakdown, anomalies

    results = _map_jobs(score_one, tasks, jobs)
    for (sentence, signer), breakdown, anomalies in results:
        stem = f"scores_{sentence}_{signer}"
        scoring.save_scores(breakdown, anomalies, out_dir / f"{stem}.json")
        scoring.save_points_csv(breakdown, out_dir / f"{stem}_points.csv")
    return {"scored": len(results), "dir": str(out_dir)}


def _load_scores(cfg: dict, manifest) -> dict:
    _, out_dir = _paths(cfg)
    scores = {}
    learners = set(manifest.learner_ids())
    for entry in manifest.entries:
        if entry.signer not in learners:
            continue
        path = out_dir / f"scores_{entry.sentence}_{entry.signer}.json"
        if not path.exists():
            raise ConfigError(f"missing {path}; run score first")
        data = read_json(path)
        scores[(entry.sentence, entry.signer)] = (
            float(data["pd_measure"]), int(data["ood_count"]))
    return scores


def _load_truth(cfg: dict) -> dict:
    corpus_dir, _ = _paths(cfg)
    path = corpus_dir / "truth.json"
    if not path.exists():
        raise ConfigError(f"missing {path}; synthetic truth sidecar required")
    data = read_json(path)
    return {(rec["sentence"], rec["signer"]): float(rec["delta"])
            for rec in data["learners"]}


def run_evaluate(cfg: dict, jobs: int = 1) -> dict:
    manifest = _manifest(cfg)
    _, out_dir = _paths(cfg)
    scores = _load_scores(cfg, manifest)
    truth = _load_truth(cfg)
    ratings = {key: evaluation.proxy_rating(delta)
               for key, delta in truth.items()}
    report = evaluation.evaluate_run(scores, ratings)
    report.update({
        "format_version": 1,
        "kind": "evaluation-report",
        "rating_proxy": "3 - delta, clamped to [1, 3]",
        "config": cfg,
    })
    write_json_atomic(out_dir / "report.json", report)
    return {"report": str(out_dir / "report.json"), "mean": report["mean"]}


def run_plot(cfg: dict, sentence: str, signer: str, dimension: int,
             t_range: tuple[int, int] | None = None, jobs: int = 1) -> dict:
    _, out_dir = _paths(cfg)
    env_path = out_dir / f"envelope_{sentence}.json"
    if not env_path.exists():
        raise ConfigError(f"missing {env_path}; run fit-envelope first")
    env = envelope_mod.load_envelope(env_path)
    if not 0 <= dimension < env.num_dims:
        raise ConfigError(f"dimension {dimension} outside [0, {env.num_dims})")

    points_path = out_dir / f"scores_{sentence}_{signer}_points.csv"
    if not points_path.exists():
        raise ConfigError(f"missing {points_path}; run score first")
    table, _ = read_matrix_csv(points_path)
    rows = table[table[:, 1] == dimension]
    if rows.shape[0] != env.t_star:
        raise DataError(f"{points_path}: expected {env.t_star} rows for "
                        f"dimension {dimension}, found {rows.shape[0]}")
    order = np.argsort(rows[:, 0])
    test_values = rows[order, 2]
    outside = rows[order, 6] > 0.5

    natives = {}
    for path in sorted((out_dir / "aligned").glob(f"{sentence}_*.csv")):
        signer_id = path.stem[len(sentence) + 1:]
        mat, _ = read_matrix_csv(path)
        natives[signer_id] = mat[:, dimension]

    mean, var_f, var_pred = envelope_mod.posterior(env.models[dimension],
                                                   env.times)
    band = var_pred if scoring_config(cfg).band_variance == "predictive" else var_f
    spread = envelope_mod.CONFIDENCE_MULTIPLIER * np.sqrt(band)

    svg = plotting.envelope_svg(
        mean=mean, lower=mean - spread, upper=mean + spread,
        natives=natives, test_values=test_values, outside=outside,
        title=f"{sentence} dim {dimension} - {signer}",
        width=cfg["plot"]["width"], height=cfg["plot"]["height"],
        t_range=t_range)
    out_path = out_dir / f"plot_{sentence}_{dimension}.svg"
    plotting.save_svg(svg, out_path)
    return {"svg": str(out_path)}
