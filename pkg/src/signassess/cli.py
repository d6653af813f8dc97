"""Command-line front end: config-driven batch subcommands.

Exit codes: 0 success, 2 config/validation problem, 3 numeric failure,
4 I/O failure.
"""

import argparse
import sys

from . import pipeline
from .config import load_config
from .errors import AssessError, ConfigError
from .ioutil import canonical_json


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="assess",
        description="Sign-language assessment pipeline: synthetic corpus, "
                    "pose VAE, motion envelopes, scoring, evaluation, plots.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True,
                       help="path to the run-config JSON file")
        p.add_argument("--set", action="append", default=[], metavar="K=V",
                       dest="overrides",
                       help="override a config value (dotted key, JSON value)")
        p.add_argument("--jobs", type=int, default=1,
                       help="max parallel workers (default 1)")
        return p

    add("synth", "generate the seeded synthetic corpus")
    add("train-vae", "train the pose VAE on native productions")
    add("encode", "encode every production into latent trajectories")
    add("fit-envelope", "select references, align natives, fit GP envelopes")
    add("score", "assess every learner production against its envelope")
    add("evaluate", "correlate scores with ratings and write the report")
    plot = add("plot", "render one envelope dimension with trajectories")
    plot.add_argument("--sentence", required=True)
    plot.add_argument("--signer", required=True,
                      help="learner whose assessment to overlay")
    plot.add_argument("--dimension", type=int, required=True)
    plot.add_argument("--t-range", default=None, metavar="A:B",
                      help="half-open timestep range to draw")
    return parser


def _parse_t_range(text):
    if text is None:
        return None
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise ConfigError(f"--t-range expects A:B integers, got {text!r}")


_COMMANDS = {
    "synth": pipeline.run_synth,
    "train-vae": pipeline.run_train_vae,
    "encode": pipeline.run_encode,
    "fit-envelope": pipeline.run_fit_envelope,
    "score": pipeline.run_score,
    "evaluate": pipeline.run_evaluate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        cfg = load_config(args.config, args.overrides)
        if args.command == "plot":
            summary = pipeline.run_plot(cfg, sentence=args.sentence,
                                        signer=args.signer,
                                        dimension=args.dimension,
                                        t_range=_parse_t_range(args.t_range),
                                        jobs=args.jobs)
        else:
            summary = _COMMANDS[args.command](cfg, jobs=args.jobs)
    except AssessError as exc:
        print(f"assess {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"assess {args.command}: i/o error: {exc}", file=sys.stderr)
        return 4
    sys.stdout.write(canonical_json({"command": args.command, **summary}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
