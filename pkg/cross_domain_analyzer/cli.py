"""
Command-line entry point: synth, train, eval, pseudo-label and diagnose.
"""

import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

import yaml

from cross_domain_analyzer.data.synthetic_corpus_generator import SynthSpec
from cross_domain_analyzer.errors import InvalidConfig
from cross_domain_analyzer.logger import logger
from cross_domain_analyzer.models.models_data import ModelsData, load_models_data
from cross_domain_analyzer.models.models_factory import ModelsFactory
from cross_domain_analyzer.processing_types import Profiles, Runs
from cross_domain_analyzer.results.models_results import ModelsResults

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2

DEFAULT_SUBDIRS = {
    Runs.EVAL: "eval",
    Runs.PSEUDO_LABEL: "pseudo_labels",
}


class UsageError(InvalidConfig):
    """
    Raised instead of letting argparse terminate the process.
    """


class CommandParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> CommandParser:
    """
    Parser with one sub-command per run type; shared flags live on every sub-command.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="YAML run configuration.")
    common.add_argument(
        "--profile", default=None, choices=[profile.value for profile in Profiles],
        help="Hyper-parameter profile; overrides the config file."
    )
    common.add_argument("--seed", type=int, default=None, help="Seed of every random decision.")
    common.add_argument("--workers", type=int, default=None, help="Feature loading threads (default 1).")
    common.add_argument("--out", default=None, help="Output directory.")

    parser = CommandParser(
        prog="cross_domain_analyzer",
        description="Cross-domain weakly-supervised video anomaly detection toolkit.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser(Runs.SYNTH.value, parents=[common], help="Generate a synthetic two-domain corpus.")
    synth.add_argument("--spec", default=None, help="YAML file of synthetic corpus settings.")

    train = commands.add_parser(Runs.TRAIN.value, parents=[common], help="Run step 0 and the CDL steps.")
    train.add_argument("--resume", default=None, help="Checkpoint to continue from.")

    evaluate = commands.add_parser(Runs.EVAL.value, parents=[common], help="Frame-level AUC/AP of the main head.")
    evaluate.add_argument("--checkpoint", required=True, help="Checkpoint to evaluate.")
    evaluate.add_argument("--manifest", default=None, help="Frame-labeled test manifest.")

    pseudo_label = commands.add_parser(
        Runs.PSEUDO_LABEL.value, parents=[common], help="Export both heads' soft labels for an external corpus."
    )
    pseudo_label.add_argument("--checkpoint", required=True, help="Checkpoint providing the heads.")
    pseudo_label.add_argument("--manifest", default=None, help="External corpus manifest.")

    diagnose = commands.add_parser(
        Runs.DIAGNOSE.value, parents=[common], help="Uncertainty CDFs and correlation series of a run."
    )
    diagnose.add_argument("run_dir", help="Output directory of a training run.")
    return parser


def _load_synth_spec(path: str, seed: Optional[int]) -> SynthSpec:
    if not os.path.exists(path):
        raise FileNotFoundError(f"Synthetic corpus spec {path} does not exist.")
    with open(path, "r", encoding="utf-8") as handle:
        document = yaml.safe_load(handle) or {}
    if not isinstance(document, dict):
        raise InvalidConfig(f"{path} does not hold a mapping.")
    spec = SynthSpec.from_dict(document.get("synth", document))
    return replace(spec, seed=seed) if seed is not None else spec


def build_models_data(args: argparse.Namespace) -> ModelsData:
    """
    Resolves the configuration of one invocation.
    """
    run_type = Runs(args.command)
    models_data = load_models_data(
        config_path=args.config,
        profile=args.profile,
        seed=args.seed,
        workers=args.workers,
        output_dir=args.out,
    )

    if run_type is Runs.SYNTH and args.spec:
        models_data.synth_spec = _load_synth_spec(args.spec, args.seed)
    elif run_type is Runs.TRAIN and args.resume:
        models_data.resume_path = args.resume
    elif run_type is Runs.EVAL:
        models_data.checkpoint_path = args.checkpoint
        if args.manifest:
            models_data.test_manifest = args.manifest
    elif run_type is Runs.PSEUDO_LABEL:
        models_data.checkpoint_path = args.checkpoint
        if args.manifest:
            models_data.external_manifest = args.manifest
    elif run_type is Runs.DIAGNOSE:
        models_data.run_dir = args.run_dir

    if not args.out:
        if run_type is Runs.DIAGNOSE:
            models_data.output_dir = os.path.join(args.run_dir, "diagnostics")
        elif run_type in DEFAULT_SUBDIRS:
            models_data.output_dir = os.path.join(models_data.output_dir, DEFAULT_SUBDIRS[run_type])
    return models_data


def main(argv: Optional[List[str]] = None) -> int:
    """
    Runs one command and returns its exit code: 0 on success, 1 for usage, configuration
    or missing-input errors, 2 for failures while running.
    """
    try:
        args = build_parser().parse_args(argv)
        models_data = build_models_data(args)
    except (InvalidConfig, FileNotFoundError, yaml.YAMLError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        message = ModelsFactory(models_data, ModelsResults()).run(Runs(args.command))
    except (InvalidConfig, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # pylint: disable=broad-except
        logger.exception("Command %s failed.", args.command)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE

    print(message)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
