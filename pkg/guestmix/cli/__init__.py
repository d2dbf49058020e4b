"""
CLI entry point for ``guestmix`` / ``gmx`` commands.
"""

from __future__ import annotations

import os
import sys
import textwrap
import traceback
from typing import List, Optional

from guestmix import __version__ as _VERSION
from guestmix._config import ENV_KEY_LOG_LEVEL, LOGS_DIR, RUN_CONFIG_FILENAME
from guestmix.cli.commands import (
    COMMANDS,
    READ_ONLY_COMMANDS,
    RunContext,
    _consume_flag,
    _consume_option,
    _consume_repeated_option,
)
from guestmix.core.config_manager import ConfigManager
from guestmix.errors import GuestmixError, UsageError
from guestmix.utils import get_logger, get_now_str
from guestmix.utils.config_utils import parse_overrides
from guestmix.utils.log_utils import attach_file_handler, detach_file_handlers, disable_console, set_console_level
from guestmix.utils.settings import ensure_settings_file, get as get_setting, load_settings

logger = get_logger(__name__)

_HELP = textwrap.dedent(
    f"""
    guestmix v{_VERSION}

    USAGE
        guestmix <command> [args] [global options]
        gmx <command> [args] [global options]

    PIPELINE
        ingest [CORPUS] [--format jsonl|csv]     Segment reviews into sentences
        filter [--lexicon FILE]                  Split sentences by gazetteer hits
        expand-vocab [--embeddings F] [--k N]    Grow the lexicon with nearest neighbours
        sample [--n N] [--ratio X]               Draw the annotation sample
        merge-annotations FILE...                Majority-vote annotator labels
        split [--data FILE]                      Stratified train/validation split
        train [--model KIND]                     Fit one classifier
        evaluate [--model KIND] [--data FILE]    Score a trained classifier
        predict [--model KIND] [--text S ...]    Label sentences
        aggregate [--window month|quarter|all]   Guest composition per business
        export-geojson [--locations FILE]        Composition as GeoJSON points

    TOOLS
        compare [--models K1,K2] [--timing]      Train and score several kinds side by side
        qualitative [--model KIND]               Run the fixed hand-written sentence suite
        kappa FILE...                            Fleiss' kappa over annotation files
        gradcheck [--seeds N] [--pretrained]     Finite-difference gradient check
        synth [--out DIR]                        Write a small synthetic corpus
        benchmark [--model KIND] [--repeat N]    Matcher throughput and model latency
        config                                   Print the effective configuration
        init [PATH] [--force]                    Write a config template

    MODEL KINDS
        dict, tfidf-svm, emb-lstm, emb-bilstm, ft-lstm, ft-bilstm

    GLOBAL OPTIONS
        --config FILE       Run config (default: ./{RUN_CONFIG_FILENAME} when present)
        --set KEY=VALUE     Override one config value, e.g. --set train.lr=0.01
        --seed N            Run seed
        --workdir DIR       Work directory for artifacts
        --strict            Fail on the first malformed input record
        --json              Machine-readable output where supported
        --verbose | --quiet Console log level DEBUG | WARNING

    EXIT CODES
        0 success, 1 usage error, 2 data error

    EXAMPLES
        guestmix synth --out demo
        guestmix ingest demo/reviews.jsonl --workdir work
        guestmix filter --workdir work
        guestmix train --model tfidf-svm --data demo/labeled.jsonl
        guestmix predict --model dict --text "Viele Russen im Hotel."
        guestmix compare --models dict,tfidf-svm,emb-bilstm --json
    """.strip()
)


def _print_help() -> int:
    print(_HELP)
    return 0


def _print_version() -> int:
    print(f"guestmix {_VERSION}")
    return 0


def _build_context(args: list[str]) -> tuple[RunContext, list[str], Optional[str]]:
    """Strip the global options from ``args`` and resolve the run config."""
    config_path, args = _consume_option(args, "--config", "-c")
    seed, args = _consume_option(args, "--seed")
    workdir, args = _consume_option(args, "--workdir", "-w")
    sets, args = _consume_repeated_option(args, "--set")
    strict, args = _consume_flag(args, "--strict")
    json_output, args = _consume_flag(args, "--json")
    verbose, args = _consume_flag(args, "--verbose")
    quiet, args = _consume_flag(args, "--quiet", "-q")

    if verbose and quiet:
        raise UsageError("--verbose and --quiet are mutually exclusive")
    level = "DEBUG" if verbose else "WARNING" if quiet or json_output else None
    if level:
        set_console_level(level)

    if config_path is None and os.path.isfile(RUN_CONFIG_FILENAME):
        config_path = RUN_CONFIG_FILENAME
    if seed is not None:
        try:
            seed = int(seed)
        except ValueError:
            raise UsageError(f"invalid seed: {seed}") from None

    config = ConfigManager().resolve(
        config_path,
        parse_overrides(sets),
        seed=seed,
        strict=True if strict else None,
        workdir=os.path.abspath(workdir) if workdir else None,
    )
    return RunContext(config, config_path, json_output), args, level


def _start_logging(ctx: RunContext, command: str, console_level: Optional[str]) -> None:
    ensure_settings_file(ctx.workdir)
    load_settings(ctx.workdir)
    enabled = bool(get_setting("log_enabled", True))
    if console_level is None:
        if enabled:
            set_console_level(os.environ.get(ENV_KEY_LOG_LEVEL) or str(get_setting("log_level", "INFO")))
        else:
            disable_console()
    if enabled and get_setting("log_to_file", True):
        attach_file_handler(os.path.join(ctx.workdir, LOGS_DIR, f"{command}_{get_now_str()}.log"))


def main(argv: Optional[List[str]] = None) -> int:
    """Main ``guestmix`` console entry point; returns the process exit code."""

    args = list(sys.argv[1:] if argv is None else argv)
    if not args or args[0] in ("help", "-h", "--help"):
        return _print_help()
    if args[0] in ("version", "-V", "--version"):
        return _print_version()

    command = args[0].lower()
    handler = COMMANDS.get(command)
    if handler is None:
        print(f"Unknown command: '{args[0]}'", file=sys.stderr)
        print("Run 'guestmix help' for available commands.", file=sys.stderr)
        return UsageError.exit_code
    if any(arg in ("-h", "--help") for arg in args[1:]):
        print(f"usage: guestmix {handler.__doc__ or command}")
        return 0

    try:
        ctx, rest, console_level = _build_context(args[1:])
        if command not in READ_ONLY_COMMANDS:
            os.makedirs(ctx.workdir, exist_ok=True)
            _start_logging(ctx, command, console_level)
        logger.debug("guestmix %s: workdir=%s seed=%d", command, ctx.workdir, ctx.seed)
        handler(ctx, rest)
        return 0
    except GuestmixError as exc:
        logger.debug("%s", traceback.format_exc())
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130
    finally:
        detach_file_handlers()


if __name__ == "__main__":
    sys.exit(main())
