import sys
from importlib import metadata
from typing import Any, Dict, List

from cli_ui import (
    message,
    info,
    info_1,
    fatal,
    reset,
    green,
    purple,
    blue,
    red,
    yellow,
    Symbol,
    Token,
)
from cli_ui import debug as verbose

from muondemur import EXIT_INVALID_INPUT, EXIT_PROCESSING_ERROR


def show_version():
    try:
        local_version = metadata.version("muondemur")
    except metadata.PackageNotFoundError:
        local_version = "(not installed)"

    magnet = Symbol("🧲", "")
    message(reset, magnet, " muondemur version:", blue, local_version, reset)


def show_header(workflow: str, requested: str, experiments: List[str]) -> List[str]:
    if requested == "ALL":
        info(f">>> Running {workflow} for ALL experiments defined in config")
        selected = list(experiments)
    else:
        selected = [name.strip() for name in requested.split(",") if name.strip()]
        missing = [name for name in selected if name not in experiments]
        if missing:
            fatal(
                f"Experiment(s) {', '.join(missing)} not defined in config!"
                f" Defined: {', '.join(experiments) or 'none'}",
                exit_code=EXIT_INVALID_INPUT,
            )

    verbose(f"experiments: {selected}")
    info_1(f"# of experiments to process: {len(selected)}")
    return selected


def show_summary(selected: List[str], successful: int, failed: Dict[int, str]):
    if len(selected) > 0:
        info_1(f"# of experiments processed successfully: {successful}")

    if len(failed) > 0:
        info_1(red, f"# of experiments failed: {len(failed)}", reset)
        for number in failed.keys():
            info_1(red, f"Failed experiment {number}: {failed[number]}", reset)
        sys.exit(EXIT_PROCESSING_ERROR)
    elif successful > 0:
        shine = Symbol("✨", "!!!")
        info_1(green, "All requested experiments processed successfully!", reset, shine)
    else:
        info_1(yellow, "Nothing to do.", reset)


def info_experiment_count(prefix, i: int, n: int, *rest: Token, **kwargs: Any) -> None:
    info_count(purple, prefix, i, n, *rest, **kwargs)


def info_count(color, prefix, i: int, n: int, *rest: Token, **kwargs: Any) -> None:
    num_digits = len(str(n))
    counter_format = "(%{}d/%d)".format(num_digits)
    counter_str = counter_format % (i, n)
    info(color, prefix, reset, counter_str, reset, *rest, **kwargs)
