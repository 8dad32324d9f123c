import argparse
import logging
import os
import sys
import textwrap
import traceback
from importlib import resources
from logging import debug
from typing import List, Optional

import cli_ui
from cli_ui import fatal, warning

from muondemur import EXIT_INVALID_INPUT, EXIT_PROCESSING_ERROR
from muondemur.configuration import Configuration
from muondemur.configuration.core import (
    ConfigFileNotFoundException,
    ConfigInvalidException,
    KeyNotFoundException,
)
from muondemur.configuration.schema import WORKFLOW_NAMES
from muondemur.output import FORMATS, OUTPUT_ROOT_VARIABLE, ResultWriter, default_output_root
from muondemur.ui import info_experiment_count, show_header, show_summary, show_version
from muondemur.workflows import Workflows

REPRODUCE = "reproduce"
SUBCOMMANDS = WORKFLOW_NAMES + (REPRODUCE,)


class Formatter(
    argparse.ArgumentDefaultsHelpFormatter,
    argparse.RawTextHelpFormatter,
):
    pass


def available_recipes() -> List[str]:
    recipes = resources.files("muondemur") / "recipes"
    return sorted(
        entry.name[: -len(".yml")] for entry in recipes.iterdir() if entry.name.endswith(".yml")
    )


def load_recipe(figure_id: str) -> str:
    recipe = resources.files("muondemur") / "recipes" / f"{figure_id}.yml"
    if not recipe.is_file():
        fatal(
            f"No recipe for {figure_id!r}. Available: {', '.join(available_recipes())}",
            exit_code=EXIT_INVALID_INPUT,
        )
    return recipe.read_text(encoding="utf-8")


class MuonDemur(object):
    def __init__(
        self,
        subcommand: Optional[str] = None,
        target: Optional[str] = None,
        config_string: Optional[str] = None,
        out_dir: Optional[str] = None,
        seed: Optional[int] = None,
        workers: int = 1,
        formats: Optional[List[str]] = None,
    ):

        if subcommand:
            # this mode is basically only for testing

            self.subcommand = subcommand
            self.target = target or "ALL"
            self.config = None
            self.config_string = config_string
            self.out_dir = out_dir
            self.seed = seed
            self.workers = workers
            self.formats = formats
            self.verbose = True
            self.debug = True
            self.just_show_version = False
            self.terminate_after_error = True

            self.configure_output(tests=True)
        else:
            # normal mode

            (
                self.subcommand,
                self.target,
                self.config,
                self.out_dir,
                self.seed,
                self.workers,
                self.formats,
                self.verbose,
                self.debug,
                self.just_show_version,
                self.terminate_after_error,
            ) = self.parse_args()
            self.config_string = None

            self.configure_output()

            show_version()
            if self.just_show_version:
                sys.exit(0)

            if not self.subcommand:
                fatal("subcommand parameter is required.", exit_code=EXIT_INVALID_INPUT)

        if self.subcommand not in SUBCOMMANDS:
            fatal(
                f"Unknown subcommand {self.subcommand!r}, expected one of {', '.join(SUBCOMMANDS)}",
                exit_code=EXIT_INVALID_INPUT,
            )
        if self.subcommand == REPRODUCE and self.target in (None, "ALL"):
            fatal(
                f"reproduce needs a figure id, one of {', '.join(available_recipes())}",
                exit_code=EXIT_INVALID_INPUT,
            )

        self.configuration = self.initialize_configuration()
        self.workflows = Workflows(self.workers, self.configuration.config_dir)

    @staticmethod
    def parse_args():

        parser = argparse.ArgumentParser(
            description=textwrap.dedent(
                f"""
            Muonium spin dynamics simulator and fitting toolkit for double electron-muon
            resonance (DEMUR) experiments, driven by experiment definitions written in YAML.

            Exits with code {EXIT_INVALID_INPUT} on invalid input errors (f.e. config file not found
            or a schema violation), and with code {EXIT_PROCESSING_ERROR} if there are numerical failures.
            """
            ),
            formatter_class=Formatter,
        )

        parser.add_argument(
            "subcommand",
            nargs="?",
            choices=SUBCOMMANDS,
            help="workflow to run for the selected experiments",
        )

        parser.add_argument(
            "target",
            nargs="?",
            default="ALL",
            help="Experiment name or comma-separated names from the config \n"
            'OR "ALL" to run for all experiments defined in the config \n'
            f"OR, for {REPRODUCE}, a figure id",
        )

        parser.add_argument(
            "-V",
            "--version",
            dest="just_show_version",
            action="store_true",
            help="show version and exit",
        )

        parser.add_argument(
            "-c", "--config", default="experiments.yml", help="config file path and filename"
        )

        parser.add_argument(
            "-o",
            "--out-dir",
            dest="out_dir",
            default=None,
            help=f"output root directory (default: ${OUTPUT_ROOT_VARIABLE} or ./results)",
        )

        parser.add_argument(
            "-s", "--seed", type=int, default=None, help="random seed, overrides the config"
        )

        parser.add_argument(
            "-w",
            "--workers",
            type=int,
            default=os.cpu_count() or 1,
            help="number of parallel workers for sweeps and maps",
        )

        parser.add_argument(
            "-f",
            "--format",
            dest="formats",
            action="append",
            choices=FORMATS,
            default=None,
            help="output format, may be repeated (default: formats from the config)",
        )

        verbosity_args = parser.add_mutually_exclusive_group()

        verbosity_args.add_argument(
            "-v", "--verbose", action="store_true", help="verbose output"
        )

        verbosity_args.add_argument(
            "-d",
            "--debug",
            action="store_true",
            help="debug output, including intermediate numerical results",
        )

        parser.add_argument(
            "-t",
            "--terminate",
            dest="terminate_after_error",
            action="store_true",
            help=f"exit with {EXIT_PROCESSING_ERROR} after the first experiment processing error."
            f" (default: process all the requested experiments and skip the failing ones."
            f" At the end, if there were any failures, exit with {EXIT_PROCESSING_ERROR}.)",
        )

        args = parser.parse_args()

        if args.workers < 1:
            parser.error("--workers must be at least 1")

        return (
            args.subcommand,
            args.target,
            args.config,
            args.out_dir,
            args.seed,
            args.workers,
            args.formats,
            args.verbose,
            args.debug,
            args.just_show_version,
            args.terminate_after_error,
        )

    def configure_output(self, tests=False):

        # normal mode - print cli_ui.* except debug as verbose
        # verbose mode - print all cli_ui.*, including debug as verbose
        # debug / tests mode - like above + (logging.)debug

        logging.basicConfig()

        if not self.verbose and not self.debug:  # normal
            cli_ui.setup()
            level = logging.FATAL
        elif self.debug or tests:
            cli_ui.setup(verbose=True)
            level = logging.DEBUG
        else:  # verbose
            cli_ui.setup(verbose=True)
            level = logging.FATAL

        logging.getLogger().setLevel(level)
        fmt = logging.Formatter("%(message)s")
        logging.getLogger().handlers[0].setFormatter(fmt)

    def initialize_configuration(self) -> Configuration:

        try:
            if self.subcommand == REPRODUCE:
                return Configuration(config_string=load_recipe(self.target))
            if self.config_string:
                return Configuration(config_string=self.config_string)
            return Configuration(config_path=self.config)
        except ConfigFileNotFoundException as e:
            fatal(
                f"Config file not found at: {e}",
                exit_code=EXIT_INVALID_INPUT,
            )
        except ConfigInvalidException as e:
            fatal(
                f"Invalid config:\n{e.underlying}",
                exit_code=EXIT_INVALID_INPUT,
            )

    def run(self):

        reproducing = self.subcommand == REPRODUCE
        experiments = show_header(
            f"{REPRODUCE} {self.target}" if reproducing else self.subcommand,
            "ALL" if reproducing else self.target,
            self.configuration.get_experiments(),
        )

        successful = 0
        failed = {}

        for number, experiment in enumerate(experiments, start=1):

            try:
                config = self.configuration.get_validated_config(experiment)
            except (ConfigInvalidException, KeyNotFoundException) as e:
                fatal(f"Invalid config:\n{e}", exit_code=EXIT_INVALID_INPUT)

            workflow_name = config.workflow if reproducing else self.subcommand
            if workflow_name is None:
                fatal(
                    f"Experiment {experiment} of recipe {self.target} names no workflow",
                    exit_code=EXIT_INVALID_INPUT,
                )
            workflow = self.workflows.get(workflow_name)

            if self.seed is not None:
                config = config.model_copy(update={"seed": self.seed})
            out_root = self.out_dir or config.output.out_dir or default_output_root()
            writer = ResultWriter(
                out_root,
                experiment,
                config.model_dump(mode="json"),
                self.formats or config.output.formats,
                config.seed,
            )

            info_experiment_count(
                "*",
                number,
                len(experiments),
                f"Processing experiment: {experiment} ({workflow_name})",
            )

            try:
                workflow.process(experiment, config, writer)
                successful += 1

            except Exception as e:

                failed[number] = experiment

                trace = traceback.format_exc()
                message = f"Error occurred while processing experiment {experiment}, exception:\n\n{e}\n\n{trace}"

                if self.terminate_after_error:
                    fatal(
                        message,
                        exit_code=EXIT_PROCESSING_ERROR,
                    )
                else:
                    warning(message)
            finally:
                debug(
                    f"* ({number}/{len(experiments)}) FINISHED Processing experiment: {experiment}"
                )

        show_summary(experiments, successful, failed)
