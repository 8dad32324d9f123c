import os
import textwrap
from logging import debug
from typing import List, Optional, Sequence

import yaml
from cli_ui import debug as verbose
from cli_ui import fatal
from mergedeep import merge

from muondemur import EXIT_INVALID_INPUT

CONFIG_VERSION = 1


class ConfigurationCore:

    config = None
    config_dir = None
    nodes = None

    def __init__(self, config_path=None, config_string=None):

        if config_path and config_string:
            fatal(
                "Please initialize with either config_path or config_string, not both.",
                exit_code=EXIT_INVALID_INPUT,
            )

        try:
            if config_string:
                verbose("Reading config from provided string.")
                text = textwrap.dedent(config_string)
                self.config_dir = "."
            else:
                if not config_path:
                    config_path = os.path.join(os.getcwd(), "experiments.yml")

                verbose(f"Reading config from file: {config_path}")

                with open(config_path, "r") as ymlfile:
                    text = ymlfile.read()

                # relative paths of data files are resolved against the config location
                self.config_dir = os.path.dirname(os.path.abspath(config_path))

            # JSON documents are valid YAML too
            self.config = yaml.safe_load(text)
            self.nodes = yaml.compose(text)
            debug("Config parsed successfully as YAML.")

            if not isinstance(self.config, dict):
                raise ConfigInvalidException(
                    ValueError("The config must be a mapping with an 'experiments' key")
                )

            version = self.config.get("config_version", CONFIG_VERSION)
            if version != CONFIG_VERSION:
                raise ConfigInvalidException(
                    ValueError(
                        f"This version of muondemur reads 'config_version: {CONFIG_VERSION}',"
                        f" the config declares {version!r}"
                    )
                )

        except (FileNotFoundError, IOError):
            raise ConfigFileNotFoundException(config_path)

        except ConfigInvalidException:
            raise

        except Exception as e:
            raise ConfigInvalidException(e)

    def get(self, path, default=None):
        """
        :param path: "path" to an element of the YAML file, for example for:

        experiments:
          fig2:
            drive:
              nu_uw_MHz: 2300.0

        ...the drive frequency is get("experiments|fig2|drive|nu_uw_MHz").

        :param default: the value to return if the key is not found. The default 'None' means that an exception
                        will be raised in such case.
        :return: element from YAML file (dict, array, number...)
        """
        tokens = path.split("|")
        current = self.config

        try:
            for token in tokens:
                current = current[token]
        except (KeyError, IndexError, TypeError):
            if default is not None:
                return default
            else:
                raise KeyNotFoundException(path)

        return current

    def line_of(self, tokens: Sequence) -> Optional[int]:
        """
        :return: 1-based line in the config text of the deepest existing element on the
                 given key path, None if even the first key is missing
        """
        node = self.nodes
        line = None
        for token in tokens:
            if isinstance(node, yaml.MappingNode):
                matches = [value for key, value in node.value if key.value == str(token)]
                if not matches:
                    break
                key_node = [key for key, value in node.value if key.value == str(token)][0]
                line = key_node.start_mark.line + 1
                node = matches[0]
            elif isinstance(node, yaml.SequenceNode) and isinstance(token, int) and token < len(node.value):
                node = node.value[token]
                line = node.start_mark.line + 1
            else:
                break
        return line

    @staticmethod
    def merge_configs(*configs) -> dict:
        """
        :return: merge of configs from the most general to the most specific one.
                 More specific config values take precedence over more general ones.
        """
        return dict(merge({}, *configs))


def describe_path(tokens: List) -> str:
    return "|".join(str(token) for token in tokens)


class ConfigFileNotFoundException(Exception):
    pass


class ConfigInvalidException(Exception):
    def __init__(self, underlying: Exception):
        self.underlying = underlying
        super().__init__(str(underlying))


class KeyNotFoundException(Exception):
    pass
