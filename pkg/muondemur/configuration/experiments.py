from logging import debug

from pydantic import ValidationError

from muondemur.configuration.core import (
    ConfigInvalidException,
    ConfigurationCore,
    KeyNotFoundException,
    describe_path,
)
from muondemur.configuration.schema import ExperimentConfig

COMMON = "*"


class ConfigurationExperiments(ConfigurationCore):
    def __init__(self, config_path=None, config_string=None):
        super().__init__(config_path, config_string)

    def get_experiments(self) -> list:
        """
        :return: sorted list of experiment names EXPLICITLY defined in the config
        """
        experiments = self.get("experiments", {})
        if not isinstance(experiments, dict):
            raise ConfigInvalidException(ValueError("'experiments' must be a mapping"))
        return sorted(name for name in experiments.keys() if name != COMMON)

    def get_common_config(self) -> dict:
        """
        :return: literal common configuration or empty dict if not defined
        """
        return self.get(f"experiments|{COMMON}", {})

    def get_experiment_config(self, name) -> dict:
        try:
            config = self.get(f"experiments|{name}")
        except KeyNotFoundException:
            raise KeyNotFoundException(f"Experiment {name!r} is not defined in the config")
        return dict(config or {})

    def get_effective_config_for_experiment(self, name) -> dict:
        """
        :return: merged configuration from common level, the experiment it extends and
                 the experiment itself. Merging is additive, more specific values win.
        """
        experiment_config = self.get_experiment_config(name)
        parent = experiment_config.pop("extends", None)

        parent_config = {}
        if parent is not None:
            if parent == name:
                raise ConfigInvalidException(ValueError(f"Experiment {name!r} extends itself"))
            parent_config = self.get_experiment_config(parent)
            if "extends" in parent_config:
                raise ConfigInvalidException(
                    ValueError(
                        f"Experiment {name!r} extends {parent!r}, which extends another experiment;"
                        " only one level is supported"
                    )
                )
            debug("Parent config %s: %s" % (parent, parent_config))

        common_config = self.get_common_config()
        debug("Common config: %s" % common_config)

        effective_config = self.merge_configs(common_config, parent_config, experiment_config)
        debug("Effective config for %s: %s" % (name, effective_config))
        return effective_config

    def get_validated_config(self, name) -> ExperimentConfig:
        """
        :raises ConfigInvalidException: with the key path and line of every schema violation
        """
        effective_config = self.get_effective_config_for_experiment(name)
        try:
            return ExperimentConfig.model_validate(effective_config)
        except ValidationError as e:
            problems = []
            for error in e.errors():
                location = list(error["loc"])
                line = self._line_for(name, location)
                where = f" (line {line})" if line else ""
                problems.append(
                    f"experiments|{name}|{describe_path(location)}{where}: {error['msg']}"
                )
            raise ConfigInvalidException(ValueError("\n".join(problems)))

    def _line_for(self, name, location):
        candidates = [["experiments", name] + location]
        parent = self.get(f"experiments|{name}|extends", "")
        if parent:
            candidates.append(["experiments", parent] + location)
        candidates.append(["experiments", COMMON] + location)

        best = None
        for tokens in candidates:
            line = self.line_of(tokens)
            depth = self._depth(tokens)
            if line is not None and (best is None or depth > best[0]):
                best = (depth, line)
        return best[1] if best else None

    def _depth(self, tokens) -> int:
        current = self.config
        depth = 0
        for token in tokens:
            try:
                current = current[token]
            except (KeyError, IndexError, TypeError):
                break
            depth += 1
        return depth
