import os
from abc import ABC, abstractmethod

from cli_ui import debug as verbose

from muondemur.configuration.schema import ExperimentConfig
from muondemur.output import ResultWriter


class AbstractWorkflow(ABC):
    def __init__(self, name: str, workers: int = 1, config_dir: str = "."):
        self.name = name
        self.workers = workers
        self.config_dir = config_dir

    def process(self, experiment: str, config: ExperimentConfig, writer: ResultWriter):
        verbose(f"Running {self.name} for {experiment}")
        try:
            self._run(experiment, config, writer)
        except Exception as e:
            # whatever was written so far stays on disk
            writer.mark_failed(self.name, e)
            writer.write_manifest(self.name, status="failed")
            raise
        writer.write_manifest(self.name)

    def resolve(self, path: str) -> str:
        """:return: path of a data file, relative ones taken from the config location"""
        if os.path.isabs(path):
            return path
        return os.path.join(self.config_dir, path)

    @abstractmethod
    def _run(self, experiment: str, config: ExperimentConfig, writer: ResultWriter):
        pass
