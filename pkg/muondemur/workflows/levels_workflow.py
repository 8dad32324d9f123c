from logging import debug

from muondemur.configuration.schema import ExperimentConfig
from muondemur.output import ResultWriter
from muondemur.spinsys.levels import LABELS, breit_rabi_sweep
from muondemur.workflows.abstract_workflow import AbstractWorkflow


class LevelsWorkflow(AbstractWorkflow):
    def __init__(self, workers: int = 1, config_dir: str = "."):
        super().__init__("levels", workers, config_dir)

    def _run(self, experiment: str, config: ExperimentConfig, writer: ResultWriter):
        sys = config.system.build()
        fields = config.field.values()
        debug(f"Breit-Rabi sweep over {len(fields)} fields")

        rows = []
        for diagram, _ in breit_rabi_sweep(sys, fields):
            row = {"B0_mT": diagram.field_mT}
            for label in LABELS:
                row[f"E{label}_MHz"] = diagram.energy(label)
            rows.append(row)
        writer.write_table("levels", rows)
