from cli_ui import debug as verbose

from muondemur.configuration.schema import ExperimentConfig
from muondemur.output import ResultWriter
from muondemur.spinsys.levels import breit_rabi_sweep
from muondemur.workflows.abstract_workflow import AbstractWorkflow


class TransitionsWorkflow(AbstractWorkflow):
    def __init__(self, workers: int = 1, config_dir: str = "."):
        super().__init__("transitions", workers, config_dir)

    def _run(self, experiment: str, config: ExperimentConfig, writer: ResultWriter):
        sys = config.system.build()
        B1 = config.drive.B1_mT

        rows = []
        for _, table in breit_rabi_sweep(sys, config.field.values()):
            for transition in table.transitions:
                row = {
                    "B0_mT": table.field_mT,
                    "i": transition.i,
                    "j": transition.j,
                    "nu_MHz": transition.nu_MHz,
                    "gamma_MHz_per_mT": transition.gamma_MHz_per_mT,
                }
                if B1:
                    row["nu_rabi_MHz"] = table.rabi_frequency(transition.i, transition.j, B1)
                rows.append(row)
        verbose(f"{len(rows)} transitions tabulated")
        writer.write_table("transitions", rows)
