from cli_ui import debug as verbose

from muondemur.analytic.shift import dq_shift_curve
from muondemur.configuration.schema import ExperimentConfig
from muondemur.output import ResultWriter
from muondemur.workflows.abstract_workflow import AbstractWorkflow
from muondemur.workflows.simulation import drive_setup


class ShiftCurveWorkflow(AbstractWorkflow):
    def __init__(self, workers: int = 1, config_dir: str = "."):
        super().__init__("shift-curve", workers, config_dir)

    def _run(self, experiment: str, config: ExperimentConfig, writer: ResultWriter):
        setup = drive_setup(config)
        if setup.nu_uw <= 0:
            raise ValueError("A shift curve needs a drive frequency")
        B1_list = config.analysis.B1_list_mT or [setup.B1]

        points = dq_shift_curve(setup.sys, setup.nu_uw, B1_list)
        for point in points:
            verbose(f"B1 = {point.B1} mT: nu_rabi {point.nu_rabi:.4f} MHz, shift {point.shift:.4f} MHz")
        writer.write_table("shift_curve", [point.as_row() for point in points])
