from typing import Dict, List

from muondemur.workflows.abstract_workflow import AbstractWorkflow
from muondemur.workflows.coverage_workflow import CoverageWorkflow
from muondemur.workflows.demur_workflow import DemurWorkflow
from muondemur.workflows.fit_workflow import FitWorkflow
from muondemur.workflows.levels_workflow import LevelsWorkflow
from muondemur.workflows.narrowing_workflow import NarrowingWorkflow
from muondemur.workflows.rabi_map_workflow import RabiMapWorkflow
from muondemur.workflows.shift_curve_workflow import ShiftCurveWorkflow
from muondemur.workflows.simulate_workflow import SimulateWorkflow
from muondemur.workflows.synth_workflow import SynthWorkflow
from muondemur.workflows.transitions_workflow import TransitionsWorkflow


class Workflows(object):
    def __init__(self, workers: int = 1, config_dir: str = "."):
        self.workflows: List[AbstractWorkflow] = [
            LevelsWorkflow(workers, config_dir),
            TransitionsWorkflow(workers, config_dir),
            SimulateWorkflow(workers, config_dir),
            DemurWorkflow(workers, config_dir),
            RabiMapWorkflow(workers, config_dir),
            ShiftCurveWorkflow(workers, config_dir),
            NarrowingWorkflow(workers, config_dir),
            FitWorkflow(workers, config_dir),
            SynthWorkflow(workers, config_dir),
            CoverageWorkflow(workers, config_dir),
        ]
        self.by_name: Dict[str, AbstractWorkflow] = {
            workflow.name: workflow for workflow in self.workflows
        }

    def get_workflow_names(self) -> List[str]:
        return [workflow.name for workflow in self.workflows]

    def get(self, name: str) -> AbstractWorkflow:
        try:
            return self.by_name[name]
        except KeyError:
            raise KeyError(
                f"Unknown workflow {name!r}, expected one of {', '.join(self.get_workflow_names())}"
            )
