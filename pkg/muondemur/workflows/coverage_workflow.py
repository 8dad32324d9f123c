import numpy as np
from cli_ui import debug as verbose
from cli_ui import warning

from muondemur.configuration.schema import ExperimentConfig
from muondemur.fitkit.calibration import coverage_study
from muondemur.output import ResultWriter
from muondemur.workflows.abstract_workflow import AbstractWorkflow
from muondemur.workflows.fit_workflow import build_model

COVERAGE_RANGE = (0.58, 0.78)


class CoverageWorkflow(AbstractWorkflow):
    """
    Calibrates the fit errors: Poisson histograms are synthesized at the truth of
    analysis.coverage, each replicate is fitted with the analysis model and the
    fraction of 1σ intervals holding the truth is reported per parameter.
    """

    def __init__(self, workers: int = 1, config_dir: str = "."):
        super().__init__("coverage", workers, config_dir)

    def _run(self, experiment: str, config: ExperimentConfig, writer: ResultWriter):
        analysis = config.analysis
        if analysis.coverage is None:
            raise ValueError("A coverage study needs analysis.coverage")
        settings = analysis.coverage

        study = coverage_study(
            build_model(analysis),
            settings.truth,
            np.arange(0.0, settings.t_end_ns, settings.bin_ns),
            analysis.n_muons,
            replicates=settings.replicates,
            alpha=analysis.alpha,
            A0_max=analysis.A0_max,
            bounds=analysis.bounds,
            seed=config.seed,
            workers=self.workers,
        )
        writer.write_table("replicates", study.as_rows())
        summary = study.summary()
        writer.write_json("coverage", summary)

        verbose(f"{summary['usable']} of {summary['replicates']} replicates usable")
        low, high = COVERAGE_RANGE
        for name, fraction in summary["coverage"].items():
            if not low <= fraction <= high:
                warning(f"1σ coverage of {name} is {fraction:.3f}, outside [{low}, {high}]")
