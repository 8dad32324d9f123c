from cli_ui import warning

from muondemur.configuration.schema import ExperimentConfig
from muondemur.output import ResultWriter
from muondemur.spectra.maps import narrowing_fwhm_map, rabi_damping_vs_drive
from muondemur.workflows.abstract_workflow import AbstractWorkflow
from muondemur.workflows.simulation import drive_setup


class NarrowingWorkflow(AbstractWorkflow):
    """
    Narrowing of an inhomogeneous electron line by the drive: the FWHM map of the
    nu_eff distribution, and Rabi damping for increasing B1 under the ensemble line.
    """

    def __init__(self, workers: int = 1, config_dir: str = "."):
        super().__init__("narrowing", workers, config_dir)

    def _run(self, experiment: str, config: ExperimentConfig, writer: ResultWriter):
        analysis = config.analysis
        did_something = False

        if analysis.nu1_means_MHz and analysis.Omega_means_MHz:
            fwhm_map = narrowing_fwhm_map(
                analysis.nu1_means_MHz,
                analysis.Omega_means_MHz,
                analysis.nu1_fwhm_MHz,
                analysis.Omega_fwhm_MHz,
            )
            writer.write_table("narrowing_map", fwhm_map.as_rows())
            did_something = True

        if analysis.B1_list_mT and config.ensemble.line_fwhm_MHz > 0:
            setup = drive_setup(config)
            points = rabi_damping_vs_drive(
                setup.sys,
                setup.nu_uw,
                analysis.B1_list_mT,
                config.ensemble.line_fwhm_MHz,
                t_end=config.drive.t_end_ns,
                dt=config.drive.dt_ns,
                n_points=config.ensemble.n_points,
                workers=self.workers,
            )
            writer.write_table("rabi_damping", [point.as_row() for point in points])
            dampings = [point.damping for point in points]
            if any(later >= earlier for earlier, later in zip(dampings, dampings[1:])):
                warning("Rabi damping does not decrease with every drive step")
            did_something = True

        if not did_something:
            raise ValueError(
                "Narrowing needs nu1_means_MHz with Omega_means_MHz, or B1_list_mT with ensemble.line_fwhm_MHz"
            )
