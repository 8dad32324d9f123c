from cli_ui import debug as verbose

from muondemur.analytic.rabi import amplitude_overlay
from muondemur.configuration.schema import ExperimentConfig
from muondemur.output import ResultWriter
from muondemur.spectra.maps import rabi_map
from muondemur.spinsys.levels import transition_table
from muondemur.workflows.abstract_workflow import AbstractWorkflow


class RabiMapWorkflow(AbstractWorkflow):
    def __init__(self, workers: int = 1, config_dir: str = "."):
        super().__init__("rabi-map", workers, config_dir)

    def _run(self, experiment: str, config: ExperimentConfig, writer: ResultWriter):
        drive = config.drive
        analysis = config.analysis
        if drive.transition is None:
            raise ValueError("A Rabi map needs drive.transition")
        sys = config.system.build()
        fields = config.field.values()
        B1_list = analysis.B1_list_mT or [drive.amplitude(sys, config.field.single())]

        result = rabi_map(
            sys,
            tuple(drive.transition),
            fields,
            B1_list,
            template=config.sequence.template or "rabi",
            t_end=drive.t_end_ns,
            dt=drive.dt_ns,
            nu_uw=drive.nu_uw_MHz,
            geometry=drive.geometry,
            band=analysis.band_MHz,
            workers=self.workers,
        )
        verbose(f"Rabi map of {len(fields)} x {len(B1_list)} cells, {result.failed} without a peak")
        writer.write_table("rabi_map", result.as_rows())
        writer.write_json("rabi_map_meta", result.metadata())

        if analysis.overlay_p34 is not None:
            self._overlay(config, sys, result, writer)

    def _overlay(self, config, sys, result, writer):
        """Analytic oscillation amplitudes next to the simulated ones of the first B1 column."""
        i, j = result.transition
        offsets = [transition_table(sys, B0).nu(i, j) - result.nu_uw for B0 in result.B0]
        nu1 = transition_table(sys, config.field.single()).rabi_frequency(i, j, float(result.B1[0]))
        points = amplitude_overlay(
            result.B0, offsets, nu1, config.analysis.overlay_p34, config.analysis.overlay_p_sigma
        )
        rows = []
        for point, simulated, nu_eff in zip(points, result.amplitude[:, 0], result.nu_eff[:, 0]):
            rows.append(
                {
                    "B0_mT": point.B0,
                    "Omega_MHz": point.Omega,
                    "A_osc": point.A_osc,
                    "A_static": point.A_static,
                    "A_simulated": simulated,
                    "nu_eff_MHz": nu_eff,
                }
            )
        writer.write_table("amplitude_overlay", rows)
