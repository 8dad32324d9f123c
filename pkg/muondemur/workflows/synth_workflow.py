import math

from cli_ui import debug as verbose
from cli_ui import warning

from muondemur.configuration.schema import ExperimentConfig
from muondemur.dynamics.histograms import synth_decay_histograms
from muondemur.dynamics.propagate import spectral_lines
from muondemur.output import ResultWriter
from muondemur.workflows.abstract_workflow import AbstractWorkflow
from muondemur.workflows.simulation import drive_setup, is_ensemble, simulate_trace


class SynthWorkflow(AbstractWorkflow):
    """
    Poisson-sampled forward and backward histograms of the simulated polarization,
    with the truth they were drawn from.
    """

    def __init__(self, workers: int = 1, config_dir: str = "."):
        super().__init__("synth", workers, config_dir)

    def _run(self, experiment: str, config: ExperimentConfig, writer: ResultWriter):
        analysis = config.analysis
        setup = drive_setup(config)
        trace = simulate_trace(config, setup, workers=self.workers)

        histograms = synth_decay_histograms(
            trace,
            analysis.n_muons,
            alpha=analysis.alpha,
            A0_max=analysis.A0_max,
            f_dia=analysis.f_dia,
            B0=setup.B0,
            geometry=config.drive.geometry,
            seed=config.seed,
        )
        if histograms.clipped:
            warning(f"{histograms.clipped} negative expected counts clipped to 0")
        verbose(f"{int(histograms.forward.sum() + histograms.backward.sum())} positrons sampled")

        writer.write_columns("histograms", histograms.as_columns())
        writer.write_columns("polarization", {"t_ns": trace.times, "P": trace.values})

        truth = {
            "n_muons": analysis.n_muons,
            "alpha": analysis.alpha,
            "A0_max": analysis.A0_max,
            "f_dia": analysis.f_dia,
            "seed": config.seed,
            **setup.as_dict(),
        }
        if self._has_closed_form(config):
            lines = spectral_lines(
                setup.sys,
                setup.B0,
                setup.nu_uw,
                setup.nu1,
                geometry=config.drive.geometry,
                phase=math.radians(config.drive.phase_deg),
            )
            # asymmetry units: the polarization scaled by A0_max
            truth["constant"] = analysis.A0_max * lines.constant
            truth["lines"] = [
                {"nu_MHz": line.nu, "amplitude": analysis.A0_max * line.amplitude, "phase": line.phase}
                for line in lines.dominant(count=len(lines.lines))
            ]
        writer.write_json("truth", truth)

    @staticmethod
    def _has_closed_form(config: ExperimentConfig) -> bool:
        """A constant drive from t = 0 without relaxation or ensemble has exact spectral lines."""
        sequence = config.sequence
        return (
            config.drive.frame == "rotating"
            and sequence.segments is None
            and (sequence.template or "rabi") in ("rabi", "demur_cw")
            and sequence.t_p_ns == 0
            and sequence.ramp_ns == 0
            and config.relaxation.build() is None
            and not is_ensemble(config)
        )
