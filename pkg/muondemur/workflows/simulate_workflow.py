from dataclasses import replace

import numpy as np
from cli_ui import debug as verbose
from cli_ui import warning

from muondemur.configuration.schema import ExperimentConfig
from muondemur.dynamics.propagate import liouvillian_modes
from muondemur.fitkit.ramsey import RamseyShot, detuning_sign, fit_ramsey_fringes, ramsey_extract
from muondemur.output import ResultWriter
from muondemur.spectra.fourier import dominant_frequency, fft_spectrum, find_peaks
from muondemur.spectra.studies import pulse_delay_scan, ramsey_flip_angle_scan, two_component_analysis
from muondemur.workflows.abstract_workflow import AbstractWorkflow
from muondemur.workflows.simulation import (
    drive_setup,
    is_ensemble,
    run_propagation,
    simulate_trace,
)

NOMINAL_SIGMA = 1e-3


class SimulateWorkflow(AbstractWorkflow):
    """
    Propagates the configured sequence at the middle field of the field block.

    Besides the trace it writes, when the analysis block asks for them: the spectrum
    and its peaks, the Liouvillian modes, Ramsey fringes, and the pulse-delay and
    flip-angle studies.
    """

    def __init__(self, workers: int = 1, config_dir: str = "."):
        super().__init__("simulate", workers, config_dir)

    def _run(self, experiment: str, config: ExperimentConfig, writer: ResultWriter):
        setup = drive_setup(config)
        analysis = config.analysis
        writer.write_json("drive", setup.as_dict())

        if analysis.ramsey_taus_ns:
            self._ramsey(config, setup, writer)
            return

        if is_ensemble(config):
            trace = simulate_trace(config, setup, workers=self.workers)
            columns = {"t_ns": trace.times, "P": trace.values}
        else:
            result = run_propagation(config, setup, relax=config.relaxation.build())
            trace = result.trace
            columns = {"t_ns": trace.times, "P": trace.values}
            for axis, values in result.observables.items():
                columns[f"P_{axis}"] = values
            verbose(f"Rotating sense {result.sense}, frame frequency {result.nu_uw:.6f} MHz")
        writer.write_columns("trace", columns)

        if analysis.band_MHz is not None:
            self._spectrum(config, trace, writer)
        if analysis.modes:
            self._modes(config, setup, writer)
        if analysis.t_p_list_ns:
            self._pulse_delay(config, setup, writer)
        if analysis.pulse_list_ns:
            self._flip_angle(config, setup, writer)

    def _spectrum(self, config, trace, writer):
        analysis = config.analysis
        spectrum = fft_spectrum(trace, analysis.window, analysis.pad_factor)
        writer.write_columns("spectrum", spectrum.as_columns())

        peaks = find_peaks(spectrum, count=analysis.components, band=analysis.band_MHz)
        summary = {
            "bin_width_MHz": spectrum.bin_width,
            "peaks": [peak._asdict() for peak in peaks],
        }
        if analysis.components == 2 and len(peaks) == 2:
            summary["two_components"] = two_component_analysis(
                trace, analysis.band_MHz, analysis.window, analysis.pad_factor
            ).as_dict()
        elif len(peaks) < analysis.components:
            warning(f"Only {len(peaks)} of {analysis.components} spectral peaks found")
        writer.write_json("peaks", summary)

    def _modes(self, config, setup, writer):
        modes = liouvillian_modes(
            setup.sys,
            setup.B0,
            setup.nu_uw,
            setup.nu1,
            config.relaxation.build(),
            geometry=config.drive.geometry,
            phase=np.radians(config.drive.phase_deg),
        )
        rows = [
            {"nu_MHz": mode.nu, "rate_per_us": mode.rate, "amplitude": mode.amplitude, "phase": mode.phase}
            for mode in modes
        ]
        writer.write_table("modes", rows)

    def _pulse_delay(self, config, setup, writer):
        drive = config.drive
        points = pulse_delay_scan(
            setup.sys,
            setup.B0,
            setup.nu_uw,
            setup.B1,
            config.analysis.t_p_list_ns,
            t_end=drive.t_end_ns,
            dt=drive.dt_ns,
            geometry=drive.geometry,
            band=config.analysis.band_MHz,
        )
        writer.write_table("pulse_delay", [point.as_row() for point in points])

    def _flip_angle(self, config, setup, writer):
        analysis = config.analysis
        if not analysis.detunings_MHz:
            raise ValueError("The flip-angle study needs analysis.detunings_MHz")
        tau_grid = np.arange(0.0, analysis.tau_max_ns + 1e-9, analysis.tau_step_ns)
        points = ramsey_flip_angle_scan(
            setup.sys,
            setup.B0,
            setup.nu_uw,
            setup.B1,
            analysis.pulse_list_ns,
            analysis.detunings_MHz,
            tau_grid=tau_grid,
            read_ns=config.sequence.read_ns or 0.0,
            geometry=config.drive.geometry,
        )
        writer.write_table("flip_angle", [point.as_row(analysis.detunings_MHz) for point in points])

    def _ramsey(self, config, setup, writer):
        analysis = config.analysis
        if config.sequence.template != "ramsey":
            raise ValueError("Ramsey fringes need sequence.template: ramsey")
        if analysis.ramsey_window_after_ns is None or analysis.ramsey_window_before_ns is None:
            raise ValueError("Ramsey fringes need ramsey_window_after_ns and ramsey_window_before_ns")

        shots = []
        for tau in analysis.ramsey_taus_ns:
            for phase in analysis.ramsey_phases_deg:
                sequence = config.sequence.model_copy(update={"tau_ns": tau, "second_phase_deg": phase})
                trace = simulate_trace(config, setup, sequence=sequence, workers=self.workers)
                shots.append(RamseyShot(tau, phase, trace))
        verbose(f"{len(shots)} Ramsey shots simulated")

        fringes = ramsey_extract(shots, analysis.ramsey_window_after_ns, analysis.ramsey_window_before_ns)
        writer.write_columns("ramsey_fringes", fringes.as_columns())

        nu_guess = abs(config.drive.offset_MHz)
        if not nu_guess and len(fringes.tau) >= 4:
            peak = dominant_frequency(fringes.in_phase())
            nu_guess = peak.nu if peak else 0.0
        if not nu_guess:
            warning("No fringe frequency to start the Ramsey fit from, fit skipped")
            return

        # noiseless windows give zero errors; uniform weights then
        if np.any(~(fringes.sigma > 0)):
            fringes = replace(fringes, sigma=np.full(fringes.tau.shape, NOMINAL_SIGMA))
        _, report = fit_ramsey_fringes(fringes, nu_guess, damping=analysis.damping, seed=config.seed)
        writer.write_json(
            "ramsey_fit",
            {
                "fit": report.as_dict(),
                "detuning_MHz": abs(report.value("damped_cosine.nu")),
                "detuning_sign": detuning_sign(fringes),
                "dropped_points": fringes.dropped,
            },
        )
