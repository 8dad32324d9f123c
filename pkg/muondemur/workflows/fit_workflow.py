import math
from typing import Dict

import numpy as np
from cli_ui import debug as verbose
from cli_ui import warning

from muondemur.configuration.schema import AnalysisConfig, ExperimentConfig
from muondemur.dynamics.histograms import DecayHistograms
from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.fitkit.asymmetry import asymmetry_from_histograms
from muondemur.fitkit.fit import fit_model, model_trace, profile_interval
from muondemur.fitkit.models import Component, Damping, Kind, ModelSpec
from muondemur.fitkit.rabi import two_zone_rabi_fit
from muondemur.output import ResultWriter, read_table
from muondemur.spectra.fourier import fft_spectrum, find_peaks
from muondemur.workflows.abstract_workflow import AbstractWorkflow

DEFAULT_RATE_PER_US = 1.0
DEFAULT_LIFETIME_NS = 1000.0


class FitWorkflow(AbstractWorkflow):
    """
    Fits the analysis model to a measured or synthesized trace, read from
    analysis.input_csv with columns t_ns, A, sigma or t_ns, N_F, N_B.
    """

    def __init__(self, workers: int = 1, config_dir: str = "."):
        super().__init__("fit", workers, config_dir)

    def _run(self, experiment: str, config: ExperimentConfig, writer: ResultWriter):
        analysis = config.analysis
        if analysis.input_csv is None:
            raise ValueError("A fit needs analysis.input_csv")
        trace = self.load_trace(analysis.input_csv, analysis.alpha)
        if analysis.fit_window_ns is not None:
            trace = trace.window(*analysis.fit_window_ns)
        verbose(f"Fitting {len(trace)} points from {analysis.input_csv}")

        model = build_model(analysis)
        init = default_init(trace, model)
        for name, (low, high) in analysis.bounds.items():
            if name in init:
                init[name] = min(max(init[name], low), high)
        init.update(analysis.init)

        if analysis.two_zone_t_p_ns is not None:
            self._two_zone(config, trace, model, init, writer)
            return

        report = fit_model(
            trace,
            model,
            init,
            analysis.bounds,
            analysis.fixed,
            multistart=analysis.multistart,
            seed=config.seed,
            backend=analysis.backend,
        )
        if not report.converged:
            warning(f"Fit did not converge: {', '.join(report.flags) or 'no flags'}")

        parameters = {}
        for name in model.parameter_names:
            entry = {"value": report.value(name), "error": report.error(name)}
            if name in analysis.profile:
                lower, upper = profile_interval(trace, model, report, name, bounds=analysis.bounds)
                entry["profile_lower"] = lower
                entry["profile_upper"] = upper
            parameters[name] = entry

        writer.write_json("fit", {"parameters": parameters, "report": report.as_dict()})
        self._residuals(trace, model_trace(model, report.params, trace.times), writer)

    def _two_zone(self, config, trace, model, init, writer):
        analysis = config.analysis
        t_p = analysis.two_zone_t_p_ns
        before = ModelSpec((Component("baseline", Kind.CONSTANT),))
        init.setdefault("baseline.A", trace.mean_in(trace.times[0], t_p)[0])
        result = two_zone_rabi_fit(
            trace,
            t_p,
            before,
            model,
            init,
            analysis.bounds,
            multistart=analysis.multistart,
            seed=config.seed,
        )
        if result.flags:
            verbose(f"Two-zone fit flags: {', '.join(result.flags)}")
        writer.write_json("two_zone_fit", result.as_dict())

    def load_trace(self, path: str, alpha: float) -> AsymmetryTrace:
        columns = read_table(self.resolve(path))
        if "t_ns" not in columns:
            raise ValueError(f"{path} has no t_ns column")
        times = columns["t_ns"]
        if "N_F" in columns and "N_B" in columns:
            histograms = DecayHistograms(
                times=times,
                forward=columns["N_F"],
                backward=columns["N_B"],
                alpha=alpha,
                expected_forward=columns["N_F"],
                expected_backward=columns["N_B"],
            )
            return asymmetry_from_histograms(histograms)
        if "A" in columns and "sigma" in columns:
            return AsymmetryTrace(times, columns["A"], columns["sigma"])
        raise ValueError(f"{path} needs columns A and sigma, or N_F and N_B")

    @staticmethod
    def _residuals(trace, fitted, writer):
        writer.write_columns(
            "fit_residuals",
            {
                "t_ns": trace.times,
                "A": trace.values,
                "sigma": trace.sigma,
                "model": fitted.values,
                "normalized_residual": (trace.values - fitted.values) / trace.sigma,
            },
        )


def build_model(analysis: AnalysisConfig) -> ModelSpec:
    model = ModelSpec.single(*analysis.model, damping=analysis.damping)
    if analysis.shared:
        model = ModelSpec(model.components, analysis.shared)
    return model


def default_init(trace: AsymmetryTrace, model: ModelSpec) -> Dict[str, float]:
    """
    Starting values from the data: oscillation frequencies from the strongest spectral
    peaks, amplitudes from the spread of the values, the constant from their mean.
    """
    cosines = [component for component in model.components if component.kind is Kind.DAMPED_COSINE]
    peaks = []
    if cosines and len(trace) >= 4 and trace.is_uniform():
        peaks = find_peaks(fft_spectrum(trace), count=len(cosines))
    amplitude = 0.5 * float(np.ptp(trace.values))

    init = {}
    for component in model.components:
        prefix = component.name
        if component.kind is Kind.CONSTANT:
            init[f"{prefix}.A"] = float(np.mean(trace.values))
            continue
        if component.kind is Kind.DAMPED_COSINE:
            peak = peaks[cosines.index(component)] if cosines.index(component) < len(peaks) else None
            init[f"{prefix}.A"] = peak.amplitude if peak else amplitude
            init[f"{prefix}.nu"] = peak.nu if peak else 1.0
            init[f"{prefix}.phi"] = 0.0
        else:
            init[f"{prefix}.A"] = amplitude
        if component.damping is Damping.LIFETIME:
            init[f"{prefix}.tau"] = DEFAULT_LIFETIME_NS
        else:
            init[f"{prefix}.lam"] = DEFAULT_RATE_PER_US
    return {name: value for name, value in init.items() if math.isfinite(value)}
