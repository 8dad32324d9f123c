import math
from functools import partial
from logging import debug
from typing import List, Optional, Tuple

import numpy as np
from cli_ui import debug as verbose
from cli_ui import warning
from joblib import Parallel, delayed

from muondemur.analytic.tilted import crossing_fields, demur_sweep
from muondemur.configuration.schema import ExperimentConfig
from muondemur.dynamics.propagate import liouvillian_modes
from muondemur.fitkit.chi2 import DemurDatum, DemurObjective, chi2_grid
from muondemur.output import ResultWriter, read_table
from muondemur.spectra.fourier import fft_spectrum, find_peaks
from muondemur.workflows.abstract_workflow import AbstractWorkflow
from muondemur.workflows.simulation import DriveSetup, drive_setup, run_propagation

# analytic and numeric frequencies agree within max(tolerance, one FFT bin)
AGREEMENT_MHZ = 0.1

# spectral peaks searched per field for the two driven muon lines
NUMERIC_PEAKS = 6


class DemurWorkflow(AbstractWorkflow):
    """
    Driven muon frequencies along the field block: tilted-frame prediction, and
    optionally FFT peaks of the propagated TF signal, mode damping rates and a χ² map
    of (g_e, B1) against measured or synthetic frequencies.
    """

    def __init__(self, workers: int = 1, config_dir: str = "."):
        super().__init__("demur", workers, config_dir)

    def _run(self, experiment: str, config: ExperimentConfig, writer: ResultWriter):
        analysis = config.analysis
        fields = config.field.values()
        setup = drive_setup(config)
        if setup.nu_uw <= 0:
            raise ValueError("DEMUR needs a drive frequency (drive.nu_uw_MHz or drive.transition)")

        points = demur_sweep(
            setup.sys, fields, setup.nu_uw, setup.nu1, analysis.exclusion_mT, analysis.follow_crossings
        )
        rows = [point.as_row() for point in points]
        flagged = sum(1 for point in points if point.near_discontinuity)
        verbose(f"{len(points)} DEMUR points, {flagged} near a discontinuity")

        if len(fields) > 1:
            crossings = crossing_fields(setup.sys, setup.nu_uw, setup.nu1, min(fields), max(fields))
            writer.write_json("crossings", {"fields_mT": crossings, **setup.as_dict()})

        if analysis.numeric:
            self._numeric(config, setup, fields, points, rows)
        if analysis.modes:
            self._damping(config, setup, fields, points, rows)
        writer.write_table("demur", rows)

        if analysis.chi2 is not None:
            self._chi2(config, setup, fields, writer)

    def _numeric(self, config, setup, fields, points, rows):
        analysis = config.analysis
        band = analysis.band_MHz or (1.0, 500.0 / config.drive.dt_ns)
        spectrum_of = partial(_numeric_peaks, config=config, setup=setup, band=band)
        if self.workers > 1:
            results = Parallel(n_jobs=self.workers)(delayed(spectrum_of)(B0) for B0 in fields)
        else:
            results = [spectrum_of(B0) for B0 in fields]

        agreeing = 0
        for point, row, (peaks, bin_width) in zip(points, rows, results):
            tolerance = max(AGREEMENT_MHZ, bin_width)
            nu12 = _closest(peaks, point.nu12_tr)
            nu34 = _closest(peaks, point.nu34_tr)
            agree = (
                nu12 is not None
                and nu34 is not None
                and abs(nu12 - point.nu12_tr) <= tolerance
                and abs(nu34 - point.nu34_tr) <= tolerance
            )
            row["nu12_numeric_MHz"] = math.nan if nu12 is None else nu12
            row["nu34_numeric_MHz"] = math.nan if nu34 is None else nu34
            row["bin_width_MHz"] = bin_width
            row["agree"] = agree
            if agree and not point.near_discontinuity:
                agreeing += 1

        unflagged = sum(1 for point in points if not point.near_discontinuity)
        if unflagged and agreeing < unflagged:
            warning(f"Analytic and numeric frequencies agree at {agreeing} of {unflagged} unflagged fields")

    def _damping(self, config, setup, fields, points, rows):
        relax = config.relaxation.build()
        if relax is None:
            warning("Mode damping without a relaxation block is zero everywhere")
        for B0, point, row in zip(fields, points, rows):
            modes = liouvillian_modes(
                setup.sys,
                B0,
                setup.nu_uw,
                setup.nu1,
                relax,
                geometry=config.drive.geometry,
                phase=math.radians(config.drive.phase_deg),
            )
            row["lambda12_per_us"] = _closest_rate(modes, point.nu12_tr)
            row["lambda34_per_us"] = _closest_rate(modes, point.nu34_tr)

    def _chi2(self, config, setup, fields, writer):
        chi2 = config.analysis.chi2
        if chi2.data_csv is not None:
            data = self._load_data(chi2.data_csv)
            reference = (
                chi2.truth_g_e if chi2.truth_g_e is not None else float(np.mean(chi2.g_e_range)),
                chi2.truth_B1_mT if chi2.truth_B1_mT is not None else float(np.mean(chi2.B1_range_mT)),
            )
        else:
            data = synthetic_demur_data(
                setup,
                fields,
                chi2.truth_g_e,
                chi2.truth_B1_mT,
                chi2.noise_MHz,
                config.seed,
                config.analysis.follow_crossings,
            )
            reference = (chi2.truth_g_e, chi2.truth_B1_mT)
            writer.write_table("demur_data", [datum._asdict() for datum in data])

        objective = DemurObjective(
            setup.sys,
            data,
            setup.nu_uw,
            reference,
            config.analysis.exclusion_mT,
            config.analysis.follow_crossings,
        )
        grid = chi2_grid(
            objective,
            tuple(chi2.g_e_range),
            tuple(chi2.B1_range_mT),
            n=chi2.n,
            refinements=chi2.refinements,
            zoom=chi2.zoom,
            names=("g_e", "B1_mT"),
            workers=self.workers,
        )
        writer.write_table("chi2_map", grid.as_rows())
        metadata = grid.contour_metadata()
        metadata["excluded_points"] = objective.excluded
        metadata["used_points"] = len(objective.data)
        writer.write_json("chi2", metadata)
        if not grid.converged:
            warning(f"χ² minimum on the grid edge: {', '.join(grid.flags)}")

    def _load_data(self, path: str) -> List[DemurDatum]:
        columns = read_table(self.resolve(path))
        needed = ("B0_mT", "nu12_MHz", "sigma12_MHz", "nu34_MHz", "sigma34_MHz")
        missing = [name for name in needed if name not in columns]
        if missing:
            raise ValueError(f"{path} lacks the column(s) {', '.join(missing)}")
        return [DemurDatum(*values) for values in zip(*(columns[name] for name in needed))]


def synthetic_demur_data(
    setup: DriveSetup,
    fields,
    g_e: float,
    B1: float,
    noise: float,
    seed: Optional[int],
    follow_crossings: bool = True,
) -> List[DemurDatum]:
    """Tilted-frame frequencies at the true parameters with Gaussian noise of the given width."""
    sys = setup.sys.with_g_e(g_e)
    rng = np.random.default_rng(seed)
    nu1 = sys.drive_strength(B1)
    points = demur_sweep(sys, fields, setup.nu_uw, nu1, exclusion_mT=0.0, follow_crossings=follow_crossings)
    data = []
    for point in points:
        nu12, nu34 = point.nu12_tr + rng.normal(0.0, noise), point.nu34_tr + rng.normal(0.0, noise)
        data.append(DemurDatum(point.B0, nu12, noise, nu34, noise))
    debug(f"{len(data)} synthetic DEMUR points at g_e = {g_e}, B1 = {B1} mT")
    return data


def _numeric_peaks(B0, config, setup, band) -> Tuple[List[float], float]:
    local = DriveSetup(setup.sys, float(B0), setup.nu_uw, setup.B1)
    sequence = config.sequence.model_copy(update={"template": "demur_cw", "segments": None})
    trace = run_propagation(config, local, sequence, config.relaxation.build()).trace
    spectrum = fft_spectrum(trace, config.analysis.window, config.analysis.pad_factor)
    peaks = find_peaks(spectrum, count=NUMERIC_PEAKS, band=band)
    return [peak.nu for peak in peaks], spectrum.bin_width


def _closest(values, target) -> Optional[float]:
    if not values:
        return None
    return min(values, key=lambda value: abs(value - target))


def _closest_rate(modes, nu) -> float:
    oscillating = [mode for mode in modes if mode.nu > 0]
    if not oscillating:
        return math.nan
    return min(oscillating, key=lambda mode: abs(mode.nu - nu)).rate
