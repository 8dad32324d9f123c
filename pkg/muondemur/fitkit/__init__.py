from muondemur.fitkit.asymmetry import asymmetry_from_histograms, rebin
from muondemur.fitkit.calibration import CoverageStudy, coverage_study
from muondemur.fitkit.chi2 import Chi2Map, DemurDatum, chi2_grid, demur_objective
from muondemur.fitkit.constellation import constellation_fit
from muondemur.fitkit.fit import FitFailedException, FitReport, fit_model, profile_interval
from muondemur.fitkit.models import Component, ModelSpec, Zone, damped_cosine_model
from muondemur.fitkit.rabi import TwoZoneFit, two_zone_rabi_fit
from muondemur.fitkit.ramsey import RamseyFringes, RamseyShot, fit_ramsey_fringes, ramsey_extract
