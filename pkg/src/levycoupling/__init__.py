"""Simulation and certification laboratory for the ergodicity of
jump-driven SDEs: coupled-path simulation, explicit contraction
certificates, and estimators that cross-check one against the other."""

__version__ = "0.1.0"

from .measures import (LevyModel, overlap_mass, overlap_ratio, j_function,
                       half_space_overlap_floor)
from .models import DriftModel, ScenarioSpec, catalog_drift, catalog_noise
from .coupling import (SimConfig, CouplingPath, simulate_coupling,
                       simulate_marginal, run_coupling_ensemble,
                       backend_name)
from .certificates import (SigmaG, TestFunction, RateCertificate,
                           build_sigma, w1_certificate, tv_certificate,
                           strong_ergodic_certificate, verify_condition_C,
                           generator_apply, regularity_constants)
from .estimators import (DistanceCurve, RateFit, empirical_w1,
                         w1_curve_from_coupling, tv_curve_from_coupling,
                         fit_exponential_rate, ctmc_oracle)
from .scenarios import catalog_entry, catalog_names
