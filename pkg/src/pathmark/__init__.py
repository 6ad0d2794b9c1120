"""Which-path marking and erasure in a two-slit apparatus.

Exact two-path x polarization algebra, a polarized Fresnel simulation of
the apparatus, named scenarios with bound checks, and photon sampling.
"""
__version__ = "0.1.0"

from .algebra import (DualityReport, PathBasis, PathPolState, PolBasis, apply_lens,
                      detector_statistics, duality_report, make_initial_state,
                      path_basis_change, pol_basis_change, project_polarization)
from .harness import (Scenario, cross_validate, load_catalog, run_scenario, sample_photons)
from .optics import (DetectionSummary, ExperimentConfig, PolarizedField, WireSpec, simulate)

__all__ = [
    "DetectionSummary",
    "DualityReport",
    "ExperimentConfig",
    "PathBasis",
    "PathPolState",
    "PolBasis",
    "PolarizedField",
    "Scenario",
    "WireSpec",
    "apply_lens",
    "cross_validate",
    "detector_statistics",
    "duality_report",
    "load_catalog",
    "make_initial_state",
    "path_basis_change",
    "pol_basis_change",
    "project_polarization",
    "run_scenario",
    "sample_photons",
    "simulate",
]
