"""Polynomial-chaos uncertainty quantification for CC-CV fast charging."""
from .cccv import Protocol, SimResult, SolverOptions, simulate_cccv
from .cell import CellModel, CellParameters, nominal_cell
from .inputs import (SCREENED_REFERENCE, ParameterSpace, SampleMatrix, build_reference_space,
                     restrict, sample_standard)
from .orthopoly import BasisSet, design_matrix
from .pce import PceModel, fit_least_squares, moments, sobol_total, surrogate_quantiles
from .pipeline import (CampaignConfig, CampaignResult, compare_budget, run_campaign, run_mc_baseline,
                       screen_parameters, tune_protocol, two_stage, violation_probability)

__version__ = "0.1.0"
