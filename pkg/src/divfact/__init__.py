"""Approximate factor analysis by I-divergence alternating minimization."""

__version__ = "0.1.0"

from .altmin import (FitConfig, FitResult, FitTrace, Termination, alg1_step, alg2_step,
                     extract_loadings, fit, fixed_point_residual, init_model, stationarity_check)
from .divergence import i_divergence, objective
from .errors import (DefinitenessError, DimensionError, InternalConsistencyError, NumericalBreakdown,
                     SingularityError)
from .harness import SyntheticSpec, plant_model, sample_covariance
from .lifted import (LiftedCovariance, assemble_lifted, exact_fa_diagnostic, first_partial_min,
                     pythagoras_first, pythagoras_second, second_partial_min)
from .model import FactorModel, as_covariance
