"""Truncated explicit scheme and Monte Carlo laboratory for stochastic
delay differential equations with superlinearly growing coefficients."""

__version__ = "0.1.0"

from .brownian import BrownianLattice, brownian_value, coarsen, generate_lattice
from .conditions import (CheckReport, KhasminskiiConstants, MonotonicityConstants,
                         PolyLipschitzConstants, StrongMomentConstants,
                         check_holder_initial, check_khasminskii,
                         check_local_lipschitz, check_monotonicity,
                         check_poly_lipschitz, check_strong_khasminskii,
                         khasminskii_constants_36, maximize_on_ray,
                         monotonicity_constants_55, poly_lipschitz_constants_55,
                         strong_constants_55, zero_gap_weight)
from .experiments import (ErrorRow, ErrorTable, ExperimentPlan, GapTable,
                          RateReport, SupMomentResult, estimate_strong_errors,
                          estimate_sup_moment, fit_rate, gap_study)
from .models import (Example36Params, Example55Params, SddeModel,
                     constant_initial, example36_growth_bound,
                     example55_growth_bound, make_example_36, make_example_55,
                     make_model)
from .solvers import (DIVERGENCE_THRESHOLD, GridSpec, Trajectory,
                      continuous_process_values, simulate,
                      simulate_classical_em, step_process_value, tem_step)
from .truncation import (StepSizeError, TruncationPolicy, make_power_law_policy,
                         pi_delta, truncated_coeffs, truncation_radius)

__all__ = [name for name in dir() if not name.startswith("_")]
