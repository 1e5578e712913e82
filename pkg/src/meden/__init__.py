"""Minimum empirical divergence estimation for moment condition models.

Point estimation via the dual of the empirical divergence projection
(empirical likelihood included), an equivariant minimum-risk correction
built from the exponential-tilt score, and a seeded Monte Carlo harness.
"""

__version__ = "0.1.0"

from .divergences import (DivergenceSpec, Interval, conjugate_derivatives,
                          conjugate_value, divergence_by_name,
                          make_power_divergence)
from .dual import (DualSolution, SolverOptions, SolverStatus, dual_objective,
                   solve_inner, solve_inner_el)
from .errors import (ConfigError, DomainError, MedenError, NonAdditiveGroup,
                     NonFiniteMoment, NonSmoothModel, SingularFisher,
                     UnknownDivergence, UnknownModel)
from .estimator import (EstimateOptions, EstimateResult, EstimateStatus,
                        estimate, initial_theta, profile_divergence)
from .models import (Group, MomentModel, as_sample, builtin_model,
                     builtin_names, check_invariance, evaluate_moments,
                     moment_matrix)
from .report import render_mse_figure, write_report
from .simulate import (DistSpec, MethodSpec, SimConfig, SimReport,
                       generate_sample, run_simulation, sim_config_from_dict)
from .umre import (TiltSolution, UmreOptions, UmreResult, fisher_empirical,
                   score_matrix, solve_tilt, umre_correct)
