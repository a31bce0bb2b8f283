"""Distributionally robust regret-optimal control of linear systems
under mean and second-moment ambiguity."""

from .lifting import (LtvSystem, LiftedSystem, AffinePolicy, build_lifted,
                      causal_mask, affine_policy, regret_quadratic,
                      to_state_feedback, rollout)
from .ambiguity import (AmbiguitySet, DisturbanceModel, empirical_moments,
                        sample_ar1, true_moments, worst_case_mean,
                        worst_case_covariance, RNG_ALGORITHM)
from .projections import (SchattenBall, DualIterate, project_lp_ball,
                          project_schatten, project_dual_pair)
from .inner_qp import (InnerProblem, InnerSolution, solve_inner,
                       controller_saa, controller_opt_causal)
from .dual_solver import (SolverConfig, SolveReport, solve, primal_value,
                          dual_value, adaptive_step)
from .evaluate import (EvalResult, expected_cost, expected_regret,
                       worst_case_regret_ball, monte_carlo,
                       evaluate_closed_form)
from .sdp_export import SdpModel, build_sdp, export_sdp, certify_solution

__version__ = "0.1.0"
