"""Universal gradient methods driven by a global curvature bound."""
from .curvature import (GaugeConfig, HoelderModel, QuadraticModel, SumModel, TableModel,
                        build_model, delta_plus_and_lip, example_1_1_model, gamma_hat,
                        gamma_simple, invert_mu, invert_sigma, mu_hat, sigma_hat,
                        sum_class_radius)
from .empirical import EmpiricalCurve, estimate_gcb
from .harness import (BoundReport, direct_bound_fast, direct_bound_simple, run_benchmark,
                      sufficient_iterations, verify_trace)
from .mappings import bregman_mapping, gradient_mapping, solve_composite_prox
from .problems import (CompositeProblem, ProxGeometry, PsiSpec, builtin_problem, evaluate,
                       load_problem, problem_from_spec)
from .solvers import (EstimateFunction, dgm_solve, ggm_solve, pgm_solve, solve,
                      ufgm_solve, ufgm_step_coefficient)
from .trace import IterationRecord, RunReport, SolverConfig, Trace, Violation

__version__ = "0.1.0"
