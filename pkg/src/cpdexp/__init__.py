"""
Continuous-stage exponential energy-preserving integrators for charged-particle
dynamics ``x'' = x' x B(x) / eps + F(x)``.
"""
from .baselines import avf_solve, avf_step, boris_rotate, boris_step
from .conditions import (ConditionReport, check_all, check_energy_conditions,
                         check_order_conditions, check_structure_conditions,
                         check_symmetry_conditions, sample_arguments)
from .errors import ConvergenceError, DomainError, ReferenceQualityError, UnsupportedInvariantError
from .harness import (ExperimentSpec, reference_solution, relative_error, run_convergence,
                      run_longrun, write_csv)
from .methods import MethodCoefficients, m1c_coefficients, m2c_coefficients, perturbed
from .model import (CPDProblem, MagneticField, Potential, State, builtin_problem, energy,
                    magnetic_moment, momentum, nonuniform_field, uniform_field)
from .nonuniform import TRIPLE_JUMP, m1b_step, m2b_step
from .phi import PhiTable, phi_series, phi_skew, phi_skew_closed, phi_table, skew_matrix
from .uniform import RunSummary, StepConfig, integrate, step

__version__ = "0.1.0"
