"""Steady contiguous vortex-patch dipole: potentials, fixed-point maps and diagnostics."""

from .barriers import (BOUND_M, BOUND_M1, BarrierParams, W, W_inv, barrier_eval,
                       check_D_membership, u_lower, v_upper)
from .diagnostics import (CheckReport, consistency_checks, verify_asymptotics,
                          verify_boundary_condition, verify_concavity, verify_R_bound,
                          verify_sign_structure, verify_uniqueness)
from .field import (ContourSet, FieldGrid, far_field_decay, sample_field, stream_function,
                    trace_contours, velocity)
from .grid import (Grid, Profile, ProfileError, eval_profile, holder_seminorm, inverse_profile,
                   make_graded_grid, profile_derivative, profile_from_function,
                   read_profile_csv, write_profile_csv)
from .potential import (F_partials, F_value, SpeedValue, grad_phi, grad_phi_inverse_param, phi,
                        phi_inverse_param, speed_c, speed_c_inverse)
from .quadrature import QuadratureError, integrate_1d, integrate_2d_region
from .seeds import make_seed, random_m0_profiles
from .solver import (SolveConfig, SolveReport, SolverError, euler_step, map_P, map_R, residual,
                     run_dynamics, solve_fixed_point)

__version__ = "0.1.0"
