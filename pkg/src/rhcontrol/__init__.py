"""Receding horizon stabilization of time-varying parabolic equations with
finitely many interior actuators, including sparse (squared-l1) control costs."""

from .actuators import (ActuatorSet, assemble_actuator_loads,
                        assemble_nodal_injection, build_rectangular_actuators,
                        coverage_fraction)
from .mesh_fem import (Mesh, SpatialOperators, assemble_convection, assemble_mass,
                       assemble_reaction, assemble_stiffness, build_spatial_operators,
                       build_uniform_mesh, project_function, sobolev_norms)
from .optim import (OcpContext, OcpSolution, SolverOptions, bb_stepsize,
                    finite_difference_gradcheck, reduced_gradient, solve_ocp,
                    solve_ocp_l1, solve_ocp_l2)
from .prox import ProxParams, active_set_size, find_mu_star, prox_sql1, prox_sql2, psi
from .rhc import (RhcConfig, RhcResult, build_problem, decay_rate_fit,
                  performance_metrics, rhc_run, sparsity_profile)
from .timestepping import (CnSystem, ControlTrajectory, StateTrajectory, TimeGrid,
                           cn_adjoint_solve, cn_state_solve, objective_eval)

__version__ = "0.1.0"
