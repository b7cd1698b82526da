"""Placement of CNN layers across a swarm of resource-constrained UAVs."""

from .channel import Position3D, RadioParams, distance, rate_matrix, rate_series, sinr
from .cnn_profile import (CnnProfile, LayerSpec, builtin_lenet, builtin_vgg16, load_profile,
                          save_profile, total_flops, total_memory)
from .errors import (Infeasible, InfeasibleHint, InfeasiblePlacement, ParseError, SolverTimeout,
                     TooLarge, ValidationError, ZeroDistance)
from .ilp_core import IlpModel, Placement, Scenario, brute_force, build_model, make_scenario, solve_exact
from .mobility import RpgParams, Trajectory, init_swarm, predict, step
from .planner import (LatencyReport, evaluate, plan, plan_hrm, plan_nearest, plan_nearest_hrm,
                      plan_ould, plan_ould_mp, replay, system_capacity)
from .experiments import SweepSpec, run_sweep, runtime_compare
from .scenario_file import load_scenario, load_sweep

__version__ = "0.1.0"
