"""Fail-safe emergency-braking deceleration planner."""
from .errors import (BrakePlanError, ConfigurationError, FieldFormatError,
                     InfeasibleCapError, OutOfRegionError, ParameterError, SingularityError)
from .field import PenaltyField, generate_brownian, generate_scenario, read_csv, write_csv
from .kinematics import PlanParams, ValveTransition, envelope, sigma_B, sigma_C, sigma_single
from .fast_solver import PlanResult, candidate_set, evaluate_candidate, plan, precompute
from .direct_solver import build_fail_grid, expected_penalty, plan_direct

__version__ = "0.1.0"
