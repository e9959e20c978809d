"""Multi-user stochastic bandits with collisions: the MEGA policy, baselines,
regret metrics and closed-form bounds."""

from .bounds import BoundInputs, bound_table
from .engine import Simulation, reference_run, simulate
from .env import ArmSet, Environment, RoundOutcome, UserSchedule, create_environment
from .metrics import TraceAggregate, aggregate, optimal_set
from .policies import MegaParams, Policy, epsilon_t, is_epsilon_correct_ranking, persistence_after
from .runner import run_scenario
from .scenarios import Scenario, preset

__all__ = [
    "ArmSet", "BoundInputs", "Environment", "MegaParams", "Policy", "RoundOutcome",
    "Scenario", "Simulation", "TraceAggregate", "UserSchedule", "aggregate", "bound_table",
    "create_environment", "epsilon_t", "is_epsilon_correct_ranking", "optimal_set",
    "persistence_after", "preset", "reference_run", "run_scenario", "simulate",
]
