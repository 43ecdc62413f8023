"""Simulation and reinforcement-learning toolkit for security decision models.

Finite MDP/POMDP/stochastic-game kernels for intrusion response use
cases, exact solvers (belief filtering, policy evaluation, best response,
exploitability), strategy learners (SPSA, rollout, PPO, fictitious
play), observation-model identification from traces, misspecification
analysis, an experiment CLI and an HTTP episode debugger.
"""

from .errors import (
    ConfigError, DegenerateComponent, DimensionCap, EmptyStratum, FileFormat,
    IllegalAction, InvalidConfig, InvalidDiscount, NegativeCount, NonConvergence,
    NonFiniteLoss, RewardMismatch, SecsimError, SessionDone, ShapeMismatch,
    UnknownSession, ZeroLikelihood,
)
from .kernel import (
    Belief, ModelKernel, ValidationReport, Violation, matrix_game_kernel,
    validate_kernel,
)
from .strategies import (
    ObservationLookupStrategy, Strategy, TabularStrategy, ThresholdStrategy,
    strategy_from_dict,
)
from .solve import belief_update, best_response, evaluate_policy, exploitability, induced_mdp
from .simulate import EpisodeSampler, SimResult, simulate_episodes

__version__ = "0.1.0"
