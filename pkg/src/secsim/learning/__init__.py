"""Strategy learning: stochastic approximation, rollout, policy gradient
and fictitious play.  The policy-gradient module imports torch and is
loaded lazily by consumers that do not need it."""

from .spsa import SpsaParams, SpsaResult, spsa_optimize
from .rollout import RolloutParams, rollout_action, rollout_q_values
from .fp import FictitiousPlayParams, FpResult, fictitious_play

__all__ = [
    "SpsaParams", "SpsaResult", "spsa_optimize",
    "RolloutParams", "rollout_action", "rollout_q_values",
    "FictitiousPlayParams", "FpResult", "fictitious_play",
]
