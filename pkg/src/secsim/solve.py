"""Core solution operations on kernels.

Belief filtering, exact policy evaluation, exact best response by value
iteration on the induced MDP, and exploitability.  All operations are
defender-centric: attacker payoffs are the negated reward table.  Best
responses in partially observed games are computed against the
underlying-state game, which requires the opponent strategy to be defined
on states; belief-space best response is out of scope.
"""

from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np

from .errors import NonConvergence, ZeroLikelihood
from .kernel import Belief, ModelKernel
from .strategies import Strategy, TabularStrategy

VALUE_TOL = 1e-8


def _state_table(strategy: Strategy, n_states: int, n_actions: int) -> np.ndarray:
    """Extract a (S, A) distribution table from a state-queryable strategy."""
    if hasattr(strategy, "to_tabular"):
        strategy = strategy.to_tabular(n_states)
    table = getattr(strategy, "table", None)
    if not (strategy.on_states and isinstance(table, np.ndarray)):
        raise TypeError(
            f"{type(strategy).__name__} is not defined on states; "
            "exact evaluation needs a tabular strategy"
        )
    if table.shape != (n_states, n_actions):
        raise ValueError(
            f"strategy table has shape {table.shape}, expected {(n_states, n_actions)}"
        )
    return table


def _attacker_table(kernel: ModelKernel, attacker: Optional[Strategy]) -> np.ndarray:
    if attacker is None:
        if kernel.n_attacker_actions != 1:
            raise ValueError("game kernel needs an explicit attacker strategy")
        return np.ones((kernel.n_states, 1))
    return _state_table(attacker, kernel.n_states, kernel.n_attacker_actions)


def belief_update(belief: Belief, defender_action: int, observation: int,
                  kernel: ModelKernel,
                  opponent_marginal: Optional[np.ndarray] = None) -> Belief:
    """One Bayes filter step: predict through the transition, condition on z.

    ``opponent_marginal`` is the defender's current distribution over the
    attacker's action; single-player kernels may omit it.  Raises
    ZeroLikelihood when the observation has zero probability under the
    predicted belief.
    """
    if opponent_marginal is None:
        if kernel.n_attacker_actions != 1:
            raise ValueError("game kernel needs an opponent action marginal")
        opponent_marginal = np.ones(1)
    m = np.asarray(opponent_marginal, dtype=np.float64)
    # T_mix[s, s'] = sum_a m(a) f(s' | s, a_D, a)
    t_mix = np.einsum("a,san->sn", m, kernel.transition[:, defender_action, :, :])
    predicted = belief.probs @ t_mix
    conditioned = predicted * kernel.observation_model[:, observation]
    norm = conditioned.sum()
    if norm <= 0.0:
        raise ZeroLikelihood(
            f"observation {observation} has zero probability after action "
            f"{defender_action}"
        )
    return Belief(conditioned / norm)


def induced_mdp(kernel: ModelKernel, opponent: Strategy,
                responder: str = "defender") -> Tuple[np.ndarray, np.ndarray]:
    """Fix the opponent and marginalize it out of the game tables.

    Returns (P, R) with shapes (S, A, S) and (S, A) where A is the
    responder's action count and R carries the responder's own sign
    (attacker rewards are negated).
    """
    if responder == "defender":
        table = _attacker_table(kernel, opponent)
        p = np.einsum("sa,sdan->sdn", table, kernel.transition)
        r = np.einsum("sa,sda->sd", table, kernel.reward)
    elif responder == "attacker":
        table = _state_table(opponent, kernel.n_states, kernel.n_defender_actions)
        p = np.einsum("sd,sdan->san", table, kernel.transition)
        r = -np.einsum("sd,sda->sa", table, kernel.reward)
    else:
        raise ValueError("responder must be 'defender' or 'attacker'")
    return p, r


def _stop_residual(tolerance: float, gamma: float) -> float:
    # ||J_k - J*|| <= gamma/(1-gamma) * ||J_{k+1} - J_k||
    if gamma <= 0.0:
        return tolerance
    return tolerance * (1.0 - gamma) / gamma


def _sweep_budget(gamma: float, r_span: float, stop: float) -> int:
    if gamma <= 0.0:
        return 16
    start = max(r_span, 1.0) / max(1.0 - gamma, 1e-12)
    needed = math.log(max(stop, 1e-300) / max(start, 1e-300)) / math.log(gamma)
    return max(64, int(needed) * 4 + 64)


def evaluate_policy(kernel: ModelKernel, defender: Strategy,
                    attacker: Optional[Strategy] = None,
                    tolerance: float = VALUE_TOL, method: str = "linear",
                    max_iterations: Optional[int] = None,
                    return_residuals: bool = False):
    """Expected discounted defender value per state under a fixed pair.

    ``method`` selects a direct linear solve of (I - gamma P) J = r or
    iterative fixed-point sweeps; the two agree within ``tolerance``.
    """
    gamma = kernel.discount
    if not 0.0 <= gamma < 1.0:
        raise ValueError("policy evaluation needs discount in [0, 1)")
    d_table = _state_table(defender, kernel.n_states, kernel.n_defender_actions)
    a_table = _attacker_table(kernel, attacker)

    # joint[s, d, a] action-pair probabilities under independent play
    joint = d_table[:, :, None] * a_table[:, None, :]
    p_pi = np.einsum("sda,sdan->sn", joint, kernel.transition)
    r_pi = np.einsum("sda,sda->s", joint, kernel.reward)

    if method == "linear":
        j = np.linalg.solve(np.eye(kernel.n_states) - gamma * p_pi, r_pi)
        return (j, []) if return_residuals else j
    if method != "iterative":
        raise ValueError("method must be 'linear' or 'iterative'")

    stop = _stop_residual(tolerance, gamma)
    if max_iterations is None:
        max_iterations = _sweep_budget(gamma, float(np.ptp(r_pi)) + abs(r_pi).max(), stop)
    j = np.zeros(kernel.n_states)
    residuals = []
    for _ in range(max_iterations):
        j_next = r_pi + gamma * (p_pi @ j)
        res = float(np.abs(j_next - j).max())
        residuals.append(res)
        j = j_next
        if res <= stop:
            return (j, residuals) if return_residuals else j
    raise NonConvergence(
        f"policy evaluation residual {residuals[-1]:.3e} after {max_iterations} sweeps"
    )


def best_response(kernel: ModelKernel, opponent: Optional[Strategy],
                  responder: str = "defender", tolerance: float = VALUE_TOL,
                  max_iterations: Optional[int] = None) -> Tuple[TabularStrategy, np.ndarray]:
    """Exact best response by value iteration on the induced MDP.

    Returns the greedy deterministic strategy (ties broken by lowest
    action index) and its value vector in the responder's own sign
    convention.
    """
    gamma = kernel.discount
    p, r = induced_mdp(kernel, opponent, responder)
    stop = _stop_residual(tolerance, gamma)
    if max_iterations is None:
        max_iterations = _sweep_budget(gamma, float(np.ptp(r)) + abs(r).max(), stop)
    v = np.zeros(kernel.n_states)
    converged = False
    for _ in range(max_iterations):
        q = r + gamma * np.einsum("san,n->sa", p, v)
        v_next = q.max(axis=1)
        res = float(np.abs(v_next - v).max())
        v = v_next
        if res <= stop:
            converged = True
            break
    if not converged:
        raise NonConvergence(f"value iteration residual above {stop:.3e}")
    q = r + gamma * np.einsum("san,n->sa", p, v)
    greedy = q.argmax(axis=1)
    strategy = TabularStrategy.deterministic(kernel.n_states, p.shape[1], greedy)
    return strategy, q.max(axis=1)


def exploitability(kernel: ModelKernel, defender: Strategy, attacker: Strategy,
                   tolerance: float = VALUE_TOL) -> float:
    """Sum of both best-response gains from the initial belief.

    Non-negative up to solver tolerance, and zero exactly at a Nash
    equilibrium of the zero-sum game.
    """
    _, v_defender = best_response(kernel, attacker, "defender", tolerance)
    _, v_attacker = best_response(kernel, defender, "attacker", tolerance)
    b = kernel.initial_belief
    return float(b @ v_defender + b @ v_attacker)
