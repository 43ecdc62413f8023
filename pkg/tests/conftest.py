"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's own code paths:
belief filtering is checked against literal path enumeration, matrix
game equilibria against an LP solver, and stationary distributions
against long power iteration.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy.optimize import linprog

from secsim.kernel import ModelKernel


def random_mdp(rng: np.random.Generator, n_states: int = 10, n_actions: int = 4,
               gamma: float = 0.95, reward_scale: float = 1.0,
               reward: np.ndarray = None) -> ModelKernel:
    """Random dense single-agent kernel with identity observations."""
    transition = rng.random((n_states, n_actions, 1, n_states))
    transition /= transition.sum(axis=3, keepdims=True)
    if reward is None:
        reward = rng.uniform(-reward_scale, reward_scale, (n_states, n_actions, 1))
    belief = rng.random(n_states)
    belief /= belief.sum()
    return ModelKernel(
        states=tuple(f"s{i}" for i in range(n_states)),
        defender_actions=tuple(f"a{i}" for i in range(n_actions)),
        attacker_actions=("none",),
        observations=tuple(f"s{i}" for i in range(n_states)),
        transition=transition,
        reward=reward,
        observation_model=np.eye(n_states),
        discount=gamma,
        initial_belief=belief,
        terminal_state=None,
    )


def random_game(rng: np.random.Generator, n_states: int = 6, n_defender: int = 3,
                n_attacker: int = 3, gamma: float = 0.9) -> ModelKernel:
    transition = rng.random((n_states, n_defender, n_attacker, n_states))
    transition /= transition.sum(axis=3, keepdims=True)
    reward = rng.uniform(-1.0, 1.0, (n_states, n_defender, n_attacker))
    belief = rng.random(n_states)
    belief /= belief.sum()
    return ModelKernel(
        states=tuple(f"s{i}" for i in range(n_states)),
        defender_actions=tuple(f"d{i}" for i in range(n_defender)),
        attacker_actions=tuple(f"a{i}" for i in range(n_attacker)),
        observations=tuple(f"s{i}" for i in range(n_states)),
        transition=transition,
        reward=reward,
        observation_model=np.eye(n_states),
        discount=gamma,
        initial_belief=belief,
        terminal_state=None,
    )


def random_table(rng: np.random.Generator, n_states: int, n_actions: int) -> np.ndarray:
    table = rng.random((n_states, n_actions))
    return table / table.sum(axis=1, keepdims=True)


def brute_force_posterior(kernel: ModelKernel, actions, observations,
                          marginals=None) -> np.ndarray:
    """Posterior over the final state by enumerating full state paths.

    Builds the joint probability of every nonzero-probability state path
    consistent with the action/observation record, marginalizes the last
    state and normalizes once at the end.
    """
    transition = kernel.transition
    z = kernel.observation_model
    paths = {(s,): float(p) for s, p in enumerate(kernel.initial_belief) if p > 0.0}
    for t, (action, obs) in enumerate(zip(actions, observations)):
        if marginals is None:
            marginal = np.ones(kernel.n_attacker_actions) / kernel.n_attacker_actions \
                if kernel.n_attacker_actions > 1 else np.ones(1)
        else:
            marginal = np.asarray(marginals[t], dtype=np.float64)
        extended = {}
        for path, prob in paths.items():
            s = path[-1]
            for a_att, p_att in enumerate(marginal):
                if p_att == 0.0:
                    continue
                row = transition[s, action, a_att]
                for s2 in range(kernel.n_states):
                    p = prob * p_att * row[s2] * z[s2, obs]
                    if p > 0.0:
                        key = path + (s2,)
                        extended[key] = extended.get(key, 0.0) + p
        paths = extended
    posterior = np.zeros(kernel.n_states)
    for path, prob in paths.items():
        posterior[path[-1]] += prob
    total = posterior.sum()
    if total <= 0.0:
        raise AssertionError("trajectory has zero probability under the kernel")
    return posterior / total


def lp_nash(payoffs: np.ndarray):
    """Exact Nash equilibrium of a zero-sum matrix game via two LPs.

    ``payoffs[i, j]`` is the row player's (maximizer's) payoff.  Returns
    (row_mixed, col_mixed, game_value).
    """
    a = np.asarray(payoffs, dtype=np.float64)
    n_rows, n_cols = a.shape
    shift = abs(a.min()) + 1.0
    b = a + shift  # strictly positive payoffs, so the game value is > 0

    row = linprog(c=np.ones(n_rows), A_ub=-b.T, b_ub=-np.ones(n_cols),
                  bounds=[(0, None)] * n_rows, method="highs")
    assert row.status == 0, row.message
    value = 1.0 / row.fun
    x = row.x * value

    col = linprog(c=-np.ones(n_cols), A_ub=b, b_ub=np.ones(n_rows),
                  bounds=[(0, None)] * n_cols, method="highs")
    assert col.status == 0, col.message
    col_value = 1.0 / (-col.fun)
    y = col.x * col_value
    return x, y, value - shift


def stationary_by_power_iteration(p: np.ndarray, iterations: int = 200_000,
                                  tol: float = 1e-13) -> np.ndarray:
    dist = np.full(p.shape[0], 1.0 / p.shape[0])
    for _ in range(iterations):
        nxt = dist @ p
        if np.abs(nxt - dist).max() < tol:
            return nxt
        dist = nxt
    return dist


@pytest.fixture
def rng():
    return np.random.default_rng(0)
