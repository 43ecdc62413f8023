"""One-step (and deeper) rollout over a base strategy.

Rollout estimates each candidate action's value by Monte-Carlo
simulation: take the action, then follow the base strategy until the
simulation horizon, and average the discounted return over samples.  The
horizon counts all simulated steps including the optimized ones, so
horizon 1 with lookahead 1 reduces to greedy one-step lookahead on the
immediate reward.  Simulation runs on underlying states (certainty
equivalence); a belief info state is handled by sampling the initial
state per Monte-Carlo sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..kernel import Belief, ModelKernel
from ..simulate import sample_rows
from ..strategies import Strategy


@dataclass(frozen=True)
class RolloutParams:
    horizon: int = 20
    lookahead: int = 1
    mc_samples: int = 20

    def validate(self):
        if self.horizon < 1 or self.lookahead < 1 or self.mc_samples < 1:
            raise ValueError("horizon, lookahead and mc_samples must be >= 1")
        if self.lookahead > self.horizon:
            raise ValueError("lookahead cannot exceed the horizon")


def _sample_attacker(kernel: ModelKernel, attacker: Optional[Strategy],
                     states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if attacker is None:
        return np.zeros(len(states), dtype=np.intp)
    table = getattr(attacker, "table", None)
    if table is not None:
        return sample_rows(table[states], rng)
    return np.array([attacker.act(int(s), rng) for s in states], dtype=np.intp)


def _follow_base(kernel: ModelKernel, base: Strategy, states: np.ndarray,
                 steps: int, start_discount: float, attacker: Optional[Strategy],
                 rng: np.random.Generator) -> np.ndarray:
    """Discounted return of following the base strategy for ``steps`` steps."""
    table = getattr(base, "table", None)
    if table is None or not base.on_states:
        raise TypeError("rollout needs a base strategy defined on states")
    returns = np.zeros(len(states))
    active = np.arange(len(states))
    states = states.copy()
    terminal = kernel.terminal_index
    discount = start_discount
    for _ in range(steps):
        if len(active) == 0:
            break
        s = states[active]
        d = sample_rows(table[s], rng)
        a = _sample_attacker(kernel, attacker, s, rng)
        returns[active] += discount * kernel.reward[s, d, a]
        nxt = sample_rows(kernel.transition[s, d, a], rng)
        states[active] = nxt
        if terminal is not None:
            active = active[nxt != terminal]
        discount *= kernel.discount
    return returns


def _q_estimates(kernel: ModelKernel, base: Strategy, states: np.ndarray,
                 depth_left: int, horizon_left: int, discount: float,
                 attacker: Optional[Strategy], rng: np.random.Generator) -> np.ndarray:
    """Per-sample estimate of max_a Q(s, a) with ``depth_left`` optimized steps."""
    n = len(states)
    q = np.full((n, kernel.n_defender_actions), -np.inf)
    terminal = kernel.terminal_index
    for action in range(kernel.n_defender_actions):
        a = _sample_attacker(kernel, attacker, states, rng)
        immediate = discount * kernel.reward[states, action, a]
        nxt = sample_rows(kernel.transition[states, action, a], rng)
        rest = np.zeros(n)
        alive = np.ones(n, dtype=bool) if terminal is None else nxt != terminal
        if horizon_left > 1 and alive.any():
            if depth_left > 1:
                rest[alive] = _q_estimates(
                    kernel, base, nxt[alive], depth_left - 1, horizon_left - 1,
                    discount * kernel.discount, attacker, rng).max(axis=1)
            else:
                rest[alive] = _follow_base(
                    kernel, base, nxt[alive], horizon_left - 1,
                    discount * kernel.discount, attacker, rng)
        q[:, action] = immediate + rest
    return q


def rollout_q_values(kernel: ModelKernel, base: Strategy, info_state,
                     params: RolloutParams = RolloutParams(),
                     rng: Optional[np.random.Generator] = None,
                     attacker: Optional[Strategy] = None) -> np.ndarray:
    """Monte-Carlo Q estimates per candidate first action."""
    params.validate()
    rng = np.random.default_rng() if rng is None else rng
    if isinstance(info_state, Belief):
        starts = sample_rows(np.tile(info_state.probs, (params.mc_samples, 1)), rng)
    else:
        starts = np.full(params.mc_samples, int(info_state), dtype=np.intp)
    q = _q_estimates(kernel, base, starts, params.lookahead, params.horizon,
                     1.0, attacker, rng)
    return q.mean(axis=0)


def rollout_action(kernel: ModelKernel, base: Strategy, info_state,
                   params: RolloutParams = RolloutParams(),
                   rng: Optional[np.random.Generator] = None,
                   attacker: Optional[Strategy] = None) -> int:
    """The rollout-improved action; ties break toward the lowest index."""
    q = rollout_q_values(kernel, base, info_state, params, rng, attacker)
    return int(np.argmax(q))
