"""Vectorized episode simulation over kernels.

Episodes are simulated in batches with all per-step sampling done through
numpy, which keeps Monte-Carlo evaluation of threshold and tabular
strategies cheap enough for optimization loops.  Belief tracking is only
carried when the defender strategy needs it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ZeroLikelihood
from .kernel import Belief, ModelKernel
from .strategies import ObservationLookupStrategy, Strategy, TabularStrategy, ThresholdStrategy


def sample_rows(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one index per row of a batch of categorical distributions."""
    cum = np.cumsum(rows, axis=1)
    cum[:, -1] = 1.0
    u = rng.random(rows.shape[0])
    return (cum < u[:, None]).sum(axis=1).astype(np.intp)


def _needs_belief(strategy: Strategy) -> bool:
    return isinstance(strategy, ThresholdStrategy) or getattr(strategy, "on_belief", False)


def _batch_actions(strategy: Strategy, states: np.ndarray,
                   beliefs: Optional[np.ndarray],
                   observations: Optional[np.ndarray],
                   rng: np.random.Generator) -> np.ndarray:
    if isinstance(strategy, ThresholdStrategy):
        mass = beliefs @ strategy.mask.astype(np.float64)
        return np.where(mass > strategy.alpha, strategy.stop_action,
                        strategy.continue_action).astype(np.intp)
    if isinstance(strategy, TabularStrategy):
        return sample_rows(strategy.table[states], rng)
    if isinstance(strategy, ObservationLookupStrategy):
        if observations is None:
            # No observation yet at t=1; fall back to the all-zero feature.
            observations = np.zeros(len(states), dtype=np.intp)
        return sample_rows(strategy.table[observations], rng)
    if hasattr(strategy, "batch_distribution"):
        feats = beliefs if _needs_belief(strategy) else states
        return sample_rows(strategy.batch_distribution(feats), rng)
    infos = beliefs if _needs_belief(strategy) else states
    out = np.empty(len(states), dtype=np.intp)
    for i in range(len(states)):
        info = Belief(infos[i]) if _needs_belief(strategy) else int(infos[i])
        out[i] = strategy.act(info, rng)
    return out


def _batch_belief_update(beliefs: np.ndarray, actions: np.ndarray,
                         observations: np.ndarray, kernel: ModelKernel,
                         attacker_table: np.ndarray) -> np.ndarray:
    marginal = beliefs @ attacker_table  # (n, AA)
    predicted = np.zeros_like(beliefs)
    for d in np.unique(actions):
        sub = actions == d
        acc = np.zeros((int(sub.sum()), beliefs.shape[1]))
        for a in range(kernel.n_attacker_actions):
            acc += marginal[sub, a, None] * (beliefs[sub] @ kernel.transition[:, d, a, :])
        predicted[sub] = acc
    conditioned = predicted * kernel.observation_model.T[observations]
    norms = conditioned.sum(axis=1)
    if (norms <= 0.0).any():
        raise ZeroLikelihood("simulated observation has zero predicted probability")
    return conditioned / norms[:, None]


@dataclass
class SimResult:
    returns: np.ndarray           # (n,) discounted defender returns
    lengths: np.ndarray           # (n,) steps taken before termination/truncation
    defender_counts: Optional[np.ndarray] = None  # (S, AD) state-action visits

    @property
    def mean_return(self) -> float:
        return float(self.returns.mean())


def simulate_episodes(kernel: ModelKernel, defender: Strategy,
                      attacker: Optional[Strategy] = None,
                      n_episodes: int = 100, max_steps: int = 200,
                      rng: Optional[np.random.Generator] = None,
                      record_defender_counts: bool = False,
                      initial_states: Optional[np.ndarray] = None) -> SimResult:
    """Simulate a batch of episodes and return discounted defender returns.

    Episodes stop at the kernel's terminal state or after ``max_steps``.
    Belief-tracking strategies see the Bayes posterior computed with the
    attacker's belief-marginalized action distribution, matching what a
    defender playing against a known opponent strategy would track.
    """
    rng = np.random.default_rng() if rng is None else rng
    gamma = kernel.discount
    n = int(n_episodes)
    terminal = kernel.terminal_index

    if attacker is None and kernel.n_attacker_actions != 1:
        raise ValueError("game kernel needs an attacker strategy")
    attacker_table = (np.ones((kernel.n_states, 1)) if attacker is None
                      else getattr(attacker, "table", None))
    track_belief = _needs_belief(defender)
    if track_belief and attacker_table is None:
        raise ValueError("belief tracking needs a tabular (or null) attacker")

    if initial_states is None:
        states = sample_rows(np.tile(kernel.initial_belief, (n, 1)), rng)
    else:
        states = np.asarray(initial_states, dtype=np.intp).copy()
    beliefs = np.tile(kernel.initial_belief, (n, 1)) if track_belief else None
    observations = None

    returns = np.zeros(n)
    lengths = np.zeros(n, dtype=np.intp)
    counts = np.zeros((kernel.n_states, kernel.n_defender_actions)) if record_defender_counts else None
    active = np.arange(n)
    discount_factor = 1.0

    for _ in range(max_steps):
        if len(active) == 0:
            break
        s = states[active]
        b = beliefs[active] if track_belief else None
        o = observations[active] if observations is not None else None
        d_act = _batch_actions(defender, s, b, o, rng)
        if attacker is None:
            a_act = np.zeros(len(active), dtype=np.intp)
        else:
            a_act = _batch_actions(attacker, s, None, None, rng)

        returns[active] += discount_factor * kernel.reward[s, d_act, a_act]
        if counts is not None:
            np.add.at(counts, (s, d_act), 1.0)

        nxt = sample_rows(kernel.transition[s, d_act, a_act], rng)
        obs = sample_rows(kernel.observation_model[nxt], rng)
        if track_belief:
            beliefs[active] = _batch_belief_update(
                beliefs[active], d_act, obs, kernel, attacker_table)
        states[active] = nxt
        if observations is None:
            observations = np.zeros(n, dtype=np.intp)
        observations[active] = obs
        lengths[active] += 1

        if terminal is not None:
            alive = nxt != terminal
            active = active[alive]
        discount_factor *= gamma

    return SimResult(returns=returns, lengths=lengths, defender_counts=counts)


class EpisodeSampler:
    """Single-episode sampler with feature vectors, for policy-gradient training.

    ``features`` selects what the policy sees: "state" yields a one-hot
    encoding of the true state, "belief" the tracked Bayes posterior, and
    "observation" a one-hot encoding of the latest observation.  Episode
    truncation at ``max_steps`` is reported as done.
    """

    def __init__(self, kernel: ModelKernel, attacker: Optional[Strategy] = None,
                 features: str = "state", max_steps: int = 200,
                 rng: Optional[np.random.Generator] = None):
        if features not in ("state", "belief", "observation"):
            raise ValueError("features must be 'state', 'belief' or 'observation'")
        if attacker is None and kernel.n_attacker_actions != 1:
            raise ValueError("game kernel needs an attacker strategy")
        self.kernel = kernel
        self.attacker = attacker
        self.features = features
        self.max_steps = max_steps
        self.rng = np.random.default_rng() if rng is None else rng
        self._attacker_table = (np.ones((kernel.n_states, 1)) if attacker is None
                                else getattr(attacker, "table", None))
        self.state: int = 0
        self.belief: Optional[Belief] = None
        self.last_observation: int = 0
        self.t = 0

    @property
    def feature_dim(self) -> int:
        if self.features == "state":
            return self.kernel.n_states
        if self.features == "belief":
            return self.kernel.n_states
        return self.kernel.n_observations

    @property
    def n_actions(self) -> int:
        return self.kernel.n_defender_actions

    def _vector(self) -> np.ndarray:
        if self.features == "belief":
            return np.array(self.belief.probs)
        out = np.zeros(self.feature_dim)
        out[self.state if self.features == "state" else self.last_observation] = 1.0
        return out

    def reset(self) -> np.ndarray:
        self.state = int(sample_rows(self.kernel.initial_belief[None, :], self.rng)[0])
        self.belief = self.kernel.initial_belief_object()
        self.last_observation = 0
        self.t = 0
        return self._vector()

    def step(self, action: int):
        from .solve import belief_update

        k = self.kernel
        if self.attacker is None:
            a_act = 0
        else:
            a_act = self.attacker.act(self.state, self.rng)
        reward = float(k.reward[self.state, action, a_act])
        nxt = int(sample_rows(k.transition[self.state, action, a_act][None, :], self.rng)[0])
        obs = int(sample_rows(k.observation_model[nxt][None, :], self.rng)[0])
        if self.features == "belief":
            marginal = self.belief.probs @ self._attacker_table
            self.belief = belief_update(self.belief, action, obs, k, marginal)
        self.state = nxt
        self.last_observation = obs
        self.t += 1
        done = self.t >= self.max_steps or (
            k.terminal_index is not None and nxt == k.terminal_index)
        return self._vector(), reward, bool(done)
