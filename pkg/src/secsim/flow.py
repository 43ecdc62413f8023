"""Flow-control use case: intrusion interruption by stopping traffic.

Two models share the same state skeleton.  The single-agent POMDP gives
the defender a budget of L stop actions against an intrusion that starts
at a geometric random time; the zero-sum game puts the intrusion start
(and abort) under attacker control, with each defender stop raising the
probability that an ongoing intrusion is cut off.

States are (mode, budget) pairs plus one absorbing terminal state, laid
out as no_intrusion/intrusion alternating per budget level from 1 to L,
terminal last.  Observations are per-interval alert counts on a binned
support; the binning map is recorded in the kernel metadata.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidConfig
from .kernel import ModelKernel
from .strategies import TabularStrategy, ThresholdStrategy
from .sysid import MixtureModel, binned_mixture_probs

CONTINUE, STOP = 0, 1


def _check_obs_table(obs, n_bins: int) -> np.ndarray:
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape != (2, n_bins):
        raise InvalidConfig(
            f"observation table must have shape (2, {n_bins}), got {obs.shape}")
    if (obs < -1e-9).any() or np.abs(obs.sum(axis=1) - 1.0).max() > 1e-9:
        raise InvalidConfig("observation table rows must be distributions")
    return obs


def default_pomdp_observation(n_bins: int = 100) -> np.ndarray:
    """Geometric-shaped alert-count distributions, heavier under intrusion."""
    counts = np.arange(n_bins, dtype=np.float64)
    quiet = (1.0 / 6.0) * (5.0 / 6.0) ** counts
    noisy = (1.0 / 16.0) * (15.0 / 16.0) ** counts
    table = np.stack([quiet / quiet.sum(), noisy / noisy.sum()])
    return table


def default_game_observation(n_bins: int = 100, source_max: int = 22000) -> np.ndarray:
    """Mixture-shaped alert volumes binned from counts 0..source_max.

    The no-intrusion row is a single low-volume component; the intrusion
    row mixes three higher-volume components, mirroring the shapes that
    mixture fits on labeled traces produce.
    """
    edges = np.linspace(0.0, float(source_max + 1), n_bins + 1)
    quiet = MixtureModel(weights=np.array([1.0]), means=np.array([1000.0]),
                         stddevs=np.array([600.0]), support=(0, source_max))
    noisy = MixtureModel(weights=np.array([0.5, 0.3, 0.2]),
                         means=np.array([2000.0, 6000.0, 12000.0]),
                         stddevs=np.array([800.0, 1500.0, 2500.0]),
                         support=(0, source_max))
    return np.stack([binned_mixture_probs(quiet, edges),
                     binned_mixture_probs(noisy, edges)])


def _flow_states(stops: int):
    names = []
    for level in range(1, stops + 1):
        names.append(f"no_intrusion_l{level}")
        names.append(f"intrusion_l{level}")
    names.append("terminal")
    return tuple(names)


def _state_index(mode: int, level: int) -> int:
    return 2 * (level - 1) + mode


def _bin_metadata(n_bins: int, source_max: Optional[int]) -> dict:
    if source_max is None:
        # Observation support is the raw count value itself.
        return {"bin_count": n_bins, "bin_width": 1, "source_range": [0, n_bins - 1]}
    return {"bin_count": n_bins, "bin_width": (source_max + 1) / n_bins,
            "source_range": [0, source_max]}


@dataclass(frozen=True)
class FlowPomdpConfig:
    """Stopping POMDP parameters.

    ``intrusion_prob`` is the per-interval probability that an intrusion
    starts.  ``obs`` may be a (2, n_bins) table of alert-count
    distributions (rows: no intrusion, intrusion); when omitted a default
    geometric-shaped table over ``n_bins`` counts is used.
    """

    stops: int = 3
    intrusion_prob: float = 0.01
    sla_reward: float = 1.0
    stop_reward: float = 5.0
    intrusion_penalty: float = -10.0
    obs: Optional[object] = None
    n_bins: int = 100
    gamma: float = 0.99

    def validate(self) -> None:
        if not (isinstance(self.stops, int) and self.stops >= 1):
            raise InvalidConfig("stops must be an integer >= 1")
        if not 0.0 < self.intrusion_prob < 1.0:
            raise InvalidConfig("intrusion_prob must lie strictly inside (0, 1)")
        if self.sla_reward <= 0.0:
            raise InvalidConfig("sla_reward must be positive")
        if self.stop_reward <= 0.0:
            raise InvalidConfig("stop_reward must be positive")
        if self.intrusion_penalty >= 0.0:
            raise InvalidConfig("intrusion_penalty must be negative")
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidConfig("gamma must lie in [0, 1)")
        if self.n_bins < 2:
            raise InvalidConfig("observation support needs at least 2 bins")


def build_flow_pomdp(config: FlowPomdpConfig = FlowPomdpConfig()) -> ModelKernel:
    """Build the stopping POMDP kernel.

    Dynamics: an intrusion starts with probability p per interval and then
    persists; each stop action spends one unit of budget, and spending the
    last unit ends the episode.  Rewards: continuing pays the SLA reward
    plus the intrusion penalty fraction while intruded; stopping pays the
    stop reward fraction while intruded.
    """
    config.validate()
    L, p = config.stops, config.intrusion_prob
    states = _flow_states(L)
    n = len(states)
    terminal = n - 1

    transition = np.zeros((n, 2, 1, n))
    reward = np.zeros((n, 2, 1))
    transition[terminal, :, :, terminal] = 1.0

    for level in range(1, L + 1):
        for action in (CONTINUE, STOP):
            remaining = level - action
            src0, src1 = _state_index(0, level), _state_index(1, level)
            if remaining == 0:
                transition[src0, action, 0, terminal] = 1.0
                transition[src1, action, 0, terminal] = 1.0
            else:
                transition[src0, action, 0, _state_index(0, remaining)] = 1.0 - p
                transition[src0, action, 0, _state_index(1, remaining)] = p
                transition[src1, action, 0, _state_index(1, remaining)] = 1.0
            reward[src0, CONTINUE, 0] = config.sla_reward
            reward[src1, CONTINUE, 0] = config.sla_reward + config.intrusion_penalty / L
            reward[src0, STOP, 0] = 0.0
            reward[src1, STOP, 0] = config.stop_reward / L

    obs = (default_pomdp_observation(config.n_bins) if config.obs is None
           else _check_obs_table(config.obs, config.n_bins))
    observation_model = np.zeros((n, config.n_bins))
    for level in range(1, L + 1):
        observation_model[_state_index(0, level)] = obs[0]
        observation_model[_state_index(1, level)] = obs[1]
    observation_model[terminal] = obs[0]

    belief = np.zeros(n)
    belief[_state_index(0, L)] = 1.0

    return ModelKernel(
        states=states,
        defender_actions=("continue", "stop"),
        attacker_actions=("none",),
        observations=tuple(f"count_{i}" for i in range(config.n_bins)),
        transition=transition,
        reward=reward,
        observation_model=observation_model,
        discount=config.gamma,
        initial_belief=belief,
        terminal_state="terminal",
        metadata={
            "family": "flow-pomdp",
            "intrusion_states": [_state_index(1, lv) for lv in range(1, L + 1)],
            "binning": _bin_metadata(config.n_bins, None),
        },
    )


@dataclass(frozen=True)
class FlowGameConfig:
    """Stopping game parameters.

    ``stop_success`` is indexed by the number of stops already taken: its
    k-th entry is the probability that an ongoing intrusion is cut off
    during an interval after k stops, and it must be nondecreasing.
    """

    stops: int = 3
    stop_success: tuple = (0.3, 0.6, 0.9)
    stop_reward: float = 5.0
    intrusion_penalty: float = -10.0
    stop_cost: float = -1.0
    obs: Optional[object] = None
    n_bins: int = 100
    source_max: int = 22000
    gamma: float = 0.99

    def validate(self) -> None:
        if not (isinstance(self.stops, int) and self.stops >= 1):
            raise InvalidConfig("stops must be an integer >= 1")
        phi = np.asarray(self.stop_success, dtype=np.float64)
        if phi.shape != (self.stops,):
            raise InvalidConfig("stop_success needs one entry per stop level")
        if (phi < 0.0).any() or (phi > 1.0).any():
            raise InvalidConfig("stop_success entries must lie in [0, 1]")
        if (np.diff(phi) < -1e-12).any():
            raise InvalidConfig("stop_success must be nondecreasing in stops taken")
        if self.stop_reward <= 0.0:
            raise InvalidConfig("stop_reward must be positive")
        if self.intrusion_penalty >= 0.0:
            raise InvalidConfig("intrusion_penalty must be negative")
        if self.stop_cost >= 0.0:
            raise InvalidConfig("stop_cost must be negative")
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidConfig("gamma must lie in [0, 1)")
        if self.n_bins < 2:
            raise InvalidConfig("observation support needs at least 2 bins")
        if self.source_max < 1:
            raise InvalidConfig("source_max must be a positive count")


def build_flow_game(config: FlowGameConfig = FlowGameConfig()) -> ModelKernel:
    """Build the zero-sum stopping game kernel.

    The attacker chooses when the intrusion starts and may abort it; the
    defender spends stop actions.  While an intrusion runs, each interval
    it is cut off with a probability that grows with the number of stops
    taken.  Rewards are defender-centric; the attacker receives their
    negation.
    """
    config.validate()
    L = config.stops
    phi_taken = np.asarray(config.stop_success, dtype=np.float64)
    states = _flow_states(L)
    n = len(states)
    terminal = n - 1

    transition = np.zeros((n, 2, 2, n))
    reward = np.zeros((n, 2, 2))
    transition[terminal, :, :, terminal] = 1.0

    for level in range(1, L + 1):
        cut_prob = phi_taken[L - level]  # stops taken so far = L - level
        src0, src1 = _state_index(0, level), _state_index(1, level)
        for d_act in (CONTINUE, STOP):
            remaining = level - d_act
            for a_act in (CONTINUE, STOP):
                if remaining == 0:
                    transition[src0, d_act, a_act, terminal] = 1.0
                    transition[src1, d_act, a_act, terminal] = 1.0
                    continue
                if a_act == STOP:
                    transition[src0, d_act, a_act, _state_index(1, remaining)] = 1.0
                    transition[src1, d_act, a_act, terminal] = 1.0
                else:
                    transition[src0, d_act, a_act, _state_index(0, remaining)] = 1.0
                    transition[src1, d_act, a_act, terminal] = cut_prob
                    transition[src1, d_act, a_act, _state_index(1, remaining)] = 1.0 - cut_prob

        # Reward precedence: terminal 0, attacker-stop 0, then mode cases.
        reward[src0, CONTINUE, :] = 0.0
        reward[src0, STOP, :] = config.stop_cost / level
        reward[src1, CONTINUE, CONTINUE] = config.intrusion_penalty
        reward[src1, STOP, CONTINUE] = config.stop_reward / level
        reward[src1, :, STOP] = 0.0

    obs = (default_game_observation(config.n_bins, config.source_max)
           if config.obs is None else _check_obs_table(config.obs, config.n_bins))
    observation_model = np.zeros((n, config.n_bins))
    for level in range(1, L + 1):
        observation_model[_state_index(0, level)] = obs[0]
        observation_model[_state_index(1, level)] = obs[1]
    observation_model[terminal] = obs[0]

    belief = np.zeros(n)
    belief[_state_index(0, L)] = 1.0

    return ModelKernel(
        states=states,
        defender_actions=("continue", "stop"),
        attacker_actions=("continue", "stop"),
        observations=tuple(f"bin_{i}" for i in range(config.n_bins)),
        transition=transition,
        reward=reward,
        observation_model=observation_model,
        discount=config.gamma,
        initial_belief=belief,
        terminal_state="terminal",
        metadata={
            "family": "flow-game",
            "zero_sum": True,
            "intrusion_states": [_state_index(1, lv) for lv in range(1, L + 1)],
            "binning": _bin_metadata(config.n_bins, config.source_max),
        },
    )


def threshold_strategy(alpha: float, kernel: Optional[ModelKernel] = None) -> ThresholdStrategy:
    """Stop iff the belief mass on intrusion states strictly exceeds alpha.

    Mass exactly equal to alpha continues.  Without a kernel the default
    flow POMDP layout is assumed.
    """
    if kernel is None:
        kernel = build_flow_pomdp()
    intrusion = kernel.metadata.get("intrusion_states")
    if intrusion is None:
        raise ValueError("kernel does not identify intrusion states")
    mask = np.zeros(kernel.n_states, dtype=bool)
    mask[list(intrusion)] = True
    return ThresholdStrategy(
        alpha, mask,
        stop_action=kernel.defender_actions.index("stop"),
        continue_action=kernel.defender_actions.index("continue"),
        n_actions=kernel.n_defender_actions,
    )


def flow_attacker(kernel: ModelKernel, kind: str = "immediate") -> TabularStrategy:
    """Named attacker strategies for the flow game.

    "never": never start an intrusion.  "immediate": start as soon as
    possible and never abort.  "hit-and-run": start immediately, abort one
    interval later.
    """
    n = kernel.n_states
    intrusion = set(kernel.metadata.get("intrusion_states", ()))
    table = np.zeros((n, 2))
    if kind == "never":
        table[:, CONTINUE] = 1.0
    elif kind == "immediate":
        for s in range(n):
            table[s, STOP if s not in intrusion else CONTINUE] = 1.0
    elif kind == "hit-and-run":
        table[:, STOP] = 1.0
    else:
        raise ValueError(f"unknown attacker kind {kind!r}")
    return TabularStrategy(table)
