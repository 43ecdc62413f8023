"""Finite decision-model kernels.

A kernel packages the tables that define a finite MDP, POMDP or two-player
zero-sum stochastic game: named states and actions, a dense transition
tensor, a defender-centric reward tensor, an observation table, a discount
factor and an initial belief.  Attacker payoffs in game kernels are the
negated defender rewards by convention; single-player models use a
one-element attacker action set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

STOCHASTIC_TOL = 1e-9


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Belief:
    """A probability distribution over kernel states."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _freeze(self.probs))

    def __len__(self):
        return len(self.probs)

    def mass(self, state_indices) -> float:
        return float(self.probs[list(state_indices)].sum())

    def is_valid(self, tol: float = STOCHASTIC_TOL) -> bool:
        p = self.probs
        return bool((p >= -tol).all() and abs(p.sum() - 1.0) <= tol)


@dataclass(frozen=True)
class ModelKernel:
    """Immutable container for one decision model.

    transition has shape (S, AD, AA, S), reward (S, AD, AA) and
    observation_model (S, O).  ``terminal_state`` names the absorbing
    zero-reward state when the model has one; episode runners detect
    termination by comparing state indices against it.
    """

    states: tuple
    defender_actions: tuple
    attacker_actions: tuple
    observations: tuple
    transition: np.ndarray
    reward: np.ndarray
    observation_model: np.ndarray
    discount: float
    initial_belief: np.ndarray
    terminal_state: Optional[str] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "defender_actions", tuple(self.defender_actions))
        object.__setattr__(self, "attacker_actions", tuple(self.attacker_actions))
        object.__setattr__(self, "observations", tuple(self.observations))
        object.__setattr__(self, "transition", _freeze(self.transition))
        object.__setattr__(self, "reward", _freeze(self.reward))
        object.__setattr__(self, "observation_model", _freeze(self.observation_model))
        object.__setattr__(self, "initial_belief", _freeze(self.initial_belief))

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_defender_actions(self) -> int:
        return len(self.defender_actions)

    @property
    def n_attacker_actions(self) -> int:
        return len(self.attacker_actions)

    @property
    def n_observations(self) -> int:
        return len(self.observations)

    @property
    def terminal_index(self) -> Optional[int]:
        if self.terminal_state is None:
            return None
        return self.states.index(self.terminal_state)

    @property
    def is_game(self) -> bool:
        return self.n_attacker_actions > 1

    def state_index(self, name: str) -> int:
        return self.states.index(name)

    def defender_action_index(self, name: str) -> int:
        return self.defender_actions.index(name)

    def initial_belief_object(self) -> Belief:
        return Belief(self.initial_belief)

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "defender_actions": list(self.defender_actions),
            "attacker_actions": list(self.attacker_actions),
            "observations": list(self.observations),
            "transition": self.transition.tolist(),
            "reward": self.reward.tolist(),
            "observation_model": self.observation_model.tolist(),
            "discount": self.discount,
            "initial_belief": self.initial_belief.tolist(),
            "terminal_state": self.terminal_state,
            "metadata": self.metadata,
        }

    def to_json(self, path=None) -> Optional[str]:
        text = json.dumps(self.to_dict())
        if path is None:
            return text
        with open(path, "w") as fh:
            fh.write(text)
        return None

    @staticmethod
    def from_dict(doc: dict) -> "ModelKernel":
        from .errors import FileFormat

        required = [
            "states", "defender_actions", "attacker_actions", "observations",
            "transition", "reward", "observation_model", "discount",
            "initial_belief",
        ]
        missing = [k for k in required if k not in doc]
        if missing:
            raise FileFormat(f"kernel document missing fields: {missing}")
        try:
            return ModelKernel(
                states=tuple(doc["states"]),
                defender_actions=tuple(doc["defender_actions"]),
                attacker_actions=tuple(doc["attacker_actions"]),
                observations=tuple(doc["observations"]),
                transition=np.array(doc["transition"], dtype=np.float64),
                reward=np.array(doc["reward"], dtype=np.float64),
                observation_model=np.array(doc["observation_model"], dtype=np.float64),
                discount=float(doc["discount"]),
                initial_belief=np.array(doc["initial_belief"], dtype=np.float64),
                terminal_state=doc.get("terminal_state"),
                metadata=doc.get("metadata", {}),
            )
        except (TypeError, ValueError) as exc:
            raise FileFormat(f"kernel document malformed: {exc}") from exc

    @staticmethod
    def from_json(source) -> "ModelKernel":
        from .errors import FileFormat

        if hasattr(source, "read"):
            text = source.read()
        elif isinstance(source, str) and source.lstrip().startswith("{"):
            text = source
        else:
            with open(source) as fh:
                text = fh.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FileFormat(f"not valid JSON: {exc}", line=exc.lineno) from exc
        return ModelKernel.from_dict(doc)


@dataclass(frozen=True)
class Violation:
    """One violated kernel invariant."""

    kind: str
    index: tuple
    deviation: float

    def describe(self) -> str:
        return f"{self.kind} at {self.index}: deviation {self.deviation:.3e}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return len(self.violations) == 0

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"kind": v.kind, "index": list(v.index), "deviation": v.deviation}
                for v in self.violations
            ],
        }


def validate_kernel(kernel: ModelKernel, tol: float = STOCHASTIC_TOL) -> ValidationReport:
    """Check every stochasticity and shape invariant; never raises.

    Reports transition rows and observation rows that fail to sum to one
    within ``tol``, negative entries, an initial belief that is not a
    distribution, and a terminal state that is not absorbing with zero
    reward.
    """
    out = []
    S, AD, AA = kernel.n_states, kernel.n_defender_actions, kernel.n_attacker_actions

    if kernel.transition.shape != (S, AD, AA, S):
        out.append(Violation("transition-shape", kernel.transition.shape, 0.0))
    if kernel.reward.shape != (S, AD, AA):
        out.append(Violation("reward-shape", kernel.reward.shape, 0.0))
    if kernel.observation_model.shape != (S, kernel.n_observations):
        out.append(Violation("observation-shape", kernel.observation_model.shape, 0.0))
    if kernel.initial_belief.shape != (S,):
        out.append(Violation("belief-shape", kernel.initial_belief.shape, 0.0))
    if out:
        return ValidationReport(tuple(out))

    row_sums = kernel.transition.sum(axis=3)
    bad = np.argwhere(np.abs(row_sums - 1.0) > tol)
    for idx in bad:
        i = tuple(int(v) for v in idx)
        out.append(Violation("transition-row-sum", i, float(row_sums[i] - 1.0)))
    neg = np.argwhere(kernel.transition < -tol)
    for idx in neg:
        i = tuple(int(v) for v in idx)
        out.append(Violation("transition-negative", i, float(kernel.transition[i])))

    obs_sums = kernel.observation_model.sum(axis=1)
    for s in np.flatnonzero(np.abs(obs_sums - 1.0) > tol):
        out.append(Violation("observation-row-sum", (int(s),), float(obs_sums[s] - 1.0)))
    for idx in np.argwhere(kernel.observation_model < -tol):
        i = tuple(int(v) for v in idx)
        out.append(Violation("observation-negative", i, float(kernel.observation_model[i])))

    b = kernel.initial_belief
    if abs(b.sum() - 1.0) > tol:
        out.append(Violation("initial-belief-sum", (), float(b.sum() - 1.0)))
    for s in np.flatnonzero(b < -tol):
        out.append(Violation("initial-belief-negative", (int(s),), float(b[s])))

    if not np.isfinite(kernel.reward).all():
        idx = tuple(int(v) for v in np.argwhere(~np.isfinite(kernel.reward))[0])
        out.append(Violation("reward-nonfinite", idx, float("nan")))

    if not (0.0 <= kernel.discount < 1.0):
        out.append(Violation("discount-range", (), float(kernel.discount)))

    t = kernel.terminal_index
    if t is not None:
        stay = kernel.transition[t, :, :, t]
        dev = float(np.abs(stay - 1.0).max())
        if dev > tol:
            out.append(Violation("terminal-not-absorbing", (t,), dev))
        rdev = float(np.abs(kernel.reward[t]).max())
        if rdev > tol:
            out.append(Violation("terminal-reward-nonzero", (t,), rdev))

    return ValidationReport(tuple(out))


def matrix_game_kernel(payoffs, gamma: float = 0.99,
                       defender_actions: Optional[Sequence[str]] = None,
                       attacker_actions: Optional[Sequence[str]] = None) -> ModelKernel:
    """Embed a one-shot zero-sum matrix game as a two-state kernel.

    ``payoffs[i, j]`` is the defender (row) payoff.  Play happens once in
    the initial state, after which the game sits in the absorbing terminal
    state, so best-response values from the initial belief reduce to the
    matrix-game values.
    """
    payoffs = np.asarray(payoffs, dtype=np.float64)
    m, n = payoffs.shape
    if defender_actions is None:
        defender_actions = [f"d{i}" for i in range(m)]
    if attacker_actions is None:
        attacker_actions = [f"a{j}" for j in range(n)]
    transition = np.zeros((2, m, n, 2))
    transition[:, :, :, 1] = 1.0
    reward = np.zeros((2, m, n))
    reward[0] = payoffs
    observation_model = np.eye(2)
    return ModelKernel(
        states=("play", "terminal"),
        defender_actions=tuple(defender_actions),
        attacker_actions=tuple(attacker_actions),
        observations=("play", "terminal"),
        transition=transition,
        reward=reward,
        observation_model=observation_model,
        discount=gamma,
        initial_belief=np.array([1.0, 0.0]),
        terminal_state="terminal",
        metadata={"zero_sum": True, "family": "matrix-game"},
    )
