"""Strategy representations.

Four kinds are supported: tabular distributions indexed by state,
threshold rules on belief mass, parametric stochastic policies (neural,
defined in :mod:`secsim.learning.pg`), and lookup tables keyed on a
history feature such as the latest observation.  Every kind answers
``distribution(info)`` with a probability vector over its action set; the
meaning of ``info`` depends on the kind (state index, belief, or
observation index).
"""

from __future__ import annotations

import numpy as np

from .kernel import Belief


class Strategy:
    """Base class; concrete kinds override ``distribution``."""

    kind: str = "abstract"
    n_actions: int = 0

    def distribution(self, info) -> np.ndarray:
        raise NotImplementedError

    def act(self, info, rng: np.random.Generator) -> int:
        p = self.distribution(info)
        return int(rng.choice(len(p), p=p))

    @property
    def on_states(self) -> bool:
        """Whether ``distribution`` accepts a plain state index."""
        return False


class TabularStrategy(Strategy):
    """Per-state action distributions, shape (S, A)."""

    kind = "tabular-on-state"

    def __init__(self, table):
        table = np.asarray(table, dtype=np.float64)
        if table.ndim != 2:
            raise ValueError("tabular strategy needs a 2-d (state, action) table")
        sums = table.sum(axis=1)
        if not np.allclose(sums, 1.0, atol=1e-9) or (table < -1e-9).any():
            raise ValueError("rows of a tabular strategy must be distributions")
        self.table = table
        self.n_actions = table.shape[1]

    @property
    def on_states(self) -> bool:
        return True

    def distribution(self, info) -> np.ndarray:
        if isinstance(info, Belief):
            # Marginal over the belief; used when an opponent average is
            # needed against a belief-tracking player.
            return info.probs @ self.table
        return self.table[int(info)]

    @staticmethod
    def deterministic(n_states: int, n_actions: int, actions) -> "TabularStrategy":
        table = np.zeros((n_states, n_actions))
        table[np.arange(n_states), np.asarray(actions, dtype=int)] = 1.0
        return TabularStrategy(table)

    @staticmethod
    def uniform(n_states: int, n_actions: int) -> "TabularStrategy":
        return TabularStrategy(np.full((n_states, n_actions), 1.0 / n_actions))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "table": self.table.tolist()}


class ThresholdStrategy(Strategy):
    """Stop when tracked belief mass strictly exceeds a threshold.

    ``mask`` selects the states whose posterior mass is compared against
    ``alpha``; the rule plays ``stop_action`` iff mass > alpha, else
    ``continue_action``.  Mass exactly equal to the threshold does not
    trigger a stop.
    """

    kind = "threshold-on-belief"

    def __init__(self, alpha: float, mask, stop_action: int = 1,
                 continue_action: int = 0, n_actions: int = 2):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        self.alpha = float(alpha)
        self.mask = np.asarray(mask, dtype=bool)
        self.stop_action = int(stop_action)
        self.continue_action = int(continue_action)
        self.n_actions = int(n_actions)

    def tracked_mass(self, belief) -> float:
        probs = belief.probs if isinstance(belief, Belief) else np.asarray(belief)
        return float(probs[self.mask].sum())

    def decide(self, belief) -> int:
        return self.stop_action if self.tracked_mass(belief) > self.alpha else self.continue_action

    def distribution(self, info) -> np.ndarray:
        p = np.zeros(self.n_actions)
        p[self.decide(info)] = 1.0
        return p

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "mask": self.mask.astype(int).tolist(),
            "stop_action": self.stop_action,
            "continue_action": self.continue_action,
            "n_actions": self.n_actions,
        }


class ObservationLookupStrategy(Strategy):
    """Action distribution looked up from the latest observation index."""

    kind = "lookup-on-history-feature"

    def __init__(self, table, feature: str = "last-observation"):
        table = np.asarray(table, dtype=np.float64)
        sums = table.sum(axis=1)
        if not np.allclose(sums, 1.0, atol=1e-9) or (table < -1e-9).any():
            raise ValueError("rows of a lookup strategy must be distributions")
        self.table = table
        self.feature = feature
        self.n_actions = table.shape[1]

    def distribution(self, info) -> np.ndarray:
        return self.table[int(info)]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "feature": self.feature, "table": self.table.tolist()}


def strategy_from_dict(doc: dict) -> Strategy:
    kind = doc.get("kind")
    if kind == TabularStrategy.kind:
        return TabularStrategy(np.array(doc["table"], dtype=np.float64))
    if kind == ThresholdStrategy.kind:
        return ThresholdStrategy(
            doc["alpha"], np.array(doc["mask"], dtype=bool),
            stop_action=doc.get("stop_action", 1),
            continue_action=doc.get("continue_action", 0),
            n_actions=doc.get("n_actions", 2),
        )
    if kind == ObservationLookupStrategy.kind:
        return ObservationLookupStrategy(
            np.array(doc["table"], dtype=np.float64),
            feature=doc.get("feature", "last-observation"),
        )
    raise ValueError(f"unknown strategy kind: {kind!r}")
