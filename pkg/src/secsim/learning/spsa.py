"""Simultaneous-perturbation stochastic approximation (ascent form)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class SpsaParams:
    """Gain and perturbation schedules.

    At iteration k (from 0) the step gain is
    ``gain_scale / (stability_offset + k + 1) ** gain_decay`` and the
    perturbation size is
    ``perturbation_scale / (k + 1) ** perturbation_decay``.
    """

    perturbation_scale: float = 1.0
    perturbation_decay: float = 0.101
    gain_decay: float = 0.602
    stability_offset: float = 100.0
    gain_scale: float = 1.0
    iterations: int = 100
    seed: int = 0

    def gain(self, k: int) -> float:
        return self.gain_scale / (self.stability_offset + k + 1) ** self.gain_decay

    def perturbation(self, k: int) -> float:
        return self.perturbation_scale / (k + 1) ** self.perturbation_decay


@dataclass
class SpsaResult:
    theta: np.ndarray
    history: list  # (iterate copy, objective value) per iteration, final included

    @property
    def objective_values(self) -> np.ndarray:
        return np.array([v for _, v in self.history])

    @property
    def final_value(self) -> float:
        return self.history[-1][1]


def spsa_optimize(objective: Callable[[np.ndarray], float], theta0,
                  params: SpsaParams = SpsaParams(),
                  bounds: Optional[Tuple] = None) -> SpsaResult:
    """Maximize a noisy objective with two-point gradient estimates.

    Each iteration draws a Rademacher direction, evaluates the objective
    at theta +- c_k * delta and steps along the estimated gradient.  The
    iterate is projected onto ``bounds`` after every step; the two
    perturbed evaluation points are deliberately left unprojected (the
    objective must tolerate queries within the initial perturbation size
    of the box), since projecting them biases the estimate away from
    interior optima near the boundary.

    The history records every iterate with an extra objective evaluation
    at the iterate itself.
    """
    theta = np.atleast_1d(np.asarray(theta0, dtype=np.float64)).copy()
    rng = np.random.default_rng(params.seed)
    if bounds is not None:
        lo = np.broadcast_to(np.asarray(bounds[0], dtype=np.float64), theta.shape)
        hi = np.broadcast_to(np.asarray(bounds[1], dtype=np.float64), theta.shape)

    history = []
    for k in range(params.iterations):
        history.append((theta.copy(), float(objective(theta.copy()))))
        c_k = params.perturbation(k)
        a_k = params.gain(k)
        delta = rng.integers(0, 2, size=theta.shape).astype(np.float64) * 2.0 - 1.0
        y_plus = float(objective(theta + c_k * delta))
        y_minus = float(objective(theta - c_k * delta))
        # 1/delta_i equals delta_i for Rademacher entries.
        gradient = (y_plus - y_minus) / (2.0 * c_k) * delta
        theta = theta + a_k * gradient
        if bounds is not None:
            theta = np.clip(theta, lo, hi)
    history.append((theta.copy(), float(objective(theta.copy()))))
    return SpsaResult(theta=theta, history=history)
