"""Model-misspecification analysis.

The value of a fixed strategy pair under a misspecified transition model
deviates from its true value by at most alpha * gamma * beta / (1 -
gamma)^2, where alpha bounds the total-variation distance between the
transition rows and beta the absolute reward.  This module measures
alpha, evaluates the bound, checks it against exact policy evaluation on
kernel pairs, and sweeps learned-strategy values across a grid of model
perturbations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidDiscount, RewardMismatch, ShapeMismatch
from .kernel import ModelKernel
from .simulate import simulate_episodes
from .solve import evaluate_policy
from .strategies import Strategy


@dataclass(frozen=True)
class MisspecReport:
    alpha: float
    beta: float
    gamma: float
    bound: float
    measured_gap: float

    @property
    def holds(self) -> bool:
        return self.measured_gap <= self.bound + 1e-9

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
            "bound": self.bound, "measured_gap": self.measured_gap,
            "holds": self.holds,
        }


def total_variation_alpha(kernel: ModelKernel, other: ModelKernel) -> float:
    """Largest L1 distance between matching transition rows (lies in [0, 2])."""
    if kernel.transition.shape != other.transition.shape:
        raise ShapeMismatch(
            f"transition shapes differ: {kernel.transition.shape} vs {other.transition.shape}")
    return float(np.abs(kernel.transition - other.transition).sum(axis=3).max())


def misspecification_bound(alpha: float, gamma: float, beta: float) -> float:
    """alpha * gamma * beta / (1 - gamma)^2."""
    if not 0.0 <= gamma < 1.0:
        raise InvalidDiscount(f"discount must lie in [0, 1), got {gamma}")
    if alpha < 0.0 or beta < 0.0:
        raise ValueError("alpha and beta must be nonnegative")
    return alpha * gamma * beta / (1.0 - gamma) ** 2


def bound_check(kernel: ModelKernel, perturbed: ModelKernel, defender: Strategy,
                attacker: Optional[Strategy] = None) -> MisspecReport:
    """Exactly evaluate one strategy pair on both kernels and test the bound.

    The bound is about transition misspecification only, so the two
    kernels must carry identical reward tables and discounts.
    """
    if kernel.transition.shape != perturbed.transition.shape:
        raise ShapeMismatch(
            f"kernel shapes differ: {kernel.transition.shape} vs {perturbed.transition.shape}")
    if not np.array_equal(kernel.reward, perturbed.reward):
        raise RewardMismatch("the two kernels carry different reward tables")
    if kernel.discount != perturbed.discount:
        raise InvalidDiscount("the two kernels carry different discounts")

    alpha = total_variation_alpha(kernel, perturbed)
    beta = float(np.abs(kernel.reward).max())
    gamma = kernel.discount
    j_true = evaluate_policy(kernel, defender, attacker, method="linear")
    j_tilde = evaluate_policy(perturbed, defender, attacker, method="linear")
    gap = float(np.abs(j_true - j_tilde).max())
    return MisspecReport(alpha=alpha, beta=beta, gamma=gamma,
                         bound=misspecification_bound(alpha, gamma, beta),
                         measured_gap=gap)


@dataclass(frozen=True)
class SweepRow:
    param_delta: float
    sim_mean: float
    sim_std: float
    truth_mean: float
    truth_std: float

    def as_tuple(self):
        return (self.param_delta, self.sim_mean, self.sim_std,
                self.truth_mean, self.truth_std)


def sensitivity_sweep(builder: Callable[[float], ModelKernel], true_param: float,
                      param_grid: Sequence[float],
                      learner: Callable[[ModelKernel, np.random.SeedSequence], Strategy],
                      seeds: int = 3, eval_episodes: int = 1000,
                      max_steps: int = 500, base_seed: int = 0,
                      attacker: Optional[Strategy] = None) -> list:
    """Train on perturbed models, evaluate on both the perturbed and true one.

    For each grid value p~ and replicate j, the learner is trained on
    builder(p~) with a seed stream derived from (base_seed, grid_index,
    replicate_index); its mean discounted return is then estimated by
    simulation on the perturbed model (sim) and on builder(true_param)
    (truth).  Rows aggregate mean and stddev across replicates.
    """
    true_kernel = builder(true_param)
    rows = []
    for grid_index, param in enumerate(param_grid):
        perturbed = builder(float(param))
        sim_values, truth_values = [], []
        for replicate in range(seeds):
            cell = np.random.SeedSequence((base_seed, grid_index, replicate))
            learn_stream, sim_stream, truth_stream = cell.spawn(3)
            strategy = learner(perturbed, learn_stream)
            sim_values.append(simulate_episodes(
                perturbed, strategy, attacker, n_episodes=eval_episodes,
                max_steps=max_steps, rng=np.random.default_rng(sim_stream)).mean_return)
            truth_values.append(simulate_episodes(
                true_kernel, strategy, attacker, n_episodes=eval_episodes,
                max_steps=max_steps, rng=np.random.default_rng(truth_stream)).mean_return)
        sim_values = np.asarray(sim_values)
        truth_values = np.asarray(truth_values)
        rows.append(SweepRow(
            param_delta=abs(float(param) - float(true_param)),
            sim_mean=float(sim_values.mean()), sim_std=float(sim_values.std()),
            truth_mean=float(truth_values.mean()), truth_std=float(truth_values.std()),
        ))
    return rows
