"""Fictitious play over zero-sum game kernels.

Each round both players compute (or learn) a best response to the
opponent's running average strategy; averages are uniform over rounds.
Exploitability of the current average pair is evaluated with exact best
responses and recorded every round.

The defender's responder is exact dynamic programming by default
whenever the induced MDP is small enough to solve directly; a
threshold-policy SPSA responder and a policy-gradient responder are
available for partially observed play.  Learned responders are projected
onto a state-indexed table from simulated visit counts so that averaging
and exploitability stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..kernel import ModelKernel
from ..simulate import simulate_episodes
from ..solve import best_response, exploitability
from ..strategies import TabularStrategy, ThresholdStrategy
from .curve import CurveRow
from .spsa import SpsaParams, spsa_optimize


@dataclass(frozen=True)
class FictitiousPlayParams:
    rounds: int = 100
    seed: int = 0
    responder: str = "auto"   # auto | exact | spsa-threshold | pg
    record_every: int = 1
    auto_exact_limit: int = 10000
    spsa: SpsaParams = field(default_factory=lambda: SpsaParams(iterations=60))
    episodes_per_eval: int = 20
    projection_episodes: int = 400
    max_steps: int = 100
    pg_params: Optional[object] = None


@dataclass
class FpResult:
    defender: TabularStrategy
    attacker: TabularStrategy
    curve: list
    responder: str

    @property
    def exploitability_values(self) -> np.ndarray:
        return np.array([row.mean for row in self.curve])


def _intrusion_mask(kernel: ModelKernel) -> np.ndarray:
    states = kernel.metadata.get("intrusion_states")
    if states is None:
        raise ValueError("kernel does not identify intrusion states for threshold play")
    mask = np.zeros(kernel.n_states, dtype=bool)
    mask[list(states)] = True
    return mask


def _project_counts(counts: np.ndarray, fallback_action: int = 0) -> np.ndarray:
    """Turn state-action visit counts into a table; unvisited states get a
    point mass on the fallback action."""
    table = counts.copy()
    totals = table.sum(axis=1)
    empty = totals <= 0
    table[empty, :] = 0.0
    table[empty, fallback_action] = 1.0
    totals = table.sum(axis=1)
    return table / totals[:, None]


def _threshold_responder(kernel: ModelKernel, attacker_avg: TabularStrategy,
                         params: FictitiousPlayParams,
                         seed_seq: np.random.SeedSequence) -> np.ndarray:
    """SPSA over a single belief threshold, projected to a state table."""
    mask = _intrusion_mask(kernel)
    stop = kernel.defender_actions.index("stop") if "stop" in kernel.defender_actions else 1
    cont = kernel.defender_actions.index("continue") if "continue" in kernel.defender_actions else 0
    objective_stream, projection_stream = seed_seq.spawn(2)
    objective_rng = np.random.default_rng(objective_stream)

    def threshold(alpha: float) -> ThresholdStrategy:
        return ThresholdStrategy(min(max(alpha, 0.0), 1.0), mask, stop_action=stop,
                                 continue_action=cont, n_actions=kernel.n_defender_actions)

    def objective(theta: np.ndarray) -> float:
        sim = simulate_episodes(kernel, threshold(float(theta[0])), attacker_avg,
                                n_episodes=params.episodes_per_eval,
                                max_steps=params.max_steps, rng=objective_rng)
        return sim.mean_return

    spsa_params = SpsaParams(
        perturbation_scale=params.spsa.perturbation_scale,
        perturbation_decay=params.spsa.perturbation_decay,
        gain_decay=params.spsa.gain_decay,
        stability_offset=params.spsa.stability_offset,
        gain_scale=params.spsa.gain_scale,
        iterations=params.spsa.iterations,
        seed=int(seed_seq.generate_state(1)[0]),
    )
    result = spsa_optimize(objective, [0.5], spsa_params, bounds=([0.0], [1.0]))
    best = threshold(float(result.theta[0]))
    sim = simulate_episodes(kernel, best, attacker_avg,
                            n_episodes=params.projection_episodes,
                            max_steps=params.max_steps,
                            rng=np.random.default_rng(projection_stream),
                            record_defender_counts=True)
    return _project_counts(sim.defender_counts, fallback_action=cont)


def _pg_responder(kernel: ModelKernel, attacker_avg: TabularStrategy,
                  params: FictitiousPlayParams,
                  seed_seq: np.random.SeedSequence) -> np.ndarray:
    from ..simulate import EpisodeSampler
    from .pg import PgParams, pg_train

    pg_params = params.pg_params or PgParams(
        learning_rate=3e-3, steps_per_update=512, updates=4, eval_episodes=4)
    pg_params = PgParams(**{**pg_params.__dict__,
                            "seed": int(seed_seq.generate_state(1)[0]),
                            "gamma": kernel.discount})
    sampler = EpisodeSampler(kernel, attacker_avg, features="state",
                             max_steps=params.max_steps,
                             rng=np.random.default_rng(seed_seq.spawn(1)[0]))
    result = pg_train(sampler, pg_params)
    return result.strategy.to_tabular(kernel.n_states).table


def fictitious_play(kernel: ModelKernel,
                    params: FictitiousPlayParams = FictitiousPlayParams()) -> FpResult:
    """Run fictitious play and record the exploitability curve.

    With responder "auto" the defender uses exact dynamic programming
    whenever the state space fits ``auto_exact_limit``; the attacker side
    is always exact (it observes the state).  Averages over rounds are
    uniform, and both averages stay valid distributions every round.
    """
    responder = params.responder
    if responder == "auto":
        if kernel.n_states > params.auto_exact_limit:
            raise ValueError(
                "state space exceeds the exact-DP limit; pick an explicit responder")
        responder = "exact"
    if responder not in ("exact", "spsa-threshold", "pg"):
        raise ValueError(f"unknown responder {responder!r}")

    seed_seq = np.random.SeedSequence(params.seed)
    avg_d = np.full((kernel.n_states, kernel.n_defender_actions),
                    1.0 / kernel.n_defender_actions)
    avg_a = np.full((kernel.n_states, kernel.n_attacker_actions),
                    1.0 / kernel.n_attacker_actions)
    curve = []

    for t in range(1, params.rounds + 1):
        attacker_avg = TabularStrategy(avg_a)
        defender_avg = TabularStrategy(avg_d)
        if responder == "exact":
            br_d, _ = best_response(kernel, attacker_avg, "defender")
            br_d_table = br_d.table
        elif responder == "spsa-threshold":
            br_d_table = _threshold_responder(kernel, attacker_avg, params,
                                              seed_seq.spawn(1)[0])
        else:
            br_d_table = _pg_responder(kernel, attacker_avg, params,
                                       seed_seq.spawn(1)[0])
        br_a, _ = best_response(kernel, defender_avg, "attacker")

        avg_d = ((t - 1) * avg_d + br_d_table) / t
        avg_a = ((t - 1) * avg_a + br_a.table) / t

        if t % params.record_every == 0 or t == 1 or t == params.rounds:
            gap = exploitability(kernel, TabularStrategy(avg_d), TabularStrategy(avg_a))
            curve.append(CurveRow(0.0, t, "exploitability", gap, 0.0))

    return FpResult(defender=TabularStrategy(avg_d), attacker=TabularStrategy(avg_a),
                    curve=curve, responder=responder)
