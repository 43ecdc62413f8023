"""Proximal policy optimization over episode samplers.

The policy network is a small MLP with one smooth hidden trunk, a softmax
action head and a separate linear value head.  Training uses the clipped
surrogate with generalized advantage estimation, an entropy bonus, a
coefficient-weighted value loss and gradient-norm clipping.  Everything
runs in float64 on CPU so the analytic gradients can be checked against
finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
from torch import nn

from ..errors import NonFiniteLoss
from ..kernel import Belief
from ..simulate import EpisodeSampler
from ..strategies import Strategy, TabularStrategy
from .curve import CurveRow

torch.set_default_dtype(torch.float64)


@dataclass(frozen=True)
class PgParams:
    learning_rate: float = 5.148e-5
    hidden_layers: int = 1
    hidden_size: int = 64
    steps_per_update: int = 2048
    batch_size: int = 16
    updates: int = 10
    epochs: int = 10
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_range: float = 0.2
    entropy_coef: float = 2e-4
    value_coef: float = 0.102
    max_grad_norm: float = 0.5
    eval_episodes: int = 20
    seed: int = 0


class PolicyNet(nn.Module):
    """Shared trunk, softmax action head, separate linear value head."""

    def __init__(self, feature_dim: int, n_actions: int,
                 hidden_size: int = 64, hidden_layers: int = 1):
        super().__init__()
        layers = [nn.Linear(feature_dim, hidden_size), nn.Tanh()]
        for _ in range(hidden_layers - 1):
            layers += [nn.Linear(hidden_size, hidden_size), nn.Tanh()]
        self.trunk = nn.Sequential(*layers)
        self.action_head = nn.Linear(hidden_size, n_actions)
        self.value_head = nn.Linear(hidden_size, 1)

    def forward(self, x: torch.Tensor):
        h = self.trunk(x)
        return self.action_head(h), self.value_head(h).squeeze(-1)


class MlpStrategy(Strategy):
    """Numpy-facing wrapper around a trained policy network."""

    kind = "parametric-stochastic"

    def __init__(self, net: PolicyNet, features: str, feature_dim: int, n_actions: int):
        self.net = net
        self.features = features
        self.feature_dim = feature_dim
        self.n_actions = n_actions

    @property
    def on_states(self) -> bool:
        return self.features == "state"

    @property
    def on_belief(self) -> bool:
        return self.features == "belief"

    def _vector(self, info) -> np.ndarray:
        if isinstance(info, Belief):
            return np.asarray(info.probs)
        if np.isscalar(info) or isinstance(info, (int, np.integer)):
            out = np.zeros(self.feature_dim)
            out[int(info)] = 1.0
            return out
        return np.asarray(info, dtype=np.float64)

    def batch_distribution(self, batch) -> np.ndarray:
        batch = np.asarray(batch)
        if batch.ndim == 1 and self.features in ("state", "observation"):
            x = np.zeros((len(batch), self.feature_dim))
            x[np.arange(len(batch)), batch.astype(int)] = 1.0
        else:
            x = batch.astype(np.float64)
        with torch.no_grad():
            logits, _ = self.net(torch.from_numpy(x))
            return torch.softmax(logits, dim=-1).numpy()

    def distribution(self, info) -> np.ndarray:
        return self.batch_distribution(self._vector(info)[None, :])[0]

    def to_tabular(self, n_states: int) -> TabularStrategy:
        if self.features != "state":
            raise TypeError("only state-feature policies project onto a state table")
        return TabularStrategy(self.batch_distribution(np.arange(n_states)))


def ppo_loss(net: PolicyNet, batch: dict, clip_range: float,
             entropy_coef: float, value_coef: float) -> torch.Tensor:
    """Clipped surrogate minus entropy bonus plus weighted value error."""
    logits, values = net(batch["obs"])
    log_probs = torch.log_softmax(logits, dim=-1)
    taken = log_probs.gather(1, batch["actions"][:, None]).squeeze(1)
    ratio = torch.exp(taken - batch["old_log_probs"])
    adv = batch["advantages"]
    unclipped = ratio * adv
    clipped = torch.clamp(ratio, 1.0 - clip_range, 1.0 + clip_range) * adv
    policy_loss = -torch.minimum(unclipped, clipped).mean()
    entropy = -(log_probs.exp() * log_probs).sum(dim=-1).mean()
    value_loss = ((values - batch["returns"]) ** 2).mean()
    return policy_loss - entropy_coef * entropy + value_coef * value_loss


def _gae(rewards, values, dones, last_value, gamma, lam):
    t_max = len(rewards)
    adv = np.zeros(t_max)
    running = 0.0
    for t in range(t_max - 1, -1, -1):
        next_value = last_value if t == t_max - 1 else values[t + 1]
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        running = delta + gamma * lam * nonterminal * running
        adv[t] = running
    return adv, adv + values


def _collect(sampler: EpisodeSampler, net: PolicyNet, steps: int,
             rng: np.random.Generator, obs: np.ndarray):
    obs_buf = np.empty((steps, sampler.feature_dim))
    act_buf = np.empty(steps, dtype=np.int64)
    rew_buf = np.empty(steps)
    done_buf = np.empty(steps)
    val_buf = np.empty(steps)
    logp_buf = np.empty(steps)
    for t in range(steps):
        with torch.no_grad():
            logits, value = net(torch.from_numpy(obs[None, :]))
            probs = torch.softmax(logits, dim=-1).numpy()[0]
        action = int(rng.choice(len(probs), p=probs))
        obs_buf[t] = obs
        act_buf[t] = action
        val_buf[t] = float(value[0])
        logp_buf[t] = float(np.log(probs[action] + 1e-300))
        nxt, reward, done = sampler.step(action)
        rew_buf[t] = reward
        done_buf[t] = float(done)
        obs = sampler.reset() if done else nxt
    with torch.no_grad():
        _, last_value = net(torch.from_numpy(obs[None, :]))
    return {
        "obs": obs_buf, "actions": act_buf, "rewards": rew_buf,
        "dones": done_buf, "values": val_buf, "log_probs": logp_buf,
        "last_value": float(last_value[0]),
    }, obs


def evaluate_strategy(sampler_like: EpisodeSampler, strategy: Strategy,
                      n_episodes: int, rng: np.random.Generator):
    """Mean and stddev of episode returns under a fresh sampler stream."""
    sampler = EpisodeSampler(sampler_like.kernel, sampler_like.attacker,
                             sampler_like.features, sampler_like.max_steps, rng)
    totals = []
    for _ in range(n_episodes):
        obs = sampler.reset()
        total = 0.0
        discount = 1.0
        done = False
        while not done:
            action = int(rng.choice(
                strategy.n_actions, p=strategy.distribution(obs)))
            obs, reward, done = sampler.step(action)
            total += discount * reward
            discount *= sampler.kernel.discount
        totals.append(total)
    totals = np.asarray(totals)
    return float(totals.mean()), float(totals.std())


@dataclass
class PgResult:
    strategy: MlpStrategy
    curve: list
    final_mean: float
    final_stddev: float


def pg_train(sampler: EpisodeSampler, params: PgParams = PgParams()) -> PgResult:
    """Train a stochastic policy with PPO on an episode sampler.

    Evaluation episodes between updates run on a separate sampler whose
    RNG stream is spawned from the training seed, so training and
    evaluation randomness never interleave.  A non-finite loss aborts
    with the offending update index.
    """
    torch.manual_seed(params.seed)
    seed_seq = np.random.SeedSequence(params.seed)
    action_stream, eval_stream = seed_seq.spawn(2)
    action_rng = np.random.default_rng(action_stream)
    eval_rng = np.random.default_rng(eval_stream)

    net = PolicyNet(sampler.feature_dim, sampler.n_actions,
                    params.hidden_size, params.hidden_layers)
    optimizer = torch.optim.Adam(net.parameters(), lr=params.learning_rate)
    strategy = MlpStrategy(net, sampler.features, sampler.feature_dim, sampler.n_actions)

    curve = []
    obs = sampler.reset()
    final_mean, final_std = float("nan"), float("nan")
    for update in range(params.updates):
        batch_np, obs = _collect(sampler, net, params.steps_per_update, action_rng, obs)
        adv, returns = _gae(batch_np["rewards"], batch_np["values"], batch_np["dones"],
                            batch_np["last_value"], params.gamma, params.gae_lambda)
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        tensors = {
            "obs": torch.from_numpy(batch_np["obs"]),
            "actions": torch.from_numpy(batch_np["actions"]),
            "old_log_probs": torch.from_numpy(batch_np["log_probs"]),
            "advantages": torch.from_numpy(adv),
            "returns": torch.from_numpy(returns),
        }
        n = params.steps_per_update
        for _ in range(params.epochs):
            order = action_rng.permutation(n)
            for start in range(0, n, params.batch_size):
                idx = torch.from_numpy(order[start:start + params.batch_size])
                minibatch = {k: v[idx] for k, v in tensors.items()}
                loss = ppo_loss(net, minibatch, params.clip_range,
                                params.entropy_coef, params.value_coef)
                if not torch.isfinite(loss):
                    raise NonFiniteLoss(update)
                optimizer.zero_grad()
                loss.backward()
                nn.utils.clip_grad_norm_(net.parameters(), params.max_grad_norm)
                optimizer.step()
        final_mean, final_std = evaluate_strategy(
            sampler, strategy, params.eval_episodes, eval_rng)
        curve.append(CurveRow(0.0, update, "eval_return", final_mean, final_std))

    return PgResult(strategy=strategy, curve=curve,
                    final_mean=final_mean, final_stddev=final_std)
