"""Policy-gradient training: loss gradients, entropy pressure, learning."""

import numpy as np
import pytest
import torch

from secsim.errors import NonFiniteLoss
from secsim.kernel import ModelKernel
from secsim.learning.pg import (
    MlpStrategy,
    PgParams,
    PolicyNet,
    evaluate_strategy,
    pg_train,
    ppo_loss,
)
from secsim.simulate import EpisodeSampler
from secsim.strategies import Strategy


def bandit_kernel(rewards=(1.0, 0.0), gamma=0.99, n_states=2):
    """Every state is the same bandit; action i pays rewards[i]."""
    n_actions = len(rewards)
    transition = np.full((n_states, n_actions, 1, n_states), 1.0 / n_states)
    reward = np.tile(np.asarray(rewards)[None, :, None], (n_states, 1, 1))
    return ModelKernel(
        states=tuple(f"s{i}" for i in range(n_states)),
        defender_actions=tuple(f"a{i}" for i in range(n_actions)),
        attacker_actions=("none",),
        observations=tuple(f"s{i}" for i in range(n_states)),
        transition=transition,
        reward=reward,
        observation_model=np.eye(n_states),
        discount=gamma,
        initial_belief=np.full(n_states, 1.0 / n_states),
        terminal_state=None,
    )


def random_batch(net, n=24, feature_dim=3, n_actions=2, seed=0):
    """A batch whose old log-probs come from a different network."""
    rng = np.random.default_rng(seed)
    torch.manual_seed(seed + 1)
    other = PolicyNet(feature_dim, n_actions, hidden_size=8)
    obs = torch.from_numpy(rng.normal(size=(n, feature_dim)))
    actions = torch.from_numpy(rng.integers(0, n_actions, size=n))
    with torch.no_grad():
        logits, _ = other(obs)
        old = torch.log_softmax(logits, dim=-1).gather(1, actions[:, None]).squeeze(1)
    return {
        "obs": obs,
        "actions": actions,
        "old_log_probs": old,
        "advantages": torch.from_numpy(rng.normal(size=n)),
        "returns": torch.from_numpy(rng.normal(size=n)),
    }


def test_ppo_loss_gradient_matches_finite_differences():
    torch.manual_seed(0)
    net = PolicyNet(3, 2, hidden_size=8)
    batch = random_batch(net)

    def loss_value():
        with torch.no_grad():
            return float(ppo_loss(net, batch, clip_range=0.2,
                                  entropy_coef=2e-4, value_coef=0.102))

    loss = ppo_loss(net, batch, clip_range=0.2, entropy_coef=2e-4,
                    value_coef=0.102)
    net.zero_grad()
    loss.backward()
    params = [p for p in net.parameters()]
    grads = [p.grad.clone() for p in params]

    rng = np.random.default_rng(3)
    eps = 1e-6
    checked = 0
    while checked < 20:
        p_idx = int(rng.integers(len(params)))
        flat = params[p_idx].data.view(-1)
        c_idx = int(rng.integers(flat.numel()))
        original = float(flat[c_idx])
        flat[c_idx] = original + eps
        up = loss_value()
        flat[c_idx] = original - eps
        down = loss_value()
        flat[c_idx] = original
        fd = (up - down) / (2 * eps)
        analytic = float(grads[p_idx].view(-1)[c_idx])
        assert abs(analytic - fd) <= 1e-4 * max(1.0, abs(fd))
        checked += 1


def test_ppo_loss_entropy_term_is_linear():
    torch.manual_seed(1)
    net = PolicyNet(3, 2, hidden_size=8)
    batch = random_batch(net, seed=5)
    with torch.no_grad():
        base = ppo_loss(net, batch, 0.2, 0.0, 0.102)
        bumped = ppo_loss(net, batch, 0.2, 10.0, 0.102)
    with torch.no_grad():
        logits, _ = net(batch["obs"])
        logp = torch.log_softmax(logits, dim=-1)
        entropy = float(-(logp.exp() * logp).sum(dim=-1).mean())
    assert float(base - bumped) == pytest.approx(10.0 * entropy, rel=1e-12)


def test_ppo_loss_clip_bounds_the_ratio():
    torch.manual_seed(2)
    net = PolicyNet(3, 2, hidden_size=8)
    batch = random_batch(net, seed=9)
    # push old log-probs far below current: ratios blow up, clipping caps
    # the surrogate at (1 + clip) * adv for positive advantages
    batch["old_log_probs"] = batch["old_log_probs"] - 50.0
    batch["advantages"] = torch.abs(batch["advantages"])
    with torch.no_grad():
        loss = ppo_loss(net, batch, 0.2, 0.0, 0.0)
    expected = -(1.2 * batch["advantages"]).mean()
    assert float(loss) == pytest.approx(float(expected), rel=1e-12)


def test_strong_entropy_bonus_keeps_policy_uniform(rng):
    kernel = bandit_kernel()
    sampler = EpisodeSampler(kernel, None, "state", 32, rng)
    params = PgParams(learning_rate=3e-3, hidden_size=16, steps_per_update=128,
                      batch_size=32, updates=4, epochs=4, entropy_coef=10.0,
                      eval_episodes=2, seed=0)
    result = pg_train(sampler, params)
    table = result.strategy.to_tabular(kernel.n_states).table
    np.testing.assert_allclose(table, 0.5, atol=0.1)


def test_learns_two_state_bandit(rng):
    kernel = bandit_kernel()
    sampler = EpisodeSampler(kernel, None, "state", 32, rng)
    params = PgParams(learning_rate=3e-3, hidden_size=32, steps_per_update=256,
                      batch_size=32, updates=20, epochs=8, entropy_coef=2e-4,
                      eval_episodes=4, seed=0)
    result = pg_train(sampler, params)
    table = result.strategy.to_tabular(kernel.n_states).table
    assert (table[:, 0] >= 0.95).all()
    assert len(result.curve) == params.updates
    assert result.curve[-1].metric_name == "eval_return"


def test_training_deterministic_in_seed():
    kernel = bandit_kernel()
    tables = []
    means = []
    for _ in range(2):
        sampler = EpisodeSampler(kernel, None, "state", 16,
                                 np.random.default_rng(5))
        params = PgParams(learning_rate=1e-3, hidden_size=8, steps_per_update=64,
                          batch_size=16, updates=2, epochs=2, eval_episodes=3,
                          seed=12)
        result = pg_train(sampler, params)
        tables.append(result.strategy.to_tabular(kernel.n_states).table)
        means.append(result.final_mean)
    np.testing.assert_array_equal(tables[0], tables[1])
    assert means[0] == means[1]


def test_mlp_strategy_tabular_projection():
    torch.manual_seed(4)
    net = PolicyNet(3, 2, hidden_size=8)
    strategy = MlpStrategy(net, "state", 3, 2)
    table = strategy.to_tabular(3).table
    np.testing.assert_allclose(table.sum(axis=1), 1.0, atol=1e-12)
    for s in range(3):
        np.testing.assert_allclose(strategy.distribution(s), table[s], atol=1e-15)
    belief_strategy = MlpStrategy(net, "belief", 3, 2)
    with pytest.raises(TypeError):
        belief_strategy.to_tabular(3)
    assert strategy.on_states and not strategy.on_belief


def test_non_finite_loss_aborts(rng):
    kernel = bandit_kernel(rewards=(np.nan, 0.0))
    sampler = EpisodeSampler(kernel, None, "state", 16, rng)
    params = PgParams(steps_per_update=32, batch_size=16, updates=1, epochs=1,
                      eval_episodes=1, seed=0)
    with pytest.raises(NonFiniteLoss):
        pg_train(sampler, params)


def test_evaluate_strategy_exact_on_deterministic_policy(rng):
    kernel = bandit_kernel(rewards=(1.0, 0.0), gamma=0.5)

    class Always0(Strategy):
        n_actions = 2

        def distribution(self, info):
            return np.array([1.0, 0.0])

    sampler = EpisodeSampler(kernel, None, "state", 5, rng)
    mean, std = evaluate_strategy(sampler, Always0(), 4, rng)
    assert mean == pytest.approx(1 + 0.5 + 0.25 + 0.125 + 0.0625, abs=1e-12)
    assert std == 0.0
