"""Optimal-stopping models over intrusion flows: hand-checked entries and invariants."""

import numpy as np
import pytest

from secsim.errors import InvalidConfig
from secsim.flow import (
    FlowGameConfig,
    FlowPomdpConfig,
    build_flow_game,
    build_flow_pomdp,
    default_game_observation,
    default_pomdp_observation,
    flow_attacker,
    threshold_strategy,
)
from secsim.kernel import Belief, validate_kernel


def state_index(mode: int, level: int) -> int:
    return 2 * (level - 1) + mode


# ---------------------------------------------------------------------------
# single-agent stopping model


def test_pomdp_layout_and_initial_belief():
    k = build_flow_pomdp(FlowPomdpConfig(stops=3))
    assert k.n_states == 7
    assert k.terminal_index == 6
    assert k.states[state_index(0, 3)] == "no_intrusion_l3"
    assert k.states[state_index(1, 1)] == "intrusion_l1"
    assert k.defender_actions == ("continue", "stop")
    expected = np.zeros(7)
    expected[state_index(0, 3)] = 1.0
    np.testing.assert_array_equal(k.initial_belief, expected)
    assert validate_kernel(k).violations == ()


def test_pomdp_last_stop_terminates():
    k = build_flow_pomdp(FlowPomdpConfig(stops=3))
    stop = k.defender_actions.index("stop")
    for mode in (0, 1):
        row = k.transition[state_index(mode, 1), stop, 0]
        assert row[k.terminal_index] == 1.0
        assert row.sum() == 1.0


def test_pomdp_stop_above_level_one_decrements_and_may_start_intrusion():
    p = 0.01
    k = build_flow_pomdp(FlowPomdpConfig(stops=3, intrusion_prob=p))
    stop = k.defender_actions.index("stop")
    row = k.transition[state_index(0, 2), stop, 0]
    assert row[state_index(1, 1)] == pytest.approx(p, abs=0)
    assert row[state_index(0, 1)] == pytest.approx(1 - p, abs=0)
    assert row.sum() == pytest.approx(1.0, abs=1e-15)


def test_pomdp_continue_keeps_level():
    p = 0.25
    k = build_flow_pomdp(FlowPomdpConfig(stops=2, intrusion_prob=p))
    cont = k.defender_actions.index("continue")
    row = k.transition[state_index(0, 2), cont, 0]
    assert row[state_index(1, 2)] == p
    assert row[state_index(0, 2)] == 1 - p


def test_pomdp_intrusion_mode_is_absorbing():
    # once started, the intrusion never reverts to a no-intrusion state
    k = build_flow_pomdp(FlowPomdpConfig(stops=4, intrusion_prob=0.3))
    quiet = [state_index(0, l) for l in range(1, 5)]
    for level in range(1, 5):
        for a in range(2):
            row = k.transition[state_index(1, level), a, 0]
            assert row[quiet].sum() == 0.0


def test_pomdp_reward_entries():
    # single stop left, R_sla = 1, R_int = -10: continuing under intrusion
    # nets 1 - 10 = -9
    k = build_flow_pomdp(FlowPomdpConfig(stops=1, sla_reward=1.0,
                                         intrusion_penalty=-10.0,
                                         stop_reward=5.0))
    cont = k.defender_actions.index("continue")
    stop = k.defender_actions.index("stop")
    assert k.reward[state_index(1, 1), cont, 0] == -9.0
    assert k.reward[state_index(0, 1), cont, 0] == 1.0
    assert k.reward[state_index(0, 1), stop, 0] == 0.0
    assert k.reward[state_index(1, 1), stop, 0] == 5.0
    assert np.all(k.reward[k.terminal_index] == 0.0)


def test_pomdp_rewards_scale_with_total_budget():
    k = build_flow_pomdp(FlowPomdpConfig(stops=4, sla_reward=1.0,
                                         intrusion_penalty=-10.0,
                                         stop_reward=6.0))
    cont = k.defender_actions.index("continue")
    stop = k.defender_actions.index("stop")
    for level in range(1, 5):
        assert k.reward[state_index(1, level), cont, 0] == 1.0 - 10.0 / 4
        assert k.reward[state_index(1, level), stop, 0] == 6.0 / 4
        assert k.reward[state_index(0, level), cont, 0] == 1.0


def test_pomdp_observation_rows_shared_per_mode():
    k = build_flow_pomdp(FlowPomdpConfig(stops=3, n_bins=50))
    table = default_pomdp_observation(50)
    for level in range(1, 4):
        np.testing.assert_array_equal(k.observation_model[state_index(0, level)], table[0])
        np.testing.assert_array_equal(k.observation_model[state_index(1, level)], table[1])
    # the terminal state emits like a quiet system
    np.testing.assert_array_equal(k.observation_model[k.terminal_index], table[0])


def test_pomdp_metadata():
    k = build_flow_pomdp(FlowPomdpConfig(stops=2, n_bins=10))
    assert k.metadata["family"] == "flow-pomdp"
    assert tuple(k.metadata["intrusion_states"]) == (state_index(1, 1), state_index(1, 2))
    assert k.metadata["binning"]["bin_count"] == 10
    assert k.observations[0] == "count_0"


def test_pomdp_config_rejected():
    with pytest.raises(InvalidConfig):
        FlowPomdpConfig(stops=0).validate()
    with pytest.raises(InvalidConfig):
        FlowPomdpConfig(intrusion_prob=0.0).validate()
    with pytest.raises(InvalidConfig):
        FlowPomdpConfig(intrusion_prob=1.5).validate()
    with pytest.raises(InvalidConfig):
        FlowPomdpConfig(intrusion_penalty=1.0).validate()
    with pytest.raises(InvalidConfig):
        FlowPomdpConfig(stop_reward=-2.0).validate()
    with pytest.raises(InvalidConfig):
        FlowPomdpConfig(gamma=1.0).validate()
    with pytest.raises(InvalidConfig):
        FlowPomdpConfig(n_bins=1).validate()
    with pytest.raises(InvalidConfig):
        build_flow_pomdp(FlowPomdpConfig(obs=np.ones((3, 100))))


def test_pomdp_random_configs_validate(rng):
    for _ in range(60):
        config = FlowPomdpConfig(
            stops=int(rng.integers(1, 6)),
            intrusion_prob=float(rng.uniform(0.001, 0.999)),
            sla_reward=float(rng.uniform(0.1, 5.0)),
            stop_reward=float(rng.uniform(0.1, 10.0)),
            intrusion_penalty=float(-rng.uniform(0.1, 20.0)),
            n_bins=int(rng.integers(2, 40)),
            gamma=float(rng.uniform(0.5, 0.999)),
        )
        assert validate_kernel(build_flow_pomdp(config)).violations == ()


# ---------------------------------------------------------------------------
# two-player stopping game


def test_game_attacker_stop_starts_then_aborts():
    k = build_flow_game(FlowGameConfig(stops=3))
    stop = 1
    cont = 0
    # from a quiet state the attacker's stop starts the intrusion
    row = k.transition[state_index(0, 3), cont, stop]
    assert row[state_index(1, 3)] == 1.0
    # a second attacker stop abandons the intrusion and ends the episode
    row = k.transition[state_index(1, 3), cont, stop]
    assert row[k.terminal_index] == 1.0
    # abandoning pays nothing
    assert k.reward[state_index(1, 3), cont, stop] == 0.0
    assert k.reward[state_index(1, 3), stop, stop] == 0.0


def test_game_stop_success_split():
    phi = (0.3, 0.6, 0.9)
    k = build_flow_game(FlowGameConfig(stops=3, stop_success=phi))
    # phi is indexed by stops already taken: level 3 means none taken
    for level, taken in ((3, 0), (2, 1), (1, 2)):
        row = k.transition[state_index(1, level), 0, 0]
        assert row[k.terminal_index] == pytest.approx(phi[taken], abs=0)
        assert row[state_index(1, level)] == pytest.approx(1 - phi[taken], abs=0)


def test_game_defender_stop_during_intrusion():
    phi = (0.2, 0.5, 0.8)
    k = build_flow_game(FlowGameConfig(stops=3, stop_success=phi))
    # stopping at level 3 succeeds w.p. phi[0]; otherwise the intrusion
    # continues one level down
    row = k.transition[state_index(1, 3), 1, 0]
    assert row[k.terminal_index] == pytest.approx(phi[0], abs=0)
    assert row[state_index(1, 2)] == pytest.approx(1 - phi[0], abs=0)
    # the last stop always ends the episode
    row = k.transition[state_index(1, 1), 1, 0]
    assert row[k.terminal_index] == 1.0


def test_game_reward_entries():
    # stop cost -3 spread over level 3 gives -1; stop reward 10 at level 2
    # gives +5; an uninterrupted intrusion interval costs the full penalty
    k = build_flow_game(FlowGameConfig(stops=3, stop_cost=-3.0,
                                       stop_reward=10.0,
                                       intrusion_penalty=-10.0))
    assert k.reward[state_index(0, 3), 1, 0] == -1.0
    assert k.reward[state_index(1, 2), 1, 0] == 5.0
    assert k.reward[state_index(1, 2), 0, 0] == -10.0
    assert k.reward[state_index(0, 2), 0, 0] == 0.0
    assert np.all(k.reward[k.terminal_index] == 0.0)


def test_game_zero_sum_contract():
    # rewards are stated for the defender; the attacker receives the
    # negation, which the kernel records as a flag rather than a second table
    k = build_flow_game(FlowGameConfig())
    assert k.metadata["zero_sum"] is True
    assert k.metadata["family"] == "flow-game"


def test_game_all_zero_success_makes_intrusion_absorbing():
    k = build_flow_game(FlowGameConfig(stops=2, stop_success=(0.0, 0.0)))
    src = state_index(1, 2)
    row = k.transition[src, 0, 0]
    assert row[src] == 1.0
    assert row[k.terminal_index] == 0.0


def test_game_config_rejected():
    with pytest.raises(InvalidConfig):
        FlowGameConfig(stop_success=(0.9, 0.6, 0.3)).validate()
    with pytest.raises(InvalidConfig):
        FlowGameConfig(stops=2, stop_success=(0.3, 0.6, 0.9)).validate()
    with pytest.raises(InvalidConfig):
        FlowGameConfig(stop_success=(0.3, 0.6, 1.5)).validate()
    with pytest.raises(InvalidConfig):
        FlowGameConfig(stop_cost=1.0).validate()
    with pytest.raises(InvalidConfig):
        FlowGameConfig(source_max=0).validate()


def test_game_random_configs_validate(rng):
    for _ in range(60):
        stops = int(rng.integers(1, 5))
        phi = np.sort(rng.uniform(0.0, 1.0, size=stops))
        config = FlowGameConfig(
            stops=stops,
            stop_success=tuple(float(v) for v in phi),
            stop_reward=float(rng.uniform(0.1, 10.0)),
            intrusion_penalty=float(-rng.uniform(0.1, 20.0)),
            stop_cost=float(-rng.uniform(0.1, 5.0)),
            n_bins=int(rng.integers(2, 30)),
            gamma=float(rng.uniform(0.5, 0.999)),
        )
        assert validate_kernel(build_flow_game(config)).violations == ()


def test_game_observation_binning():
    k = build_flow_game(FlowGameConfig(n_bins=40, source_max=8000))
    table = default_game_observation(40, 8000)
    np.testing.assert_array_equal(k.observation_model[state_index(0, 3)], table[0])
    np.testing.assert_array_equal(k.observation_model[state_index(1, 3)], table[1])
    assert k.metadata["binning"]["bin_count"] == 40
    assert k.metadata["binning"]["source_range"] == [0, 8000]
    np.testing.assert_allclose(k.observation_model.sum(axis=1), 1.0, atol=1e-12)


# ---------------------------------------------------------------------------
# strategies over the flow models


def test_threshold_strictness():
    k = build_flow_pomdp(FlowPomdpConfig(stops=1))
    strat = threshold_strategy(0.75, k)
    stop = k.defender_actions.index("stop")
    cont = k.defender_actions.index("continue")
    def belief(intrusion_mass):
        probs = np.zeros(k.n_states)
        probs[state_index(1, 1)] = intrusion_mass
        probs[state_index(0, 1)] = 1 - intrusion_mass
        return Belief(probs)

    assert strat.decide(belief(0.75)) == cont
    assert strat.decide(belief(0.7500001)) == stop
    assert threshold_strategy(0.5, k).decide(belief(0.7500001)) == stop
    assert threshold_strategy(0.5, k).decide(belief(0.5)) == cont


def test_threshold_rejects_bad_alpha():
    with pytest.raises(ValueError):
        threshold_strategy(-0.1)
    with pytest.raises(ValueError):
        threshold_strategy(1.1)


def test_flow_attacker_kinds():
    k = build_flow_game(FlowGameConfig(stops=2, stop_success=(0.4, 0.8)))
    intrusion = set(k.metadata["intrusion_states"])
    never = flow_attacker(k, "never").table
    assert np.all(never[:, 0] == 1.0)
    immediate = flow_attacker(k, "immediate").table
    for s in range(k.n_states):
        expected = 0 if s in intrusion else 1
        assert immediate[s, expected] == 1.0
    hit_and_run = flow_attacker(k, "hit-and-run").table
    assert np.all(hit_and_run[:, 1] == 1.0)
    with pytest.raises(ValueError):
        flow_attacker(k, "sneaky")
