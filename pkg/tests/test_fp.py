"""Fictitious play: convergence on small games and responder plumbing."""

import numpy as np
import pytest

from secsim.flow import FlowGameConfig, build_flow_game
from secsim.kernel import matrix_game_kernel
from secsim.learning import FictitiousPlayParams, SpsaParams, fictitious_play
from secsim.solve import best_response, exploitability
from secsim.strategies import TabularStrategy

PENNIES = np.array([[1.0, -1.0], [-1.0, 1.0]])


def test_matching_pennies_averages_approach_uniform():
    kernel = matrix_game_kernel(PENNIES)
    result = fictitious_play(kernel, FictitiousPlayParams(rounds=600))
    np.testing.assert_allclose(result.defender.table[0], [0.5, 0.5], atol=0.1)
    np.testing.assert_allclose(result.attacker.table[0], [0.5, 0.5], atol=0.1)
    values = result.exploitability_values
    assert values[-1] < 0.15
    assert values[-1] < values[0] / 2
    assert result.responder == "exact"


def test_pure_saddle_point_found_quickly():
    # (row 0, col 0) is a saddle: value 1
    kernel = matrix_game_kernel(np.array([[1.0, 2.0], [0.0, 5.0]]))
    result = fictitious_play(kernel, FictitiousPlayParams(rounds=200))
    assert result.defender.table[0, 0] > 0.9
    assert result.attacker.table[0, 0] > 0.9
    assert result.exploitability_values[-1] < 0.05


def test_first_round_average_is_best_response_to_uniform():
    kernel = matrix_game_kernel(np.array([[1.0, -2.0], [0.5, 0.0]]))
    result = fictitious_play(kernel, FictitiousPlayParams(rounds=1))
    br_d, _ = best_response(kernel, TabularStrategy.uniform(2, 2), "defender")
    br_a, _ = best_response(kernel, TabularStrategy.uniform(2, 2), "attacker")
    np.testing.assert_array_equal(result.defender.table, br_d.table)
    np.testing.assert_array_equal(result.attacker.table, br_a.table)


def test_averages_stay_distributions():
    kernel = matrix_game_kernel(PENNIES)
    result = fictitious_play(kernel, FictitiousPlayParams(rounds=7))
    for table in (result.defender.table, result.attacker.table):
        np.testing.assert_allclose(table.sum(axis=1), 1.0, atol=1e-12)
        assert (table >= 0).all()


def test_record_every_thins_the_curve():
    kernel = matrix_game_kernel(PENNIES)
    result = fictitious_play(kernel, FictitiousPlayParams(rounds=10, record_every=5))
    assert [row.round_or_update for row in result.curve] == [1, 5, 10]
    row = result.curve[0]
    assert row.metric_name == "exploitability"
    assert row.wall_seconds == 0.0
    assert row.stddev == 0.0
    # the recorded gap is the exact exploitability of the averages at the end
    final = exploitability(kernel, result.defender, result.attacker)
    assert result.curve[-1].mean == pytest.approx(final, abs=1e-12)


def test_auto_responder_refuses_large_state_space():
    kernel = build_flow_game(FlowGameConfig())
    with pytest.raises(ValueError):
        fictitious_play(kernel, FictitiousPlayParams(rounds=1, auto_exact_limit=3))
    with pytest.raises(ValueError):
        fictitious_play(kernel, FictitiousPlayParams(rounds=1, responder="magic"))


def test_threshold_responder_on_flow_game():
    kernel = build_flow_game(FlowGameConfig())
    params = FictitiousPlayParams(
        rounds=2, responder="spsa-threshold", seed=3,
        spsa=SpsaParams(iterations=4), episodes_per_eval=2,
        projection_episodes=40, max_steps=20)
    result = fictitious_play(kernel, params)
    assert result.responder == "spsa-threshold"
    np.testing.assert_allclose(result.defender.table.sum(axis=1), 1.0, atol=1e-12)
    assert len(result.curve) == 2
    assert all(row.mean >= -1e-9 for row in result.curve)


def test_threshold_responder_deterministic_in_seed():
    kernel = build_flow_game(FlowGameConfig())
    params = FictitiousPlayParams(
        rounds=1, responder="spsa-threshold", seed=11,
        spsa=SpsaParams(iterations=3), episodes_per_eval=2,
        projection_episodes=20, max_steps=15)
    a = fictitious_play(kernel, params)
    b = fictitious_play(kernel, params)
    np.testing.assert_array_equal(a.defender.table, b.defender.table)
    assert a.exploitability_values[0] == b.exploitability_values[0]


def test_pg_responder_smoke():
    from secsim.learning.pg import PgParams

    kernel = matrix_game_kernel(PENNIES)
    params = FictitiousPlayParams(
        rounds=1, responder="pg", seed=0, max_steps=8,
        pg_params=PgParams(learning_rate=3e-3, hidden_size=8,
                           steps_per_update=64, batch_size=16, updates=1,
                           epochs=2, eval_episodes=2))
    result = fictitious_play(kernel, params)
    assert result.responder == "pg"
    assert result.defender.table.shape == (2, 2)
    np.testing.assert_allclose(result.defender.table.sum(axis=1), 1.0, atol=1e-9)
