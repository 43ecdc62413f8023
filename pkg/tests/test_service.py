"""Episode debugger HTTP service."""

import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from secsim.flow import threshold_strategy
from secsim.kernel import Belief, matrix_game_kernel
from secsim.registry import build_model
from secsim.service import create_app
from secsim.solve import belief_update
from secsim.strategies import TabularStrategy

FLOW = {"model": "flow-pomdp",
        "model_params": {"stops": 2, "intrusion_prob": 0.2, "n_bins": 5}}


@pytest.fixture()
def client():
    with TestClient(create_app()) as c:
        yield c


def create(client, **payload):
    response = client.post("/sessions", json=payload)
    assert response.status_code == 201, response.text
    return response.json()


# ---------------------------------------------------------------------------
# Discovery and session creation


def test_models_endpoint_lists_builders(client):
    body = client.get("/models").json()
    names = [m["name"] for m in body["models"]]
    assert "flow-pomdp" in names and "segmentation-game" in names
    flow = next(m for m in body["models"] if m["name"] == "flow-pomdp")
    assert flow["params"]["stops"] == 3
    assert "null" in flow["attackers"]
    game = next(m for m in body["models"] if m["name"] == "flow-game")
    assert "hit-and-run" in game["attackers"]


def test_create_session_reports_spaces_and_initial_snapshot(client):
    body = create(client, **FLOW, seed=7)
    spaces = body["spaces"]
    assert spaces["defender_actions"] == ["continue", "stop"]
    assert spaces["terminal_state"] in spaces["states"]
    snap = body["snapshot"]
    assert snap["t"] == 1 and snap["done"] is False
    assert snap["observation"] is None and snap["reward"] is None
    assert snap["history"] == []
    assert snap["discounted_return"] == 0.0
    kernel = build_model(FLOW["model"], FLOW["model_params"])
    assert snap["belief"] == pytest.approx(kernel.initial_belief.tolist())
    assert snap["attacker_view"]["state_name"] == spaces["states"][snap["attacker_view"]["state"]]


def test_step_advances_time_and_accumulates_history(client):
    body = create(client, **FLOW, seed=3)
    sid = body["id"]
    snap = client.post(f"/sessions/{sid}/step",
                       json={"defender_action": "continue"}).json()
    assert snap["t"] == 2
    assert len(snap["history"]) == 1
    entry = snap["history"][0]
    assert entry["defender_action"] == 0
    assert isinstance(snap["observation"], int)
    assert snap["observation_name"] == body["spaces"]["observations"][snap["observation"]]
    assert snap["discounted_return"] == snap["reward"]
    # GET returns the same snapshot the step reported
    assert client.get(f"/sessions/{sid}").json() == snap


def test_index_and_name_forms_agree(client):
    a = create(client, **FLOW, seed=11)
    b = create(client, **FLOW, seed=11)
    snap_a = client.post(f"/sessions/{a['id']}/step",
                         json={"defender_action": 0}).json()
    snap_b = client.post(f"/sessions/{b['id']}/step",
                         json={"defender_action": "continue"}).json()
    for snap in (snap_a, snap_b):
        snap.pop("id")
    assert snap_a == snap_b


# ---------------------------------------------------------------------------
# Replay determinism


def play(client, sid, actions):
    snaps = []
    for action in actions:
        response = client.post(f"/sessions/{sid}/step",
                               json={"defender_action": action})
        assert response.status_code == 200, response.text
        snaps.append(response.json())
        if snaps[-1]["done"]:
            break
    return snaps


def test_same_seed_same_actions_replays_bit_identical(client):
    payload = {"model": "flow-game",
               "model_params": {"stops": 2, "stop_success": [0.4, 0.8],
                                "n_bins": 6},
               "attacker": "random", "seed": 42}
    first = create(client, **payload)
    second = create(client, **payload)
    actions = [0, 0, 1, 0, 0, 1, 0, 0]
    snaps_a = play(client, first["id"], actions)
    snaps_b = play(client, second["id"], actions)
    assert len(snaps_a) == len(snaps_b)
    for snap_a, snap_b in zip(snaps_a, snaps_b):
        snap_a.pop("id")
        snap_b.pop("id")
        assert snap_a == snap_b


def test_different_seeds_diverge(client):
    histories = []
    for seed in (0, 1):
        body = create(client, **FLOW, seed=seed)
        snaps = play(client, body["id"], [0] * 8)
        histories.append([(s["observation"], s["attacker_view"]["state"])
                          for s in snaps])
    assert histories[0] != histories[1]


def test_sessions_are_isolated(client):
    a = create(client, **FLOW, seed=0)
    b = create(client, **FLOW, seed=0)
    play(client, a["id"], [0, 0, 0])
    snap_b = client.get(f"/sessions/{b['id']}").json()
    assert snap_b["t"] == 1 and snap_b["history"] == []


# ---------------------------------------------------------------------------
# Belief fidelity: the published belief is exactly the Bayes filter applied
# to the published action/observation stream.


def test_belief_matches_client_side_filter(client):
    body = create(client, **FLOW, seed=19)
    kernel = build_model(FLOW["model"], FLOW["model_params"])
    attacker_rows = np.zeros((kernel.n_states, kernel.n_attacker_actions))
    attacker_rows[:, 0] = 1.0

    belief = kernel.initial_belief.copy()
    snaps = play(client, body["id"], [0, 0, 1, 0, 0, 0])
    for snap in snaps:
        entry = snap["history"][-1]
        marginal = belief @ attacker_rows
        belief = belief_update(Belief(belief), entry["defender_action"],
                               entry["observation"], kernel,
                               opponent_marginal=marginal).probs.copy()
        assert np.array_equal(np.asarray(snap["belief"]), belief)


# ---------------------------------------------------------------------------
# Error handling


def test_unknown_session_is_404(client):
    for method, url in [("get", "/sessions/nope"),
                        ("delete", "/sessions/nope"),
                        ("post", "/sessions/nope/step")]:
        response = getattr(client, method)(
            url, **({"json": {"defender_action": 0}} if method == "post" else {}))
        assert response.status_code == 404
        assert response.json()["error"] == "unknown-session"


def test_step_after_terminal_is_409(client):
    body = create(client, model="flow-pomdp",
                  model_params={"stops": 1, "n_bins": 4}, seed=0)
    sid = body["id"]
    snap = client.post(f"/sessions/{sid}/step", json={"defender_action": "stop"}).json()
    assert snap["done"] is True
    response = client.post(f"/sessions/{sid}/step", json={"defender_action": 0})
    assert response.status_code == 409
    assert response.json()["error"] == "session-done"
    assert client.get(f"/sessions/{sid}").json()["t"] == snap["t"]


@pytest.mark.parametrize("body", [
    {"defender_action": "detonate"},
    {"defender_action": 99},
    {"defender_action": -1},
    {"defender_action": True},
    {"defender_action": 0.5},
    {},
])
def test_illegal_actions_are_422(client, body):
    sid = create(client, **FLOW, seed=0)["id"]
    response = client.post(f"/sessions/{sid}/step", json=body)
    assert response.status_code == 422
    assert response.json()["error"] == "illegal-action"


def test_unknown_model_is_422(client):
    response = client.post("/sessions", json={"model": "nope"})
    assert response.status_code == 422
    assert response.json()["error"] == "unknown-model"

    response = client.post("/sessions", json={
        "model": "flow-pomdp", "model_params": {"bogus": 1}})
    assert response.status_code == 422
    assert response.json()["error"] == "unknown-model"


def test_invalid_attacker_specs_are_422(client):
    game = {"model": "flow-game", "model_params": {"n_bins": 4}}
    for attacker in ["bogus", 7,
                     {"kind": "tabular-on-state", "table": [[1.0, 0.0]]}]:
        response = client.post("/sessions", json={**game, "attacker": attacker})
        assert response.status_code == 422, attacker
        assert response.json()["error"] == "invalid-strategy"


def test_invalid_defender_spec_is_422(client):
    response = client.post("/sessions", json={**FLOW, "defender": "not-a-dict"})
    assert response.status_code == 422
    assert response.json()["error"] == "invalid-strategy"


def test_bad_seed_and_body_are_422(client):
    for seed in (-1, True, "x"):
        response = client.post("/sessions", json={**FLOW, "seed": seed})
        assert response.status_code == 422, seed
        assert response.json()["error"] == "invalid-request"
    response = client.post("/sessions", json=["not", "an", "object"])
    assert response.status_code == 422
    assert response.json()["error"] == "invalid-request"


# ---------------------------------------------------------------------------
# Kernel upload


def test_uploaded_kernel_plays_an_episode(client):
    kernel = matrix_game_kernel([[1.0, -1.0], [-1.0, 1.0]])
    body = create(client, kernel=kernel.to_dict(), seed=5)
    assert body["snapshot"]["model"] == "uploaded"
    assert body["spaces"]["states"] == ["play", "terminal"]
    snap = client.post(f"/sessions/{body['id']}/step",
                       json={"defender_action": "d0"}).json()
    # null attacker plays a0, so the defender collects payoffs[0, 0]
    assert snap["reward"] == 1.0
    assert snap["done"] is True
    assert snap["observation_name"] == "terminal"


def test_invalid_uploaded_kernel_returns_report(client):
    doc = matrix_game_kernel([[1.0, -1.0], [-1.0, 1.0]]).to_dict()
    doc["transition"][0][0][0][0] += 0.5
    response = client.post("/sessions", json={"kernel": doc})
    assert response.status_code == 422
    body = response.json()
    assert body["error"] == "invalid-kernel"
    assert body["report"], body
    assert {"kind", "index", "deviation"} <= set(body["report"][0])


def test_malformed_kernel_document_is_422(client):
    response = client.post("/sessions", json={"kernel": {"states": ["a"]}})
    assert response.status_code == 422
    assert response.json()["error"] == "unknown-model"
    assert "kernel rejected" in response.json()["detail"]


# ---------------------------------------------------------------------------
# Defender suggestions


def test_state_table_defender_suggests_actions(client):
    kernel = build_model(FLOW["model"], FLOW["model_params"])
    defender = TabularStrategy.deterministic(
        kernel.n_states, kernel.n_defender_actions,
        np.ones(kernel.n_states, dtype=np.int64))
    body = create(client, **FLOW, defender=defender.to_dict(), seed=0)
    assert body["snapshot"]["suggested"] == 1


def test_threshold_defender_suggests_from_belief(client):
    kernel = build_model(FLOW["model"], FLOW["model_params"])
    defender = threshold_strategy(0.0, kernel)
    body = create(client, **FLOW, defender=defender.to_dict(), seed=0)
    # initial belief has zero intrusion mass, which does not exceed 0.0
    assert body["snapshot"]["suggested"] == 0


def test_suggestion_absent_without_defender_and_after_done(client):
    body = create(client, model="flow-pomdp",
                  model_params={"stops": 1, "n_bins": 4}, seed=0)
    assert body["snapshot"]["suggested"] is None

    kernel = build_model("flow-pomdp", {"stops": 1, "n_bins": 4})
    defender = TabularStrategy.uniform(kernel.n_states, kernel.n_defender_actions)
    body = create(client, model="flow-pomdp", model_params={"stops": 1, "n_bins": 4},
                  defender=defender.to_dict(), seed=0)
    assert body["snapshot"]["suggested"] is not None
    snap = client.post(f"/sessions/{body['id']}/step",
                       json={"defender_action": "stop"}).json()
    assert snap["done"] is True and snap["suggested"] is None


# ---------------------------------------------------------------------------
# Lifecycle


def test_delete_drops_the_session(client):
    sid = create(client, **FLOW, seed=0)["id"]
    response = client.delete(f"/sessions/{sid}")
    assert response.status_code == 204
    assert client.get(f"/sessions/{sid}").status_code == 404


def test_idle_sessions_expire():
    with TestClient(create_app(ttl_seconds=0.0)) as client:
        sid = create(client, **FLOW, seed=0)["id"]
        time.sleep(0.01)
        assert client.get(f"/sessions/{sid}").status_code == 404
