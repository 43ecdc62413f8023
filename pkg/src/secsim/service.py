"""Episode debugger HTTP service.

Serves interactive episodes: the client plays the defender, the service
samples the attacker, advances the true state, and publishes both the
defender's view (belief, observation, reward) and the attacker's view
(true state) after every step.  Sessions are in-memory with an idle TTL;
all randomness comes from a per-session generator derived from the
client-supplied seed, so a session replayed with the same seed and the
same defender actions reproduces bit-identical snapshots.

Endpoints:
  POST   /sessions            create a session
  POST   /sessions/{id}/step  body {"defender_action": <index-or-name>}
  GET    /sessions/{id}       snapshot including full history
  DELETE /sessions/{id}       drop a session
  GET    /models              registered model builders and parameter defaults

Errors use {"error": <code>, "detail": <text>} with status 404 (unknown
session), 409 (session done), 422 (illegal action or bad specification).
"""

from __future__ import annotations

import threading
import time
import uuid
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .errors import (
    ConfigError, FileFormat, IllegalAction, InvalidConfig, SecsimError,
    SessionDone, UnknownSession,
)
from .kernel import Belief, ModelKernel, validate_kernel
from .registry import (
    ATTACKER_NAMES, MODEL_NAMES, attacker_strategy, build_model, model_param_schema,
)
from .solve import belief_update
from .strategies import Strategy, TabularStrategy, strategy_from_dict

DEFAULT_TTL_SECONDS = 30 * 60


class _ServiceError(Exception):
    """Internal carrier mapping domain errors onto HTTP responses."""

    def __init__(self, status: int, code: str, detail: str, extra: Optional[dict] = None):
        super().__init__(detail)
        self.status = status
        self.code = code
        self.detail = detail
        self.extra = extra or {}

    def response(self) -> JSONResponse:
        body = {"error": self.code, "detail": self.detail, **self.extra}
        return JSONResponse(status_code=self.status, content=body)


def _attacker_table(kernel: ModelKernel, attacker: Optional[Strategy]) -> np.ndarray:
    if attacker is None:
        table = np.zeros((kernel.n_states, kernel.n_attacker_actions))
        table[:, 0] = 1.0
        return table
    if hasattr(attacker, "table") and getattr(attacker, "on_states", False):
        return np.asarray(attacker.table, dtype=np.float64)
    raise _ServiceError(422, "invalid-strategy",
                        "attacker strategy must be a state-conditioned table")


class EpisodeSession:
    """One live episode: true state, belief, history, per-session RNG."""

    def __init__(self, session_id: str, kernel: ModelKernel,
                 attacker: Optional[Strategy], defender: Optional[Strategy],
                 seed: int, model_name: str):
        self.id = session_id
        self.kernel = kernel
        self.model_name = model_name
        self.attacker = attacker
        self.attacker_rows = _attacker_table(kernel, attacker)
        self.defender = defender
        self.seed = seed
        self.rng = np.random.default_rng(np.random.SeedSequence(seed))
        self.lock = threading.Lock()
        self.touched = time.monotonic()

        self.t = 1
        self.history: list = []
        self.belief = kernel.initial_belief.copy()
        self.state = int(self.rng.choice(kernel.n_states, p=kernel.initial_belief))
        self.done = self.state == kernel.terminal_index
        self.last_observation: Optional[int] = None
        self.last_reward: Optional[float] = None
        self.discounted_return = 0.0
        self.snapshot = self._build_snapshot()

    def _suggested(self) -> Optional[int]:
        if self.defender is None or self.done:
            return None
        if getattr(self.defender, "on_states", False):
            info = self.state
        else:
            info = Belief(self.belief)
        probs = self.defender.distribution(info)
        return int(np.argmax(probs))

    def _build_snapshot(self) -> dict:
        kernel = self.kernel
        return {
            "id": self.id,
            "model": self.model_name,
            "t": self.t,
            "done": self.done,
            "belief": [float(p) for p in self.belief],
            "observation": self.last_observation,
            "observation_name": (None if self.last_observation is None
                                 else kernel.observations[self.last_observation]),
            "reward": self.last_reward,
            "discounted_return": self.discounted_return,
            "suggested": self._suggested(),
            "attacker_view": {
                "state": self.state,
                "state_name": kernel.states[self.state],
            },
            "history": [dict(entry) for entry in self.history],
        }

    def resolve_defender_action(self, raw) -> int:
        kernel = self.kernel
        if isinstance(raw, str):
            if raw not in kernel.defender_actions:
                raise IllegalAction(f"unknown defender action {raw!r}")
            return kernel.defender_actions.index(raw)
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise IllegalAction("defender_action must be an action index or name")
        if not 0 <= raw < kernel.n_defender_actions:
            raise IllegalAction(
                f"defender action {raw} out of range 0..{kernel.n_defender_actions - 1}")
        return raw

    def step(self, defender_action: int) -> dict:
        with self.lock:
            if self.done:
                raise SessionDone(f"session {self.id} already reached a terminal state")
            kernel = self.kernel
            marginal = self.belief @ self.attacker_rows
            attacker_action = int(self.rng.choice(
                kernel.n_attacker_actions, p=self.attacker_rows[self.state]))
            row = kernel.transition[self.state, defender_action, attacker_action]
            next_state = int(self.rng.choice(kernel.n_states, p=row))
            observation = int(self.rng.choice(
                kernel.n_observations, p=kernel.observation_model[next_state]))
            reward = float(kernel.reward[self.state, defender_action, attacker_action])

            self.belief = belief_update(
                Belief(self.belief), defender_action, observation, kernel,
                opponent_marginal=marginal).probs.copy()
            self.discounted_return += kernel.discount ** (self.t - 1) * reward
            self.history.append({
                "defender_action": defender_action,
                "attacker_action": attacker_action,
                "observation": observation,
                "reward": reward,
            })
            self.state = next_state
            self.t += 1
            self.done = next_state == kernel.terminal_index
            self.last_observation = observation
            self.last_reward = reward
            self.snapshot = self._build_snapshot()
            return self.snapshot


class SessionStore:
    def __init__(self, ttl_seconds: float = DEFAULT_TTL_SECONDS):
        self.ttl = ttl_seconds
        self._sessions: dict = {}
        self._lock = threading.Lock()

    def _purge(self) -> None:
        now = time.monotonic()
        stale = [sid for sid, s in self._sessions.items()
                 if now - s.touched > self.ttl]
        for sid in stale:
            del self._sessions[sid]

    def add(self, session: EpisodeSession) -> None:
        with self._lock:
            self._purge()
            self._sessions[session.id] = session

    def get(self, session_id: str) -> EpisodeSession:
        with self._lock:
            self._purge()
            session = self._sessions.get(session_id)
            if session is None:
                raise UnknownSession(f"no session {session_id!r}")
            session.touched = time.monotonic()
            return session

    def drop(self, session_id: str) -> None:
        with self._lock:
            self._purge()
            if session_id not in self._sessions:
                raise UnknownSession(f"no session {session_id!r}")
            del self._sessions[session_id]


def _build_session_kernel(payload: dict) -> tuple:
    if "kernel" in payload:
        try:
            kernel = ModelKernel.from_dict(payload["kernel"])
        except (FileFormat, InvalidConfig) as exc:
            raise _ServiceError(422, "unknown-model", f"kernel rejected: {exc}")
        report = validate_kernel(kernel)
        if not report.ok:
            raise _ServiceError(
                422, "invalid-kernel", "uploaded kernel fails validation",
                extra={"report": [
                    {
                        "kind": v.kind,
                        "index": [int(x) for x in np.atleast_1d(np.asarray(v.index))],
                        "deviation": (float(v.deviation)
                                      if np.isfinite(v.deviation) else None),
                    }
                    for v in report.violations]})
        return kernel, "uploaded"
    model = payload.get("model")
    if not isinstance(model, str) or model not in MODEL_NAMES:
        raise _ServiceError(422, "unknown-model",
                            f"model must be one of {list(MODEL_NAMES)}")
    try:
        kernel = build_model(model, payload.get("model_params") or {})
    except (ConfigError, InvalidConfig) as exc:
        raise _ServiceError(422, "unknown-model", str(exc))
    return kernel, model


def _resolve_attacker(kernel: ModelKernel, spec) -> Optional[Strategy]:
    if spec is None:
        spec = "null"
    if isinstance(spec, str):
        try:
            return attacker_strategy(kernel, spec)
        except (ConfigError, InvalidConfig) as exc:
            raise _ServiceError(422, "invalid-strategy", str(exc))
    if isinstance(spec, dict):
        try:
            strategy = strategy_from_dict(spec)
        except (InvalidConfig, FileFormat, KeyError, ValueError) as exc:
            raise _ServiceError(422, "invalid-strategy", f"attacker rejected: {exc}")
        if isinstance(strategy, TabularStrategy):
            expected = (kernel.n_states, kernel.n_attacker_actions)
            if strategy.table.shape != expected:
                raise _ServiceError(
                    422, "invalid-strategy",
                    f"attacker table shape {strategy.table.shape} != {expected}")
        return strategy
    raise _ServiceError(422, "invalid-strategy",
                        "attacker must be a name or a strategy object")


def _resolve_defender(kernel: ModelKernel, spec) -> Optional[Strategy]:
    if spec is None:
        return None
    if not isinstance(spec, dict):
        raise _ServiceError(422, "invalid-strategy",
                            "defender must be a strategy object")
    try:
        strategy = strategy_from_dict(spec)
    except (InvalidConfig, FileFormat, KeyError, ValueError) as exc:
        raise _ServiceError(422, "invalid-strategy", f"defender rejected: {exc}")
    return strategy


def create_app(ttl_seconds: float = DEFAULT_TTL_SECONDS) -> FastAPI:
    app = FastAPI(title="secsim episode debugger", version="0.1.0")
    # The browser frontend is served as static files from another origin.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(ttl_seconds)
    app.state.store = store

    @app.exception_handler(_ServiceError)
    async def _service_error(_request: Request, exc: _ServiceError):
        return exc.response()

    def _domain_error(exc: Exception) -> _ServiceError:
        if isinstance(exc, UnknownSession):
            return _ServiceError(404, "unknown-session", str(exc))
        if isinstance(exc, SessionDone):
            return _ServiceError(409, "session-done", str(exc))
        if isinstance(exc, IllegalAction):
            return _ServiceError(422, "illegal-action", str(exc))
        if isinstance(exc, SecsimError):
            return _ServiceError(422, "invalid-request", str(exc))
        raise exc

    @app.get("/models")
    async def list_models():
        return {
            "models": [
                {
                    "name": name,
                    "params": model_param_schema(name),
                    "attackers": list(ATTACKER_NAMES.get(name, ("null",))),
                }
                for name in MODEL_NAMES
            ]
        }

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        try:
            payload = await request.json()
        except Exception:
            raise _ServiceError(422, "invalid-request", "body must be a JSON object")
        if not isinstance(payload, dict):
            raise _ServiceError(422, "invalid-request", "body must be a JSON object")
        kernel, model_name = _build_session_kernel(payload)
        attacker = _resolve_attacker(kernel, payload.get("attacker"))
        defender = _resolve_defender(kernel, payload.get("defender"))
        seed = payload.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise _ServiceError(422, "invalid-request", "seed must be a nonnegative integer")
        session = EpisodeSession(uuid.uuid4().hex, kernel, attacker, defender,
                                 seed, model_name)
        store.add(session)
        return {
            "id": session.id,
            "spaces": {
                "states": list(kernel.states),
                "defender_actions": list(kernel.defender_actions),
                "attacker_actions": list(kernel.attacker_actions),
                "observations": [str(o) for o in kernel.observations],
                "discount": kernel.discount,
                "terminal_state": kernel.terminal_state,
            },
            "snapshot": session.snapshot,
        }

    @app.post("/sessions/{session_id}/step")
    async def step_session(session_id: str, request: Request):
        try:
            session = store.get(session_id)
        except UnknownSession as exc:
            raise _domain_error(exc)
        try:
            payload = await request.json()
        except Exception:
            raise _ServiceError(422, "illegal-action", "body must be a JSON object")
        if not isinstance(payload, dict) or "defender_action" not in payload:
            raise _ServiceError(422, "illegal-action",
                                "body must contain defender_action")
        try:
            action = session.resolve_defender_action(payload["defender_action"])
            snapshot = session.step(action)
        except SecsimError as exc:
            raise _domain_error(exc)
        return snapshot

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        try:
            session = store.get(session_id)
        except UnknownSession as exc:
            raise _domain_error(exc)
        return session.snapshot

    @app.delete("/sessions/{session_id}", status_code=204)
    async def delete_session(session_id: str):
        try:
            store.drop(session_id)
        except UnknownSession as exc:
            raise _domain_error(exc)

    return app
