"""Named model builders and attacker strategies.

The experiment runner and the episode debugger both resolve models and
attackers by name, so the mapping lives in one place.  Model parameters
arrive as plain JSON dicts; unknown parameter names are rejected with the
offending field path.
"""

from __future__ import annotations

import dataclasses
from dataclasses import fields as dataclass_fields
from typing import Optional

import numpy as np

from .errors import ConfigError
from .flow import (
    FlowGameConfig, FlowPomdpConfig, build_flow_game, build_flow_pomdp, flow_attacker,
)
from .infra import (
    InfraGraph, RecoveryConfig, ReplicationConfig, SegmentationConfig,
    build_recovery_pomdp, build_replication_game, build_replication_mdp,
    build_segmentation_game, segmentation_infeasible,
)
from .kernel import ModelKernel
from .strategies import Strategy, TabularStrategy

MODEL_NAMES = (
    "flow-pomdp", "flow-game", "recovery-pomdp",
    "replication-mdp", "replication-game", "segmentation-game",
)

# Recommended model/algorithm pairings; other combinations run with a warning.
RECOMMENDED_PAIRINGS = {
    "flow-pomdp": ("spsa", "threshold-baseline"),
    "flow-game": ("fictitious-play",),
    "recovery-pomdp": ("rollout", "alert-baseline"),
    "replication-mdp": ("pg",),
    "replication-game": ("pg",),
    "segmentation-game": ("fictitious-play",),
}

_CONFIG_TYPES = {
    "flow-pomdp": (FlowPomdpConfig, build_flow_pomdp),
    "flow-game": (FlowGameConfig, build_flow_game),
    "recovery-pomdp": (RecoveryConfig, build_recovery_pomdp),
    "replication-mdp": (ReplicationConfig, build_replication_mdp),
    "replication-game": (ReplicationConfig, build_replication_game),
    "segmentation-game": (SegmentationConfig, build_segmentation_game),
}


def model_param_schema(name: str) -> dict:
    """Parameter names and JSON-friendly defaults, for discovery endpoints."""
    config_type, _ = _CONFIG_TYPES[name]
    schema = {}
    for f in dataclass_fields(config_type):
        if f.default is not dataclasses.MISSING:
            default = f.default
        elif f.default_factory is not dataclasses.MISSING:  # type: ignore[misc]
            default = f.default_factory()
        else:
            default = None
        if hasattr(default, "to_dict"):
            default = default.to_dict()
        elif isinstance(default, np.ndarray):
            default = default.tolist()
        elif isinstance(default, tuple):
            default = list(default)
        schema[f.name] = default
    return schema


def build_model(name: str, params: Optional[dict] = None,
                field_prefix: str = "model_params") -> ModelKernel:
    """Build a kernel from a model name and a JSON parameter dict."""
    if name not in _CONFIG_TYPES:
        raise ConfigError("model", f"unknown model {name!r}, expected one of {MODEL_NAMES}")
    config_type, builder = _CONFIG_TYPES[name]
    params = dict(params or {})
    known = {f.name for f in dataclass_fields(config_type)}
    for key in params:
        if key not in known:
            raise ConfigError(f"{field_prefix}.{key}", "unknown parameter")
    for f in dataclass_fields(config_type):
        required = (f.default is dataclasses.MISSING
                    and f.default_factory is dataclasses.MISSING)  # type: ignore[misc]
        if required and f.name not in params:
            raise ConfigError(f"{field_prefix}.{f.name}", "missing required parameter")
    if name == "segmentation-game" and "graph" in params:
        if isinstance(params["graph"], dict):
            params["graph"] = InfraGraph.from_dict(params["graph"])
    for key in ("stop_success", "workflows"):
        if key in params and isinstance(params[key], list):
            params[key] = tuple(params[key])
    try:
        config = config_type(**params)
    except TypeError as exc:
        raise ConfigError(field_prefix, str(exc)) from exc
    return builder(config)


def attacker_strategy(kernel: ModelKernel, name: str = "null") -> Optional[Strategy]:
    """Resolve a named attacker strategy for a kernel.

    "null" always plays action 0 (wait / continue / target nothing);
    "random" mixes uniformly over the attacker's actions, restricted to
    feasible ones in the segmentation game.  The flow game additionally
    understands "never", "immediate" and "hit-and-run".
    """
    n_actions = kernel.n_attacker_actions
    if n_actions <= 1:
        return None
    family = kernel.metadata.get("family", "")
    if name == "null":
        table = np.zeros((kernel.n_states, n_actions))
        table[:, 0] = 1.0
        return TabularStrategy(table)
    if name == "random":
        table = np.full((kernel.n_states, n_actions), 1.0 / n_actions)
        if family == "segmentation-game":
            table = np.zeros((kernel.n_states, n_actions))
            for s in range(kernel.n_states):
                feasible = [a for a in range(n_actions)
                            if not segmentation_infeasible(kernel, s, a)]
                table[s, feasible] = 1.0 / len(feasible)
        return TabularStrategy(table)
    if name == "max":
        table = np.zeros((kernel.n_states, n_actions))
        table[:, n_actions - 1] = 1.0
        return TabularStrategy(table)
    if family == "flow-game" and name in ("never", "immediate", "hit-and-run"):
        return flow_attacker(kernel, name)
    raise ConfigError("attacker", f"unknown attacker strategy {name!r} for {family or 'model'}")


ATTACKER_NAMES = {
    "flow-pomdp": ("null",),
    "recovery-pomdp": ("null",),
    "replication-mdp": ("null",),
    "flow-game": ("null", "random", "never", "immediate", "hit-and-run"),
    "replication-game": ("null", "random", "max"),
    "segmentation-game": ("null", "random", "max"),
}
