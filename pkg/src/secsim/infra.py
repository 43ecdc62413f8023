"""Infrastructure use cases: segmentation, replication and recovery.

Three families over a managed infrastructure: a zero-sum segmentation
game on a tree of nodes partitioned into workflows, a replica-count MDP
(and its adversarial game variant) for a replicated service, and a POMDP
for intrusion recovery across a small set of replicas.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionCap, FileFormat, InvalidConfig
from .kernel import ModelKernel
from .strategies import Strategy, TabularStrategy

GATEWAY = "gw"


# ---------------------------------------------------------------------------
# infrastructure graph


@dataclass(frozen=True)
class InfraGraph:
    """A tree of managed nodes rooted at the gateway.

    ``parents`` maps each node to its parent (the gateway or another
    node); ``workflows`` partition the nodes, and every workflow together
    with the gateway must form a subtree.  ``node_zones`` gives each
    node's initial zone; recovery migrates a node to the next zone in
    ``zones`` cyclic order.  Nodes sitting in ``shutdown_zone`` are
    inactive.
    """

    nodes: tuple
    parents: dict
    workflows: tuple
    zones: tuple
    node_zones: dict
    shutdown_zone: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "workflows", tuple(tuple(w) for w in self.workflows))
        object.__setattr__(self, "zones", tuple(self.zones))
        self.validate()

    def validate(self) -> None:
        nodes = set(self.nodes)
        if len(nodes) != len(self.nodes) or not nodes:
            raise InvalidConfig("nodes must be nonempty and unique")
        if GATEWAY in nodes:
            raise InvalidConfig("the gateway is implicit and must not be listed")
        if set(self.parents) != nodes:
            raise InvalidConfig("parents must cover exactly the node set")
        for node, parent in self.parents.items():
            if parent != GATEWAY and parent not in nodes:
                raise InvalidConfig(f"parent of {node!r} must be a node or the gateway")
        for node in self.nodes:
            seen = set()
            cur = node
            while cur != GATEWAY:
                if cur in seen:
                    raise InvalidConfig(f"parent chain of {node!r} contains a cycle")
                seen.add(cur)
                cur = self.parents[cur]
        flat = [n for w in self.workflows for n in w]
        if sorted(flat) != sorted(self.nodes):
            raise InvalidConfig("workflows must partition the node set")
        for w in self.workflows:
            members = set(w)
            for node in w:
                parent = self.parents[node]
                if parent != GATEWAY and parent not in members:
                    raise InvalidConfig(
                        f"workflow containing {node!r} is not a subtree under the gateway")
        if not self.zones:
            raise InvalidConfig("at least one zone is required")
        if set(self.node_zones) != nodes:
            raise InvalidConfig("node_zones must cover exactly the node set")
        for node, zone in self.node_zones.items():
            if zone not in self.zones:
                raise InvalidConfig(f"zone of {node!r} is not in the zone list")
        if self.shutdown_zone is not None and self.shutdown_zone not in self.zones:
            raise InvalidConfig("shutdown_zone must be one of the zones")

    def ancestors(self, node: str):
        chain = []
        cur = self.parents[node]
        while cur != GATEWAY:
            chain.append(cur)
            cur = self.parents[cur]
        return chain

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "parents": dict(self.parents),
            "workflows": [list(w) for w in self.workflows],
            "zones": list(self.zones),
            "node_zones": dict(self.node_zones),
            "shutdown_zone": self.shutdown_zone,
        }

    @staticmethod
    def from_dict(doc: dict) -> "InfraGraph":
        try:
            return InfraGraph(
                nodes=tuple(doc["nodes"]),
                parents=dict(doc["parents"]),
                workflows=tuple(tuple(w) for w in doc["workflows"]),
                zones=tuple(doc["zones"]),
                node_zones=dict(doc["node_zones"]),
                shutdown_zone=doc.get("shutdown_zone"),
            )
        except KeyError as exc:
            raise FileFormat(f"graph document missing field {exc}") from exc

    @staticmethod
    def from_json(path) -> "InfraGraph":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FileFormat(f"not valid JSON: {exc}", line=exc.lineno) from exc
        return InfraGraph.from_dict(doc)


def default_graph(n_nodes: int = 2) -> InfraGraph:
    """A star of nodes under the gateway, one workflow, two zones."""
    names = [f"n{i}" for i in range(n_nodes)]
    return InfraGraph(
        nodes=tuple(names),
        parents={n: GATEWAY for n in names},
        workflows=(tuple(names),),
        zones=("dmz", "internal"),
        node_zones={n: "dmz" for n in names},
    )


# ---------------------------------------------------------------------------
# segmentation game

ATTACK_STATES = ("safe", "probed", "owned")   # (recon, intruded): 00, 10, 11
DEFENDER_LOCAL = ("wait", "recover")
ATTACKER_LOCAL = ("wait", "recon", "compromise")


@dataclass(frozen=True)
class SegmentationConfig:
    graph: InfraGraph = field(default_factory=default_graph)
    eta: float = 1.0
    recon_success: float = 1.0
    compromise_success: float = 0.8
    alert_model: Optional[object] = None   # (2, W): rows safe / intruded
    gamma: float = 0.99
    node_cap: int = 5

    def validate(self) -> None:
        if self.eta < 0.0:
            raise InvalidConfig("eta must be nonnegative")
        for name in ("recon_success", "compromise_success"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidConfig(f"{name} must lie in [0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidConfig("gamma must lie in [0, 1)")
        if len(self.graph.nodes) > self.node_cap:
            raise DimensionCap(
                f"{len(self.graph.nodes)} nodes exceed the cap of {self.node_cap}")


def default_node_alerts() -> np.ndarray:
    return np.array([[0.6, 0.3, 0.09, 0.01],
                     [0.1, 0.2, 0.3, 0.4]])


def _node_alert_table(config: SegmentationConfig) -> np.ndarray:
    table = (default_node_alerts() if config.alert_model is None
             else np.asarray(config.alert_model, dtype=np.float64))
    if table.ndim != 2 or table.shape[0] != 2:
        raise InvalidConfig("alert_model must have two rows (safe, intruded)")
    if (table < -1e-9).any() or np.abs(table.sum(axis=1) - 1.0).max() > 1e-9:
        raise InvalidConfig("alert_model rows must be distributions")
    return table


def _mixed_radix_decode(indices: np.ndarray, base: int, digits: int) -> np.ndarray:
    """Decode indices into digit arrays, most significant digit first."""
    out = np.empty((len(indices), digits), dtype=np.intp)
    rem = np.asarray(indices, dtype=np.intp).copy()
    for pos in range(digits - 1, -1, -1):
        out[:, pos] = rem % base
        rem //= base
    return out


def _local_transition(config: SegmentationConfig) -> np.ndarray:
    """Per-node transition tensor (m, 2, 3, m) with m = 3 * |zones|."""
    zones = config.graph.zones
    nz = len(zones)
    m = 3 * nz
    t = np.zeros((m, 2, 3, m))

    def enc(attack: int, zone: int) -> int:
        return attack * nz + zone

    for attack in range(3):
        for zone in range(nz):
            src = enc(attack, zone)
            # Recovery wins over any attacker action: reset and migrate.
            migrated = enc(0, (zone + 1) % nz)
            t[src, 1, :, migrated] = 1.0

            stay = src
            t[stay, 0, 0, stay] = 1.0  # both wait
            if attack == 0:
                t[src, 0, 1, enc(1, zone)] += config.recon_success
                t[src, 0, 1, stay] += 1.0 - config.recon_success
                t[src, 0, 2, stay] = 1.0  # compromise before recon is a no-op
            elif attack == 1:
                t[src, 0, 1, stay] = 1.0
                t[src, 0, 2, enc(2, zone)] += config.compromise_success
                t[src, 0, 2, stay] += 1.0 - config.compromise_success
            else:
                t[src, 0, 1, stay] = 1.0
                t[src, 0, 2, stay] = 1.0
    return t


def workflow_utilities(graph: InfraGraph, active: Sequence[bool],
                       compromised: Sequence[bool]) -> np.ndarray:
    """Per-node workflow utility: 1 iff the node and all its ancestors up
    to the gateway are active and uncompromised."""
    active = {n: bool(a) for n, a in zip(graph.nodes, active)}
    compromised = {n: bool(c) for n, c in zip(graph.nodes, compromised)}
    out = np.zeros(len(graph.nodes))
    for i, node in enumerate(graph.nodes):
        chain = [node] + graph.ancestors(node)
        out[i] = float(all(active[c] and not compromised[c] for c in chain))
    return out


def node_step_reward(eta: float, utility: float, intruded: int, action_cost: float) -> float:
    """One node's contribution: eta * utility - (intrusion flag + action cost)."""
    return eta * utility - (float(intruded) + action_cost)


def build_segmentation_game(config: SegmentationConfig = SegmentationConfig()) -> ModelKernel:
    """Build the zero-sum segmentation game kernel.

    Per node the attacker escalates safe -> probed -> owned (compromise
    requires prior recon and is a no-op without it); the defender's
    recover action resets the node's attack state and migrates it to the
    next zone.  Transitions, observations and the reward all factorize
    over nodes, so joint tables are Kronecker products of per-node tables.
    """
    config.validate()
    graph = config.graph
    nodes = graph.nodes
    zones = graph.zones
    nz = len(zones)
    n_nodes = len(nodes)
    m = 3 * nz
    n_states = m ** n_nodes

    local_t = _local_transition(config)
    alert = _node_alert_table(config)

    local_obs = np.zeros((m, alert.shape[1]))
    for attack in range(3):
        for zone in range(nz):
            local_obs[attack * nz + zone] = alert[1 if attack == 2 else 0]

    d_actions = list(itertools.product(range(2), repeat=n_nodes))
    a_actions = list(itertools.product(range(3), repeat=n_nodes))

    transition = np.zeros((n_states, len(d_actions), len(a_actions), n_states))
    for di, d_vec in enumerate(d_actions):
        for ai, a_vec in enumerate(a_actions):
            joint = np.ones((1, 1))
            for node_idx in range(n_nodes):
                joint = np.kron(joint, local_t[:, d_vec[node_idx], a_vec[node_idx], :])
            transition[:, di, ai, :] = joint

    observation = np.ones((1, 1))
    for _ in range(n_nodes):
        observation = np.kron(observation, local_obs)

    locals_per_state = _mixed_radix_decode(np.arange(n_states), m, n_nodes)
    attack_per_state = locals_per_state // nz
    zone_per_state = locals_per_state % nz

    shutdown = zones.index(graph.shutdown_zone) if graph.shutdown_zone is not None else -1
    base = np.zeros(n_states)
    for s in range(n_states):
        active = zone_per_state[s] != shutdown
        compromised = attack_per_state[s] == 2
        u = workflow_utilities(graph, active, compromised)
        base[s] = float((config.eta * u).sum() - compromised.sum())
    d_cost = np.array([sum(v) for v in d_actions], dtype=np.float64)
    reward = base[:, None, None] - d_cost[None, :, None] + np.zeros((1, 1, len(a_actions)))

    def state_name(s: int) -> str:
        parts = []
        for i, node in enumerate(nodes):
            parts.append(f"{node}={ATTACK_STATES[attack_per_state[s, i]]}"
                         f"@{zones[zone_per_state[s, i]]}")
        return ";".join(parts)

    def action_name(vec, labels) -> str:
        return ",".join(labels[v] for v in vec)

    initial = 0
    for node in nodes:
        initial = initial * m + 0 * nz + zones.index(graph.node_zones[node])
    belief = np.zeros(n_states)
    belief[initial] = 1.0

    obs_names = tuple(
        "-".join(str(d) for d in digits)
        for digits in itertools.product(range(alert.shape[1]), repeat=n_nodes))

    return ModelKernel(
        states=tuple(state_name(s) for s in range(n_states)),
        defender_actions=tuple(action_name(v, DEFENDER_LOCAL) for v in d_actions),
        attacker_actions=tuple(action_name(v, ATTACKER_LOCAL) for v in a_actions),
        observations=obs_names,
        transition=transition,
        reward=reward,
        observation_model=observation,
        discount=config.gamma,
        initial_belief=belief,
        terminal_state=None,
        metadata={
            "family": "segmentation-game",
            "zero_sum": True,
            "graph": graph.to_dict(),
            "local_state_size": m,
            "alert_support": alert.shape[1],
        },
    )


def segmentation_infeasible(kernel: ModelKernel, state_index: int,
                            attacker_action_index: int) -> bool:
    """Whether the attacker action attempts compromise on an unprobed node."""
    meta = kernel.metadata
    if meta.get("family") != "segmentation-game":
        return False
    graph = InfraGraph.from_dict(meta["graph"])
    n_nodes = len(graph.nodes)
    m = meta["local_state_size"]
    nz = len(graph.zones)
    attacks = _mixed_radix_decode(np.array([state_index]), m, n_nodes)[0] // nz
    action = _mixed_radix_decode(np.array([attacker_action_index]), 3, n_nodes)[0]
    return bool(((action == 2) & (attacks == 0)).any())


# ---------------------------------------------------------------------------
# replication MDP and game


@dataclass(frozen=True)
class ReplicationConfig:
    """Replication model parameters.

    The parametric kernel is a birth-death family: under "add" a new
    replica comes up with probability ``add_success`` while each existing
    replica independently fails with probability ``failure_rate``.  A
    kernel may instead be loaded from a JSON file holding a row-stochastic
    (S, 2, S) transition array.
    """

    max_replicas: int = 10
    initial_replicas: int = 5
    kernel_source: str = "parametric"
    add_success: float = 0.9
    failure_rate: float = 0.05
    kernel_path: Optional[str] = None
    availability_target: float = 0.9
    min_replicas: int = 1
    attack_success: float = 0.01
    availability_weight: float = 1.0
    gamma: float = 0.99

    def validate(self) -> None:
        if not (isinstance(self.max_replicas, int) and self.max_replicas >= 1):
            raise InvalidConfig("max_replicas must be an integer >= 1")
        if not 0 <= self.initial_replicas <= self.max_replicas:
            raise InvalidConfig("initial_replicas must lie in 0..max_replicas")
        if self.kernel_source not in ("parametric", "file"):
            raise InvalidConfig("kernel_source must be 'parametric' or 'file'")
        if self.kernel_source == "file" and not self.kernel_path:
            raise InvalidConfig("kernel_path is required for kernel_source='file'")
        for name in ("add_success", "failure_rate", "attack_success"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidConfig(f"{name} must lie in [0, 1]")
        if not 0.0 < self.availability_target <= 1.0:
            raise InvalidConfig("availability_target must lie in (0, 1]")
        if not 1 <= self.min_replicas <= self.max_replicas:
            raise InvalidConfig("min_replicas must lie in 1..max_replicas")
        if self.availability_weight < 0.0:
            raise InvalidConfig("availability_weight must be nonnegative")
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidConfig("gamma must lie in [0, 1)")


def _binom_pmf(n: int, p: float) -> np.ndarray:
    return np.array([math.comb(n, k) * p ** k * (1.0 - p) ** (n - k)
                     for k in range(n + 1)])


def _parametric_rows(config: ReplicationConfig) -> np.ndarray:
    s_max = config.max_replicas
    rows = np.zeros((s_max + 1, 2, s_max + 1))
    for s in range(s_max + 1):
        survivors = _binom_pmf(s, config.failure_rate)  # P(f failures), f=0..s
        for f in range(s + 1):
            b = s - f
            rows[s, 0, b] += survivors[f]
            added = min(b + 1, s_max)
            rows[s, 1, added] += survivors[f] * config.add_success
            rows[s, 1, b] += survivors[f] * (1.0 - config.add_success)
    return rows


def _rows_from_file(path: str, s_max: int) -> np.ndarray:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormat(f"not valid JSON: {exc}", line=exc.lineno) from exc
    rows = np.asarray(doc.get("transition", doc) if isinstance(doc, dict) else doc,
                      dtype=np.float64)
    if rows.shape != (s_max + 1, 2, s_max + 1):
        raise FileFormat(
            f"transition array must have shape {(s_max + 1, 2, s_max + 1)}, got {rows.shape}")
    if (rows < -1e-9).any() or np.abs(rows.sum(axis=2) - 1.0).max() > 1e-9:
        raise FileFormat("transition rows must be stochastic")
    return rows


def build_replication_mdp(config: ReplicationConfig = ReplicationConfig()) -> ModelKernel:
    """Build the replica-count MDP: states are healthy-replica counts,
    actions hold or add, reward is the negated action cost."""
    config.validate()
    s_max = config.max_replicas
    rows = (_parametric_rows(config) if config.kernel_source == "parametric"
            else _rows_from_file(config.kernel_path, s_max))
    n = s_max + 1
    reward = np.zeros((n, 2, 1))
    reward[:, 1, 0] = -1.0
    belief = np.zeros(n)
    belief[config.initial_replicas] = 1.0
    return ModelKernel(
        states=tuple(f"replicas_{s}" for s in range(n)),
        defender_actions=("hold", "add"),
        attacker_actions=("none",),
        observations=tuple(f"replicas_{s}" for s in range(n)),
        transition=rows[:, :, None, :],
        reward=reward,
        observation_model=np.eye(n),
        discount=config.gamma,
        initial_belief=belief,
        terminal_state=None,
        metadata={
            "family": "replication-mdp",
            "min_replicas": config.min_replicas,
            "availability_target": config.availability_target,
            "replica_counts": list(range(n)),
        },
    )


def attack_stage_distribution(healthy: int, targeted: int, attack_success: float,
                              s_max: int) -> np.ndarray:
    """Distribution over healthy counts after the attack stage alone.

    The attacker targets min(targeted, healthy) replicas; each is
    independently compromised with probability ``attack_success``.
    """
    effective = min(int(targeted), int(healthy))
    out = np.zeros(s_max + 1)
    pmf = _binom_pmf(effective, attack_success)
    for compromised, p in enumerate(pmf):
        out[healthy - compromised] += p
    return out


def scalarized_reward(config: ReplicationConfig) -> np.ndarray:
    """Reward (S, 2): negated action cost plus weighted availability flag."""
    n = config.max_replicas + 1
    avail = (np.arange(n) >= config.min_replicas).astype(np.float64)
    r = np.zeros((n, 2))
    r[:, 1] = -1.0
    return r + config.availability_weight * avail[:, None]


def scalarize_kernel(kernel: ModelKernel, weight: float,
                     min_replicas: Optional[int] = None) -> ModelKernel:
    """Replace the reward with -action_cost + weight * availability flag."""
    if min_replicas is None:
        min_replicas = int(kernel.metadata.get("min_replicas", 1))
    counts = np.asarray(kernel.metadata.get(
        "replica_counts", list(range(kernel.n_states))))
    avail = (counts >= min_replicas).astype(np.float64)
    cost = np.zeros((kernel.n_states, kernel.n_defender_actions))
    if "add" in kernel.defender_actions:
        cost[:, kernel.defender_actions.index("add")] = -1.0
    reward = (cost + weight * avail[:, None])[:, :, None] \
        * np.ones((1, 1, kernel.n_attacker_actions))
    doc = kernel.to_dict()
    doc["reward"] = reward.tolist()
    doc["metadata"] = {**kernel.metadata, "availability_weight": weight}
    return ModelKernel.from_dict(doc)


def build_replication_game(config: ReplicationConfig = ReplicationConfig()) -> ModelKernel:
    """Adversarial replication: the attacker picks how many replicas to
    target each step; targeted healthy replicas are independently
    compromised before the birth-death dynamics apply.  The reward is the
    availability-scalarized defender payoff, negated for the attacker."""
    config.validate()
    mdp_rows = (_parametric_rows(config) if config.kernel_source == "parametric"
                else _rows_from_file(config.kernel_path, config.max_replicas))
    s_max = config.max_replicas
    n = s_max + 1
    n_attacks = s_max + 1

    transition = np.zeros((n, 2, n_attacks, n))
    for s in range(n):
        for k in range(n_attacks):
            stage = attack_stage_distribution(s, k, config.attack_success, s_max)
            for s1 in np.flatnonzero(stage):
                transition[s, :, k, :] += stage[s1] * mdp_rows[s1]

    reward = scalarized_reward(config)[:, :, None] * np.ones((1, 1, n_attacks))
    belief = np.zeros(n)
    belief[config.initial_replicas] = 1.0
    return ModelKernel(
        states=tuple(f"replicas_{s}" for s in range(n)),
        defender_actions=("hold", "add"),
        attacker_actions=tuple(f"target_{k}" for k in range(n_attacks)),
        observations=tuple(f"replicas_{s}" for s in range(n)),
        transition=transition,
        reward=reward,
        observation_model=np.eye(n),
        discount=config.gamma,
        initial_belief=belief,
        terminal_state=None,
        metadata={
            "family": "replication-game",
            "zero_sum": True,
            "min_replicas": config.min_replicas,
            "availability_weight": config.availability_weight,
            "replica_counts": list(range(n)),
        },
    )


class AvailabilityEvaluator:
    """Long-run availability and action rate of a replication policy.

    Availability is the fraction of steps with at least ``min_replicas``
    healthy replicas.  The stationary method solves for the invariant
    distribution of the induced chain (assumed irreducible); the
    Monte-Carlo method averages over simulated steps.
    """

    def __init__(self, kernel: ModelKernel, min_replicas: Optional[int] = None):
        self.kernel = kernel
        self.min_replicas = (int(kernel.metadata.get("min_replicas", 1))
                             if min_replicas is None else int(min_replicas))
        counts = kernel.metadata.get("replica_counts", list(range(kernel.n_states)))
        self.available = (np.asarray(counts) >= self.min_replicas).astype(np.float64)

    def _chain(self, strategy: Strategy, attacker: Optional[Strategy]) -> np.ndarray:
        from .solve import _attacker_table, _state_table

        d = _state_table(strategy, self.kernel.n_states, self.kernel.n_defender_actions)
        a = _attacker_table(self.kernel, attacker)
        joint = d[:, :, None] * a[:, None, :]
        return np.einsum("sda,sdan->sn", joint, self.kernel.transition)

    def stationary(self, strategy: Strategy, attacker: Optional[Strategy] = None):
        p = self._chain(strategy, attacker)
        n = p.shape[0]
        a = np.vstack([p.T - np.eye(n), np.ones((1, n))])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        dist, *_ = np.linalg.lstsq(a, b, rcond=None)
        dist = np.clip(dist, 0.0, None)
        dist /= dist.sum()
        from .solve import _state_table

        table = _state_table(strategy, self.kernel.n_states, self.kernel.n_defender_actions)
        add_idx = (self.kernel.defender_actions.index("add")
                   if "add" in self.kernel.defender_actions else None)
        action_rate = float((dist * table[:, add_idx]).sum()) if add_idx is not None else 0.0
        return float(dist @ self.available), action_rate, dist

    def monte_carlo(self, strategy: Strategy, attacker: Optional[Strategy] = None,
                    n_steps: int = 10000, rng: Optional[np.random.Generator] = None):
        from .simulate import sample_rows

        rng = np.random.default_rng() if rng is None else rng
        k = self.kernel
        state = int(np.argmax(k.initial_belief))
        up = 0
        adds = 0
        add_idx = (k.defender_actions.index("add")
                   if "add" in k.defender_actions else None)
        for _ in range(n_steps):
            d = strategy.act(state, rng)
            a = attacker.act(state, rng) if attacker is not None else 0
            up += int(self.available[state])
            adds += int(d == add_idx) if add_idx is not None else 0
            state = int(sample_rows(k.transition[state, d, a][None, :], rng)[0])
        return up / n_steps, adds / n_steps


@dataclass
class ConstrainedSolution:
    strategy: TabularStrategy
    weight: float
    availability: float
    action_rate: float


def solve_constrained(kernel: ModelKernel, availability_target: float,
                      min_replicas: Optional[int] = None,
                      solver: Optional[Callable[[ModelKernel], TabularStrategy]] = None,
                      weight_tol: float = 1e-3,
                      max_weight: float = 1024.0) -> ConstrainedSolution:
    """Lagrangian treatment of the availability constraint.

    The availability term enters the scalarized reward with weight w; the
    smallest w whose unconstrained optimum meets the target is located by
    bisection down to ``weight_tol``.  Because the policy set is finite
    the constraint binds at the resolution of the weight grid, not
    exactly.
    """
    if solver is None:
        def solver(k: ModelKernel) -> TabularStrategy:
            from .solve import best_response

            strategy, _ = best_response(k, None, "defender")
            return strategy

    evaluator = AvailabilityEvaluator(kernel, min_replicas)

    def availability_at(weight: float):
        strategy = solver(scalarize_kernel(kernel, weight, evaluator.min_replicas))
        avail, rate, _ = evaluator.stationary(strategy)
        return strategy, avail, rate

    strategy, avail, rate = availability_at(0.0)
    if avail >= availability_target:
        return ConstrainedSolution(strategy, 0.0, avail, rate)

    lo, hi = 0.0, 1.0
    while hi <= max_weight:
        strategy, avail, rate = availability_at(hi)
        if avail >= availability_target:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise InvalidConfig(
            f"availability target {availability_target} unreachable up to weight {max_weight}")

    best = ConstrainedSolution(strategy, hi, avail, rate)
    while hi - lo > weight_tol:
        mid = 0.5 * (lo + hi)
        strategy, avail, rate = availability_at(mid)
        if avail >= availability_target:
            best = ConstrainedSolution(strategy, mid, avail, rate)
            hi = mid
        else:
            lo = mid
    return best


# ---------------------------------------------------------------------------
# recovery POMDP


@dataclass(frozen=True)
class RecoveryConfig:
    """Recovery POMDP parameters.

    ``adjacency`` is a symmetric irreflexive 0/1 matrix over replicas;
    compromise pressure on a safe replica grows with the number of
    compromised neighbors.  ``obs_per_replica`` is a (2, W) table of
    per-replica alert-count distributions (rows: safe, compromised).
    """

    replica_count: int = 3
    adjacency: Optional[object] = None
    obs_per_replica: Optional[object] = None
    gamma: float = 0.99
    replica_cap: int = 6

    def validate(self) -> np.ndarray:
        if not (isinstance(self.replica_count, int) and self.replica_count >= 1):
            raise InvalidConfig("replica_count must be an integer >= 1")
        if self.replica_count > self.replica_cap:
            raise DimensionCap(
                f"{self.replica_count} replicas exceed the cap of {self.replica_cap}")
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidConfig("gamma must lie in [0, 1)")
        k = self.replica_count
        if self.adjacency is None:
            adj = np.ones((k, k)) - np.eye(k)
        else:
            adj = np.asarray(self.adjacency, dtype=np.float64)
            if adj.shape != (k, k):
                raise InvalidConfig(f"adjacency must have shape {(k, k)}")
            if not np.array_equal(adj, adj.T):
                raise InvalidConfig("adjacency must be symmetric")
            if np.diagonal(adj).any():
                raise InvalidConfig("adjacency must be irreflexive (zero diagonal)")
            if not np.isin(adj, (0.0, 1.0)).all():
                raise InvalidConfig("adjacency entries must be 0 or 1")
        return adj


def default_replica_alerts() -> np.ndarray:
    return np.array([[0.6, 0.3, 0.09, 0.01],
                     [0.1, 0.2, 0.3, 0.4]])


def compromise_probability(n_compromised_neighbors: int) -> float:
    """min{0.2 * (1 + compromised neighbor count), 1}."""
    return min(0.2 * (1.0 + float(n_compromised_neighbors)), 1.0)


def recovery_reward(state_bits: Sequence[int], action_bits: Sequence[int]) -> float:
    """Negated cost: 2 per unrecovered compromise, 1 per wasted recovery."""
    total = 0.0
    for s, a in zip(state_bits, action_bits):
        total += 2.0 * s * (1 - a) + a * (1 - s)
    return -total


def build_recovery_pomdp(config: RecoveryConfig = RecoveryConfig()) -> ModelKernel:
    """Build the recovery POMDP kernel.

    States and defender actions are K-bit vectors (bit l: replica l
    compromised / recovered).  A compromised replica stays compromised
    until recovered; a safe replica is compromised with probability
    growing in its compromised neighbors.  Observations are per-replica
    alert counts, conditionally independent given the state.
    """
    adjacency = config.validate()
    k = config.replica_count
    obs = (default_replica_alerts() if config.obs_per_replica is None
           else np.asarray(config.obs_per_replica, dtype=np.float64))
    if obs.ndim != 2 or obs.shape[0] != 2:
        raise InvalidConfig("obs_per_replica must have two rows (safe, compromised)")
    if (obs < -1e-9).any() or np.abs(obs.sum(axis=1) - 1.0).max() > 1e-9:
        raise InvalidConfig("obs_per_replica rows must be distributions")
    w = obs.shape[1]

    n = 2 ** k
    bits = np.array([[(s >> (k - 1 - l)) & 1 for l in range(k)] for s in range(n)])

    transition = np.zeros((n, n, 1, n))
    reward = np.zeros((n, n, 1))
    for s in range(n):
        state_bits = bits[s]
        pressure = adjacency @ state_bits
        for a in range(n):
            action_bits = bits[a]
            p_next = np.empty(k)
            for l in range(k):
                if state_bits[l] == 1:
                    p_next[l] = 0.0 if action_bits[l] == 1 else 1.0
                else:
                    p_next[l] = compromise_probability(int(pressure[l]))
            joint = np.ones(1)
            for l in range(k):
                joint = np.kron(joint, np.array([1.0 - p_next[l], p_next[l]]))
            transition[s, a, 0, :] = joint
            reward[s, a, 0] = recovery_reward(state_bits, action_bits)

    # Joint observation: per-replica tables multiplied out, rows indexed by state.
    joint_obs = np.ones((n, 1))
    for l in range(k):
        joint_obs = (joint_obs[:, :, None] * obs[bits[:, l]][:, None, :]).reshape(n, -1)

    belief = np.zeros(n)
    belief[0] = 1.0

    obs_names = tuple("-".join(str(d) for d in digits)
                      for digits in itertools.product(range(w), repeat=k))

    return ModelKernel(
        states=tuple("".join(str(b) for b in bits[s]) for s in range(n)),
        defender_actions=tuple("r" + "".join(str(b) for b in bits[a]) for a in range(n)),
        attacker_actions=("none",),
        observations=obs_names,
        transition=transition,
        reward=reward,
        observation_model=joint_obs,
        discount=config.gamma,
        initial_belief=belief,
        terminal_state=None,
        metadata={
            "family": "recovery-pomdp",
            "replica_count": k,
            "alert_support": w,
            "obs_per_replica": obs.tolist(),
        },
    )
