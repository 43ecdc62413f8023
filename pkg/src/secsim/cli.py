"""Experiment runner and command-line front door.

Verbs:

  run <config.json>       train per an experiment config, emit CSV curves
  sweep <config.json>     model-misspecification sensitivity sweep
  fit <traces.jsonl>      fit observation models from intrusion traces
  validate <kernel.json>  check a kernel file's stochastic invariants
  serve                   start the episode debugger HTTP service

Exit codes: 0 success, 2 configuration error, 3 runtime failure.

Per-seed curve CSVs are byte-deterministic: the wall_seconds column is
written as 0.0 and measured wall time goes to the summary JSON instead,
so identical config + seed reproduces identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import shutil
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .analysis import sensitivity_sweep
from .errors import ConfigError, FileFormat, InvalidConfig, SecsimError
from .flow import threshold_strategy
from .kernel import Belief, ModelKernel, validate_kernel
from .learning.curve import CURVE_COLUMNS, CurveRow
from .learning.fp import FictitiousPlayParams, fictitious_play
from .learning.rollout import RolloutParams, rollout_action
from .learning.spsa import SpsaParams, spsa_optimize
from .registry import (
    MODEL_NAMES, RECOMMENDED_PAIRINGS, attacker_strategy, build_model,
)
from .simulate import EpisodeSampler, simulate_episodes
from .strategies import ObservationLookupStrategy, TabularStrategy
from .sysid import CHANNELS, discretize_mixture, fit_empirical, fit_gmm, ingest_traces

ALGORITHM_NAMES = (
    "spsa", "rollout", "pg", "fictitious-play",
    "threshold-baseline", "alert-baseline",
)

PRIORITIES = ("very_low", "low", "medium", "high")
PRIORITY_QUANTILES = (0.5, 0.9, 0.99)

SWEEP_COLUMNS = ("param_delta", "sim_mean", "sim_std", "truth_mean", "truth_std")


# ---------------------------------------------------------------------------
# Alert-priority baseline


def alert_priority_cutpoints(safe_row: Sequence[float],
                             quantiles: Sequence[float] = PRIORITY_QUANTILES) -> tuple:
    """Smallest alert counts whose safe-state CDF reaches each quantile."""
    cdf = np.cumsum(np.asarray(safe_row, dtype=np.float64))
    cuts = []
    for q in quantiles:
        idx = int(np.searchsorted(cdf, q - 1e-12, side="left"))
        cuts.append(min(idx, cdf.size - 1))
    return tuple(cuts)


def alert_priority(value: int, cutpoints: Sequence[int]) -> int:
    """Priority index 0..len(cutpoints): cut-points strictly below the count."""
    return int(sum(value > c for c in cutpoints))


def alert_baseline_strategy(kernel: ModelKernel, priority_threshold: str = "medium",
                            quantiles: Sequence[float] = PRIORITY_QUANTILES
                            ) -> ObservationLookupStrategy:
    """Recover each replica whose alert priority reaches the threshold.

    Per-replica alert counts map to {very_low, low, medium, high} through
    quantile cut-points of the safe-state alert distribution; a count gets
    one priority step per cut-point it strictly exceeds.  The returned
    strategy reads the last joint observation and recovers exactly the
    replicas at or above ``priority_threshold``.
    """
    meta = kernel.metadata
    if meta.get("family") != "recovery-pomdp":
        raise InvalidConfig(
            "alert baseline needs per-replica alert observations (recovery POMDP)")
    if priority_threshold not in PRIORITIES:
        raise InvalidConfig(f"priority_threshold must be one of {PRIORITIES}")
    obs = np.asarray(meta["obs_per_replica"], dtype=np.float64)
    cuts = alert_priority_cutpoints(obs[0], quantiles)
    floor = PRIORITIES.index(priority_threshold)
    k = int(meta["replica_count"])
    w = obs.shape[1]

    table = np.zeros((kernel.n_observations, kernel.n_defender_actions))
    for o in range(kernel.n_observations):
        action = 0
        for l in range(k):
            digit = (o // w ** (k - 1 - l)) % w
            if alert_priority(digit, cuts) >= floor:
                action |= 1 << (k - 1 - l)
        table[o, action] = 1.0
    return ObservationLookupStrategy(table)


# ---------------------------------------------------------------------------
# Experiment config


@dataclass
class ExperimentConfig:
    model: str
    algorithm: str
    model_params: dict = field(default_factory=dict)
    algorithm_params: dict = field(default_factory=dict)
    seeds: tuple = (0,)
    output_dir: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "model": self.model, "model_params": self.model_params,
            "algorithm": self.algorithm, "algorithm_params": self.algorithm_params,
            "seeds": list(self.seeds), "output_dir": self.output_dir,
        }


def parse_experiment_config(doc) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("", "experiment config must be a JSON object")
    known = ("model", "model_params", "algorithm", "algorithm_params",
             "seeds", "output_dir")
    for key in doc:
        if key not in known:
            raise ConfigError(key, "unknown field")
    for key in ("model", "algorithm"):
        if key not in doc:
            raise ConfigError(key, "missing required field")
        if not isinstance(doc[key], str):
            raise ConfigError(key, "must be a string")
    if doc["model"] not in MODEL_NAMES:
        raise ConfigError("model", f"unknown model, expected one of {MODEL_NAMES}")
    if doc["algorithm"] not in ALGORITHM_NAMES:
        raise ConfigError(
            "algorithm", f"unknown algorithm, expected one of {ALGORITHM_NAMES}")
    for key in ("model_params", "algorithm_params"):
        if key in doc and not isinstance(doc[key], dict):
            raise ConfigError(key, "must be an object")
    seeds = doc.get("seeds", [0])
    if (not isinstance(seeds, list) or not seeds
            or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds)):
        raise ConfigError("seeds", "must be a nonempty list of integers")
    output_dir = doc.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ConfigError("output_dir", "must be a string")
    return ExperimentConfig(
        model=doc["model"], algorithm=doc["algorithm"],
        model_params=dict(doc.get("model_params", {})),
        algorithm_params=dict(doc.get("algorithm_params", {})),
        seeds=tuple(seeds), output_dir=output_dir,
    )


# ---------------------------------------------------------------------------
# Per-algorithm runners.  Each consumes a params dict, rejects unknown keys,
# and returns (curve rows, final metrics) deterministically in (kernel, seed).


def _reject_unknown(params: dict) -> None:
    if params:
        key = sorted(params)[0]
        raise ConfigError(f"algorithm_params.{key}", "unknown parameter")


def _take_fields(params: dict, params_type, skip: tuple = ("seed",)) -> dict:
    taken = {}
    for f in dataclass_fields(params_type):
        if f.name in skip:
            continue
        if f.name in params:
            taken[f.name] = params.pop(f.name)
    return taken


def _default_features(kernel: ModelKernel) -> str:
    fully_observed = (
        kernel.n_observations == kernel.n_states
        and np.array_equal(kernel.observation_model, np.eye(kernel.n_states)))
    return "state" if fully_observed else "belief"


def _run_spsa(kernel: ModelKernel, params: dict, seed: int):
    params = dict(params)
    attacker = attacker_strategy(kernel, params.pop("attacker", "null"))
    episodes = int(params.pop("episodes_per_eval", 50))
    max_steps = int(params.pop("max_steps", 200))
    theta0 = float(params.pop("theta0", 0.5))
    schedule = _take_fields(params, SpsaParams)
    _reject_unknown(params)

    spsa_params = SpsaParams(**schedule, seed=seed)
    objective_rng = np.random.default_rng(np.random.SeedSequence((seed, 1)))

    def strategy_at(theta: float):
        return threshold_strategy(min(max(theta, 0.0), 1.0), kernel)

    def objective(theta: np.ndarray) -> float:
        sim = simulate_episodes(kernel, strategy_at(float(theta[0])), attacker,
                                n_episodes=episodes, max_steps=max_steps,
                                rng=objective_rng)
        return sim.mean_return

    result = spsa_optimize(objective, [theta0], spsa_params, bounds=([0.0], [1.0]))
    rows = [CurveRow(0.0, k, "objective", float(value), 0.0)
            for k, (_, value) in enumerate(result.history)]
    final = {"threshold": float(result.theta[0]),
             "objective": float(result.final_value)}
    return rows, final


def _run_threshold_baseline(kernel: ModelKernel, params: dict, seed: int):
    params = dict(params)
    alpha = float(params.pop("alpha", 0.5))
    attacker = attacker_strategy(kernel, params.pop("attacker", "null"))
    episodes = int(params.pop("episodes", 200))
    max_steps = int(params.pop("max_steps", 200))
    _reject_unknown(params)
    sim = simulate_episodes(kernel, threshold_strategy(alpha, kernel), attacker,
                            n_episodes=episodes, max_steps=max_steps,
                            rng=np.random.default_rng(np.random.SeedSequence((seed, 1))))
    mean = float(sim.returns.mean())
    std = float(sim.returns.std())
    rows = [CurveRow(0.0, 0, "eval_return", mean, std)]
    return rows, {"alpha": alpha, "eval_return": mean, "stddev": std}


def _run_alert_baseline(kernel: ModelKernel, params: dict, seed: int):
    params = dict(params)
    threshold = params.pop("priority_threshold", "medium")
    episodes = int(params.pop("episodes", 200))
    max_steps = int(params.pop("max_steps", 50))
    _reject_unknown(params)
    strategy = alert_baseline_strategy(kernel, threshold)
    sim = simulate_episodes(kernel, strategy, None,
                            n_episodes=episodes, max_steps=max_steps,
                            rng=np.random.default_rng(np.random.SeedSequence((seed, 1))))
    mean = float(sim.returns.mean())
    std = float(sim.returns.std())
    rows = [CurveRow(0.0, 0, "eval_return", mean, std)]
    return rows, {"priority_threshold": threshold, "eval_return": mean, "stddev": std}


def _run_rollout(kernel: ModelKernel, params: dict, seed: int):
    params = dict(params)
    attacker = attacker_strategy(kernel, params.pop("attacker", "null"))
    episodes = int(params.pop("episodes", 20))
    max_steps = int(params.pop("max_steps", 50))
    base_name = params.pop("base", "uniform")
    features = params.pop("features", _default_features(kernel))
    rollout_params = RolloutParams(**_take_fields(params, RolloutParams, skip=()))
    _reject_unknown(params)

    if base_name == "uniform":
        base = TabularStrategy.uniform(kernel.n_states, kernel.n_defender_actions)
    elif base_name == "null":
        base = TabularStrategy.deterministic(
            kernel.n_states, kernel.n_defender_actions,
            np.zeros(kernel.n_states, dtype=np.int64))
    else:
        raise ConfigError("algorithm_params.base", "expected 'uniform' or 'null'")

    root = np.random.SeedSequence((seed, 2))
    env_stream, plan_stream = root.spawn(2)
    sampler = EpisodeSampler(kernel, attacker, features=features,
                             max_steps=max_steps,
                             rng=np.random.default_rng(env_stream))
    plan_rng = np.random.default_rng(plan_stream)
    rows = []
    returns = []
    for episode in range(episodes):
        info = sampler.reset()
        total = 0.0
        discount = 1.0
        done = False
        while not done:
            state = Belief(info) if features == "belief" else int(np.argmax(info))
            action = rollout_action(kernel, base, state, rollout_params,
                                    plan_rng, attacker)
            info, reward, done = sampler.step(action)
            total += discount * reward
            discount *= kernel.discount
        returns.append(total)
        rows.append(CurveRow(0.0, episode, "episode_return", float(total), 0.0))
    mean = float(np.mean(returns))
    std = float(np.std(returns))
    return rows, {"mean_return": mean, "stddev": std}


def _run_pg(kernel: ModelKernel, params: dict, seed: int):
    from .learning.pg import PgParams, pg_train  # torch import deferred

    params = dict(params)
    attacker = attacker_strategy(kernel, params.pop("attacker", "null"))
    features = params.pop("features", _default_features(kernel))
    max_steps = int(params.pop("max_steps", 100))
    pg_kwargs = _take_fields(params, PgParams)
    _reject_unknown(params)

    sampler = EpisodeSampler(kernel, attacker, features=features,
                             max_steps=max_steps,
                             rng=np.random.default_rng(np.random.SeedSequence((seed, 3))))
    result = pg_train(sampler, PgParams(**pg_kwargs, seed=seed))
    final = {"eval_return": float(result.final_mean),
             "stddev": float(result.final_stddev)}
    return list(result.curve), final


def _run_fictitious_play(kernel: ModelKernel, params: dict, seed: int):
    params = dict(params)
    spsa_kwargs = params.pop("spsa", None)
    pg_kwargs = params.pop("pg_params", None)
    fp_kwargs = _take_fields(params, FictitiousPlayParams, skip=("seed", "spsa", "pg_params"))
    _reject_unknown(params)
    if spsa_kwargs is not None:
        fp_kwargs["spsa"] = SpsaParams(**spsa_kwargs)
    if pg_kwargs is not None:
        from .learning.pg import PgParams

        fp_kwargs["pg_params"] = PgParams(**pg_kwargs)
    result = fictitious_play(kernel, FictitiousPlayParams(**fp_kwargs, seed=seed))
    final = {"exploitability": float(result.curve[-1].mean),
             "responder": result.responder}
    return list(result.curve), final


_RUNNERS = {
    "spsa": _run_spsa,
    "rollout": _run_rollout,
    "pg": _run_pg,
    "fictitious-play": _run_fictitious_play,
    "threshold-baseline": _run_threshold_baseline,
    "alert-baseline": _run_alert_baseline,
}


def _seed_task(model: str, model_params: dict, algorithm: str,
               algorithm_params: dict, seed: int):
    kernel = build_model(model, model_params)
    return _RUNNERS[algorithm](kernel, algorithm_params, seed)


# ---------------------------------------------------------------------------
# CSV plumbing


def _format_float(value: float) -> str:
    return repr(float(value))


def write_curve_csv(path: Path, rows: Sequence[CurveRow]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for row in rows:
            writer.writerow([
                _format_float(row.wall_seconds), str(int(row.round_or_update)),
                row.metric_name, _format_float(row.mean), _format_float(row.stddev),
            ])


def read_curve_csv(path: Path) -> list:
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        for record in reader:
            rows.append(CurveRow(
                float(record["wall_seconds"]), int(record["round_or_update"]),
                record["metric_name"], float(record["mean"]), float(record["stddev"]),
            ))
    return rows


def aggregate_curves(per_seed: Sequence[Sequence[CurveRow]]) -> list:
    """Mean/std across seeds of each (round, metric) point's mean column."""
    keys = [(r.round_or_update, r.metric_name) for r in per_seed[0]]
    for rows in per_seed[1:]:
        if [(r.round_or_update, r.metric_name) for r in rows] != keys:
            raise InvalidConfig("per-seed curves do not align; cannot aggregate")
    means = np.array([[r.mean for r in rows] for rows in per_seed])
    mu = means.mean(axis=0)
    sd = means.std(axis=0)
    return [CurveRow(0.0, key[0], key[1], float(m), float(s))
            for key, m, s in zip(keys, mu, sd)]


# ---------------------------------------------------------------------------
# run verb


def run_experiment(config: ExperimentConfig, override_pairing: bool = False,
                   jobs: int = 1) -> dict:
    """Run one experiment; returns the summary dict written to summary.json.

    Artifacts: config.json snapshot, seed_<s>.csv per seed, aggregate.csv,
    summary.json.  On any failure every partial artifact is removed before
    the error propagates.
    """
    if config.output_dir is None:
        raise ConfigError("output_dir", "missing required field (or pass --out)")
    build_model(config.model, config.model_params)  # fail before touching disk
    if config.algorithm not in _RUNNERS:
        raise ConfigError("algorithm", f"unknown algorithm {config.algorithm!r}")
    recommended = RECOMMENDED_PAIRINGS.get(config.model, ())
    if config.algorithm not in recommended and not override_pairing:
        warnings.warn(
            f"algorithm {config.algorithm!r} is not the recommended pairing for "
            f"{config.model!r} (expected one of {recommended}); proceeding",
            UserWarning, stacklevel=2)

    out = Path(config.output_dir)
    created_dir = not out.exists()
    out.mkdir(parents=True, exist_ok=True)
    written = []
    start = time.perf_counter()
    try:
        snapshot = out / "config.json"
        snapshot.write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
        written.append(snapshot)

        results = {}
        if jobs > 1 and len(config.seeds) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = {
                    seed: pool.submit(_seed_task, config.model, config.model_params,
                                      config.algorithm, dict(config.algorithm_params),
                                      seed)
                    for seed in config.seeds
                }
                results = {seed: future.result() for seed, future in futures.items()}
        else:
            for seed in config.seeds:
                results[seed] = _seed_task(config.model, config.model_params,
                                           config.algorithm,
                                           dict(config.algorithm_params), seed)

        per_seed_rows = []
        per_seed_final = {}
        for seed in config.seeds:
            rows, final = results[seed]
            path = out / f"seed_{seed}.csv"
            write_curve_csv(path, rows)
            written.append(path)
            per_seed_rows.append(rows)
            per_seed_final[str(seed)] = final

        aggregate = aggregate_curves(per_seed_rows)
        aggregate_path = out / "aggregate.csv"
        write_curve_csv(aggregate_path, aggregate)
        written.append(aggregate_path)

        final_by_metric = {}
        for row in aggregate:
            final_by_metric[row.metric_name] = {"mean": row.mean, "stddev": row.stddev}
        summary = {
            "package": "secsim",
            "version": __version__,
            "model": config.model,
            "algorithm": config.algorithm,
            "seeds": list(config.seeds),
            "per_seed": per_seed_final,
            "aggregate_final": final_by_metric,
            "artifacts": sorted(p.name for p in written) + ["summary.json"],
            "wall_seconds": time.perf_counter() - start,
        }
        summary_path = out / "summary.json"
        summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        written.append(summary_path)
        return summary
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        if created_dir:
            shutil.rmtree(out, ignore_errors=True)
        raise


# ---------------------------------------------------------------------------
# sweep verb


def parse_sweep_config(doc) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("", "sweep config must be a JSON object")
    defaults = {
        "model": "flow-pomdp", "param_name": "intrusion_prob", "true_param": 0.01,
        "param_grid": None, "model_params": {}, "learner": {}, "seeds": 3,
        "eval_episodes": 1000, "max_steps": 500, "base_seed": 0,
        "attacker": "null", "output_dir": None,
    }
    for key in doc:
        if key not in defaults:
            raise ConfigError(key, "unknown field")
    config = {**defaults, **doc}
    if config["param_grid"] is None:
        raise ConfigError("param_grid", "missing required field")
    if not isinstance(config["param_grid"], list) or not config["param_grid"]:
        raise ConfigError("param_grid", "must be a nonempty list of numbers")
    if config["model"] not in MODEL_NAMES:
        raise ConfigError("model", f"unknown model, expected one of {MODEL_NAMES}")
    if not isinstance(config["learner"], dict):
        raise ConfigError("learner", "must be an object")
    return config


def make_threshold_learner(learner_params: dict, attacker_name: str = "null"):
    """A sweep learner: SPSA over a belief threshold on the given kernel."""
    params = dict(learner_params)
    iterations = int(params.pop("iterations", 40))
    episodes = int(params.pop("episodes_per_eval", 30))
    max_steps = int(params.pop("max_steps", 200))
    theta0 = float(params.pop("theta0", 0.5))
    if params:
        key = sorted(params)[0]
        raise ConfigError(f"learner.{key}", "unknown parameter")

    def learner(kernel: ModelKernel, stream: np.random.SeedSequence):
        objective_stream, spsa_stream = stream.spawn(2)
        objective_rng = np.random.default_rng(objective_stream)
        attacker = attacker_strategy(kernel, attacker_name)

        def objective(theta: np.ndarray) -> float:
            strategy = threshold_strategy(
                min(max(float(theta[0]), 0.0), 1.0), kernel)
            sim = simulate_episodes(kernel, strategy, attacker,
                                    n_episodes=episodes, max_steps=max_steps,
                                    rng=objective_rng)
            return sim.mean_return

        spsa_params = SpsaParams(
            iterations=iterations, seed=int(spsa_stream.generate_state(1)[0]))
        result = spsa_optimize(objective, [theta0], spsa_params,
                               bounds=([0.0], [1.0]))
        return threshold_strategy(float(result.theta[0]), kernel)

    return learner


def run_sweep(config: dict) -> list:
    model = config["model"]
    model_params = dict(config["model_params"])
    param_name = config["param_name"]

    def builder(value: float) -> ModelKernel:
        return build_model(model, {**model_params, param_name: value})

    builder(config["true_param"])  # surface bad param names before sweeping
    learner = make_threshold_learner(config["learner"], config["attacker"])
    sample_kernel = builder(config["true_param"])
    attacker = attacker_strategy(sample_kernel, config["attacker"])
    rows = sensitivity_sweep(
        builder, config["true_param"], config["param_grid"], learner,
        seeds=int(config["seeds"]), eval_episodes=int(config["eval_episodes"]),
        max_steps=int(config["max_steps"]), base_seed=int(config["base_seed"]),
        attacker=attacker)
    return rows


def write_sweep_csv(path: Path, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([_format_float(getattr(row, name)) for name in SWEEP_COLUMNS])


# ---------------------------------------------------------------------------
# fit verb


def run_fit(traces_path: Path, channel: str, label: int, method: str,
            components: int, seed: int) -> dict:
    records = ingest_traces(traces_path)
    if method == "empirical":
        model = fit_empirical(records, channel, label)
        return {"channel": channel, "label": label, "method": method,
                "samples": sum(1 for r in records if r.label == label),
                "model": model.as_dict()}
    samples = [r.channel(channel) for r in records if r.label == label]
    model = fit_gmm(samples, components, seed=seed)
    discrete = discretize_mixture(model)
    return {
        "channel": channel, "label": label, "method": method,
        "components": components, "samples": len(samples),
        "model": model.to_dict(),
        "discrete": discrete.as_dict(),
        "log_likelihood": model.log_likelihoods[-1] if model.log_likelihoods else None,
        "warnings": list(model.warnings),
    }


# ---------------------------------------------------------------------------
# Entry point


def _load_json(path: Path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(str(path), "file not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from exc


def _cmd_run(args) -> int:
    config = parse_experiment_config(_load_json(args.config))
    if args.seeds:
        config.seeds = tuple(int(part) for part in args.seeds.split(","))
    if args.out:
        config.output_dir = str(args.out)
    summary = run_experiment(config, override_pairing=args.override_pairing,
                             jobs=args.jobs)
    print(f"wrote {len(summary['artifacts'])} artifacts to {config.output_dir} "
          f"in {summary['wall_seconds']:.1f}s")
    return 0


def _cmd_sweep(args) -> int:
    config = parse_sweep_config(_load_json(args.config))
    if args.out:
        config["output_dir"] = str(args.out)
    if config["output_dir"] is None:
        raise ConfigError("output_dir", "missing required field (or pass --out)")
    rows = run_sweep(config)
    out = Path(config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(out / "sweep.csv", rows)
    (out / "sweep_config.json").write_text(
        json.dumps(config, indent=2, sort_keys=True) + "\n")
    print(f"wrote sweep.csv ({len(rows)} grid points) to {out}")
    return 0


def _cmd_fit(args) -> int:
    result = run_fit(Path(args.traces), args.channel, args.label, args.method,
                     args.components, args.seed)
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def _cmd_validate(args) -> int:
    doc = _load_json(args.kernel)
    kernel = ModelKernel.from_dict(doc)
    report = validate_kernel(kernel)
    if report.ok:
        print(f"ok: {kernel.n_states} states, {kernel.n_defender_actions}x"
              f"{kernel.n_attacker_actions} actions, {kernel.n_observations} observations")
        return 0
    for violation in report.violations:
        print(f"violation: {violation.kind} at {violation.index} "
              f"(deviation {violation.deviation:.3g})")
    return 3


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secsim",
        description="Simulation and learning toolkit for security response strategies.")
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config", type=Path)
    run_p.add_argument("--seeds", help="comma-separated seeds overriding the config")
    run_p.add_argument("--out", type=Path, help="output directory override")
    run_p.add_argument("--jobs", type=int, default=1, help="parallel seed workers")
    run_p.add_argument("--override-pairing", action="store_true",
                       help="silence the model/algorithm pairing warning")
    run_p.set_defaults(handler=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="misspecification sensitivity sweep")
    sweep_p.add_argument("config", type=Path)
    sweep_p.add_argument("--out", type=Path, help="output directory override")
    sweep_p.set_defaults(handler=_cmd_sweep)

    fit_p = sub.add_parser("fit", help="fit observation models from traces")
    fit_p.add_argument("traces", type=Path)
    fit_p.add_argument("--channel", choices=CHANNELS, default="severe")
    fit_p.add_argument("--label", type=int, choices=(0, 1), default=0)
    fit_p.add_argument("--method", choices=("empirical", "gmm"), default="empirical")
    fit_p.add_argument("--components", type=int, default=2)
    fit_p.add_argument("--seed", type=int, default=0)
    fit_p.add_argument("--out", type=Path)
    fit_p.set_defaults(handler=_cmd_fit)

    validate_p = sub.add_parser("validate", help="validate a kernel JSON file")
    validate_p.add_argument("kernel", type=Path)
    validate_p.set_defaults(handler=_cmd_validate)

    serve_p = sub.add_parser("serve", help="start the episode debugger service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8000)
    serve_p.set_defaults(handler=_cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, InvalidConfig, FileFormat, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SecsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
