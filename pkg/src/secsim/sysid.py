"""System identification from labeled telemetry traces.

Traces are sequences of per-interval alert/login counts labeled with the
ground-truth mode (0 = no intrusion, 1 = intrusion).  Observation models
are estimated either as empirical categorical distributions or as
Gaussian mixtures fit by EM and then discretized onto integer support.
"""

from __future__ import annotations

import csv
import json
import math
import warnings as _warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import erf, logsumexp

from .errors import EmptyStratum, FileFormat, NegativeCount

CHANNELS = ("severe", "warning", "logins")
CSV_HEADER = ["t", "severe", "warning", "logins", "label"]

# Relative variance floor for EM; fits that collapse below it are clamped
# and flagged rather than rejected.  When the data variance is itself zero
# the floor falls back to the absolute value below.
VARIANCE_FLOOR_FRACTION = 1e-6
VARIANCE_FLOOR_ABSOLUTE = 1e-12


@dataclass(frozen=True)
class TraceRecord:
    interval_index: int
    severe: int
    warning: int
    logins: int
    label: int

    def channel(self, name: str) -> int:
        if name not in CHANNELS:
            raise ValueError(f"unknown channel {name!r}, expected one of {CHANNELS}")
        return getattr(self, name)


def _record_from_fields(fields: dict, line: int) -> TraceRecord:
    try:
        rec = TraceRecord(
            interval_index=int(fields["t"]),
            severe=int(fields["severe"]),
            warning=int(fields["warning"]),
            logins=int(fields["logins"]),
            label=int(fields["label"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormat(f"bad trace record ({exc})", line=line) from exc
    for name in CHANNELS:
        if rec.channel(name) < 0:
            raise NegativeCount(f"negative {name} count {rec.channel(name)}", line=line)
    if rec.label not in (0, 1):
        raise FileFormat(f"label must be 0 or 1, got {rec.label}", line=line)
    return rec


def ingest_traces(path, fmt: Optional[str] = None) -> list:
    """Load trace records from a json-lines or CSV file.

    The format is inferred from the extension unless given explicitly.
    An empty file yields an empty list; malformed lines raise FileFormat
    (or NegativeCount) with the offending line number.
    """
    path = str(path)
    if fmt is None:
        fmt = "csv" if path.endswith(".csv") else "jsonl"
    if fmt == "jsonl":
        records = []
        with open(path) as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    doc = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise FileFormat(f"not valid JSON ({exc.msg})", line=line_no) from exc
                if not isinstance(doc, dict):
                    raise FileFormat("trace line must be a JSON object", line=line_no)
                records.append(_record_from_fields(doc, line_no))
        return records
    if fmt == "csv":
        records = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
        if not rows:
            return []
        if [h.strip() for h in rows[0]] != CSV_HEADER:
            raise FileFormat(
                f"csv header must be {','.join(CSV_HEADER)}", line=1)
        for line_no, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise FileFormat(f"expected {len(CSV_HEADER)} fields, got {len(row)}",
                                 line=line_no)
            records.append(_record_from_fields(dict(zip(CSV_HEADER, row)), line_no))
        return records
    raise ValueError(f"unknown trace format {fmt!r}")


@dataclass(frozen=True)
class Categorical:
    """A probability distribution over integer support values."""

    values: tuple
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        p = np.ascontiguousarray(np.asarray(self.probs, dtype=np.float64))
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def prob(self, value: int) -> float:
        if value in self.values:
            return float(self.probs[self.values.index(value)])
        return 0.0

    def as_dict(self) -> dict:
        return {"values": list(self.values), "probs": self.probs.tolist()}

    def dense(self, size: int) -> np.ndarray:
        """Probabilities over 0..size-1; support outside is dropped and renormalized."""
        out = np.zeros(size)
        for v, p in zip(self.values, self.probs):
            if 0 <= v < size:
                out[v] += p
        total = out.sum()
        if total <= 0.0:
            raise ValueError("no probability mass inside the requested range")
        return out / total


def fit_empirical(trace: Sequence[TraceRecord], channel: str, label: int) -> Categorical:
    """Empirical categorical estimate from all records with the given label."""
    samples = [r.channel(channel) for r in trace if r.label == label]
    if not samples:
        raise EmptyStratum(f"no records with label {label} for channel {channel!r}")
    values, counts = np.unique(np.asarray(samples, dtype=np.int64), return_counts=True)
    return Categorical(values=tuple(values), probs=counts / counts.sum())


@dataclass(frozen=True)
class MixtureModel:
    """A 1-d Gaussian mixture with integer support for discretization."""

    weights: np.ndarray
    means: np.ndarray
    stddevs: np.ndarray
    support: tuple = (0, 100)
    warnings: tuple = field(default_factory=tuple)
    log_likelihoods: tuple = field(default_factory=tuple, compare=False)

    def __post_init__(self):
        for name in ("weights", "means", "stddevs"):
            a = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=np.float64))
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "support", (int(self.support[0]), int(self.support[1])))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        if abs(self.weights.sum() - 1.0) > 1e-9 or (self.weights < -1e-9).any():
            raise ValueError("mixture weights must form a distribution")
        if (self.stddevs <= 0.0).any():
            raise ValueError("mixture stddevs must be positive")
        if self.support[0] > self.support[1]:
            raise ValueError("support must be a nonempty integer range")

    @property
    def n_components(self) -> int:
        return len(self.weights)

    def cdf(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        z = (x[:, None] - self.means[None, :]) / (self.stddevs[None, :] * math.sqrt(2.0))
        return (0.5 * (1.0 + erf(z))) @ self.weights

    def log_density(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        z = (x[:, None] - self.means[None, :]) / self.stddevs[None, :]
        comp = (-0.5 * z ** 2 - np.log(self.stddevs)[None, :]
                - 0.5 * math.log(2.0 * math.pi) + np.log(self.weights + 1e-300)[None, :])
        return logsumexp(comp, axis=1)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "stddevs": self.stddevs.tolist(),
            "support": list(self.support),
            "warnings": list(self.warnings),
        }

    @staticmethod
    def from_dict(doc: dict) -> "MixtureModel":
        return MixtureModel(
            weights=np.array(doc["weights"], dtype=np.float64),
            means=np.array(doc["means"], dtype=np.float64),
            stddevs=np.array(doc["stddevs"], dtype=np.float64),
            support=tuple(doc.get("support", (0, 100))),
            warnings=tuple(doc.get("warnings", ())),
        )


def _farthest_point_means(samples: np.ndarray, k: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Seeded farthest-point initialization: spread initial means over the data."""
    means = [float(samples[rng.integers(len(samples))])]
    for _ in range(1, k):
        dist = np.min(np.abs(samples[:, None] - np.asarray(means)[None, :]), axis=1)
        means.append(float(samples[int(np.argmax(dist))]))
    return np.asarray(means)


def fit_gmm(samples: Iterable[float], k: int, seed: int = 0,
            max_iter: int = 200, tol: float = 1e-7) -> MixtureModel:
    """Fit a k-component 1-d Gaussian mixture by EM.

    Initialization is deterministic given the seed: farthest-point means,
    uniform weights, pooled variance.  The log-likelihood is nondecreasing
    across iterations except when a variance clamp fires; components whose
    variance falls below the floor are clamped and flagged on the returned
    model rather than rejected.
    """
    samples = np.asarray(list(samples), dtype=np.float64)
    if samples.size == 0:
        raise ValueError("cannot fit a mixture to an empty sample")
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = np.random.default_rng(seed)

    data_var = float(samples.var())
    floor = VARIANCE_FLOOR_FRACTION * data_var if data_var > 0 else VARIANCE_FLOOR_ABSOLUTE
    clamped: set = set()

    means = _farthest_point_means(samples, k, rng)
    weights = np.full(k, 1.0 / k)
    variances = np.full(k, max(data_var, floor))

    def log_components(mu, var, w):
        z2 = (samples[:, None] - mu[None, :]) ** 2 / var[None, :]
        return (-0.5 * z2 - 0.5 * np.log(var)[None, :]
                - 0.5 * math.log(2.0 * math.pi) + np.log(w + 1e-300)[None, :])

    log_likelihoods = []
    for _ in range(max_iter):
        comp = log_components(means, variances, weights)
        norm = logsumexp(comp, axis=1)
        log_likelihoods.append(float(norm.sum()))
        resp = np.exp(comp - norm[:, None])

        bulk = resp.sum(axis=0)
        weights = bulk / samples.size
        means = (resp * samples[:, None]).sum(axis=0) / np.maximum(bulk, 1e-300)
        variances = ((resp * (samples[:, None] - means[None, :]) ** 2).sum(axis=0)
                     / np.maximum(bulk, 1e-300))
        low = variances < floor
        if low.any():
            clamped.update(int(i) for i in np.flatnonzero(low))
            variances = np.maximum(variances, floor)

        if len(log_likelihoods) >= 2 and \
                abs(log_likelihoods[-1] - log_likelihoods[-2]) < tol:
            break

    notes = tuple(
        f"component {i} variance clamped to floor {floor:.3e}" for i in sorted(clamped))
    for note in notes:
        _warnings.warn(note, RuntimeWarning, stacklevel=2)

    lo = int(math.floor(samples.min()))
    hi = int(math.ceil(samples.max()))
    return MixtureModel(weights=weights, means=means, stddevs=np.sqrt(variances),
                        support=(lo, hi), warnings=notes,
                        log_likelihoods=tuple(log_likelihoods))


def discretize_mixture(model: MixtureModel,
                       support: Optional[Sequence[int]] = None) -> Categorical:
    """Integrate the mixture density over unit cells [v-0.5, v+0.5).

    The result is truncated to the support and renormalized, so it always
    sums to one.
    """
    if support is None:
        support = range(model.support[0], model.support[1] + 1)
    values = np.asarray(list(support), dtype=np.int64)
    if values.size == 0:
        raise ValueError("support must be nonempty")
    mass = model.cdf(values + 0.5) - model.cdf(values - 0.5)
    mass = np.clip(mass, 0.0, None)
    total = mass.sum()
    if total <= 0.0:
        # All mass lies outside the support; fall back to nearest-cell weights
        # through the log-density so renormalization stays well defined.
        log_m = model.log_density(values.astype(np.float64))
        mass = np.exp(log_m - log_m.max())
        total = mass.sum()
    return Categorical(values=tuple(values), probs=mass / total)


def binned_mixture_probs(model: MixtureModel, bin_edges: np.ndarray) -> np.ndarray:
    """Probability of each bin [edge_i, edge_{i+1}), renormalized over the bins."""
    edges = np.asarray(bin_edges, dtype=np.float64)
    cdf = model.cdf(edges)
    mass = np.clip(np.diff(cdf), 0.0, None)
    total = mass.sum()
    if total <= 0.0:
        raise ValueError("mixture has no mass inside the binned range")
    return mass / total
