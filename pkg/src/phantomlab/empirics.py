"""Replicated maxima, empirical distribution functions and sup-norm distances."""
from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .csvio import read_csv, write_csv
from .densities import Distribution
from .errors import ConfigurationError, ContractViolation
from .models import ChainModel, Start, check_checkpoints, simulate_block

REPLICA_BLOCK = 1024


# distribution functions -----------------------------------------------------

def _power(values, p):
    """``values ** p`` via logs so that ``(exp(-b/n)) ** n`` is exact to rounding."""
    values = np.asarray(values, dtype=float)
    if np.isscalar(p) and p == 1:
        return values
    with np.errstate(divide="ignore"):
        return np.where(values > 0, np.exp(p * np.log(np.where(values > 0, values, 1.0))), 0.0)


class DF:
    """Right-continuous distribution function, continuous off ``breakpoints``."""

    continuous = True

    def cdf(self, x):
        raise NotImplementedError

    def cdf_left(self, x):
        return self.cdf(x)

    def breakpoints(self) -> np.ndarray:
        return np.empty(0)

    @property
    def upper_limit(self) -> float:
        return 1.0

    def __call__(self, x):
        return self.cdf(x)

    def power(self, x, p):
        return _power(self.cdf(x), p)


@dataclass(frozen=True, eq=False)
class StepDF(DF):
    """Step distribution function with values taken at and right of each jump."""

    jump_points: np.ndarray
    cdf_values: np.ndarray
    right_end: float = field(default=None)

    continuous = False

    def __post_init__(self):
        x = np.asarray(self.jump_points, dtype=float)
        y = np.asarray(self.cdf_values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size == 0:
            raise ContractViolation("jump points and values must be matching non-empty vectors")
        if np.any(np.diff(x) <= 0):
            raise ContractViolation("jump points must be strictly increasing")
        if np.any(np.diff(y) < 0) or y[0] < 0 or y[-1] > 1.0:
            raise ContractViolation("cdf values must be non-decreasing within [0, 1]")
        object.__setattr__(self, "jump_points", x)
        object.__setattr__(self, "cdf_values", y)
        if self.right_end is None:
            full = np.nonzero(y >= 1.0)[0]
            object.__setattr__(self, "right_end", float(x[full[0]]) if full.size else math.inf)

    def cdf(self, x):
        idx = np.searchsorted(self.jump_points, x, side="right") - 1
        vals = self.cdf_values[np.clip(idx, 0, None)]
        return np.where(idx >= 0, vals, 0.0)

    def cdf_left(self, x):
        idx = np.searchsorted(self.jump_points, x, side="left") - 1
        vals = self.cdf_values[np.clip(idx, 0, None)]
        return np.where(idx >= 0, vals, 0.0)

    def breakpoints(self):
        return self.jump_points

    @property
    def upper_limit(self):
        return float(self.cdf_values[-1])

    def to_rows(self):
        return list(zip(self.jump_points, self.cdf_values))


@dataclass(frozen=True, eq=False)
class ContinuousDF(DF):
    """Adapter exposing a closed-form distribution as a :class:`DF`."""

    dist: Distribution

    def cdf(self, x):
        return self.dist.cdf(np.asarray(x, dtype=float))

    @property
    def right_end(self):
        return self.dist.right_end


def as_df(obj) -> DF:
    if isinstance(obj, DF):
        return obj
    if isinstance(obj, Distribution):
        return ContinuousDF(obj)
    raise TypeError(f"cannot interpret {type(obj).__name__} as a distribution function")


def sup_distance(a, p: int, b, q: int) -> float:
    """``sup_x |a(x)**p - b(x)**q|`` evaluated exactly.

    At least one argument must be a step function; the other may be any
    :class:`DF` that is continuous away from its declared breakpoints. Both
    right values and left limits are compared at every breakpoint of either
    function, which is where the supremum of a step-minus-monotone difference
    is attained.
    """
    if p < 1 or q < 1:
        raise ContractViolation("powers must be >= 1")
    a, b = as_df(a), as_df(b)
    if a.continuous and b.continuous:
        raise ContractViolation("sup_distance needs at least one step function")
    pts = np.union1d(a.breakpoints(), b.breakpoints())
    right = np.abs(_power(a.cdf(pts), p) - _power(b.cdf(pts), q))
    left = np.abs(_power(a.cdf_left(pts), p) - _power(b.cdf_left(pts), q))
    tail = abs(a.upper_limit ** p - b.upper_limit ** q)
    return float(min(1.0, max(right.max(initial=0.0), left.max(initial=0.0), tail)))


# sample matrices ----------------------------------------------------------

@dataclass(eq=False)
class MaxSampleMatrix:
    """Running maxima, one row per replica and one column per checkpoint."""

    checkpoints: np.ndarray
    values: np.ndarray
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.checkpoints = check_checkpoints(self.checkpoints)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != self.checkpoints.size:
            raise ContractViolation("values must be replicas x checkpoints")

    @property
    def replicas(self) -> int:
        return self.values.shape[0]

    def index_of(self, n: int) -> int:
        idx = np.searchsorted(self.checkpoints, n)
        if idx >= self.checkpoints.size or self.checkpoints[idx] != n:
            raise ConfigurationError(f"horizon {n} is not a simulated checkpoint")
        return int(idx)

    def column(self, n: int) -> np.ndarray:
        return self.values[:, self.index_of(n)]

    def to_csv(self, path) -> Path:
        rows = ((r, int(n), self.values[r, j])
                for r in range(self.replicas) for j, n in enumerate(self.checkpoints))
        return write_csv(path, ("replica", "checkpoint", "max_value"), rows)

    @classmethod
    def from_csv(cls, path, provenance=None) -> "MaxSampleMatrix":
        header, rows = read_csv(path)
        if header != ["replica", "checkpoint", "max_value"]:
            raise ConfigurationError(f"unexpected header {header}")
        arr = np.array([[float(v) for v in row] for row in rows])
        ck = np.unique(arr[:, 1]).astype(np.int64)
        R = int(arr[:, 0].max()) + 1
        values = np.empty((R, ck.size))
        values[arr[:, 0].astype(int), np.searchsorted(ck, arr[:, 1])] = arr[:, 2]
        return cls(ck, values, dict(provenance or {}))


def checkpoints_hash(checkpoints) -> str:
    ck = np.asarray(checkpoints, dtype=np.int64)
    return hashlib.sha256(ck.tobytes()).hexdigest()[:16]


def cache_key(model_id: str, start: Start, seed: int, replicas: int, checkpoints) -> str:
    return f"{model_id}-{start.kind}-{start.value}-{seed}-{replicas}-{checkpoints_hash(checkpoints)}"


def save_cache(samples: MaxSampleMatrix, cache_dir, key: str) -> Path:
    path = Path(cache_dir) / f"{key}.npz"
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(path, checkpoints=samples.checkpoints, values=samples.values)
    return path


def load_cache(cache_dir, key: str) -> MaxSampleMatrix | None:
    path = Path(cache_dir) / f"{key}.npz"
    if not path.exists():
        return None
    with np.load(path) as data:
        return MaxSampleMatrix(data["checkpoints"], data["values"])


# Monte Carlo engine -------------------------------------------------------

def default_workers() -> int:
    return os.cpu_count() or 1


def _run_block(args):
    model, start, checkpoints, seed, lo, hi = args
    return simulate_block(model, start, checkpoints, seed, range(lo, hi))


def run_replicas(model: ChainModel, start: Start, checkpoints: Sequence[int], replicas: int,
                 seed: int, workers: int | None = 1, cache_dir=None) -> MaxSampleMatrix:
    """Simulate ``replicas`` independent trajectories and collect running maxima.

    Replica ``r`` is driven by its own stream keyed by ``(seed, r)`` and the
    replica blocks are fixed, so the matrix does not depend on ``workers``.
    """
    ck = check_checkpoints(checkpoints)
    if replicas < 1:
        raise ConfigurationError("replicas must be >= 1")
    provenance = {"model_id": model.model_id, "start": start.label(), "seed": int(seed)}
    key = cache_key(model.model_id, start, seed, replicas, ck)
    if cache_dir is not None:
        cached = load_cache(cache_dir, key)
        if cached is not None:
            cached.provenance = provenance
            return cached
    tasks = [(model, start, ck, seed, lo, min(lo + REPLICA_BLOCK, replicas))
             for lo in range(0, replicas, REPLICA_BLOCK)]
    workers = default_workers() if workers is None else int(workers)
    if workers <= 1 or len(tasks) == 1:
        parts = [_run_block(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, tasks))
    samples = MaxSampleMatrix(ck, np.vstack(parts), provenance)
    if cache_dir is not None:
        save_cache(samples, cache_dir, key)
    return samples


def geometric_checkpoints(n0: int, n_max: int, ratio: float = 2.0) -> np.ndarray:
    """``ceil(n0 * ratio**k)`` up to ``n_max`` (always included), deduplicated."""
    if n0 < 1 or n_max < n0 or ratio <= 1:
        raise ConfigurationError("need 1 <= n0 <= n_max and ratio > 1")
    out, k = [], 0
    while True:
        n = math.ceil(n0 * ratio**k - 1e-9)
        if n > n_max:
            break
        out.append(n)
        k += 1
    out.append(n_max)
    return np.unique(np.array(out, dtype=np.int64))


# estimators ---------------------------------------------------------------

def ecdf_at(sorted_sample: np.ndarray, x) -> np.ndarray:
    """Right-closed empirical CDF: share of samples ``<= x``."""
    return np.searchsorted(sorted_sample, x, side="right") / sorted_sample.size


def empirical_max_df(samples: MaxSampleMatrix, checkpoint_index: int) -> StepDF:
    """Empirical CDF of the maxima in one checkpoint column."""
    col = samples.values[:, checkpoint_index]
    if col.size < 1:
        raise ContractViolation("need at least one replica")
    pts, counts = np.unique(col, return_counts=True)
    return StepDF(pts, np.cumsum(counts) / col.size)


@dataclass(frozen=True)
class ExtremalZeroResult:
    tau: float
    horizons: np.ndarray
    levels: np.ndarray
    estimates: np.ndarray

    @property
    def iid_limit(self) -> float:
        return math.exp(-self.tau)

    def rows(self):
        return [(int(n), self.tau, u, p, self.iid_limit)
                for n, u, p in zip(self.horizons, self.levels, self.estimates)]


def extremal_index_zero_check(model: ChainModel, tau: float, horizons, replicas: int, seed: int,
                              workers: int | None = 1, samples: MaxSampleMatrix | None = None
                              ) -> ExtremalZeroResult:
    """Estimate ``P(M_n <= u_n(tau))`` with ``u_n(tau) = F^{-1}(1 - tau/n)``.

    ``F`` is the stationary marginal of the observable and must have a closed
    form quantile. Replicas start from the stationary law.
    """
    if not tau > 0:
        raise ConfigurationError("tau must be > 0")
    F = model.marginal
    if F is None:
        raise ConfigurationError(f"{model.kind} model has no invertible stationary marginal")
    ck = check_checkpoints(horizons)
    if samples is None:
        samples = run_replicas(model, Start.stationary(), ck, replicas, seed, workers)
    levels = np.array([float(F.ppf(max(1.0 - tau / n, 0.0))) for n in ck])
    est = np.array([np.mean(samples.column(int(n)) <= u) for n, u in zip(ck, levels)])
    return ExtremalZeroResult(float(tau), ck, levels, est)
