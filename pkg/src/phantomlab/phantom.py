"""Level sequences, phantom distribution functions built from them, and the
checks that tie the two together.

A level sequence ``v_n`` for mass ``beta`` satisfies ``G(v_n)**n = exp(-beta)``.
Conversely a non-decreasing sequence defines the step function that equals
``exp(-beta/n)`` on ``[v_n, v_next)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from .empirics import DF, ContinuousDF, MaxSampleMatrix, StepDF, as_df
from .errors import CalibrationError, ConfigurationError, ContractViolation

DEFAULT_BETA = 1.0


@dataclass(frozen=True, eq=False)
class LevelSequence:
    beta: float
    horizons: np.ndarray
    levels: np.ndarray
    source: str = "from_df"

    def __post_init__(self):
        h = np.asarray(self.horizons, dtype=float)
        v = np.asarray(self.levels, dtype=float)
        if not self.beta > 0:
            raise ContractViolation("beta must be > 0")
        if h.ndim != 1 or h.shape != v.shape or h.size == 0:
            raise ContractViolation("horizons and levels must be matching non-empty vectors")
        if np.any(np.diff(h) <= 0) or h[0] <= 0:
            raise ContractViolation("horizons must be positive and strictly increasing")
        if np.any(np.diff(v) < 0):
            raise ContractViolation("levels must be non-decreasing")
        if self.source not in ("from_df", "from_samples"):
            raise ContractViolation(f"unknown level source {self.source!r}")
        object.__setattr__(self, "horizons", h)
        object.__setattr__(self, "levels", v)

    def level(self, n) -> float:
        idx = np.nonzero(self.horizons == n)[0]
        if idx.size == 0:
            raise ConfigurationError(f"no level calibrated at horizon {n}")
        return float(self.levels[idx[0]])

    def rows(self):
        return [(int(n) if float(n).is_integer() else n, v) for n, v in zip(self.horizons, self.levels)]


def root_mass(beta: float, n) -> np.ndarray:
    """``exp(-beta/n)``, the value a phantom df takes at level ``v_n``."""
    return np.exp(-beta / np.asarray(n, dtype=float))


# calibration ----------------------------------------------------------------

def _bisect_inverse(df: DF, q: float) -> float:
    hi = 1.0
    while df.cdf(hi) < q:
        hi *= 2.0
        if not math.isfinite(hi):
            raise CalibrationError(f"distribution function never reaches {q!r}")
    lo = -1.0
    while df.cdf(lo) >= q:
        lo *= 2.0
        if not math.isfinite(lo):
            return -math.inf
    for _ in range(2200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if df.cdf(mid) >= q:
            hi = mid
        else:
            lo = mid
    return hi


def generalized_inverse(g, q: float) -> float:
    """``inf{x : g(x) >= q}``."""
    g = as_df(g)
    if isinstance(g, StepDF):
        idx = np.searchsorted(g.cdf_values, q, side="left")
        if idx >= g.cdf_values.size:
            raise CalibrationError(f"step df never reaches {q!r}; its values stop at {g.upper_limit!r}")
        return float(g.jump_points[idx])
    if isinstance(g, ContinuousDF):
        x = float(g.dist.ppf(q))
        if not math.isfinite(x):
            raise CalibrationError(f"quantile {q!r} is not finite")
        return x
    inverse = getattr(g, "ppf", None)
    if inverse is not None:
        return float(inverse(q))
    return _bisect_inverse(g, q)


def levels_from_df(g, beta: float, horizons) -> LevelSequence:
    """``v_n = inf{x : g(x)**n >= exp(-beta)}`` for every horizon."""
    if not beta > 0:
        raise ContractViolation("beta must be > 0")
    horizons = np.asarray(horizons)
    levels = [generalized_inverse(g, float(q)) for q in root_mass(beta, horizons)]
    return LevelSequence(beta, horizons, np.maximum.accumulate(levels), "from_df")


def empirical_quantile(sorted_sample: np.ndarray, q: float) -> float:
    """Smallest sample value whose empirical CDF is at least ``q``."""
    R = sorted_sample.size
    k = max(1, math.ceil(q * R - 1e-9))
    return float(sorted_sample[min(k, R) - 1])


def levels_from_samples(samples: MaxSampleMatrix, beta: float = DEFAULT_BETA) -> LevelSequence:
    """Empirical ``exp(-beta)``-quantile of every checkpoint column, made monotone."""
    if not beta > 0:
        raise ContractViolation("beta must be > 0")
    R = samples.replicas
    if R < 100:
        raise ContractViolation(f"need at least 100 replicas, got {R}")
    q = math.exp(-beta)
    if q < 1.0 / R:
        raise CalibrationError(f"exp(-beta) = {q:.3g} is below 1/R = {1.0 / R:.3g}; use more replicas or a smaller beta")
    cols = np.sort(samples.values, axis=0)
    raw = [empirical_quantile(cols[:, j], q) for j in range(cols.shape[1])]
    return LevelSequence(beta, samples.checkpoints, np.maximum.accumulate(raw), "from_samples")


def extend_levels(levels: LevelSequence, samples: MaxSampleMatrix, stretch) -> LevelSequence:
    """Levels beyond the last simulated horizon ``N``.

    Since ``P(M_N <= v_{tN}) -> exp(-beta/t)``, the empirical
    ``exp(-beta/t)``-quantile of ``M_N`` estimates ``v_{tN}`` for ``t > 1``.
    Stretches whose quantile level exceeds ``1 - 1/R`` are dropped.
    """
    N = int(samples.checkpoints[-1])
    if levels.horizons[-1] != N:
        raise ConfigurationError("levels must end at the last simulated checkpoint")
    col = np.sort(samples.values[:, -1])
    R = col.size
    horizons, values = list(levels.horizons), list(levels.levels)
    for t in sorted(float(s) for s in stretch):
        if t <= 1:
            continue
        q = math.exp(-levels.beta / t)
        if q > 1.0 - 1.0 / R:
            break
        horizons.append(N * t)
        values.append(max(values[-1], empirical_quantile(col, q)))
    return LevelSequence(levels.beta, horizons, values, levels.source)


# phantom construction -----------------------------------------------------

def _merged_nodes(levels: LevelSequence):
    """Distinct level values with the log-mass of the largest horizon sharing each."""
    v = levels.levels
    log_mass = -levels.beta / levels.horizons
    last = np.r_[v[1:] != v[:-1], True]
    return v[last], log_mass[last]


def phantom_from_levels(levels: LevelSequence, right_end: float | None = None) -> StepDF:
    """Step phantom df: 0 below ``v_1``, ``exp(-beta/n)`` on ``[v_n, v_next)``.

    With finitely many levels the supremum of the sequence is not observed, so
    by default the df keeps the value ``exp(-beta/n_last)`` beyond the last
    level and its right end is infinite. Passing ``right_end`` (at or above the
    last level) adds the final jump to 1 there.
    """
    if np.any(np.diff(levels.levels) < 0):
        raise ContractViolation("levels must be non-decreasing")
    nodes, log_mass = _merged_nodes(levels)
    values = np.exp(log_mass)
    if right_end is not None and math.isfinite(right_end):
        if right_end < nodes[-1]:
            raise ContractViolation("right end lies below the last level")
        if right_end == nodes[-1]:
            values[-1] = 1.0
        else:
            nodes = np.r_[nodes, right_end]
            values = np.r_[values, 1.0]
        return StepDF(nodes, values, float(right_end))
    return StepDF(nodes, values)


@dataclass(frozen=True, eq=False)
class LogLinearDF(DF):
    """Continuous version of a phantom step df.

    Between consecutive level points the logarithm of the df is linear in
    ``x``; outside ``[v_1, v_last]`` it coincides with the step df.
    """

    nodes: np.ndarray
    log_values: np.ndarray
    step: StepDF
    approximate: bool = False
    _lo: float = field(default=None)

    def __post_init__(self):
        if self._lo is None:
            object.__setattr__(self, "_lo", float(self.nodes[0]))

    @property
    def right_end(self):
        return self.step.right_end

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        # strictly inside the level range; nodes themselves take the step value
        inside = (x >= self._lo) & (x < self.nodes[-1]) & ~np.isin(x, self.nodes)
        if self.approximate:
            ramp = np.exp(self.log_values[-1]) * (x - self._lo) / (self.nodes[-1] - self._lo)
            return np.where(inside, ramp, self.step.cdf(x))
        logs = np.interp(x, self.nodes, self.log_values)
        return np.where(inside, np.exp(logs), self.step.cdf(x))

    def cdf_left(self, x):
        x = np.asarray(x, dtype=float)
        at_edges = (x == self._lo) | (x > self.nodes[-1])
        return np.where(at_edges, self.step.cdf_left(x), self.cdf(x))

    def breakpoints(self):
        pts = [self._lo] if not self.approximate else []
        if math.isfinite(self.step.right_end) and self.step.right_end > self.nodes[-1]:
            pts.append(self.step.right_end)
        return np.array(pts, dtype=float)

    @property
    def upper_limit(self):
        return self.step.upper_limit

    def ppf(self, q: float) -> float:
        if q <= 0:
            return -math.inf
        if self.approximate:
            top = math.exp(self.log_values[-1])
            if q <= top:
                return self._lo + (self.nodes[-1] - self._lo) * q / top
        else:
            lq = math.log(q)
            if lq <= self.log_values[0]:
                return float(self.nodes[0])
            if lq <= self.log_values[-1]:
                return float(np.interp(lq, self.log_values, self.nodes))
        return generalized_inverse(self.step, q)


def continuize(g: StepDF) -> LogLinearDF:
    """Log-linear interpolation of a phantom step df between its level points.

    Only the jumps strictly inside the level range are smoothed. A df with a
    single level point has no range to interpolate over and gets a linear ramp
    on ``[v - eps, v]`` with ``eps = 1e-9 * max(1, |v|)``; the result is
    flagged ``approximate``.
    """
    nodes, values = g.jump_points, g.cdf_values
    if values[-1] >= 1.0 and nodes.size > 1:
        # the final jump to 1 sits at the right end, not at a level point
        nodes, values = nodes[:-1], values[:-1]
    with np.errstate(divide="ignore"):
        logs = np.log(values)
    if nodes.size == 1:
        v = float(nodes[0])
        eps = 1e-9 * max(1.0, abs(v))
        return LogLinearDF(nodes, logs, g, approximate=True, _lo=v - eps)
    return LogLinearDF(nodes, logs, g)


def band_bound(levels: LevelSequence, p: float) -> np.ndarray:
    """Per-band bound on ``|g**p - H**p|``: ``exp(-beta p/n_next) - exp(-beta p/n)``."""
    _, log_mass = _merged_nodes(levels)
    lo = np.exp(p * log_mass[:-1])
    hi = np.exp(p * log_mass[1:])
    return hi - lo


# checks ---------------------------------------------------------------------

@dataclass(frozen=True)
class ObrienRow:
    n: int
    t: float
    estimate: float
    target: float

    @property
    def abs_error(self) -> float:
        return abs(self.estimate - self.target)

    def as_tuple(self):
        return (self.n, self.t, self.estimate, self.target, self.abs_error)


def obrien_horizons(ns, t_grid) -> list[int]:
    """Every horizon ``[n t]`` that :func:`verify_obrien` will need."""
    return sorted({int(math.floor(n * t)) for n in ns for t in t_grid} | {int(n) for n in ns})


def verify_obrien(samples: MaxSampleMatrix, levels: LevelSequence, t_grid, horizons=None) -> list[ObrienRow]:
    """Empirical ``P(M_[nt] <= v_n)`` next to its limit ``exp(-beta t)``."""
    ns = [int(n) for n in (levels.horizons if horizons is None else horizons)]
    t_grid = [float(t) for t in t_grid]
    if any(t <= 0 for t in t_grid):
        raise ConfigurationError("t values must be > 0")
    have = set(int(n) for n in samples.checkpoints)
    missing = [m for m in obrien_horizons(ns, t_grid) if m not in have]
    if missing:
        raise ConfigurationError(f"missing checkpoints; required horizons not simulated: {missing}")
    rows = []
    for n in ns:
        v = levels.level(n)
        for t in t_grid:
            col = samples.column(int(math.floor(n * t)))
            rows.append(ObrienRow(n, t, float(np.mean(col <= v)), math.exp(-levels.beta * t)))
    return rows


@dataclass(frozen=True)
class RegularityReport:
    points: np.ndarray
    ratios: np.ndarray
    regular: bool


def regularity_ratios(g, tol: float = 0.05) -> RegularityReport:
    """``(1 - g(x-)) / (1 - g(x))`` at the jump points of ``g`` below its right end.

    Points with ``g(x) = 1`` are skipped. The df is reported regular when the
    last ratio is within ``tol`` of 1; a df without any admissible point is
    regular only if it is continuous.
    """
    g = as_df(g)
    if g.continuous:
        pts = np.asarray(getattr(g, "nodes", np.empty(0)), dtype=float)
        pts = pts[g.cdf(pts) < 1.0]
    else:
        pts = g.breakpoints()
    right = g.cdf(pts)
    keep = right < 1.0
    pts, right = pts[keep], right[keep]
    ratios = (1.0 - g.cdf_left(pts)) / (1.0 - right)
    if ratios.size == 0:
        return RegularityReport(pts, ratios, bool(g.continuous))
    return RegularityReport(pts, ratios, bool(abs(ratios[-1] - 1.0) <= tol))


def calibrate_phantom(samples: MaxSampleMatrix, beta: float = DEFAULT_BETA, stretch=None):
    """Levels, step phantom and its continuous version from stationary maxima.

    ``stretch`` lists multipliers ``t > 1`` for :func:`extend_levels`; by
    default a geometric ladder up to the largest usable quantile.
    """
    levels = levels_from_samples(samples, beta)
    if stretch is None:
        stretch = np.geomspace(1.05, 1e6, 300)
    levels = extend_levels(levels, samples, stretch)
    step = phantom_from_levels(levels)
    return levels, step, continuize(step)
