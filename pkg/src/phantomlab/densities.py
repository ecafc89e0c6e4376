"""Target densities, marginal laws and symmetric proposal increments.

Every distribution here exposes vectorised ``pdf``, ``cdf`` and ``ppf``.
Sampling is always done by inverse CDF from uniforms supplied by the caller,
so the number of stream values consumed per draw is fixed and known.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import special

from .errors import ConfigurationError, ModelDefinitionError

# Generator.random() returns k * 2**-53; shifting by half a step maps onto the
# open interval (0, 1) and is exactly symmetric about 1/2.
_HALF_ULP = 2.0 ** -54


def open_uniform(u):
    """Map ``[0, 1)`` stream values onto ``(0, 1)``."""
    return np.asarray(u, dtype=float) + _HALF_ULP


class Distribution:
    """Base class for univariate laws with a closed-form quantile function."""

    family: str = ""
    continuous: bool = True

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def ppf(self, q):
        raise NotImplementedError

    @property
    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    @property
    def right_end(self) -> float:
        return self.support[1]

    def sample(self, u):
        """Inverse-CDF sample from stream values ``u`` in ``[0, 1)``."""
        return self.ppf(open_uniform(u))

    def spec(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class Pareto(Distribution):
    """Pareto law with density ``alpha * x_min**alpha * x**(-alpha-1)`` on ``[x_min, inf)``."""

    alpha: float
    x_min: float = 1.0
    family = "pareto"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ModelDefinitionError(f"pareto shape must be > 0, got {self.alpha}")
        if not self.x_min > 0:
            raise ModelDefinitionError(f"pareto x_min must be > 0, got {self.x_min}")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        safe = np.maximum(x, self.x_min)
        val = self.alpha * self.x_min**self.alpha * np.power(safe, -self.alpha - 1.0)
        return np.where(x >= self.x_min, val, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        safe = np.maximum(x, self.x_min)
        return np.where(x >= self.x_min, 1.0 - np.power(self.x_min / safe, self.alpha), 0.0)

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        with np.errstate(divide="ignore"):
            return self.x_min * np.power(1.0 - q, -1.0 / self.alpha)

    @property
    def support(self):
        return (self.x_min, math.inf)

    def spec(self):
        return {"family": "pareto", "alpha": self.alpha, "x_min": self.x_min}


@dataclass(frozen=True)
class StudentT(Distribution):
    dof: float
    family = "student_t"

    def __post_init__(self):
        if not self.dof > 0:
            raise ModelDefinitionError(f"student_t dof must be > 0, got {self.dof}")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        nu = self.dof
        logc = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * math.log(nu * math.pi)
        return np.exp(logc - (nu + 1) / 2 * np.log1p(x * x / nu))

    def cdf(self, x):
        return special.stdtr(self.dof, np.asarray(x, dtype=float))

    def ppf(self, q):
        return special.stdtrit(self.dof, np.asarray(q, dtype=float))

    def spec(self):
        return {"family": "student_t", "dof": self.dof}


@dataclass(frozen=True)
class Gaussian(Distribution):
    mu: float = 0.0
    sigma: float = 1.0
    family = "gaussian"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ModelDefinitionError(f"gaussian sigma must be > 0, got {self.sigma}")

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2 * math.pi))

    def cdf(self, x):
        return special.ndtr((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def ppf(self, q):
        return self.mu + self.sigma * special.ndtri(np.asarray(q, dtype=float))

    def spec(self):
        return {"family": "gaussian", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class Uniform(Distribution):
    low: float = 0.0
    high: float = 1.0
    family = "uniform"

    def __post_init__(self):
        if not self.high > self.low:
            raise ModelDefinitionError("uniform requires high > low")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.low) & (x <= self.high)
        return np.where(inside, 1.0 / (self.high - self.low), 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.low) / (self.high - self.low), 0.0, 1.0)

    def ppf(self, q):
        return self.low + (self.high - self.low) * np.asarray(q, dtype=float)

    def sample(self, u):
        # raw stream values keep u = 0 -> low exactly
        return self.ppf(u)

    @property
    def support(self):
        return (self.low, self.high)

    def spec(self):
        return {"family": "uniform", "low": self.low, "high": self.high}


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float = 1.0
    family = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ModelDefinitionError("exponential rate must be > 0")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def ppf(self, q):
        with np.errstate(divide="ignore"):
            return -np.log1p(-np.asarray(q, dtype=float)) / self.rate

    @property
    def support(self):
        return (0.0, math.inf)

    def spec(self):
        return {"family": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Constant(Distribution):
    """Point mass at ``value``."""

    value: float
    family = "constant"
    continuous = False

    def pdf(self, x):
        raise ModelDefinitionError("a point mass has no density")

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.value, 1.0, 0.0)

    def ppf(self, q):
        return np.full(np.shape(q), float(self.value))

    def sample(self, u):
        return self.ppf(u)

    @property
    def support(self):
        return (self.value, self.value)

    def spec(self):
        return {"family": "constant", "value": self.value}


@dataclass(frozen=True, eq=False)
class CustomTable(Distribution):
    """Piecewise-constant density: ``density[i]`` on ``[x[i], x[i+1])``.

    The density attached to the last grid point is unused (it closes the
    support). Normalisation is checked once with the midpoint rule.
    """

    x: tuple
    density: tuple
    family = "custom_table"
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        d = np.asarray(self.density, dtype=float)
        if x.ndim != 1 or x.shape != d.shape or x.size < 2:
            raise ModelDefinitionError("custom_table needs matching x/density vectors of length >= 2")
        if np.any(np.diff(x) <= 0):
            raise ModelDefinitionError("custom_table grid must be strictly increasing")
        if np.any(~np.isfinite(d)) or np.any(d < 0):
            raise ModelDefinitionError("custom_table densities must be finite and >= 0")
        widths = np.diff(x)
        cells = d[:-1]
        total = float(np.sum(cells * widths))
        if abs(total - 1.0) > 1e-6:
            raise ModelDefinitionError(f"custom_table density integrates to {total!r}, not 1")
        object.__setattr__(self, "x", tuple(float(v) for v in x))
        object.__setattr__(self, "density", tuple(float(v) for v in d))
        cum = np.concatenate([[0.0], np.cumsum(cells * widths)])
        object.__setattr__(self, "_cum", cum / cum[-1])

    def pdf(self, x):
        grid = np.asarray(self.x)
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(grid, x, side="right") - 1
        inside = (idx >= 0) & (idx < grid.size - 1)
        cells = np.asarray(self.density)[np.clip(idx, 0, grid.size - 2)]
        return np.where(inside, cells, 0.0)

    def cdf(self, x):
        return np.interp(np.asarray(x, dtype=float), np.asarray(self.x), self._cum)

    def ppf(self, q):
        # flat stretches of the CDF (zero-density cells) are skipped by taking
        # the leftmost preimage
        q = np.asarray(q, dtype=float)
        grid = np.asarray(self.x)
        idx = np.clip(np.searchsorted(self._cum, q, side="left"), 1, grid.size - 1)
        lo, hi = self._cum[idx - 1], self._cum[idx]
        frac = np.where(hi > lo, (q - lo) / np.where(hi > lo, hi - lo, 1.0), 0.0)
        return grid[idx - 1] + frac * (grid[idx] - grid[idx - 1])

    @property
    def support(self):
        return (self.x[0], self.x[-1])

    def spec(self):
        return {"family": "custom_table", "x": list(self.x), "density": list(self.density)}


# Proposals ---------------------------------------------------------------

@dataclass(frozen=True)
class Proposal:
    """Symmetric increment law for random-walk Metropolis."""

    family: str
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in ("gaussian", "uniform", "cauchy"):
            raise ModelDefinitionError(f"unknown proposal family {self.family!r}")
        if not self.scale > 0:
            raise ModelDefinitionError("proposal scale must be > 0")

    def increment(self, u):
        """Increment Z from stream values ``u``; one value per increment."""
        q = open_uniform(u)
        if self.family == "gaussian":
            return self.scale * special.ndtri(q)
        if self.family == "uniform":
            return self.scale * (2.0 * q - 1.0)
        return self.scale * np.tan(np.pi * (q - 0.5))

    def spec(self):
        key = {"gaussian": "sigma", "uniform": "half_width", "cauchy": "scale"}[self.family]
        return {"family": self.family, key: self.scale}


def proposal_from_spec(spec: dict[str, Any]) -> Proposal:
    spec = dict(spec)
    family = spec.pop("family", None)
    key = {"gaussian": "sigma", "uniform": "half_width", "cauchy": "scale"}.get(family)
    if key is None:
        raise ConfigurationError(f"unknown proposal family {family!r}")
    scale = spec.pop(key, 1.0)
    if spec:
        raise ConfigurationError(f"unknown proposal keys: {sorted(spec)}")
    return Proposal(family, float(scale))


_FAMILIES = {
    "pareto": (Pareto, {"alpha", "x_min"}),
    "student_t": (StudentT, {"dof"}),
    "gaussian": (Gaussian, {"mu", "sigma"}),
    "uniform": (Uniform, {"low", "high"}),
    "exponential": (Exponential, {"rate"}),
    "constant": (Constant, {"value"}),
    "custom_table": (CustomTable, {"x", "density"}),
}


def distribution_from_spec(spec: dict[str, Any]) -> Distribution:
    """Build a distribution from a ``{"family": ..., **params}`` mapping."""
    spec = dict(spec)
    family = spec.pop("family", None)
    if family not in _FAMILIES:
        raise ConfigurationError(f"unknown distribution family {family!r}")
    cls, allowed = _FAMILIES[family]
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigurationError(f"unknown keys for {family}: {sorted(unknown)}")
    if family == "custom_table":
        return CustomTable(tuple(spec["x"]), tuple(spec["density"]))
    return cls(**{k: float(v) for k, v in spec.items()})


@dataclass(frozen=True)
class BlockMaximum(Distribution):
    """Law of the maximum of ``k`` independent draws from ``base``."""

    base: Distribution
    k: int

    @property
    def family(self):
        return "block_max"

    @property
    def continuous(self):
        return self.base.continuous

    def cdf(self, x):
        return np.power(self.base.cdf(x), self.k)

    def pdf(self, x):
        return self.k * np.power(self.base.cdf(x), self.k - 1) * self.base.pdf(x)

    def ppf(self, q):
        return self.base.ppf(np.power(np.asarray(q, dtype=float), 1.0 / self.k))

    @property
    def support(self):
        return self.base.support

    def spec(self):
        return {"family": "block_max", "k": self.k, "base": self.base.spec()}
