"""Exact maxima laws for finite-state chains.

``P_lambda(M_n <= x)`` is the probability that the chain stays inside
``A = {i : values[i] <= x}`` for ``n`` consecutive observations, i.e.
``lambda|_A (P|_A)^(n-1) 1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_ROW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteChain:
    P: np.ndarray
    values: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        values = np.array(self.values, dtype=float)
        lam = np.array(self.lam, dtype=float)
        m = P.shape[0]
        problems = []
        if P.ndim != 2 or P.shape != (m, m):
            problems.append("P must be square")
        if m > 200:
            problems.append(f"at most 200 states supported, got {m}")
        if values.shape != (m,) or lam.shape != (m,):
            problems.append("values and lambda need one entry per state")
        if np.any(P < 0) or np.any(lam < 0):
            problems.append("entries must be >= 0")
        if P.ndim == 2 and np.any(np.abs(P.sum(axis=1) - 1.0) > _ROW_TOL):
            problems.append("rows of P must sum to 1 within 1e-12")
        if lam.ndim == 1 and abs(lam.sum() - 1.0) > _ROW_TOL:
            problems.append("lambda must sum to 1 within 1e-12")
        if problems:
            raise ValidationError("; ".join(problems))
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lam", lam)

    @property
    def m(self) -> int:
        return self.P.shape[0]

    def started_at(self, s: int) -> "FiniteChain":
        lam = np.zeros(self.m)
        lam[s] = 1.0
        return FiniteChain(self.P, self.values, lam)


def exact_max_cdf(chain: FiniteChain, n: int, x: float) -> float:
    """Exact ``P_lambda(M_n <= x)`` by ``n - 1`` substochastic vector products."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    inside = chain.values <= x
    if inside.all():
        return 1.0
    if not inside.any():
        return 0.0
    block = chain.P[np.ix_(inside, inside)]
    v = chain.lam[inside]
    for _ in range(n - 1):
        v = v @ block
    return float(v.sum())


def exact_max_cdf_curve(chain: FiniteChain, horizons, x: float) -> np.ndarray:
    """``exact_max_cdf`` at several increasing horizons in a single pass."""
    horizons = [int(n) for n in horizons]
    inside = chain.values <= x
    if inside.all():
        return np.ones(len(horizons))
    block = chain.P[np.ix_(inside, inside)]
    v = chain.lam[inside]
    out, step = [], 1
    for n in horizons:
        while step < n:
            v = v @ block
            step += 1
        out.append(v.sum())
    return np.array(out, dtype=float)


def _is_primitive(P: np.ndarray) -> bool:
    m = P.shape[0]
    support = (P > 0).astype(np.int64)
    power = support.copy()
    for _ in range(m * m):
        if power.all():
            return True
        power = np.minimum(power @ support, 1)
    return bool(power.all())


def _has_common_successor(P: np.ndarray) -> bool:
    """Some power of P has a strictly positive column (single aperiodic class)."""
    m = P.shape[0]
    support = (P > 0).astype(np.int64)
    power = support.copy()
    for _ in range(m * m):
        if power.all(axis=0).any():
            return True
        power = np.minimum(power @ support, 1)
    return bool(power.all(axis=0).any())


def stationary_distribution(P, require_primitive: bool = True) -> np.ndarray:
    """Solve ``pi P = pi``, ``sum(pi) = 1`` by a dense linear solve.

    With ``require_primitive`` (the default) the chain must be irreducible and
    aperiodic, checked as: some power ``P^k``, ``k <= m^2``, is entrywise
    positive. Otherwise it is enough that all states reach one common state in
    the same number of steps, which still pins down a unique ``pi`` but
    tolerates transient states.
    """
    P = np.asarray(P, dtype=float)
    m = P.shape[0]
    if P.ndim != 2 or P.shape != (m, m):
        raise ValidationError("transition matrix must be square")
    if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > _ROW_TOL):
        raise ValidationError("transition matrix must be row-stochastic")
    if require_primitive:
        if not _is_primitive(P):
            raise ValidationError("chain is not irreducible and aperiodic: no power P^k (k <= m^2) is entrywise positive")
    elif not _has_common_successor(P):
        raise ValidationError("chain has no unique aperiodic recurrent class: no power P^k has a positive column")
    A = P.T - np.eye(m)
    A[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = np.max(np.abs(pi @ P - pi))
    if residual >= 1e-10:
        raise ValidationError(f"stationary solve residual {residual:.3g} exceeds 1e-10")
    return pi


def exact_quenched_gap(chain: FiniteChain, s: int, n: int, x_grid) -> float:
    """``max_x |P_s(M_n <= x) - P_pi(M_n <= x)|`` over ``x_grid``."""
    x_grid = np.atleast_1d(np.asarray(x_grid, dtype=float))
    if x_grid.size == 0:
        raise ValidationError("x_grid must not be empty")
    pi = stationary_distribution(chain.P, require_primitive=False)
    point = chain.started_at(s)
    stat = FiniteChain(chain.P, chain.values, pi)
    return max(abs(exact_max_cdf(point, n, x) - exact_max_cdf(stat, n, x)) for x in x_grid)


def reachable_to(P, targets) -> np.ndarray:
    """States that can hit ``targets`` in one or more steps, plus the targets."""
    P = np.asarray(P)
    hit = np.zeros(P.shape[0], dtype=bool)
    hit[np.asarray(targets, dtype=bool)] = True
    while True:
        grown = hit | ((P[:, hit] > 0).any(axis=1))
        if (grown == hit).all():
            return hit
        hit = grown
