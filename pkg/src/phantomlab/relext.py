"""Relative extremal index between two sequences of maxima.

If ``P(M_n <= x) ~ P(M'_n <= x) ** theta`` uniformly in ``x``, then
``log P(M_n <= x) / log P(M'_n <= x)`` is close to ``theta`` wherever both
probabilities stay away from 0 and 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .empirics import MaxSampleMatrix, ecdf_at
from .errors import ContractViolation, EstimationError

MIN_POINTS = 10


@dataclass(frozen=True)
class ThetaEstimate:
    theta_hat: float
    per_point: np.ndarray  # columns: x, log-ratio
    valid_fraction: float
    n: int
    replicas: int

    def summary(self) -> dict:
        return {"theta_hat": self.theta_hat, "valid_fraction": self.valid_fraction,
                "n": self.n, "R": self.replicas, "points": int(self.per_point.shape[0])}


def estimate_theta(a: MaxSampleMatrix, b: MaxSampleMatrix, checkpoint_index: int,
                   band: tuple[float, float] = (0.05, 0.95)) -> ThetaEstimate:
    """Median of ``log P_a(M_n <= x) / log P_b(M'_n <= x)`` over admissible ``x``.

    Evaluation points are the distinct values of both samples; a point is
    admissible when both empirical probabilities lie inside ``band``.
    """
    low, high = band
    if not 0 < low < high < 1:
        raise ContractViolation("band must satisfy 0 < low < high < 1")
    n = int(a.checkpoints[checkpoint_index])
    if int(b.checkpoints[checkpoint_index]) != n:
        raise ContractViolation("both matrices must share the checkpoint")
    sa = np.sort(a.values[:, checkpoint_index])
    sb = np.sort(b.values[:, checkpoint_index])
    xs = np.union1d(sa, sb)
    pa, pb = ecdf_at(sa, xs), ecdf_at(sb, xs)
    ok = (pa >= low) & (pa <= high) & (pb >= low) & (pb <= high)
    if ok.sum() < MIN_POINTS:
        raise EstimationError(f"only {int(ok.sum())} admissible points (need {MIN_POINTS}); widen the band or add replicas")
    ratios = np.log(pa[ok]) / np.log(pb[ok])
    theta = float(np.median(ratios))
    return ThetaEstimate(theta, np.column_stack([xs[ok], ratios]), float(ok.mean()), n,
                         int(min(a.replicas, b.replicas)))


def theta_quantile_transfer(theta: float, alpha: float) -> float:
    """Limit of ``P(M'_n <= v_n)`` when ``P(M_n <= v_n) -> alpha``: ``alpha ** (1/theta)``."""
    if not theta > 0:
        raise ContractViolation("theta must be > 0")
    if not 0 < alpha < 1:
        raise ContractViolation("alpha must lie in (0, 1)")
    return alpha ** (1.0 / theta)
