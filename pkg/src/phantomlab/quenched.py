"""Point-started ("quenched") chains against a stationary-calibrated phantom df."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .empirics import MaxSampleMatrix, as_df, empirical_max_df, run_replicas, sup_distance
from .errors import ConfigurationError, DiagnosticFailure
from .models import ChainModel, FiniteModel, Start, derive_seed, replica_stream
from .oracle import FiniteChain, reachable_to, stationary_distribution

DEFAULT_START_QUANTILES = (0.1, 0.5, 0.9, 0.999)


def bad_set_member(x_value: float, g_star: float) -> bool:
    """Whether an observable value lies in ``{f(y) >= G*}``; never for ``G* = +inf``."""
    if math.isinf(g_star) and g_star > 0:
        return False
    return bool(x_value >= g_star)


def start_observable(model: ChainModel, start: Start) -> float:
    if isinstance(model, FiniteModel):
        return float(model.values[int(start.value)])
    return float(start.value)


def default_starts(model: ChainModel, extra=()) -> list[float]:
    """Target quantiles 0.1, 0.5, 0.9, 0.999 followed by any extra points."""
    F = model.marginal
    if F is None:
        raise ConfigurationError("default start points need a model with a closed-form marginal")
    return [float(F.ppf(q)) for q in DEFAULT_START_QUANTILES] + [float(s) for s in extra]


def finite_bad_states(model: FiniteModel, g_star: float) -> np.ndarray:
    """``S_0`` for a finite chain: ``B_0`` and every state that can reach it."""
    in_b0 = np.array([bad_set_member(v, g_star) for v in model.values])
    return reachable_to(model.P, in_b0)


def finite_truncation_point(model: FiniteModel) -> float:
    """Right end for a phantom of a finite chain: the smallest observable value
    above everything the stationary chain visits (``inf`` if there is none).

    Placing ``G*`` at the top stationary value would put that value itself in
    ``B_0`` and flag every recurrent state.
    """
    pi = model.stationary
    top = float(np.max(model.values[pi > 0]))
    above = model.values[model.values > top]
    return float(above.min()) if above.size else math.inf


@dataclass
class QuenchedReport:
    start_points: list
    horizons: np.ndarray
    gap: np.ndarray  # starts x horizons
    stationary_gap: np.ndarray | None
    bad_set_hits: list
    replicas: int

    def rows(self):
        out = []
        for i, s in enumerate(self.start_points):
            for j, n in enumerate(self.horizons):
                ref = self.stationary_gap[j] if self.stationary_gap is not None else math.nan
                out.append((s, int(n), self.gap[i, j], ref, bool(self.bad_set_hits[i])))
        return out

    def summary(self) -> dict:
        tol = 1.36 / math.sqrt(self.replicas)
        starts = []
        for i, s in enumerate(self.start_points):
            g = self.gap[i]
            starts.append({
                "start": s,
                "terminal_gap": float(g[-1]),
                "initial_gap": float(g[0]),
                # a drop within sampling noise is not counted as decay
                "decays": bool(g[-1] < g[0] - tol),
                "monotone_decay": bool(np.all(np.diff(g) <= tol)),
                "bad_set": bool(self.bad_set_hits[i]),
            })
        out = {"horizons": [int(n) for n in self.horizons], "replicas": self.replicas,
               "statistical_tolerance": tol, "starts": starts}
        if self.stationary_gap is not None:
            out["stationary_terminal_gap"] = float(self.stationary_gap[-1])
        return out


def gap_curve(samples: MaxSampleMatrix, phantom, horizons=None) -> np.ndarray:
    """``sup_x |P_hat(M_n <= x) - G(x)**n|`` per horizon."""
    horizons = samples.checkpoints if horizons is None else horizons
    return np.array([sup_distance(empirical_max_df(samples, samples.index_of(int(n))), 1, phantom, int(n))
                     for n in horizons])


def quenched_gap_curve(model: ChainModel, start_points, horizons, replicas: int, seed: int, phantom,
                       workers: int | None = 1, reference: bool = True) -> QuenchedReport:
    """Gap curves ``D_n(s)`` for each start and the stationary reference ``D_n(pi)``.

    ``phantom`` should be calibrated beforehand from stationary maxima of the
    same model (on a different seed). Starts inside the bad set are flagged and
    still simulated; for finite models the flag covers every state that can
    reach the bad set. Start ``i`` uses seed ``derive_seed(seed, i + 1)``; the
    stationary reference uses ``derive_seed(seed, 0)``.
    """
    phantom = as_df(phantom)
    g_star = float(getattr(phantom, "right_end", math.inf))
    horizons = np.asarray(horizons, dtype=np.int64)
    starts = [s if isinstance(s, Start) else Start.point(s) for s in start_points]
    s0 = finite_bad_states(model, g_star) if isinstance(model, FiniteModel) else None
    flags, gaps = [], []
    for i, st in enumerate(starts):
        if s0 is not None:
            flags.append(bool(s0[int(st.value)]))
        else:
            flags.append(bad_set_member(start_observable(model, st), g_star))
        samples = run_replicas(model, st, horizons, replicas, derive_seed(seed, i + 1), workers)
        gaps.append(gap_curve(samples, phantom))
    stationary_gap = None
    if reference and model.has_stationary:
        samples = run_replicas(model, Start.stationary(), horizons, replicas, derive_seed(seed, 0), workers)
        stationary_gap = gap_curve(samples, phantom)
    return QuenchedReport([st.value for st in starts], horizons, np.array(gaps), stationary_gap,
                          flags, int(replicas))


# finite-chain coupling ----------------------------------------------------

def _as_finite(chain) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(chain, FiniteChain):
        return chain.P, stationary_distribution(chain.P, require_primitive=False)
    if isinstance(chain, FiniteModel):
        return chain.P, chain.stationary
    raise ConfigurationError("coupling needs a finite chain")


def coupling_time_samples(chain, s: int, replicas: int, seed: int, max_steps: int = 10**7,
                          chunk: int = 256) -> np.ndarray:
    """Meeting times of a stationary copy and a copy started at ``s``.

    Both copies move independently until they occupy the same state; the
    returned time counts comparisons, so chains that agree at time 0 give 1.
    Each replica draws from its own stream: two values per step, the first
    for the stationary copy.
    """
    P, pi = _as_finite(chain)
    m = P.shape[0]
    if not 0 <= int(s) < m:
        raise ConfigurationError(f"state {s} outside 0..{m - 1}")
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    cpi = np.cumsum(pi)
    cpi[-1] = 1.0

    def pick(rows, u):
        return np.minimum(np.sum(rows <= u[..., None], axis=-1), m - 1)

    out = np.empty(replicas, dtype=np.int64)
    for lo in range(0, replicas, 1024):
        ids = range(lo, min(lo + 1024, replicas))
        gens = [replica_stream(seed, r) for r in ids]
        u0 = np.array([g.random(2) for g in gens])
        a = pick(cpi[None, :], u0[:, 0])
        b = np.full(len(gens), int(s))
        tau = np.zeros(len(gens), dtype=np.int64)
        met = a == b
        tau[met] = 1
        steps = 1
        while not met.all():
            if steps >= max_steps:
                raise DiagnosticFailure(f"chains did not meet within {max_steps} steps (m={m}, start {s})")
            u = np.stack([g.random((chunk, 2)) for g in gens], axis=1)
            for k in range(chunk):
                a = pick(cum[a], u[k, :, 0])
                b = pick(cum[b], u[k, :, 1])
                steps += 1
                now = (a == b) & ~met
                tau[now] = steps
                met |= now
                if met.all() or steps >= max_steps:
                    break
        out[lo:lo + len(gens)] = tau
    return out
