"""Chain models and the replica simulation kernel.

Stream layout (per replica): row 0 of ``draws_per_step`` values is reserved
for the initial state, row ``j`` drives the transition ``X_{j-1} -> X_j``.
Point starts ignore row 0, so point- and stationary-started replicas with the
same (seed, replica) share their transition noise.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .densities import (
    BlockMaximum,
    Distribution,
    Pareto,
    Proposal,
    distribution_from_spec,
    proposal_from_spec,
)
from .errors import ConfigurationError, ModelDefinitionError

SEED_LIMIT = 2**64
_CHUNK = 2048


def replica_stream(root_seed: int, replica: int) -> np.random.Generator:
    """Counter-based stream for replica ``replica`` of experiment ``root_seed``.

    The Philox key is the pair (replica, root), so streams are independent of
    the order in which replicas are simulated.
    """
    if not 0 <= int(root_seed) < SEED_LIMIT:
        raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {root_seed}")
    if int(replica) < 0:
        raise ConfigurationError("replica index must be >= 0")
    key = np.array([int(replica), int(root_seed)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(root_seed: int, *path: int) -> int:
    """Child 64-bit seed for a named sub-experiment (e.g. one start point)."""
    seq = np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(p) for p in path))
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Start:
    """Initial law: ``point`` (value or finite-state index) or ``stationary``."""

    kind: str
    value: float | int | None = None

    def __post_init__(self):
        if self.kind not in ("point", "stationary"):
            raise ConfigurationError(f"unknown start kind {self.kind!r}")
        if self.kind == "point" and self.value is None:
            raise ConfigurationError("point start needs a value")

    @classmethod
    def point(cls, value):
        return cls("point", value)

    @classmethod
    def stationary(cls):
        return cls("stationary")

    def label(self) -> str:
        return "stationary" if self.kind == "stationary" else repr(self.value)


# scalar recursions --------------------------------------------------------

def _density(target: Distribution, x):
    fx = target.pdf(x)
    if not np.all(fx >= 0):
        raise ModelDefinitionError(f"target density returned invalid value(s) at {x!r}")
    return fx


def metropolis_acceptance(x, y, target: Distribution):
    """``min(f(y)/f(x), 1)``, and 1 wherever ``f(x) = 0``. Works elementwise."""
    fx = _density(target, x)
    fy = _density(target, y)
    pos = fx > 0
    ratio = np.minimum(fy / np.where(pos, fx, 1.0), 1.0)
    out = np.where(pos, ratio, 1.0)
    return float(out) if out.ndim == 0 else out


def metropolis_step(x: float, z: float, u: float, target: Distribution) -> float:
    if not 0.0 <= u <= 1.0:
        raise ConfigurationError(f"uniform draw must lie in [0, 1], got {u}")
    y = x + z
    return y if u <= metropolis_acceptance(x, y, target) else x


def lindley_step(w: float, xi: float) -> float:
    if w < 0:
        raise ConfigurationError(f"Lindley state must be >= 0, got {w}")
    return max(w + xi, 0.0)


# models -------------------------------------------------------------------

class ChainModel:
    """Common interface of the four chain kinds.

    Subclasses implement ``initial`` (states from row 0 of the stream) and
    ``advance`` (a block of transitions, returning the observed values).
    """

    kind: str = ""
    draws_per_step: int = 1

    @property
    def has_stationary(self) -> bool:
        return False

    @property
    def marginal(self) -> Distribution | None:
        """Stationary law of the observable, when known in closed form."""
        return None

    def initial(self, start: Start, u: np.ndarray):
        raise NotImplementedError

    def observe(self, state) -> np.ndarray:
        raise NotImplementedError

    def advance(self, state, u: np.ndarray):
        raise NotImplementedError

    def spec(self) -> dict[str, Any]:
        raise NotImplementedError

    @property
    def model_id(self) -> str:
        blob = json.dumps(self.spec(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def _require_stationary(self, start: Start):
        if start.kind == "stationary" and not self.has_stationary:
            raise ConfigurationError(f"{self.kind} model has no stationary sampler")


@dataclass(frozen=True)
class MetropolisModel(ChainModel):
    target: Distribution
    proposal: Proposal

    kind = "metropolis"
    draws_per_step = 2

    @property
    def has_stationary(self):
        # the target is the invariant law; exact sampling needs its quantile
        try:
            self.target.ppf(0.5)
        except NotImplementedError:
            return False
        return True

    @property
    def marginal(self):
        return self.target if self.has_stationary else None

    def initial(self, start, u):
        self._require_stationary(start)
        if start.kind == "stationary":
            x = np.asarray(self.target.sample(u[:, 0]), dtype=float)
        else:
            x = np.full(u.shape[0], float(start.value))
        return x, _density(self.target, x)

    def observe(self, state):
        return state[0]

    def advance(self, state, u):
        x, fx = state
        x, fx = x.copy(), fx.copy()
        z = self.proposal.increment(u[:, :, 0])
        accept_u = u[:, :, 1]
        obs = np.empty(z.shape)
        target = self.target
        for k in range(z.shape[0]):
            y = x + z[k]
            fy = target.pdf(y)
            if not np.all(fy >= 0):
                raise ModelDefinitionError("target density returned invalid value(s)")
            pos = fx > 0
            psi = np.where(pos, np.minimum(fy / np.where(pos, fx, 1.0), 1.0), 1.0)
            move = accept_u[k] <= psi
            x = np.where(move, y, x)
            fx = np.where(move, fy, fx)
            obs[k] = x
        return (x, fx), obs

    def spec(self):
        return {"kind": "metropolis", "target": self.target.spec(), "proposal": self.proposal.spec()}


@dataclass(frozen=True)
class LindleyModel(ChainModel):
    """``W_{n+1} = max(W_n + xi, 0)`` with ``xi = shift + innovation draw``."""

    innovation: Distribution
    shift: float = 0.0

    kind = "lindley"
    draws_per_step = 1

    def initial(self, start, u):
        self._require_stationary(start)
        if float(start.value) < 0:
            raise ConfigurationError("Lindley start must be >= 0")
        return np.full(u.shape[0], float(start.value))

    def observe(self, state):
        return state

    def advance(self, state, u):
        xi = self.shift + self.innovation.sample(u[:, :, 0])
        w = state.copy()
        obs = np.empty(xi.shape)
        for k in range(xi.shape[0]):
            w = np.maximum(w + xi[k], 0.0)
            obs[k] = w
        return w, obs

    def spec(self):
        return {"kind": "lindley", "innovation": self.innovation.spec(), "shift": self.shift}


@dataclass(frozen=True)
class IIDModel(ChainModel):
    """Independent draws; ``block > 1`` observes the maximum of ``block`` draws."""

    base: Distribution
    block: int = 1

    kind = "iid"

    def __post_init__(self):
        if int(self.block) < 1:
            raise ModelDefinitionError("iid block must be >= 1")

    @property
    def draws_per_step(self):
        return int(self.block)

    @property
    def has_stationary(self):
        return True

    @property
    def marginal(self):
        return self.base if self.block == 1 else BlockMaximum(self.base, int(self.block))

    def _draw(self, u):
        return np.max(self.base.sample(u), axis=-1)

    def initial(self, start, u):
        if start.kind == "stationary":
            return self._draw(u)
        return np.full(u.shape[0], float(start.value))

    def observe(self, state):
        return state

    def advance(self, state, u):
        obs = self._draw(u)
        return obs[-1], obs

    def spec(self):
        return {"kind": "iid", "marginal": self.base.spec(), "block": int(self.block)}


class FiniteModel(ChainModel):
    """Finite-state chain; the observable is ``values[state]``."""

    kind = "finite"
    draws_per_step = 1

    def __init__(self, transition_matrix, observable_values):
        P = np.array(transition_matrix, dtype=float)
        values = np.array(observable_values, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ModelDefinitionError("transition matrix must be square")
        if values.shape != (P.shape[0],):
            raise ModelDefinitionError("one observable value per state is required")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
            raise ModelDefinitionError("transition matrix rows must be non-negative and sum to 1 within 1e-12")
        P.setflags(write=False)
        values.setflags(write=False)
        self.P = P
        self.values = values
        cum = np.cumsum(P, axis=1)
        cum[:, -1] = 1.0
        self._cum = cum
        self._pi = None

    def __reduce__(self):
        return (FiniteModel, (self.P, self.values))

    @property
    def m(self) -> int:
        return self.P.shape[0]

    @property
    def stationary(self) -> np.ndarray:
        if self._pi is None:
            from .oracle import stationary_distribution

            self._pi = stationary_distribution(self.P, require_primitive=False)
        return self._pi

    @property
    def has_stationary(self):
        return True

    def _pick(self, cum_rows, u):
        idx = np.sum(cum_rows <= u[..., None], axis=-1)
        return np.minimum(idx, self.m - 1)

    def initial(self, start, u):
        if start.kind == "stationary":
            cum = np.cumsum(self.stationary)
            cum[-1] = 1.0
            return self._pick(cum[None, :], u[:, 0])
        s = int(start.value)
        if not 0 <= s < self.m:
            raise ConfigurationError(f"start state {s} outside 0..{self.m - 1}")
        return np.full(u.shape[0], s, dtype=np.int64)

    def observe(self, state):
        return self.values[state]

    def advance(self, state, u):
        obs = np.empty(u.shape[:2])
        for k in range(u.shape[0]):
            state = self._pick(self._cum[state], u[k, :, 0])
            obs[k] = self.values[state]
        return state, obs

    def spec(self):
        return {"kind": "finite", "transition_matrix": self.P.tolist(), "observable_values": self.values.tolist()}


def model_from_spec(spec: dict[str, Any]) -> ChainModel:
    """Build a chain model from its mapping form (as written in configs)."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    allowed = {
        "metropolis": {"target", "proposal"},
        "lindley": {"innovation", "shift"},
        "iid": {"marginal", "block"},
        "finite": {"transition_matrix", "observable_values"},
    }
    if kind not in allowed:
        raise ConfigurationError(f"unknown model kind {kind!r}")
    unknown = set(spec) - allowed[kind]
    if unknown:
        raise ConfigurationError(f"unknown keys for {kind} model: {sorted(unknown)}")
    try:
        if kind == "metropolis":
            return MetropolisModel(distribution_from_spec(spec["target"]),
                                   proposal_from_spec(spec.get("proposal", {"family": "gaussian", "sigma": 1.0})))
        if kind == "lindley":
            return LindleyModel(distribution_from_spec(spec["innovation"]), float(spec.get("shift", 0.0)))
        if kind == "iid":
            return IIDModel(distribution_from_spec(spec["marginal"]), int(spec.get("block", 1)))
        return FiniteModel(spec["transition_matrix"], spec["observable_values"])
    except KeyError as exc:
        raise ConfigurationError(f"{kind} model is missing key {exc.args[0]!r}") from None


def pareto_metropolis(alpha: float = 1.0, sigma: float = 1.0, x_min: float = 1.0) -> MetropolisModel:
    """Random-walk Metropolis on a Pareto target with gaussian increments."""
    return MetropolisModel(Pareto(alpha, x_min), Proposal("gaussian", sigma))


# simulation ---------------------------------------------------------------

def check_checkpoints(checkpoints: Sequence[int]) -> np.ndarray:
    ck = np.asarray(checkpoints)
    if ck.ndim != 1 or ck.size == 0:
        raise ConfigurationError("checkpoints must be a non-empty list")
    if not np.issubdtype(ck.dtype, np.integer):
        if not np.all(ck == np.round(ck)):
            raise ConfigurationError("checkpoints must be integers")
        ck = ck.astype(np.int64)
    if ck[0] < 1:
        raise ConfigurationError("first checkpoint must be >= 1")
    if np.any(np.diff(ck) <= 0):
        raise ConfigurationError("checkpoints must be strictly increasing")
    return ck.astype(np.int64)


def simulate_block(model: ChainModel, start: Start, checkpoints, root_seed: int,
                   replicas: Sequence[int], chunk: int = _CHUNK) -> np.ndarray:
    """Running maxima for several replicas; one row per replica.

    Replicas never interact, so the rows do not depend on how replicas are
    grouped into blocks.
    """
    ck = check_checkpoints(checkpoints)
    gens = [replica_stream(root_seed, r) for r in replicas]
    d = model.draws_per_step
    n_max = int(ck[-1])
    out = np.empty((len(gens), ck.size))
    if not gens:
        return out

    u0 = np.stack([g.random(d) for g in gens])
    state = model.initial(start, u0)
    running = np.array(model.observe(state), dtype=float)
    done = 1  # observed values so far
    ci = 0
    if ck[0] == 1:
        out[:, 0] = running
        ci = 1
    while done < n_max:
        t = min(chunk, n_max - done)
        u = np.stack([g.random((t, d)) for g in gens], axis=1)
        state, obs = model.advance(state, u)
        path = np.maximum.accumulate(obs, axis=0)
        np.maximum(path, running, out=path)
        while ci < ck.size and ck[ci] <= done + t:
            out[:, ci] = path[ck[ci] - done - 1]
            ci += 1
        running = path[-1].copy()
        done += t
    return out


def simulate_running_maxima(model: ChainModel, start: Start, checkpoints, seed: int,
                            replica: int = 0) -> np.ndarray:
    """Running maximum ``M_n`` of one trajectory at each checkpoint ``n``.

    ``M_n`` is the maximum of ``X_0, ..., X_{n-1}``. The trajectory is driven
    by ``replica_stream(seed, replica)``.
    """
    return simulate_block(model, start, checkpoints, seed, [replica])[0]
