"""Experiment configuration files (YAML) and their validation.

Every problem found is collected before raising, so one run reports all of
them. Unknown keys are errors.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigurationError, PhantomLabError
from .models import SEED_LIMIT, model_from_spec

KINDS = ("calibrate", "obrien", "quenched", "relext", "oracle_check", "extremal_zero")

_COMMON = {"kind", "model", "horizons", "checkpoint_grid", "replicas", "seed", "beta", "workers",
           "output", "figures"}
_EXTRA = {
    "calibrate": {"tail_stretch", "start"},
    "obrien": {"t_grid", "start"},
    "quenched": {"starts", "start_quantiles", "calibration", "tail_stretch"},
    "relext": {"model_b", "band", "alpha"},
    "oracle_check": {"x_grid", "start"},
    "extremal_zero": {"tau", "reference"},
}


class ConfigError(ConfigurationError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclass
class ExperimentConfig:
    kind: str
    model: dict[str, Any]
    horizons: list[int]
    replicas: int
    seed: int
    beta: float = 1.0
    t_grid: list[float] = field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0])
    starts: list[Any] | None = None
    start_quantiles: list[float] | None = None
    calibration: dict[str, Any] = field(default_factory=dict)
    tail_stretch: float | None = None
    model_b: dict[str, Any] | None = None
    band: list[float] = field(default_factory=lambda: [0.05, 0.95])
    alpha: float = 0.36787944117144233
    x_grid: list[float] | None = None
    start: Any = "stationary"
    tau: float = 1.0
    reference: bool = True
    output: str | None = None
    workers: int | None = None
    figures: bool = True

    def canonical(self) -> dict[str, Any]:
        """Settings that determine the numbers (no output path, no worker count)."""
        d = asdict(self)
        for key in ("output", "workers", "figures"):
            d.pop(key)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def _grid(spec, problems):
    from .empirics import geometric_checkpoints

    allowed = {"n0", "n_max", "ratio"}
    unknown = set(spec) - allowed
    if unknown:
        problems.append(f"checkpoint_grid: unknown keys {sorted(unknown)}")
    try:
        return [int(n) for n in geometric_checkpoints(int(spec.get("n0", 1)), int(spec["n_max"]),
                                                      float(spec.get("ratio", 2.0)))]
    except KeyError:
        problems.append("checkpoint_grid: n_max is required")
    except PhantomLabError as exc:
        problems.append(f"checkpoint_grid: {exc}")
    return []


def parse_config(raw: dict[str, Any], kind: str | None = None, seed: int | None = None) -> ExperimentConfig:
    """Validate a raw mapping; ``kind``/``seed`` come from the command line if given."""
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["configuration must be a mapping"])
    raw = dict(raw)
    file_kind = raw.get("kind")
    if kind is not None and file_kind is not None and file_kind != kind:
        problems.append(f"kind: file says {file_kind!r} but {kind!r} was requested")
    kind = kind or file_kind
    if kind not in KINDS:
        problems.append(f"kind: must be one of {', '.join(KINDS)}, got {kind!r}")
        raise ConfigError(problems)
    raw["kind"] = kind

    unknown = set(raw) - _COMMON - _EXTRA[kind]
    for key in sorted(unknown):
        problems.append(f"{key}: unknown key for kind {kind}")

    if seed is not None:
        raw["seed"] = seed
    s = raw.get("seed")
    if s is None:
        problems.append("seed: mandatory (no entropy default)")
    elif not isinstance(s, int) or isinstance(s, bool) or not 0 <= s < SEED_LIMIT:
        problems.append(f"seed: must be an integer in [0, 2**64), got {s!r}")

    R = raw.get("replicas")
    if not isinstance(R, int) or isinstance(R, bool):
        problems.append(f"replicas: integer required, got {R!r}")
    elif R < 100:
        problems.append(f"replicas: must be >= 100, got {R}")

    horizons = raw.get("horizons")
    if horizons is None and "checkpoint_grid" in raw:
        horizons = _grid(raw["checkpoint_grid"] or {}, problems)
    elif horizons is not None and "checkpoint_grid" in raw:
        problems.append("horizons: give either horizons or checkpoint_grid, not both")
    if horizons is None:
        problems.append("horizons: required (or checkpoint_grid)")
        horizons = []
    elif not isinstance(horizons, list) or not all(isinstance(n, int) and not isinstance(n, bool) for n in horizons):
        problems.append("horizons: must be a list of integers")
        horizons = []
    else:
        if not horizons:
            problems.append("horizons: must not be empty")
        elif horizons[0] < 1:
            problems.append("horizons: first horizon must be >= 1")
        if any(b <= a for a, b in zip(horizons, horizons[1:])):
            problems.append("horizons: must be strictly increasing")

    for key in ("model",) + (("model_b",) if kind == "relext" else ()):
        spec = raw.get(key)
        if spec is None:
            problems.append(f"{key}: required")
            continue
        try:
            model_from_spec(spec)
        except PhantomLabError as exc:
            problems.append(f"{key}: {exc}")
        except (TypeError, ValueError) as exc:
            problems.append(f"{key}: {exc}")

    beta = raw.get("beta", 1.0)
    if not isinstance(beta, (int, float)) or isinstance(beta, bool) or not beta > 0:
        problems.append(f"beta: must be > 0, got {beta!r}")
    t_grid = raw.get("t_grid", [0.5, 1.0, 2.0, 4.0])
    if not isinstance(t_grid, list) or not t_grid or not all(isinstance(t, (int, float)) and t > 0 for t in t_grid):
        problems.append("t_grid: must be a non-empty list of positive numbers")
    workers = raw.get("workers")
    if workers is not None and (not isinstance(workers, int) or workers < 1):
        problems.append("workers: must be a positive integer")
    if kind == "relext":
        band = raw.get("band", [0.05, 0.95])
        if not (isinstance(band, list) and len(band) == 2 and 0 < band[0] < band[1] < 1):
            problems.append("band: must be [low, high] with 0 < low < high < 1")
        alpha = raw.get("alpha", 0.36787944117144233)
        if not isinstance(alpha, (int, float)) or not 0 < alpha < 1:
            problems.append("alpha: must lie in (0, 1)")
    if kind == "extremal_zero":
        tau = raw.get("tau", 1.0)
        if not isinstance(tau, (int, float)) or not tau > 0:
            problems.append("tau: must be > 0")
    if kind == "oracle_check" and isinstance(raw.get("model"), dict) and raw["model"].get("kind") != "finite":
        problems.append("model: oracle_check needs a finite model")
    start = raw.get("start", "stationary")
    if start != "stationary" and (not isinstance(start, (int, float)) or isinstance(start, bool)):
        problems.append(f"start: must be 'stationary' or a number, got {start!r}")
    stretch = raw.get("tail_stretch")
    if stretch is not None and (not isinstance(stretch, (int, float)) or stretch < 1):
        problems.append("tail_stretch: must be a number >= 1")
    if kind == "quenched":
        calib = raw.get("calibration") or {}
        bad = set(calib) - {"checkpoint_grid_ratio", "replicas", "seed_offset"}
        if bad:
            problems.append(f"calibration: unknown keys {sorted(bad)}")

    if problems:
        raise ConfigError(problems)
    fields = {k: v for k, v in raw.items() if k != "checkpoint_grid"}
    fields["horizons"] = [int(n) for n in horizons]
    if "beta" in fields:
        fields["beta"] = float(fields["beta"])
    return ExperimentConfig(**fields)


def load_config(path, kind: str | None = None, seed: int | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError([f"config file {path} does not exist"]) from None
    except yaml.YAMLError as exc:
        raise ConfigError([f"config file {path} is not valid YAML: {exc}"]) from None
    return parse_config(raw or {}, kind, seed)
