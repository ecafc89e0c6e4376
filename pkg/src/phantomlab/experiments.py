"""Run one configured experiment and write its report directory."""
from __future__ import annotations

import json
import logging
import os
import platform
import shutil
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .csvio import read_csv, write_csv
from .empirics import extremal_index_zero_check, geometric_checkpoints, run_replicas
from .errors import ConfigurationError
from .models import FiniteModel, IIDModel, Start, derive_seed, model_from_spec
from .oracle import FiniteChain, exact_max_cdf_curve
from .phantom import (
    calibrate_phantom,
    continuize,
    extend_levels,
    levels_from_samples,
    obrien_horizons,
    phantom_from_levels,
    verify_obrien,
)
from .quenched import default_starts, finite_truncation_point, quenched_gap_curve
from .relext import estimate_theta, theta_quantile_transfer

log = logging.getLogger(__name__)

# seed paths for sub-experiments
_CALIBRATION = 1000
_MODEL_A, _MODEL_B, _REFERENCE = 1, 2, 3


def _start(value) -> Start:
    return Start.stationary() if value == "stationary" else Start.point(value)


def _stretch(limit):
    if limit is None or limit <= 1:
        return []
    return np.geomspace(1.05, limit, max(2, int(np.ceil(np.log(limit / 1.05) / np.log(1.05))) + 1))


def _write_levels(out: Path, levels):
    write_csv(out / "levels.csv", ("n", "v_n"), levels.rows())


def _write_phantom(out: Path, step):
    write_csv(out / "phantom.csv", ("x", "G"), step.to_rows())


def _calibrate(cfg: ExperimentConfig, out: Path, workers):
    model = model_from_spec(cfg.model)
    samples = run_replicas(model, _start(cfg.start), cfg.horizons, cfg.replicas, cfg.seed, workers)
    levels = levels_from_samples(samples, cfg.beta)
    if cfg.tail_stretch:
        levels = extend_levels(levels, samples, _stretch(cfg.tail_stretch))
    step = phantom_from_levels(levels)
    _write_levels(out, levels)
    _write_phantom(out, step)
    if cfg.figures:
        from .plots import plot_levels, plot_phantom_powers

        plot_levels(levels, out / "levels.png")
        show = samples.checkpoints[np.linspace(0, samples.checkpoints.size - 1, min(4, samples.checkpoints.size)).astype(int)]
        plot_phantom_powers(step, continuize(step), samples, show, out / "phantom.png")


def _obrien(cfg: ExperimentConfig, out: Path, workers):
    model = model_from_spec(cfg.model)
    ck = obrien_horizons(cfg.horizons, cfg.t_grid)
    samples = run_replicas(model, _start(cfg.start), ck, cfg.replicas, cfg.seed, workers)
    levels = levels_from_samples(samples, cfg.beta)
    rows = verify_obrien(samples, levels, cfg.t_grid, cfg.horizons)
    _write_levels(out, levels)
    write_csv(out / "obrien.csv", ("n", "t", "estimate", "target", "abs_error"), [r.as_tuple() for r in rows])
    if cfg.figures:
        from .plots import plot_obrien

        plot_obrien(rows, out / "obrien.png")


def _quenched(cfg: ExperimentConfig, out: Path, workers):
    model = model_from_spec(cfg.model)
    calib = cfg.calibration or {}
    grid = geometric_checkpoints(1, max(cfg.horizons), float(calib.get("checkpoint_grid_ratio", 1.05)))
    cal_seed = derive_seed(cfg.seed, _CALIBRATION + int(calib.get("seed_offset", 0)))
    samples = run_replicas(model, Start.stationary(), grid, int(calib.get("replicas", cfg.replicas)),
                           cal_seed, workers)
    levels, step, smooth = calibrate_phantom(samples, cfg.beta, _stretch(cfg.tail_stretch or 1e6))
    if isinstance(model, FiniteModel):
        # maxima of a finite chain are discrete: compare against the step df
        right = finite_truncation_point(model)
        if np.isfinite(right):
            step = phantom_from_levels(levels, right)
        smooth = step
    if cfg.starts is not None:
        starts = list(cfg.starts)
    elif isinstance(model, FiniteModel):
        raise ConfigurationError("finite models need explicit start states")
    else:
        starts = default_starts(model) if cfg.start_quantiles is None else \
            [float(model.marginal.ppf(q)) for q in cfg.start_quantiles]
    report = quenched_gap_curve(model, starts, cfg.horizons, cfg.replicas, cfg.seed, smooth, workers)
    _write_levels(out, levels)
    _write_phantom(out, step)
    write_csv(out / "quenched.csv", ("start", "n", "gap", "stationary_gap", "flag"), report.rows())
    (out / "quenched_summary.json").write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
    if cfg.figures:
        from .plots import plot_gap_curves

        plot_gap_curves(report, out / "quenched.png")


def _relext(cfg: ExperimentConfig, out: Path, workers):
    model_a, model_b = model_from_spec(cfg.model), model_from_spec(cfg.model_b)
    st = Start.stationary()
    a = run_replicas(model_a, st, cfg.horizons, cfg.replicas, derive_seed(cfg.seed, _MODEL_A), workers)
    b = run_replicas(model_b, st, cfg.horizons, cfg.replicas, derive_seed(cfg.seed, _MODEL_B), workers)
    by_n, main = [], None
    for j, n in enumerate(cfg.horizons):
        est = estimate_theta(a, b, j, tuple(cfg.band))
        back = estimate_theta(b, a, j, tuple(cfg.band))
        sa = np.sort(a.values[:, j])
        v = float(sa[max(1, int(np.ceil(cfg.alpha * sa.size - 1e-9))) - 1])
        entry = dict(est.summary())
        entry.update({
            "theta_reverse": back.theta_hat,
            "symmetry_product": est.theta_hat * back.theta_hat,
            "alpha": cfg.alpha,
            "level": v,
            "predicted_companion": theta_quantile_transfer(est.theta_hat, cfg.alpha),
            "empirical_companion": float(np.mean(b.values[:, j] <= v)),
        })
        by_n.append(entry)
        main = est
    summary = dict(by_n[-1])
    summary["by_horizon"] = by_n
    (out / "theta.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    write_csv(out / "theta_points.csv", ("x", "log_ratio"), main.per_point.tolist())
    if cfg.figures:
        from .plots import plot_theta

        plot_theta(main, out / "theta.png")


def _oracle_check(cfg: ExperimentConfig, out: Path, workers):
    model = model_from_spec(cfg.model)
    start = _start(cfg.start)
    if start.kind == "stationary":
        lam = model.stationary
    else:
        lam = np.zeros(model.m)
        lam[int(start.value)] = 1.0
    chain = FiniteChain(model.P, model.values, lam)
    samples = run_replicas(model, start, cfg.horizons, cfg.replicas, cfg.seed, workers)
    xs = sorted(set(float(x) for x in (cfg.x_grid if cfg.x_grid is not None else model.values)))
    rows = []
    for x in xs:
        exact = exact_max_cdf_curve(chain, cfg.horizons, x)
        for j, n in enumerate(cfg.horizons):
            est = float(np.mean(samples.values[:, j] <= x))
            rows.append((int(n), x, float(exact[j]), est, abs(est - exact[j])))
    write_csv(out / "oracle.csv", ("n", "x", "exact", "estimate", "abs_error"), rows)
    summary = {"max_abs_error": max(r[4] for r in rows), "replicas": cfg.replicas, "points": len(rows)}
    (out / "oracle_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if cfg.figures:
        from .plots import plot_oracle

        plot_oracle(rows, out / "oracle.png")


def _extremal_zero(cfg: ExperimentConfig, out: Path, workers):
    model = model_from_spec(cfg.model)
    series = {"model": extremal_index_zero_check(model, cfg.tau, cfg.horizons, cfg.replicas, cfg.seed, workers)}
    if cfg.reference and not (isinstance(model, IIDModel) and model.block == 1):
        ref = IIDModel(model.marginal)
        series["iid_reference"] = extremal_index_zero_check(ref, cfg.tau, cfg.horizons, cfg.replicas,
                                                            derive_seed(cfg.seed, _REFERENCE), workers)
    rows = [(name,) + row for name, res in series.items() for row in res.rows()]
    write_csv(out / "extremal_zero.csv", ("series", "n", "tau", "level", "estimate", "iid_limit"), rows)
    if cfg.figures:
        from .plots import plot_extremal_zero

        plot_extremal_zero(series, out / "extremal_zero.png")


_RUNNERS = {
    "calibrate": _calibrate,
    "obrien": _obrien,
    "quenched": _quenched,
    "relext": _relext,
    "oracle_check": _oracle_check,
    "extremal_zero": _extremal_zero,
}


def report_dir(cfg: ExperimentConfig, out_root) -> Path:
    return Path(out_root) / cfg.kind / f"{cfg.kind}-{cfg.digest()}"


def run_experiment(cfg: ExperimentConfig, out_root=None, workers: int | None = None) -> Path:
    """Run ``cfg`` and return its report directory.

    Files are written to a scratch directory that replaces the final one only
    when everything succeeded.
    """
    out_root = out_root or cfg.output
    if out_root is None:
        raise ConfigurationError("no output directory given")
    workers = workers if workers is not None else cfg.workers
    final = report_dir(cfg, out_root)
    final.parent.mkdir(parents=True, exist_ok=True)
    scratch = final.with_name(final.name + f".partial-{os.getpid()}")
    shutil.rmtree(scratch, ignore_errors=True)
    scratch.mkdir()
    try:
        log.info("running %s -> %s", cfg.kind, final)
        _RUNNERS[cfg.kind](cfg, scratch, workers)
        files = sorted(p.name for p in scratch.iterdir()) + ["manifest.json"]
        manifest = {
            "kind": cfg.kind,
            "seed": cfg.seed,
            "config_digest": cfg.digest(),
            "config": cfg.canonical(),
            "versions": {"phantomlab": __version__, "numpy": np.__version__,
                         "python": platform.python_version()},
            "files": sorted(files),
        }
        (scratch / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except BaseException:
        shutil.rmtree(scratch, ignore_errors=True)
        raise
    shutil.rmtree(final, ignore_errors=True)
    scratch.rename(final)
    return final


# plot data ------------------------------------------------------------------

_PLOT_SOURCES = {
    "quenched.csv": "plot_gap_curves.csv",
    "obrien.csv": "plot_obrien.csv",
    "theta_points.csv": "plot_theta.csv",
}


def plot_data_export(report: Path | str) -> list[Path]:
    """Long-format CSVs (one per figure kind) from a report directory."""
    report = Path(report)
    if not report.is_dir():
        raise ConfigurationError(f"report directory {report} does not exist")
    found = [name for name in _PLOT_SOURCES if (report / name).exists()]
    if not found:
        raise ConfigurationError(f"no report files in {report}; expected one of: {', '.join(_PLOT_SOURCES)}")
    written = []
    for name in found:
        header, rows = read_csv(report / name)
        col = {h: i for i, h in enumerate(header)}
        target = report / _PLOT_SOURCES[name]
        if name == "quenched.csv":
            out = [(r[col["start"]], r[col["n"]], r[col["gap"]]) for r in rows]
            seen = set()
            for r in rows:
                if r[col["n"]] not in seen and r[col["stationary_gap"]] != "nan":
                    seen.add(r[col["n"]])
                    out.append(("stationary", r[col["n"]], r[col["stationary_gap"]]))
            write_csv(target, ("series", "n", "value"), out,
                      ["series: start point or 'stationary'", "n: horizon", "value: sup-norm gap to G^n"])
        elif name == "obrien.csv":
            out = [(r[col["t"]], r[col["n"]], r[col["estimate"]], r[col["target"]]) for r in rows]
            write_csv(target, ("t", "n", "estimate", "target"), out,
                      ["t: horizon multiplier", "n: calibration horizon",
                       "estimate: P(M_[nt] <= v_n)", "target: exp(-beta t)"])
        else:
            out = [(r[col["x"]], r[col["log_ratio"]]) for r in rows]
            write_csv(target, ("x", "log_ratio"), out,
                      ["x: evaluation point", "log_ratio: log P_a(M_n <= x) / log P_b(M_n <= x)"])
        written.append(target)
    return written
