"""Matplotlib figures written next to the CSV reports."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_levels(levels, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.step(levels.horizons, levels.levels, where="post")
    ax.set_xscale("log")
    ax.set_xlabel("horizon n")
    ax.set_ylabel(r"level $v_n(\beta)$")
    ax.set_title(rf"calibrated levels, $\beta$ = {levels.beta:g}")
    return _save(fig, path)


def plot_phantom_powers(step, smooth, samples, horizons, path):
    """Empirical max CDFs against ``G**n`` for a few horizons."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    colors = plt.cm.viridis(np.linspace(0, 0.9, len(horizons)))
    for c, n in zip(colors, horizons):
        col = np.sort(samples.column(int(n)))
        ax.step(col, np.arange(1, col.size + 1) / col.size, where="post", color=c, lw=1,
                label=f"n={n} empirical")
        xs = np.linspace(col[0], col[-1], 400)
        ax.plot(xs, smooth.power(xs, n), color=c, ls="--", lw=1)
    ax.set_xscale("log")
    ax.set_xlabel("x")
    ax.set_ylabel(r"$P(M_n \leq x)$ and $H^n(x)$ (dashed)")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_obrien(rows, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ts = sorted({r.t for r in rows})
    for n in sorted({r.n for r in rows}):
        est = [next(r.estimate for r in rows if r.n == n and r.t == t) for t in ts]
        ax.plot(ts, est, "o-", label=f"n={n}")
    tt = np.linspace(min(ts), max(ts), 200)
    beta = -np.log(rows[0].target) / rows[0].t
    ax.plot(tt, np.exp(-beta * tt), "k--", label=r"$e^{-\beta t}$")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$P(M_{[nt]} \leq v_n)$")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_gap_curves(report, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for i, s in enumerate(report.start_points):
        ax.plot(report.horizons, report.gap[i], "o-", label=f"start {s:.4g}")
    if report.stationary_gap is not None:
        ax.plot(report.horizons, report.stationary_gap, "k--", label="stationary")
    ax.set_xscale("log")
    ax.set_xlabel("horizon n")
    ax.set_ylabel(r"$\sup_x |\hat P_s(M_n \leq x) - G^n(x)|$")
    ax.set_ylim(0, 1)
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_theta(estimate, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    pts = estimate.per_point
    ax.plot(pts[:, 0], pts[:, 1], ",", alpha=0.5)
    ax.axhline(estimate.theta_hat, color="k", ls="--", label=rf"$\hat\theta$ = {estimate.theta_hat:.3f}")
    ax.set_xlabel("x")
    ax.set_ylabel("log-ratio")
    ax.legend()
    return _save(fig, path)


def plot_extremal_zero(series, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, result in series.items():
        ax.plot(result.horizons, result.estimates, "o-", label=name)
    any_result = next(iter(series.values()))
    ax.axhline(any_result.iid_limit, color="k", ls="--", label=r"$e^{-\tau}$")
    ax.set_xscale("log")
    ax.set_ylim(0, 1.02)
    ax.set_xlabel("n")
    ax.set_ylabel(r"$P(M_n \leq u_n(\tau))$")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_oracle(rows, path):
    fig, ax = plt.subplots(figsize=(4.5, 4))
    exact = np.array([r[2] for r in rows])
    est = np.array([r[3] for r in rows])
    ax.plot(exact, est, ".", ms=3)
    ax.plot([0, 1], [0, 1], "k--", lw=1)
    ax.set_xlabel("exact")
    ax.set_ylabel("Monte Carlo")
    return _save(fig, path)
