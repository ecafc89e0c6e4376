import json
from pathlib import Path

import pytest
import yaml

from phantomlab.cli import main
from phantomlab.config import ConfigError, load_config, parse_config
from phantomlab.csvio import fmt, read_csv, write_csv
from phantomlab.experiments import plot_data_export, run_experiment

UNIFORM = {"kind": "iid", "marginal": {"family": "uniform"}}
COIN = {"kind": "finite", "transition_matrix": [[0.5, 0.5], [0.5, 0.5]], "observable_values": [0.0, 1.0]}
LEAKY = {"kind": "finite", "transition_matrix": [[0.5, 0.5, 0.0], [0.3, 0.7, 0.0], [0.5, 0.0, 0.5]],
         "observable_values": [0.0, 1.0, 5.0]}


def _write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def test_fmt_17_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(3) == "3"
    assert fmt(float("inf")) == "inf"
    assert fmt(True) == "1"


def test_csv_round_trip(tmp_path):
    write_csv(tmp_path / "a.csv", ("x", "y"), [(1, 0.5)], comments=["x: thing"])
    text = (tmp_path / "a.csv").read_bytes()
    assert text == b"# x: thing\nx,y\n1,0.5\n"
    assert read_csv(tmp_path / "a.csv") == (["x", "y"], [["1", "0.5"]])


def test_validation_lists_every_problem():
    with pytest.raises(ConfigError) as exc:
        parse_config({"kind": "calibrate", "model": UNIFORM, "horizons": [100, 10], "replicas": 10,
                      "typo": 1, "beta": -1})
    problems = exc.value.problems
    assert len(problems) == 5
    assert any("strictly increasing" in p for p in problems)
    assert any("seed" in p for p in problems)


def test_checkpoint_grid_and_seed_override():
    cfg = parse_config({"model": UNIFORM, "checkpoint_grid": {"n0": 10, "n_max": 100}, "replicas": 100},
                       kind="calibrate", seed=9)
    assert cfg.horizons == [10, 20, 40, 80, 100] and cfg.seed == 9


def test_digest_ignores_output_and_workers():
    base = {"kind": "calibrate", "model": UNIFORM, "horizons": [10], "replicas": 100, "seed": 1}
    a = parse_config(base)
    b = parse_config({**base, "workers": 4, "output": "elsewhere"})
    assert a.digest() == b.digest()
    assert parse_config({**base, "seed": 2}).digest() != a.digest()


def test_calibrate_example(tmp_path):
    cfg = parse_config({"kind": "calibrate", "model": UNIFORM, "horizons": [10, 100], "replicas": 20_000,
                        "seed": 1, "figures": False})
    out = run_experiment(cfg, tmp_path, workers=1)
    header, rows = read_csv(out / "levels.csv")
    assert header == ["n", "v_n"]
    v100 = float(dict((r[0], r[1]) for r in rows)["100"])
    assert v100 == pytest.approx(0.990, abs=0.005)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 1 and manifest["files"] == ["levels.csv", "manifest.json", "phantom.csv"]
    assert out.parent.name == "calibrate" and out.name == f"calibrate-{cfg.digest()}"


def test_oracle_check_example(tmp_path):
    cfg = parse_config({"kind": "oracle_check", "model": COIN, "horizons": [1, 3, 10], "replicas": 100_000,
                        "seed": 4, "figures": False})
    out = run_experiment(cfg, tmp_path, workers=1)
    summary = json.loads((out / "oracle_summary.json").read_text())
    assert summary["max_abs_error"] < 0.01
    header, _ = read_csv(out / "oracle.csv")
    assert header == ["n", "x", "exact", "estimate", "abs_error"]


def test_cli_invalid_config_exit_code(tmp_path, capsys):
    path = _write(tmp_path, "bad.yaml", {"model": UNIFORM, "horizons": [100, 10], "replicas": 100, "seed": 1})
    assert main(["calibrate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "horizons: must be strictly increasing" in err
    assert not (tmp_path / "o").exists()


def test_cli_runs_and_exports(tmp_path, capsys):
    path = _write(tmp_path, "ob.yaml", {"model": UNIFORM, "horizons": [50], "replicas": 400, "seed": 3,
                                       "t_grid": [0.5, 1, 2]})
    assert main(["obrien", "--config", str(path), "--out", str(tmp_path / "o"), "--workers", "1"]) == 0
    report = Path(capsys.readouterr().out.strip())
    assert sorted(p.name for p in report.iterdir()) == ["levels.csv", "manifest.json", "obrien.csv", "obrien.png"]
    assert main(["plot-data", str(report)]) == 0
    text = (report / "plot_obrien.csv").read_text().splitlines()
    assert text[0].startswith("# ") and "t,n,estimate,target" in text


def test_plot_data_quenched_series(tmp_path):
    cfg = parse_config({"kind": "quenched", "model": LEAKY, "horizons": [5, 50], "replicas": 200, "seed": 2,
                        "starts": [0, 2], "figures": False})
    out = run_experiment(cfg, tmp_path, workers=1)
    header, rows = read_csv(out / "quenched.csv")
    assert header == ["start", "n", "gap", "stationary_gap", "flag"]
    assert [r[4] for r in rows] == ["0", "0", "1", "1"]
    plot_data_export(out)
    header, rows = read_csv(out / "plot_gap_curves.csv")
    assert header == ["series", "n", "value"]
    assert {r[0] for r in rows} == {"0", "2", "stationary"}


def test_plot_data_empty_dir(tmp_path, capsys):
    assert main(["plot-data", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "quenched.csv" in err and "obrien.csv" in err and "theta_points.csv" in err


def test_failure_leaves_no_partial_output(tmp_path):
    cfg = parse_config({"kind": "relext", "model": UNIFORM, "model_b": UNIFORM, "horizons": [1],
                        "replicas": 100, "seed": 1, "band": [0.49, 0.5], "figures": False})
    with pytest.raises(Exception):
        run_experiment(cfg, tmp_path, workers=1)
    assert list((tmp_path / "relext").iterdir()) == []


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(tmp_path / "missing.yaml")
    (tmp_path / "x.yaml").write_text("a: [1,")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(tmp_path / "x.yaml")


def _csv_bytes(report):
    return {p.name: p.read_bytes() for p in sorted(report.iterdir()) if p.suffix == ".csv"}


@pytest.mark.parametrize("kind,extra", [
    ("calibrate", {"model": {"kind": "metropolis", "target": {"family": "pareto", "alpha": 1.0}}, "tail_stretch": 50}),
    ("quenched", {"model": LEAKY, "starts": [0, 1, 2]}),
    ("extremal_zero", {"model": {"kind": "metropolis", "target": {"family": "pareto", "alpha": 1.0}}}),
])
def test_worker_count_does_not_change_csv(tmp_path, kind, extra):
    cfg = parse_config({"kind": kind, "horizons": [10, 100], "replicas": 2100, "seed": 17,
                        "figures": False, **extra})
    one = _csv_bytes(run_experiment(cfg, tmp_path / "w1", workers=1))
    eight = _csv_bytes(run_experiment(cfg, tmp_path / "w8", workers=8))
    assert one and one == eight
