import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phantomlab.densities import Gaussian, Pareto, Uniform
from phantomlab.empirics import (
    ContinuousDF,
    MaxSampleMatrix,
    StepDF,
    empirical_max_df,
    extremal_index_zero_check,
    geometric_checkpoints,
    load_cache,
    run_replicas,
    save_cache,
    sup_distance,
)
from phantomlab.errors import ConfigurationError, ContractViolation
from phantomlab.models import FiniteModel, IIDModel, LindleyModel, Start
from phantomlab.oracle import FiniteChain, exact_max_cdf


def _matrix(col):
    return MaxSampleMatrix([1], np.asarray(col, dtype=float)[:, None])


def test_empirical_df_examples():
    g = empirical_max_df(_matrix([3.0] * 5), 0)
    assert g.jump_points.tolist() == [3.0] and g.cdf_values.tolist() == [1.0]
    g = empirical_max_df(_matrix([4, 2, 1, 3]), 0)
    assert g.cdf([1, 2, 3, 4]).tolist() == [0.25, 0.5, 0.75, 1.0]
    assert g.cdf(0.99) == 0.0 and g.cdf_left(1.0) == 0.0


def test_empirical_df_oracle_chain(coin_chain):
    s = run_replicas(coin_chain, Start.stationary(), [3], 100_000, seed=11)
    est = float(empirical_max_df(s, 0).cdf(0.5))
    assert est == pytest.approx(0.125, abs=0.006)
    assert est == 0.12425  # frozen


def test_step_df_contract():
    with pytest.raises(ContractViolation):
        StepDF([1.0, 1.0], [0.5, 1.0])
    with pytest.raises(ContractViolation):
        StepDF([1.0, 2.0], [0.6, 0.5])
    assert StepDF([0.0, 1.0], [0.3, 0.7]).right_end == math.inf
    assert StepDF([0.0, 1.0], [0.3, 1.0]).right_end == 1.0


def test_sup_distance_examples():
    a = StepDF([1.0, 2.0], [0.5, 1.0])
    assert sup_distance(a, 3, a, 3) == 0.0
    assert sup_distance(StepDF([0.0], [1.0]), 1, StepDF([1.0], [1.0]), 1) == 1.0
    assert sup_distance(a, 2, a, 1) == 0.25


def test_sup_distance_uses_left_limits():
    # the continuous df is far from the step only just left of the jump
    step = StepDF([0.5], [1.0])
    assert sup_distance(step, 1, ContinuousDF(Uniform(0.0, 1.0)), 1) == pytest.approx(0.5)


def test_sup_distance_tail_term():
    # values that never reach 1 are compared with the limit of the other df
    assert sup_distance(StepDF([0.0], [0.6]), 1, StepDF([0.0], [1.0]), 1) == pytest.approx(0.4)


def _random_step(rng):
    k = rng.integers(1, 6)
    x = np.sort(rng.choice(np.arange(10.0), k, replace=False))
    y = np.sort(rng.random(k))
    if rng.random() < 0.5:
        y[-1] = 1.0
    return StepDF(x, y)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.integers(1, 4), q=st.integers(1, 4), r=st.integers(1, 4))
def test_sup_distance_metric_properties(seed, p, q, r):
    rng = np.random.default_rng(seed)
    a, b, c = (_random_step(rng) for _ in range(3))
    ab = sup_distance(a, p, b, q)
    assert ab == sup_distance(b, q, a, p)
    assert 0.0 <= ab <= 1.0
    assert sup_distance(a, p, a, p) == 0.0
    assert ab <= sup_distance(a, p, c, r) + sup_distance(c, r, b, q) + 1e-15
    # brute force on a fine grid never exceeds the exact value
    grid = np.linspace(-1, 11, 2401)
    assert np.max(np.abs(a.power(grid, p) - b.power(grid, q))) <= ab + 1e-15


def test_iid_phantom_is_marginal():
    s = run_replicas(IIDModel(Uniform(0.0, 1.0)), Start.stationary(), [10, 100], 20_000, seed=2)
    for j, n in enumerate(s.checkpoints):
        d = sup_distance(empirical_max_df(s, j), 1, ContinuousDF(Uniform(0.0, 1.0)), int(n))
        assert d < 1.63 / math.sqrt(20_000)


def test_convergence_in_replicas(coin_chain):
    chain = FiniteChain(coin_chain.P, coin_chain.values, [0.5, 0.5])
    exact = StepDF([0.0, 1.0], [exact_max_cdf(chain, 4, 0.0), 1.0])
    for seed in (1, 2, 3):
        d = [sup_distance(empirical_max_df(run_replicas(coin_chain, Start.stationary(), [4], R, seed), 0), 1,
                          exact, 1) for R in (100, 1000, 10_000, 100_000)]
        inversions = sum(b > a for a, b in zip(d, d[1:]))
        assert inversions <= 1


def test_workers_do_not_change_results(coin_chain):
    a = run_replicas(coin_chain, Start.point(1), [1, 7, 30], 2500, seed=5, workers=1)
    b = run_replicas(coin_chain, Start.point(1), [1, 7, 30], 2500, seed=5, workers=3)
    np.testing.assert_array_equal(a.values, b.values)


def test_rows_non_decreasing():
    s = run_replicas(LindleyModel(Gaussian(-0.2, 1.0)), Start.point(0.0), [1, 10, 100, 1000], 300, 1)
    assert np.all(np.diff(s.values, axis=1) >= 0)


def test_csv_and_cache_round_trip(tmp_path, coin_chain):
    s = run_replicas(coin_chain, Start.stationary(), [2, 5], 120, seed=8)
    back = MaxSampleMatrix.from_csv(s.to_csv(tmp_path / "m.csv"))
    np.testing.assert_array_equal(back.values, s.values)
    save_cache(s, tmp_path, "k")
    np.testing.assert_array_equal(load_cache(tmp_path, "k").values, s.values)
    again = run_replicas(coin_chain, Start.stationary(), [2, 5], 120, seed=8, cache_dir=tmp_path)
    assert (tmp_path / "m.csv").read_text().splitlines()[0] == "replica,checkpoint,max_value"
    np.testing.assert_array_equal(again.values, s.values)


def test_geometric_checkpoints():
    assert geometric_checkpoints(1, 20).tolist() == [1, 2, 4, 8, 16, 20]
    assert geometric_checkpoints(3, 10, 1.5).tolist() == [3, 5, 7, 10]
    with pytest.raises(ConfigurationError):
        geometric_checkpoints(5, 2)


def test_extremal_zero_iid_limit():
    res = extremal_index_zero_check(IIDModel(Pareto(1.0)), 1.0, [1000], 10_000, seed=4)
    assert res.estimates[0] == pytest.approx(math.exp(-1), abs=0.02)
    assert res.levels[0] == pytest.approx(1000.0)


def test_extremal_zero_small_tau():
    res = extremal_index_zero_check(IIDModel(Uniform(0.0, 1.0)), 1e-9, [10, 100], 500, seed=4)
    assert np.all(res.estimates == 1.0)


def test_extremal_zero_needs_marginal():
    with pytest.raises(ConfigurationError):
        extremal_index_zero_check(LindleyModel(Gaussian(-1, 1)), 1.0, [10], 100, 0)
    with pytest.raises(ConfigurationError):
        extremal_index_zero_check(FiniteModel([[1.0]], [0.0]), 1.0, [10], 100, 0)
