import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phantomlab.densities import Uniform
from phantomlab.empirics import MaxSampleMatrix, run_replicas
from phantomlab.errors import ContractViolation, EstimationError
from phantomlab.models import IIDModel, Start
from phantomlab.relext import estimate_theta, theta_quantile_transfer


def _pair(R, seed, n=100):
    a = run_replicas(IIDModel(Uniform(0.0, 1.0), block=2), Start.stationary(), [n], R, seed)
    b = run_replicas(IIDModel(Uniform(0.0, 1.0)), Start.stationary(), [n], R, seed + 1)
    return a, b


def test_same_samples_give_one():
    a, _ = _pair(500, 1)
    est = estimate_theta(a, a, 0)
    assert est.theta_hat == 1.0
    assert 0 <= est.valid_fraction <= 1


def test_pairwise_maxima_recover_two():
    a, b = _pair(20_000, 3)
    est = estimate_theta(a, b, 0)
    assert est.theta_hat == pytest.approx(2.0, abs=0.15)
    back = estimate_theta(b, a, 0)
    assert 0.97 <= est.theta_hat * back.theta_hat <= 1.03


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), shift=st.floats(-5, 5), scale=st.floats(0.1, 10))
def test_invariant_under_increasing_transform(seed, shift, scale):
    rng = np.random.default_rng(seed)
    a = MaxSampleMatrix([7], rng.random((300, 1)))
    b = MaxSampleMatrix([7], rng.random((300, 1)) ** 0.7)

    def f(m):
        return MaxSampleMatrix(m.checkpoints, np.exp(scale * m.values) + shift)

    assert estimate_theta(f(a), f(b), 0).theta_hat == estimate_theta(a, b, 0).theta_hat


def test_too_few_points():
    a = MaxSampleMatrix([1], np.arange(5.0)[:, None])
    with pytest.raises(EstimationError, match="band"):
        estimate_theta(a, a, 0)


def test_checkpoint_mismatch():
    a = MaxSampleMatrix([1], np.zeros((10, 1)))
    b = MaxSampleMatrix([2], np.zeros((10, 1)))
    with pytest.raises(ContractViolation):
        estimate_theta(a, b, 0)


def test_transfer_examples():
    assert theta_quantile_transfer(1.0, 0.3) == 0.3
    assert theta_quantile_transfer(2.0, math.exp(-1)) == pytest.approx(0.6065, abs=5e-5)
    assert theta_quantile_transfer(0.5, 0.25) == pytest.approx(0.0625)
    with pytest.raises(ContractViolation):
        theta_quantile_transfer(0.0, 0.5)
