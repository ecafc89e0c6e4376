import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from phantomlab.densities import (
    BlockMaximum,
    Constant,
    CustomTable,
    Exponential,
    Gaussian,
    Pareto,
    Proposal,
    StudentT,
    Uniform,
    distribution_from_spec,
    proposal_from_spec,
)
from phantomlab.errors import ConfigurationError, ModelDefinitionError


def test_pareto_density_values():
    p = Pareto(1.0)
    assert p.pdf(2.0) == pytest.approx(0.25)
    assert p.pdf(4.0) == pytest.approx(1 / 16)
    assert p.pdf(0.5) == 0.0
    assert p.cdf(2.0) == pytest.approx(0.5)
    assert p.ppf(0.5) == pytest.approx(2.0)


def test_pareto_general_parametrization():
    p = Pareto(2.5, x_min=3.0)
    x = 4.2
    assert p.pdf(x) == pytest.approx(2.5 * 3.0**2.5 * x**-3.5)


@pytest.mark.parametrize("dist", [Pareto(1.0), Pareto(3.0, 2.0), StudentT(3.0), Gaussian(1.0, 2.0),
                                  Uniform(-1.0, 2.0), Exponential(0.5)])
def test_inverse_cdf_sampler_passes_ks(dist):
    u = np.random.default_rng(0).random(20000)
    x = np.sort(dist.sample(u))
    F = dist.cdf(x)
    n = x.size
    d = max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n))
    assert d < 1.36 / math.sqrt(n)


@pytest.mark.parametrize("dist", [StudentT(2.0), Gaussian(0.0, 1.0), Exponential(2.0)])
def test_pdf_matches_scipy(dist):
    x = np.linspace(0.1, 4, 9)
    ref = {"student_t": lambda: stats.t(2.0).pdf(x),
           "gaussian": lambda: stats.norm.pdf(x),
           "exponential": lambda: stats.expon(scale=0.5).pdf(x)}[dist.family]()
    np.testing.assert_allclose(dist.pdf(x), ref, rtol=1e-12)


def test_custom_table_normalization_checked():
    with pytest.raises(ModelDefinitionError):
        CustomTable([0.0, 1.0, 2.0], [0.5, 0.6, 0.0])
    t = CustomTable([0.0, 1.0, 3.0], [0.5, 0.25, 0.0])
    assert t.pdf(0.5) == 0.5 and t.pdf(2.0) == 0.25 and t.pdf(3.0) == 0.0
    assert t.cdf(1.0) == pytest.approx(0.5)
    assert t.ppf(0.75) == pytest.approx(2.0)


def test_constant_point_mass():
    c = Constant(3.0)
    assert np.all(c.sample(np.linspace(0, 1, 5)) == 3.0)
    assert c.cdf(2.999) == 0.0 and c.cdf(3.0) == 1.0


def test_block_maximum_law():
    b = BlockMaximum(Uniform(0.0, 1.0), 2)
    assert b.cdf(0.5) == pytest.approx(0.25)
    assert b.ppf(0.25) == pytest.approx(0.5)


@pytest.mark.parametrize("family", ["gaussian", "uniform", "cauchy"])
def test_proposal_symmetric(family):
    z = Proposal(family, 1.5).increment(np.random.default_rng(1).random(20000))
    ks = stats.ks_2samp(z, -z).statistic
    assert ks < 1.36 * math.sqrt(2 / z.size)


def test_spec_round_trip():
    for d in [Pareto(1.5, 2.0), StudentT(4.0), Gaussian(0.5, 2.0), Uniform(0, 3), Exponential(2.0),
              Constant(1.0)]:
        assert distribution_from_spec(d.spec()) == d
    t = CustomTable([0.0, 1.0, 2.0], [0.25, 0.75, 0.0])
    assert distribution_from_spec(t.spec()).spec() == t.spec()
    assert proposal_from_spec({"family": "uniform", "half_width": 2.0}) == Proposal("uniform", 2.0)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigurationError):
        distribution_from_spec({"family": "pareto", "alpha": 1, "shape": 2})
    with pytest.raises(ConfigurationError):
        proposal_from_spec({"family": "gaussian", "width": 1})


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(0.2, 5), q=st.floats(1e-6, 1 - 1e-6))
def test_pareto_ppf_inverts_cdf(alpha, q):
    p = Pareto(alpha)
    assert float(p.cdf(p.ppf(q))) == pytest.approx(q, abs=1e-9)
