import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.special import logsumexp

from vsporder.errors import OracleBoundExceeded, OutOfSupport
from vsporder.poset import enumerate_vsps
from vsporder.prior import (
    Dist,
    HyperPriorSpec,
    Hyperparams,
    bdt_log_prior,
    bdt_multiplicity,
    catalan,
    check_marginal_consistency,
    double_factorial,
    hyper_log_prior,
    log_catalan,
    log_odd_double_factorial,
    prior_depth_histogram,
    sample_hyper,
    vsp_log_prior,
)
from vsporder.trees import Bdt, enumerate_bdts, sample_bdt_prior, vsp_to_mdt


def test_combinatorial_constants():
    assert [catalan(s) for s in range(7)] == [1, 1, 2, 5, 14, 42, 132]
    assert [double_factorial(k) for k in (-1, 0, 1, 3, 5, 7, 8)] == [1, 1, 1, 3, 15, 105, 384]
    for m in (150, 199, 200, 201, 500):
        assert log_odd_double_factorial(m) == pytest.approx(
            math.lgamma(2 * m + 1) - m * math.log(2) - math.lgamma(m + 1), rel=1e-12
        )
        assert log_catalan(m) == pytest.approx(math.log(math.comb(2 * m, m) // (m + 1)), rel=1e-12)


def test_t0_prior_and_multiplicity(t0, m0):
    q = 0.3
    expected = math.log((q / 2) ** 3 * (1 - q) / 105)
    assert bdt_log_prior(t0, q) == pytest.approx(expected, abs=1e-14)
    assert bdt_multiplicity(t0) == 2
    assert bdt_multiplicity(m0) == 2
    assert vsp_log_prior(m0, q) == pytest.approx(expected + math.log(2), abs=1e-14)


def test_v0_prior_at_half(m0):
    # 2 (q/2)^3 (1-q) / 7!! at q = 1/2
    assert math.exp(vsp_log_prior(m0, 0.5)) == pytest.approx(1 / 6720, rel=1e-13)


def test_m1_multiplicity(m1):
    # S node with 4 children -> Catalan(3); P node with 3 children -> 3!!
    assert bdt_multiplicity(m1) == 5 * 3


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
def test_bdt_prior_sums_to_one(n, q):
    total = logsumexp([bdt_log_prior(t, q) for t in enumerate_bdts(list(range(1, n + 1)))])
    assert abs(total) < 1e-12


@pytest.mark.parametrize("q", [0.0, 1.0])
def test_extreme_q_concentrates(q):
    vsps = [vsp_to_mdt(v) for v in enumerate_vsps(3)]
    probs = np.exp([vsp_log_prior(m, q) for m in vsps])
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    if q == 0.0:
        assert probs.max() == pytest.approx(1.0)
    else:
        # only the six total orders survive
        assert np.count_nonzero(probs) == 6


def test_multiplicity_matches_enumeration_n4():
    trees = enumerate_bdts([1, 2, 3, 4])
    counts = {}
    for t in trees:
        counts[t.key()] = counts.get(t.key(), 0) + 1
    for t in trees[::7]:
        assert bdt_multiplicity(t) == counts[t.key()]


def test_marginal_consistency_n3():
    for q in (0.2, 0.7):
        assert check_marginal_consistency(3, q) < 1e-14


def test_marginal_consistency_bound():
    with pytest.raises(OracleBoundExceeded):
        check_marginal_consistency(6, 0.5)


def test_dist_logpdf_matches_scipy():
    b = Dist("beta", (2.0, 3.5))
    ln = Dist("logit-normal", (0.4, 1.3))
    for x in (0.01, 0.3, 0.5, 0.97):
        assert b.logpdf(x) == pytest.approx(stats.beta.logpdf(x, 2.0, 3.5), rel=1e-12)
        z = math.log(x / (1 - x))
        ref = stats.norm.logpdf(z, 0.4, 1.3) - math.log(x * (1 - x))
        assert ln.logpdf(x) == pytest.approx(ref, rel=1e-12)
    assert Dist.uniform().logpdf(0.0) == 0.0
    assert ln.logpdf(1.0) == -math.inf


def test_dist_support_and_validation():
    with pytest.raises(OutOfSupport):
        Dist.uniform().logpdf(1.2)
    with pytest.raises(ValueError):
        Dist("beta", (0.0, 1.0))
    with pytest.raises(ValueError):
        Dist("gamma", (1.0, 1.0))


def test_dist_cdf():
    ln = Dist("logit-normal", (1.0, 1.5))
    assert ln.cdf(0.5) == pytest.approx(stats.norm.cdf(0.0, 1.0, 1.5))
    assert Dist.uniform().cdf(0.3) == pytest.approx(0.3)


def test_hyperprior_roundtrip():
    spec = HyperPriorSpec(0.5, 2.0, Dist("beta", (1.0, 3.0)), Dist("beta", (2.0, 2.0)))
    assert HyperPriorSpec.from_dict(spec.to_dict()) == spec
    assert spec.q_prior == Dist("logit-normal", (0.5, 2.0))


def test_hyper_log_prior_sums_parts():
    spec = HyperPriorSpec()
    h = Hyperparams(0.3, 0.2, 0.6)
    full = hyper_log_prior(h, spec)
    assert full == pytest.approx(spec.q_prior.logpdf(0.3) + spec.p_prior.logpdf(0.2) + spec.phi_prior.logpdf(0.6))
    assert hyper_log_prior(h, spec, with_phi=False) == pytest.approx(full - spec.phi_prior.logpdf(0.6))


def test_hyperparams_validation():
    with pytest.raises(OutOfSupport):
        Hyperparams(1.5, 0.2)


def test_sample_hyper_in_range():
    rng = np.random.default_rng(1)
    for _ in range(50):
        h = sample_hyper(HyperPriorSpec(), rng)
        assert 0 < h.q < 1 and 0 < h.p < 1 and 0 <= h.phi <= 1


def test_depth_histogram_is_distribution():
    rng = np.random.default_rng(2)
    h = prior_depth_histogram(8, HyperPriorSpec(), 2000, rng)
    assert h.shape == (8,)
    assert h.sum() == pytest.approx(1.0)
    fixed = prior_depth_histogram(8, HyperPriorSpec(), 500, rng, q=0.0)
    assert fixed[0] == 1.0


@given(st.integers(1, 12), st.floats(0.01, 0.99), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_vsp_prior_is_bdt_prior_times_multiplicity(n, q, seed):
    t = sample_bdt_prior(n, q, np.random.default_rng(seed))
    m = vsp_to_mdt(t.to_vsp())
    lhs = vsp_log_prior(m, q)
    rhs = bdt_log_prior(t, q) + math.log(bdt_multiplicity(t))
    assert lhs == pytest.approx(rhs, abs=1e-10)
    assert bdt_multiplicity(t) == bdt_multiplicity(m)


def test_two_actor_parallel_prior():
    t = Bdt.from_nested(("P", 1, 2))
    assert bdt_log_prior(t, 0.4) == pytest.approx(math.log(0.6))
