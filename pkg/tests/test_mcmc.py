import math
from collections import Counter

import numpy as np
import pytest
from scipy import integrate, stats
from scipy.special import expit

from conftest import tv_distance
from vsporder.data import RankDataset
from vsporder.errors import OracleBoundExceeded
from vsporder.mcmc import (
    ChainState,
    McmcConfig,
    Posterior,
    bdt_type_update,
    check_state,
    effective_sample_size,
    exact_posterior,
    run_chain,
)
from vsporder.poset import PartialOrder
from vsporder.prior import HyperPriorSpec
from vsporder.trees import Bdt, Mdt


def _flat(actors):
    return RankDataset.from_lists([], actors=actors)


def test_config_validation():
    with pytest.raises(ValueError):
        McmcConfig(iterations=10, burn_in=10)
    with pytest.raises(ValueError):
        McmcConfig(parameterization="xyz")
    with pytest.raises(ValueError):
        McmcConfig(step_p=-1.0)
    with pytest.raises(ValueError):
        McmcConfig(init={"r": 0.2})
    c = McmcConfig(iterations=100, thin=7)
    assert c.burn_in == 20 and c.n_samples == 11


@pytest.mark.parametrize("param", ["bdt", "mdt"])
def test_two_actors_no_data_series_fraction_is_q(param):
    q = 0.3
    cfg = McmcConfig(iterations=20000, thin=1, burn_in=0, seed=1, parameterization=param,
                     step_q=0.0, step_p=0.0, init={"q": q, "p": 0.5}, check_every=0)
    tr = run_chain(_flat([1, 2]), cfg)
    series = np.array([s.tree.kind[s.tree.root] == "S" for s in tr.samples], dtype=float)
    se = math.sqrt(q * (1 - q) / effective_sample_size(series))
    assert abs(series.mean() - q) < 4 * se
    assert set(tr.values("q")) == {q}


def test_two_actors_no_data_free_q():
    spec = HyperPriorSpec()
    cfg = McmcConfig(iterations=40000, thin=1, burn_in=1000, seed=2, step_p=0.0, check_every=0)
    tr = run_chain(_flat([1, 2]), cfg, spec)
    above = np.array([v.above(1, 2) for v in tr.vsps()], dtype=float)
    mean_q, _ = integrate.quad(lambda z: expit(z) * stats.norm.pdf(z, spec.eta_mean, spec.eta_sd), -30, 30)
    se = math.sqrt(0.25 / effective_sample_size(above))
    assert abs(above.mean() - mean_q / 2) < 4 * se


def test_q_marginal_without_data_is_hyperprior():
    spec = HyperPriorSpec()
    cfg = McmcConfig(iterations=60000, thin=20, burn_in=0, seed=3, step_q=2.0, check_every=0)
    tr = run_chain(_flat([1, 2, 3]), cfg, spec)
    z = np.log(tr.values("q") / (1 - tr.values("q")))
    assert stats.kstest(z, stats.norm(spec.eta_mean, spec.eta_sd).cdf).pvalue > 0.01


def test_rejected_flip_leaves_state_unchanged():
    post = Posterior([(1, 2)] * 50, [1, 2], "qju", HyperPriorSpec(), "bdt")
    state = ChainState.create(Bdt.from_nested(("S", 1, 2)), 0.5, 1e-6, 1.0, post)
    before = (state.tree, state.log_lik, state.log_prior_tree, state.per_list.copy())
    bdt_type_update(state, np.random.default_rng(0))
    assert state.counts["flip"] == [0, 1]
    assert state.tree is before[0]
    assert state.log_lik == before[1] and state.log_prior_tree == before[2]
    assert np.array_equal(state.per_list, before[3])


def _small_data():
    return RankDataset.from_lists([(1, 2, 3), (2, 3), (1, 3, 4), (4, 2)])


@pytest.mark.parametrize("param", ["bdt", "mdt"])
def test_same_seed_same_trace(param):
    cfg = McmcConfig(iterations=300, thin=3, seed=11, parameterization=param, model="qjb")
    a = run_chain(_small_data(), cfg)
    b = run_chain(_small_data(), cfg)
    assert a.samples == b.samples and a.acceptance == b.acceptance
    c = run_chain(_small_data(), McmcConfig(iterations=300, thin=3, seed=12, parameterization=param, model="qjb"))
    assert a.samples != c.samples


def test_fixed_p_and_unused_phi():
    cfg = McmcConfig(iterations=400, thin=1, seed=5, model="qju", step_p=0.0, init={"p": 0.2}, check_every=50)
    tr = run_chain(_small_data(), cfg)
    assert set(tr.values("p")) == {0.2}
    assert set(tr.values("phi")) == {1.0}
    assert tr.acceptance["p"][1] == 0 and tr.acceptance["phi"][1] == 0
    assert tr.acceptance["q"][1] == 400
    tr = run_chain(_small_data(), McmcConfig(iterations=200, seed=5, model="qjd"))
    assert set(tr.values("phi")) == {0.0}


@pytest.mark.parametrize("param", ["bdt", "mdt"])
def test_cached_state_matches_recomputation(param):
    cfg = McmcConfig(iterations=300, thin=10, seed=9, parameterization=param, model="qjb", check_every=1)
    tr = run_chain(_small_data(), cfg)
    assert len(tr) == cfg.n_samples
    for s in tr.samples:
        s.tree.validate()
        assert s.log_lik == pytest.approx(sum(s.per_list))


def test_check_state_detects_drift():
    post = Posterior([(1, 2, 3)], [1, 2, 3], "qju", HyperPriorSpec(), "mdt")
    state = ChainState.create(Mdt.from_nested({"S": [1, 2, 3]}), 0.5, 0.1, 1.0, post)
    check_state(state)
    state.log_lik += 1e-3
    with pytest.raises(RuntimeError):
        check_state(state)


def test_exact_posterior_basics():
    post = exact_posterior([], 0.5, 0.1, actors=[1, 2, 3])
    assert len(post) == 19
    assert sum(post.values()) == pytest.approx(1.0, abs=1e-12)
    data = [(1, 2, 3)] * 20
    post = exact_posterior(data, 0.5, 0.05)
    best = max(post, key=post.get)
    assert best == PartialOrder.from_edges([1, 2, 3], [(1, 2), (2, 3)])
    with pytest.raises(OracleBoundExceeded):
        exact_posterior([(1, 2, 3, 4, 5)], 0.5, 0.1)


@pytest.mark.parametrize("param", ["bdt", "mdt"])
def test_short_chain_matches_exact_posterior(param):
    data = RankDataset.from_lists([(1, 2, 3), (2, 1, 3), (1, 3)])
    q, p = 0.5, 0.2
    cfg = McmcConfig(iterations=30000, thin=1, burn_in=1000, seed=21, parameterization=param,
                     step_q=0.0, step_p=0.0, init={"q": q, "p": p}, check_every=0)
    tr = run_chain(data, cfg)
    exact = exact_posterior(data, q, p)
    assert tv_distance(Counter(tr.vsps()), exact) < 0.03


def test_ess_of_independent_draws():
    x = np.random.default_rng(0).normal(size=4000)
    assert 3000 < effective_sample_size(x) < 5000
    ar = np.cumsum(np.random.default_rng(1).normal(size=4000))
    assert effective_sample_size(ar) < 200
