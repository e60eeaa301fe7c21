import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logsumexp

from conftest import qj_list_prob_naive
from vsporder.data import RankDataset
from vsporder.errors import ActorMismatch
from vsporder.observation import (
    ListEvaluator,
    dataset_log_lik,
    normalize_model,
    qjb_log_lik,
    qjb_log_lik_naive,
    qjd_log_lik,
    qju_log_lik,
    simulate_dataset,
    simulate_qjb,
    simulate_qjd,
    simulate_qju,
)
from vsporder.poset import enumerate_linear_extensions
from vsporder.trees import Mdt, sample_bdt_prior


def test_normalize_model():
    assert normalize_model("QJ-U") == "qju"
    assert normalize_model("qj_b") == "qjb"
    with pytest.raises(ValueError):
        normalize_model("pl")


def test_noise_free_qju_on_v0(m0):
    # 1 forced; 3 tops {2,3,4,5} in 2 of 3 extensions; 2 tops {2,4,5} in 1 of 2
    assert qju_log_lik((1, 3, 2, 4, 5), m0, 0.0) == pytest.approx(math.log(1 / 3))
    assert qju_log_lik((1, 2, 3, 4, 5), m0, 0.0) == pytest.approx(math.log(1 / 3))
    assert qju_log_lik((2, 1, 3, 4, 5), m0, 0.0) == -math.inf


def test_noise_free_qjd_on_v0(m0):
    # bottom-up: 5 forced; then 4 or 2 at the bottom of {1,2,3,4}
    assert qjd_log_lik((1, 3, 4, 2, 5), m0, 0.0) == pytest.approx(math.log(1 / 3))
    assert qjd_log_lik((1, 2, 3, 4, 5), m0, 0.0) == pytest.approx(math.log(2 / 3 * 1 / 2))


def test_pure_noise_is_uniform(m0):
    for model in (qju_log_lik, qjd_log_lik):
        assert model((5, 4, 3, 2, 1), m0, 1.0) == pytest.approx(-math.log(120))
    assert qjb_log_lik((5, 4, 3, 2, 1), m0, 1.0, 0.3) == pytest.approx(-math.log(120))


def test_full_permutation_required(m0):
    with pytest.raises(ActorMismatch):
        qju_log_lik((1, 2, 3), m0, 0.1)
    with pytest.raises(ActorMismatch):
        qjb_log_lik((1, 2, 3, 4, 5, 6), m0, 0.1, 0.5)
    with pytest.raises(ActorMismatch):
        qjd_log_lik((1, 1, 3, 4, 5), m0, 0.1)


def test_dataset_lists_use_restricted_order(m0):
    total, per = dataset_log_lik([(2, 5), (4, 3), (2, 4)], m0, "qju", 0.0)
    assert per[0] == 0.0
    assert per[1] == -math.inf
    assert per[2] == pytest.approx(math.log(0.5))
    assert total == -math.inf
    with pytest.raises(ActorMismatch):
        dataset_log_lik([(1, 9)], m0, "qju", 0.1)


def test_dataset_accepts_rank_dataset(m0):
    ds = RankDataset.from_lists([(1, 2, 5), (3, 4)], actors=[1, 2, 3, 4, 5])
    total, per = dataset_log_lik(ds, m0, "qj-b", 0.2, 0.4)
    assert per.shape == (2,) and total == pytest.approx(per.sum())


def _random_instance(rng, n_max=7):
    n = int(rng.integers(1, n_max + 1))
    t = sample_bdt_prior(n, rng.random(), rng)
    x = tuple(int(a) for a in rng.permutation(sorted(t.leaf_of)))
    les = enumerate_linear_extensions(t.to_vsp())
    if rng.random() < 0.5:
        x = les[int(rng.integers(len(les)))]
    return t, x


def test_models_match_direct_recursion():
    rng = np.random.default_rng(8)
    for _ in range(60):
        t, x = _random_instance(rng, 6)
        p = float(rng.choice([0.0, rng.random()]))
        phi = float(rng.random())
        v = t.to_vsp()
        for got, ph in ((qju_log_lik(x, t, p), 1), (qjd_log_lik(x, t, p), 0), (qjb_log_lik(x, t, p, phi), phi)):
            ref = qj_list_prob_naive(v, x, p, ph)
            if ref == 0:
                assert got == -math.inf
            else:
                assert got == pytest.approx(math.log(ref), rel=1e-12, abs=1e-12)


def test_qjb_matches_direction_sum():
    rng = np.random.default_rng(9)
    for _ in range(40):
        t, x = _random_instance(rng, 7)
        p, phi = float(rng.random()), float(rng.random())
        ref = qjb_log_lik_naive(x, t, p, phi)
        got = qjb_log_lik(x, t, p, phi)
        assert got == pytest.approx(ref, rel=1e-12, abs=1e-12)


@given(st.integers(1, 8), st.integers(0, 2**32 - 1), st.floats(0, 1))
@settings(max_examples=60, deadline=None)
def test_qjb_nesting_is_exact(n, seed, p):
    rng = np.random.default_rng(seed)
    t = sample_bdt_prior(n, 0.5, rng)
    x = tuple(int(a) for a in rng.permutation(sorted(t.leaf_of)))
    assert qjb_log_lik(x, t, p, 1.0) == qju_log_lik(x, t, p)
    assert qjb_log_lik(x, t, p, 0.0) == qjd_log_lik(x, t, p)


@pytest.mark.parametrize("model", ["qju", "qjd", "qjb"])
def test_normalised_over_permutations(model, m0):
    ev = ListEvaluator(m0)
    logs = [ev.log_lik(x, model, 0.15, 0.35) for x in itertools.permutations(range(1, 6))]
    assert abs(logsumexp(logs)) < 1e-12


def test_qju_on_dual_is_qjd(m0):
    from vsporder.trees import dual_tree

    rng = np.random.default_rng(1)
    d = dual_tree(m0)
    for _ in range(20):
        x = tuple(int(a) for a in rng.permutation([1, 2, 3, 4, 5]))
        assert qju_log_lik(x, m0, 0.2) == pytest.approx(qjd_log_lik(x[::-1], d, 0.2), rel=1e-12)


def test_noise_free_simulation_gives_extensions(m0):
    rng = np.random.default_rng(4)
    les = set(enumerate_linear_extensions(m0.to_vsp()))
    for sim in (simulate_qju, simulate_qjd):
        for _ in range(50):
            assert sim(m0, 0.0, rng) in les
    for _ in range(50):
        assert simulate_qjb(m0, 0.0, 0.5, rng) in les


def test_qju_simulation_frequencies(m0):
    rng = np.random.default_rng(12)
    draws = 20000
    c = Counter(simulate_qju(m0, 0.3, rng) for _ in range(draws))
    for x, k in c.most_common(5):
        prob = math.exp(qju_log_lik(x, m0, 0.3))
        assert abs(k / draws - prob) < 4 * math.sqrt(prob * (1 - prob) / draws)


def test_simulate_dataset_memberships(m0):
    rng = np.random.default_rng(0)
    ds = simulate_dataset(m0, "qj-b", 0.1, 0.5, [[1, 2, 3], [4, 5], [2]], rng)
    assert [x.membership for x in ds.lists] == [frozenset({1, 2, 3}), frozenset({4, 5}), frozenset({2})]
    assert ds.actor_ids == [1, 2, 3, 4, 5]
    with pytest.raises(ActorMismatch):
        simulate_dataset(m0, "qju", 0.1, 0.5, [[1, 7]], rng)


def test_single_actor_list_has_probability_one():
    m = Mdt.from_nested({"S": [1, 2]})
    assert dataset_log_lik([(2,)], m, "qjd", 0.3)[0] == 0.0
