import math

import numpy as np
import pytest

from eqlearn import (
    CCESolver,
    CceResult,
    ExplicitGame,
    QueryCounter,
    cce_distributions,
    make_hard_instance,
    make_random_game,
    solve_cce,
    verify_cce,
)
from eqlearn.mwu import cce_params
from eqlearn.verify import external_regret


def matching_pennies():
    l1 = np.array([[0.0, 1.0], [1.0, 0.0]])
    return ExplicitGame(np.stack([l1, 1.0 - l1]), loss_bound=1.0)


def test_query_count_and_marginals():
    g = make_random_game(3, 3, seed=2)
    c = QueryCounter()
    r = solve_cce(g, 0.5, 0.2, rng=0, counter=c)
    T = r.params.T
    assert c.count == r.query_count == 3 * 3 * T
    assert np.all(r.counts.sum(axis=1) == T)
    for i in range(3):
        assert np.array_equal(np.bincount(r.joint_samples[:, i], minlength=3), r.counts[i])
    assert np.allclose(r.marginals * T, np.round(r.marginals * T))


def test_single_action_short_circuit():
    g = make_hard_instance(3, 1)
    r = solve_cce(g, 0.3, 0.1, rng=0)
    assert r.query_count == 0 and r.backend == "trivial"
    assert np.all(r.marginals == 1.0)
    assert verify_cce(g, cce_distributions(r)["product"]).max_gap == 0


def test_single_player_concentrates():
    g = ExplicitGame(np.array([[0.9, 0.2, 0.6, 0.4]]), loss_bound=1.0)
    r = solve_cce(g, 0.2, 0.1, rng=3)
    assert r.marginals[0, 1] >= 0.8


def test_constant_game_zero_gap():
    g = ExplicitGame(np.full((2, 3, 3), 0.5), loss_bound=1.0)
    r = solve_cce(g, 0.5, 0.5, rng=1)
    for d in cce_distributions(r).values():
        assert verify_cce(g, d).max_gap == pytest.approx(0, abs=1e-12)


@pytest.mark.slow
def test_matching_pennies_near_uniform():
    g = matching_pennies()
    ok = 0
    for seed in range(20):
        r = solve_cce(g, 0.1, 0.1, rng=seed)
        ok += np.max(np.abs(r.marginals - 0.5)) <= 0.1
    assert ok >= 11


def test_cumulative_loss_rederived_from_samples():
    g = make_random_game(2, 4, seed=7)
    r = solve_cce(g, 0.5, 0.3, rng=5)
    for i in range(2):
        L = g.loss_matrix(i, r.joint_samples)
        assert np.allclose(L.sum(axis=0), r.cumulative_loss[i], rtol=0, atol=1e-12 * r.T)


def test_sampling_law_is_gibbs_over_realized_losses():
    # Re-derive the law of each round from the history and check that the
    # realized actions are consistent with inverse-CDF draws from it.
    g = make_random_game(2, 3, seed=1)
    r = solve_cce(g, 0.5, 0.3, rng=2, overrides={"T": 300}, backend="python")
    rng = np.random.default_rng(2)
    u = rng.random((300, 2))
    cum = np.zeros((2, 3))
    for t in range(300):
        for i in range(2):
            w = np.exp(-r.params.eta * (cum[i] - cum[i].min()))
            p = np.cumsum(w / w.sum())
            assert r.joint_samples[t, i] == min(np.searchsorted(p, u[t, i] * p[-1], "right"), 2)
        for i in range(2):
            cum[i] += g.loss_vector(i, r.joint_samples[t])


@pytest.mark.parametrize("noise", ["exact", "uniform_mix", "argmax_shift"])
def test_backends_agree(noise):
    g = make_random_game(3, 3, seed=11)
    kw = dict(overrides={"T": 500, "delta": 0.05}, noise=noise, rng=9)
    a = solve_cce(g, 0.5, 0.3, backend="python", **kw)
    b = solve_cce(g, 0.5, 0.3, backend="compiled", **kw)
    assert np.array_equal(a.joint_samples, b.joint_samples)
    assert a.query_count == b.query_count


def test_seeded_determinism():
    g = make_hard_instance(2, 4, seed=0)
    a = solve_cce(g, 0.3, 0.1, rng=7).to_json()
    b = solve_cce(g, 0.3, 0.1, rng=7).to_json()
    assert a == b


def test_ghost_regret_observable():
    g = make_random_game(2, 4, seed=3)
    B, n = 1.0, 4
    passed = 0
    for seed in range(20):
        r = solve_cce(g, 0.4, 0.2, rng=seed)
        T = r.T
        slack = 2 * B * math.sqrt(T * math.log(n)) + 4 * B * math.sqrt(T * math.log(2 / 0.05))
        for i in range(2):
            ell = g.loss_matrix(i, r.joint_samples)
            x = np.eye(n)[r.joint_samples[:, i]]
            passed += external_regret(x, ell) <= slack
    assert passed >= 0.9 * 40


def test_distributions_examples():
    g = make_random_game(2, 2, seed=0)
    r = solve_cce(g, 0.5, 0.3, rng=0, overrides={"T": 1})
    d = cce_distributions(r)
    assert d["empirical"].support_size == 1
    assert np.allclose(d["product"].to_sparse().probs, d["empirical"].probs)

    params = cce_params(0.5, 1.0, 2, 0.3, {"T": 2})
    r = CceResult(counts=np.array([[1, 1], [1, 1]]), joint_samples=np.array([[0, 0], [1, 1]]),
                  params=params, query_count=0, noise={})
    d = cce_distributions(r)
    assert np.allclose(d["empirical"].probs, 0.5) and d["empirical"].support_size == 2
    assert np.allclose(d["product"].to_sparse().probs, 0.25)


def test_json_round_trip():
    g = make_random_game(2, 3, seed=4)
    r = solve_cce(g, 0.5, 0.3, rng=1, overrides={"T": 50})
    back = CceResult.from_dict(r.to_dict())
    assert np.array_equal(back.counts, r.counts)
    assert np.array_equal(back.joint_samples, r.joint_samples)
    assert back.params.T == 50 and not back.params.paper_scale
    assert r.to_dict()["marginals"]["denominator"] == 50


def test_estimator_api():
    g = make_random_game(2, 3, seed=4)
    est = CCESolver(eps=0.5, alpha=0.3, random_state=0)
    assert est.get_params()["eps"] == 0.5
    est.fit(g)
    assert est.predict().players == 2
    assert est.score() <= 0.0
    est.set_params(target="empirical")
    assert est.predict().__class__.__name__ == "SparseJoint"
