import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eqlearn import (
    InputDomainError,
    MultiplicativeWeights,
    MwuState,
    cce_params,
    ms_mwu_strategy,
    ms_params,
    ms_schedule,
    mwu_run,
    mwu_strategy,
)
from eqlearn._validation import InfeasibleParametersError
from eqlearn.mwu import mwu_regret_bound


def test_mwu_strategy_examples():
    assert np.allclose(mwu_strategy(MwuState(np.zeros(3), 0.5)), 1 / 3)
    assert np.allclose(mwu_strategy(MwuState(np.array([0.0, math.log(2)]), 1.0)), [2 / 3, 1 / 3])
    c = np.array([0.0, 0.7])
    p1 = mwu_strategy(MwuState(c, 1.0))
    p2 = mwu_strategy(MwuState(c, 2.0))
    assert (p2[0] / p2[1]) == pytest.approx((p1[0] / p1[1]) ** 2)


def test_mwu_run_examples():
    x, r = mwu_run(np.zeros((10, 3)))
    assert np.allclose(x, 1 / 3) and r == 0
    x, r = mwu_run([[0.0, 1.0]])
    assert r == pytest.approx(0.5)
    with pytest.raises(InputDomainError):
        mwu_run([[0.0, 1.5]])
    with pytest.raises(InputDomainError):
        mwu_run([[0.0, -0.1]])


def test_mwu_run_iid_stream():
    losses = np.random.default_rng(0).random((4096, 2))
    _, r = mwu_run(losses)
    assert r <= 2 * math.sqrt(4096 * math.log(2))


def test_mwu_run_matches_online_estimator():
    losses = np.random.default_rng(1).random((50, 4)) * 2
    x, r = mwu_run(losses, loss_bound=2.0)
    est = MultiplicativeWeights(n_actions=4, horizon=50, loss_bound=2.0).fit(losses)
    assert np.allclose(np.array(est.strategies_), x, atol=1e-12)
    assert est.regret() == pytest.approx(r)
    assert est.get_params()["horizon"] == 50


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 16), st.sampled_from([64, 256, 1024, 4096]), st.floats(0.1, 5),
       st.integers(0, 2**31))
def test_regret_bound_random_streams(n, T, B, seed):
    rng = np.random.default_rng(seed)
    losses = rng.random((T, n)) * B
    if seed % 2:  # adversarial-flavoured: reward whoever is currently behind
        losses = np.where(rng.random((T, n)) < 0.5, 0.0, B)
    _, r = mwu_run(losses, loss_bound=B)
    assert r <= mwu_regret_bound(n, T, B) + 1e-9


def test_schedule_examples():
    assert (ms_schedule(1, 1, 4).r, ms_schedule(1, 1, 4).h) == (1, 0)
    assert (ms_schedule(5, 1, 4).r, ms_schedule(5, 1, 4).h) == (2, 0)
    # Only rounds 1..3 have been played when choosing round 4's strategy.
    c = ms_schedule(4, 1, 4)
    assert (c.r, c.h, c.start, c.stop) == (1, 3, 1, 3)


@pytest.mark.parametrize("H,K", [(2, 1), (3, 2), (4, 1), (10, 1)])
def test_schedule_bounds(H, K):
    T = min(H ** (2**K), 5000)
    for k in range(1, 2**K + 1):
        for t in range(1, T + 1):
            c = ms_schedule(t, k, H)
            assert 0 <= c.h <= H
            assert 1 <= c.r <= max(1, math.ceil(T / H**k))
            assert c.stop < t


def test_ms_mwu_strategy():
    p, q = ms_mwu_strategy(np.zeros((1, 4)), H=16)
    assert np.allclose(p, 0.25)
    L = np.array([[0.0, 5.0, 1.0]])
    p, _ = ms_mwu_strategy(L, H=9)
    assert np.allclose(p, mwu_strategy(MwuState(L[0], math.sqrt(math.log(3) / 9))), atol=1e-12)
    p, q = ms_mwu_strategy(np.array([[0.0, 1e6], [1e6, 0.0]]), H=4)
    assert np.allclose(p, [0.5, 0.5])


def test_ms_mwu_single_scale_reproduces_mwu():
    rng = np.random.default_rng(2)
    T, n = 200, 5
    losses = rng.random((T, n))
    x, _ = mwu_run(losses)
    cum = np.vstack([np.zeros(n), np.cumsum(losses, axis=0)[:-1]])
    for t in range(T):
        p, _ = ms_mwu_strategy(cum[t][None, :], H=T)
        assert np.allclose(p, x[t], rtol=0, atol=1e-12)


def test_ms_params_examples():
    p = ms_params(3.0, 1.0, 2, 2, 0.1)
    assert (p.K, p.H, p.T) == (1, 12, 144)
    assert ms_params(0.5, 1.0, 4, 2, 0.1, {"T": 10}).K == 4
    assert ms_params(0.6, 1.0, 2, 2, 0.1, {"T": 10}).delta == pytest.approx(0.1)
    assert p.paper_scale and not ms_params(0.6, 1.0, 2, 2, 0.1, {"T": 10}).paper_scale
    expected_S = math.ceil(18 / 9 * math.log(2 * 2 * 2 * 144 / 0.1))
    assert p.S == expected_S


def test_ms_params_infeasible():
    with pytest.raises(InfeasibleParametersError, match="override"):
        ms_params(0.1, 1.0, 4, 2, 0.1)
    with pytest.raises(InputDomainError):
        ms_params(0.1, 1.0, 4, 2, 0.1, {"Q": 3})


def test_cce_params_examples():
    p = cce_params(1.0, 1.0, 2, 0.5)
    assert p.T == 1065
    assert p.eta == pytest.approx(math.sqrt(math.log(2) / 1065))
    assert round(p.eta, 5) == 0.02551
    assert cce_params(0.3, 1.0, 4, 0.1).delta == pytest.approx(0.00625)
    assert cce_params(0.3, 1.0, 1, 0.1).delta == 0.0
