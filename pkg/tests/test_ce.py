import math

import numpy as np
import pytest

from eqlearn import (
    CESolver,
    CeCertificate,
    ExplicitGame,
    InternalStateError,
    QueryCounter,
    ce_mixture_gap,
    make_counterexample_game,
    make_hard_instance,
    make_random_game,
    mwu_run,
    solve_ce,
    windowed_loss,
)
from eqlearn.gibbs import gibbs_rows
from eqlearn.mwu import ms_params

A, B, C, D = range(4)


def test_windowed_loss_examples():
    g = make_hard_instance(2, 3, targets=(1, 2))
    params = ms_params(0.5, 1.0, 3, 2, 0.1, {"K": 0, "H": 4, "T": 8, "S": 1})
    store = np.array([[[1, 0]], [[1, 0]], [[0, 2]]])
    assert np.array_equal(windowed_loss(store, g, 0, 1, 1, params), np.zeros(3))
    one = windowed_loss(store, g, 0, 1, 2, params)
    assert np.array_equal(one, [1.0, 0.0, 1.0])
    two = windowed_loss(store, g, 0, 1, 3, params)
    assert np.array_equal(two, 2 * one)
    with pytest.raises(InternalStateError):
        windowed_loss(store[:1], g, 0, 1, 3, params)


def test_incremental_windows_match_direct():
    g = make_random_game(2, 3, seed=1)
    over = {"K": 1, "H": 3, "T": 9, "S": 4}
    cert = solve_ce(g, 0.5, 0.1, overrides=over, rng=2)
    p = cert.params
    for t in range(1, p.T + 1):
        for i in range(2):
            L = np.stack([windowed_loss(cert.samples, g, i, k, t, p) for k in (1, 2)])
            expected = gibbs_rows(p.rate * L).mean(axis=0)
            assert np.allclose(cert.strategies[t - 1, i], expected, atol=1e-12)


def test_query_count_and_store_size():
    g = make_random_game(3, 2, seed=3)
    c = QueryCounter()
    cert = solve_ce(g, 0.5, 0.1, overrides={"K": 1, "H": 4, "T": 16, "S": 7}, rng=0, counter=c)
    assert cert.samples.shape == (16, 7, 3)
    assert c.count == cert.query_count == 3 * 2 * 7 * 16
    assert np.allclose(cert.strategies.sum(axis=2), 1)


def test_constant_game_uniform():
    g = ExplicitGame(np.full((2, 3, 3), 0.4), loss_bound=1.0)
    cert = solve_ce(g, 0.5, 0.1, overrides={"K": 1, "H": 4, "T": 16, "S": 5}, rng=0)
    assert np.allclose(cert.strategies, 1 / 3)
    assert np.allclose(cert.mixture().to_sparse().probs, 1 / 9)


def test_single_scale_equals_mwu():
    g = make_random_game(2, 4, seed=5)
    T = 64
    cert = solve_ce(g, 0.5, 0.1, overrides={"K": 0, "H": T, "T": T, "S": 3}, rng=1)
    for i in range(2):
        x, _ = mwu_run(cert.round_losses[:, i, :])
        assert np.allclose(cert.strategies[:, i, :], x, rtol=0, atol=1e-9)


def test_two_scales_first_instance_is_mwu():
    g = make_random_game(2, 4, seed=6)
    T = 32
    cert = solve_ce(g, 0.5, 0.1, overrides={"K": 1, "H": T, "T": T, "S": 3}, rng=1)
    for i in range(2):
        x, _ = mwu_run(cert.round_losses[:, i, :])
        # The second instance aggregates blocks of length T and stays uniform.
        assert np.allclose(cert.strategies[:, i, :], 0.5 * (x + 0.25), atol=1e-9)


def test_exact_loss_estimate_close_to_sampled_average():
    g = make_random_game(2, 3, seed=8)
    over = {"K": 1, "H": 4, "T": 16, "S": 200}
    exact = solve_ce(g, 0.5, 0.1, overrides=over, rng=0, loss_estimate="exact")
    runs = [solve_ce(g, 0.5, 0.1, overrides=over, rng=s).strategies for s in range(20)]
    mean = np.mean(runs, axis=0)
    tv = 0.5 * np.abs(mean - exact.strategies).sum(axis=2)
    assert tv.max() <= 0.05


def test_counterexample_run_gap():
    g = make_counterexample_game()
    cert = solve_ce(g, 1.0, 0.1, overrides={"K": 1, "H": 16, "T": 256}, rng=0)
    assert ce_mixture_gap(cert, g).max_gap <= 0.25


def test_degenerate_certificate_counterexample():
    e = np.eye(4)
    cert = CeCertificate.from_strategies([[e[C], e[A]], [e[B], e[B]]])
    r = ce_mixture_gap(cert, make_counterexample_game(), eps=0.0)
    assert r.per_player_gap[0] == pytest.approx(1.0)
    assert r.worst_deviation[B] == D and r.worst_deviation[C] == A


def test_point_mass_best_response_zero_gap():
    g = make_hard_instance(2, 3, targets=(2, 0))
    e = np.eye(3)
    cert = CeCertificate.from_strategies([[e[2], e[0]]])
    assert ce_mixture_gap(cert, g).max_gap == 0


def test_noisy_strategies_on_simplex():
    g = make_random_game(2, 3, seed=2)
    cert = solve_ce(g, 0.6, 0.1, overrides={"K": 1, "H": 3, "T": 9, "S": 10},
                    noise="argmax_shift", rng=0)
    assert cert.noise["delta"] == pytest.approx(0.1)
    assert np.all(cert.strategies >= 0) and np.allclose(cert.strategies.sum(axis=2), 1)


def test_sample_store_fallback():
    g = make_random_game(2, 3, seed=2)
    cert = solve_ce(g, 0.5, 0.1, overrides={"K": 1, "H": 3, "T": 9, "S": 10}, rng=0,
                    keep_strategies=False)
    r = ce_mixture_gap(cert, g)
    assert r.representation == "samples"


def test_json_round_trip():
    g = make_random_game(2, 3, seed=2)
    cert = solve_ce(g, 0.5, 0.1, overrides={"K": 1, "H": 3, "T": 9, "S": 10}, rng=4)
    back = CeCertificate.from_dict(cert.to_dict())
    assert np.array_equal(back.samples, cert.samples)
    assert np.allclose(back.strategies, cert.strategies)
    assert back.query_count == cert.query_count and not back.paper_scale


def test_estimator_api():
    g = make_random_game(2, 3, seed=2)
    est = CESolver(eps=0.5, overrides={"K": 1, "H": 3, "T": 9, "S": 10}, random_state=0)
    est.fit(g)
    assert est.predict().players == 2
    assert est.score() <= 0
    assert "overrides" in est.get_params()
