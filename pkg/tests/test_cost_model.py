import math

import pytest
from hypothesis import given, settings, strategies as st

from eqlearn import InputDomainError, QueryCounter, compare, estimate, make_random_game, solve_cce
from eqlearn.cost_model import (REGIMES, complexity_table, dynamic_gibbs_opponent_factor,
                                ratio_exponents, table_to_csv, table_to_json)


def test_classical_cce_matches_counter():
    g = make_random_game(2, 4, seed=0)
    c = QueryCounter()
    solve_cce(g, 0.3, 0.1, rng=0, counter=c)
    e = estimate("classical_cce", 2, 4, 0.3, 1.0, 0.1)
    assert e.leading_term == c.count
    assert compare(c.count, e)["ratio"] == 1.0


def test_quantum_cce_value():
    e = estimate("quantum_cce", 2, 4, 0.3, 1.0, 0.1)
    assert e.leading_term == pytest.approx(2 * 2 * (1 / 0.3) ** 2.5)
    assert "polylog" in e.formula_text


def test_gibbs_single():
    assert estimate("gibbs_single", 1, 16, 0.1, 1.0, beta=5.0).leading_term == pytest.approx(20.0)


def test_linearity_and_sqrt_scaling():
    a = estimate("classical_cce", 2, 4, 0.3).leading_term
    assert estimate("classical_cce", 4, 4, 0.3).leading_term == 2 * a
    q = estimate("quantum_cce", 2, 4, 0.3).leading_term
    assert estimate("quantum_cce", 2, 16, 0.3).leading_term == pytest.approx(2 * q)


def test_ratio_exponents():
    # quantum over classical CCE: sqrt(n)/n in n and eps^-2.5 / eps^-2 in eps.
    assert ratio_exponents() == {"eps": -0.5, "m": 0.0, "n": -0.5}


@pytest.mark.parametrize("regime", REGIMES)
def test_monotonicity(regime):
    base = dict(m=2, n=8, eps=0.3, B=1.0)

    def val(**kw):
        p = {**base, **kw}
        return estimate(regime, p["m"], p["n"], p["eps"], p["B"], 0.1).leading_term

    v = val()
    assert v > 0
    assert val(m=4) >= v and val(n=16) >= v and val(n=9) >= v
    assert val(B=1.5) >= v
    assert val(eps=0.2) >= v


def test_validation():
    with pytest.raises(InputDomainError):
        estimate("nope", 2, 2, 0.1)
    with pytest.raises(InputDomainError):
        estimate("quantum_cce", 2, 2, 1.5, 1.0)


def test_opponent_factor_power_one():
    assert dynamic_gibbs_opponent_factor(4, 3) == pytest.approx(math.log(16))
    assert "ln^1(n2)" in estimate("dynamic_gibbs", 3, 4, 0.3).formula_text


def test_tables():
    rows = complexity_table(2, 4, 0.3)
    assert len(rows) == 4
    assert table_to_csv(rows).startswith("kind,setting,regime")
    assert '"regime": "quantum_ce"' in table_to_json(rows)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(REGIMES), st.integers(1, 8), st.integers(2, 64),
       st.floats(0.5, 4.0), st.floats(0.05, 0.45), st.floats(1.0, 2.0))
def test_monotonicity_random(regime, m, n, B, eps_frac, bump):
    eps = eps_frac * B

    def val(m=m, n=n, B=B, eps=eps):
        return estimate(regime, m, n, eps, B, 0.1).leading_term

    v = val()
    assert val(m=m + 1) >= v * (1 - 1e-12)
    assert val(n=n + 1) >= v * (1 - 1e-12)
    assert val(B=B * bump) >= v * (1 - 1e-12)
    assert val(eps=eps / bump) >= v * (1 - 1e-12)
