import numpy as np
import pytest

from eqlearn import InputDomainError, MixtureOfProducts, ProductJoint, SparseJoint, dist_from_dict


def test_sparse_merges_duplicates():
    d = SparseJoint([[0, 1], [0, 1], [1, 0]], [0.25, 0.25, 0.5], 2)
    assert d.support_size == 2
    assert np.allclose(d.marginal(0), [0.5, 0.5])


def test_from_samples_and_point_mass():
    d = SparseJoint.from_samples([[0, 0], [1, 1]], 2)
    assert np.allclose(sorted(d.probs), [0.5, 0.5])
    pm = SparseJoint.point_mass((1, 0, 1), 2)
    assert np.array_equal(pm.sample(5, 0), np.tile([1, 0, 1], (5, 1)))


def test_validation():
    with pytest.raises(InputDomainError):
        SparseJoint([[0, 2]], [1.0], 2)
    with pytest.raises(InputDomainError):
        SparseJoint([[0, 1]], [0.5], 2)
    with pytest.raises(InputDomainError):
        MixtureOfProducts([1.0], np.full((1, 2, 2), 0.7))


def test_mixture_sampling_law():
    rng = np.random.default_rng(0)
    mix = MixtureOfProducts([0.3, 0.7], rng.dirichlet(np.ones(3), size=(2, 2)))
    exact = mix.to_sparse()
    draws = mix.sample(200_000, rng)
    emp = SparseJoint.from_samples(draws, 3)
    lookup = {tuple(p): q for p, q in zip(emp.profiles, emp.probs)}
    for p, q in zip(exact.profiles, exact.probs):
        assert lookup.get(tuple(p), 0.0) == pytest.approx(q, abs=0.01)


def test_product_uniform():
    d = ProductJoint(np.full((2, 2), 0.5)).to_sparse()
    assert np.allclose(d.probs, 0.25) and d.support_size == 4


@pytest.mark.parametrize("dist", [
    SparseJoint([[0, 1], [1, 1]], [0.4, 0.6], 2),
    ProductJoint([[0.2, 0.8], [0.5, 0.5]]),
    MixtureOfProducts([0.5, 0.5], [[[1, 0], [0, 1]], [[0, 1], [1, 0]]]),
])
def test_round_trip(dist):
    back = dist_from_dict(dist.to_dict())
    assert type(back) is type(dist)
    for i in range(dist.players):
        assert np.allclose(back.marginal(i), dist.marginal(i))
