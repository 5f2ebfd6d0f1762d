import numpy as np
import pytest
from sklearn.base import clone

from susyqm.errors import GridMismatch
from susyqm.estimators import MixtureGroundState, PartnerHierarchy, SuperpotentialTransformer
from susyqm.potentials import harmonic


def gaussian_rows(x, widths):
    return np.array([np.exp(-(x**2) / w) for w in widths])


def test_transformer_harmonic_rows():
    est = SuperpotentialTransformer(-6, 6, 241)
    x = np.linspace(-6, 6, 241)
    # rho = exp(-x^2 / w) gives W = x / w with lambda = 1
    W = est.fit_transform(gaussian_rows(x, [1.0, 2.0]))
    inner = np.abs(x) < 4
    assert np.allclose(W[0, inner], x[inner], atol=1e-6)
    assert np.allclose(W[1, inner], x[inner] / 2, atol=1e-6)


def test_transformer_width_checked():
    est = SuperpotentialTransformer(n_points=11).fit(np.ones((1, 11)))
    with pytest.raises(GridMismatch):
        est.transform(np.ones((2, 12)))


def test_hierarchy_harmonic_offsets():
    x = np.linspace(-8, 8, 241)
    est = PartnerHierarchy(-8, 8, 241, n_sectors=3).fit(harmonic()(x)[None, :])
    assert np.allclose(est.offsets_, [1, 3, 5], atol=1e-6)
    assert np.allclose(est.predict([1, 3]), [1, 5], atol=1e-6)
    assert len(est.potentials()) == 3
    with pytest.raises(GridMismatch):
        est.predict([4])


def test_hierarchy_rejects_many_rows():
    with pytest.raises(GridMismatch):
        PartnerHierarchy(n_points=11).fit(np.ones((2, 11)))


def test_mixture_ground_state_harmonic():
    est = MixtureGroundState(domain=(-6, 6), n_gaussians=1, n_points=200, max_cg_steps=300).fit(harmonic())
    assert est.energy_ == pytest.approx(1.0, abs=1e-6)
    assert est.score() == -est.energy_
    x = np.linspace(-8, 8, 1601)
    assert np.sum(est.predict(x)) * (x[1] - x[0]) == pytest.approx(1.0, abs=1e-6)
    assert np.allclose(est.local_energy(np.linspace(-2, 2, 5)), 1.0, atol=1e-3)


def test_sklearn_params_round_trip():
    est = PartnerHierarchy(n_sectors=4, mass=1.0)
    copy = clone(est)
    assert copy.get_params() == est.get_params()
    assert clone(MixtureGroundState(n_gaussians=3)).set_params(seed=5).seed == 5
