import numpy as np
import pytest
from hypothesis import given, strategies as st

from susyqm.errors import DegenerateDensity, DomainError, EmptyEnsemble
from susyqm.mixture import (
    GaussianMixture,
    MixturePartnerPotential,
    Quadrature,
    SampleEnsemble,
    density_derivatives,
    energy_functional,
    local_energy,
    log_derivatives,
    mixture_density,
    quadrature_energy,
    quadrature_energy_and_gradient,
    quantum_potential,
)
from susyqm.potentials import harmonic, sextic
from susyqm.units import ModelUnits

HO_GROUND = GaussianMixture([1.0], [1.0], [0.0])

mixtures = st.lists(
    st.tuples(st.floats(0.1, 3.0), st.floats(0.2, 5.0), st.floats(-2.0, 2.0)),
    min_size=1,
    max_size=5,
).map(GaussianMixture.from_components)


def test_peak_value_and_decay():
    assert mixture_density(HO_GROUND, 0.0) == 1.0
    assert mixture_density(HO_GROUND, 50.0) == 0.0
    assert mixture_density(HO_GROUND, -50.0) == 0.0


def test_mirrored_pair_is_even():
    m = GaussianMixture([1.0, 1.0], [2.0, 2.0], [-0.7, 0.7])
    x = np.linspace(-3, 3, 61)
    assert np.array_equal(m(x), m(-x))


@pytest.mark.parametrize("c0, c2, c3", [([0.0], [1.0], [0.0]), ([1.0], [-1.0], [0.0]), ([1.0, 2.0], [1.0], [0.0]), ([1.0], [1.0], [np.nan])])
def test_invalid_mixture(c0, c2, c3):
    with pytest.raises(DomainError):
        GaussianMixture(c0, c2, c3)


@given(mixtures)
def test_normalize_unit_integral(m):
    assert m.normalize().integral() == pytest.approx(1.0, abs=1e-12)
    assert GaussianMixture.from_params(m.to_params()).integral() == pytest.approx(m.integral(), rel=1e-12)


@given(mixtures, st.floats(-4, 4))
def test_log_derivatives_match_finite_differences(m, x0):
    h = 1e-3
    xs = x0 + h * np.arange(-3, 4)
    logs = log_derivatives(m, xs, 4)
    fd1 = (logs[0][4] - logs[0][2]) / (2 * h)
    fd_third = (logs[2][4] - logs[2][2]) / (2 * h)
    fd_fourth = (logs[3][4] - logs[3][2]) / (2 * h)
    assert logs[1][3] == pytest.approx(fd1, rel=1e-5, abs=1e-5)
    assert logs[3][3] == pytest.approx(fd_third, rel=1e-4, abs=1e-3)
    assert logs[4][3] == pytest.approx(fd_fourth, rel=1e-4, abs=1e-3)


def test_density_derivatives_of_single_gaussian():
    x = np.linspace(-2, 2, 9)
    rho, d1, d2, _, _ = density_derivatives(HO_GROUND, x)
    assert np.allclose(d1, -2 * x * rho)
    assert np.allclose(d2, (4 * x**2 - 2) * rho)


def test_log_derivatives_order_checked():
    with pytest.raises(DomainError):
        log_derivatives(HO_GROUND, 0.0, 5)


def test_quantum_potential_harmonic_ground():
    x = np.linspace(-4, 4, 41)
    Q = quantum_potential(HO_GROUND, x)
    assert np.allclose(Q, 1 - x**2, atol=1e-12)
    assert np.allclose(Q + x**2, 1.0, atol=1e-12)


def test_quantum_potential_mass_scaling():
    m = GaussianMixture([1.0, 0.3], [0.8, 2.0], [-0.5, 1.0])
    x = np.linspace(-2, 2, 17)
    light = quantum_potential(m, x, ModelUnits(1.0, 0.5))
    heavy = quantum_potential(m, x, ModelUnits(1.0, 1.0))
    assert np.allclose(heavy, light / 2, rtol=1e-14, atol=0)


def test_quantum_potential_far_tail_stays_finite():
    # log-space evaluation keeps Q finite where rho itself underflows
    m = GaussianMixture([1.0], [1.0], [0.0])
    assert mixture_density(m, 40.0) == 0.0
    assert quantum_potential(m, 40.0) == pytest.approx(1 - 40.0**2)


def test_quantum_potential_outside_support():
    with pytest.raises(DegenerateDensity):
        quantum_potential(HO_GROUND, np.array([0.0, np.inf]))


def test_local_energy_eigenstate_constant():
    x = np.linspace(-5, 5, 101)
    E = local_energy(harmonic(), HO_GROUND, x)
    assert np.max(np.abs(E - 1.0)) <= 1e-6


def test_local_energy_offset_centre_not_constant():
    E = local_energy(harmonic(), GaussianMixture([1.0], [1.0], [0.5]), np.linspace(-3, 3, 31))
    assert E.max() - E.min() > 0


@given(st.lists(st.floats(-4, 4), min_size=1, max_size=20))
def test_energy_functional_eigenstate_any_ensemble(points):
    assert energy_functional(harmonic(), HO_GROUND, SampleEnsemble(points)) == pytest.approx(1.0, abs=1e-6)


def test_energy_functional_single_point():
    m = GaussianMixture([1.0, 0.4], [0.7, 1.5], [-0.3, 1.1])
    value = energy_functional(sextic(), m, SampleEnsemble([0.42]))
    assert value == pytest.approx(float(local_energy(sextic(), m, np.array([0.42]))[0]), rel=1e-15)


def test_empty_ensemble():
    with pytest.raises(EmptyEnsemble):
        SampleEnsemble([])
    with pytest.raises(EmptyEnsemble):
        energy_functional(harmonic(), HO_GROUND, None)


def test_ensemble_weights_normalized():
    ens = SampleEnsemble([0.0, 1.0, 2.0], [1.0, 1.0, 2.0])
    assert ens.weights.sum() == pytest.approx(1.0)
    assert ens.within((0, 2)) and not ens.within((0.5, 2))
    with pytest.raises(DomainError):
        SampleEnsemble([0.0, 1.0], [1.0, -1.0])


@given(mixtures)
def test_variational_bound_harmonic(m):
    # exact ground energy 1
    assert quadrature_energy(harmonic(), m, Quadrature(-8, 8)) >= 1.0 - 1e-9


@given(mixtures)
def test_variational_bound_sextic(m):
    # exact ground energy 0
    assert quadrature_energy(sextic(), m, Quadrature(-6, 6)) >= -1e-9


def test_quadrature_energy_of_exact_state():
    assert quadrature_energy(harmonic(), HO_GROUND, Quadrature(-8, 8)) == pytest.approx(1.0, abs=1e-12)


@given(mixtures)
def test_quadrature_gradient_matches_finite_differences(m):
    quad = Quadrature(-8, 8, 801)
    p = m.to_params()
    _, g = quadrature_energy_and_gradient(sextic(), p, quad)
    step = 1e-6
    for i in range(p.size):
        e = np.eye(p.size)[i] * step
        fd = (quadrature_energy_and_gradient(sextic(), p + e, quad, gradient=False)
              - quadrature_energy_and_gradient(sextic(), p - e, quad, gradient=False)) / (2 * step)
        assert g[i] == pytest.approx(fd, rel=1e-4, abs=1e-5)


def test_mixture_partner_of_harmonic_ground():
    V2 = MixturePartnerPotential(harmonic(shift=-1.0), HO_GROUND)
    x = np.linspace(-3, 3, 13)
    assert np.allclose(V2(x), x**2 + 1)
    assert np.allclose(V2.derivative(x), 2 * x)
    assert np.allclose(V2.superpotential(x), x)


def test_snapshot_hash_stable():
    a = GaussianMixture([1.0, 2.0], [1.0, 0.5], [0.0, 1.0])
    b = GaussianMixture([1.0, 2.0], [1.0, 0.5], [0.0, 1.0])
    assert a.snapshot_hash() == b.snapshot_hash()
    assert a.snapshot_hash() != a.mirrored().snapshot_hash()
