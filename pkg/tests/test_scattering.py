import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from susyqm.errors import ClosedChannel, NonAsymptoticPotential, NonAsymptoticSuperpotential
from susyqm.grid import RealField, make_grid
from susyqm.potentials import KinkSuperpotential, partner_pair
from susyqm.scattering import ScatteringAmplitudes, asymptotic_levels, partner_amplitudes, solve_scattering
from susyqm.susy import SuperPotential
from susyqm.units import ModelUnits


@pytest.fixture(scope="module")
def wide():
    return make_grid(-20, 20, 4001)


def test_free_particle(wide):
    s = solve_scattering(RealField(wide, np.zeros(wide.n)), 1.3)
    assert abs(s.R) < 1e-12
    assert abs(s.T) == pytest.approx(1.0, abs=1e-12)


def test_square_barrier_closed_form():
    g = make_grid(-4.995, 4.995, 1000)
    V = RealField(g, np.where(np.abs(g.points) < 0.5, 1.0, 0.0))
    E, V0, a = 2.0, 1.0, 1.0
    q = math.sqrt(E - V0)
    expected = 1 / (1 + V0**2 * math.sin(q * a) ** 2 / (4 * E * (E - V0)))
    s = solve_scattering(V, E, extrapolate=False)
    assert s.transmission == pytest.approx(expected, abs=1e-6)


def test_sech_well_is_reflectionless(wide):
    V = RealField(wide, 1 - 2 / np.cosh(wide.points) ** 2)
    assert abs(solve_scattering(V, 2.0).R) <= 1e-6


def test_closed_channel_and_flatness(wide):
    with pytest.raises(ClosedChannel):
        solve_scattering(RealField(wide, np.ones(wide.n)), 0.5)
    with pytest.raises(NonAsymptoticPotential):
        solve_scattering(RealField(wide, wide.points**2), 500.0)


def test_partner_amplitudes_free():
    g = make_grid(-5, 5, 11)
    W = SuperPotential(g, np.zeros(g.n))
    s1 = partner_amplitudes(ScatteringAmplitudes(1.0, 1.0, 1.0, 0j, 1 + 0j), W)
    assert s1.R == 0
    assert s1.T == pytest.approx(1.0)


def test_partner_amplitudes_tanh_reflectionless(wide):
    W = SuperPotential.from_function(wide, np.tanh)
    for E in (1.5, 3.0, 7.0):
        s2 = solve_scattering(RealField(wide, np.ones(wide.n)), E)
        s1 = partner_amplitudes(s2, W)
        assert abs(s1.R) <= 1e-12
        oracle = solve_scattering(RealField(wide, 1 - 2 / np.cosh(wide.points) ** 2), E)
        assert abs(oracle.R) <= 1e-6
        assert abs(oracle.T - s1.T) <= 1e-5


@given(st.floats(0.0, 2 * math.pi), st.floats(0.0, 1.0))
def test_partner_moduli_unchanged(phase, r):
    g = make_grid(-5, 5, 21)
    W = SuperPotential(g, np.linspace(0.3, 0.5, g.n), w_minus=0.3, w_plus=0.5)
    R2 = r * np.exp(1j * phase)
    T2 = math.sqrt(1 - r**2) * np.exp(-0.5j * phase)
    s1 = partner_amplitudes(ScatteringAmplitudes(1.0, 0.0, 0.0, R2, T2), W)
    assert abs(abs(s1.R) - abs(R2)) <= 1e-12
    assert abs(abs(s1.T) - abs(T2)) <= 1e-12


def test_partner_amplitudes_closed_channel():
    g = make_grid(-5, 5, 21)
    W = SuperPotential(g, np.ones(g.n))
    with pytest.raises(ClosedChannel):
        partner_amplitudes(ScatteringAmplitudes(0.5, 1.0, 1.0, 0j, 1 + 0j), W)


def test_asymptotic_levels(wide):
    lo, hi = asymptotic_levels(SuperPotential.from_function(wide, np.tanh))
    assert lo == pytest.approx(-1, abs=1e-6) and hi == pytest.approx(1, abs=1e-6)
    assert asymptotic_levels(SuperPotential(wide, np.full(wide.n, 0.7))) == (0.7, 0.7)
    with pytest.raises(NonAsymptoticSuperpotential):
        asymptotic_levels(SuperPotential.from_function(wide, lambda x: x))


KINKS = [
    KinkSuperpotential(0.0, 1.0, 0.0, 1.0),
    KinkSuperpotential(0.2, 0.6, 0.0, 1.5),
    KinkSuperpotential(0.1, 0.5, 0.4, 0.7),
]


@pytest.mark.parametrize("kink", KINKS)
def test_partner_scattering_oracle(kink, wide):
    units = ModelUnits()
    V1, V2 = partner_pair(kink, wide, units)
    W = SuperPotential.from_function(wide, kink, units)
    threshold = max(W.w_minus**2, W.w_plus**2)
    for E in threshold + np.array([0.3, 1.0, 2.5, 6.0]):
        s1 = solve_scattering(V1, E, units)
        s2 = solve_scattering(V2, E, units)
        assert abs(abs(s1.R) - abs(s2.R)) <= 1e-5
        assert abs(abs(s1.T) - abs(s2.T)) <= 1e-5
        mapped = partner_amplitudes(s2, W)
        assert abs(mapped.R - s1.R) <= 1e-5
        assert abs(mapped.T - s1.T) <= 1e-5
        for s in (s1, s2):
            assert abs(s.flux_defect()) <= 1e-6
        w_minus, w_plus = kink.offset - kink.amplitude, kink.offset + kink.amplitude
        assert s1.k == pytest.approx(math.sqrt(E - w_minus**2) / units.scale, abs=1e-8)
        assert s1.k_prime == pytest.approx(math.sqrt(E - w_plus**2) / units.scale, abs=1e-8)
