import numpy as np
import pytest
import scipy.sparse.linalg as spla
from hypothesis import given, strategies as st

from susyqm.errors import DegenerateDensity, GridMismatch, VanishingComponent, ZeroEnergy, ZeroTrial
from susyqm.grid import RealField, make_grid
from susyqm.multidim import (
    Field2D,
    VectorField2,
    charge_operators,
    derivative_operators,
    descend_state,
    eigensolve_2d,
    lowest_eigenvalues,
    make_grid_2d,
    most_nodeless_combination,
    naive_scalar_partner,
    scalar_sector1_check,
    sector2_annihilation,
    sector3_hamiltonian,
    subspace_overlap,
    tensor_ground_state,
    tensor_sector_hamiltonian,
    vector_rayleigh_quotient,
    vector_superpotential,
)
from susyqm.potentials import sextic, sextic_partner
from susyqm.susy import build_hierarchy


def gaussian2(x, y):
    return np.exp(-(x**2 + y**2) / 2)


def test_grid_index_map():
    g = make_grid_2d(-1, 1, 4, -2, 2, 5)
    assert g.shape == (4, 5) and g.size == 20
    seen = {g.index(i, j) for i in range(4) for j in range(5)}
    assert seen == set(range(20))
    assert all(g.unravel(g.index(i, j)) == (i, j) for i in range(4) for j in range(5))
    X, Y = g.mesh
    assert X.ravel()[g.index(2, 3)] == g.gx.points[2] and Y.ravel()[g.index(2, 3)] == g.gy.points[3]


def test_field_size_checked():
    g = make_grid_2d(-1, 1, 4)
    with pytest.raises(GridMismatch):
        Field2D(g, np.zeros(15))


@pytest.fixture(scope="module")
def ho():
    grid = make_grid_2d(-6, 6, 60)
    psi0 = Field2D.from_function(grid, gaussian2).normalized()
    W = vector_superpotential(psi0)
    op = tensor_sector_hamiltonian(W)
    spectrum = tensor_ground_state(op, k=1)
    V = Field2D.from_function(grid, lambda x, y: x**2 + y**2)
    energies, states = eigensolve_2d(grid, V, 6)
    return grid, psi0, W, op, spectrum, energies, states


def test_superpotential_of_harmonic(ho):
    grid, _, W, *_ = ho
    X, Y = grid.mesh
    assert np.max(np.abs(W.comp_x - X.ravel())) <= 1e-6
    assert np.max(np.abs(W.comp_y - Y.ravel())) <= 1e-6


def test_separable_superpotential():
    g = make_grid_2d(-2.5, 2.5, 41)
    psi = Field2D.from_function(g, lambda x, y: np.exp(-(x**4) / 4 - x**2 - y**2 / 2 - 0.1 * y**4))
    Wx = vector_superpotential(psi).comp_x.reshape(g.shape)
    assert np.max(np.ptp(Wx, axis=1)) <= 1e-10


def test_radial_superpotential():
    g = make_grid_2d(-3, 3, 41)
    psi = Field2D.from_function(g, lambda x, y: np.exp(-(x**2 + y**2) / 2 - 0.02 * (x**2 + y**2) ** 2))
    W = vector_superpotential(psi)
    X, Y = (a.ravel() for a in g.mesh)
    assert np.max(np.abs(X * W.comp_y - Y * W.comp_x)) <= 1e-8


def test_superpotential_rejects_nodes():
    g = make_grid_2d(-3, 3, 21)
    with pytest.raises(DegenerateDensity):
        vector_superpotential(Field2D.from_function(g, lambda x, y: x * gaussian2(x, y)))


def test_sector1_check_harmonic(ho):
    grid, _, W, *_ = ho
    V0 = Field2D.from_function(grid, lambda x, y: x**2 + y**2)
    assert scalar_sector1_check(W, V0, e0=2.0) <= 1e-6
    corrupted = VectorField2(grid, 2 * W.comp_x, W.comp_y)
    assert scalar_sector1_check(corrupted, V0, e0=2.0) > 1


@pytest.fixture(scope="module")
def embedded():
    # sextic ground along x times a harmonic ground along y
    g = make_grid_2d(-2.5, 2.5, 41)
    psi = Field2D.from_function(g, lambda x, y: np.exp(-(x**4) / 4 - x**2 - y**2 / 2))
    return g, vector_superpotential(psi)


def test_sector1_check_embedded(embedded):
    g, W = embedded
    V0 = Field2D.from_function(g, lambda x, y: sextic()(x) + y**2)
    assert scalar_sector1_check(W, V0, e0=1.0) <= 1e-6


def test_naive_partner_embedded(embedded):
    g, W = embedded
    U2 = naive_scalar_partner(W)
    expected = g.evaluate(lambda x, y: sextic_partner()(x) + y**2 + 1)
    assert np.max(np.abs(U2.values - expected)) <= 1e-6


def test_naive_partner_harmonic_shift(ho):
    grid, _, W, *_ = ho
    U2 = naive_scalar_partner(W)
    assert np.max(np.abs(U2.values - grid.evaluate(lambda x, y: x**2 + y**2 + 2))) <= 1e-6
    U1 = Field2D(grid, grid.evaluate(lambda x, y: x**2 + y**2 - 2))
    e1, _ = eigensolve_2d(grid, U1, 6)
    e2, _ = eigensolve_2d(grid, U2, 1)
    # n + m = 2 states of U1 sit at 4
    assert np.allclose(e1[3:6], e2[0], atol=1e-6)


def test_tensor_operator_symmetric(ho):
    M = ho[3].matrix
    assert abs(M - M.T).max() == 0


def test_tensor_ground_energy_is_gap(ho):
    *_, spectrum, energies, _ = ho
    assert len(spectrum.energies) == 2
    assert np.allclose(spectrum.energies, 2.0, atol=1e-6)
    assert abs(spectrum.energies[0] - (energies[1] - energies[0])) <= 1e-6


def test_tensor_intertwines_discrete_sector1(ho):
    _, _, W, op, *_ = ho
    Ax, Ay = charge_operators(W)
    H1 = (Ax.T @ Ax + Ay.T @ Ay).tocsr()
    w, v = spla.eigsh(H1, k=3, which="SA", v0=np.random.default_rng(0).standard_normal(H1.shape[0]))
    order = np.argsort(w)
    for idx in order[1:]:
        image = np.concatenate([Ax @ v[:, idx], Ay @ v[:, idx]])
        residual = op.matrix @ image - w[idx] * image
        assert np.linalg.norm(residual) <= 1e-6 * np.linalg.norm(image)


def test_charge_image_of_excited_state(ho):
    grid, _, W, *_ = ho
    Ax, Ay = charge_operators(W)
    X, Y = (a.ravel() for a in grid.mesh)
    g = np.exp(-(X**2 + Y**2) / 2)
    assert np.max(np.abs(Ax @ (X * g) - g)) <= 1e-5
    assert np.max(np.abs(Ay @ (X * g))) <= 1e-5


def test_nodeless_combination(ho):
    _, psi0, _, _, spectrum, *_ = ho
    best = most_nodeless_combination(spectrum.states)
    mag = best.magnitude()
    support = psi0.values**2 > 1e-10 * np.max(psi0.values**2)
    assert mag[support].min() >= 1e-8 * mag.max()


def test_descent_fidelity(ho):
    _, _, W, _, spectrum, _, states = ho
    for v in spectrum.states:
        psi1 = descend_state(v, spectrum.energies[0], W)
        assert subspace_overlap(psi1, states[1:3]) >= 1 - 1e-6


@pytest.mark.parametrize("axis", [0, 1])
def test_descend_closed_form(ho, axis):
    grid, _, W, *_ = ho
    X, Y = (a.ravel() for a in grid.mesh)
    g = np.exp(-(X**2 + Y**2) / 2)
    comps = (g, np.zeros_like(g)) if axis == 0 else (np.zeros_like(g), g)
    psi = descend_state(VectorField2(grid, *comps), 2.0, W)
    target = Field2D(grid, (X if axis == 0 else Y) * g).normalized()
    assert psi.inner(target) ** 2 >= 1 - 1e-8


def test_descend_round_trip(ho):
    grid, _, W, *_ = ho
    X, Y = (a.ravel() for a in grid.mesh)
    psi1 = Field2D(grid, X * np.exp(-(X**2 + Y**2) / 2)).normalized()
    Ax, Ay = charge_operators(W)
    v = VectorField2(grid, Ax @ psi1.values / np.sqrt(2), Ay @ psi1.values / np.sqrt(2))
    assert descend_state(v, 2.0, W).inner(psi1) ** 2 >= 1 - 1e-8
    with pytest.raises(ZeroEnergy):
        descend_state(v, 0.0, W)


def test_rayleigh_quotient(ho):
    grid, _, _, op, spectrum, *_ = ho
    lowest = spectrum.energies[0]
    exact = spectrum.states[0]
    assert abs(vector_rayleigh_quotient(op, exact) - lowest) <= 1e-10
    X, Y = (a.ravel() for a in grid.mesh)
    trial = VectorField2(grid, np.exp(-(X**2 + Y**2) / 2), np.zeros(grid.size))
    value = vector_rayleigh_quotient(op, trial)
    assert value >= lowest - 1e-9
    scaled = VectorField2(grid, 7 * trial.comp_x, 7 * trial.comp_y)
    assert vector_rayleigh_quotient(op, scaled) == pytest.approx(value, rel=1e-12)
    with pytest.raises(ZeroTrial):
        vector_rayleigh_quotient(op, VectorField2(grid, np.zeros(grid.size), np.zeros(grid.size)))


def test_rayleigh_bound_random_trials(ho):
    grid, _, W, op, spectrum, *_ = ho
    Ax, Ay = charge_operators(W)
    rng = np.random.default_rng(11)
    X, Y = (a.ravel() for a in grid.mesh)
    for _ in range(100):
        # trials in the range of the charges avoid the null space
        phi = rng.standard_normal(grid.size) * np.exp(-(X**2 + Y**2) / rng.uniform(2, 20))
        trial = VectorField2(grid, Ax @ phi, Ay @ phi)
        assert vector_rayleigh_quotient(op, trial) >= spectrum.energies[0] - 1e-9
        free = VectorField2(grid, rng.standard_normal(grid.size), rng.standard_normal(grid.size))
        assert vector_rayleigh_quotient(op, free) >= -1e-9


def small_vector_superpotential(grid, coeffs):
    X, Y = (a.ravel() for a in grid.mesh)
    a, b, c, d = coeffs
    return VectorField2(grid, a * X + b * np.tanh(Y), c * Y + d * np.sin(X))


@given(st.tuples(*[st.floats(-2, 2)] * 4))
def test_exact_tensor_isospectrality(coeffs):
    grid = make_grid_2d(-3, 3, 10)
    W = small_vector_superpotential(grid, coeffs)
    big = np.linalg.eigvalsh(tensor_sector_hamiltonian(W).matrix.toarray())
    Ax, Ay = charge_operators(W)
    small = np.linalg.eigvalsh((Ax.T @ Ax + Ay.T @ Ay).toarray())
    scale = max(1.0, big.max())
    assert np.max(np.abs(big[grid.size :] - small)) <= 1e-10 * scale
    assert np.max(np.abs(big[: grid.size])) <= 1e-10 * scale


def test_zero_superpotential_spectrum():
    grid = make_grid_2d(-3, 3, 10)
    zero = np.zeros(grid.size)
    big = np.linalg.eigvalsh(tensor_sector_hamiltonian(VectorField2(grid, zero, zero)).matrix.toarray())
    Dx, Dy = derivative_operators(grid)
    free = np.linalg.eigvalsh((Dx.T @ Dx + Dy.T @ Dy).toarray())
    expected = np.sort(np.concatenate([np.zeros(grid.size), free]))
    assert np.allclose(big, expected, atol=1e-10)


def test_sector3_rejects_harmonic_vector(ho):
    grid = ho[0]
    X, Y = (a.ravel() for a in grid.mesh)
    with pytest.raises(VanishingComponent):
        sector3_hamiltonian(VectorField2(grid, np.exp(-(X**2 + Y**2) / 2), np.zeros(grid.size)), 2.0)


def test_sector3_separable_chain():
    g1 = make_grid(-4, 4, 61)
    hier = build_hierarchy(RealField(g1, g1.points**2 + 0.05 * g1.points**4), n_sectors=3)
    phi = np.sqrt(hier.sectors[0].ground_density.values)
    chi = np.sqrt(hier.sectors[1].ground_density.values)
    grid = make_grid_2d(-4, 4, 61)
    # degenerate sector-2 vector ground (chi(x) phi(y), phi(x) chi(y)); both components positive
    v0 = VectorField2(grid, np.outer(chi, phi).ravel(), np.outer(phi, chi).ravel())
    offsets = hier.cumulative_offsets
    E02 = offsets[1] - offsets[0]
    H3, terms = sector3_hamiltonian(v0, E02)
    assert sector2_annihilation(terms, v0) <= 1e-6
    assert abs(H3 - H3.T).max() == 0
    # separable sum of one 1D sector-3 gap per axis
    expected = E02 + 2 * (offsets[2] - offsets[1])
    assert lowest_eigenvalues(H3)[0] == pytest.approx(expected, abs=1e-6)
