"""Vector superpotentials and the tensor partner sector on two-dimensional grids.

Grid functions are stored flat in row-major order, index ``i * ny + j`` for
``(x_i, y_j)``. Charge operators ``A_mu = lambda D_mu + diag(W_mu)`` use the
antisymmetric difference matrix along each axis, so ``A_mu^T`` is their exact
adjoint and the tensor operator ``A A^T`` shares its nonzero spectrum with
``sum_mu A_mu^T A_mu`` to rounding.
"""

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, DegenerateDensity, DomainError, GridMismatch, VanishingComponent
from .errors import ZeroEnergy, ZeroTrial
from .grid import Grid1D, STENCIL_HALF_WIDTH, _gradient_matrix, _sinc_kinetic, derivative_matrix
from .units import ModelUnits


@dataclass(frozen=True)
class Grid2D:
    gx: Grid1D
    gy: Grid1D

    @property
    def shape(self):
        return (self.gx.n, self.gy.n)

    @property
    def size(self):
        return self.gx.n * self.gy.n

    @property
    def cell_area(self):
        return self.gx.spacing * self.gy.spacing

    @cached_property
    def mesh(self):
        X, Y = np.meshgrid(self.gx.points, self.gy.points, indexing="ij")
        X.flags.writeable = False
        Y.flags.writeable = False
        return X, Y

    def index(self, i, j):
        return i * self.gy.n + j

    def unravel(self, k):
        return divmod(k, self.gy.n)

    def evaluate(self, func):
        X, Y = self.mesh
        return np.asarray(func(X, Y), dtype=float).ravel()


def make_grid_2d(x_min, x_max, nx, y_min=None, y_max=None, ny=None):
    """Square grid by default; pass the ``y`` arguments for a rectangle."""
    gx = Grid1D(float(x_min), float(x_max), nx)
    gy = Grid1D(
        float(x_min if y_min is None else y_min), float(x_max if y_max is None else y_max), nx if ny is None else ny
    )
    return Grid2D(gx, gy)


def _flat(grid, values):
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.size != grid.size:
        raise GridMismatch(f"expected {grid.size} values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("field values must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Field2D:
    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _flat(self.grid, self.values))

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, grid.evaluate(func))

    def as_array(self):
        return self.values.reshape(self.grid.shape)

    def inner(self, other):
        return float(np.dot(self.values, other.values) * self.grid.cell_area)

    def norm(self):
        return math.sqrt(self.inner(self))

    def normalized(self):
        return Field2D(self.grid, self.values / self.norm())


@dataclass(frozen=True, eq=False)
class VectorField2:
    grid: Grid2D
    comp_x: np.ndarray = field(repr=False)
    comp_y: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "comp_x", _flat(self.grid, self.comp_x))
        object.__setattr__(self, "comp_y", _flat(self.grid, self.comp_y))

    @classmethod
    def from_stacked(cls, grid, vector):
        n = grid.size
        return cls(grid, vector[:n], vector[n:])

    def stacked(self):
        return np.concatenate([self.comp_x, self.comp_y])

    def magnitude(self):
        return np.hypot(self.comp_x, self.comp_y)

    def inner(self, other):
        return float(np.dot(self.stacked(), other.stacked()) * self.grid.cell_area)

    def norm(self):
        return math.sqrt(self.inner(self))


def _axis_operator(grid, mat_x, mat_y):
    """Lift per-axis matrices to the flattened 2D grid."""
    ix = sp.identity(grid.gx.n, format="csr")
    iy = sp.identity(grid.gy.n, format="csr")
    return sp.kron(sp.csr_matrix(mat_x), iy, format="csr"), sp.kron(ix, sp.csr_matrix(mat_y), format="csr")


def derivative_operators(grid):
    """Sparse antisymmetric ``(D_x, D_y)`` on the flattened grid."""
    return _axis_operator(grid, derivative_matrix(grid.gx), derivative_matrix(grid.gy))


def _start_vector(n):
    """Fixed pseudo-random Lanczos start; a symmetric start would never reach odd states."""
    return np.random.default_rng(0).standard_normal(n)


def _gradient_operators(grid):
    return _axis_operator(
        grid, _gradient_matrix(grid.gx, STENCIL_HALF_WIDTH), _gradient_matrix(grid.gy, STENCIL_HALF_WIDTH)
    )


def _extend_lines(values, ok, axis):
    """Linear continuation of each grid line past its valid run; empty lines copy the nearest valid line."""
    vals = np.moveaxis(values.copy(), axis, -1)
    mask = np.moveaxis(ok, axis, -1)
    coords = np.arange(vals.shape[-1], dtype=float)
    good_lines = []
    for r in range(vals.shape[0]):
        idx = np.flatnonzero(mask[r])
        if idx.size < 2:
            continue
        good_lines.append(r)
        lo, hi = idx[0], idx[-1]
        line = vals[r]
        line[:lo] = line[lo] + (line[lo + 1] - line[lo]) * (coords[:lo] - lo)
        line[hi + 1 :] = line[hi] + (line[hi] - line[hi - 1]) * (coords[hi + 1 :] - hi)
    if not good_lines:
        raise DegenerateDensity("no grid line has enough samples above the floor")
    good = np.array(good_lines)
    for r in range(vals.shape[0]):
        if r not in good_lines:
            vals[r] = vals[good[np.argmin(np.abs(good - r))]]
    return np.moveaxis(vals, -1, axis)


def _log_gradient(grid, values, floor):
    """Per-axis derivative of ``ln|values|`` with linear continuation where ``|values| < floor``."""
    mag = np.abs(values)
    scale = mag.max()
    if scale == 0:
        raise DegenerateDensity("state vanishes everywhere")
    floor = 1e-14 * scale if floor is None else floor
    valid = mag >= floor
    log_v = np.log(np.maximum(mag, floor))
    Gx, Gy = _gradient_operators(grid)
    out = []
    for G, axis in ((Gx, 0), (Gy, 1)):
        stencil = abs(G) > 0
        ok = (stencil @ (~valid).astype(float)) == 0
        d = (G @ log_v).reshape(grid.shape)
        out.append(_extend_lines(d, ok.reshape(grid.shape), axis).ravel())
    return out


def vector_superpotential(psi0, units=ModelUnits(), floor=None):
    """``W_mu = -lambda d_mu ln psi0`` for a nodeless scalar ground state."""
    v = psi0.values
    if v.min() < -1e-8 * np.abs(v).max():
        raise DegenerateDensity("ground state changes sign")
    gx, gy = _log_gradient(psi0.grid, v, floor)
    lam = units.scale
    return VectorField2(psi0.grid, -lam * gx, -lam * gy)


def _divergence(W):
    Gx, Gy = _gradient_operators(W.grid)
    return Gx @ W.comp_x + Gy @ W.comp_y


def scalar_sector1_check(W, V0, e0=None, units=ModelUnits(), support=None):
    """Largest violation of ``W.W - lambda div W = V0 - E0`` over ``support``.

    ``e0`` defaults to the median of ``V0 - (W.W - lambda div W)`` on the support.
    """
    if W.grid != V0.grid:
        raise GridMismatch("fields live on different grids")
    lhs = W.comp_x**2 + W.comp_y**2 - units.scale * _divergence(W)
    mask = np.ones(W.grid.size, bool) if support is None else np.asarray(support, bool).ravel()
    gap = V0.values - lhs
    e0 = float(np.median(gap[mask])) if e0 is None else e0
    return float(np.max(np.abs(gap - e0)[mask]))


def naive_scalar_partner(W, units=ModelUnits()):
    """Scalar partner ``W.W + lambda div W`` of the inner-product factorization."""
    return Field2D(W.grid, W.comp_x**2 + W.comp_y**2 + units.scale * _divergence(W))


def charge_operators(W, units=ModelUnits()):
    """Sparse ``(A_x, A_y)`` with ``A_mu = lambda D_mu + diag(W_mu)``."""
    Dx, Dy = derivative_operators(W.grid)
    lam = units.scale
    return (lam * Dx + sp.diags(W.comp_x)).tocsr(), (lam * Dy + sp.diags(W.comp_y)).tocsr()


def _symmetric_part(M):
    return ((M + M.T) * 0.5).tocsr()


@dataclass(frozen=True, eq=False)
class TensorSectorOperator:
    """Blocks ``H_{mu nu} = A_mu A_nu^T`` of the sector-2 tensor Hamiltonian."""

    W: VectorField2
    units: ModelUnits
    blocks: dict = field(repr=False)

    @cached_property
    def matrix(self):
        b = self.blocks
        return sp.bmat([[b["xx"], b["xy"]], [b["yx"], b["yy"]]], format="csr")

    @property
    def grid(self):
        return self.W.grid

    def charges(self):
        return charge_operators(self.W, self.units)


def tensor_sector_hamiltonian(W, units=ModelUnits()):
    """Assemble ``A A^T`` from the vector charges; exactly symmetric."""
    Ax, Ay = charge_operators(W, units)
    xy = (Ax @ Ay.T).tocsr()
    blocks = {
        "xx": _symmetric_part(Ax @ Ax.T),
        "yy": _symmetric_part(Ay @ Ay.T),
        "xy": xy,
        "yx": xy.T.tocsr(),
    }
    return TensorSectorOperator(W, units, blocks)


@dataclass(frozen=True, eq=False)
class TensorSpectrum:
    """Lowest physical eigenpairs of the tensor operator.

    ``min_magnitudes[i]`` is the smallest pointwise length of state ``i``
    relative to its largest one.
    """

    energies: np.ndarray
    states: list
    min_magnitudes: np.ndarray
    null_threshold: float


def _trial_upper_bound(op):
    """Smallest Rayleigh quotient of ``A phi`` over odd gaussian-envelope trials ``phi``.

    Any vector in the range of ``A`` bounds the lowest physical eigenvalue from above.
    """
    grid = op.grid
    X, Y = grid.mesh
    cx, cy = X.mean(), Y.mean()
    Ax, Ay = op.charges()
    M = op.matrix
    span = min(grid.gx.x_max - grid.gx.x_min, grid.gy.x_max - grid.gy.x_min)
    best = np.inf
    for width in span * np.geomspace(0.01, 0.5, 24):
        envelope = np.exp(-0.5 * ((X - cx) ** 2 + (Y - cy) ** 2) / width**2)
        for odd in (X - cx, Y - cy):
            phi = (odd * envelope).ravel()
            v = np.concatenate([Ax @ phi, Ay @ phi])
            nrm = float(v @ v)
            if nrm > 0:
                best = min(best, float(v @ (M @ v)) / nrm)
    return best


def tensor_ground_state(op, k=1, null_rel=1e-6, degeneracy_tol=1e-8, max_vectors=400, tol=1e-10):
    """Lowest ``k`` eigenpairs of the tensor operator outside its null space.

    The operator has a null space of dimension at least ``N`` (the range of
    ``A^T`` is at most ``N``-dimensional). Shift-invert iterations around a
    Rayleigh-quotient upper bound are widened until at least one null
    eigenvalue is returned, which guarantees no physical eigenvalue below the
    bound was skipped. States degenerate with the ``k``-th within
    ``degeneracy_tol`` are included. ``tol`` is the ARPACK residual tolerance;
    tighter values stall on the highly degenerate null cluster.
    """
    M = op.matrix
    bound = _trial_upper_bound(op)
    sigma = 1.05 * bound + 1e-6
    null_tol = null_rel * bound
    lu = spla.splu(sp.csc_matrix(M - sigma * sp.identity(M.shape[0])))
    inv = spla.LinearOperator(M.shape, matvec=lu.solve, dtype=float)
    nev = k + 6
    while True:
        nev = min(nev, M.shape[0] - 2)
        try:
            w, v = spla.eigsh(M, k=nev, sigma=sigma, OPinv=inv, which="LM", tol=tol, v0=_start_vector(M.shape[0]))
        except spla.ArpackError as exc:
            raise ConvergenceError(f"tensor eigensolver failed: {exc}") from exc
        order = np.argsort(w)
        w, v = w[order], v[:, order]
        physical = w > null_tol
        if np.count_nonzero(~physical) and np.count_nonzero(physical) >= k:
            break
        if nev >= min(max_vectors, M.shape[0] - 2):
            raise ConvergenceError("could not bracket the physical spectrum of the tensor operator")
        nev *= 2
    w, v = w[physical], v[:, physical]
    scale = max(1.0, abs(w[k - 1]))
    keep = int(np.count_nonzero(w <= w[k - 1] + degeneracy_tol * scale))
    w, v = w[:keep], v[:, :keep]
    v = v / np.sqrt(op.grid.cell_area)
    states, mins = [], []
    for col in v.T:
        i = int(np.argmax(np.abs(col)))
        col = col * np.sign(col[i])
        vec = VectorField2.from_stacked(op.grid, col)
        mag = vec.magnitude()
        states.append(vec)
        mins.append(mag.min() / mag.max())
    return TensorSpectrum(w, states, np.array(mins), null_tol)


def most_nodeless_combination(states, n_angles=360):
    """Unit combination of up to two degenerate states maximizing the smallest pointwise magnitude."""
    if len(states) == 1:
        return states[0]
    a, b = states[0].stacked(), states[1].stacked()
    grid = states[0].grid
    best, best_min = None, -1.0
    for theta in np.linspace(0.0, np.pi, n_angles, endpoint=False):
        vec = VectorField2.from_stacked(grid, math.cos(theta) * a + math.sin(theta) * b)
        mag = vec.magnitude()
        if mag.min() / mag.max() > best_min:
            best, best_min = vec, mag.min() / mag.max()
    return best


def descend_state(v, E, W, units=ModelUnits()):
    """``(A_x^T v_x + A_y^T v_y) / sqrt(E)``, normalized."""
    if not E > 1e-12:
        raise ZeroEnergy(f"cannot descend with energy {E}")
    Ax, Ay = charge_operators(W, units)
    psi = (Ax.T @ v.comp_x + Ay.T @ v.comp_y) / math.sqrt(E)
    return Field2D(v.grid, psi).normalized()


def vector_rayleigh_quotient(op, trial):
    """``<v|H|v> / <v|v>`` over the assembled tensor operator."""
    vec = trial.stacked()
    denom = float(vec @ vec)
    if denom == 0:
        raise ZeroTrial("trial vector vanishes")
    return float(vec @ (op.matrix @ vec)) / denom


def sector3_hamiltonian(v0, E02, units=ModelUnits(), rel_tol=1e-10):
    """Scalar ``sum_mu A_2mu A_2mu^T + E02`` built from a vector ground state.

    ``W_2mu = -lambda (D_mu psi_mu) / psi_mu`` with the same difference matrix as
    the charges, so each ``A_2mu`` annihilates its own component of ``v0`` exactly. The operator is assembled in potential form,
    ``-lambda^2 Laplacian + sum_mu (W_2mu^2 + lambda d_mu W_2mu) + E02`` with the
    sinc kinetic matrix; the product of square difference charges would carry
    spurious zero modes at the grid edges. Requires both components bounded
    away from zero. Returns the sparse matrix and the charges ``(A_2x, A_2y)``.
    """
    for name, comp in (("x", v0.comp_x), ("y", v0.comp_y)):
        scale = np.abs(comp).max()
        if scale == 0 or np.abs(comp).min() <= rel_tol * scale:
            raise VanishingComponent(f"component {name} vanishes on the grid")
    lam = units.scale
    grid = v0.grid
    Dx, Dy = derivative_operators(grid)
    Gx, Gy = _gradient_operators(grid)
    terms = []
    potential = np.zeros(grid.size)
    for D, G, comp in ((Dx, Gx, v0.comp_x), (Dy, Gy, v0.comp_y)):
        w2 = -lam * (D @ comp) / comp
        terms.append((lam * D + sp.diags(w2)).tocsr())
        potential += w2**2 + lam * (G @ w2)
    Kx = units.kinetic_prefactor * _sinc_kinetic(grid.gx)
    Ky = units.kinetic_prefactor * _sinc_kinetic(grid.gy)
    kinetic_x, kinetic_y = _axis_operator(grid, Kx, Ky)
    H = kinetic_x + kinetic_y + sp.diags(potential + E02)
    return _symmetric_part(H), terms


def sector2_annihilation(terms, v0):
    """``||sum_mu A_2mu psi_mu|| / ||v0||`` for the charges returned by :func:`sector3_hamiltonian`."""
    out = terms[0] @ v0.comp_x + terms[1] @ v0.comp_y
    return float(np.linalg.norm(out) / np.linalg.norm(v0.stacked()))


def hamiltonian_2d(grid, V, units=ModelUnits()):
    """Sinc-DVR ``K_x + K_y + diag(V)`` as a matrix-free operator."""
    nx, ny = grid.shape
    Kx = units.kinetic_prefactor * _sinc_kinetic(grid.gx)
    Ky = units.kinetic_prefactor * _sinc_kinetic(grid.gy)
    pot = V.values

    def matvec(vec):
        psi = np.asarray(vec).reshape(nx, ny)
        return (Kx @ psi + psi @ Ky).ravel() + pot * psi.ravel()

    return spla.LinearOperator((grid.size, grid.size), matvec=matvec, rmatvec=matvec, dtype=float)


def eigensolve_2d(grid, V, k, units=ModelUnits(), tol=1e-13):
    """Lowest ``k`` eigenpairs of the 2D sinc-DVR Hamiltonian as ``Field2D`` states."""
    op = hamiltonian_2d(grid, V, units)
    try:
        w, v = spla.eigsh(op, k=k, which="SA", tol=tol, v0=_start_vector(grid.size), ncv=max(4 * k, 40))
    except spla.ArpackError as exc:
        raise ConvergenceError(f"2D eigensolver failed: {exc}") from exc
    order = np.argsort(w)
    states = []
    for col in v[:, order].T:
        i = int(np.argmax(np.abs(col)))
        states.append(Field2D(grid, col * np.sign(col[i]) / math.sqrt(grid.cell_area)))
    return w[order], states


def subspace_overlap(psi, basis):
    """Squared norm of the projection of normalized ``psi`` onto orthonormal ``basis``."""
    return float(sum(psi.inner(b) ** 2 for b in basis))


def lowest_eigenvalues(M, k=1, tol=1e-12):
    """Lowest ``k`` eigenvalues of a sparse symmetric matrix by Lanczos iteration."""
    try:
        w = spla.eigsh(M, k=k, which="SA", tol=tol, v0=_start_vector(M.shape[0]), return_eigenvectors=False)
    except spla.ArpackError as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    return np.sort(w)
