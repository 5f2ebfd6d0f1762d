"""Uniform collocation grids, derivative and kinetic operators, eigensolves."""

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import factorial

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DomainError, GridMismatch
from .units import ModelUnits

#: Half-width of the central difference stencil used by :func:`derivative_matrix`.
STENCIL_HALF_WIDTH = 4


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of ``n`` points spanning ``[x_min, x_max]``."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise DomainError("grid bounds must be finite")
        if self.x_min >= self.x_max:
            raise DomainError(f"x_min ({self.x_min}) must be smaller than x_max ({self.x_max})")
        if int(self.n) != self.n or self.n < 3:
            raise DomainError(f"a grid needs at least 3 points, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @cached_property
    def points(self):
        pts = np.linspace(self.x_min, self.x_max, self.n)
        pts.flags.writeable = False
        return pts

    @property
    def spacing(self):
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def h(self):
        return self.spacing

    def __len__(self):
        return self.n

    def mirror_index(self):
        """Index map ``i -> n - 1 - i`` pairing ``x`` with ``-x`` on symmetric grids."""
        return np.arange(self.n)[::-1]


def make_grid(x_min, x_max, n):
    """Build a :class:`Grid1D`; raises :class:`DomainError` on bad bounds."""
    return Grid1D(float(x_min), float(x_max), n)


def _check_values(grid, values, dtype):
    arr = np.array(values, dtype=dtype)
    if arr.shape != (grid.n,):
        raise GridMismatch(f"expected {grid.n} values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("field values must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class RealField:
    """Real function samples on a :class:`Grid1D`."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values, float))

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, func(grid.points))

    def inner(self, other):
        """Quadrature inner product ``sum(conj(f) g) h``."""
        _same_grid(self.grid, other.grid)
        return np.vdot(self.values, other.values) * self.grid.spacing

    def norm(self):
        return float(np.sqrt(np.real(self.inner(self))))

    def normalized(self):
        return type(self)(self.grid, self.values / self.norm())

    def with_values(self, values):
        return type(self)(self.grid, values)


class ComplexField(RealField):
    """Complex function samples on a :class:`Grid1D`."""

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values, complex))


def _same_grid(a, b):
    if a != b:
        raise GridMismatch(f"fields live on different grids: {a} vs {b}")


@dataclass(frozen=True)
class SpectrumResult:
    """Lowest eigenpairs of a grid Hamiltonian.

    ``states`` are normalized so that ``sum(psi**2) * h == 1`` and made positive
    at their largest-magnitude entry.
    """

    energies: np.ndarray
    states: list
    n_converged: int


def _central_weights(half_width):
    p = half_width
    return np.array(
        [(-1) ** (k + 1) * factorial(p) ** 2 / (k * factorial(p - k) * factorial(p + k)) for k in range(1, p + 1)]
    )


@lru_cache(maxsize=64)
def _derivative_matrix(grid, half_width):
    n = grid.n
    p = min(half_width, n - 1)
    weights = _central_weights(p) / grid.spacing
    D = np.zeros((n, n))
    for k, c in enumerate(weights, start=1):
        idx = np.arange(n - k)
        D[idx, idx + k] = c
        D[idx + k, idx] = -c
    D.flags.writeable = False
    return D


def derivative_matrix(grid, half_width=STENCIL_HALF_WIDTH):
    """First-derivative matrix, exactly antisymmetric.

    Central differences of order ``2 * half_width`` truncated at the grid edges,
    so ``D.T == -D`` bit for bit. Rows closer than ``half_width`` to an edge are
    not accurate; :func:`differentiate` patches those rows for field derivatives.
    """
    return _derivative_matrix(grid, int(half_width))


def _fornberg_first(x0, nodes):
    """First-derivative weights at ``x0`` for arbitrary ``nodes`` (Fornberg recursion)."""
    m = len(nodes)
    c = np.zeros((m, 2))
    c1, c4 = 1.0, nodes[0] - x0
    c[0, 0] = 1.0
    for i in range(1, m):
        mn = min(i, 1)
        c2 = 1.0
        c5, c4 = c4, nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, 1]


@lru_cache(maxsize=64)
def _gradient_matrix(grid, half_width):
    D = np.array(_derivative_matrix(grid, half_width))
    n, p = grid.n, min(half_width, (grid.n - 1) // 2)
    width = min(2 * p + 1, n)
    x = grid.points
    for i in list(range(p)) + list(range(n - p, n)):
        lo = 0 if i < p else n - width
        D[i] = 0.0
        D[i, lo : lo + width] = _fornberg_first(x[i], x[lo : lo + width])
    D.flags.writeable = False
    return D


def differentiate(values, grid, half_width=STENCIL_HALF_WIDTH):
    """Derivative of samples on ``grid``: central stencil inside, one-sided at the edges."""
    return _gradient_matrix(grid, int(half_width)) @ np.asarray(values)


@lru_cache(maxsize=64)
def _sinc_kinetic(grid):
    n, h = grid.n, grid.spacing
    i = np.arange(n)
    d = i[:, None] - i[None, :]
    off = 2.0 * (-1.0) ** d / np.where(d == 0, 1, d) ** 2
    T = np.where(d == 0, np.pi**2 / 3.0, off) / h**2
    T.flags.writeable = False
    return T


def kinetic_matrix(grid, units=ModelUnits()):
    """Sinc-DVR (Colbert-Miller) kinetic energy ``-(hbar^2/2m) d^2/dx^2``."""
    return units.kinetic_prefactor * _sinc_kinetic(grid)


def hamiltonian_matrix(grid, V, units=ModelUnits()):
    """``kinetic_matrix + diag(V)``."""
    _same_grid(grid, V.grid)
    H = kinetic_matrix(grid, units)
    H[np.diag_indices(grid.n)] += V.values
    return H


def _fix_sign(vectors):
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eigensolve(H, k, grid, residual_tol=1e-8):
    """The ``k`` lowest eigenpairs of the symmetric matrix ``H``.

    States come back as :class:`RealField` objects on ``grid``, normalized under
    the grid quadrature with a deterministic sign.
    """
    H = np.asarray(H)
    n = H.shape[0]
    if H.shape != (n, n) or n != grid.n:
        raise GridMismatch(f"matrix of shape {H.shape} does not match a grid of {grid.n} points")
    if not 1 <= k <= n:
        raise DomainError(f"k must lie in [1, {n}], got {k}")
    try:
        energies, vectors = scipy.linalg.eigh(H, subset_by_index=[0, k - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"symmetric eigensolver failed: {exc}") from exc
    vectors = _fix_sign(vectors)
    residual = np.linalg.norm(H @ vectors - vectors * energies, axis=0)
    scale = max(1.0, float(np.max(np.abs(energies))))
    bad = residual > residual_tol * scale
    if np.any(bad):
        raise ConvergenceError(f"eigenpair residuals {residual[bad]} exceed tolerance")
    states = [RealField(grid, v / np.sqrt(grid.spacing)) for v in vectors.T]
    return SpectrumResult(energies=energies, states=states, n_converged=k)


def solve_potential(V, units=ModelUnits(), k=1):
    """Diagonalize ``K + diag(V)`` on the grid carrying ``V``."""
    return eigensolve(hamiltonian_matrix(V.grid, V, units), k, V.grid)
