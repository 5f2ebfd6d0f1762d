"""Superpotentials, partner potentials, charge operators and sector hierarchies."""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DegenerateDensity, DomainError, InsufficientBoundStates, ZeroEnergy
from .grid import RealField, _gradient_matrix, _same_grid, derivative_matrix, differentiate, solve_potential
from .grid import STENCIL_HALF_WIDTH
from .units import ModelUnits

#: Fraction of samples at each end used to estimate asymptotic levels.
ASYMPTOTE_FRACTION = 0.05

#: Default density floor relative to the density maximum.
RELATIVE_FLOOR = 1e-14


def _outer_count(n, fraction=ASYMPTOTE_FRACTION):
    return max(1, int(math.ceil(fraction * n)))


@dataclass(frozen=True, eq=False)
class SuperPotential:
    """Superpotential samples ``W`` on a grid together with the model units.

    ``w_minus`` and ``w_plus`` are the means of the outermost 5% of samples and
    ``asymptote_tol`` is the larger of their standard deviations.
    """

    grid: object
    w_values: np.ndarray = field(repr=False)
    units: ModelUnits = ModelUnits()
    w_minus: float = None
    w_plus: float = None
    asymptote_tol: float = None

    def __post_init__(self):
        w = RealField(self.grid, self.w_values).values
        object.__setattr__(self, "w_values", w)
        k = _outer_count(self.grid.n)
        left, right = w[:k], w[-k:]
        if self.w_minus is None:
            object.__setattr__(self, "w_minus", float(left.mean()))
        if self.w_plus is None:
            object.__setattr__(self, "w_plus", float(right.mean()))
        if self.asymptote_tol is None:
            object.__setattr__(self, "asymptote_tol", float(max(left.std(), right.std())))

    @classmethod
    def from_function(cls, grid, func, units=ModelUnits()):
        return cls(grid, func(grid.points), units)

    @property
    def scale(self):
        return self.units.scale

    @property
    def values(self):
        return self.w_values

    def derivative(self):
        return differentiate(self.w_values, self.grid)


def _stencil_support_ok(grid, valid):
    """True where every sample used by the derivative stencil is valid."""
    stencil = np.abs(_gradient_matrix(grid, STENCIL_HALF_WIDTH)) > 0
    return (stencil.astype(np.int64) @ (~valid).astype(np.int64)) == 0


def _extrapolate_linear(values, x, ok):
    idx = np.flatnonzero(ok)
    lo, hi = idx[0], idx[-1]
    out = np.array(values, dtype=float)
    slope_lo = (out[lo + 1] - out[lo]) / (x[lo + 1] - x[lo])
    slope_hi = (out[hi] - out[hi - 1]) / (x[hi] - x[hi - 1])
    out[:lo] = out[lo] + slope_lo * (x[:lo] - x[lo])
    out[hi + 1 :] = out[hi] + slope_hi * (x[hi + 1 :] - x[hi])
    return out


def _check_density(rho, floor):
    values = rho.values
    scale = float(values.max())
    if scale <= 0:
        raise DegenerateDensity("density vanishes everywhere")
    if values.min() < -1e-12 * scale:
        raise DomainError("density has negative samples")
    floor = RELATIVE_FLOOR * scale if floor is None else float(floor)
    if floor <= 0:
        raise DomainError("density floor must be positive")
    n = rho.grid.n
    central = values[n // 4 : n - n // 4]
    if np.mean(central < floor) > 0.2:
        raise DegenerateDensity("more than 20% of the central samples lie below the density floor")
    return floor


def superpotential_from_density(rho, units=ModelUnits(), floor=None):
    """Riccati transform ``W = -(lambda/2) d/dx ln rho`` of a nodeless density.

    ``floor`` defaults to ``1e-14 * max(rho)``. Outside the region where the
    log-density and its derivative stencil stay above the floor, ``W`` is
    continued linearly from the last valid samples.
    """
    floor = _check_density(rho, floor)
    grid = rho.grid
    log_rho = np.log(np.maximum(rho.values, floor))
    w = -0.5 * units.scale * differentiate(log_rho, grid)
    ok = _stencil_support_ok(grid, rho.values >= floor)
    if np.count_nonzero(ok) < 2:
        raise DegenerateDensity("density support too narrow to differentiate")
    return SuperPotential(grid, _extrapolate_linear(w, grid.points, ok), units)


def riccati_potential(W, sign="minus"):
    """``W**2 - lambda W'`` for ``sign="minus"`` (sector 1) or ``+`` for sector 2."""
    if sign not in ("minus", "plus"):
        raise DomainError(f"sign must be 'minus' or 'plus', got {sign!r}")
    s = -1.0 if sign == "minus" else 1.0
    return RealField(W.grid, W.w_values**2 + s * W.scale * W.derivative())


def partner_potential(rho, V1, units=ModelUnits(), floor=None):
    """Partner ``V1 - (hbar^2/2m) (ln rho)''`` of ``V1`` given its ground density."""
    _same_grid(rho.grid, V1.grid)
    W = superpotential_from_density(rho, units, floor)
    return RealField(V1.grid, V1.values + 2.0 * W.scale * W.derivative())


def charge_matrices(W):
    """Charge operator ``A = lambda D + diag(W)`` and its exact transpose."""
    A = W.scale * derivative_matrix(W.grid)
    A[np.diag_indices(W.grid.n)] += W.w_values
    return A, A.T.copy()


def partner_state_map(psi, E_local, W, direction="down", tol=1e-12):
    """Move an eigenstate between partner sectors.

    ``direction="down"`` applies ``A`` (sector 1 to 2), ``"up"`` applies ``A^T``.
    The image is scaled by ``1/sqrt(E_local)`` and not renormalized.
    """
    if not E_local > tol:
        raise ZeroEnergy(f"cannot map a state with local energy {E_local}")
    _same_grid(psi.grid, W.grid)
    A, At = charge_matrices(W)
    if direction == "down":
        op = A
    elif direction == "up":
        op = At
    else:
        raise DomainError(f"direction must be 'down' or 'up', got {direction!r}")
    return psi.with_values(op @ psi.values / math.sqrt(E_local))


@dataclass(frozen=True, eq=False)
class SectorRecord:
    """One member of a partner hierarchy.

    ``potential`` is expressed in the sector's own energy scale; its ground
    energy is ``ground_energy_local``.
    """

    index: int
    potential: RealField
    ground_energy_local: float
    ground_density: RealField
    superpotential: SuperPotential


@dataclass(frozen=True, eq=False)
class Hierarchy:
    """Chain of partner sectors and their ground energies on the sector-1 scale."""

    sectors: list
    cumulative_offsets: np.ndarray

    def __len__(self):
        return len(self.sectors)

    def potential_sector1_scale(self, m):
        """Potential of sector ``m`` (1-based) shifted onto the sector-1 energy scale."""
        rec = self.sectors[m - 1]
        shift = self.cumulative_offsets[m - 1] - rec.ground_energy_local
        return rec.potential.with_values(rec.potential.values + shift)


def bound_state_count(V, units=ModelUnits(), k=None):
    """Number of grid eigenstates below the lower of the two boundary potential values."""
    k = V.grid.n if k is None else min(k, V.grid.n)
    energies = solve_potential(V, units, k).energies
    return int(np.count_nonzero(energies < min(V.values[0], V.values[-1])))


def build_hierarchy(V1, units=ModelUnits(), n_sectors=2, floor=None):
    """Partner hierarchy obtained from successive nodeless ground states."""
    if n_sectors < 1:
        raise DomainError("n_sectors must be at least 1")
    available = bound_state_count(V1, units, k=n_sectors)
    if available < n_sectors:
        raise InsufficientBoundStates(f"{n_sectors} sectors requested but only {available} bound states found")
    sectors, offsets = [], []
    V, total = V1, 0.0
    for m in range(1, n_sectors + 1):
        spec = solve_potential(V, units, 1)
        e0, psi = float(spec.energies[0]), spec.states[0]
        rho = psi.with_values(psi.values**2)
        W = superpotential_from_density(rho, units, floor)
        total += e0
        offsets.append(total)
        sectors.append(SectorRecord(m, V, e0, rho, W))
        if m < n_sectors:
            V = RealField(V.grid, V.values - e0 + 2.0 * W.scale * W.derivative())
    return Hierarchy(sectors, np.array(offsets))


@dataclass(frozen=True, eq=False)
class SuperMatrices:
    """Block super-Hamiltonian and nilpotent supercharges."""

    H_block: np.ndarray
    Q_block: np.ndarray
    Q_dag_block: np.ndarray


def super_matrices(W):
    """``H = diag(A^T A, A A^T)`` with ``Q`` holding ``A`` in its lower-left block."""
    A, At = charge_matrices(W)
    n = W.grid.n
    H = np.zeros((2 * n, 2 * n))
    H[:n, :n] = At @ A
    H[n:, n:] = A @ At
    Q = np.zeros((2 * n, 2 * n))
    Q[n:, :n] = A
    return SuperMatrices(H, Q, Q.T.copy())


def semiclassical_splitting(phi0, units=ModelUnits(), step=1e-5):
    """Tunnelling splitting ``4 (hbar^2/m) phi0(0) phi0'(0)`` of a localized state."""
    slope = (phi0(step) - phi0(-step)) / (2.0 * step)
    return 4.0 * units.hbar**2 / units.mass * phi0(0.0) * slope


def gaussian_doublewell_model(beta, x0, units=ModelUnits(), grid=None):
    """Superpotential and partner pair generated by two mirrored gaussians.

    With ``W = 2 lambda beta (x - x0 tanh(2 beta x0 x))`` the potentials
    ``W**2 -/+ lambda W'`` are evaluated in closed form.
    """
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    lam = units.scale
    x = grid.points
    arg = 2.0 * beta * x0 * x
    w = 2.0 * lam * beta * (x - x0 * np.tanh(arg))
    dw = 2.0 * lam * beta * (1.0 - 2.0 * beta * x0**2 / np.cosh(arg) ** 2)
    W = SuperPotential(grid, w, units)
    return W, RealField(grid, w**2 - lam * dw), RealField(grid, w**2 + lam * dw)
