"""Time propagation on a grid and the partner intertwining of evolving states.

The implicit midpoint rule is a rational function of the Hamiltonian, so it
intertwines the two partner sectors exactly: ``A r(A^T A) = r(A A^T) A`` for
any rational ``r``. Splitting schemes break this at order ``dt**2``.
"""

from dataclasses import dataclass
import math

import numpy as np
import scipy.linalg

from .errors import DomainError, StepTooLarge, ZeroPartnerState
from .grid import ComplexField, derivative_matrix, kinetic_matrix
from .susy import charge_matrices
from .units import ModelUnits

SCHEMES = ("implicit-midpoint", "split-operator")

#: Largest tolerated phase error per step of the implicit midpoint rule.
MAX_PHASE_ERROR = 1e-6

#: ``||A psi|| / ||psi||`` below which the partner image counts as annihilated.
ANNIHILATION_TOL = 1e-6


@dataclass(frozen=True)
class PropagationConfig:
    dt: float
    n_steps: int
    scheme: str = "implicit-midpoint"

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps}")
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")


def _check_phase_error(H, psi, dt, hbar):
    """Cayley phase error per step at the state's mean energy."""
    nrm = np.vdot(psi, psi).real
    if nrm == 0:
        return
    energy = abs(np.vdot(psi, H @ psi).real / nrm)
    theta = energy * dt / hbar
    if abs(2.0 * math.atan(0.5 * theta) - theta) > MAX_PHASE_ERROR:
        raise StepTooLarge(f"dt={dt} gives a per-step phase error above {MAX_PHASE_ERROR} at energy {energy}")


def _midpoint_steps(H, psi, dt, n_steps, hbar):
    n = H.shape[0]
    half = 0.5j * dt / hbar * H
    lu = scipy.linalg.lu_factor(np.eye(n) + half)
    explicit = np.eye(n) - half
    for _ in range(n_steps):
        psi = scipy.linalg.lu_solve(lu, explicit @ psi)
    return psi


def _unitary(H, tau, hbar):
    """``exp(-i H tau / hbar)`` for a real symmetric ``H`` via its eigenvectors."""
    w, v = scipy.linalg.eigh(H)
    return (v * np.exp(-1j * w * tau / hbar)) @ v.T


def exact_propagator(H, t, hbar=1.0):
    """Dense ``exp(-i H t / hbar)``; the reference for small grids."""
    return _unitary(np.asarray(H, dtype=float), t, hbar)


def _strang_steps(T, U, psi, dt, n_steps, hbar):
    half_u = _unitary(U, 0.5 * dt, hbar)
    full_t = _unitary(T, dt, hbar)
    step = half_u @ full_t @ half_u
    for _ in range(n_steps):
        psi = step @ psi
    return psi


def _fft_split_steps(V, grid, psi, dt, n_steps, units):
    n, h = grid.n, grid.spacing
    kvec = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    kinetic = np.exp(-1j * units.kinetic_prefactor * kvec**2 * dt / units.hbar)
    half_v = np.exp(-0.5j * V * dt / units.hbar)
    for _ in range(n_steps):
        psi = half_v * np.fft.ifft(kinetic * np.fft.fft(half_v * psi))
    return psi


def propagate(psi0, V, units=ModelUnits(), cfg=PropagationConfig(1e-3, 1), backward=False):
    """Evolve ``psi0`` under ``K + V`` for ``cfg.n_steps`` steps of ``cfg.dt``.

    ``implicit-midpoint`` uses the sinc kinetic matrix and is exactly unitary.
    ``split-operator`` treats the grid as periodic and applies the kinetic factor
    in Fourier space. ``backward`` runs time in reverse.
    """
    grid = V.grid
    if psi0.grid != grid:
        raise DomainError("state and potential live on different grids")
    dt = -cfg.dt if backward else cfg.dt
    psi = np.asarray(psi0.values, dtype=complex)
    if cfg.scheme == "implicit-midpoint":
        H = kinetic_matrix(grid, units) + np.diag(V.values)
        _check_phase_error(H, psi, cfg.dt, units.hbar)
        psi = _midpoint_steps(H, psi, dt, cfg.n_steps, units.hbar)
    else:
        psi = _fft_split_steps(V.values, grid, psi, dt, cfg.n_steps, units)
    return ComplexField(grid, psi)


def evolve_matrix(H, psi, cfg, hbar=1.0, kinetic=None):
    """Evolve a vector under a symmetric matrix generator.

    For ``split-operator`` the generator is split as ``kinetic + (H - kinetic)``
    with a Strang step.
    """
    psi = np.asarray(psi, dtype=complex)
    if cfg.scheme == "implicit-midpoint":
        _check_phase_error(H, psi, cfg.dt, hbar)
        return _midpoint_steps(H, psi, cfg.dt, cfg.n_steps, hbar)
    if kinetic is None:
        raise DomainError("split-operator evolution needs the kinetic part of the generator")
    return _strang_steps(kinetic, H - kinetic, psi, cfg.dt, cfg.n_steps, hbar)


def intertwining_residual(psi0, W, t_final, cfg):
    """Relative mismatch ``||A psi1(t) - psi2(t)|| / ||A psi0||`` with ``psi2(0) = A psi0``.

    Both sectors are evolved with the discrete generators ``A^T A`` and
    ``A A^T``; the split scheme shares the kinetic part ``lambda^2 D^T D``.
    """
    A, At = charge_matrices(W)
    psi = np.asarray(psi0.values, dtype=complex)
    image = A @ psi
    norm = np.linalg.norm(image)
    if norm <= ANNIHILATION_TOL * np.linalg.norm(psi):
        raise ZeroPartnerState("A annihilates the initial state")
    if t_final == 0:
        return 0.0
    n_steps = max(1, int(round(t_final / cfg.dt)))
    step = PropagationConfig(t_final / n_steps, n_steps, cfg.scheme)
    D = derivative_matrix(W.grid)
    T = W.scale**2 * (D.T @ D)
    hbar = W.units.hbar
    psi1 = evolve_matrix(At @ A, psi, step, hbar, T)
    psi2 = evolve_matrix(A @ At, image, step, hbar, T)
    return float(np.linalg.norm(A @ psi1 - psi2) / norm)


def exact_intertwining_error(W, t):
    """Largest entry of ``A exp(-i A^T A t) - exp(-i A A^T t) A`` from separate eigensolves."""
    A, At = charge_matrices(W)
    hbar = W.units.hbar
    lhs = A @ exact_propagator(At @ A, t, hbar)
    rhs = exact_propagator(A @ At, t, hbar) @ A
    return float(np.max(np.abs(lhs - rhs)))
