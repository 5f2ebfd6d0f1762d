"""One-dimensional scattering amplitudes and their partner relations."""

from dataclasses import dataclass
import math

import numpy as np

from .errors import ClosedChannel, NonAsymptoticPotential, NonAsymptoticSuperpotential
from .units import ModelUnits


@dataclass(frozen=True)
class ScatteringAmplitudes:
    """Left-incident amplitudes with plane-wave phases referenced at ``x = 0``.

    ``psi = exp(i k x) + R exp(-i k x)`` on the left and ``T exp(i k' x)`` on the right.
    """

    energy: float
    k: float
    k_prime: float
    R: complex
    T: complex

    @property
    def reflection(self):
        return abs(self.R) ** 2

    @property
    def transmission(self):
        return self.k_prime / self.k * abs(self.T) ** 2

    def flux_defect(self):
        """``|R|^2 + (k'/k)|T|^2 - 1``."""
        return self.reflection + self.transmission - 1.0


def _wavenumber(E, level, units):
    if not E > level:
        raise ClosedChannel(f"energy {E} does not exceed the asymptotic level {level}")
    return math.sqrt(E - level) / units.scale


def asymptotic_levels(W, fraction=0.05, rel_tol=1e-4):
    """Limits of ``W`` at both ends from the outermost ``fraction`` of samples."""
    w = W.w_values
    k = max(1, int(math.ceil(fraction * w.size)))
    spread = float(np.ptp(w))
    tol = rel_tol * spread
    for side in (w[:k], w[-k:]):
        if np.ptp(side) > tol:
            raise NonAsymptoticSuperpotential("superpotential is not flat near the grid edges")
    return float(w[:k].mean()), float(w[-k:].mean())


def _potential_levels(V, fraction=0.1, tol=None):
    v = V.values
    k = max(1, int(math.ceil(fraction * v.size)))
    tol = 1e-6 * max(1.0, float(np.ptp(v))) if tol is None else tol
    left, right = v[:k], v[-k:]
    if np.ptp(left) > tol or np.ptp(right) > tol:
        raise NonAsymptoticPotential("potential is not flat over the outer 10% of the grid")
    return float(left.mean()), float(right.mean())


def _cell_matrices(v, E, h, units):
    """Exact (psi, psi') transfer across cells of constant potential; real for real E."""
    q2 = (E - v) / units.kinetic_prefactor
    q = np.sqrt(q2.astype(complex))
    qh = q * h
    small = np.abs(qh) < 1e-8
    safe_q = np.where(small, 1.0, q)
    c = np.cos(qh)
    s_over_q = np.where(small, h, np.sin(qh) / safe_q)
    q_s = -q * np.sin(qh)
    M = np.empty((v.size, 2, 2))
    M[:, 0, 0] = c.real
    M[:, 0, 1] = s_over_q.real
    M[:, 1, 0] = q_s.real
    M[:, 1, 1] = c.real
    return M


def _chain_product(M):
    """Ordered product ``M[-1] @ ... @ M[0]`` by pairwise reduction."""
    while M.shape[0] > 1:
        if M.shape[0] % 2:
            M = np.concatenate([M, np.eye(2)[None]], axis=0)
        M = np.matmul(M[1::2], M[0::2])
    return M[0]


def _transfer_solve(v, x_left, x_right, h, E, k, kp, units):
    M = _chain_product(_cell_matrices(v, E, h, units))
    eL, eL_m = np.exp(1j * k * x_left), np.exp(-1j * k * x_left)
    eR = np.exp(1j * kp * x_right)
    # M (psi_L, psi_L') = T (eR, i kp eR), with psi_L = eL + R eL_m
    inc = M @ np.array([eL, 1j * k * eL])
    ref = M @ np.array([eL_m, -1j * k * eL_m])
    out = np.array([eR, 1j * kp * eR])
    R, T = np.linalg.solve(np.column_stack([ref, -out]), -inc)
    return R, T


def solve_scattering(V, E, units=ModelUnits(), extrapolate=True, flat_tol=None):
    """Reflection and transmission amplitudes of ``V`` by transfer matrices.

    Each grid sample is the constant potential of a cell of width ``h``
    centred on it. With ``extrapolate`` the result is Richardson-extrapolated
    against the grid with every other sample, removing the ``h**2`` error.
    """
    v_minus, v_plus = _potential_levels(V, tol=flat_tol)
    k = _wavenumber(E, v_minus, units)
    kp = _wavenumber(E, v_plus, units)
    x, h = V.grid.points, V.grid.spacing
    R, T = _transfer_solve(V.values, x[0] - h / 2, x[-1] + h / 2, h, E, k, kp, units)
    if extrapolate and V.grid.n >= 5:
        sel = slice(0, V.grid.n - (1 - V.grid.n % 2), 2)
        xc = x[sel]
        R2, T2 = _transfer_solve(V.values[sel], xc[0] - h, xc[-1] + h, 2 * h, E, k, kp, units)
        R, T = (4 * R - R2) / 3, (4 * T - T2) / 3
    return ScatteringAmplitudes(float(E), k, kp, complex(R), complex(T))


def partner_amplitudes(s2, W):
    """Sector-1 amplitudes from sector-2 amplitudes at the same energy.

    ``R1 = (W- + i lam k)/(W- - i lam k) R2`` and ``T1 = (W+ - i lam k')/(W- - i lam k) T2``.
    """
    w_minus, w_plus = W.w_minus, W.w_plus
    lam = W.scale
    E = s2.energy
    k = _wavenumber(E, w_minus**2, W.units)
    kp = _wavenumber(E, w_plus**2, W.units)
    den = w_minus - 1j * lam * k
    R1 = (w_minus + 1j * lam * k) / den * s2.R
    T1 = (w_plus - 1j * lam * kp) / den * s2.T
    return ScatteringAmplitudes(E, k, kp, complex(R1), complex(T1))

