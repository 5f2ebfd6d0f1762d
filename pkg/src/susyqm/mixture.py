"""Gaussian-mixture trial densities and the energy functionals built on them.

All log-density derivatives are evaluated analytically from the mixture
parameters through responsibility-weighted moments, so they stay finite far
into the tails where the density itself underflows.
"""

from dataclasses import dataclass, field
import hashlib

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateDensity, DomainError, EmptyEnsemble
from .units import ModelUnits


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """``rho(x) = sum_n c0[n] exp(-c2[n] (x - c3[n])**2)``."""

    c0: np.ndarray
    c2: np.ndarray
    c3: np.ndarray

    def __post_init__(self):
        arrays = [np.atleast_1d(np.array(a, dtype=float)) for a in (self.c0, self.c2, self.c3)]
        if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1 or arrays[0].size == 0:
            raise DomainError("c0, c2 and c3 must be equal-length non-empty vectors")
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise DomainError("mixture parameters must be finite")
        if np.any(arrays[0] <= 0) or np.any(arrays[1] <= 0):
            raise DomainError("amplitudes c0 and inverse widths c2 must be positive")
        for name, a in zip(("c0", "c2", "c3"), arrays):
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @classmethod
    def from_components(cls, components):
        c0, c2, c3 = zip(*components)
        return cls(c0, c2, c3)

    @classmethod
    def from_params(cls, params):
        """Inverse of :meth:`to_params`."""
        params = np.asarray(params, dtype=float)
        n = params.size // 3
        return cls(np.exp(params[:n]), np.exp(params[n : 2 * n]), params[2 * n :])

    def to_params(self):
        """Unconstrained vector ``(log c0, log c2, c3)``."""
        return np.concatenate([np.log(self.c0), np.log(self.c2), self.c3])

    @property
    def n_components(self):
        return self.c0.size

    @property
    def components(self):
        return list(zip(self.c0, self.c2, self.c3))

    @property
    def weights(self):
        """Integral of each component."""
        return self.c0 * np.sqrt(np.pi / self.c2)

    def integral(self):
        return float(self.weights.sum())

    def normalize(self):
        return GaussianMixture(self.c0 / self.integral(), self.c2, self.c3)

    def mirrored(self):
        return GaussianMixture(self.c0, self.c2, -self.c3)

    def snapshot_hash(self):
        """Short digest of the parameters, stable across runs."""
        return hashlib.sha1(np.concatenate([self.c0, self.c2, self.c3]).tobytes()).hexdigest()[:12]

    def __call__(self, x):
        return mixture_density(self, x)


def _responsibilities(m, x):
    x = np.asarray(x, dtype=float)
    u = x[..., None] - m.c3
    log_g = np.log(m.c0) - m.c2 * u**2
    log_rho = logsumexp(log_g, axis=-1)
    R = np.exp(log_g - log_rho[..., None])
    return log_rho, R, u


def log_density(m, x):
    return _responsibilities(m, x)[0]


def mixture_density(m, x):
    """Density values; scalar in, scalar out."""
    out = np.exp(log_density(m, x))
    return float(out) if np.ndim(out) == 0 else out


def _ratio_moments(m, x, order):
    """``rho^(j) / rho`` for ``j = 1..order`` together with ``ln rho``."""
    log_rho, R, u = _responsibilities(m, x)
    c2 = m.c2
    s = -2.0 * c2 * u
    per_component = [s, s**2 - 2 * c2, s**3 - 6 * c2 * s, s**4 - 12 * c2 * s**2 + 12 * c2**2]
    moments = [np.sum(R * g, axis=-1) for g in per_component[:order]]
    return log_rho, moments


def log_derivatives(m, x, order=4):
    """``ln rho`` and its first ``order`` derivatives (``order <= 4``)."""
    if not 1 <= order <= 4:
        raise DomainError("order must be between 1 and 4")
    log_rho, mom = _ratio_moments(m, x, order)
    m1 = mom[0]
    out = [log_rho, m1]
    if order >= 2:
        m2 = mom[1]
        out.append(m2 - m1**2)
    if order >= 3:
        m3 = mom[2]
        out.append(m3 - 3 * m1 * m2 + 2 * m1**3)
    if order >= 4:
        m4 = mom[3]
        out.append(m4 - 4 * m1 * m3 - 3 * m2**2 + 12 * m1**2 * m2 - 6 * m1**4)
    return out


def density_derivatives(m, x, order=4):
    """``rho`` and its first ``order`` derivatives."""
    log_rho, mom = _ratio_moments(m, x, order)
    rho = np.exp(log_rho)
    return [rho] + [rho * mj for mj in mom]


def _check_support(log_rho):
    if np.any(~np.isfinite(log_rho)):
        raise DegenerateDensity("mixture density underflows at an evaluation point")


def quantum_potential(m, x, units=ModelUnits()):
    """Bohm quantum potential ``-(hbar^2/2m) (sqrt rho)'' / sqrt rho``."""
    log_rho, L1, L2 = log_derivatives(m, x, 2)
    _check_support(log_rho)
    return -units.kinetic_prefactor * (0.5 * L2 + 0.25 * L1**2)


def quantum_potential_gradient(m, x, units=ModelUnits()):
    log_rho, L1, L2, L3 = log_derivatives(m, x, 3)
    _check_support(log_rho)
    return -units.kinetic_prefactor * (0.5 * L3 + 0.5 * L1 * L2)


def local_energy(V, m, x, units=ModelUnits()):
    """``V(x) + Q(x)``."""
    return V(x) + quantum_potential(m, x, units)


def local_energy_gradient(V, m, x, units=ModelUnits()):
    """Derivative of :func:`local_energy`; ``V`` must provide ``derivative``."""
    return V.derivative(x) + quantum_potential_gradient(m, x, units)


@dataclass(frozen=True, eq=False)
class SampleEnsemble:
    """Trial points with averaging weights (uniform unless given).

    ``cg_state`` carries the previous gradient and search direction between
    successive conjugate-gradient moves.
    """

    points: np.ndarray
    weights: np.ndarray = None
    cg_state: dict = field(default=None, repr=False)

    def __post_init__(self):
        pts = np.atleast_1d(np.array(self.points, dtype=float))
        if pts.ndim != 1 or pts.size == 0:
            raise EmptyEnsemble("an ensemble needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise DomainError("ensemble points must be finite")
        w = np.full(pts.size, 1.0 / pts.size) if self.weights is None else np.array(self.weights, dtype=float)
        if w.shape != pts.shape or np.any(w < 0) or w.sum() <= 0:
            raise DomainError("weights must be non-negative, non-zero and match the points")
        w = w / w.sum()
        pts.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.points.size

    def within(self, domain):
        return bool(np.all((self.points >= domain[0]) & (self.points <= domain[1])))


def energy_functional(V, m, ensemble, units=ModelUnits()):
    """Weighted ensemble average of the local energy."""
    if ensemble is None or len(ensemble) == 0:
        raise EmptyEnsemble("energy requires at least one sample point")
    return float(np.dot(ensemble.weights, local_energy(V, m, ensemble.points, units)))


@dataclass(frozen=True)
class Quadrature:
    """Uniform trapezoid-style quadrature used for deterministic energies."""

    x_min: float
    x_max: float
    n: int = 1201

    @property
    def points(self):
        return np.linspace(self.x_min, self.x_max, self.n)

    @property
    def spacing(self):
        return (self.x_max - self.x_min) / (self.n - 1)


def quadrature_energy(V, m, quad, units=ModelUnits(), V_values=None):
    """Deterministic energy ``(<V> + (hbar^2/2m) <L1^2/4>) / <1>`` of ``sqrt(rho)``.

    This is the Rayleigh quotient of the trial wavefunction, hence an upper
    bound on the ground energy up to quadrature error.
    """
    return quadrature_energy_and_gradient(V, m.to_params(), quad, units, V_values, gradient=False)


def quadrature_energy_and_gradient(V, params, quad, units=ModelUnits(), V_values=None, gradient=True):
    """Energy and its gradient with respect to ``(log c0, log c2, c3)``."""
    x = quad.points
    n = params.size // 3
    log_c0, c2, c3 = params[:n], np.exp(params[n : 2 * n]), params[2 * n :]
    u = x[:, None] - c3
    log_g = log_c0 - c2 * u**2
    log_rho = logsumexp(log_g, axis=1)
    R = np.exp(log_g - log_rho[:, None])
    # scaled density; the common factor cancels in the quotient
    rho = np.exp(log_rho - log_rho.max())
    s = -2.0 * c2 * u
    L1 = np.sum(R * s, axis=1)
    Vx = V(x) if V_values is None else V_values
    lam2 = units.kinetic_prefactor
    Z = rho.sum()
    E = float(((Vx + 0.25 * lam2 * L1**2) * rho).sum() / Z)
    if not gradient:
        return E
    # d rho = rho R t, d L1 = R (t s + ds) - L1 R t per parameter with log-derivative t
    f = (Vx - 0.25 * lam2 * L1**2 - E)[:, None]
    q = (0.5 * lam2 * L1)[:, None]
    w = (R * rho[:, None]) / Z
    t_c2 = -c2 * u**2
    t_c3 = 2.0 * c2 * u
    g_c0 = np.sum(w * (f + q * s), axis=0)
    g_c2 = np.sum(w * (f * t_c2 + q * (s * t_c2 + s)), axis=0)
    g_c3 = np.sum(w * (f * t_c3 + q * (s * t_c3 + 2.0 * c2)), axis=0)
    return E, np.concatenate([g_c0, g_c2, g_c3])


@dataclass(frozen=True, eq=False)
class MixturePartnerPotential:
    """Partner ``V1 - (hbar^2/2m) (ln rho)''`` of ``V1`` for a mixture ground density.

    The derivative needed for point moves uses the analytic third log-derivative.
    """

    V1: object
    mixture: GaussianMixture
    units: ModelUnits = ModelUnits()

    def __call__(self, x):
        L2 = log_derivatives(self.mixture, x, 2)[2]
        return self.V1(x) - self.units.kinetic_prefactor * L2

    def derivative(self, x):
        L3 = log_derivatives(self.mixture, x, 3)[3]
        return self.V1.derivative(x) - self.units.kinetic_prefactor * L3

    def superpotential(self, x):
        """``W = -(lambda/2) (ln rho)'`` of the sector-1 mixture."""
        return -0.5 * self.units.scale * log_derivatives(self.mixture, x, 1)[1]
