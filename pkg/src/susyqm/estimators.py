"""Scikit-learn style front ends.

Samples on the grid play the role of features: a potential or density is a
row of ``n_points`` values over ``np.linspace(x_min, x_max, n_points)``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import GridMismatch
from .grid import RealField, make_grid, solve_potential
from .mixture import local_energy, mixture_density
from .optimizer import OptimizerConfig, optimize_ground_state
from .susy import build_hierarchy, superpotential_from_density
from .units import ModelUnits


def check_grid_rows(X, n_points):
    """2D float array of grid samples, one row per field."""
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != n_points:
        raise GridMismatch(f"expected rows of {n_points} grid samples, got {X.shape[1]}")
    return X


def check_single_field(X, n_points):
    X = check_grid_rows(X, n_points)
    if X.shape[0] != 1:
        raise GridMismatch(f"expected a single field, got {X.shape[0]} rows")
    return X[0]


class _GridMixin:
    def _grid(self):
        return make_grid(self.x_min, self.x_max, self.n_points)

    def _units(self):
        return ModelUnits(self.hbar, self.mass)


class SuperpotentialTransformer(_GridMixin, TransformerMixin, BaseEstimator):
    """Maps sampled ground-state densities to superpotentials by the Riccati transform."""

    def __init__(self, x_min=-5.0, x_max=5.0, n_points=201, hbar=1.0, mass=0.5, floor=None):
        self.x_min = x_min
        self.x_max = x_max
        self.n_points = n_points
        self.hbar = hbar
        self.mass = mass
        self.floor = floor

    def fit(self, X, y=None):
        check_grid_rows(X, self.n_points)
        self.grid_ = self._grid()
        self.units_ = self._units()
        self.n_features_in_ = self.n_points
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_grid_rows(X, self.n_points)
        out = np.empty_like(X)
        for i, row in enumerate(X):
            rho = RealField(self.grid_, row)
            out[i] = superpotential_from_density(rho, self.units_, self.floor).w_values
        return out


class PartnerHierarchy(_GridMixin, BaseEstimator):
    """Sector hierarchy of a sampled potential; ``predict`` returns sector ground energies.

    Attributes
    ----------
    hierarchy_ : Hierarchy
    offsets_ : ndarray
        Ground energy of every sector on the sector-1 scale.
    """

    def __init__(self, x_min=-5.0, x_max=5.0, n_points=201, n_sectors=2, hbar=1.0, mass=0.5, floor=None):
        self.x_min = x_min
        self.x_max = x_max
        self.n_points = n_points
        self.n_sectors = n_sectors
        self.hbar = hbar
        self.mass = mass
        self.floor = floor

    def fit(self, X, y=None):
        values = check_single_field(X, self.n_points)
        self.grid_ = self._grid()
        units = self._units()
        self.hierarchy_ = build_hierarchy(RealField(self.grid_, values), units, self.n_sectors, self.floor)
        self.offsets_ = np.asarray(self.hierarchy_.cumulative_offsets, dtype=float)
        self.direct_energies_ = solve_potential(RealField(self.grid_, values), units, self.n_sectors).energies
        self.n_features_in_ = self.n_points
        return self

    def predict(self, X):
        """Sector-1-scale ground energy of each 1-based sector index in ``X``."""
        check_is_fitted(self, "offsets_")
        idx = np.asarray(X, dtype=int).ravel()
        if np.any(idx < 1) or np.any(idx > self.offsets_.size):
            raise GridMismatch(f"sector indices must lie in 1..{self.offsets_.size}")
        return self.offsets_[idx - 1]

    def potentials(self):
        check_is_fitted(self, "hierarchy_")
        return np.array([s.potential.values for s in self.hierarchy_.sectors])


class MixtureGroundState(BaseEstimator):
    """Gaussian-mixture ground state of an analytic potential.

    ``fit`` takes the potential callable (it must provide ``derivative``);
    ``predict`` evaluates the fitted density and ``score`` returns the
    negative deterministic energy so that larger is better.
    """

    def __init__(
        self,
        domain=(-5.0, 5.0),
        n_gaussians=15,
        n_points=1000,
        max_cg_steps=1000,
        energy_tolerance=1e-10,
        seed=0,
        hbar=1.0,
        mass=0.5,
        strict=False,
    ):
        self.domain = domain
        self.n_gaussians = n_gaussians
        self.n_points = n_points
        self.max_cg_steps = max_cg_steps
        self.energy_tolerance = energy_tolerance
        self.seed = seed
        self.hbar = hbar
        self.mass = mass
        self.strict = strict

    def _config(self):
        return OptimizerConfig(
            n_gaussians=self.n_gaussians,
            n_points=self.n_points,
            max_cg_steps=self.max_cg_steps,
            energy_tolerance=self.energy_tolerance,
            seed=self.seed,
            strict=self.strict,
        )

    def fit(self, V, y=None, units=None):
        units = units or ModelUnits(self.hbar, self.mass)
        self.potential_ = V
        self.units_ = units
        self.mixture_, self.energy_, self.trace_ = optimize_ground_state(V, self.domain, self._config(), units)
        return self

    def predict(self, X):
        check_is_fitted(self, "mixture_")
        x = check_array(X, ensure_2d=False, dtype=float).ravel()
        return mixture_density(self.mixture_, x) / self.mixture_.integral()

    def local_energy(self, X):
        check_is_fitted(self, "mixture_")
        x = check_array(X, ensure_2d=False, dtype=float).ravel()
        return local_energy(self.potential_, self.mixture_, x, self.units_)

    def score(self, X=None, y=None):
        check_is_fitted(self, "energy_")
        return -float(self.energy_)
