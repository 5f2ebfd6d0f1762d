"""Analytic model potentials."""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError
from .grid import RealField


@dataclass(frozen=True)
class PolynomialPotential:
    """``V(x) = sum_k coeffs[k] x**k`` with an analytic derivative."""

    coeffs: tuple
    name: str = "polynomial"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def __call__(self, x):
        return P.polyval(np.asarray(x, dtype=float), self.coeffs)

    def derivative(self, x):
        return P.polyval(np.asarray(x, dtype=float), P.polyder(self.coeffs))

    def on(self, grid):
        return RealField(grid, self(grid.points))

    def __add__(self, constant):
        c = list(self.coeffs)
        c[0] += constant
        return PolynomialPotential(tuple(c), self.name)


def harmonic(omega2=1.0, shift=0.0):
    """``omega2 * x**2 + shift``."""
    return PolynomialPotential((shift, 0.0, omega2), "harmonic")


def sextic():
    """``x^6 + 4x^4 + x^2 - 2`` generated by ``W = x^3 + 2x``; ground energy 0 when ``lambda = 1``."""
    return PolynomialPotential((-2.0, 0.0, 1.0, 0.0, 4.0, 0.0, 1.0), "sextic")


def sextic_partner():
    """``W**2 + W'`` for ``W = x^3 + 2x``."""
    return PolynomialPotential((2.0, 0.0, 7.0, 0.0, 4.0, 0.0, 1.0), "sextic_partner")


def double_well(a=438.9, b=877.8, e0=-181.1):
    """Symmetric quartic double well ``a x^4 - b x^2 + e0``."""
    return PolynomialPotential((e0, 0.0, -b, 0.0, a), "double_well")


@dataclass(frozen=True)
class KinkSuperpotential:
    """``W(x) = offset + amplitude tanh(x/width) + bump sech(x/width)``.

    Bounded with limits ``offset -+ amplitude``, so both partner potentials
    flatten out and support scattering states.
    """

    offset: float = 0.0
    amplitude: float = 1.0
    bump: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError(f"width must be positive, got {self.width}")

    def __call__(self, x):
        u = np.asarray(x, dtype=float) / self.width
        return self.offset + self.amplitude * np.tanh(u) + self.bump / np.cosh(u)

    def derivative(self, x):
        u = np.asarray(x, dtype=float) / self.width
        sech = 1.0 / np.cosh(u)
        return (self.amplitude * sech**2 - self.bump * np.tanh(u) * sech) / self.width


def partner_pair(W, grid, units):
    """Analytic ``W**2 -+ lambda W'`` on ``grid`` for a superpotential callable."""
    x = grid.points
    w, dw = W(x), W.derivative(x)
    lam = units.scale
    return RealField(grid, w**2 - lam * dw), RealField(grid, w**2 + lam * dw)


_SUPERPOTENTIALS = {
    "linear": lambda slope=1.0, offset=0.0: PolynomialPotential((offset, slope), "linear"),
    "sextic": lambda: PolynomialPotential((0.0, 2.0, 0.0, 1.0), "sextic"),
    "kink": KinkSuperpotential,
}


def named_superpotential(name, **coefficients):
    """Look up an analytic superpotential by name, or a polynomial from ``coeffs``."""
    if name == "polynomial":
        return PolynomialPotential(tuple(coefficients.get("coeffs", ())))
    try:
        factory = _SUPERPOTENTIALS[name]
    except KeyError:
        raise DomainError(f"unknown superpotential {name!r}; choose from {sorted(_SUPERPOTENTIALS) + ['polynomial']}") from None
    try:
        return factory(**coefficients)
    except TypeError as exc:
        raise DomainError(f"bad coefficients for {name!r}: {exc}") from None


_MODELS = {
    "harmonic": harmonic,
    "sextic": sextic,
    "sextic_partner": sextic_partner,
    "double_well": double_well,
}


def named_potential(name, **coefficients):
    """Look up a model potential by name, or build one from ``coeffs``."""
    if name == "polynomial":
        return PolynomialPotential(tuple(coefficients.get("coeffs", ())))
    try:
        factory = _MODELS[name]
    except KeyError:
        raise DomainError(f"unknown potential {name!r}; choose from {sorted(_MODELS) + ['polynomial']}") from None
    try:
        return factory(**coefficients)
    except TypeError as exc:
        raise DomainError(f"bad coefficients for {name!r}: {exc}") from None
