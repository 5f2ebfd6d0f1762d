"""Physical units and energy conversions."""

from dataclasses import dataclass
import math

from .errors import DomainError, UnsupportedUnit

#: CODATA hartree to wavenumber conversion factor (cm^-1 per hartree).
HARTREE_TO_CM1 = 219474.6313632

#: Hydrogen-atom mass in electron masses, used for the double-well model.
HYDROGEN_MASS_AU = 1837.152646

_TO_HARTREE = {"hartree": 1.0, "cm-1": 1.0 / HARTREE_TO_CM1}


@dataclass(frozen=True)
class ModelUnits:
    """Planck constant and particle mass.

    The defaults give ``hbar**2 / (2 * mass) == 1``, i.e. a unit charge scale.
    """

    hbar: float = 1.0
    mass: float = 0.5

    def __post_init__(self):
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise DomainError(f"hbar must be positive, got {self.hbar}")
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise DomainError(f"mass must be positive, got {self.mass}")

    @property
    def scale(self):
        """The charge-operator scale ``hbar / sqrt(2 m)``."""
        return self.hbar / math.sqrt(2.0 * self.mass)

    @property
    def kinetic_prefactor(self):
        """``hbar**2 / (2 m)``."""
        return self.hbar**2 / (2.0 * self.mass)

    @classmethod
    def wavenumber_bohr(cls, mass_au):
        """Units with energies in cm^-1 and lengths in bohr for a mass in electron masses."""
        return cls(hbar=1.0, mass=mass_au / HARTREE_TO_CM1)


def unit_convert(value, from_unit, to_unit):
    """Convert an energy between ``"hartree"`` and ``"cm-1"``."""
    try:
        factor = _TO_HARTREE[from_unit] / _TO_HARTREE[to_unit]
    except KeyError as exc:
        raise UnsupportedUnit(f"unsupported energy unit {exc.args[0]!r}") from None
    return value * factor
