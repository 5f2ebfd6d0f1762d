"""Basis-size convergence of directly computed and partner-computed excitation energies."""

import numpy as np

from .errors import DomainError
from .grid import RealField, make_grid, solve_potential
from .units import ModelUnits

#: log10 error reported when an energy matches its reference exactly.
LOG_ERROR_FLOOR = -16.0


def _log_error(value, reference):
    err = abs(value - reference)
    return LOG_ERROR_FLOOR if err == 0 else max(LOG_ERROR_FLOOR, float(np.log10(err)))


def convergence_study(V1, V2, n_values, n_reference=100, units=ModelUnits(), domain=(-5.0, 5.0)):
    """Errors of the first excitation of ``V1`` and the partner ground state of ``V2``.

    ``V1`` and ``V2`` are callables. The reference is the first excited energy
    of ``V1`` on an ``n_reference`` point grid over the same domain.

    Returns
    -------
    numpy.ndarray
        Structured array with fields ``n``, ``eps11``, ``eps02``, ``e11``, ``e02``
        where the ``eps`` columns are log10 absolute errors floored at -16.
    """
    n_values = [int(n) for n in n_values]
    if n_reference < max(n_values, default=0):
        raise DomainError("n_reference must be at least as large as every n in n_values")

    def energies(n):
        grid = make_grid(domain[0], domain[1], n)
        e11 = solve_potential(RealField(grid, V1(grid.points)), units, 2).energies[1]
        e02 = solve_potential(RealField(grid, V2(grid.points)), units, 1).energies[0]
        return e11, e02

    reference = energies(n_reference)[0]
    rows = []
    for n in n_values:
        e11, e02 = energies(n)
        rows.append((n, _log_error(e11, reference), _log_error(e02, reference), e11, e02))
    dtype = [("n", int), ("eps11", float), ("eps02", float), ("e11", float), ("e02", float)]
    return np.array(rows, dtype=dtype)
