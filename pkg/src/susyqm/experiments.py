"""Experiment runners behind the command line interface.

Each runner takes a validated configuration dictionary and returns an
:class:`ExperimentResult` holding CSV tables, optimizer traces and a JSON
report. Nothing here touches the file system.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .convergence import convergence_study
from .errors import ConfigError, NodeCountError
from .grid import ComplexField, RealField, make_grid, solve_potential
from .mixture import MixturePartnerPotential, log_derivatives
from .multidim import (
    Field2D,
    eigensolve_2d,
    make_grid_2d,
    most_nodeless_combination,
    descend_state,
    subspace_overlap,
    tensor_ground_state,
    tensor_sector_hamiltonian,
    vector_superpotential,
)
from .optimizer import OptimizerConfig, locate_node, optimize_ground_state
from .potentials import named_potential, named_superpotential, partner_pair
from .propagation import PropagationConfig, exact_intertwining_error, intertwining_residual
from .scattering import partner_amplitudes, solve_scattering
from .susy import SuperPotential, build_hierarchy, semiclassical_splitting
from .units import HYDROGEN_MASS_AU, ModelUnits

#: Reported double-well splitting and the window accepted around it (cm^-1).
REFERENCE_SPLITTING_CM1 = 59.32
SPLITTING_WINDOW_CM1 = 0.1


@dataclass
class Table:
    """Rows under ``(name, unit)`` column headers."""

    columns: list
    rows: list

    @property
    def header(self):
        return [f"{name} [{unit}]" for name, unit in self.columns]


@dataclass
class ExperimentResult:
    report: dict
    tables: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)


def build_units(spec):
    spec = spec or {}
    if spec.get("wavenumbers", False):
        return ModelUnits.wavenumber_bohr(spec.get("mass", HYDROGEN_MASS_AU))
    return ModelUnits(hbar=spec.get("hbar", 1.0), mass=spec.get("mass", 0.5))


def build_grid(spec, default):
    spec = {**default, **(spec or {})}
    return make_grid(spec["x_min"], spec["x_max"], spec["n"])


def build_potential(spec, default_name):
    spec = spec or {}
    return named_potential(spec.get("name", default_name), **spec.get("coefficients", {}))


def build_superpotential(spec, default_name):
    spec = spec or {}
    return named_superpotential(spec.get("name", default_name), **spec.get("coefficients", {}))


def build_optimizer_config(spec, seed=None):
    spec = dict(spec or {})
    if seed is not None:
        spec["seed"] = seed
    spec.setdefault("strict", False)
    try:
        return OptimizerConfig(**spec)
    except TypeError as exc:
        raise ConfigError(f"bad optimizer settings: {exc}") from None


# convergence


def run_convergence(cfg):
    params = cfg.get("parameters", {})
    units = build_units(cfg.get("units"))
    V1 = build_potential(cfg.get("potential"), "sextic")
    V2 = build_potential(params.get("partner"), "sextic_partner")
    grid = {"x_min": -5.0, "x_max": 5.0, **cfg.get("grid", {})}
    n_values = params.get("n_values", list(range(15, 41)))
    table = convergence_study(V1, V2, n_values, params.get("n_reference", 100), units, (grid["x_min"], grid["x_max"]))
    ratios = 10.0 ** (table["eps11"] - table["eps02"])
    rows = [[int(r["n"]), float(r["eps11"]), float(r["eps02"]), float(r["e11"]), float(r["e02"])] for r in table]
    report = {
        "partner_always_better": bool(np.all(table["eps02"] < table["eps11"])),
        "median_error_ratio": float(np.median(ratios)),
        "min_error_ratio": float(ratios.min()),
        "max_error_ratio": float(ratios.max()),
    }
    columns = [("n", "points"), ("eps11", "log10 energy"), ("eps02", "log10 energy"), ("e11", "energy"), ("e02", "energy")]
    return ExperimentResult(report, {"convergence": Table(columns, rows)})


# double well


def doublewell_levels(V, grid, units, k=2):
    """Lowest ``k`` DVR energies of ``V`` on ``grid``."""
    return solve_potential(V.on(grid), units, k)


def harmonic_well_gaussian(V, units):
    """Normalized gaussian fitted to the curvature of the right-hand well of ``a x^4 - b x^2 + c``.

    Returns ``None`` for any other shape.
    """
    c = getattr(V, "coeffs", ())
    if len(c) != 5 or c[1] != 0 or c[3] != 0 or not (c[4] > 0 and c[2] < 0):
        return None
    a, b = c[4], -c[2]
    x0 = math.sqrt(b / (2 * a))
    curvature = float(np.polynomial.polynomial.polyval(x0, np.polynomial.polynomial.polyder(V.coeffs, 2)))
    beta = math.sqrt(curvature / 8.0) / units.scale
    norm = (2 * beta / math.pi) ** 0.25
    return (lambda x: norm * np.exp(-beta * (np.asarray(x) - x0) ** 2)), beta, x0


def excited_node(m1, m2, window, n=2001):
    """Node of ``A^+ sqrt(rho2)``, which changes sign where ``(ln rho1)' + (ln rho2)'`` does."""
    x = np.linspace(window[0], window[1], n)
    f = log_derivatives(m1, x, 1)[1] + log_derivatives(m2, x, 1)[1]
    return locate_node(RealField(make_grid(window[0], window[1], n), f))


@dataclass
class DoubleWellRun:
    e0_dvr: float
    e1_dvr: float
    sector1: tuple
    sector2: tuple
    node: float

    @property
    def splitting_dvr(self):
        return self.e1_dvr - self.e0_dvr

    @property
    def splitting(self):
        return self.sector2[1] - self.sector1[1]

    @property
    def relative_error(self):
        return abs(self.splitting - self.splitting_dvr) / self.splitting_dvr


def doublewell_pipeline(V, units, domain, config, dvr_grid, node_window=None):
    """Sector-1 mixture, partner potential from it, sector-2 mixture and the node of the excited state."""
    levels = doublewell_levels(V, dvr_grid, units)
    m1, e1, t1 = optimize_ground_state(V, domain, config, units)
    V2 = MixturePartnerPotential(V, m1, units)
    if node_window is None:
        node_window = (0.5 * domain[0], 0.5 * domain[1])

    def monitor(m2):
        try:
            return excited_node(m1, m2, node_window)
        except NodeCountError:
            return float("nan")

    m2, e2, t2 = optimize_ground_state(V2, domain, config, units, monitor=monitor)
    node = monitor(m2)
    return DoubleWellRun(float(levels.energies[0]), float(levels.energies[1]), (m1, e1, t1), (m2, e2, t2), node)


def _finite(value):
    return None if value is None or not math.isfinite(value) else float(value)


def run_double_well(cfg):
    params = cfg.get("parameters", {})
    units = build_units({"wavenumbers": True, **cfg.get("units", {})})
    V = build_potential(cfg.get("potential"), "double_well")
    grid = build_grid(cfg.get("grid"), {"x_min": -3.0, "x_max": 3.0, "n": 301})
    levels = doublewell_levels(V, grid, units)
    splitting = float(levels.energies[1] - levels.energies[0])
    well = harmonic_well_gaussian(V, units)
    in_window = abs(splitting - REFERENCE_SPLITTING_CM1) <= SPLITTING_WINDOW_CM1
    report = {
        "potential": "a x^4 - b x^2 + e0",
        "e0_cm1": float(levels.energies[0]),
        "e1_cm1": float(levels.energies[1]),
        "splitting_cm1": splitting,
        "reference_splitting_cm1": REFERENCE_SPLITTING_CM1,
        "splitting_within_window": bool(in_window),
    }
    if well is not None:
        phi, beta, x0 = well
        report["semiclassical_splitting_cm1"] = float(semiclassical_splitting(phi, units))
        report["well_gaussian"] = {"beta": beta, "x0": x0}
    if not in_window:
        report["flag"] = "splitting outside the reference window; the quartic sign convention a x^4 + b x^2 would give a single well"
    tables = {}
    traces = {}
    if params.get("pipeline", True):
        domain = tuple(params.get("domain", [grid.x_min, grid.x_max]))
        config = build_optimizer_config(cfg.get("optimizer"), cfg.get("seed"))
        run = doublewell_pipeline(V, units, domain, config, grid)
        m1, e1, t1 = run.sector1
        m2, e2, t2 = run.sector2
        report.update(
            {
                "mixture_e0_cm1": float(e1),
                "mixture_sector2_e0_cm1": float(e2),
                "mixture_splitting_cm1": float(run.splitting),
                "mixture_relative_error": float(run.relative_error),
                "sector1_steps": len(t1) - 1,
                "sector2_steps": len(t2) - 1,
                "final_node_bohr": _finite(run.node),
            }
        )
        traces = {"sector1_trace": t1, "sector2_trace": t2}
        x = grid.points
        V2 = MixturePartnerPotential(V, m1, units)
        rows = [[float(a), float(b), float(c), float(d), float(e)] for a, b, c, d, e in zip(x, V(x), V2(x), m1(x), m2(x))]
        tables["potentials"] = Table([("x", "bohr"), ("v1", "cm-1"), ("v2", "cm-1"), ("rho1", "1/bohr"), ("rho2", "1/bohr")], rows)
    tolerances = {"splitting_window_cm1": SPLITTING_WINDOW_CM1, "residual_tol": 1e-8}
    return ExperimentResult(report, tables, traces, tolerances)


# scattering


def run_scatter(cfg):
    params = cfg.get("parameters", {})
    units = build_units(cfg.get("units"))
    Wf = build_superpotential(cfg.get("superpotential"), "kink")
    grid = build_grid(cfg.get("grid"), {"x_min": -20.0, "x_max": 20.0, "n": 4001})
    W = SuperPotential(grid, Wf(grid.points), units)
    V1, V2 = partner_pair(Wf, grid, units)
    floor = max(W.w_minus**2, W.w_plus**2)
    energies = params.get("energies", list(np.linspace(floor + 0.1, floor + 4.0, 20)))
    rows = []
    worst = {"modulus": 0.0, "mapping": 0.0, "flux": 0.0}
    for E in energies:
        s1 = solve_scattering(V1, E, units)
        s2 = solve_scattering(V2, E, units)
        mapped = partner_amplitudes(s2, W)
        worst["modulus"] = max(worst["modulus"], abs(abs(s1.R) - abs(s2.R)), abs(abs(s1.T) - abs(s2.T)))
        worst["mapping"] = max(worst["mapping"], abs(mapped.R - s1.R), abs(mapped.T - s1.T))
        worst["flux"] = max(worst["flux"], abs(s1.flux_defect()), abs(s2.flux_defect()))
        rows.append([float(E), s1.reflection, s1.transmission, s2.reflection, s2.transmission])
    report = {
        "w_minus": W.w_minus,
        "w_plus": W.w_plus,
        "max_modulus_difference": worst["modulus"],
        "max_mapping_difference": worst["mapping"],
        "max_flux_defect": worst["flux"],
    }
    columns = [("energy", "energy"), ("R1_sq", "1"), ("T1_sq", "1"), ("R2_sq", "1"), ("T2_sq", "1")]
    return ExperimentResult(report, {"scatter": Table(columns, rows)}, tolerances={"partner": 1e-5, "flux": 1e-6})


# tensor sector


def coupled_oscillator(coupling=0.0):
    return lambda x, y: x * x + y * y + coupling * x * x * y * y


def tensor_study(grid, V, units=ModelUnits(), n_levels=4, density_floor=1e-10):
    """Tensor-sector gap, nodeless combination and descent against a direct 2D solve."""
    energies, states = eigensolve_2d(grid, V, n_levels, units)
    psi0 = states[0]
    W = vector_superpotential(psi0, units, floor=density_floor * np.abs(psi0.values).max())
    op = tensor_sector_hamiltonian(W, units)
    spectrum = tensor_ground_state(op, k=1)
    gap = float(energies[1] - energies[0])
    excited = [s for e, s in zip(energies[1:], states[1:]) if abs(e - energies[1]) <= 1e-6 * max(1.0, abs(energies[1]))]
    best = most_nodeless_combination(spectrum.states)
    support = psi0.values**2 > density_floor * np.max(psi0.values**2)
    mag = best.magnitude()
    overlaps = [subspace_overlap(descend_state(v, spectrum.energies[0], W, units), excited) for v in spectrum.states]
    return {
        "dvr_energies": [float(e) for e in energies],
        "dvr_gap": gap,
        "tensor_energies": [float(e) for e in spectrum.energies],
        "gap_error": float(spectrum.energies[0] - gap),
        "degeneracy": len(spectrum.states),
        "min_relative_magnitude_on_support": float(mag[support].min() / mag.max()),
        "min_descent_overlap": float(min(overlaps)),
    }


def run_tensor2d(cfg):
    params = cfg.get("parameters", {})
    units = build_units(cfg.get("units"))
    spec = {"x_min": -6.0, "x_max": 6.0, "n": 60, **cfg.get("grid", {})}
    grid = make_grid_2d(spec["x_min"], spec["x_max"], spec["n"])
    V = Field2D.from_function(grid, coupled_oscillator(params.get("coupling", 0.0)))
    report = tensor_study(grid, V, units)
    rows = [[i, e] for i, e in enumerate(report["tensor_energies"])]
    return ExperimentResult(report, {"tensor_spectrum": Table([("index", "1"), ("energy", "energy")], rows)}, tolerances={"gap": 1e-4})


# propagation


def coherent_state(grid, center, width=1.0):
    x = grid.points
    psi = np.exp(-((x - center) ** 2) / (2 * width**2)).astype(complex)
    return ComplexField(grid, psi / math.sqrt(np.sum(np.abs(psi) ** 2) * grid.spacing))


def run_propagate(cfg):
    params = cfg.get("parameters", {})
    units = build_units(cfg.get("units"))
    Wf = build_superpotential(cfg.get("superpotential"), "linear")
    grid = build_grid(cfg.get("grid"), {"x_min": -8.0, "x_max": 8.0, "n": 80})
    W = SuperPotential(grid, Wf(grid.points), units)
    psi0 = coherent_state(grid, params.get("center", 1.5), params.get("width", 1.0))
    t_final = params.get("t_final", 1.0)
    scheme = params.get("scheme", "split-operator")
    dts = params.get("dt_values", [2e-3, 1e-3, 5e-4])
    rows = []
    for dt in dts:
        rows.append([float(dt), intertwining_residual(psi0, W, t_final, PropagationConfig(dt, 1, scheme))])
    residuals = [r[1] for r in rows]
    ratios = [a / b for a, b in zip(residuals, residuals[1:]) if b > 0]
    report = {
        "scheme": scheme,
        "t_final": t_final,
        "exact_identity_error": exact_intertwining_error(W, t_final),
        "residuals": residuals,
        "halving_ratios": ratios,
    }
    return ExperimentResult(report, {"intertwining": Table([("dt", "time"), ("residual", "1")], rows)}, tolerances={"exact": 1e-12})


# hierarchy


def run_hierarchy(cfg):
    params = cfg.get("parameters", {})
    units = build_units(cfg.get("units"))
    V = build_potential(cfg.get("potential"), "sextic")
    grid = build_grid(cfg.get("grid"), {"x_min": -4.0, "x_max": 4.0, "n": 241})
    n_sectors = params.get("n_sectors", 3)
    field_ = V.on(grid)
    hierarchy = build_hierarchy(field_, units, n_sectors)
    direct = solve_potential(field_, units, n_sectors).energies
    rows = [[m + 1, float(o), float(d), float(o - d)] for m, (o, d) in enumerate(zip(hierarchy.cumulative_offsets, direct))]
    report = {
        "offsets": [float(o) for o in hierarchy.cumulative_offsets],
        "direct_energies": [float(d) for d in direct],
        "max_offset_error": float(np.max(np.abs(hierarchy.cumulative_offsets - direct))),
    }
    return ExperimentResult(report, {"hierarchy": Table([("sector", "1"), ("offset", "energy"), ("direct", "energy"), ("difference", "energy")], rows)}, tolerances={"offset": 1e-7})


RUNNERS = {
    "convergence": run_convergence,
    "double-well": run_double_well,
    "scatter": run_scatter,
    "tensor2d": run_tensor2d,
    "propagate": run_propagate,
    "hierarchy": run_hierarchy,
}
