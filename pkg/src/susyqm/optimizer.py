"""Adaptive Gaussian-mixture ground-state optimizer.

Trial points are moved along conjugate-gradient directions of the local energy
and the mixture is refit to the moved points by expectation maximization. The
refit is kept only if it lowers the deterministic energy; once it stops doing
so the mixture parameters themselves are relaxed by Polak-Ribiere conjugate
gradients on the same deterministic energy.
"""

import csv
from dataclasses import asdict, dataclass, field
import math
import warnings

import numpy as np
from scipy.optimize import line_search
from scipy.special import erf, logsumexp

from .errors import CollapsedComponent, DomainError, LineSearchFailure, MaxStepsExceeded, NodeCountError
from .mixture import (
    GaussianMixture,
    Quadrature,
    SampleEnsemble,
    energy_functional,
    local_energy,
    local_energy_gradient,
    quadrature_energy,
    quadrature_energy_and_gradient,
)
from .units import ModelUnits

MAX_BACKTRACKS = 40


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings of :func:`optimize_ground_state`.

    ``cg_step_size`` is the largest single-point displacement tried by a point
    move. ``point_phase_fraction`` caps the share of steps spent on point moves
    and EM refits before switching to parameter relaxation.
    """

    n_gaussians: int = 15
    n_points: int = 1000
    max_cg_steps: int = 1000
    energy_tolerance: float = 1e-10
    cg_step_size: float = 1e-2
    em_iterations: int = 3
    seed: int = 0
    restart_every: int = 20
    point_phase_fraction: float = 0.25
    quadrature_points: int = 1201
    patience: int = 10
    collapse_epsilon: float = 1e-3
    strict: bool = True

    def __post_init__(self):
        for name in ("n_gaussians", "n_points", "max_cg_steps", "em_iterations", "restart_every", "quadrature_points", "patience"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value}")
        if not self.energy_tolerance > 0 or not self.cg_step_size > 0 or not self.collapse_epsilon > 0:
            raise DomainError("tolerances and step sizes must be positive")
        if not 0 <= self.point_phase_fraction <= 1:
            raise DomainError("point_phase_fraction must lie in [0, 1]")
        if self.n_points < self.n_gaussians:
            raise DomainError("need at least as many points as gaussians")


@dataclass
class OptimizerTrace:
    """Per-step record of deterministic energy, mixture digest and node position."""

    steps: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    hashes: list = field(default_factory=list)
    nodes: list = field(default_factory=list)
    phases: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def record(self, energy, mixture, node=None, phase="points"):
        self.steps.append(len(self.steps))
        self.energies.append(float(energy))
        self.hashes.append(mixture.snapshot_hash())
        self.nodes.append(float("nan") if node is None else float(node))
        self.phases.append(phase)

    def __len__(self):
        return len(self.steps)

    def to_csv(self, path, energy_unit="cm-1", length_unit="bohr"):
        with open(path, "w", newline="") as fh:
            for key, value in sorted(self.config.items()):
                fh.write(f"# {key}={value}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["step", f"energy_{energy_unit}", f"node_{length_unit}", "phase", "mixture_hash"])
            for row in zip(self.steps, self.energies, self.nodes, self.phases, self.hashes):
                writer.writerow([row[0], repr(row[1]), repr(row[2]), row[3], row[4]])


def _mean_local_energy(V, m, points, weights, units):
    return float(np.dot(weights, local_energy(V, m, points, units)))


def cg_step(ensemble, m, V, units=ModelUnits(), step_config=OptimizerConfig(), domain=None, restart=False):
    """Move the points one Polak-Ribiere step downhill in the mean local energy.

    The trial step is scaled so that the largest point displacement equals
    ``step_config.cg_step_size`` and is halved until the ensemble energy does not
    increase. Raises :class:`LineSearchFailure` after 40 halvings.
    """
    x, w = ensemble.points, ensemble.weights
    grad = w * local_energy_gradient(V, m, x, units)
    state = ensemble.cg_state or {}
    scale = max(1.0, abs(energy_functional(V, m, ensemble, units)))
    if np.max(np.abs(grad / w)) <= 1e-9 * scale:
        return SampleEnsemble(x, w, {"grad": grad, "dir": np.zeros_like(grad), "k": 0})
    direction = -grad
    k = state.get("k", 0)
    if not restart and "grad" in state and k % step_config.restart_every != 0:
        g_old = state["grad"]
        beta = max(0.0, float(np.dot(grad, grad - g_old) / np.dot(g_old, g_old))) if np.any(g_old) else 0.0
        direction = -grad + beta * state["dir"]
        if np.dot(direction, grad) >= 0:
            direction = -grad
    e0 = float(np.dot(w, local_energy(V, m, x, units)))
    alpha = step_config.cg_step_size / np.max(np.abs(direction))
    for _ in range(MAX_BACKTRACKS):
        trial = x + alpha * direction
        inside = domain is None or np.all((trial >= domain[0]) & (trial <= domain[1]))
        if inside:
            e1 = _mean_local_energy(V, m, trial, w, units)
            if e1 <= e0:
                return SampleEnsemble(trial, w, {"grad": grad, "dir": direction, "k": k + 1})
        alpha *= 0.5
    raise LineSearchFailure("no non-increasing step found after 40 backtracks")


def _em_log_terms(points, mixture):
    u = points[:, None] - mixture.c3
    log_w = np.log(mixture.weights / mixture.integral())
    return log_w + 0.5 * np.log(mixture.c2 / np.pi) - mixture.c2 * u**2


def mixture_log_likelihood(points, mixture, weights=None):
    """Weighted mean log-likelihood of the points under the normalized mixture."""
    points = np.asarray(points, dtype=float)
    weights = np.full(points.size, 1.0 / points.size) if weights is None else np.asarray(weights)
    return float(np.dot(weights, logsumexp(_em_log_terms(points, mixture), axis=1)))


def _widest_gap_center(points):
    xs = np.sort(points)
    i = int(np.argmax(np.diff(xs)))
    return 0.5 * (xs[i] + xs[i + 1]), xs[i + 1] - xs[i]


def em_refit(ensemble, N, previous, iterations=3, collapse_epsilon=1e-3, history=None):
    """Expectation-maximization refit of an ``N``-component mixture to the points.

    Starts from ``previous`` and returns a mixture normalized to unit integral.
    When ``history`` is a list, the log-likelihood before each round and after
    the last one is appended to it.

    Raises
    ------
    CollapsedComponent
        If a component's inverse width exceeds ``1 / (collapse_epsilon * h)**2``
        with ``h`` the mean point spacing, or it loses all its points. The
        exception's ``reseeded`` attribute holds a mixture with that component
        moved to the widest gap between points.
    """
    x, wts = ensemble.points, ensemble.weights
    if x.size < N:
        raise DomainError(f"need at least {N} points for {N} components, got {x.size}")
    if previous.n_components != N:
        raise DomainError("previous mixture has the wrong number of components")
    h = (x.max() - x.min()) / max(x.size - 1, 1) or 1.0
    c2_max = 1.0 / (collapse_epsilon * h) ** 2
    mix = previous.normalize()
    for _ in range(iterations):
        log_terms = _em_log_terms(x, mix)
        log_norm = logsumexp(log_terms, axis=1)
        if history is not None:
            history.append(float(np.dot(wts, log_norm)))
        R = np.exp(log_terms - log_norm[:, None]) * wts[:, None]
        nk = R.sum(axis=0)
        dead = nk <= 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            mu = (R * x[:, None]).sum(axis=0) / nk
            var = (R * (x[:, None] - mu) ** 2).sum(axis=0) / nk
            c2 = 0.5 / var
        bad = dead | ~np.isfinite(c2) | (c2 > c2_max)
        if np.any(bad):
            j = int(np.flatnonzero(bad)[0])
            centre, gap = _widest_gap_center(x)
            c0 = mix.c0.copy()
            cc2, cc3 = mix.c2.copy(), mix.c3.copy()
            cc3[j] = centre
            cc2[j] = 0.5 / max(gap, h) ** 2
            exc = CollapsedComponent(f"component {j} collapsed during EM")
            exc.reseeded = GaussianMixture(c0, cc2, cc3).normalize()
            raise exc
        mix = GaussianMixture(nk * np.sqrt(c2 / np.pi), c2, mu)
    if history is not None:
        history.append(mixture_log_likelihood(x, mix, wts))
    return mix.normalize()


def mixture_quantiles(m, n, domain):
    """``n`` points at the mid-quantiles of the mixture's cumulative distribution."""
    grid = np.linspace(domain[0], domain[1], 20001)
    w = m.weights
    cdf = (w * 0.5 * (1.0 + erf(np.sqrt(m.c2) * (grid[:, None] - m.c3)))).sum(axis=1)
    cdf = (cdf - cdf[0]) / (cdf[-1] - cdf[0])
    return np.interp((np.arange(n) + 0.5) / n, cdf, grid)


def initial_mixture(V, N, domain, units=ModelUnits(), quad=None):
    """Equal-amplitude components spread over the classically allowed region.

    The region is taken at ``E + (E - min V)`` where ``E`` is the energy of the
    best single gaussian, so that it also covers the tunnelling tails.
    """
    quad = quad or Quadrature(domain[0], domain[1])
    xq = quad.points
    Vx = V(xq)
    x_min = xq[int(np.argmin(Vx))]
    span = domain[1] - domain[0]
    best = min(
        quadrature_energy(V, GaussianMixture([1.0], [0.5 / width**2], [centre]), quad, units, Vx)
        for width in span * np.logspace(-3, 0, 31)
        for centre in (x_min, -x_min)
    )
    mask = Vx <= 2.0 * best - Vx.min()
    allowed = xq[mask] if np.count_nonzero(mask) >= 2 else xq[np.argsort(Vx)[:2]]
    centres = np.quantile(allowed, (np.arange(N) + 0.5) / N)
    sigma = max(allowed.size * quad.spacing / N, 2 * quad.spacing)
    return GaussianMixture(np.ones(N), np.full(N, 0.5 / sigma**2), centres).normalize()


@dataclass
class _ParameterCG:
    """Polak-Ribiere conjugate gradients with periodic restarts on the mixture parameters."""

    V: object
    quad: Quadrature
    units: ModelUnits
    restart_every: int
    Vx: np.ndarray = None

    def __post_init__(self):
        self.Vx = self.V(self.quad.points)
        self.grad = None
        self.dir = None
        self.previous = None
        self.k = 0

    def fg(self, p):
        with np.errstate(all="ignore"):
            e, g = quadrature_energy_and_gradient(self.V, p, self.quad, self.units, self.Vx)
        if not (np.isfinite(e) and np.all(np.isfinite(g))):
            return np.inf, np.zeros_like(p)
        return e, g

    def step(self, p):
        """One CG iteration; returns the new parameters and energy or raises LineSearchFailure."""
        e_now, g = self.fg(p)
        restart = self.grad is None or self.k % self.restart_every == 0
        if restart:
            d = -g
        else:
            beta = max(0.0, float(np.dot(g, g - self.grad) / np.dot(self.grad, self.grad)))
            d = -g + beta * self.dir
            if np.dot(d, g) >= 0:
                d, restart = -g, True
        # first trial step of unit length after a restart, else from the last decrease
        previous = e_now + 0.5 * np.linalg.norm(g) if restart or self.previous is None else self.previous
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            alpha = line_search(
                lambda q: self.fg(q)[0], lambda q: self.fg(q)[1], p, d, g, e_now, previous,
                c2=0.4, amax=2.0 / max(float(np.max(np.abs(d))), 1e-300), maxiter=30,
            )[0]
        if alpha is None:
            d = -g
            alpha = self._backtrack(p, d, g, e_now)
        p_new = p + alpha * d
        e_new = self.fg(p_new)[0]
        if not e_new <= e_now:
            raise LineSearchFailure("parameter line search could not lower the energy")
        self.grad, self.dir, self.previous, self.k = g, d, e_now, self.k + 1
        return p_new, e_new

    def _backtrack(self, p, d, g, e_now):
        alpha = 1.0 / max(1.0, float(np.max(np.abs(d))))
        slope = float(np.dot(g, d))
        for _ in range(MAX_BACKTRACKS):
            if self.fg(p + alpha * d)[0] <= e_now + 1e-4 * alpha * slope:
                return alpha
            alpha *= 0.5
        raise LineSearchFailure("parameter line search failed after 40 backtracks")


def optimize_ground_state(V, domain, config=OptimizerConfig(), units=ModelUnits(), initial=None, monitor=None):
    """Minimize the trial-density energy of ``V`` on ``domain``.

    Parameters
    ----------
    V : callable
        Potential with a ``derivative`` method.
    domain : tuple of float
        Interval holding the trial points and the deterministic quadrature.
    config : OptimizerConfig
    units : ModelUnits
    initial : GaussianMixture, optional
        Starting mixture; by default components are spread over the classically
        allowed region.
    monitor : callable, optional
        ``monitor(mixture)`` returning a value (e.g. a node position) stored in
        the trace at every step.

    Returns
    -------
    mixture : GaussianMixture
    energy : float
        Deterministic energy of the returned mixture.
    trace : OptimizerTrace

    Raises
    ------
    MaxStepsExceeded
        When ``config.strict`` is set and the energy did not settle within
        ``max_cg_steps``. ``result`` holds ``(mixture, energy, trace)``.
    """
    domain = (float(domain[0]), float(domain[1]))
    if not domain[0] < domain[1]:
        raise DomainError("domain must be an increasing interval")
    quad = Quadrature(domain[0], domain[1], config.quadrature_points)
    Vx = V(quad.points)
    N = config.n_gaussians
    mix = initial if initial is not None else initial_mixture(V, N, domain, units, quad)
    if mix.n_components != N:
        raise DomainError("initial mixture has the wrong number of components")
    mix = mix.normalize()
    energy = quadrature_energy(V, mix, quad, units, Vx)

    trace = OptimizerTrace(config={k: v for k, v in asdict(config).items()})
    rng = np.random.default_rng(config.seed)

    def record(phase):
        trace.record(energy, mix, monitor(mix) if monitor is not None else None, phase)

    record("init")
    calm = 0
    converged = False

    def settle(delta):
        nonlocal calm, converged
        calm = calm + 1 if abs(delta) < config.energy_tolerance else 0
        converged = calm >= config.patience

    points = mixture_quantiles(mix, config.n_points, domain)
    jitter = 1e-3 * (domain[1] - domain[0]) / config.n_points
    points = np.clip(points + jitter * rng.standard_normal(points.size), domain[0], domain[1])
    ensemble = SampleEnsemble(points)
    point_steps = int(config.point_phase_fraction * config.max_cg_steps)
    steps = 0
    while steps < point_steps and not converged:
        try:
            ensemble = cg_step(ensemble, mix, V, units, config, domain)
            candidate = em_refit(ensemble, N, mix, config.em_iterations, config.collapse_epsilon)
        except (LineSearchFailure, CollapsedComponent):
            break
        e_new = quadrature_energy(V, candidate, quad, units, Vx)
        if not e_new < energy:
            break
        steps += 1
        settle(e_new - energy)
        mix, energy = candidate, e_new
        record("points")

    relax = _ParameterCG(V, quad, units, config.restart_every)
    params = mix.to_params()
    while steps < config.max_cg_steps and not converged:
        try:
            params, e_new = relax.step(params)
        except LineSearchFailure:
            converged = True
            break
        steps += 1
        settle(e_new - energy)
        mix, energy = GaussianMixture.from_params(params).normalize(), e_new
        record("parameters")

    if not converged and config.strict:
        raise MaxStepsExceeded((mix, energy, trace), f"energy not settled after {config.max_cg_steps} steps")
    return mix, energy, trace


def locate_node(psi1):
    """Position of the single sign change of a sampled state, by linear interpolation."""
    x = psi1.grid.points
    v = np.real(psi1.values)
    nz = np.flatnonzero(v != 0)
    exact_zero = np.flatnonzero(v == 0)
    signs = np.sign(v[nz])
    flips = np.flatnonzero(signs[:-1] != signs[1:])
    if flips.size != 1:
        raise NodeCountError(int(flips.size))
    i, j = nz[flips[0]], nz[flips[0] + 1]
    zeros_between = exact_zero[(exact_zero > i) & (exact_zero < j)]
    if zeros_between.size:
        return float(np.mean(x[zeros_between]))
    return float(x[i] - v[i] * (x[j] - x[i]) / (v[j] - v[i]))
