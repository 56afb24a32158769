"""Strang splitting solver for the full beam equation, valid in mixed regimes.

Each step is kick / exact linear flow / kick: the adhesive force is applied
pointwise on the collocation grid and projected onto the modes, while the
biharmonic part is integrated exactly mode by mode.  With the force switched
off (fully detached fields) the scheme is exact for any step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .basis import ModalCoefficients, SpectralBasis, second_derivative, synthesize
from .beam import BeamParams, EnergyReport, FieldState, adhesion_force
from .errors import BlowUpError, ConfigError, PreconditionError
from .fields import InitialData, energy_from_modal


class Regime(str, Enum):
    ATTACHED = "attached"
    DETACHED = "detached"
    MIXED = "mixed"


class Direction(str, Enum):
    DEBOND = "debond"
    REBOND = "rebond"


def detect_regime(state: FieldState, tolerance: float = 0.0) -> Regime:
    if tolerance < 0:
        raise PreconditionError("tolerance must be nonnegative")
    au = np.abs(state.displacement)
    if au.max() < 1.0 - tolerance:
        return Regime.ATTACHED
    if au.min() > 1.0 + tolerance:
        return Regime.DETACHED
    return Regime.MIXED


def default_dt(params: BeamParams, basis: SpectralBasis) -> float:
    """min(1e-3, 0.1 / nu_N) with nu_N the fastest retained bending frequency."""
    nu_max = params.kappa1 * basis.lambdas[-1] ** 2
    return 1e-3 if nu_max == 0 else min(1e-3, 0.1 / nu_max)


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t_final: float
    crossing_refinement: bool = True
    snapshot_stride: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be positive, got {self.dt!r}")
        if not (np.isfinite(self.t_final) and self.t_final > 0):
            raise ConfigError(f"t_final must be positive, got {self.t_final!r}")
        if self.dt > self.t_final:
            raise ConfigError(f"dt ({self.dt}) must not exceed t_final ({self.t_final})")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ConfigError(f"snapshot_stride must be an integer >= 1, got {self.snapshot_stride!r}")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t_final / self.dt - 1e-9))


@dataclass(frozen=True)
class SimState:
    field: FieldState
    modal: ModalCoefficients
    step_index: int = 0

    @classmethod
    def from_modal(cls, modal: ModalCoefficients, basis: SpectralBasis, step_index: int = 0) -> "SimState":
        return cls(synthesize(modal, basis), modal, step_index)

    @property
    def time(self) -> float:
        return self.field.time


@dataclass(frozen=True)
class CrossingEvent:
    time: float
    direction: Direction
    grid_indices: tuple
    refined: bool

    @property
    def n_points(self) -> int:
        return len(self.grid_indices)


@dataclass
class Trajectory:
    snapshots: list
    events: list
    energies: list
    config: StepperConfig | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def fields(self) -> list:
        return [s.field for s in self.snapshots]


class _Splitter:
    """Array-level kick/flow/kick stepping with cached rotation factors."""

    def __init__(self, params: BeamParams, basis: SpectralBasis):
        self.params = params
        self.basis = basis
        self.law = params.law
        self.nu = params.kappa1 * basis.lambdas ** 2
        self._cache = {}

    def _rotation(self, dt):
        rot = self._cache.get(dt)
        if rot is None:
            nu = self.nu
            c = np.cos(nu * dt)
            s = np.sin(nu * dt)
            s_over_nu = np.empty_like(nu)
            s_over_nu[0] = dt
            s_over_nu[1:] = s[1:] / nu[1:]
            rot = (c, s_over_nu, -nu * s)
            if len(self._cache) < 8:
                self._cache[dt] = rot
        return rot

    def force(self, u):
        return self.basis.project(adhesion_force(u, self.law))

    def step(self, alphas, alpha_dots, force, dt):
        c, s_over_nu, minus_nu_s = self._rotation(dt)
        adot = alpha_dots - 0.5 * dt * force
        a_new = c * alphas + s_over_nu * adot
        adot_new = minus_nu_s * alphas + c * adot
        u_new = self.basis.to_grid(a_new)
        f_new = self.force(u_new)
        adot_new -= 0.5 * dt * f_new
        return a_new, adot_new, u_new, f_new


def splitting_step(state: SimState, params: BeamParams, basis: SpectralBasis, dt: float) -> SimState:
    """Advance one symmetric kick / linear-flow / kick step of size dt.

    Raises:
        BlowUpError: if the new state contains non-finite values.
    """
    splitter = _Splitter(params, basis)
    modal = state.modal
    force = splitter.force(basis.to_grid(modal.alphas))
    a, b, _, _ = splitter.step(modal.alphas, modal.alpha_dots, force, dt)
    step_index = state.step_index + 1
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise BlowUpError(step_index)
    return SimState.from_modal(ModalCoefficients(a, b, state.time + dt), basis, step_index)


def _refine_crossing(splitter, alphas, alpha_dots, force, h, indices, was_detached, iterations=48):
    """Bisect the sub-step length at which any of ``indices`` first changes regime."""

    def changed(tau):
        _, _, u, _ = splitter.step(alphas, alpha_dots, force, tau)
        return np.any((np.abs(u[indices]) > 1.0) != was_detached)

    lo, hi = 0.0, h
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if changed(mid):
            hi = mid
        else:
            lo = mid
    return hi


def integrate(
    init: InitialData,
    params: BeamParams,
    basis: SpectralBasis,
    cfg: StepperConfig,
    *,
    on_snapshot: Callable[[SimState], None] | None = None,
) -> Trajectory:
    """Run the splitting scheme from ``init`` up to ``cfg.t_final``.

    Snapshots (with energy reports) are kept every ``cfg.snapshot_stride``
    steps and at the final time.  Grid points whose |u| moves across 1 during
    a step are grouped into one :class:`CrossingEvent` per direction.
    """
    splitter = _Splitter(params, basis)
    start = init.modal(basis)
    alphas = start.alphas.copy()
    alpha_dots = start.alpha_dots.copy()
    u = basis.to_grid(alphas)
    force = splitter.force(u)
    detached = np.abs(u) > 1.0

    snapshots, energies, events = [], [], []

    def record(t, k):
        modal = ModalCoefficients(alphas.copy(), alpha_dots.copy(), t)
        snap = SimState(FieldState(t, u.copy(), basis.to_grid(alpha_dots), basis.collocation), modal, k)
        snapshots.append(snap)
        energies.append(energy_from_modal(alphas, alpha_dots, u, params, basis))
        if on_snapshot is not None:
            on_snapshot(snap)

    record(0.0, 0)
    n_steps = cfg.n_steps
    t_prev = 0.0
    for k in range(1, n_steps + 1):
        t_new = cfg.t_final if k == n_steps else k * cfg.dt
        h = t_new - t_prev
        a_new, ad_new, u_new, f_new = splitter.step(alphas, alpha_dots, force, h)
        if not (np.all(np.isfinite(a_new)) and np.all(np.isfinite(ad_new))):
            raise BlowUpError(k)
        det_new = np.abs(u_new) > 1.0
        flipped = det_new != detached
        if flipped.any():
            for direction, mask in ((Direction.DEBOND, flipped & det_new), (Direction.REBOND, flipped & ~det_new)):
                idx = np.flatnonzero(mask)
                if idx.size == 0:
                    continue
                t_event = t_new
                if cfg.crossing_refinement:
                    was = direction is Direction.REBOND
                    t_event = t_prev + _refine_crossing(splitter, alphas, alpha_dots, force, h, idx, was)
                events.append(CrossingEvent(float(t_event), direction, tuple(int(i) for i in idx), cfg.crossing_refinement))
        alphas, alpha_dots, u, force, detached = a_new, ad_new, u_new, f_new, det_new
        t_prev = t_new
        if k % cfg.snapshot_stride == 0 or k == n_steps:
            record(t_new, k)
    return Trajectory(snapshots, events, energies, cfg)


@dataclass(frozen=True)
class TestFunction:
    """Space-time test function with the derivatives the weak form needs.

    Each callable takes ``(t, x)`` arrays that broadcast together.
    ``support_end`` bounds the time support: the function vanishes for
    t >= support_end.
    """

    __test__ = False  # not a pytest class

    value: Callable
    d_t: Callable
    d_tt: Callable
    d_xx: Callable
    support_end: float


def bump_test_function(length: float, support_end: float, mode: int = 0,
                       cubic_weight: float = 0.0, slope: float = 1.0) -> TestFunction:
    """Smooth separable test function chi(t) psi(x).

    chi(t) = exp(1 - 1/(1 - (t/T)**2)) (1 + slope t) on |t| < T, zero outside.
    psi(x) = cos(mode pi x / L) + cubic_weight x**2 (3L - 2x) / L**3, which has
    zero slope at both ends.
    """
    T, L = float(support_end), float(length)
    k = mode * np.pi / L

    def bump(t):
        s = np.asarray(t, dtype=float) / T
        inside = np.abs(s) < 1
        q = np.where(inside, 1 - s ** 2, 1.0)
        b = np.where(inside, np.exp(1 - 1 / q), 0.0)
        g1 = -2 * s / q ** 2
        g2 = -2 / q ** 2 - 8 * s ** 2 / q ** 3
        return b, b * g1 / T, b * (g1 ** 2 + g2) / T ** 2

    def chi(t):
        b, b1, b2 = bump(t)
        lin = 1 + slope * np.asarray(t, dtype=float)
        return b * lin, b1 * lin + b * slope, b2 * lin + 2 * b1 * slope

    def psi(x):
        x = np.asarray(x, dtype=float)
        return np.cos(k * x) + cubic_weight * x ** 2 * (3 * L - 2 * x) / L ** 3

    def psi_xx(x):
        x = np.asarray(x, dtype=float)
        return -(k ** 2) * np.cos(k * x) + cubic_weight * (6 * L - 12 * x) / L ** 3

    return TestFunction(
        value=lambda t, x: chi(t)[0] * psi(x),
        d_t=lambda t, x: chi(t)[1] * psi(x),
        d_tt=lambda t, x: chi(t)[2] * psi(x),
        d_xx=lambda t, x: chi(t)[0] * psi_xx(x),
        support_end=T,
    )


def _field_list(trajectory) -> list:
    return list(trajectory.fields) if hasattr(trajectory, "fields") else list(trajectory)


def weak_residual(trajectory, test_function: TestFunction, init: InitialData,
                  params: BeamParams, basis: SpectralBasis) -> float:
    """Residual of the weak formulation for a sampled trajectory.

    Space integrals use the midpoint rule on the collocation grid, the time
    integral the trapezoid rule over the snapshot times; u_xx is taken
    spectrally and h_u is the attached-branch selection of the force.

    Raises:
        PreconditionError: if the test function's time support is not inside
            the trajectory span or the trajectory does not start at t = 0.
    """
    fields = _field_list(trajectory)
    if len(fields) < 2:
        raise PreconditionError("need at least two snapshots")
    times = np.array([f.time for f in fields])
    if abs(times[0]) > 1e-14:
        raise PreconditionError("trajectory must start at t = 0")
    if test_function.support_end > times[-1]:
        raise PreconditionError(
            f"test function support [0, {test_function.support_end}) exceeds trajectory end {times[-1]}"
        )
    x = basis.collocation
    w = basis.weight
    law = params.law
    k1sq = params.kappa1 ** 2
    integrand = np.empty(times.size)
    for i, f in enumerate(fields):
        basis.check_grid(f.grid)
        t = f.time
        u = f.displacement
        u_xx = second_derivative(u, basis)
        h = adhesion_force(u, law)
        dens = u * test_function.d_tt(t, x) + k1sq * u_xx * test_function.d_xx(t, x) + h * test_function.value(t, x)
        integrand[i] = w * np.sum(dens)
    start = init.field(basis)
    boundary = -w * np.sum(start.velocity * test_function.value(0.0, x)) + w * np.sum(
        start.displacement * test_function.d_t(0.0, x)
    )
    return float(np.trapezoid(integrand, times) + boundary)


@dataclass(frozen=True)
class DissipationReport:
    max_excess: float
    passed: bool


def _total(e) -> float:
    return float(e.total) if isinstance(e, EnergyReport) else float(e)


def dissipation_check(energies: Sequence, tolerance: float) -> DissipationReport:
    """max_t E(t) - E(0), passing when it stays below tolerance * max(E(0), 1)."""
    if len(energies) == 0:
        raise PreconditionError("energy list is empty")
    totals = np.array([_total(e) for e in energies])
    excess = float(np.max(totals - totals[0]))
    return DissipationReport(excess, bool(excess <= tolerance * max(totals[0], 1.0)))
