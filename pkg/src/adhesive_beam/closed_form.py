"""Exact modal solutions in the attached and detached regimes.

Attached (|u| < 1): every mode is a harmonic oscillator with frequency
omega_n = sqrt(kappa1**2 lambda_n**4 + kappa2**2).  Detached (|u| > 1): the
adhesive force vanishes, mode 0 drifts linearly and mode n >= 1 oscillates
with nu_n = |kappa1| lambda_n**2.  A regime change is resolved by matching u
and du/dt at the crossing time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .basis import ModalCoefficients, SpectralBasis, synthesize
from .beam import BeamParams, FieldState
from .errors import MixedRegimeError, NoCrossingError, PreconditionError
from .fields import InitialData
from .integrator import Regime

# Dense monitoring resolves the fastest active period into this many samples.
SAMPLES_PER_PERIOD = 64
_CHUNK = 4096
_ROUNDOFF = 1e-13


def attached_frequencies(params: BeamParams, n_modes: int) -> np.ndarray:
    lam = np.arange(n_modes) * np.pi / params.length
    return np.sqrt(params.kappa1 ** 2 * lam ** 4 + params.kappa2 ** 2)


def detached_frequencies(params: BeamParams, n_modes: int) -> np.ndarray:
    lam = np.arange(n_modes) * np.pi / params.length
    return abs(params.kappa1) * lam ** 2


def _amplitude_phase(alphas, alpha_dots, freqs):
    """Write (alpha, alpha_dot) as A cos(phi), -A omega sin(phi) with A >= 0, phi in (-pi, pi]."""
    alphas = np.asarray(alphas, dtype=float)
    scaled = np.asarray(alpha_dots, dtype=float) / freqs
    amps = np.hypot(alphas, scaled)
    phases = np.arctan2(-scaled, alphas)
    phases = np.where(phases <= -np.pi, np.pi, phases)
    phases = np.where(amps == 0.0, 0.0, phases)
    return amps, phases


@dataclass(frozen=True)
class AttachedModalForm:
    """alpha_n(t) = A_n cos(omega_n (t - epoch) + phi_n)."""

    amplitudes: np.ndarray
    phases: np.ndarray
    frequencies: np.ndarray
    epoch: float = 0.0

    def __post_init__(self):
        for name in ("amplitudes", "phases", "frequencies"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if not self.amplitudes.shape == self.phases.shape == self.frequencies.shape:
            raise PreconditionError("amplitudes, phases and frequencies must have equal length")

    @classmethod
    def from_state(cls, alphas, alpha_dots, params: BeamParams, epoch: float = 0.0):
        freqs = attached_frequencies(params, len(alphas))
        amps, phases = _amplitude_phase(alphas, alpha_dots, freqs)
        return cls(amps, phases, freqs, epoch)

    @property
    def n_modes(self) -> int:
        return self.amplitudes.size


@dataclass(frozen=True)
class DetachedModalForm:
    """alpha_0(t) = c0 + c1 (t - epoch); alpha_n(t) = B_n cos(nu_n (t - epoch) + psi_n).

    The amplitude, phase and frequency arrays span all modes; entry 0 is
    unused and held at zero since mode 0 is carried by ``c0`` and ``c1``.
    """

    c0: float
    c1: float
    amplitudes: np.ndarray
    phases: np.ndarray
    frequencies: np.ndarray
    epoch: float = 0.0

    def __post_init__(self):
        for name in ("amplitudes", "phases", "frequencies"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if not self.amplitudes.shape == self.phases.shape == self.frequencies.shape:
            raise PreconditionError("amplitudes, phases and frequencies must have equal length")

    @classmethod
    def from_state(cls, alphas, alpha_dots, params: BeamParams, epoch: float = 0.0):
        alphas = np.asarray(alphas, dtype=float)
        alpha_dots = np.asarray(alpha_dots, dtype=float)
        freqs = detached_frequencies(params, alphas.size)
        amps = np.zeros_like(alphas)
        phases = np.zeros_like(alphas)
        amps[1:], phases[1:] = _amplitude_phase(alphas[1:], alpha_dots[1:], freqs[1:])
        return cls(float(alphas[0]), float(alpha_dots[0]), amps, phases, freqs, epoch)

    @property
    def n_modes(self) -> int:
        return self.amplitudes.size

    @property
    def intercept(self) -> float:
        """Value of the mode-0 drift line extrapolated to t = 0."""
        return self.c0 - self.c1 * self.epoch


def _attached_arrays(form: AttachedModalForm, times):
    theta = np.multiply.outer(np.asarray(times, dtype=float) - form.epoch, form.frequencies) + form.phases
    return form.amplitudes * np.cos(theta), -form.amplitudes * form.frequencies * np.sin(theta)


def _detached_arrays(form: DetachedModalForm, times):
    tau = np.asarray(times, dtype=float) - form.epoch
    theta = np.multiply.outer(tau, form.frequencies) + form.phases
    alphas = form.amplitudes * np.cos(theta)
    alpha_dots = -form.amplitudes * form.frequencies * np.sin(theta)
    alphas[..., 0] = form.c0 + form.c1 * tau
    alpha_dots[..., 0] = form.c1
    return alphas, alpha_dots


def _arrays(form, times):
    if isinstance(form, AttachedModalForm):
        return _attached_arrays(form, times)
    return _detached_arrays(form, times)


def attached_evolve(form: AttachedModalForm, t: float) -> ModalCoefficients:
    """Modal state of the attached solution at time t (regime validity is not checked)."""
    a, b = _attached_arrays(form, t)
    return ModalCoefficients(a, b, float(t))


def detached_evolve(form: DetachedModalForm, t: float) -> ModalCoefficients:
    a, b = _detached_arrays(form, t)
    return ModalCoefficients(a, b, float(t))


def attached_energy(form: AttachedModalForm) -> float:
    return float(0.5 * np.sum(form.amplitudes ** 2 * form.frequencies ** 2))


def detached_energy(form: DetachedModalForm, params: BeamParams) -> float:
    oscill = 0.5 * np.sum(form.amplitudes[1:] ** 2 * form.frequencies[1:] ** 2)
    return float(0.5 * params.length * params.kappa2 ** 2 + 0.5 * form.c1 ** 2 + oscill)


class ScenarioClass(str, Enum):
    NEVER_DETACHES = "never_detaches"
    TRANSITIONS_TO_CONSTANT_DETACHED = "transitions_to_constant_detached"
    STATIONARY_EDGE_CASE = "stationary_edge_case"


def constant_data_form(v0: float, v1: float, params: BeamParams, n_modes: int = 1) -> AttachedModalForm:
    """Attached form of spatially constant data u = v0, du/dt = v1."""
    root_l = math.sqrt(params.length)
    alphas = np.zeros(n_modes)
    alpha_dots = np.zeros(n_modes)
    alphas[0] = v0 * root_l
    alpha_dots[0] = v1 * root_l
    return AttachedModalForm.from_state(alphas, alpha_dots, params)


def classify_scenario(v0_const: float, v1_const: float, params: BeamParams) -> ScenarioClass:
    """Which of the three constant-data scenarios applies.

    Raises:
        PreconditionError: if |v0_const| >= 1 (data must start attached).
    """
    if not abs(v0_const) < 1:
        raise PreconditionError(f"constant data must satisfy |v0| < 1, got v0={v0_const!r}")
    a0 = constant_data_form(v0_const, v1_const, params).amplitudes[0]
    if a0 < math.sqrt(params.length):
        return ScenarioClass.NEVER_DETACHES
    if v1_const != 0:
        return ScenarioClass.TRANSITIONS_TO_CONSTANT_DETACHED
    return ScenarioClass.STATIONARY_EDGE_CASE


@dataclass(frozen=True)
class TransitionRecord:
    """One regime change resolved by C1 matching.

    ``c1_identity_residual`` is |C1**2 - kappa2**2 (A0**2 - L)|, with A0 the
    mode-0 amplitude of the attached side and C1 the drift of the detached side.
    """

    t_bar: float
    direction: str
    pre_form: object
    post_form: object
    c1_identity_residual: float

    @property
    def attached_form(self) -> AttachedModalForm:
        return self.pre_form if self.direction == "debond" else self.post_form

    @property
    def detached_form(self) -> DetachedModalForm:
        return self.post_form if self.direction == "debond" else self.pre_form

    @property
    def c1(self) -> float:
        return self.detached_form.c1


def _c1_identity_residual(attached: AttachedModalForm, detached: DetachedModalForm, params: BeamParams) -> float:
    a0 = attached.amplitudes[0]
    return abs(detached.c1 ** 2 - params.kappa2 ** 2 * (a0 ** 2 - params.length))


def first_touch_time(amplitude: float, phase: float, frequency: float, level: float) -> float:
    """Smallest s >= 0 with |amplitude cos(frequency s + phase)| = level (level <= amplitude)."""
    ratio = min(1.0, level / amplitude)
    root = math.acos(ratio)
    best = math.inf
    for r in (root, math.pi - root):
        k = math.ceil((phase - r) / math.pi)
        theta = r + k * math.pi
        best = min(best, theta)
    # ceil can land one root low when phase is below float resolution of pi
    return max(0.0, (best - phase) / frequency)


def match_transition(form: AttachedModalForm, params: BeamParams) -> TransitionRecord:
    """Resolve the first threshold touch of constant-data attached motion.

    Raises:
        PreconditionError: if modes other than 0 carry amplitude.
        NoCrossingError: if A0 < sqrt(L), so the threshold is never reached.
    """
    amps = form.amplitudes
    a0 = float(amps[0])
    if amps.size > 1 and np.max(np.abs(amps[1:])) > 1e-12 * max(a0, 1.0):
        raise PreconditionError("match_transition requires spatially constant data (mode 0 only)")
    root_l = math.sqrt(params.length)
    if a0 < root_l * (1 - 1e-14):
        raise NoCrossingError(f"A0 = {a0!r} < sqrt(L) = {root_l!r}: the threshold is never reached")
    omega0 = float(form.frequencies[0])
    phi0 = float(form.phases[0])
    s = first_touch_time(a0, phi0, omega0, root_l)
    theta = omega0 * s + phi0
    value = a0 * math.cos(theta)
    # tangential touch: no outward drift
    c1 = 0.0 if a0 <= root_l else -a0 * omega0 * math.sin(theta)
    t_bar = form.epoch + s
    zeros = np.zeros(form.n_modes)
    post = DetachedModalForm(value, c1, zeros, zeros, detached_frequencies(params, form.n_modes), t_bar)
    return TransitionRecord(t_bar, "debond", form, post, _c1_identity_residual(form, post, params))


@dataclass
class ExactTrajectory:
    """Output of :func:`regime_exact_solve`, sampled at uniform times."""

    times: np.ndarray
    fields: list
    modal: list
    regimes: list
    transitions: list
    segments: list = field(default_factory=list)


def _active(form) -> np.ndarray:
    act = form.amplitudes != 0
    if isinstance(form, DetachedModalForm):
        act = act.copy()
        act[0] = form.c0 != 0 or form.c1 != 0
    return act


def _monitor_step(form, sample_dt: float, params: BeamParams) -> float:
    act = _active(form)
    freqs = form.frequencies[act]
    if isinstance(form, DetachedModalForm):
        freqs = freqs[freqs > 0]
    h = math.inf
    if freqs.size:
        h = (2 * math.pi / float(freqs.max())) / SAMPLES_PER_PERIOD
    if isinstance(form, DetachedModalForm) and form.c1 != 0:
        # keep drift per sample well below the threshold gap
        h = min(h, 0.05 * math.sqrt(params.length) / abs(form.c1))
    return min(h, sample_dt)


def _crossed(form, u: np.ndarray) -> np.ndarray:
    au = np.abs(u)
    if isinstance(form, AttachedModalForm):
        return au.max(axis=-1) > 1.0
    return au.min(axis=-1) <= 1.0


def _field_rows(form, times, basis: SpectralBasis):
    alphas, alpha_dots = _arrays(form, times)
    return basis.to_grid(alphas), basis.to_grid(alpha_dots)


def _find_crossing(form, basis, params, t_start, t_end, sample_dt):
    """First time in (t_start, t_end] at which the regime predicate flips, or None."""
    h = _monitor_step(form, sample_dt, params)
    n_total = max(1, math.ceil((t_end - t_start) / h - 1e-9))
    lo = t_start
    for k0 in range(1, n_total + 1, _CHUNK):
        ks = np.arange(k0, min(k0 + _CHUNK, n_total + 1))
        times = np.minimum(t_start + ks * h, t_end)
        u, _ = _field_rows(form, times, basis)
        hits = np.flatnonzero(_crossed(form, u))
        if hits.size:
            i = hits[0]
            hi = float(times[i])
            lo = float(times[i - 1]) if i > 0 else lo
            return _bisect(form, basis, lo, hi)
        lo = float(times[-1])
    return None


def _bisect(form, basis, lo, hi):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        u, _ = _field_rows(form, mid, basis)
        if _crossed(form, u):
            hi = mid
        else:
            lo = mid
    return hi


def _initial_regime(u: np.ndarray) -> Regime:
    au = np.abs(u)
    if np.all(au <= 1.0):
        return Regime.ATTACHED
    if np.all(au > 1.0):
        return Regime.DETACHED
    raise MixedRegimeError(
        f"initial field has {int(np.sum(au > 1))} detached and {int(np.sum(au <= 1))} attached points"
    )


def _make_form(regime: Regime, alphas, alpha_dots, params, epoch):
    if regime is Regime.ATTACHED:
        return AttachedModalForm.from_state(alphas, alpha_dots, params, epoch)
    return DetachedModalForm.from_state(alphas, alpha_dots, params, epoch)


def regime_exact_solve(
    init: InitialData,
    params: BeamParams,
    basis: SpectralBasis,
    t_final: float,
    sample_dt: float,
    *,
    threshold_tol: float = 1e-8,
) -> ExactTrajectory:
    """Evolve with the closed forms, switching regime at global threshold crossings.

    The field is monitored on a dense time grid resolving the fastest active
    mode; a crossing is bisected down to floating-point resolution, the state
    is re-expanded in the other regime by matching u and du/dt, and evolution
    continues.

    Raises:
        MixedRegimeError: if part of the field crosses the threshold while the
            rest does not (use the splitting integrator instead).
    """
    if t_final <= 0 or sample_dt <= 0:
        raise PreconditionError("t_final and sample_dt must be positive")
    start = init.modal(basis)
    u0 = basis.to_grid(start.alphas)
    regime = _initial_regime(u0)
    form = _make_form(regime, start.alphas, start.alpha_dots, params, 0.0)

    segments = []
    transitions = []
    t = 0.0
    scan_from = 0.0
    while True:
        t_cross = _find_crossing(form, basis, params, scan_from, t_final, sample_dt)
        if t_cross is None:
            segments.append((t, t_final, regime, form))
            break
        alphas, alpha_dots = _arrays(form, t_cross)
        u = basis.to_grid(alphas)
        v = basis.to_grid(alpha_dots)
        if not np.all(np.abs(np.abs(u) - 1.0) <= threshold_tol):
            raise MixedRegimeError(
                f"partial threshold crossing at t={t_cross:.12g}: "
                f"|u| spans [{np.abs(u).min():.6g}, {np.abs(u).max():.6g}]"
            )
        outward = np.sign(u) * v
        vscale = max(float(np.max(np.abs(v))), 1e-300)
        want_out = regime is Regime.ATTACHED
        moving = outward > 0 if want_out else outward < 0
        if not np.all(moving):
            if np.all(np.abs(outward) <= 1e-12 * max(vscale, 1.0)):
                # tangential touch: stays in the current regime
                scan_from = t_cross
                continue
            raise MixedRegimeError(f"non-uniform velocity across the threshold at t={t_cross:.12g}")
        new_regime = Regime.DETACHED if want_out else Regime.ATTACHED
        new_form = _make_form(new_regime, alphas, alpha_dots, params, t_cross)
        attached, detached = (form, new_form) if want_out else (new_form, form)
        transitions.append(
            TransitionRecord(
                t_bar=t_cross,
                direction="debond" if want_out else "rebond",
                pre_form=form,
                post_form=new_form,
                c1_identity_residual=_c1_identity_residual(attached, detached, params),
            )
        )
        segments.append((t, t_cross, regime, form))
        t = scan_from = t_cross
        regime, form = new_regime, new_form

    n_out = int(math.floor(t_final / sample_dt + 1e-9)) + 1
    times = np.arange(n_out) * sample_dt
    if t_final - times[-1] > 1e-12 * max(1.0, t_final):
        times = np.append(times, t_final)
    starts = np.array([s[0] for s in segments])
    which = np.searchsorted(starts, times, side="right") - 1
    fields, modal, regimes = [], [], []
    for t_k, w in zip(times, which):
        seg_form = segments[w][3]
        a, b = _arrays(seg_form, t_k)
        coeffs = ModalCoefficients(a, b, float(t_k))
        modal.append(coeffs)
        fields.append(synthesize(coeffs, basis))
        regimes.append(segments[w][2])
    return ExactTrajectory(times, fields, modal, regimes, transitions, segments)


@dataclass(frozen=True)
class CorollaryReport:
    energy_residual: float
    c1_bound_ok: bool
    cutoff_sum: float
    cutoff_bound: float
    cutoff_ok: bool


def cutoff_bound(a0: float, params: BeamParams) -> float:
    """Upper bound on sum_n B_n**2 n**4 implied by non-increasing energy."""
    k1, k2, L = params.kappa1, params.kappa2, params.length
    return k2 ** 2 * (a0 ** 2 - L) * L ** 4 / (math.pi ** 4 * k1 ** 2)


def corollary_bounds_check(candidate: DetachedModalForm, a0: float, params: BeamParams) -> CorollaryReport:
    """Check a detached candidate against the energy budget of attached amplitude a0.

    Raises:
        PreconditionError: if a0 < sqrt(L).
    """
    L, k2 = params.length, params.kappa2
    if a0 < math.sqrt(L):
        raise PreconditionError(f"a0 must be >= sqrt(L) = {math.sqrt(L)!r}, got {a0!r}")
    residual = detached_energy(candidate, params) - 0.5 * a0 ** 2 * k2 ** 2
    n = np.arange(candidate.n_modes)
    csum = float(np.sum(candidate.amplitudes[1:] ** 2 * n[1:] ** 4))
    cbound = cutoff_bound(a0, params)
    # round-off slack so that residual <= 0 implies both flags at equality
    slack = _ROUNDOFF * (0.5 * a0 ** 2 * k2 ** 2)
    return CorollaryReport(
        energy_residual=float(residual),
        c1_bound_ok=bool(candidate.c1 ** 2 <= k2 ** 2 * (a0 ** 2 - L) + 2 * slack),
        cutoff_sum=csum,
        cutoff_bound=cbound,
        cutoff_ok=bool(csum <= cbound + 2 * slack * L ** 4 / (math.pi ** 4 * params.kappa1 ** 2)),
    )
