"""Energy-migration, spectral-decay and regularity diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import ModalCoefficients, SpectralBasis, analyze
from .beam import BeamParams, FieldState
from .closed_form import cutoff_bound, detached_frequencies
from .errors import PreconditionError
from .fields import adhesion_energy, mode_energies

_NOISE = 100 * np.finfo(float).eps ** 2


@dataclass(frozen=True)
class SpectrumReport:
    time: float
    mode_energies: np.ndarray
    adhesion_energy: float
    high_mode_fraction: float
    n_split: int

    @property
    def total(self) -> float:
        return float(np.sum(self.mode_energies)) + self.adhesion_energy


def modal_energy_spectrum(state, params: BeamParams, basis: SpectralBasis, n_split: int = 1) -> SpectrumReport:
    """Per-mode mechanical energy and the share held by modes n >= n_split.

    ``state`` may be a :class:`~adhesive_beam.integrator.SimState` or a bare
    :class:`FieldState`.
    """
    if not 1 <= n_split <= basis.n_modes - 1:
        raise PreconditionError(f"n_split must lie in 1..{basis.n_modes - 1}, got {n_split}")
    if isinstance(state, FieldState):
        field, modal = state, analyze(state, basis)
    else:
        field, modal = state.field, state.modal
    if modal.n_modes != basis.n_modes:
        raise PreconditionError(f"state has {modal.n_modes} modes, basis has {basis.n_modes}")
    per_mode = mode_energies(modal.alphas, modal.alpha_dots, params, basis)
    adhesion = adhesion_energy(field.displacement, params, basis)
    mech = float(np.sum(per_mode))
    high = float(np.sum(per_mode[n_split:]))
    # transform round-off leaves coefficients of size eps * |alpha| in every
    # mode; weighted by the stiffest mode that energy counts as none
    stiff = params.kappa1 ** 2 * basis.lambdas[-1] ** 4 + 1.0
    sq = float(np.sum(modal.alphas ** 2)) * stiff + float(np.sum(modal.alpha_dots ** 2))
    floor = _NOISE * basis.n_modes * sq
    frac = high / mech if high > floor and mech > 0 else 0.0
    return SpectrumReport(
        time=field.time,
        mode_energies=per_mode,
        adhesion_energy=adhesion,
        high_mode_fraction=min(max(frac, 0.0), 1.0),
        n_split=n_split,
    )


@dataclass(frozen=True)
class DecayFitReport:
    cutoff_sum: float
    cutoff_bound: float
    slope: float
    band: tuple
    slope_defined: bool
    amplitudes: np.ndarray

    @property
    def cutoff_ok(self) -> bool:
        return self.cutoff_sum <= self.cutoff_bound


def default_band(n_modes: int) -> tuple:
    """Skip n = 1 and the top octave of retained modes."""
    top = n_modes - 1
    return (2, max(2, top // 2))


def detached_amplitudes(modal: ModalCoefficients, params: BeamParams) -> np.ndarray:
    """B_n = sqrt(alpha_n**2 + (alpha_dot_n / nu_n)**2) for n >= 1; entry 0 is zero."""
    nu = detached_frequencies(params, modal.n_modes)
    amps = np.zeros(modal.n_modes)
    amps[1:] = np.hypot(modal.alphas[1:], modal.alpha_dots[1:] / nu[1:])
    return amps


def spectral_decay_fit(modal: ModalCoefficients, params: BeamParams, a0: float, band=None) -> DecayFitReport:
    """Detached amplitudes, the cutoff sum against its bound, and a log-log slope.

    The slope is the least-squares fit of log B_n on log n over the inclusive
    ``band``; it is NaN (and ``slope_defined`` false) if any amplitude in the
    band vanishes.
    """
    n_top = modal.n_modes - 1
    lo, hi = default_band(modal.n_modes) if band is None else (int(band[0]), int(band[1]))
    if not 1 <= lo <= hi <= n_top:
        raise PreconditionError(f"band [{lo}, {hi}] must lie within 1..{n_top}")
    amps = detached_amplitudes(modal, params)
    n = np.arange(modal.n_modes)
    csum = float(np.sum(amps[1:] ** 2 * n[1:] ** 4))
    sel = slice(lo, hi + 1)
    band_amps = amps[sel]
    if hi > lo and np.all(band_amps > 0):
        slope = float(np.polyfit(np.log(n[sel]), np.log(band_amps), 1)[0])
        defined = True
    else:
        slope, defined = math.nan, False
    return DecayFitReport(csum, cutoff_bound(a0, params), slope, (lo, hi), defined, amps)


def _trajectory_arrays(trajectory):
    fields = list(trajectory.fields) if hasattr(trajectory, "fields") else list(trajectory)
    fields = [f.field if hasattr(f, "field") else f for f in fields]
    times = np.array([f.time for f in fields])
    return times, np.array([f.displacement for f in fields])


def _one_sided_velocity(times, u, t_event, window, degree, side):
    if side < 0:
        sel = (times >= t_event - window) & (times <= t_event)
    else:
        sel = (times >= t_event) & (times <= t_event + window)
    if np.count_nonzero(sel) < 2:
        raise PreconditionError(f"fewer than 2 snapshots on the {'left' if side < 0 else 'right'} of the event")
    s = (times[sel] - t_event) / window
    deg = min(degree, np.count_nonzero(sel) - 1)
    coef = np.polynomial.polynomial.polyfit(s, u[sel], deg)
    return coef[1] / window


def c1_indicator(trajectory, event, window: float, degree: int = 4) -> float:
    """Relative jump of the velocity across an event, reconstructed from displacements.

    Displacement snapshots on each side of the event (within ``window``) are
    fitted by a polynomial in time per grid point and differentiated at the
    event time. Returns ||v_right - v_left|| / ||(v_right + v_left) / 2||.
    Values near 0 indicate a C1 transition.
    """
    times, u = _trajectory_arrays(trajectory)
    t_event = float(getattr(event, "time", getattr(event, "t_bar", event)))
    if window <= 0:
        raise PreconditionError("window must be positive")
    if t_event - window < times[0] - 1e-12 or t_event + window > times[-1] + 1e-12:
        raise PreconditionError("event window extends beyond the trajectory")
    v_left = _one_sided_velocity(times, u, t_event, window, degree, -1)
    v_right = _one_sided_velocity(times, u, t_event, window, degree, +1)
    scale = np.linalg.norm(0.5 * (v_left + v_right))
    return float(np.linalg.norm(v_right - v_left) / max(scale, 1e-300))
