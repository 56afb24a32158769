import math

import numpy as np
import pytest

from adhesive_beam.basis import ModalCoefficients, build_basis, synthesize
from adhesive_beam.beam import BeamParams
from adhesive_beam.closed_form import DetachedModalForm, detached_evolve, detached_frequencies, regime_exact_solve
from adhesive_beam.diagnostics import (
    c1_indicator,
    default_band,
    detached_amplitudes,
    modal_energy_spectrum,
    spectral_decay_fit,
)
from adhesive_beam.errors import PreconditionError
from adhesive_beam.fields import InitialData, energy_of_field
from adhesive_beam.integrator import SimState, StepperConfig, integrate


def test_spectrum_constant_data(unit_params, small_basis):
    state = InitialData.constant(0.5, 0.0).field(small_basis)
    rep = modal_energy_spectrum(state, unit_params, small_basis)
    assert rep.high_mode_fraction == 0.0
    assert rep.mode_energies[1:].max() < 1e-20
    assert rep.total == pytest.approx(energy_of_field(state, unit_params, small_basis).total, rel=1e-12)


def test_spectrum_single_mode(unit_params, small_basis):
    state = InitialData.cosine_series([(3, 0.1)]).field(small_basis)
    rep = modal_energy_spectrum(state, unit_params, small_basis, n_split=2)
    assert rep.high_mode_fraction == pytest.approx(1.0)
    assert modal_energy_spectrum(state, unit_params, small_basis, n_split=4).high_mode_fraction == pytest.approx(
        0.0, abs=1e-12)


def test_spectrum_accepts_sim_state(unit_params, small_basis):
    modal = InitialData.cosine_series([(0, 0.2), (1, 0.1)]).modal(small_basis)
    a = modal_energy_spectrum(SimState.from_modal(modal, small_basis), unit_params, small_basis)
    b = modal_energy_spectrum(synthesize(modal, small_basis), unit_params, small_basis)
    np.testing.assert_allclose(a.mode_energies, b.mode_energies, atol=1e-15)
    assert 0 <= a.high_mode_fraction <= 1


@pytest.mark.parametrize("n_split", [0, 16])
def test_spectrum_bad_split(unit_params, small_basis, n_split):
    state = InitialData.constant(0.5, 0.0).field(small_basis)
    with pytest.raises(PreconditionError):
        modal_energy_spectrum(state, unit_params, small_basis, n_split=n_split)


def test_default_band():
    assert default_band(33) == (2, 16)
    assert default_band(3) == (2, 2)


def test_detached_amplitudes():
    params = BeamParams(1.0, 1.0, 1.0)
    nu = detached_frequencies(params, 3)
    modal = ModalCoefficients(np.array([5.0, 0.3, 0.0]), np.array([1.0, 0.4 * nu[1], 0.2 * nu[2]]), 0.0)
    np.testing.assert_allclose(detached_amplitudes(modal, params), [0.0, 0.5, 0.2])


def test_decay_fit_power_law():
    params = BeamParams(1.0, 1.0, 1.0)
    n = np.arange(33)
    alphas = np.zeros(33)
    alphas[1:] = 1e-3 * n[1:] ** -3.0
    rep = spectral_decay_fit(ModalCoefficients(alphas, np.zeros(33), 0.0), params, 2.0)
    assert rep.slope_defined
    assert rep.slope == pytest.approx(-3.0, abs=1e-10)
    assert rep.band == (2, 16)
    assert rep.cutoff_sum == pytest.approx(1e-6 * np.sum(n[1:] ** -2.0))
    assert rep.cutoff_ok


def test_decay_fit_undefined_slope_and_bounds():
    params = BeamParams(1.0, 1.0, 1.0)
    modal = ModalCoefficients(np.array([2.0, 0.0, 0.0, 0.0]), np.zeros(4), 0.0)
    rep = spectral_decay_fit(modal, params, 2.0)
    assert not rep.slope_defined and math.isnan(rep.slope)
    assert rep.cutoff_sum == 0.0 and rep.cutoff_ok
    with pytest.raises(PreconditionError):
        spectral_decay_fit(modal, params, 2.0, band=(0, 3))
    with pytest.raises(PreconditionError):
        spectral_decay_fit(modal, params, 2.0, band=(2, 4))


def test_decay_fit_detects_excess():
    params = BeamParams(1.0, 1.0, 1.0)
    form = DetachedModalForm(1.0, 0.0, [0.0, 0.0, 0.1], [0.0, 0.0, 0.0], detached_frequencies(params, 3))
    rep = spectral_decay_fit(detached_evolve(form, 0.3), params, 2.0, band=(1, 2))
    assert rep.cutoff_sum == pytest.approx(0.16)
    assert not rep.cutoff_ok


def test_c1_indicator_smooth_transition(unit_params):
    basis = build_basis(4, 4, 1.0)
    traj = regime_exact_solve(InitialData.constant(0.0, 2.0), unit_params, basis, 1.0, 1e-3)
    j = c1_indicator(traj, traj.transitions[0], window=0.05)
    assert j < 1e-6


def test_c1_indicator_detects_kink():
    from adhesive_beam.beam import FieldState
    grid = np.array([0.25, 0.75])
    times = np.linspace(0, 2, 201)
    fields = [FieldState(t, np.full(2, abs(t - 1.0)), np.zeros(2), grid) for t in times]
    # |t - 1| has velocity -1 then +1 so the mean is 0; offset to keep the scale finite
    shifted = [FieldState(f.time, f.displacement + 3 * f.time, f.velocity, grid) for f in fields]
    j = c1_indicator(shifted, 1.0, window=0.2)
    assert j == pytest.approx(2 / 3, rel=1e-8)


def test_c1_indicator_on_splitting_run(unit_params):
    basis = build_basis(4, 4, 1.0)
    traj = integrate(InitialData.constant(0.0, 2.0), unit_params, basis, StepperConfig(1e-3, 1.0))
    assert c1_indicator(traj, traj.events[0], window=0.05) < 1e-3


def test_c1_indicator_preconditions(unit_params):
    basis = build_basis(4, 4, 1.0)
    traj = regime_exact_solve(InitialData.constant(0.0, 2.0), unit_params, basis, 1.0, 1e-2)
    with pytest.raises(PreconditionError):
        c1_indicator(traj, 0.01, window=0.05)
    with pytest.raises(PreconditionError):
        c1_indicator(traj, 0.5, window=0.0)
    with pytest.raises(PreconditionError):
        c1_indicator(traj, 0.5, window=0.005)


def test_constant_data_exact_run_has_no_high_mode_energy(unit_params, small_basis):
    traj = regime_exact_solve(InitialData.constant(0.0, 2.0), unit_params, small_basis, 2.0, 0.05)
    for f in traj.fields:
        assert modal_energy_spectrum(f, unit_params, small_basis).high_mode_fraction == 0.0


def test_partial_debond_migrates_energy(unit_params, small_basis):
    init = InitialData.cosine_series([(0, 0.9), (1, 0.3)])
    start = modal_energy_spectrum(init.field(small_basis), unit_params, small_basis, n_split=2)
    assert start.high_mode_fraction == 0.0
    traj = integrate(init, unit_params, small_basis, StepperConfig(5e-4, 0.3, snapshot_stride=50))
    assert traj.events
    end = modal_energy_spectrum(traj.snapshots[-1], unit_params, small_basis, n_split=2)
    assert end.high_mode_fraction > 1e-8
