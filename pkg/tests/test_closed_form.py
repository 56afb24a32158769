import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adhesive_beam.basis import build_basis, synthesize
from adhesive_beam.beam import BeamParams
from adhesive_beam.closed_form import (
    AttachedModalForm,
    DetachedModalForm,
    ScenarioClass,
    attached_energy,
    attached_evolve,
    attached_frequencies,
    classify_scenario,
    corollary_bounds_check,
    cutoff_bound,
    detached_energy,
    detached_evolve,
    detached_frequencies,
    match_transition,
    regime_exact_solve,
)
from adhesive_beam.errors import MixedRegimeError, NoCrossingError, PreconditionError
from adhesive_beam.fields import InitialData, energy_of_field
from adhesive_beam.integrator import Regime


def test_attached_evolve_examples():
    form = AttachedModalForm([1.0, 0.0], [0.0, 0.0], [1.0, 5.0])
    c = attached_evolve(form, math.pi / 2)
    assert c.alphas[0] == pytest.approx(0.0, abs=1e-15)
    assert c.alpha_dots[0] == pytest.approx(-1.0)
    form = AttachedModalForm([0.5, 2.0], [0.3, -1.2], [1.0, 3.0])
    c = attached_evolve(form, 0.0)
    np.testing.assert_allclose(c.alphas, form.amplitudes * np.cos(form.phases))
    np.testing.assert_allclose(c.alpha_dots, -form.amplitudes * form.frequencies * np.sin(form.phases))
    zero = attached_evolve(AttachedModalForm([0.0, 0.0], [0.0, 0.0], [1.0, 2.0]), 7.3)
    assert not zero.alphas.any() and not zero.alpha_dots.any()


def test_detached_evolve_examples():
    form = DetachedModalForm(2.0, 3.0, [0.0, 0.0], [0.0, 0.0], [0.0, 1.0])
    c = detached_evolve(form, 1.0)
    assert (c.alphas[0], c.alpha_dots[0]) == (5.0, 3.0)
    params = BeamParams(1.0, 1.0, math.pi)
    nu = detached_frequencies(params, 2)
    assert nu[1] == pytest.approx(1.0)
    form = DetachedModalForm(0.0, 0.0, [0.0, 1.0], [0.0, 0.0], nu)
    for t in (0.0, 0.4, 2.0):
        assert detached_evolve(form, t).alphas[1] == pytest.approx(math.cos(t))
    zero = detached_evolve(DetachedModalForm(0.0, 0.0, [0.0, 0.0], [0.0, 0.0], nu), 3.0)
    assert not zero.alphas.any()


def test_energies():
    assert attached_energy(AttachedModalForm([1.0], [0.0], [1.0])) == 0.5
    assert attached_energy(AttachedModalForm([0.0, 0.0], [0.0, 0.0], [1.0, 2.0])) == 0.0
    params = BeamParams(1.0, 1.0, math.pi)
    omega = attached_frequencies(params, 2)
    assert omega[1] ** 2 == pytest.approx(2.0)
    assert attached_energy(AttachedModalForm([0.0, 2.0], [0.0, 0.0], omega)) == pytest.approx(4.0)
    unit = BeamParams(1.0, 1.0, 1.0)
    assert detached_energy(DetachedModalForm(3.0, 0.0, [0.0], [0.0], [0.0]), unit) == 0.5
    assert detached_energy(DetachedModalForm(3.0, 2.0, [0.0], [0.0], [0.0]), unit) == 2.5
    assert detached_energy(DetachedModalForm(3.0, 0.0, [0.0, 1.0], [0.0, 0.0], [0.0, 3.0]), unit) == 5.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0.2, 5), st.integers(1, 40))
def test_frequency_identity(k1, k2, L, n):
    params = BeamParams(k1, k2, L)
    om = attached_frequencies(params, n)
    nu = detached_frequencies(params, n)
    # subtraction cancels when kappa1 lambda^2 >> kappa2, so scale by omega^2
    assert np.all(np.abs(om ** 2 - nu ** 2 - k2 ** 2) <= 1e-13 * om ** 2)
    assert np.all(om >= k2) and np.all(np.diff(om) > 0)
    assert np.all(np.diff(nu) > 0)


def test_canonical_form():
    params = BeamParams(1.0, 2.0, 1.0)
    form = AttachedModalForm.from_state([-0.5, 0.0, 0.3], [0.0, 0.0, -0.1], params)
    assert np.all(form.amplitudes >= 0)
    assert np.all((form.phases > -math.pi) & (form.phases <= math.pi))
    assert form.phases[0] == pytest.approx(math.pi)
    assert form.phases[1] == 0.0
    back = attached_evolve(form, 0.0)
    np.testing.assert_allclose(back.alphas, [-0.5, 0.0, 0.3], atol=1e-15)
    np.testing.assert_allclose(back.alpha_dots, [0.0, 0.0, -0.1], atol=1e-15)


@pytest.mark.parametrize("v0, v1, k2, L, expected", [
    (0.5, 0.0, 1.0, 1.0, ScenarioClass.NEVER_DETACHES),
    (0.5, 0.0, 1.0, 4.0, ScenarioClass.NEVER_DETACHES),
    (0.0, 2.0, 1.0, 1.0, ScenarioClass.TRANSITIONS_TO_CONSTANT_DETACHED),
    (0.0, 0.0, 1.0, 1.0, ScenarioClass.NEVER_DETACHES),
])
def test_classify_scenario(v0, v1, k2, L, expected):
    assert classify_scenario(v0, v1, BeamParams(1.0, k2, L)) is expected


def test_classify_rejects_detached_start():
    with pytest.raises(PreconditionError):
        classify_scenario(1.0, 0.0, BeamParams(1.0, 1.0, 1.0))


def test_match_transition_examples():
    rec = match_transition(AttachedModalForm([2.0], [0.0], [1.0]), BeamParams(1.0, 1.0, 1.0))
    assert rec.t_bar == pytest.approx(math.pi / 3, abs=1e-12)
    assert rec.c1 == pytest.approx(-math.sqrt(3), abs=1e-12)
    assert rec.c1_identity_residual <= 1e-12
    # value and derivative matching at t_bar
    assert rec.post_form.intercept + rec.c1 * rec.t_bar == pytest.approx(2 * math.cos(rec.t_bar))
    assert rec.c1 == pytest.approx(-2 * math.sin(rec.t_bar))

    p2 = BeamParams(1.0, 2.0, 1.0)
    rec = match_transition(AttachedModalForm([math.sqrt(2)], [0.0], [2.0]), p2)
    assert rec.t_bar == pytest.approx(math.pi / 8, abs=1e-12)
    assert rec.c1 == pytest.approx(-2.0, abs=1e-12)

    rec = match_transition(AttachedModalForm([1.0], [0.3], [1.0]), BeamParams(1.0, 1.0, 1.0))
    assert rec.c1 == 0.0 and rec.c1_identity_residual == 0.0


def test_match_transition_errors():
    params = BeamParams(1.0, 1.0, 1.0)
    with pytest.raises(NoCrossingError):
        match_transition(AttachedModalForm([0.9], [0.0], [1.0]), params)
    with pytest.raises(PreconditionError):
        match_transition(AttachedModalForm([2.0, 0.1], [0.0, 0.0], [1.0, 3.0]), params)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.2, 5), st.floats(0.25, 4), st.floats(1.0, 10.0), st.floats(-math.pi, math.pi))
def test_c1_identity_random(k2, L, ratio, phi):
    params = BeamParams(1.0, k2, L)
    a0 = ratio * math.sqrt(L)
    rec = match_transition(AttachedModalForm([a0], [phi], [k2]), params)
    assert rec.c1_identity_residual <= 1e-10 * k2 ** 2 * a0 ** 2
    assert rec.t_bar >= 0
    assert abs(abs(a0 * math.cos(k2 * rec.t_bar + phi)) - math.sqrt(L)) <= 1e-12 * a0


def test_attached_energy_matches_field_energy():
    rng = np.random.default_rng(11)
    params = BeamParams(0.7, 1.3, 1.5)
    basis = build_basis(12, 16, 1.5)
    alphas = np.zeros(12)
    alphas[[0, 2, 5]] = [0.3, 0.15, 0.05]
    dots = np.zeros(12)
    dots[[1, 3]] = [0.4, -0.2]
    form = AttachedModalForm.from_state(alphas, dots, params)
    ref = attached_energy(form)
    for t in rng.uniform(0, 20, 50):
        state = synthesize(attached_evolve(form, t), basis)
        assert np.max(np.abs(state.displacement)) < 1
        assert energy_of_field(state, params, basis).total == pytest.approx(ref, rel=1e-10)


def test_detached_energy_constant_in_time():
    rng = np.random.default_rng(12)
    params = BeamParams(0.7, 1.3, 1.5)
    basis = build_basis(12, 16, 1.5)
    alphas = np.zeros(12)
    alphas[[0, 2, 5]] = [3.0, 0.15, 0.05]
    dots = np.zeros(12)
    dots[[0, 3]] = [0.2, -0.2]
    form = DetachedModalForm.from_state(alphas, dots, params)
    energies = [energy_of_field(synthesize(detached_evolve(form, t), basis), params, basis).total
                for t in rng.uniform(0, 20, 50)]
    assert (max(energies) - min(energies)) / max(energies) < 1e-10
    assert energies[0] == pytest.approx(detached_energy(form, params), rel=1e-10)


def test_regime_exact_never_detaches(unit_params):
    traj = regime_exact_solve(InitialData.constant(0.5, 0.0), unit_params, build_basis(4, 8, 1.0), 30.0, 0.05)
    assert traj.transitions == []
    energies = [energy_of_field(f, unit_params, build_basis(4, 8, 1.0)).total for f in traj.fields]
    np.testing.assert_allclose(energies, 0.125, rtol=1e-12)
    assert all(r is Regime.ATTACHED for r in traj.regimes)


def test_regime_exact_transition(unit_params):
    basis = build_basis(8, 8, 1.0)
    traj = regime_exact_solve(InitialData.constant(0.0, 2.0), unit_params, basis, 3.0, 0.01)
    assert len(traj.transitions) == 1
    rec = traj.transitions[0]
    assert rec.direction == "debond"
    assert rec.t_bar == pytest.approx(math.pi / 6, abs=1e-12)
    assert abs(rec.c1) == pytest.approx(math.sqrt(3), abs=1e-12)
    for f, reg in zip(traj.fields, traj.regimes):
        assert np.max(np.abs(f.displacement - f.displacement.mean())) <= 1e-12
        assert reg is (Regime.DETACHED if f.time > rec.t_bar else Regime.ATTACHED)
    # after detaching the mode-0 coefficient is a straight line with slope C1
    late = [m for m in traj.modal if m.time > rec.t_bar]
    np.testing.assert_allclose([m.alpha_dots[0] for m in late], rec.c1)


def test_regime_exact_rebond_and_second_debond(unit_params):
    basis = build_basis(4, 4, 1.0)
    traj = regime_exact_solve(InitialData.constant(1.5, -1.0), unit_params, basis, 6.0, 0.01)
    directions = [r.direction for r in traj.transitions]
    assert directions[:2] == ["rebond", "debond"]
    first = traj.transitions[0]
    assert first.t_bar == pytest.approx(0.5, abs=1e-12)
    assert first.c1_identity_residual <= 1e-12
    assert traj.fields[-1].displacement[0] < -1


def test_regime_exact_zero(unit_params, small_basis):
    traj = regime_exact_solve(InitialData.constant(0.0, 0.0), unit_params, small_basis, 5.0, 0.5)
    assert all(not f.displacement.any() for f in traj.fields)
    assert traj.times[-1] == 5.0


def test_regime_exact_mixed_errors(unit_params, small_basis):
    with pytest.raises(MixedRegimeError):
        regime_exact_solve(InitialData.cosine_series([(0, 0.9), (1, 0.3)]), unit_params, small_basis, 1.0, 0.1)
    with pytest.raises(MixedRegimeError):
        regime_exact_solve(InitialData.cosine_series([(0, 0.5), (1, 0.2)], [(0, 2.0)]), unit_params,
                           small_basis, 3.0, 0.1)


def test_bounds_check_examples():
    params = BeamParams(1.0, 1.0, 1.0)
    rep = corollary_bounds_check(DetachedModalForm(1.0, math.sqrt(3), [0.0, 0.0], [0.0, 0.0], [0.0, math.pi ** 2]),
                                 2.0, params)
    assert rep.energy_residual == pytest.approx(0.0, abs=1e-14)
    assert rep.c1_bound_ok and rep.cutoff_ok
    assert cutoff_bound(2.0, params) == pytest.approx(3 / math.pi ** 4, abs=1e-15)
    rep = corollary_bounds_check(DetachedModalForm(1.0, 0.0, [0.0], [0.0], [0.0]), 1.0, params)
    assert rep.energy_residual == 0.0 and rep.c1_bound_ok and rep.cutoff_ok
    with pytest.raises(PreconditionError):
        corollary_bounds_check(DetachedModalForm(1.0, 0.0, [0.0], [0.0], [0.0]), 0.5, params)


def test_bounds_check_excess_energy_fails():
    params = BeamParams(1.0, 1.0, 1.0)
    nu = detached_frequencies(params, 3)
    rep = corollary_bounds_check(DetachedModalForm(1.0, 2.0, [0.0, 0.0, 0.2], [0.0, 0.0, 0.0], nu), 2.0, params)
    assert rep.energy_residual > 0
    assert not rep.c1_bound_ok
