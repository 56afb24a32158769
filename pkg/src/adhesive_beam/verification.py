"""Executable acceptance checks, shared by the test suite and ``adhesive-beam verify``.

Every check returns a :class:`CheckResult`; its runtime counts against the
stated budget.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .basis import ModalCoefficients, build_basis
from .beam import BeamParams
from .closed_form import (
    AttachedModalForm,
    DetachedModalForm,
    ScenarioClass,
    attached_evolve,
    classify_scenario,
    corollary_bounds_check,
    cutoff_bound,
    detached_evolve,
    detached_frequencies,
    first_touch_time,
    match_transition,
    regime_exact_solve,
)
from .diagnostics import modal_energy_spectrum, spectral_decay_fit
from .fields import InitialData
from .integrator import StepperConfig, TestFunction, bump_test_function, dissipation_check, integrate, weak_residual


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    title: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    @property
    def in_budget(self) -> bool:
        return self.seconds < self.budget

    @property
    def ok(self) -> bool:
        return self.passed and self.in_budget

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"[{status}] #{self.criterion:<2} {self.title}: {self.detail} ({self.seconds:.2f}s / {self.budget:g}s)"


def _timed(criterion, title, budget):
    def wrap(fn):
        def run():
            t0 = time.perf_counter()
            passed, detail = fn()
            return CheckResult(criterion, title, bool(passed), detail, time.perf_counter() - t0, budget)
        run.__name__ = fn.__name__
        run.criterion = criterion
        return run
    return wrap


def _max_field_error(traj, basis, reference) -> float:
    return max(float(np.max(np.abs(s.field.displacement - basis.to_grid(reference(s.time).alphas))))
               for s in traj.snapshots)


@_timed(1, "basis orthonormality and round trip", 2.0)
def check_basis():
    rng = np.random.default_rng(1)
    worst_gram = worst_rt = 0.0
    n_modes, M = 129, 256
    for L in (1.0, math.pi, 2.5):
        basis = build_basis(n_modes, M, L)
        x = (np.arange(M) + 0.5) * L / M
        n = np.arange(n_modes)[:, None]
        ref = np.where(n == 0, L ** -0.5, math.sqrt(2 / L) * np.cos(n * math.pi * x / L))
        gram = (L / M) * ref @ ref.T
        worst_gram = max(worst_gram, float(np.max(np.abs(gram - np.eye(n_modes)))))
        for _ in range(100):
            a = rng.standard_normal(n_modes)
            worst_rt = max(worst_rt, float(np.max(np.abs(basis.project(basis.to_grid(a)) - a))))
    return worst_gram <= 1e-10 and worst_rt <= 1e-12, f"gram dev {worst_gram:.2e}, round trip {worst_rt:.2e}"


def _attached_setup():
    params = BeamParams(1.0, 1.0, math.pi)
    basis = build_basis(16, 16, math.pi)
    init = InitialData.cosine_series([(3, 0.4)], [])
    m = init.modal(basis)
    form = AttachedModalForm.from_state(m.alphas, m.alpha_dots, params)
    return params, basis, init, form


def _detached_setup():
    params = BeamParams(1.0, 1.0, 1.0)
    basis = build_basis(16, 16, 1.0)
    init = InitialData.cosine_series([(0, 2.0), (2, 0.1), (5, 0.05)], [(0, 0.05), (3, 0.2)])
    m = init.modal(basis)
    form = DetachedModalForm.from_state(m.alphas, m.alpha_dots, params)
    return params, basis, init, form


@_timed(2, "attached single mode: second-order convergence", 10.0)
def check_attached_convergence():
    params, basis, init, form = _attached_setup()
    errs = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        traj = integrate(init, params, basis, StepperConfig(dt, 10.0))
        if max(np.max(np.abs(f.displacement)) for f in traj.fields) > 0.5 or traj.events:
            return False, "left the attached regime"
        errs.append(_max_field_error(traj, basis, lambda t: attached_evolve(form, t)))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = all(3.2 <= r <= 4.8 for r in ratios)
    return ok, f"errors {', '.join(f'{e:.3e}' for e in errs)}; ratios {ratios[0]:.3f}, {ratios[1]:.3f}"


@_timed(3, "detached data: splitting is exact", 5.0)
def check_detached_exactness():
    params, basis, init, form = _detached_setup()
    worst, min_abs = 0.0, math.inf
    for dt in (1e-2, 1e-3):
        traj = integrate(init, params, basis, StepperConfig(dt, 10.0))
        min_abs = min(min_abs, min(float(np.min(np.abs(f.displacement))) for f in traj.fields))
        worst = max(worst, _max_field_error(traj, basis, lambda t: detached_evolve(form, t)))
    return worst <= 1e-10 and min_abs >= 1.5, f"max error {worst:.2e}, min|u| {min_abs:.3f}"


def _random_constant_case(rng):
    L = rng.uniform(0.25, 4.0)
    k2 = rng.uniform(0.2, 5.0)
    a0 = math.sqrt(L) * rng.uniform(1.0 + 1e-6, 10.0)
    ratio = rng.uniform(-1, 1) * math.sqrt(L) / a0
    phi0 = math.acos(ratio) * rng.choice([-1.0, 1.0])
    v0 = a0 * math.cos(phi0) / math.sqrt(L)
    v1 = -a0 * k2 * math.sin(phi0) / math.sqrt(L)
    return L, k2, a0, phi0, v0, v1


@_timed(4, "transition time and C1 identity", 5.0)
def check_transition_identity():
    details = []
    ok = True
    # form with A0 = 2, phi0 = 0
    p = BeamParams(1.0, 1.0, 1.0)
    rec = match_transition(AttachedModalForm([2.0], [0.0], [1.0]), p)
    ok &= abs(rec.t_bar - math.pi / 3) <= 1e-8 and abs(abs(rec.c1) - math.sqrt(3)) <= 1e-8
    ok &= rec.c1_identity_residual <= 1e-10
    details.append(f"form(A0=2,phi0=0): t_bar-pi/3={rec.t_bar - math.pi / 3:.1e}")
    # data v0 = 0, v1 = 2 has phi0 = -pi/2: first touch at pi/6, crossing phase magnitude pi/3
    basis = build_basis(2, 4, 1.0)
    traj = regime_exact_solve(InitialData.constant(0.0, 2.0), p, basis, 1.0, 0.05)
    rec = traj.transitions[0]
    phase = abs(rec.pre_form.frequencies[0] * rec.t_bar + rec.pre_form.phases[0])
    ok &= len(traj.transitions) == 1
    ok &= abs(rec.t_bar - math.asin(0.5)) <= 1e-8 and abs(phase - math.pi / 3) <= 1e-8
    ok &= abs(abs(rec.c1) - math.sqrt(3)) <= 1e-8 and rec.c1_identity_residual <= 1e-10
    details.append(f"data(v0=0,v1=2): t_bar-pi/6={rec.t_bar - math.pi / 6:.1e}, "
                   f"|C1|-sqrt3={abs(rec.c1) - math.sqrt(3):.1e}, res={rec.c1_identity_residual:.1e}")
    rng = np.random.default_rng(4)
    worst = worst_t = 0.0
    for _ in range(100):
        L, k2, a0, phi0, v0, v1 = _random_constant_case(rng)
        params = BeamParams(1.0, k2, L)
        basis = build_basis(2, 4, L)
        period = 2 * math.pi / k2
        traj = regime_exact_solve(InitialData.constant(v0, v1), params, basis, period, period / 16)
        rec = traj.transitions[0]
        worst = max(worst, rec.c1_identity_residual / (k2 ** 2 * a0 ** 2))
        t_ref = first_touch_time(a0, phi0, k2, math.sqrt(L))
        worst_t = max(worst_t, abs(rec.t_bar - t_ref) * k2)
    ok &= worst <= 1e-9 and worst_t <= 1e-8
    details.append(f"100 random: scaled residual {worst:.1e}, t_bar err {worst_t:.1e}")
    return ok, "; ".join(details)


@_timed(5, "constant data stays spatially constant after detaching", 10.0)
def check_constant_after_transition():
    params = BeamParams(1.0, 1.0, 1.0)
    basis = build_basis(32, 32, 1.0)
    init = InitialData.constant(0.0, 2.0)
    t_bar = match_transition(AttachedModalForm.from_state([0.0], [2.0], params), params).t_bar
    horizon = 3 * t_bar
    exact = regime_exact_solve(init, params, basis, horizon, 1e-3)
    split = integrate(init, params, basis, StepperConfig(1e-3, horizon))
    dev = lambda fields: max(float(np.max(np.abs(f.displacement - f.displacement.mean()))) for f in fields)
    d_exact, d_split = dev(exact.fields), dev(split.fields)
    detached = np.min(np.abs(split.fields[-1].displacement)) > 1 and exact.regimes[-1].value == "detached"
    ok = d_exact <= 1e-9 and d_split <= 1e-9 and detached
    return ok, f"closed form {d_exact:.1e}, splitting {d_split:.1e}, detached at end: {detached}"


@_timed(6, "A0 < sqrt(L): never detaches", 10.0)
def check_never_detaches():
    params = BeamParams(1.0, 1.0, 1.0)
    init = InitialData.constant(0.5, 0.0)
    scenario = classify_scenario(0.5, 0.0, params)
    traj = regime_exact_solve(init, params, build_basis(4, 8, 1.0), 200 * math.pi, 0.01)
    sup = max(float(np.max(np.abs(f.displacement))) for f in traj.fields)
    split = integrate(init, params, build_basis(4, 8, 1.0), StepperConfig(1e-2, 200 * math.pi, snapshot_stride=50))
    sup_split = max(float(np.max(np.abs(f.displacement))) for f in split.fields)
    ok = (scenario is ScenarioClass.NEVER_DETACHES and abs(sup - 0.5) <= 1e-9 and not traj.transitions
          and not split.events and sup_split < 1)
    return ok, (f"sup|u| {sup:.12f} (splitting {sup_split:.6f}), transitions {len(traj.transitions)}, "
                f"splitting events {len(split.events)}")


def _random_params(rng):
    return BeamParams(rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0), rng.uniform(0.5, 3.0))


def _candidate(rng, params, a0, n_modes, target):
    """Detached form with C1**2 + sum B_n**2 nu_n**2 equal to ``target``."""
    nu = detached_frequencies(params, n_modes)
    weights = rng.exponential(size=n_modes) * rng.integers(0, 2, size=n_modes)
    weights[0] = rng.exponential()
    if weights.sum() == 0:
        weights[0] = 1.0
    weights *= target / weights.sum()
    amps = np.zeros(n_modes)
    amps[1:] = np.sqrt(weights[1:]) / nu[1:]
    c1 = math.sqrt(weights[0]) * rng.choice([-1.0, 1.0])
    phases = rng.uniform(-math.pi, math.pi, n_modes)
    phases[0] = 0.0
    return DetachedModalForm(rng.uniform(1, 3), c1, amps, phases, nu)


@_timed(7, "corollary bounds from the energy inequality", 2.0)
def check_corollary():
    rng = np.random.default_rng(7)
    n_modes = 17
    bad_dissipative = bad_contra = 0
    for _ in range(1000):
        params = _random_params(rng)
        a0 = math.sqrt(params.length) * rng.uniform(1.0, 5.0)
        budget = params.kappa2 ** 2 * (a0 ** 2 - params.length)
        cand = _candidate(rng, params, a0, n_modes, rng.uniform(0, 1) * budget)
        rep = corollary_bounds_check(cand, a0, params)
        if rep.energy_residual <= 0 and not (rep.c1_bound_ok and rep.cutoff_ok):
            bad_dissipative += 1
        if rep.energy_residual > 1e-12 * max(1.0, 0.5 * a0 ** 2 * params.kappa2 ** 2):
            bad_dissipative += 1
    for _ in range(1000):
        params = _random_params(rng)
        a0 = math.sqrt(params.length) * rng.uniform(1.0, 5.0)
        cand = _candidate(rng, params, a0, n_modes, 1.0)
        n = np.arange(n_modes)
        csum = np.sum(cand.amplitudes[1:] ** 2 * n[1:] ** 4)
        scale = math.sqrt(cutoff_bound(a0, params) * rng.uniform(1.01, 3.0) / csum) if csum > 0 else 0.0
        if scale == 0.0:
            continue
        cand = DetachedModalForm(cand.c0, cand.c1, cand.amplitudes * scale, cand.phases, cand.frequencies)
        rep = corollary_bounds_check(cand, a0, params)
        if not (rep.cutoff_sum > rep.cutoff_bound and rep.energy_residual > 0):
            bad_contra += 1
    bound = cutoff_bound(2.0, BeamParams(1.0, 1.0, 1.0))
    ok = bad_dissipative == 0 and bad_contra == 0 and abs(bound - 3 / math.pi ** 4) <= 1e-12
    return ok, f"violations {bad_dissipative} + {bad_contra}; cutoff bound {bound:.12f} vs 3/pi^4"


MIXED_INIT = InitialData.cosine_series([(0, 0.9), (1, 0.3)], [])


@_timed(8, "energy conservation and dissipation", 30.0)
def check_energy():
    details = []
    drifts = []
    for setup in (_attached_setup, _detached_setup):
        params, basis, init, _ = setup()
        traj = integrate(init, params, basis, StepperConfig(1e-3, 10.0, snapshot_stride=10))
        e = np.array([r.total for r in traj.energies])
        drifts.append(float(np.max(np.abs(e - e[0])) / max(e[0], 1.0)))
    ok = all(d <= 1e-5 for d in drifts)
    details.append(f"pure drift attached {drifts[0]:.1e}, detached {drifts[1]:.1e}")

    # single mixed runs random-walk in energy (one O(dt) kick per point crossing),
    # so the drift is averaged over a small ensemble of shifted initial levels
    params = BeamParams(1.0, 1.0, 1.0)
    basis = build_basis(32, 32, 1.0)
    dts = (1e-3, 5e-4, 2.5e-4)
    mean_drift = []
    diss_ok = True
    for dt in dts:
        members = []
        for i in range(8):
            init = InitialData.cosine_series([(0, 0.9 + 0.0025 * i), (1, 0.3)], [])
            traj = integrate(init, params, basis, StepperConfig(dt, 2.0))
            e = np.array([r.total for r in traj.energies])
            members.append(float(np.max(np.abs(e - e[0]))) / max(e[0], 1.0))
            diss_ok &= dissipation_check(traj.energies, 10 * dt).passed
        mean_drift.append(float(np.mean(members)))
    ratios = [mean_drift[0] / mean_drift[1], mean_drift[1] / mean_drift[2]]
    ok &= all(1.2 <= r <= 2.8 for r in ratios) and diss_ok
    details.append(f"mixed drift {', '.join(f'{d:.2e}' for d in mean_drift)} ratios "
                   f"{ratios[0]:.2f}, {ratios[1]:.2f}; dissipation pass {diss_ok}")
    return ok, "; ".join(details)


@_timed(9, "energy migration after partial debonding", 30.0)
def check_migration():
    from .cli import run_scenario
    from .config import parse_config

    params = BeamParams(1.0, 1.0, 1.0)
    basis = build_basis(32, 32, 1.0)
    traj = integrate(MIXED_INIT, params, basis, StepperConfig(1e-3, 0.5))
    first = traj.events[0]
    initial2 = modal_energy_spectrum(traj.snapshots[0], params, basis, n_split=2).high_mode_fraction
    after = next(s for s in traj.snapshots if s.time >= first.time)
    frac1 = modal_energy_spectrum(after, params, basis, n_split=1).high_mode_fraction
    frac2 = modal_energy_spectrum(after, params, basis, n_split=2).high_mode_fraction
    with tempfile.TemporaryDirectory() as tmp:
        cfg = parse_config({
            "kappa1": 1, "kappa2": 1, "length": 1, "solver": "splitting", "grid_size": 32,
            "initial": {"cosine_series": {"displacement": [[0, 0.9], [1, 0.3]]}},
            "stepper": {"dt": 1e-3, "t_final": 0.2, "snapshot_stride": 20},
            "outputs": ["spectrum"], "out_dir": str(Path(tmp) / "run"),
        })
        code = run_scenario(cfg)
        spectrum = Path(cfg.out_dir) / "spectrum.csv"
        emitted = code == 0 and spectrum.exists() and spectrum.read_text().startswith("t,n,mode_energy\n")
    ok = initial2 == 0.0 and frac1 > 1e-8 and frac2 > 1e-8 and emitted
    return ok, (f"first event t={first.time:.4f}; n>=2 share {initial2:.1e} -> {frac2:.2e}; "
                f"n>=1 share {frac1:.2e}; spectrum.csv emitted {emitted}")


WEAK_TEST_FUNCTIONS = ((0, 1.0, 1.0), (1, 0.0, 0.5), (3, 0.5, -0.3))


def weak_orders(init: InitialData, params: BeamParams, levels=((0.02, 16), (0.01, 32), (0.005, 64)),
                t_final=2.0, support=1.5):
    """|residual| per refinement level and the observed orders, one row per test function."""
    out = []
    trajs = []
    for dt, M in levels:
        basis = build_basis(M, M, params.length)
        trajs.append((basis, regime_exact_solve(init, params, basis, t_final, dt)))
    for mode, cubic, slope in WEAK_TEST_FUNCTIONS:
        phi = bump_test_function(params.length, support, mode, cubic, slope)
        res = [abs(weak_residual(tr, phi, init, params, b)) for b, tr in trajs]
        orders = [math.log2(res[i] / res[i + 1]) for i in range(len(res) - 1)]
        out.append((res, orders))
    return out


@_timed(10, "weak residual convergence", 20.0)
def check_weak_residual():
    params = BeamParams(1.0, 1.0, 1.0)
    cases = {
        "attached": InitialData.cosine_series([(0, 0.3), (2, 0.2)], [(1, 0.5)]),
        "detached": InitialData.cosine_series([(0, 2.0), (1, 0.1)], [(0, 0.3), (2, 0.4)]),
    }
    worst = math.inf
    parts = []
    for name, init in cases.items():
        for res, orders in weak_orders(init, params):
            worst = min(worst, min(orders))
            parts.append(f"{name} {res[-1]:.1e}")
    return worst >= 1.8, f"min order {worst:.2f}; finest |R|: {', '.join(parts)}"


@_timed(11, "decay-fit slope calibration", 1.0)
def check_decay_fit():
    params = BeamParams(1.0, 1.0, 1.0)
    n = np.arange(65, dtype=float)
    worst = 0.0
    for p in (1.5, 2.5, 4.0):
        alphas = np.zeros(65)
        alphas[1:] = n[1:] ** -p
        rep = spectral_decay_fit(ModalCoefficients(alphas, np.zeros(65)), params, 2.0, (2, 64))
        worst = max(worst, abs(rep.slope + p))
    return worst <= 1e-6, f"max slope error {worst:.1e}"


SUITES = {
    "theorem": (check_transition_identity, check_constant_after_transition, check_never_detaches, check_migration),
    "corollary": (check_corollary, check_decay_fit),
    "convergence": (check_basis, check_attached_convergence, check_detached_exactness, check_energy,
                    check_weak_residual),
}
ALL_CHECKS = sorted((c for suite in SUITES.values() for c in suite), key=lambda c: c.criterion)


def run_suite(name: str) -> list:
    return [check() for check in SUITES[name]]
