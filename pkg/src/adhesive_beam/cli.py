"""Command-line entry point: run scenarios, sweeps and verification suites."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .basis import build_basis
from .closed_form import classify_scenario, constant_data_form, regime_exact_solve
from .config import RunConfig, load_config
from .diagnostics import modal_energy_spectrum, spectral_decay_fit
from .errors import BlowUpError, ConfigError, MixedRegimeError, PreconditionError
from .fields import energy_from_modal
from .integrator import detect_regime, dissipation_check, integrate

log = logging.getLogger("adhesive_beam")

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_MIXED = 3
EXIT_BLOWUP = 4


def fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _attached_a0(cfg: RunConfig, modal0) -> float:
    if cfg.a0 is not None:
        return cfg.a0
    return float(math.hypot(modal0.alphas[0], modal0.alpha_dots[0] / cfg.params.kappa2))


def _solve(cfg: RunConfig, basis):
    """Run the chosen solver; returns (times, fields, modal, regimes, event rows, transitions)."""
    if cfg.solver == "closed_form":
        traj = regime_exact_solve(cfg.initial, cfg.params, basis, cfg.stepper.t_final,
                                  cfg.stepper.dt * cfg.stepper.snapshot_stride)
        events = [
            (rec.t_bar, rec.direction, cfg.grid_size, True, rec.c1, rec.c1_identity_residual)
            for rec in traj.transitions
        ]
        regimes = [r.value for r in traj.regimes]
        return traj.times, traj.fields, traj.modal, regimes, events, traj.transitions
    traj = integrate(cfg.initial, cfg.params, basis, cfg.stepper)
    events = [(e.time, e.direction.value, e.n_points, e.refined, None, None) for e in traj.events]
    regimes = [detect_regime(f).value for f in traj.fields]
    modal = [s.modal for s in traj.snapshots]
    return traj.times, traj.fields, modal, regimes, events, []


def _run(cfg: RunConfig, workdir: Path) -> dict:
    basis = build_basis(cfg.n_modes, cfg.grid_size, cfg.params.length)
    params = cfg.params
    times, fields, modal, regimes, events, transitions = _solve(cfg, basis)
    energies = [energy_from_modal(m.alphas, m.alpha_dots, f.displacement, params, basis)
                for m, f in zip(modal, fields)]
    totals = np.array([e.total for e in energies])
    e0 = totals[0]
    drift = float(np.max(np.abs(totals - e0)) / max(e0, 1.0))
    diss = dissipation_check(energies, 10 * cfg.stepper.dt)
    files = []

    if "energy" in cfg.outputs:
        _write_csv(workdir / "energy.csv", ["t", "E_total", "E_kin", "E_bend", "E_adh", "regime"],
                   ([fmt(t), fmt(e.total), fmt(e.kinetic), fmt(e.bending), fmt(e.adhesion), r]
                    for t, e, r in zip(times, energies, regimes)))
        files.append("energy.csv")
    if "spectrum" in cfg.outputs:
        _write_csv(workdir / "spectrum.csv", ["t", "n", "mode_energy"],
                   ([fmt(t), str(n), fmt(en)] for t, e in zip(times, energies)
                    for n, en in enumerate(e.mode_energy)))
        files.append("spectrum.csv")
    if "field" in cfg.outputs:
        x = basis.collocation
        _write_csv(workdir / "field.csv", ["t", "x", "u", "v"],
                   ([fmt(f.time), fmt(xj), fmt(uj), fmt(vj)] for f in fields
                    for xj, uj, vj in zip(x, f.displacement, f.velocity)))
        files.append("field.csv")
    if "events" in cfg.outputs:
        _write_csv(workdir / "events.csv", ["t", "direction", "n_points", "refined", "c1", "c1_identity_residual"],
                   ([fmt(t), d, str(n), "true" if ref else "false",
                     "" if c1 is None else fmt(c1), "" if res is None else fmt(res)]
                    for t, d, n, ref, c1, res in events))
        files.append("events.csv")

    a0 = _attached_a0(cfg, modal[0])
    decay = None
    if basis.n_modes >= 3:
        fit = spectral_decay_fit(modal[-1], params, a0, cfg.decay_band)
        decay = {
            "a0": a0,
            "band": list(fit.band),
            "cutoff_sum": fit.cutoff_sum,
            "cutoff_bound": fit.cutoff_bound,
            "cutoff_ok": bool(fit.cutoff_ok),
            "slope": fit.slope if fit.slope_defined else None,
            "final_regime": regimes[-1],
        }
        if "decay" in cfg.outputs:
            _write_csv(workdir / "decay.csv", ["n", "B_n"],
                       ([str(n), fmt(b)] for n, b in enumerate(fit.amplitudes) if n >= 1))
            files.append("decay.csv")

    scenario = None
    if cfg.initial.kind == "constant":
        try:
            scenario = classify_scenario(cfg.initial.displacement, cfg.initial.velocity, params).value
        except PreconditionError:
            scenario = None
    spectrum_final = None
    if basis.n_modes >= 2:
        rep = modal_energy_spectrum(fields[-1], params, basis, cfg.n_split)
        spectrum_final = {"n_split": cfg.n_split, "high_mode_fraction": rep.high_mode_fraction}

    summary = {
        "solver": cfg.solver,
        "n_snapshots": len(times),
        "n_events": len(events),
        "events": [{"t": t, "direction": d, "n_points": n} for t, d, n, *_ in events],
        "t_bar": [rec.t_bar for rec in transitions],
        "c1": [rec.c1 for rec in transitions],
        "c1_identity_residual": [rec.c1_identity_residual for rec in transitions],
        "energy_initial": float(e0),
        "energy_final": float(totals[-1]),
        "energy_drift": drift,
        "dissipation": {"tolerance": 10 * cfg.stepper.dt, "max_excess": diss.max_excess, "pass": diss.passed},
        "scenario": scenario,
        "final_spectrum": spectrum_final,
        "decay": decay,
    }
    if "report" in cfg.outputs:
        lines = [f"{k}: {json.dumps(v)}" for k, v in summary.items()]
        (workdir / "report.txt").write_text("\n".join(lines) + "\n")
        files.append("report.txt")
    manifest = {"version": __version__, "config": cfg.to_dict(), "files": files, "summary": summary}
    (workdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def run_scenario(cfg: RunConfig) -> int:
    """Run one configuration and write its outputs into ``cfg.out_dir``.

    Files are produced in a scratch directory and moved into place only on
    success, so a failed run leaves no partial outputs behind.
    """
    out = Path(cfg.out_dir)
    created = not out.exists()
    try:
        out.mkdir(parents=True, exist_ok=True)
        work = Path(tempfile.mkdtemp(prefix=".partial-", dir=out))
    except OSError as exc:
        log.error("cannot use output directory %s: %s", out, exc)
        return EXIT_IO
    code = EXIT_OK
    try:
        _run(cfg, work)
        for item in sorted(work.iterdir()):
            os.replace(item, out / item.name)
    except MixedRegimeError as exc:
        log.error("closed-form solver cannot handle this data: %s", exc)
        code = EXIT_MIXED
    except BlowUpError as exc:
        log.error("numeric blow-up: %s", exc)
        code = EXIT_BLOWUP
    except (ConfigError, PreconditionError) as exc:
        log.error("configuration error: %s", exc)
        code = EXIT_CONFIG
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        code = EXIT_IO
    finally:
        shutil.rmtree(work, ignore_errors=True)
        if code != EXIT_OK and created:
            shutil.rmtree(out, ignore_errors=True)
    return code


def _overrides(args) -> dict:
    emit = None
    if args.emit is not None:
        emit = [e.strip() for e in args.emit.split(",") if e.strip()]
    return {"out_dir": args.out_dir, "solver": args.solver, "dt": args.dt,
            "t_final": args.t_final, "outputs": emit}


def _simulate(args) -> int:
    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    code = run_scenario(cfg)
    if code == EXIT_OK:
        print(f"wrote outputs to {cfg.out_dir}")
    return code


def _sweep_one(path: str, out_root: str) -> tuple:
    try:
        cfg = load_config(path, {"out_dir": os.path.join(out_root, Path(path).stem)})
    except ConfigError as exc:
        return path, EXIT_CONFIG, str(exc)
    return path, run_scenario(cfg), cfg.out_dir


def _sweep(args) -> int:
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(_sweep_one, args.config, [args.out_dir] * len(args.config)))
    worst = EXIT_OK
    for path, code, info in results:
        print(f"{'ok ' if code == EXIT_OK else 'ERR'} {path} -> exit {code} ({info})")
        worst = max(worst, code)
    return worst


def _verify(args) -> int:
    from .verification import SUITES, run_suite

    names = list(SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        for res in run_suite(name):
            print(res.line())
            ok &= res.passed
    return EXIT_OK if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adhesive-beam", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one configuration")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out-dir")
    sim.add_argument("--solver", choices=["closed_form", "splitting"])
    sim.add_argument("--dt", type=float)
    sim.add_argument("--t-final", type=float)
    sim.add_argument("--emit", help="comma-separated subset of energy,spectrum,events,field,decay,report")
    sim.set_defaults(func=_simulate)

    sw = sub.add_parser("sweep", help="run several configurations concurrently")
    sw.add_argument("--config", action="append", required=True)
    sw.add_argument("--out-dir", required=True, help="each run writes to <out-dir>/<config stem>")
    sw.add_argument("--workers", type=int, default=None)
    sw.set_defaults(func=_sweep)

    ver = sub.add_parser("verify", help="run acceptance suites and print a pass/fail table")
    ver.add_argument("--suite", choices=["theorem", "corollary", "convergence", "all"], default="all")
    ver.set_defaults(func=_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
