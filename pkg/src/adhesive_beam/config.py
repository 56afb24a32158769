"""Run configuration: JSON schema, validation and resolved defaults.

Schema (all keys at top level unless noted)::

    kappa1, kappa2, length      positive numbers (required)
    initial                     exactly one of
                                  {"constant": {"v0": x, "v1": y}}
                                  {"cosine_series": {"displacement": [[n, c], ...],
                                                     "velocity": [[n, c], ...]}}
                                  {"samples_file": "path.csv"}  (columns u,v; one row per grid point)
    solver                      "closed_form" | "splitting"          (default "splitting")
    grid_size                   integer >= 2                        (default 64)
    n_modes                     integer in 1..grid_size             (default grid_size)
    stepper.dt                  time step / sample spacing          (see resolve_dt)
    stepper.t_final             positive                            (default 10)
    stepper.crossing_refinement bool                                (default true)
    stepper.snapshot_stride     integer >= 1                        (default ~0.01 / dt)
    outputs                     subset of energy, spectrum, field, events, decay, report
                                                                    (default energy, events)
    out_dir                     output directory                    (default "out")
    n_split                     integer in 1..n_modes-1             (default 1)
    decay_band                  [lo, hi] or null                    (default: skip n=1 and top octave)
    a0                          attached mode-0 amplitude for the cutoff bound, or null
                                (default: derived from the initial data)
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from numbers import Real

import numpy as np

from .basis import build_basis
from .beam import BeamParams
from .errors import ConfigError
from .fields import InitialData
from .integrator import StepperConfig, default_dt

SOLVERS = ("closed_form", "splitting")
OUTPUTS = ("energy", "spectrum", "field", "events", "decay", "report")
_TOP_KEYS = {
    "kappa1", "kappa2", "length", "initial", "solver", "grid_size", "n_modes",
    "stepper", "outputs", "out_dir", "n_split", "decay_band", "a0",
}
_STEPPER_KEYS = {"dt", "t_final", "crossing_refinement", "snapshot_stride"}

# closed-form sampling is not a stability limit, so its default spacing is coarse
CLOSED_FORM_SAMPLE_DT = 1e-2


@dataclass(frozen=True, eq=False)
class RunConfig:
    params: BeamParams
    initial: InitialData
    initial_spec: dict
    solver: str
    n_modes: int
    grid_size: int
    stepper: StepperConfig
    outputs: tuple
    out_dir: str
    n_split: int
    decay_band: tuple | None
    a0: float | None

    def to_dict(self) -> dict:
        return {
            "kappa1": self.params.kappa1,
            "kappa2": self.params.kappa2,
            "length": self.params.length,
            "initial": self.initial_spec,
            "solver": self.solver,
            "grid_size": self.grid_size,
            "n_modes": self.n_modes,
            "stepper": {
                "dt": self.stepper.dt,
                "t_final": self.stepper.t_final,
                "crossing_refinement": self.stepper.crossing_refinement,
                "snapshot_stride": self.stepper.snapshot_stride,
            },
            "outputs": list(self.outputs),
            "out_dir": self.out_dir,
            "n_split": self.n_split,
            "decay_band": list(self.decay_band) if self.decay_band is not None else None,
            "a0": self.a0,
        }


def _number(doc, key, where="", *, positive=False, default=None):
    label = f"{where}{key}"
    if key not in doc:
        if default is not None:
            return default
        raise ConfigError(f"missing required key '{label}'")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, Real) or not math.isfinite(value):
        raise ConfigError(f"'{label}' must be a finite number, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(f"'{label}' must be > 0, got {value!r}")
    return float(value)


def _integer(doc, key, lo, hi, default, where=""):
    label = f"{where}{key}"
    value = doc.get(key, default)
    if isinstance(value, bool) or not isinstance(value, Real) or int(value) != value:
        raise ConfigError(f"'{label}' must be an integer, got {value!r}")
    value = int(value)
    if not lo <= value <= hi:
        raise ConfigError(f"'{label}' must lie in [{lo}, {hi}], got {value}")
    return value


def _pairs(items, label, n_modes):
    if not isinstance(items, list):
        raise ConfigError(f"'{label}' must be a list of [n, coefficient] pairs")
    out = []
    for item in items:
        if not (isinstance(item, (list, tuple)) and len(item) == 2):
            raise ConfigError(f"'{label}' entries must be [n, coefficient] pairs, got {item!r}")
        n, c = item
        if isinstance(n, bool) or not isinstance(n, Real) or int(n) != n or not 0 <= n < n_modes:
            raise ConfigError(f"'{label}' mode index must be an integer in 0..{n_modes - 1}, got {n!r}")
        if isinstance(c, bool) or not isinstance(c, Real) or not math.isfinite(c):
            raise ConfigError(f"'{label}' coefficient must be a finite number, got {c!r}")
        out.append([int(n), float(c)])
    return out


def read_samples_file(path: str):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"u", "v"} <= set(reader.fieldnames):
            raise ConfigError(f"samples file {path} needs a header with columns 'u' and 'v'")
        rows = [(float(r["u"]), float(r["v"])) for r in reader]
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def _initial(doc, n_modes, grid_size, base_dir):
    if "initial" not in doc:
        raise ConfigError("missing required key 'initial'")
    spec = doc["initial"]
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError("'initial' must have exactly one of: constant, cosine_series, samples_file")
    (kind, body), = spec.items()
    if kind == "constant":
        if not isinstance(body, dict) or set(body) - {"v0", "v1"}:
            raise ConfigError("'initial.constant' accepts only keys v0, v1")
        v0 = _number(body, "v0", "initial.constant.")
        v1 = _number(body, "v1", "initial.constant.")
        return InitialData.constant(v0, v1), {"constant": {"v0": v0, "v1": v1}}
    if kind == "cosine_series":
        if not isinstance(body, dict) or set(body) - {"displacement", "velocity"}:
            raise ConfigError("'initial.cosine_series' accepts only keys displacement, velocity")
        disp = _pairs(body.get("displacement", []), "initial.cosine_series.displacement", n_modes)
        vel = _pairs(body.get("velocity", []), "initial.cosine_series.velocity", n_modes)
        return (
            InitialData.cosine_series(disp, vel),
            {"cosine_series": {"displacement": disp, "velocity": vel}},
        )
    if kind == "samples_file":
        if not isinstance(body, str):
            raise ConfigError("'initial.samples_file' must be a path string")
        path = body if os.path.isabs(body) or base_dir is None else os.path.join(base_dir, body)
        path = os.path.abspath(path)
        try:
            u, v = read_samples_file(path)
        except OSError as exc:
            raise ConfigError(f"cannot read 'initial.samples_file' {path}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"malformed 'initial.samples_file' {path}: {exc}") from exc
        if u.size != grid_size:
            raise ConfigError(f"'initial.samples_file' has {u.size} rows but grid_size is {grid_size}")
        return InitialData.from_samples(u, v), {"samples_file": path}
    raise ConfigError(f"unknown initial data kind '{kind}' (expected constant, cosine_series, samples_file)")


def parse_config(source, base_dir: str | None = None) -> RunConfig:
    """Validate a configuration (JSON text or an already-parsed mapping).

    Raises:
        ConfigError: naming the missing, unknown or out-of-range key.
    """
    if isinstance(source, (str, bytes)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"configuration is not valid JSON: {exc}") from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(sorted(unknown))}")

    params = BeamParams(
        _number(doc, "kappa1", positive=True),
        _number(doc, "kappa2", positive=True),
        _number(doc, "length", positive=True),
    )
    solver = doc.get("solver", "splitting")
    if solver not in SOLVERS:
        raise ConfigError(f"'solver' must be one of {', '.join(SOLVERS)}, got {solver!r}")

    grid_size = _integer(doc, "grid_size", 2, 1 << 16, 64)
    n_modes_raw = doc.get("n_modes", grid_size)
    if isinstance(n_modes_raw, Real) and not isinstance(n_modes_raw, bool) and n_modes_raw > grid_size:
        raise ConfigError(f"'n_modes' must satisfy n_modes <= grid_size, got {n_modes_raw} > {grid_size}")
    n_modes = _integer(doc, "n_modes", 1, grid_size, grid_size)
    basis = build_basis(n_modes, grid_size, params.length)

    initial, initial_spec = _initial(doc, n_modes, grid_size, base_dir)

    st = doc.get("stepper", {})
    if not isinstance(st, dict):
        raise ConfigError("'stepper' must be an object")
    unknown = set(st) - _STEPPER_KEYS
    if unknown:
        raise ConfigError(f"unknown stepper key(s): {', '.join(sorted('stepper.' + k for k in unknown))}")
    t_final = _number(st, "t_final", "stepper.", positive=True, default=10.0)
    if st.get("dt") is None:
        dt = CLOSED_FORM_SAMPLE_DT if solver == "closed_form" else default_dt(params, basis)
        dt = min(dt, t_final)
    else:
        dt = _number(st, "dt", "stepper.", positive=True)
    if dt > t_final:
        raise ConfigError(f"'stepper.dt' must not exceed 'stepper.t_final' ({dt} > {t_final})")
    refine = st.get("crossing_refinement", True)
    if not isinstance(refine, bool):
        raise ConfigError(f"'stepper.crossing_refinement' must be true or false, got {refine!r}")
    default_stride = 1 if solver == "closed_form" else max(1, round(1e-2 / dt))
    stride = _integer(st, "snapshot_stride", 1, 1 << 40, default_stride, "stepper.")
    stepper = StepperConfig(dt, t_final, refine, stride)

    outputs = doc.get("outputs", ["energy", "events"])
    if isinstance(outputs, str):
        outputs = [o for o in outputs.split(",") if o]
    if not isinstance(outputs, list) or any(o not in OUTPUTS for o in outputs):
        raise ConfigError(f"'outputs' must be a subset of {', '.join(OUTPUTS)}, got {outputs!r}")
    outputs = tuple(o for o in OUTPUTS if o in outputs)

    out_dir = doc.get("out_dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("'out_dir' must be a non-empty path string")

    if n_modes < 2:
        n_split = _integer(doc, "n_split", 1, 1, 1)
    else:
        n_split = _integer(doc, "n_split", 1, n_modes - 1, 1)

    band = doc.get("decay_band")
    if band is not None:
        if not (isinstance(band, list) and len(band) == 2):
            raise ConfigError("'decay_band' must be [lo, hi] or null")
        lo = _integer({"lo": band[0]}, "lo", 1, n_modes - 1, None, "decay_band.")
        hi = _integer({"hi": band[1]}, "hi", lo, n_modes - 1, None, "decay_band.")
        band = (lo, hi)

    a0 = doc.get("a0")
    if a0 is not None:
        a0 = _number(doc, "a0", positive=True)

    return RunConfig(
        params=params,
        initial=initial,
        initial_spec=initial_spec,
        solver=solver,
        n_modes=n_modes,
        grid_size=grid_size,
        stepper=stepper,
        outputs=outputs,
        out_dir=out_dir,
        n_split=n_split,
        decay_band=band,
        a0=a0,
    )


def load_config(path: str, overrides: dict | None = None) -> RunConfig:
    """Read a JSON config file, apply flat CLI-style overrides, and validate."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in _STEPPER_KEYS:
            doc.setdefault("stepper", {})
            if not isinstance(doc["stepper"], dict):
                raise ConfigError("'stepper' must be an object")
            doc["stepper"][key] = value
        else:
            doc[key] = value
    return parse_config(doc, base_dir=os.path.dirname(os.path.abspath(path)))
