"""Physical parameters, the breakable adhesion law and field containers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError

THRESHOLD = 1.0


@dataclass(frozen=True)
class BeamParams:
    """Constants of the beam problem on the interval [0, length].

    Attributes:
        kappa1: flexural stiffness, multiplies the fourth derivative.
        kappa2: adhesion stiffness; the attached spring force is kappa2**2 * u.
        length: domain length L.
    """

    kappa1: float
    kappa2: float
    length: float

    def __post_init__(self):
        for name in ("kappa1", "kappa2", "length"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def law(self) -> "AdhesionLaw":
        return AdhesionLaw(self.kappa2)


@dataclass(frozen=True)
class AdhesionLaw:
    """Elastic-breakable adhesion with unit debonding threshold.

    The force at |u| == 1 takes the attached branch ("closed attached"
    convention), which is one measurable selection of the jump.
    """

    kappa2: float
    threshold: float = field(default=THRESHOLD, init=False)
    boundary_convention: str = field(default="closed_attached", init=False)


def _unwrap(x, out):
    return float(out) if np.ndim(x) == 0 else out


def adhesion_force(u, law: AdhesionLaw):
    """Derivative of the adhesion potential, with the attached branch at |u| = 1."""
    u_arr = np.asarray(u, dtype=float)
    k2 = law.kappa2 ** 2
    out = np.where(np.abs(u_arr) <= law.threshold, k2 * u_arr, 0.0)
    return _unwrap(u, out)


def adhesion_potential(u, law: AdhesionLaw):
    """Quadratic well inside the threshold, constant plateau outside."""
    u_arr = np.asarray(u, dtype=float)
    k2 = law.kappa2 ** 2
    out = np.where(np.abs(u_arr) <= law.threshold, 0.5 * k2 * u_arr ** 2, 0.5 * k2)
    return _unwrap(u, out)


@dataclass(frozen=True)
class FieldState:
    """Displacement and velocity sampled on the collocation grid at one time."""

    time: float
    displacement: np.ndarray
    velocity: np.ndarray
    grid: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.displacement, dtype=float)
        v = np.asarray(self.velocity, dtype=float)
        x = np.asarray(self.grid, dtype=float)
        if u.ndim != 1 or u.shape != v.shape or u.shape != x.shape:
            raise DimensionError(
                f"displacement, velocity and grid must be 1-D of equal length, "
                f"got {u.shape}, {v.shape}, {x.shape}"
            )
        if u.size < 2:
            raise DimensionError("a field needs at least 2 grid points")
        if np.any(np.diff(x) <= 0):
            raise DimensionError("grid points must be strictly increasing")
        object.__setattr__(self, "displacement", u)
        object.__setattr__(self, "velocity", v)
        object.__setattr__(self, "grid", x)

    @property
    def size(self) -> int:
        return self.displacement.size


@dataclass(frozen=True)
class EnergyReport:
    kinetic: float
    bending: float
    adhesion: float
    total: float
    mode_energy: np.ndarray
