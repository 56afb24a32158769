"""Initial data and the continuous energy functional."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basis import ModalCoefficients, SpectralBasis, analyze, synthesize
from .beam import BeamParams, EnergyReport, FieldState, adhesion_potential
from .errors import DimensionError

_KINDS = ("constant", "cosine_series", "samples")


def _series(pairs) -> tuple[tuple[int, float], ...]:
    out = []
    for n, c in pairs:
        if int(n) != n or n < 0:
            raise ValueError(f"mode index must be a nonnegative integer, got {n!r}")
        out.append((int(n), float(c)))
    return tuple(out)


@dataclass(frozen=True)
class InitialData:
    """Initial displacement v0 and velocity v1.

    Three descriptions are supported:

    * ``constant``: spatially uniform v0, v1.
    * ``cosine_series``: pairs ``(n, c)`` meaning ``c * cos(n pi x / L)``
      (``n = 0`` is the constant term). Coefficients map to modal values
      exactly, without quadrature.
    * ``samples``: values at the collocation points of the basis.
    """

    kind: str
    displacement: object
    velocity: object

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown initial data kind {self.kind!r}")

    @classmethod
    def constant(cls, v0: float, v1: float) -> "InitialData":
        return cls("constant", float(v0), float(v1))

    @classmethod
    def cosine_series(
        cls,
        displacement: Sequence[tuple[int, float]] = (),
        velocity: Sequence[tuple[int, float]] = (),
    ) -> "InitialData":
        return cls("cosine_series", _series(displacement), _series(velocity))

    @classmethod
    def from_samples(cls, displacement, velocity) -> "InitialData":
        u = np.array(displacement, dtype=float)
        v = np.array(velocity, dtype=float)
        if u.ndim != 1 or u.shape != v.shape:
            raise DimensionError("displacement and velocity samples must have equal length")
        u.setflags(write=False)
        v.setflags(write=False)
        return cls("samples", u, v)

    def _series_to_modal(self, pairs, basis: SpectralBasis) -> np.ndarray:
        alphas = np.zeros(basis.n_modes)
        for n, c in pairs:
            if n >= basis.n_modes:
                raise DimensionError(
                    f"mode {n} is not representable with {basis.n_modes} retained modes"
                )
            alphas[n] += c * (np.sqrt(basis.length) if n == 0 else np.sqrt(basis.length / 2))
        return alphas

    def modal(self, basis: SpectralBasis) -> ModalCoefficients:
        if self.kind == "constant":
            return ModalCoefficients(
                self._series_to_modal([(0, self.displacement)], basis),
                self._series_to_modal([(0, self.velocity)], basis),
            )
        if self.kind == "cosine_series":
            return ModalCoefficients(
                self._series_to_modal(self.displacement, basis),
                self._series_to_modal(self.velocity, basis),
            )
        if self.displacement.size != basis.grid_size:
            raise DimensionError(
                f"{self.displacement.size} samples given but the grid has {basis.grid_size} points"
            )
        state = FieldState(0.0, self.displacement, self.velocity, basis.collocation)
        return analyze(state, basis)

    def field(self, basis: SpectralBasis) -> FieldState:
        """Initial field as represented on the basis (projected for raw samples)."""
        return synthesize(self.modal(basis), basis)

    def as_dict(self) -> dict:
        if self.kind == "constant":
            return {"constant": {"v0": self.displacement, "v1": self.velocity}}
        if self.kind == "cosine_series":
            return {
                "cosine_series": {
                    "displacement": [list(p) for p in self.displacement],
                    "velocity": [list(p) for p in self.velocity],
                }
            }
        return {
            "samples": {
                "displacement": self.displacement.tolist(),
                "velocity": self.velocity.tolist(),
            }
        }


def mode_energies(alphas, alpha_dots, params: BeamParams, basis: SpectralBasis) -> np.ndarray:
    """Mechanical energy per mode: (alpha_dot**2 + kappa1**2 lambda**4 alpha**2) / 2."""
    lam4 = basis.lambdas ** 4
    return 0.5 * (np.asarray(alpha_dots) ** 2 + params.kappa1 ** 2 * lam4 * np.asarray(alphas) ** 2)


def adhesion_energy(displacement, params: BeamParams, basis: SpectralBasis) -> float:
    """Midpoint quadrature of the adhesion potential on the collocation grid."""
    return float(basis.weight * np.sum(adhesion_potential(np.asarray(displacement), params.law)))


def energy_of_field(state: FieldState, params: BeamParams, basis: SpectralBasis) -> EnergyReport:
    """Kinetic, bending and adhesion energy of a sampled field.

    Kinetic and bending parts are evaluated from the modal coefficients of the
    field; the adhesion part by pointwise quadrature, since the potential is
    not band-limited.
    """
    modal = analyze(state, basis)
    return energy_from_modal(modal.alphas, modal.alpha_dots, state.displacement, params, basis)


def energy_from_modal(alphas, alpha_dots, displacement, params: BeamParams, basis: SpectralBasis) -> EnergyReport:
    per_mode = mode_energies(alphas, alpha_dots, params, basis)
    kinetic = 0.5 * float(np.sum(np.asarray(alpha_dots) ** 2))
    bending = 0.5 * params.kappa1 ** 2 * float(np.sum(basis.lambdas ** 4 * np.asarray(alphas) ** 2))
    adhesion = adhesion_energy(displacement, params, basis)
    return EnergyReport(
        kinetic=kinetic,
        bending=bending,
        adhesion=adhesion,
        total=kinetic + bending + adhesion,
        mode_energy=per_mode,
    )
