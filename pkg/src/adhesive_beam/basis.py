"""Neumann cosine eigenbasis and midpoint-collocation transforms.

Modes are u_0 = L**-1/2 and u_n = sqrt(2/L) cos(n pi x / L).  On the
midpoint grid x_j = (j + 1/2) L / M they are exactly orthonormal under the
uniform weight L / M for n <= M - 1 (the DCT-II structure), so analysis is a
plain weighted projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beam import FieldState
from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class ModalCoefficients:
    alphas: np.ndarray
    alpha_dots: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float)
        b = np.asarray(self.alpha_dots, dtype=float)
        if a.ndim != 1 or a.shape != b.shape:
            raise DimensionError(f"alphas and alpha_dots must match, got {a.shape} and {b.shape}")
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "alpha_dots", b)

    @property
    def n_modes(self) -> int:
        return self.alphas.size


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Truncated cosine basis with its collocation grid.

    Attributes:
        n_modes: number of retained modes (indices 0 .. n_modes - 1).
        grid_size: number of midpoint collocation points M.
        length: domain length L.
        lambdas: wavenumbers n pi / L.
        collocation: grid points (j + 1/2) L / M.
        modes: matrix of mode values, shape (n_modes, grid_size).
    """

    n_modes: int
    grid_size: int
    length: float
    lambdas: np.ndarray
    collocation: np.ndarray
    modes: np.ndarray

    @property
    def weight(self) -> float:
        return self.length / self.grid_size

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_modes)

    def to_grid(self, coefficients: np.ndarray) -> np.ndarray:
        """Sum coefficients against the modes; works on stacked rows too."""
        return np.asarray(coefficients) @ self.modes

    def project(self, values: np.ndarray) -> np.ndarray:
        return self.weight * (np.asarray(values) @ self.modes.T)

    def check_grid(self, grid: np.ndarray) -> None:
        grid = np.asarray(grid)
        if grid.shape != self.collocation.shape:
            raise DimensionError(
                f"field has {grid.size} points but the basis grid has {self.grid_size}"
            )
        if not np.allclose(grid, self.collocation, rtol=0, atol=1e-12 * self.length):
            raise DimensionError("field grid does not match the basis collocation points")


def build_basis(n_modes: int, grid_size: int, length: float) -> SpectralBasis:
    """Construct the cosine basis on the midpoint grid.

    Raises:
        ConfigError: unless 1 <= n_modes <= grid_size, grid_size >= 2 and length > 0.
    """
    if int(n_modes) != n_modes or int(grid_size) != grid_size:
        raise ConfigError("n_modes and grid_size must be integers")
    n_modes, grid_size = int(n_modes), int(grid_size)
    if grid_size < 2:
        raise ConfigError(f"grid_size must be >= 2, got {grid_size}")
    if not 1 <= n_modes <= grid_size:
        raise ConfigError(f"need 1 <= n_modes <= grid_size, got n_modes={n_modes}, grid_size={grid_size}")
    if not np.isfinite(length) or length <= 0:
        raise ConfigError(f"length must be positive, got {length!r}")
    length = float(length)
    n = np.arange(n_modes)
    x = (np.arange(grid_size) + 0.5) * length / grid_size
    lambdas = n * np.pi / length
    modes = np.sqrt(2.0 / length) * np.cos(np.outer(lambdas, x))
    modes[0, :] = length ** -0.5
    for arr in (lambdas, x, modes):
        arr.setflags(write=False)
    return SpectralBasis(n_modes, grid_size, length, lambdas, x, modes)


def synthesize(coeffs: ModalCoefficients, basis: SpectralBasis) -> FieldState:
    if coeffs.n_modes != basis.n_modes:
        raise DimensionError(f"expected {basis.n_modes} coefficients, got {coeffs.n_modes}")
    return FieldState(
        time=coeffs.time,
        displacement=basis.to_grid(coeffs.alphas),
        velocity=basis.to_grid(coeffs.alpha_dots),
        grid=basis.collocation,
    )


def analyze(state: FieldState, basis: SpectralBasis) -> ModalCoefficients:
    """Project a sampled field onto the retained modes."""
    basis.check_grid(state.grid)
    return ModalCoefficients(
        alphas=basis.project(state.displacement),
        alpha_dots=basis.project(state.velocity),
        time=state.time,
    )


def bending_multiplier(basis: SpectralBasis, n: int) -> float:
    """Eigenvalue of the fourth derivative on mode n, i.e. lambda_n**4."""
    if not 0 <= n < basis.n_modes:
        raise IndexError(f"mode index {n} outside 0..{basis.n_modes - 1}")
    return float(basis.lambdas[n] ** 4)


def second_derivative(values: np.ndarray, basis: SpectralBasis) -> np.ndarray:
    """d^2/dx^2 of grid samples, through the modal multiplier -lambda_n**2."""
    return basis.to_grid(-(basis.lambdas ** 2) * basis.project(values))
