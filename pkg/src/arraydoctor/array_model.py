"""Planar array geometry, steering vectors, and far-field pattern synthesis.

The 2D array is reduced to an equivalent 1D representation by column
stacking: the element in grid row ``n`` (y axis) and grid column ``m``
(x axis) maps to flat index ``m * ny + n``.  With the response matrix
``A = outer(a_y, a_x)`` this makes ``vec(A) = kron(a_x, a_y)``, and the
same ordering is used for every flattened quantity in the package
(weights, blockage maps, innovation matrices).  Angles are radians
everywhere inside the library; degrees appear only at the CLI boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array with ``nx`` columns (x axis) and ``ny`` rows (y axis).

    Element spacings are expressed in wavelengths (``d/lambda``); the
    default is half-wavelength spacing on both axes.
    """

    nx: int
    ny: int
    dx_norm: float = 0.5
    dy_norm: float = 0.5

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"array dimensions must be >= 1, got {self.nx}x{self.ny}")
        for name in ("dx_norm", "dy_norm"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    def flat_index(self, m, n):
        """Flat index of the element at grid column ``m``, grid row ``n``."""
        return np.asarray(m) * self.ny + np.asarray(n)

    def vec(self, grid: np.ndarray) -> np.ndarray:
        """Column-stack an ``ny x nx`` grid into a length-``N`` vector."""
        grid = np.asarray(grid)
        if grid.shape != (self.ny, self.nx):
            raise DimensionMismatchError(
                f"grid shape {grid.shape} does not match {self.ny}x{self.nx}"
            )
        return grid.reshape(-1, order="F")

    def unvec(self, v: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`vec`: reshape a length-``N`` vector to the grid."""
        v = np.asarray(v)
        if v.shape != (self.n_elements,):
            raise DimensionMismatchError(
                f"vector length {v.shape} does not match {self.n_elements}"
            )
        return v.reshape(self.ny, self.nx, order="F")


@dataclass(frozen=True)
class Direction:
    """Propagation direction: elevation ``theta`` and azimuth ``phi`` in radians."""

    theta: float
    phi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("direction angles must be finite")

    @classmethod
    def from_degrees(cls, theta_deg: float, phi_deg: float) -> "Direction":
        return cls(math.radians(theta_deg), math.radians(phi_deg))


def steering_axis(n: int, d_norm: float, phase_arg: float) -> np.ndarray:
    """1D response vector ``[e^{j m 2 pi d phase_arg}]`` for ``m = 0 .. n-1``."""
    m = np.arange(n)
    return np.exp(1j * m * 2.0 * np.pi * d_norm * phase_arg)


def steering_vector(geom: ArrayGeometry, direction: Direction) -> np.ndarray:
    """Array response ``a = a_x kron a_y`` toward ``direction``.

    Per-axis entries are ``[a_x]_m = exp(j m 2 pi dx sin(theta) cos(phi))``
    and ``[a_y]_n = exp(j n 2 pi dy sin(theta) sin(phi))``; the Kronecker
    ordering matches the column-stacking flat index ``m * ny + n``.
    """
    st = math.sin(direction.theta)
    a_x = steering_axis(geom.nx, geom.dx_norm, st * math.cos(direction.phi))
    a_y = steering_axis(geom.ny, geom.dy_norm, st * math.sin(direction.phi))
    return np.kron(a_x, a_y)


def response_grid(geom: ArrayGeometry, direction: Direction) -> np.ndarray:
    """Rank-one response matrix ``A = outer(a_y, a_x)`` (shape ``ny x nx``).

    Satisfies ``geom.vec(A) == steering_vector(geom, direction)``.
    """
    st = math.sin(direction.theta)
    a_x = steering_axis(geom.nx, geom.dx_norm, st * math.cos(direction.phi))
    a_y = steering_axis(geom.ny, geom.dy_norm, st * math.sin(direction.phi))
    return np.outer(a_y, a_x)


def pattern(weights: np.ndarray, a: np.ndarray, b: np.ndarray | None = None) -> complex:
    """Far-field pattern ``w^T (b o a)``; omit ``b`` for the ideal pattern.

    Plain transpose, no conjugation: the weights already carry the
    steering phases.
    """
    weights = np.asarray(weights)
    a = np.asarray(a)
    if weights.shape != a.shape:
        raise DimensionMismatchError(
            f"weights length {weights.shape} != steering length {a.shape}"
        )
    z = a if b is None else np.multiply(b, a)
    if z.shape != a.shape:
        raise DimensionMismatchError(
            f"blockage length {np.shape(b)} != steering length {a.shape}"
        )
    return complex(np.dot(weights, z))


def pattern_2d_direct(geom: ArrayGeometry, W: np.ndarray, direction: Direction) -> complex:
    """Literal double-sum far-field pattern of the planar array.

    Slow elementwise evaluation kept as the independent oracle for the
    vectorized form ``pattern(geom.vec(W), steering_vector(...))``.
    """
    W = np.asarray(W)
    if W.shape != (geom.ny, geom.nx):
        raise DimensionMismatchError(
            f"weight matrix shape {W.shape} does not match {geom.ny}x{geom.nx}"
        )
    st = math.sin(direction.theta)
    psi_x = 2.0 * np.pi * geom.dx_norm * st * math.cos(direction.phi)
    psi_y = 2.0 * np.pi * geom.dy_norm * st * math.sin(direction.phi)
    total = 0.0 + 0.0j
    for n in range(geom.ny):
        for m in range(geom.nx):
            total += W[n, m] * np.exp(1j * m * psi_x) * np.exp(1j * n * psi_y)
    return complex(total)
