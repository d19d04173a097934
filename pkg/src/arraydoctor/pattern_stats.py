"""Closed-form mean/variance of the blocked far-field pattern of a linear array.

Statistics are for the azimuth cut (theta = pi/2) of an nx-element linear
array steered at ``phi_t`` with gain-normalized weights
``w_m = exp(-j m 2 pi d cos(phi_t)) / nx``, so the fault-free pattern at
the steering angle is exactly 1.

Conventions of the source tables:

* Off the steering angle the closed forms are the exact moments under
  independent per-element blockage (probability ``pb``); the mean is a
  Dirichlet kernel scaled by ``E[b]``, and the variance is ``var[b]/nx``
  with the complex-variance identity ``var[b] = E|b|^2 - |E b|^2``.
* At the steering angle the tabulated variance follows the
  fixed-blockage-count convention (exactly ``round(pb*nx)`` faults) and
  is quoted at array scale, i.e. ``nx`` times the variance of the
  gain-normalized pattern.  Deterministic intensities therefore have
  exactly zero main-lobe variance.  :func:`empirical_pattern_stats`
  exposes ``fixed_count`` so Monte Carlo reproduces both conventions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_model import ArrayGeometry, Direction
from .blockage import BlockageModel, sample_blockage, sample_blockage_fixed_count

_SIN_EPS = 1e-12


@dataclass(frozen=True)
class MeanVar:
    """First two moments of the (complex) pattern value."""

    mean: complex
    variance: float

    def __post_init__(self) -> None:
        if self.variance < 0:
            raise ValueError(f"variance must be >= 0, got {self.variance}")


@dataclass(frozen=True)
class EmpiricalMeanVar(MeanVar):
    """Monte Carlo estimate with standard errors of each component."""

    se_mean_re: float = 0.0
    se_mean_im: float = 0.0
    se_variance: float = 0.0
    trials: int = 0


def dirichlet_kernel(gamma: float, nx: int) -> complex:
    """Normalized array factor ``sin(nx g)/(nx sin g) * exp(j (nx-1) g)``.

    At ``sin(gamma) = 0`` the 0/0 form is evaluated by its limit; the
    full kernel equals exactly 1 there (every summand is 1), so grating
    points are boundary handling, not failures.
    """
    s = np.sin(gamma)
    if abs(s) < _SIN_EPS:
        k = round(gamma / np.pi)
        sign = -1.0 if (k * (nx - 1)) % 2 else 1.0
        return complex(sign * np.exp(1j * (nx - 1) * gamma))
    return complex(np.sin(nx * gamma) / (nx * s) * np.exp(1j * (nx - 1) * gamma))


def pattern_gamma(dx_norm: float, phi: float, phi_t: float) -> float:
    """Half phase step ``gamma = pi d (cos phi - cos phi_t)`` of the steered cut."""
    return np.pi * dx_norm * (np.cos(phi) - np.cos(phi_t))


def mainlobe_stats(pb: float, model: BlockageModel) -> MeanVar:
    """Moments of the steered pattern at the steering angle.

    Mean is ``1 - pb + pb*E[alpha]``; variance is ``pb * var[alpha]``
    (array-scale, fixed-count convention — zero for deterministic
    intensities).
    """
    if not 0.0 <= pb <= 1.0:
        raise ValueError(f"pb must be in [0, 1], got {pb}")
    mean = (1.0 - pb) + pb * model.mean_alpha
    variance = pb * model.var_alpha
    return MeanVar(mean=complex(mean), variance=float(variance))


def sidelobe_stats(
    pb: float,
    model: BlockageModel,
    nx: int,
    dx_norm: float,
    phi: float,
    phi_t: float,
) -> MeanVar:
    """Moments of the steered pattern away from the steering angle.

    Exact under independent per-element blockage:
    ``mean = (1 - pb + pb*E[alpha]) * D(gamma)`` and
    ``variance = (E|b|^2 - |E b|^2) / nx``.
    """
    if not 0.0 <= pb <= 1.0:
        raise ValueError(f"pb must be in [0, 1], got {pb}")
    gamma = pattern_gamma(dx_norm, phi, phi_t)
    scale = (1.0 - pb) + pb * model.mean_alpha
    mean = scale * dirichlet_kernel(gamma, nx)
    e_b2 = (1.0 - pb) + pb * model.mean_abs2_alpha
    e_b = (1.0 - pb) + pb * model.mean_alpha
    variance = (e_b2 - abs(e_b) ** 2) / nx
    return MeanVar(mean=complex(mean), variance=float(max(variance, 0.0)))


def steered_weights(nx: int, dx_norm: float, phi_t: float) -> np.ndarray:
    """Gain-normalized steering weights of the azimuth cut."""
    m = np.arange(nx)
    return np.exp(-1j * m * 2.0 * np.pi * dx_norm * np.cos(phi_t)) / nx


def empirical_pattern_stats(
    geom: ArrayGeometry,
    pb: float,
    model: BlockageModel,
    direction: Direction,
    steer_direction: Direction,
    trials: int,
    rng: np.random.Generator,
    fixed_count: bool = False,
) -> EmpiricalMeanVar:
    """Monte Carlo mean/variance of the steered linear-array pattern.

    With ``fixed_count`` the number of blocked elements is pinned to
    ``round(pb * nx)`` per trial (the main-lobe table convention);
    otherwise elements are blocked independently with probability ``pb``.
    """
    if geom.ny != 1:
        raise ValueError("pattern statistics are defined for linear arrays (ny = 1)")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")

    nx = geom.nx
    w = steered_weights(nx, geom.dx_norm, steer_direction.phi)
    phase = np.exp(1j * np.arange(nx) * 2.0 * np.pi * geom.dx_norm * np.cos(direction.phi))
    gain = w * phase  # per-element contribution of an unblocked element

    if fixed_count:
        count = int(round(pb * nx))
        maps = [sample_blockage_fixed_count(nx, count, model, rng) for _ in range(trials)]
    else:
        maps = [sample_blockage(nx, pb, model, rng) for _ in range(trials)]
    b = np.stack([m.b for m in maps])
    samples = b @ gain

    mean = complex(samples.mean())
    centered = samples - mean
    abs2 = np.abs(centered) ** 2
    if trials > 1:
        variance = float(abs2.sum() / (trials - 1))
        se_re = float(samples.real.std(ddof=1) / np.sqrt(trials))
        se_im = float(samples.imag.std(ddof=1) / np.sqrt(trials))
        mu4 = float(np.mean(abs2**2))
        se_var = float(np.sqrt(max(mu4 - variance**2, 0.0) / trials))
    else:
        variance, se_re, se_im, se_var = 0.0, 0.0, 0.0, 0.0
    return EmpiricalMeanVar(
        mean=mean,
        variance=variance,
        se_mean_re=se_re,
        se_mean_im=se_im,
        se_variance=se_var,
        trials=trials,
    )
