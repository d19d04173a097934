"""Simulation of the diagnosis measurement processes.

Three measurement modes are provided, each in the sign convention of the
pipeline that consumes it:

* :func:`measure_rx` — receiver-only innovations, received minus ideal,
  so the sparse unknown is ``q = (b - 1) o a``.
* :func:`measure_group` — the nx+ny-measurement schedule for complete
  group blockages, ideal minus damaged, so the row/column sums of
  ``A_s = A - A o B`` are non-zero exactly on the faults.
* :func:`measure_joint` — joint TX/RX measurements, received minus
  ideal, unknown ``A_s = (b o a)(b_T o a_T)^* - a a_T^*``.

Support detection is sign-invariant; coefficient extraction is applied
in the matching convention by the recovery modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .array_model import ArrayGeometry, Direction, response_grid, steering_vector
from .blockage import BlockageMap, innovation_coeffs
from .errors import DimensionMismatchError

_UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class PhaseShifterCodebook:
    """Unit-cell weights realizable by ``bits``-bit analog phase shifters."""

    bits: int

    def __post_init__(self) -> None:
        if self.bits not in (1, 2):
            raise ValueError(f"unsupported phase shifter resolution: {self.bits} bits")

    @property
    def alphabet(self) -> np.ndarray:
        if self.bits == 1:
            return np.array([1.0, -1.0], dtype=complex)
        return np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j], dtype=complex)

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        """i.i.d. uniform draws from the alphabet."""
        alphabet = self.alphabet
        return alphabet[rng.integers(0, alphabet.size, size=shape)]


@dataclass(frozen=True)
class Impairments:
    """Optional measurement impairments.

    ``angle_jitter_deg`` is the half-width of the uniform AoA/AoD error,
    drawn once per diagnosis session.  ``multipath`` is
    ``(num_paths, direct_energy_fraction)``: total path count including
    the direct one, and the fraction of energy in the direct path.
    """

    angle_jitter_deg: float = 0.0
    multipath: tuple[int, float] | None = None

    def __post_init__(self) -> None:
        if self.angle_jitter_deg < 0:
            raise ValueError("angle_jitter_deg must be >= 0")
        if self.multipath is not None:
            num_paths, frac = self.multipath
            if num_paths < 2:
                raise ValueError("multipath needs at least 2 paths (direct + 1 scattered)")
            if not 0.0 < frac <= 1.0:
                raise ValueError("direct_energy_fraction must be in (0, 1]")

    @classmethod
    def none(cls) -> "Impairments":
        return cls()


@dataclass(frozen=True)
class MeasurementSet:
    """Weighting matrix, innovation observations, and effective SNR."""

    X: np.ndarray
    y: np.ndarray
    rho: float
    convention: str = "received-minus-ideal"

    def __post_init__(self) -> None:
        if self.y.shape[0] != self.X.shape[0]:
            raise DimensionMismatchError(
                f"y length {self.y.shape[0]} != measurement count {self.X.shape[0]}"
            )

    @property
    def k(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class JointMeasurementSet:
    """Joint TX/RX measurements ``Y = W^* A_s F + E``."""

    W: np.ndarray
    F: np.ndarray
    Y: np.ndarray
    rho: float
    convention: str = "received-minus-ideal"

    def __post_init__(self) -> None:
        expected = (self.W.shape[1], self.F.shape[1])
        if self.Y.shape != expected:
            raise DimensionMismatchError(f"Y shape {self.Y.shape} != {expected}")

    @property
    def k(self) -> int:
        return self.Y.size


def random_weights(k: int, n: int, bits: int, rng: np.random.Generator) -> np.ndarray:
    """K x N measurement matrix of i.i.d. codebook draws (one row per measurement)."""
    if k < 1 or n < 1:
        raise ValueError(f"matrix dimensions must be >= 1, got {k}x{n}")
    return PhaseShifterCodebook(bits).draw(rng, (k, n))


def complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circularly symmetric complex Gaussian samples with the given total variance."""
    if variance == 0.0:
        return np.zeros(shape, dtype=complex)
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _noise_variance(rho: float) -> float:
    if not rho > 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    return 0.0 if math.isinf(rho) else 1.0 / rho


def measure_rx(
    geom: ArrayGeometry,
    bmap: BlockageMap,
    X: np.ndarray,
    direction: Direction,
    rho: float,
    impairments: Impairments = Impairments(),
    rng: np.random.Generator | None = None,
) -> MeasurementSet:
    """Receiver-only innovation measurements ``y = X q + e``.

    The damaged response is evaluated at the true (jittered) direction
    while the subtracted ideal pattern uses the nominal one, which is
    what turns AoA/AoD error into mismatch noise.  Each scattered path
    contributes ``g_p * X (c o a(dir_p))`` over a contiguous window of
    measurement indices starting at a random delay.
    """
    if rng is None:
        rng = np.random.default_rng()
    X = np.asarray(X)
    if X.shape[1] != geom.n_elements:
        raise DimensionMismatchError(
            f"X has {X.shape[1]} columns, expected {geom.n_elements}"
        )
    k = X.shape[0]
    a_nominal = steering_vector(geom, direction)

    if impairments.angle_jitter_deg > 0:
        half = math.radians(impairments.angle_jitter_deg)
        true_dir = Direction(
            direction.theta + rng.uniform(-half, half),
            direction.phi + rng.uniform(-half, half),
        )
    else:
        true_dir = direction
    a_true = steering_vector(geom, true_dir)

    y = X @ (bmap.b * a_true - a_nominal)

    if impairments.multipath is not None:
        num_paths, direct_frac = impairments.multipath
        c = innovation_coeffs(bmap)
        n_extra = num_paths - 1
        gain_var = ((1.0 - direct_frac) / direct_frac) / n_extra
        for _ in range(n_extra):
            path_dir = Direction(rng.uniform(0.0, np.pi), rng.uniform(0.0, 2.0 * np.pi))
            gain = complex_gaussian(rng, (), gain_var)
            start = int(rng.integers(0, k))
            a_path = steering_vector(geom, path_dir)
            y[start:] += gain * (X[start:] @ (c * a_path))

    y = y + complex_gaussian(rng, k, _noise_variance(rho))
    return MeasurementSet(X=X, y=y, rho=rho, convention="received-minus-ideal")


def _check_unitary(M: np.ndarray, name: str) -> None:
    n = M.shape[0]
    if M.shape != (n, n):
        raise DimensionMismatchError(f"{name} must be square, got {M.shape}")
    err = np.max(np.abs(M.conj().T @ M - np.eye(n)))
    if err > _UNITARY_TOL:
        raise ValueError(f"{name} is not orthonormal (max deviation {err:.2e})")


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Orthonormalize a complex Gaussian matrix (QR with positive diagonal)."""
    G = complex_gaussian(rng, (n, n), 1.0)
    Q, R = np.linalg.qr(G)
    d = np.diagonal(R).copy()
    d[d == 0] = 1.0
    return Q * (d / np.abs(d))


def measure_group(
    geom: ArrayGeometry,
    bmap: BlockageMap,
    W: np.ndarray,
    P: np.ndarray,
    w0: np.ndarray,
    p0: np.ndarray,
    rho: float,
    direction: Direction = Direction(np.pi / 2, np.pi / 3),
    rng: np.random.Generator | None = None,
) -> MeasurementSet:
    """nx+ny measurements of weighted row/column sums of ``A_s = A - A o B``.

    The first ``ny`` observations use the rows of ``W`` against the
    fixed column weighting ``p0``; the remaining ``nx`` use the fixed
    ``w0`` against the rows of ``P``.  Stacked, ``y = Phi x + e`` with
    ``Phi = blockdiag(W, P)``, ``x = [A_s p0; (w0^T A_s)^T]``.
    """
    if rng is None:
        rng = np.random.default_rng()
    _check_unitary(np.asarray(W), "W")
    _check_unitary(np.asarray(P), "P")
    if W.shape[0] != geom.ny or P.shape[0] != geom.nx:
        raise DimensionMismatchError(
            f"W/P sizes {W.shape[0]}/{P.shape[0]} do not match grid {geom.ny}x{geom.nx}"
        )
    w0 = np.asarray(w0)
    p0 = np.asarray(p0)
    if w0.shape != (geom.ny,) or p0.shape != (geom.nx,):
        raise DimensionMismatchError("w0/p0 lengths must be ny and nx")

    A = response_grid(geom, direction)
    B = geom.unvec(bmap.b)
    A_s = A - A * B
    x1 = A_s @ p0
    x2 = A_s.T @ w0
    k = geom.ny + geom.nx
    y = np.concatenate([W @ x1, P @ x2]) + complex_gaussian(rng, k, _noise_variance(rho))
    phi = np.zeros((k, k), dtype=complex)
    phi[: geom.ny, : geom.ny] = W
    phi[geom.ny :, geom.ny :] = P
    return MeasurementSet(X=phi, y=y, rho=rho, convention="ideal-minus-damaged")


def measure_joint(
    rx_geom: ArrayGeometry,
    tx_geom: ArrayGeometry,
    map_rx: BlockageMap,
    map_tx: BlockageMap,
    k_r: int,
    k_t: int,
    rx_direction: Direction,
    tx_direction: Direction,
    rho: float,
    bits: int = 2,
    rng: np.random.Generator | None = None,
) -> JointMeasurementSet:
    """Joint TX/RX innovation matrix ``Y = W^*(A - A_I)F + E``."""
    if rng is None:
        rng = np.random.default_rng()
    codebook = PhaseShifterCodebook(bits)
    a = steering_vector(rx_geom, rx_direction)
    a_t = steering_vector(tx_geom, tx_direction)
    A = np.outer(map_rx.b * a, np.conj(map_tx.b * a_t))
    A_ideal = np.outer(a, np.conj(a_t))
    W = codebook.draw(rng, (rx_geom.n_elements, k_r))
    F = codebook.draw(rng, (tx_geom.n_elements, k_t))
    E = complex_gaussian(rng, (k_r, k_t), _noise_variance(rho))
    Y = W.conj().T @ (A - A_ideal) @ F + E
    return JointMeasurementSet(W=W, F=F, Y=Y, rho=rho)
