"""Detector for complete group blockages from nx+ny measurements.

The measurement schedule of :func:`arraydoctor.sensing.measure_group`
exposes a weighted column sum ``x1 = A_s p0`` and a weighted row sum
``x2 = (w0^T A_s)^T`` of the innovation matrix.  Faulty grid rows and
columns show up as non-zero entries of ``x1`` and ``x2``; intersecting
the two index sets gives candidate fault rectangles, and an exhaustive
residual search over unions of those rectangles refines the final mask.
Only complete blockages are supported: a partial-blockage refinement
would need complex-valued mask entries and an unbounded search.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .array_model import ArrayGeometry, Direction, response_grid
from .errors import DimensionMismatchError, SearchBudgetError
from .sensing import MeasurementSet, _check_unitary

DEFAULT_SEARCH_BUDGET = 2**20


@dataclass(frozen=True)
class RowColEstimate:
    """Recovered weighted column-sum (length ny) and row-sum (length nx) vectors."""

    x1_hat: np.ndarray
    x2_hat: np.ndarray


@dataclass(frozen=True)
class FaultMask:
    """Binary ny-by-nx grid; 1 marks a (candidate or confirmed) faulty element."""

    mask: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool))

    def support(self, geom: ArrayGeometry) -> np.ndarray:
        """Flat indices of masked elements under the package vec order."""
        rows, cols = np.nonzero(self.mask)
        return np.sort(geom.flat_index(cols, rows))

    @property
    def count(self) -> int:
        return int(self.mask.sum())


def default_tau_abs(rho: float) -> float:
    """Nonzero test threshold: three noise standard deviations of the estimate."""
    return 0.0 if np.isinf(rho) else 3.0 / np.sqrt(rho)


def estimate_rowcol(y: np.ndarray, W: np.ndarray, P: np.ndarray) -> RowColEstimate:
    """Invert the orthonormal measurement map: ``x_hat = Phi^* y``."""
    _check_unitary(np.asarray(W), "W")
    _check_unitary(np.asarray(P), "P")
    ny = W.shape[0]
    nx = P.shape[0]
    y = np.asarray(y)
    if y.shape != (ny + nx,):
        raise DimensionMismatchError(f"y length {y.shape} != ny+nx = {ny + nx}")
    return RowColEstimate(
        x1_hat=W.conj().T @ y[:ny],
        x2_hat=P.conj().T @ y[ny:],
    )


def candidate_mask(est: RowColEstimate, tau_abs: float) -> FaultMask:
    """Grid positions where both the row and the column estimate are non-zero."""
    if tau_abs < 0:
        raise ValueError(f"tau_abs must be >= 0, got {tau_abs}")
    rows = np.abs(est.x1_hat) > tau_abs
    cols = np.abs(est.x2_hat) > tau_abs
    return FaultMask(np.outer(rows, cols))


def _runs(active: np.ndarray) -> list[np.ndarray]:
    """Maximal runs of consecutive indices among the active positions."""
    idx = np.flatnonzero(active)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1) + 1
    return np.split(idx, breaks)


def _predicted_estimate(A: np.ndarray, blocked: np.ndarray, w0: np.ndarray, p0: np.ndarray) -> np.ndarray:
    """Row/column sums implied by a hypothesized complete-blockage pattern."""
    A_s = np.where(blocked, A, 0.0)
    return np.concatenate([A_s @ p0, A_s.T @ w0])


def refine_mask(
    est: RowColEstimate,
    mask: FaultMask,
    A: np.ndarray,
    w0: np.ndarray,
    p0: np.ndarray,
    budget: int = DEFAULT_SEARCH_BUDGET,
) -> FaultMask:
    """Exhaustive residual search over unions of candidate fault rectangles.

    Candidate rectangles are the cross products of maximal row runs and
    column runs of the candidate mask; with a single rectangle the mask
    is already final and the search is skipped.  Ties break toward fewer
    blocked elements.
    """
    row_runs = _runs(mask.mask.any(axis=1))
    col_runs = _runs(mask.mask.any(axis=0))
    n_rects = len(row_runs) * len(col_runs)
    if n_rects <= 1:
        return mask
    if 2**n_rects > budget:
        raise SearchBudgetError(
            f"{n_rects} candidate rectangles exceed the search budget; "
            "use the compressed-sensing pipeline for many groups"
        )

    x_obs = np.concatenate([est.x1_hat, est.x2_hat])
    rects = [(r, c) for r in row_runs for c in col_runs]
    best_resid = np.inf
    best_count = -1
    best_blocked = np.zeros_like(mask.mask)
    for size in range(n_rects + 1):
        for combo in combinations(range(n_rects), size):
            blocked = np.zeros_like(mask.mask)
            for j in combo:
                r, c = rects[j]
                blocked[np.ix_(r, c)] = True
            resid = float(np.linalg.norm(x_obs - _predicted_estimate(A, blocked, w0, p0)))
            count = int(blocked.sum())
            if resid < best_resid - 1e-12 or (
                abs(resid - best_resid) <= 1e-12 and count < best_count
            ):
                best_resid = resid
                best_count = count
                best_blocked = blocked
    return FaultMask(best_blocked)


def diagnose_group(
    ms: MeasurementSet,
    geom: ArrayGeometry,
    W: np.ndarray,
    P: np.ndarray,
    w0: np.ndarray,
    p0: np.ndarray,
    tau_abs: float,
    direction: Direction = Direction(np.pi / 2, np.pi / 3),
    budget: int = DEFAULT_SEARCH_BUDGET,
) -> FaultMask:
    """Full group-complete pipeline: invert, intersect, refine."""
    est = estimate_rowcol(ms.y, W, P)
    mask = candidate_mask(est, tau_abs)
    A = response_grid(geom, direction)
    return refine_mask(est, mask, A, w0, p0, budget=budget)
