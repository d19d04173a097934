"""Ground-truth blockage map generation.

A blockage multiplies the affected element's response by a complex
coefficient ``alpha = kappa * exp(j*Phi)`` with ``0 <= kappa <= 1``;
``alpha = 0`` is a complete blockage.  Unblocked elements keep
coefficient 1 exactly, so the innovation ``c = b - 1`` is zero off the
fault support.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .array_model import ArrayGeometry
from .errors import PlacementError

COMPLETE = "complete"
CONSTANT_PARTIAL = "constant_partial"
RANDOM_PARTIAL = "random_partial"
_KINDS = (COMPLETE, CONSTANT_PARTIAL, RANDOM_PARTIAL)


@dataclass(frozen=True)
class BlockageModel:
    """Distribution of the per-element blockage coefficient ``alpha``.

    ``complete``: alpha = 0.  ``constant_partial``: alpha = beta for every
    blocked element.  ``random_partial``: kappa ~ U[0,1] and
    Phi ~ U[0,2pi) drawn independently per blocked element.
    """

    kind: str
    beta: complex = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown blockage model kind {self.kind!r}")
        if self.kind == CONSTANT_PARTIAL and abs(self.beta) > 1.0 + 1e-12:
            raise ValueError(f"|beta| must be <= 1, got {abs(self.beta)}")

    @classmethod
    def complete(cls) -> "BlockageModel":
        return cls(COMPLETE)

    @classmethod
    def constant_partial(cls, beta: complex) -> "BlockageModel":
        return cls(CONSTANT_PARTIAL, complex(beta))

    @classmethod
    def random_partial(cls) -> "BlockageModel":
        return cls(RANDOM_PARTIAL)

    def draw_alpha(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.kind == COMPLETE:
            return np.zeros(count, dtype=complex)
        if self.kind == CONSTANT_PARTIAL:
            return np.full(count, complex(self.beta))
        kappa = rng.uniform(0.0, 1.0, size=count)
        phase = rng.uniform(0.0, 2.0 * np.pi, size=count)
        return kappa * np.exp(1j * phase)

    # First/second moments of alpha, used by the closed-form pattern stats.
    @property
    def mean_alpha(self) -> complex:
        if self.kind == CONSTANT_PARTIAL:
            return complex(self.beta)
        return 0.0 + 0.0j

    @property
    def mean_abs2_alpha(self) -> float:
        if self.kind == COMPLETE:
            return 0.0
        if self.kind == CONSTANT_PARTIAL:
            return abs(self.beta) ** 2
        return 1.0 / 3.0  # E[kappa^2] for kappa ~ U[0,1]

    @property
    def var_alpha(self) -> float:
        return self.mean_abs2_alpha - abs(self.mean_alpha) ** 2


@dataclass(frozen=True)
class BlockageMap:
    """Per-element coefficients ``b`` plus the true fault support."""

    b: np.ndarray
    blocked: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))

    def __post_init__(self) -> None:
        object.__setattr__(self, "b", np.asarray(self.b, dtype=complex))
        object.__setattr__(self, "blocked", np.asarray(self.blocked, dtype=int))

    @property
    def n_elements(self) -> int:
        return self.b.shape[0]

    @classmethod
    def clean(cls, n: int) -> "BlockageMap":
        return cls(np.ones(n, dtype=complex))


def innovation_coeffs(bmap: BlockageMap) -> np.ndarray:
    """Innovation coefficients ``c = b - 1`` (exactly zero off-support)."""
    return bmap.b - 1.0


def _draw_alphas_avoiding_one(model: BlockageModel, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw blockage coefficients, rejecting alpha == 1 so the support stays well-defined."""
    if model.kind == CONSTANT_PARTIAL and complex(model.beta) == 1.0 + 0.0j:
        raise ValueError("constant_partial with beta == 1 has no blockage effect; cannot sample")
    alpha = model.draw_alpha(rng, count)
    for _ in range(100):
        collide = alpha == 1.0
        if not np.any(collide):
            return alpha
        alpha[collide] = model.draw_alpha(rng, int(collide.sum()))
    raise PlacementError("could not draw blockage coefficients distinct from 1")


def sample_blockage(
    n: int,
    pb: float,
    model: BlockageModel,
    rng: np.random.Generator,
) -> BlockageMap:
    """Independently block each of ``n`` elements with probability ``pb``."""
    if not 0.0 <= pb <= 1.0:
        raise ValueError(f"pb must be in [0, 1], got {pb}")
    mask = rng.random(n) < pb
    blocked = np.flatnonzero(mask)
    b = np.ones(n, dtype=complex)
    if blocked.size:
        b[blocked] = _draw_alphas_avoiding_one(model, rng, blocked.size)
    return BlockageMap(b=b, blocked=blocked)


def sample_blockage_fixed_count(
    n: int,
    count: int,
    model: BlockageModel,
    rng: np.random.Generator,
) -> BlockageMap:
    """Block exactly ``count`` elements chosen uniformly at random.

    This is the fixed-blockage-count convention used by the closed-form
    main-lobe statistics; the per-element sampler above is the model used
    everywhere else.
    """
    if not 0 <= count <= n:
        raise ValueError(f"count must be in [0, {n}], got {count}")
    blocked = np.sort(rng.choice(n, size=count, replace=False))
    b = np.ones(n, dtype=complex)
    if count:
        b[blocked] = _draw_alphas_avoiding_one(model, rng, count)
    return BlockageMap(b=b, blocked=blocked)


def place_group_blockage(
    geom: ArrayGeometry,
    n_groups: int,
    group_shape: tuple[int, int],
    model: BlockageModel,
    rng: np.random.Generator,
    max_tries: int = 200,
) -> BlockageMap:
    """Place ``n_groups`` non-overlapping ``rows x cols`` fault rectangles.

    ``group_shape`` is (rows, cols) on the ny-by-nx grid; rectangles may
    not overlap or extend past the grid edge.  Under the random-partial
    model every element inside a group draws its own coefficient.
    """
    rows, cols = group_shape
    if rows < 1 or cols < 1:
        raise ValueError(f"group shape must be positive, got {group_shape}")
    if rows > geom.ny or cols > geom.nx:
        raise PlacementError(
            f"group shape {rows}x{cols} does not fit the {geom.ny}x{geom.nx} grid"
        )
    if n_groups < 1:
        raise ValueError(f"n_groups must be >= 1, got {n_groups}")

    occupied = np.zeros((geom.ny, geom.nx), dtype=bool)
    placed = 0
    for _ in range(max_tries * n_groups):
        if placed == n_groups:
            break
        r0 = int(rng.integers(0, geom.ny - rows + 1))
        c0 = int(rng.integers(0, geom.nx - cols + 1))
        patch = occupied[r0 : r0 + rows, c0 : c0 + cols]
        if patch.any():
            continue
        patch[:] = True
        placed += 1
    if placed < n_groups:
        raise PlacementError(
            f"placed only {placed}/{n_groups} groups of {rows}x{cols} "
            f"on the {geom.ny}x{geom.nx} grid after bounded retries"
        )

    grid_rows, grid_cols = np.nonzero(occupied)
    blocked = np.sort(geom.flat_index(grid_cols, grid_rows))
    b = np.ones(geom.n_elements, dtype=complex)
    b[blocked] = _draw_alphas_avoiding_one(model, rng, blocked.size)
    return BlockageMap(b=b, blocked=blocked)
