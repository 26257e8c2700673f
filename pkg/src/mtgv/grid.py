"""Grids of manifold points with an optional per-site validity mask."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .manifolds import Manifold, ManifoldError, ManifoldMismatchError


@dataclass
class Grid:
    """A 1D signal or 2D image of points on one manifold.

    ``points`` has shape ``grid_shape + manifold.point_shape``. ``mask`` marks
    observed sites (True); invalid sites (False) may hold arbitrary
    coordinates and are excluded from data terms downstream.
    """

    manifold: Manifold
    points: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.shape:
                raise ManifoldError("mask shape does not match grid shape")

    @property
    def shape(self) -> tuple:
        n = len(self.manifold.point_shape)
        return self.points.shape[: self.points.ndim - n] if n else self.points.shape

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def validate(self):
        """Check point invariants at every observed site."""
        if self.ndim not in (1, 2):
            raise ManifoldError("grids must be 1D or 2D")
        pts = self.points
        if self.mask is not None:
            pts = pts[self.mask]
            if pts.size == 0:
                return self
        self.manifold.check_point(pts)
        return self

    def copy(self) -> "Grid":
        return Grid(self.manifold, self.points.copy(),
                    None if self.mask is None else self.mask.copy())

    def same_manifold(self, other: "Grid"):
        if self.manifold != other.manifold:
            raise ManifoldMismatchError(
                f"grids on different manifolds: {self.manifold} vs {other.manifold}")

    def valid_fraction(self) -> float:
        if self.mask is None:
            return 1.0
        return float(np.mean(self.mask))


def fill_masked(grid: Grid) -> Grid:
    """Replace invalid sites by the nearest valid point (deterministic).

    Nearest is by L1 grid distance with row-major tie-breaking, so the result
    does not depend on traversal order. Used to seed solvers on masked data.
    """
    if grid.mask is None or grid.mask.all():
        return grid.copy()
    if not grid.mask.any():
        raise ManifoldError("grid has no valid site to fill from")
    out = grid.copy()
    coords = np.argwhere(grid.mask)
    flat_valid = grid.points[grid.mask]
    for idx in np.argwhere(~grid.mask):
        d = np.sum(np.abs(coords - idx), axis=1)
        j = int(np.argmin(d))  # argmin is row-major-stable
        out.points[tuple(idx)] = flat_valid[j]
    return out
