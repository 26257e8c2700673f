"""Energy evaluation for manifold TGV, TV and helpers.

Index conventions (matching the solver):

* univariate: ``u`` has N sites, ``y`` has N-1 (``y[i]`` pairs with the
  forward difference at i).  Second-order terms couple i-1 and i and run for
  i = 1 .. N-2.
* bivariate: ``y1`` is one shorter along axis 0, ``y2`` along axis 1.  Any
  term whose stencil leaves the grid contributes zero cost (terms are
  skipped, no padding points are fabricated).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .manifolds import Manifold, ManifoldError
from . import tuples

VARIANTS = ("schild", "pt")


@dataclass(frozen=True)
class TgvWeights:
    """Regularization weights (alpha0: second order, alpha1: first order)."""

    alpha0: float
    alpha1: float
    p: float = 1.0

    def __post_init__(self):
        if self.alpha0 <= 0 or self.alpha1 <= 0:
            raise ValueError("TGV weights must be positive")
        if self.p < 1.0:
            raise ValueError("p must lie in [1, inf)")


def _check_variant(variant: str):
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")


def _d_fun(variant: str):
    return tuples.d_s_points if variant == "schild" else tuples.d_pt_points


def _dsym_fun(variant: str):
    return tuples.d_s_sym if variant == "schild" else tuples.d_pt_sym


def tv_univariate(u: Grid):
    """First-order total variation: sum of neighbor distances."""
    mf = u.manifold
    p = u.points
    if u.ndim != 1:
        raise ManifoldError("tv_univariate expects a 1D grid")
    if p.shape[0] < 2:
        return 0.0
    return float(np.sum(mf.dist(p[1:], p[:-1])))


def tv_bivariate(u: Grid, p_exp: float = 1.0):
    """Bivariate TV with pointwise l^p coupling of the two differences."""
    mf = u.manifold
    pts = u.points
    if u.ndim != 2:
        raise ManifoldError("tv_bivariate expects a 2D grid")
    n, m = u.shape
    dx = mf.dist(pts[1:, :], pts[:-1, :]) if n > 1 else np.zeros((0, m))
    dy = mf.dist(pts[:, 1:], pts[:, :-1]) if m > 1 else np.zeros((n, 0))
    if p_exp == 1.0:
        return float(np.sum(dx) + np.sum(dy))
    a = np.zeros((n, m))
    a[: n - 1, :] += dx ** p_exp
    a[:, : m - 1] += dy ** p_exp
    return float(np.sum(a ** (1.0 / p_exp)))


def energy_univariate(u: Grid, y: Grid, w: TgvWeights, variant: str = "schild"):
    """M-TGV^2 energy of a univariate signal at given (u, y)."""
    _check_variant(variant)
    u.same_manifold(y)
    mf = u.manifold
    if u.ndim != 1 or y.ndim != 1:
        raise ManifoldError("energy_univariate expects 1D grids")
    n = u.shape[0]
    if y.shape[0] != n - 1:
        raise ManifoldError("y must be one site shorter than u")
    up = u.points
    yp = y.points
    first = np.sum(mf.dist(up[1:], yp))
    if n >= 3:
        d = _d_fun(variant)
        second = np.sum(d(mf, up[1:-1], yp[1:], up[:-2], yp[:-1]))
    else:
        second = 0.0
    return float(w.alpha1 * first + w.alpha0 * second)


def energy_bivariate(u: Grid, y1: Grid, y2: Grid, w: TgvWeights,
                     variant: str = "schild"):
    """M-TGV^2 energy of a bivariate signal at given (u, y1, y2).

    General p is supported on euclidean manifolds only; manifold variants
    require p = 1.
    """
    _check_variant(variant)
    u.same_manifold(y1)
    u.same_manifold(y2)
    mf = u.manifold
    p_exp = w.p
    if p_exp != 1.0 and not mf.name.startswith("euclidean"):
        raise ManifoldError("p != 1 energies are euclidean-only")
    n, m = u.shape
    if y1.shape != (n - 1, m) or y2.shape != (n, m - 1):
        raise ManifoldError("y grids must be one shorter along their difference axis")
    up, y1p, y2p = u.points, y1.points, y2.points

    d = _d_fun(variant)
    dsym = _dsym_fun(variant)

    # first-order block at each site: distances to the two forward neighbors
    f1 = mf.dist(up[1:, :], y1p)                      # (n-1, m)
    f2 = mf.dist(up[:, 1:], y2p)                      # (n, m-1)

    # straight second-order blocks
    d1 = d(mf, up[1:-1, :], y1p[1:, :], up[:-2, :], y1p[:-1, :]) if n >= 3 else np.zeros((0, m))
    d2 = d(mf, up[:, 1:-1], y2p[:, 1:], up[:, :-2], y2p[:, :-1]) if m >= 3 else np.zeros((n, 0))

    # symmetrized block at (i, j) for i in [1, n-2], j in [1, m-2];
    # note y1 has n-1 rows and y2 has m-1 columns, so their windows differ
    if n >= 3 and m >= 3:
        dsym_v = dsym(
            mf,
            up[1:-1, 1:-1],        # u_oo
            y1p[1:, 1:-1],         # y1_oo
            y2p[1:-1, 1:],         # y2_oo
            up[1:-1, :-2],         # u_om
            y1p[1:, :-2],          # y1_om
            up[:-2, 1:-1],         # u_mo
            y2p[:-2, 1:],          # y2_mo
        )
    else:
        dsym_v = np.zeros((0, 0))

    if p_exp == 1.0:
        return float(w.alpha1 * (np.sum(f1) + np.sum(f2))
                     + w.alpha0 * (np.sum(d1) + np.sum(d2) + np.sum(dsym_v)))

    fblock = np.zeros((n, m))
    fblock[: n - 1, :] += f1 ** p_exp
    fblock[:, : m - 1] += f2 ** p_exp
    sblock = np.zeros((n, m))
    if n >= 3:
        sblock[1:-1, :] += d1 ** p_exp
    if m >= 3:
        sblock[:, 1:-1] += d2 ** p_exp
    if n >= 3 and m >= 3:
        sblock[1:-1, 1:-1] += 2.0 ** (1.0 - p_exp) * dsym_v ** p_exp
    return float(w.alpha1 * np.sum(fblock ** (1.0 / p_exp))
                 + w.alpha0 * np.sum(sblock ** (1.0 / p_exp)))


def geodesic_signal(mf: Manifold, base, direction, n: int) -> Grid:
    """Equally spaced samples exp(base, i * direction), i = 0 .. n-1.

    Raises if the total span would leave the injectivity radius (the result
    would no longer pass the local-geodesic test).
    """
    if n < 2:
        raise ValueError("need at least two samples")
    base = np.asarray(base, dtype=float)
    direction = np.asarray(direction, dtype=float)
    step = mf.norm(base, direction)
    if (n - 1) * float(step) >= mf.injectivity_radius:
        raise ManifoldError("geodesic signal would wrap past the cut locus")
    ts = np.arange(n, dtype=float)
    pts = mf.exp(np.broadcast_to(base, (n,) + mf.point_shape).copy(),
                 ts.reshape((n,) + (1,) * len(mf.point_shape)) * direction)
    return Grid(mf, pts)


def forward_tuple_grid(u: Grid):
    """y grids equal to the forward neighbors of u (zero second-order cost seed)."""
    if u.ndim == 1:
        return Grid(u.manifold, u.points[1:].copy())
    y1 = Grid(u.manifold, u.points[1:, :].copy())
    y2 = Grid(u.manifold, u.points[:, 1:].copy())
    return y1, y2
