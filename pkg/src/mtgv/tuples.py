"""Discrete tangent-bundle layer: point tuples and their distance-type functions.

A tangent tuple [base, end] stands in for the tangent vector log_base(end).
Four distance-type functions compare tuples sitting at different sites:

* ``d_s``       -- Schild's-ladder construction, endpoint distance
* ``d_pt``      -- parallel transport to a common base, tangent-norm distance
* ``d_s_sym``   -- bivariate symmetrized (mixed-difference) Schild version
* ``d_pt_sym``  -- bivariate symmetrized parallel-transport version

The seven-argument symmetrized functions use compass naming for the stencil
around a site (i, j):  ``oo`` = (i, j) center, ``om`` = (i, j-1) below,
``mo`` = (i-1, j) left.  All functions are vectorized over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .manifolds import Manifold


@dataclass
class TangentTuple:
    """Ordered point pair [base, end] on one manifold; [u, u] is the zero tuple."""

    manifold: Manifold
    base: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        self.end = np.asarray(self.end, dtype=float)


def schild_point(mf: Manifold, u_prev, y_prev, u):
    """Schild's ladder transport endpoint: reflect u_prev through [u, y_prev]_1/2."""
    return mf.geo(u_prev, mf.geo(u, y_prev, 0.5), 2.0)


def d_s_points(mf: Manifold, x, y, u, v):
    """D_S([x, y], [u, v]): distance from y to the Schild transport of [u, v] to x."""
    yp = schild_point(mf, u, v, x)
    return mf.dist(yp, y)


def d_pt_points(mf: Manifold, x, y, u, v):
    """D_pt([x, y], [u, v]): |log_x(y) - pt_x(log_u(v))| in T_x."""
    w = mf.transp(u, x, mf.log(u, v))
    return mf.norm(x, mf.log(x, y) - w)


def d_s(t1: TangentTuple, t2: TangentTuple):
    if t1.manifold != t2.manifold:
        raise ValueError("tuples on different manifolds")
    return d_s_points(t1.manifold, t1.base, t1.end, t2.base, t2.end)


def d_pt(t1: TangentTuple, t2: TangentTuple):
    if t1.manifold != t2.manifold:
        raise ValueError("tuples on different manifolds")
    return d_pt_points(t1.manifold, t1.base, t1.end, t2.base, t2.end)


def sym_transports_schild(mf: Manifold, uoo, y1oo, y2oo, uom, umo):
    """Schild transports of the two center tuples to the left/below neighbors.

    r1 carries [uoo, y1oo] to umo, r2 carries [uoo, y2oo] to uom.
    """
    r1 = schild_point(mf, uoo, y1oo, umo)
    r2 = schild_point(mf, uoo, y2oo, uom)
    return r1, r2


def sym_transports_pt(mf: Manifold, uoo, y1oo, y2oo, uom, umo):
    """Parallel-transport counterparts of :func:`sym_transports_schild`."""
    r1 = mf.exp(umo, mf.transp(uoo, umo, mf.log(uoo, y1oo)))
    r2 = mf.exp(uom, mf.transp(uoo, uom, mf.log(uoo, y2oo)))
    return r1, r2


def d_s_sym(mf: Manifold, uoo, y1oo, y2oo, uom, y1om, umo, y2mo):
    """Symmetrized mixed-difference distance, Schild variant (seven points)."""
    r1, r2 = sym_transports_schild(mf, uoo, y1oo, y2oo, uom, umo)
    return d_s_points(mf, r1, y2mo, y1om, r2)


def d_pt_sym(mf: Manifold, uoo, y1oo, y2oo, uom, y1om, umo, y2mo):
    """Symmetrized mixed-difference distance, parallel-transport variant."""
    r1, r2 = sym_transports_pt(mf, uoo, y1oo, y2oo, uom, umo)
    return d_pt_points(mf, r1, y2mo, y1om, r2)
