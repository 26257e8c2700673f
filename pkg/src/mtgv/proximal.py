"""Proximal mappings of the CPPA atoms.

Data and first-order distance atoms have closed-form proxes along connecting
geodesics.  The second-order atoms (tangent-tuple distances and their
bivariate symmetrized version) have no closed form and are handled by a
fixed-budget subgradient descent that returns the best visited iterate, so
the inexact prox never increases the atom objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .manifolds import Manifold
from . import gradients, tuples


@dataclass(frozen=True)
class ProxInnerParams:
    """Budget and cooling of the inner subgradient descent."""

    inner_iters: int = 50
    inner_step0: float = 1.0
    inner_tau: float = 0.55

    def __post_init__(self):
        if self.inner_iters < 1:
            raise ValueError("inner_iters must be >= 1")
        if self.inner_step0 <= 0:
            raise ValueError("inner_step0 must be positive")


def prox_data(mf: Manifold, u, h, lam: float):
    """Prox of (1/2) d(., h)^2: the point [u, h]_t with t = lam / (1 + lam)."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    t = lam / (1.0 + lam)
    return mf.geo(u, h, t)


def prox_dist_pair(mf: Manifold, a, b, mu):
    """Joint prox of mu * d(a, b): move both endpoints toward each other.

    Each endpoint advances by mu along the connecting geodesic; for
    mu >= d/2 both land on the midpoint.  Identical points stay fixed.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    d = mf.dist(a, b)
    pos = d > 0.0
    t = np.where(pos, np.minimum(np.asarray(mu, float) / np.where(pos, d, 1.0), 0.5), 0.0)
    la = mf.log(a, b)
    te = mf._expand(t)
    return mf.exp(a, te * la), mf.exp(b, -te * mf.transp(a, b, la))


def _grad_fun(variant: str, nvar: int):
    if nvar == 4:
        return gradients.grad_d_s if variant == "schild" else gradients.grad_d_pt
    if variant == "schild":
        return gradients.grad_d_s_sym
    return gradients.grad_d_pt_sym


# sign patterns of the flat residuals:
# quad atoms, variables (u_prev, y_prev, u, y), residual (y-u) - (y_prev-u_prev)
_PATTERN4 = np.array([1.0, -1.0, -1.0, 1.0])
# seven-point atoms (uoo, y1oo, y2oo, uom, y1om, umo, y2mo),
# residual y1oo - uoo - (y1om - uom) + y2oo - uoo - (y2mo - umo)
_PATTERN7 = np.array([-2.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0])


def _descend_flat(mf: Manifold, x_in: np.ndarray, mu, ip: ProxInnerParams,
                  nvar: int, variant: str):
    """Fast inner descent on flat manifolds (circle, euclidean).

    Both tuple distances collapse to the norm of one signed combination of
    the variables; on the circle the Schild chain restores the principal
    branch exactly (halving then doubling), while the transport variant keeps
    the unwrapped difference of the principal logs.  The residual sign
    pattern is the same for all cases.
    """
    circle = mf.name == "circle"
    pattern = (_PATTERN4 if nvar == 4 else _PATTERN7).reshape(
        (nvar,) + (1,) * (x_in.ndim - 1))

    def wrap(a):
        w = np.mod(a + np.pi, 2.0 * np.pi) - np.pi
        return np.where(w == -np.pi, np.pi, w)

    if not circle:
        def residual(x):
            return np.einsum("v...,v->...", x, pattern.ravel())
    elif variant == "schild":
        def residual(x):
            return wrap(np.einsum("v...,v->...", x, pattern.ravel()))
    elif nvar == 4:
        def residual(x):
            # D_pt: difference of principal logs, no outer wrap
            return wrap(x[3] - x[2]) - wrap(x[1] - x[0])
    else:
        def residual(x):
            uoo, y1oo, y2oo, uom, y1om, umo, y2mo = x
            a = wrap(y2mo - umo - wrap(y1oo - uoo))
            b = wrap(uom + wrap(y2oo - uoo) - y1om)
            return b - a

    def val_unit(r):
        if circle:
            v = np.abs(r)
            unit = np.where(v > gradients.KINK_TOL, np.sign(r), 0.0)
        else:
            v = np.linalg.norm(r, axis=-1)
            safe = np.where(v > gradients.KINK_TOL, v, 1.0)
            unit = np.where((v > gradients.KINK_TOL)[..., None], r / safe[..., None], 0.0)
        return v, unit

    mu_b = np.asarray(mu, float)
    x = x_in.copy()
    r0 = residual(x_in)
    v0, _ = val_unit(r0)
    best_obj = mu_b * v0
    best_x = x_in.copy()
    axes = tuple(range(x_in.ndim - 1)) if not circle else (0,)

    for k in range(1, ip.inner_iters + 1):
        r = residual(x)
        val, unit = val_unit(r)
        logs = (x_in - x) if not circle else wrap(x_in - x)
        if circle:
            quad = 0.5 * np.sum(logs * logs, axis=0)
            grad = pattern * unit
        else:
            quad = 0.5 * np.sum(logs * logs, axis=(0, -1))
            grad = pattern * unit[None]
        obj = quad + mu_b * val
        better = obj < best_obj
        if np.any(better):
            best_obj = np.where(better, obj, best_obj)
            sel = mf._expand(better)
            best_x = np.where(sel, x, best_x)
        step = ip.inner_step0 * k ** (-ip.inner_tau)
        x = x + step * (logs - mf._expand(mu_b) * grad)
        if circle:
            x = wrap(x)
    r = residual(x)
    val, _ = val_unit(r)
    logs = (x_in - x) if not circle else wrap(x_in - x)
    quad = 0.5 * (np.sum(logs * logs, axis=0) if circle
                  else np.sum(logs * logs, axis=(0, -1)))
    obj = quad + mu_b * val
    better = obj < best_obj
    if np.any(better):
        sel = mf._expand(better)
        best_x = np.where(sel, x, best_x)
    return best_x


def descend_atom_group(mf: Manifold, x_in: np.ndarray, mu, variant: str,
                       ip: ProxInnerParams, nvar: int):
    """Vectorized inexact prox of mu * D over a group of disjoint atoms.

    ``x_in`` has shape (nvar,) + batch + point_shape holding the prox inputs
    of all atoms in the group; ``mu`` broadcasts over the batch.  Returns the
    best-objective iterate per atom (never worse than the input).
    """
    if mf.name == "circle" or mf.name.startswith("euclidean"):
        return _descend_flat(mf, x_in, mu, ip, nvar, variant)
    grad = _grad_fun(variant, nvar)
    mu_b = np.asarray(mu, float)
    d_in = _value_only(mf, x_in, variant, nvar)
    active = np.asarray(d_in > gradients.KINK_TOL)
    if not np.any(active):
        # every atom sits at the kernel: zero subgradient, prox is the input
        return x_in.copy()
    if active.ndim == 1 and not np.all(active):
        # kernel atoms never move; descend on the active subset only
        sub = x_in[:, active]
        mu_sub = mu_b[active] if mu_b.shape == active.shape else mu_b
        out = x_in.copy()
        out[:, active] = descend_atom_group(mf, sub, mu_sub, variant, ip, nvar)
        return out
    x = x_in.copy()

    def objective_parts(xc):
        logs = mf.log(xc, x_in)
        quad = 0.5 * np.sum(mf.inner(xc, logs, logs), axis=0)
        return logs, quad

    best_x = x_in.copy()
    best_obj = mu_b * d_in  # quadratic term vanishes at the input
    for k in range(1, ip.inner_iters + 1):
        val, g = grad(mf, *x)
        logs, quad = objective_parts(x)
        obj = quad + mu_b * val
        better = obj < best_obj
        if np.any(better):
            best_obj = np.where(better, obj, best_obj)
            sel = mf._expand(better)
            best_x = np.where(sel, x, best_x)
        step = ip.inner_step0 * k ** (-ip.inner_tau)
        descent = -logs + mf._expand(mu_b) * g.stack()
        x = mf.exp(x, -step * descent)
    # score the final iterate as well
    val, _ = grad(mf, *x)
    logs, quad = objective_parts(x)
    obj = quad + mu_b * val
    better = obj < best_obj
    if np.any(better):
        sel = mf._expand(better)
        best_x = np.where(sel, x, best_x)
    return best_x


def _value_only(mf, x, variant, nvar):
    if nvar == 4:
        fun = tuples.d_s_points if variant == "schild" else tuples.d_pt_points
        u_prev, y_prev, u, y = x
        return fun(mf, u, y, u_prev, y_prev)
    fun = tuples.d_s_sym if variant == "schild" else tuples.d_pt_sym
    return fun(mf, *x)


def prox_second_atom(mf: Manifold, points, mu: float, variant: str = "schild",
                     ip: ProxInnerParams = ProxInnerParams()):
    """Inexact prox of mu * D at one atom; points = (u_prev, y_prev, u, y)."""
    if len(points) != 4:
        raise ValueError("expected four points (u_prev, y_prev, u, y)")
    x_in = np.stack([np.asarray(p, float) for p in points])
    out = descend_atom_group(mf, x_in, mu, variant, ip, nvar=4)
    return tuple(out)


def prox_sym_atom(mf: Manifold, points, mu: float, variant: str = "schild",
                  ip: ProxInnerParams = ProxInnerParams()):
    """Inexact prox of mu * D_sym at one seven-point atom (compass order)."""
    if len(points) != 7:
        raise ValueError("expected seven points (uoo, y1oo, y2oo, uom, y1om, umo, y2mo)")
    x_in = np.stack([np.asarray(p, float) for p in points])
    out = descend_atom_group(mf, x_in, mu, variant, ip, nvar=7)
    return tuple(out)
