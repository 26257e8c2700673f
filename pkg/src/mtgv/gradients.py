"""Analytic Riemannian (sub)gradients of the tangent-tuple distance functions.

The gradients are assembled from adjoint Jacobi-field operators on symmetric
spaces.  Each operator diagonalizes in the eigenbasis of the Jacobi operator
along a defining geodesic; the four coefficient families are:

* ``coeff_reflect_double``  -- adjoint of the doubling map J(1) -> J(2)
* ``coeff_midpoint``        -- adjoint of the midpoint map J(0) -> J(1/2)
* ``coeff_log_adjoint``     -- adjoint of the differential of log in its target
* ``coeff_dlog_base``       -- covariant derivative of the log field in its base

All gradient functions return the distance value together with the gradient
tangents, handle the kink by the zero-subgradient convention (value below
``KINK_TOL``), and are vectorized over leading axes.

The bivariate parallel-transport symmetrized gradient has no published closed
form and is the single finite-difference path (``grad_d_pt_sym``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .manifolds import ConjugatePointError, Manifold, _cross3, _dot3
from . import tuples

#: distance below which all gradient routines return the zero subgradient
KINK_TOL = 1e-12
#: argument below which trig ratios switch to series (removable singularities)
_SMALL = 1e-4
#: conjugate-point guard: for lam > 0 require sqrt(lam) * d <= pi - this
_CONJ_MARGIN = 1e-6


def _guard(lam, x):
    if np.any((lam > 0.0) & (x > np.pi - _CONJ_MARGIN)):
        raise ConjugatePointError("Jacobi coefficient past a conjugate point")


def coeff_reflect_double(lam, d):
    """sin(2x)/sin(x) resp. sinh(2x)/sinh(x) with x = sqrt(|lam|) d; 2 at lam=0."""
    lam = np.asarray(lam, float)
    x = np.sqrt(np.abs(lam)) * np.asarray(d, float)
    _guard(lam, x)
    return np.where(lam > 0.0, 2.0 * np.cos(x), 2.0 * np.cosh(x))


def coeff_midpoint(lam, d):
    """sin(x/2)/sin(x) resp. sinh(x/2)/sinh(x); 1/2 at lam=0."""
    lam = np.asarray(lam, float)
    x = np.sqrt(np.abs(lam)) * np.asarray(d, float)
    _guard(lam, x)
    return np.where(lam > 0.0, 0.5 / np.cos(0.5 * x), 0.5 / np.cosh(0.5 * x))


def coeff_log_adjoint(lam, d):
    """x/sin(x) resp. x/sinh(x); 1 at lam=0 (removable singularity)."""
    lam = np.asarray(lam, float)
    x = np.sqrt(np.abs(lam)) * np.asarray(d, float)
    _guard(lam, x)
    small = x < _SMALL
    xs = np.where(small, 1.0, x)
    pos = np.where(small, 1.0 + x * x / 6.0, xs / np.sin(xs))
    neg = np.where(small, 1.0 - x * x / 6.0, xs / np.sinh(xs))
    return np.where(lam > 0.0, pos, neg)


def coeff_dlog_base(lam, d):
    """x*cos(x)/sin(x) resp. x*cosh(x)/sinh(x); 1 at lam=0.

    Coefficient of ``-v_n`` in the covariant derivative of the log field
    along its base point.
    """
    lam = np.asarray(lam, float)
    x = np.sqrt(np.abs(lam)) * np.asarray(d, float)
    _guard(lam, x)
    small = x < _SMALL
    xs = np.where(small, 1.0, x)
    pos = np.where(small, 1.0 - x * x / 3.0, xs * np.cos(xs) / np.sin(xs))
    neg = np.where(small, 1.0 + x * x / 3.0, xs * np.cosh(xs) / np.sinh(xs))
    return np.where(lam > 0.0, pos, neg)


# ---------------------------------------------------------------------------
# operator objects (single-point API; the batched paths below use the same
# coefficient functions directly)
# ---------------------------------------------------------------------------

@dataclass
class AdjointJacobiOp:
    """Adjoint Jacobi operator: linear map between two tangent spaces.

    ``kind`` is one of T1_reflection, T3_doubling, T4_halving, T_log_adjoint.
    Eigen data is cached at construction; ``apply`` is linear in its argument.
    """

    kind: str
    manifold: Manifold
    src: np.ndarray          # base point of the input tangent
    dst: np.ndarray          # base point of the output tangent
    _apply: Callable = field(repr=False)

    def apply(self, w):
        return self._apply(np.asarray(w, float))


def op_T1(mf: Manifold, u_prev, y_prev, u) -> AdjointJacobiOp:
    """Adjoint of the geodesic-reflection map: parallel transport, negated."""
    m = mf.geo(u, y_prev, 0.5)
    s = mf.geo(u_prev, m, 2.0)

    def apply(w):
        return -mf.transp(m, u_prev, mf.transp(s, m, w))

    return AdjointJacobiOp("T1_reflection", mf, src=s, dst=u_prev, _apply=apply)


def op_T3(mf: Manifold, u_prev, m) -> AdjointJacobiOp:
    """Adjoint of the doubling map J(1) -> J(2) along the geodesic u_prev -> m."""
    s = mf.geo(u_prev, m, 2.0)
    direction = mf.log(m, u_prev)
    d = mf.norm(m, direction)
    coeff_reflect_double(np.array(1.0), d)  # eager conjugate-point guard

    def apply(w):
        return mf.jacobi_scale(m, direction, mf.transp(s, m, w), coeff_reflect_double)

    return AdjointJacobiOp("T3_doubling", mf, src=s, dst=m, _apply=apply)


def op_T4(mf: Manifold, y_prev, u) -> AdjointJacobiOp:
    """Adjoint of the midpoint map J(0) -> J(1/2) along y_prev -> u."""
    m = mf.geo(u, y_prev, 0.5)
    direction = mf.log(y_prev, u)

    def apply(w):
        return mf.jacobi_scale(y_prev, direction, mf.transp(m, y_prev, w), coeff_midpoint)

    return AdjointJacobiOp("T4_halving", mf, src=m, dst=y_prev, _apply=apply)


def op_T_log(mf: Manifold, base, target) -> AdjointJacobiOp:
    """Adjoint of the differential of log_base with respect to its target."""
    direction = mf.log(base, target)

    def apply(w):
        return mf.transp(base, target, mf.jacobi_scale(base, direction, w, coeff_log_adjoint))

    return AdjointJacobiOp("T_log_adjoint", mf, src=base, dst=target, _apply=apply)


# ---------------------------------------------------------------------------
# Schild chain rule
# ---------------------------------------------------------------------------

def grad_schild_triple(mf: Manifold, a, b, c, g_out):
    """Adjoint chain of the Schild map S(a, b, c) = [a, [c, b]_1/2]_2.

    ``g_out`` is the downstream gradient at S; returns the pulled-back
    gradients at a, b, c.  Transports back to the midpoint run along the
    reflection geodesic itself (the segment m -> S extends a -> m, and both
    halves stay inside the injectivity radius whenever d(a, m) does).
    """
    m = mf.geo(c, b, 0.5)
    s = mf.geo(a, m, 2.0)
    w_m = mf.transp(s, m, g_out)
    g_a = -mf.transp(m, a, w_m)
    t3 = mf.jacobi_scale(m, mf.log(m, a), w_m, coeff_reflect_double)
    g_b = mf.jacobi_scale(b, mf.log(b, c), mf.transp(m, b, t3), coeff_midpoint)
    g_c = mf.jacobi_scale(c, mf.log(c, b), mf.transp(m, c, t3), coeff_midpoint)
    return g_a, g_b, g_c


@dataclass
class QuadGrad:
    """Gradients of a second-order distance atom at (u_prev, y_prev, u, y)."""

    u_prev: np.ndarray
    y_prev: np.ndarray
    u: np.ndarray
    y: np.ndarray

    def stack(self):
        return np.stack([self.u_prev, self.y_prev, self.u, self.y])


@dataclass
class SymGrad:
    """Gradients of the seven-point symmetrized atom (compass naming)."""

    uoo: np.ndarray
    y1oo: np.ndarray
    y2oo: np.ndarray
    uom: np.ndarray
    y1om: np.ndarray
    umo: np.ndarray
    y2mo: np.ndarray

    def stack(self):
        return np.stack([self.uoo, self.y1oo, self.y2oo, self.uom,
                         self.y1om, self.umo, self.y2mo])


def _unit_residual(mf, base, target, val):
    safe = np.where(val > 0.0, val, 1.0)
    return mf.log(base, target) / mf._expand(safe)


def _mask_kink(mf, val, *grads):
    active = mf._expand(val > KINK_TOL)
    return tuple(np.where(active, g, 0.0) for g in grads)


def grad_d_s(mf: Manifold, u_prev, y_prev, u, y):
    """Value and gradients of D_S([u, y], [u_prev, y_prev]).

    Returns the zero subgradient at configurations with D_S below KINK_TOL.
    """
    s = tuples.schild_point(mf, u_prev, y_prev, u)
    val = mf.dist(s, y)
    if np.all(val <= KINK_TOL):
        z = np.zeros_like(np.asarray(u, float))
        return val, QuadGrad(u_prev=z, y_prev=z.copy(), u=z.copy(), y=z.copy())
    eta = _unit_residual(mf, s, y, val)
    g_y = -_unit_residual(mf, y, s, val)
    g_up, g_yp, g_u = grad_schild_triple(mf, u_prev, y_prev, u, -eta)
    g_up, g_yp, g_u, g_y = _mask_kink(mf, val, g_up, g_yp, g_u, g_y)
    return val, QuadGrad(u_prev=g_up, y_prev=g_yp, u=g_u, y=g_y)


def dL_dt(mf: Manifold, base, target, w):
    """Covariant derivative of the field p -> log_p(target) at ``base`` along w.

    Diagonal in the Jacobi eigenbasis of the geodesic base -> target; the
    operator is self-adjoint.
    """
    return -mf.jacobi_scale(base, mf.log(base, target), w, coeff_dlog_base)


def dB_dt_sphere(mf: Manifold, u_i, u_prev, z, v):
    """Covariant derivative at u_prev of t -> pt(z) from u_i to exp_{u_prev}(tv).

    Sphere-only holonomy formula; z is tangent at u_i, v at u_prev.
    """
    u_i = np.asarray(u_i, float)
    u_prev = np.asarray(u_prev, float)
    d = mf.dist(u_i, u_prev)
    g = mf.log(u_prev, u_i)
    safe = np.where(d > 0.0, d, 1.0)
    ghat = g / safe[..., None]
    wn = _cross3(u_prev, ghat)  # unit normal of ghat in the tangent plane
    ptz = mf.transp(u_i, u_prev, z)
    omega = np.where(d > 0.0, 1.0 / np.sin(safe) - 1.0 / np.tan(safe), 0.0)
    a = np.sum(ptz * ghat, axis=-1)
    b = np.sum(ptz * wn, axis=-1)
    # rotation generator in the {ghat, wn} frame; its sign (the orientation
    # convention) is pinned by the transport-ODE finite-difference oracle
    rot = (omega * a)[..., None] * wn - (omega * b)[..., None] * ghat
    out = np.sum(np.asarray(v, float) * wn, axis=-1)[..., None] * rot
    return np.where(d[..., None] > 0.0, out, 0.0)


def dB_dt_spd(mf: Manifold, u_i, u_prev, z, v):
    """Covariant derivative at u_prev of t -> pt(z) from u_i to exp_{u_prev}(tv).

    SPD-only: elementary matrix products plus one small Sylvester solve.
    """
    u_i = np.asarray(u_i, float)
    u_prev = np.asarray(u_prev, float)
    z = np.asarray(z, float)
    v = np.asarray(v, float)
    ui_s, ui_si = mf._sqrt_invsqrt(u_i)
    ubar = ui_si @ u_prev @ ui_si
    lam, q = np.linalg.eigh(0.5 * (ubar + np.swapaxes(ubar, -1, -2)))
    sig = np.sqrt(lam)
    ubar_s = q @ (sig[..., :, None] * np.swapaxes(q, -1, -2))
    zbar = ui_si @ z @ ui_si
    ptz = ui_s @ ubar_s @ zbar @ ubar_s @ ui_s
    s_mat = v @ np.linalg.inv(u_prev) @ ptz
    vbar = ui_si @ v @ ui_si
    # Sylvester ubar_s X + X ubar_s = vbar, solved in the eigenframe of ubar_s
    vq = np.swapaxes(q, -1, -2) @ vbar @ q
    x = q @ (vq / (sig[..., :, None] + sig[..., None, :])) @ np.swapaxes(q, -1, -2)
    t_mat = ui_s @ x @ zbar @ ubar_s @ ui_s
    half = t_mat - 0.5 * s_mat
    return half + np.swapaxes(half, -1, -2)


def _dB_adjoint(mf: Manifold, u_fixed, u_var, z, rho_hat):
    """Adjoint of v -> D_v[pt(z) from u_fixed to u_var], applied to rho_hat."""
    if mf.name in ("circle",) or mf.name.startswith("euclidean"):
        return np.zeros_like(np.asarray(rho_hat, float))
    if mf.name == "sphere2":
        d = mf.dist(u_fixed, u_var)
        g = mf.log(u_var, u_fixed)
        safe = np.where(d > 0.0, d, 1.0)
        ghat = g / safe[..., None]
        wn = _cross3(u_var, ghat)
        ptz = mf.transp(u_fixed, u_var, z)
        omega = np.where(d > 0.0, 1.0 / np.sin(safe) - 1.0 / np.tan(safe), 0.0)
        a = np.sum(ptz * ghat, axis=-1)
        b = np.sum(ptz * wn, axis=-1)
        rot = (omega * a)[..., None] * wn - (omega * b)[..., None] * ghat
        coef = np.sum(rot * np.asarray(rho_hat, float), axis=-1)
        return np.where(d[..., None] > 0.0, coef[..., None] * wn, 0.0)
    if mf.name == "spd3":
        fr = mf.frame(u_var)  # (6,) + batch + (3, 3)
        db = dB_dt_spd(mf, u_fixed[None], u_var[None], z[None], fr)
        coefs = mf.inner(u_var[None], db, np.asarray(rho_hat, float)[None])
        return np.sum(coefs[..., None, None] * fr, axis=0)
    raise NotImplementedError(f"dB adjoint not available on {mf.name}")


def grad_d_pt(mf: Manifold, u_prev, y_prev, u, y):
    """Value and gradients of D_pt([u, y], [u_prev, y_prev])."""
    z = mf.log(u, y)
    l_vec = mf.log(u_prev, y_prev)
    rho = l_vec - mf.transp(u, u_prev, z)
    val = mf.norm(u_prev, rho)
    if np.all(val <= KINK_TOL):
        zt = np.zeros_like(np.asarray(u, float))
        return val, QuadGrad(u_prev=zt, y_prev=zt.copy(), u=zt.copy(), y=zt.copy())
    safe = mf._expand(np.where(val > 0.0, val, 1.0))
    rho_hat = rho / safe

    g_yp = mf.transp(u_prev, y_prev,
                     mf.jacobi_scale(u_prev, l_vec, rho_hat, coeff_log_adjoint))
    g_up = (-mf.jacobi_scale(u_prev, l_vec, rho_hat, coeff_dlog_base)
            - _dB_adjoint(mf, u, u_prev, z, rho_hat))

    # the functional is symmetric under swapping the two tuples; the residual
    # seen from u is the transported negative of rho
    rho_hat2 = -mf.transp(u_prev, u, rho_hat)
    g_y = mf.transp(u, y, mf.jacobi_scale(u, z, rho_hat2, coeff_log_adjoint))
    g_u = (-mf.jacobi_scale(u, z, rho_hat2, coeff_dlog_base)
           - _dB_adjoint(mf, u_prev, u, l_vec, rho_hat2))

    g_up, g_yp, g_u, g_y = _mask_kink(mf, val, g_up, g_yp, g_u, g_y)
    return val, QuadGrad(u_prev=g_up, y_prev=g_yp, u=g_u, y=g_y)


def grad_d_s_sym(mf: Manifold, uoo, y1oo, y2oo, uom, y1om, umo, y2mo):
    """Value and seven gradients of the symmetrized Schild distance."""
    r1 = tuples.schild_point(mf, uoo, y1oo, umo)
    r2 = tuples.schild_point(mf, uoo, y2oo, uom)
    sf = tuples.schild_point(mf, y1om, r2, r1)
    val = mf.dist(sf, y2mo)
    if np.all(val <= KINK_TOL):
        zt = np.zeros_like(np.asarray(uoo, float))
        return val, SymGrad(*[zt.copy() for _ in range(7)])
    eta = _unit_residual(mf, sf, y2mo, val)
    g_y2mo = -_unit_residual(mf, y2mo, sf, val)

    ga_y1om, ga_r2, ga_r1 = grad_schild_triple(mf, y1om, r2, r1, -eta)
    gb_uoo, gb_y1oo, gb_umo = grad_schild_triple(mf, uoo, y1oo, umo, ga_r1)
    gc_uoo, gc_y2oo, gc_uom = grad_schild_triple(mf, uoo, y2oo, uom, ga_r2)

    g_uoo = gb_uoo + gc_uoo
    grads = _mask_kink(mf, val, g_uoo, gb_y1oo, gc_y2oo, gc_uom, ga_y1om,
                       gb_umo, g_y2mo)
    return val, SymGrad(*grads)


def grad_d_pt_sym(mf: Manifold, uoo, y1oo, y2oo, uom, y1om, umo, y2mo,
                  h: float = 1e-5):
    """Value and seven gradients of the symmetrized transport distance.

    This is the single non-analytic gradient path: central finite differences
    along orthonormal frames (the closed-form derivation is not available).
    """
    pts = [np.asarray(p, float) for p in (uoo, y1oo, y2oo, uom, y1om, umo, y2mo)]
    val = tuples.d_pt_sym(mf, *pts)
    grads = []
    for slot in range(7):
        fr = mf.frame(pts[slot])
        g = np.zeros_like(pts[slot])
        for k in range(mf.dim):
            e = fr[k]
            plus = list(pts)
            plus[slot] = mf.exp(pts[slot], h * e)
            minus = list(pts)
            minus[slot] = mf.exp(pts[slot], -h * e)
            comp = (tuples.d_pt_sym(mf, *plus) - tuples.d_pt_sym(mf, *minus)) / (2.0 * h)
            g = g + mf._expand(comp) * e
        grads.append(g)
    grads = _mask_kink(mf, val, *grads)
    return val, SymGrad(*grads)


def fd_grad(mf: Manifold, f, at, h: float = 1e-5):
    """Central-difference Riemannian gradient of a scalar point-function."""
    at = np.asarray(at, float)
    fr = mf.frame(at)
    g = np.zeros_like(at)
    for k in range(mf.dim):
        e = fr[k]
        comp = (f(mf.exp(at, h * e)) - f(mf.exp(at, -h * e))) / (2.0 * h)
        g = g + mf._expand(np.asarray(comp, float)) * e
    return g
