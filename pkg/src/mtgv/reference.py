"""Certified vector-space TGV denoising (Chambolle-Pock-type) and S^1 helpers.

Solves, for flat 1D/2D data with K channels and p = 1 pointwise norms,

    min_u  1/2 ||u - h||^2 + min_w alpha1 ||D u - w||_1 + alpha0 ||E w||_1

with forward differences in D, backward differences in E and the symmetrized
mixed term.  Every difference term whose stencil leaves the grid is dropped
(consistent with the manifold energies).  The duality gap is evaluated from a
genuinely feasible dual point (P := c E^T Q with a global scaling c <= 1), so
primal - dual >= 0 holds at every iterate up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .functionals import TgvWeights
from .grid import Grid
from .manifolds import ManifoldError, _wrap_angle


# ---------------------------------------------------------------------------
# difference operators; arrays are (N, M, K), signals use M = 1
# ---------------------------------------------------------------------------

def _dx(u):
    return u[1:, :, :] - u[:-1, :, :]


def _dy(u):
    return u[:, 1:, :] - u[:, :-1, :]


def _dxT(p, n):
    out = np.zeros((n,) + p.shape[1:])
    out[:-1] -= p
    out[1:] += p
    return out


def _dyT(p, m):
    out = np.zeros((p.shape[0], m) + p.shape[2:])
    out[:, :-1] -= p
    out[:, 1:] += p
    return out


def _grad(u):
    """Forward differences; components on their natural domains."""
    return _dx(u), _dy(u)


def _grad_T(p1, p2, n, m):
    return _dxT(p1, n) + _dyT(p2, m)


def _sym_grad(w1, w2):
    """Backward differences of (w1, w2) with the symmetrized mixed component.

    z1 = dx- w1 on (n-2, m); z2 = dy- w2 on (n, m-2);
    z3 = (dy- w1 + dx- w2)/2 on the interior (n-2, m-2) where every stencil
    point exists.
    """
    z1 = w1[1:, :, :] - w1[:-1, :, :]
    z2 = w2[:, 1:, :] - w2[:, :-1, :]
    n = w2.shape[0]
    m = w1.shape[1]
    if n >= 3 and m >= 3:
        dyw1 = w1[1:, 1:-1, :] - w1[1:, :-2, :]
        dxw2 = w2[1:-1, 1:, :] - w2[:-2, 1:, :]
        z3 = 0.5 * (dyw1 + dxw2)
    else:
        z3 = np.zeros((max(n - 2, 0), max(m - 2, 0)) + w1.shape[2:])
    return z1, z2, z3


def _sym_grad_T(z1, z2, z3, n, m):
    w1 = np.zeros((n - 1, m) + z1.shape[2:])
    w2 = np.zeros((n, m - 1) + z2.shape[2:])
    w1[:-1] -= z1
    w1[1:] += z1
    w2[:, :-1] -= z2
    w2[:, 1:] += z2
    if z3.size:
        h = 0.5 * z3
        w1[1:, 1:-1] += h
        w1[1:, :-2] -= h
        w2[1:-1, 1:] += h
        w2[:-2, 1:] -= h
    return w1, w2


def _norm21(z):
    """Sum over sites of the channel-Euclidean norm."""
    return float(np.sum(np.sqrt(np.sum(z * z, axis=-1))))


def _proj_ball(p, radius):
    n = np.sqrt(np.sum(p * p, axis=-1, keepdims=True))
    fac = np.minimum(1.0, radius / np.maximum(n, 1e-300))
    return p * fac


def tgv_flat_objective(u, w1, w2, weights: TgvWeights):
    """alpha1 ||Du - w||_1 + alpha0 ||Ew||_1 at a given w (p = 1)."""
    g1, g2 = _grad(u)
    z1, z2, z3 = _sym_grad(w1, w2)
    return (weights.alpha1 * (_norm21(g1 - w1) + _norm21(g2 - w2))
            + weights.alpha0 * (_norm21(z1) + _norm21(z2) + 2.0 * _norm21(z3)))


def _as3d(h):
    h = np.asarray(h, dtype=float)
    if h.ndim == 1:
        return h[:, None, None], ("1d",)
    if h.ndim == 2:
        # ambiguous without channel info; treat as (N, M) single channel
        return h[:, :, None], ("2d",)
    if h.ndim == 3:
        return h, ("3d",)
    raise ValueError("expected 1D, 2D or (N, M, K) data")


def _estimate_opnorm(n, m, k, iters=60, seed=0):
    """Power-method estimate of the assembled operator norm."""
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(n, m, k))
    w1 = rng.normal(size=(n - 1, m, k))
    w2 = rng.normal(size=(n, m - 1, k))
    est = 1.0
    for _ in range(iters):
        p1, p2 = _grad(u)
        p1 = p1 - w1
        p2 = p2 - w2
        z1, z2, z3 = _sym_grad(w1, w2)
        ut = _grad_T(p1, p2, n, m)
        s1, s2 = _sym_grad_T(z1, z2, z3, n, m)
        w1t = -p1 + s1
        w2t = -p2 + s2
        vec = np.concatenate([ut.ravel(), w1t.ravel(), w2t.ravel()])
        est = np.linalg.norm(vec)
        vec /= max(est, 1e-300)
        u = vec[: u.size].reshape(u.shape)
        w1 = vec[u.size: u.size + w1.size].reshape(w1.shape)
        w2 = vec[u.size + w1.size:].reshape(w2.shape)
    return np.sqrt(est)


@dataclass
class PDState:
    """Iterate of the primal-dual solver (kept for inspection/tests)."""

    u: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    q3: np.ndarray
    sigma: float
    tau: float
    iterate: int = 0


def _primal_value(u, w1, w2, h, weights):
    return 0.5 * float(np.sum((u - h) ** 2)) + tgv_flat_objective(u, w1, w2, weights)


def _dual_value(q1, q2, q3, h, weights, n, m):
    """Best feasible dual value along the ray P := c E^T Q, c in (0, c_max].

    c_max keeps the per-site bound |P| <= alpha1; the quadratic dual value is
    then maximized over c in closed form.  The result is a valid lower bound
    on the primal optimum, so primal - dual >= 0 up to roundoff.
    """
    s1, s2 = _sym_grad_T(q1, q2, q3, n, m)
    mx = 0.0
    for s in (s1, s2):
        if s.size:
            mx = max(mx, float(np.max(np.sqrt(np.sum(s * s, axis=-1)))))
    c_max = 1.0 if mx <= weights.alpha1 else weights.alpha1 / mx
    dtp = _grad_T(s1, s2, n, m)
    denom = float(np.sum(dtp * dtp))
    num = float(np.sum(h * dtp))
    c = min(c_max, num / denom) if denom > 0.0 else c_max
    c = max(c, 0.0)
    return c * num - 0.5 * c * c * denom


def cp_tgv_denoise(h, weights: TgvWeights, iters: int = 60000,
                   gap_tol: float | None = None, gap_every: int = 500,
                   over_relax: float = 1.9, step_ratio: float = 0.01):
    """Flat TGV^2 denoising by an over-relaxed primal-dual method.

    ``step_ratio`` scales the primal step down and the dual step up by the
    same factor (the product stays below 1/||K||^2); small ratios converge
    much faster on denoising problems.  Returns ``(u, gap_trace)`` with
    rows (iterate, primal, dual, gap); iterate 0 records the initial gap.
    If ``gap_tol`` is given, stops once gap <= gap_tol * initial_gap.
    """
    if weights.p != 1.0:
        raise ValueError("the reference solver implements p = 1")
    h3, kind = _as3d(h)
    n, m, k = h3.shape

    a0, a1 = weights.alpha0, weights.alpha1
    u = h3.copy()
    w1 = np.zeros((n - 1, m, k))
    w2 = np.zeros((n, m - 1, k))
    p1 = np.zeros_like(w1)
    p2 = np.zeros_like(w2)
    z1, z2, z3 = _sym_grad(w1, w2)
    q1 = np.zeros_like(z1)
    q2 = np.zeros_like(z2)
    q3 = np.zeros_like(z3)

    lnorm = _estimate_opnorm(n, m, k)
    tau = step_ratio / (1.05 * lnorm)
    sigma = 1.0 / (step_ratio * 1.05 * lnorm)
    rho = over_relax

    gap0 = max(_primal_value(u, w1, w2, h3, weights)
               - _dual_value(q1, q2, q3, h3, weights, n, m), 1e-300)
    trace = [(0, gap0, 0.0, gap0)]
    for it in range(1, iters + 1):
        # primal prox with current duals
        un = (u - tau * _grad_T(p1, p2, n, m) + tau * h3) / (1.0 + tau)
        e1, e2 = _sym_grad_T(q1, q2, q3, n, m)
        w1n = w1 - tau * (-p1 + e1)
        w2n = w2 - tau * (-p2 + e2)

        # dual prox at the extrapolated primal
        g1, g2 = _grad(2.0 * un - u)
        w1e = 2.0 * w1n - w1
        w2e = 2.0 * w2n - w2
        p1n = _proj_ball(p1 + sigma * (g1 - w1e), a1)
        p2n = _proj_ball(p2 + sigma * (g2 - w2e), a1)
        s1, s2, s3 = _sym_grad(w1e, w2e)
        q1n = _proj_ball(q1 + sigma * s1, a0)
        q2n = _proj_ball(q2 + sigma * s2, a0)
        q3n = _proj_ball(q3 + sigma * s3, 2.0 * a0)

        # over-relaxation of the full iterate (rho in (0, 2))
        u = u + rho * (un - u)
        w1 = w1 + rho * (w1n - w1)
        w2 = w2 + rho * (w2n - w2)
        p1 = p1 + rho * (p1n - p1)
        p2 = p2 + rho * (p2n - p2)
        q1 = q1 + rho * (q1n - q1)
        q2 = q2 + rho * (q2n - q2)
        q3 = q3 + rho * (q3n - q3)

        if it % gap_every == 0 or it == iters:
            pr = _primal_value(un, w1n, w2n, h3, weights)
            du = _dual_value(q1n, q2n, q3n, h3, weights, n, m)
            gap = pr - du
            trace.append((it, pr, du, gap))
            if gap_tol is not None and gap <= gap_tol * gap0:
                u, w1, w2 = un, w1n, w2n
                break

    out = u[:, 0, 0] if kind[0] == "1d" else (u[:, :, 0] if kind[0] == "2d" else u)
    return out, np.array(trace)


def tgv_value_flat(u, weights: TgvWeights, iters: int = 40000,
                   gap_tol: float = 1e-8):
    """Exact discrete TGV value by inner minimization over w (certified gap).

    Returns (value, gap); the gap bound is absolute for small problems.
    """
    u3, _ = _as3d(u)
    n, m, k = u3.shape
    a0, a1 = weights.alpha0, weights.alpha1

    w1 = np.zeros((n - 1, m, k))
    w2 = np.zeros((n, m - 1, k))
    p1 = np.zeros_like(w1)
    p2 = np.zeros_like(w2)
    z1, z2, z3 = _sym_grad(w1, w2)
    q1, q2, q3 = np.zeros_like(z1), np.zeros_like(z2), np.zeros_like(z3)
    g1, g2 = _grad(u3)

    lnorm = _estimate_opnorm(n, m, k)
    sigma = tau = 1.0 / (1.05 * lnorm)
    w1b, w2b = w1, w2
    best = np.inf
    for it in range(1, iters + 1):
        p1 = _proj_ball(p1 + sigma * (g1 - w1b), a1)
        p2 = _proj_ball(p2 + sigma * (g2 - w2b), a1)
        s1, s2, s3 = _sym_grad(w1b, w2b)
        q1 = _proj_ball(q1 + sigma * s1, a0)
        q2 = _proj_ball(q2 + sigma * s2, a0)
        q3 = _proj_ball(q3 + sigma * s3, 2.0 * a0)
        e1, e2 = _sym_grad_T(q1, q2, q3, n, m)
        w1n = w1 - tau * (-p1 + e1)
        w2n = w2 - tau * (-p2 + e2)
        w1b = 2.0 * w1n - w1
        w2b = 2.0 * w2n - w2
        w1, w2 = w1n, w2n
        if it % 100 == 0 or it == iters:
            primal = tgv_flat_objective(u3, w1, w2, weights)
            best = min(best, primal)
            # dual value of the w-problem: linear in the feasible scaling c
            s1, s2 = _sym_grad_T(q1, q2, q3, n, m)
            mx = 0.0
            for s in (s1, s2):
                if s.size:
                    mx = max(mx, float(np.max(np.sqrt(np.sum(s * s, axis=-1)))))
            c = 1.0 if mx <= a1 else a1 / mx
            lin = float(np.sum(g1 * s1)) + float(np.sum(g2 * s2))
            dual = max(c * lin, 0.0)
            if best - dual <= gap_tol:
                return best, best - dual
    return best, best - dual


def unwrap_circle(h: Grid):
    """Real representatives of a hemisphere-contained circle signal.

    Consecutive lifts follow the shorter arc and are anchored at the first
    sample's principal angle; fails if the lifted values span >= pi (the
    signal is then not contained in an open half-circle).
    """
    if h.manifold.name != "circle":
        raise ManifoldError("unwrap_circle expects a circle grid")
    if h.ndim != 1:
        raise ManifoldError("unwrap_circle expects a 1D signal")
    a = np.asarray(h.points, float)
    steps = _wrap_angle(np.diff(a))
    out = np.concatenate([[a[0] if a.size else 0.0], a[0] + np.cumsum(steps)])
    if out.size and (out.max() - out.min()) >= np.pi:
        raise ManifoldError("signal is not contained in an open half-circle")
    return out


def wrap_to_circle(x) -> np.ndarray:
    """Principal angles of real values (inverse of unwrap on its range)."""
    return _wrap_angle(np.asarray(x, float))
