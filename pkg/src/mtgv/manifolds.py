"""Riemannian primitives for the four supported manifolds.

All operations are vectorized over arbitrary leading axes: a "point" argument
of shape ``batch_shape + point_shape`` is treated as a batch of points.
Point representations:

* ``Circle``     -- scalar angle in (-pi, pi], ``point_shape = ()``
* ``Sphere2``    -- unit vector in R^3, ``point_shape = (3,)``
* ``Spd3``       -- symmetric positive definite 3x3 matrix, ``point_shape = (3, 3)``
* ``Euclidean``  -- vector in R^K, ``point_shape = (K,)``

Tangent vectors use the same coordinate shape as points (circle: scalar,
sphere: ambient 3-vector orthogonal to the base, SPD: symmetric matrix).

Everything is pure: no method mutates its inputs, so values can be shared
freely across threads.
"""

from __future__ import annotations

import numpy as np

_SQRT2 = np.sqrt(2.0)


class ManifoldError(Exception):
    """Base class for manifold-related failures."""


class ManifoldMismatchError(ManifoldError):
    """Operands live on different manifolds."""


class CutLocusError(ManifoldError):
    """Minimizing geodesic is not unique (e.g. antipodal points on S^2)."""


class ConjugatePointError(ManifoldError):
    """A Jacobi-type coefficient was requested past a conjugate point."""


def _wrap_angle(theta):
    """Wrap to the principal branch (-pi, pi]; ties at -pi map to +pi."""
    w = np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


class Manifold:
    """Abstract base. Subclasses implement vectorized geometry."""

    name: str = "abstract"
    point_shape: tuple = ()
    dim: int = 0
    #: radius below which exp/log round trips are guaranteed unique
    injectivity_radius: float = np.inf

    # -- basic geometry ----------------------------------------------------
    def dist(self, a, b):
        raise NotImplementedError

    def exp(self, p, v):
        raise NotImplementedError

    def log(self, p, q):
        raise NotImplementedError

    def geo(self, a, b, t):
        """Point [a, b]_t on the geodesic through a and b, t may leave [0, 1]."""
        t = np.asarray(t, dtype=float)
        return self.exp(a, self.log(a, b) * self._expand(t))

    def transp(self, p, q, v):
        raise NotImplementedError

    def inner(self, p, v, w):
        raise NotImplementedError

    def norm(self, p, v):
        return np.sqrt(np.maximum(self.inner(p, v, v), 0.0))

    # -- Jacobi machinery ---------------------------------------------------
    def jacobi_scale(self, p, direction, w, coeff):
        """Rescale w in the Jacobi eigenbasis at p along ``direction``.

        ``coeff(lam, d)`` maps arrays of eigenvalues and geodesic lengths
        (d = |direction|) to scaling factors.  Flat manifolds reduce to a
        single multiplication by ``coeff(0, d)``.
        """
        raise NotImplementedError

    def jacobi_eigenbasis(self, p, direction):
        """Eigenpairs (lam_n, v_n) of J -> R(d^, J)d^ at a single point.

        Returns ``(lams, vecs)`` with ``lams`` of shape (dim,) and ``vecs`` of
        shape (dim,) + point_shape, orthonormal at p, ``vecs[0]`` parallel to
        ``direction``.
        """
        raise NotImplementedError

    def frame(self, p):
        """Deterministic orthonormal tangent frame, shape (dim,)+batch+point."""
        raise NotImplementedError

    # -- construction / validation ------------------------------------------
    def make_point(self, coords):
        """Validate and normalize coordinates into a proper point."""
        raise NotImplementedError

    def check_point(self, p, atol=1e-9):
        raise NotImplementedError

    def zero_tangent(self, p):
        return np.zeros_like(np.asarray(p, dtype=float))

    def random_point(self, rng, batch_shape=()):
        raise NotImplementedError

    def random_tangent(self, rng, p, scale=1.0):
        """Gaussian tangent vector in an orthonormal frame at p."""
        p = np.asarray(p, dtype=float)
        batch = p.shape[: p.ndim - len(self.point_shape)]
        xi = rng.normal(scale=scale, size=(self.dim,) + batch)
        fr = self.frame(p)
        out = np.zeros_like(p)
        for k in range(self.dim):
            out = out + self._expand(xi[k]) * fr[k]
        return out

    # -- helpers -------------------------------------------------------------
    def _expand(self, x):
        """Append singleton axes so scalars broadcast against point coords."""
        x = np.asarray(x, dtype=float)
        return x.reshape(x.shape + (1,) * len(self.point_shape))

    def batch_shape(self, p):
        p = np.asarray(p)
        n = len(self.point_shape)
        return p.shape[: p.ndim - n] if n else p.shape

    def __repr__(self):
        return self.name

    def __eq__(self, other):
        return isinstance(other, Manifold) and self.name == other.name

    def __hash__(self):
        return hash(self.name)


class Circle(Manifold):
    """Unit circle S^1 represented by the phase angle in (-pi, pi]."""

    name = "circle"
    point_shape = ()
    dim = 1
    injectivity_radius = np.pi

    def dist(self, a, b):
        return np.abs(_wrap_angle(np.asarray(b, float) - np.asarray(a, float)))

    def exp(self, p, v):
        return _wrap_angle(np.asarray(p, float) + np.asarray(v, float))

    def log(self, p, q):
        # principal branch; exact antipodes get +pi by the wrap convention
        return _wrap_angle(np.asarray(q, float) - np.asarray(p, float))

    def geo(self, a, b, t):
        return _wrap_angle(np.asarray(a, float) + np.asarray(t, float) * self.log(a, b))

    def transp(self, p, q, v):
        return np.broadcast_to(np.asarray(v, float), np.broadcast_shapes(np.shape(v), np.shape(q))).copy()

    def inner(self, p, v, w):
        return np.asarray(v, float) * np.asarray(w, float)

    def norm(self, p, v):
        return np.abs(np.asarray(v, float))

    def jacobi_scale(self, p, direction, w, coeff):
        d = np.abs(np.asarray(direction, float))
        return np.asarray(w, float) * coeff(np.zeros_like(d), d)

    def jacobi_eigenbasis(self, p, direction):
        direction = float(direction)
        if direction == 0.0:
            raise ManifoldError("jacobi_eigenbasis requires a nonzero direction")
        return np.array([0.0]), np.array([np.sign(direction)])

    def frame(self, p):
        p = np.asarray(p, float)
        return np.ones((1,) + p.shape)

    def make_point(self, coords):
        return _wrap_angle(coords)

    def check_point(self, p, atol=1e-9):
        p = np.asarray(p, float)
        if not (np.all(p > -np.pi) and np.all(p <= np.pi)):
            raise ManifoldError("circle angle outside (-pi, pi]")

    def random_point(self, rng, batch_shape=()):
        return _wrap_angle(rng.uniform(-np.pi, np.pi, size=batch_shape))


def _dot3(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def _cross3(a, b):
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


class Sphere2(Manifold):
    """Unit two-sphere embedded in R^3."""

    name = "sphere2"
    point_shape = (3,)
    dim = 2
    injectivity_radius = np.pi
    #: points closer than this to antipodal raise CutLocusError
    cut_tol = 1e-9

    def dist(self, a, b):
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        c = _dot3(a, b)
        # |component of b normal to a| = sin(d), cancellation-free near 0
        perp = b - c[..., None] * a
        s = np.sqrt(_dot3(perp, perp))
        # atan2 form equals arccos(clip(<a,b>)) but stays accurate near 0 and pi
        return np.arctan2(s, c)

    def exp(self, p, v):
        p = np.asarray(p, float)
        v = np.asarray(v, float)
        th = np.sqrt(_dot3(v, v))
        # sinc is sin(pi x)/(pi x): stable sin(th)/th including th = 0
        out = np.cos(th)[..., None] * p + np.sinc(th / np.pi)[..., None] * v
        return out / np.sqrt(_dot3(out, out))[..., None]

    def log(self, p, q):
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        c = _dot3(p, q)
        perp = q - c[..., None] * p
        s = np.sqrt(_dot3(perp, perp))
        d = np.arctan2(s, c)
        if np.any(np.pi - d < self.cut_tol):
            raise CutLocusError("sphere2 log at (nearly) antipodal points")
        fac = np.where(s > 0.0, d / np.where(s > 0.0, s, 1.0), 0.0)
        return fac[..., None] * perp

    def transp(self, p, q, v):
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        v = np.asarray(v, float)
        u = self.log(p, q)
        d = np.sqrt(_dot3(u, u))
        safe = np.where(d > 0.0, d, 1.0)
        uh = u / safe[..., None]
        a = np.sum(v * uh, axis=-1)
        radial = a[..., None] * (np.cos(d)[..., None] * uh - np.sin(d)[..., None] * p)
        out = v - a[..., None] * uh + radial
        # strip any drift out of the tangent plane at q
        out = out - _dot3(out, q)[..., None] * q
        return np.where(d[..., None] > 0.0, out, v - _dot3(v, q)[..., None] * q)

    def inner(self, p, v, w):
        return np.sum(np.asarray(v, float) * np.asarray(w, float), axis=-1)

    def jacobi_scale(self, p, direction, w, coeff):
        p = np.asarray(p, float)
        direction = np.asarray(direction, float)
        w = np.asarray(w, float)
        d = np.sqrt(_dot3(direction, direction))
        safe = np.where(d > 0.0, d, 1.0)
        e1 = direction / safe[..., None]
        if np.any(d == 0.0):
            # degenerate direction: any frame works (coeffs coincide at d = 0)
            e1 = np.where(d[..., None] > 0.0, e1, self.frame(p)[0])
        e2 = _cross3(p, e1)
        a1 = _dot3(w, e1)
        a2 = _dot3(w, e2)
        z = np.zeros_like(d)
        c1 = coeff(z, d)
        c2 = coeff(np.ones_like(d), d)
        return (c1 * a1)[..., None] * e1 + (c2 * a2)[..., None] * e2

    def jacobi_eigenbasis(self, p, direction):
        p = np.asarray(p, float)
        direction = np.asarray(direction, float)
        n = np.linalg.norm(direction)
        if n == 0.0:
            raise ManifoldError("jacobi_eigenbasis requires a nonzero direction")
        e1 = direction / n
        e2 = np.cross(p, e1)
        return np.array([0.0, 1.0]), np.stack([e1, e2])

    def frame(self, p):
        p = np.asarray(p, float)
        # reference axis with the smallest |component| keeps the frame smooth
        idx = np.argmin(np.abs(p), axis=-1)
        e = np.zeros_like(p)
        np.put_along_axis(e, idx[..., None], 1.0, axis=-1)
        a = e - np.sum(e * p, axis=-1, keepdims=True) * p
        a = a / np.sqrt(_dot3(a, a))[..., None]
        b = _cross3(p, a)
        return np.stack([a, b])

    def make_point(self, coords):
        c = np.asarray(coords, dtype=float)
        n = np.linalg.norm(c, axis=-1, keepdims=True)
        if np.any(n == 0.0):
            raise ManifoldError("cannot normalize the zero vector onto sphere2")
        return c / n

    def check_point(self, p, atol=1e-12):
        n = np.linalg.norm(np.asarray(p, float), axis=-1)
        if not np.allclose(n, 1.0, atol=max(atol, 1e-12), rtol=0.0):
            raise ManifoldError("sphere2 point is not unit length")

    def random_point(self, rng, batch_shape=()):
        x = rng.normal(size=batch_shape + (3,))
        return x / np.linalg.norm(x, axis=-1, keepdims=True)


def _sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


class Spd3(Manifold):
    """Symmetric positive definite 3x3 matrices, affine-invariant metric."""

    name = "spd3"
    point_shape = (3, 3)
    dim = 6

    # -- symmetric matrix helpers (eigh-based, outputs re-symmetrized) -----
    @staticmethod
    def _eigh(p):
        return np.linalg.eigh(_sym(np.asarray(p, float)))

    @staticmethod
    def _apply(fun, p):
        lam, q = Spd3._eigh(p)
        return _sym(np.einsum("...ik,...k,...jk->...ij", q, fun(lam), q))

    @classmethod
    def _sqrt_invsqrt(cls, p):
        lam, q = cls._eigh(p)
        if np.any(lam <= 0.0):
            raise ManifoldError("matrix is not positive definite")
        r = np.sqrt(lam)
        s = _sym(np.einsum("...ik,...k,...jk->...ij", q, r, q))
        si = _sym(np.einsum("...ik,...k,...jk->...ij", q, 1.0 / r, q))
        return s, si

    @classmethod
    def _logm(cls, p):
        lam, q = cls._eigh(p)
        if np.any(lam <= 0.0):
            raise ManifoldError("matrix log of a non-positive-definite matrix")
        return _sym(np.einsum("...ik,...k,...jk->...ij", q, np.log(lam), q))

    @classmethod
    def _expm(cls, v):
        return cls._apply(np.exp, v)

    def dist(self, a, b):
        _, si = self._sqrt_invsqrt(a)
        m = self._logm(si @ np.asarray(b, float) @ si)
        return np.linalg.norm(m, axis=(-2, -1))

    def exp(self, p, v):
        s, si = self._sqrt_invsqrt(p)
        return _sym(s @ self._expm(si @ _sym(np.asarray(v, float)) @ si) @ s)

    def log(self, p, q):
        s, si = self._sqrt_invsqrt(p)
        return _sym(s @ self._logm(si @ np.asarray(q, float) @ si) @ s)

    def geo(self, a, b, t):
        s, si = self._sqrt_invsqrt(a)
        m = self._logm(si @ np.asarray(b, float) @ si)
        t = self._expand(t)
        return _sym(s @ self._expm(t * m) @ s)

    def transp(self, p, q, v):
        # E = p^{1/2} (p^{-1/2} q p^{-1/2})^{1/2} p^{-1/2}; result E v E^T
        s, si = self._sqrt_invsqrt(p)
        mid, _ = self._sqrt_invsqrt(si @ np.asarray(q, float) @ si)
        e = s @ mid @ si
        return _sym(e @ _sym(np.asarray(v, float)) @ np.swapaxes(e, -1, -2))

    def inner(self, p, v, w):
        _, si = self._sqrt_invsqrt(p)
        vb = si @ _sym(np.asarray(v, float)) @ si
        wb = si @ _sym(np.asarray(w, float)) @ si
        return np.sum(vb * wb, axis=(-2, -1))

    def jacobi_scale(self, p, direction, w, coeff):
        s, si = self._sqrt_invsqrt(p)
        dbar = si @ _sym(np.asarray(direction, float)) @ si
        d = np.linalg.norm(dbar, axis=(-2, -1))
        safe = np.where(d > 0.0, d, 1.0)
        what = dbar / safe[..., None, None]
        lam, q = np.linalg.eigh(what)
        # eigenvalues of the Jacobi operator in the eigenframe of the direction
        lmat = -0.25 * (lam[..., :, None] - lam[..., None, :]) ** 2
        c = coeff(lmat, d[..., None, None])
        wq = np.swapaxes(q, -1, -2) @ (si @ _sym(np.asarray(w, float)) @ si) @ q
        out = q @ (c * wq) @ np.swapaxes(q, -1, -2)
        return _sym(s @ out @ s)

    def jacobi_eigenbasis(self, p, direction):
        direction = _sym(np.asarray(direction, float))
        s, si = self._sqrt_invsqrt(p)
        dbar = si @ direction @ si
        nd = np.linalg.norm(dbar)
        if nd == 0.0:
            raise ManifoldError("jacobi_eigenbasis requires a nonzero direction")
        lam, q = np.linalg.eigh(dbar / nd)
        # zero-eigenvalue subspace = diagonal matrices in the eigenframe;
        # rotate it so its first vector is the direction itself
        diag_basis = _complete_with_first(lam)
        vecs = []
        lams = []
        for row in diag_basis:
            m = q @ np.diag(row) @ q.T
            vecs.append(_sym(s @ m @ s))
            lams.append(0.0)
        for i, j in ((0, 1), (0, 2), (1, 2)):
            e = np.zeros((3, 3))
            e[i, j] = e[j, i] = 1.0 / _SQRT2
            m = q @ e @ q.T
            vecs.append(_sym(s @ m @ s))
            lams.append(-0.25 * (lam[i] - lam[j]) ** 2)
        return np.array(lams), np.stack(vecs)

    def frame(self, p):
        s, _ = self._sqrt_invsqrt(p)
        basis = []
        for i in range(3):
            e = np.zeros((3, 3))
            e[i, i] = 1.0
            basis.append(e)
        for i, j in ((0, 1), (0, 2), (1, 2)):
            e = np.zeros((3, 3))
            e[i, j] = e[j, i] = 1.0 / _SQRT2
            basis.append(e)
        out = [_sym(s @ e @ s) for e in basis]
        return np.stack([np.broadcast_to(o, np.asarray(p).shape).copy() if o.shape != np.asarray(p).shape else o for o in out])

    def make_point(self, coords):
        c = _sym(np.asarray(coords, dtype=float))
        lam = np.linalg.eigvalsh(c)
        if np.any(lam <= 0.0):
            raise ManifoldError("matrix is not positive definite")
        return c

    def check_point(self, p, atol=1e-12):
        p = np.asarray(p, float)
        if not np.allclose(p, np.swapaxes(p, -1, -2), atol=max(atol, 1e-12), rtol=0.0):
            raise ManifoldError("spd3 point is not symmetric")
        if np.any(np.linalg.eigvalsh(_sym(p)) <= 0.0):
            raise ManifoldError("spd3 point is not positive definite")

    def random_point(self, rng, batch_shape=(), scale=0.6):
        v = rng.normal(scale=scale, size=batch_shape + (3, 3))
        return self._expm(_sym(v))


def _complete_with_first(w):
    """Orthonormal basis of R^3 whose first vector is w (|w| = 1)."""
    w = np.asarray(w, float)
    w = w / np.linalg.norm(w)
    basis = [w]
    for e in np.eye(3):
        c = e - sum(np.dot(e, b) * b for b in basis)
        n = np.linalg.norm(c)
        if n > 1e-8:
            basis.append(c / n)
        if len(basis) == 3:
            break
    return np.stack(basis)


class Euclidean(Manifold):
    """Flat R^K with the standard inner product."""

    point_shape: tuple
    dim: int

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("euclidean dimension must be >= 1")
        self.k = int(k)
        self.name = f"euclidean{self.k}"
        self.point_shape = (self.k,)
        self.dim = self.k

    def dist(self, a, b):
        return np.linalg.norm(np.asarray(b, float) - np.asarray(a, float), axis=-1)

    def exp(self, p, v):
        return np.asarray(p, float) + np.asarray(v, float)

    def log(self, p, q):
        return np.asarray(q, float) - np.asarray(p, float)

    def geo(self, a, b, t):
        a = np.asarray(a, float)
        return a + self._expand(t) * (np.asarray(b, float) - a)

    def transp(self, p, q, v):
        return np.broadcast_to(np.asarray(v, float), np.broadcast_shapes(np.shape(v), np.shape(q))).copy()

    def inner(self, p, v, w):
        return np.sum(np.asarray(v, float) * np.asarray(w, float), axis=-1)

    def jacobi_scale(self, p, direction, w, coeff):
        d = np.linalg.norm(np.asarray(direction, float), axis=-1)
        return np.asarray(w, float) * coeff(np.zeros_like(d), d)[..., None]

    def jacobi_eigenbasis(self, p, direction):
        direction = np.asarray(direction, float)
        n = np.linalg.norm(direction)
        if n == 0.0:
            raise ManifoldError("jacobi_eigenbasis requires a nonzero direction")
        basis = [direction / n]
        for e in np.eye(self.k):
            c = e - sum(np.dot(e, b) * b for b in basis)
            nn = np.linalg.norm(c)
            if nn > 1e-10:
                basis.append(c / nn)
            if len(basis) == self.k:
                break
        return np.zeros(self.k), np.stack(basis)

    def frame(self, p):
        p = np.asarray(p, float)
        out = np.zeros((self.k,) + p.shape)
        for i in range(self.k):
            out[i, ..., i] = 1.0
        return out

    def make_point(self, coords):
        c = np.asarray(coords, dtype=float)
        if c.shape[-1] != self.k:
            raise ManifoldError(f"expected {self.k} components")
        return c

    def check_point(self, p, atol=1e-12):
        if np.asarray(p).shape[-1] != self.k:
            raise ManifoldError(f"expected {self.k} components")

    def random_point(self, rng, batch_shape=()):
        return rng.normal(size=batch_shape + (self.k,))


CIRCLE = Circle()
SPHERE2 = Sphere2()
SPD3 = Spd3()


def get_manifold(name: str) -> Manifold:
    """Resolve a manifold id string: circle | sphere2 | spd3 | euclidean<K>."""
    if name == "circle":
        return CIRCLE
    if name == "sphere2":
        return SPHERE2
    if name == "spd3":
        return SPD3
    if name.startswith("euclidean"):
        tail = name[len("euclidean"):]
        k = int(tail) if tail else 1
        return Euclidean(k)
    raise ValueError(f"unknown manifold id: {name!r}")
