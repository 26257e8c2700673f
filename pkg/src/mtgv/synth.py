"""Synthetic ground truths, noise models, the DWI pipeline and quality metrics.

All randomness flows through a counter-based Philox generator so that a seed
fully determines every fixture on every platform (modulo ~1 ulp of libm).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .manifolds import CIRCLE, SPD3, SPHERE2, ManifoldError, _wrap_angle

#: 21 unit gradient directions from seeded electrostatic repulsion
#: (antipodally symmetrized energy; minimum pairwise angle ~31.7 degrees)
GRADIENT_DIRECTIONS_21 = np.array([
    [0.14044001612955556, -0.14514882218104566, 0.97939186298895975],
    [-0.36085446731108339, 0.066945433011357941, 0.93021629872871825],
    [0.58671157093938076, 0.23101420898757136, 0.77614558413463308],
    [-0.35947487690914326, -0.46586998186128881, 0.80854373590531192],
    [0.022061680368835875, 0.45486217671254314, 0.8902885388769366],
    [0.599785298998878, -0.3138874084537015, 0.73602465306472287],
    [-0.78681756636622269, -0.064075536279699252, 0.61385050534149088],
    [0.39838806950186156, 0.70691225627887655, 0.58443306545855878],
    [0.20517501705359326, -0.68971788097319264, 0.69440078992099863],
    [-0.55101494965121101, 0.50496823350113629, 0.66437158910929917],
    [0.92725759085899229, -0.081073275620865415, 0.36554135767992257],
    [-0.72208256748993482, -0.60864461183018626, 0.32885939581715717],
    [-0.10474340546811937, 0.88113130525390837, 0.46112519114930706],
    [0.19154020944770972, -0.97083814678439506, 0.14417226124663879],
    [-0.91362270155453895, 0.36219354757802857, 0.18468728515257429],
    [0.80887926393540832, 0.51893769595427119, 0.27643806556439426],
    [-0.25072069455852786, -0.85953079035128466, 0.44536047619673813],
    [-0.57658825712475315, 0.7921577628904749, 0.20008013504143249],
    [0.69145507971332898, -0.65011699254632171, 0.31502026719111242],
    [-0.97775953570953844, -0.17595728136787189, 0.11412854797418354],
    [0.38153655897788247, 0.92073212296854434, 0.081744797370561617],
])


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator: identical streams across platforms."""
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class DwiProtocol:
    """Acquisition settings of the synthetic diffusion-weighted pipeline."""

    directions: np.ndarray = field(default_factory=lambda: GRADIENT_DIRECTIONS_21.copy())
    b: float = 1.0
    a0: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.directions, float)
        if d.ndim != 2 or d.shape[1] != 3:
            raise ValueError("directions must be (n, 3)")
        if not np.allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-10):
            raise ValueError("directions must be unit vectors")
        object.__setattr__(self, "directions", d)


def vonmises_noise(u: Grid, kappa: float, rng: np.random.Generator) -> Grid:
    """Replace each angle by a von Mises sample centered at it."""
    if u.manifold.name != "circle":
        raise ManifoldError("vonmises_noise expects a circle grid")
    noisy = rng.vonmises(u.points, kappa)
    return Grid(CIRCLE, _wrap_angle(noisy), None if u.mask is None else u.mask.copy())


def tangent_gaussian_noise(u: Grid, sigma: float, rng: np.random.Generator) -> Grid:
    """exp of a componentwise Gaussian tangent vector in an orthonormal frame."""
    mf = u.manifold
    if sigma == 0.0:
        return u.copy()
    eta = mf.random_tangent(rng, u.points, scale=sigma)
    return Grid(mf, mf.exp(u.points, eta), None if u.mask is None else u.mask.copy())


def dwi_forward(tensors: Grid, proto: DwiProtocol) -> np.ndarray:
    """Diffusion-weighted intensities A0 * exp(-b v^T f v) per direction.

    Returns an array of shape (n_directions,) + grid_shape.
    """
    if tensors.manifold.name != "spd3":
        raise ManifoldError("dwi_forward expects an spd3 grid")
    f = tensors.points
    v = proto.directions
    quad = np.einsum("di,...ij,dj->d...", v, f, v)
    return proto.a0 * np.exp(-proto.b * quad)


def rician_corrupt(dwis: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Rician magnitude noise: sqrt((X + D)^2 + Y^2), X, Y ~ N(0, sigma^2)."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0.0:
        return np.asarray(dwis, float).copy()
    d = np.asarray(dwis, float)
    x = rng.normal(0.0, sigma, size=d.shape)
    y = rng.normal(0.0, sigma, size=d.shape)
    return np.sqrt((x + d) ** 2 + y ** 2)


def _design_matrix(proto: DwiProtocol) -> np.ndarray:
    v = proto.directions
    return np.stack([v[:, 0] ** 2, 2 * v[:, 0] * v[:, 1], 2 * v[:, 0] * v[:, 2],
                     v[:, 1] ** 2, 2 * v[:, 1] * v[:, 2], v[:, 2] ** 2], axis=1)


def _six_to_sym(c):
    out = np.empty(c.shape[:-1] + (3, 3))
    out[..., 0, 0] = c[..., 0]
    out[..., 0, 1] = out[..., 1, 0] = c[..., 1]
    out[..., 0, 2] = out[..., 2, 0] = c[..., 2]
    out[..., 1, 1] = c[..., 3]
    out[..., 1, 2] = out[..., 2, 1] = c[..., 4]
    out[..., 2, 2] = c[..., 5]
    return out


def fit_tensors(dwis: np.ndarray, proto: DwiProtocol):
    """Per-voxel linear least squares on the log intensities.

    Voxels whose fitted tensor is not positive definite are flagged invalid
    (mask False) so that downstream solvers exclude them from data terms.
    Returns a masked spd3 Grid.
    """
    v = proto.directions
    if v.shape[0] < 6:
        raise ValueError("need at least six directions to fit a tensor")
    d = np.asarray(dwis, float)
    grid_shape = d.shape[1:]
    flat = d.reshape(d.shape[0], -1)
    if np.any(flat <= 0.0):
        raise ValueError("nonpositive intensity cannot be log-transformed")
    rhs = -np.log(flat / proto.a0) / proto.b
    g = _design_matrix(proto)
    coef, *_ = np.linalg.lstsq(g, rhs, rcond=None)
    tensors = _six_to_sym(coef.T).reshape(grid_shape + (3, 3))
    eigmin = np.linalg.eigvalsh(tensors)[..., 0]
    mask = eigmin > 0.0
    return Grid(SPD3, tensors, mask)


def delta_snr(g: Grid, f: Grid, u: Grid) -> float:
    """Signal-to-noise improvement 10 log10(sum d(g,f)^2 / sum d(g,u)^2) in dB.

    Sites invalid in any of the inputs are excluded.  Returns +inf when the
    restoration matches the ground truth exactly.
    """
    g.same_manifold(f)
    g.same_manifold(u)
    if not (g.shape == f.shape == u.shape):
        raise ManifoldError("delta_snr requires equal shapes")
    mask = np.ones(g.shape, dtype=bool)
    for grid in (g, f, u):
        if grid.mask is not None:
            mask &= grid.mask
    mf = g.manifold
    if np.array_equal(u.points[mask], g.points[mask]):
        return np.inf
    dn = mf.dist(g.points[mask], f.points[mask])
    dr = mf.dist(g.points[mask], u.points[mask])
    den = float(np.sum(dr * dr))
    num = float(np.sum(dn * dn))
    if den == 0.0:
        return np.inf
    return 10.0 * np.log10(num / den)


# ---------------------------------------------------------------------------
# phantoms
# ---------------------------------------------------------------------------

def _segments(n, bounds):
    """Split range(n) at the given fractional boundaries."""
    cuts = [0] + [int(round(b * n)) for b in bounds] + [n]
    return [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]


def _s1_signal(n, rng):
    x = np.arange(n, dtype=float)
    u = np.zeros(n)
    segs = _segments(n, (0.15, 0.4, 0.55, 0.7, 0.85))
    vals = [(-0.9, 0.0), (-0.9, 1.5 / max(n, 1) * 4), (0.6, 0.0),
            (1.1, -3.2 / max(n, 1) * 4), (0.3, 0.0), (-0.5, 0.0)]
    smooth = np.ones(n, dtype=bool)
    for (a, b), (base, slope) in zip(segs, vals):
        u[a:b] = base + slope * (x[a:b] - a)
        if a > 0:
            smooth[max(a - 1, 0): min(a + 1, n)] = False
    u = np.clip(u, -1.15, 1.15)
    info = {"kind": "s1_signal", "smooth_mask": smooth,
            "segments": segs, "hemisphere": True}
    return Grid(CIRCLE, _wrap_angle(u)), info


def _s1_image(n, rng):
    ii, jj = np.meshgrid(np.arange(n, dtype=float), np.arange(n, dtype=float),
                         indexing="ij")
    u = np.zeros((n, n))
    half = n // 2
    # left half: affine ramp (zero second differences)
    u[:, :half] = 0.05 * ii[:, :half] + 0.035 * jj[:, :half] - 1.2
    # right-top: plateau; right-bottom: opposite ramp
    u[: half, half:] = 1.1
    u[half:, half:] = 2.2 - 0.06 * ii[half:, half:]
    smooth = np.ones((n, n), dtype=bool)
    smooth[:, half - 2: half + 2] = False
    smooth[half - 2: half + 2, half:] = False
    info = {"kind": "s1_image", "smooth_mask": smooth}
    return Grid(CIRCLE, _wrap_angle(u)), info


def _s2_signal(n, rng):
    segs = _segments(n, (0.3, 0.55, 0.8))
    base = np.array([1.0, 0.0, 0.0])
    dirs = [np.array([0.0, 0.9, 0.0]), np.array([0.0, -0.2, 0.85]),
            np.array([0.0, 0.0, 0.0]), np.array([0.6, 0.0, -0.6])]
    anchors = [base,
               SPHERE2.exp(base, np.array([0.0, -0.9, 0.9])),
               SPHERE2.exp(base, np.array([0.0, 0.4, -1.1])),
               SPHERE2.exp(base, np.array([0.0, 1.2, 0.7]))]
    pts = np.zeros((n, 3))
    smooth = np.ones(n, dtype=bool)
    for (a, b), anchor, d in zip(segs, anchors, dirs):
        ln = b - a
        tang = d - np.dot(d, anchor) * anchor  # project into T_anchor
        step = tang / max(n, 1) * 2.2
        ts = np.arange(ln, dtype=float)
        pts[a:b] = SPHERE2.exp(np.broadcast_to(anchor, (ln, 3)).copy(),
                               ts[:, None] * step)
        if a > 0:
            smooth[max(a - 1, 0): min(a + 1, n)] = False
    info = {"kind": "s2_signal", "segments": segs, "smooth_mask": smooth}
    return Grid(SPHERE2, pts), info


def _s2_image(n, rng):
    half = n // 2
    tiles = [((0, half), (0, half), np.array([0.0, 0.0, 1.0]),
              np.array([1.0, 0.0, 0.0])),
             ((0, half), (half, n), np.array([1.0, 0.0, 0.0]),
              np.array([0.0, 1.0, 0.0])),
             ((half, n), (0, half), np.array([0.0, 1.0, 0.0]),
              np.array([0.0, 0.0, 1.0])),
             ((half, n), (half, n), np.array([-1.0, 0.0, 0.0]),
              np.array([0.0, 0.0, 1.0]))]
    pts = np.zeros((n, n, 3))
    smooth = np.ones((n, n), dtype=bool)
    for (r0, r1), (c0, c1), anchor, axis in tiles:
        step = 0.9 / max(n, 1)
        tangent = np.cross(anchor, axis)
        tangent = tangent / np.linalg.norm(tangent)
        for i in range(r0, r1):
            for j in range(c0, c1):
                t = (i - r0 + j - c0) * step
                pts[i, j] = SPHERE2.exp(anchor, t * tangent)
    smooth[half - 2: half + 2, :] = False
    smooth[:, half - 2: half + 2] = False
    info = {"kind": "s2_image", "smooth_mask": smooth}
    return Grid(SPHERE2, pts), info


def _spd_image(n, rng):
    half = n // 2
    base_left = np.diag([2.2, 0.9, 0.7])
    base_right = np.diag([0.8, 2.0, 0.9])
    dir_left = 0.03 * np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.5],
                                [0.0, 0.5, 0.0]])
    dir_right = 0.025 * np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.3],
                                  [0.0, 0.3, 0.0]])
    pts = np.zeros((n, n, 3, 3))
    for i in range(n):
        for j in range(n):
            if j < half:
                pts[i, j] = SPD3.exp(base_left, (i + j) * dir_left)
            else:
                pts[i, j] = SPD3.exp(base_right, (i + (j - half)) * dir_right)
    smooth = np.ones((n, n), dtype=bool)
    smooth[:, half - 2: half + 2] = False
    info = {"kind": "spd_image", "smooth_mask": smooth}
    return Grid(SPD3, pts), info


PHANTOM_KINDS = ("s1_signal", "s1_image", "s2_signal", "s2_image", "spd_image")


def make_phantom(kind: str, size: int, seed: int = 0):
    """Deterministic synthetic ground truth grid plus a description dict.

    Kinds: s1_signal (hemisphere-contained ramps/plateaus with jumps),
    s1_image (affine ramps and plateaus), s2_signal (piecewise geodesic with
    jumps), s2_image (geodesic tiles), spd_image (two anisotropic regions).
    """
    rng = make_rng(seed)
    builders = {"s1_signal": _s1_signal, "s1_image": _s1_image,
                "s2_signal": _s2_signal, "s2_image": _s2_image,
                "spd_image": _spd_image}
    if kind not in builders:
        raise ValueError(f"unknown phantom kind {kind!r}; choose from {PHANTOM_KINDS}")
    return builders[kind](size, rng)
