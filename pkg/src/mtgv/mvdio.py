"""Plain-text MVD grid files.

Layout::

    mvd <major>
    manifold <circle | sphere2 | spd3 | euclidean<K>>
    shape <N [M]>
    mask <0 | 1>
    <one row per site, row-major>

Rows carry the point components (circle: 1, sphere2: 3, spd3: 6 as the
upper triangle m11 m12 m13 m22 m23 m33, euclidean: K) and, when the mask
flag is set, a trailing 0/1 validity column.  Components are printed with
17 significant digits, so valid grids round-trip bit-exactly.  Invalid
points are only accepted on masked-out rows.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid
from .manifolds import ManifoldError, get_manifold

FORMAT_MAJOR = 1


class MvdFormatError(Exception):
    """Malformed MVD content (header or rows)."""


def _components(mf, p):
    if mf.name == "circle":
        return [p]
    if mf.name == "sphere2" or mf.name.startswith("euclidean"):
        return list(p)
    if mf.name == "spd3":
        return [p[0, 0], p[0, 1], p[0, 2], p[1, 1], p[1, 2], p[2, 2]]
    raise ManifoldError(f"unsupported manifold {mf.name}")


def _ncomp(mf) -> int:
    if mf.name == "circle":
        return 1
    if mf.name == "sphere2":
        return 3
    if mf.name == "spd3":
        return 6
    return mf.k


def _from_components(mf, c):
    if mf.name == "circle":
        return c[0]
    if mf.name == "sphere2" or mf.name.startswith("euclidean"):
        return np.array(c)
    m = np.empty((3, 3))
    m[0, 0], m[0, 1], m[0, 2] = c[0], c[1], c[2]
    m[1, 0], m[1, 1], m[1, 2] = c[1], c[3], c[4]
    m[2, 0], m[2, 1], m[2, 2] = c[2], c[4], c[5]
    return m


def write_mvd(grid: Grid, path):
    """Write a grid; lossless for valid inputs (17 significant digits)."""
    mf = grid.manifold
    shape = grid.shape
    has_mask = grid.mask is not None
    flat_pts = grid.points.reshape((-1,) + mf.point_shape)
    flat_mask = None if grid.mask is None else grid.mask.ravel()
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"mvd {FORMAT_MAJOR}\n")
        fh.write(f"manifold {mf.name}\n")
        fh.write("shape " + " ".join(str(s) for s in shape) + "\n")
        fh.write(f"mask {int(has_mask)}\n")
        for i in range(flat_pts.shape[0]):
            cells = ["%.17g" % v for v in _components(mf, flat_pts[i])]
            if has_mask:
                cells.append(str(int(flat_mask[i])))
            fh.write(" ".join(cells) + "\n")


def read_mvd(path) -> Grid:
    """Parse an MVD file; typed errors name the offending row."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln.strip() for ln in fh]
    except OSError as exc:
        raise MvdFormatError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in lines if ln]
    if len(lines) < 4:
        raise MvdFormatError("truncated header")
    magic = lines[0].split()
    if len(magic) != 2 or magic[0] != "mvd":
        raise MvdFormatError("missing 'mvd <version>' header line")
    try:
        major = int(magic[1])
    except ValueError as exc:
        raise MvdFormatError("non-integer format version") from exc
    if major > FORMAT_MAJOR:
        raise MvdFormatError(
            f"format major version {major} is newer than supported ({FORMAT_MAJOR})")

    header = {}
    for ln in lines[1:4]:
        key, *rest = ln.split()
        header[key] = rest
    for key in ("manifold", "shape", "mask"):
        if key not in header:
            raise MvdFormatError(f"missing header field '{key}'")
    try:
        mf = get_manifold(header["manifold"][0])
    except (ValueError, IndexError) as exc:
        raise MvdFormatError(f"bad manifold id: {exc}") from exc
    try:
        shape = tuple(int(s) for s in header["shape"])
    except ValueError as exc:
        raise MvdFormatError("non-integer shape") from exc
    if len(shape) not in (1, 2) or any(s < 1 for s in shape):
        raise MvdFormatError("shape must be one or two positive integers")
    try:
        has_mask = bool(int(header["mask"][0]))
    except (ValueError, IndexError) as exc:
        raise MvdFormatError("mask flag must be 0 or 1") from exc

    nsites = int(np.prod(shape))
    rows = lines[4:]
    if len(rows) != nsites:
        raise MvdFormatError(
            f"expected {nsites} rows for shape {shape}, found {len(rows)}")
    ncomp = _ncomp(mf)
    width = ncomp + (1 if has_mask else 0)

    pts = np.empty((nsites,) + mf.point_shape)
    mask = np.ones(nsites, dtype=bool) if has_mask else None
    for i, ln in enumerate(rows):
        cells = ln.split()
        if len(cells) != width:
            raise MvdFormatError(
                f"row {i}: expected {width} columns, found {len(cells)}")
        try:
            comps = [float(c) for c in cells[:ncomp]]
        except ValueError as exc:
            raise MvdFormatError(f"row {i}: non-numeric component") from exc
        pts[i] = _from_components(mf, comps)
        if has_mask:
            if cells[-1] not in ("0", "1"):
                raise MvdFormatError(f"row {i}: mask column must be 0 or 1")
            mask[i] = cells[-1] == "1"
        valid = mask[i] if has_mask else True
        if valid:
            try:
                mf.check_point(pts[i], atol=1e-9)
            except ManifoldError as exc:
                raise MvdFormatError(f"row {i}: invalid unmasked point ({exc})") from exc

    grid = Grid(mf, pts.reshape(shape + mf.point_shape),
                None if mask is None else mask.reshape(shape))
    return grid
