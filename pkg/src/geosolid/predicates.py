"""Filtered-exact orientation predicates.

Every sign decision in the kernel funnels through these functions.  The
strategy is the classic static-filter one: evaluate the determinant in
double precision together with a forward error bound, and fall back to
exact rational arithmetic (``fractions.Fraction``, to which binary floats
convert losslessly) whenever the bound cannot certify the sign.  Plain
floating evaluation is never trusted near zero.

Inputs that are already ``Fraction`` (or ``int``) skip the filter and go
straight to the exact path, so the same functions serve both the float
world (mesh vertices) and the rational world (constructed intersection
points).
"""

from fractions import Fraction

import numpy as np

_EPS = float(np.finfo(np.float64).eps) / 2.0
# Shewchuk-style static error bounds for the two determinants.
ORIENT2D_BOUND = (3.0 + 16.0 * _EPS) * _EPS
ORIENT3D_BOUND = (7.0 + 56.0 * _EPS) * _EPS


def _sign(x):
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


def _all_float(values):
    # np.float64 subclasses float and shares IEEE double arithmetic, so the
    # static filter stays sound for it.
    for v in values:
        if not isinstance(v, float):
            return False
    return True


def orient2d(ax, ay, bx, by, cx, cy):
    """Sign of det [[bx-ax, by-ay], [cx-ax, cy-ay]].

    +1 when (a, b, c) turn counter-clockwise, -1 clockwise, 0 collinear.
    Exact for float, int and Fraction coordinates.
    """
    if _all_float((ax, ay, bx, by, cx, cy)):
        detleft = (ax - cx) * (by - cy)
        detright = (ay - cy) * (bx - cx)
        det = detleft - detright
        detsum = abs(detleft) + abs(detright)
        if abs(det) > ORIENT2D_BOUND * detsum:
            return _sign(det)
    return orient2d_exact(ax, ay, bx, by, cx, cy)


def orient2d_exact(ax, ay, bx, by, cx, cy):
    ax, ay = Fraction(ax), Fraction(ay)
    bx, by = Fraction(bx), Fraction(by)
    cx, cy = Fraction(cx), Fraction(cy)
    return _sign((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))


def orient3d(px, py, pz, qx, qy, qz, rx, ry, rz, sx, sy, sz):
    """Sign of det of the rows (q-p, r-p, s-p).

    +1 for the canonical positive tetrahedron
    (0,0,0), (1,0,0), (0,1,0), (0,0,1); 0 iff the four points are
    coplanar under exact evaluation.
    """
    vals = (px, py, pz, qx, qy, qz, rx, ry, rz, sx, sy, sz)
    if _all_float(vals):
        adx = qx - px
        ady = qy - py
        adz = qz - pz
        bdx = rx - px
        bdy = ry - py
        bdz = rz - pz
        cdx = sx - px
        cdy = sy - py
        cdz = sz - pz
        m1 = bdy * cdz - bdz * cdy
        m2 = bdz * cdx - bdx * cdz
        m3 = bdx * cdy - bdy * cdx
        det = adx * m1 + ady * m2 + adz * m3
        permanent = (
            abs(adx) * (abs(bdy * cdz) + abs(bdz * cdy))
            + abs(ady) * (abs(bdz * cdx) + abs(bdx * cdz))
            + abs(adz) * (abs(bdx * cdy) + abs(bdy * cdx))
        )
        if abs(det) > ORIENT3D_BOUND * permanent:
            return _sign(det)
    return orient3d_exact(px, py, pz, qx, qy, qz, rx, ry, rz, sx, sy, sz)


def orient3d_exact(px, py, pz, qx, qy, qz, rx, ry, rz, sx, sy, sz):
    adx = Fraction(qx) - Fraction(px)
    ady = Fraction(qy) - Fraction(py)
    adz = Fraction(qz) - Fraction(pz)
    bdx = Fraction(rx) - Fraction(px)
    bdy = Fraction(ry) - Fraction(py)
    bdz = Fraction(rz) - Fraction(pz)
    cdx = Fraction(sx) - Fraction(px)
    cdy = Fraction(sy) - Fraction(py)
    cdz = Fraction(sz) - Fraction(pz)
    det = (
        adx * (bdy * cdz - bdz * cdy)
        + ady * (bdz * cdx - bdx * cdz)
        + adz * (bdx * cdy - bdy * cdx)
    )
    return _sign(det)


def orient2d_points(a, b, c):
    """orient2d over 2-sequences (tuples, arrays) of coordinates."""
    return orient2d(a[0], a[1], b[0], b[1], c[0], c[1])


def orient3d_points(p, q, r, s):
    """orient3d over 3-sequences of coordinates."""
    return orient3d(p[0], p[1], p[2], q[0], q[1], q[2], r[0], r[1], r[2], s[0], s[1], s[2])


def orient3d_batch(p, q, r, pts):
    """Vectorised orient3d of many points against one plane.

    Parameters
    ----------
    p, q, r : (3,) float arrays, the plane-defining triangle.
    pts : (n, 3) float array of query points.

    Returns
    -------
    signs : (n,) int array in {-1, 0, +1}
    certain : (n,) bool array; False where the float filter could not
        certify the sign and the caller must re-test exactly.
    """
    pts = np.asarray(pts, dtype=float)
    ad = np.asarray(q, dtype=float) - p
    bd = np.asarray(r, dtype=float) - p
    cd = pts - p
    m1 = ad[1] * bd[2] - ad[2] * bd[1]
    m2 = ad[2] * bd[0] - ad[0] * bd[2]
    m3 = ad[0] * bd[1] - ad[1] * bd[0]
    # det of rows (ad, bd, cd) = cd . (ad x bd)
    det = cd[:, 0] * m1 + cd[:, 1] * m2 + cd[:, 2] * m3
    permanent = (
        np.abs(cd[:, 0]) * (abs(ad[1] * bd[2]) + abs(ad[2] * bd[1]))
        + np.abs(cd[:, 1]) * (abs(ad[2] * bd[0]) + abs(ad[0] * bd[2]))
        + np.abs(cd[:, 2]) * (abs(ad[0] * bd[1]) + abs(ad[1] * bd[0]))
    )
    certain = np.abs(det) > ORIENT3D_BOUND * permanent
    return np.sign(det).astype(np.int64), certain


def collinear3d(a, b, c):
    """True iff the three 3D points are exactly collinear."""
    # Cross product of (b-a) and (c-a) must vanish in all components.
    return (
        orient2d(a[0], a[1], b[0], b[1], c[0], c[1]) == 0
        and orient2d(a[0], a[2], b[0], b[2], c[0], c[2]) == 0
        and orient2d(a[1], a[2], b[1], b[2], c[1], c[2]) == 0
    )


def exact_dot_sign(u, v):
    """Exact sign of the dot product of two 3-vectors."""
    acc = Fraction(0)
    for ui, vi in zip(u, v):
        acc += Fraction(ui) * Fraction(vi)
    return _sign(acc)


def exact_cross(u, v):
    """Exact cross product of two 3-vectors as a Fraction triple."""
    ux, uy, uz = (Fraction(c) for c in u)
    vx, vy, vz = (Fraction(c) for c in v)
    return (uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx)
