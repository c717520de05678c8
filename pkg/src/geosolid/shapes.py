"""Deterministic factories for the solids used across the package.

Everything here returns a closed, outward-oriented triangle mesh; the
icosphere is also the ball discretization used by buffer analysis
(vertices exactly on the sphere, so the mesh is inscribed).
"""

from __future__ import annotations

import math

import numpy as np

from .core import Mesh
from .errors import ParameterError

# Vertices of a regular icosahedron on the unit sphere.
_PHI = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array(
    [
        (-1, _PHI, 0), (1, _PHI, 0), (-1, -_PHI, 0), (1, -_PHI, 0),
        (0, -1, _PHI), (0, 1, _PHI), (0, -1, -_PHI), (0, 1, -_PHI),
        (_PHI, 0, -1), (_PHI, 0, 1), (-_PHI, 0, -1), (-_PHI, 0, 1),
    ],
    dtype=float,
)
_ICO_VERTS /= np.linalg.norm(_ICO_VERTS[0])
_ICO_FACES = np.array(
    [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ],
    dtype=np.int64,
)


def box(lo, hi) -> Mesh:
    """Axis-aligned box from two corners, outward oriented."""
    lo = np.asarray(lo, dtype=float).reshape(3)
    hi = np.asarray(hi, dtype=float).reshape(3)
    if np.any(hi <= lo):
        raise ParameterError("box corners must satisfy lo < hi on every axis")
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    v = np.array(
        [
            (x0, y0, z0), (x1, y0, z0), (x1, y1, z0), (x0, y1, z0),
            (x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1),
        ]
    )
    quads = [
        (0, 3, 2, 1),  # bottom, normal -z
        (4, 5, 6, 7),  # top, +z
        (0, 1, 5, 4),  # front, -y
        (2, 3, 7, 6),  # back, +y
        (1, 2, 6, 5),  # right, +x
        (3, 0, 4, 7),  # left, -x
    ]
    tris = []
    for (a, b, c, d) in quads:
        tris.append((a, b, c))
        tris.append((a, c, d))
    return Mesh(v, np.array(tris, dtype=np.int64))


def cube(side: float = 1.0, origin=(0.0, 0.0, 0.0)) -> Mesh:
    o = np.asarray(origin, dtype=float)
    return box(o, o + float(side))


def unit_tetrahedron() -> Mesh:
    """Tetrahedron (0,0,0), (1,0,0), (0,1,0), (0,0,1); volume 1/6."""
    v = np.array([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)], dtype=float)
    t = np.array([(0, 2, 1), (0, 1, 3), (0, 3, 2), (1, 2, 3)], dtype=np.int64)
    return Mesh(v, t)


def icosphere(lod: int = 3, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> Mesh:
    """Icosahedron subdivided ``lod`` times, vertices exactly at ``radius``.

    Vertex counts: lod 1 -> 42, 2 -> 162, 3 -> 642, 4 -> 2562.
    """
    if not (1 <= int(lod) <= 6):
        raise ParameterError("sphere lod must be in [1, 6]")
    if radius <= 0:
        raise ParameterError("radius must be positive")
    verts = [tuple(p) for p in _ICO_VERTS]
    faces = [tuple(f) for f in _ICO_FACES]
    for _ in range(int(lod)):
        cache = {}
        new_faces = []

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            m = cache.get(key)
            if m is None:
                p = np.asarray(verts[i]) + np.asarray(verts[j])
                p /= np.linalg.norm(p)
                m = len(verts)
                verts.append(tuple(p))
                cache[key] = m
            return m

        for (a, b, c) in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    v = np.asarray(verts, dtype=float) * float(radius) + np.asarray(center, dtype=float)
    return Mesh(v, np.asarray(faces, dtype=np.int64))


def icosphere_sag(lod: int) -> float:
    """Max relative depth of a facet below the true sphere at this lod.

    The inscribed mesh's surface lies within [R*(1-sag), R] of the center.
    """
    m = icosphere(lod)
    tc = m.triangle_coords()
    centroids = tc.mean(axis=1)
    # Facet plane distance from origin = projection of any corner onto the normal.
    n = np.cross(tc[:, 1] - tc[:, 0], tc[:, 2] - tc[:, 0])
    n /= np.linalg.norm(n, axis=1)[:, None]
    d = np.einsum("ij,ij->i", tc[:, 0], n)
    del centroids
    return float(1.0 - d.min())


def l_prism() -> Mesh:
    """L-shaped prism: [0,2]x[0,1]x[0,1] plus [0,1]x[0,1]x[1,2]; volume 3."""
    faces = [
        # floor and outer walls
        [(0, 0, 0), (0, 1, 0), (2, 1, 0), (2, 0, 0)],            # z=0, -z
        [(0, 0, 0), (0, 0, 2), (0, 1, 2), (0, 1, 0)],            # x=0, -x
        [(2, 0, 0), (2, 1, 0), (2, 1, 1), (2, 0, 1)],            # x=2, +x
        [(1, 0, 1), (2, 0, 1), (2, 1, 1), (1, 1, 1)],            # z=1 ledge, +z
        [(1, 0, 1), (1, 1, 1), (1, 1, 2), (1, 0, 2)],            # x=1 riser, +x
        [(0, 0, 2), (1, 0, 2), (1, 1, 2), (0, 1, 2)],            # z=2 top, +z
        # y walls
        [(0, 0, 0), (2, 0, 0), (2, 0, 1), (1, 0, 1), (1, 0, 2), (0, 0, 2)],  # y=0, -y
        [(0, 1, 0), (0, 1, 2), (1, 1, 2), (1, 1, 1), (2, 1, 1), (2, 1, 0)],  # y=1, +y
    ]
    from .core import mesh_from_polygons

    m, _ = mesh_from_polygons(faces)
    return m


def staircase(steps: int = 4) -> Mesh:
    """Descending staircase of unit-depth steps; step i spans z in [i, i+1],
    x in [0, steps-i].  Volume = steps*(steps+1)/2."""
    if steps < 1:
        raise ParameterError("staircase needs at least one step")
    k = int(steps)
    faces = []
    faces.append([(0, 0, 0), (0, 1, 0), (k, 1, 0), (k, 0, 0)])      # floor -z
    faces.append([(0, 0, 0), (0, 0, k), (0, 1, k), (0, 1, 0)])      # back wall -x
    faces.append([(0, 0, k), (1, 0, k), (1, 1, k), (0, 1, k)])      # top +z
    for i in range(k):
        w = k - i
        # riser at x = w for step i (vertical face), tread at z = i+1
        faces.append([(w, 0, i), (w, 1, i), (w, 1, i + 1), (w, 0, i + 1)])  # +x riser
        if i < k - 1:
            faces.append([(w - 1, 0, i + 1), (w, 0, i + 1), (w, 1, i + 1), (w - 1, 1, i + 1)])  # +z tread
    # side walls y=0 / y=1 are staircase polygons
    side = [(0.0, 0.0)]
    for i in range(k):
        w = k - i
        side.append((w, float(i)))
        side.append((w, float(i + 1)))
    side.append((0.0, float(k)))
    faces.append([(x, 0.0, z) for (x, z) in side])                   # y=0, -y
    faces.append([(x, 1.0, z) for (x, z) in reversed(side)])         # y=1, +y
    from .core import mesh_from_polygons

    m, _ = mesh_from_polygons(faces)
    return m


def torus(major: float = 2.0, minor: float = 0.5, n_major: int = 24, n_minor: int = 12) -> Mesh:
    """Triangulated torus around the z axis; Euler characteristic 0."""
    if minor <= 0 or major <= minor:
        raise ParameterError("torus needs 0 < minor < major")
    verts = []
    for i in range(n_major):
        u = 2.0 * math.pi * i / n_major
        cu, su = math.cos(u), math.sin(u)
        for j in range(n_minor):
            v = 2.0 * math.pi * j / n_minor
            cv, sv = math.cos(v), math.sin(v)
            r = major + minor * cv
            verts.append((r * cu, r * su, minor * sv))
    tris = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = i * n_minor + (j + 1) % n_minor
            c = ((i + 1) % n_major) * n_minor + j
            d = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            tris.append((a, c, b))
            tris.append((b, c, d))
    return Mesh(np.asarray(verts, dtype=float), np.asarray(tris, dtype=np.int64))
