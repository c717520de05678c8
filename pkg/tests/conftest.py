import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from geosolid.convex import convex_hull
from geosolid.shapes import cube


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def offset_cubes():
    return cube(), cube(origin=(0.5, 0.0, 0.0))


def random_convex_pair(rng, min_overlap_frac=0.05):
    """Two random convex polytope meshes with substantial overlap.

    Rejection-samples until the boxes overlap decently; the caller's rng
    drives everything, so results are reproducible.
    """
    for _ in range(100):
        pts_a = rng.normal(size=(rng.integers(8, 16), 3)) * rng.uniform(0.4, 0.8)
        offset = rng.uniform(-0.6, 0.6, size=3)
        pts_b = rng.normal(size=(rng.integers(8, 16), 3)) * rng.uniform(0.4, 0.8) + offset
        try:
            a = convex_hull(pts_a).to_mesh()
            b = convex_hull(pts_b).to_mesh()
        except Exception:
            continue
        lo_a, hi_a = a.bounds()
        lo_b, hi_b = b.bounds()
        inter = np.minimum(hi_a, hi_b) - np.maximum(lo_a, lo_b)
        if np.all(inter > 0):
            vol_box = float(np.prod(inter))
            ref = min(float(np.prod(hi_a - lo_a)), float(np.prod(hi_b - lo_b)))
            if vol_box > min_overlap_frac * ref:
                return a, b
    raise RuntimeError("could not sample an overlapping convex pair")
