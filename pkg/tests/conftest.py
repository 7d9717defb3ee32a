import numpy as np
import pytest

from maghho.mesh import generate_punctured, mesh_from_cells


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def single_cell_mesh(coords):
    """One-cell mesh from a CCW vertex loop."""
    coords = np.asarray(coords, dtype=float)
    return mesh_from_cells(coords, [list(range(len(coords)))])


def fan_shape_ratio(coords):
    """min over centroid-fan triangles of inradius/diameter."""
    coords = np.asarray(coords, dtype=float)
    x, y = coords[:, 0], coords[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    c = np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6 * area)
    ratio = np.inf
    n = len(coords)
    for i in range(n):
        tri = np.array([c, coords[i], coords[(i + 1) % n]])
        e = np.array([np.linalg.norm(tri[1] - tri[0]),
                      np.linalg.norm(tri[2] - tri[1]),
                      np.linalg.norm(tri[0] - tri[2])])
        u, v = tri[1] - tri[0], tri[2] - tri[0]
        a2 = u[0] * v[1] - u[1] * v[0]
        if a2 <= 0:
            return 0.0
        ratio = min(ratio, (a2 / e.sum()) / e.max())
    return ratio


def random_triangle(rng, min_ratio=0.07):
    # the centroid fan of even an equilateral triangle only reaches ~0.13
    while True:
        pts = rng.uniform(-1, 1, (3, 2))
        d = (pts[1] - pts[0])[0] * (pts[2] - pts[0])[1] \
            - (pts[1] - pts[0])[1] * (pts[2] - pts[0])[0]
        if d < 0:
            pts = pts[::-1].copy()
        if fan_shape_ratio(pts) >= min_ratio:
            return pts


def random_quad(rng, min_ratio=0.12):
    base = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    while True:
        pts = base + rng.uniform(-0.25, 0.25, (4, 2))
        pts = pts * rng.uniform(0.5, 2.0)
        if fan_shape_ratio(pts) >= min_ratio:
            return pts


_CLIPPED_POOL = None


def clipped_cell_pool():
    """Clipped polygons harvested from a punctured mesh (5+ faces)."""
    global _CLIPPED_POOL
    if _CLIPPED_POOL is None:
        mesh = generate_punctured((-2, 2, -2, 2), 10, 10, (0.0, 0.0), 0.7, 32)
        _CLIPPED_POOL = [mesh.cell_vertices(ci) for ci in range(mesh.n_cells)
                         if len(mesh.cells[ci].face_ids) > 4
                         and fan_shape_ratio(mesh.cell_vertices(ci)) > 0.05]
    return _CLIPPED_POOL


def random_polygon(rng, kind=None):
    kind = kind or rng.choice(["triangle", "quad", "clipped"])
    if kind == "triangle":
        return random_triangle(rng)
    if kind == "quad":
        return random_quad(rng)
    pool = clipped_cell_pool()
    return pool[int(rng.integers(len(pool)))]
