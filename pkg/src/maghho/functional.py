"""Polynomial bases, polygon/segment quadrature, and L2 projection.

Scaled, centered monomials on cells, ((x - x_T)/h_T)^alpha, and on faces,
(((x - x_F) . t)/h_F)^j.  Cell quadrature fans the polygon from its
centroid (ear clipping as fallback for non-star-shaped cells) and places
a collapsed Gauss-Legendre x Gauss-Jacobi tensor rule on each triangle,
which has positive weights at every exactness order.  The complex L2
product convention is (u, v) = integral of u * conj(v) throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import cho_factor, cho_solve
from scipy.special import roots_jacobi


@lru_cache(maxsize=None)
def multi_indices(degree: int) -> tuple:
    """Exponent pairs (a, b) with a+b <= degree, graded order."""
    return tuple((t - j, j) for t in range(degree + 1) for j in range(t + 1))


def space_dim(degree: int) -> int:
    """dim P^degree in two variables."""
    return (degree + 1) * (degree + 2) // 2


class CellBasis:
    """Scaled monomial basis of P^degree on a cell."""

    def __init__(self, degree: int, center, scale: float):
        self.degree = degree
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.exponents = np.array(multi_indices(degree))
        self.dim = len(self.exponents)

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Basis values, shape (n_points, dim)."""
        xi = (np.atleast_2d(points) - self.center) / self.scale
        a, b = self.exponents[:, 0], self.exponents[:, 1]
        return xi[:, 0:1] ** a * xi[:, 1:2] ** b

    def grad(self, points: np.ndarray) -> np.ndarray:
        """Basis gradients, shape (n_points, dim, 2)."""
        xi = (np.atleast_2d(points) - self.center) / self.scale
        a, b = self.exponents[:, 0], self.exponents[:, 1]
        out = np.zeros((xi.shape[0], self.dim, 2))
        with np.errstate(invalid="ignore"):
            out[:, :, 0] = np.where(a > 0, a * xi[:, 0:1] ** np.maximum(a - 1, 0)
                                    * xi[:, 1:2] ** b, 0.0)
            out[:, :, 1] = np.where(b > 0, b * xi[:, 0:1] ** a
                                    * xi[:, 1:2] ** np.maximum(b - 1, 0), 0.0)
        return out / self.scale


class FaceBasis:
    """Scaled monomial basis of P^degree on a straight face."""

    def __init__(self, degree: int, midpoint, tangent, scale: float):
        self.degree = degree
        self.midpoint = np.asarray(midpoint, dtype=float)
        self.tangent = np.asarray(tangent, dtype=float)
        self.scale = float(scale)
        self.dim = degree + 1

    def eval(self, points: np.ndarray) -> np.ndarray:
        s = (np.atleast_2d(points) - self.midpoint) @ self.tangent / self.scale
        return s[:, None] ** np.arange(self.dim)


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray          # (n, 2)
    weights: np.ndarray         # (n,), positive, summing to the region measure
    order: int                  # polynomial exactness


@lru_cache(maxsize=None)
def _reference_triangle_rule(order: int):
    """Collapsed tensor rule on the unit triangle (0,0)-(1,0)-(0,1)."""
    n = max(1, (order + 2) // 2)            # ceil((order+1)/2)
    xu, wu = leggauss(n)                    # on [-1, 1]
    u = 0.5 * (xu + 1.0)
    xv, wv = roots_jacobi(n, 1.0, 0.0)      # weight (1-t) on [-1, 1]
    v = 0.5 * (xv + 1.0)
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv) / 8.0
    pts = np.column_stack([(U * (1.0 - V)).ravel(), V.ravel()])
    return pts, W.ravel()


def triangle_rule(tri: np.ndarray, order: int) -> QuadratureRule:
    """Map the reference rule onto a physical triangle (3, 2)."""
    ref_pts, ref_w = _reference_triangle_rule(order)
    J = np.array([tri[1] - tri[0], tri[2] - tri[0]]).T
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    pts = ref_pts @ J.T + tri[0]
    return QuadratureRule(pts, ref_w * abs(det), order)


def _fan_triangles(coords: np.ndarray, centroid: np.ndarray):
    """Centroid fan, or None when not star-shaped from the centroid."""
    n = len(coords)
    tris = []
    for i in range(n):
        tri = np.array([centroid, coords[i], coords[(i + 1) % n]])
        a2 = (tri[1] - tri[0])[0] * (tri[2] - tri[0])[1] \
            - (tri[1] - tri[0])[1] * (tri[2] - tri[0])[0]
        if a2 <= 0:
            return None
        tris.append(tri)
    return tris


def _ear_clip(coords: np.ndarray):
    """Triangulate a simple CCW polygon by ear clipping."""
    idx = list(range(len(coords)))
    tris = []
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10000:
            raise ValueError("ear clipping failed: polygon may be non-simple")
        n = len(idx)
        for pos in range(n):
            i0, i1, i2 = idx[pos - 1], idx[pos], idx[(pos + 1) % n]
            p0, p1, p2 = coords[i0], coords[i1], coords[i2]
            cross = (p1 - p0)[0] * (p2 - p0)[1] - (p1 - p0)[1] * (p2 - p0)[0]
            if cross <= 0:
                continue                      # reflex corner, not an ear
            # no other vertex may lie inside the candidate ear
            ok = True
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                q = coords[j]
                d0 = (p1 - p0)[0] * (q - p0)[1] - (p1 - p0)[1] * (q - p0)[0]
                d1 = (p2 - p1)[0] * (q - p1)[1] - (p2 - p1)[1] * (q - p1)[0]
                d2 = (p0 - p2)[0] * (q - p2)[1] - (p0 - p2)[1] * (q - p2)[0]
                if d0 > 0 and d1 > 0 and d2 > 0:
                    ok = False
                    break
            if ok:
                tris.append(np.array([p0, p1, p2]))
                idx.pop(pos)
                break
        else:
            raise ValueError("ear clipping failed: no ear found")
    tris.append(coords[idx])
    return tris


def polygon_quadrature(coords, order: int) -> QuadratureRule:
    """Quadrature of the requested exactness on a simple CCW polygon."""
    if order < 0:
        raise ValueError("order must be >= 0")
    coords = np.asarray(coords, dtype=float)
    x, y = coords[:, 0], coords[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    centroid = np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6 * area)
    tris = _fan_triangles(coords, centroid)
    if tris is None:
        tris = _ear_clip(coords)
    rules = [triangle_rule(t, order) for t in tris]
    pts = np.vstack([r.points for r in rules])
    w = np.concatenate([r.weights for r in rules])
    return QuadratureRule(pts, w, order)


def segment_quadrature(p0, p1, order: int) -> QuadratureRule:
    """Gauss-Legendre rule on the segment [p0, p1]."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    n = max(1, (order + 2) // 2)
    xg, wg = leggauss(n)
    s = 0.5 * (xg + 1.0)
    pts = p0 + np.outer(s, p1 - p0)
    length = np.linalg.norm(p1 - p0)
    return QuadratureRule(pts, 0.5 * wg * length, 2 * n - 1)


def mass_matrix(values: np.ndarray, weights: np.ndarray,
                other: np.ndarray = None) -> np.ndarray:
    """Gram matrix of basis value tables under a quadrature rule."""
    other = values if other is None else other
    return np.einsum("q,qi,qj->ij", weights, values, other)


class Projector:
    """L2-orthogonal projector onto a basis, with a factorized mass matrix."""

    def __init__(self, basis, rule: QuadratureRule, values: np.ndarray = None):
        self.basis = basis
        self.rule = rule
        self.values = basis.eval(rule.points) if values is None else values
        self.mass = mass_matrix(self.values, rule.weights)
        try:
            self._cho = cho_factor(self.mass)
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"singular mass matrix (degenerate region): {exc}") from exc

    def project_values(self, fvals: np.ndarray) -> np.ndarray:
        """Coefficients of the projection from samples at the rule points."""
        rhs = self.values.T @ (self.rule.weights * fvals)
        return cho_solve(self._cho, rhs)

    def project(self, f) -> np.ndarray:
        return self.project_values(np.asarray(f(self.rule.points)))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve(self._cho, rhs)


def cell_basis_for(coords, degree: int) -> CellBasis:
    """Basis centered at the polygon centroid, scaled by its diameter."""
    coords = np.asarray(coords, dtype=float)
    x, y = coords[:, 0], coords[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    centroid = np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6 * area)
    diff = coords[:, None, :] - coords[None, :, :]
    diam = np.sqrt((diff ** 2).sum(-1)).max()
    return CellBasis(degree, centroid, diam)


def face_basis_for(p0, p1, degree: int) -> FaceBasis:
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = np.linalg.norm(p1 - p0)
    return FaceBasis(degree, 0.5 * (p0 + p1), (p1 - p0) / length, length)


def l2_project_cell(f, coords, degree: int, order: int = None) -> np.ndarray:
    """Project a (complex) field closure onto P^degree of a polygon."""
    basis = cell_basis_for(coords, degree)
    order = 2 * degree + 3 if order is None else order
    rule = polygon_quadrature(coords, order)
    return Projector(basis, rule).project(f)


def l2_project_face(f, p0, p1, degree: int, order: int = None) -> np.ndarray:
    """Project a (complex) field closure onto P^degree of a segment."""
    basis = face_basis_for(p0, p1, degree)
    order = 2 * degree + 3 if order is None else order
    rule = segment_quadrature(p0, p1, order)
    return Projector(basis, rule).project(f)
