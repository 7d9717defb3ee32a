"""Polytopal meshes and polygon quadrature.

Builds a Cartesian mesh and a punctured (solenoid) mesh, validates their
geometric invariants, and integrates polynomials over polygonal cells
with the fan-triangulated tensor rules.
"""

import numpy as np

from maghho import generate_cartesian, generate_punctured, validate
from maghho.functional import polygon_quadrature
from maghho.mesh import hole_polygon

print("=== Cartesian mesh ===")
mesh = generate_cartesian((-4, 4, -4, 4), 8, 8)
print(f"cells: {mesh.n_cells}, faces: {mesh.n_faces} "
      f"({len(mesh.boundary_face_ids)} boundary), h = {mesh.h:.4f}")
report = validate(mesh, rho=0.2)
print(f"validation: {'OK' if report.ok else report.violations}")
print(f"min fan shape ratio: {report.min_shape_ratio:.4f}")

print("\n=== Punctured mesh (disk hole approximated by a 64-gon) ===")
mesh = generate_punctured((-5, 5, -2, 2), 100, 40, (0.0, 0.0), 0.5, 64)
hp = hole_polygon((0.0, 0.0), 0.5, 64)
hole_area = 0.5 * abs(sum(hp[i, 0] * hp[(i + 1) % 64, 1]
                          - hp[(i + 1) % 64, 0] * hp[i, 1] for i in range(64)))
print(f"cells: {mesh.n_cells} (uncut grid would have 4000)")
print(f"total measure: {mesh.total_measure():.12f}")
print(f"rectangle minus hole polygon: {40.0 - hole_area:.12f}")
print(f"rectangle minus exact disk:   {40.0 - np.pi * 0.25:.12f}")
report = validate(mesh)
print(f"validation: {'OK' if report.ok else report.violations[:3]}")

print("\n=== Quadrature on a pentagon ===")
theta = 2 * np.pi * np.arange(5) / 5
pentagon = np.column_stack([np.cos(theta), np.sin(theta)])
area = 0.5 * 5 * np.sin(2 * np.pi / 5)
for order in (1, 3, 5):
    rule = polygon_quadrature(pentagon, order)
    x, y = rule.points[:, 0], rule.points[:, 1]
    val = (rule.weights * x ** 2 * y ** 2).sum()
    print(f"order {order}: {len(rule.weights):3d} points, "
          f"sum w = {rule.weights.sum():.15f} (area {area:.15f}), "
          f"int x^2 y^2 = {val:.12f}")
print("order >= 4 reproduces the degree-4 integral exactly; "
      "weights stay positive at every order.")
