import dataclasses

import numpy as np
import pytest

from maghho.mesh import (BOUNDARY, MeshError, MeshFormatError, PolytopalMesh,
                         export_mesh, generate_cartesian, generate_punctured,
                         hole_polygon, import_mesh, mesh_from_cells, validate)


def closure_defect(mesh):
    worst = 0.0
    for ci, cell in enumerate(mesh.cells):
        s = np.zeros(2)
        perim = 0.0
        for fid in cell.face_ids:
            f = mesh.faces[fid]
            s += f.measure * f.normal_from(ci)
            perim += f.measure
        worst = max(worst, np.abs(s).max() / perim)
    return worst


class TestCartesian:
    def test_unit_single_cell(self):
        mesh = generate_cartesian((0, 1, 0, 1), 1, 1)
        assert mesh.n_cells == 1
        cell = mesh.cells[0]
        assert cell.measure == pytest.approx(1.0)
        assert cell.diameter == pytest.approx(np.sqrt(2.0))
        assert mesh.n_faces == 4
        assert all(f.measure == pytest.approx(1.0) for f in mesh.faces)
        assert len(mesh.boundary_face_ids) == 4

    def test_counts_8x8(self):
        mesh = generate_cartesian((-4, 4, -4, 4), 8, 8)
        assert mesh.n_cells == 64
        assert mesh.h == pytest.approx(np.sqrt(2.0))
        # 2 * 9 * 8 edges in total: 112 interior + 32 boundary
        assert mesh.n_faces == 144
        assert len(mesh.boundary_face_ids) == 32
        assert len(mesh.interior_face_ids) == 112

    def test_closure_identity(self):
        mesh = generate_cartesian((0, 2, -1, 1), 5, 3)
        assert closure_defect(mesh) < 1e-12

    def test_total_measure(self):
        mesh = generate_cartesian((0, 2, -1, 3), 7, 5)
        assert mesh.total_measure() == pytest.approx(8.0, abs=1e-10)

    def test_opposite_normals(self):
        mesh = generate_cartesian((0, 1, 0, 1), 3, 3)
        for fid in mesh.interior_face_ids:
            f = mesh.faces[fid]
            n1 = f.normal_from(f.owner_cell)
            n2 = f.normal_from(f.neighbor_cell)
            assert np.allclose(n1, -n2)

    def test_face_diameter_bounded_by_cell(self):
        mesh = generate_cartesian((0, 1, 0, 5), 4, 4)
        for ci, cell in enumerate(mesh.cells):
            for fid in cell.face_ids:
                assert mesh.faces[fid].diameter <= cell.diameter * (1 + 1e-12)

    def test_degenerate_bounds(self):
        with pytest.raises(MeshError):
            generate_cartesian((0, 0, 0, 1), 2, 2)
        with pytest.raises(MeshError):
            generate_cartesian((0, 1, 0, 1), 0, 2)


class TestPunctured:
    def test_total_measure_vs_clipping_polygon(self):
        # oracle: exact shoelace area of the inscribed hole polygon
        mesh = generate_punctured((-5, 5, -2, 2), 100, 40, (0.0, 0.0), 0.5, 64)
        hp = hole_polygon((0.0, 0.0), 0.5, 64)
        x, y = hp[:, 0], hp[:, 1]
        hole_area = 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
        assert mesh.total_measure() == pytest.approx(40.0 - hole_area, abs=1e-9)
        # the polygon-vs-circle gap is what separates it from 40 - pi r^2
        assert abs(mesh.total_measure() - (40.0 - np.pi * 0.25)) < 2e-3

    def test_clipped_cells_satisfy_closure(self):
        mesh = generate_punctured((-2, 2, -2, 2), 12, 12, (0.0, 0.0), 0.6, 64)
        assert closure_defect(mesh) < 1e-12

    def test_cell_count_bounds(self):
        nx = ny = 20
        mesh = generate_punctured((-2, 2, -2, 2), nx, ny, (0.0, 0.0), 0.6, 32)
        # oracle: brute-force count of grid cells touching the disk
        xs = np.linspace(-2, 2, nx + 1)
        n_inside = n_touching = 0
        for i in range(nx):
            for j in range(ny):
                cx = np.array([xs[i], xs[i + 1], xs[i + 1], xs[i]])
                cy = np.array([xs[j], xs[j], xs[j + 1], xs[j + 1]])
                r = np.hypot(cx, cy)
                if r.max() <= 0.6:
                    n_inside += 1
                # conservative: bounding-box distance to the origin
                dx = max(xs[i] - 0, -xs[i + 1], 0)
                dy = max(xs[j] - 0, -xs[j + 1], 0)
                if np.hypot(dx, dy) < 0.6:
                    n_touching += 1
        assert mesh.n_cells <= nx * ny - n_inside
        assert mesh.n_cells >= nx * ny - n_touching

    def test_hole_faces_are_boundary(self):
        mesh = generate_punctured((-2, 2, -2, 2), 10, 10, (0.0, 0.0), 0.5, 16)
        # every face strictly inside the domain box must be on the hole chain
        for fid in mesh.boundary_face_ids:
            m = mesh.faces[fid].midpoint
            on_rect = (abs(abs(m[0]) - 2) < 1e-12 or abs(abs(m[1]) - 2) < 1e-12)
            r = np.hypot(m[0], m[1])
            assert on_rect or r <= 0.5 + 1e-9

    def test_mirror_symmetric(self):
        from scipy.spatial import cKDTree
        mesh = generate_punctured((-5, 5, -2, 2), 60, 24, (0.0, 0.0), 0.5, 64)
        cents = np.array([c.centroid for c in mesh.cells])
        mirr = cents * np.array([1.0, -1.0])
        d, _ = cKDTree(cents).query(mirr)
        assert d.max() < 1e-10

    def test_invalid_hole(self):
        with pytest.raises(MeshError):
            generate_punctured((0, 1, 0, 1), 4, 4, (0.0, 0.5), 0.2, 16)
        with pytest.raises(MeshError):
            generate_punctured((-1, 1, -1, 1), 4, 4, (0.0, 0.0), 0.3, 4)


class TestImportExport:
    def test_round_trip_unit_square(self, tmp_path):
        path = tmp_path / "square.txt"
        path.write_text("dim 2\nvertices 4\n0 0\n1 0\n1 1\n0 1\ncells 1\n4 0 1 2 3\n")
        mesh = import_mesh(path)
        ref = generate_cartesian((0, 1, 0, 1), 1, 1)
        assert mesh.n_cells == ref.n_cells
        assert mesh.cells[0].measure == pytest.approx(1.0)
        assert mesh.cells[0].diameter == pytest.approx(np.sqrt(2))

    def test_pentagon(self, tmp_path):
        theta = 2 * np.pi * np.arange(5) / 5
        verts = np.column_stack([np.cos(theta), np.sin(theta)])
        lines = ["dim 2", "vertices 5"]
        lines += [f"{v[0]:.17g} {v[1]:.17g}" for v in verts]
        lines += ["cells 1", "5 0 1 2 3 4"]
        path = tmp_path / "pent.txt"
        path.write_text("\n".join(lines) + "\n")
        mesh = import_mesh(path)
        assert len(mesh.cells[0].face_ids) == 5
        # regular polygon centered at the origin
        assert np.allclose(mesh.cells[0].centroid, [0, 0], atol=1e-14)
        area = 0.5 * 5 * np.sin(2 * np.pi / 5)
        assert mesh.cells[0].measure == pytest.approx(area)

    def test_export_import(self, tmp_path):
        mesh = generate_punctured((-1, 1, -1, 1), 6, 6, (0.0, 0.0), 0.4, 16)
        path = tmp_path / "punct.txt"
        export_mesh(mesh, path)
        back = import_mesh(path)
        assert back.n_cells == mesh.n_cells
        assert back.total_measure() == pytest.approx(mesh.total_measure(), rel=1e-14)

    def test_inconsistent_orientation_names_face(self, tmp_path):
        # duplicated cell record: the shared edges repeat in one direction
        path = tmp_path / "bad.txt"
        path.write_text("dim 2\nvertices 4\n0 0\n1 0\n1 1\n0 1\n"
                        "cells 2\n4 0 1 2 3\n4 0 1 2 3\n")
        with pytest.raises(MeshError, match=r"face \(0, 1\)"):
            import_mesh(path)

    def test_parse_error_line_number(self, tmp_path):
        path = tmp_path / "broken.txt"
        path.write_text("dim 2\nvertices 2\n0 0\noops\ncells 0\n")
        with pytest.raises(MeshFormatError, match="line 4"):
            import_mesh(path)

    def test_clockwise_cell_rejected(self, tmp_path):
        path = tmp_path / "cw.txt"
        path.write_text("dim 2\nvertices 4\n0 0\n1 0\n1 1\n0 1\ncells 1\n4 0 3 2 1\n")
        with pytest.raises(MeshError, match="counter-clockwise"):
            import_mesh(path)


class TestValidate:
    def test_cartesian_clean(self):
        rep = validate(generate_cartesian((0, 1, 0, 1), 8, 8), rho=0.2)
        assert rep.ok
        assert rep.min_shape_ratio > 0.2

    def test_shape_ratio_constant_under_refinement(self):
        ratios = [validate(generate_cartesian((0, 1, 0, 1), n, n)).min_shape_ratio
                  for n in (4, 8, 16)]
        assert np.allclose(ratios, ratios[0], rtol=1e-12)

    def test_regularity_bounded_below(self):
        # refinement sequence of punctured meshes keeps regularity positive
        regs = []
        for n in (10, 20, 40):
            mesh = generate_punctured((-2, 2, -2, 2), n, n, (0.0, 0.0), 0.55, 32)
            regs.append(validate(mesh).regularity)
        assert min(regs) > 1e-4

    def test_zero_measure_face_flagged(self):
        mesh = generate_cartesian((0, 1, 0, 1), 2, 2)
        bad = dataclasses.replace(mesh.faces[0], measure=0.0)
        faces = [bad] + mesh.faces[1:]
        broken = PolytopalMesh(vertices=mesh.vertices, faces=faces,
                               cells=mesh.cells,
                               boundary_face_ids=mesh.boundary_face_ids,
                               interior_face_ids=mesh.interior_face_ids,
                               h=mesh.h)
        rep = validate(broken)
        assert not rep.ok
        assert any("nonpositive measure" in v for v in rep.violations)


def test_face_used_three_times_rejected():
    verts = [[0, 0], [1, 0], [1, 1], [0, 1], [2, 0], [-1, 0]]
    # the third cell traverses edge (1, 2) a second time in one direction
    with pytest.raises(MeshError):
        mesh_from_cells(verts, [[0, 1, 2, 3], [1, 4, 2], [5, 1, 2]])
