"""Legacy ASCII VTK output for polygonal meshes.

Writes DATASET UNSTRUCTURED_GRID files with VTK_POLYGON cells, scalar
CELL_DATA (one value per cell, e.g. the density at the cell centroid)
and optional POINT_DATA.  Floats are written with 17 significant digits
so identical fields produce identical files.
"""

from __future__ import annotations

import numpy as np


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_vtk(mesh, cell_data: dict, path, point_data: dict = None,
              title: str = "maghho output") -> None:
    """Write mesh + per-cell (and optional per-point) scalar fields."""
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(mesh.vertices)} double\n")
        for v in mesh.vertices:
            fh.write(f"{_fmt(v[0])} {_fmt(v[1])} 0\n")
        size = sum(len(c.vertex_ids) + 1 for c in mesh.cells)
        fh.write(f"CELLS {mesh.n_cells} {size}\n")
        for c in mesh.cells:
            fh.write(" ".join([str(len(c.vertex_ids))]
                              + [str(v) for v in c.vertex_ids]) + "\n")
        fh.write(f"CELL_TYPES {mesh.n_cells}\n")
        fh.write("7\n" * mesh.n_cells)          # VTK_POLYGON
        if cell_data:
            fh.write(f"CELL_DATA {mesh.n_cells}\n")
            for name, values in cell_data.items():
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for x in np.asarray(values, dtype=float):
                    fh.write(_fmt(x) + "\n")
        if point_data:
            fh.write(f"POINT_DATA {len(mesh.vertices)}\n")
            for name, values in point_data.items():
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for x in np.asarray(values, dtype=float):
                    fh.write(_fmt(x) + "\n")


def read_vtk_cell_data(path) -> dict:
    """Minimal reader for round-trip checks: returns the scalar fields."""
    out = {}
    with open(path) as fh:
        lines = fh.read().splitlines()
    i = 0
    section = None
    count = 0
    while i < len(lines):
        parts = lines[i].split()
        if parts and parts[0] in ("CELL_DATA", "POINT_DATA"):
            section = parts[0]
            count = int(parts[1])
        elif parts and parts[0] == "SCALARS" and section is not None:
            name = parts[1]
            i += 1                              # skip LOOKUP_TABLE
            vals = []
            while len(vals) < count:
                i += 1
                vals.extend(float(x) for x in lines[i].split())
            out[f"{section}:{name}"] = np.array(vals)
        i += 1
    return out
