"""2D polytopal meshes: generation, import, validation.

A mesh is a collection of simple polygonal cells glued along straight
faces (segments).  Cells store counter-clockwise vertex loops; faces are
derived from the cell loops and carry the geometric data every local
operator needs (measure, diameter, midpoint, outward normal as seen from
the owner cell).  Meshes are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: neighbor id of a face that lies on the domain boundary
BOUNDARY = -1

#: uniform bound on the number of faces of a single cell
MAX_FACES_PER_CELL = 12


class MeshError(Exception):
    """Raised when a mesh cannot be built or is geometrically invalid."""


class MeshFormatError(MeshError):
    """Raised on malformed ASCII mesh files (carries a line number)."""


@dataclass(frozen=True)
class MeshFace:
    vertex_ids: tuple
    owner_cell: int
    neighbor_cell: int          # BOUNDARY for boundary faces
    measure: float              # segment length
    diameter: float             # == measure in 2D
    midpoint: np.ndarray
    normal_from_owner: np.ndarray
    tangent: np.ndarray         # unit vector along the face

    @property
    def is_boundary(self) -> bool:
        return self.neighbor_cell == BOUNDARY

    def normal_from(self, cell_id: int) -> np.ndarray:
        """Outward unit normal as seen from ``cell_id``."""
        if cell_id == self.owner_cell:
            return self.normal_from_owner
        if cell_id == self.neighbor_cell:
            return -self.normal_from_owner
        raise MeshError(f"cell {cell_id} is not incident to this face")


@dataclass(frozen=True)
class MeshCell:
    vertex_ids: tuple           # counter-clockwise loop
    face_ids: tuple             # aligned with the vertex loop edges
    measure: float
    diameter: float
    centroid: np.ndarray


@dataclass(frozen=True)
class PolytopalMesh:
    vertices: np.ndarray        # (n_vertices, 2)
    faces: list
    cells: list
    boundary_face_ids: np.ndarray
    interior_face_ids: np.ndarray
    h: float                    # max cell diameter

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def cell_vertices(self, cell_id: int) -> np.ndarray:
        """Coordinates of a cell's vertex loop, shape (n, 2)."""
        return self.vertices[list(self.cells[cell_id].vertex_ids)]

    def face_vertices(self, face_id: int) -> np.ndarray:
        return self.vertices[list(self.faces[face_id].vertex_ids)]

    def total_measure(self) -> float:
        return float(sum(c.measure for c in self.cells))


def _polygon_area_centroid(coords: np.ndarray):
    """Shoelace area and centroid of a CCW simple polygon."""
    x, y = coords[:, 0], coords[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if area == 0.0:
        raise MeshError("degenerate polygon with zero area")
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return float(area), np.array([cx, cy])


def _polygon_diameter(coords: np.ndarray) -> float:
    diff = coords[:, None, :] - coords[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def mesh_from_cells(vertices, cell_vertex_lists) -> PolytopalMesh:
    """Build a mesh from vertex coordinates and CCW cell loops.

    Faces are derived by matching the edges of the cell loops: an edge
    shared by two loops (traversed in opposite directions) becomes an
    interior face, an unshared edge a boundary face.  Raises MeshError on
    clockwise cells, inconsistently oriented shared edges, or edges used
    by more than two cells.
    """
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshError("vertices must be an (n, 2) array")
    if not np.isfinite(vertices).all():
        raise MeshError("non-finite vertex coordinates")

    cells = []
    edge_use = {}               # (a, b) directed -> cell id
    cell_edges = []
    for ci, loop in enumerate(cell_vertex_lists):
        loop = [int(v) for v in loop]
        if len(loop) < 3:
            raise MeshError(f"cell {ci} has fewer than 3 vertices")
        if len(set(loop)) != len(loop):
            raise MeshError(f"cell {ci} repeats a vertex")
        coords = vertices[loop]
        area, centroid = _polygon_area_centroid(coords)
        if area < 0:
            raise MeshError(f"cell {ci} is not counter-clockwise")
        edges = []
        for i in range(len(loop)):
            a, b = loop[i], loop[(i + 1) % len(loop)]
            if (a, b) in edge_use:
                raise MeshError(
                    f"face ({a}, {b}) traversed twice in the same direction "
                    f"(cells {edge_use[(a, b)]} and {ci}): inconsistent orientation")
            edge_use[(a, b)] = ci
            edges.append((a, b))
        cell_edges.append(edges)
        cells.append(MeshCell(
            vertex_ids=tuple(loop),
            face_ids=(),        # filled below
            measure=area,
            diameter=_polygon_diameter(coords),
            centroid=centroid,
        ))

    faces = []
    face_index = {}             # undirected key -> face id
    cell_face_ids = [[] for _ in cells]
    for ci, edges in enumerate(cell_edges):
        for (a, b) in edges:
            key = (a, b) if a < b else (b, a)
            if key in face_index:
                fid = face_index[key]
                f = faces[fid]
                if f.neighbor_cell != BOUNDARY:
                    raise MeshError(f"face {key} incident to more than two cells")
                faces[fid] = MeshFace(
                    vertex_ids=f.vertex_ids, owner_cell=f.owner_cell,
                    neighbor_cell=ci, measure=f.measure, diameter=f.diameter,
                    midpoint=f.midpoint, normal_from_owner=f.normal_from_owner,
                    tangent=f.tangent)
            else:
                pa, pb = vertices[a], vertices[b]
                t = pb - pa
                length = float(np.hypot(*t))
                if length <= 0:
                    raise MeshError(f"face ({a}, {b}) has zero length")
                t = t / length
                # outward normal of a CCW-traversed edge
                n = np.array([t[1], -t[0]])
                fid = len(faces)
                face_index[key] = fid
                faces.append(MeshFace(
                    vertex_ids=(a, b), owner_cell=ci, neighbor_cell=BOUNDARY,
                    measure=length, diameter=length,
                    midpoint=0.5 * (pa + pb), normal_from_owner=n, tangent=t))
            cell_face_ids[ci].append(face_index[key])

    cells = [
        MeshCell(vertex_ids=c.vertex_ids, face_ids=tuple(cell_face_ids[i]),
                 measure=c.measure, diameter=c.diameter, centroid=c.centroid)
        for i, c in enumerate(cells)
    ]

    boundary = np.array([i for i, f in enumerate(faces) if f.is_boundary], dtype=int)
    interior = np.array([i for i, f in enumerate(faces) if not f.is_boundary], dtype=int)
    mesh = PolytopalMesh(
        vertices=vertices, faces=faces, cells=cells,
        boundary_face_ids=boundary, interior_face_ids=interior,
        h=max(c.diameter for c in cells))

    # cheap construction-time sanity: per-cell closure identity
    for ci, cell in enumerate(mesh.cells):
        s = np.zeros(2)
        perim = 0.0
        for fid in cell.face_ids:
            f = mesh.faces[fid]
            s += f.measure * f.normal_from(ci)
            perim += f.measure
        if np.abs(s).max() > 1e-12 * perim:
            raise MeshError(f"cell {ci} violates the face-normal closure identity")
    return mesh


def generate_cartesian(bounds, nx: int, ny: int) -> PolytopalMesh:
    """Uniform nx-by-ny quadrilateral tiling of a rectangle.

    ``bounds`` is (xmin, xmax, ymin, ymax).
    """
    xmin, xmax, ymin, ymax = (float(b) for b in bounds)
    if not (xmax > xmin and ymax > ymin):
        raise MeshError("degenerate bounds")
    if nx < 1 or ny < 1:
        raise MeshError("nx and ny must be >= 1")
    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    loops = []
    for i in range(nx):
        for j in range(ny):
            loops.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)])
    return mesh_from_cells(vertices, loops)


def hole_polygon(center, radius: float, segments: int) -> np.ndarray:
    """Regular polygon inscribed in the hole circle, CCW.

    Vertices sit at angles 2*pi*j/segments; the lower half mirrors the
    upper half bitwise, so the polygon is exactly symmetric under
    y -> -y (the interference test relies on a mirror-symmetric mesh).
    """
    pts = np.empty((segments, 2))
    for j in range(segments // 2 + 1):
        th = 2.0 * np.pi * j / segments
        pts[j] = (radius * np.cos(th), radius * np.sin(th))
    for j in range(segments // 2 + 1, segments):
        pts[j] = (pts[segments - j, 0], -pts[segments - j, 1])
    return pts + np.asarray(center, dtype=float)


class _VertexPool:
    """Deduplicates nearly-identical coordinates (snap-to-first semantics)."""

    def __init__(self, tol: float):
        self.tol = tol
        self.coords = []
        self._buckets = {}

    def _key(self, p):
        return (round(p[0] / self.tol), round(p[1] / self.tol))

    def insert(self, p) -> int:
        kx, ky = self._key(p)
        for dx in (0, -1, 1):
            for dy in (0, -1, 1):
                vid = self._buckets.get((kx + dx, ky + dy))
                if vid is not None:
                    q = self.coords[vid]
                    if abs(q[0] - p[0]) <= self.tol and abs(q[1] - p[1]) <= self.tol:
                        return vid
        vid = len(self.coords)
        self.coords.append((float(p[0]), float(p[1])))
        self._buckets[(kx, ky)] = vid
        return vid


def generate_punctured(bounds, nx: int, ny: int, hole_center, hole_radius: float,
                       hole_segments: int = 64) -> PolytopalMesh:
    """Cartesian mesh with a polygonal hole cut out.

    Cells fully inside the hole polygon are removed; cells crossing its
    boundary are replaced by the exact boolean difference (computed with
    shapely).  The hole chain becomes boundary faces automatically, since
    those edges end up with a single incident cell.
    """
    from shapely.geometry import Polygon, box
    from shapely.geometry.polygon import orient

    xmin, xmax, ymin, ymax = (float(b) for b in bounds)
    if not (xmax > xmin and ymax > ymin):
        raise MeshError("degenerate bounds")
    if hole_segments < 8:
        raise MeshError("hole_segments must be >= 8")
    cx, cy = float(hole_center[0]), float(hole_center[1])
    if not (xmin < cx - hole_radius and cx + hole_radius < xmax
            and ymin < cy - hole_radius and cy + hole_radius < ymax):
        raise MeshError("hole must lie strictly inside the bounds")

    hole = Polygon(hole_polygon((cx, cy), hole_radius, hole_segments))
    hx = (xmax - xmin) / nx
    hy = (ymax - ymin) / ny
    cell_area = hx * hy
    hole_bbox = hole.bounds
    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)

    pool = _VertexPool(tol=1e-9 * min(hx, hy))
    loops = []
    n_clipped = n_removed = 0
    for i in range(nx):
        for j in range(ny):
            x0, x1 = xs[i], xs[i + 1]
            y0, y1 = ys[j], ys[j + 1]
            square = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
            overlaps = not (x1 < hole_bbox[0] or x0 > hole_bbox[2]
                            or y1 < hole_bbox[1] or y0 > hole_bbox[3])
            if not overlaps:
                loops.append([pool.insert(p) for p in square])
                continue
            diff = box(x0, y0, x1, y1).difference(hole)
            if diff.is_empty:
                n_removed += 1
                continue
            pieces = list(diff.geoms) if diff.geom_type == "MultiPolygon" else [diff]
            for piece in pieces:
                if piece.interiors:
                    raise MeshError(
                        f"hole entirely inside cell ({i}, {j}): refine the grid")
                if piece.area < 1e-12 * cell_area:
                    raise MeshError(
                        f"clipping cell ({i}, {j}) produced a degenerate sliver "
                        f"(measure {piece.area:.3e} < 1e-12 * cell area)")
                if abs(piece.area - cell_area) <= 1e-12 * cell_area:
                    loops.append([pool.insert(p) for p in square])
                    continue
                ring = list(orient(piece, sign=1.0).exterior.coords)[:-1]
                loop = [pool.insert(p) for p in ring]
                # snapping can collapse hairline edges into repeated ids
                loop = [v for pos, v in enumerate(loop) if v != loop[pos - 1]]
                if len(loop) < 3:
                    raise MeshError(
                        f"clipping cell ({i}, {j}) produced a degenerate sliver")
                if len(loop) > MAX_FACES_PER_CELL:
                    raise MeshError(
                        f"clipped cell ({i}, {j}) has {len(loop)} faces "
                        f"(> {MAX_FACES_PER_CELL}); reduce hole_segments")
                loops.append(loop)
                n_clipped += 1

    mesh = mesh_from_cells(np.array(pool.coords), loops)

    # conformity guard: every boundary face must be on the outer rectangle
    # or on the hole chain (a vertex-snapping failure would violate this)
    apothem = hole_radius * np.cos(np.pi / hole_segments)
    tol = 1e-9 * min(hx, hy)
    for fid in mesh.boundary_face_ids:
        m = mesh.faces[fid].midpoint
        on_rect = (abs(m[0] - xmin) < tol or abs(m[0] - xmax) < tol
                   or abs(m[1] - ymin) < tol or abs(m[1] - ymax) < tol)
        r = np.hypot(m[0] - cx, m[1] - cy)
        on_hole = apothem - tol <= r <= hole_radius + tol
        if not (on_rect or on_hole):
            raise MeshError(f"boundary face {fid} at {m} is neither on the outer "
                            "rectangle nor on the hole chain")
    return mesh


def import_mesh(path) -> PolytopalMesh:
    """Read the ASCII polygonal format.

    Line 1: ``dim 2``; then ``vertices N`` followed by N ``x y`` lines;
    then ``cells M`` followed by M lines ``n v0 v1 ... v{n-1}`` with the
    vertex loop counter-clockwise.  Blank lines and ``#`` comments are
    skipped.  Errors carry the offending line number.
    """
    with open(path) as fh:
        raw = fh.readlines()
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(raw)
             if ln.strip() and not ln.strip().startswith("#")]
    pos = 0

    def take(expect=None):
        nonlocal pos
        if pos >= len(lines):
            raise MeshFormatError(f"line {len(raw) + 1}: unexpected end of file")
        ln, text = lines[pos]
        pos += 1
        if expect is not None and not text.startswith(expect):
            raise MeshFormatError(f"line {ln}: expected '{expect} ...', got '{text}'")
        return ln, text

    ln, text = take("dim")
    if text.split() != ["dim", "2"]:
        raise MeshFormatError(f"line {ln}: only 'dim 2' is supported")
    ln, text = take("vertices")
    try:
        n_vert = int(text.split()[1])
    except (IndexError, ValueError):
        raise MeshFormatError(f"line {ln}: malformed vertex count") from None
    vertices = np.empty((n_vert, 2))
    for i in range(n_vert):
        ln, text = take()
        parts = text.split()
        try:
            vertices[i] = [float(parts[0]), float(parts[1])]
        except (IndexError, ValueError):
            raise MeshFormatError(f"line {ln}: malformed vertex coordinates") from None
    ln, text = take("cells")
    try:
        n_cell = int(text.split()[1])
    except (IndexError, ValueError):
        raise MeshFormatError(f"line {ln}: malformed cell count") from None
    loops = []
    for i in range(n_cell):
        ln, text = take()
        parts = text.split()
        try:
            n = int(parts[0])
            loop = [int(p) for p in parts[1:1 + n]]
        except (IndexError, ValueError):
            raise MeshFormatError(f"line {ln}: malformed cell record") from None
        if len(loop) != n:
            raise MeshFormatError(f"line {ln}: cell lists {len(loop)} of {n} vertices")
        if any(v < 0 or v >= n_vert for v in loop):
            raise MeshFormatError(f"line {ln}: vertex id out of range")
        loops.append(loop)
    try:
        return mesh_from_cells(vertices, loops)
    except MeshError as exc:
        raise MeshError(f"{path}: {exc}") from exc


def export_mesh(mesh: PolytopalMesh, path) -> None:
    """Write the ASCII format read by :func:`import_mesh`."""
    with open(path, "w") as fh:
        fh.write("dim 2\n")
        fh.write(f"vertices {len(mesh.vertices)}\n")
        for v in mesh.vertices:
            fh.write(f"{v[0]:.17g} {v[1]:.17g}\n")
        fh.write(f"cells {mesh.n_cells}\n")
        for c in mesh.cells:
            ids = " ".join(str(v) for v in c.vertex_ids)
            fh.write(f"{len(c.vertex_ids)} {ids}\n")


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    min_shape_ratio: float = np.inf   # min over fan triangles of r_S / h_S
    regularity: float = np.inf        # min of (r_S/h_S, h_S/h_T) over the submesh

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        head = (f"{'OK' if self.ok else 'INVALID'}: "
                f"min shape ratio {self.min_shape_ratio:.4f}, "
                f"regularity {self.regularity:.4f}")
        return "\n".join([head] + [f"  - {v}" for v in self.violations])


def validate(mesh: PolytopalMesh, rho: float = None) -> ValidationReport:
    """Check the mesh invariants; never raises, returns a report.

    With ``rho`` given, additionally requires h_F >= rho^2 * h_T for every
    face of every cell.  The shape ratio is measured on the centroid-fan
    subdivision of each cell.
    """
    rep = ValidationReport()
    incidence = {}
    for ci, cell in enumerate(mesh.cells):
        if cell.measure <= 0:
            rep.violations.append(f"cell {ci}: nonpositive measure")
        if len(cell.face_ids) < 3:
            rep.violations.append(f"cell {ci}: fewer than d+1 faces")
        if len(cell.face_ids) > MAX_FACES_PER_CELL:
            rep.violations.append(
                f"cell {ci}: {len(cell.face_ids)} faces exceeds {MAX_FACES_PER_CELL}")
        s = np.zeros(2)
        perim = 0.0
        for fid in cell.face_ids:
            incidence.setdefault(fid, []).append(ci)
            f = mesh.faces[fid]
            try:
                s += f.measure * f.normal_from(ci)
            except MeshError:
                rep.violations.append(f"face {fid}: incidence inconsistent with cell {ci}")
                continue
            perim += f.measure
            if f.diameter > cell.diameter * (1 + 1e-12):
                rep.violations.append(f"face {fid}: h_F > h_T of cell {ci}")
            if rho is not None and f.diameter < rho ** 2 * cell.diameter * (1 - 1e-12):
                rep.violations.append(
                    f"face {fid}: h_F < rho^2 h_T for cell {ci} (rho={rho})")
        if perim > 0 and np.abs(s).max() > 1e-12 * perim:
            rep.violations.append(f"cell {ci}: closure identity violated "
                                  f"(|sum| = {np.abs(s).max():.3e})")
        # fan-subdivision shape quality
        coords = mesh.cell_vertices(ci)
        nv = len(coords)
        for i in range(nv):
            tri = np.array([cell.centroid, coords[i], coords[(i + 1) % nv]])
            e = np.array([np.linalg.norm(tri[1] - tri[0]),
                          np.linalg.norm(tri[2] - tri[1]),
                          np.linalg.norm(tri[0] - tri[2])])
            a2 = (tri[1] - tri[0])[0] * (tri[2] - tri[0])[1] \
                - (tri[1] - tri[0])[1] * (tri[2] - tri[0])[0]
            h_s = e.max()
            if a2 <= 0:
                rep.violations.append(f"cell {ci}: fan triangle {i} is inverted")
                continue
            r_s = a2 / e.sum()    # inradius = 2*area / perimeter
            rep.min_shape_ratio = min(rep.min_shape_ratio, r_s / h_s)
            rep.regularity = min(rep.regularity, r_s / h_s, h_s / cell.diameter)

    for fid, f in enumerate(mesh.faces):
        n = f.normal_from_owner
        if abs(np.hypot(n[0], n[1]) - 1.0) > 1e-12:
            rep.violations.append(f"face {fid}: normal is not unit")
        if f.measure <= 0:
            rep.violations.append(f"face {fid}: nonpositive measure")
        cells = incidence.get(fid, [])
        want = 1 if f.is_boundary else 2
        if len(cells) != want:
            rep.violations.append(
                f"face {fid}: {len(cells)} incident cells, expected {want}")
    return rep
