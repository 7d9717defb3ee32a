"""Global DOF numbering, assembly, discrete norms, static condensation.

DOF ordering: all cell blocks first (cell polynomials), then one block
per interior face.  Boundary faces are eliminated strongly (u_F = 0), so
they never receive a global index.  The stiffness K is complex Hermitian
exactly (upper triangle assembled, then mirrored); the mass M lives on
the cell blocks only and is real symmetric positive semidefinite.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .functional import space_dim
from .local_ops import CellContext, FieldSpec, local_form


@dataclass(frozen=True)
class GlobalDofMap:
    mesh: object
    k: int
    cell_offsets: np.ndarray
    face_offsets: np.ndarray      # -1 for eliminated (boundary) faces
    n_cell_dofs: int
    n_dof: int

    @classmethod
    def create(cls, mesh, k: int) -> "GlobalDofMap":
        dk = space_dim(k)
        df = k + 1
        cell_offsets = np.arange(mesh.n_cells) * dk
        n_cell = mesh.n_cells * dk
        face_offsets = np.full(mesh.n_faces, -1, dtype=int)
        face_offsets[mesh.interior_face_ids] = (
            n_cell + np.arange(len(mesh.interior_face_ids)) * df)
        return cls(mesh, k, cell_offsets, face_offsets, n_cell,
                   n_cell + len(mesh.interior_face_ids) * df)

    @property
    def cell_block_dim(self) -> int:
        return space_dim(self.k)

    @property
    def face_block_dim(self) -> int:
        return self.k + 1

    def cell_dofs(self, cell_id: int) -> np.ndarray:
        return self.cell_offsets[cell_id] + np.arange(self.cell_block_dim)

    def face_dofs(self, face_id: int):
        """Global indices of a face block, or None if eliminated."""
        off = self.face_offsets[face_id]
        if off < 0:
            return None
        return off + np.arange(self.face_block_dim)

    def local_to_global(self, cell_id: int) -> np.ndarray:
        """Global index per local DOF; -1 marks eliminated boundary faces."""
        parts = [self.cell_dofs(cell_id)]
        for fid in self.mesh.cells[cell_id].face_ids:
            dofs = self.face_dofs(fid)
            if dofs is None:
                parts.append(np.full(self.face_block_dim, -1, dtype=int))
            else:
                parts.append(dofs)
        return np.concatenate(parts)


@dataclass
class HybridField:
    """Coefficient vector over the hybrid DOF space."""

    dofmap: GlobalDofMap
    values: np.ndarray

    @classmethod
    def zeros(cls, dofmap: GlobalDofMap) -> "HybridField":
        return cls(dofmap, np.zeros(dofmap.n_dof, dtype=complex))

    @classmethod
    def interpolate(cls, dofmap: GlobalDofMap, u, quad_extra: int = 0) -> "HybridField":
        """Componentwise L2 projection of a closure onto the DOF space."""
        mesh, k = dofmap.mesh, dofmap.k
        values = np.zeros(dofmap.n_dof, dtype=complex)
        for ci in range(mesh.n_cells):
            ctx = CellContext(mesh, ci, k, quad_extra=quad_extra)
            values[dofmap.cell_dofs(ci)] = ctx.proj_k.project(u)
        from .functional import l2_project_face
        order = 2 * k + 3 + quad_extra
        for fid in mesh.interior_face_ids:
            p0, p1 = mesh.face_vertices(fid)
            values[dofmap.face_dofs(fid)] = l2_project_face(u, p0, p1, k, order)
        return cls(dofmap, values)

    def cell_coeffs(self, cell_id: int) -> np.ndarray:
        return self.values[self.dofmap.cell_dofs(cell_id)]

    def face_coeffs(self, face_id: int) -> np.ndarray:
        dofs = self.dofmap.face_dofs(face_id)
        if dofs is None:
            return np.zeros(self.dofmap.face_block_dim, dtype=complex)
        return self.values[dofs]

    def local_vector(self, cell_id: int) -> np.ndarray:
        """Local DOF vector for one cell, eliminated faces read as zero."""
        parts = [self.cell_coeffs(cell_id)]
        for fid in self.dofmap.mesh.cells[cell_id].face_ids:
            parts.append(self.face_coeffs(fid))
        return np.concatenate(parts)

    def __add__(self, other):
        return HybridField(self.dofmap, self.values + other.values)

    def __sub__(self, other):
        return HybridField(self.dofmap, self.values - other.values)


@dataclass
class HermitianSystem:
    """Assembled global pencil: Hermitian stiffness K and cell-block mass M."""

    K: sp.csr_matrix
    M: sp.csr_matrix
    dofmap: GlobalDofMap
    fieldspec: FieldSpec
    metadata: dict = field(default_factory=dict)

    @property
    def n_dof(self) -> int:
        return self.dofmap.n_dof

    def m_norm(self, v: np.ndarray) -> float:
        """L2 norm of the cell part, sqrt(v^H M v)."""
        return float(np.sqrt(max(np.real(np.vdot(v, self.M @ v)), 0.0)))


def _hermitize(K: sp.csr_matrix) -> sp.csr_matrix:
    """Mirror the upper triangle so K = K^H holds exactly."""
    strict = sp.triu(K, k=1).tocsr()
    diag = sp.diags(np.real(K.diagonal()).astype(complex), format="csr")
    return (strict + strict.conj().T + diag).tocsr()


def assemble(mesh, k: int, fieldspec: FieldSpec = None, quad_extra: int = 0,
             cheap_gradient: bool = False) -> HermitianSystem:
    """Assemble the global Hermitian form and the cell-block mass matrix."""
    fieldspec = FieldSpec() if fieldspec is None else fieldspec
    dofmap = GlobalDofMap.create(mesh, k)
    ki, kj, kv = [], [], []
    mi, mj, mv = [], [], []
    for ci in range(mesh.n_cells):
        ctx = CellContext(mesh, ci, k, fieldspec=fieldspec, quad_extra=quad_extra)
        ops = local_form(ctx, cheap_gradient=cheap_gradient)
        gidx = dofmap.local_to_global(ci)
        keep = gidx >= 0
        gi = gidx[keep]
        A = ops.Aloc[np.ix_(keep, keep)]
        ki.append(np.repeat(gi, gi.size))
        kj.append(np.tile(gi, gi.size))
        kv.append(A.ravel())
        cdofs = dofmap.cell_dofs(ci)
        mi.append(np.repeat(cdofs, cdofs.size))
        mj.append(np.tile(cdofs, cdofs.size))
        mv.append(ops.Mloc.ravel())
    n = dofmap.n_dof
    K = sp.coo_matrix((np.concatenate(kv), (np.concatenate(ki), np.concatenate(kj))),
                      shape=(n, n), dtype=complex).tocsr()
    K = _hermitize(K)
    M = sp.coo_matrix((np.concatenate(mv), (np.concatenate(mi), np.concatenate(mj))),
                      shape=(n, n)).tocsr()
    meta = {"k": k, "n_cells": mesh.n_cells, "h": mesh.h,
            "cheap_gradient": cheap_gradient,
            "fieldspec_hash": hash((fieldspec.a_inf, fieldspec.v_inf,
                                    fieldspec.A is None, fieldspec.V is None))}
    return HermitianSystem(K=K, M=M, dofmap=dofmap, fieldspec=fieldspec,
                           metadata=meta)


def assemble_rhs(dofmap: GlobalDofMap, f, quad_extra: int = 0) -> np.ndarray:
    """Load vector of the source functional (f, v_T): face blocks stay zero."""
    mesh, k = dofmap.mesh, dofmap.k
    b = np.zeros(dofmap.n_dof, dtype=complex)
    for ci in range(mesh.n_cells):
        ctx = CellContext(mesh, ci, k, quad_extra=quad_extra)
        fvals = np.asarray(f(ctx.rule.points))
        b[dofmap.cell_dofs(ci)] = ctx.Nk.T @ (ctx.rule.weights * fvals)
    return b


def norm_1h(field: HybridField) -> float:
    """Discrete energy norm: cell gradients plus scaled face jumps.

    Boundary faces contribute h_F^{-1} |u_T|_F^2 (eliminated u_F = 0).
    """
    mesh, k = field.dofmap.mesh, field.dofmap.k
    total = 0.0
    for ci in range(mesh.n_cells):
        ctx = CellContext(mesh, ci, k)
        uT = field.cell_coeffs(ci)
        total += float(np.real(np.conj(uT) @ (ctx.stiff_k @ uT)))
        for fd in ctx.faces:
            jump = field.face_coeffs(fd.face_id) - fd.trace_k @ uT
            total += float(np.real(np.conj(jump) @ (fd.mass @ jump))) / fd.h
    return float(np.sqrt(total))


def l2_norm_cells(field: HybridField) -> float:
    """L2 norm of the cell unknowns (face components carry no mass)."""
    mesh, k = field.dofmap.mesh, field.dofmap.k
    total = 0.0
    for ci in range(mesh.n_cells):
        ctx = CellContext(mesh, ci, k)
        uT = field.cell_coeffs(ci)
        total += float(np.real(np.conj(uT) @ (ctx.mass_k @ uT)))
    return float(np.sqrt(total))


class CondensationError(Exception):
    pass


@dataclass
class CondensedSystem:
    """Face-only Schur system with exact cell recovery."""

    K_ff: sp.csr_matrix
    rhs_f: np.ndarray
    dofmap: GlobalDofMap
    _cells: list

    def expand(self, u_f: np.ndarray) -> np.ndarray:
        """Recover the full hybrid vector from the face solution."""
        n = self.dofmap.n_dof
        nc = self.dofmap.n_cell_dofs
        full = np.zeros(n, dtype=complex)
        full[nc:] = u_f
        for cdofs, fcols, lu, bT, KTF in self._cells:
            rhs = bT - (KTF @ u_f[fcols] if fcols.size else 0.0)
            full[cdofs] = lu(rhs)
        return full


def static_condense(system: HermitianSystem, rhs: np.ndarray) -> CondensedSystem:
    """Eliminate cell DOFs cell by cell (their blocks are block-diagonal).

    Raises CondensationError naming the cell when a cell block is
    singular, which signals indefiniteness at coarse mesh size.
    """
    import scipy.linalg as la

    dofmap = system.dofmap
    mesh = dofmap.mesh
    nc = dofmap.n_cell_dofs
    n_f = dofmap.n_dof - nc
    K = system.K
    rhs_f = np.array(rhs[nc:], dtype=complex)
    cells = []
    si, sj, sv = [], [], []
    for ci in range(mesh.n_cells):
        cdofs = dofmap.cell_dofs(ci)
        fglob = [dofmap.face_dofs(fid) for fid in mesh.cells[ci].face_ids]
        fglob = [g for g in fglob if g is not None]
        fcols = (np.concatenate(fglob) - nc) if fglob else np.empty(0, dtype=int)
        KTT = K[cdofs][:, cdofs].toarray()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")    # getrf warns instead of raising
            lu = la.lu_factor(KTT)
        if not np.all(np.isfinite(lu[0])) or np.abs(np.diag(lu[0])).min() == 0.0:
            raise CondensationError(f"singular cell block in cell {ci}")
        solveT = lambda b, lu=lu: la.lu_solve(lu, b)
        bT = np.array(rhs[cdofs], dtype=complex)
        if fcols.size:
            KTF = K[cdofs][:, nc + fcols].toarray()
            corr = KTF.conj().T @ solveT(KTF)    # K_FT = K_TF^H (K Hermitian)
            si.append(np.repeat(fcols, fcols.size))
            sj.append(np.tile(fcols, fcols.size))
            sv.append(corr.ravel())
            rhs_f[fcols] -= KTF.conj().T @ solveT(bT)
        else:
            KTF = np.zeros((cdofs.size, 0), dtype=complex)
        cells.append((cdofs, fcols, solveT, bT, KTF))
    K_ff = K[nc:, nc:].tocsr()
    if si:
        K_ff = (K_ff - sp.coo_matrix(
            (np.concatenate(sv), (np.concatenate(si), np.concatenate(sj))),
            shape=(n_f, n_f)).tocsr()).tocsr()
    return CondensedSystem(K_ff=K_ff, rhs_f=rhs_f, dofmap=dofmap, _cells=cells)


def dump_system(system: HermitianSystem, path) -> None:
    """Coordinate-format ASCII dump: one 'i j re im' line per K entry."""
    coo = system.K.tocoo()
    with open(path, "w") as fh:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v.real:.17g} {v.imag:.17g}\n")
